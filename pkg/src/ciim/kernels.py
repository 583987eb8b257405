"""Hot numeric kernels: batch index evaluation, GRU forward/backward, tabular
Q-learning inner loop.

Every function here is numba-compatible numpy and is compiled with @njit
unless CIIM_JIT=0, in which case the same code runs under the interpreter.
All randomness is injected as precomputed arrays so both paths are
deterministic and agree bitwise, except where exp/tanh are involved: the
compiled and interpreted libm implementations can differ in the last ulp.
"""

import numpy as np

from .accel import njit


@njit(cache=True)
def ciim_batch(a, alpha, threat, vuln, expo, resil, pert, values, sens):
    """Evaluate value = a*T*V*E/R + alpha*P and sensitivity = a*T*V*E/R^2
    for n states at once. Caller guarantees resil > 0 everywhere."""
    n = threat.shape[0]
    for i in range(n):
        num = a * threat[i] * vuln[i] * expo[i]
        values[i] = num / resil[i] + alpha * pert[i]
        sens[i] = num / (resil[i] * resil[i])


@njit(cache=True)
def gru_cell_step(x, h_prev, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh):
    """One GRU step: returns (z, r, hc, h_new).

    z = sigma(Wz x + Uz h + bz), r = sigma(Wr x + Ur h + br),
    hc = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*hc.
    """
    z = 1.0 / (1.0 + np.exp(-(np.dot(Wz, x) + np.dot(Uz, h_prev) + bz)))
    r = 1.0 / (1.0 + np.exp(-(np.dot(Wr, x) + np.dot(Ur, h_prev) + br)))
    hc = np.tanh(np.dot(Wh, x) + np.dot(Uh, r * h_prev) + bh)
    h_new = (1.0 - z) * h_prev + z * hc
    return z, r, hc, h_new


@njit(cache=True)
def gru_forward(X, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh, Wo, bo):
    """Run the cell over a (L, C) window.

    Returns (Hs, Z, R, Hc, preds) where Hs[t+1] is the hidden state after
    consuming X[t] (Hs[0] = 0) and preds[t] = Wo Hs[t+1] + bo is the
    one-step-ahead prediction made after seeing X[t].
    """
    L = X.shape[0]
    C = X.shape[1]
    H = bz.shape[0]
    Hs = np.zeros((L + 1, H))
    Z = np.zeros((L, H))
    R = np.zeros((L, H))
    Hc = np.zeros((L, H))
    preds = np.zeros((L, C))
    h = np.zeros(H)
    for t in range(L):
        z, r, hc, h = gru_cell_step(X[t], h, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh)
        Z[t] = z
        R[t] = r
        Hc[t] = hc
        Hs[t + 1] = h
        preds[t] = np.dot(Wo, h) + bo
    return Hs, Z, R, Hc, preds


@njit(cache=True)
def gru_backward(X, Hs, Z, R, Hc, preds, Wz, Uz, Wr, Ur, Wh, Uh, Wo):
    """Backpropagation through time for the one-step-ahead MSE.

    Loss = mean over pairs (t, c), t = 0..L-2, of (preds[t,c] - X[t+1,c])^2.
    Returns the gradient of the loss w.r.t. every parameter plus the loss.
    """
    L = X.shape[0]
    C = X.shape[1]
    H = Hs.shape[1]
    n = float((L - 1) * C)

    dWz = np.zeros_like(Wz)
    dUz = np.zeros_like(Uz)
    dbz = np.zeros(H)
    dWr = np.zeros_like(Wr)
    dUr = np.zeros_like(Ur)
    dbr = np.zeros(H)
    dWh = np.zeros_like(Wh)
    dUh = np.zeros_like(Uh)
    dbh = np.zeros(H)
    dWo = np.zeros_like(Wo)
    dbo = np.zeros(C)

    WoT = Wo.T.copy()
    UhT = Uh.T.copy()
    UrT = Ur.T.copy()
    UzT = Uz.T.copy()

    loss = 0.0
    dh_carry = np.zeros(H)
    for t in range(L - 2, -1, -1):
        err = preds[t] - X[t + 1]
        loss += np.sum(err * err)
        dpred = (2.0 / n) * err
        h_t = Hs[t + 1]
        dWo += dpred.reshape(-1, 1) * h_t.reshape(1, -1)
        dbo += dpred
        dh = np.dot(WoT, dpred) + dh_carry

        h_prev = Hs[t]
        z = Z[t]
        r = R[t]
        hc = Hc[t]
        x = X[t]

        dz = dh * (hc - h_prev)
        dhc = dh * z
        dh_prev = dh * (1.0 - z)

        dhc_pre = dhc * (1.0 - hc * hc)
        dWh += dhc_pre.reshape(-1, 1) * x.reshape(1, -1)
        dbh += dhc_pre
        dUh += dhc_pre.reshape(-1, 1) * (r * h_prev).reshape(1, -1)
        tmp = np.dot(UhT, dhc_pre)
        dr = tmp * h_prev
        dh_prev += tmp * r

        dr_pre = dr * r * (1.0 - r)
        dWr += dr_pre.reshape(-1, 1) * x.reshape(1, -1)
        dbr += dr_pre
        dUr += dr_pre.reshape(-1, 1) * h_prev.reshape(1, -1)
        dh_prev += np.dot(UrT, dr_pre)

        dz_pre = dz * z * (1.0 - z)
        dWz += dz_pre.reshape(-1, 1) * x.reshape(1, -1)
        dbz += dz_pre
        dUz += dz_pre.reshape(-1, 1) * h_prev.reshape(1, -1)
        dh_prev += np.dot(UzT, dz_pre)

        dh_carry = dh_prev

    loss /= n
    return dWz, dUz, dbz, dWr, dUr, dbr, dWh, dUh, dbh, dWo, dbo, loss


@njit(cache=True)
def q_learn_tabular(trans, rewards, q, gamma, lr, eps, steps_per_episode,
                    u_start, u_explore, u_action):
    """Epsilon-greedy Q-learning on a deterministic finite MDP.

    trans[s, a] is the successor state, rewards[s, a] the immediate reward.
    u_start (one uniform per episode) picks the start state; u_explore and
    u_action (one each per step) drive exploration. Updates q in place.
    Greedy ties resolve to the lowest action index.
    """
    n_states, n_actions = rewards.shape
    episodes = u_start.shape[0]
    k = 0
    for ep in range(episodes):
        s = int(u_start[ep] * n_states)
        if s >= n_states:
            s = n_states - 1
        for _ in range(steps_per_episode):
            if u_explore[k] < eps:
                a = int(u_action[k] * n_actions)
                if a >= n_actions:
                    a = n_actions - 1
            else:
                a = 0
                best = q[s, 0]
                for j in range(1, n_actions):
                    if q[s, j] > best:
                        best = q[s, j]
                        a = j
            k += 1
            s2 = trans[s, a]
            best_next = q[s2, 0]
            for j in range(1, n_actions):
                if q[s2, j] > best_next:
                    best_next = q[s2, j]
            q[s, a] += lr * (rewards[s, a] + gamma * best_next - q[s, a])
            s = s2
