"""Compare the compiled and interpreted kernel paths.

Runs each workload twice in subprocesses, once with CIIM_JIT=1 and once with
CIIM_JIT=0, and reports wall-clock times plus a bitwise-equality check on the
outputs. The subprocess boundary matters: the path is chosen at import time.

Usage: python3 benchmarks/bench_accel.py
"""

import json
import os
import subprocess
import sys

WORKER = r"""
import json
import sys
import time

import numpy as np

from ciim.accel import JIT_ENABLED
from ciim.agent import AgentConfig, frozen_test_mdp, train_agent_mdp
from ciim.forecaster import GruCellParams, SeriesWindow, loss_and_gradients
from ciim.kernels import ciim_batch


def bench(fn, repeats=5):
    # warm-up run absorbs any compilation cost so we time steady state
    fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


results = {"jit": bool(JIT_ENABLED), "timings": {}, "checks": {}}

rng = np.random.default_rng(0)
n = 200_000
threat = rng.uniform(size=n)
vuln = rng.uniform(size=n)
expo = rng.uniform(size=n)
resil = rng.uniform(0.02, 1.0, size=n)
pert = rng.uniform(size=n)
values = np.empty(n)
sens = np.empty(n)


def run_kernel():
    ciim_batch(1.0, 0.5, threat, vuln, expo, resil, pert, values, sens)


results["timings"]["ciim_batch_200k"] = bench(run_kernel)
results["checks"]["ciim_batch_sum"] = float(values.sum())

window = SeriesWindow(rng.uniform(0.05, 0.95, size=(64, 8)))
params = GruCellParams.init(0, 8)


def run_gru():
    loss_and_gradients(params, window)


results["timings"]["gru_bptt_64"] = bench(run_gru)
results["checks"]["gru_loss"] = loss_and_gradients(params, window)[1]

mdp = frozen_test_mdp(1.0)


def run_agent():
    train_agent_mdp(mdp, AgentConfig(episodes=10_000, seed=7))


results["timings"]["q_learning_10k"] = bench(run_agent, repeats=3)
results["checks"]["q_sum"] = float(train_agent_mdp(mdp, AgentConfig(episodes=10_000, seed=7)).sum())

json.dump(results, sys.stdout)
"""


def run_mode(jit: str) -> dict:
    env = dict(os.environ, CIIM_JIT=jit)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER], env=env, capture_output=True, text=True
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"benchmark worker failed with CIIM_JIT={jit}")
    return json.loads(proc.stdout)


def main():
    on = run_mode("1")
    off = run_mode("0")
    assert on["jit"] and not off["jit"], "env switch did not take effect"

    print(f"{'workload':<20} {'jit on':>10} {'jit off':>10} {'speedup':>8}")
    for name in on["timings"]:
        a, b = on["timings"][name], off["timings"][name]
        print(f"{name:<20} {a * 1e3:>8.2f}ms {b * 1e3:>8.2f}ms {b / a:>7.1f}x")

    mismatches = []
    for k in on["checks"]:
        a, b = on["checks"][k], off["checks"][k]
        if k == "gru_loss":
            # exp/tanh may round differently by one ulp across libm builds
            if abs(a - b) > 1e-12 * max(abs(a), abs(b)):
                mismatches.append(k)
        elif a != b:
            mismatches.append(k)
    if mismatches:
        raise SystemExit(f"paths disagree on: {mismatches}")
    print("outputs agree across both paths (gru loss within 1e-12 relative)")


if __name__ == "__main__":
    main()
