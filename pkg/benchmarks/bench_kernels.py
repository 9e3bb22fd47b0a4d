"""Benchmark: compiled kernels vs the pure-Python fallback.

Times the scalar kernels that dominate a simulation tick, plus the
composite joystick->pressures->arc pipeline, and a full scripted session.

Run:  python benchmarks/bench_kernels.py [N]
"""

import math
import random
import sys
import time

from vinesim import _kernels_py as pure

try:
    from vinesim import _speedups as fast
except ImportError:
    fast = None

PSI = (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)


def make_inputs(n, seed=7):
    rng = random.Random(seed)
    quats = []
    for _ in range(n):
        q = [rng.gauss(0, 1) for _ in range(4)]
        norm = math.sqrt(sum(v * v for v in q))
        quats.append(tuple(v / norm for v in q))
    tips = [
        (rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)) for _ in range(n)
    ]
    arcs = [
        (rng.uniform(0, 2.2), rng.uniform(-math.pi, math.pi), rng.uniform(0.1, 1.0))
        for _ in range(n)
    ]
    return quats, tips, arcs


def bench(label, fn, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_suites(mod, quats, tips, arcs):
    def run_quat_to_arc():
        f = mod.quat_to_arc
        for q in quats:
            f(q[0], q[1], q[2], q[3], 1.0)

    def run_tip_to_arc():
        f = mod.tip_to_arc
        for x, y in tips:
            f(x * 0.8, y * 0.8, 1.0)

    def run_arc_pose():
        f = mod.arc_pose_at
        for k, p, s in arcs:
            f(k, p, s)

    def run_solver():
        f = mod.solve_pressures_bisect
        for x, y in tips:
            f(x, y, PSI[0], PSI[1], PSI[2], 0.04, 200)

    def run_pipeline():
        qa, at, sp, su = (
            mod.quat_to_arc,
            mod.arc_to_tip,
            mod.solve_pressures_bisect,
            mod.superpose_tip,
        )
        for q in quats:
            k, phi = qa(q[0], q[1], q[2], q[3], 1.0)
            x, y = at(min(k, 2.2), phi, 1.0)
            p1, p2, p3, _ = sp(x, y, PSI[0], PSI[1], PSI[2], 0.04, 200)
            su(p1, p2, p3, PSI[0], PSI[1], PSI[2], 0.04)

    return {
        "quat_to_arc": run_quat_to_arc,
        "tip_to_arc (bisection)": run_tip_to_arc,
        "arc_pose_at": run_arc_pose,
        "pressure solver": run_solver,
        "full tick pipeline": run_pipeline,
    }


def bench_session(backend_env):
    import os
    import subprocess

    code = (
        "import time\n"
        "from vinesim.scenario import load_builtin\n"
        "from vinesim.session import Session\n"
        "from vinesim.autopilot import run_route, course_routes\n"
        "course = load_builtin('robosoft2018')\n"
        "t0 = time.perf_counter()\n"
        "run_route(Session(course, 50.0), course_routes(course)['full_run'], 200.0)\n"
        "print(time.perf_counter() - t0)\n"
    )
    env = dict(os.environ)
    env.pop("VINESIM_PURE", None)
    env.update(backend_env)
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    )
    return float(out.stdout.strip())


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    quats, tips, arcs = make_inputs(n)
    print(f"{n} calls per kernel, best of 3\n")
    print(f"{'kernel':28s} {'pure (s)':>10s} {'compiled (s)':>13s} {'speedup':>8s}")
    pure_suite = kernel_suites(pure, quats, tips, arcs)
    fast_suite = kernel_suites(fast, quats, tips, arcs) if fast else None
    for name, fn in pure_suite.items():
        tp = bench(name, fn)
        if fast_suite:
            tf = bench(name, fast_suite[name])
            print(f"{name:28s} {tp:10.3f} {tf:13.3f} {tp / tf:7.1f}x")
        else:
            print(f"{name:28s} {tp:10.3f} {'n/a':>13s}")

    print("\nscripted robosoft2018 run (158 simulated seconds):")
    t_fast = bench_session({})
    t_pure = bench_session({"VINESIM_PURE": "1"})
    print(f"{'compiled backend':28s} {t_fast:10.3f} s")
    print(f"{'pure backend':28s} {t_pure:10.3f} s  ({t_pure / t_fast:.2f}x slower)")


if __name__ == "__main__":
    main()
