#!/usr/bin/env python3
"""Stabilize the inverted pendulum three ways and compare decay rates.

Runs on the linearization at the upright equilibrium:
  1. pole placement with a chosen closed-loop polynomial,
  2. infinite-horizon LQR feedback from the algebraic Riccati equation,
  3. weighted-Gramian feedback with a prescribed decay rate,
then closes the loop through a Luenberger observer driven only by the
angle measurement. Trajectories land in CSV files next to this script.
"""

import pathlib

import numpy as np

import lincontrol as lc

OUT = pathlib.Path(__file__).resolve().parent / "out"


def measured_rate(grid, norms, lo=1.0, hi=6.0):
    window = (grid >= lo) & (grid <= hi)
    return -np.polyfit(grid[window], np.log(norms[window]), 1)[0]


def main():
    OUT.mkdir(exist_ok=True)
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    C = np.array([[1.0, 0.0]])
    sys = lc.LtiSystem(A, B, C)

    print("== analysis ==")
    print("kalman rank:", lc.kalman_test(sys).rank)
    print("observable:", lc.observability_test(A, C).observable)
    print("open-loop abscissa:", lc.spectral_abscissa(A))

    gains = {}
    gains["placed"] = lc.pole_place(
        A, B, lc.MonicPolynomial.from_roots([-1.0, -1.5])).F
    are = lc.are_solve(lc.LtiSystem(A, B))  # full-state cost
    gains["lqr"] = -B.T @ are.P
    stab = lc.gramian_stabilizer(A, B, 2.0)
    gains["gramian(rate=2)"] = stab.K

    grid = lc.uniform_grid(0.0, 8.0, 801)
    x0 = np.array([0.35, 0.0])
    print("\n== state feedback from x0 =", x0, "==")
    for label, K in gains.items():
        closed = lc.LtiSystem(A + B @ K, B)
        traj = lc.simulate(closed, x0, None, grid)
        norms = np.linalg.norm(traj.states, axis=1)
        rate = measured_rate(grid, norms)
        csv = OUT / f"pendulum_{label.split('(')[0]}.csv"
        traj.to_csv(csv)
        print(f"{label:>16}: abscissa {lc.spectral_abscissa(A + B @ K):+.3f}, "
              f"measured decay {rate:.3f}  -> {csv.name}")

    print("\n== output feedback through an observer ==")
    K = gains["placed"]
    L = lc.design_observer(A, C, lc.MonicPolynomial.from_roots([-3.0, -4.0])).L
    loop = lc.closed_loop_observer_system(A, B, C, K, L)
    traj, xhat = loop.simulate(x0, [0.0, 0.0], grid)
    est_err = np.linalg.norm(xhat - traj.states, axis=1)
    print("loop spectrum:", np.sort(lc.eigenvalues(loop.augmented).real))
    print(f"estimate error decay: {measured_rate(grid, est_err):.3f} "
          f"(observer abscissa {lc.spectral_abscissa(A + L @ C):+.3f})")
    lc.Trajectory(grid=grid, states=np.hstack([traj.states, xhat]),
                  controls=traj.controls).to_csv(OUT / "pendulum_observer_loop.csv")
    print("wrote", OUT / "pendulum_observer_loop.csv")


if __name__ == "__main__":
    main()
