#!/usr/bin/env python3
"""Ground states by constrained energy minimization, cross-checked against
direct diagonalization of the same discrete Hamiltonian."""

import numpy as np

from qbohm.eigensolve import SolverOptions, minimize_energy, schrodinger_oracle
from qbohm.fields import ScalarField, field_from_function, grid_1d
from qbohm.qpotential import bohmian_ansatz


def main():
    e = bohmian_ansatz(-0.5)

    gh = grid_1d(-10.0, 10.0, 512)
    Vh = field_from_function(gh, lambda x: 0.5 * x**2, units="energy")
    rep = minimize_energy(Vh, e)
    ev = schrodinger_oracle(Vh, 3).eigenvalues
    print("harmonic V = x^2/2 on [-10,10], 512 points")
    print(f"  minimized lambda = {rep.lam:.9f}  ({rep.iterations} iterations, "
          f"converged={rep.converged})")
    print(f"  oracle spectrum  = {np.array2string(ev, precision=6)}")
    print(f"  |lambda - eig0|  = {abs(rep.lam - ev[0]):.2e}")
    print(f"  breakdown: {', '.join(f'{k}={v:.6f}' for k, v in rep.breakdown.items())}")

    gw = grid_1d(0.0, 1.0, 512)
    Vw = ScalarField(gw, np.zeros(512), units="energy")
    rep = minimize_energy(Vw, e, SolverOptions(tol_grad=1e-4, max_iter=400000))
    ev = schrodinger_oracle(Vw, 3).eigenvalues
    print("\ninfinite well on [0,1] (Dirichlet walls), 512 points")
    print(f"  minimized lambda = {rep.lam:.9f}  vs pi^2/2 = {np.pi**2 / 2:.9f}")
    print(f"  oracle spectrum  = {np.array2string(ev, precision=6)}")
    print(f"  |lambda - eig0|  = {abs(rep.lam - ev[0]):.2e}")


if __name__ == "__main__":
    main()
