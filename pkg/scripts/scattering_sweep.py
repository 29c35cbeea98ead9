"""Scattering matrix of the two-vertex graph over a k-sweep, with the closed-form error."""
import argparse

import numpy as np

from indefqg.conditions import standard_conditions
from indefqg.graph import two_vertex
from indefqg.scattering import scattering_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--length", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--kmax", type=float, default=25.0)
    ap.add_argument("--samples", type=int, default=500)
    args = ap.parse_args()
    print("a,k,transmission,reflection_im,closed_form_error,unitarity_residual")
    for a in args.length:
        g = two_vertex(a)
        bc = standard_conditions(g)
        for k in np.linspace(0.01, args.kmax, args.samples):
            sm = scattering_matrix(bc, g, k * k)
            t, r = np.tanh(a * k), 1 / np.cosh(a * k)
            err = np.abs(sm.S - np.array([[1j * t, r], [r, 1j * t]])).max()
            vals = (float(k), float(abs(sm.S[0, 1])), float(sm.S[0, 0].imag), float(err), sm.unitarity_residual)
            print(a, *map(repr, vals), sep=",")


if __name__ == "__main__":
    main()
