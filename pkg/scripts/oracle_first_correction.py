#!/usr/bin/env python3
"""mpmath quadrature oracle for the corner correction integrals.

The corner mode of the model half-line operator is psi_k(y) =
Ai(e^{i pi/6} y + mu_k).  For U = x^3 the local potential defect seen from
the corner at s is, after the stretched substitution x -> U'(s)^{-1/3} x,

    W(x; s) = i [ U'(s)^{-2/3} (U(s) - U(s - U'(s)^{-1/3} x)) - x ]
            = i [ -3 s (3 s^2)^{-4/3} x^2 + (3 s^2)^{-5/3} x^3 ],

the linear term cancelling exactly against -i x.  The correction is
<W psi_k, psi_k> / <psi_k, psi_k> over (0, infinity), evaluated here with
mpmath's airyai and adaptive quadrature: independent of the package's series
Airy evaluator and its composite-Simpson rule.  Outputs are frozen into
tests/test_asymptotics.py.
"""

import mpmath as mp

mp.mp.dps = 30

MU = [mp.mpf("-2.33810741045976703849"), mp.mpf("-4.08794944413097061664"),
      mp.mpf("-5.52055982809555105913")]
ROT = mp.exp(mp.mpc(0, mp.pi / 6))


def psi_sq(k, y):
    a = mp.airyai(ROT * y + MU[k - 1])
    return a * a


def correction_cubic(s, k=1):
    s = mp.mpf(s)
    c2 = -3 * s * (3 * s * s) ** mp.mpf("-4/3")
    c3 = (3 * s * s) ** mp.mpf("-5/3")

    def num(y):
        return mp.mpc(0, 1) * (c2 * y**2 + c3 * y**3) * psi_sq(k, y)

    pts = [0, 2, 5, 12, mp.inf]
    return mp.quad(num, pts) / mp.quad(lambda y: psi_sq(k, y), pts)


def main():
    print("# <psi_1, psi_1> on (0, inf)")
    print(mp.nstr(mp.quad(lambda y: psi_sq(1, y), [0, 2, 5, 12, mp.inf]), 17))
    print("# first correction for U = x^3, k = 1")
    for s in ("2.5", "5", "10"):
        print(f"s = {s}: {mp.nstr(correction_cubic(s), 15)}")


if __name__ == "__main__":
    main()
