#!/usr/bin/env python3
"""Independent oracle for the Airy tables frozen into the test suite.

Everything here deliberately avoids truncspec: zeros come from the Maclaurin
series evaluated in 40-digit mpmath arithmetic with bisection on sign
changes, the series constants come from Gamma-function identities rather
than hard-coded literals, and complex sample values come from mpmath's own
airyai.  Run it to regenerate the numbers quoted in tests/test_airy.py.
"""

import mpmath as mp

mp.mp.dps = 40

C1 = mp.power(3, mp.mpf(-2) / 3) / mp.gamma(mp.mpf(2) / 3)   # Ai(0)
C2 = mp.power(3, mp.mpf(-1) / 3) / mp.gamma(mp.mpf(1) / 3)   # -Ai'(0)


def ai_series(x):
    f = term_f = mp.mpf(1)
    g = term_g = x
    z3 = x * x * x
    for k in range(0, 200):
        term_f *= z3 / ((3 * k + 2) * (3 * k + 3))
        term_g *= z3 / ((3 * k + 3) * (3 * k + 4))
        f += term_f
        g += term_g
        if abs(term_f) < mp.mpf(10) ** (-45) and abs(term_g) < mp.mpf(10) ** (-45):
            break
    return C1 * f - C2 * g


def ai_prime_series(x):
    # term-wise derivative: f = sum a_k x^{3k}, g = sum b_k x^{3k+1}
    if x == 0:
        return -C2
    z3 = x * x * x
    f_terms = [mp.mpf(1)]
    g_terms = [x]
    tf, tg = mp.mpf(1), x
    for k in range(0, 200):
        tf *= z3 / ((3 * k + 2) * (3 * k + 3))
        tg *= z3 / ((3 * k + 3) * (3 * k + 4))
        f_terms.append(tf)
        g_terms.append(tg)
        if abs(tf) < mp.mpf(10) ** (-45) and abs(tg) < mp.mpf(10) ** (-45):
            break
    fp = sum(3 * k * f_terms[k] / x for k in range(1, len(f_terms)))
    gp = sum((3 * k + 1) * g_terms[k] / x for k in range(len(g_terms)))
    return C1 * fp - C2 * gp


def bisect_zeros(fn, lo, hi, step, count):
    zeros = []
    x = lo
    fx = fn(mp.mpf(x))
    while x < hi and len(zeros) < count:
        y = x + step
        fy = fn(mp.mpf(y))
        if fx * fy < 0:
            a, b = mp.mpf(x), mp.mpf(y)
            for _ in range(120):
                m = (a + b) / 2
                if fn(a) * fn(m) <= 0:
                    b = m
                else:
                    a = m
            zeros.append((a + b) / 2)
        x, fx = y, fy
    return zeros


def main():
    print("# series-bisection zeros of Ai (descending order is k = 1, 2, ...)")
    mus = bisect_zeros(ai_series, -14.0, 0.0, 0.05, 12)
    for k, z in enumerate(reversed(mus), start=1):
        print(f"mu[{k:2d}] = {mp.nstr(z, 20)}")
    print("# series-bisection zeros of Ai'")
    mups = bisect_zeros(ai_prime_series, -14.0, -0.2, 0.05, 12)
    for k, z in enumerate(reversed(mups), start=1):
        print(f"mu'[{k:2d}] = {mp.nstr(z, 20)}")
    print("# series constants")
    print(f"Ai(0)  = {mp.nstr(C1, 25)}")
    print(f"Ai'(0) = {mp.nstr(-C2, 25)}")

    print("# complex sample values from mpmath.airyai (independent implementation)")
    samples = [
        mp.mpf(1),
        mp.mpf(5),
        mp.mpc(2, 2),
        mp.mpc(-3, 4),
        mp.mpf(-8),
        mp.mpc(0, 10),
        mp.mpf(10),
        mp.mpc(-12, 5),
        8 * mp.exp(mp.mpc(0, mp.pi / 6)),
        20 * mp.exp(mp.mpc(0, 2 * mp.pi / 3)),
        mp.mpf(-25),
        30 * mp.exp(mp.mpc(0, mp.pi / 8)),
        mp.mpc(0, 35),
        mp.mpc(-38, 3),
        mp.mpc(12, -9),
    ]
    for z in samples:
        a = mp.airyai(z)
        print(f"Ai({mp.nstr(mp.mpc(z), 17)}) = {mp.nstr(mp.mpc(a), 17)}")
    for z in (mp.mpf(1), mp.mpf(5), mp.mpf(-8), mp.mpf(-25)):
        print(f"Ai'({mp.nstr(z, 17)}) = {mp.nstr(mp.airyai(z, 1), 17)}")


if __name__ == "__main__":
    main()
