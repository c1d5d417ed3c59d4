"""High-precision reference values for the accountant and calibration tests.

Independent of the Rust code: integer orders use the direct binomial sum in
mpmath, fractional orders integrate E_{z~N(0,s^2)}[((1-q) + q*exp((2z-1)/(2s^2)))^a]
by quadrature. Run with `python3 rdp_oracle.py` and paste the printed values.
"""
import mpmath as mp

mp.mp.dps = 40


def log_a_int(q, s, a):
    q, s = mp.mpf(q), mp.mpf(s)
    total = mp.mpf(0)
    for i in range(a + 1):
        total += mp.binomial(a, i) * q**i * (1 - q) ** (a - i) * mp.e ** ((i * i - i) / (2 * s * s))
    return mp.log(total)


def log_a_quad(q, s, a):
    q, s, a = mp.mpf(q), mp.mpf(s), mp.mpf(a)

    def f(z):
        ratio = (1 - q) + q * mp.e ** ((2 * z - 1) / (2 * s * s))
        return mp.npdf(z, 0, s) * ratio**a

    pts = [-mp.inf, -10 * s, 0, 10 * s, 40 * s, 80 * s, mp.inf]
    return mp.log(mp.quad(f, pts))


def rdp(q, s, a, steps=1):
    if q == 1:
        return steps * mp.mpf(a) / (2 * mp.mpf(s) ** 2)
    a_is_int = float(a).is_integer()
    la = log_a_int(q, s, int(a)) if a_is_int else log_a_quad(q, s, a)
    return steps * la / (mp.mpf(a) - 1)


def default_orders():
    return [1 + mp.mpf(x) / 10 for x in range(1, 100)] + [mp.mpf(v) for v in range(12, 65)]


def eps(q, s, steps, delta, orders):
    best = mp.inf
    for a in orders:
        e = rdp(q, s, a, steps) + mp.log(1 / mp.mpf(delta)) / (a - 1)
        best = min(best, e)
    return best


def calibrate(target, delta, q, steps, beta, orders):
    hi = mp.mpf(10)
    e_hi = mp.inf
    while e_hi > target:
        hi *= 2
        e_hi = eps(q, hi, steps, delta, orders)
    if target - e_hi <= beta:
        return hi, e_hi
    lo = mp.mpf(0)
    while True:
        mid = (lo + hi) / 2
        e_mid = eps(q, mid, steps, delta, orders)
        if e_mid <= target:
            hi, e_hi = mid, e_mid
            if target - e_mid <= beta:
                return mid, e_mid
        else:
            lo = mid


def ndtr(x):
    return mp.ncdf(x)


def analytic_delta(s, e):
    s, e = mp.mpf(s), mp.mpf(e)
    return ndtr(1 / (2 * s) - e * s) - mp.e**e * ndtr(-1 / (2 * s) - e * s)


if __name__ == "__main__":
    print("# sigma=1.3 q=0.01 steps=1000, integer orders 2..64")
    for a in range(2, 65):
        print(a, mp.nstr(rdp(0.01, 1.3, a, 1000), 17))
    print("# one-step fractional orders, sigma=1.3 q=0.01 (quadrature)")
    for a in ["1.5", "2.5", "3.7", "10.9"]:
        print(a, mp.nstr(rdp(0.01, 1.3, mp.mpf(a)), 17))
    print("# quadrature cross-check at integer order 4:", mp.nstr(log_a_quad(0.01, 1.3, 4) / 3, 17),
          mp.nstr(log_a_int(0.01, 1.3, 4) / 3, 17))
    print("# one-step fractional orders, sigma=0.8 q=0.05 (quadrature)")
    for a in ["1.1", "2.3", "5.5"]:
        print(a, mp.nstr(rdp(0.05, 0.8, mp.mpf(a)), 17))
    print("# analytic gaussian delta")
    for s, e in [(1, 0), (4, 0.5), (2, 1)]:
        print(s, e, mp.nstr(analytic_delta(s, e), 17))
    print("# sufficient delta")
    for s, e in [(4, 0.5), (10, 0.9)]:
        print(s, e, mp.nstr(mp.mpf(4) / 5 * mp.e ** (-(mp.mpf(s) ** 2) * mp.mpf(e) ** 2 / 2), 17))
    print("# rdp_to_dp {2:1.0} delta=1e-5:", mp.nstr(1 + mp.log(mp.mpf(10) ** 5), 17))
    print("# calibrate(eps=1, delta=1e-5, q=0.01, steps=1000, beta=0.01), integer grid 2..64")
    s, e = calibrate(1, mp.mpf("1e-5"), mp.mpf("0.01"), 1000, mp.mpf("0.01"), [mp.mpf(a) for a in range(2, 65)])
    print(mp.nstr(s, 17), mp.nstr(e, 17))
    print("# same on the default grid")
    s, e = calibrate(1, mp.mpf("1e-5"), mp.mpf("0.01"), 1000, mp.mpf("0.01"), default_orders())
    print(mp.nstr(s, 17), mp.nstr(e, 17))
    print("# conservativeness grid: sigma eps analytic_delta rdp_epsilon(q=1, default grid)")
    for s in [mp.mpf("0.5"), 1, 2, 4, 8]:
        for e in [mp.mpf("0.1"), mp.mpf("0.5"), 1, 2]:
            d = analytic_delta(s, e)
            print(mp.nstr(s, 3), mp.nstr(e, 3), mp.nstr(d, 17), mp.nstr(eps(1, s, 1, d, default_orders()), 17))
