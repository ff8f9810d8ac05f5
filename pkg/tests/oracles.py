"""Independent high-precision oracles and the values frozen from them.

The ``FROZEN`` numbers were produced by the functions below (mpmath, 30
digits) and are what the tests compare against; ``test_oracles.py`` checks
that they still reproduce.
"""

import mpmath as mp

mp.mp.dps = 30


def width_integral(phi, h):
    """``int_h^inf dl / sqrt(exp(2 (phi(l) - phi(h))) - 1)`` by mpmath quadrature."""
    h = mp.mpf(h)
    slope = mp.diff(phi, h)

    def f(t):
        # l = h + t^2 removes the inverse square-root singularity at l = h
        lam = h + t * t
        gap = phi(lam) - phi(h)
        if gap == 0 or t * t < mp.mpf(10) ** (-mp.mp.dps // 2):
            return 2 / mp.sqrt(2 * slope)
        return 2 * t / mp.sqrt(mp.expm1(2 * gap))

    return mp.quad(f, [0, 0.5, 1, 2, 4, mp.inf])


def alpha_log_width(alpha, h):
    return width_integral(lambda x: alpha * mp.log(x), h)


def quadratic_width(h):
    return width_integral(lambda x: x * x / 2, h)


def arctan_slope(h):
    return mp.sqrt(mp.expm1(2 * (mp.pi / 2 - mp.atan(h))))


def grim_reaper(x):
    return -mp.log(mp.cos(x)), mp.tan(x)


FROZEN = {
    "alpha_log2_h1": 1.31102877714605989817558005216,
    "quadratic_h1": 1.17009236325623795233703170859,
    "quadratic_h2": 0.697307445316896764413547660469,
    "quadratic_h3": 0.491816021707335746770965396526,
    "arctan_slope_h0": 4.70538974292026834287281792449,
    "grim_u_1": 0.615626470386014262,
    "grim_up_1": 1.5574077246549023,
}
