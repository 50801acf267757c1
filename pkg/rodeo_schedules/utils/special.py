import numpy as np

# |pi*z| below this uses the series for j0
_J0_SERIES_CUTOFF = 1e-4


def _reduce_half_periods(z):
    """Split z into n/2 + r with integer n and |r| <= 1/4."""
    z = np.asarray(z, dtype=float)
    n = np.rint(2.0 * z)
    r = z - 0.5 * n
    return np.mod(n, 4.0), r


def sinpi(z):
    """
    sin(pi*z) with exact argument reduction, so integers and half integers
    give exact zeros and signed unit values.

    Parameters:
        z (float or array): argument in half periods

    Returns:
        numpy.ndarray: sin(pi*z)
    """
    quadrant, r = _reduce_half_periods(z)
    s = np.sin(np.pi * r)
    c = np.cos(np.pi * r)
    return np.select([quadrant == 0, quadrant == 1, quadrant == 2], [s, c, -s], -c)


def cospi(z):
    """cos(pi*z) with the same exact argument reduction as sinpi."""
    quadrant, r = _reduce_half_periods(z)
    s = np.sin(np.pi * r)
    c = np.cos(np.pi * r)
    return np.select([quadrant == 0, quadrant == 1, quadrant == 2], [c, -s, -c], s)


def cos2pi(z):
    """cos^2(pi*z), the single iteration suppression at phase count z."""
    return np.square(cospi(z))


def j0pi(z):
    """
    Zeroth spherical Bessel function j0(pi*z) = sin(pi*z)/(pi*z).

    Small arguments use 1 - t^2/6 + t^4/120 with t = pi*z to avoid
    cancellation; zeros land exactly on the nonzero integers.
    """
    z = np.asarray(z, dtype=float)
    t = np.pi * z
    small = np.abs(t) < _J0_SERIES_CUTOFF
    safe_t = np.where(small, 1.0, t)
    series = 1.0 - t * t / 6.0 + t ** 4 / 120.0
    return np.where(small, series, sinpi(z) / safe_t)


def j0pi_squared(z):
    """j0(pi*z)^2, the suppression of one infinite super iteration."""
    return np.square(j0pi(z))
