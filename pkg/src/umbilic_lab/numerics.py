"""Sampled-data helpers: finite differences, Hermite interpolation, quadrature."""

import numpy as np

from .errors import InsufficientSamples


def centered_derivative(values, h):
    """Derivative of uniformly sampled ``values`` along axis 0.

    Five-point centered stencil in the interior, three-point centered next to
    the ends and second-order one-sided at the two end samples.
    """
    f = np.asarray(values, dtype=float)
    n = f.shape[0]
    if n < 3:
        raise InsufficientSamples(f"need at least 3 samples, got {n}")
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    if n >= 5:
        out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def interior_mask(n, width=2):
    """Boolean mask dropping ``width`` samples at each end."""
    mask = np.zeros(n, dtype=bool)
    if n > 2 * width:
        mask[width:n - width] = True
    return mask


def quintic_hermite(y0, d0, a0, y1, d1, a1, h, s):
    """Quintic Hermite interpolant on one interval.

    ``y, d, a`` are value, first and second derivative at the two ends of an
    interval of length ``h``; ``s`` in [0, 1] is the relative position (scalar
    or broadcastable).  Returns ``(value, derivative)`` at ``s``.
    """
    s2 = s * s
    s3 = s2 * s
    s4 = s3 * s
    s5 = s4 * s
    h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5
    h1 = s - 6 * s3 + 8 * s4 - 3 * s5
    h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5)
    h3 = 0.5 * (s3 - 2 * s4 + s5)
    h4 = -4 * s3 + 7 * s4 - 3 * s5
    h5 = 10 * s3 - 15 * s4 + 6 * s5
    dh0 = -30 * s2 + 60 * s3 - 30 * s4
    dh1 = 1 - 18 * s2 + 32 * s3 - 15 * s4
    dh2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4)
    dh3 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4)
    dh4 = -12 * s2 + 28 * s3 - 15 * s4
    dh5 = 30 * s2 - 60 * s3 + 30 * s4
    value = h0 * y0 + h1 * h * d0 + h2 * h * h * a0 + h3 * h * h * a1 + h4 * h * d1 + h5 * y1
    deriv = (dh0 * y0 + dh1 * h * d0 + dh2 * h * h * a0 + dh3 * h * h * a1 + dh4 * h * d1 + dh5 * y1) / h
    return value, deriv


def cumulative_corrected_trapezoid(f, df, h, origin):
    """Running integral of ``f`` with endpoint derivative correction.

    ``f`` and ``df`` are samples of an integrand and its derivative along
    axis 0; the result vanishes at index ``origin``.  Fourth-order accurate.
    """
    f = np.asarray(f, dtype=float)
    df = np.asarray(df, dtype=float)
    inc = 0.5 * h * (f[1:] + f[:-1]) + (h * h / 12.0) * (df[:-1] - df[1:])
    cum = np.concatenate([np.zeros((1,) + f.shape[1:]), np.cumsum(inc, axis=0)])
    return cum - cum[origin]
