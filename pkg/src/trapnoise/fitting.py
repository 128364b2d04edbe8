"""Power-law fits on log-log axes, shared by the distance and frequency analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModeDirection
from .errors import FitError, InvalidInputError

# sigma_y / y above which the first-order propagation ln-sigma = sigma_y/y
# is dubious; such points are fitted anyway but flagged.
RELATIVE_SIGMA_FLAG = 0.5


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a straight-line fit of ln y against ln x.

    `exponent` is the signed slope (negative for decreasing laws);
    `log_prefactor` is the intercept, so y = exp(log_prefactor) * x**exponent.
    """

    exponent: float
    exponent_sigma: float
    log_prefactor: float
    log_prefactor_sigma: float
    reduced_chi2: float
    n_points: int
    flagged: tuple = ()

    def __post_init__(self):
        if self.exponent_sigma < 0.0:
            raise InvalidInputError("exponent sigma must be >= 0")

    def evaluate(self, x):
        return np.exp(self.log_prefactor) * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x, y, sigma=None) -> PowerLawFit:
    """Weighted linear regression of ln y on ln x.

    sigma are absolute 1-sigma errors on y, propagated to log space to
    first order (sigma_lny = sigma/y); omit for an unweighted fit.  The
    parameter covariance comes from the normal matrix; for the unweighted
    case it is scaled by the residual variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError("x and y must be 1-d arrays of equal length")
    if len(x) < 3:
        raise InvalidInputError(f"need >= 3 points for a power-law fit, got {len(x)}")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise InvalidInputError("power-law fit requires strictly positive x and y")

    lx = np.log(x)
    ly = np.log(y)
    flagged: tuple = ()
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != y.shape:
            raise InvalidInputError("sigma must match y in shape")
        if np.any(sigma <= 0.0):
            raise InvalidInputError("sigma values must be positive")
        rel = sigma / y
        flagged = tuple(int(i) for i in np.nonzero(rel > RELATIVE_SIGMA_FLAG)[0])
        w = 1.0 / rel**2
    else:
        w = np.ones_like(y)

    s0 = w.sum()
    s1 = (w * lx).sum()
    s2 = (w * lx * lx).sum()
    t0 = (w * ly).sum()
    t1 = (w * lx * ly).sum()
    delta = s0 * s2 - s1 * s1
    if delta <= 0.0 or not np.isfinite(delta):
        raise FitError("degenerate abscissa: all x equal?")
    slope = (s0 * t1 - s1 * t0) / delta
    intercept = (s2 * t0 - s1 * t1) / delta

    resid = ly - (intercept + slope * lx)
    chi2 = float((w * resid**2).sum())
    dof = len(x) - 2
    reduced = chi2 / dof

    var_slope = s0 / delta
    var_intercept = s2 / delta
    if sigma is None:
        # scale covariance by the residual variance estimate
        var_slope *= reduced
        var_intercept *= reduced

    return PowerLawFit(
        exponent=float(slope),
        exponent_sigma=math.sqrt(var_slope),
        log_prefactor=float(intercept),
        log_prefactor_sigma=math.sqrt(var_intercept),
        reduced_chi2=reduced,
        n_points=len(x),
        flagged=flagged,
    )


def fit_distance_scaling(points, direction: ModeDirection) -> PowerLawFit:
    """Power-law fit of S_E against distance for one mode direction."""
    pts = [p for p in points if p.direction is direction]
    if len(pts) < 3:
        raise InvalidInputError(f"need >= 3 points with direction {direction.value}")
    return _fit_points(pts, [p.distance for p in pts])


def fit_frequency_scaling(
    points, direction: ModeDirection | None = None, distance_rtol: float = 1e-6
) -> PowerLawFit:
    """Power-law fit of S_E against frequency at a fixed ion-surface distance.

    Heating rates must be converted to S_E before calling this: the
    conversion itself carries one power of omega, so an nbardot ~ f^-2
    dataset is an S_E ~ f^-1 dataset.  Frequencies are used in Hz
    (omega / 2 pi); the exponent is unchanged by that choice.
    """
    pts = list(points)
    if direction is not None:
        pts = [p for p in pts if p.direction is direction]
    if len(pts) < 3:
        raise InvalidInputError("need >= 3 points at the requested direction")
    directions = {p.direction for p in pts}
    if len(directions) > 1:
        raise InvalidInputError(f"mixed mode directions in frequency fit: {directions}")
    d0 = pts[0].distance
    for p in pts:
        if abs(p.distance - d0) > distance_rtol * d0:
            raise InvalidInputError(
                f"mixed distances in frequency fit: {p.distance} vs {d0}"
            )
    freqs = [p.angular_frequency / (2.0 * math.pi) for p in pts]
    return _fit_points(pts, freqs)


def _fit_points(pts, xvals) -> PowerLawFit:
    y = [p.S_E for p in pts]
    sig = [p.S_E_sigma for p in pts]
    sigma = sig if all(s > 0.0 for s in sig) else None
    return fit_power_law(xvals, y, sigma)
