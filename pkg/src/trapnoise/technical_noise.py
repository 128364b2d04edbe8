"""Field noise at the ion from voltage noise that is correlated over whole electrodes.

Voltage noise on electrode i with amplitude density a_i (V/sqrt(Hz))
produces field noise a_i^2 * E_i^2 at the ion, where E_i is the
unit-potential basis field of that electrode.  Different electrodes
fluctuate independently and add in quadrature; the field of a single
electrode is coherent, so its components are squared after projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .core import SpectralDensityVector
from .errors import FitError, InvalidInputError
from .geometry import TrapGeometry, field_above_polygon

# relative tolerance for treating two electrodes as indistinguishable at the
# ion position (symmetry-equivalent basis fields)
DEGENERACY_RTOL = 1e-9


def trap_axis(d: float) -> np.ndarray:
    """Default ion path: straight above the origin at height d."""
    return np.array([0.0, 0.0, d])


@dataclass(frozen=True)
class ElectrodeNoiseSpec:
    """Voltage-noise amplitude density per electrode, V/sqrt(Hz)."""

    amplitudes: dict

    def __post_init__(self):
        for name, a in self.amplitudes.items():
            if a < 0.0:
                raise InvalidInputError(f"noise amplitude for {name!r} must be >= 0")

    @classmethod
    def uniform(cls, g: TrapGeometry, amplitude: float) -> "ElectrodeNoiseSpec":
        return cls({name: amplitude for name in g.names})


def _path_point(path, d: float) -> np.ndarray:
    p = np.asarray(path(d), dtype=float)
    if p.shape != (3,):
        raise InvalidInputError("ion path must return a 3-component point")
    if not np.isclose(p[2], d, rtol=1e-9, atol=0.0) or p[2] <= 0.0:
        raise InvalidInputError("ion path must satisfy z == d > 0")
    return p


def technical_SE(
    g: TrapGeometry, spec: ElectrodeNoiseSpec, d: float, path=trap_axis
) -> SpectralDensityVector:
    """Per-direction field-noise spectral density at ion-surface distance d.

    S_alpha = sum_i a_i^2 E_{i,alpha}^2 with E_i the 1-V basis field of
    electrode i at the ion position.
    """
    point = _path_point(path, d)
    total = np.zeros(3)
    for name, a in spec.amplitudes.items():
        e = g.electrode(name)  # raises on unknown name
        if a == 0.0:
            continue
        total += a**2 * field_above_polygon(e.shape, point, 1.0).squared()
    return SpectralDensityVector(*total)


def technical_SE_curve(
    g: TrapGeometry, spec: ElectrodeNoiseSpec, distances, path=trap_axis
) -> np.ndarray:
    """technical_SE over a distance grid; returns an (n, 3) array of (Sx, Sy, Sz)."""
    rows = []
    for d in distances:
        s = technical_SE(g, spec, float(d), path)
        rows.append([s.Sx, s.Sy, s.Sz])
    return np.array(rows)


@dataclass(frozen=True)
class AmplitudeFitReport:
    chi2: float
    reduced_chi2: float
    residuals: np.ndarray  # (model - data) / sigma, one per data point
    degenerate_groups: tuple  # tuples of electrode names with equal basis response
    weighted: bool
    n_points: int
    n_parameters: int  # independent columns after degeneracy grouping


def _design_matrix(g: TrapGeometry, data, path, electrode_names):
    rows = []
    y = []
    sig = []
    for p in data:
        point = _path_point(path, p.distance)
        row = []
        for name in electrode_names:
            e2 = field_above_polygon(g.electrode(name).shape, point, 1.0).squared()
            row.append(e2[{"planar_x": 0, "planar_y": 1, "normal": 2}[p.direction.value]])
        rows.append(row)
        y.append(p.S_E)
        sig.append(p.S_E_sigma)
    return np.array(rows), np.array(y), np.array(sig)


def _degeneracy_groups(M: np.ndarray, names):
    """Group electrodes whose design columns coincide to within DEGENERACY_RTOL."""
    n = M.shape[1]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    norms = np.linalg.norm(M, axis=0)
    for i in range(n):
        for j in range(i + 1, n):
            scale = max(norms[i], norms[j])
            if scale == 0.0 or np.linalg.norm(M[:, i] - M[:, j]) <= DEGENERACY_RTOL * scale:
                parent[find(j)] = find(i)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [tuple(names[i] for i in members) for members in groups.values()], list(
        groups.values()
    )


def fit_electrode_amplitudes(
    g: TrapGeometry, data, path=trap_axis, electrodes=None
):
    """Joint non-negative fit of per-electrode noise amplitudes to S_E data.

    Solves min || (M x - y) / sigma ||^2 with x = squared amplitudes >= 0
    over all electrodes at once (planar and normal rows together).  Data
    with all-positive sigmas is chi^2-weighted, otherwise unweighted.
    Symmetry-equivalent electrodes (identical basis response at every data
    point) only constrain their summed power; the fit reports them as a
    group and splits the group total equally (minimum-norm convention).

    Returns (ElectrodeNoiseSpec, AmplitudeFitReport).
    """
    data = list(data)
    names = list(electrodes) if electrodes is not None else g.names
    for name in names:
        g.electrode(name)
    directions = {p.direction for p in data}
    distances = {p.distance for p in data}
    if len(directions) < 2 or len(distances) < 4:
        raise FitError(
            "need data spanning >= 2 mode directions and >= 4 distances, got "
            f"{len(directions)} direction(s) and {len(distances)} distance(s)"
        )

    M, y, sig = _design_matrix(g, data, path, names)
    weighted = bool(np.all(sig > 0.0))
    scale = sig if weighted else np.ones_like(y)
    Mw = M / scale[:, None]
    yw = y / scale

    x, _ = nnls(Mw, yw)

    name_groups, index_groups = _degeneracy_groups(M, names)
    for members in index_groups:
        if len(members) > 1:
            x[members] = x[members].sum() / len(members)

    resid = (M @ x - y) / scale
    chi2 = float(resid @ resid)
    n_params = len(index_groups)
    dof = max(len(y) - n_params, 1)

    spec = ElectrodeNoiseSpec({name: float(np.sqrt(x[i])) for i, name in enumerate(names)})
    report = AmplitudeFitReport(
        chi2=chi2,
        reduced_chi2=chi2 / dof,
        residuals=resid,
        degenerate_groups=tuple(grp for grp in name_groups if len(grp) > 1),
        weighted=weighted,
        n_points=len(y),
        n_parameters=n_params,
    )
    return spec, report
