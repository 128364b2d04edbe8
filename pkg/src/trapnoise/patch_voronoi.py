"""Explicit fixed-patch realizations on the electrode surfaces.

Each electrode is tessellated independently by the Voronoi diagram of a
Poisson point process restricted to it, so patches never cross electrode
boundaries (gaps act as correlation barriers) and an electrode that draws
no seed degenerates to a single patch covering it.  Patches carry
independent noise amplitudes; their fields add in quadrature at the ion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import lsq_linear, minimize_scalar, nnls
from scipy.spatial import Voronoi

from .core import SpectralDensityVector
from .errors import FitError, GeometryError, InvalidInputError
from .geometry import Polygon, TrapGeometry, field_above_polygon
from .technical_noise import trap_axis, _path_point

PATCH_SCHEMA_VERSION = 1
_UM = 1e-6


@dataclass(frozen=True)
class Patch:
    polygon: Polygon
    parent_electrode: str
    amplitude: float = 0.0  # V/sqrt(Hz)

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise InvalidInputError("patch amplitude must be >= 0")


@dataclass(frozen=True)
class PatchConfiguration:
    patches: tuple
    seed: int
    target_density: float  # seeds per m^2

    def total_area(self) -> float:
        return sum(p.polygon.area for p in self.patches)

    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.patches])


def with_amplitudes(c: PatchConfiguration, amplitudes) -> PatchConfiguration:
    """Copy of c with patch amplitudes replaced (scalar or per-patch array)."""
    amps = np.broadcast_to(np.asarray(amplitudes, dtype=float), (len(c.patches),))
    patches = tuple(replace(p, amplitude=float(a)) for p, a in zip(c.patches, amps))
    return replace(c, patches=patches)


# ---------------------------------------------------------------------------
# Tessellation


def clip_to_convex(subject_vertices, clip_vertices):
    """Sutherland-Hodgman: clip a polygon against a convex CCW window.

    Returns the (possibly empty) list of result vertices.
    """
    output = [tuple(v) for v in subject_vertices]
    n = len(clip_vertices)
    for i in range(n):
        cx0, cy0 = clip_vertices[i]
        cx1, cy1 = clip_vertices[(i + 1) % n]
        if not output:
            return []
        edge_dx, edge_dy = cx1 - cx0, cy1 - cy0

        def inside(p):
            return edge_dx * (p[1] - cy0) - edge_dy * (p[0] - cx0) >= 0.0

        def intersect(s, e):
            # line through (cx0, cy0)-(cx1, cy1) cut with segment s-e
            dsx, dsy = e[0] - s[0], e[1] - s[1]
            denom = edge_dx * dsy - edge_dy * dsx
            if denom == 0.0:
                return s  # numerically parallel: endpoint already on the line
            t = (edge_dx * (cy0 - s[1]) - edge_dy * (cx0 - s[0])) / denom
            return (s[0] + t * dsx, s[1] + t * dsy)

        clipped = []
        prev = output[-1]
        for cur in output:
            if inside(cur):
                if not inside(prev):
                    clipped.append(intersect(prev, cur))
                clipped.append(cur)
            elif inside(prev):
                clipped.append(intersect(prev, cur))
            prev = cur
        output = clipped
    return output


def _dedup(vertices, eps):
    out = []
    for v in vertices:
        if not out or math.hypot(v[0] - out[-1][0], v[1] - out[-1][1]) > eps:
            out.append(v)
    if len(out) > 1 and math.hypot(out[0][0] - out[-1][0], out[0][1] - out[-1][1]) <= eps:
        out.pop()
    return out


def _shoelace(vertices) -> float:
    a = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def _sample_in_polygon(rng, poly: Polygon, n: int) -> np.ndarray:
    """n uniform points inside poly, by rejection from its bounding box."""
    x0, x1, y0, y1 = poly.bounding_box()
    pts = []
    while len(pts) < n:
        m = max(16, 2 * (n - len(pts)))
        xs = rng.uniform(x0, x1, m)
        ys = rng.uniform(y0, y1, m)
        for x, y in zip(xs, ys):
            if len(pts) < n and poly.contains(x, y):
                pts.append((x, y))
    return np.array(pts)


def _voronoi_cells(seeds: np.ndarray, span: float):
    """Bounded Voronoi cells of the seed points.

    Far-away ghost points close every real cell; ghosts sit well outside
    anything the cells will be clipped against, so they never intrude.
    """
    center = seeds.mean(axis=0)
    radius = 100.0 * max(span, 1e-12)
    angles = np.arange(8) * (2.0 * math.pi / 8.0)
    ghosts = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    vor = Voronoi(np.vstack([seeds, ghosts]))
    cells = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise GeometryError("unbounded Voronoi cell despite ghost points")
        verts = vor.vertices[region]
        # qhull does not guarantee vertex order; cells are convex, sort by angle
        c = verts.mean(axis=0)
        order = np.argsort(np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0]))
        cells.append([tuple(v) for v in verts[order]])
    return cells


def generate_patches(
    g: TrapGeometry, density: float, seed: int, amplitude: float = 0.0
) -> PatchConfiguration:
    """Poisson-Voronoi tessellation of every electrode.

    Seed counts are Poisson(density * electrode area) per electrode and
    positions are uniform, which together realize a Poisson point process
    of the given intensity; each electrode's Voronoi cells are clipped to
    the electrode outline.  An electrode with no (or one) seed is a single
    patch.  Deterministic for a fixed seed.
    """
    if not density > 0.0:
        raise InvalidInputError(f"seed density must be positive, got {density}")
    rng = np.random.default_rng(seed)
    patches = []
    for electrode in g.electrodes:
        poly = electrode.shape
        n = int(rng.poisson(density * poly.area))
        if n <= 1:
            patches.append(Patch(poly, electrode.name, amplitude))
            continue
        seeds = _sample_in_polygon(rng, poly, n)
        cells = _voronoi_cells(seeds, span=poly.scale())
        eps = 1e-12 * poly.scale()
        area_floor = 1e-13 * poly.area
        for cell in cells:
            verts = _dedup(clip_to_convex(poly.vertices, cell), eps)
            verts = [(_snap_um(x), _snap_um(y)) for x, y in verts]
            if len(verts) < 3 or _shoelace(verts) < area_floor:
                continue
            patches.append(Patch(Polygon(verts), electrode.name, amplitude))
    return PatchConfiguration(tuple(patches), seed=int(seed), target_density=float(density))


# ---------------------------------------------------------------------------
# Empirical autocorrelation


@dataclass(frozen=True)
class AutocorrelationEstimate:
    lags: np.ndarray  # m, strictly increasing, lags[0] = 0
    values: np.ndarray  # normalized autocovariance, values[0] = 1
    fitted_zeta: float  # m
    zeta_exceeds_region: bool
    fit_range: float  # m, upper lag used in the exponential fit


def _points_in_polygon(px: np.ndarray, py: np.ndarray, vertices) -> np.ndarray:
    inside = np.zeros(px.shape, dtype=bool)
    x0, y0 = vertices[-1]
    for x1, y1 in vertices:
        cond = (y0 <= py) != (y1 <= py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (px < xint)
        x0, y0 = x1, y1
    return inside


def rasterize_patches(c: PatchConfiguration, grid_step: float):
    """Label map of pixel centers -> patch index (-1 in gaps), plus grid origin."""
    if not grid_step > 0.0:
        raise InvalidInputError("grid step must be positive")
    xs0 = min(p.polygon.bounding_box()[0] for p in c.patches)
    xs1 = max(p.polygon.bounding_box()[1] for p in c.patches)
    ys0 = min(p.polygon.bounding_box()[2] for p in c.patches)
    ys1 = max(p.polygon.bounding_box()[3] for p in c.patches)
    nx = max(int(math.ceil((xs1 - xs0) / grid_step)), 1)
    ny = max(int(math.ceil((ys1 - ys0) / grid_step)), 1)
    if nx * ny > 5_000_000:
        raise InvalidInputError("grid step too small for the region (over 5e6 pixels)")
    cx = xs0 + (np.arange(nx) + 0.5) * grid_step
    cy = ys0 + (np.arange(ny) + 0.5) * grid_step
    label = np.full((ny, nx), -1, dtype=np.int32)
    for idx, patch in enumerate(c.patches):
        bx0, bx1, by0, by1 = patch.polygon.bounding_box()
        i0 = max(int((by0 - ys0) / grid_step) - 1, 0)
        i1 = min(int((by1 - ys0) / grid_step) + 2, ny)
        j0 = max(int((bx0 - xs0) / grid_step) - 1, 0)
        j1 = min(int((bx1 - xs0) / grid_step) + 2, nx)
        if i0 >= i1 or j0 >= j1:
            continue
        gx, gy = np.meshgrid(cx[j0:j1], cy[i0:i1])
        hit = _points_in_polygon(gx, gy, patch.polygon.vertices)
        window = label[i0:i1, j0:j1]
        window[hit & (window == -1)] = idx
    return label, (xs0, ys0)


def _lag_correlation(field: np.ndarray) -> np.ndarray:
    """Linear (zero-padded) auto-correlation sums over all lags."""
    ny, nx = field.shape
    spec = np.fft.rfft2(field, s=(2 * ny, 2 * nx))
    return np.fft.irfft2(spec * np.conj(spec), s=(2 * ny, 2 * nx))


def estimate_autocorrelation(
    c: PatchConfiguration,
    grid_step: float | None = None,
    seed: int = 0,
    n_realizations: int = 20,
    fit_range_factor: float = 3.0,
) -> AutocorrelationEstimate:
    """Radially averaged autocovariance of random patch values, with an exponential fit.

    Every patch gets an independent zero-mean unit-variance value, the map
    is rasterized, and the normalized masked autocovariance C(r) is
    radially averaged; gap pixels carry no weight.  C(r) ~ exp(-r/zeta) is
    fitted by least squares for r up to fit_range_factor times the
    expected cell size sqrt(mean patch area), averaging over
    n_realizations value assignments.  A fitted zeta larger than the region
    is flagged (the data cannot constrain it).
    """
    if n_realizations < 1:
        raise InvalidInputError("need at least one realization")
    mean_area = c.total_area() / len(c.patches)
    cell_size = math.sqrt(mean_area)
    if grid_step is None:
        grid_step = cell_size / 8.0
    label, _origin = rasterize_patches(c, grid_step)
    ny, nx = label.shape
    mask = label >= 0
    if not mask.any():
        raise InvalidInputError("grid does not resolve any patch")

    den = _lag_correlation(mask.astype(float))
    num = np.zeros_like(den)
    rng = np.random.default_rng(seed)
    for _ in range(n_realizations):
        values = rng.standard_normal(len(c.patches))
        # values are zero-mean by construction; no sample centering, which
        # would bias C(r) low by ~1/n_patches at large lags
        field = np.where(mask, values[label], 0.0)
        num += _lag_correlation(field)
    den = den * n_realizations

    # gather positive-quadrant-plus lags (dy >= 0, any dx); C(-l) = C(l)
    dys = np.arange(ny)
    dxs = np.concatenate([np.arange(nx), -np.arange(1, nx)])
    col_index = np.where(dxs >= 0, dxs, 2 * nx + dxs)
    r = np.hypot(dys[:, None], np.abs(dxs)[None, :]) * grid_step
    bins = np.rint(r / grid_step).astype(int)
    num_r = np.bincount(bins.ravel(), weights=num[np.ix_(dys, col_index)].ravel())
    den_r = np.bincount(bins.ravel(), weights=den[np.ix_(dys, col_index)].ravel())

    good = den_r > 0.5  # bins with at least one contributing pixel pair
    lags = np.nonzero(good)[0] * grid_step
    with np.errstate(invalid="ignore", divide="ignore"):
        values = num_r[good] / den_r[good]
    values = values / values[0]  # variance normalization; C(0) = 1 exactly

    fit_range = fit_range_factor * cell_size
    sel = lags <= fit_range
    if sel.sum() < 3:
        raise FitError("fewer than 3 autocorrelation bins inside the fit range")
    r_fit = lags[sel]
    c_fit = values[sel]
    region = max(nx, ny) * grid_step
    lo, hi = math.log(grid_step / 10.0), math.log(100.0 * region)

    def sse(lz: float) -> float:
        return float(((c_fit - np.exp(-r_fit / math.exp(lz))) ** 2).sum())

    res = minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    zeta = math.exp(float(res.x))

    return AutocorrelationEstimate(
        lags=lags,
        values=values,
        fitted_zeta=zeta,
        zeta_exceeds_region=zeta > region,
        fit_range=fit_range,
    )


# ---------------------------------------------------------------------------
# Field noise and amplitude fits


def patch_SE(c: PatchConfiguration, point) -> SpectralDensityVector:
    """S_alpha = sum over patches of amplitude^2 E_alpha^2 at the point."""
    total = np.zeros(3)
    for p in c.patches:
        if p.amplitude == 0.0:
            continue
        total += p.amplitude**2 * field_above_polygon(p.polygon, point, 1.0).squared()
    return SpectralDensityVector(*total)


def patch_SE_curve(c: PatchConfiguration, distances, path=trap_axis) -> np.ndarray:
    rows = []
    for d in distances:
        s = patch_SE(c, _path_point(path, float(d)))
        rows.append([s.Sx, s.Sy, s.Sz])
    return np.array(rows)


@dataclass(frozen=True)
class PatchFitReport:
    chi2: float
    reduced_chi2: float
    residuals: np.ndarray
    weighted: bool
    max_ratio: float | None  # amplitude ratio bound, None if unconstrained
    curve_distances: np.ndarray
    curve_SE: np.ndarray  # (n, 3) predicted (Sx, Sy, Sz) along curve_distances
    planar_anisotropy_max: float  # max over curve of max(Sx,Sy)/min(Sx,Sy)


def _patch_design(c: PatchConfiguration, data, path):
    rows, y, sig = [], [], []
    comp = {"planar_x": 0, "planar_y": 1, "normal": 2}
    for p in data:
        point = _path_point(path, p.distance)
        rows.append(
            [
                field_above_polygon(patch.polygon, point, 1.0).squared()[comp[p.direction.value]]
                for patch in c.patches
            ]
        )
        y.append(p.S_E)
        sig.append(p.S_E_sigma)
    return np.array(rows), np.array(y), np.array(sig)


def fit_patch_amplitudes(
    c: PatchConfiguration,
    data,
    path=trap_axis,
    max_ratio: float | None = None,
    n_curve: int = 25,
):
    """Fit per-patch noise amplitudes to spectral-density data.

    Non-negative least squares over the squared amplitudes.  With
    max_ratio = R, the voltage amplitudes are additionally confined to a
    ratio band max/min <= R: the squared amplitudes are boxed into
    [t, R^2 t] and the band floor t is optimized by a 1-d scan.  The
    report carries the predicted planar-x/planar-y/normal curves over the
    data's distance range; their planar ratio is the anisotropy diagnostic
    (a fixed patch layout generally breaks planar isotropy).
    """
    data = list(data)
    if len({p.direction for p in data}) < 2:
        raise FitError("need data in at least 2 mode directions")
    if max_ratio is not None and max_ratio < 1.0:
        raise FitError(f"amplitude ratio bound must be >= 1, got {max_ratio}")

    M, y, sig = _patch_design(c, data, path)
    weighted = bool(np.all(sig > 0.0))
    scale = sig if weighted else np.ones_like(y)
    Mw = M / scale[:, None]
    yw = y / scale

    if max_ratio is None:
        x, _ = nnls(Mw, yw)
    else:
        r2 = max_ratio**2
        x_free, _ = nnls(Mw, yw)
        top = float(x_free.max())
        if top <= 0.0:
            x = np.zeros(M.shape[1])
        else:
            def cost_at(t: float):
                sol = lsq_linear(Mw, yw, bounds=(t, r2 * t))
                return float(sol.cost), sol.x

            ts = np.geomspace(top / r2 * 1e-2, top * 2.0, 41)
            costs = [cost_at(t)[0] for t in ts]
            k = int(np.argmin(costs))
            lo = math.log(ts[max(k - 1, 0)])
            hi = math.log(ts[min(k + 1, len(ts) - 1)])
            res = minimize_scalar(
                lambda lt: cost_at(math.exp(lt))[0],
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-10},
            )
            _, x = cost_at(math.exp(float(res.x)))
            x = np.maximum(x, 0.0)

    resid = (M @ x - y) / scale
    chi2 = float(resid @ resid)
    dof = max(len(y) - M.shape[1], 1)

    fitted = with_amplitudes(c, np.sqrt(x))
    dists = np.geomspace(min(p.distance for p in data), max(p.distance for p in data), n_curve)
    curve = patch_SE_curve(fitted, dists, path)
    planar = curve[:, :2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = planar.max(axis=1) / planar.min(axis=1)
    aniso = float(np.nanmax(ratios)) if np.isfinite(ratios).any() else float("inf")

    report = PatchFitReport(
        chi2=chi2,
        reduced_chi2=chi2 / dof,
        residuals=resid,
        weighted=weighted,
        max_ratio=max_ratio,
        curve_distances=dists,
        curve_SE=curve,
        planar_anisotropy_max=aniso,
    )
    return fitted, report


# ---------------------------------------------------------------------------
# Serialization


def _snap_um(x_m: float) -> float:
    """Quantize a coordinate to the 1e-9-um (femtometer) grid, in meters.

    Coordinates on this grid are fixed points of the um-based JSON round
    trip: the double-rounding noise of the m <-> um conversion (~1e-16
    relative) is far below the grid quantum, so save -> load -> save is
    bit-stable.  Generated patches are snapped at construction; the
    perturbation (< 1 fm) is physically irrelevant.
    """
    return round(x_m * 1e6, 9) * _UM


def configuration_to_dict(c: PatchConfiguration) -> dict:
    return {
        "schema_version": PATCH_SCHEMA_VERSION,
        "seed": c.seed,
        "target_density_per_m2": c.target_density,
        "patches": [
            {
                "parent_electrode": p.parent_electrode,
                "amplitude_v_per_sqrthz": p.amplitude,
                "vertices_um": [
                    [round(x * 1e6, 9), round(y * 1e6, 9)] for x, y in p.polygon.vertices
                ],
            }
            for p in c.patches
        ],
    }


def configuration_from_dict(doc: dict) -> PatchConfiguration:
    try:
        patches = tuple(
            Patch(
                Polygon([(x * _UM, y * _UM) for x, y in p["vertices_um"]]),
                str(p["parent_electrode"]),
                float(p["amplitude_v_per_sqrthz"]),
            )
            for p in doc["patches"]
        )
        return PatchConfiguration(
            patches, seed=int(doc["seed"]), target_density=float(doc["target_density_per_m2"])
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed patch configuration document: {exc}") from exc


def save_patches(c: PatchConfiguration, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(configuration_to_dict(c), fh, indent=1)


def load_patches(path) -> PatchConfiguration:
    with open(path, "r", encoding="utf-8") as fh:
        return configuration_from_dict(json.load(fh))
