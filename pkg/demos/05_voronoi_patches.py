"""Explicit fixed-patch configurations on the electrode surfaces.

Generates Poisson-Voronoi tessellations (patches never cross electrode
gaps), measures their empirical correlation length, and fits per-patch
noise amplitudes to a smooth 2:1-polarized d^-2.6 distance scan.  Whether
a configuration can fit at all hinges on the patch layout under the ion:
with the center electrode as a single patch the response behaves like
electrode-correlated technical noise, while a configuration that splits
the center electrode follows the scan closely.  Fixed tilings also break
planar isotropy; the x-y anisotropy of the prediction is part of the fit
report.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection

from trapnoise import (
    ModeDirection,
    SpectralDensityPoint,
    default_trap_geometry,
    estimate_autocorrelation,
    fit_patch_amplitudes,
    generate_patches,
)
from trapnoise.core import REFERENCE_ANGULAR_FREQUENCY as W

g = default_trap_geometry()

data = []
for d in np.geomspace(50e-6, 300e-6, 10):
    base = 1e-12 * (d / 1e-4) ** -2.6
    data.append(SpectralDensityPoint(float(d), W, ModeDirection.PLANAR_Y, base, 0.05 * base))
    data.append(SpectralDensityPoint(float(d), W, ModeDirection.NORMAL, 2 * base, 0.1 * base))

print("== configurations at the calibrated density (2.0e7 seeds/m^2) ==")
# seed 1: the center electrode stays a single patch; seed 179: it splits
for seed in (1, 179):
    c = generate_patches(g, density=2.0e7, seed=seed)
    n_center = sum(1 for p in c.patches if p.parent_electrode == "DC9")
    est = estimate_autocorrelation(c, grid_step=5e-6, seed=11, n_realizations=20)
    _, report = fit_patch_amplitudes(c, data)
    print(
        f"  seed {seed:3d}: {len(c.patches):2d} patches, DC9 split into {n_center}, "
        f"zeta = {est.fitted_zeta * 1e6:3.0f} um, reduced chi2 = {report.reduced_chi2:6.2f}"
    )
print("  a single-patch center electrode cannot follow the scan (it acts like")
print("  technical noise); splitting it is what makes the fit work.")

print("\n== the well-fitting configuration in detail ==")
c = generate_patches(g, density=2.0e7, seed=179)
fitted, report = fit_patch_amplitudes(c, data)
amps = fitted.amplitudes()
positive = amps[amps > 0]
print(f"  unconstrained: reduced chi2 = {report.reduced_chi2:.2f}")
print(f"  active patches: {len(positive)} of {len(amps)}, amplitudes "
      f"{positive.min():.2e} .. {positive.max():.2e} V/sqrt(Hz)")
fitted4, report4 = fit_patch_amplitudes(c, data, max_ratio=4.0)
amps4 = fitted4.amplitudes()
print(f"  with amplitude ratio <= 4: reduced chi2 = {report4.reduced_chi2:.2f}, "
      f"ratio = {amps4.max() / amps4.min():.2f}")
print(f"  planar anisotropy along the curve: max Sx:Sy ratio = {report.planar_anisotropy_max:.2f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
polys = [np.array(p.polygon.vertices) * 1e6 for p in fitted.patches]
shades = amps / amps.max()
coll = PolyCollection(polys, array=shades, edgecolor="k", linewidth=0.4, cmap="viridis")
ax1.add_collection(coll)
ax1.autoscale()
ax1.set_aspect("equal")
ax1.set_xlabel("x (um)")
ax1.set_ylabel("y (um)")
ax1.set_title("patches, shaded by fitted amplitude")

dists = report.curve_distances * 1e6
ax2.loglog(dists, report.curve_SE[:, 0], label="planar x (prediction)")
ax2.loglog(dists, report.curve_SE[:, 1], label="planar y (fit)")
ax2.loglog(dists, report.curve_SE[:, 2], label="normal (fit)")
ax2.loglog(
    [p.distance * 1e6 for p in data if p.direction is ModeDirection.PLANAR_Y],
    [p.S_E for p in data if p.direction is ModeDirection.PLANAR_Y],
    "b.", label="scan (planar y)",
)
ax2.set_xlabel("d (um)")
ax2.set_ylabel("S_E (V^2 m^-2 Hz^-1)")
ax2.legend(fontsize=8)
ax2.set_title("fixed patches break planar isotropy")
fig.tight_layout()
fig.savefig("voronoi_patch_fit.png", dpi=150)
print("  saved voronoi_patch_fit.png")
