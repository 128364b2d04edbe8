"""How seed density maps to the fitted correlation length.

The empirical correlation length of a tessellation is set by the patch
sizes, which the electrode boundaries cap: patches cannot grow past their
electrode.  This sweep documents the density -> fitted-zeta mapping on
the built-in layout; it is the provenance of the calibrated working point
(2.0e7 seeds/m^2 for a ~140 um correlation length) used in the tests.
"""

import numpy as np

from trapnoise import default_trap_geometry, estimate_autocorrelation, generate_patches

g = default_trap_geometry()
print(f"total electrode area: {g.total_area() * 1e6:.3f} mm^2")
print(f"{'density (1/mm^2)':>18s} {'seeds':>6s} {'patches':>8s} {'fitted zeta (um)':>18s}")

for density_mm2 in (5, 10, 20, 40, 80, 160, 320):
    density = density_mm2 * 1e6
    zetas = []
    n_patches = []
    for seed in range(4):
        c = generate_patches(g, density, seed=seed)
        est = estimate_autocorrelation(c, grid_step=5e-6, seed=11, n_realizations=20)
        zetas.append(est.fitted_zeta * 1e6)
        n_patches.append(len(c.patches))
    print(
        f"{density_mm2:18.0f} {density * g.total_area():6.0f} {np.mean(n_patches):8.1f} "
        f"{np.mean(zetas):10.1f} +- {np.std(zetas):.1f}"
    )

print()
print("patches saturate at whole electrodes for low densities, so zeta")
print("plateaus near the large-pad size; at high densities zeta tracks the")
print("shrinking cell size.  The boundary constraint is what caps the range.")
