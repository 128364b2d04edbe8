"""Can electrode-correlated voltage noise explain a d^-2.6 distance scan?

Simulates the field noise produced by a fixed voltage-noise amplitude on
individual electrodes (the distance dependence and polarization are set
purely by the geometry), then runs the joint all-electrode fit against a
smooth 2:1-polarized power law and shows that no amplitude assignment
reproduces it.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from trapnoise import (
    ElectrodeNoiseSpec,
    ModeDirection,
    SpectralDensityPoint,
    default_trap_geometry,
    fit_electrode_amplitudes,
    technical_SE_curve,
)
from trapnoise.core import REFERENCE_ANGULAR_FREQUENCY as W

g = default_trap_geometry()
distances = np.geomspace(50e-6, 300e-6, 40)

print("== single-electrode curves (3 uV/sqrt(Hz)) ==")
fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharey=True)
for ax, name in zip(axes, ("DC1", "DC9", "RF1")):
    curve = technical_SE_curve(g, ElectrodeNoiseSpec({name: 3e-6}), distances)
    ax.loglog(distances * 1e6, curve[:, 1], "b--", label="planar y")
    ax.loglog(distances * 1e6, curve[:, 2], "r:", label="normal")
    ax.set_title(name)
    ax.set_xlabel("d (um)")
    ratio = curve[:, 2] / curve[:, 1]
    print(f"  {name}: Sz/Sy varies x{ratio.max() / ratio.min():.1f} over the scan")
axes[0].set_ylabel("S_E (V^2 m^-2 Hz^-1)")
axes[0].legend()
fig.tight_layout()
fig.savefig("technical_noise_curves.png", dpi=150)
print("  saved technical_noise_curves.png")

print("\n== joint fit against a smooth power law ==")
data = []
for d in np.geomspace(50e-6, 300e-6, 10):
    base = 1e-12 * (d / 1e-4) ** -2.6
    data.append(SpectralDensityPoint(float(d), W, ModeDirection.PLANAR_Y, base, 0.05 * base))
    data.append(SpectralDensityPoint(float(d), W, ModeDirection.NORMAL, 2 * base, 0.1 * base))
spec, report = fit_electrode_amplitudes(g, data)
print(f"  best-fit reduced chi2 = {report.reduced_chi2:.1f} (>> 1: no agreement)")
print("  fitted amplitudes (uV/sqrt(Hz)):")
for name, a in spec.amplitudes.items():
    if a > 1e-9:
        print(f"    {name:4s} {a * 1e6:6.2f}")
if report.degenerate_groups:
    print(f"  degenerate groups at the ion position: {report.degenerate_groups}")
print("conclusion: electrode-correlated noise cannot assemble a d^-2.6,")
print("constant-polarization scan; the data in that shape must be surface noise.")
