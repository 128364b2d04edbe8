"""Analytic potentials and fields above the trap electrodes.

Each electrode is a polygon at fixed potential in an otherwise grounded
plane; the potential in the upper half-space is the subtended solid angle
times V/2pi.  This script shows the built-in layout, checks the analytic
field against finite differences, and prints per-electrode basis fields
on the ion axis.
"""

import numpy as np

from trapnoise import (
    default_trap_geometry,
    electrode_basis_fields,
    field_above_polygon,
    potential_above_polygon,
)

g = default_trap_geometry()

print("== built-in layout ==")
print(f"{len(g.electrodes)} electrodes, nominal gap {g.gap_width * 1e6:.0f} um")
for e in g.electrodes:
    x0, x1, y0, y1 = (v * 1e6 for v in e.shape.bounding_box())
    print(f"  {e.name:4s} spans x [{x0:6.0f}, {x1:6.0f}] um, y [{y0:6.0f}, {y1:6.0f}] um")

print("\n== solid-angle potential sanity ==")
dc9 = g.electrode("DC9").shape
for z_um in (10, 50, 100, 300, 1000):
    phi = potential_above_polygon(dc9, (0, 0, z_um * 1e-6), 1.0)
    print(f"  phi above DC9 at z = {z_um:4d} um: {phi:.5f} V (of 1 V applied)")

print("\n== analytic field vs finite differences ==")
pt = (30e-6, -20e-6, 80e-6)
analytic = field_above_polygon(dc9, pt, 1.0).as_array()
h = 1e-9
numeric = []
for k in range(3):
    hi, lo = list(pt), list(pt)
    hi[k] += h
    lo[k] -= h
    numeric.append(
        -(potential_above_polygon(dc9, hi, 1.0) - potential_above_polygon(dc9, lo, 1.0)) / (2 * h)
    )
numeric = np.array(numeric)
print(f"  analytic: {analytic.round(3)} V/m")
print(f"  numeric:  {numeric.round(3)} V/m")
print(f"  relative deviation: {np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric):.2e}")

print("\n== unit-potential basis fields on the ion axis (d = 100 um) ==")
fields = electrode_basis_fields(g, (0, 0, 100e-6))
print(f"  {'electrode':10s} {'Ex':>10s} {'Ey':>10s} {'Ez':>10s}  (V/m at 1 V)")
for name, f in fields.items():
    print(f"  {name:10s} {f.Ex:10.2f} {f.Ey:10.2f} {f.Ez:10.2f}")
print("note: x-mirror pairs (DC3/DC4, RF1/RF3, ...) cancel in Ex on the axis,")
print("and DC9's asymmetric extent gives it a planar-y projection.")
