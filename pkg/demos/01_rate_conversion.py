"""Heating rates to field-noise spectral densities and back.

Walks through the basic bookkeeping: the conversion prefactor, the
Rabi/sideband cross-calibration, and the reference convention used to
compare heating rates across different ions and trap frequencies.
"""

import math

from trapnoise import (
    BE9,
    CA40,
    Measurement,
    MeasurementMethod,
    ModeDirection,
    apply_method_calibration,
    heating_rate_prefactor,
    heating_rate_to_SE,
    normalize_heating_rate,
    SE_to_heating_rate,
)

W = 2 * math.pi * 1e6  # 1 MHz secular frequency

print("== conversion prefactor ==")
pref = heating_rate_prefactor(CA40, W)
print(f"e^2/(4 m hbar omega) for {CA40.name} at 1 MHz: {pref:.4e} (quanta/s per V^2/m^2/Hz)")
print(f"so 1e-13 V^2/m^2/Hz drives {pref * 1e-13:.2f} quanta/s of heating")

print("\n== a measured point ==")
m = Measurement(
    distance=100e-6,
    secular_frequency=W,
    direction=ModeDirection.NORMAL,
    method=MeasurementMethod.RABI,
    heating_rate=800.0,
    heating_rate_sigma=60.0,
)
calibrated = apply_method_calibration(m)
print(f"raw Rabi-method rate: {m.heating_rate:.0f}/s -> calibrated {calibrated.heating_rate:.0f}/s")

p = heating_rate_to_SE(calibrated, CA40)
print(f"S_E = {p.S_E:.3e} +- {p.S_E_sigma:.1e} V^2/m^2/Hz at d = {p.distance * 1e6:.0f} um")

back = SE_to_heating_rate(p, CA40, MeasurementMethod.RABI)
print(f"inverse conversion recovers {back.heating_rate:.6f}/s (round trip is exact)")

print("\n== cross-trap reference convention ==")
for ion, omega, rate in [(CA40, 2 * W, 10.0), (BE9, W, 40.0)]:
    mm = Measurement(100e-6, omega, ModeDirection.NORMAL, MeasurementMethod.SIDEBAND, rate)
    ref = normalize_heating_rate(mm, ion)
    print(
        f"{ion.name} at {omega / (2 * math.pi * 1e6):.0f} MHz, {rate:.0f}/s"
        f"  ->  {ref:.1f}/s at the Ca40 / 1 MHz reference"
    )
