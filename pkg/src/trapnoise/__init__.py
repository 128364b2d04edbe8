"""Electric-field noise modeling above planar ion-trap electrodes.

Converts measured motional heating rates to field-noise spectral
densities, simulates per-electrode technical noise over trap geometries,
evaluates and fits spatially correlated patch-potential models (analytic
and explicit Poisson-Voronoi variants), and extracts distance/frequency
power-law exponents.
"""

from .core import (
    BE9,
    CA40,
    ELEMENTARY_CHARGE,
    HBAR,
    ION_REGISTRY,
    RABI_CALIBRATION_FACTOR,
    REFERENCE_ANGULAR_FREQUENCY,
    IonSpecies,
    Measurement,
    MeasurementMethod,
    ModeDirection,
    SpectralDensityPoint,
    SpectralDensityVector,
    apply_method_calibration,
    heating_rate_prefactor,
    heating_rate_to_SE,
    normalize_heating_rate,
    SE_to_heating_rate,
)
from .errors import FitError, GeometryError, InvalidInputError, TrapNoiseError
from .fitting import PowerLawFit, fit_distance_scaling, fit_frequency_scaling, fit_power_law
from .geometry import (
    Electrode,
    FieldVector,
    Polygon,
    TrapGeometry,
    default_trap_geometry,
    electrode_basis_fields,
    field_above_polygon,
    load_geometry,
    potential_above_polygon,
    potential_above_rectangle,
    solid_angle,
)
from .patch_analytic import (
    AnalyticPatchParams,
    analytic_SE,
    autocorrelation,
    fit_zeta,
    local_exponent,
    shape_integral,
)
from .patch_voronoi import (
    AutocorrelationEstimate,
    Patch,
    PatchConfiguration,
    estimate_autocorrelation,
    fit_patch_amplitudes,
    generate_patches,
    load_patches,
    patch_SE,
    save_patches,
    with_amplitudes,
)
from .technical_noise import (
    ElectrodeNoiseSpec,
    fit_electrode_amplitudes,
    technical_SE,
    technical_SE_curve,
    trap_axis,
)

__version__ = "0.1.0"
