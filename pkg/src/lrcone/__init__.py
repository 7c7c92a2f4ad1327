"""Light-cone laboratory for chains of coupled oscillators."""

__version__ = "0.1.0"

from .model import (Boundary, ModelSpec, PerturbationSpec, build_coupling,  # noqa: E402,F401
                    hypothesis_constants, s_gamma, validate_spec, velocity_bound_general)
from .dispersion import (DispersionParams, laurent_coefficients, m_gamma,  # noqa: E402,F401
                         omega_complex, velocity_bound_quadratic)
