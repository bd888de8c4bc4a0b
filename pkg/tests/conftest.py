import numpy as np
import pytest

from bulgekit.core_model import MaterialParams, PressureDeflectionCurve, stiffness_terms
from bulgekit.io import bundled_dataset, load_bundled_geometry

LABELS = ("1M", "2M", "3M", "4M", "5M", "1B", "2B", "3B", "4B", "5B")


def synthetic_curve(geometry, material, n=30, h_max_over_a=0.1, label="synthetic"):
    """Noise-free curve of the cubic model, deflections up to ``h_max_over_a * a``."""
    h = np.linspace(0.0, h_max_over_a * geometry.half_width_a, n + 1)[1:]
    linear, cubic = stiffness_terms(geometry, material)
    return PressureDeflectionCurve(linear * h + cubic * h**3, h, label)


def bundled_case(label, nu=0.3, lateral_uncertainty=0.005):
    """Geometry of a bundled membrane and the material it was reported with."""
    m = bundled_dataset()[label]
    geometry = load_bundled_geometry(label, lateral_uncertainty)
    return geometry, MaterialParams(m.youngs_modulus, nu, m.sigma0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
