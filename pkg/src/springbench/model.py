"""Domain types for the specimen, film material, load train and sensors,
plus the 1-D elastoplastic stress update.

All quantities are SI. The constitutive law is bilinear: elastic slope
``youngs_modulus`` up to ``yield_strength``, then ``tangent_modulus`` on the
stress-strain curve. Once the film has yielded, elastic unloading and
reloading follow ``unloading_modulus`` (equal to the loading modulus unless
configured otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import StressStrainCurve
from .errors import InvalidInputError

ISOTROPIC = "isotropic"
KINEMATIC = "kinematic"

# strain at which the default hardening slope reaches the UTS
DEFAULT_UTS_STRAIN = 0.05
YIELD_TOL = 1e-12


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
            raise InvalidInputError(f"{name} must be a finite number, got {value!r}")
        if value <= 0:
            raise InvalidInputError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class SpecimenGeometry:
    thickness: float
    gauge_length: float = 600e-6
    width: float = 100e-6

    def __post_init__(self):
        _check_positive(thickness=self.thickness, gauge_length=self.gauge_length, width=self.width)

    def cross_section_area(self):
        return self.width * self.thickness


@dataclass(frozen=True)
class BilinearMaterial:
    """Bilinear elastoplastic film with Basquin fatigue parameters.

    ``tangent_modulus=None`` picks the slope that takes the monotonic curve
    to ``uts`` at 5 % total strain. ``fatigue_strength_coeff`` may be left
    unset for materials only used in monotonic tests.
    """

    youngs_modulus: float
    yield_strength: float
    uts: float
    tangent_modulus: float | None = None
    hardening: str = KINEMATIC
    fatigue_strength_coeff: float | None = None
    fatigue_exponent: float = -0.05
    unloading_modulus: float | None = None
    yield_strength_std: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        _check_positive(youngs_modulus=self.youngs_modulus, yield_strength=self.yield_strength,
                        uts=self.uts)
        if not self.yield_strength < self.uts:
            raise InvalidInputError("yield_strength must be below uts")
        if self.hardening not in (ISOTROPIC, KINEMATIC):
            raise InvalidInputError(f"hardening must be 'isotropic' or 'kinematic', got {self.hardening!r}")
        if self.unloading_modulus is None:
            object.__setattr__(self, "unloading_modulus", self.youngs_modulus)
        _check_positive(unloading_modulus=self.unloading_modulus)
        if self.tangent_modulus is None:
            eps_y = self.yield_strength / self.youngs_modulus
            if eps_y >= DEFAULT_UTS_STRAIN:
                raise InvalidInputError("yield strain exceeds 5 %; give tangent_modulus explicitly")
            h = (self.uts - self.yield_strength) / (DEFAULT_UTS_STRAIN - eps_y)
            object.__setattr__(self, "tangent_modulus", h)
        h = self.tangent_modulus
        if not (math.isfinite(h) and 0 <= h < min(self.youngs_modulus, self.unloading_modulus)):
            raise InvalidInputError("tangent_modulus must satisfy 0 <= H < E")
        if not (math.isfinite(self.fatigue_exponent) and self.fatigue_exponent < 0):
            raise InvalidInputError("fatigue_exponent must be negative")
        if self.fatigue_strength_coeff is not None:
            _check_positive(fatigue_strength_coeff=self.fatigue_strength_coeff)
        if not (math.isfinite(self.yield_strength_std) and self.yield_strength_std >= 0):
            raise InvalidInputError("yield_strength_std must be >= 0")

    @property
    def plastic_modulus(self):
        """Hardening modulus with respect to plastic strain."""
        e, h = self.unloading_modulus, self.tangent_modulus
        return e * h / (e - h)

    @property
    def yield_jump(self):
        # plastic-strain offset created at first yield when the unloading
        # modulus differs from the loading one; zero in the usual case
        return self.yield_strength * (1.0 / self.youngs_modulus - 1.0 / self.unloading_modulus)

    def elastic_limit_strain(self):
        return self.yield_strength / self.youngs_modulus

    def offset_yield_exact(self, offset=0.002):
        """Closed-form 0.2 % offset yield of the virgin monotonic curve."""
        e, h, sy = self.youngs_modulus, self.tangent_modulus, self.yield_strength
        return sy + h * e * offset / (e - h)


@dataclass(frozen=True)
class MaterialState:
    plastic_strain: float = 0.0
    backstress: float = 0.0
    accumulated_plastic_strain: float = 0.0
    damage: float = 0.0

    def __post_init__(self):
        for name in ("plastic_strain", "backstress", "accumulated_plastic_strain", "damage"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.accumulated_plastic_strain < 0:
            raise InvalidInputError("accumulated_plastic_strain must be >= 0")
        if not 0.0 <= self.damage <= 1.0:
            raise InvalidInputError("damage must lie in [0, 1]")

    @property
    def yielded(self):
        return self.accumulated_plastic_strain > 0.0


@dataclass(frozen=True)
class LoadTrain:
    """Sensor beam ``k_sensor`` and actuator-side alignment spring ``k_align`` (N/m)."""

    k_sensor: float
    k_align: float

    def __post_init__(self):
        _check_positive(k_sensor=self.k_sensor, k_align=self.k_align)

    @property
    def spring_compliance(self):
        return 1.0 / self.k_sensor + 1.0 / self.k_align


@dataclass(frozen=True)
class SensorSpec:
    disp_resolution: float = 1e-11
    load_resolution: float = 5e-5
    disp_noise_std: float = 0.0
    load_noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        _check_positive(disp_resolution=self.disp_resolution, load_resolution=self.load_resolution)
        for name in ("disp_noise_std", "load_noise_std"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be >= 0")


@dataclass(frozen=True)
class _Update:
    stress: float
    tangent: float
    state: MaterialState = field(repr=False)


def _return_map(material, state, strain):
    if not math.isfinite(strain):
        raise InvalidInputError(f"strain must be finite, got {strain!r}")
    e_load = material.youngs_modulus
    e_un = material.unloading_modulus
    k = material.plastic_modulus
    kinematic = material.hardening == KINEMATIC
    sy = material.yield_strength
    eps_p = state.plastic_strain
    alpha = state.backstress
    p = state.accumulated_plastic_strain
    jump = abs(material.yield_jump)

    if state.yielded:
        e_el = e_un
        radius = sy if kinematic else sy + k * (p - jump)
    else:
        e_el = e_load
        radius = sy

    trial = e_el * (strain - eps_p)
    f = abs(trial - alpha) - radius
    # relative slack absorbs round-off when a point on the surface is revisited
    if f <= YIELD_TOL * radius:
        return _Update(trial, e_el, state)

    sign = 1.0 if trial - alpha > 0 else -1.0
    eps_ref = eps_p
    if not state.yielded:
        # re-express the virgin state in terms of the post-yield elastic slope
        eps_ref = eps_p + sign * material.yield_jump
        trial = e_un * (strain - eps_ref)
        f = abs(trial - alpha) - radius
    dgamma = f / (e_un + k)
    new_eps_p = eps_ref + dgamma * sign
    if kinematic:
        new_alpha = alpha + k * dgamma * sign
        stress = new_alpha + sign * radius
    else:
        new_alpha = alpha
        stress = alpha + sign * (radius + k * dgamma)
    new_p = p + abs(new_eps_p - eps_p)
    new_state = MaterialState(new_eps_p, new_alpha, new_p, state.damage)
    return _Update(stress, e_un * k / (e_un + k), new_state)


def stress_update(material, state, strain_total):
    """Return-mapping update for a total strain; returns ``(stress, new_state)``."""
    upd = _return_map(material, state, float(strain_total))
    return upd.stress, upd.state


def monotonic_curve(material, max_strain, n_points, geometry=None):
    """Noise-free monotonic curve sampled uniformly in strain from zero.

    The elastic-limit point is inserted when it falls inside the range, so
    the piecewise-linear curve reproduces the knee exactly. ``geometry`` is
    accepted for symmetry with the bench API; stress-strain is size-free.
    """
    if not (math.isfinite(max_strain) and max_strain > 0):
        raise InvalidInputError("max_strain must be > 0")
    if int(n_points) != n_points or n_points < 2:
        raise InvalidInputError("n_points must be an integer >= 2")
    strains = np.linspace(0.0, max_strain, int(n_points))
    knee = material.elastic_limit_strain()
    if 0 < knee < max_strain and not np.any(strains == knee):
        strains = np.sort(np.append(strains, knee))
    state = MaterialState()
    stresses = np.empty_like(strains)
    for i, eps in enumerate(strains):
        stresses[i], state = stress_update(material, state, eps)
    return StressStrainCurve(strains, stresses, np.ones(len(strains), dtype=bool))
