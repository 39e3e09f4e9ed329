"""Lumped 1-D load train: alignment spring, film specimen and force-sensor beam in series.

Marker A sits on the sensor-beam end of the film, marker B on the actuator
end, so the sensor deflection is the marker-A displacement and the film
elongation is the marker difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, InvalidInputError, SolverError
from .model import _check_positive, _return_map

MAX_ITER = 200


def fixed_guided_beam_stiffness(youngs_modulus, width, thickness, length):
    """Tip stiffness ``12 E I / L**3`` of a fixed-guided beam, ``I = w t**3 / 12``."""
    _check_positive(youngs_modulus=youngs_modulus, width=width, thickness=thickness, length=length)
    inertia = width * thickness**3 / 12.0
    return 12.0 * youngs_modulus * inertia / length**3


def series_stiffness(ks):
    ks = list(ks)
    if not ks:
        raise InvalidInputError("series_stiffness needs at least one stiffness")
    for i, k in enumerate(ks):
        _check_positive(**{f"ks[{i}]": k})
    return 1.0 / sum(1.0 / k for k in ks)


def misalignment_attenuation(k_axial_align, k_lateral_align, k_specimen_lateral):
    """Fraction of a lateral grip offset that reaches the gauge section.

    The lateral path is the alignment spring in series with the specimen's
    lateral stiffness; the axial alignment stiffness does not enter the
    ratio but is validated because it is part of the same spring set.
    ``-log10`` of the result is the attenuation in orders of magnitude.
    """
    if k_lateral_align == math.inf:
        # rigid coupling passes the whole offset through
        _check_positive(k_axial_align=k_axial_align, k_specimen_lateral=k_specimen_lateral)
        return 1.0
    _check_positive(k_axial_align=k_axial_align, k_lateral_align=k_lateral_align,
                    k_specimen_lateral=k_specimen_lateral)
    return k_lateral_align / (k_lateral_align + k_specimen_lateral)


def attenuation_orders(ratio):
    return -math.log10(ratio)


def specimen_stiffness(geometry, youngs_modulus):
    return youngs_modulus * geometry.cross_section_area() / geometry.gauge_length


@dataclass(frozen=True)
class EquilibriumPoint:
    u_act: float
    delta_x: float
    delta_y: float
    force: float
    stress: float

    @property
    def delta_f(self):
        return self.delta_y - self.delta_x


def _film(material, state, strain):
    """Film response that cannot carry compression: a slack film buckles at zero force."""
    upd = _return_map(material, state, strain)
    if upd.stress < 0.0:
        return 0.0, 0.0, state
    return upd.stress, upd.tangent, upd.state


def solve_equilibrium(train, geometry, material, state, u_act, max_iter=MAX_ITER):
    """Quasi-static balance for an actuator displacement.

    Solves ``u_act = F/k_align + delta_f + F/k_sensor`` with the film force
    from the elastoplastic law. The unknown is the film strain: the residual
    is strictly increasing in strain even on a perfectly plastic plateau,
    where force alone would not determine the configuration.

    Returns ``(EquilibriumPoint, new_state)``.
    """
    if not math.isfinite(u_act):
        raise InvalidInputError(f"u_act must be finite, got {u_act!r}")
    if u_act < 0:
        raise InvalidInputError("u_act must be >= 0: the bench loads in tension only")
    area = geometry.cross_section_area()
    length = geometry.gauge_length
    comp = train.spring_compliance

    def residual(eps):
        sig, tan, new = _film(material, state, eps)
        force = sig * area
        return force - (u_act - length * eps) / comp, area * tan + length / comp, sig, new

    hi = u_act / length
    lo = min(hi, state.plastic_strain)
    r_lo = residual(lo)[0]
    step = max(hi - lo, 1e-12)
    while r_lo > 0:
        lo -= step
        step *= 2.0
        r_lo = residual(lo)[0]

    def converged(r, sig, eps):
        # force balance, or displacement balance at round-off level for very stiff springs
        return (abs(r) <= 1e-12 * max(1.0, sig * area)
                or abs(r) * comp <= 1e-15 * max(u_act, length * abs(eps)))

    eps = hi
    for _ in range(max_iter):
        r, dr, sig, new_state = residual(eps)
        if converged(r, sig, eps):
            break
        if r > 0:
            hi = eps
        else:
            lo = eps
        if hi - lo <= 4 * math.ulp(max(abs(hi), abs(lo))):
            break
        cand = eps - r / dr
        eps = cand if lo < cand < hi else 0.5 * (lo + hi)
    else:
        raise SolverError(f"equilibrium did not converge at u_act={u_act:.6e} m", residual=r)
    if not converged(r, sig, eps):
        raise SolverError(f"equilibrium residual {r:.3e} N above tolerance at u_act={u_act:.6e} m",
                          residual=r)

    delta_x = sig * area / train.k_sensor
    force = train.k_sensor * delta_x
    delta_y = delta_x + length * eps
    return EquilibriumPoint(u_act, delta_x, delta_y, force, sig), new_state


def calibrate_load_train(target, geometry, youngs_modulus, k_sensor):
    """Alignment stiffness that makes elastic film stress equal ``target * u_act``.

    ``target`` is in Pa per metre of actuator travel.
    """
    _check_positive(target=target, youngs_modulus=youngs_modulus, k_sensor=k_sensor)
    area = geometry.cross_section_area()
    k_spec = specimen_stiffness(geometry, youngs_modulus)
    inv = 1.0 / (area * target) - 1.0 / k_sensor - 1.0 / k_spec
    if inv <= 0:
        c_max = series_stiffness([k_sensor, k_spec]) / area
        raise InfeasibleError(
            f"target {target / 1e12:.6g} MPa/um needs a non-positive alignment compliance; "
            f"sensor beam ({k_sensor:.6g} N/m) and specimen ({k_spec:.6g} N/m) "
            f"in series cap it at {c_max / 1e12:.6g} MPa/um"
        )
    return 1.0 / inv
