"""Data reduction: raw marker/force records -> stress-strain -> modulus, offset yield,
UTS, plastic strain range; and S-N fitting with runouts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import life
from .curve import LOADING, UNLOADING, StressStrainCurve
from .errors import InvalidInputError, NoYieldError, OpenLoopError, RecordError, UnderdeterminedError
from .simulator import SPECIMEN_FAILED

__all__ = ["StressStrainCurve", "MonotonicReport", "CycleReport", "SNModel", "reduce",
           "fit_modulus", "offset_yield", "uts", "plastic_strain_range", "fit_sn",
           "analyze_monotonic", "analyze_fatigue", "MODULUS_NOTE"]

MODULUS_NOTE = ("modulus computed as E = F*L0/(A*delta_f): marker elongation is normalised "
                "by the gauge length L0 before dividing stress by strain")
MIN_FIT_POINTS = 5


def direction_flags(u_act):
    """True where the actuator command is rising; holds keep the previous direction.

    The first sample takes the direction of the first move.
    """
    u = np.asarray(u_act, dtype=float)
    flags = np.ones(len(u), dtype=bool)
    moves = np.diff(u)
    moves = moves[moves != 0]
    if len(u) and len(moves):
        flags[0] = moves[0] > 0
    for i in range(1, len(u)):
        du = u[i] - u[i - 1]
        flags[i] = flags[i - 1] if du == 0 else du > 0
    return flags


def reduce(record, geometry, k1):
    """Markers and sensor-beam deflection -> stress-strain.

    elongation = dy - dx, force = k1 * dx, stress = force / (w t),
    strain = elongation / L0.
    """
    if len(record) < 2:
        raise RecordError("record needs at least 2 samples")
    if geometry != record.bench.geometry:
        raise RecordError(f"geometry {geometry} does not match record metadata {record.bench.geometry}")
    if k1 != record.bench.train.k_sensor:
        raise RecordError(f"k1={k1} does not match record metadata k_sensor={record.bench.train.k_sensor}")
    elongation = record.dy - record.dx
    force = k1 * record.dx
    strain = elongation / geometry.gauge_length
    stress = force / geometry.cross_section_area()
    return StressStrainCurve(strain, stress, direction_flags(record.u_act))


def _first_segment(curve, loading):
    for start, stop, is_loading in curve.segments():
        if is_loading == loading and curve.stress[start:stop].max() > 0:
            return start, stop
    return None


def default_modulus_mask(curve, direction=LOADING):
    """Points of the first loading (unloading) run in the lower (upper) half of its stress range."""
    loading = direction == LOADING
    seg = _first_segment(curve, loading)
    mask = np.zeros(len(curve), dtype=bool)
    if seg is None:
        return mask
    start, stop = seg
    s = curve.stress[start:stop]
    peak = s.max()
    if loading:
        sel = s <= 0.5 * peak
    else:
        sel = s >= 0.5 * peak
    mask[start:stop] = sel
    return mask


def _ols(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), min(max(r2, 0.0), 1.0)


def fit_modulus(curve, window=None, direction=LOADING):
    """Ordinary least-squares slope and R^2 over a strain window of one direction.

    ``window=None`` uses the default selection of ``default_modulus_mask``.
    """
    if direction not in (LOADING, UNLOADING):
        raise InvalidInputError(f"direction must be {LOADING!r} or {UNLOADING!r}")
    if window is None:
        mask = default_modulus_mask(curve, direction)
        label = f"default {direction} window"
    else:
        lo, hi = window
        want = curve.loading if direction == LOADING else ~curve.loading
        mask = want & (curve.strain >= lo) & (curve.strain <= hi)
        label = f"{direction} window [{lo:.6g}, {hi:.6g}]"
    if mask.sum() < MIN_FIT_POINTS:
        raise InvalidInputError(f"{label} holds {int(mask.sum())} points; need >= {MIN_FIT_POINTS}")
    return _ols(curve.strain[mask], curve.stress[mask])


def offset_yield(curve, youngs_modulus, offset=0.002):
    """Stress where ``E (strain - offset)`` first meets the first loading run."""
    if not youngs_modulus > 0:
        raise InvalidInputError("youngs_modulus must be > 0")
    seg = _first_segment(curve, True) or (0, len(curve))
    eps = curve.strain[seg[0]:seg[1]]
    sig = curve.stress[seg[0]:seg[1]]
    g = sig - youngs_modulus * (eps - offset)
    for i in range(1, len(g)):
        if g[i - 1] > 0 and g[i] <= 0:
            s = g[i - 1] / (g[i - 1] - g[i])
            return float(sig[i - 1] + s * (sig[i] - sig[i - 1]))
    raise NoYieldError(f"curve never crosses the {offset:.3%} offset line")


def uts(curve):
    if len(curve) == 0:
        raise InvalidInputError("empty curve")
    sel = curve.stress[curve.loading] if curve.loading.any() else curve.stress
    return float(sel.max())


def _crossing(eps, sig, level):
    d = sig - level
    for i in range(1, len(d)):
        if d[i - 1] == 0:
            return float(eps[i - 1])
        if d[i - 1] * d[i] < 0 or d[i] == 0:
            s = d[i - 1] / (d[i - 1] - d[i])
            return float(eps[i - 1] + s * (eps[i] - eps[i - 1]))
    return None


def plastic_strain_range(loop, rel_tol=0.02, abs_tol=1e-5):
    """Width of one closed hysteresis loop at its mean stress.

    The loop must start and end at (nearly) the same strain: the gap may
    not exceed ``max(rel_tol * strain range, abs_tol)``.
    """
    eps, sig = loop.strain, loop.stress
    if len(eps) < 3:
        raise InvalidInputError("a loop needs at least 3 points")
    span = float(np.ptp(eps))
    gap = abs(float(eps[-1] - eps[0]))
    if gap > max(rel_tol * span, abs_tol):
        raise OpenLoopError(gap)
    mean = 0.5 * (sig.max() + sig.min())
    on_load = on_unload = None
    for start, stop, is_loading in loop.segments():
        # include the reversal point so a branch starts where the previous one ended
        lo = max(start - 1, 0)
        hit = _crossing(eps[lo:stop], sig[lo:stop], mean)
        if is_loading and on_load is None:
            on_load = hit
        elif not is_loading and on_unload is None:
            on_unload = hit
    if on_load is None or on_unload is None:
        return 0.0
    return abs(on_load - on_unload)


@dataclass
class MonotonicReport:
    E_loading: float
    uts: float
    sigma_y_offset02: float | None = None
    E_unloading: float | None = None
    elongation_at_failure: float | None = None
    diagnostics: dict = field(default_factory=dict)
    notes: list = field(default_factory=lambda: [MODULUS_NOTE])


@dataclass
class CycleReport:
    sigma_max: float
    sigma_min: float
    delta_eps_pl: float
    outcome: dict | None = None
    notes: list = field(default_factory=lambda: [MODULUS_NOTE])

    @property
    def sigma_mean(self):
        return 0.5 * (self.sigma_max + self.sigma_min)

    @property
    def sigma_amp(self):
        return 0.5 * (self.sigma_max - self.sigma_min)


def _window_info(curve, mask, r2):
    return {"strain_min": float(curve.strain[mask].min()), "strain_max": float(curve.strain[mask].max()),
            "n_points": int(mask.sum()), "r_squared": r2}


def analyze_monotonic(record):
    curve = reduce(record, record.bench.geometry, record.bench.train.k_sensor)
    e_load, r2 = fit_modulus(curve, None, LOADING)
    diag = {"loading_fit": _window_info(curve, default_modulus_mask(curve, LOADING), r2)}
    report = MonotonicReport(E_loading=e_load, uts=uts(curve), diagnostics=diag)
    try:
        report.sigma_y_offset02 = offset_yield(curve, e_load)
    except NoYieldError:
        diag["yield"] = "not reached"
    un_mask = default_modulus_mask(curve, UNLOADING)
    if un_mask.sum() >= MIN_FIT_POINTS:
        report.E_unloading, r2u = fit_modulus(curve, None, UNLOADING)
        diag["unloading_fit"] = _window_info(curve, un_mask, r2u)
    if record.termination.status == SPECIMEN_FAILED:
        report.elongation_at_failure = float(curve.strain[-1])
    return report


def analyze_fatigue(record):
    """Stress extrema and plastic strain range of the last recorded cycle."""
    curve = reduce(record, record.bench.geometry, record.bench.train.k_sensor)
    n = record.protocol.samples_per_cycle + 1
    if len(curve) < n:
        raise RecordError(f"fatigue record has {len(curve)} samples, fewer than one cycle ({n})")
    loop = curve.subset(slice(len(curve) - n, len(curve)))
    outcome = None
    if record.outcome is not None:
        o = record.outcome
        outcome = {"status": o.status, "cycles": o.cycles, "damage": o.damage, "reason": o.reason}
    return CycleReport(float(loop.stress.max()), float(loop.stress.min()),
                       plastic_strain_range(loop), outcome)


@dataclass
class SNModel:
    sigma_f: float
    b: float
    uts: float
    residuals: np.ndarray
    runouts: list = field(default_factory=list)
    flagged: list = field(default_factory=list)

    def predict_cycles(self, sigma_ar):
        return life.basquin_cycles(sigma_ar, self.sigma_f, self.b)

    def predict_amplitude(self, cycles):
        return life.basquin_amplitude(cycles, self.sigma_f, self.b)


def fit_sn(outcomes, uts, b=None):
    """Basquin fit over failures; runouts are kept aside and checked for consistency.

    A runout is flagged when the fitted curve predicts failure before the
    runout's cycle count.
    """
    outcomes = list(outcomes)
    fails = [o for o in outcomes if o.failed]
    runouts = [o for o in outcomes if not o.failed]
    if len(fails) < 2 and b is None:
        raise UnderdeterminedError(f"S-N fit needs >= 2 failures, got {len(fails)}")
    s_ar = [o.equivalent_amplitude(uts) for o in fails]
    sigma_f, b_fit, resid = life.fit_basquin(s_ar, [o.cycles for o in fails], b=b)
    model = SNModel(sigma_f, b_fit, uts, resid, runouts)
    for o in runouts:
        predicted = model.predict_cycles(o.equivalent_amplitude(uts))
        if predicted < o.cycles:
            model.flagged.append(o)
    return model
