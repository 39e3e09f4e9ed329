"""Time-stepped virtual bench: protocol -> load train -> film, with quantised sensors
and Basquin/Goodman/Miner fatigue damage."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import life
from .errors import InvalidInputError, SolverError, UnderdeterminedError
from .mechanics import solve_equilibrium
from .model import MaterialState
from .protocol import FatigueProtocol, fatigue_waveform, monotonic_waveform, preload_ramp

log = logging.getLogger(__name__)

COMPLETED = "completed"
SPECIMEN_FAILED = "specimen_failed"
SOLVER_ERROR = "solver_error"

DISP, LOAD = "disp", "load"
STABLE_TOL = 1e-9


@dataclass(frozen=True)
class Bench:
    geometry: object
    material: object
    train: object
    sensors: object

    @property
    def seed(self):
        return self.sensors.rng_seed


@dataclass(frozen=True)
class Termination:
    status: str = COMPLETED
    time: float | None = None
    sample_index: int | None = None
    message: str = ""


@dataclass
class TestRecord:
    """Raw bench output: actuator command plus the three measured channels."""

    __test__ = False  # not a pytest class

    bench: Bench
    protocol: object
    t: np.ndarray
    u_act: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    force: np.ndarray
    termination: Termination = field(default_factory=Termination)
    outcome: object = None

    @property
    def kind(self):
        return "fatigue" if isinstance(self.protocol, FatigueProtocol) else "monotonic"

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class CycleStats:
    sigma_max: float
    sigma_min: float
    delta_eps_pl: float

    @property
    def sigma_mean(self):
        return 0.5 * (self.sigma_max + self.sigma_min)

    @property
    def sigma_amp(self):
        return 0.5 * (self.sigma_max - self.sigma_min)


@dataclass(frozen=True)
class FatigueOutcome:
    protocol: FatigueProtocol
    cycles: float
    failed: bool
    stats: CycleStats
    damage: float
    reason: str = ""

    @property
    def status(self):
        return "failed" if self.failed else "runout"

    def equivalent_amplitude(self, uts):
        return life.goodman(self.stats.sigma_amp, self.stats.sigma_mean, uts)


def _rngs(seed):
    scatter, dx, dy, force = np.random.SeedSequence(seed).spawn(4)
    return {"scatter": np.random.default_rng(scatter), "dx": np.random.default_rng(dx),
            "dy": np.random.default_rng(dy), "force": np.random.default_rng(force)}


def sensor_read(true_value, spec, channel, rng):
    """Add seeded Gaussian noise, then quantise to the channel resolution (half-even)."""
    if channel == DISP:
        res, std = spec.disp_resolution, spec.disp_noise_std
    elif channel == LOAD:
        res, std = spec.load_resolution, spec.load_noise_std
    else:
        raise InvalidInputError(f"unknown sensor channel {channel!r}")
    x = np.asarray(true_value, dtype=float)
    if std > 0:
        x = x + rng.normal(0.0, std, size=x.shape)
    out = np.round(x / res) * res
    return float(out) if out.ndim == 0 else out


def specimen_material(bench, rng):
    """Draw this specimen's yield strength from the configured scatter."""
    m = bench.material
    if m.yield_strength_std == 0:
        return m
    sy = m.yield_strength + m.yield_strength_std * rng.standard_normal()
    sy = min(max(sy, 0.05 * m.yield_strength), 0.999 * m.uts)
    return dataclasses.replace(m, yield_strength=float(sy), yield_strength_std=0.0,
                               tangent_modulus=m.tangent_modulus)


def _measure(bench, rngs, dx, dy, force):
    s = bench.sensors
    return (sensor_read(dx, s, DISP, rngs["dx"]), sensor_read(dy, s, DISP, rngs["dy"]),
            sensor_read(force, s, LOAD, rngs["force"]))


def run_monotonic(bench, protocol):
    """One equilibrium solve per waveform sample; stops when film stress reaches the UTS."""
    rngs = _rngs(bench.seed)
    material = specimen_material(bench, rngs["scatter"])
    t, u = monotonic_waveform(protocol)
    n = len(t)
    dx, dy, force = np.zeros(n), np.zeros(n), np.zeros(n)
    state = MaterialState()
    term = Termination()
    last = n
    for i in range(n):
        try:
            pt, state = solve_equilibrium(bench.train, bench.geometry, material, state, float(u[i]))
        except SolverError as exc:
            exc.sample_index = i
            term = Termination(SOLVER_ERROR, float(t[i]), i, str(exc))
            last = i
            break
        dx[i], dy[i], force[i] = pt.delta_x, pt.delta_y, pt.force
        if pt.stress >= material.uts:
            term = Termination(SPECIMEN_FAILED, float(t[i]), i, "film stress reached UTS")
            last = i + 1
            break
    sl = slice(0, last)
    mdx, mdy, mf = _measure(bench, rngs, dx[sl], dy[sl], force[sl])
    used = dataclasses.replace(bench, material=material)
    return TestRecord(used, protocol, t[sl].copy(), u[sl].copy(), mdx, mdy, mf, term)


class _CycleRunner:
    def __init__(self, bench, material, protocol):
        self.bench, self.material, self.p = bench, material, protocol

    def solve(self, state, u):
        b = self.bench
        return solve_equilibrium(b.train, b.geometry, self.material, state, float(u))

    def cycle(self, state, k):
        """Run cycle ``k`` from the trough; returns (state, stats, trace, overloaded)."""
        _, u = fatigue_waveform(self.p, k)
        trace = np.zeros((len(u), 4))
        eps_p = [state.plastic_strain]
        overloaded = False
        for j, uj in enumerate(u):
            pt, state = self.solve(state, uj)
            trace[j] = (uj, pt.delta_x, pt.delta_y, pt.force)
            eps_p.append(state.plastic_strain)
            if j == 0:
                smax = smin = pt.stress
            smax, smin = max(smax, pt.stress), min(smin, pt.stress)
            if pt.stress >= self.material.uts:
                overloaded = True
        stats = CycleStats(smax, smin, max(eps_p) - min(eps_p))
        return state, stats, trace, overloaded


def _same_loop(a, b):
    scale = max(abs(a.sigma_max), abs(b.sigma_max), 1.0)
    return (abs(a.delta_eps_pl - b.delta_eps_pl) < STABLE_TOL
            and abs(a.sigma_max - b.sigma_max) <= STABLE_TOL * scale
            and abs(a.sigma_min - b.sigma_min) <= STABLE_TOL * scale)


def cycle_damage(material, stats):
    """Miner increment of one cycle; ``inf`` flags a mean-stress overload."""
    if stats.sigma_mean >= material.uts:
        return math.inf
    s_ar = life.goodman(stats.sigma_amp, stats.sigma_mean, material.uts)
    n_f = life.basquin_cycles(s_ar, material.fatigue_strength_coeff, material.fatigue_exponent)
    return 0.0 if math.isinf(n_f) else 1.0 / n_f


def run_fatigue(bench, protocol, shortcut=True, keep_record=True):
    """Displacement-controlled tension-tension fatigue run.

    Cycles are simulated one by one until the hysteresis loop repeats itself;
    from then on the per-cycle damage is constant and, with ``shortcut``, the
    remaining life is computed in closed form. Damage is summed exactly
    (as fractions of the float increments) so both paths agree to the cycle.

    Returns ``(FatigueOutcome, TestRecord | None)``; the record holds the
    preload, the first cycle and the last cycle.
    """
    if not isinstance(protocol, FatigueProtocol):
        raise InvalidInputError("run_fatigue needs a FatigueProtocol")
    if bench.material.fatigue_strength_coeff is None:
        raise InvalidInputError(f"material {bench.material.name!r} has no fatigue_strength_coeff")
    rngs = _rngs(bench.seed)
    material = specimen_material(bench, rngs["scatter"])
    runner = _CycleRunner(bench, material, protocol)
    p = protocol

    t_pre, u_pre = preload_ramp(p)
    state = MaterialState()
    pre = np.zeros((len(u_pre), 4))
    overloaded = False
    for j, uj in enumerate(u_pre):
        pt, state = runner.solve(state, uj)
        pre[j] = (uj, pt.delta_x, pt.delta_y, pt.force)
        overloaded |= pt.stress >= material.uts
    t0 = t_pre[-1] if len(t_pre) else 0.0

    damage = Fraction(0)
    first_trace = last_trace = None
    last_k = 0
    prev = stats = None
    failed, reason, n_cycles = False, "", p.max_cycles
    k = 0
    while k < p.max_cycles:
        if overloaded:
            failed, reason, n_cycles = True, "overload", k if k else 1
            if stats is None:
                stats = CycleStats(material.uts, material.uts, 0.0)
            break
        state, stats, trace, overloaded = runner.cycle(state, k)
        if first_trace is None:
            first_trace = trace
        last_trace, last_k = trace, k
        d = cycle_damage(material, stats)
        if overloaded or math.isinf(d):
            failed, reason, n_cycles = True, "overload", k + 1
            break
        damage += Fraction(d)
        if damage >= 1:
            failed, reason, n_cycles = True, "damage", k + 1
            break
        if shortcut and prev is not None and _same_loop(prev, stats):
            if d == 0:
                break
            remaining = -((damage - 1) // Fraction(d))  # ceil((1 - D) / d)
            if k + 1 + remaining <= p.max_cycles:
                failed, reason, n_cycles = True, "damage", k + 1 + remaining
                damage += remaining * Fraction(d)
            else:
                damage += (p.max_cycles - k - 1) * Fraction(d)
            break
        prev = stats
        k += 1
    if not failed:
        n_cycles = p.max_cycles
    d_float = min(float(damage), 1.0)
    state = dataclasses.replace(state, damage=d_float)
    outcome = FatigueOutcome(p, n_cycles, failed, stats, float(damage), reason or "runout")
    log.debug("fatigue d=%g A=%g -> %s after %d cycles", p.mean_displacement, p.amplitude_pp,
              outcome.status, n_cycles)

    record = None
    if keep_record:
        rows, times = [pre], [t_pre]
        if first_trace is not None:
            t1, _ = fatigue_waveform(p, 0)
            rows.append(first_trace)
            times.append(t0 + t1)
            final_k = n_cycles - 1
            if final_k > 0:
                # the stabilised loop repeats, so the last simulated cycle stands in for the final one
                tk, _ = fatigue_waveform(p, final_k)
                rows.append(last_trace)
                times.append(t0 + tk)
        data = np.concatenate(rows)
        t = np.concatenate(times)
        keep = np.concatenate([[True], np.diff(t) > 0]) if len(t) else np.zeros(0, bool)
        data, t = data[keep], t[keep]
        mdx, mdy, mf = _measure(bench, rngs, data[:, 1], data[:, 2], data[:, 3])
        term = Termination(SPECIMEN_FAILED, float(t[-1]), len(t) - 1, reason) if failed else Termination()
        record = TestRecord(dataclasses.replace(bench, material=material), p, t, data[:, 0].copy(),
                            mdx, mdy, mf, term, outcome)
    return outcome, record


def calibrate_fatigue_params(anchors, uts, b=None):
    """Basquin ``(sigma_f, b)`` from ``(sigma_mean, sigma_amp, N_f or None)`` anchors.

    ``None`` marks a runout, which carries no life information for the
    regression. With ``b`` fixed a single failure anchor suffices.
    """
    fails = [(sm, sa, n) for sm, sa, n in anchors if n is not None]
    if not fails or (b is None and len(fails) < 2):
        raise UnderdeterminedError(
            "calibration needs >= 2 failure anchors, or 1 anchor together with a fixed b")
    s_ar = [life.goodman(sa, sm, uts) for sm, sa, _ in fails]
    sigma_f, b_fit, _ = life.fit_basquin(s_ar, [n for *_, n in fails], b=b)
    return sigma_f, b_fit
