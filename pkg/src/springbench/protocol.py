"""Actuator displacement waveforms for monotonic and tension-tension fatigue tests.

Fatigue amplitudes are stored peak-to-peak (``amplitude_pp``); a "+/- x"
amplitude corresponds to ``amplitude_pp = 2 x``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError


def _require(cond, msg):
    if not cond:
        raise ProtocolError(msg)


def _finite_positive(name, value):
    _require(isinstance(value, (int, float)) and math.isfinite(value) and value > 0,
             f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class MonotonicProtocol:
    """Triangular ramps ``0 -> target (-> 0)`` repeated ``n_cycles`` times.

    If ``final_displacement`` is set, a last loading ramp from zero to that
    value follows the cycles; it is how a load/unload test is carried on to
    fracture.
    """

    target_displacement: float
    displacement_rate: float = 0.1e-6
    unload: bool = False
    n_cycles: int = 1
    sample_rate: float = 10.0
    final_displacement: float | None = None

    def __post_init__(self):
        _finite_positive("displacement_rate", self.displacement_rate)
        _finite_positive("target_displacement", self.target_displacement)
        _finite_positive("sample_rate", self.sample_rate)
        _require(isinstance(self.n_cycles, int) and self.n_cycles >= 1, "n_cycles must be an integer >= 1")
        _require(self.unload or self.n_cycles == 1, "n_cycles > 1 requires unload=true")
        _require(self.samples_per_ramp(self.target_displacement) >= 10,
                 "sample_rate must give at least 10 samples per ramp")
        if self.final_displacement is not None:
            _finite_positive("final_displacement", self.final_displacement)
            _require(self.unload, "final_displacement requires unload=true")

    def samples_per_ramp(self, displacement):
        return math.ceil(displacement / self.displacement_rate * self.sample_rate - 1e-9)


@dataclass(frozen=True)
class FatigueProtocol:
    mean_displacement: float
    amplitude_pp: float
    frequency: float = 5.0
    max_cycles: int = 100_000
    samples_per_cycle: int = 64

    def __post_init__(self):
        _finite_positive("mean_displacement", self.mean_displacement)
        _require(isinstance(self.amplitude_pp, (int, float)) and math.isfinite(self.amplitude_pp)
                 and self.amplitude_pp >= 0, "amplitude_pp must be >= 0")
        _finite_positive("frequency", self.frequency)
        _require(isinstance(self.max_cycles, int) and self.max_cycles >= 1, "max_cycles must be an integer >= 1")
        _require(isinstance(self.samples_per_cycle, int) and self.samples_per_cycle >= 4
                 and self.samples_per_cycle % 2 == 0, "samples_per_cycle must be an even integer >= 4")
        _require(self.amplitude_pp / 2 <= self.mean_displacement,
                 f"A/2 > d: amplitude {self.amplitude_pp:.6g} m exceeds twice the mean "
                 f"{self.mean_displacement:.6g} m (tension-tension constraint)")

    @property
    def trough(self):
        return self.mean_displacement - self.amplitude_pp / 2

    @property
    def peak(self):
        return self.mean_displacement + self.amplitude_pp / 2

    @property
    def period(self):
        return 1.0 / self.frequency


def monotonic_waveform(p):
    """Return ``(t, u_act)`` arrays for a monotonic protocol, starting at (0, 0)."""
    n = p.samples_per_ramp(p.target_displacement)
    up = p.target_displacement * (np.arange(n + 1) / n)
    pieces = [up[:1]]
    for _ in range(p.n_cycles):
        pieces.append(up[1:])
        if p.unload:
            pieces.append(up[::-1][1:])
    if p.final_displacement is not None:
        m = p.samples_per_ramp(p.final_displacement)
        pieces.append(p.final_displacement * (np.arange(1, m + 1) / m))
    u = np.concatenate(pieces)
    # one uniform time step per ramp length; ramps are sampled at equal spacing in time
    dt = p.target_displacement / p.displacement_rate / n
    if p.final_displacement is None:
        t = np.arange(len(u)) * dt
    else:
        n_cyc = len(u) - m
        t_cyc = np.arange(n_cyc) * dt
        dt_f = p.final_displacement / p.displacement_rate / m
        t = np.concatenate([t_cyc, t_cyc[-1] + np.arange(1, m + 1) * dt_f])
    return t, u


def triangle(phase):
    """Unit triangle wave, -1 at phase 0, +1 at phase 1/2."""
    phase = np.asarray(phase, dtype=float)
    return np.where(phase <= 0.5, -1.0 + 4.0 * phase, 3.0 - 4.0 * phase)


def fatigue_waveform(p, cycle_index):
    """One triangular cycle starting and ending at the trough.

    Returns ``samples_per_cycle + 1`` samples; the last one coincides with
    the first sample of the next cycle.
    """
    _require(p.amplitude_pp / 2 <= p.mean_displacement, "A/2 > d")
    n = p.samples_per_cycle
    j = np.arange(n + 1)
    t = (cycle_index + j / n) / p.frequency
    u = p.mean_displacement + (p.amplitude_pp / 2) * triangle(j / n)
    return t, u


def preload_ramp(p):
    """Ramp from zero to the trough over half a period (empty when the trough is zero)."""
    if p.trough <= 0:
        return np.empty(0), np.empty(0)
    n = p.samples_per_cycle // 2
    j = np.arange(n + 1)
    return j / n * (0.5 * p.period), p.trough * (j / n)


@dataclass(frozen=True)
class Exclusion:
    mean_displacement: float
    amplitude_pp: float
    reason: str


def protocol_sweep(means, amplitudes, **protocol_kwargs):
    """Mean-major cartesian product of fatigue protocols.

    Returns ``(protocols, exclusions)``; infeasible pairs are reported in
    ``exclusions`` rather than dropped silently.
    """
    means, amplitudes = list(means), list(amplitudes)
    _require(means and amplitudes, "protocol_sweep needs non-empty mean and amplitude lists")
    protocols, exclusions = [], []
    for d, a in itertools.product(means, amplitudes):
        if a / 2 > d:
            exclusions.append(Exclusion(d, a, "A/2 > d"))
            continue
        protocols.append(FatigueProtocol(d, a, **protocol_kwargs))
    return protocols, exclusions
