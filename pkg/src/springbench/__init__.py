"""Virtual spring-bridged micro-tensile bench and its data-reduction pipeline."""

from .analysis import (MonotonicReport, SNModel, analyze_fatigue, analyze_monotonic, fit_modulus,
                       fit_sn, offset_yield, plastic_strain_range, reduce, uts)
from .config import BenchConfig, load_config, parse_config
from .curve import StressStrainCurve
from .mechanics import (EquilibriumPoint, calibrate_load_train, fixed_guided_beam_stiffness,
                        misalignment_attenuation, series_stiffness, solve_equilibrium)
from .model import (BilinearMaterial, LoadTrain, MaterialState, SensorSpec, SpecimenGeometry,
                    monotonic_curve, stress_update)
from .protocol import (FatigueProtocol, MonotonicProtocol, fatigue_waveform, monotonic_waveform,
                       protocol_sweep)
from .simulator import (Bench, FatigueOutcome, TestRecord, calibrate_fatigue_params, run_fatigue,
                        run_monotonic, sensor_read)

__version__ = "0.1.0"
