"""Bench configuration files: YAML with explicit unit suffixes, normalised to SI on load.

A quantity is written as ``"<number> <unit>"``, e.g. ``"600 um"`` or
``"103 GPa"``. Only the units in ``UNITS`` are accepted, and conversion goes
through ``decimal`` so ``"2.7 um"`` becomes the double nearest to 2.7e-6.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from importlib import resources

import yaml

from .errors import ConfigError, InvalidInputError
from .mechanics import calibrate_load_train
from .model import BilinearMaterial, LoadTrain, SensorSpec, SpecimenGeometry
from .protocol import FatigueProtocol, MonotonicProtocol
from .simulator import Bench

UNITS = {
    "length": {"m": "1", "mm": "1e-3", "um": "1e-6", "µm": "1e-6", "μm": "1e-6", "nm": "1e-9"},
    "pressure": {"Pa": "1", "kPa": "1e3", "MPa": "1e6", "GPa": "1e9"},
    "force": {"N": "1", "mN": "1e-3", "uN": "1e-6", "µN": "1e-6", "μN": "1e-6"},
    "stiffness": {"N/m": "1", "kN/m": "1e3"},
    "velocity": {"m/s": "1", "um/s": "1e-6", "µm/s": "1e-6", "μm/s": "1e-6", "nm/s": "1e-9"},
    "frequency": {"Hz": "1", "kHz": "1e3"},
    "stress_per_length": {"Pa/m": "1", "MPa/um": "1e12", "MPa/µm": "1e12", "MPa/μm": "1e12"},
}
SI_UNIT = {"length": "m", "pressure": "Pa", "force": "N", "stiffness": "N/m", "velocity": "m/s",
           "frequency": "Hz", "stress_per_length": "Pa/m"}

GEOMETRY_FIELDS = {"gauge_length": "length", "width": "length", "thickness": "length"}
MATERIAL_FIELDS = {
    "youngs_modulus": "pressure", "unloading_modulus": "pressure", "yield_strength": "pressure",
    "yield_strength_std": "pressure", "uts": "pressure", "tangent_modulus": "pressure",
    "fatigue_strength_coeff": "pressure", "fatigue_exponent": None, "hardening": str, "name": str,
}
SENSOR_FIELDS = {"disp_resolution": "length", "load_resolution": "force", "disp_noise_std": "length",
                 "load_noise_std": "force"}
MONOTONIC_FIELDS = {"target_displacement": "length", "displacement_rate": "velocity", "unload": bool,
                    "n_cycles": int, "sample_rate": "frequency", "final_displacement": "length"}
FATIGUE_FIELDS = {"mean_displacement": "length", "amplitude_pp": "length", "frequency": "frequency",
                  "max_cycles": int, "samples_per_cycle": int}
SWEEP_FIELDS = {"means": "length", "amplitudes": "length", "frequency": "frequency",
                "max_cycles": int, "samples_per_cycle": int}


@dataclass(frozen=True)
class SweepSpec:
    means: tuple
    amplitudes: tuple
    options: tuple = ()

    def protocol_kwargs(self):
        return dict(self.options)


@dataclass(frozen=True)
class BenchConfig:
    name: str
    geometry: SpecimenGeometry
    material: BilinearMaterial
    train: LoadTrain
    sensors: SensorSpec
    seed: int
    monotonic: MonotonicProtocol | None = None
    fatigue: FatigueProtocol | None = None
    sweep: SweepSpec | None = None

    @property
    def protocol(self):
        return self.monotonic or self.fatigue or self.sweep

    def bench(self, seed=None):
        s = self.seed if seed is None else seed
        return Bench(self.geometry, self.material, self.train,
                     dataclasses.replace(self.sensors, rng_seed=s))

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=seed, sensors=dataclasses.replace(self.sensors, rng_seed=seed))


class _Ctx:
    """Maps dotted field paths to source lines for error messages."""

    def __init__(self, text, source):
        self.source = source
        self.lines = {}
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: {exc}") from None
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                self.lines[path] = k.start_mark.line + 1
                self._walk(v, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                path = f"{prefix}[{i}]"
                self.lines[path] = v.start_mark.line + 1
                self._walk(v, path)

    def fail(self, path, msg):
        line = self.lines.get(path) or self.lines.get(path.split("[")[0])
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {path}: {msg}")


def parse_quantity(value, dimension):
    """``"2.7 um"`` -> 2.7e-6. Bare numbers are taken as already SI."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {dimension} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a {dimension} quantity, got {value!r}")
    parts = value.split()
    if len(parts) == 1:
        try:
            return float(Decimal(parts[0]))
        except InvalidOperation:
            pass
    if len(parts) != 2:
        raise ValueError(f"expected '<number> <unit>', got {value!r}")
    number, unit = parts
    table = UNITS[dimension]
    if unit not in table:
        raise ValueError(f"unit {unit!r} is not a {dimension} unit (allowed: {', '.join(table)})")
    try:
        return float(Decimal(number) * Decimal(table[unit]))
    except InvalidOperation:
        raise ValueError(f"bad number {number!r}") from None


def format_quantity(value, dimension):
    return f"{value!r} {SI_UNIT[dimension]}"


def _amplitude_pp(value):
    """``"+-0.18 um"`` / ``"±0.18 um"`` -> peak-to-peak 0.36e-6."""
    s = value.strip()
    for prefix in ("+-", "±", "+/-"):
        if s.startswith(prefix):
            number, unit = s[len(prefix):].split()
            half = Decimal(number) * Decimal(UNITS["length"][unit])
            return float(2 * half)
    raise ValueError(f"expected '+-<number> <unit>', got {value!r}")


def _fields(ctx, path, raw, spec):
    if not isinstance(raw, dict):
        ctx.fail(path, "expected a mapping")
    out = {}
    for key, val in raw.items():
        sub = f"{path}.{key}"
        if key not in spec:
            ctx.fail(sub, f"unknown field (allowed: {', '.join(spec)})")
        kind = spec[key]
        if val is None:
            out[key] = None
            continue
        try:
            if kind is None:
                out[key] = float(val) if isinstance(val, (int, float)) and not isinstance(val, bool) else _bad(val)
            elif kind is int:
                if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
                    _bad(val)
                out[key] = int(val)
            elif kind is bool:
                if not isinstance(val, bool):
                    _bad(val)
                out[key] = val
            elif kind is str:
                out[key] = str(val)
            elif isinstance(val, list):
                out[key] = tuple(parse_quantity(v, kind) for v in val)
            else:
                out[key] = parse_quantity(val, kind)
        except (ValueError, KeyError) as exc:
            ctx.fail(sub, str(exc))
    return out


def _bad(val):
    raise ValueError(f"invalid value {val!r}")


def bundled_materials():
    text = resources.files("springbench.configs").joinpath("materials.yaml").read_text()
    return yaml.safe_load(text)


def bundled_configs():
    root = resources.files("springbench.configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml") and p.name != "materials.yaml")


def _material(ctx, raw):
    if isinstance(raw, str):
        raw = {"base": raw}
    if not isinstance(raw, dict):
        ctx.fail("material", "expected a material name or mapping")
    raw = dict(raw)
    params = {}
    base = raw.pop("base", None)
    if base is not None:
        library = bundled_materials()
        if base not in library:
            ctx.fail("material", f"unknown material {base!r} (bundled: {', '.join(library)})")
        lib_ctx = _Ctx("", f"bundled material {base}")
        params.update({k: v for k, v in _fields(lib_ctx, base, library[base], MATERIAL_FIELDS).items()
                       if v is not None})
        params.setdefault("name", base)
    params.update({k: v for k, v in _fields(ctx, "material", raw, MATERIAL_FIELDS).items() if v is not None})
    missing = [k for k in ("youngs_modulus", "yield_strength", "uts") if k not in params]
    if missing:
        ctx.fail("material", f"missing required values: {', '.join(missing)}")
    try:
        return BilinearMaterial(**params)
    except InvalidInputError as exc:
        ctx.fail("material", str(exc))


def _train(ctx, raw, geometry, material):
    if not isinstance(raw, dict):
        ctx.fail("load_train", "expected a mapping")
    raw = dict(raw)
    k1 = raw.pop("k_sensor", None)
    if k1 is None:
        ctx.fail("load_train", "k_sensor is required")
    try:
        k1 = parse_quantity(k1, "stiffness")
    except ValueError as exc:
        ctx.fail("load_train.k_sensor", str(exc))
    keys = [k for k in ("k_align", "calibration_target", "calibration_pair") if k in raw]
    if len(keys) != 1:
        ctx.fail("load_train", "give exactly one of k_align, calibration_target, calibration_pair")
    key = keys[0]
    val = raw.pop(key)
    if raw:
        ctx.fail(f"load_train.{next(iter(raw))}", "unknown field")
    try:
        if key == "k_align":
            return LoadTrain(k1, parse_quantity(val, "stiffness"))
        if key == "calibration_target":
            target = parse_quantity(val, "stress_per_length")
        else:
            if not (isinstance(val, list) and len(val) == 2):
                raise ValueError("calibration_pair must be [stress, displacement]")
            stress, disp = (_decimal_si(val[0], "pressure"), _decimal_si(val[1], "length"))
            target = float(stress / disp)
        return LoadTrain(k1, calibrate_load_train(target, geometry, material.youngs_modulus, k1))
    except (ValueError, InvalidInputError) as exc:
        ctx.fail(f"load_train.{key}", str(exc))


def _decimal_si(value, dimension):
    number, unit = str(value).split()
    return Decimal(number) * Decimal(UNITS[dimension][unit])


def load_config(source):
    """Load a bench config from a path or a bundled config name."""
    from pathlib import Path

    path = Path(source)
    if path.exists():
        text = path.read_text()
        name = path.stem
    elif str(source) in bundled_configs():
        text = resources.files("springbench.configs").joinpath(f"{source}.yaml").read_text()
        name = str(source)
    else:
        raise FileNotFoundError(f"no config file or bundled config named {source!r}")
    return parse_config(text, name)


def parse_config(text, name="config"):
    ctx = _Ctx(text, name)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: top level must be a mapping")
    allowed = {"name", "material", "geometry", "load_train", "sensors", "seed", "monotonic", "fatigue", "sweep"}
    for key in raw:
        if key not in allowed:
            ctx.fail(str(key), f"unknown section (allowed: {', '.join(sorted(allowed))})")
    for key in ("material", "geometry", "load_train"):
        if key not in raw:
            ctx.fail(key, "section is required")
    sections = [k for k in ("monotonic", "fatigue", "sweep") if k in raw]
    if len(sections) != 1:
        ctx.fail(sections[1] if len(sections) > 1 else "monotonic",
                 "exactly one of monotonic, fatigue, sweep is required")

    try:
        geometry = SpecimenGeometry(**_fields(ctx, "geometry", raw["geometry"], GEOMETRY_FIELDS))
    except (InvalidInputError, TypeError) as exc:
        ctx.fail("geometry", str(exc))
    material = _material(ctx, raw["material"])
    train = _train(ctx, raw["load_train"], geometry, material)
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        ctx.fail("seed", "seed must be a non-negative integer")
    try:
        sensors = SensorSpec(**_fields(ctx, "sensors", raw.get("sensors") or {}, SENSOR_FIELDS), rng_seed=seed)
    except InvalidInputError as exc:
        ctx.fail("sensors", str(exc))

    section = sections[0]
    body = dict(raw[section]) if isinstance(raw[section], dict) else ctx.fail(section, "expected a mapping")
    kw = {"name": str(raw.get("name", name)), "geometry": geometry, "material": material,
          "train": train, "sensors": sensors, "seed": seed}
    try:
        if section == "monotonic":
            kw["monotonic"] = MonotonicProtocol(**_fields(ctx, section, body, MONOTONIC_FIELDS))
        elif section == "fatigue":
            if "amplitude" in body:
                try:
                    body["amplitude_pp"] = _amplitude_pp(str(body.pop("amplitude")))
                except (ValueError, KeyError) as exc:
                    ctx.fail("fatigue.amplitude", str(exc))
            kw["fatigue"] = FatigueProtocol(**_fields(ctx, section, body, FATIGUE_FIELDS))
        else:
            if "amplitudes" in body and any(str(a).strip().startswith(("+-", "±", "+/-"))
                                            for a in body["amplitudes"] or []):
                try:
                    body["amplitudes"] = [f"{_amplitude_pp(str(a))!r} m" for a in body["amplitudes"]]
                except (ValueError, KeyError) as exc:
                    ctx.fail("sweep.amplitudes", str(exc))
            fields = _fields(ctx, section, body, SWEEP_FIELDS)
            means, amps = fields.pop("means", None), fields.pop("amplitudes", None)
            if not means or not amps:
                ctx.fail(section, "means and amplitudes lists are required")
            if not isinstance(means, tuple) or not isinstance(amps, tuple):
                ctx.fail(section, "means and amplitudes must be lists")
            kw["sweep"] = SweepSpec(means, amps, tuple(sorted(fields.items())))
    except (InvalidInputError, TypeError) as exc:
        ctx.fail(section, str(exc))
    return BenchConfig(**kw)


def _dump_fields(obj, spec):
    out = {}
    for key, kind in spec.items():
        if not hasattr(obj, key):
            continue
        val = getattr(obj, key)
        if val is None:
            continue
        if kind in (None, int, bool, str):
            out[key] = val
        else:
            out[key] = format_quantity(float(val), kind)
    return out


def config_to_dict(cfg):
    """Normalised (SI, fully resolved) form of a config; loads back to an equal config."""
    doc = {
        "name": cfg.name,
        "seed": cfg.seed,
        "geometry": _dump_fields(cfg.geometry, GEOMETRY_FIELDS),
        "material": _dump_fields(cfg.material, MATERIAL_FIELDS),
        "load_train": {"k_sensor": format_quantity(cfg.train.k_sensor, "stiffness"),
                       "k_align": format_quantity(cfg.train.k_align, "stiffness")},
        "sensors": _dump_fields(cfg.sensors, SENSOR_FIELDS),
    }
    if cfg.monotonic is not None:
        doc["monotonic"] = _dump_fields(cfg.monotonic, MONOTONIC_FIELDS)
    elif cfg.fatigue is not None:
        doc["fatigue"] = _dump_fields(cfg.fatigue, FATIGUE_FIELDS)
    else:
        sw = {"means": [format_quantity(v, "length") for v in cfg.sweep.means],
              "amplitudes": [format_quantity(v, "length") for v in cfg.sweep.amplitudes]}
        for key, val in cfg.sweep.options:
            kind = SWEEP_FIELDS[key]
            sw[key] = val if kind is int else format_quantity(val, kind)
        doc["sweep"] = sw
    return doc


def dump_config(cfg):
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, allow_unicode=True)
