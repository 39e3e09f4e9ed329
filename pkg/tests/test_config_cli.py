import json
import math
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from springbench import records
from springbench.cli import main
from springbench.config import (bundled_configs, bundled_materials, config_to_dict, dump_config, load_config,
                                parse_config, parse_quantity)
from springbench.errors import ConfigError

BUNDLED = bundled_configs()

CU_BASE = textwrap.dedent("""\
    name: tmp
    material: cu-300nm
    geometry:
      thickness: 300 nm
    load_train:
      k_sensor: 15000 N/m
      k_align: 25000 N/m
    seed: 1
    """)
CU_MONO = CU_BASE + "monotonic:\n  target_displacement: 1 um\n"


class TestUnits:
    @pytest.mark.parametrize("text, dim, si", [
        ("1 um", "length", 1e-6), ("300 nm", "length", 3e-7), ("0.01 nm", "length", 1e-11),
        ("1 MPa", "pressure", 1e6), ("103 GPa", "pressure", 103e9), ("0.05 mN", "force", 5e-5),
        ("15000 N/m", "stiffness", 15000.0), ("0.1 um/s", "velocity", 1e-7), ("5 Hz", "frequency", 5.0),
        ("111.1 MPa/um", "stress_per_length", 111.1e12), (2.5, "length", 2.5), ("1e-6", "length", 1e-6),
    ])
    def test_table(self, text, dim, si):
        assert parse_quantity(text, dim) == si

    def test_decimal_exact(self):
        # 2.7 um must equal the float literal, with no binary error from multiplying floats
        assert parse_quantity("2.7 um", "length") == 2.7e-6
        assert parse_quantity("474.2 MPa", "pressure") == 474.2e6

    @pytest.mark.parametrize("text", ["3 furlongs", "um 3", "1 MPa", "abc um", True])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_quantity(text, "length")

    @settings(deadline=None)
    @given(st.decimals(min_value=-1e6, max_value=1e6, allow_nan=False, places=6))
    def test_um_matches_decimal(self, d):
        assert parse_quantity(f"{d} um", "length") == float(d.scaleb(-6))


class TestConfig:
    def test_bundled_inventory(self):
        assert {"au-evap", "cu-validation", "cu-300nm", "tan-template"} <= set(bundled_materials())
        assert {"cu-validation", "au-evap", "cu-300nm-monotonic", "cu-300nm-fatigue-d2.7",
                "cu-300nm-sweep"} <= set(BUNDLED)

    def test_cu_validation_values(self):
        cfg = load_config("cu-validation")
        m = cfg.material
        assert (m.youngs_modulus, m.unloading_modulus, m.yield_strength, m.uts) == (103e9, 107e9, 474.2e6, 575e6)
        assert cfg.geometry.cross_section_area() == pytest.approx(3e-11)

    def test_amplitude_pp(self):
        cfg = load_config("cu-300nm-fatigue-d2.7")
        assert cfg.fatigue.amplitude_pp == pytest.approx(0.36e-6, rel=1e-15)
        assert cfg.fatigue.mean_displacement == 2.7e-6

    def test_calibration_pair(self):
        cfg = load_config("cu-300nm-sweep")
        assert cfg.train.k_align == pytest.approx(25537.19, rel=1e-6)

    @pytest.mark.parametrize("name", BUNDLED)
    def test_roundtrip(self, name):
        cfg = load_config(name)
        again = parse_config(dump_config(cfg), name)
        assert again == cfg
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_error_has_line_number(self):
        text = CU_MONO.replace("thickness: 300 nm", "thickness: 300 furlongs")
        with pytest.raises(ConfigError, match=r"^tmp:4: geometry.thickness: .*furlongs"):
            parse_config(text, "tmp")

    def test_unknown_material(self):
        with pytest.raises(ConfigError, match=r"tmp:2: material"):
            parse_config(CU_MONO.replace("cu-300nm", "unobtainium"), "tmp")

    def test_template_needs_values(self):
        with pytest.raises(ConfigError, match="youngs_modulus"):
            parse_config(CU_MONO.replace("cu-300nm", "tan-template"), "tmp")

    def test_template_with_values(self):
        text = CU_MONO.replace("material: cu-300nm\n", textwrap.dedent("""\
            material:
              base: tan-template
              youngs_modulus: 200 GPa
              yield_strength: 600 MPa
              uts: 800 MPa
            """))
        assert parse_config(text, "tmp").material.youngs_modulus == 200e9

    def test_train_needs_exactly_one_source(self):
        text = CU_MONO.replace("  k_align: 25000 N/m\n", "")
        with pytest.raises(ConfigError, match="load_train"):
            parse_config(text, "tmp")

    def test_one_protocol_section(self):
        text = CU_BASE + "monotonic:\n  target_displacement: 1 um\nfatigue:\n  mean_displacement: 1 um\n" \
                         "  amplitude: +-0.1 um\n"
        with pytest.raises(ConfigError, match="exactly one of monotonic, fatigue, sweep"):
            parse_config(text, "tmp")

    def test_seed_override(self):
        assert load_config("cu-validation").with_seed(99).bench().seed == 99


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCLI:
    def test_simulate_analyze(self, tmp_path, capsys):
        rec = tmp_path / "rec.csv"
        code, out, _ = run(["simulate", "--config", "cu-300nm-monotonic", "--out", rec], capsys)
        assert code == 0 and "specimen_failed" in out
        assert rec.read_text().splitlines()[0] == "t_s,u_act_m,dx_m,dy_m,F_N"
        assert records.sidecar_path(rec).exists()
        code, out, _ = run(["analyze", rec, "--out", tmp_path / "rep.json"], capsys)
        assert code == 0
        doc = json.loads((tmp_path / "rep.json").read_text())
        assert doc["uts_Pa"] == pytest.approx(575e6, rel=0.01)
        assert "gauge length" in out and (tmp_path / "rep.txt").exists()

    def test_fatigue_simulate(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "--config", "cu-300nm-fatigue-d2.7", "--out", tmp_path / "f.csv"], capsys)
        assert code == 0 and "failed after 33" in out
        code, out, _ = run(["analyze", tmp_path / "f.csv"], capsys)
        assert code == 0 and "sigma mean" in out

    def test_yield_not_reached(self, tmp_path, capsys):
        cfg = tmp_path / "elastic.yaml"
        cfg.write_text(CU_BASE + "monotonic:\n  target_displacement: 2 um\n")
        run(["simulate", "--config", cfg, "--out", tmp_path / "e.csv"], capsys)
        code, out, _ = run(["analyze", tmp_path / "e.csv", "--out", tmp_path / "e.json"], capsys)
        assert code == 0 and "not reached" in out
        assert json.loads((tmp_path / "e.json").read_text())["yield"] == "not reached"

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--config", tmp_path / "nope.yaml", "--out", tmp_path / "x.csv"], capsys)
        assert code == 4 and "nope.yaml" in err
        assert list(tmp_path.iterdir()) == []

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(CU_BASE.replace("300 nm", "300 parsecs") + "monotonic:\n  target_displacement: 1 um\n")
        code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path / "x.csv"], capsys)
        assert code == 2 and "bad:4:" in err
        assert not (tmp_path / "x.csv").exists()

    def test_truncated_record(self, tmp_path, capsys):
        rec = tmp_path / "rec.csv"
        run(["simulate", "--config", "cu-300nm-monotonic", "--out", rec], capsys)
        lines = rec.read_text().splitlines()
        lines[100] = lines[100].rsplit(",", 2)[0]
        rec.write_text("\n".join(lines[:101]) + "\n")
        code, _, err = run(["analyze", rec], capsys)
        assert code == 4 and "row 101" in err

    def test_unknown_plot_kind(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plotdata", str(tmp_path / "x.csv"), "--kind", "histogram"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_plotdata_kinds(self, tmp_path, capsys):
        rec = tmp_path / "rec.csv"
        run(["simulate", "--config", "cu-validation", "--out", rec], capsys)
        code, out, _ = run(["plotdata", rec, "--kind", "stress-strain"], capsys)
        assert code == 0 and out.splitlines()[0] == "strain,stress_MPa,series"
        assert {"loading", "unloading"} <= {line.rsplit(",", 1)[1] for line in out.splitlines()[1:]}
        code, out, _ = run(["plotdata", rec, "--kind", "waveform"], capsys)
        assert code == 0 and out.startswith("t_s,u_act_um,series\n")

    def test_sweep_and_sn_plotdata(self, tmp_path, capsys):
        code, _, _ = run(["sweep", "--config", "cu-300nm-sweep", "--out", tmp_path / "a"], capsys)
        assert code == 0
        summary = records.read_summary(tmp_path / "a" / "summary.csv")
        assert [o.failed for o in summary] == [False, False, False, True, True]
        code, out, _ = run(["plotdata", tmp_path / "a" / "summary.csv", "--kind", "s-n"], capsys)
        rows = out.splitlines()
        assert rows[0] == "log10_N,sigma_a_MPa,sigma_m_MPa,censored"
        assert len(rows) == 6 and sum(r.endswith(",1") for r in rows[1:]) >= 1
        fit = json.loads((tmp_path / "a" / "sn_fit.json").read_text())
        assert fit["sigma_f_Pa"] == pytest.approx(64.9e6, rel=0.01)
        assert fit["b"] == pytest.approx(-0.05, rel=0.01)
        # same seed -> byte-identical outputs, also through the worker pool
        run(["sweep", "--config", "cu-300nm-sweep", "--out", tmp_path / "b", "--jobs", 2], capsys)
        for name in ("summary.csv", "sn_plotdata.csv", "sn_fit.json", "exclusions.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_all_infeasible_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(CU_BASE + "sweep:\n  means: [0.1 um, 0.2 um]\n  amplitudes: [+-0.5 um]\n")
        code, _, err = run(["sweep", "--config", cfg, "--out", tmp_path / "o"], capsys)
        assert code == 2 and "infeasible" in err
        assert (tmp_path / "o" / "exclusions.csv").read_text().count("A/2 > d") == 2

    def test_calibrate(self, capsys):
        code, out, _ = run(["calibrate", "--config", "cu-300nm-sweep"], capsys)
        assert code == 0
        k = float(out.splitlines()[2].split()[1])
        assert k == pytest.approx(25537.19, rel=1e-6)

    def test_calibrate_infeasible(self, capsys):
        code, _, err = run(["calibrate", "--config", "cu-300nm-sweep", "--target", "200 MPa/um"], capsys)
        assert code == 2 and "MPa/um" in err

    def test_compliance(self, capsys):
        code, out, _ = run(["compliance", "series", "1000 N/m", "1000 N/m"], capsys)
        assert code == 0 and out == "k 500 N/m\n"
        code, out, _ = run(["compliance", "beam", "--E", "100 GPa", "--width", "10 um", "--thickness", "1 um",
                            "--length", "100 um"], capsys)
        assert float(out.split()[1]) == pytest.approx(1.0, rel=1e-12)
        code, out, _ = run(["compliance", "misalignment", "--axial", "1e4", "--lateral", "1e6",
                            "--specimen", "1"], capsys)
        assert code == 0 and math.isclose(float(out.split()[1]), 1e6 / (1e6 + 1))

    def test_deterministic_record_bytes(self, tmp_path, capsys):
        for d in ("a", "b"):
            run(["simulate", "--config", "cu-validation", "--seed", 7, "--out", tmp_path / d / "r.csv"], capsys)
        assert (tmp_path / "a" / "r.csv").read_bytes() == (tmp_path / "b" / "r.csv").read_bytes()
        assert (tmp_path / "a" / "r.meta.yaml").read_bytes() == (tmp_path / "b" / "r.meta.yaml").read_bytes()
        assert b"\r" not in (tmp_path / "a" / "r.csv").read_bytes()
