import json

import numpy as np
import pytest

from photon_router import RouterConfig, SchemaError, eval_amplitudes
from photon_router.io import parse_config
from photon_router.cli import cmd_eval, cmd_sweep, main, parse_grid
from photon_router.errors import UnknownParameter
from photon_router.model import ScatteringAmplitudes

RESONANT = {"channels": [{"omega": 0.0, "gamma_minus": 1.0, "gamma_plus": 1.0}], "carrier_k": 0.0, "epsilon": 0.01}
TWO = {"channels": [{"omega": 0.0, "gamma_minus": 1.0, "gamma_plus": 1.0}] * 2, "carrier_k": 0.0, "epsilon": 0.01}


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParseConfig:
    def test_resonant(self):
        cfg, pulse = parse_config(json.dumps(RESONANT))
        assert cfg.n == 1 and cfg.channels[0].omega - pulse.varpi == 0

    def test_negative_rate(self):
        doc = json.loads(json.dumps(RESONANT))
        doc["channels"][0]["gamma_minus"] = -1
        with pytest.raises(ValueError, match=r"channels\[0\]\.gamma_minus"):
            parse_config(doc)

    def test_missing_epsilon(self):
        doc = dict(RESONANT)
        del doc["epsilon"]
        with pytest.raises(SchemaError, match="epsilon"):
            parse_config(doc)

    @pytest.mark.parametrize("doc,key", [
        ({**RESONANT, "eps": 1}, "eps"),
        ({**RESONANT, "channels": [{"omega": 0, "gamma_minus": 1, "gamma_plus": 1, "phase": 0}]}, "phase"),
        ({**RESONANT, "channels": [{"omega": 0, "gamma_minus": 1}]}, "gamma_plus"),
        ({**RESONANT, "channels": []}, "channels"),
        ({**RESONANT, "channels": [{"omega": "0", "gamma_minus": 1, "gamma_plus": 1}]}, "omega"),
    ])
    def test_schema_errors(self, doc, key):
        with pytest.raises(SchemaError, match=key):
            parse_config(doc)

    def test_nonpositive_epsilon(self):
        with pytest.raises(ValueError):
            parse_config({**RESONANT, "epsilon": 0})

    def test_carrier_defaults_to_zero(self):
        doc = {k: v for k, v in RESONANT.items() if k != "carrier_k"}
        assert parse_config(doc)[1].varpi == 0


class TestEval:
    def test_resonant(self, tmp_path, capsys):
        code, out, _ = run(["eval", "--config", write(tmp_path, "c.json", RESONANT)], capsys)
        report = json.loads(out)
        assert code == 0
        assert report["p_out"] == [pytest.approx(1.0, abs=1e-15)]
        assert report["p_back"] == pytest.approx(0.0, abs=1e-15)

    def test_two_identical(self):
        report = json.loads(cmd_eval(parse_config(TWO)[0], 0.0))
        assert report["p_back"] == pytest.approx(1 / 9, abs=1e-14)
        assert report["p_out"] == [pytest.approx(4 / 9, abs=1e-14)] * 2

    def test_conservation_diagnostic(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 8))
            cfg = RouterConfig.from_arrays(rng.uniform(-3, 3, n), rng.uniform(0.1, 3, n), rng.uniform(0.1, 3, n))
            assert json.loads(cmd_eval(cfg, 0.3))["conservation"] == pytest.approx(1, abs=1e-9)

    def test_degenerate_exits_2(self, tmp_path, capsys):
        doc = {"channels": [{"omega": 0.0, "gamma_minus": 0.0, "gamma_plus": 0.0}], "epsilon": 0.1}
        with pytest.warns(UserWarning):
            code, _, err = run(["eval", "--config", write(tmp_path, "c.json", doc)], capsys)
        assert code == 2
        assert "DegenerateDenominator" in err

    def test_input_errors_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["eval", "--config", str(bad)], capsys)[0] == 1
        assert run(["eval", "--config", str(tmp_path / "missing.json")], capsys)[0] == 1
        doc = {**RESONANT, "extra": 1}
        assert run(["eval", "--config", write(tmp_path, "x.json", doc)], capsys)[0] == 1


class TestSweep:
    def test_row_count_and_header(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--config", write(tmp_path, "c.json", TWO),
                            "--grid", "ch1.omega:-5:5:11", "--grid", "ch2.omega:-5:5:11"], capsys)
        lines = out.splitlines()
        assert code == 0
        assert len(lines) == 122
        assert lines[0] == "ch1.omega,ch2.omega,p_back,p_out_1,p_out_2"

    def test_center_value(self):
        cfg, pulse = parse_config(TWO)
        axes = [parse_grid("ch1.omega:-5:5:11"), parse_grid("ch2.omega:-5:5:11")]
        rows = cmd_sweep(cfg, pulse, axes).splitlines()[1:]
        center = [float(x) for x in rows[5 * 11 + 5].split(",")]
        assert center[:2] == [0.0, 0.0]
        assert center[3] == pytest.approx(4 / 9, abs=1e-14)

    def test_row_major_order(self):
        cfg, pulse = parse_config(TWO)
        axes = [parse_grid("ch1.omega:0:1:2"), parse_grid("ch2.gamma_plus:0.5:2:3")]
        coords = [tuple(map(float, r.split(",")[:2])) for r in cmd_sweep(cfg, pulse, axes).splitlines()[1:]]
        assert coords == [(0, 0.5), (0, 1.25), (0, 2), (1, 0.5), (1, 1.25), (1, 2)]

    def test_values_match_library(self):
        cfg, pulse = parse_config(TWO)
        rows = cmd_sweep(cfg, pulse, [parse_grid("carrier_k:-2:2:9")]).splitlines()[1:]
        for row in rows:
            k, *probs = map(float, row.split(","))
            np.testing.assert_allclose(probs, np.abs(eval_amplitudes(cfg, k).as_array()) ** 2, atol=1e-15)

    def test_seventeen_digits(self):
        cfg, pulse = parse_config(TWO)
        row = cmd_sweep(cfg, pulse, [parse_grid("ch1.omega:0.1:0.3:3")]).splitlines()[2]
        assert all(float(repr(float(x))) == float(x) for x in row.split(","))
        assert "0.20000000000000001" in row

    def test_workers_do_not_change_output(self, tmp_path):
        cfg, pulse = parse_config(TWO)
        axes = [parse_grid("ch1.omega:-5:5:21"), parse_grid("ch1.gamma_plus:0.01:5:17")]
        assert cmd_sweep(cfg, pulse, axes, workers=1) == cmd_sweep(cfg, pulse, axes, workers=4)

    @pytest.mark.parametrize("spec", ["ch1.phase:0:1:3", "ch3.omega:0:1:3", "omega:0:1:3"])
    def test_unknown_parameter(self, spec, tmp_path, capsys):
        cfg, pulse = parse_config(TWO)
        with pytest.raises(UnknownParameter):
            cmd_sweep(cfg, pulse, [parse_grid(spec)])
        code, _, err = run(["sweep", "--config", write(tmp_path, "c.json", TWO), "--grid", spec], capsys)
        assert code == 1 and "UnknownParameter" in err

    def test_bad_grid(self):
        for spec in ("ch1.omega:0:1", "ch1.omega:0:1:1", "ch1.omega:a:1:3"):
            with pytest.raises(ValueError):
                parse_grid(spec)


class TestEvolve:
    def test_resonant(self, tmp_path, capsys):
        code, out, _ = run(["evolve", "--config", write(tmp_path, "c.json", RESONANT), "--stride", "200"], capsys)
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "t,re_beta_1,im_beta_1,flux_1,emitter_norm"
        assert lines[-1].startswith("# summary p_back=")
        rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:-1]])
        assert 0.95 <= rows[-1, 3] <= 1.0
        assert np.all(rows[:, 4] <= 1 + 1e-6)

    def test_undriven(self, tmp_path, capsys):
        doc = {"channels": [{"omega": 0.0, "gamma_minus": 0.0, "gamma_plus": 1.0}], "epsilon": 0.1}
        with pytest.warns(UserWarning):
            code, out, _ = run(["evolve", "--config", write(tmp_path, "c.json", doc),
                                "--t-end", "10", "--dt", "0.01", "--stride", "100"], capsys)
        rows = np.array([[float(x) for x in line.split(",")] for line in out.splitlines()[1:-1]])
        assert code == 0
        assert np.all(rows[:, 1:3] == 0)

    def test_not_converged_keeps_partial_file(self, tmp_path, capsys):
        path = tmp_path / "traj.csv"
        code, _, err = run(["evolve", "--config", write(tmp_path, "c.json", RESONANT), "--t-end", "5",
                            "--dt", "0.01", "--out", str(path)], capsys)
        text = path.read_text().splitlines()
        assert code == 2
        assert text[-1].startswith("# NOT_CONVERGED emitter_norm=")
        assert len(text) == 2 + 501

    def test_unstable_step(self, tmp_path, capsys):
        code, _, err = run(["evolve", "--config", write(tmp_path, "c.json", RESONANT), "--t-end", "5",
                            "--dt", "0.5"], capsys)
        assert code == 2 and "StabilityViolation" in err


class TestDesign:
    def test_uniform_four(self, tmp_path, capsys):
        target = write(tmp_path, "t.json", {"p_back": 0.0, "p_out": [0.25] * 4})
        code, out, _ = run(["design", "--target", target], capsys)
        report = json.loads(out)
        assert code == 0
        assert report["residual"] <= 1e-8
        assert len(report["config"]["channels"]) == 4

    def test_full_reflection(self, tmp_path, capsys):
        target = write(tmp_path, "t.json", {"p_back": 1.0, "p_out": [0.0, 0.0, 0.0]})
        report = json.loads(run(["design", "--target", target], capsys)[1])
        assert report["residual"] <= 1e-6

    def test_deterministic_bytes(self, tmp_path, capsys):
        target = write(tmp_path, "t.json", {"p_back": 0.2, "p_out": [0.5, 0.3]})
        argv = ["design", "--target", target, "--budget", "2000", "--seed", "5"]
        assert run(argv, capsys)[1] == run(argv, capsys)[1]

    def test_exhausted_budget_exits_0(self, tmp_path, capsys):
        target = write(tmp_path, "t.json", {"p_back": 0.0, "p_out": [1.0]})
        space = write(tmp_path, "s.json", {"frozen": {"ch1.gamma_plus": 0.0}})
        code, out, _ = run(["design", "--target", target, "--space", space, "--budget", "200"], capsys)
        report = json.loads(out)
        assert code == 0
        assert not report["converged"] and report["residual"] > 0.1

    def test_malformed_target(self, tmp_path, capsys):
        target = write(tmp_path, "t.json", {"p_back": 0.5, "p_out": [0.7]})
        assert run(["design", "--target", target], capsys)[0] == 1


class TestValidate:
    def test_default_passes(self, capsys):
        code, out, _ = run(["validate"], capsys)
        report = json.loads(out)
        assert code == 0 and report["pass"]
        assert report["n1_deviation"] <= 1e-12
        assert max(report["max_dev_dense"], report["max_dev_rank_one"]) <= 1e-10
        assert report["time_domain_deviation"] <= 0.05

    def test_corrupted_evaluator(self):
        from photon_router.cli import cmd_validate

        def broken(config, k):
            amps = eval_amplitudes(config, k)
            if config.n < 3:
                return amps
            return ScatteringAmplitudes(amps.k, amps.alpha_back, (amps.alpha_out[0] * 1.001,) + amps.alpha_out[1:])

        text, code = cmd_validate(None, None, trials=50, seed=0, evaluator=broken)
        report = json.loads(text)
        assert code == 2
        assert "oracle_equivalence" in report["failures"]
        assert report["worst_case"]["n"] >= 3
        assert report["worst_case"]["deviation"] > 1e-10


class TestManifest:
    @pytest.mark.parametrize("argv", [
        ["eval"],
        ["sweep", "--grid", "ch1.omega:-1:1:5", "--grid", "ch2.gamma_plus:0.5:1.5:3"],
        ["evolve", "--stride", "500"],
        ["validate", "--trials", "10"],
    ])
    def test_replay_identical(self, argv, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", TWO)
        first, manifest = tmp_path / "first.out", tmp_path / "run.json"
        assert main(argv + ["--config", cfg, "--out", str(first), "--manifest", str(manifest)]) == 0
        second = tmp_path / "second.out"
        assert main(["replay", str(manifest), "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_replay_design(self, tmp_path):
        target = write(tmp_path, "t.json", {"p_back": 0.0, "p_out": [0.5, 0.5]})
        first, manifest, second = tmp_path / "a", tmp_path / "m.json", tmp_path / "b"
        assert main(["design", "--target", target, "--budget", "1000", "--out", str(first),
                     "--manifest", str(manifest)]) == 0
        doc = json.loads(manifest.read_text())
        assert doc["rng_seed"] == 0 and doc["subcommand"] == "design"
        assert main(["replay", str(manifest), "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
