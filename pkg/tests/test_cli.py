import json

import pytest

from singlebirth import build_model, compile_rate_expression, load_model_file
from singlebirth.cli import run
from singlebirth.errors import ModelSpecError


class TestExpressionGrammar:
    def test_arithmetic(self):
        fn = compile_rate_expression("2 * i + 1")
        assert fn(3) == 7.0

    def test_power_operator(self):
        fn = compile_rate_expression("(i + 1)^2")
        assert fn(3) == 16.0

    def test_unary_minus(self):
        assert compile_rate_expression("-i + 5")(2) == 3.0

    @pytest.mark.parametrize("text", [
        "j + 1",                # unknown variable
        "__import__('os')",     # call
        "i if i else 0",        # conditional
        "[1, 2]",               # container
        "i; i",                 # statement
    ])
    def test_rejected_constructs(self, text):
        with pytest.raises(ModelSpecError):
            compile_rate_expression(text)

    def test_divide_by_zero_at_eval(self):
        fn = compile_rate_expression("1 / i")
        with pytest.raises(ModelSpecError):
            fn(0)


class TestModelSpecs:
    def test_toml_builders(self, modelspecs_dir):
        model, echo = load_model_file(modelspecs_dir / "uniform_catastrophe.toml")
        assert echo["kind"] == "uniform_catastrophe"
        assert model.up(0) == 1.0
        assert model.row(3).down == {0: 1.0, 1: 1.0, 2: 1.0}

    def test_json_tabulated(self, modelspecs_dir):
        model, echo = load_model_file(modelspecs_dir / "small_tabulated.json")
        assert model.horizon == 4
        assert model.row(2).down == {0: 0.25, 1: 0.75}

    def test_expression_kind_offsets(self, modelspecs_dir):
        model, echo = load_model_file(modelspecs_dir / "double_down.toml")
        row = model.row(5)
        assert row.down == {4: 1.0, 3: 0.5}
        assert model.row(1).down == {0: 1.0}   # offset 2 falls off the state space

    def test_unknown_keys_rejected(self):
        with pytest.raises(ModelSpecError):
            build_model({"kind": "birth_death", "up": 1, "down": 2, "misc": 1})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ModelSpecError):
            build_model({"kind": "butcher"})

    def test_tabulated_row_keys_strict(self):
        with pytest.raises(ModelSpecError):
            build_model({"kind": "tabulated",
                         "rows": [{"up": 1.0, "sideways": 2.0}]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelSpecError):
            load_model_file(tmp_path / "nothing.toml")

    def test_invalid_toml(self, tmp_path):
        p = tmp_path / "broken.toml"
        p.write_text("kind = ")
        with pytest.raises(ModelSpecError):
            load_model_file(p)


def spec(modelspecs_dir, name):
    return str(modelspecs_dir / name)


class TestCommands:
    def test_analyze_json(self, modelspecs_dir, capsys):
        code = run(["analyze", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                    "--N", "300"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdicts"]["unique"]["status"] == "Holds"
        assert doc["verdicts"]["strongly_ergodic"]["status"] == "Fails"
        assert doc["quantities"]["E0_sigma0"] == pytest.approx(2.0)

    def test_analyze_human_contains_all_fields(self, modelspecs_dir, capsys):
        run(["analyze", "--model", spec(modelspecs_dir, "uniform_catastrophe.toml"),
             "--N", "200", "--format", "json"])
        doc = json.loads(capsys.readouterr().out)
        run(["analyze", "--model", spec(modelspecs_dir, "uniform_catastrophe.toml"),
             "--N", "200", "--format", "human"])
        human = capsys.readouterr().out
        for key in doc:
            assert f"{key}:" in human

    def test_sequences_csv(self, modelspecs_dir, capsys):
        code = run(["sequences", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                    "--N", "3"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,F0_sign,F0_log,F0,m_sign,m_log,m,d_sign,d_log,d"
        assert len(lines) == 5
        row1 = lines[2].split(",")
        assert float(row1[3]) == pytest.approx(2.0)    # F_1
        assert float(row1[6]) == pytest.approx(3.0)    # m_1

    def test_poisson(self, modelspecs_dir, capsys):
        code = run(["poisson", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                    "--N", "5", "--f", "1", "--g0", "0"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["residual"] <= 1e-9
        assert doc["g"][1] == pytest.approx(1.0)

    def test_moments(self, modelspecs_dir, capsys):
        code = run(["moments", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                    "--N", "300", "--ell", "2"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["E_i0"] == pytest.approx(8.0, rel=1e-6)

    def test_laplace(self, modelspecs_dir, capsys):
        code = run(["laplace", "--model", spec(modelspecs_dir, "catastrophe_2_3.toml"),
                    "--N", "300", "--lambda", "0.5"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["E"][0] == pytest.approx(8.0 / 15.0, abs=1e-9)
        assert doc["E"][5] == pytest.approx(0.8, abs=1e-9)

    def test_expmoment(self, modelspecs_dir, capsys):
        code = run(["expmoment", "--model", spec(modelspecs_dir, "uniform_catastrophe.toml"),
                    "--N", "300", "--lambda", "0.5"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["feasible"]["status"] == "Holds"
        assert doc["E"][0] == pytest.approx(4.0, abs=1e-9)

    def test_simulate_deterministic(self, modelspecs_dir, capsys):
        argv = ["simulate", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                "--stop", "return0", "--samples", "2000", "--seed", "3"]
        assert run(argv) == 0
        first = json.loads(capsys.readouterr().out)
        assert run(argv) == 0
        second = json.loads(capsys.readouterr().out)
        assert first == second
        assert first["mean"] == pytest.approx(2.0, abs=5 * first["std_error"])

    def test_reproduce_filter(self, capsys):
        code = run(["reproduce", "--filter", "catastrophe-laplace"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("[PASS] catastrophe-laplace")


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert run(["analyze"]) == 2
        capsys.readouterr()

    def test_model_error(self, capsys):
        assert run(["analyze", "--model", "/nonexistent/model.toml"]) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ModelSpecError"

    def test_numeric_error(self, modelspecs_dir, capsys):
        code = run(["expmoment", "--model", spec(modelspecs_dir, "uniform_catastrophe.toml"),
                    "--lambda", "5.0"])
        assert code == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "RateBoundViolated"

    def test_bad_stop_rule(self, modelspecs_dir, capsys):
        code = run(["simulate", "--model", spec(modelspecs_dir, "birth_death_1_2.toml"),
                    "--stop", "sideways"])
        assert code == 3
        capsys.readouterr()
