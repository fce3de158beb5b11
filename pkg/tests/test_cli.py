import json
import subprocess
import sys

from stablab.cli import main

S3_FLAGS = [
    "--presentation", "<a, b | [a,b]>",
    "--metric", "sym_hamming",
    "--n", "3",
    "--images", "1,0,2;0,2,1",
]


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    if "{" in out:
        return code, json.loads(out[out.index("{"):])
    return code, out


class TestDefectCommand:
    def test_oracle_example(self, capsys):
        code, payload = run_cli(capsys, ["defect", *S3_FLAGS])
        assert code == 0
        assert payload["result"]["defect"] == 1.0
        assert payload["seed"] == 0
        assert payload["version"]

    def test_exact_hom_reports_zero(self, capsys):
        code, payload = run_cli(
            capsys,
            ["defect", "--presentation", "<a, b | [a,b]>", "--metric", "sym_hamming",
             "--n", "4", "--images", "1,2,3,0;1,2,3,0"],
        )
        assert code == 0
        assert payload["result"]["defect"] == 0.0

    def test_malformed_presentation_exits_2(self, capsys):
        code = main(["defect", "--presentation", "<a, b | [a,c]>", "--metric",
                     "sym_hamming", "--n", "3", "--images", "1,0,2;0,2,1"])
        assert code == 2

    def test_hom_json_input(self, capsys, tmp_path):
        code, payload = run_cli(capsys, ["defect", *S3_FLAGS])
        hom_path = tmp_path / "hom.json"
        _, homdist_payload = run_cli(capsys, ["homdist", *S3_FLAGS])
        hom_path.write_text(json.dumps(homdist_payload["result"]["witness"]))
        code, payload = run_cli(capsys, ["defect", "--hom", f"@{hom_path}"])
        assert code == 0
        assert payload["result"]["defect"] == 0.0


class TestHomdistCommand:
    def test_exact_value(self, capsys):
        code, payload = run_cli(capsys, ["homdist", *S3_FLAGS])
        assert code == 0
        assert payload["result"]["value"] == 2.0 / 3.0
        assert payload["result"]["method"] == "exact"

    def test_caps_exceeded_exits_4(self, capsys):
        code = main(["homdist", "--presentation", "<a, b | [a,b]>", "--metric",
                     "sym_hamming", "--n", "9",
                     "--images", "1,0,2,3,4,5,6,7,8;0,2,1,3,4,5,6,7,8"])
        assert code == 4

    def test_upper_method(self, capsys):
        code, payload = run_cli(capsys, ["homdist", *S3_FLAGS, "--upper"])
        assert code == 0
        assert payload["result"]["method"] == "upper_bound"
        assert payload["result"]["value"] >= 2.0 / 3.0 - 1e-12


class TestSolveCommand:
    def test_converged_and_certified(self, capsys, tmp_path):
        out = tmp_path / "trace.json"
        code, payload = run_cli(
            capsys, ["solve", *S3_FLAGS, "--M", "1.0", "--out", str(out)]
        )
        assert code == 0
        trace = payload["result"]["trace"]
        assert trace["converged"] and trace["certified"]
        assert trace["total_distance"] == 2.0 / 3.0
        assert json.loads(out.read_text()) == payload

    def test_small_M_exits_5_with_trace(self, capsys):
        code, payload = run_cli(capsys, ["solve", *S3_FLAGS, "--M", "0.1"])
        assert code == 5
        assert payload["result"]["trace"]["converged"] is False

    def test_exact_input_trivial(self, capsys):
        code, payload = run_cli(
            capsys,
            ["solve", "--presentation", "<a, b | [a,b]>", "--metric", "sym_hamming",
             "--n", "3", "--images", "1,2,0;1,2,0"],
        )
        assert code == 0
        assert payload["result"]["trace"]["steps"] == []


class TestRateCommand:
    def test_free_group_all_zero(self, capsys, tmp_path):
        out = tmp_path / "curve.csv"
        code, payload = run_cli(
            capsys,
            ["rate", "--presentation", "<a | >", "--metric", "sym_hamming", "--n", "4",
             "--grid", "0.1:0.9:4log", "--samples", "4", "--out", str(out)],
        )
        assert code == 0
        assert payload["result"]["exponent_fit"] is None
        assert payload["result"]["linear_lower"]["c_max"] == 0.0
        assert any("exponent fit unavailable" in w for w in payload["result"]["warnings"])
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "delta,D_emp,samples,method"
        assert len(lines) == 5

    def test_byte_identical_rerun(self, capsys, tmp_path):
        args = ["rate", "--presentation", "<a, b | [a,b]>", "--metric", "sym_hamming",
                "--n", "4,5", "--grid", "0.3:0.9:4log", "--samples", "8",
                "--seed", "11"]
        first_csv, first_json = tmp_path / "a.csv", tmp_path / "a.csv.json"
        second_csv, second_json = tmp_path / "b.csv", tmp_path / "b.csv.json"
        assert main([*args, "--out", str(first_csv)]) == 0
        assert main([*args, "--out", str(second_csv)]) == 0
        capsys.readouterr()
        assert first_csv.read_bytes() == second_csv.read_bytes()
        a = json.loads(first_json.read_text())
        b = json.loads(second_json.read_text())
        a["config"].pop("out", None), b["config"].pop("out", None)
        assert a == b

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "presentation = <a, b | [a,b]>\n"
            "family = sym_hamming\n"
            "n = 4\n"
            "grid = 0.3:0.9:3log  # three log bins\n"
            "samples = 6\n"
            "seed = 5\n"
            "method = exact\n"
        )
        code, payload = run_cli(capsys, ["rate", "--config", str(cfg)])
        assert code == 0
        assert payload["seed"] == 5
        assert len(payload["result"]["curve"]["grid"]) == 3

    def test_grid_parser_rejects_garbage(self, capsys):
        code = main(["rate", "--presentation", "<a | >", "--metric", "sym_hamming",
                     "--n", "3", "--grid", "nope", "--samples", "2"])
        assert code == 2


class TestCompareCommand:
    def test_added_generator_script(self, capsys, tmp_path):
        moves = tmp_path / "moves.json"
        moves.write_text(json.dumps([
            {"kind": "add_generator", "name": "c", "word": "a*b"},
        ]))
        code, payload = run_cli(
            capsys,
            ["compare", "--presentation", "<a, b | [a,b]>", "--moves", f"@{moves}",
             "--n", "3,4", "--grid", "0.3:0.9:3log", "--samples", "8"],
        )
        assert code == 0
        assert payload["result"]["presentation_2"]["generators"] == ["a", "b", "c"]
        assert payload["result"]["verdict"]["equivalent"] is True

    def test_invalid_certificate_exits_2(self, capsys, tmp_path):
        moves = tmp_path / "moves.json"
        moves.write_text(json.dumps([
            {"kind": "add_relator", "word": "a*b",
             "certificate": [{"conjugator": "a^0", "relator": 0, "sign": 1}]},
        ]))
        code = main(["compare", "--presentation", "<a, b | [a,b]>",
                     "--moves", f"@{moves}", "--n", "3", "--grid", "0.3:0.9:3log",
                     "--samples", "4"])
        assert code == 2


class TestCheckMetricCommand:
    def test_sym_audit_exact(self, capsys):
        code, payload = run_cli(
            capsys, ["check-metric", "--metric", "sym_hamming", "--n", "6",
                     "--trials", "200"]
        )
        assert code == 0
        assert payload["result"]["max_bi_invariance_violation"] == 0.0
        assert payload["result"]["passed"] is True

    def test_unitary_audit_within_tolerance(self, capsys):
        code, payload = run_cli(
            capsys, ["check-metric", "--metric", "u_schatten", "--n", "3", "--p", "1",
                     "--trials", "60"]
        )
        assert code == 0
        assert payload["result"]["max_bi_invariance_violation"] < 1e-9

    def test_bad_p_exits_2(self, capsys):
        code = main(["check-metric", "--metric", "u_schatten", "--n", "3",
                     "--p", "0.5", "--trials", "10"])
        assert code == 2


class TestSeedHandling:
    def test_env_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("STABLAB_SEED", "99")
        code, payload = run_cli(capsys, ["defect", *S3_FLAGS])
        assert payload["seed"] == 99

    def test_explicit_seed_wins(self, capsys, monkeypatch):
        monkeypatch.setenv("STABLAB_SEED", "99")
        code, payload = run_cli(capsys, ["defect", *S3_FLAGS, "--seed", "7"])
        assert payload["seed"] == 7


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "stablab", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "stablab" in proc.stdout
