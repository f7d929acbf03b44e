"""Model-file parsing, report serialization, and CLI behavior."""

import json
import math

import numpy as np
import pytest

from quasifree import builders, cli, report
from quasifree.errors import MalformedInput


def write_model(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def shift_car_model(tmp_path, gauge=True):
    payload = {
        "label": "shift-car",
        "algebra": "car",
        "isometry": {"builder": "shift",
                     "params": {"n_sites_in": 3, "steps": 1}},
    }
    if gauge:
        payload["gauge"] = {"group": "u1", "charges": [1, 1, 1, 1],
                            "samples": 24, "seed": 5}
    return write_model(tmp_path, "shift_car.json", payload)


class TestReportHelpers:

    def test_comparison_carries_value_tolerance_pass(self):
        c = report.comparison(3e-9, 1e-8)
        assert c == {"value": 3e-9, "tolerance": 1e-8, "pass": True}
        assert report.comparison(2e-8, 1e-8)["pass"] is False

    def test_jsonify_infinity_and_complex(self):
        out = report.jsonify({"d": math.inf, "z": 1 - 2j})
        assert out["d"] == "infinite"
        assert out["z"] == {"re": 1.0, "im": -2.0}

    def test_canonical_json_is_sorted_with_trailing_newline(self):
        text = report.canonical_json({"b": 1, "a": [2, 3]})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_parse_matrix_flat_with_shape(self):
        obj = {"shape": [2, 2], "re": [1, 0, 0, 1], "im": [0, 2, 0, 0]}
        m = report.parse_complex_matrix(obj)
        assert m.shape == (2, 2)
        assert m[0, 1] == 2j

    def test_parse_matrix_nested_rows(self):
        obj = {"re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}
        assert np.array_equal(report.parse_complex_matrix(obj), np.eye(2))

    def test_parse_matrix_roundtrip(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
        back = report.parse_complex_matrix(report.complex_array_payload(m))
        assert np.allclose(back, m, atol=0)

    def test_parse_matrix_missing_imaginary_part(self):
        with pytest.raises(MalformedInput):
            report.parse_complex_matrix({"re": [[1.0]]})

    def test_parse_matrix_ragged_rows(self):
        with pytest.raises(MalformedInput):
            report.parse_complex_matrix(
                {"re": [[1, 0], [0]], "im": [[0, 0], [0, 0]]})

    def test_parse_matrix_shape_mismatch(self):
        with pytest.raises(MalformedInput):
            report.parse_complex_matrix(
                {"shape": [2, 2], "re": [1, 0, 0], "im": [0, 0, 0]})


class TestLoadModel:

    def test_builder_model(self, tmp_path):
        path = shift_car_model(tmp_path)
        model = report.load_model(path)
        assert model.algebra == "car"
        assert model.operator.domain.n_modes == 3
        assert model.operator.codomain.n_modes == 4
        assert model.gauge.kind == "u1"
        assert model.gauge_samples == 24
        assert len(model.source_digest) == 64

    def test_matrix_model_with_space(self, tmp_path):
        v = builders.shift(1)
        payload = {
            "algebra": "car",
            "isometry": {"matrix": report.complex_array_payload(v.matrix)},
            "space": {"domain_modes": 1, "codomain_modes": 2},
        }
        model = report.load_model(write_model(tmp_path, "m.json", payload))
        assert np.array_equal(model.operator.matrix, v.matrix)

    def test_matrix_inconsistent_with_space(self, tmp_path):
        payload = {
            "algebra": "car",
            "isometry": {"matrix": {"re": [[1, 0], [0, 1]],
                                    "im": [[0, 0], [0, 0]]}},
            "space": {"domain_modes": 2, "codomain_modes": 2},
        }
        with pytest.raises(MalformedInput):
            report.load_model(write_model(tmp_path, "m.json", payload))

    def test_unknown_algebra_rejected(self, tmp_path):
        path = write_model(tmp_path, "m.json", {
            "algebra": "cuntz",
            "isometry": {"builder": "shift", "params": {"n_sites_in": 1}}})
        with pytest.raises(MalformedInput):
            report.load_model(path)

    def test_unknown_gauge_group_rejected(self, tmp_path):
        path = write_model(tmp_path, "m.json", {
            "algebra": "car",
            "isometry": {"builder": "shift", "params": {"n_sites_in": 1}},
            "gauge": {"group": "e8"}})
        with pytest.raises(MalformedInput):
            report.load_model(path)

    def test_not_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json {", encoding="utf-8")
        with pytest.raises(MalformedInput):
            report.load_model(str(path))


class TestAnalyze:

    def test_shift_car_summary(self, tmp_path, capsys):
        out = str(tmp_path / "r.json")
        code = cli.main(["analyze", "--input", shift_car_model(tmp_path),
                         "--report", out])
        assert code == 0
        data = json.loads(open(out, encoding="utf-8").read())
        assert data["charge_data"]["index"] == 2
        assert data["charge_data"]["statistics_dimension"] == 2
        assert data["charge_data"]["dim_k"] == 1
        assert data["membership"]["is_member"] is True
        assert data["membership"]["isometry_defect"]["pass"] is True
        assert data["sector_table"]["equivalence_classes"] == [[0], [1]]
        assert data["schema_version"] == 1

    def test_shift_ccr_infinite_statistics_dimension(self, tmp_path):
        path = write_model(tmp_path, "m.json", {
            "algebra": "ccr",
            "isometry": {"builder": "shift", "params": {"n_sites_in": 1}}})
        out = str(tmp_path / "r.json")
        assert cli.main(["analyze", "--input", path, "--report", out]) == 0
        data = json.loads(open(out, encoding="utf-8").read())
        assert data["charge_data"]["statistics_dimension"] == "infinite"
        assert data["charge_data"]["index"] == 2

    def test_malformed_matrix_exit_2(self, tmp_path):
        path = write_model(tmp_path, "m.json", {
            "algebra": "car",
            "isometry": {"matrix": {"re": [[1, 0], [0]],
                                    "im": [[0, 0], [0, 0]]}},
            "space": {"domain_modes": 1}})
        assert cli.main(["analyze", "--input", path]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert cli.main(["analyze", "--input",
                         str(tmp_path / "absent.json")]) == 2

    def test_nonmember_exit_3_with_report(self, tmp_path):
        half = 0.5 * np.eye(4)
        path = write_model(tmp_path, "m.json", {
            "algebra": "car",
            "isometry": {"matrix": report.complex_array_payload(half)},
            "space": {"domain_modes": 2, "codomain_modes": 2}})
        out = str(tmp_path / "r.json")
        assert cli.main(["analyze", "--input", path, "--report", out]) == 3
        data = json.loads(open(out, encoding="utf-8").read())
        assert data["status"] == "not-in-semigroup"
        assert data["membership"]["is_member"] is False
        assert data["membership"]["failures"]


class TestOracle:

    def test_car_shift_implementers(self, tmp_path):
        out = str(tmp_path / "r.json")
        code = cli.main(["oracle", "--input",
                         shift_car_model(tmp_path, gauge=False),
                         "--report", out])
        assert code == 0
        data = json.loads(open(out, encoding="utf-8").read())
        imp = data["implementers"]
        assert imp["count"] == 2 and imp["expected"] == 2
        assert imp["implementation"]["pass"] is True
        assert imp["implementation"]["value"] <= 1e-10
        assert data["charge_theorem"]["max_block_deviation"]["pass"] is True

    def test_ccr_squeeze_prints_tail_bound(self, tmp_path, capsys):
        path = write_model(tmp_path, "m.json", {
            "algebra": "ccr",
            "isometry": {"builder": "squeeze", "params": {"r": 0.5}}})
        out = str(tmp_path / "r.json")
        code = cli.main(["oracle", "--input", path, "--report", out,
                         "--bose-cutoff", "8"])
        assert code == 0
        text = capsys.readouterr().out
        assert "tail bound" in text
        data = json.loads(open(out, encoding="utf-8").read())
        assert data["vacuum"]["tail"] < 1e-3
        cmp = data["charge_theorem"]["max_trace_deviation"]
        assert cmp["pass"] is True
        assert cmp["tolerance"] == pytest.approx(1e-6 + data["vacuum"]["tail"])

    def test_fock_cap_exit_2(self, tmp_path):
        code = cli.main(["oracle", "--input",
                         shift_car_model(tmp_path, gauge=False),
                         "--fock-cap", "8"])
        assert code == 2


class TestDirac:

    def test_small_run_records_index_and_verdicts(self, tmp_path):
        out = str(tmp_path / "r.json")
        code = cli.main(["dirac", "--cutoffs", "16,32,64", "--gauge-n", "2",
                         "--report", out])
        assert code == 0
        data = json.loads(open(out, encoding="utf-8").read())
        assert data["index"]["value"] == 1
        assert data["species_assembly"]["statistics_dimension"] == 4
        assert data["localization"]["residual"]["pass"] is True
        assert data["hs_study"]["verdicts"]["plus"] == "consistent-with-HS"
        assert set(data["window_diagnostics"]) == {"16", "32", "64"}
        for diag in data["window_diagnostics"].values():
            assert diag["row_normalization"]["pass"] is True

    def test_out_of_order_cutoffs_exit_2(self):
        assert cli.main(["dirac", "--cutoffs", "64,32"]) == 2

    def test_bad_cutoff_token_exit_2(self):
        assert cli.main(["dirac", "--cutoffs", "32,fast"]) == 2


class TestDeterminism:

    def test_analyze_reports_byte_identical(self, tmp_path):
        model = shift_car_model(tmp_path)
        r1, r2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        assert cli.main(["analyze", "--input", model, "--report", r1]) == 0
        assert cli.main(["analyze", "--input", model, "--report", r2,
                         "--threads", "3"]) == 0
        assert open(r1, "rb").read() == open(r2, "rb").read()

    def test_dirac_reports_byte_identical_across_threads(self, tmp_path):
        r1, r2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        assert cli.main(["dirac", "--cutoffs", "32,64",
                         "--report", r1]) == 0
        assert cli.main(["dirac", "--cutoffs", "32,64", "--report", r2,
                         "--threads", "4"]) == 0
        assert open(r1, "rb").read() == open(r2, "rb").read()
