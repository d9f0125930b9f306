import io
import json
import subprocess
import sys

import pytest

from cqrlab import catalog, cli, metricio
from cqrlab.errors import InputError, MetricValidationError, MissingField


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestMetricFiles:
    @pytest.mark.parametrize("name", ["minkowski4", "schwarzschild", "ppwave_cqr", "godel", "random_poly"])
    def test_round_trip(self, name):
        spec = catalog.builtin(name).spec
        assert metricio.loads(metricio.dumps(spec)) == spec

    def test_export_is_byte_stable(self, tmp_path):
        spec = catalog.ppwave_cqr().spec
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        metricio.save(spec, a)
        metricio.save(metricio.load(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_field_order(self):
        doc = json.loads(metricio.dumps(catalog.ppwave_cqr().spec))
        assert list(doc) == ["name", "dimension", "coordinates", "parameters", "metric", "sample_box", "vector_A"]

    def test_missing_field(self):
        with pytest.raises(MissingField):
            metricio.loads('{"name": "m", "coordinates": ["a", "b", "c"]}')

    def test_dimension_mismatch(self):
        doc = json.loads(metricio.dumps(catalog.minkowski4().spec))
        doc["dimension"] = 5
        with pytest.raises(MetricValidationError):
            metricio.spec_from_dict(doc)

    def test_invalid_json(self):
        with pytest.raises(InputError):
            metricio.loads("{not json")


class TestCommands:
    def test_list(self):
        code, out, _ = run("list")
        assert code == 0
        assert "ppwave_cqr" in out and "schwarzschild" in out

    def test_analyze_cqr_fixture(self):
        code, out, _ = run("analyze", "--builtin", "ppwave_cqr", "--grid", "5", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["points"]) == 5
        for p in doc["points"]:
            assert p["classifications"]["petrov_class"] == "N"
            assert p["classifications"]["fv_status"] == "cqr"
        assert doc["worst"]["pass"]

    def test_json_is_deterministic(self):
        argv = ("analyze", "--builtin", "random_poly", "--seed", "4", "--grid", "3", "--format", "json")
        assert run(*argv)[1] == run(*argv)[1]

    def test_text_report(self):
        code, out, _ = run("analyze", "--builtin", "schwarzschild(M=1)", "--point", "t=0,r=4,theta=1,phi=0")
        assert code == 0
        assert out.endswith("result: PASS\n")

    def test_export_then_analyze_matches_builtin(self, tmp_path):
        path = tmp_path / "m.json"
        assert run("export", "minkowski4", str(path))[0] == 0
        from_file = run("analyze", "--metric", str(path), "--format", "json")
        builtin = run("analyze", "--builtin", "minkowski4", "--format", "json")
        assert from_file[0] == builtin[0] == 0
        assert from_file[1] == builtin[1]

    def test_export_unwritable(self, tmp_path):
        code, _, err = run("export", "minkowski4", str(tmp_path / "missing" / "m.json"))
        assert code == 2
        assert "cannot write" in err

    def test_asymmetric_metric_file(self, tmp_path):
        doc = json.loads(metricio.dumps(catalog.minkowski4().spec))
        doc["metric"][0][1] = "x"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run("analyze", "--metric", str(path))
        assert code == 2
        assert "not symmetric at (0,1)" in err

    def test_point_at_horizon_is_numerical_failure(self):
        code, _, err = run("analyze", "--builtin", "schwarzschild", "--point", "t=0,r=2,theta=1,phi=0")
        assert code == 3
        assert err.startswith("error:")

    def test_incomplete_point(self):
        assert run("analyze", "--builtin", "minkowski4", "--point", "t=0,x=1")[0] == 2

    def test_unknown_builtin(self):
        assert run("analyze", "--builtin", "kerr")[0] == 2

    def test_bad_flag(self):
        assert run("analyze", "--builtin", "minkowski4", "--order", "5")[0] == 2

    def test_identity_passes_in_four_dimensions(self):
        code, out, _ = run("identity", "lovelock4", "--builtin", "random_poly(7)")
        assert code == 0 and "result: PASS" in out

    def test_identity_fails_in_five_dimensions(self):
        code, out, _ = run("identity", "lovelock4", "--builtin", "random_poly(1, n=5)")
        assert code == 1 and "result: FAIL" in out

    @pytest.mark.parametrize("name", ["divergence_cyclic", "eq6"])
    @pytest.mark.parametrize("flags", [("--order", "4"), ("--fd",)])
    def test_divergence_identity(self, name, flags):
        code, out, _ = run("identity", name, "--builtin", "random_poly(2)", "--grid", "2", *flags)
        assert code == 0 and "divergence_cyclic" in out

    def test_conformal_identity_alias(self):
        argv = ("--builtin", "schwarzschild", "--point", "t=0,r=4,theta=1,phi=0", "--sigma", "0.1*r")
        assert run("identity", "eq5", *argv) == run("identity", "conformal_gradient", *argv)
        assert run("identity", "eq5", *argv)[0] == 0

    def test_unknown_identity(self):
        assert run("identity", "nonsense", "--builtin", "minkowski4")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cqrlab", "list"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "minkowski4" in proc.stdout
