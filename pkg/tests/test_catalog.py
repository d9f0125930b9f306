import pytest

from cqrlab import catalog, report
from cqrlab.errors import InputError, UnknownName


@pytest.mark.parametrize("name", catalog.names())
def test_expectations_hold_on_grid(name):
    doc = report.analyze(catalog.builtin(name), report.AnalysisConfig(grid=5))
    failed = doc["worst"]["failed"]
    assert doc["worst"]["pass"], failed
    assert len(doc["points"]) == 5


@pytest.mark.parametrize("name", catalog.names())
def test_every_expectation_has_provenance(name):
    for exp in catalog.builtin(name).expected:
        assert exp.provenance in ("derived", "closed-form", "trivial")
        assert exp.kind in ("max", "value", "equals")


def test_schwarzschild_kretschmann_expression():
    entry = catalog.builtin("schwarzschild(M=2)")
    assert entry.spec.parameters == {"M": 2.0}
    exp = next(e for e in entry.expected if e.quantity == "kretschmann")
    assert exp.evaluate_target(entry.spec, (0.0, 8.0, 1.0, 0.0)) == pytest.approx(48 * 4 / 8**6)


def test_argument_forms():
    assert catalog.builtin("random_poly(7)").spec.name == "random_poly_7"
    assert catalog.builtin("random_poly(1, n=5)").spec.dimension == 5
    pp = catalog.builtin("ppwave(exp(u), 0, 0)")
    assert pp.spec.dimension == 4


def test_random_poly_is_seeded():
    assert catalog.random_poly(3).spec == catalog.random_poly(3).spec
    assert catalog.random_poly(3).spec != catalog.random_poly(4).spec


def test_unknown_name():
    with pytest.raises(UnknownName):
        catalog.builtin("kerr")


def test_bad_arguments():
    with pytest.raises(InputError):
        catalog.builtin("schwarzschild(M=big)")
    with pytest.raises(InputError):
        catalog.builtin("schwarzschild(1, 2)")


def test_entry_for_spec_recovers_expectations():
    spec = catalog.ppwave_cqr().spec
    assert catalog.entry_for_spec(spec).expected == catalog.ppwave_cqr().expected
    assert catalog.entry_for_spec(catalog.random_poly(9).spec).expected == ()
