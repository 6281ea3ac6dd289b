import pytest

from sel_lab.acceptance import ACCEPTANCE_COLUMNS, Check, acceptance_csv, run_acceptance, run_item
from sel_lab.exceptions import ConfigError


def test_operator_axioms_pass():
    rows = run_acceptance(["1"], quick=True)
    assert [r.item for r in rows] == ["1"] * 4
    assert all(r.passed for r in rows)


@pytest.mark.slow
def test_classifier_item_passes():
    rows = run_item("9", quick=True)
    assert all(r.passed for r in rows), [r for r in rows if not r.passed]


def test_eigensolver_item_passes():
    assert all(r.passed for r in run_item("2", quick=True))


def test_unknown_item():
    with pytest.raises(ConfigError):
        run_acceptance(["11"])


def test_acceptance_csv():
    rows = [Check("4", "rate (0.2, 0.3)", [1.0, 0.5], "1 +- 0.05", True), Check("5", "breaches", 0, 0, False)]
    lines = acceptance_csv(rows).splitlines()
    assert lines[0] == ",".join(ACCEPTANCE_COLUMNS)
    assert lines[1] == '4,"rate (0.2, 0.3)",1.0 0.5,1 +- 0.05,1'
    assert lines[2] == "5,breaches,0,0,0"


@pytest.mark.slow
@pytest.mark.parametrize("item", ["3", "4", "5", "6", "7", "8", "10"])
def test_quick_item_passes(item):
    rows = run_item(item, quick=True)
    assert all(r.passed for r in rows), [r for r in rows if not r.passed]
