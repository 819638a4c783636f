import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from parawick.algebra import Statistics  # noqa: E402
from parawick.correlator import Charge, FieldSpec, Insertion, Mode, OpKind, ProductSpec  # noqa: E402

PB, PF = Statistics.PARABOSE, Statistics.PARAFERMI
PHI = FieldSpec("phi", PB, Charge.NEUTRAL)
CPHI = FieldSpec("phi", PB, Charge.CHARGED)
PSI = FieldSpec("psi", PF, Charge.CHARGED)

ACCEPTANCE_LINES: dict[int, str] = {}


def product(*spec, mode=Mode.TIME_ORDERED, rules=None):
    """product((field, adjoint, label), ...) -> ProductSpec."""
    ins = []
    for f, adj, label in spec:
        kind = OpKind.FIELD
        if mode is Mode.OPERATOR_STRING:
            kind = OpKind.CREATOR if adj else OpKind.ANNIHILATOR
        ins.append(Insertion(f, adj, label, kind))
    return ProductSpec(ins, mode, rules)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def problems_dir():
    return Path(__file__).resolve().parent.parent / "problems"
