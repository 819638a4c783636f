"""Problem files (JSON) and the insertion-expression grammar.

Expression grammar, leftmost token = leftmost string position::

    product   := insertion*
    insertion := NAME [ "*" ] ( "(" LABEL ")" | "_" LABEL )

``NAME*``, ``NAMEbar`` (parafermi) and ``NAMEdag`` mark the adjoint. In
operator-string mode plain names are annihilators and adjoints creators,
so ``a_1 a_2 adag_2 adag_1`` reads <0| a_1 a_2 a+_2 a+_1 |0>.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .algebra import Statistics
from .correlator import Charge, FieldSpec, Insertion, Mode, OpKind, ProductSpec
from .perturb import VertexKind, VertexSpec


class ProblemError(Exception):
    """Base class; carries an optional 1-based line and column."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}, column {column}: "
        super().__init__(where + message)


class ParseError(ProblemError):
    pass


class ValidationError(ProblemError):
    pass


_TOKEN = re.compile(r"([A-Za-z0-9]+)|([*()_])|(\s+)|(.)")


def _tokens(text: str) -> list[tuple[str, str, int]]:
    """(kind, text, 1-based column); kind is "word" or the punctuation itself."""
    out = []
    for m in _TOKEN.finditer(text):
        if m.group(3):
            continue
        if m.group(4):
            raise ParseError(f"unexpected character {m.group(4)!r}", 1, m.start() + 1)
        out.append(("word" if m.group(1) else m.group(2), m.group(0), m.start() + 1))
    return out


def _resolve(name: str, fields: dict[str, FieldSpec]) -> tuple[Optional[FieldSpec], bool]:
    if name in fields:
        return fields[name], False
    for suffix in ("bar", "dag"):
        base = name[: -len(suffix)]
        if name.endswith(suffix) and base in fields:
            f = fields[base]
            if suffix == "bar" and f.stat is not Statistics.PARAFERMI:
                return None, False
            return f, True
    return None, False


def parse_expression(
    text: str, fields: dict[str, FieldSpec], mode: Mode = Mode.TIME_ORDERED, line: int = 1
) -> list[Insertion]:
    """Recursive-descent parse of an insertion list; errors carry line/column."""
    try:
        toks = _tokens(text)
    except ParseError as e:
        raise ParseError(e.message, line, e.column) from None
    i = 0
    out: list[Insertion] = []
    seen: dict[str, int] = {}

    def err(cls, msg, col):
        return cls(msg, line, col)

    def expect(kind, what):
        nonlocal i
        if i >= len(toks) or toks[i][0] != kind:
            col = toks[i][2] if i < len(toks) else len(text) + 1
            got = repr(toks[i][1]) if i < len(toks) else "end of input"
            raise err(ParseError, f"expected {what}, got {got}", col)
        i += 1
        return toks[i - 1]

    while i < len(toks):
        _, name, col = expect("word", "field name")
        if not name[0].isalpha():
            raise err(ParseError, f"field name must start with a letter: {name!r}", col)
        f, adjoint = _resolve(name, fields)
        if f is None:
            raise err(ValidationError, f"undeclared field {name!r}", col)
        if i < len(toks) and toks[i][0] == "*":
            if adjoint:
                raise err(ParseError, "adjoint marked twice", toks[i][2])
            adjoint = True
            i += 1
        if i < len(toks) and toks[i][0] == "_":
            i += 1
            _, label, lcol = expect("word", "label")
        else:
            expect("(", "'(' or '_'")
            _, label, lcol = expect("word", "label")
            expect(")", "')'")
        if mode is Mode.TIME_ORDERED:
            if label in seen:
                raise err(ValidationError, f"duplicate point label {label!r}", lcol)
            seen[label] = lcol
            kind = OpKind.FIELD
        else:
            kind = OpKind.CREATOR if adjoint else OpKind.ANNIHILATOR
        out.append(Insertion(f, adjoint, label, kind))
    return out


def format_expression(insertions) -> str:
    parts = []
    for ins in insertions:
        star = "*" if ins.adjoint else ""
        parts.append(f"{ins.field.name}{star}({ins.label})")
    return " ".join(parts)


@dataclass
class OracleConfig:
    modes: Optional[int] = None
    cutoff: Optional[int] = None


@dataclass
class ProblemFile:
    fields: list[FieldSpec]
    correlator: str
    mode: Mode = Mode.TIME_ORDERED
    engine: str = "pairing"
    p: Optional[int] = None
    oracle: Optional[OracleConfig] = None
    vertex: Optional[VertexSpec] = None
    relative_rules: dict = field(default_factory=dict)
    expression_line: int = field(default=1, compare=False)

    @property
    def field_map(self) -> dict[str, FieldSpec]:
        return {f.name: f for f in self.fields}

    def product(self) -> ProductSpec:
        ins = parse_expression(self.correlator, self.field_map, self.mode, self.expression_line)
        return ProductSpec(ins, self.mode, dict(self.relative_rules) or None)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "fields": [
                {"name": f.name, "statistics": f.stat.value, "charge": f.charge.value} for f in self.fields
            ],
            "correlator": self.correlator,
            "mode": self.mode.value,
            "engine": self.engine,
        }
        if self.p is not None:
            d["p"] = self.p
        if self.oracle is not None:
            d["oracle"] = {k: v for k, v in (("modes", self.oracle.modes), ("cutoff", self.oracle.cutoff)) if v is not None}
        if self.vertex is not None:
            v = self.vertex
            d["vertex"] = {
                "kind": v.kind.value,
                "fields": [f.name for f in v.fields],
                "degree": v.degree,
                "coupling": v.coupling,
                "point": v.point,
            }
            if v.order is not None:
                d["vertex"]["order"] = v.order
        if self.relative_rules:
            d["relative_rules"] = [
                {"fields": sorted(k), "same": s, "different": t}
                for k, (s, t) in sorted(self.relative_rules.items(), key=lambda kv: sorted(kv[0]))
            ]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


ENGINES = ("pairing", "genfun", "both")


def _locate(text: str, needle: str) -> tuple[int, int]:
    idx = text.find(needle)
    if idx < 0:
        return 1, 1
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


def _field(d: Any, where: str) -> FieldSpec:
    if not isinstance(d, dict) or "name" not in d:
        raise ValidationError(f"{where}: field declaration needs a name")
    name = d["name"]
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z][A-Za-z0-9]*", name):
        raise ValidationError(f"{where}: bad field name {name!r}")
    try:
        stat = Statistics.parse(d.get("statistics", "parabose"))
        charge = Charge(d.get("charge", "neutral"))
    except ValueError as e:
        raise ValidationError(f"{where}: {e}") from None
    return FieldSpec(name, stat, charge)


def parse_problem(text: str) -> ProblemFile:
    """Parse and validate a JSON problem file."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(raw, dict):
        raise ValidationError("problem file must be a JSON object", 1, 1)
    known = {"fields", "correlator", "mode", "engine", "p", "oracle", "vertex", "relative_rules"}
    for key in raw:
        if key not in known:
            line, col = _locate(text, f'"{key}"')
            raise ValidationError(f"unknown key {key!r}", line, col)
    fields = [_field(d, f"fields[{i}]") for i, d in enumerate(raw.get("fields", []))]
    names = [f.name for f in fields]
    if len(set(names)) != len(names):
        raise ValidationError("field names must be unique")
    fmap = {f.name: f for f in fields}
    if "correlator" not in raw or not isinstance(raw["correlator"], str):
        raise ValidationError("missing correlator expression")
    try:
        mode = Mode(raw.get("mode", "time_ordered"))
    except ValueError:
        raise ValidationError(f"unknown mode {raw.get('mode')!r}") from None
    engine = raw.get("engine", "pairing")
    if engine not in ENGINES:
        raise ValidationError(f"unknown engine {engine!r}")
    p = raw.get("p")
    if p is not None and (not isinstance(p, int) or isinstance(p, bool) or p < 1):
        raise ValidationError("p must be a positive integer")
    oracle = None
    if raw.get("oracle") is not None:
        o = raw["oracle"]
        if not isinstance(o, dict):
            raise ValidationError("oracle must be an object")
        oracle = OracleConfig(o.get("modes"), o.get("cutoff"))
    vertex = None
    if raw.get("vertex") is not None:
        vd = raw["vertex"]
        try:
            vfields = tuple(fmap[n] for n in vd.get("fields", []))
        except KeyError as e:
            raise ValidationError(f"vertex references undeclared field {e.args[0]!r}") from None
        try:
            vertex = VertexSpec(
                VertexKind(vd.get("kind")),
                vfields,
                degree=vd.get("degree", 1),
                order=vd.get("order"),
                coupling=vd.get("coupling", "g"),
                point=vd.get("point", "z"),
            )
        except ValueError as e:
            raise ValidationError(f"vertex: {e}") from None
    rules = {}
    for r in raw.get("relative_rules", []) or []:
        pair = r.get("fields", [])
        if len(pair) != 2 or any(n not in fmap for n in pair) or pair[0] == pair[1]:
            raise ValidationError(f"relative rule needs two distinct declared fields, got {pair!r}")
        s, t = r.get("same"), r.get("different")
        if s not in (1, -1) or t not in (1, -1):
            raise ValidationError("relative rule signs must be +1 or -1")
        rules[frozenset(pair)] = (s, t)
    expr_line, _ = _locate(text, '"correlator"')
    prob = ProblemFile(fields, raw["correlator"], mode, engine, p, oracle, vertex, rules, expr_line)
    prob.product()  # validate the expression now
    if vertex is not None and prob.vertex.point in {i.label for i in prob.product().insertions}:
        raise ValidationError(f"vertex point {vertex.point!r} clashes with an external point")
    return prob
