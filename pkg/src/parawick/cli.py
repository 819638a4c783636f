"""Command line front end: parse a problem file, run the engines, emit results.

Exit codes: 0 success, 1 usage or parse error, 2 cross-check failure,
3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

from . import correlator as corr
from .algebra import PPolynomial, ppoly_eval
from .correlator import CorrelatorResult, Kernel, KernelKind, Mode, Term
from .fock import DEFAULT_MAX_DIM, DimensionLimitError, FockConfig, FockSpace, vev
from .genfun import n_point
from .parser import ProblemError, ProblemFile, ValidationError, parse_problem
from .perturb import DiagramTerm, first_order_correction, vertex_admissibility

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_LIMIT = 0, 1, 2, 3
ORACLE_TOL = 1e-9


def term_to_dict(t: Term) -> dict[str, Any]:
    return {
        "coefficient": list(t.coefficient.coeffs),
        "i_power": t.i_power,
        "factors": [{"kernel": k.kind.value, "args": list(k.args)} for k in t.factors],
        "pairs": [list(pr) for pr in t.order],
    }


def term_from_dict(d: dict[str, Any]) -> Term:
    return Term(
        PPolynomial(d["coefficient"]),
        d["i_power"],
        tuple(Kernel(KernelKind(f["kernel"]), tuple(f["args"])) for f in d["factors"]),
        tuple(tuple(pr) for pr in d.get("pairs", [])),
    )


@dataclass
class ResultDocument:
    expression: str
    mode: str
    engine: str
    result: CorrelatorResult
    p: Optional[int] = None
    cross_check: Optional[dict] = None
    first_order: Optional[list] = None
    vertex_report: Optional[dict] = None
    oracle: Optional[dict] = None
    status: int = EXIT_OK

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "expression": self.expression,
            "mode": self.mode,
            "engine": self.engine,
            "terms": [term_to_dict(t) for t in self.result.terms],
        }
        if self.p is not None:
            d["p"] = self.p
            d["terms_at_p"] = [
                {"value": ppoly_eval(t.coefficient, self.p), "i_power": t.i_power,
                 "factors": [str(k) for k in t.factors]}
                for t in self.result.terms
            ]
        if self.cross_check is not None:
            d["cross_check"] = self.cross_check
        if self.first_order is not None:
            d["first_order"] = [
                dict(term_to_dict(Term(t.coefficient, t.i_power, t.factors, t.order)),
                     coupling=t.coupling, points=list(t.points))
                for t in self.first_order
            ]
            d["vertex_admissibility"] = self.vertex_report
        if self.oracle is not None:
            d["oracle"] = self.oracle
        d["status"] = self.status
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ResultDocument":
        first = None
        if "first_order" in d:
            first = []
            for td in d["first_order"]:
                t = term_from_dict(td)
                first.append(DiagramTerm(t.coefficient, t.i_power, t.factors, td["coupling"], tuple(td["points"]), t.order))
        return cls(
            d["expression"],
            d["mode"],
            d["engine"],
            CorrelatorResult(tuple(term_from_dict(t) for t in d["terms"])),
            d.get("p"),
            d.get("cross_check"),
            first,
            d.get("vertex_admissibility"),
            d.get("oracle"),
            d.get("status", EXIT_OK),
        )


def _compare(a: CorrelatorResult, b: CorrelatorResult) -> dict:
    same = a == b
    out = {"engines": ["pairing", "genfun"], "agree": same}
    if not same:
        out["pairing_only"] = [str(corr.format_term(t)) for t in a.terms if t not in b.terms]
        out["genfun_only"] = [str(corr.format_term(t)) for t in b.terms if t not in a.terms]
    return out


def _mode_map(labels) -> dict[str, int]:
    if all(lab.isdigit() and int(lab) >= 1 for lab in labels):
        return {lab: int(lab) for lab in labels}
    out: dict[str, int] = {}
    for lab in labels:
        out.setdefault(lab, len(out) + 1)
    return out


def run_oracle(product, result: CorrelatorResult, p: int, problem: ProblemFile, max_dim: int) -> dict:
    """Compare the symbolic result at p with matrix VEVs on a truncated Fock space."""
    fields = product.fields
    if len(fields) != 1:
        return {"status": "skipped", "reason": "oracle handles single-field products only"}
    stat = fields[0].stat
    cfg_in = problem.oracle
    rows = []
    if product.mode is Mode.OPERATOR_STRING:
        labels = [ins.label for ins in product.insertions]
        modes = _mode_map(labels)
        n_modes = max(modes.values(), default=1)
        if cfg_in and cfg_in.modes:
            n_modes = max(n_modes, cfg_in.modes)
        creators = sum(ins.adjoint for ins in product.insertions)
        cutoff = (cfg_in.cutoff if cfg_in and cfg_in.cutoff else max(creators, 1))
        cfg = FockConfig(stat, p, n_modes, cutoff, max_dim)
        word = [("adag" if ins.adjoint else "a", modes[ins.label]) for ins in product.insertions]
        matrix = vev(cfg, word)
        symbolic = result.scalar_value(p, modes)
        rows.append({"string": " ".join(f"{k}_{m}" for k, m in word),
                     "symbolic": [symbolic.real, symbolic.imag], "matrix": [matrix.real, matrix.imag]})
        dev = abs(matrix - symbolic)
    else:
        # one distinct mode per contraction pair isolates a single matching
        dev = 0.0
        space = None
        rules = product.rules()
        for m in corr.enumerate_matchings(product):
            n_modes = max(len(m.pairs), 1)
            if space is None or space.cfg.modes != n_modes:
                space = FockSpace(FockConfig(stat, p, n_modes, 1, max_dim))
            word = [None] * len(product.insertions)
            for mode, (i, j) in enumerate(m.pairs, start=1):
                word[i - 1] = ("a", mode)
                word[j - 1] = ("adag", mode)
            matrix = vev(space.cfg, word, space)
            coeff = ppoly_eval(corr.matching_coefficient(corr.graph_for(product, m), relative_rules=rules), p)
            rows.append({"pairs": [list(pr) for pr in m.pairs], "symbolic": coeff, "matrix": [matrix.real, matrix.imag]})
            dev = max(dev, abs(matrix - coeff))
    return {
        "status": "ok" if dev <= ORACLE_TOL else "mismatch",
        "statistics": stat.value,
        "p": p,
        "max_deviation": dev,
        "checks": rows,
    }


def run(
    problem: ProblemFile,
    engine: Optional[str] = None,
    p: Optional[int] = None,
    oracle: bool = False,
    max_dim: int = DEFAULT_MAX_DIM,
) -> ResultDocument:
    engine = engine or problem.engine
    p = p if p is not None else problem.p
    product = problem.product()
    if engine in ("genfun", "both") and product.mode is not Mode.TIME_ORDERED:
        raise ValidationError("the generating-functional engine needs a time-ordered product")
    cross = None
    if engine == "pairing":
        result = corr.evaluate(product)
    elif engine == "genfun":
        result = n_point(product)
    else:
        result = corr.evaluate(product)
        cross = _compare(result, n_point(product))
    doc = ResultDocument(problem.correlator, product.mode.value, engine, result, p, cross)
    if cross is not None and not cross["agree"]:
        doc.status = EXIT_MISMATCH
    if problem.vertex is not None:
        doc.first_order = first_order_correction(product, problem.vertex, p)
        rep = vertex_admissibility(problem.vertex, p)
        doc.vertex_report = {
            "admissible": rep.admissible,
            "unsaturated": rep.unsaturated,
            "even_degree": rep.even_degree,
            "notes": rep.notes,
        }
    if oracle or problem.oracle is not None:
        if p is None:
            doc.oracle = {"status": "skipped", "reason": "oracle needs a concrete p"}
        else:
            try:
                doc.oracle = run_oracle(product, result, p, problem, max_dim)
            except DimensionLimitError as e:
                doc.oracle = {"status": "dimension_limit", "reason": str(e)}
                if doc.status == EXIT_OK:
                    doc.status = EXIT_LIMIT
            else:
                if doc.oracle["status"] == "mismatch":
                    doc.status = EXIT_MISMATCH
    return doc


def _at_p(result: CorrelatorResult, p: int) -> CorrelatorResult:
    return CorrelatorResult.from_terms(
        Term(PPolynomial.const(ppoly_eval(t.coefficient, p)), t.i_power, t.factors, t.order) for t in result.terms
    )


def emit(doc: ResultDocument, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(doc.to_dict(), indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [str(doc.result)]
    if doc.p is not None:
        lines.append(f"# at p={doc.p}: {_at_p(doc.result, doc.p)}")
    if doc.first_order is not None:
        body = " + ".join(str(t) for t in doc.first_order) if doc.first_order else "0"
        lines.append(f"# first order: {body}")
        if doc.vertex_report and not doc.vertex_report["admissible"]:
            lines.append("# vertex: " + "; ".join(doc.vertex_report["notes"]))
    if doc.cross_check is not None:
        lines.append("# engines pairing/genfun: " + ("agree" if doc.cross_check["agree"] else "MISMATCH"))
    if doc.oracle is not None:
        o = doc.oracle
        if "max_deviation" in o:
            lines.append(f"# fock oracle: {o['status']} (max deviation {o['max_deviation']:.3g})")
        else:
            lines.append(f"# fock oracle: {o['status']} ({o.get('reason', '')})")
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="parawick", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("eval", help="evaluate a problem file")
    ev.add_argument("--input", required=True, help="problem JSON file ('-' for stdin)")
    ev.add_argument("--engine", choices=("pairing", "genfun", "both"))
    ev.add_argument("--p", type=int, help="concrete order of the statistics")
    ev.add_argument("--oracle", action="store_true", help="cross-check against Fock-space matrices")
    ev.add_argument("--format", choices=("text", "json"), default="text")
    ev.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM, help="Fock dimension limit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.p is not None and args.p < 1:
        print("error: --p must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        problem = parse_problem(text)
        doc = run(problem, args.engine, args.p, args.oracle, args.max_dim)
    except ProblemError as e:
        kind = type(e).__name__
        print(f"{args.input}: {kind}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DimensionLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_LIMIT
    sys.stdout.write(emit(doc, args.format))
    return doc.status


if __name__ == "__main__":
    sys.exit(main())
