"""Numerical oracle: Green-ansatz mode operators as explicit matrices.

The Fock space is a tensor product of p Green sectors, each holding
``modes`` ordinary bose (truncated) or fermi modes. Sector 1 is the most
significant tensor factor, and inside a sector mode 1 is.

Parafermi components: Jordan-Wigner fermions inside each sector, plain
tensor embedding across sectors, so different sectors commute.
Parabose components: truncated bosons inside each sector, multiplied by
the Klein factors (-1)^N_beta of every earlier sector beta, so different
sectors anticommute.

Matrices are scipy.sparse CSR; the p=3 parabose spaces used in checks
have ~10^4 states and dense storage would not fit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .algebra import Statistics

OperatorMatrix = sp.csr_matrix

DEFAULT_MAX_DIM = 2**16


class DimensionLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FockConfig:
    stat: Statistics
    p: int
    modes: int
    bose_cutoff: int = 4  # highest occupation kept per (mode, sector)
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.p < 1 or self.modes < 1:
            raise ValueError("p and modes must be positive")
        if self.stat is Statistics.PARABOSE and self.bose_cutoff < 1:
            raise ValueError("bose_cutoff must be at least 1")
        if self.dim > self.max_dim:
            raise DimensionLimitError(
                f"Fock dimension {self.dim} exceeds limit {self.max_dim} "
                f"(p={self.p}, modes={self.modes}, cutoff={self.bose_cutoff})"
            )

    @property
    def levels(self) -> int:
        return 2 if self.stat is Statistics.PARAFERMI else self.bose_cutoff + 1

    @property
    def sector_dim(self) -> int:
        return self.levels**self.modes

    @property
    def dim(self) -> int:
        return self.sector_dim**self.p


def _single_mode_lowering(levels: int) -> sp.csr_matrix:
    n = np.arange(1, levels)
    return sp.csr_matrix((np.sqrt(n), (n - 1, n)), shape=(levels, levels))


def _kron_all(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


class FockSpace:
    """Operator factory for one configuration; matrices are cached."""

    def __init__(self, cfg: FockConfig):
        self.cfg = cfg
        self._cache: dict = {}

    @cached_property
    def occupations(self) -> np.ndarray:
        """Occupation numbers, shape (dim, p, modes), in basis order."""
        c = self.cfg
        grid = itertools.product(range(c.levels), repeat=c.p * c.modes)
        return np.array(list(grid), dtype=np.int64).reshape(c.dim, c.p, c.modes)

    def safe_mask(self, margin: int) -> np.ndarray:
        """States whose occupations stay representable after ``margin`` raisings."""
        if self.cfg.stat is Statistics.PARAFERMI:
            return np.ones(self.cfg.dim, dtype=bool)
        return (self.occupations <= self.cfg.bose_cutoff - margin).all(axis=(1, 2))

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.cfg.dim)
        v[0] = 1.0
        return v

    def _sector_lowering(self, k: int) -> sp.csr_matrix:
        c = self.cfg
        lower = _single_mode_lowering(c.levels)
        eye = sp.identity(c.levels, format="csr")
        if c.stat is Statistics.PARAFERMI:
            z = sp.diags([1.0, -1.0], format="csr")
            ops = [z] * (k - 1) + [lower] + [eye] * (c.modes - k)
        else:
            ops = [eye] * (k - 1) + [lower] + [eye] * (c.modes - k)
        return _kron_all(ops)

    def _sector_parity(self) -> sp.csr_matrix:
        c = self.cfg
        single = sp.diags((-1.0) ** np.arange(c.levels), format="csr")
        return _kron_all([single] * c.modes)

    def green_annihilator(self, alpha: int, k: int) -> OperatorMatrix:
        c = self.cfg
        if not 1 <= alpha <= c.p:
            raise ValueError(f"Green index {alpha} outside 1..{c.p}")
        if not 1 <= k <= c.modes:
            raise ValueError(f"mode {k} outside 1..{c.modes}")
        key = ("b", alpha, k)
        if key not in self._cache:
            eye = sp.identity(c.sector_dim, format="csr")
            before = self._sector_parity() if c.stat is Statistics.PARABOSE else eye
            ops = [before] * (alpha - 1) + [self._sector_lowering(k)] + [eye] * (c.p - alpha)
            self._cache[key] = _kron_all(ops)
        return self._cache[key]

    def green_creator(self, alpha: int, k: int) -> OperatorMatrix:
        return sp.csr_matrix(self.green_annihilator(alpha, k).conj().T)

    def composite_ops(self, k: int) -> tuple[OperatorMatrix, OperatorMatrix]:
        key = ("a", k)
        if key not in self._cache:
            a = sum(self.green_annihilator(alpha, k) for alpha in range(1, self.cfg.p + 1))
            a = sp.csr_matrix(a)
            self._cache[key] = (a, sp.csr_matrix(a.conj().T))
        return self._cache[key]

    def identity(self) -> OperatorMatrix:
        return sp.identity(self.cfg.dim, format="csr")

    def number_op(self, k: int) -> OperatorMatrix:
        """n_k = (1/2)[a+_k, a_k]_(+/-) shifted so the vacuum has n_k = 0."""
        a, ad = self.composite_ops(k)
        p = self.cfg.p
        if self.cfg.stat is Statistics.PARABOSE:
            return sp.csr_matrix(0.5 * (ad @ a + a @ ad) - 0.5 * p * self.identity())
        return sp.csr_matrix(0.5 * (ad @ a - a @ ad) + 0.5 * p * self.identity())

    def bracket(self, x, y) -> OperatorMatrix:
        """[x, y]_+ for parabose, [x, y]_- for parafermi."""
        if self.cfg.stat is Statistics.PARABOSE:
            return x @ y + y @ x
        return x @ y - y @ x


def green_annihilator(cfg: FockConfig, alpha: int, k: int) -> OperatorMatrix:
    return FockSpace(cfg).green_annihilator(alpha, k)


def composite_ops(cfg: FockConfig, k: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    return FockSpace(cfg).composite_ops(k)


def _restricted_max(op, mask: np.ndarray) -> float:
    sub = sp.csr_matrix(op)[:, np.flatnonzero(mask)]
    if sub.nnz == 0:
        return 0.0
    return float(np.abs(sub.data).max())


def trilinear_residuals(cfg: FockConfig, space: FockSpace | None = None) -> dict[str, float]:
    """Max residuals of the trilinear relation and of [n_k, a+_l] = delta_kl a+_l.

    Residual matrices are restricted to columns (input states) that stay
    below the bosonic cutoff after two raisings.
    """
    fs = space or FockSpace(cfg)
    mask = fs.safe_mask(2)
    M = cfg.modes
    tri = num = 0.0
    for k, l, m in itertools.product(range(1, M + 1), repeat=3):
        _, adk = fs.composite_ops(k)
        al, _ = fs.composite_ops(l)
        _, adm = fs.composite_ops(m)
        inner = fs.bracket(adk, al)
        r = inner @ adm - adm @ inner
        if l == m:
            r = r - 2 * adk
        tri = max(tri, _restricted_max(r, mask))
    for k, l in itertools.product(range(1, M + 1), repeat=2):
        n = fs.number_op(k)
        _, adl = fs.composite_ops(l)
        r = n @ adl - adl @ n
        if k == l:
            r = r - adl
        num = max(num, _restricted_max(r, mask))
    return {"trilinear": tri, "number": num}


def check_trilinear(cfg: FockConfig) -> float:
    """Largest residual of the trilinear and number-operator relations."""
    res = trilinear_residuals(cfg)
    return max(res.values())


def check_green_relations(cfg: FockConfig) -> float:
    """Largest residual of b b+ = +-(2 delta - 1) b+ b + delta delta over all components."""
    fs = FockSpace(cfg)
    mask = fs.safe_mask(1)
    upper = 1 if cfg.stat is Statistics.PARABOSE else -1
    worst = 0.0
    comps = list(itertools.product(range(1, cfg.p + 1), range(1, cfg.modes + 1)))
    for (al, k), (be, l) in itertools.product(comps, repeat=2):
        b = fs.green_annihilator(al, k)
        bd = fs.green_creator(be, l)
        s = upper * (1 if al == be else -1)
        r = b @ bd - s * (bd @ b)
        if al == be and k == l:
            r = r - fs.identity()
        worst = max(worst, _restricted_max(r, mask))
    return worst


OpWord = Union[tuple[str, int], sp.spmatrix]


def vev(cfg: FockConfig, ops: Sequence[OpWord], space: FockSpace | None = None) -> complex:
    """<0| ops[0] ops[1] ... |0>, applied right to left.

    Words are ``("a", k)`` / ``("adag", k)`` or explicit matrices.
    """
    fs = space or FockSpace(cfg)
    v = fs.vacuum().astype(complex)
    for op in reversed(ops):
        if isinstance(op, tuple):
            kind, k = op
            a, ad = fs.composite_ops(k)
            op = a if kind == "a" else ad
        v = op @ v
        if not v.any():
            return 0j
    return complex(v[0])


@dataclass
class RescaleReport:
    stat: Statistics
    p: int
    measured: float
    stated_value: float
    derived_value: float
    fit_residual: float

    @property
    def matches_stated(self) -> bool:
        return abs(self.measured - self.stated_value) < 1e-9

    @property
    def matches_derived(self) -> bool:
        return abs(self.measured - self.derived_value) < 1e-9


def check_rescaled_normalization(cfg: FockConfig) -> RescaleReport:
    """Measure lambda in [[c+_k, c_l]_(+/-), c+_m] = lambda delta_lm c+_k for c = a / sqrt(p).

    The fit uses every (k, l=m) combination restricted to cutoff-safe inputs.
    """
    fs = FockSpace(cfg)
    idx = np.flatnonzero(fs.safe_mask(2))
    scale = 1.0 / np.sqrt(cfg.p)
    num = den = 0.0
    pairs = []
    for k, m in itertools.product(range(1, cfg.modes + 1), repeat=2):
        a_m, ad_m = fs.composite_ops(m)
        _, ad_k = fs.composite_ops(k)
        c_m, cd_m, cd_k = a_m * scale, ad_m * scale, ad_k * scale
        inner = fs.bracket(cd_k, c_m)
        r = (inner @ cd_m - cd_m @ inner)[:, idx].toarray().ravel()
        t = cd_k[:, idx].toarray().ravel()
        num += float(np.real(np.vdot(t, r)))
        den += float(np.real(np.vdot(t, t)))
        pairs.append((r, t))
    lam = num / den
    resid = max(float(np.abs(r - lam * t).max()) for r, t in pairs)
    return RescaleReport(cfg.stat, cfg.p, lam, 2.0 * cfg.p, 2.0 / cfg.p, resid)
