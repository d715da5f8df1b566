"""Symbolic algebra of products of matrix powers z^A and log-antiderivatives phi_A(z).

A term is ``coeff @ (L_1 f_1(z_1)) @ ... @ (L_n f_n(z_n)) @ right`` where each
slot holds a left multiplier ``L_s`` and a factor ``f_s`` that is either
``Power(A)`` (z^A = exp(A ln z)) or ``Phi(A)`` (sum_k A^k ln(z)^(k+1) / (k+1)!).
All slot matrices of a term share one size, which may differ between terms.
Coefficients may have several rows (one per row vector alpha) and the right
multiplier fixes the output width.

Logarithms use the branch with imaginary part in (0, 2 pi) on C minus [0, inf).
Variables are numbered 1..n.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .kernels import BranchCutError, as_matrix, expm_2pii, expm_guarded, phi1, psi, spectral_split

POWER = "power"
PHI = "phi"

_SAME = 1e-10  # relative tolerance for treating two slot matrices as identical
CUT_DISTANCE = 1e-12
ZERO_NORM = 1e-13  # terms with a multiplier this small are dropped by canonical()


class OutOfClassError(ValueError):
    """Raised when an operation would leave the expression class."""


@dataclass(frozen=True, eq=False)
class Slot:
    kind: str
    exponent: np.ndarray
    left: np.ndarray

    @property
    def size(self) -> int:
        return self.exponent.shape[0]

    def value(self, log_z: complex) -> np.ndarray:
        m = self.size
        if m == 0:
            return np.zeros((0, 0), dtype=complex)
        if self.kind == POWER:
            f = expm_guarded(self.exponent * log_z)
        else:
            f = log_z * phi1(self.exponent * log_z)
        return self.left @ f


def power(a, left=None) -> Slot:
    a = as_matrix(a, square=True)
    return Slot(POWER, a, _left(left, a.shape[0]))


def phi(a, left=None) -> Slot:
    a = as_matrix(a, square=True)
    return Slot(PHI, a, _left(left, a.shape[0]))


def _left(left, m):
    if left is None:
        return np.eye(m, dtype=complex)
    left = as_matrix(left, square=True)
    if left.shape[0] != m:
        raise ValueError("left multiplier size does not match the exponent")
    return left


@dataclass(frozen=True, eq=False)
class Term:
    coeff: np.ndarray
    slots: tuple[Slot, ...]
    right: np.ndarray

    def with_slot(self, i: int, slot: Slot) -> "Term":
        slots = list(self.slots)
        slots[i - 1] = slot
        return Term(self.coeff, tuple(slots), self.right)


class LogExpr:
    """A finite sum of terms sharing the variable count, slot size, rows and width."""

    def __init__(self, n: int, terms=(), rows: int = 1, width: int = 1):
        self.n = n
        self.rows = rows
        self.width = width
        self.terms = tuple(terms)
        for t in self.terms:
            m = t.coeff.shape[1]
            if len(t.slots) != n or t.coeff.shape[0] != rows or t.right.shape != (m, width):
                raise ValueError("term shape does not match the expression")
            if any(s.size != m for s in t.slots):
                raise ValueError("slot size does not match the term")

    @property
    def m(self) -> int | None:
        """Inner slot size shared by all terms, or None if the terms differ."""
        sizes = {t.coeff.shape[1] for t in self.terms}
        return sizes.pop() if len(sizes) == 1 else None

    @classmethod
    def single(cls, coeff, slots, right=None) -> "LogExpr":
        slots = tuple(slots)
        if not slots:
            raise ValueError("need at least one variable")
        m = slots[0].size
        coeff = as_matrix(coeff)
        right = np.eye(m, dtype=complex) if right is None else as_matrix(right)
        return cls(len(slots), [Term(coeff, slots, right)], coeff.shape[0], right.shape[1])

    @classmethod
    def powers(cls, coeff, exponents) -> "LogExpr":
        """coeff times the ordered product of z_s^(A_s)."""
        return cls.single(coeff, [power(a) for a in exponents])

    @classmethod
    def constant(cls, mat, n: int = 1) -> "LogExpr":
        mat = as_matrix(mat)
        m = mat.shape[1]
        return cls.single(mat, [power(np.zeros((m, m))) for _ in range(n)])

    def zero_like(self) -> "LogExpr":
        return LogExpr(self.n, (), self.rows, self.width)

    def _check_compatible(self, other: "LogExpr") -> None:
        if (self.n, self.rows, self.width) != (other.n, other.rows, other.width):
            raise ValueError(
                f"incompatible expressions: (n, rows, width) {(self.n, self.rows, self.width)} "
                f"vs {(other.n, other.rows, other.width)}"
            )

    def __add__(self, other: "LogExpr") -> "LogExpr":
        self._check_compatible(other)
        return LogExpr(self.n, self.terms + other.terms, self.rows, self.width)

    def __neg__(self) -> "LogExpr":
        return self * -1

    def __sub__(self, other: "LogExpr") -> "LogExpr":
        return self + (-other)

    def __mul__(self, scalar) -> "LogExpr":
        terms = [Term(t.coeff * scalar, t.slots, t.right) for t in self.terms]
        return LogExpr(self.n, terms, self.rows, self.width)

    __rmul__ = __mul__

    def __matmul__(self, mat) -> "LogExpr":
        """Right-multiply every term by a constant matrix."""
        mat = as_matrix(mat)
        if mat.shape[0] != self.width:
            raise ValueError(f"cannot right-multiply width {self.width} by {mat.shape}")
        terms = [Term(t.coeff, t.slots, t.right @ mat) for t in self.terms]
        return LogExpr(self.n, terms, self.rows, mat.shape[1])

    def __rmatmul__(self, mat) -> "LogExpr":
        """Left-multiply the coefficients, e.g. to pick row vectors alpha."""
        mat = as_matrix(mat)
        if mat.shape[1] != self.rows:
            raise ValueError(f"cannot left-multiply {self.rows} rows by {mat.shape}")
        terms = [Term(mat @ t.coeff, t.slots, t.right) for t in self.terms]
        return LogExpr(self.n, terms, mat.shape[0], self.width)

    def __repr__(self) -> str:
        return f"LogExpr(n={self.n}, rows={self.rows}, width={self.width}, terms={len(self.terms)})"


def _map_slot(e: LogExpr, i: int, rule) -> LogExpr:
    if not 1 <= i <= e.n:
        raise IndexError(f"variable index {i} out of range 1..{e.n}")
    terms = []
    for t in e.terms:
        for slot in rule(t.slots[i - 1]):
            terms.append(t.with_slot(i, slot))
    return LogExpr(e.n, terms, e.rows, e.width)


def _eye(m):
    return np.eye(m, dtype=complex)


def derive(e: LogExpr, i: int) -> LogExpr:
    """Partial derivative in z_i."""

    def rule(s: Slot):
        if s.kind == POWER:
            return [Slot(POWER, s.exponent - _eye(s.size), s.left @ s.exponent)]
        return [Slot(POWER, s.exponent - _eye(s.size), s.left)]

    return _map_slot(e, i, rule)


def antiderive(e: LogExpr, i: int) -> LogExpr:
    """An antiderivative in z_i, defined up to functions independent of z_i.

    The exponent B = A + Id of each power is split into its invertible part,
    integrated with the Drazin inverse of B, and its nilpotent part, which
    produces a Phi factor.
    """

    def rule(s: Slot):
        if s.kind != POWER:
            raise OutOfClassError(f"antiderivative of a Phi factor in slot {i} leaves the class")
        m = s.size
        if m == 0:
            return [s]
        b = s.exponent + _eye(m)
        p0 = spectral_split(b)
        p1 = _eye(m) - p0
        out = []
        if np.linalg.norm(p1) > 0:
            drazin = np.linalg.solve(b + p0, p1)
            out.append(Slot(POWER, b, s.left @ drazin))
        if np.linalg.norm(p0) > 0:
            out.append(Slot(PHI, b @ p0, s.left @ p0))
        return out

    return _map_slot(e, i, rule)


def mul_monomial(e: LogExpr, i: int, k: int) -> LogExpr:
    """Multiply by z_i^k."""
    if k == 0:
        return e

    def rule(s: Slot):
        if s.kind != POWER:
            raise OutOfClassError(f"z^{k} times a Phi factor in slot {i} leaves the class")
        return [Slot(POWER, s.exponent + k * _eye(s.size), s.left)]

    return _map_slot(e, i, rule)


def monodromy(e: LogExpr, i: int) -> LogExpr:
    """Analytic continuation once around z_i = 0 (ln z_i -> ln z_i + 2 pi i)."""

    def rule(s: Slot):
        if s.kind == POWER:
            return [Slot(POWER, s.exponent, s.left @ expm_2pii(s.exponent))]
        return [s, Slot(POWER, s.exponent, s.left @ psi(s.exponent))]

    return _map_slot(e, i, rule)


def branch_log(z: complex) -> complex:
    z = complex(z)
    if abs(z) == 0 or (z.real >= 0 and abs(z.imag) <= CUT_DISTANCE):
        raise BranchCutError(f"point {z} lies on the cut [0, inf)")
    theta = cmath.phase(z)
    if theta < 0:
        theta += 2 * math.pi
    return complex(math.log(abs(z)), theta)


def evaluate_logs(e: LogExpr, logs) -> np.ndarray:
    """Value of ``e`` with ln z_s replaced by the given numbers (any sheet)."""
    logs = list(logs)
    if len(logs) != e.n:
        raise ValueError(f"expected {e.n} coordinates, got {len(logs)}")
    total = np.zeros((e.rows, e.width), dtype=complex)
    for t in e.terms:
        acc = t.coeff
        for s, lz in zip(t.slots, logs):
            acc = acc @ s.value(lz)
        total += acc @ t.right
    return total


def evaluate(e: LogExpr, z) -> np.ndarray:
    return evaluate_logs(e, [branch_log(c) for c in np.atleast_1d(z)])


def sample_points(n: int, samples: int = 8, seed: int = 0) -> list[np.ndarray]:
    """Points with 0.2 <= |z_s| <= 5 and angle at least 0.1 away from the cut."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(samples):
        r = np.exp(rng.uniform(math.log(0.2), math.log(5.0), size=n))
        theta = rng.uniform(0.1, 2 * math.pi - 0.1, size=n)
        pts.append(r * np.exp(1j * theta))
    return pts


def expr_residual(e1: LogExpr, e2: LogExpr, samples: int = 8, seed: int = 0) -> float:
    """Largest sampled ||e1 - e2|| / (1 + max(||e1||, ||e2||))."""
    e1._check_compatible(e2)
    worst = 0.0
    for z in sample_points(e1.n, samples, seed):
        v1 = evaluate(e1, z)
        v2 = evaluate(e2, z)
        scale = 1.0 + max(np.linalg.norm(v1), np.linalg.norm(v2))
        worst = max(worst, float(np.linalg.norm(v1 - v2) / scale))
    return worst


def expr_equal(e1: LogExpr, e2: LogExpr, samples: int = 8, seed: int = 0, tol: float = 1e-8) -> bool:
    return expr_residual(e1, e2, samples, seed) <= tol


def residual_mod_constants(e1: LogExpr, e2: LogExpr, i: int, samples: int = 8, seed: int = 0) -> float:
    """Residual of e1 = e2 up to a function independent of z_i (compares the z_i-derivatives)."""
    return expr_residual(derive(e1, i), derive(e2, i), samples, seed)


def _close(a: np.ndarray, b: np.ndarray, tol: float = _SAME) -> bool:
    if a.shape != b.shape:
        return False
    if a.size == 0:
        return True
    return np.linalg.norm(a - b) <= tol * (1.0 + max(np.linalg.norm(a), np.linalg.norm(b)))


def _same_slot(s1: Slot, s2: Slot) -> bool:
    return s1.kind == s2.kind and _close(s1.exponent, s2.exponent) and _close(s1.left, s2.left)


def _merge_slot(s1: Slot, s2: Slot) -> Slot | None:
    """A slot equal to the sum of the two, or None."""
    if s1.kind != s2.kind:
        return None
    if s1.kind == PHI:
        if _close(s1.exponent, s2.exponent):
            return Slot(PHI, s1.exponent, s1.left + s2.left)
        return None
    if _close(s1.exponent, s2.exponent) or _powers_agree(s2.left, s2.exponent, s1.exponent):
        return Slot(POWER, s1.exponent, s1.left + s2.left)
    return None


def _powers_agree(left, x1, x2) -> bool:
    """Whether left z^x2 = left z^x1 identically.

    Both sides are exp-series in ln z, so this holds iff left x1^k = left x2^k
    for all k; the two sequences obey a common recurrence of order 2m, so
    k < 2m suffices.
    """
    m = x1.shape[0]
    a = left.copy()
    b = left.copy()
    scale = max(1.0, np.linalg.norm(x1), np.linalg.norm(x2))
    for _ in range(2 * m):
        if not _close(a, b, 1e-9):
            return False
        a = a @ x1 / scale
        b = b @ x2 / scale
    return True


def _is_zero_term(t: Term) -> bool:
    mats = [t.coeff, t.right] + [s.left for s in t.slots]
    return any(np.linalg.norm(mat) <= ZERO_NORM for mat in mats)


def _merge_terms(t1: Term, t2: Term) -> Term | None:
    same = [_same_slot(a, b) for a, b in zip(t1.slots, t2.slots)]
    same_coeff = _close(t1.coeff, t2.coeff)
    same_right = _close(t1.right, t2.right)
    if all(same):
        if same_right:
            return Term(t1.coeff + t2.coeff, t1.slots, t1.right)
        if same_coeff:
            return Term(t1.coeff, t1.slots, t1.right + t2.right)
        return None
    if same.count(False) == 1 and same_coeff and same_right:
        k = same.index(False)
        merged = _merge_slot(t1.slots[k], t2.slots[k])
        if merged is not None:
            return t1.with_slot(k + 1, merged)
    return None


def canonical(e: LogExpr) -> LogExpr:
    """Merge terms that differ in at most one slot and drop zero terms."""
    terms = [t for t in e.terms if not _is_zero_term(t)]
    changed = True
    while changed:
        changed = False
        for a in range(len(terms)):
            for b in range(a + 1, len(terms)):
                merged = _merge_terms(terms[a], terms[b])
                if merged is not None:
                    terms[a] = merged
                    del terms[b]
                    changed = True
                    break
            if changed:
                break
        terms = [t for t in terms if not _is_zero_term(t)]
    return LogExpr(e.n, terms, e.rows, e.width)


def structurally_equal(e1: LogExpr, e2: LogExpr) -> bool:
    """Term-by-term equality of canonical forms, up to term order and rounding."""
    e1._check_compatible(e2)
    t1 = list(canonical(e1).terms)
    t2 = list(canonical(e2).terms)
    if len(t1) != len(t2):
        return False
    for a in t1:
        for k, b in enumerate(t2):
            if (
                _close(a.coeff, b.coeff)
                and _close(a.right, b.right)
                and all(_same_slot(x, y) for x, y in zip(a.slots, b.slots))
            ):
                del t2[k]
                break
        else:
            return False
    return True
