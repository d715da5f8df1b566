"""Hypercube quiver representations: data model, validation, duality and generation.

Vertices are subsets of {1..n}, stored as sorted tuples. For each vertex I
and each i not in I there is a forward map u[I, i]: V_I -> V_{I+i} and a
backward map y[I, i]: V_{I+i} -> V_I. Maps act on column vectors, so u[I, i]
is a dims(I+i) x dims(I) matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kernels import as_matrix, in_sigma1, resolved_spectrum
from .report import ValidationReport

Vertex = tuple[int, ...]
Edge = tuple[Vertex, int]

RELATION_TOL = 1e-9
INVERTIBLE_TOL = 1e-10


class Category(str, Enum):
    QUI = "qui"
    C = "c"
    SIGMA1 = "sigma1"


class CategoryError(ValueError):
    """Raised when a representation is not an object of the required category."""

    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


def vertex(items=()) -> Vertex:
    return tuple(sorted(set(items)))


def add(v: Vertex, i: int) -> Vertex:
    return vertex(v + (i,))


def remove(v: Vertex, i: int) -> Vertex:
    return tuple(k for k in v if k != i)


def all_vertices(n: int) -> list[Vertex]:
    return [c for r in range(n + 1) for c in itertools.combinations(range(1, n + 1), r)]


def all_edges(n: int) -> list[Edge]:
    return [(v, i) for v in all_vertices(n) for i in range(1, n + 1) if i not in v]


def fmt_vertex(v: Vertex) -> str:
    return "{" + ",".join(map(str, v)) + "}"


def fmt_edge(e: Edge) -> str:
    return f"{fmt_vertex(e[0])}->{e[1]}"


@dataclass(frozen=True, eq=False)
class QuiverRep:
    n: int
    dims: dict
    u: dict
    y: dict

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        verts = all_vertices(self.n)
        if set(self.dims) != set(verts):
            raise ValueError("dims must cover every vertex of the hypercube")
        edges = all_edges(self.n)
        if set(self.u) != set(edges) or set(self.y) != set(edges):
            raise ValueError("maps must cover every edge of the hypercube")
        object.__setattr__(self, "dims", {v: int(self.dims[v]) for v in verts})
        object.__setattr__(self, "u", {e: as_matrix(self.u[e]) for e in edges})
        object.__setattr__(self, "y", {e: as_matrix(self.y[e]) for e in edges})

    def vertices(self) -> list[Vertex]:
        return all_vertices(self.n)

    def edges(self) -> list[Edge]:
        return all_edges(self.n)

    def shape_errors(self) -> list[str]:
        errs = []
        for e in self.edges():
            src, i = e
            dst = add(src, i)
            want_u = (self.dims[dst], self.dims[src])
            if self.u[e].shape != want_u:
                errs.append(f"u at {fmt_edge(e)} has shape {self.u[e].shape}, expected {want_u}")
            if self.y[e].shape != want_u[::-1]:
                errs.append(f"y at {fmt_edge(e)} has shape {self.y[e].shape}, expected {want_u[::-1]}")
        return errs

    def scale(self) -> float:
        vals = [np.abs(m).max() for m in list(self.u.values()) + list(self.y.values()) if m.size]
        return max(vals, default=0.0)

    def replace(self, u=None, y=None) -> "QuiverRep":
        return QuiverRep(self.n, dict(self.dims), dict(u or self.u), dict(y or self.y))


def from_maps(n: int, dims, u, y) -> QuiverRep:
    """Build a rep from plain mappings keyed by (iterable subset, i)."""
    d = {vertex(k): int(v) for k, v in dims.items()}
    return QuiverRep(n, d, {(vertex(k[0]), k[1]): m for k, m in u.items()},
                     {(vertex(k[0]), k[1]): m for k, m in y.items()})


def scalar_rep(forward: complex, backward: complex) -> QuiverRep:
    """The n = 1 representation with one-dimensional vertices."""
    e = ((), 1)
    return QuiverRep(1, {(): 1, (1,): 1}, {e: [[forward]]}, {e: [[backward]]})


def zero_rep(n: int) -> QuiverRep:
    dims = {v: 0 for v in all_vertices(n)}
    u = {e: np.zeros((0, 0), dtype=complex) for e in all_edges(n)}
    return QuiverRep(n, dims, u, dict(u))


def max_deviation(a: QuiverRep, b: QuiverRep) -> float:
    """Max entrywise difference of all maps, relative to max(1, largest entry)."""
    if a.n != b.n or a.dims != b.dims:
        return float("inf")
    dev = 0.0
    for e in a.edges():
        for m1, m2 in ((a.u[e], b.u[e]), (a.y[e], b.y[e])):
            if m1.size:
                dev = max(dev, float(np.abs(m1 - m2).max()))
    return dev / max(1.0, a.scale(), b.scale())


def _rel(lhs: np.ndarray, rhs: np.ndarray) -> float:
    if lhs.size == 0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(lhs) + np.linalg.norm(rhs)))


def sigma1_distance(lam: complex) -> float:
    """How far lam is outside Sigma1 (0 inside)."""
    if in_sigma1(lam):
        return 0.0
    re, im = lam.real, lam.imag
    out = max(-re, re - 1.0, 0.0)
    return out if out > 0 else abs(im)


def validate(rep: QuiverRep, category: Category | str = Category.QUI, tol: float = RELATION_TOL,
             inv_tol: float = INVERTIBLE_TOL) -> ValidationReport:
    """Check the commutation relations and, per category, invertibility or the Sigma1 spectrum.

    Relation residuals are ||lhs - rhs||_F / (1 + ||lhs||_F + ||rhs||_F).
    """
    category = Category(category)
    report = ValidationReport(info={"category": category.value, "tol": tol})
    for msg in rep.shape_errors():
        report.fail("shape", msg, float("inf"))
    if not report.passed:
        return report
    u, y = rep.u, rep.y
    for v in rep.vertices():
        free = [k for k in range(1, rep.n + 1) if k not in v]
        for i, j in itertools.combinations(free, 2):
            vi, vj = add(v, i), add(v, j)
            where = f"{fmt_vertex(v)} i={i} j={j}"
            report.check("uu", where, _rel(u[vi, j] @ u[v, i], u[vj, i] @ u[v, j]), tol)
            report.check("yy", where, _rel(y[v, i] @ y[vi, j], y[v, j] @ y[vj, i]), tol)
            report.check("yu", where, _rel(y[vi, j] @ u[vj, i], u[v, i] @ y[v, j]), tol)
            report.check("yu", f"{fmt_vertex(v)} i={j} j={i}", _rel(y[vj, i] @ u[vi, j], u[v, j] @ y[v, i]), tol)
    if category is Category.C:
        for e in rep.edges():
            m = y[e] @ u[e] + np.eye(rep.dims[e[0]])
            if m.size == 0:
                continue
            s = np.linalg.svd(m, compute_uv=False)
            if not s[-1] > inv_tol * s[0]:
                report.fail("c-invertible", fmt_edge(e), s[-1] / s[0] if s[0] > 0 else 0.0)
    if category is Category.SIGMA1:
        for e in rep.edges():
            for tag, prod in (("sigma1-yu", y[e] @ u[e]), ("sigma1-uy", u[e] @ y[e])):
                for lam in resolved_spectrum(prod):
                    if not in_sigma1(lam, tol):
                        report.fail(tag, f"{fmt_edge(e)} eigenvalue {lam:.6g}", sigma1_distance(lam))
    return report


def require(rep: QuiverRep, category: Category | str, tol: float = RELATION_TOL) -> None:
    report = validate(rep, category, tol)
    if not report.passed:
        detail = "; ".join(f"{v.tag} at {v.where}" for v in report.violations[:5])
        raise CategoryError(f"representation is not in {Category(category).value}: {detail}", report)


def dualize(rep: QuiverRep) -> QuiverRep:
    """Dual representation: forward maps become y^T and backward maps u^T."""
    return QuiverRep(rep.n, dict(rep.dims), {e: rep.y[e].T.copy() for e in rep.edges()},
                     {e: rep.u[e].T.copy() for e in rep.edges()})


@dataclass(frozen=True, eq=False)
class QuiverMorphism:
    """A family h[I]: V_I -> V'_I."""

    h: dict

    def compose(self, first: "QuiverMorphism") -> "QuiverMorphism":
        """self after first."""
        return QuiverMorphism({v: self.h[v] @ first.h[v] for v in self.h})


def identity_morphism(rep: QuiverRep) -> QuiverMorphism:
    return QuiverMorphism({v: np.eye(rep.dims[v], dtype=complex) for v in rep.vertices()})


def dualize_morphism(m: QuiverMorphism) -> QuiverMorphism:
    """Transposed family; it runs from the dual of the target to the dual of the source."""
    return QuiverMorphism({v: h.T.copy() for v, h in m.h.items()})


def validate_morphism(src: QuiverRep, dst: QuiverRep, m: QuiverMorphism,
                      tol: float = RELATION_TOL) -> ValidationReport:
    report = ValidationReport(info={"tol": tol})
    if src.n != dst.n or set(m.h) != set(src.vertices()):
        report.fail("shape", "morphism does not match the hypercube", float("inf"))
        return report
    for v in src.vertices():
        want = (dst.dims[v], src.dims[v])
        if m.h[v].shape != want:
            report.fail("shape", f"h at {fmt_vertex(v)} has shape {m.h[v].shape}, expected {want}", float("inf"))
    if not report.passed:
        return report
    for e in src.edges():
        v, i = e
        w = add(v, i)
        report.check("intertwine-u", fmt_edge(e), _rel(dst.u[e] @ m.h[v], m.h[w] @ src.u[e]), tol)
        report.check("intertwine-y", fmt_edge(e), _rel(m.h[v] @ src.y[e], dst.y[e] @ m.h[w]), tol)
    return report


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def direct_sum(a: QuiverRep, b: QuiverRep) -> QuiverRep:
    if a.n != b.n:
        raise ValueError(f"cannot sum representations with n={a.n} and n={b.n}")
    return QuiverRep(
        a.n,
        {v: a.dims[v] + b.dims[v] for v in a.vertices()},
        {e: _block_diag(a.u[e], b.u[e]) for e in a.edges()},
        {e: _block_diag(a.y[e], b.y[e]) for e in a.edges()},
    )


def _crandn(rng, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _unitary(rng, d: int) -> np.ndarray:
    q, r = np.linalg.qr(_crandn(rng, d, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def well_conditioned(rng, d: int, cond: float = 10.0) -> np.ndarray:
    """Random invertible matrix with condition number at most ``cond``."""
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    s = np.exp(rng.uniform(0.0, np.log(cond), size=d))
    return (_unitary(rng, d) * s) @ _unitary(rng, d)


def conjugate(rep: QuiverRep, seed: int = 0, cond: float = 10.0) -> tuple[QuiverRep, QuiverMorphism]:
    """An isomorphic copy in random bases, with the isomorphism R: rep -> copy."""
    rng = np.random.default_rng(seed)
    r = {v: well_conditioned(rng, rep.dims[v], cond) for v in rep.vertices()}
    rinv = {v: np.linalg.inv(m) if m.size else m for v, m in r.items()}
    u, y = {}, {}
    for e in rep.edges():
        v, i = e
        w = add(v, i)
        u[e] = r[w] @ rep.u[e] @ rinv[v]
        y[e] = r[v] @ rep.y[e] @ rinv[w]
    return QuiverRep(rep.n, dict(rep.dims), u, y), QuiverMorphism(r)


SPECTRA = ("generic", "nilpotent", "mixed", "boundary")


def _sigma1_matrix(rng, d: int, spectrum: str) -> np.ndarray:
    """A random d x d matrix with eigenvalues in Sigma1, possibly defective."""
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    lam = rng.uniform(0.05, 0.95, d) + 1j * rng.uniform(-0.5, 0.5, d)
    if spectrum == "nilpotent":
        lam[:] = 0
    elif spectrum == "mixed":
        lam[: (d + 1) // 2] = 0
    elif spectrum == "boundary":
        for k in range(d):
            if k % 2 == 0:
                lam[k] = 1j * rng.uniform(0.05, 0.5)
            else:
                lam[k] = 1 - 1j * rng.uniform(0.05, 0.5)
    t = np.diag(lam) + 0.5 * np.triu(_crandn(rng, d, d), 1)
    if spectrum == "nilpotent":
        t = np.diag(lam) + np.triu(np.ones((d, d)), 1)
    w = well_conditioned(rng, d, 4.0)
    return w @ t @ np.linalg.inv(w)


def _full_rank(rng, rows: int, cols: int) -> np.ndarray:
    if rows == cols:
        return well_conditioned(rng, rows, 4.0)
    return _crandn(rng, rows, cols)


def _factor(rng, a: int, b: int, category: Category, spectrum: str) -> tuple[np.ndarray, np.ndarray]:
    """One-cube factor: u is b x a, y is a x b."""
    if category is Category.QUI:
        return _crandn(rng, b, a), _crandn(rng, a, b)
    if category is Category.C:
        for _ in range(1000):
            u, y = _crandn(rng, b, a), _crandn(rng, a, b)
            m = y @ u + np.eye(a)
            if a == 0 or b == 0:
                return u, y
            # keep an eigenvalue outside the strip so the factor is not also a Sigma1 object
            outside = any(not in_sigma1(lam, 1e-3) for lam in resolved_spectrum(y @ u))
            if outside and np.linalg.svd(m, compute_uv=False)[-1] > 1e-3:
                return u, y
        raise RuntimeError("could not sample an invertible C factor in 1000 tries")
    if spectrum == "nilpotent" and a == b:
        u = np.eye(a, dtype=complex)
        return u, _sigma1_matrix(rng, a, spectrum)
    u = _full_rank(rng, b, a)
    if a <= b:
        return u, _sigma1_matrix(rng, a, spectrum) @ np.linalg.pinv(u)
    return u, np.linalg.pinv(u) @ _sigma1_matrix(rng, b, spectrum)


def _factor_dims(n: int, dims_per_factor) -> list[tuple[int, int]]:
    if isinstance(dims_per_factor, (int, np.integer)):
        return [(int(dims_per_factor),) * 2] * n
    out = []
    for d in dims_per_factor:
        out.append((int(d), int(d)) if isinstance(d, (int, np.integer)) else (int(d[0]), int(d[1])))
    if len(out) != n:
        raise ValueError(f"need {n} factor dimensions, got {len(out)}")
    return out


def tensor_rep(n: int, factors: list[tuple[np.ndarray, np.ndarray]]) -> QuiverRep:
    """Tensor product of one-cube representations; factor k acts in slot k."""
    def space(k, v):
        u_k = factors[k - 1][0]
        return u_k.shape[0] if k in v else u_k.shape[1]

    dims = {v: int(np.prod([space(k, v) for k in range(1, n + 1)])) for v in all_vertices(n)}
    u, y = {}, {}
    for e in all_edges(n):
        v, i = e
        mu, my = np.ones((1, 1)), np.ones((1, 1))
        for k in range(1, n + 1):
            if k == i:
                fu, fy = factors[k - 1]
            else:
                fu = fy = np.eye(space(k, v))
            mu, my = np.kron(mu, fu), np.kron(my, fy)
        u[e], y[e] = mu, my
    return QuiverRep(n, dims, u, y)


def generate(n: int, dims_per_factor=1, category: Category | str = Category.SIGMA1, seed: int = 0, *,
             summands: int = 1, conjugated: bool = False, spectrum: str = "generic") -> QuiverRep:
    """Random object of the category: tensor products of one-cube factors.

    ``dims_per_factor`` is an int, a list of ints, or a list of (a, b) pairs,
    one per factor. ``spectrum`` selects the Sigma1 factor spectra: "generic",
    "nilpotent", "mixed" (half zero) or "boundary" (on the strip edges).
    """
    category = Category(category)
    if n < 1:
        raise ValueError("n must be at least 1")
    if spectrum not in SPECTRA:
        raise ValueError(f"unknown spectrum kind {spectrum!r}")
    rng = np.random.default_rng(seed)
    fdims = _factor_dims(n, dims_per_factor)
    if any(a < 1 or b < 1 for a, b in fdims):
        raise ValueError("factor dimensions must be at least 1")
    rep = None
    for _ in range(summands):
        part = tensor_rep(n, [_factor(rng, a, b, category, spectrum) for a, b in fdims])
        rep = part if rep is None else direct_sum(rep, part)
    if conjugated:
        rep, _ = conjugate(rep, int(rng.integers(2**31)))
    return rep
