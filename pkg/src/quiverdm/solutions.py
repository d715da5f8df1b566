"""Solution families of the quiver D-module attached to a Sigma1 representation.

At vertex I the fundamental solution is eta_I(alpha) = alpha * prod_l z_l^{L_l}
where L_l = B[I, I+l] B[I+l, I] for l not in I and L_m = B[I, I-m] B[I-m, I] - Id
for m in I. Here B[K, L]: V_L -> V_K is the edge map between neighbouring
vertices: the backward map y when L is the bigger set, the forward map u
otherwise. Row vectors alpha act from the left, so a coefficient matrix with
several rows handles a whole basis of alphas at once.

From one vertex the solution is propagated along edges by z-steps
(multiply by 1/z_i and an edge map) and d-steps (right-multiply, then take an
antiderivative in z_i). Canonical maps and variations are then read off from
the monodromy of these expressions and compared with their closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functors import functor_Q, predict_A
from .kernels import as_matrix, in_sigma, psi, resolved_spectrum
from .logexpr import (
    LogExpr,
    antiderive,
    derive,
    evaluate,
    expr_residual,
    monodromy,
    mul_monomial,
    power,
    residual_mod_constants,
    sample_points,
)
from .quiver import (
    Category,
    CategoryError,
    QuiverRep,
    Vertex,
    add,
    dualize,
    fmt_edge,
    fmt_vertex,
    max_deviation,
    remove,
    require,
    validate,
    vertex,
)
from .report import ValidationReport

INTO = "into"
OUTOF = "outof"


def edge_map(rep: QuiverRep, k: Vertex, l: Vertex) -> np.ndarray:
    """B[K, L]: V_L -> V_K for neighbouring vertices K and L."""
    k, l = vertex(k), vertex(l)
    if len(l) == len(k) + 1 and set(k) < set(l):
        (i,) = set(l) - set(k)
        return rep.y[k, i]
    if len(k) == len(l) + 1 and set(l) < set(k):
        (i,) = set(k) - set(l)
        return rep.u[l, i]
    raise ValueError(f"{fmt_vertex(k)} and {fmt_vertex(l)} are not neighbours")


def loop_map(rep: QuiverRep, k: Vertex, l: Vertex) -> np.ndarray:
    """B[K, L] B[L, K], an endomorphism of V_K."""
    return edge_map(rep, k, l) @ edge_map(rep, l, k)


def slot_exponent(rep: QuiverRep, v: Vertex, s: int) -> np.ndarray:
    if s in v:
        return loop_map(rep, v, remove(v, s)) - np.eye(rep.dims[v])
    return loop_map(rep, v, add(v, s))


def _alpha(rep: QuiverRep, v: Vertex, alpha) -> np.ndarray:
    d = rep.dims[v]
    if alpha is None:
        return np.eye(d, dtype=complex)
    a = np.asarray(alpha, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[1] != d:
        raise ValueError(f"alpha must have {d} columns at vertex {fmt_vertex(v)}, got shape {a.shape}")
    return as_matrix(a) if a.size else a


def build_eta(rep: QuiverRep, v, alpha=None, check: bool = True) -> LogExpr:
    """eta_v(alpha) as a single-term expression; alpha defaults to the identity (all basis rows)."""
    v = vertex(v)
    if check:
        require(rep, Category.SIGMA1)
    a = _alpha(rep, v, alpha)
    slots = [power(slot_exponent(rep, v, s)) for s in range(1, rep.n + 1)]
    return LogExpr.single(a, slots)


def verify_pde(rep: QuiverRep, v, alpha=None, samples: int = 8, seed: int = 0, tol: float = 1e-9,
               eta: LogExpr | None = None, check: bool = True) -> ValidationReport:
    """Check z_s d/dz_s eta = eta L_s for every slot s, symbolically and at sample points.

    Passing a previously built ``eta`` checks it against the current ``rep``.
    """
    v = vertex(v)
    if check:
        require(rep, Category.SIGMA1)
    if eta is None:
        eta = build_eta(rep, v, alpha, check=False)
    report = ValidationReport(info={"vertex": fmt_vertex(v), "samples": samples, "seed": seed, "tol": tol})
    for s in range(1, rep.n + 1):
        target = slot_exponent(rep, v, s)
        lhs = mul_monomial(derive(eta, s), s, 1)
        rhs = eta @ target
        where = f"{fmt_vertex(v)} slot {s}"
        report.check("pde-numeric", where, expr_residual(lhs, rhs, samples, seed), tol)
        report.check("pde-symbolic", where, _euler_defect(eta, s, target), tol)
    return report


def _euler_defect(eta: LogExpr, s: int, target: np.ndarray) -> float:
    """How far the Euler rule z d/dz (L z^X) = L X z^X fails to move X to the right end as ``target``.

    Zero when slot s carries exactly ``target`` and it commutes with every
    later slot and with the right multiplier.
    """
    scale = 1.0 + np.linalg.norm(target)
    worst = 0.0
    for t in eta.terms:
        x = t.slots[s - 1].exponent
        mats = [t.slots[s - 1].left]
        for later in t.slots[s:]:
            mats += [later.exponent, later.left]
        worst = max(worst, np.linalg.norm(x - target) / scale)
        for m in mats:
            worst = max(worst, np.linalg.norm(target @ m - m @ target) / (scale * (1.0 + np.linalg.norm(m))))
        if t.right.shape[0] == t.right.shape[1]:
            r = t.right
            worst = max(worst, np.linalg.norm(target @ r - r @ target) / (scale * (1.0 + np.linalg.norm(r))))
    return float(worst)


@dataclass
class SolutionFamily:
    """Solutions phi^K attached to eta at ``base``, filled in vertex by vertex."""

    rep: QuiverRep
    base: Vertex
    alpha: np.ndarray
    exprs: dict = field(default_factory=dict)


def solution_family(rep: QuiverRep, base, alpha=None, check: bool = True) -> SolutionFamily:
    base = vertex(base)
    a = _alpha(rep, base, alpha)
    eta = build_eta(rep, base, a, check=check)
    return SolutionFamily(rep, base, a, {base: eta})


def extend_edge(fam: SolutionFamily, k, direction: str, i: int) -> SolutionFamily:
    """Fill the neighbour of K across direction i.

    ``into`` (i not in the base) gives phi^{K+i} = z_i^-1 phi^K B[K, K+i];
    ``outof`` (i in the base) gives phi^{K-i} = antiderivative in z_i of phi^K B[K, K-i].
    """
    k = vertex(k)
    if k not in fam.exprs:
        raise KeyError(f"no solution stored at {fmt_vertex(k)}")
    src = fam.exprs[k]
    if direction == INTO:
        if i in fam.base or i in k:
            raise ValueError(f"z-step along {i} needs {i} outside both the base and {fmt_vertex(k)}")
        target = add(k, i)
        expr = mul_monomial(src, i, -1) @ edge_map(fam.rep, k, target)
    elif direction == OUTOF:
        if i not in fam.base or i not in k:
            raise ValueError(f"d-step along {i} needs {i} inside both the base and {fmt_vertex(k)}")
        target = remove(k, i)
        expr = antiderive(src @ edge_map(fam.rep, k, target), i)
    else:
        raise ValueError(f"direction must be {INTO!r} or {OUTOF!r}")
    exprs = dict(fam.exprs)
    exprs[target] = expr
    return SolutionFamily(fam.rep, fam.base, fam.alpha, exprs)


def canonical_path(base: Vertex, k: Vertex) -> list[tuple[str, int]]:
    """Steps from base to K: remove base - K ascending, then add K - base ascending."""
    steps = [(OUTOF, m) for m in sorted(set(base) - set(k))]
    return steps + [(INTO, l) for l in sorted(set(k) - set(base))]


def run_steps(fam: SolutionFamily, steps) -> tuple[SolutionFamily, Vertex]:
    cur = fam.base
    for direction, i in steps:
        fam = extend_edge(fam, cur, direction, i)
        cur = add(cur, i) if direction == INTO else remove(cur, i)
    return fam, cur


def solve_at(fam: SolutionFamily, k) -> SolutionFamily:
    """Fill phi^K by following the canonical path from the base."""
    k = vertex(k)
    if k in fam.exprs:
        return fam
    fam, _ = run_steps(fam, canonical_path(fam.base, k))
    return fam


def order_independence(fam: SolutionFamily, k, samples: int = 8, seed: int = 0) -> float:
    """Residual between the two orders of a two-step extension from the base to K."""
    k = vertex(k)
    steps = canonical_path(fam.base, k)
    if len(steps) != 2:
        raise ValueError("order independence is checked for vertices two steps from the base")
    a, _ = run_steps(fam, steps)
    b, _ = run_steps(fam, steps[::-1])
    return expr_residual(a.exprs[k], b.exprs[k], samples, seed)


def roundtrip_residual(rep: QuiverRep, v, i: int, alpha=None, samples: int = 8, seed: int = 0) -> float:
    """Extend eta_v up across edge i and back down; residual against eta_v.

    The upward step must reproduce eta_{v+i}(alpha B[v, v+i]) exactly. The
    downward step lands in the solutions at v only modulo functions
    independent of z_i, so that comparison is made on d/dz_i.
    """
    v = vertex(v)
    w = _edge_check(rep, v, i)
    a = _alpha(rep, v, alpha)
    up = can_expression(rep, v, i, a)
    fam_w = solution_family(rep, w, a @ edge_map(rep, v, w), check=False)
    r_up = expr_residual(up, fam_w.exprs[w], samples, seed)
    down = extend_edge(fam_w, w, OUTOF, i).exprs[v]
    return max(r_up, residual_mod_constants(down, build_eta(rep, v, a, check=False), i, samples, seed))


def _edge_check(rep: QuiverRep, v: Vertex, i: int) -> Vertex:
    if i in v:
        raise ValueError(f"direction {i} must not lie in {fmt_vertex(v)}")
    return add(v, i)


def can_expression(rep: QuiverRep, v, i: int, alpha=None) -> LogExpr:
    """phi^{v+i} of the family based at v: z_i^-1 eta_v(alpha) B[v, v+i]."""
    v = vertex(v)
    fam = solution_family(rep, v, alpha, check=False)
    return extend_edge(fam, v, INTO, i).exprs[add(v, i)]


def variation_matrix(rep: QuiverRep, v, i: int) -> np.ndarray:
    """Theta = psi(B[v+i, v] B[v, v+i]) B[v+i, v], as a dims(v+i) x dims(v) matrix."""
    v = vertex(v)
    w = add(v, i)
    return psi(loop_map(rep, w, v)) @ edge_map(rep, w, v)


def verify_can(rep: QuiverRep, v, i: int, alpha=None, samples: int = 8, seed: int = 0, tol: float = 1e-9,
               alpha_image=None, check: bool = True) -> ValidationReport:
    """Check that alpha -> alpha B[v, v+i] carries eta_v to eta_{v+i} across the edge.

    ``alpha_image`` overrides the image alpha B[v, v+i], e.g. to test a wrong value.
    """
    v = vertex(v)
    w = _edge_check(rep, v, i)
    if check:
        require(rep, Category.SIGMA1)
    a = _alpha(rep, v, alpha)
    img = a @ edge_map(rep, v, w) if alpha_image is None else _alpha(rep, w, alpha_image)
    where = fmt_edge((v, i))
    report = ValidationReport(info={"edge": where, "samples": samples, "seed": seed, "tol": tol})
    eta_up = build_eta(rep, w, img, check=False)
    report.check("can-z", where, expr_residual(eta_up, can_expression(rep, v, i, a), samples, seed), tol)
    down = antiderive(eta_up @ edge_map(rep, w, v), i)
    eta_v = build_eta(rep, v, a, check=False)
    report.check("can-d", where, residual_mod_constants(down, eta_v, i, samples, seed), tol)
    return report


def var_expressions(rep: QuiverRep, v, i: int, alpha_up=None) -> tuple[LogExpr, LogExpr]:
    """(phi^{v+i}, phi^v) for the family based at v+i."""
    v = vertex(v)
    w = add(v, i)
    fam = solution_family(rep, w, alpha_up, check=False)
    fam = extend_edge(fam, w, OUTOF, i)
    return fam.exprs[w], fam.exprs[v]


def verify_var(rep: QuiverRep, v, i: int, alpha_up=None, samples: int = 8, seed: int = 0, tol: float = 1e-9,
               check: bool = True) -> ValidationReport:
    """Check the variations of the family based at v+i against alpha -> alpha Theta."""
    v = vertex(v)
    w = _edge_check(rep, v, i)
    if check:
        require(rep, Category.SIGMA1)
    a = _alpha(rep, w, alpha_up)
    theta = variation_matrix(rep, v, i)
    phi_up, phi_down = var_expressions(rep, v, i, a)
    eta_theta = build_eta(rep, v, a @ theta, check=False)
    where = fmt_edge((v, i))
    report = ValidationReport(info={"edge": where, "samples": samples, "seed": seed, "tol": tol})
    var_up = monodromy(phi_up, i) - phi_up
    expected_up = mul_monomial(eta_theta, i, -1) @ edge_map(rep, v, w)
    report.check("var-up", where, expr_residual(var_up, expected_up, samples, seed), tol)
    var_down = monodromy(phi_down, i) - phi_down
    report.check("var-down", where, expr_residual(var_down, eta_theta, samples, seed), tol)
    return report


def verify_var_invertible(a, samples: int = 8, seed: int = 0, tol: float = 1e-8,
                          spectrum_tol: float = 1e-9) -> ValidationReport:
    """Check that the variation of an antiderivative of z^A is invertible at sample points."""
    a = as_matrix(a, square=True)
    outside = [lam for lam in resolved_spectrum(a) if not in_sigma(lam, spectrum_tol)]
    if outside:
        raise ValueError(f"spectrum outside Sigma: {', '.join(f'{x:.6g}' for x in outside)}")
    m = a.shape[0]
    e = antiderive(LogExpr.single(np.eye(m), [power(a)]), 1)
    var = monodromy(e, 1) - e
    report = ValidationReport(info={"samples": samples, "seed": seed, "tol": tol})
    smallest = np.inf
    for k, z in enumerate(sample_points(1, samples, seed)):
        val = evaluate(var, z)
        s = np.linalg.svd(val, compute_uv=False)[-1] if m else np.inf
        smallest = min(smallest, s)
        if not s > tol:
            report.fail("var-singular", f"sample {k}", s)
    report.info["min_singular_value"] = float(smallest)
    return report


def _read_off(value: np.ndarray, fundamental: np.ndarray) -> np.ndarray:
    """The row map M with value = M fundamental."""
    if value.size == 0 or fundamental.size == 0:
        return np.zeros((value.shape[0], fundamental.shape[0]), dtype=complex)
    return np.linalg.solve(fundamental.T, value.T).T


def extract_can_var(rep: QuiverRep, point=None) -> QuiverRep:
    """Read the canonical and variation matrices off the solution expressions.

    For each edge the can (resp. var) expression equals M times the
    fundamental solution at the upper (resp. lower) vertex; M is recovered by
    evaluating both at ``point`` (default all coordinates -1). The result is
    transposed into the column convention: forward = can^T, backward = var^T.
    """
    z0 = np.full(rep.n, -1.0 + 0j) if point is None else np.asarray(point, dtype=complex)
    u, y = {}, {}
    for e in rep.edges():
        v, i = e
        w = add(v, i)
        can = evaluate(can_expression(rep, v, i), z0)
        fund_w = evaluate(build_eta(rep, w, check=False), z0)
        phi_up, phi_down = var_expressions(rep, v, i)
        var = evaluate(monodromy(phi_down, i) - phi_down, z0)
        fund_v = evaluate(build_eta(rep, v, check=False), z0)
        u[e] = _read_off(can, fund_w).T
        y[e] = _read_off(var, fund_v).T
    return QuiverRep(rep.n, dict(rep.dims), u, y)


def verify_main_theorem(rep: QuiverRep, samples: int = 8, seed: int = 0, tol: float = 1e-7,
                        sub_tol: float = 1e-9) -> ValidationReport:
    """Certify can/var per edge, assemble them, and compare with predict_A and Q(D(rep))."""
    pre = validate(rep, Category.SIGMA1)
    if not pre.passed:
        raise CategoryError("main theorem check needs a Sigma1 representation", pre)
    report = ValidationReport(info={"samples": samples, "seed": seed, "tol": tol})
    for v, i in rep.edges():
        report.extend(verify_can(rep, v, i, samples=samples, seed=seed, tol=sub_tol, check=False))
        report.extend(verify_var(rep, v, i, samples=samples, seed=seed, tol=sub_tol, check=False))
    assembled = extract_can_var(rep)
    predicted = predict_A(rep)
    via_q = functor_Q(dualize(rep))
    dev_a = max_deviation(assembled, predicted)
    dev_q = max_deviation(assembled, via_q)
    report.info["deviation_predict_A"] = dev_a
    report.info["deviation_Q_dual"] = dev_q
    report.check("main-predict_A", "assembled", dev_a, tol)
    report.check("main-Q_dual", "assembled", dev_q, tol)
    c_check = validate(assembled, Category.C, tol=max(tol, 1e-9))
    for viol in c_check.violations:
        report.fail("main-c-valid", viol.where, viol.residual)
    return report


def verify_suite(rep: QuiverRep, suite: str, samples: int = 8, seed: int = 0, tol: float | None = None) -> ValidationReport:
    """Run one verification suite ("pde", "canvar" or "main") over the whole representation."""
    require(rep, Category.SIGMA1)
    report = ValidationReport(info={"suite": suite, "samples": samples, "seed": seed})
    if suite == "pde":
        tol = 1e-9 if tol is None else tol
        for v in rep.vertices():
            report.extend(verify_pde(rep, v, samples=samples, seed=seed, tol=tol, check=False))
    elif suite == "canvar":
        tol = 1e-9 if tol is None else tol
        for v, i in rep.edges():
            report.extend(verify_can(rep, v, i, samples=samples, seed=seed, tol=tol, check=False))
            report.extend(verify_var(rep, v, i, samples=samples, seed=seed, tol=tol, check=False))
    elif suite == "main":
        tol = 1e-7 if tol is None else tol
        sub = verify_main_theorem(rep, samples, seed, tol)
        report.extend(sub)
        report.info.update({k: val for k, val in sub.info.items() if k.startswith("deviation")})
    else:
        raise ValueError(f"unknown suite {suite!r}")
    report.info["tol"] = tol
    return report
