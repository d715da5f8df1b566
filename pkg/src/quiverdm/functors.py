"""The functors Q and G between the Sigma1 and C categories, and the predicted can/var object."""

from __future__ import annotations

import numpy as np

from .kernels import psi, psi_inv, strip_log
from .quiver import Category, QuiverRep, max_deviation, require, validate
from .report import ValidationReport


def q_backward(u: np.ndarray, c: np.ndarray) -> np.ndarray:
    """psi(c u) c, evaluated as c psi(u c) when that has the smaller inner size."""
    if u.shape[0] < u.shape[1]:
        return c @ psi(u @ c)
    return psi(c @ u) @ c


def functor_Q(rep: QuiverRep, tol: float = 1e-9) -> QuiverRep:
    """Sigma1 -> C: keep u, replace each backward map c by psi(c u) c."""
    require(rep, Category.SIGMA1, tol)
    return rep.replace(y={e: q_backward(rep.u[e], rep.y[e]) for e in rep.edges()})


def g_backward(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """psi(s)^-1 w with s the strip logarithm of w u + Id."""
    s = strip_log(w @ u + np.eye(w.shape[0]))
    return psi_inv(s) @ w


def functor_G(rep: QuiverRep, tol: float = 1e-9) -> QuiverRep:
    """C -> Sigma1: keep u, replace each backward map w by psi(s)^-1 w."""
    require(rep, Category.C, tol)
    return rep.replace(y={e: g_backward(rep.u[e], rep.y[e]) for e in rep.edges()})


def predict_A(rep: QuiverRep, tol: float = 1e-9) -> QuiverRep:
    """Closed form of the can/var object on dual bases: forward y^T, backward u^T psi(y^T u^T)."""
    require(rep, Category.SIGMA1, tol)
    u, y = {}, {}
    for e in rep.edges():
        yt, ut = rep.y[e].T, rep.u[e].T
        u[e] = yt.copy()
        y[e] = ut @ psi(yt @ ut)
    return QuiverRep(rep.n, dict(rep.dims), u, y)


def roundtrip_check(rep: QuiverRep, category: Category | str, tol: float = 1e-8) -> ValidationReport:
    """Deviation of Q(G(rep)) (category C) or G(Q(rep)) (category Sigma1) from rep."""
    category = Category(category)
    pre = validate(rep, category)
    if not pre.passed:
        pre.info["stage"] = "input validation"
        return pre
    if category is Category.C:
        back = functor_Q(functor_G(rep))
    elif category is Category.SIGMA1:
        back = functor_G(functor_Q(rep))
    else:
        raise ValueError("round trips are defined for the c and sigma1 categories")
    report = ValidationReport(info={"tol": tol, "category": category.value})
    dev = max_deviation(rep, back)
    report.info["deviation"] = dev
    report.check("roundtrip", category.value, dev, tol)
    return report
