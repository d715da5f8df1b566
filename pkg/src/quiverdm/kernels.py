"""Dense complex matrix kernels.

The strip logarithm, the function psi(x) = (exp(2 pi i x) - 1) / x and its
inverse, exp(2 pi i A), and membership tests for the strip
Sigma1 = {0 <= Re < 1} with the half-open boundary convention.

The strip logarithm is evaluated with a blocked Schur-Parlett scheme: the
complex Schur form is reordered so that eigenvalues of the same cluster are
contiguous, each diagonal block is handled by a Taylor series of log around
the cluster mean, and the off-diagonal blocks come from Sylvester solves.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

TWO_PI_I = 2j * math.pi
DEFAULT_TOL = 1e-10

# clustering radius, relative to the eigenvalue modulus
CLUSTER_GAP = 0.1
# a k-fold defective eigenvalue is expected to scatter over SCATTER**(1/k) (relative)
SCATTER = 1e-12
POWER_SUM_RATIO = 0.5
# a point is "on the positive real axis" when |Im| is below this (relative)
AXIS_TOL = 1e-12
# modulus slack for the on-axis rule |mu| <= 1
UNIT_TOL = 1e-10
SELF_CHECK = 1e-6
_MAX_TERMS = 4000


class SingularMatrixError(ValueError):
    """Raised when a matrix that must be invertible is numerically singular."""


class BranchCutError(ValueError):
    """Raised when a logarithm branch cannot be chosen consistently."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative kernel fails to converge or self-check."""


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def in_sigma1(lam: complex, tol: float = 0.0) -> bool:
    """Membership in Sigma1, relaxed by ``tol``.

    Re = 0 requires Im >= 0 and Re = 1 requires Im < 0.
    """
    lam = complex(lam)
    re, im = lam.real, lam.imag
    if re < -tol or re > 1 + tol:
        return False
    if re <= tol:
        return im >= -tol
    if re >= 1 - tol:
        return im < tol
    return True


def in_sigma(lam: complex, tol: float = 0.0) -> bool:
    """Membership in Sigma = Sigma1 - 1."""
    return in_sigma1(complex(lam) + 1, tol)


def spectrum(a) -> np.ndarray:
    a = as_matrix(a, square=True)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(a)


def resolved_spectrum(a, radius: float | None = None) -> np.ndarray:
    """Eigenvalues with rounding scatter of defective blocks averaged out.

    A k-fold defective eigenvalue is computed as k points scattered over a
    radius of roughly (eps ||A||)^(1/k), while their mean stays accurate.
    For k from the full size down to 2, eigenvalues are linked within
    SCATTER**(1/k) * max(1, ||A||) and every group with at least k members
    is accepted and set aside. A fixed ``radius`` replaces that rule with
    plain single linkage. Each group is replaced by its mean.
    """
    a = as_matrix(a, square=True)
    ev = spectrum(a)
    if ev.size == 0:
        return ev
    out = ev.copy()
    if radius is not None:
        groups = _groups(ev, range(len(ev)), radius)
    else:
        groups = _defect_groups(ev, max(1.0, np.linalg.norm(a, 2)))
    for idx in groups:
        out[idx] = ev[idx].mean()
    return out


def _defect_groups(ev: np.ndarray, scale: float) -> list[list[int]]:
    """Groups of computed eigenvalues whose spread is consistent with one defective eigenvalue.

    Rounding turns a k-fold defective eigenvalue into roughly the k-th roots
    of a tiny number around the true value, so the centred power sums
    p_j = sum (lam - mean)^j nearly vanish for 1 < j < k. For k from the full
    size down to 2, eigenvalues are linked within SCATTER**(1/k) * scale, and
    a linked group with at least k members is accepted when its power sums up
    to k - 1 pass that test, or when it is tight relative to its own modulus.
    A group that also holds a nearby distinct eigenvalue fails both and is
    retried at the smaller radius of the next level.
    """
    free = list(range(len(ev)))
    groups = []
    for k in range(len(ev), 1, -1):
        found = []
        for g in _groups(ev, free, SCATTER ** (1.0 / k) * scale):
            if len(g) < k:
                continue
            vals = ev[g]
            tight = np.abs(vals - vals.mean()).max() <= SCATTER ** (1.0 / k) * abs(vals.mean())
            if tight or _root_like(vals, k):
                found.append(g)
        groups += found
        taken = {j for g in found for j in g}
        free = [j for j in free if j not in taken]
    return groups


def _root_like(vals: np.ndarray, k: int) -> bool:
    dev = vals - vals.mean()
    for j in range(2, k):
        total = np.sum(np.abs(dev) ** j)
        if total > 0 and abs(np.sum(dev**j)) > POWER_SUM_RATIO * total:
            return False
    return True


def _groups(ev: np.ndarray, idx, radius: float) -> list[list[int]]:
    idx = list(idx)
    labels = _union_find(len(idx), lambda j, k: abs(ev[idx[j]] - ev[idx[k]]) <= radius)
    out = {}
    for j, lab in enumerate(labels):
        out.setdefault(lab, []).append(idx[j])
    return list(out.values())


def expm_guarded(x: np.ndarray) -> np.ndarray:
    """scipy expm, guarded against its triangular shortcut.

    For triangular input scipy fills the superdiagonal with divided
    differences of exp over neighbouring diagonal entries, which loses all
    accuracy when those entries are distinct but very close. Such input is
    moved off triangular form by a fixed Householder reflection first.
    """
    d = x.shape[0]
    if d >= 2 and (not np.any(np.tril(x, -1)) or not np.any(np.triu(x, 1))):
        diag = np.diag(x)
        gaps = np.abs(np.diff(diag))
        if np.any((gaps > 0) & (gaps < 1e-2 * np.maximum(1.0, np.abs(diag[:-1])))):
            v = np.arange(1.0, d + 1.0)
            h = np.eye(d) - 2.0 * np.outer(v, v) / (v @ v)
            return h @ sla.expm(h @ x @ h) @ h
    return sla.expm(x)


def expm_2pii(a) -> np.ndarray:
    """exp(2 pi i A)."""
    a = as_matrix(a, square=True)
    if a.shape[0] == 0:
        return a.copy()
    return expm_guarded(TWO_PI_I * a)


def phi1(x) -> np.ndarray:
    """sum_k X^k / (k+1)!, computed without dividing by X."""
    x = as_matrix(x, square=True)
    d = x.shape[0]
    if d == 0:
        return x.copy()
    big = np.zeros((2 * d, 2 * d), dtype=complex)
    big[:d, :d] = x
    big[:d, d:] = np.eye(d)
    return expm_guarded(big)[:d, d:]


def psi(a) -> np.ndarray:
    """psi(A) = sum_{k>=1} (2 pi i)^k A^(k-1) / k!, so A psi(A) = exp(2 pi i A) - Id."""
    a = as_matrix(a, square=True)
    return TWO_PI_I * phi1(TWO_PI_I * a)


def psi_inv(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Inverse of psi(A); psi(A) is singular exactly when A has a nonzero integer eigenvalue."""
    a = as_matrix(a, square=True)
    if a.shape[0] == 0:
        return a.copy()
    for lam in spectrum(a):
        k = round(lam.real)
        if k != 0 and abs(lam - k) <= max(tol, 1e-8) * max(1.0, abs(lam)):
            raise SingularMatrixError(f"psi(A) is singular: eigenvalue {lam:.6g} is a nonzero integer")
    p = psi(a)
    _require_invertible(p, tol, "psi(A)")
    return np.linalg.inv(p)


def _require_invertible(m: np.ndarray, tol: float, what: str) -> None:
    s = np.linalg.svd(m, compute_uv=False)
    if s.size and s[-1] <= tol * s[0]:
        raise SingularMatrixError(f"{what} is numerically singular (sigma_min/sigma_max = {s[-1] / s[0]:.3g})")


def lifted_log(mu: complex) -> complex:
    """log(mu) with argument in (0, 2 pi); points on the positive axis get 0 or 2 pi by |mu|."""
    mu = complex(mu)
    r = abs(mu)
    if mu.real > 0 and abs(mu.imag) <= AXIS_TOL * r:
        theta = 0.0 if r <= 1 + UNIT_TOL else 2 * math.pi
    else:
        theta = cmath.phase(mu)
        if theta < 0:
            theta += 2 * math.pi
    return complex(math.log(r), theta)


def strip_log(f, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The unique g with exp(2 pi i g) = f and Spec(g) in Sigma1.

    Raises SingularMatrixError when f is not invertible and ConvergenceError
    when the result fails the exp round-trip self-check.
    """
    f = as_matrix(f, square=True)
    d = f.shape[0]
    if d == 0:
        return f.copy()
    _require_invertible(f, tol, "strip_log argument")
    t, q = sla.schur(f, output="complex")
    ev = np.diag(t).copy()
    logs = np.array([lifted_log(m) for m in ev])
    # the scatter of one defective eigenvalue takes the branch of its mean, even when it straddles the cut
    defect = {}
    for n_group, grp in enumerate(_defect_groups(ev, np.linalg.norm(f, 2))):
        defect.update({j: n_group for j in grp})
        logs[grp] = lifted_log(ev[grp].mean())

    def linked(j, k):
        if j in defect and defect.get(j) == defect.get(k):
            return True
        gap = abs(ev[j] - ev[k])
        return gap <= CLUSTER_GAP * max(abs(ev[j]), abs(ev[k])) and abs(logs[j] - logs[k]) < 1.0

    labels = _union_find(d, linked)
    t, q, labelled = _reorder(t, q, labels)
    blocks = [sl for _, sl in labelled]
    diag = []
    for lab, sl in labelled:
        members = [logs[j] for j in range(d) if labels[j] == lab]
        diag.append(_log_block(t[sl, sl], members))
    ft = _parlett(t, blocks, diag)
    g = (q @ ft @ q.conj().T) / TWO_PI_I
    m = np.abs(f).max()  # rescale so the norms cannot underflow
    res = np.linalg.norm((expm_2pii(g) - f) / m) / np.linalg.norm(f / m)
    if not res <= SELF_CHECK:
        raise ConvergenceError(f"strip logarithm failed its self-check (residual {res:.3g})")
    return g


def _log_block(tb: np.ndarray, member_logs: list[complex]) -> np.ndarray:
    k = tb.shape[0]
    if k == 1:
        return np.array([[member_logs[0]]])
    sigma = np.trace(tb) / k
    base = lifted_log(sigma)
    ims = [m.imag for m in member_logs]
    if max(ims) - min(ims) < 1.0:
        # all members on one sheet: use the sheet of the members
        target = sum(ims) / k
        shift = round((target - base.imag) / (2 * math.pi))
        base += 2j * math.pi * shift
    x = (tb - sigma * np.eye(k)) / sigma
    out = base * np.eye(k, dtype=complex)
    power = np.eye(k, dtype=complex)
    for j in range(1, _MAX_TERMS):
        power = power @ x
        term = power * ((-1) ** (j + 1) / j)
        out += term
        if j >= k and np.linalg.norm(term) <= 1e-17 * max(1.0, np.linalg.norm(out)):
            return out
        if not np.all(np.isfinite(out)):
            break
    raise ConvergenceError("logarithm series did not converge on an eigenvalue cluster")


def _union_find(n: int, linked) -> list[int]:
    parent = list(range(n))

    def root(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for j in range(n):
        for k in range(j + 1, n):
            if root(j) != root(k) and linked(j, k):
                parent[root(k)] = root(j)
    return [root(j) for j in range(n)]


def _reorder(t, q, labels):
    """Make equal labels contiguous on the Schur diagonal, keeping first-seen order."""
    labels = list(labels)
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    target = [lab for lab in order for _ in range(labels.count(lab))]
    t = np.asfortranarray(t.copy())
    q = np.asfortranarray(q.copy())
    for pos, want in enumerate(target):
        if labels[pos] == want:
            continue
        j = next(k for k in range(pos + 1, len(labels)) if labels[k] == want)
        t, q, info = lapack.ztrexc(t, q, j + 1, pos + 1)
        if info != 0:
            raise ConvergenceError(f"Schur reordering failed (info={info})")
        labels.insert(pos, labels.pop(j))
    blocks = []
    start = 0
    for lab in order:
        size = labels.count(lab)
        blocks.append(slice(start, start + size))
        start += size
    return np.triu(t), q, list(zip(order, blocks))


def _parlett(t, blocks, diag):
    """Fill the off-diagonal blocks of f(T) from the diagonal blocks."""
    f = np.zeros_like(t)
    for sl, fb in zip(blocks, diag):
        f[sl, sl] = fb
    nb = len(blocks)
    for j in range(1, nb):
        sj = blocks[j]
        for i in range(j - 1, -1, -1):
            si = blocks[i]
            rhs = f[si, si] @ t[si, sj] - t[si, sj] @ f[sj, sj]
            for k in range(i + 1, j):
                sk = blocks[k]
                rhs += f[si, sk] @ t[sk, sj] - t[si, sk] @ f[sk, sj]
            x, scale, info = lapack.ztrsyl(t[si, si], t[sj, sj], rhs, isgn=-1)
            if info < 0:
                raise ConvergenceError(f"Sylvester solve failed (info={info})")
            f[si, sj] = x / scale
    return f


def spectral_split(b, zero_mask=None):
    """Projector onto the generalized eigenspace of B for the eigenvalues flagged in ``zero_mask``.

    ``zero_mask`` maps an array of Schur eigenvalues to a boolean array. The
    default flags the numerically zero eigenvalues, see ``zero_eigenvalues``.
    """
    b = as_matrix(b, square=True)
    d = b.shape[0]
    if d == 0:
        return b.copy()
    t, q = sla.schur(b, output="complex")
    ev = np.diag(t)
    mask = np.asarray((zero_mask or zero_eigenvalues)(ev, b), dtype=bool)
    if mask.all():
        return np.eye(d, dtype=complex)
    if not mask.any():
        return np.zeros((d, d), dtype=complex)
    t, q, labelled = _reorder(t, q, [bool(m) for m in mask])
    blocks = [sl for _, sl in labelled]
    diag = [np.eye(sl.stop - sl.start) * float(is_zero) for is_zero, sl in labelled]
    p = _parlett(t, blocks, diag)
    return q @ p @ q.conj().T


def zero_eigenvalues(ev: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flag eigenvalues belonging to the nilpotent part of B.

    A nilpotent Jordan block of size k scatters its computed eigenvalues by
    about eps^(1/k), so small candidates are accepted as a group when their
    mean is tiny, and otherwise by the plain threshold 1e-8 * scale.
    """
    scale = max(1.0, np.linalg.norm(b, 2))
    small = np.abs(ev) <= 1e-3 * scale
    if small.any() and abs(ev[small].mean()) <= 1e-8 * scale:
        return small
    return np.abs(ev) <= 1e-8 * scale
