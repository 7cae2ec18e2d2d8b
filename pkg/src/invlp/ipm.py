"""Dense primal-dual interior-point method for ``max z^T c  s.t.  A c <= b``.

Mehrotra predictor-corrector on the slack form ``A c + s = b, s >= 0`` with
dual ``min b^T y  s.t.  A^T y = z, y >= 0``. Each iteration factors the
``N x N`` normal matrix ``A^T diag(y/s) A``; the ``K x N`` constraint matrix is
only touched in row blocks, so tall problems (``K >> N``) are cheap.

By default the columns are orthonormalised first (``A = Q R``, solve in the
variable ``R c``). The LP is invariant under this change of variables and the
normal matrix then has the conditioning of ``diag(y/s)`` alone, which matters
for ill-conditioned bases such as high-degree monomials.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import dsyrk

logger = logging.getLogger(__name__)

_RAY_TRIGGER = 1e10


def _normal_matrix(W: np.ndarray, d: np.ndarray, chunk_rows: int) -> np.ndarray:
    N = W.shape[1]
    M = np.zeros((N, N), order="F")
    sq = np.sqrt(d)
    for s in range(0, W.shape[0], chunk_rows):
        blk = W[s:s + chunk_rows] * sq[s:s + chunk_rows, None]
        M = dsyrk(1.0, blk.T, beta=1.0, c=M, trans=0, lower=0, overwrite_c=1)
    return M


def _factor(M: np.ndarray):
    """Cholesky of the normal matrix with escalating diagonal regularisation."""
    scale = float(np.max(np.diag(M))) or 1.0
    reg = 0.0
    for _ in range(12):
        try:
            return sla.cho_factor(M + reg * np.eye(M.shape[0]), lower=False, check_finite=False), reg
        except np.linalg.LinAlgError:
            reg = scale * 1e-14 if reg == 0.0 else reg * 100.0
    raise np.linalg.LinAlgError("normal matrix is not positive definite even after regularisation")


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _prepare(A, z, precondition: bool):
    """Return (W, zt, back) with ``W`` the working matrix and ``back`` mapping iterates to ``c``."""
    if precondition and A.shape[0] >= A.shape[1]:
        Q, R = np.linalg.qr(A)
        dR = np.abs(np.diag(R))
        if dR.size and dR.min() > 1e-13 * dR.max():
            zt = sla.solve_triangular(R, z, trans="T", check_finite=False)
            return Q, zt, lambda u: sla.solve_triangular(R, u, check_finite=False), "qr"
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    return A / norms, z / norms, lambda u: u / norms, "column_scaling"


def interior_point(A: np.ndarray, b: np.ndarray, z: np.ndarray, *, feasibility_tol: float = 1e-8,
                   gap_tol: float = 1e-8, max_iter: int = 200, step_fraction: float = 0.995,
                   precondition: bool = True, chunk_rows: int = 4096) -> dict:
    """Solve ``max z^T c  s.t.  A c <= b``.

    Returns a dict with ``c``, ``y`` (multipliers), ``status`` in
    ``{"optimal", "infeasible", "unbounded", "numerical_failure"}``, the
    iteration count and the final scaled residuals.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    m, N = A.shape
    W, zt, back, scaling = _prepare(A, z, precondition)

    # Mehrotra-style starting point from least-squares estimates
    G = W.T @ W
    Gf = sla.cho_factor(G + 1e-14 * np.trace(G) / N * np.eye(N), check_finite=False)
    c = sla.cho_solve(Gf, W.T @ b, check_finite=False)
    s = b - W @ c
    y = W @ sla.cho_solve(Gf, zt, check_finite=False)
    s += max(-1.5 * float(s.min()), 0.0)
    y += max(-1.5 * float(y.min()), 0.0)
    if float(s @ y) <= 0.0:
        s += 1.0
        y += 1.0
    sy = float(s @ y)
    s += 0.5 * sy / float(y.sum())
    y += 0.5 * sy / float(s.sum())
    c_scale = max(1.0, float(np.linalg.norm(c)))
    y_scale = max(1.0, float(np.linalg.norm(y)))

    bnorm = 1.0 + float(np.max(np.abs(b), initial=0.0))
    znorm = 1.0 + float(np.max(np.abs(zt), initial=0.0))
    status, message, it = "numerical_failure", "iteration limit reached", 0
    reg_used = 0.0
    for it in range(1, max_iter + 1):
        Wc = W @ c
        rp = b - Wc - s
        rd = zt - W.T @ y
        mu = float(s @ y) / m
        pobj = float(zt @ c)
        dobj = float(b @ y)
        pres = float(np.max(np.abs(rp))) / bnorm
        dres = float(np.max(np.abs(rd))) / znorm
        gap = abs(dobj - pobj) / (1.0 + abs(pobj))
        logger.debug("ipm %3d pobj %.10e pres %.2e dres %.2e gap %.2e", it, pobj, pres, dres, gap)
        if pres <= feasibility_tol and dres <= feasibility_tol and gap <= gap_tol:
            status, message = "optimal", "converged"
            break

        cn = float(np.linalg.norm(c))
        if cn > _RAY_TRIGGER * c_scale:
            ray = c / cn
            if float(np.max(W @ ray)) <= 1e-7 and float(zt @ ray) > 1e-9:
                status, message = "unbounded", "found an improving recession direction"
                break
        yn = float(np.linalg.norm(y))
        if yn > _RAY_TRIGGER * y_scale:
            ray = y / yn
            if float(np.max(np.abs(W.T @ ray))) <= 1e-7 and float(b @ ray) < -1e-9:
                status, message = "infeasible", "found a Farkas certificate"
                break

        dinv = 1.0 / s
        D = y * dinv
        try:
            fac, reg = _factor(_normal_matrix(W, D, chunk_rows))
        except np.linalg.LinAlgError as exc:
            message = str(exc)
            break
        reg_used = max(reg_used, reg)

        def direction(rc):
            t = rc * dinv - D * rp
            dc = sla.cho_solve(fac, rd - W.T @ t, check_finite=False)
            Wdc = W @ dc
            return dc, rp - Wdc, t + D * Wdc

        # predictor
        dc_a, ds_a, dy_a = direction(-s * y)
        ap = min(1.0, _max_step(s, ds_a))
        ad = min(1.0, _max_step(y, dy_a))
        mu_aff = float((s + ap * ds_a) @ (y + ad * dy_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        dc, ds, dy = direction(sigma * mu - s * y - ds_a * dy_a)
        ap = min(1.0, step_fraction * _max_step(s, ds))
        ad = min(1.0, step_fraction * _max_step(y, dy))
        c = c + ap * dc
        s = s + ap * ds
        y = y + ad * dy
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(y))):
            message = "non-finite iterate"
            break

    return {
        "c": back(c),
        "y": y,
        "status": status,
        "message": message,
        "iterations": it,
        "scaling": scaling,
        "regularization": reg_used,
    }
