"""Reaction-force QP solved by a dense dual active-set method.

The decision vector is x = [delta_t (6); f (3 per contact)].  The torso
rows of the rigid-body dynamics enter as equalities, the linearized
friction pyramid as inequalities.  Problems are tiny (x dim <= 24, a few
dozen constraints), so each iteration refactors the active-set system
from scratch; no incremental updates to go wrong.

The solver is the Goldfarb-Idnani dual method: start at the
unconstrained minimum, add violated constraints one at a time, taking
dual steps that drop blocking constraints as needed.  For a strictly
convex objective it terminates in finitely many steps and signals
inconsistent constraints explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import ContactSpec, QpInfeasible


@dataclass
class QpWarmStart:
    """Single-owner handle carrying the previous tick's active set.

    Only the constraint selection order depends on it, so a stale or
    mismatched handle degrades speed, never correctness.
    """

    active: tuple[int, ...] = field(default=())


def _gi_solve(g_diag, C, c0, n_eq, prefer=frozenset(), max_iter=500):
    """Minimize 0.5 x' diag(g_diag) x subject to C x + c0 (= | >=) 0.

    Rows < n_eq are equalities, the rest inequalities.  Returns
    (x, active, u, iterations) where u are the multipliers aligned with
    the active list (equality entries sign-free).

    The weight ratio across x can reach ~1e11 (stiff torso relaxation
    against soft forces), so all step directions are computed in the
    sqrt(G)-scaled space with orthogonal least squares instead of the
    normal equations, and the returned point is re-solved on the final
    active set to clear accumulated drift.
    """
    n = g_diag.shape[0]
    m = C.shape[0]
    sq = np.sqrt(g_diag)
    Cs = C / sq                         # row i is the scaled normal of i
    tol = 1e-11 * (1.0 + float(np.abs(c0).max(initial=0.0)))
    x = np.zeros(n)
    active: list[int] = []
    u = np.zeros(0)
    iters = 0

    def step_dirs(p):
        ns = Cs[p]
        if not active:
            return ns / sq, ns @ ns, np.zeros(0)
        Ns = Cs[active].T
        r = np.linalg.lstsq(Ns, ns, rcond=None)[0]
        zs = ns - Ns @ r
        return zs / sq, zs @ zs, r

    def add_constraint(p):
        nonlocal x, u, iters
        u_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                raise RuntimeError("active-set iteration limit exceeded")
            z, ztn, r = step_dirs(p)
            t1 = np.inf
            k_block = -1
            for j, idx in enumerate(active):
                # equality multipliers are free; only inequalities block
                if idx >= n_eq and r[j] > tol:
                    tj = u[j] / r[j]
                    if tj < t1:
                        t1, k_block = tj, j
            s_p = C[p] @ x + c0[p]
            if ztn > tol:
                # equalities may need a negative step; min() still picks it
                # because nothing blocks while only equalities are active
                t2 = -s_p / ztn
            elif p < n_eq and abs(s_p) <= tol:
                return                  # redundant equality, already satisfied
            else:
                t2 = np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                raise QpInfeasible("constraints are inconsistent")
            if not np.isfinite(t2):
                # candidate normal lies in the active span: pure dual step
                u = u - t * r
                u_p += t
                active.pop(k_block)
                u = np.delete(u, k_block)
                continue
            x = x + t * z
            u = u - t * r
            u_p += t
            if t == t2:
                active.append(p)
                u = np.append(u, u_p)
                return
            active.pop(k_block)
            u = np.delete(u, k_block)

    def polish():
        # exact minimum-norm solve on the final active set; clears the
        # drift the iterative steps accumulate under extreme weight ratios
        nonlocal x, u
        if not active:
            return
        Ms = Cs[active]
        y = np.linalg.lstsq(Ms, -c0[active], rcond=None)[0]
        x = y / sq
        u = np.linalg.lstsq(Ms.T, y, rcond=None)[0]

    for e in range(n_eq):
        add_constraint(e)
    while True:
        polish()
        s = C @ x + c0
        cand = [i for i in range(n_eq, m) if i not in active and s[i] < -tol]
        if not cand:
            return x, active, u, iters
        pool = [i for i in cand if i in prefer] or cand
        add_constraint(min(pool, key=lambda i: s[i]))


def _cone_rows(nx, base, mu, fz_max):
    """Friction pyramid rows for one contact's force block."""
    rows = np.zeros((5, nx))
    rows[0, base + 2] = 1.0                       # fz >= 0
    rows[1, base] = -1.0                          # mu fz - fx >= 0
    rows[2, base] = 1.0                           # mu fz + fx >= 0
    rows[3, base + 1] = -1.0
    rows[4, base + 1] = 1.0
    rows[1:, base + 2] = mu
    c0 = np.zeros(5)
    if np.isfinite(fz_max):
        cap = np.zeros((1, nx))
        cap[0, base + 2] = -1.0                   # fz_max - fz >= 0
        rows = np.vstack([rows, cap])
        c0 = np.append(c0, fz_max)
    return rows, c0


def solve_reaction_qp(A, b, g, J_c, qdd_des, q1, q2, contact: ContactSpec,
                      warm_start: QpWarmStart | None = None,
                      diagnostics: dict | None = None,
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Ground reaction forces and torso-acceleration relaxation.

    Minimizes f' Q1 f + delta' Q2 delta subject to the floating-base
    rows of A (qdd_des + [delta; 0]) + b + g = J_c' f and the friction
    pyramid on every contact force.  Returns (f_r, delta_t) with f_r
    shaped (n_contacts, 3).  Raises QpInfeasible when no admissible
    force distribution exists; with an empty contact set gravity cannot
    be supported at all, so that is rejected up front.
    """
    nc = contact.count
    if nc == 0:
        raise QpInfeasible("no contact frames; gravity cannot be supported")
    nf = 3 * nc
    nx = 6 + nf
    if J_c.shape != (nf, A.shape[0]):
        raise ValueError(f"contact jacobian shape {J_c.shape} does not match "
                         f"{nc} contacts")
    q2v = np.broadcast_to(np.asarray(q2, dtype=float), (6,))
    q1v = np.broadcast_to(np.asarray(q1, dtype=float), (nf,))
    if np.any(q1v <= 0) or np.any(q2v <= 0):
        raise ValueError("QP weights must be positive")
    g_diag = 2.0 * np.concatenate([q2v, q1v])

    CE = np.hstack([A[:6, :6], -J_c.T[:6]])
    ce0 = A[:6] @ qdd_des + (b + g)[:6]
    cone = [_cone_rows(nx, 6 + 3 * i, contact.friction_mu, contact.fz_max)
            for i in range(nc)]
    C = np.vstack([CE] + [rows for rows, _ in cone])
    c0 = np.concatenate([ce0] + [ci for _, ci in cone])

    prefer = frozenset()
    if warm_start is not None:
        prefer = frozenset(i for i in warm_start.active if 6 <= i < C.shape[0])
    x, active, u, iters = _gi_solve(g_diag, C, c0, n_eq=6, prefer=prefer)
    if warm_start is not None:
        warm_start.active = tuple(i for i in active if i >= 6)
    if diagnostics is not None:
        # residuals scale with the gradient and multiplier magnitudes when
        # the weights are extreme, so report them relative to those scales
        s = C @ x + c0
        grad = g_diag * x
        stat = grad - (C[active].T @ u if active else 0.0)
        u_ineq = np.array([u[j] for j, i in enumerate(active) if i >= 6])
        comp = np.array([u[j] * s[i] / (1.0 + abs(u[j]))
                         for j, i in enumerate(active) if i >= 6])
        diagnostics["qp_iterations"] = iters
        diagnostics["qp_active_set"] = tuple(i for i in active if i >= 6)
        diagnostics["qp_kkt"] = {
            "stationarity": float(np.abs(stat).max()
                                  / (1.0 + np.abs(grad).max())),
            "primal_eq": float(np.abs(s[:6]).max()),
            "primal_ineq": float(max(0.0, -s[6:].min(initial=0.0))),
            "dual": float(max(0.0, -u_ineq.min(initial=0.0))),
            "complementarity": float(np.abs(comp).max(initial=0.0)),
        }
    delta_t = x[:6]
    f_r = x[6:].reshape(nc, 3)
    return f_r, delta_t
