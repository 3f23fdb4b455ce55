"""Dense primal-dual interior-point solver for block-diagonal LMIs.

Solves   minimize  c^T y   subject to   F0^k + sum_i y_i Fi^k >= 0
for every block k, together with the conic dual
maximize -sum_k <F0^k, Z_k>  subject to  sum_k <Fi^k, Z_k> = c_i, Z_k >= 0.

The method is infeasible-start path following with Nesterov-Todd scaling
and a Mehrotra predictor-corrector step.  All blocks are dense; the Schur
complement is assembled explicitly and factored by Cholesky, which is the
right trade for the small matrices this package produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import SolverError
from .linalg import svec, sym

OPTIMAL = "optimal"
MAX_ITERATIONS = "max-iterations"
STEP_FAILURE = "step-failure"

# Fraction-to-boundary factor for accepted steps.
STEP_SHRINK = 0.98


@dataclass
class ConeBlock:
    """One PSD constraint F0 + sum_i y_i coeffs[i] >= 0."""

    f0: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.f0 = sym(np.asarray(self.f0, dtype=float))
        coeffs = np.asarray(self.coeffs, dtype=float)
        self.coeffs = 0.5 * (coeffs + coeffs.transpose(0, 2, 1))

    @property
    def size(self) -> int:
        return self.f0.shape[0]

    def value(self, y: np.ndarray) -> np.ndarray:
        return self.f0 + np.einsum("i,ijk->jk", y, self.coeffs)


@dataclass
class ConeProgram:
    """Block LMI with linear objective over the free variables y."""

    c: np.ndarray
    blocks: list[ConeBlock]

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        for blk in self.blocks:
            if blk.coeffs.shape[0] != self.num_vars:
                raise ValueError("block coefficient count != variable count")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(blk.size for blk in self.blocks)


@dataclass
class SolverOptions:
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    # Ceilings for accepting a numerically stalled iterate.
    stall_gap_tol: float = 1e-8
    stall_dinf_tol: float = 1e-6
    max_iters: int = 200
    initial_delta: float = 0.999


@dataclass
class SolveResult:
    y: np.ndarray
    duals: list[np.ndarray]
    gap: float
    status: str
    pobj: float
    dobj: float
    iterations: int
    pinf: float
    dinf: float
    history: list[tuple[int, float, float, float]] = field(default_factory=list)


@dataclass
class SolutionReport:
    """Feasibility and optimality residuals of a candidate primal/dual pair."""

    pobj: float
    dobj: float
    gap: float
    primal_min_eigs: np.ndarray
    dual_min_eigs: np.ndarray
    dual_residual: np.ndarray

    def max_violation(self) -> float:
        worst_cone = -min(
            float(self.primal_min_eigs.min(initial=0.0)),
            float(self.dual_min_eigs.min(initial=0.0)),
            0.0,
        )
        return max(worst_cone, float(np.abs(self.dual_residual).max(initial=0.0)))


class _BlockState:
    """Per-block NT scaling data for one iteration."""

    __slots__ = ("lam", "g", "ginv", "t_svec", "rp_hat", "s_chol", "z_chol")

    def __init__(self, blk: ConeBlock, s: np.ndarray, z: np.ndarray, rp: np.ndarray):
        ls = np.linalg.cholesky(s)
        lz = np.linalg.cholesky(z)
        # NT scaling point W = G G^T with G^T Z G = G^-1 S G^-T = diag(lam).
        m = ls.T @ z @ ls
        evals, q = np.linalg.eigh(sym(m))
        evals = np.maximum(evals, np.finfo(float).tiny)
        self.lam = np.sqrt(evals)
        linv = sla.solve_triangular(ls, np.eye(s.shape[0]), lower=True)
        self.g = ls @ (q * evals[None, :] ** -0.25)
        self.ginv = (evals[:, None] ** 0.25) * (q.T @ linv)
        self.s_chol = ls
        self.z_chol = lz
        t = self.ginv @ blk.coeffs @ self.ginv.T
        self.t_svec = svec(0.5 * (t + t.transpose(0, 2, 1)))
        self.rp_hat = self.ginv @ rp @ self.ginv.T

    def lyapunov(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (X D + D X)/2 = rhs for symmetric X with D = diag(lam)."""
        return 2.0 * rhs / (self.lam[:, None] + self.lam[None, :])


def solve(
    prog: ConeProgram,
    opts: SolverOptions | None = None,
    y0: np.ndarray | None = None,
    log_sink: IO[str] | None = None,
) -> SolveResult:
    """Run the interior-point method on ``prog``.

    Returns the best iterate with status ``optimal``, ``max-iterations``
    or ``step-failure``; the duals are the per-block PSD multipliers.
    """
    opts = opts or SolverOptions()
    p = prog.num_vars
    y = np.zeros(p) if y0 is None else np.asarray(y0, dtype=float).copy()
    if y.shape != (p,):
        raise ValueError("y0 has wrong length")
    if not prog.blocks:
        raise SolverError("program has no blocks")

    total_dim = sum(prog.block_sizes)
    zeta = max(1.0, float(np.linalg.norm(prog.c))) / total_dim
    s_list, z_list = [], []
    for blk in prog.blocks:
        fy = sym(blk.value(y))
        lam_min = float(np.linalg.eigvalsh(fy)[0])
        scale = max(1.0, float(np.linalg.norm(fy, 2)))
        if lam_min <= 1e-3 * scale:
            fy = fy + (1e-1 * scale - lam_min) * np.eye(blk.size)
        s_list.append(fy)
        z_list.append(zeta * np.eye(blk.size))

    c_scale = 1.0 + float(np.abs(prog.c).max(initial=0.0))
    f_scale = 1.0 + max(float(np.linalg.norm(b.f0)) for b in prog.blocks)
    history: list[tuple[int, float, float, float]] = []
    status = MAX_ITERATIONS
    small_steps = 0
    it = 0

    for it in range(1, opts.max_iters + 1):
        rp_list = [sym(blk.value(y)) - s for blk, s in zip(prog.blocks, s_list)]
        rd = prog.c - _adjoint(prog, z_list)
        gap = sum(float(np.tensordot(s, z)) for s, z in zip(s_list, z_list))
        mu = gap / total_dim
        # Residuals are scaled by the iterate norms: near-degenerate optima
        # have unbounded multipliers, and the absolute residual then floors
        # at the rounding level of the matching products.
        s_scale = max(float(np.linalg.norm(s)) for s in s_list)
        z_scale = max(float(np.linalg.norm(z)) for z in z_list)
        pinf = max(float(np.linalg.norm(rp)) for rp in rp_list) / (f_scale + s_scale)
        dinf = float(np.abs(rd).max()) / (c_scale + z_scale)
        pobj = float(prog.c @ y)
        dobj = -sum(
            float(np.tensordot(blk.f0, z)) for blk, z in zip(prog.blocks, z_list)
        )
        gap_scale = max(1.0, abs(pobj), abs(dobj))
        if gap <= opts.gap_tol * gap_scale and pinf <= opts.feas_tol and dinf <= opts.feas_tol:
            status = OPTIMAL
            break
        # At degenerate optima the dual residual floors at the rounding
        # level of the Newton system, a few orders above the target; the
        # iterate is still accepted if complementarity and primal
        # feasibility made it, should the solver be unable to continue.
        at_floor = (
            gap <= opts.stall_gap_tol * gap_scale
            and pinf <= opts.feas_tol
            and dinf <= opts.stall_dinf_tol
        )

        try:
            states = [
                _BlockState(blk, s, z, rp)
                for blk, s, z, rp in zip(prog.blocks, s_list, z_list, rp_list)
            ]
            schur = sum(st.t_svec @ st.t_svec.T for st in states)
            schur_chol = _robust_cholesky(schur)
        except np.linalg.LinAlgError:
            status = OPTIMAL if at_floor else STEP_FAILURE
            break

        # Predictor: aim at mu = 0.
        rc_hats = [np.diag(-(st.lam**2)) for st in states]
        dy_aff, ds_aff, dz_aff = _direction(prog, states, rc_hats, rp_list, rd, schur, schur_chol)
        ap_aff = min(_max_step(st.s_chol, ds) for st, ds in zip(states, ds_aff))
        ad_aff = min(_max_step(st.z_chol, dz) for st, dz in zip(states, dz_aff))
        ap_aff, ad_aff = min(1.0, ap_aff), min(1.0, ad_aff)
        gap_aff = sum(
            float(np.tensordot(s + ap_aff * ds, z + ad_aff * dz))
            for s, ds, z, dz in zip(s_list, ds_aff, z_list, dz_aff)
        )
        sigma = float(np.clip((max(gap_aff, 0.0) / gap) ** 3, 1e-10, 1.0))

        # Corrector: recenter and cancel the second-order term.
        rc_hats = []
        for st, ds, dz in zip(states, ds_aff, dz_aff):
            ds_hat = st.ginv @ ds @ st.ginv.T
            dz_hat = st.g.T @ dz @ st.g
            cross = ds_hat @ dz_hat
            rc = sigma * mu * np.eye(st.lam.size) - np.diag(st.lam**2)
            rc -= 0.5 * (cross + cross.T)
            rc_hats.append(rc)
        dy, ds_list, dz_list = _direction(prog, states, rc_hats, rp_list, rd, schur, schur_chol)

        ap = min(_max_step(st.s_chol, ds) for st, ds in zip(states, ds_list))
        ad = min(_max_step(st.z_chol, dz) for st, dz in zip(states, dz_list))
        ap = min(1.0, STEP_SHRINK * ap)
        ad = min(1.0, STEP_SHRINK * ad)
        if min(ap, ad) < 0.05:
            # Corrector got blocked near the boundary; retake a plain
            # strongly-centered step, which always makes progress.
            sigma = max(sigma, 0.8)
            rc_hats = [
                sigma * mu * np.eye(st.lam.size) - np.diag(st.lam**2)
                for st in states
            ]
            dy, ds_list, dz_list = _direction(
                prog, states, rc_hats, rp_list, rd, schur, schur_chol
            )
            ap = min(_max_step(st.s_chol, ds) for st, ds in zip(states, ds_list))
            ad = min(_max_step(st.z_chol, dz) for st, dz in zip(states, dz_list))
            ap = min(1.0, STEP_SHRINK * ap)
            ad = min(1.0, STEP_SHRINK * ad)
        if min(ap, ad) < 1e-8:
            small_steps += 1
            if small_steps >= 3:
                status = OPTIMAL if at_floor else STEP_FAILURE
                break
        else:
            small_steps = 0

        y = y + ap * dy
        s_list = [sym(s + ap * ds) for s, ds in zip(s_list, ds_list)]
        z_list = [sym(z + ad * dz) for z, dz in zip(z_list, dz_list)]
        history.append((it, gap, ap, ad))
        if log_sink is not None:
            log_sink.write(f"iter {it:3d}  gap {gap:.6e}  alpha_p {ap:.3f}  alpha_d {ad:.3f}\n")

    gap = sum(float(np.tensordot(s, z)) for s, z in zip(s_list, z_list))
    rp_list = [sym(blk.value(y)) - s for blk, s in zip(prog.blocks, s_list)]
    rd = prog.c - _adjoint(prog, z_list)
    s_scale = max(float(np.linalg.norm(s)) for s in s_list)
    z_scale = max(float(np.linalg.norm(z)) for z in z_list)
    return SolveResult(
        y=y,
        duals=[z.copy() for z in z_list],
        gap=gap,
        status=status,
        pobj=float(prog.c @ y),
        dobj=-sum(float(np.tensordot(b.f0, z)) for b, z in zip(prog.blocks, z_list)),
        iterations=it,
        pinf=max(float(np.linalg.norm(rp)) for rp in rp_list) / (f_scale + s_scale),
        dinf=float(np.abs(rd).max()) / (c_scale + z_scale),
        history=history,
    )


def check_solution(
    prog: ConeProgram, y: np.ndarray, duals: Sequence[np.ndarray]
) -> SolutionReport:
    """Residual report for a candidate primal/dual pair."""
    y = np.asarray(y, dtype=float).reshape(-1)
    duals = [sym(np.asarray(z, dtype=float)) for z in duals]
    if len(duals) != len(prog.blocks):
        raise ValueError("one dual matrix per block required")
    primal_eigs = np.array(
        [float(np.linalg.eigvalsh(sym(blk.value(y)))[0]) for blk in prog.blocks]
    )
    dual_eigs = np.array([float(np.linalg.eigvalsh(z)[0]) for z in duals])
    gap = sum(
        float(np.tensordot(sym(blk.value(y)), z)) for blk, z in zip(prog.blocks, duals)
    )
    return SolutionReport(
        pobj=float(prog.c @ y),
        dobj=-sum(float(np.tensordot(b.f0, z)) for b, z in zip(prog.blocks, duals)),
        gap=gap,
        primal_min_eigs=primal_eigs,
        dual_min_eigs=dual_eigs,
        dual_residual=prog.c - _adjoint(prog, duals),
    )


def _adjoint(prog: ConeProgram, z_list: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros(prog.num_vars)
    for blk, z in zip(prog.blocks, z_list):
        out += np.tensordot(blk.coeffs, z, axes=([1, 2], [0, 1]))
    return out


def _direction(prog, states, rc_hats, rp_list, rd, schur, schur_chol):
    """One Newton solve for a given centering right-hand side."""
    rhs = -rd.copy()
    for st, rc in zip(states, rc_hats):
        rhs += st.t_svec @ svec(st.lyapunov(rc) - st.rp_hat)
    dy = sla.cho_solve(schur_chol, rhs)
    # One round of iterative refinement keeps late iterations accurate.
    dy += sla.cho_solve(schur_chol, rhs - schur @ dy)
    ds_list, dz_list = [], []
    for blk, st, rc, rp in zip(prog.blocks, states, rc_hats, rp_list):
        ds = np.einsum("i,ijk->jk", dy, blk.coeffs) + rp
        ds_hat = st.ginv @ ds @ st.ginv.T
        dz_hat = st.lyapunov(rc) - 0.5 * (ds_hat + ds_hat.T)
        dz = st.ginv.T @ dz_hat @ st.ginv
        ds_list.append(sym(ds))
        dz_list.append(sym(dz))
    return dy, ds_list, dz_list


def _max_step(chol_lower: np.ndarray, delta: np.ndarray) -> float:
    """Largest t with  M + t*delta >= 0  given M = L L^T."""
    w = sla.solve_triangular(chol_lower, delta, lower=True)
    w = sla.solve_triangular(chol_lower, w.T, lower=True)
    lam_min = float(np.linalg.eigvalsh(sym(w))[0])
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def _robust_cholesky(m: np.ndarray):
    jitter = 0.0
    base = max(float(np.trace(m)) / max(m.shape[0], 1), 1.0)
    for _ in range(4):
        try:
            return sla.cho_factor(m + jitter * np.eye(m.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            jitter = max(10.0 * jitter, 1e-14 * base)
    raise np.linalg.LinAlgError("Schur complement not positive definite")
