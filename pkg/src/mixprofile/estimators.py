"""Disclosure-attack estimators.

All attacks model the expected output counts of receiver ``j`` as
``A @ r_j`` where ``A`` is the observed input matrix (threshold mix) or the
expected-departure matrix (pool mix) and ``r_j`` stacks the transition
probabilities into receiver ``j``.  The batch and recursive solvers minimise
the squared prediction error receiver by receiver; the constrained solver
additionally projects every sender profile onto the probability simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    InvalidParameterError,
    InvalidScenarioError,
    ParseError,
    SingularSystemError,
)
from .mixsim import Trace
from .observe import expected_departures

LSDA = "lsda"
CLSDA = "clsda"
RLS = "rls"
SDA = "sda"
ZCLIP = "zclip"
METHODS = (LSDA, CLSDA, RLS, SDA, ZCLIP)

INIT_UNIFORM = "uniform"
INIT_PROJECTED = "unconstrained_projected"

#: relative diagonal jitter applied when the explicit ridge fallback is enabled
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class ProfileEstimate:
    """Estimated transition matrix plus solver metadata.

    ``P_hat[i, j]`` estimates the probability that sender ``i`` writes to
    receiver ``j``.  Unconstrained methods may produce negative entries,
    usually for receivers that are not contacts of the sender.  ``residual``
    is the squared prediction error of the fit, ``||Y - A @ P_hat||_F**2``.
    """

    P_hat: np.ndarray
    method: str
    iterations: int = 1
    residual: float = float("nan")
    converged: bool = True
    objective_history: np.ndarray | None = None


@dataclass(frozen=True)
class SolverOptions:
    """Options for the projected-gradient solver.

    The step size is ``step_scale / lambda_max`` where ``lambda_max`` is the
    largest eigenvalue of the Gram matrix; ``step_scale`` must stay below 2
    for the iteration to converge.  ``tol`` bounds the relative Frobenius
    change of the iterate between iterations.
    """

    step_scale: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-9
    init: str = INIT_UNIFORM

    def __post_init__(self):
        if not 0.0 < self.step_scale < 2.0:
            raise InvalidParameterError("step_scale must lie in (0, 2)")
        if self.max_iter < 0:
            raise InvalidParameterError("max_iter must be >= 0")
        if self.tol <= 0.0:
            raise InvalidParameterError("tol must be positive")
        if self.init not in (INIT_UNIFORM, INIT_PROJECTED):
            raise InvalidParameterError(f"unknown init {self.init!r}")


def design_matrix(trace: Trace, f_hat: np.ndarray | None = None) -> np.ndarray:
    """The matrix the least-squares attacks regress against: U or U_hat."""
    return expected_departures(trace, f_hat=f_hat).U_hat


def _try_spd_factor(gram: np.ndarray):
    """Cholesky factor of a PSD matrix, or None if numerically rank deficient.

    LAPACK can report success on an exactly singular matrix with a rounding-
    level pivot, so the factor diagonal is checked explicitly.
    """
    n = gram.shape[0]
    try:
        factor = sla.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    diag = np.abs(np.diagonal(factor[0]))
    if diag.min() <= diag.max() * np.sqrt(n * np.finfo(float).eps):
        return None
    return factor


def _gram_factor(gram: np.ndarray, ridge: bool):
    factor = _try_spd_factor(gram)
    if factor is not None:
        return factor
    n = gram.shape[0]
    if not ridge:
        rank = int(np.linalg.matrix_rank(gram))
        raise SingularSystemError(f"gram matrix is rank deficient: rank {rank} of {n}")
    jitter = RIDGE_SCALE * float(np.trace(gram)) / n
    return sla.cho_factor(gram + jitter * np.eye(n), lower=True, check_finite=False)


def lsda(trace: Trace, ridge: bool = False, f_hat: np.ndarray | None = None) -> ProfileEstimate:
    """Unconstrained least-squares profile estimate.

    Solves the normal equations ``(A.T @ A) r_j = A.T @ y_j`` for every
    receiver ``j`` with a single Cholesky factorization of the Gram matrix
    shared across receivers.  Raises :class:`SingularSystemError` when the
    Gram matrix is rank deficient unless ``ridge`` enables the diagonal
    jitter fallback.
    """
    a = design_matrix(trace, f_hat=f_hat)
    y = trace.Y.astype(float)
    factor = _gram_factor(a.T @ a, ridge)
    p_hat = sla.cho_solve(factor, a.T @ y, check_finite=False)
    residual = float(np.sum((y - a @ p_hat) ** 2))
    return ProfileEstimate(P_hat=p_hat, method=LSDA, iterations=1, residual=residual)


def _power_lambda_max(gram: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    n = gram.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - lam) <= tol * norm:
            return norm
        lam = norm
    return lam


def _project_rows(mat: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    n = mat.shape[1]
    u = -np.sort(-mat, axis=1)
    css = np.cumsum(u, axis=1)
    k = np.arange(1, n + 1)
    # the feasibility condition holds on a prefix of each sorted row
    n_pos = np.count_nonzero(u - (css - 1.0) / k > 0, axis=1)
    theta = (css[np.arange(mat.shape[0]), n_pos - 1] - 1.0) / n_pos
    return np.maximum(mat - theta[:, None], 0.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    Sort-and-threshold method; exact in O(n log n).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidParameterError("expected a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidParameterError("entries must be finite")
    return _project_rows(v[None, :])[0]


def clsda(
    trace: Trace,
    opts: SolverOptions | None = None,
    f_hat: np.ndarray | None = None,
) -> ProfileEstimate:
    """Simplex-constrained least-squares estimate by projected gradient.

    Iterates ``P <- proj(P - mu * A.T @ (A @ P - Y))`` with
    ``mu = step_scale / lambda_max(A.T @ A)``, projecting every sender row
    onto the simplex after each step.  The squared prediction error is
    checked to be non-increasing; its per-iteration values are returned in
    ``objective_history``.  If ``tol`` is not reached within ``max_iter``
    iterations the last iterate is returned with ``converged=False``.
    """
    if opts is None:
        opts = SolverOptions()
    a = design_matrix(trace, f_hat=f_hat)
    y = trace.Y.astype(float)
    n_s, n_r = a.shape[1], y.shape[1]
    gram = a.T @ a
    cross = a.T @ y
    y_sq = float(np.vdot(y, y))

    lam = _power_lambda_max(gram)
    if lam <= 0.0:
        raise SingularSystemError("design matrix is identically zero")
    mu = opts.step_scale / lam

    if opts.init == INIT_UNIFORM:
        p = np.full((n_s, n_r), 1.0 / n_r)
    else:
        p = _project_rows(lsda(trace, f_hat=f_hat).P_hat)

    gp = gram @ p
    objective = y_sq - 2.0 * float(np.vdot(p, cross)) + float(np.vdot(p, gp))
    history = [objective]
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        p_new = _project_rows(p - mu * (gp - cross))
        gp_new = gram @ p_new
        obj_new = y_sq - 2.0 * float(np.vdot(p_new, cross)) + float(np.vdot(p_new, gp_new))
        if obj_new > objective + 1e-9 * (1.0 + abs(objective)):
            raise RuntimeError(
                f"projected-gradient objective increased at iteration {iterations}: "
                f"{objective!r} -> {obj_new!r}"
            )
        step = float(np.linalg.norm(p_new - p)) / max(float(np.linalg.norm(p)), 1e-300)
        p, gp, objective = p_new, gp_new, obj_new
        history.append(objective)
        if step <= opts.tol:
            converged = True
            break

    return ProfileEstimate(
        P_hat=p,
        method=CLSDA,
        iterations=iterations,
        residual=objective,
        converged=converged,
        objective_history=np.asarray(history),
    )


class RecursiveSolver:
    """Online normal-equation solver: one rank-1 update per round.

    Rounds are fed one at a time; the Gram inverse is bootstrapped from a
    direct factorization once enough rounds accumulated and then maintained
    with Sherman-Morrison updates.  The final estimate matches the batch
    solution to numerical precision.  Feeding a trace in several segments
    gives the same result as feeding it in one shot.
    """

    def __init__(self, n_senders: int, n_receivers: int):
        self.n_senders = n_senders
        self.n_receivers = n_receivers
        self._gram = np.zeros((n_senders, n_senders))
        self._cross = np.zeros((n_senders, n_receivers))
        self._gram_inv = None
        self._y_sq = 0.0
        self.rounds = 0

    def process_round(self, x_row: np.ndarray, y_row: np.ndarray) -> None:
        x = np.asarray(x_row, dtype=float)
        y = np.asarray(y_row, dtype=float)
        self._gram += np.outer(x, x)
        self._cross += np.outer(x, y)
        self._y_sq += float(y @ y)
        self.rounds += 1
        if self._gram_inv is None:
            if self.rounds >= self.n_senders:
                factor = _try_spd_factor(self._gram)
                if factor is None:
                    return
                self._gram_inv = sla.cho_solve(
                    factor, np.eye(self.n_senders), check_finite=False
                )
        else:
            gx = self._gram_inv @ x
            self._gram_inv -= np.outer(gx, gx) / (1.0 + float(x @ gx))

    def finalize(self, ridge: bool = False) -> ProfileEstimate:
        if self._gram_inv is not None:
            p_hat = self._gram_inv @ self._cross
        else:
            factor = _gram_factor(self._gram, ridge)
            p_hat = sla.cho_solve(factor, self._cross, check_finite=False)
        residual = (
            self._y_sq
            - 2.0 * float(np.vdot(p_hat, self._cross))
            + float(np.vdot(p_hat, self._gram @ p_hat))
        )
        return ProfileEstimate(
            P_hat=p_hat, method=RLS, iterations=self.rounds, residual=residual
        )


def rls(trace: Trace, ridge: bool = False, f_hat: np.ndarray | None = None) -> ProfileEstimate:
    """Recursive least-squares estimate, round by round.

    Equivalent to :func:`lsda` within numerical precision but keeps only
    ``n_senders``-sized state instead of the full observation matrices.
    """
    a = design_matrix(trace, f_hat=f_hat)
    solver = RecursiveSolver(trace.n_senders, trace.n_receivers)
    for r in range(trace.rho):
        solver.process_round(a[r], trace.Y[r])
    return solver.finalize(ridge=ridge)


def sda(trace: Trace, t: int, n_users: int) -> np.ndarray:
    """Classic statistical disclosure estimate of the first user's profile.

    Requires the scenario in which user 0 sends exactly one message per
    observed round while the remaining senders behave uniformly; returns
    ``mean_r(y_j) - (t - 1)/n_users`` per receiver ``j``.  Entries may be
    negative.
    """
    x_first = trace.U[:, 0]
    bad = np.nonzero(x_first != 1)[0]
    if bad.size:
        raise InvalidScenarioError(
            f"round {int(bad[0])} has x_0={int(x_first[bad[0]])}; the statistical "
            "attack needs exactly one message from the target per round"
        )
    return trace.Y.mean(axis=0) - (t - 1) / n_users


def zero_clip(est: ProfileEstimate) -> ProfileEstimate:
    """Clip negative probabilities to zero and renormalize each sender row.

    Rows that become identically zero fall back to the uniform profile.
    Feasible rows pass through unchanged, so the operation is idempotent.
    """
    p = np.maximum(est.P_hat, 0.0)
    sums = p.sum(axis=1)
    zero = sums == 0.0
    sums[zero] = 1.0
    p = p / sums[:, None]
    if np.any(zero):
        p[zero] = 1.0 / p.shape[1]
    return ProfileEstimate(
        P_hat=p,
        method=ZCLIP,
        iterations=est.iterations,
        residual=float("nan"),
        converged=est.converged,
    )


def save_estimate(est: ProfileEstimate, path) -> None:
    """Write an estimate file: a metadata header plus dense matrix rows."""
    with open(path, "w") as fh:
        fh.write(
            f"# estimate method={est.method} iterations={est.iterations} "
            f"residual={est.residual:.17g} converged={est.converged} "
            f"n_senders={est.P_hat.shape[0]} n_receivers={est.P_hat.shape[1]}\n"
        )
        for row in est.P_hat:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_estimate(path) -> ProfileEstimate:
    """Read an estimate file written by :func:`save_estimate`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# estimate "):
        raise ParseError("missing estimate header", line_no=1)
    header = dict(tok.partition("=")[::2] for tok in lines[0][len("# estimate ") :].split())
    try:
        method = header["method"]
        iterations = int(header["iterations"])
        residual = float(header["residual"])
        converged = header["converged"] == "True"
        shape = (int(header["n_senders"]), int(header["n_receivers"]))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", line_no=1) from exc
    p_hat = np.array([[float(v) for v in line.split()] for line in lines[1:]])
    if p_hat.shape != shape:
        raise ParseError(f"matrix shape {p_hat.shape} does not match header {shape}")
    return ProfileEstimate(
        P_hat=p_hat,
        method=method,
        iterations=iterations,
        residual=residual,
        converged=converged,
    )
