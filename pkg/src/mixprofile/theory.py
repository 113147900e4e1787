"""Closed-form predictors for the profiling error of the unconstrained attack.

The per-sender mean squared error of the batch least-squares estimate admits
closed-form approximations in terms of the sending frequencies, the profile
uniformities, the threshold, the firing probability and the number of
observed rounds.  The predictions scale as ``1/rho`` and become tight as the
number of rounds grows; the pool formula reduces to the threshold one at
``alpha = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SingularFrequencyError

EXACT = "exact"
ROUGH = "rough_approx"
REGIMES = (EXACT, ROUGH)

THRESHOLD_KIND = "threshold"
POOL_KIND = "pool"

#: absolute tolerance accepted on the sum of a frequency vector
_FREQ_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MsePrediction:
    """Predicted estimation error for each sender and per transition.

    ``mse_profile[i]`` predicts the squared error of sender ``i``'s profile
    estimate; users with zero sending frequency are unidentifiable and carry
    an infinite prediction.  ``mse_transition`` is the per-transition average
    ``sum_i mse_profile[i] / n**2``.  ``alpha_q``/``alpha_r`` and the delay
    figures are populated for pool predictions only.
    """

    mse_profile: np.ndarray
    mse_transition: float
    regime: str
    mix_kind: str
    alpha_q: float | None = None
    alpha_r: float | None = None
    round_penalty: float | None = None
    mean_delay: float | None = None

    @property
    def unidentifiable(self) -> np.ndarray:
        """Mask of senders whose profile cannot be estimated (zero frequency)."""
        return ~np.isfinite(self.mse_profile)


def _check_inputs(f, u, u_bar, t, rho, regime):
    f = np.asarray(f, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.ndim != 1 or u.shape != f.shape:
        raise InvalidParameterError("f and u must be vectors of equal length")
    if np.any(f < 0) or np.any(f > 1) or abs(float(f.sum()) - 1.0) > _FREQ_SUM_TOL:
        raise InvalidParameterError("f must be a probability vector")
    if np.any(u < 0) or np.any(u >= 1):
        raise InvalidParameterError("uniformities must lie in [0, 1)")
    if not 0.0 <= u_bar < 1.0:
        raise InvalidParameterError("u_bar must lie in [0, 1)")
    if t < 1:
        raise InvalidParameterError("t must be >= 1")
    if rho < 1:
        raise InvalidParameterError("rho must be >= 1")
    if regime not in REGIMES:
        raise InvalidParameterError(f"unknown regime {regime!r}")
    return f, u


def _per_user(f, finite_expr, rough_expr, regime):
    """Evaluate a per-user formula, marking zero-frequency users as infinite."""
    mse = np.full(f.shape, np.inf)
    ok = f > 0
    finv = 1.0 / f[ok]
    mse[ok] = finite_expr(finv) if regime == EXACT else rough_expr(finv)
    return mse


def predict_mse_threshold(
    f: np.ndarray,
    u: np.ndarray,
    u_bar: float,
    t: int,
    rho: int,
    regime: str = EXACT,
) -> MsePrediction:
    """Predicted profiling error under a threshold mix.

    Exact regime, per sender ``i``:

        ``(1/rho) * ((1/f_i - 1) * (1 - 1/t) * u_bar + (1/f_i) * u_i / t)``

    The rough regime keeps only the dominant term ``(1/f_i) / rho`` (valid
    for rare senders with flat profiles).
    """
    f, u = _check_inputs(f, u, u_bar, t, rho, regime)
    u_ok = u[f > 0]
    mse = _per_user(
        f,
        lambda finv: ((finv - 1.0) * (1.0 - 1.0 / t) * u_bar + finv / t * u_ok) / rho,
        lambda finv: finv / rho,
        regime,
    )
    return MsePrediction(
        mse_profile=mse,
        mse_transition=float(mse.sum()) / f.size**2,
        regime=regime,
        mix_kind=THRESHOLD_KIND,
    )


def pool_constants(alpha: float) -> tuple[float, float]:
    """The constants ``alpha_q = a/(2-a)`` and ``alpha_r = a(2-a)/(2-a(2-a))``."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    alpha_q = alpha / (2.0 - alpha)
    alpha_r = alpha * (2.0 - alpha) / (2.0 - alpha * (2.0 - alpha))
    return alpha_q, alpha_r


def predict_mse_pool(
    f: np.ndarray,
    u: np.ndarray,
    u_bar: float,
    t: int,
    rho: int,
    alpha: float,
    regime: str = EXACT,
) -> MsePrediction:
    """Predicted profiling error under a binomial pool mix.

    Exact regime, per sender ``i``:

        ``(1/rho) * ((1/f_i - 1) * (u_bar * (1/a_r - 1/t) + 1/a_q - 1/a_r)
          + (1/f_i) * u_i / t)``

    with ``a_q = alpha/(2-alpha)`` and ``a_r`` as in :func:`pool_constants`.
    Rough regime: ``(1/f_i)/rho * (2-alpha)/alpha``.  At ``alpha = 1`` both
    regimes coincide with the threshold prediction.  The prediction also
    carries the round penalty ``(2-alpha)/alpha`` (how many times more rounds
    the pool needs for the same error) and the mean message delay
    ``(1-alpha)/alpha``.
    """
    f, u = _check_inputs(f, u, u_bar, t, rho, regime)
    alpha_q, alpha_r = pool_constants(alpha)
    u_ok = u[f > 0]
    bracket = u_bar * (1.0 / alpha_r - 1.0 / t) + (1.0 / alpha_q - 1.0 / alpha_r)
    penalty = (2.0 - alpha) / alpha
    mse = _per_user(
        f,
        lambda finv: ((finv - 1.0) * bracket + finv / t * u_ok) / rho,
        lambda finv: finv / rho * penalty,
        regime,
    )
    return MsePrediction(
        mse_profile=mse,
        mse_transition=float(mse.sum()) / f.size**2,
        regime=regime,
        mix_kind=POOL_KIND,
        alpha_q=alpha_q,
        alpha_r=alpha_r,
        round_penalty=penalty,
        mean_delay=(1.0 - alpha) / alpha,
    )


def input_autocorr_inverse(f: np.ndarray, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Autocorrelation matrix of the multinomial input process and its inverse.

    ``R_x = t * (diag(f) + (t-1) * f f^T)`` and, by the Sherman-Morrison
    formula, ``R_x^{-1} = (1/t) * (diag(f)^{-1} - (1 - 1/t) * ones)``.
    Requires every frequency to be strictly positive; the product
    ``R_x @ R_x^{-1}`` is verified against the identity before returning.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise InvalidParameterError("f must be a non-empty vector")
    if np.any(f <= 0):
        raise SingularFrequencyError("all frequencies must be strictly positive")
    if abs(float(f.sum()) - 1.0) > _FREQ_SUM_TOL:
        raise InvalidParameterError("f must sum to 1")
    if t < 1:
        raise InvalidParameterError("t must be >= 1")
    n = f.size
    r_x = t * (np.diag(f) + (t - 1) * np.outer(f, f))
    r_x_inv = (np.diag(1.0 / f) - (1.0 - 1.0 / t) * np.ones((n, n))) / t
    err = float(np.max(np.abs(r_x @ r_x_inv - np.eye(n))))
    if err > 1e-10:
        raise ArithmeticError(f"autocorrelation inverse check failed: max error {err:g}")
    return r_x, r_x_inv
