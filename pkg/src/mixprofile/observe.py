"""Adversary-side observation model for pool mixes.

A pool mix hides how many of each sender's messages actually left in a given
round, but the expected number is a simple geometric convolution of the
observed inputs: a message that entered in round ``k`` leaves in round
``r >= k`` with probability ``alpha * (1 - alpha)**(r - k)``.  The pool
estimators replace the input matrix ``U`` with this expectation ``U_hat``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParameterError
from .mixsim import BINOMIAL_POOL, Trace


@dataclass(frozen=True)
class ExpectedDepartures:
    """Expected per-round departure counts ``U_hat[r, i]`` for each sender."""

    U_hat: np.ndarray


def convolution_matrix(alpha: float, rho: int) -> np.ndarray:
    """Lower-triangular matrix ``B`` with ``B[r, k] = alpha*(1-alpha)**(r-k)``.

    ``B @ x`` turns a per-round arrival vector into per-round expected
    departures.  ``alpha = 1`` gives the identity.
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    if rho < 1:
        raise InvalidParameterError("rho must be >= 1")
    lag = np.arange(rho)[:, None] - np.arange(rho)[None, :]
    return np.where(lag >= 0, alpha * (1.0 - alpha) ** np.maximum(lag, 0), 0.0)


def expected_departures(trace: Trace, f_hat: np.ndarray | None = None) -> ExpectedDepartures:
    """Expected departures ``U_hat`` for a trace.

    Threshold traces pass through unchanged (every arrival leaves the same
    round).  For pool traces the recursion

        ``u_hat[0] = alpha * (U[0] + m * f_hat)``
        ``u_hat[r] = (1 - alpha) * u_hat[r-1] + alpha * U[r]``

    is evaluated per sender in O(rho * n_senders); it equals the matrix form
    ``B @ (U + N0)`` where ``N0`` carries ``m * f_hat`` in its first row.
    ``f_hat`` is the adversary's estimate of the initial pool composition and
    defaults to the prior stored in the trace configuration.
    """
    cfg = trace.config
    if cfg.kind != BINOMIAL_POOL:
        return ExpectedDepartures(trace.U.astype(float))
    prior = cfg.pool_prior if f_hat is None else np.asarray(f_hat, dtype=float)
    if cfg.m > 0 and prior is None:
        raise InvalidParameterError("pool_prior (f_hat) is required when m > 0")

    head = trace.U.astype(float)
    if cfg.m > 0:
        if prior.shape != (trace.n_senders,):
            raise InvalidParameterError("f_hat length must equal n_senders")
        head = head.copy()
        head[0] += cfg.m * prior
    alpha = cfg.alpha
    u_hat = lfilter([alpha], [1.0, -(1.0 - alpha)], head, axis=0)
    return ExpectedDepartures(u_hat)
