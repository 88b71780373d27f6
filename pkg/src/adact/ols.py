"""Orthogonal least squares on a correlation matrix.

The basis functions are orthonormalised one at a time (Gram-Schmidt carried
out entirely on ``R``), giving a lower-triangular ``A`` with
``A @ R @ A.T = I`` on the accepted rows. Basis functions whose residual
energy falls below the dependence threshold get a zero row in ``A`` and
therefore zero weight in the solution.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DEPENDENCE_RTOL = 1e-10


class FirstBasisDegenerateError(ValueError):
    pass


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass
class OrthoFactorization:
    A: np.ndarray
    accepted: np.ndarray  # bool per basis function
    multiplies: int = 0

    @property
    def valid_count(self):
        return int(self.accepted.sum())


def dependence_threshold(R):
    R = np.asarray(R)
    return DEPENDENCE_RTOL * float(np.trace(R)) / R.shape[0]


def _orthonormalize(R, tau, strict):
    Nu = R.shape[0]
    A = np.zeros((Nu, Nu))
    accepted = np.zeros(Nu, dtype=bool)
    mults = 1
    if R[0, 0] > tau:
        A[0, 0] = 1.0 / np.sqrt(R[0, 0])
        accepted[0] = True
    elif strict:
        raise FirstBasisDegenerateError(
            f"first basis function has energy {R[0, 0]!r} <= threshold {tau!r}"
        )
    for m in range(1, Nu):
        # c_i = <O'_i, x_m> for the orthonormal functions found so far
        Am = A[:m, :m]
        c = Am @ R[:m, m]
        # unnormalised coefficients: x_m minus its projections
        b = np.zeros(m + 1)
        b[m] = 1.0
        b[:m] = -(c @ Am)
        energy = R[m, m] - c @ c
        # triangular products for c and b, then |c|^2 and the normalisation
        mults += m * (m + 1) + m + (m + 1)
        if energy > tau:
            A[m, : m + 1] = b / np.sqrt(energy)
            accepted[m] = True
    return OrthoFactorization(A, accepted, mults)


def orthonormalize(R, tau=None) -> OrthoFactorization:
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"R must be square, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("R contains non-finite entries")
    if tau is None:
        tau = dependence_threshold(R)
    return _orthonormalize(R, tau, strict=True)


def orthonormal_weights(fac: OrthoFactorization, C):
    """Weights in the orthonormal system, ``W' = (A @ C).T`` (``M x N_u``)."""
    return (fac.A @ np.asarray(C, dtype=np.float64)).T


def solve_via_ols(R, C, tau=None, return_factorization=False):
    """Solve ``R @ W_o.T = C`` for ``W_o`` by orthogonal least squares.

    Rank deficiency is handled by skipping dependent basis functions, so the
    result is always finite. ``C`` may be a vector, in which case a vector is
    returned.
    """
    R = np.asarray(R, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    vector = C.ndim == 1
    if vector:
        C = C[:, None]
    if R.shape[0] != C.shape[0]:
        raise ValueError(f"R is {R.shape} but C has {C.shape[0]} rows")
    if tau is None:
        tau = dependence_threshold(R)
    if not tau > 0:
        # all-zero system: nothing to fit
        W = np.zeros((C.shape[1], R.shape[0]))
        fac = OrthoFactorization(np.zeros_like(R), np.zeros(R.shape[0], dtype=bool))
    else:
        fac = _orthonormalize(R, tau, strict=False)
        Wp = orthonormal_weights(fac, C)
        W = Wp @ fac.A
        Nu = R.shape[0]
        fac.multiplies += C.shape[1] * Nu * (Nu + 1)
    if vector:
        W = W[0]
    return (W, fac) if return_factorization else W


def target_energy(T):
    """Mean per-pattern squared target norm, ``(1/N_v) sum_p |t_p|^2``."""
    T = np.asarray(T, dtype=np.float64)
    return float(np.sum(T * T) / T.shape[0])


def orthonormal_error(W_prime, T_energy, rtol=1e-10):
    """Training MSE from the orthonormal-system weights.

    ``T_energy`` is :func:`target_energy` of the targets. A result below zero
    by more than ``rtol * T_energy`` signals loss of orthogonality.
    """
    E = float(T_energy) - float(np.sum(np.asarray(W_prime) ** 2))
    if E < -rtol * max(abs(T_energy), 1.0):
        warnings.warn(
            f"orthonormal error {E!r} is negative; R is badly conditioned",
            ConditioningWarning,
            stacklevel=2,
        )
    return E
