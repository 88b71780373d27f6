"""Single-hidden-layer perceptron with bypass connections.

Output layer basis ordering is ``[inputs | hidden activations | 1]`` so
``N_u = N + N_h + 1``. The full output weight matrix ``W_o`` (``M x N_u``)
is split into the hidden part ``W_oh`` and the bypass part ``W_oi``, whose
last column is the output threshold.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .activations import ActivationBank, FixedActivation

# fixed pattern chunking for reductions; results do not depend on worker count
_REDUCE_CHUNK = 4096


class InputValidationError(ValueError):
    pass


@dataclass
class MlpNetwork:
    W: np.ndarray  # N_h x (N+1), last column is the hidden threshold
    W_oh: np.ndarray  # M x N_h
    W_oi: np.ndarray  # M x (N+1), last column is the output threshold
    bank: ActivationBank | FixedActivation | None = None

    @property
    def N(self):
        return self.W.shape[1] - 1

    @property
    def N_h(self):
        return self.W.shape[0]

    @property
    def M(self):
        return self.W_oh.shape[0]

    @property
    def N_u(self):
        return self.N + self.N_h + 1

    @property
    def W_o(self):
        return np.hstack([self.W_oi[:, :-1], self.W_oh, self.W_oi[:, -1:]])

    def set_output_weights(self, W_o):
        W_o = np.asarray(W_o, dtype=np.float64)
        N, N_h = self.N, self.N_h
        if W_o.shape != (self.M, self.N_u):
            raise ValueError(f"output weights must be {(self.M, self.N_u)}, got {W_o.shape}")
        self.W_oh = W_o[:, N:N + N_h].copy()
        self.W_oi = np.hstack([W_o[:, :N], W_o[:, -1:]])

    def copy(self):
        return MlpNetwork(
            self.W.copy(), self.W_oh.copy(), self.W_oi.copy(),
            None if self.bank is None else self.bank.copy(),
        )

    def check_finite(self):
        for name in ("W", "W_oh", "W_oi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise FloatingPointError(f"non-finite entries in {name}")
        if isinstance(self.bank, ActivationBank) and not np.all(np.isfinite(self.bank.A)):
            raise FloatingPointError("non-finite activation heights")

    def to_dict(self):
        return {
            "N": self.N,
            "N_h": self.N_h,
            "M": self.M,
            "W": self.W.tolist(),
            "W_oh": self.W_oh.tolist(),
            "W_oi": self.W_oi.tolist(),
            "bank": None if self.bank is None else self.bank.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc):
        N, N_h, M = int(doc["N"]), int(doc["N_h"]), int(doc["M"])
        bank = doc.get("bank")
        if bank is not None:
            if "fixed" in bank:
                bank = FixedActivation(bank["fixed"], bank.get("leaky_slope", 0.01))
            else:
                bank = ActivationBank.from_dict(bank)
        return cls(
            np.array(doc["W"], dtype=np.float64).reshape(N_h, N + 1),
            np.array(doc["W_oh"], dtype=np.float64).reshape(M, N_h),
            np.array(doc["W_oi"], dtype=np.float64).reshape(M, N + 1),
            bank,
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ForwardCache:
    nets: np.ndarray  # N_v x N_h
    acts: np.ndarray  # N_v x N_h
    xa: np.ndarray  # N_v x N_u, [x | o | 1]
    Y: np.ndarray  # N_v x M

    @property
    def x1(self):
        """Patterns augmented with the threshold input, ``[x | 1]``."""
        N_h = self.nets.shape[1]
        N = self.xa.shape[1] - N_h - 1
        return np.hstack([self.xa[:, :N], self.xa[:, -1:]])


@dataclass
class CorrelationSystem:
    R: np.ndarray  # N_u x N_u
    C: np.ndarray  # N_u x M


def init_network(N, N_h, M, seed=0, sigma=1.0):
    if min(N, N_h, M) < 1:
        raise ValueError(f"network dimensions must be positive, got N={N}, N_h={N_h}, M={M}")
    rng = np.random.default_rng(seed)
    W = sigma * rng.standard_normal((N_h, N + 1))
    return MlpNetwork(W, np.zeros((M, N_h)), np.zeros((M, N + 1)))


def add_bias(X):
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def check_patterns(X, N=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputValidationError(f"patterns must be a 2-D array, got {X.ndim}-D")
    if N is not None and X.shape[1] != N:
        raise InputValidationError(f"expected {N} input columns, got {X.shape[1]}")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        p = int(np.flatnonzero(bad)[0])
        raise InputValidationError(f"non-finite value in pattern {p}")
    return X


def hidden_nets(net: MlpNetwork, X):
    return add_bias(X) @ net.W.T


def forward(net: MlpNetwork, X, activation=None) -> ForwardCache:
    """Propagate patterns through the network.

    ``activation`` overrides the network's bank; it must expose
    ``evaluate(nets)`` on an ``(N_v, N_h)`` array.
    """
    X = check_patterns(X, net.N)
    act = activation if activation is not None else net.bank
    if act is None:
        raise ValueError("network has no activation bank; run the priming pass first")
    nets = add_bias(X) @ net.W.T
    acts = act.evaluate(nets)
    xa = np.hstack([X, acts, np.ones((X.shape[0], 1))])
    Y = xa @ net.W_o.T
    return ForwardCache(nets, acts, xa, Y)


def worker_count():
    """Worker threads for pattern-parallel work: ``ADACT_THREADS`` or the CPU count."""
    env = os.environ.get("ADACT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ADACT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _chunked_sum(fn, n_rows, workers=None):
    # Partial sums over fixed-size pattern chunks, combined left to right.
    bounds = [(i, min(i + _REDUCE_CHUNK, n_rows)) for i in range(0, n_rows, _REDUCE_CHUNK)]
    workers = workers or worker_count()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(*b), bounds))
    else:
        parts = [fn(*b) for b in bounds]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def build_correlations(cache: ForwardCache, T, workers=None) -> CorrelationSystem:
    T = np.asarray(T, dtype=np.float64)
    xa = cache.xa
    if T.shape[0] != xa.shape[0]:
        raise ValueError(f"{xa.shape[0]} patterns but {T.shape[0]} target rows")
    Nv = xa.shape[0]
    R = _chunked_sum(lambda i, j: xa[i:j].T @ xa[i:j], Nv, workers) / Nv
    C = _chunked_sum(lambda i, j: xa[i:j].T @ T[i:j], Nv, workers) / Nv
    # symmetrise away round-off so R == R.T exactly
    R = 0.5 * (R + R.T)
    return CorrelationSystem(R, C)


def mse(Y, T):
    Y = np.asarray(Y, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if Y.shape != T.shape:
        raise ValueError(f"shape mismatch: outputs {Y.shape} vs targets {T.shape}")
    if Y.shape[0] == 0:
        raise ValueError("mse of an empty dataset")
    return float(np.sum((T - Y) ** 2) / Y.shape[0])


def pe(Y, T):
    """Percentage of patterns whose output argmax differs from the target argmax."""
    Y = np.asarray(Y, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if Y.shape != T.shape:
        raise ValueError(f"shape mismatch: outputs {Y.shape} vs targets {T.shape}")
    if Y.shape[0] == 0:
        raise ValueError("pe of an empty dataset")
    return float(100.0 * np.mean(np.argmax(Y, axis=1) != np.argmax(T, axis=1)))
