"""Training steps and the full training loop.

All trainers minimise the mean squared error
``E = (1/N_v) sum_p sum_i (t_p(i) - y_p(i))^2`` in full batch. Gradients
returned here are *negative* gradients (descent directions), matching the
update rule ``param <- param + z * G``.

One AdAct iteration runs, in order: a MOLF step on the input weights, an
optimal-learning-factor step on the activation heights, and an OWO solve for
the output weights. The MOLF trainer is the same loop with frozen heights.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .activations import (
    DEFAULT_LEAKY_SLOPE,
    DEFAULT_RANGE_MARGIN,
    REFERENCE_KINDS,
    ActivationBank,
    DegenerateUnitError,
    FixedActivation,
    fit_ranges,
)
from .burden import BurdenInput, burden
from .network import (
    ForwardCache,
    MlpNetwork,
    build_correlations,
    forward,
    hidden_nets,
    init_network,
    mse,
    pe,
)
from .ols import solve_via_ols

log = logging.getLogger(__name__)

TRAINERS = ("adact", "molf", "cg", "scg")
TAU_CURV = 1e-12
MAX_HALVINGS = 10
HISTORY_COLUMNS = ("iteration", "train_mse", "val_mse", "val_pe", "z_act", "multiplies_cumulative")


@dataclass
class TrainConfig:
    trainer: str = "adact"
    n_iter: int = 100
    n_hidden: int = 10
    n_hinges: int = 20
    init_activation: str = "sigmoid"
    act_optimizer: str = "olf"
    adam_lr: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    loss: str = "mse"
    weight_sigma: float = 1.0
    range_margin: float = DEFAULT_RANGE_MARGIN
    leaky_slope: float = DEFAULT_LEAKY_SLOPE
    revive_units: bool = True
    # fraction of (pattern, unit) nets a MOLF step may push past the hinges
    clamp_budget: float = 0.0
    # activation used by molf/cg/scg: the reference function itself, or a
    # piecewise-linear copy of it with frozen heights
    baseline_activation: str = "fixed"

    def __post_init__(self):
        if self.trainer not in TRAINERS:
            raise ValueError(f"trainer must be one of {TRAINERS}, got {self.trainer!r}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be at least 1, got {self.n_iter}")
        if self.n_hinges < 2:
            raise ValueError(f"n_hinges must be at least 2, got {self.n_hinges}")
        if self.n_hidden < 1:
            raise ValueError(f"n_hidden must be at least 1, got {self.n_hidden}")
        if self.init_activation not in REFERENCE_KINDS:
            raise ValueError(
                f"init_activation must be one of {REFERENCE_KINDS}, got {self.init_activation!r}"
            )
        if self.act_optimizer not in ("olf", "adam"):
            raise ValueError(f"act_optimizer must be 'olf' or 'adam', got {self.act_optimizer!r}")
        if not 0.0 <= self.clamp_budget <= 1.0:
            raise ValueError(f"clamp_budget must lie in [0, 1], got {self.clamp_budget}")
        if self.baseline_activation not in ("fixed", "pla"):
            raise ValueError(
                f"baseline_activation must be 'fixed' or 'pla', got {self.baseline_activation!r}"
            )
        if self.loss != "mse":
            raise ValueError(f"only the 'mse' loss is supported, got {self.loss!r}")


@dataclass
class IterationRecord:
    iteration: int
    train_mse: float
    val_mse: float | None = None
    val_pe: float | None = None
    z_act: float | None = None
    multiplies_cumulative: int = 0
    mse_before_owo: float | None = None
    mse_after_owo: float | None = None
    z_molf: np.ndarray | None = field(default=None, repr=False)


@dataclass
class TrainRun:
    config: TrainConfig
    network: MlpNetwork
    records: list = field(default_factory=list)

    @property
    def train_mse(self):
        return np.array([r.train_mse for r in self.records])

    def history_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for rec in self.records:
            w.writerow([_fmt(getattr(rec, c)) for c in HISTORY_COLUMNS])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# --------------------------------------------------------------------------
# output weights


def owo_step(net: MlpNetwork, X, T, cache: ForwardCache | None = None):
    """Replace all output weights with the least-squares solution.

    The system is solved for the correction to the current weights,
    ``R dW_o.T = C - R W_o.T``. On a full-rank ``R`` this is the ordinary
    solution; when OLS skips a nearly dependent basis function, that
    function keeps its current weight rather than dropping to zero, so the
    training error never goes up.

    Returns ``(mse_before, mse_after, factorization)``.
    """
    T = np.asarray(T, dtype=np.float64)
    if cache is None:
        cache = forward(net, X)
    before = mse(cache.Y, T)
    corr = build_correlations(cache, T)
    W_prev = net.W_o
    dW, fac = solve_via_ols(corr.R, corr.C - corr.R @ W_prev.T, return_factorization=True)
    W_o = W_prev + dW
    net.set_output_weights(W_o)
    after = mse(cache.xa @ W_o.T, T)
    return before, after, fac


# --------------------------------------------------------------------------
# input weights


def _output_delta(net, cache, T):
    # (t - y) pushed back through the hidden-to-output weights: N_v x N_h
    return (np.asarray(T, dtype=np.float64) - cache.Y) @ net.W_oh


def input_weight_gradient(net: MlpNetwork, T, cache: ForwardCache):
    """Negative gradient of E with respect to the input weights ``W``."""
    Nv = cache.nets.shape[0]
    delta = _output_delta(net, cache, T) * net.bank.slope(cache.nets)
    return (2.0 / Nv) * delta.T @ cache.x1


def _line_guard(z, energy, E0):
    """Halve ``z`` until ``energy(z) <= E0``; give up (return 0) after ten tries."""
    scale = 1.0
    for _ in range(MAX_HALVINGS + 1):
        E = energy(scale * z)
        if np.isfinite(E) and E <= E0:
            return scale * z, E
        scale *= 0.5
    return z * 0.0, E0


def molf_system(net: MlpNetwork, T, cache: ForwardCache, G):
    """Gauss-Newton gradient and Hessian for one learning factor per hidden unit.

    Returns ``(g_molf, H_molf)`` where ``g_molf = -dE/dz`` at ``z = 0``.
    """
    Nv = cache.nets.shape[0]
    D = net.bank.slope(cache.nets) * (cache.x1 @ G.T)
    g = (2.0 / Nv) * np.sum(D * _output_delta(net, cache, T), axis=0)
    H = (2.0 / Nv) * (D.T @ D) * (net.W_oh.T @ net.W_oh)
    return g, H


def molf_step(net: MlpNetwork, X, T, cache: ForwardCache, G, guard=True, clamp_budget=0.0):
    """Update ``W`` row-wise as ``W_k <- W_k + z_k G_k``; returns ``z``.

    With ``guard`` the step is halved until the error does not rise and the
    number of (pattern, unit) nets outside the hinge ranges stays within
    ``max(current, clamp_budget * N_v * N_h)``. Clamped
    patterns have zero slope, so the Gauss-Newton model cannot see the
    cost of pushing nets past the fixed hinges.
    """
    g, H = molf_system(net, T, cache, G)
    if not np.any(g):
        return np.zeros_like(g)
    z = solve_via_ols(H, g)
    if guard:
        W0 = net.W
        E0 = mse(cache.Y, T)
        n_clamped = max(net.bank.n_clamped(cache.nets), int(clamp_budget * cache.nets.size))

        def energy(zz):
            net.W = W0 + zz[:, None] * G
            c = forward(net, X)
            if net.bank.n_clamped(c.nets) > n_clamped:
                return np.inf
            return mse(c.Y, T)

        z, _ = _line_guard(z, energy, E0)
        net.W = W0
    net.W = net.W + z[:, None] * G
    return z


# --------------------------------------------------------------------------
# activation heights


def activation_gradient(net: MlpNetwork, T, cache: ForwardCache):
    """Negative gradient of E with respect to the heights, shape ``(N_h, H)``.

    Net values in the clamp region route their whole contribution to the end
    hinge they are clamped to.
    """
    bank = net.bank
    Nv, Nh = cache.nets.shape
    H = bank.H
    m1, w1, w2, _ = bank.interpolation(cache.nets)
    d = _output_delta(net, cache, T)
    base = np.arange(Nh) * H
    flat = np.bincount((m1 + base).ravel(), weights=(d * w1).ravel(), minlength=Nh * H)
    flat += np.bincount((m1 + 1 + base).ravel(), weights=(d * w2).ravel(), minlength=Nh * H)
    return (2.0 / Nv) * flat.reshape(Nh, H)


def _activation_direction(net, cache, G_a):
    # dY/dz for A <- A + z G_a: heights enter the outputs linearly
    m1, w1, w2, _ = net.bank.interpolation(cache.nets)
    dO = ActivationBank._combine(np.asarray(G_a, dtype=np.float64), m1, w1, w2)
    return dO @ net.W_oh.T


def activation_olf_terms(net: MlpNetwork, T, cache: ForwardCache, G_a):
    """First and Gauss-Newton second derivative of E along ``G_a`` at ``z = 0``."""
    Nv = cache.nets.shape[0]
    J = _activation_direction(net, cache, G_a)
    e = np.asarray(T, dtype=np.float64) - cache.Y
    dE = -(2.0 / Nv) * float(np.sum(e * J))
    d2E = (2.0 / Nv) * float(np.sum(J * J))
    return dE, d2E


def activation_olf(net: MlpNetwork, T, cache: ForwardCache, G_a, iteration=0):
    """Newton learning factor ``z = -E'/E''`` for the height update."""
    dE, d2E = activation_olf_terms(net, T, cache, G_a)
    if dE == 0.0:
        return 0.0
    # curvature scales with W_oh**2; judge it relative to the slope so the
    # fallback only fires when the Newton step itself would blow up
    if d2E <= TAU_CURV * abs(dE):
        return 0.1 / (1 + iteration)
    return -dE / d2E


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0

    def step(self, G):
        """Ascent step along the negative gradient ``G``."""
        if self.m is None:
            self.m = np.zeros_like(G)
            self.v = np.zeros_like(G)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * G
        self.v = self.beta2 * self.v + (1 - self.beta2) * G * G
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def update_activations(bank: ActivationBank, G_a, rule="olf", z=0.0, adam: AdamState | None = None):
    """Apply a height update in place; hinge grids are never touched."""
    G_a = np.asarray(G_a, dtype=np.float64)
    if G_a.shape != bank.A.shape:
        raise ValueError(f"gradient shape {G_a.shape} does not match heights {bank.A.shape}")
    if rule == "olf":
        step = z * G_a
    elif rule == "adam":
        if adam is None:
            raise ValueError("adam rule needs an AdamState")
        step = adam.step(G_a)
    else:
        raise ValueError(f"unknown activation update rule {rule!r}")
    new = bank.A + step
    if not np.all(np.isfinite(new)):
        raise FloatingPointError(
            f"non-finite activation update (rule={rule}, z={z!r}, max|G_a|={np.max(np.abs(G_a))!r})"
        )
    bank.A[...] = new
    return bank


def activation_step(net, X, T, cache, iteration=0, rule="olf", adam=None, guard=True):
    """Gradient, learning factor and guarded update for the heights; returns ``z``."""
    G_a = activation_gradient(net, T, cache)
    if rule == "adam":
        update_activations(net.bank, G_a, "adam", adam=adam)
        return None
    z = activation_olf(net, T, cache, G_a, iteration)
    if guard and z != 0.0:
        A0 = net.bank.A.copy()
        E0 = mse(cache.Y, T)

        def energy(zz):
            net.bank.A[...] = A0 + zz * G_a
            return mse(forward(net, X).Y, T)

        z, _ = _line_guard(z, energy, E0)
        net.bank.A[...] = A0
    update_activations(net.bank, G_a, "olf", z=z)
    return z


# --------------------------------------------------------------------------
# conjugate gradient baselines


BLOCKS = ("input", "output")


def full_gradient(net: MlpNetwork, T, cache: ForwardCache, blocks=BLOCKS):
    """Negative gradient for ``(W, W_o)``; blocks left out come back as zeros."""
    Nv = cache.nets.shape[0]
    e = np.asarray(T, dtype=np.float64) - cache.Y
    G_W = input_weight_gradient(net, T, cache) if "input" in blocks else np.zeros_like(net.W)
    G_o = (2.0 / Nv) * e.T @ cache.xa if "output" in blocks else np.zeros((net.M, net.N_u))
    return G_W, G_o


@dataclass
class CGState:
    blocks: tuple = BLOCKS
    P: np.ndarray | None = None
    P_o: np.ndarray | None = None
    g_energy: float | None = None
    z: float = 0.01  # scaled-CG step, adapted by success/failure
    iteration: int = 0


def _apply(net, W0, Wo0, z, P, P_o):
    net.W = W0 + z * P
    net.set_output_weights(Wo0 + z * P_o)


def _cg_direction(net, T, cache, state: CGState):
    G_W, G_o = full_gradient(net, T, cache, state.blocks)
    energy = float(np.sum(G_W**2) + np.sum(G_o**2))
    if state.P is None or not state.g_energy:
        P, P_o = G_W, G_o
    else:
        beta = energy / state.g_energy
        P, P_o = G_W + beta * state.P, G_o + beta * state.P_o
        # restart when the conjugate direction stops being a descent direction
        if float(np.sum(P * G_W) + np.sum(P_o * G_o)) <= 0.0:
            P, P_o = G_W, G_o
    state.g_energy = energy
    state.P, state.P_o = P, P_o
    return P, P_o, energy


def cg_olf(net, T, cache, P, P_o):
    """Gauss-Newton optimal step along the joint direction ``(P, P_o)``."""
    J = cache.xa @ P_o.T
    if np.any(P):
        J = J + (net.bank.slope(cache.nets) * (cache.x1 @ P.T)) @ net.W_oh.T
    e = np.asarray(T, dtype=np.float64) - cache.Y
    den = float(np.sum(J * J))
    if den <= TAU_CURV:
        return 0.0
    return float(np.sum(e * J)) / den


def cg_step(net: MlpNetwork, X, T, state: CGState, cache=None, guard=True):
    """One conjugate-gradient iteration with a Gauss-Newton learning factor; returns ``z``."""
    if cache is None:
        cache = forward(net, X)
    P, P_o, energy = _cg_direction(net, T, cache, state)
    state.iteration += 1
    if energy == 0.0:
        return 0.0
    z = cg_olf(net, T, cache, P, P_o)
    W0, Wo0 = net.W.copy(), net.W_o
    if guard:
        E0 = mse(cache.Y, T)

        def f(zz):
            _apply(net, W0, Wo0, zz, P, P_o)
            return mse(forward(net, X).Y, T)

        z, _ = _line_guard(z, f, E0)
    _apply(net, W0, Wo0, z, P, P_o)
    return z


def scg_step(net: MlpNetwork, X, T, state: CGState, cache=None):
    """Conjugate direction with a heuristically scaled step.

    The step doubles after an iteration that lowers the error and halves
    (without moving) after one that does not.
    """
    if cache is None:
        cache = forward(net, X)
    P, P_o, energy = _cg_direction(net, T, cache, state)
    state.iteration += 1
    if energy == 0.0:
        return 0.0
    E0 = mse(cache.Y, T)
    W0, Wo0 = net.W.copy(), net.W_o
    # normalise so the step length is z in weight space
    norm = math.sqrt(float(np.sum(P**2) + np.sum(P_o**2)))
    z = state.z / norm
    _apply(net, W0, Wo0, z, P, P_o)
    E = mse(forward(net, X).Y, T)
    if np.isfinite(E) and E < E0:
        state.z *= 2.0
        return z
    _apply(net, W0, Wo0, 0.0, P, P_o)
    state.z *= 0.5
    # the stored direction led nowhere; start the next one from steepest descent
    state.P = None
    return 0.0


# --------------------------------------------------------------------------
# full loop


def prime_network(config: TrainConfig, X, T):
    """Random input weights, activations fitted to the initial nets, and an initial OWO."""
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    net = init_network(X.shape[1], config.n_hidden, T.shape[1], config.seed, config.weight_sigma)
    if config.revive_units:
        revive_units(net, X, np.random.default_rng([config.seed, 1]))
    if config.trainer != "adact" and config.baseline_activation == "fixed":
        net.bank = FixedActivation(config.init_activation, config.leaky_slope)
    else:
        try:
            ranges = fit_ranges(hidden_nets(net, X), config.range_margin)
        except DegenerateUnitError as exc:
            raise DegenerateUnitError(
                exc.unit, exc.value, "reseed the input weights or reduce n_hidden"
            ) from None
        net.bank = ActivationBank.from_reference(
            config.init_activation, ranges, config.n_hinges, config.leaky_slope
        )
    owo_step(net, X, T)
    return net


def revive_units(net: MlpNetwork, X, rng):
    """Shift thresholds of units whose initial nets never cross zero.

    Such a unit sees only one side of a relu-like reference and starts out
    flat (dead) or linear over every pattern. Its threshold is moved so that
    zero falls on the net value of a randomly chosen pattern. Units whose
    nets already change sign are left alone. Returns the revived unit indices.
    """
    nets = hidden_nets(net, X)
    lo, hi = nets.min(axis=0), nets.max(axis=0)
    revived = np.flatnonzero((lo >= 0) | (hi <= 0))
    for k in revived:
        net.W[k, -1] -= nets[rng.integers(nets.shape[0]), k]
    return revived


def _burden_kind(trainer):
    return {"adact": "adact", "molf": "molf", "cg": "cg", "scg": "scg"}[trainer]


def train(config: TrainConfig, X, T, X_val=None, T_val=None, kind="approximation") -> TrainRun:
    """Run ``config.n_iter`` iterations and record the history.

    ``X`` should already be standardised. ``kind='classification'`` adds the
    percentage of error on the validation set.
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 1:
        T = T[:, None]
    if T_val is not None:
        T_val = np.asarray(T_val, dtype=np.float64)
        if T_val.ndim == 1:
            T_val = T_val[:, None]
    net = prime_network(config, X, T)
    run = TrainRun(config, net)
    per_iter = burden(
        _burden_kind(config.trainer),
        BurdenInput(X.shape[1], config.n_hidden, T.shape[1], X.shape[0], config.n_hinges),
    )
    adam = AdamState(config.adam_lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
    cg_state = CGState()

    for it in range(config.n_iter):
        rec = IterationRecord(iteration=it + 1, train_mse=float("nan"))
        if config.trainer in ("adact", "molf"):
            cache = forward(net, X)
            G = input_weight_gradient(net, T, cache)
            rec.z_molf = molf_step(net, X, T, cache, G, clamp_budget=config.clamp_budget)
            if config.trainer == "adact":
                cache = forward(net, X)
                rec.z_act = activation_step(
                    net, X, T, cache, iteration=it, rule=config.act_optimizer, adam=adam
                )
            before, after, _ = owo_step(net, X, T)
            rec.mse_before_owo, rec.mse_after_owo = before, after
            rec.train_mse = after
        elif config.trainer == "cg":
            cg_step(net, X, T, cg_state)
            rec.train_mse = mse(forward(net, X).Y, T)
        else:
            scg_step(net, X, T, cg_state)
            rec.train_mse = mse(forward(net, X).Y, T)
        net.check_finite()
        if X_val is not None:
            Yv = forward(net, X_val).Y
            rec.val_mse = mse(Yv, T_val)
            if kind == "classification":
                rec.val_pe = pe(Yv, T_val)
        rec.multiplies_cumulative = per_iter * (it + 1)
        run.records.append(rec)
        log.debug("iteration %d: train mse %.6g", rec.iteration, rec.train_mse)
    return run


def predict(net: MlpNetwork, X):
    return forward(net, X).Y


def config_dict(config: TrainConfig):
    return asdict(config)
