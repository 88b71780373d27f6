"""Trainable piecewise-linear activations.

Each hidden unit owns a fixed, evenly spaced grid of hinge abscissae and a
vector of trainable heights, one per hinge. Between hinges the activation
is the linear interpolation of the two neighbouring heights; outside the
grid it is flat at the end heights.

Hinge indices are 0-based throughout: hinge ``m`` sits at ``r + m * delta``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

REFERENCE_KINDS = ("sigmoid", "tanh", "relu", "leaky_relu", "identity")
DEFAULT_LEAKY_SLOPE = 0.01
DEFAULT_RANGE_MARGIN = 0.05


class DegenerateRangeError(ValueError):
    pass


class InvalidHingeCountError(ValueError):
    pass


class OutOfRangeError(ValueError):
    pass


class DegenerateUnitError(ValueError):
    def __init__(self, unit, value, hint=None):
        self.unit = unit
        self.value = value
        msg = f"hidden unit {unit} has a constant net value {value!r} over all patterns"
        super().__init__(f"{msg}; {hint}" if hint else msg)


@dataclass(frozen=True)
class HingeGrid:
    r: float
    s: float
    H: int
    ns: np.ndarray = field(repr=False)
    delta: float = field(repr=False)

    def __post_init__(self):
        self.ns.setflags(write=False)


def init_hinges(r, s, H) -> HingeGrid:
    """Evenly spaced hinges from ``r`` to ``s`` inclusive."""
    r, s = float(r), float(s)
    if not s > r:
        raise DegenerateRangeError(f"hinge range needs s > r, got r={r}, s={s}")
    if int(H) != H or H < 2:
        raise InvalidHingeCountError(f"need at least 2 hinges, got {H}")
    H = int(H)
    delta = (s - r) / (H - 1)
    ns = r + delta * np.arange(H, dtype=np.float64)
    # pin the right end exactly; r + (H-1)*delta can miss s by an ulp
    ns[-1] = s
    return HingeGrid(r, s, H, ns, delta)


def reference(kind, n, leaky_slope=DEFAULT_LEAKY_SLOPE):
    n = np.asarray(n, dtype=np.float64)
    if kind == "sigmoid":
        # exp of a non-positive argument only, so neither tail overflows or cancels
        e = np.exp(-np.abs(n))
        return np.where(n >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if kind == "tanh":
        return np.tanh(n)
    if kind == "relu":
        return np.maximum(n, 0.0)
    if kind == "leaky_relu":
        return np.where(n > 0, n, leaky_slope * n)
    if kind == "identity":
        return n.copy()
    raise ValueError(f"unknown reference activation {kind!r}; expected one of {REFERENCE_KINDS}")


@dataclass
class PiecewiseLinearActivation:
    grid: HingeGrid
    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a.shape != (self.grid.H,):
            raise ValueError(f"expected {self.grid.H} heights, got shape {self.a.shape}")

    def __call__(self, n):
        return evaluate(self, n)


def init_from_reference(kind, grid: HingeGrid, leaky_slope=DEFAULT_LEAKY_SLOPE):
    return PiecewiseLinearActivation(grid, reference(kind, grid.ns, leaky_slope))


def _bucket(n, r, delta, ns):
    # Left hinge index per value, clamped to [0, H-2]. The floor estimate is
    # corrected against the stored abscissae so that a value sitting exactly
    # on an interior hinge always lands in the interval to its right.
    H = ns.shape[-1]
    idx = np.floor((n - r) / delta).astype(np.intp)
    idx = np.clip(idx, 0, H - 2)
    right = np.take_along_axis(ns, idx + 1, axis=-1) if ns.ndim > 1 else ns[idx + 1]
    idx = np.where((n >= right) & (idx < H - 2), idx + 1, idx)
    left = np.take_along_axis(ns, idx, axis=-1) if ns.ndim > 1 else ns[idx]
    idx = np.where((n < left) & (idx > 0), idx - 1, idx)
    return idx


def _right_weight(n, left, delta):
    # clipped so round-off at the grid ends cannot push weights outside [0, 1]
    return np.clip((n - left) / delta, 0.0, 1.0)


def locate(n, grid: HingeGrid):
    """Return ``(m1, m2, w1, w2)`` for a scalar net value inside the grid."""
    n = float(n)
    if not grid.r <= n <= grid.s:
        raise OutOfRangeError(f"net value {n} outside hinge range [{grid.r}, {grid.s}]")
    m1 = int(_bucket(np.float64(n), grid.r, grid.delta, grid.ns))
    w2 = _right_weight(n, grid.ns[m1], grid.delta)
    return m1, m1 + 1, float(1.0 - w2), float(w2)


def evaluate(pla: PiecewiseLinearActivation, n):
    g = pla.grid
    n = np.asarray(n, dtype=np.float64)
    t = np.clip(n, g.r, g.s)
    m1 = _bucket(t, g.r, g.delta, g.ns)
    w2 = _right_weight(t, g.ns[m1], g.delta)
    out = (1.0 - w2) * pla.a[m1] + w2 * pla.a[m1 + 1]
    return out if out.ndim else float(out)


def slope(pla: PiecewiseLinearActivation, n):
    g = pla.grid
    n = np.asarray(n, dtype=np.float64)
    m1 = _bucket(np.clip(n, g.r, g.s), g.r, g.delta, g.ns)
    d = (pla.a[m1 + 1] - pla.a[m1]) / g.delta
    out = np.where((n < g.r) | (n > g.s), 0.0, d)
    return out if out.ndim else float(out)


def to_ramps(pla: PiecewiseLinearActivation):
    """Rewrite the activation as ``offset + sum_k coef[k] * max(0, n - ns[k])``.

    The last coefficient cancels the final segment's slope so the sum is flat
    beyond the grid, matching the clamp behaviour of :func:`evaluate` on the
    right. Values left of the grid are not covered by the ramp form.
    """
    seg = np.diff(pla.a) / pla.grid.delta
    coef = np.diff(np.concatenate([[0.0], seg, [0.0]]))
    return float(pla.a[0]), coef


def fit_ranges(net_values, margin=DEFAULT_RANGE_MARGIN):
    """Per-unit ``(r, s)`` from the observed nets, widened by ``margin`` of the span."""
    nets = np.asarray(net_values, dtype=np.float64)
    if nets.ndim != 2 or nets.shape[0] < 2:
        raise ValueError("fit_ranges needs a 2-D array with at least two patterns")
    lo = nets.min(axis=0)
    hi = nets.max(axis=0)
    for k in range(nets.shape[1]):
        if not hi[k] > lo[k]:
            raise DegenerateUnitError(k, lo[k])
    pad = margin * (hi - lo)
    return [(float(a), float(b)) for a, b in zip(lo - pad, hi + pad)]


def reference_slope(kind, n, leaky_slope=DEFAULT_LEAKY_SLOPE):
    n = np.asarray(n, dtype=np.float64)
    if kind == "sigmoid":
        f = reference("sigmoid", n)
        return f * (1.0 - f)
    if kind == "tanh":
        return 1.0 - np.tanh(n) ** 2
    if kind == "relu":
        return (n > 0).astype(np.float64)
    if kind == "leaky_relu":
        return np.where(n > 0, 1.0, leaky_slope)
    if kind == "identity":
        return np.ones_like(n)
    raise ValueError(f"unknown reference activation {kind!r}; expected one of {REFERENCE_KINDS}")


@dataclass(frozen=True)
class FixedActivation:
    """A conventional activation shared by all hidden units (no hinges, no clamp region)."""

    kind: str
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference activation {self.kind!r}")

    def evaluate(self, nets):
        return reference(self.kind, nets, self.leaky_slope)

    def slope(self, nets):
        return reference_slope(self.kind, nets, self.leaky_slope)

    def n_clamped(self, nets):
        return 0

    def copy(self):
        return self

    def to_dict(self):
        return {"fixed": self.kind, "leaky_slope": self.leaky_slope}


class ActivationBank:
    """One piecewise-linear activation per hidden unit, all with the same hinge count.

    Heights are kept in a single ``(N_h, H)`` array so forward and gradient
    passes vectorise over units; ``units`` gives per-unit views.
    """

    def __init__(self, grids, heights):
        grids = list(grids)
        if not grids:
            raise ValueError("an activation bank needs at least one unit")
        H = grids[0].H
        if any(g.H != H for g in grids):
            raise ValueError("all units in a bank must share the same hinge count")
        heights = np.array(heights, dtype=np.float64)
        if heights.shape != (len(grids), H):
            raise ValueError(f"heights must have shape {(len(grids), H)}, got {heights.shape}")
        self.grids = tuple(grids)
        self.A = heights
        self.H = H
        self._r = np.array([g.r for g in grids])
        self._s = np.array([g.s for g in grids])
        self._delta = np.array([g.delta for g in grids])
        self._ns = np.vstack([g.ns for g in grids])
        self._ns.setflags(write=False)

    @classmethod
    def from_reference(cls, kind, ranges, H, leaky_slope=DEFAULT_LEAKY_SLOPE):
        grids = [init_hinges(r, s, H) for r, s in ranges]
        return cls(grids, [reference(kind, g.ns, leaky_slope) for g in grids])

    @property
    def n_units(self):
        return len(self.grids)

    @property
    def ns(self):
        return self._ns

    @property
    def units(self):
        return [PiecewiseLinearActivation(g, self.A[k]) for k, g in enumerate(self.grids)]

    def copy(self):
        return ActivationBank(self.grids, self.A.copy())

    def interpolation(self, nets):
        """Bucket indices and interpolation weights for an ``(N_v, N_h)`` net matrix.

        Returns ``(m1, w1, w2, inside)``. Clamped values get ``w1 = 1`` at
        hinge 0 or ``w2 = 1`` at hinge ``H-1`` so that the weights always
        select the height the activation actually outputs.
        """
        nets = np.asarray(nets, dtype=np.float64)
        t = np.clip(nets, self._r, self._s)
        ns = np.broadcast_to(self._ns, nets.shape[:-1] + self._ns.shape)
        m1 = _bucket(t[..., None], self._r[:, None], self._delta[:, None], ns)[..., 0]
        left = np.take_along_axis(self._ns, m1.T, axis=1).T
        w2 = _right_weight(t, left, self._delta)
        w1 = 1.0 - w2
        inside = (nets >= self._r) & (nets <= self._s)
        return m1, w1, w2, inside

    def n_clamped(self, nets):
        """Number of ``(pattern, unit)`` net values outside their hinge range."""
        nets = np.asarray(nets)
        return int(np.count_nonzero((nets < self._r) | (nets > self._s)))

    def evaluate(self, nets):
        m1, w1, w2, _ = self.interpolation(nets)
        return self._combine(self.A, m1, w1, w2)

    def slope(self, nets):
        m1, _, _, inside = self.interpolation(nets)
        seg = np.diff(self.A, axis=1) / self._delta[:, None]
        d = np.take_along_axis(seg, m1.T, axis=1).T
        return np.where(inside, d, 0.0)

    @staticmethod
    def _combine(A, m1, w1, w2):
        lo = np.take_along_axis(A, m1.T, axis=1).T
        hi = np.take_along_axis(A, m1.T + 1, axis=1).T
        return w1 * lo + w2 * hi

    def to_dict(self):
        return {
            "H": self.H,
            "units": [
                {"r": g.r, "s": g.s, "ns": g.ns.tolist(), "a": self.A[k].tolist()}
                for k, g in enumerate(self.grids)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        H = int(doc["H"])
        grids = []
        for u in doc["units"]:
            ns = np.array(u["ns"], dtype=np.float64)
            if ns.shape != (H,):
                raise ValueError(f"unit hinge vector has {ns.size} entries, expected {H}")
            r, s = float(u["r"]), float(u["s"])
            grids.append(HingeGrid(r, s, H, ns, (s - r) / (H - 1)))
        return cls(grids, [u["a"] for u in doc["units"]])

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))
