"""Multiplies per training iteration for each trainer.

Counts are evaluated in exact rational arithmetic and rounded once at the
end, so they are identical on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

KINDS = ("lm", "cg", "scg", "molf", "adact", "ols")


@dataclass(frozen=True)
class BurdenInput:
    N: int
    N_h: int
    M: int
    N_v: int
    N_hinges: int = 0

    def __post_init__(self):
        for name in ("N", "N_h", "M", "N_v"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.N_hinges < 0:
            raise ValueError(f"N_hinges must be non-negative, got {self.N_hinges}")

    @property
    def N_u(self):
        return self.N + self.N_h + 1

    @property
    def N_w(self):
        return self.M * self.N_u + (self.N + 1) * self.N_h


def _ols(d: BurdenInput):
    Nu = d.N_u
    return Nu * (Nu + 1) * (d.M + Fraction(Nu * (2 * Nu + 1), 6) + Fraction(3, 2))


def _cg(d: BurdenInput):
    N, Nh, M, Nu, Nw = d.N, d.N_h, d.M, d.N_u, d.N_w
    return (
        M * Nu
        + M * (N + 6 * Nh + 4)
        + M * Nu * (Nu + 3 * Nh * (N + 1))
        + 4 * Nh**4 * (N + 1) ** 2
        + Nw**3
        + Nw**2
    )


def _lm(d: BurdenInput):
    return _cg(d) + 2 * d.N_h * (d.N + 1)


def _molf(d: BurdenInput):
    N, Nh, M = d.N, d.N_h, d.M
    return _ols(d) + d.N_v * Nh * (2 * M + N + 2 + Fraction(M * (Nh + 1), 2))


def _adact(d: BurdenInput):
    return _molf(d) + d.N_h * d.N_hinges


_FORMULAS = {
    "lm": _lm,
    "cg": _cg,
    "scg": _cg,
    "molf": _molf,
    "adact": _adact,
    "ols": _ols,
}


def burden_exact(kind, d: BurdenInput) -> Fraction:
    try:
        fn = _FORMULAS[kind]
    except KeyError:
        raise ValueError(f"unknown algorithm {kind!r}; expected one of {KINDS}") from None
    return Fraction(fn(d))


def burden(kind, d: BurdenInput) -> int:
    """Multiplies per iteration, rounded half-up to the nearest integer."""
    q = burden_exact(kind, d)
    return int((q + Fraction(1, 2)) // 1)


def burden_table(d: BurdenInput):
    return {k: burden(k, d) for k in KINDS}
