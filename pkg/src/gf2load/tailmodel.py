"""Tail bounds for squaring-martingale-like sequences and their tight examples.

The sequences here satisfy ``E[X_{i+1} | X_<=i] <= X_i^2``.  Values such
as ``t^(2^(k-1))`` overflow quickly, so tail events are compared in log
space: ``log X_k >= 2^(k-1) log t``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TAIL_KINDS = ("basic", "strong", "op")
TRAJECTORY_KINDS = ("basic-tight", "strong-tight", "potential-derived", "custom")
GRID_CLAIMS = ("min_to_linear", "beta_range", "upper_approx", "beta_recursion")

GRID_TOL = 1e-12
# relative slack on log-space tail comparisons
LOG_TOL = 1e-12


class DomainError(ValueError):
    """A parameter lies outside the hypothesis of the bound being evaluated."""


@dataclass(frozen=True)
class TailTrajectory:
    values: tuple[float, ...]
    kind: str = "custom"

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("trajectory needs at least X_0")
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "strong-tight":
            v = self.values
            for i in range(1, len(v) - 1):
                if v[i + 1] - 1 < 2 * (v[i] - 1) * (1 - 1e-12):
                    raise ValueError(f"strong monotonicity fails at step {i}")

    @property
    def k(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class BetaParams:
    i: int
    t: float
    delta: float

    def __post_init__(self):
        if self.i < 0:
            raise DomainError("i must be >= 0")
        if self.delta < 0:
            raise DomainError("delta must be >= 0")
        if not self.t > 1 + 2 * self.delta:
            raise DomainError(f"need t > 1 + 2 delta (t={self.t}, delta={self.delta})")


def _pow_minus_one(t: float, e: int) -> float:
    """t^e - 1 without cancellation."""
    return math.expm1(e * math.log1p(t - 1.0))


def beta(p: BetaParams | int, t: float | None = None, delta: float | None = None) -> float:
    """beta_i(t, d) = (t^(2^i) - (1 + 2^i d)^2) / (t^(2^i) - (1 + 2^(i+1) d)).

    Evaluated as ``1 - 4^i d^2 / (t^(2^i) - 1 - 2^(i+1) d)`` with the power
    formed through expm1/log1p.  Accepts a :class:`BetaParams` or ``(i, t, delta)``.
    """
    if not isinstance(p, BetaParams):
        p = BetaParams(p, t, delta)
    i, t, d = p.i, p.t, p.delta
    if d == 0:
        return 1.0
    den = _pow_minus_one(t, 1 << i) - math.ldexp(d, i + 1)
    if math.isinf(den):
        return 1.0
    return 1.0 - math.ldexp(d * d, 2 * i) / den


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def tail_bound(kind: str, X0: float, t: float, k: int = 1, delta: float = 0.0) -> float:
    """Upper bound on Pr[X_k >= t^(2^(k-1))].

    * ``basic``: (X0^2 - 1)/(t - 1) for t > 1, X0 >= 1
    * ``strong``: 48 ((X0 - 1)/(t - 1))^2 for X0 > 1, 1 + 4(X0 - 1) <= t <= 2,
      requires Psi_{i+1} >= 2 Psi_i
    * ``op``: 1 - (t - X0^2)/(t - 1 - 2 delta) * prod_{i=1}^{k-1} beta_i(t, delta)
      for t > 1 + 2 delta, X0 > 1, X_i >= 1 + 2^i delta
    """
    if kind == "basic":
        if not t > 1:
            raise DomainError("basic bound needs t > 1")
        if X0 < 1:
            raise DomainError("basic bound needs X0 >= 1")
        return _clamp01((X0 * X0 - 1) / (t - 1))
    if kind == "strong":
        if not X0 > 1:
            raise DomainError("strong bound needs X0 > 1")
        if not (1 + 4 * (X0 - 1) <= t * (1 + 1e-15) and t <= 2):
            raise DomainError("strong bound needs 1 + 4(X0 - 1) <= t <= 2")
        return _clamp01(48 * ((X0 - 1) / (t - 1)) ** 2)
    if kind == "op":
        if not t > 1 + 2 * delta:
            raise DomainError("op bound needs t > 1 + 2 delta")
        if not X0 > 1:
            raise DomainError("op bound needs X0 > 1")
        if k < 1:
            raise DomainError("op bound needs k >= 1")
        prod = (t - X0 * X0) / (t - 1 - 2 * delta)
        for i in range(1, k):
            prod *= beta(i, t, delta)
        return _clamp01(1 - prod)
    raise ValueError(f"unknown tail bound kind {kind!r}; choose from {TAIL_KINDS}")


# -- tight sequences ----------------------------------------------------------


def _tight_logs(kind, rng, X0, t, delta, k, n):
    """log X_0..log X_k for n independent tight sequences, shape (n, k + 1)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    lt = math.log(t)
    out = np.empty((n, k + 1))
    if kind == "basic":
        if not t > 1 or X0 < 1 or X0 * X0 > t:
            raise DomainError("basic tight sequence needs t > 1 and 1 <= X0 <= sqrt(t)")
        p = (X0 * X0 - 1) / (t - 1)
        high = rng.random(n) < p
        out[:, 0] = math.log(X0)
        for i in range(1, k + 1):
            # X_1 in {1, t}; afterwards X_{i+1} = X_i^2
            out[:, i] = np.where(high, math.ldexp(lt, i - 1), 0.0)
        return out
    if kind == "op":
        if delta <= 0 or not t > 1 + 2 * delta:
            raise DomainError("op tight sequence needs delta > 0 and t > 1 + 2 delta")
        if abs(X0 - (1 + delta)) > 1e-12 * X0:
            raise DomainError("op tight sequence starts at X0 = 1 + delta")
        out[:, 0] = math.log1p(delta)
        p_low = (t - X0 * X0) / (t - 1 - 2 * delta)
        if not 0 <= p_low <= 1:
            raise DomainError("branch probability outside [0, 1]")
        low = rng.random(n) < p_low
        out[:, 1] = np.where(low, math.log1p(2 * delta), lt)
        for i in range(1, k):
            stay = rng.random(n) < beta(i, t, delta)
            jump = low & ~stay
            low = low & stay
            hi_val = math.ldexp(lt, i)
            out[:, i + 1] = np.where(low, math.log1p(math.ldexp(delta, i + 1)), hi_val)
            # sequences already on the t-branch keep squaring
            out[:, i + 1] = np.where(~low & ~jump, 2 * out[:, i], out[:, i + 1])
        return out
    raise ValueError(f"unknown tight sequence kind {kind!r}")


def simulate_tight_sequence(
    kind: str,
    rng: np.random.Generator,
    X0: float,
    t: float,
    delta: float = 0.0,
    k: int = 1,
) -> TailTrajectory:
    """One draw of the sequence that makes the basic or op tail bound tight."""
    logs = _tight_logs(kind, rng, X0, t, delta, k, 1)[0]
    vals = tuple(float(v) for v in np.exp(logs))
    return TailTrajectory(vals, "basic-tight" if kind == "basic" else "custom")


def simulate_tight_logs(
    kind: str, rng: np.random.Generator, X0: float, t: float, delta: float, k: int, n: int
) -> np.ndarray:
    """Vectorized :func:`simulate_tight_sequence`; returns log-values, shape (n, k + 1)."""
    return _tight_logs(kind, rng, X0, t, delta, k, n)


def tail_event_log(log_xk: np.ndarray | float, t: float, k: int):
    """X_k >= t^(2^(k-1)), decided in log space."""
    thresh = math.ldexp(math.log(t), k - 1)
    return np.asarray(log_xk) >= thresh - LOG_TOL * abs(thresh)


def empirical_tail(trajectories: Iterable[TailTrajectory | Sequence[float]], t: float) -> float:
    """Fraction of trajectories with X_k >= t^(2^(k-1)), k = each trajectory's last index."""
    hits = total = 0
    for tr in trajectories:
        vals = tr.values if isinstance(tr, TailTrajectory) else tuple(tr)
        k = len(vals) - 1
        total += 1
        x = vals[-1]
        if x > 0 and bool(tail_event_log(math.log(x), t, k)):
            hits += 1
    return hits / total if total else 0.0


# -- strides ------------------------------------------------------------------


def stride_flags(traj: TailTrajectory | Sequence[float]) -> list[bool]:
    """For each i in 1..k, whether i is a stride of a (0, 1)-valued sequence.

    i is a stride when X_{i-1} > 1/2 and 1 - X_i >= (5/4)(1 - X_{i-1}), or
    X_{i-1} <= 1/2 and X_i <= (3/4) X_{i-1}.
    """
    vals = traj.values if isinstance(traj, TailTrajectory) else tuple(traj)
    for x in vals:
        if not 0 < x < 1:
            raise DomainError(f"stride counting needs values in (0, 1), got {x}")
    out = []
    for prev, cur in zip(vals, vals[1:]):
        if prev > 0.5:
            out.append((1 - cur) >= 1.25 * (1 - prev))
        else:
            out.append(cur <= 0.75 * prev)
    return out


def count_strides(traj: TailTrajectory | Sequence[float]) -> int:
    return sum(stride_flags(traj))


def square_decay_threshold(epsilon: float, X0: float, s: int) -> tuple[float, float]:
    """(C_eps, log2 of the threshold 2^(-C_eps 2^s)) for the light-bin decay tail.

    C_eps = (1 - X0)^25 (eps/2)^50 log2(1/eps).
    """
    if not 0 < epsilon < 1:
        raise DomainError("need 0 < epsilon < 1")
    if not 0 <= X0 < 1:
        raise DomainError("need 0 <= X0 < 1")
    if s < 0:
        raise DomainError("need s >= 0")
    c = (1 - X0) ** 25 * (epsilon / 2) ** 50 * math.log2(1 / epsilon)
    return c, -c * math.ldexp(1.0, s)


# -- inequality grids ---------------------------------------------------------


@dataclass(frozen=True)
class GridReport:
    which: str
    n_points: int
    max_violation: float
    n_violations: int
    worst_point: tuple[float, ...] | None = None

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def _lin(lo, hi, n, pad):
    return np.linspace(lo + pad, hi - pad, n)


def _dyadic(lo, hi, n, bits=12):
    """n points in [lo, hi] rounded to multiples of 2^-bits (so squares are exact)."""
    pts = np.round(np.linspace(lo, hi, n) * (1 << bits)) / (1 << bits)
    return [float(x) for x in pts]


def verify_inequality_grid(which: str, grid_spec: dict | None = None) -> GridReport:
    """Evaluate one claimed inequality on a grid; report the largest violation.

    ``grid_spec`` overrides the defaults: ``n`` points per axis, axis bounds,
    ``pad`` distance kept from domain boundaries, ``i_values`` for beta.
    """
    g = {"n": 100, "pad": 1e-6}
    g.update(grid_spec or {})
    n, pad = int(g["n"]), float(g["pad"])
    worst = -math.inf
    worst_pt = None
    count = 0
    viol = 0

    def see(v, pt):
        nonlocal worst, worst_pt, count, viol
        count += 1
        if v > worst:
            worst, worst_pt = v, pt
        if v > GRID_TOL:
            viol += 1

    if which == "upper_approx":
        # min(1, (x^2 - 1)/(t^2 - 1)) <= (x - 1)/(t - 1), x >= 1, t > 1
        for x in _lin(g.get("x_lo", 1.0), g.get("x_hi", 5.0), n, 0.0):
            for t in _lin(g.get("t_lo", 1.0), g.get("t_hi", 5.0), n, pad):
                lhs = min(1.0, (x * x - 1) / (t * t - 1))
                rhs = (x - 1) / (t - 1)
                see(lhs - rhs, (x, t))
    elif which == "min_to_linear":
        # max(0, (t^2 - x^2)/(t^2 - 1 - 4d)) >= ((t - x)/(t - 1 - 2d)) beta_1(t, d)
        nd = int(g.get("n_delta", 4))
        nx = nt = int(g.get("n_xt", 50))
        for d in _lin(0.0, g.get("delta_hi", 0.5), nd, 0.0):
            for t in _lin(1 + 2 * d, g.get("t_hi", 4.0), nt, pad):
                b1 = beta(1, t, d)
                for x in _lin(1 + 2 * d, g.get("x_hi", 5.0), nx, 0.0):
                    lhs = max(0.0, (t * t - x * x) / (t * t - 1 - 4 * d))
                    rhs = (t - x) / (t - 1 - 2 * d) * b1
                    see(rhs - lhs, (d, t, x))
    elif which == "beta_range":
        # 0 <= beta_i(t, d) <= 1 for i >= 1, t > 1 + 2d
        i_values = g.get("i_values", (1, 2, 3, 4))
        for i in i_values:
            for d in _lin(0.0, g.get("delta_hi", 1.0), n // 2, 0.0):
                for t in _lin(1 + 2 * d, 1 + 2 * d + g.get("t_span", 3.0), n // 2, pad):
                    v = beta(i, t, d)
                    see(max(-v, v - 1.0), (i, t, d))
    elif which == "beta_recursion":
        # beta_i(t^2, 2d) == beta_{i+1}(t, d); dyadic t and d so t^2, 2d are exact
        i_values = g.get("i_values", (0, 1, 2, 3))
        for i in i_values:
            for d in _dyadic(1 / 256, g.get("delta_hi", 0.5), n // 2):
                for t in _dyadic(1 + 2 * d + 1 / 64, 1 + 2 * d + g.get("t_span", 2.0), n // 2):
                    if not t > 1 + 2 * d:
                        continue
                    a = beta(i, t * t, 2 * d)
                    c = beta(i + 1, t, d)
                    see(abs(a - c), (i, t, d))
    else:
        raise ValueError(f"unknown claim {which!r}; choose from {GRID_CLAIMS}")
    pt = None if worst_pt is None else tuple(float(c) for c in worst_pt)
    return GridReport(which, count, float(max(worst, 0.0)), viol, pt)


# -- trajectory dump ----------------------------------------------------------


def trajectories_to_csv(trajs: Sequence[TailTrajectory | Sequence[float]]) -> str:
    """One row per trial, columns X_0..X_k (rows padded to the longest)."""
    rows = [list(t.values if isinstance(t, TailTrajectory) else t) for t in trajs]
    k = max((len(r) for r in rows), default=1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"X_{i}" for i in range(k)])
    for r in rows:
        w.writerow([format(float(x), ".17g") for x in r] + [""] * (k - len(r)))
    return buf.getvalue()


def trajectories_from_csv(text: str) -> list[tuple[float, ...]]:
    r = csv.reader(io.StringIO(text))
    next(r)
    return [tuple(float(x) for x in row if x != "") for row in r]
