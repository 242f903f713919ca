"""Disturbed dynamical systems: signals, flow evaluation and axiom checks.

A system is a triple of state space, disturbance class and transition map.
Disturbances are piecewise-constant signals with finitely many breakpoints,
which makes shift and concatenation exact and keeps the simulated flow
causal by construction.  Vector fields are integrated with fixed-step RK4,
split exactly at the signal's switching times; linear and switched-linear
models can instead supply an exact propagator (matrix exponential
semantics).  Divergence is never an exception path for ``flow``: it is
reported through the trajectory's ``escaped`` bracket.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DisturbanceSignal",
    "DisturbanceSet",
    "SystemModel",
    "Trajectory",
    "EscapeError",
    "LipschitzHint",
    "flow",
    "shift_signal",
    "concat_signal",
    "check_axioms",
    "check_homogeneity",
    "AxiomReport",
    "HomogeneityReport",
    "sub_rng",
]

DEFAULT_EXPLOSION_THRESHOLD = 1e12


class EscapeError(RuntimeError):
    """A trajectory escaped where the caller required completeness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def sub_rng(seed, *key):
    """Deterministic per-sample substream, independent of evaluation order."""
    return np.random.default_rng((int(seed), *[int(k) for k in key]))


class LipschitzHint(tuple):
    """Known analytic Lipschitz data ``(M, lambda, L_f)``.

    ``M`` and ``lambda`` bound the linear part's semigroup by
    ``M e^{lambda t}``; ``L_f`` maps a ball radius to a Lipschitz constant
    of the nonlinearity on that ball.  Feeds the Gronwall-style flow bound
    ``M exp((M L_f(K) + lambda) tau)``.
    """

    def __new__(cls, semigroup_m, semigroup_lambda, nonlinearity_lipschitz):
        return super().__new__(cls, (float(semigroup_m), float(semigroup_lambda),
                                     nonlinearity_lipschitz))


# ---------------------------------------------------------------------------
# disturbance signals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisturbanceSignal:
    """Piecewise-constant disturbance on right-open intervals.

    ``values[i]`` is taken on ``[breakpoints[i], breakpoints[i+1])``; the
    last value extends to infinity and doubles as the tail value.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(self.values)
        if len(bp) != len(vals) or not bp:
            raise ValueError("need one value per breakpoint")
        if bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (value,))

    @property
    def tail_value(self):
        return self.values[-1]

    def value_at(self, t):
        if t < 0:
            raise ValueError("signals are defined on t >= 0")
        return self.values[bisect_right(self.breakpoints, t) - 1]

    def __call__(self, t):
        return self.value_at(t)

    def shift(self, tau):
        """The signal ``t -> d(t + tau)``; exact for piecewise-constant data."""
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        if tau == 0.0:
            return self
        i = bisect_right(self.breakpoints, tau) - 1
        bps = (0.0,) + tuple(b - tau for b in self.breakpoints[i + 1:])
        return DisturbanceSignal(bps, self.values[i:])

    def concat(self, other, t):
        """Equal to this signal on [0, t) and to ``other(. - t)`` afterwards."""
        if t <= 0:
            raise ValueError("concatenation time must be positive")
        keep = [i for i, b in enumerate(self.breakpoints) if b < t]
        bps = [self.breakpoints[i] for i in keep]
        vals = [self.values[i] for i in keep]
        for b, v in zip(other.breakpoints, other.values):
            if t + b == bps[-1]:
                vals[-1] = v
            else:
                bps.append(t + b)
                vals.append(v)
        return DisturbanceSignal(tuple(bps), tuple(vals))

    def switch_times(self, t0, t1):
        """Breakpoints strictly inside (t0, t1)."""
        return [b for b in self.breakpoints if t0 < b < t1]

    def to_json(self):
        return json.dumps([[b, v] for b, v in zip(self.breakpoints, self.values)])

    @classmethod
    def from_json(cls, text):
        pairs = json.loads(text)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def shift_signal(d, tau):
    """Time shift ``d(. + tau)``; breakpoints before tau are dropped."""
    return d.shift(tau)


def concat_signal(d1, d2, t):
    """Concatenation of two signals at time t."""
    return d1.concat(d2, t)


# ---------------------------------------------------------------------------
# disturbance value sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisturbanceSet:
    """Descriptor of the disturbance value set D.

    kind "interval": scalar values in [lo, hi] (lo/hi may be +-inf, in
    which case probes sweep a magnitude parameter); kind "finite": an
    explicit tuple of values (e.g. mode indices of a switched system);
    kind "box": componentwise interval in R^m.
    """

    kind: str
    lo: float | np.ndarray | None = None
    hi: float | np.ndarray | None = None
    members: tuple = ()

    def __post_init__(self):
        if self.kind not in ("interval", "finite", "box"):
            raise ValueError("kind must be interval, finite or box")
        if self.kind == "finite" and not self.members:
            raise ValueError("finite set needs members")

    @classmethod
    def real_line(cls):
        return cls("interval", -np.inf, np.inf)

    @classmethod
    def interval(cls, lo, hi):
        return cls("interval", float(lo), float(hi))

    @classmethod
    def finite(cls, members):
        return cls("finite", members=tuple(members))

    @property
    def bounded(self):
        if self.kind == "finite":
            return True
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def clipped(self, magnitude):
        """Effective bounds at a sweep magnitude (for unbounded sets)."""
        lo = np.maximum(self.lo, -magnitude)
        hi = np.minimum(self.hi, magnitude)
        return lo, hi

    def corner_values(self, magnitude=1.0):
        if self.kind == "finite":
            return list(self.members)
        lo, hi = self.clipped(magnitude)
        if np.ndim(lo) == 0:
            vals = {float(lo), float(hi), 0.0} if lo <= 0.0 <= hi else {float(lo), float(hi)}
            return sorted(vals)
        # box: enumerate sign-combination corners, capped to keep probe
        # budgets bounded in high dimension
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        m = lo.size
        if 2**m <= 16:
            from itertools import product

            return [np.array(c) for c in product(*zip(lo, hi))]
        return [lo, hi, 0.5 * (lo + hi)]

    def sample_value(self, rng, magnitude=1.0):
        if self.kind == "finite":
            return self.members[rng.integers(len(self.members))]
        lo, hi = self.clipped(magnitude)
        if np.ndim(lo) == 0:
            return float(rng.uniform(lo, hi))
        return rng.uniform(lo, hi)

    def sample_signal(self, rng, horizon, pieces=8, magnitude=1.0):
        """Random piecewise-constant signal with switch times on a uniform grid."""
        pieces = max(1, int(pieces))
        bps = tuple(horizon * i / pieces for i in range(pieces))
        vals = tuple(self.sample_value(rng, magnitude) for _ in range(pieces))
        return DisturbanceSignal(bps, vals)

    def probe_signals(self, rng, horizon, budget, pieces=8, magnitude=1.0):
        """Corner constants plus ``budget`` random piecewise-constant signals."""
        if self.kind == "interval" and np.ndim(self.lo) == 0 and self.lo == self.hi:
            # degenerate (undisturbed) set: every signal is the same constant
            return [DisturbanceSignal.constant(float(self.lo))]
        sigs = [DisturbanceSignal.constant(v) for v in self.corner_values(magnitude)]
        sigs += [self.sample_signal(rng, horizon, pieces, magnitude) for _ in range(budget)]
        return sigs


# ---------------------------------------------------------------------------
# system models and trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemModel:
    """A simulatable disturbed system.

    Exactly one of ``rhs`` (vector field ``f(x, d_value)``) or
    ``propagator`` (``(d_value, dt) -> (state -> state)``, exact linear
    evolution) must be supplied.  The origin is the distinguished
    equilibrium whenever ``equilibrium`` is True.
    """

    name: str
    dim: int
    disturbance_set: DisturbanceSet
    rhs: object = None
    propagator: object = None
    norm: object = None
    equilibrium: bool = True
    homogeneous: bool | None = None
    lipschitz_hint: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.rhs is None) == (self.propagator is None):
            raise ValueError("supply exactly one of rhs or propagator")
        if self.norm is None:
            object.__setattr__(self, "norm", lambda x: float(np.linalg.norm(x)))

    def state(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"state must have shape ({self.dim},)")
        return x

    def default_signal(self):
        if self.disturbance_set.kind == "finite":
            return DisturbanceSignal.constant(self.disturbance_set.members[0])
        lo, hi = self.disturbance_set.clipped(1.0)
        mid = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, 0.5 * (lo + hi))
        if np.ndim(mid) == 0:
            return DisturbanceSignal.constant(float(mid))
        return DisturbanceSignal.constant(np.asarray(mid, dtype=float))

    def descriptor(self):
        return dict(self.meta) or {"kind": "opaque", "name": self.name}


@dataclass(frozen=True)
class Trajectory:
    """A sampled solution, possibly truncated by a finite-escape bracket."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    signal: DisturbanceSignal
    escaped: tuple | None = None  # (last finite sample time, first over-threshold time)

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return float(self.times[-1])

    def norms(self, norm=None):
        if norm is None:
            return np.linalg.norm(self.states, axis=1)
        return np.array([norm(s) for s in self.states])

    def state_at(self, t):
        """Linear interpolation between recorded samples."""
        if t < self.times[0] or t > self.times[-1]:
            raise ValueError("time outside the sampled range")
        j = int(np.searchsorted(self.times, t, side="right")) - 1
        j = min(j, len(self.times) - 2) if len(self.times) > 1 else 0
        if len(self.times) == 1 or self.times[j] == t:
            return self.states[j]
        w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
        return (1 - w) * self.states[j] + w * self.states[j + 1]

    def to_csv(self):
        dim = self.states.shape[1]
        head = "t," + ",".join(f"x_{i+1}" for i in range(dim)) + ",d"
        lines = [head]
        for t, s in zip(self.times, self.states):
            dval = self.signal.value_at(float(t))
            lines.append(
                f"{float(t)!r}," + ",".join(repr(float(v)) for v in s) + f",{dval!r}"
            )
        return "\n".join(lines) + "\n"


def _segment_nodes(t0, t1, step):
    """Fixed-step nodes covering [t0, t1], last step shortened to land on t1."""
    n_full = int(np.floor((t1 - t0) / step + 1e-12))
    nodes = [t0 + i * step for i in range(1, n_full + 1)]
    if not nodes or nodes[-1] < t1 - 1e-12 * max(1.0, abs(t1)):
        nodes.append(t1)
    else:
        nodes[-1] = t1
    return nodes


def flow(model, t, x, d=None, step=1e-3, explosion_threshold=DEFAULT_EXPLOSION_THRESHOLD):
    """Simulate the model from x over [0, t] under the signal d.

    Vector-field models use fixed-step classical RK4, split exactly at the
    signal's breakpoints so the integrator only ever reads d on [0, t].
    Propagator models evaluate the exact evolution operator per constant
    segment.  When the state norm passes ``explosion_threshold`` (or goes
    non-finite) the trajectory is truncated and ``escaped`` carries the
    bracket on the escape time; non-finite states are never returned.
    """
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    if step <= 0:
        raise ValueError("step must be positive")
    x = model.state(x)
    if d is None:
        d = model.default_signal()

    times = [0.0]
    states = [x]
    if t == 0.0:
        return Trajectory(np.array(times), np.array(states), d)

    seg_edges = [0.0] + d.switch_times(0.0, t) + [t]
    escaped = None
    cur = x
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for s0, s1 in zip(seg_edges, seg_edges[1:]):
            dval = d.value_at(s0)
            prev_t = s0
            for node in _segment_nodes(s0, s1, step):
                h = node - prev_t
                if model.propagator is not None:
                    nxt = model.propagator(dval, h)(cur)
                else:
                    f = model.rhs
                    k1 = f(cur, dval)
                    k2 = f(cur + 0.5 * h * k1, dval)
                    k3 = f(cur + 0.5 * h * k2, dval)
                    k4 = f(cur + h * k3, dval)
                    nxt = cur + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                nxt = np.asarray(nxt, dtype=float)
                finite = bool(np.all(np.isfinite(nxt)))
                if not finite or model.norm(nxt) > explosion_threshold:
                    escaped = (prev_t, node)
                    break
                times.append(node)
                states.append(nxt)
                cur = nxt
                prev_t = node
            if escaped is not None:
                break
    return Trajectory(np.array(times), np.vstack(states), d, escaped=escaped)


# ---------------------------------------------------------------------------
# axiom checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AxiomReport:
    identity_max: float
    causality_max: float
    cocycle_max: float
    continuity_max: float
    samples: int
    escaped_excluded: int

    def passed(self, tol):
        return (
            self.identity_max == 0.0
            and self.causality_max == 0.0
            and self.cocycle_max <= tol
            and self.continuity_max <= tol
        )


@dataclass(frozen=True)
class HomogeneityReport:
    max_residual: float
    worst: tuple | None
    samples: int
    escaped_excluded: int

    def passed(self, tol):
        return self.max_residual <= tol


def _sample_state(rng, dim, radius):
    v = rng.normal(size=dim)
    n = np.linalg.norm(v)
    if n == 0:
        return np.zeros(dim)
    return v / n * radius * rng.uniform(0.1, 1.0)


def check_axioms(model, sample_budget=10, tol=1e-6, *, seed=0, step=1e-3,
                 radius=1.0, t_max=0.5, magnitude=1.0, pieces=4):
    """Executable checks of the defining system axioms on random samples.

    Identity and causality are exact properties of the simulator and are
    required to hold bit-for-bit; the cocycle residual and the step-halving
    continuity residual are integration-accuracy checks.  Escaped samples
    are excluded from the maxima and counted.
    """
    if sample_budget < 1:
        raise ValueError("sample_budget must be >= 1")
    id_max = ca_max = co_max = cont_max = 0.0
    escaped = 0
    used = 0
    for i in range(sample_budget):
        rng = sub_rng(seed, 83, i)
        x = _sample_state(rng, model.dim, radius)
        t = float(rng.uniform(0.05, t_max))
        h = float(rng.uniform(0.05, t_max))
        dset = model.disturbance_set
        d = dset.sample_signal(rng, t + h, pieces=pieces, magnitude=magnitude)
        d_other = dset.sample_signal(rng, t + h, pieces=pieces, magnitude=magnitude)

        direct = flow(model, t + h, x, d, step=step)
        if direct.escaped is not None:
            escaped += 1
            continue
        # identity: phi(0, x, d) == x, bit-level
        tr0 = flow(model, 0.0, x, d, step=step)
        id_max = max(id_max, float(np.max(np.abs(tr0.final_state - x), initial=0.0)))
        # causality: signals agreeing on [0, t+h] give identical flows
        d_tilde = concat_signal(d, d_other, t + h)
        again = flow(model, t + h, x, d_tilde, step=step)
        ca_max = max(ca_max, float(np.max(np.abs(again.final_state - direct.final_state))))
        # cocycle: phi(h, phi(t, x, d), d(t+.)) == phi(t+h, x, d)
        first = flow(model, t, x, d, step=step)
        if first.escaped is not None:
            escaped += 1
            continue
        second = flow(model, h, first.final_state, shift_signal(d, t), step=step)
        if second.escaped is not None:
            escaped += 1
            continue
        co_max = max(co_max, float(np.linalg.norm(second.final_state - direct.final_state)))
        # continuity in t, certified up to integrator convergence: the
        # step-halved endpoint must agree with the full-step endpoint
        halved = flow(model, t + h, x, d, step=step / 2)
        if halved.escaped is None:
            cont_max = max(cont_max, float(np.linalg.norm(halved.final_state - direct.final_state)))
        used += 1
    return AxiomReport(id_max, ca_max, co_max, cont_max, used, escaped)


def check_homogeneity(model, sample_budget=10, tol=1e-8, *, seed=0, step=1e-3,
                      radius=1.0, t_max=0.5, lambda_max=2.0, magnitude=1.0):
    """Residuals of ``phi(t, lambda x, d) = lambda phi(t, x, d)`` over samples."""
    worst = None
    res_max = 0.0
    escaped = 0
    used = 0
    for i in range(sample_budget):
        rng = sub_rng(seed, 97, i)
        x = _sample_state(rng, model.dim, radius)
        lam = float(rng.uniform(0.0, lambda_max))
        t = float(rng.uniform(0.05, t_max))
        d = model.disturbance_set.sample_signal(rng, t, pieces=4, magnitude=magnitude)
        base = flow(model, t, x, d, step=step)
        scaled = flow(model, t, lam * x, d, step=step)
        if base.escaped is not None or scaled.escaped is not None:
            escaped += 1
            continue
        r = float(np.linalg.norm(scaled.final_state - lam * base.final_state))
        if r > res_max:
            res_max = r
            worst = (x, lam, t, d)
        used += 1
    return HomogeneityReport(res_max, worst, used, escaped)
