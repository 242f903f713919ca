"""Model zoo: the example systems, plus switched-linear and ODE builders.

Every builder pins all free parameters so runs are reproducible from the
JSON descriptor alone.  Linear models carry exact propagators (matrix
exponentials via scaling-and-squaring); nonlinear models carry vector
fields for the fixed-step integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .lyapunov import LyapunovCandidate
from .systems import DisturbanceSet, SystemModel

__all__ = [
    "build_scalar_example",
    "build_ugatt_example",
    "build_blowup_example",
    "blowup_construction",
    "build_l2_block_model",
    "build_switched_linear",
    "build_linear",
    "evolve",
    "BlockOperatorModel",
    "SwitchedLinearModel",
    "model_from_descriptor",
]


# ---------------------------------------------------------------------------
# scalar examples: the four-way FC/RFC/REP zoo
# ---------------------------------------------------------------------------

def build_scalar_example(variant):
    """One of the four scalar systems separating FC, RFC and REP.

    (i)   x' = |d| (x - x^3)             RFC, 0 not a robust equilibrium
    (ii)  x' = d x                       forward complete, not RFC, not REP
    (iii) x' = x/(|d|+1) + d max(|x|-1,0)   REP, forward complete, not RFC
    (iv)  x' = x/(|d|+1)                 REP and RFC

    D is the whole real line; probes sweep a disturbance magnitude.
    """
    variant = str(variant).lower()
    if variant == "i":
        rhs = lambda x, d: abs(d) * (x - x**3)
        homogeneous = False
    elif variant == "ii":
        rhs = lambda x, d: d * x
        homogeneous = True
    elif variant == "iii":
        rhs = lambda x, d: x / (abs(d) + 1.0) + d * np.maximum(np.abs(x) - 1.0, 0.0)
        homogeneous = False
    elif variant == "iv":
        rhs = lambda x, d: x / (abs(d) + 1.0)
        homogeneous = True
    else:
        raise ValueError("variant must be one of 'i', 'ii', 'iii', 'iv'")
    return SystemModel(
        name=f"scalar-{variant}",
        dim=1,
        disturbance_set=DisturbanceSet.real_line(),
        rhs=rhs,
        homogeneous=homogeneous,
        meta={"kind": "scalar_example", "variant": variant},
    )


def build_ugatt_example():
    """Planar system that is uniformly globally attractive at 0 but whose
    origin is not a robust equilibrium.

    x' = d x y - x^3 - x^{1/3},  y' = -y^3 - y^{1/3}, with signed cube
    roots (sgn(s)|s|^{1/3}); the y subsystem reaches 0 in finite time, after
    which the disturbance is powerless.
    """

    def rhs(z, d):
        x, y = z[0], z[1]
        return np.array(
            [d * x * y - x**3 - np.cbrt(x), -(y**3) - np.cbrt(y)]
        )

    return SystemModel(
        name="ugatt-not-rep",
        dim=2,
        disturbance_set=DisturbanceSet.real_line(),
        rhs=rhs,
        homogeneous=False,
        meta={"kind": "ugatt"},
    )


# ---------------------------------------------------------------------------
# the planar blow-up example with a non-coercive Lyapunov function
# ---------------------------------------------------------------------------

def _smoothstep01(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


class _BlowupData:
    """Pinned instantiation of the blow-up construction.

    Free functions fixed as: delta = tanh, eps1 = 2 tanh, eps2 = tanh/2,
    rho(r) = (2/pi) arctan(r), psi(x) = x for x >= 0 and e^x - 1 for x < 0,
    eta(x) = exp(1/(x+c)) on x < -c (0 otherwise), W uses the normalized
    1 + (2/pi) arctan inner factor (which is what keeps both of W's rate
    factors nonnegative and puts V's plateau range at (1, 3)).  The time
    reparametrization h blends from 1 on the unit ball to the defining
    max formula beyond radius 2 via a smoothstep, which keeps it positive
    and locally Lipschitz.
    """

    def __init__(self, c):
        self.c = float(c)

    # scalar building blocks (vectorized over numpy arrays)
    def delta(self, x):
        return np.tanh(x)

    def eps1(self, x):
        return 2.0 * np.tanh(x)

    def eps2(self, x):
        return 0.5 * np.tanh(x)

    def eta(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(x < -self.c, np.exp(1.0 / (x + self.c)), 0.0)
        return out

    def eta_prime(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = np.where(
                x < -self.c, -np.exp(1.0 / (x + self.c)) / (x + self.c) ** 2, 0.0
            )
        return out

    @staticmethod
    def rho(r):
        return (2.0 / np.pi) * np.arctan(r)

    @staticmethod
    def rho_prime(r):
        return (2.0 / np.pi) / (1.0 + r * r)

    @staticmethod
    def psi_inverse(z1):
        # inverse of psi(x) = x (x >= 0), e^x - 1 (x < 0); domain z1 > -1
        z1 = np.asarray(z1, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(z1 >= 0.0, z1, np.log1p(np.maximum(z1, -1.0 + 1e-300)))

    @staticmethod
    def psi_prime_at_inverse(z1):
        # psi'(psi^{-1}(z1)) = 1 for z1 >= 0 and 1 + z1 below
        z1 = np.asarray(z1, dtype=float)
        return np.where(z1 >= 0.0, 1.0, 1.0 + z1)

    def v1(self, x1, x2):
        return np.log(np.cosh(x1)) + np.log(np.cosh(x2))

    def v1_dot(self, x1, x2):
        return -self.eps1(x1) * self.delta(x1) - self.eps2(x2) * self.delta(x2)

    def w_bump(self, x1, x2):
        return self.eta(x1) * (1.0 + (2.0 / np.pi) * np.arctan(x2))

    def w_bump_dot(self, x1, x2):
        term1 = (
            -self.eta_prime(x1)
            * (1.0 + (2.0 / np.pi) * np.arctan(x2))
            * (self.eps1(x1) + self.delta(x2))
        )
        term2 = (
            self.eta(x1)
            * (2.0 / np.pi)
            / (1.0 + x2 * x2)
            * (self.delta(x1) - self.eps2(x2))
        )
        return term1 + term2

    def V(self, z):
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        inner = z1 > -1.0
        x1 = self.psi_inverse(np.where(inner, z1, 0.0))
        v_in = self.rho(self.v1(x1, z2)) + self.w_bump(x1, z2)
        v_out = 2.0 + (2.0 / np.pi) * np.arctan(z2)
        out = np.where(inner, v_in, v_out)
        return float(out) if out.ndim == 0 else out

    def F(self, z):
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        inner = z1 > -1.0
        x1 = self.psi_inverse(np.where(inner, z1, 0.0))
        f1 = np.where(
            inner,
            self.psi_prime_at_inverse(z1) * (-self.eps1(x1) - self.delta(z2)),
            0.0,
        )
        f2 = np.where(inner, self.delta(x1) - self.eps2(z2), -1.0 - self.eps2(z2))
        return np.stack([f1, f2], axis=-1)

    def vdot_along_F(self, z):
        """Analytic derivative of V along z' = F(z); continuous across z1 = -1."""
        z = np.asarray(z, dtype=float)
        z1, z2 = z[..., 0], z[..., 1]
        inner = z1 > -1.0
        x1 = self.psi_inverse(np.where(inner, z1, 0.0))
        vin = self.rho_prime(self.v1(x1, z2)) * self.v1_dot(x1, z2) + self.w_bump_dot(
            x1, z2
        )
        vout = (-1.0 - self.eps2(z2)) * (2.0 / np.pi) / (1.0 + z2 * z2)
        out = np.where(inner, vin, vout)
        return float(out) if out.ndim == 0 else out

    def h(self, z):
        z = np.asarray(z, dtype=float)
        n = np.linalg.norm(z, axis=-1)
        vd = self.vdot_along_F(z)
        blend = _smoothstep01(n - 1.0)  # 0 on ||z|| <= 1, 1 beyond 2
        # vd < 0 wherever blend > 0 (the rate only vanishes at the origin),
        # so the ratio is only formed where it is finite
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where((blend > 0.0) & (np.abs(vd) > 0.0),
                             n / np.where(np.abs(vd) > 0.0, np.abs(vd), 1.0),
                             0.0)
        return np.maximum(1.0, blend * ratio)

    def F2(self, z):
        h = self.h(z)
        return np.asarray(h)[..., None] * self.F(z)


def blowup_construction(c=3.0):
    """The pinned analytic pieces of the blow-up example (V, F, h, rates)."""
    return _BlowupData(c)


def build_blowup_example(c=3.0, psi2_radius=12.0):
    """The time-reparametrized planar vector field with its non-coercive V.

    Solutions started in the half-plane z1 <= -1 blow up in finite time
    while V stays trapped in (1, 3); solutions with z1 > -1 are conjugate
    to a globally asymptotically stable system and converge to 0.  Along
    the returned field, dV <= -||z|| whenever ||z|| >= 2.

    The parameter ``c`` must satisfy eps1(-c) < -1 and
    delta(-c) < -sup|eps2|; these are asserted at build time (c = 3 works
    for the pinned choices).
    """
    data = _BlowupData(c)
    if not (data.eps1(-c) < -1.0):
        raise ValueError(f"c={c} rejected: need eps1(-c) < -1")
    if not (data.delta(-c) < -0.5):  # sup |eps2| = 1/2 for eps2 = tanh/2
        raise ValueError(f"c={c} rejected: need delta(-c) < -sup|eps2|")

    def rhs(z, _d):
        return data.F2(z)

    model = SystemModel(
        name="blowup",
        dim=2,
        disturbance_set=DisturbanceSet.interval(0.0, 0.0),
        rhs=rhs,
        homogeneous=False,
        meta={"kind": "blowup", "c": float(c)},
    )

    # numeric upper envelope psi2: sup of V on spheres, slightly inflated
    radii = np.linspace(0.0, psi2_radius, 121)[1:]
    angles = np.linspace(0.0, 2 * np.pi, 181)[:-1]
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    sup = np.array([np.max(data.V(r * dirs)) for r in radii])
    env = np.maximum.accumulate(sup) * 1.05
    env = env + 1e-9 * np.arange(1, env.size + 1)
    grid = np.concatenate([[0.0], radii])
    vals = np.concatenate([[0.0], env])
    from .comparison import TabulatedMonotone

    psi2 = TabulatedMonotone(
        grid,
        vals,
        "Kinf",
        slope=max(1e-3, float(env[-1] - env[-2]) / (radii[-1] - radii[-2])),
    )

    candidate = LyapunovCandidate(eval=data.V, name="V-blowup", psi2=psi2)
    return model, candidate


# ---------------------------------------------------------------------------
# the l2 block-operator example
# ---------------------------------------------------------------------------

def _block_matrix(i, epsilon):
    A = np.diag(np.full(i, -1.0 + epsilon)) + np.diag(np.ones(i - 1), 1)
    return A


@dataclass(frozen=True)
class BlockOperatorModel:
    """Truncation of the block-diagonal operator with bidiagonal blocks.

    Block i is the i x i matrix with -1 + epsilon on the diagonal and 1 on
    the superdiagonal; the attached quadratic functional sums the per-block
    forms through matrices P_i normalized to unit spectral norm.  The tail
    blocks beyond the truncation are exactly zero for states supported on
    the first ``n_blocks`` blocks, so the truncation is exact there.
    """

    n_blocks: int
    epsilon: float
    blocks: tuple
    lyapunov_blocks: tuple
    _expm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self):
        return self.n_blocks * (self.n_blocks + 1) // 2

    @property
    def offsets(self):
        out = [0]
        for i in range(1, self.n_blocks + 1):
            out.append(out[-1] + i)
        return out

    def split(self, x):
        off = self.offsets
        return [x[off[i]:off[i + 1]] for i in range(self.n_blocks)]

    def _propagators(self, dt):
        key = float(dt)
        if key not in self._expm_cache:
            self._expm_cache[key] = [expm(A * dt) for A in self.blocks]
        return self._expm_cache[key]

    def propagator(self, _d, dt):
        mats = self._propagators(dt)
        off = self.offsets

        def advance(x):
            out = np.empty_like(x)
            for i, E in enumerate(mats):
                out[off[i]:off[i + 1]] = E @ x[off[i]:off[i + 1]]
            return out

        return advance

    def V(self, x):
        x = np.asarray(x, dtype=float)
        total = 0.0
        off = self.offsets
        for i, P in enumerate(self.lyapunov_blocks):
            xi = x[off[i]:off[i + 1]]
            total += float(xi @ P @ xi)
        return total

    def lambda_mins(self):
        return np.array(
            [np.linalg.eigvalsh(P).min() for P in self.lyapunov_blocks]
        )

    def witness_directions(self):
        """Unit vectors hitting each block's smallest-eigenvalue eigendirection."""
        dirs = []
        off = self.offsets
        for i, P in enumerate(self.lyapunov_blocks):
            w, U = np.linalg.eigh(P)
            v = np.zeros(self.dim)
            v[off[i]:off[i + 1]] = U[:, 0]
            dirs.append(v)
        return dirs

    def singular_direction(self, t, block=None):
        """Top right-singular direction of the block propagator at time t.

        This is the natural instability witness for epsilon > 0: the
        largest block's transient amplification peaks along it.
        """
        i = self.n_blocks - 1 if block is None else block
        E = expm(self.blocks[i] * t)
        _, _, vt = np.linalg.svd(E)
        v = np.zeros(self.dim)
        off = self.offsets
        v[off[i]:off[i + 1]] = vt[0]
        return v

    @property
    def system(self):
        return SystemModel(
            name=f"l2-block-n{self.n_blocks}-eps{self.epsilon}",
            dim=self.dim,
            disturbance_set=DisturbanceSet.interval(0.0, 0.0),
            propagator=self.propagator,
            homogeneous=True,
            meta={"kind": "l2_block", "n": self.n_blocks, "epsilon": self.epsilon},
        )

    @property
    def candidate(self):
        from .comparison import power_table

        return LyapunovCandidate(
            eval=self.V,
            name="V-l2-block",
            psi2=power_table(2.0, r_max=256.0, n=513),  # V(x) <= ||x||^2 since ||P_i|| = 1
        )


def build_l2_block_model(n, epsilon=0.0):
    """Construct the first n blocks and their Lyapunov matrices.

    P_i solves the shifted equation (A_i + I/2)^T P + P (A_i + I/2) = -I at
    epsilon = 0, then is rescaled to unit spectral norm, which yields
    A_i^T P_i + P_i A_i < -P_i strictly.  The solve happens on the
    epsilon = 0 blocks regardless of epsilon: the same P_i witness the
    shifted decay rate 2 epsilon - 1 for the epsilon variant.
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not (0.0 <= epsilon < 0.5):
        raise ValueError("epsilon must lie in [0, 0.5)")
    blocks = []
    lyap = []
    for i in range(1, n + 1):
        A0 = _block_matrix(i, 0.0)
        M = A0 + 0.5 * np.eye(i)
        P = solve_continuous_lyapunov(M.T, -np.eye(i))
        P = 0.5 * (P + P.T)
        resid = np.linalg.norm(M.T @ P + P @ M + np.eye(i), 2)
        scale = 1.0 + 2.0 * np.linalg.norm(M, 2) * np.linalg.norm(P, 2)
        if not np.isfinite(resid) or resid > 1e-10 * scale:
            raise RuntimeError(f"Lyapunov solve failed for block {i} (residual {resid:.2e})")
        P = P / np.linalg.norm(P, 2)
        blocks.append(_block_matrix(i, epsilon))
        lyap.append(P)
    return BlockOperatorModel(int(n), float(epsilon), tuple(blocks), tuple(lyap))


# ---------------------------------------------------------------------------
# switched linear systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwitchedLinearModel:
    """Finitely many generator matrices selected by a switching signal.

    The evolution operator over an interval is the ordered product of the
    per-mode matrix exponentials along the signal's partition.
    """

    modes: tuple
    dimension: int
    _expm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def mode(self, q):
        qi = int(q)
        if qi != q or not (0 <= qi < len(self.modes)):
            raise ValueError(f"mode index {q!r} out of range")
        return qi

    def mode_expm(self, q, dt):
        key = (self.mode(q), float(dt))
        if key not in self._expm_cache:
            self._expm_cache[key] = expm(self.modes[key[0]] * dt)
        return self._expm_cache[key]

    def propagator(self, q, dt):
        E = self.mode_expm(q, dt)
        return lambda x: E @ x

    @property
    def system(self):
        return SystemModel(
            name=f"switched-{len(self.modes)}modes-dim{self.dimension}",
            dim=self.dimension,
            disturbance_set=DisturbanceSet.finite(range(len(self.modes))),
            propagator=self.propagator,
            homogeneous=True,
            meta={
                "kind": "switched_linear",
                "modes": [m.tolist() for m in self.modes],
            },
        )


def build_switched_linear(modes):
    """Switched linear model; disturbance values index into the mode list."""
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in modes]
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape != (dim, dim):
            raise ValueError("all modes must be square matrices of equal dimension")
    return SwitchedLinearModel(tuple(mats), dim)


def evolve(model, d, t, s=0.0):
    """Evolution operator Phi_d(t, s) as an ordered product of exponentials."""
    if t < s:
        raise ValueError("need t >= s")
    Phi = np.eye(model.dimension)
    if t == s:
        return Phi
    edges = [s] + d.switch_times(s, t) + [t]
    for a, b in zip(edges, edges[1:]):
        Phi = model.mode_expm(d.value_at(a), b - a) @ Phi
    return Phi


def build_linear(a):
    """Undisturbed linear system x' = A x with an exact propagator."""
    A = np.atleast_2d(np.asarray(a, dtype=float))
    sw = build_switched_linear([A])
    sys = sw.system
    return SystemModel(
        name=f"linear-dim{A.shape[0]}",
        dim=A.shape[0],
        disturbance_set=sys.disturbance_set,
        propagator=sys.propagator,
        homogeneous=True,
        meta={"kind": "linear", "a": A.tolist()},
    )


# ---------------------------------------------------------------------------
# descriptor registry (JSON-reproducible model construction)
# ---------------------------------------------------------------------------

def model_from_descriptor(desc):
    """Rebuild a model from its JSON descriptor (the ``meta`` dict)."""
    kind = desc.get("kind")
    if kind == "scalar_example":
        return build_scalar_example(desc["variant"])
    if kind == "ugatt":
        return build_ugatt_example()
    if kind == "blowup":
        model, _ = build_blowup_example(desc.get("c", 3.0))
        return model
    if kind == "l2_block":
        return build_l2_block_model(desc["n"], desc.get("epsilon", 0.0)).system
    if kind == "switched_linear":
        return build_switched_linear(desc["modes"]).system
    if kind == "linear":
        return build_linear(desc["a"])
    raise ValueError(f"unknown model kind {kind!r}")
