"""Single-input flat system models and their linearizing maps.

A model bundles the nonlinear dynamics xdot = f(x) + g(x) u with the
coordinate change z = to_flat(x), x = from_flat(z) and the input map
u = flat_input(z, v) that turn it into the integrator chain
zdot = A z + B v.  Two case studies ship with the package:

* ``aircraft``   longitudinal dynamics (angle of attack, pitch rate) with
  a cubic lift polynomial; the flat map is the identity and only the
  input map is nonlinear.
* ``quad1d``     horizontal quadrotor position dynamics driven by a
  commanded pitch angle through first-order attitude lag.

All map closures accept arrays whose last axis is the state/coordinate
axis, so grids and sample batches evaluate without Python loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DomainError

BUILTIN_MODELS = ("aircraft", "quad1d")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, lo <= x <= hi componentwise."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ValueError("box bounds inconsistent")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=-1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.uniform(size=(count, self.dim))
        return self.lo + u * (self.hi - self.lo)

    def radius(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))


@dataclass(eq=False)
class FlatModel:
    """Flat system abstraction; immutable after construction."""

    name: str
    n: int
    dyn_f: Callable[[np.ndarray], np.ndarray]
    dyn_g: Callable[[np.ndarray], np.ndarray]
    to_flat: Callable[[np.ndarray], np.ndarray]
    from_flat: Callable[[np.ndarray], np.ndarray]
    flat_input: Callable[[np.ndarray, np.ndarray], np.ndarray]
    flat_jac: Callable[[np.ndarray], np.ndarray]
    flat_equilibrium: Callable[[float], np.ndarray]
    u_bound: float
    workspace: Box  # over (z, v)
    A: np.ndarray
    B: np.ndarray
    flat_input_deps: np.ndarray  # bool mask over (z, v): coords flat_input uses
    state_domain_ok: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    @property
    def zeta_dim(self) -> int:
        return self.n + 1


def chain_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """State-space matrices of the n-fold integrator chain."""
    A = np.zeros((n, n))
    A[np.arange(n - 1), np.arange(1, n)] = 1.0
    B = np.zeros(n)
    B[-1] = 1.0
    return A, B


@dataclass(frozen=True)
class AircraftParams:
    """Longitudinal model constants (lift polynomial, inertia, levers)."""

    l0: float = 2.5e5
    l1: float = 8.6e6
    l3: float = 4.35e7
    J: float = 4.5e6
    d1: float = 4.0
    d2: float = 42.0
    u_bound: float = 5.0e5
    z1_max: float = 0.3491
    z2_max: float = 2.0
    v_max: float = 5.0

    def __post_init__(self):
        if min(self.l0, self.l1, self.l3, self.J, self.d1, self.d2, self.u_bound) <= 0:
            raise ValueError("aircraft parameters must be positive")


@dataclass(frozen=True)
class QuadParams:
    """Horizontal quadrotor constants (thrust scale, drag, attitude lag)."""

    Gamma: float = 10.0
    gamma: float = 0.3
    tau: float = 0.2
    u_bound: float = 0.1745
    z1_max: float = 12.0
    z2_max: float = 2.0
    z3_max: float = 3.0
    v_max: float = 3.0

    def __post_init__(self):
        if self.Gamma <= 0 or self.tau <= 0 or self.gamma < 0 or self.u_bound <= 0:
            raise ValueError("quad parameters out of range")


def aircraft(params: AircraftParams | None = None) -> FlatModel:
    p = params or AircraftParams()

    def lift(a):
        return p.l0 + p.l1 * a + p.l3 * a**3

    def dyn_f(x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x2, -(p.d1 / p.J) * lift(x1) * np.cos(x1)], axis=-1)

    def dyn_g(x):
        x = np.asarray(x, dtype=float)
        x1 = x[..., 0]
        return np.stack([np.zeros_like(x1), (p.d2 / p.J) * np.cos(x1)], axis=-1)

    def identity(x):
        return np.asarray(x, dtype=float).copy()

    def flat_input(z, v):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        c = np.cos(z[..., 0])
        if np.any(c <= 0.0):
            raise DomainError("aircraft input map singular: cos(z1) <= 0")
        return (v * p.J / c + p.d1 * lift(z[..., 0])) / p.d2

    def flat_jac(x):
        x = np.asarray(x, dtype=float)
        eye = np.eye(2)
        return np.broadcast_to(eye, x.shape[:-1] + (2, 2)).copy()

    def equilibrium(r: float) -> np.ndarray:
        return np.array([r, 0.0])

    def domain_ok(x):
        return np.abs(np.asarray(x, dtype=float)[..., 0]) < math.pi / 2

    A, B = chain_matrices(2)
    ws = Box(
        lo=[-p.z1_max, -p.z2_max, -p.v_max],
        hi=[p.z1_max, p.z2_max, p.v_max],
    )
    return FlatModel(
        name="aircraft",
        n=2,
        dyn_f=dyn_f,
        dyn_g=dyn_g,
        to_flat=identity,
        from_flat=identity,
        flat_input=flat_input,
        flat_jac=flat_jac,
        flat_equilibrium=equilibrium,
        u_bound=p.u_bound,
        workspace=ws,
        A=A,
        B=B,
        flat_input_deps=np.array([True, False, True]),
        state_domain_ok=domain_ok,
        params=p.__dict__.copy(),
    )


def quad1d(params: QuadParams | None = None) -> FlatModel:
    p = params or QuadParams()

    def dyn_f(x):
        x = np.asarray(x, dtype=float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack(
            [x2, p.Gamma * np.sin(x3) - p.gamma * x2, -x3 / p.tau], axis=-1
        )

    def dyn_g(x):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x[..., 0])
        return np.stack([z, z, np.full_like(z, 1.0 / p.tau)], axis=-1)

    def nu(z):
        return (z[..., 2] + p.gamma * z[..., 1]) / p.Gamma

    def to_flat(x):
        x = np.asarray(x, dtype=float)
        return np.stack(
            [x[..., 0], x[..., 1], p.Gamma * np.sin(x[..., 2]) - p.gamma * x[..., 1]],
            axis=-1,
        )

    def from_flat(z):
        z = np.asarray(z, dtype=float)
        nv = nu(z)
        if np.any(np.abs(nv) >= 1.0):
            raise DomainError("quad1d inverse map undefined: |nu(z)| >= 1")
        return np.stack([z[..., 0], z[..., 1], np.arcsin(nv)], axis=-1)

    def flat_input(z, v):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = nu(z)
        if np.any(np.abs(nv) >= 1.0):
            raise DomainError("quad1d input map undefined: |nu(z)| >= 1")
        root = np.sqrt(1.0 - nv**2)
        return p.tau * (v + p.gamma * z[..., 2]) / (p.Gamma * root) + np.arcsin(nv)

    def flat_jac(x):
        x = np.asarray(x, dtype=float)
        x3 = x[..., 2]
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        J[..., 2, 1] = -p.gamma
        J[..., 2, 2] = p.Gamma * np.cos(x3)
        return J

    def equilibrium(r: float) -> np.ndarray:
        return np.array([r, 0.0, 0.0])

    def domain_ok(x):
        x = np.asarray(x, dtype=float)
        return np.isfinite(x).all(axis=-1)

    A, B = chain_matrices(3)
    ws = Box(
        lo=[-p.z1_max, -p.z2_max, -p.z3_max, -p.v_max],
        hi=[p.z1_max, p.z2_max, p.z3_max, p.v_max],
    )
    return FlatModel(
        name="quad1d",
        n=3,
        dyn_f=dyn_f,
        dyn_g=dyn_g,
        to_flat=to_flat,
        from_flat=from_flat,
        flat_input=flat_input,
        flat_jac=flat_jac,
        flat_equilibrium=equilibrium,
        u_bound=p.u_bound,
        workspace=ws,
        A=A,
        B=B,
        flat_input_deps=np.array([False, True, True, True]),
        state_domain_ok=domain_ok,
        params=p.__dict__.copy(),
    )


def make_model(name: str, overrides: dict | None = None) -> FlatModel:
    """Instantiate a built-in model, optionally overriding parameters.

    Override keys follow the parameter dataclass fields, e.g.
    ``{"u_bound": 0.2, "z1_max": 8.0}`` for quad1d.
    """
    overrides = dict(overrides or {})
    if name == "aircraft":
        return aircraft(replace(AircraftParams(), **overrides))
    if name == "quad1d":
        return quad1d(replace(QuadParams(), **overrides))
    raise ValueError(f"unknown model {name!r}; built-ins: {BUILTIN_MODELS}")


def eval_dynamics(model: FlatModel, x: np.ndarray, u: float) -> np.ndarray:
    """Right-hand side f(x) + g(x) u, guarding the map domain."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("state must be finite")
    if not np.all(model.state_domain_ok(x)):
        raise DomainError(f"state outside the valid domain of {model.name}")
    return model.dyn_f(x) + model.dyn_g(x) * np.asarray(u, dtype=float)[..., None]


def flat_round_trip(
    model: FlatModel, z: np.ndarray, v: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, u, z_back) for flat coordinates (z, v).

    z_back re-derives z from x and should match to 1e-9; a larger gap
    indicates a broken inverse map.
    """
    z = np.asarray(z, dtype=float)
    x = model.from_flat(z)
    u = model.flat_input(z, np.asarray(v, dtype=float))
    z_back = model.to_flat(x)
    return x, u, z_back


def flat_state_jacobian(model: FlatModel, x: np.ndarray) -> np.ndarray:
    """Jacobian of the state-to-flat map z = to_flat(x)."""
    x = np.asarray(x, dtype=float)
    if not np.all(model.state_domain_ok(x)):
        raise DomainError(f"state outside the valid domain of {model.name}")
    return model.flat_jac(x)
