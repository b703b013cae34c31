"""Hamiltonian mechanical system models and the two catalog robots.

A model is described by its inertia matrix M(q), the configuration
partials of M, the potential V(q) and its gradient, and a constant
input map G. Dynamics are in (q, p) coordinates with p = M(q) q_dot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


class ModelEvaluationError(RuntimeError):
    """Raised when a model matrix is singular or indefinite at some q."""


def _as_vector(x, n: int, name: str) -> Array:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {v.shape}")
    return v


def _not_pd(what: str, q) -> ModelEvaluationError:
    return ModelEvaluationError(
        f"{what} is not positive definite at q={np.array_str(np.asarray(q), precision=6)}")


def spd_inverse(A: Array, what: str, q: Array) -> Array:
    """Inverse of a symmetric positive definite matrix, with definiteness check.

    Dimensions up to three (every catalog model) use closed-form adjugates
    with Sylvester's criterion; larger matrices fall back to Cholesky.
    These run inside the per-step hot loop.
    """
    n = A.shape[0]
    if n == 1:
        a = A[0, 0]
        if a <= 0.0:
            raise _not_pd(what, q)
        return np.array([[1.0 / a]])
    if n == 2:
        a, b, _, d = A.ravel().tolist()
        det = a * d - b * b
        if a <= 0.0 or det <= 0.0:
            raise _not_pd(what, q)
        return np.array([[d, -b], [-b, a]]) / det
    if n == 3:
        a, b, c, _, d, e, _, _, f = A.ravel().tolist()
        c00 = d * f - e * e
        c01 = c * e - b * f
        c02 = b * e - c * d
        det = a * c00 + b * c01 + c * c02
        if a <= 0.0 or a * d - b * b <= 0.0 or det <= 0.0:
            raise _not_pd(what, q)
        return np.array([[c00, c01, c02],
                         [c01, a * f - c * c, b * c - a * e],
                         [c02, b * c - a * e, a * d - b * b]]) / det
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise _not_pd(what, q) from None
    eye = np.eye(n)
    return np.linalg.solve(L.T, np.linalg.solve(L, eye))


def spd_solve(A: Array, rhs: Array, what: str, q: Array) -> Array:
    """Solve A x = rhs for symmetric positive definite A, with PD check."""
    return spd_inverse(A, what, q) @ rhs


def finite_difference_partials(fn: Callable[[Array], Array], q: Array) -> list[Array]:
    """Central finite differences of a matrix- or vector-valued fn along each q_i.

    Fallback for user-defined models without analytic partials.
    """
    q = np.asarray(q, dtype=float)
    out = []
    for i in range(q.size):
        h = 1e-6 * max(1.0, abs(q[i]))
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        out.append((np.asarray(fn(qp)) - np.asarray(fn(qm))) / (2.0 * h))
    return out


def finite_difference_gradient(fn: Callable[[Array], float], q: Array) -> Array:
    """Central finite-difference gradient of a scalar function of q."""
    return np.array([p.item() if np.ndim(p) else p
                     for p in finite_difference_partials(lambda x: np.asarray(fn(x)), q)])


@dataclass(frozen=True)
class State:
    """Configuration and momentum pair, p = M(q) q_dot."""

    q: Array
    p: Array

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))
        if self.q.shape != self.p.shape:
            raise ValueError(f"q and p must match, got {self.q.shape} vs {self.p.shape}")


@dataclass(frozen=True)
class MechanicalModel:
    """Mechanical system in Hamiltonian form with analytic derivatives.

    `mass_partials(q)[i]` is the partial of the inertia matrix along q_i.
    `annihilator` is a full-rank left annihilator of `input_map` (shape
    (n-m, n), empty when fully actuated).
    """

    n: int
    m: int
    mass: Callable[[Array], Array]
    mass_partials: Callable[[Array], list[Array]]
    potential: Callable[[Array], float]
    potential_grad: Callable[[Array], Array]
    input_map: Array
    annihilator: Array
    name: str = "custom"
    params: dict = field(default_factory=dict)
    input_pinv: Array = field(init=False)

    def __post_init__(self):
        G = np.asarray(self.input_map, dtype=float).reshape(self.n, self.m)
        Gp = np.asarray(self.annihilator, dtype=float).reshape(self.n - self.m, self.n)
        object.__setattr__(self, "input_map", G)
        object.__setattr__(self, "annihilator", Gp)
        object.__setattr__(self, "input_pinv", np.linalg.solve(G.T @ G, G.T))
        if self.n - self.m > 0 and np.any(Gp @ G != 0.0):
            raise ValueError("annihilator does not annihilate the input map")

    def mass_inv(self, q: Array) -> Array:
        return spd_inverse(self.mass(q), f"mass matrix of '{self.name}'", q)


def make_model(n: int, m: int, mass, potential, input_map, *, mass_partials=None,
               potential_grad=None, annihilator=None, name: str = "custom",
               params: dict | None = None) -> MechanicalModel:
    """Build a MechanicalModel, filling missing derivatives by finite differences."""
    if mass_partials is None:
        mass_partials = lambda q: finite_difference_partials(mass, q)  # noqa: E731
    if potential_grad is None:
        potential_grad = lambda q: finite_difference_gradient(potential, q)  # noqa: E731
    if annihilator is None:
        if n == m:
            annihilator = np.zeros((0, n))
        else:
            raise ValueError("annihilator is required for underactuated models")
    return MechanicalModel(n=n, m=m, mass=mass, mass_partials=mass_partials,
                           potential=potential, potential_grad=potential_grad,
                           input_map=input_map, annihilator=annihilator,
                           name=name, params=dict(params or {}))


def quadratic_form_gradient(weight: Callable[[Array], Array],
                            weight_partials: Callable[[Array], Sequence[Array]],
                            s: State, inverse_form: bool = False) -> Array:
    """Gradient in q of p^T W(q) p (or of p^T W(q)^-1 p with inverse_form).

    The inverse form uses d(W^-1)/dq_i = -W^-1 (dW/dq_i) W^-1, so entry i is
    -z^T (dW/dq_i) z with z = W^-1 p.
    """
    parts = weight_partials(s.q)
    if inverse_form:
        z = spd_solve(weight(s.q), s.p, "quadratic-form weight", s.q)
        return np.array([-(z @ (dW @ z)) for dW in parts])
    return np.array([s.p @ (dW @ s.p) for dW in parts])


def hamiltonian(model: MechanicalModel, s: State) -> float:
    """Total energy 0.5 p^T M^-1 p + V at the given state."""
    z = spd_solve(model.mass(s.q), s.p, f"mass matrix of '{model.name}'", s.q)
    return 0.5 * float(s.p @ z) + float(model.potential(s.q))


def hamiltonian_grad_q(model: MechanicalModel, s: State) -> Array:
    """Configuration gradient of the Hamiltonian, 0.5 grad_q(p^T M^-1 p) + grad V."""
    kin = quadratic_form_gradient(model.mass, model.mass_partials, s, inverse_form=True)
    return 0.5 * kin + model.potential_grad(s.q)


def plant_rhs(model: MechanicalModel, s: State, u: Array) -> tuple[Array, Array]:
    """Open-loop dynamics: q_dot = M^-1 p, p_dot = -grad_q H + G u."""
    u = _as_vector(u, model.m, "u")
    q_dot = spd_solve(model.mass(s.q), s.p, f"mass matrix of '{model.name}'", s.q)
    p_dot = -hamiltonian_grad_q(model, s) + model.input_map @ u
    return q_dot, p_dot


# ---------------------------------------------------------------------------
# Catalog model: Pendubot (2-DOF, first joint actuated)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PendubotParams:
    """Lumped Pendubot constants; defaults from unit links (m=1 kg, l=1 m,
    l_c=0.5 m, I=1/12 kg m^2)."""

    c1: float = 4.0 / 3.0
    c2: float = 1.0 / 3.0
    c3: float = 0.5
    c4: float = 1.5
    c5: float = 0.5
    gravity: float = 9.8

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.c1 * self.c2 <= self.c3 ** 2:
            raise ValueError("require c1*c2 > c3^2 for a positive definite mass matrix")
        if self.c4 <= 0 or self.c5 <= 0:
            raise ValueError("c4 and c5 must be positive")


def pendubot_model(params: PendubotParams | None = None) -> MechanicalModel:
    """Two-link pendulum with torque on the first joint only."""
    pr = params or PendubotParams()
    c1, c2, c3, c4, c5, g = pr.c1, pr.c2, pr.c3, pr.c4, pr.c5, pr.gravity

    zero2 = np.zeros((2, 2))

    def mass(q):
        k = c2 + c3 * np.cos(q[1])
        return np.array([[c1 + c2 + 2.0 * c3 * np.cos(q[1]), k], [k, c2]])

    def mass_partials(q):
        s = c3 * np.sin(q[1])
        return [zero2, np.array([[-2.0 * s, -s], [-s, 0.0]])]

    def potential(q):
        return -c4 * g * np.cos(q[0]) - c5 * g * np.cos(q[0] + q[1])

    def potential_grad(q):
        s01 = c5 * g * np.sin(q[0] + q[1])
        return np.array([c4 * g * np.sin(q[0]) + s01, s01])

    return MechanicalModel(
        n=2, m=1, mass=mass, mass_partials=mass_partials,
        potential=potential, potential_grad=potential_grad,
        input_map=np.array([[1.0], [0.0]]), annihilator=np.array([[0.0, 1.0]]),
        name="pendubot",
        params={"c1": c1, "c2": c2, "c3": c3, "c4": c4, "c5": c5, "gravity": g},
    )


# ---------------------------------------------------------------------------
# Catalog model: Geomagic Touch (3-DOF, fully actuated)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TouchParams:
    """Nominal dynamic parameters of the 3-DOF haptic device."""

    phi1: float = 0.00251729
    phi2: float = 0.00108246
    phi3: float = 0.00137408
    phi4: float = 0.00449158
    phi5: float = 0.00534505
    gravity: float = 9.8

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3", "phi4", "phi5"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def touch_model(params: TouchParams | None = None) -> MechanicalModel:
    """Fully actuated 3-DOF haptic device (identity input map)."""
    pr = params or TouchParams()
    f1, f2, f3, f4, f5, g = pr.phi1, pr.phi2, pr.phi3, pr.phi4, pr.phi5, pr.gravity
    zero3 = np.zeros((3, 3))

    def mass(q):
        c2, c3 = np.cos(q[1]), np.cos(q[2])
        c23, s23 = np.cos(q[1] + q[2]), np.sin(q[1] + q[2])
        m11 = f1 * c2 ** 2 + f2 * c2 * c23 + f3 * s23 ** 2
        m22 = f1 + 2.0 * f2 * c3 + f3
        m23 = f2 * c3 + f3
        return np.array([[m11, 0.0, 0.0], [0.0, m22, m23], [0.0, m23, f3]])

    def mass_partials(q):
        c2, s2 = np.cos(q[1]), np.sin(q[1])
        s3 = np.sin(q[2])
        c23, s23 = np.cos(q[1] + q[2]), np.sin(q[1] + q[2])
        d11_q2 = -2.0 * f1 * c2 * s2 - f2 * (s2 * c23 + c2 * s23) + 2.0 * f3 * s23 * c23
        d11_q3 = -f2 * c2 * s23 + 2.0 * f3 * s23 * c23
        d2 = np.zeros((3, 3))
        d2[0, 0] = d11_q2
        d3 = np.array([[d11_q3, 0.0, 0.0],
                       [0.0, -2.0 * f2 * s3, -f2 * s3],
                       [0.0, -f2 * s3, 0.0]])
        return [zero3, d2, d3]

    def potential(q):
        return g * (f4 * np.sin(q[1]) + f5 * np.sin(q[1] + q[2]))

    def potential_grad(q):
        t = f5 * np.cos(q[1] + q[2])
        return g * np.array([0.0, f4 * np.cos(q[1]) + t, t])

    return MechanicalModel(
        n=3, m=3, mass=mass, mass_partials=mass_partials,
        potential=potential, potential_grad=potential_grad,
        input_map=np.eye(3), annihilator=np.zeros((0, 3)),
        name="touch",
        params={"phi1": f1, "phi2": f2, "phi3": f3, "phi4": f4, "phi5": f5, "gravity": g},
    )
