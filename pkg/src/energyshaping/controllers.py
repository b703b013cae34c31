"""Energy shaping controllers: the baseline law, its peak-minimizing
augmentation, and the pointwise-selected combination of the two.

All controllers are pure functions of (model, design, state). The
augmented law adds a free generalized-force matrix, structured so that it
never touches the unactuated rows of the matching conditions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import minimax
from .mechanics import MechanicalModel, ModelEvaluationError, State, spd_inverse, spd_solve

Array = np.ndarray

IDA = "ida"
TH1 = "th1"
REDUCED = "reduced"

X_THRESHOLD_DEFAULT = 1e-8
P_THRESHOLD_DEFAULT = 1e-6


@dataclass(frozen=True)
class ShapingDesign:
    """Target energy and interconnection data for one closed loop.

    `damping` is the m-by-m gain acting on the actuated momentum error;
    `lambda_k` is the state-dependent matrix used to satisfy the kinetic
    matching condition (skew for the catalog designs).
    """

    mass_d: Callable[[Array], Array]
    mass_d_partials: Callable[[Array], list[Array]]
    potential_d: Callable[[Array], float]
    potential_d_grad: Callable[[Array], Array]
    lambda_k: Callable[[Array, Array], Array]
    damping: Array
    q_star: Array
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "damping", np.asarray(self.damping, dtype=float))
        object.__setattr__(self, "q_star", np.asarray(self.q_star, dtype=float).reshape(-1))

    def mass_d_inv(self, q: Array) -> Array:
        return spd_inverse(self.mass_d(q), f"desired mass matrix of '{self.name}'", q)


@dataclass(frozen=True)
class ControlBreakdown:
    """One control evaluation split into its additive components.

    u = u_ki + u_pe + u_damp + lambda_uan @ x with x the actuated image of
    the desired-momentum velocity; u_ovki = u_ki + lambda_uan @ x is the
    overall kinetic shaping term and phi its infinity norm.
    """

    u: Array
    u_ki: Array
    u_pe: Array
    u_damp: Array
    u_ovki: Array
    phi: float
    lambda_uan: Array
    selected: str


def hamiltonian_d(design: ShapingDesign, s: State) -> float:
    """Target energy 0.5 p^T M_d^-1 p + V_d at the given state."""
    w = spd_solve(design.mass_d(s.q), s.p, f"desired mass matrix of '{design.name}'", s.q)
    return 0.5 * float(s.p @ w) + float(design.potential_d(s.q))


def _pieces(model: MechanicalModel, design: ShapingDesign, s: State):
    """Shared per-state quantities for all three control laws."""
    q, p = s.q, s.p
    Mi = spd_inverse(model.mass(q), f"mass matrix of '{model.name}'", q)
    Md = design.mass_d(q)
    Mdi = spd_inverse(Md, f"desired mass matrix of '{design.name}'", q)
    z = Mi @ p
    w = Mdi @ p
    MdMi = Md @ Mi
    grad_kin = np.array([-(z @ (dM @ z)) for dM in model.mass_partials(q)])
    grad_kin_d = np.array([-(w @ (dMd @ w)) for dMd in design.mass_d_partials(q)])
    Gdag = model.input_pinv
    lam_k = design.lambda_k(q, p)
    u_ki = Gdag @ (0.5 * grad_kin - MdMi @ (0.5 * grad_kin_d) + lam_k @ w)
    u_pe = Gdag @ (model.potential_grad(q) - MdMi @ design.potential_d_grad(q))
    x = model.input_map.T @ w
    u_damp = -design.damping @ x
    return u_ki, u_pe, u_damp, x


def _ida_from(u_ki: Array, u_pe: Array, u_damp: Array) -> ControlBreakdown:
    m = u_ki.size
    return ControlBreakdown(u=u_ki + u_pe + u_damp, u_ki=u_ki, u_pe=u_pe, u_damp=u_damp,
                            u_ovki=u_ki, phi=float(np.abs(u_ki).max()),
                            lambda_uan=np.zeros((m, m)), selected=IDA)


def _th1_from(u_ki: Array, u_pe: Array, u_damp: Array, x: Array,
              x_threshold: float) -> ControlBreakdown:
    if float(np.linalg.norm(x)) <= x_threshold:
        return _ida_from(u_ki, u_pe, u_damp)
    sol = minimax.solve(x, -u_ki)
    lam = sol.A
    u_ovki = u_ki + lam @ x
    return ControlBreakdown(u=u_ki + u_pe + u_damp + lam @ x, u_ki=u_ki, u_pe=u_pe,
                            u_damp=u_damp, u_ovki=u_ovki, phi=sol.phi,
                            lambda_uan=lam, selected=TH1)


def u_kinetic(model: MechanicalModel, design: ShapingDesign, s: State) -> Array:
    """Kinetic shaping component of the baseline control law."""
    u_ki, _, _, _ = _pieces(model, design, s)
    return u_ki


def u_ida(model: MechanicalModel, design: ShapingDesign, s: State) -> ControlBreakdown:
    """Baseline energy shaping law with damping injection."""
    u_ki, u_pe, u_damp, _ = _pieces(model, design, s)
    return _ida_from(u_ki, u_pe, u_damp)


def u_th1(model: MechanicalModel, design: ShapingDesign, s: State,
          x_threshold: float = X_THRESHOLD_DEFAULT) -> ControlBreakdown:
    """Baseline law plus the optimal kinetic-term attenuation.

    Falls back to the baseline when the actuated desired velocity is below
    x_threshold (nothing can be attenuated there).
    """
    u_ki, u_pe, u_damp, x = _pieces(model, design, s)
    return _th1_from(u_ki, u_pe, u_damp, x, x_threshold)


def u_reduced(model: MechanicalModel, design: ShapingDesign, s: State,
              x_threshold: float = X_THRESHOLD_DEFAULT) -> ControlBreakdown:
    """Whichever of the two laws has the smaller peak entry; ties keep the baseline."""
    u_ki, u_pe, u_damp, x = _pieces(model, design, s)
    ida = _ida_from(u_ki, u_pe, u_damp)
    th1 = _th1_from(u_ki, u_pe, u_damp, x, x_threshold)
    if float(np.abs(th1.u).max()) < float(np.abs(ida.u).max()):
        return th1
    return ida


CONTROLLERS = {
    IDA: lambda model, design, s, x_threshold: u_ida(model, design, s),
    TH1: u_th1,
    REDUCED: u_reduced,
}


def pde_residuals(model: MechanicalModel, design: ShapingDesign, s: State,
                  lambda_uan: Array | None = None) -> tuple[Array, Array]:
    """Residuals of the kinetic and potential matching conditions on the
    unactuated rows; both empty for fully actuated systems.

    When lambda_uan is given, the corresponding generalized-force term is
    included in the kinetic residual; by construction it is annihilated.
    """
    if model.n == model.m:
        return np.zeros(0), np.zeros(0)
    q, p = s.q, s.p
    Mi = model.mass_inv(q)
    Mdi = design.mass_d_inv(q)
    z = Mi @ p
    w = Mdi @ p
    grad_kin = np.array([-(z @ (dM @ z)) for dM in model.mass_partials(q)])
    grad_kin_d = np.array([-(w @ (dMd @ w)) for dMd in design.mass_d_partials(q)])
    MdMi = design.mass_d(q) @ Mi
    lam = design.lambda_k(q, p)
    if lambda_uan is not None:
        G = model.input_map
        lam = lam + G @ np.asarray(lambda_uan, dtype=float) @ G.T
    Gp = model.annihilator
    kinetic = Gp @ (grad_kin - MdMi @ grad_kin_d + 2.0 * (lam @ w))
    potential = Gp @ (model.potential_grad(q) - MdMi @ design.potential_d_grad(q))
    return kinetic, potential


def force_matrix(model: MechanicalModel, design: ShapingDesign, s: State,
                 lambda_uan: Array | None = None) -> Array:
    """Assembled generalized-force matrix: lambda_k + G lambda_uan G^T - G K_v G^T."""
    G = model.input_map
    lam = design.lambda_k(s.q, s.p) - G @ design.damping @ G.T
    if lambda_uan is not None:
        lam = lam + G @ np.asarray(lambda_uan, dtype=float) @ G.T
    return lam


# ---------------------------------------------------------------------------
# Catalog design: Pendubot swing-up to the upright configuration
# ---------------------------------------------------------------------------

def _gyroscopic_entry(grad_kin: Array, grad_kin_d: Array, MdMi: Array, w: Array,
                      p_threshold: float) -> float:
    """Skew entry solving the scalar kinetic matching condition.

    The residual is divisible by the first desired-velocity component, so
    the quotient is smooth; the clamp below p_threshold only avoids 0/0.
    """
    kres = float((grad_kin - MdMi @ grad_kin_d)[1])
    if abs(w[0]) < p_threshold:
        return 0.0
    return kres / (2.0 * w[0])


def pendubot_gyroscopic(model: MechanicalModel, design: ShapingDesign, s: State,
                        p_threshold: float = P_THRESHOLD_DEFAULT) -> Array:
    """Skew interconnection matrix satisfying the Pendubot kinetic matching
    condition at the given state (zero in the clamped region near p = 0)."""
    if model.n != 2 or model.m != 1:
        raise ValueError("gyroscopic construction requires n=2, m=1")
    q, p = s.q, s.p
    Mi = model.mass_inv(q)
    Mdi = design.mass_d_inv(q)
    z = Mi @ p
    w = Mdi @ p
    grad_kin = np.array([-(z @ (dM @ z)) for dM in model.mass_partials(q)])
    grad_kin_d = np.array([-(w @ (dMd @ w)) for dMd in design.mass_d_partials(q)])
    j = _gyroscopic_entry(grad_kin, grad_kin_d, design.mass_d(q) @ Mi, w, p_threshold)
    return np.array([[0.0, j], [-j, 0.0]])


def pendubot_design(model: MechanicalModel, k3: float = 0.5, rho: float = 12.0,
                    kp: float = 2.0, kv: float = 30.0,
                    p_threshold: float = P_THRESHOLD_DEFAULT) -> ShapingDesign:
    """Shaping design stabilizing the Pendubot upright position (pi, 0).

    The desired inertia couples the joints through the constant c1 - c2 so
    that both matching conditions are satisfied in closed form; its
    positive definiteness restricts the usable elbow range and is checked
    at runtime. Gains k3, rho, kp must be positive for a well-posed target
    (kv is deliberately not validated here so that a corrupted damping
    matrix is caught by the assembled-force check instead).
    """
    if model.name != "pendubot":
        raise ValueError("this design is specific to the pendubot model")
    if k3 <= 0 or rho <= 0 or kp <= 0:
        raise ValueError("k3, rho and kp must be positive")
    c = model.params
    c1, c2, c3, c5, g = c["c1"], c["c2"], c["c3"], c["c5"], c["gravity"]

    def mass_d(q):
        return k3 * np.array([[rho, c1 - c2], [c1 - c2, -c2 + c3 * np.cos(q[1])]])

    def mass_d_partials(q):
        return [np.zeros((2, 2)),
                k3 * np.array([[0.0, 0.0], [0.0, -c3 * np.sin(q[1])]])]

    def potential_d(q):
        lever = 2.0 * q[0] + q[1] - 2.0 * np.pi
        return (c5 * g / k3) * (np.cos(q[0] + q[1]) + 1.0) + 0.5 * kp * lever ** 2

    def potential_d_grad(q):
        lever = 2.0 * q[0] + q[1] - 2.0 * np.pi
        t = -(c5 * g / k3) * np.sin(q[0] + q[1])
        return np.array([t + 2.0 * kp * lever, t + kp * lever])

    def lambda_k(q, p):
        # explicit 2x2 inverses; this runs inside the per-step hot loop
        gam = np.cos(q[1])
        m12 = c2 + c3 * gam
        det_m = (c1 + c2 + 2.0 * c3 * gam) * c2 - m12 * m12
        d22 = -c2 + c3 * gam
        det_d = k3 * k3 * (rho * d22 - (c1 - c2) ** 2)
        if det_d <= 0.0:
            raise ModelEvaluationError(
                f"desired mass matrix of 'pendubot' is not positive definite at "
                f"q={np.array_str(np.asarray(q), precision=6)}")
        w0 = (k3 * d22 * p[0] - k3 * (c1 - c2) * p[1]) / det_d
        if abs(w0) < p_threshold:
            return np.zeros((2, 2))
        w1 = (-k3 * (c1 - c2) * p[0] + k3 * rho * p[1]) / det_d
        z0 = (c2 * p[0] - m12 * p[1]) / det_m
        z1 = (-m12 * p[0] + (c1 + c2 + 2.0 * c3 * gam) * p[1]) / det_m
        sk = c3 * np.sin(q[1])
        grad_kin_1 = sk * (2.0 * z0 * z0 + 2.0 * z0 * z1)
        grad_kin_d_1 = k3 * sk * w1 * w1
        # second row of M_d M^-1 is the constant (k3, -2 k3)
        kres = grad_kin_1 + 2.0 * k3 * grad_kin_d_1
        j = kres / (2.0 * w0)
        return np.array([[0.0, j], [-j, 0.0]])

    return ShapingDesign(
        mass_d=mass_d, mass_d_partials=mass_d_partials,
        potential_d=potential_d, potential_d_grad=potential_d_grad,
        lambda_k=lambda_k, damping=np.array([[kv]]),
        q_star=np.array([np.pi, 0.0]), name="pendubot",
        params={"k3": k3, "rho": rho, "kp": kp, "kv": kv, "p_threshold": p_threshold},
    )


# ---------------------------------------------------------------------------
# Catalog design: Geomagic Touch regulation
# ---------------------------------------------------------------------------

def touch_design(model: MechanicalModel, kappa: float = 0.001, kp=1.0, kd=0.3,
                 q_star=(0.5, np.pi / 4, -0.5)) -> ShapingDesign:
    """Shaping design regulating the haptic device to q_star.

    Constant desired inertia kappa*I and a saturated quadratic-like target
    potential (integral of tanh per joint); no interconnection modification
    is needed since the device is fully actuated.
    """
    if model.name != "touch":
        raise ValueError("this design is specific to the touch model")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    kp_vec = np.broadcast_to(np.asarray(kp, dtype=float), (3,)).copy()
    if np.any(kp_vec <= 0):
        raise ValueError("kp must be positive")
    kd_vec = np.broadcast_to(np.asarray(kd, dtype=float), (3,)).copy()
    q_star = np.asarray(q_star, dtype=float).reshape(3)
    md_const = kappa * np.eye(3)
    zero3 = np.zeros((3, 3))

    def mass_d(q):
        return md_const

    def mass_d_partials(q):
        return [zero3, zero3, zero3]

    def potential_d(q):
        return float(kp_vec @ np.log(np.cosh(q - q_star)))

    def potential_d_grad(q):
        return kp_vec * np.tanh(q - q_star)

    def lambda_k(q, p):
        return zero3

    return ShapingDesign(
        mass_d=mass_d, mass_d_partials=mass_d_partials,
        potential_d=potential_d, potential_d_grad=potential_d_grad,
        lambda_k=lambda_k, damping=np.diag(kd_vec),
        q_star=q_star, name="touch",
        params={"kappa": kappa, "kp": kp_vec.tolist(), "kd": kd_vec.tolist()},
    )
