"""Fixed-step closed-loop simulation and trajectory metrics.

The control is sampled once per step and held constant while the plant is
integrated with classical fourth-order Runge-Kutta, mirroring a discrete
controller; `substeps` refines the integration inside one hold interval
(used to measure integrator convergence without changing the sampled-data
system).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import CONTROLLERS, REDUCED, ControlBreakdown, ShapingDesign, hamiltonian_d
from .mechanics import MechanicalModel, State, spd_inverse

Array = np.ndarray

DIVERGENCE_MOMENTUM = 1e6


class DivergenceError(RuntimeError):
    """Raised when the simulated state blows up or becomes non-finite."""


@dataclass(frozen=True)
class SimConfig:
    t_final: float
    dt: float
    initial_state: State
    controller: str = REDUCED
    x_threshold: float = 1e-8
    record_stride: int = 1
    substeps: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least one step")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller '{self.controller}'")
        if self.record_stride < 1 or self.substeps < 1:
            raise ValueError("record_stride and substeps must be >= 1")


@dataclass
class Trajectory:
    times: Array
    states: list[State]
    controls: list[ControlBreakdown]
    hd: Array
    switch_count: int = 0

    def stack_q(self) -> Array:
        return np.array([s.q for s in self.states])

    def stack_p(self) -> Array:
        return np.array([s.p for s in self.states])

    def stack_u(self) -> Array:
        return np.array([c.u for c in self.controls])


@dataclass
class Metrics:
    peak_u_inf: float
    peak_u_per_channel: Array
    peak_uovki_inf: float
    final_q_error: Array
    settled: bool
    reduction_vs: float | None = None


def _rk4_hold(model: MechanicalModel, q: Array, p: Array, u: Array,
              dt: float, substeps: int) -> tuple[Array, Array]:
    """Advance the plant by one hold interval with u frozen."""
    h = dt / substeps
    Gu = model.input_map @ u
    mass, partials, pot_grad = model.mass, model.mass_partials, model.potential_grad
    what = f"mass matrix of '{model.name}'"

    def f(q, p):
        z = spd_inverse(mass(q), what, q) @ p
        grad_kin = np.array([-(z @ (dM @ z)) for dM in partials(q)])
        return z, Gu - 0.5 * grad_kin - pot_grad(q)

    for _ in range(substeps):
        k1q, k1p = f(q, p)
        k2q, k2p = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = f(q + h * k3q, p + h * k3p)
        q = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return q, p


def integrate(model: MechanicalModel, design: ShapingDesign, cfg: SimConfig) -> Trajectory:
    """Run the closed loop and record state, control breakdown and target energy."""
    control = CONTROLLERS[cfg.controller]
    n_steps = int(round(cfg.t_final / cfg.dt))
    q = cfg.initial_state.q.copy()
    p = cfg.initial_state.p.copy()

    times, states, controls, hd = [], [], [], []
    switches = 0
    last_selected = None

    def record(t: float, s: State, cb: ControlBreakdown):
        times.append(t)
        states.append(s)
        controls.append(cb)
        hd.append(hamiltonian_d(design, s))

    for k in range(n_steps):
        t = k * cfg.dt
        s = State(q, p)
        cb = control(model, design, s, cfg.x_threshold)
        if cfg.controller == REDUCED:
            if last_selected is not None and cb.selected != last_selected:
                switches += 1
            last_selected = cb.selected
        if k % cfg.record_stride == 0:
            record(t, s, cb)
        q, p = _rk4_hold(model, q, p, cb.u, cfg.dt, cfg.substeps)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))) \
                or np.abs(p).max() > DIVERGENCE_MOMENTUM:
            raise DivergenceError(f"state diverged at t={t + cfg.dt:.6f} s")

    s = State(q, p)
    record(n_steps * cfg.dt, s, control(model, design, s, cfg.x_threshold))
    return Trajectory(times=np.array(times), states=states, controls=controls,
                      hd=np.array(hd), switch_count=switches)


def free_flow(model: MechanicalModel, s0: State, t_final: float, dt: float,
              substeps: int = 1) -> State:
    """Integrate the unforced plant; the Hamiltonian should be conserved."""
    q, p = s0.q.copy(), s0.p.copy()
    u = np.zeros(model.m)
    for _ in range(int(round(t_final / dt))):
        q, p = _rk4_hold(model, q, p, u, dt, substeps)
    return State(q, p)


def compute_metrics(traj: Trajectory, q_star: Array, settle_tol: float = 0.05,
                    baseline: Trajectory | None = None) -> Metrics:
    """Peak control magnitudes and final configuration error over recorded samples."""
    if not traj.states:
        raise ValueError("empty trajectory")
    u = traj.stack_u()
    ovki = np.array([c.u_ovki for c in traj.controls])
    peak = float(np.abs(u).max())
    final_err = traj.states[-1].q - np.asarray(q_star, dtype=float)
    reduction = None
    if baseline is not None:
        base_peak = float(np.abs(baseline.stack_u()).max())
        reduction = 100.0 * (1.0 - peak / base_peak) if base_peak > 0 else 0.0
    return Metrics(peak_u_inf=peak,
                   peak_u_per_channel=np.abs(u).max(axis=0),
                   peak_uovki_inf=float(np.abs(ovki).max()),
                   final_q_error=final_err,
                   settled=bool(np.abs(final_err).max() <= settle_tol),
                   reduction_vs=reduction)


def dissipation_violations(traj: Trajectory, eps: float) -> int:
    """Number of recorded increments of the target energy exceeding eps."""
    return int(np.sum(np.diff(traj.hd) > eps))
