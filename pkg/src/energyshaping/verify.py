"""Randomized verification suite over a configured state box.

Each check reports its worst deviation against a fixed tolerance; the
report is machine-readable and drives the CLI verify exit code.
"""
from __future__ import annotations

import numpy as np

from . import minimax
from .controllers import ShapingDesign, force_matrix, pde_residuals, u_th1
from .mechanics import (MechanicalModel, State, finite_difference_gradient,
                        finite_difference_partials, hamiltonian, hamiltonian_grad_q)

Array = np.ndarray

GRAD_TOL = 1e-5
LAMBDA_TOL = 1e-9
LAMBDA_K_TOL = 1e-10
ORACLE_TOL = 1e-9
PDE_TOL = 1e-9
PDE_INVARIANCE_TOL = 1e-13


def _sample_states(rng: np.random.Generator, q_box: Array, p_box: Array,
                   count: int) -> list[State]:
    qs = rng.uniform(q_box[:, 0], q_box[:, 1], size=(count, q_box.shape[0]))
    ps = rng.uniform(p_box[:, 0], p_box[:, 1], size=(count, p_box.shape[0]))
    return [State(q, p) for q, p in zip(qs, ps)]


def _rel(err: Array, ref: Array) -> float:
    return float(np.abs(err).max() / (1e-12 + np.abs(ref).max()))


def run_verification(model: MechanicalModel, design: ShapingDesign, samples: int,
                     seed: int, q_box: Array, p_box: Array,
                     x_threshold: float = 1e-8, p_threshold: float = 1e-6) -> dict:
    """Run all randomized checks; returns a report dict with per-check results."""
    rng = np.random.default_rng(seed)
    states = _sample_states(rng, np.asarray(q_box, float), np.asarray(p_box, float), samples)
    fully_actuated = model.n == model.m
    checks = []

    def add(name, value, tol):
        checks.append({"name": name, "max_deviation": float(value),
                       "tolerance": float(tol), "passed": bool(value <= tol)})

    def skip(name, reason):
        checks.append({"name": name, "skipped": reason})

    # analytic derivatives against finite differences
    worst_mass, worst_grad = 0.0, 0.0
    check_fd = min(samples, 200)  # finite differencing dominates cost
    for s in states[:check_fd]:
        fd_parts = finite_difference_partials(model.mass, s.q)
        for analytic, fd in zip(model.mass_partials(s.q), fd_parts):
            worst_mass = max(worst_mass, _rel(analytic - fd, fd))
        fd_grad = finite_difference_gradient(lambda q: hamiltonian(model, State(q, s.p)), s.q)
        worst_grad = max(worst_grad, _rel(hamiltonian_grad_q(model, s) - fd_grad, fd_grad))
    add("mass_partials_vs_finite_difference", worst_mass, GRAD_TOL)
    add("hamiltonian_gradient_vs_finite_difference", worst_grad, GRAD_TOL)

    # definiteness of both inertia matrices over the box
    min_m = min(np.linalg.eigvalsh(model.mass(s.q))[0] for s in states)
    min_md = min(np.linalg.eigvalsh(design.mass_d(s.q))[0] for s in states)
    add("mass_matrix_positive_definite", -min_m, 0.0)
    add("desired_mass_matrix_positive_definite", -min_md, 0.0)

    # assembled generalized-force matrix must stay dissipative, with the
    # optimizing term included whenever it is defined
    worst_lam, worst_lam_k = -np.inf, -np.inf
    for s in states:
        cb = u_th1(model, design, s, x_threshold)
        lam = force_matrix(model, design, s, cb.lambda_uan)
        worst_lam = max(worst_lam, np.linalg.eigvalsh(0.5 * (lam + lam.T))[-1])
        lk = design.lambda_k(s.q, s.p)
        worst_lam_k = max(worst_lam_k, np.linalg.eigvalsh(0.5 * (lk + lk.T))[-1])
    add("assembled_force_matrix_nsd", worst_lam, LAMBDA_TOL)
    add("kinetic_interconnection_nsd", worst_lam_k, LAMBDA_K_TOL)

    # closed-form optimum against the bisection oracle: random instances
    # plus the instances actually arising from the sampled states
    worst_phi = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, 7))
        x = rng.uniform(-10, 10, n)
        b = rng.uniform(-10, 10, n)
        if np.abs(x).sum() < 1e-6:
            continue
        worst_phi = max(worst_phi, abs(minimax.solve(x, b).phi - minimax.oracle_phi(x, b)))
    for s in states[:check_fd]:
        cb = u_th1(model, design, s, x_threshold)
        if cb.selected == "th1":
            x = model.input_map.T @ np.linalg.solve(design.mass_d(s.q), s.p)
            worst_phi = max(worst_phi,
                            abs(cb.phi - minimax.oracle_phi(x, -cb.u_ki)))
    add("optimal_value_vs_oracle", worst_phi, ORACLE_TOL)

    # matching-condition residuals (underactuated models only)
    if fully_actuated:
        skip("kinetic_matching_residual", "fully actuated")
        skip("potential_matching_residual", "fully actuated")
        skip("matching_residual_invariance", "fully actuated")
    else:
        worst_kin, worst_pot, worst_inv = 0.0, 0.0, 0.0
        for s in states:
            kin, pot = pde_residuals(model, design, s)
            w = np.linalg.solve(design.mass_d(s.q), s.p)
            gated = np.abs((model.input_map.T @ w)).max() < p_threshold
            if not gated:
                worst_kin = max(worst_kin, np.abs(kin).max(initial=0.0))
            worst_pot = max(worst_pot, np.abs(pot).max(initial=0.0))
            cb = u_th1(model, design, s, x_threshold)
            kin2, pot2 = pde_residuals(model, design, s, cb.lambda_uan)
            worst_inv = max(worst_inv, np.abs(kin2 - kin).max(initial=0.0),
                            np.abs(pot2 - pot).max(initial=0.0))
        add("kinetic_matching_residual", worst_kin, PDE_TOL)
        add("potential_matching_residual", worst_pot, PDE_TOL)
        add("matching_residual_invariance", worst_inv, PDE_INVARIANCE_TOL)

    # target potential has a stationary minimum at q_star
    grad_star = np.abs(design.potential_d_grad(design.q_star)).max()
    hess = np.array(finite_difference_partials(design.potential_d_grad, design.q_star))
    min_hess = np.linalg.eigvalsh(0.5 * (hess + hess.T))[0]
    add("target_potential_stationary_at_q_star", grad_star, 1e-9)
    add("target_potential_hessian_psd_at_q_star", -min_hess, 1e-8)

    failed = [c for c in checks if not c.get("passed", True)]
    report = {
        "model": model.name,
        "samples": samples,
        "seed": seed,
        "checks": checks,
        "passed": not failed,
    }
    if failed:
        worst = max(failed, key=lambda c: c["max_deviation"] - c["tolerance"])
        report["worst_offender"] = worst["name"]
    return report
