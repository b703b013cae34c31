"""Experiment configuration: strict TOML schema, model/design construction.

Unknown keys are rejected so that typos fail loudly. Physical invariants
of the referenced model and design are re-validated when a config loads.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .controllers import (CONTROLLERS, ShapingDesign, pendubot_design, touch_design)
from .mechanics import (MechanicalModel, ModelEvaluationError, PendubotParams, State,
                        TouchParams, pendubot_model, spd_inverse, touch_model)
from .simulate import SimConfig


class ConfigError(ValueError):
    """Raised for unparsable, unknown or invalid configuration entries."""


_MODEL_KEYS = {"name", "factory", "params"}
_PENDUBOT_PARAM_KEYS = {"c1", "c2", "c3", "c4", "c5", "gravity"}
_TOUCH_PARAM_KEYS = {"phi1", "phi2", "phi3", "phi4", "phi5", "gravity"}
_PENDUBOT_DESIGN_KEYS = {"k3", "rho", "kp", "kv", "x_threshold", "p_threshold"}
_TOUCH_DESIGN_KEYS = {"kappa", "kp", "kd", "q_star", "x_threshold", "p_threshold"}
_SIM_KEYS = {"t_final", "dt", "q0", "p0", "controller", "record_stride",
             "settle_tol", "substeps"}
_OUTPUT_KEYS = {"directory", "formats"}
_VERIFY_KEYS = {"samples", "seed", "q_box", "p_box"}
_TOP_KEYS = {"model", "design", "sim", "output", "verify"}

_DEFAULT_VERIFY_BOX = {
    "pendubot": ([[np.pi - 0.6, np.pi + 0.6], [-0.45, 0.45]], [[-1.5, 1.5]] * 2),
    "touch": ([[-0.5, 1.0], [0.1, 1.0], [-1.7, -0.2]], [[-0.01, 0.01]] * 3),
}


@dataclass(frozen=True)
class Experiment:
    model: MechanicalModel
    design: ShapingDesign
    sim: SimConfig
    settle_tol: float
    output_dir: Path
    formats: tuple[str, ...]
    verify_samples: int
    verify_seed: int
    q_box: np.ndarray
    p_box: np.ndarray

    def metadata(self) -> dict:
        return {"model": {"name": self.model.name, **self.model.params},
                "design": {"name": self.design.name, **self.design.params},
                "sim": {"t_final": self.sim.t_final, "dt": self.sim.dt,
                        "controller": self.sim.controller,
                        "q0": self.sim.initial_state.q.tolist(),
                        "p0": self.sim.initial_state.p.tolist(),
                        "record_stride": self.sim.record_stride,
                        "settle_tol": self.settle_tol}}


def _reject_unknown(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{where}]")


def _positive(value, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}' must be a number") from None
    if value <= 0:
        raise ConfigError(f"field '{name}' must be positive, got {value}")
    return value


def _vector(value, n: int, name: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}' must be a list of numbers") from None
    if v.size != n:
        raise ConfigError(f"field '{name}' must have {n} entries, got {v.size}")
    return v


def _box(value, n: int, name: str) -> np.ndarray:
    box = np.asarray(value, dtype=float)
    if box.shape != (n, 2) or np.any(box[:, 0] > box[:, 1]):
        raise ConfigError(f"field '{name}' must be {n} [lo, hi] pairs")
    return box


def _build_model_design(cfg: dict) -> tuple[MechanicalModel, ShapingDesign, float]:
    model_tbl = cfg.get("model", {})
    _reject_unknown(model_tbl, _MODEL_KEYS, "model")
    name = model_tbl.get("name")
    params = model_tbl.get("params", {})
    design_tbl = cfg.get("design", {})
    x_threshold = _positive(design_tbl.get("x_threshold", 1e-8), "design.x_threshold")

    if name == "pendubot":
        _reject_unknown(params, _PENDUBOT_PARAM_KEYS, "model.params")
        _reject_unknown(design_tbl, _PENDUBOT_DESIGN_KEYS, "design")
        try:
            model = pendubot_model(PendubotParams(**params))
        except ValueError as exc:
            raise ConfigError(f"invalid pendubot parameters: {exc}") from None
        design = pendubot_design(
            model,
            k3=_positive(design_tbl.get("k3", 0.5), "design.k3"),
            rho=_positive(design_tbl.get("rho", 12.0), "design.rho"),
            kp=_positive(design_tbl.get("kp", 2.0), "design.kp"),
            kv=float(design_tbl.get("kv", 30.0)),
            p_threshold=_positive(design_tbl.get("p_threshold", 1e-6),
                                  "design.p_threshold"))
    elif name == "touch":
        _reject_unknown(params, _TOUCH_PARAM_KEYS, "model.params")
        _reject_unknown(design_tbl, _TOUCH_DESIGN_KEYS, "design")
        try:
            model = touch_model(TouchParams(**params))
        except ValueError as exc:
            raise ConfigError(f"invalid touch parameters: {exc}") from None
        design = touch_design(
            model,
            kappa=_positive(design_tbl.get("kappa", 0.001), "design.kappa"),
            kp=design_tbl.get("kp", 1.0),
            kd=design_tbl.get("kd", 0.3),
            q_star=_vector(design_tbl.get("q_star", [0.5, np.pi / 4, -0.5]), 3,
                           "design.q_star"))
    elif name == "custom":
        factory_path = model_tbl.get("factory")
        if not factory_path or ":" not in factory_path:
            raise ConfigError("custom model requires factory = 'module:function'")
        mod_name, fn_name = factory_path.split(":", 1)
        try:
            factory = getattr(importlib.import_module(mod_name), fn_name)
        except (ImportError, AttributeError) as exc:
            raise ConfigError(f"cannot load custom factory '{factory_path}': {exc}") from None
        model, design = factory(dict(params), dict(design_tbl))
        if not isinstance(model, MechanicalModel) or not isinstance(design, ShapingDesign):
            raise ConfigError("custom factory must return (MechanicalModel, ShapingDesign)")
    else:
        raise ConfigError(f"model.name must be 'pendubot', 'touch' or 'custom', got {name!r}")
    return model, design, x_threshold


def _validate_at_load(model: MechanicalModel, design: ShapingDesign, q0: np.ndarray):
    """Re-check physical invariants at the loaded configuration."""
    spd_inverse(model.mass(q0), f"mass matrix of '{model.name}'", q0)
    spd_inverse(design.mass_d(q0), f"desired mass matrix of '{design.name}'", q0)
    grad_at_star = design.potential_d_grad(design.q_star)
    if np.abs(grad_at_star).max() > 1e-9:
        raise ModelEvaluationError(
            "desired potential gradient does not vanish at q_star "
            f"(max entry {np.abs(grad_at_star).max():.3e})")


def load_experiment(path: str | Path, controller: str | None = None) -> Experiment:
    """Parse and validate a TOML experiment file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None

    _reject_unknown(cfg, _TOP_KEYS, "top level")
    model, design, x_threshold = _build_model_design(cfg)
    n = model.n

    sim_tbl = cfg.get("sim", {})
    _reject_unknown(sim_tbl, _SIM_KEYS, "sim")
    dt = _positive(sim_tbl.get("dt", 1e-3), "sim.dt")
    t_final = _positive(sim_tbl.get("t_final", 10.0), "sim.t_final")
    q0 = _vector(sim_tbl.get("q0", design.q_star), n, "sim.q0")
    p0 = _vector(sim_tbl.get("p0", np.zeros(n)), n, "sim.p0")
    controller = controller or sim_tbl.get("controller", "reduced")
    if controller not in CONTROLLERS:
        raise ConfigError(f"sim.controller must be one of {sorted(CONTROLLERS)}, "
                          f"got {controller!r}")
    record_stride = int(sim_tbl.get("record_stride", 1))
    substeps = int(sim_tbl.get("substeps", 1))
    settle_tol = _positive(sim_tbl.get("settle_tol", 0.05), "sim.settle_tol")
    try:
        sim = SimConfig(t_final=t_final, dt=dt, initial_state=State(q0, p0),
                        controller=controller, x_threshold=x_threshold,
                        record_stride=record_stride, substeps=substeps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    out_tbl = cfg.get("output", {})
    _reject_unknown(out_tbl, _OUTPUT_KEYS, "output")
    formats = tuple(out_tbl.get("formats", ["csv", "json"]))
    if not set(formats) <= {"csv", "json"}:
        raise ConfigError("output.formats entries must be 'csv' or 'json'")

    ver_tbl = cfg.get("verify", {})
    _reject_unknown(ver_tbl, _VERIFY_KEYS, "verify")
    default_q_box, default_p_box = _DEFAULT_VERIFY_BOX.get(
        model.name, ([[-1.0, 1.0]] * n, [[-1.0, 1.0]] * n))
    q_box = _box(ver_tbl.get("q_box", default_q_box), n, "verify.q_box")
    p_box = _box(ver_tbl.get("p_box", default_p_box), n, "verify.p_box")

    _validate_at_load(model, design, q0)
    return Experiment(model=model, design=design, sim=sim, settle_tol=settle_tol,
                      output_dir=Path(out_tbl.get("directory", "out")),
                      formats=formats,
                      verify_samples=int(ver_tbl.get("samples", 1000)),
                      verify_seed=int(ver_tbl.get("seed", 0)),
                      q_box=q_box, p_box=p_box)
