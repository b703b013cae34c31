"""Total energy shaping controllers for Hamiltonian mechanical systems,
with closed-form infinity-norm minimization of the kinetic shaping terms."""

from .controllers import (ControlBreakdown, ShapingDesign, force_matrix, hamiltonian_d,
                          pde_residuals, pendubot_design, pendubot_gyroscopic,
                          touch_design, u_ida, u_kinetic, u_reduced, u_th1)
from .mechanics import (MechanicalModel, ModelEvaluationError, PendubotParams, State,
                        TouchParams, hamiltonian, hamiltonian_grad_q, make_model,
                        pendubot_model, plant_rhs, quadratic_form_gradient, touch_model)
from .minimax import ShapeSolution, check_feasible, oracle_phi, solve
from .simulate import (DivergenceError, Metrics, SimConfig, Trajectory, compute_metrics,
                       dissipation_violations, free_flow, integrate)

__all__ = [
    "ControlBreakdown", "DivergenceError", "MechanicalModel", "Metrics",
    "ModelEvaluationError", "PendubotParams", "ShapeSolution", "ShapingDesign",
    "SimConfig", "State", "TouchParams", "Trajectory", "check_feasible",
    "compute_metrics", "dissipation_violations", "force_matrix", "free_flow",
    "hamiltonian", "hamiltonian_d", "hamiltonian_grad_q", "integrate", "make_model",
    "oracle_phi",
    "pde_residuals", "pendubot_design", "pendubot_gyroscopic", "pendubot_model",
    "plant_rhs", "quadratic_form_gradient", "solve", "touch_design", "touch_model",
    "u_ida", "u_kinetic", "u_reduced", "u_th1",
]

__version__ = "0.1.0"
