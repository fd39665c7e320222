from .integrator import DoseEvent, IntegratorConfig, StateVector, Trajectory, apply_dose, integrate

__all__ = ["DoseEvent", "IntegratorConfig", "StateVector", "Trajectory", "apply_dose", "integrate"]
