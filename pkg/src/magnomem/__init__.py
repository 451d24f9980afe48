"""Cavity magnomechanical quantum memory simulator."""

from .fock import FockSpace, QuantumState, mode_operator, partial_trace
from .pulses import PulseSchedule, REFERENCE_SCHEDULE, detunings, pump_coupling
from .scenario import Scenario, load_scenario
from .units import PhysicalParams, thermal_occupation, to_internal_units

__all__ = [
    "FockSpace", "QuantumState", "mode_operator", "partial_trace",
    "PulseSchedule", "REFERENCE_SCHEDULE", "detunings", "pump_coupling",
    "Scenario", "load_scenario",
    "PhysicalParams", "thermal_occupation", "to_internal_units",
]
__version__ = "0.1.0"
