"""Simulated unbalanced disc: plant, data collection and closed-loop experiments."""
from .disc import (SINC_MIN, Collection, DiscParams, SimState, collect_dictionary, ct_dynamics,
                   frozen_discretization, frozen_linearization, generate_excitation,
                   mechanical_energy, scheduling_sinc, simulate_open_loop, zoh_step)
from .kernels import BACKEND
from .scenarios import (DISTURBANCE_TIMES, ENCODER_STEP, KINDS, LOG_COLUMNS, TRACKING_SETPOINTS,
                        Scenario, TrajectoryLog, band_limited_disturbance, disturbance_scenario,
                        empirical_l2_ratio, recovery_times, regulation_scenario, rollout,
                        run_closed_loop, settling_time, steady_state_errors, tracking_scenario)

__all__ = [
    "BACKEND", "Collection", "DISTURBANCE_TIMES", "DiscParams", "ENCODER_STEP", "KINDS",
    "LOG_COLUMNS", "SINC_MIN", "Scenario", "SimState", "TRACKING_SETPOINTS", "TrajectoryLog",
    "band_limited_disturbance", "collect_dictionary", "ct_dynamics", "disturbance_scenario",
    "empirical_l2_ratio", "frozen_discretization", "frozen_linearization", "generate_excitation",
    "mechanical_energy", "recovery_times", "regulation_scenario", "rollout", "run_closed_loop",
    "scheduling_sinc", "settling_time", "simulate_open_loop", "steady_state_errors",
    "tracking_scenario", "zoh_step",
]
