"""Pseudo-spectral lab for the eps-scaled compressible system and its
hydrostatic limit."""
from .spectral import (Grid, HorizontalField, Parity, SpectralField, derivative,
                       hs_norm, set_workers, to_physical, to_spectral)
from .state import (CfState, CpeState, make_illprepared_ic, make_well_prepared_ic,
                    random_state, reference_cpe_init)
from .cf import CfIntegrator, DivergenceError, StepperConfig, mixed_wave_residual, step
from .cpe import CpeIntegrator, reconstruct_wp, step_cpe
from .oracle import evolve_exact, mode_eigen, uniform_bound_check
from .diagnostics import DiagnosticsRecord, delta_norms, fit_rate, record
from .checkpoint import CheckpointError, checkpoint_read, checkpoint_write
from .harness import ExperimentConfig, RunSummary, run_experiment
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "Grid", "HorizontalField", "Parity", "SpectralField", "derivative", "hs_norm",
    "set_workers", "to_physical", "to_spectral", "CfState", "CpeState",
    "make_illprepared_ic", "make_well_prepared_ic", "random_state", "reference_cpe_init",
    "CfIntegrator", "DivergenceError", "StepperConfig", "mixed_wave_residual", "step",
    "CpeIntegrator", "reconstruct_wp", "step_cpe", "evolve_exact", "mode_eigen",
    "uniform_bound_check", "DiagnosticsRecord", "delta_norms", "fit_rate", "record",
    "CheckpointError", "checkpoint_read", "checkpoint_write", "ExperimentConfig",
    "RunSummary", "run_experiment", "cli_main",
]
