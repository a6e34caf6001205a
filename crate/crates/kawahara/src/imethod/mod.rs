//! Modified energies of the I-method: multipliers, lattice functionals,
//! energy tracking and the global iteration experiment.

mod energy;
mod gwp;
mod lattice;
mod symbols;
mod tuple;

pub use symbols::Symbols;
pub use tuple::{factored_power_sums, h_minus_v_factored, h_v_eval, power_sum_identity_check, HyperplaneTuple};
pub use lattice::{
    lambda3_m3, lambda3_sigma3, lambda4_m4_beyond, lambda4_sigma4, lambda5_m5, lambda_k, Sigma3Table, Sigma4Lattice, SUPPORT_CUTOFF,
};
pub use energy::{
    energy_derivative_audit, modified_energies, DerivativeAudit, DerivativeResidual, EnergyReport, EnergyTracker,
    QUINTIC_MAX_MODES, derivative_probe, proximity_constant, ProximityReport,
};
pub use gwp::{
    choose_lambda, gwp_experiment, increment_sweep, linear_flow_increment, sweep_datum, GwpConfig, GwpReport, GwpStep,
    IncrementRow, IncrementSweep, GROWTH_REFERENCE, INCREMENT_REFERENCE,
};
