//! Recovery of missing observations: compressed sensing for sporadic
//! loss, rank-one block completion for burst loss, and the residual-life
//! correction of expected delays.

mod cs;
mod dn;
mod renewal;
mod simplex;

pub use cs::{
    basis_pursuit, build_selection_matrix, cs_recover, cs_recover_centered, SelectionMatrix, SparsifyingBasis,
    BP_TOLERANCE,
};
pub use dn::{
    condition_check_and_load, dn_complete, DnCompletion, DnOptions, DnScaling, LoadedDelayMatrix, PartialDelayMatrix,
    LOADING_TOLERANCE,
};
pub use renewal::{
    dn_complete_renewal, expected_residual_matrix, renewal_expected_residual, simulate_renewal_residual, Lifetime,
    RenewalParams, ResidualEstimate, VacationRenewal,
};
