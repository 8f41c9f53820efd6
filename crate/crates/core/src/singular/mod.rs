//! Singular solutions: leading terms, Green functions and zero-flux solutions on Ω_ρ.

mod kernel;
mod leading;
mod solution;

pub use kernel::Fundamental;
pub use leading::{
    check_gradient_lower_bound, eval_leading, GradientBoundReport, GradientBoundRow, LeadingTerm, DEFAULT_KAPPA,
};
pub use solution::{
    fit_power_law, fit_remainder_rate, AugmentedProblem, BcKind, FluxReport, RateFit, SingularSolution,
};

use crate::conductivity::SigmaFn;
use crate::error::Result;
use crate::geometry::{AugmentedDomain, SingularityPlacement};
use std::sync::Arc;

pub fn build_dirichlet_singular(
    aug: &Arc<AugmentedDomain>,
    sigma: Arc<dyn SigmaFn>,
    term: &LeadingTerm,
) -> Result<SingularSolution> {
    AugmentedProblem::new(aug.clone(), sigma)?.dirichlet_singular(term, None)
}

pub fn build_green(
    aug: &Arc<AugmentedDomain>,
    sigma: Arc<dyn SigmaFn>,
    placement: &SingularityPlacement,
) -> Result<SingularSolution> {
    AugmentedProblem::new(aug.clone(), sigma)?.green(placement)
}

pub fn build_neumann_singular(
    aug: &Arc<AugmentedDomain>,
    sigma: Arc<dyn SigmaFn>,
    placement: &SingularityPlacement,
    s_patch: Option<&[usize]>,
) -> Result<SingularSolution> {
    AugmentedProblem::new(aug.clone(), sigma)?.neumann_singular(placement, s_patch)
}
