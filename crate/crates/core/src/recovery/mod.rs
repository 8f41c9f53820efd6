//! Boundary recovery from map differences: pairings, normalizers, τ-extrapolation,
//! mollified recovery and stability-ratio sweeps.

mod normalizer;
mod pairing;
mod recover;
mod sweep;

pub use normalizer::{ball_intersection_area, half_plane_normalizer, normalizer, polar_kernel_integral, PolarKernel};
pub use pairing::{dn_volume_pairing, flux_on_gamma, nd_volume_pairing, pairing, trace_on_gamma, SUPPORT_TOL};
pub use recover::{
    extrapolate, least_squares, map_for, mollified_recovery, recover_boundary_difference, Extrapolation, MollifiedReport,
    MollifiedRow, RecoveryConfig, RecoveryResult, RecoverySetup, TauRow,
};
pub use sweep::{stability_sweep, CoefficientPair, StabilityReport, StabilityRow, DEGENERATE_TOL};
