//! Discrete local D-N and N-D maps, fractional boundary Gram matrices and operator norms.

mod diagnostics;
mod operator;
mod space;

pub use diagnostics::{energy_split, meyers_ratio, triangles_in_scaled_u};
pub use operator::{
    assemble_full_dn, assemble_global_nd, assemble_local_dn, assemble_local_nd, local_dn_from_problem, nd_from_problem,
    op_norm, LocalOperator, MapKind,
};
pub use space::{
    boundary_mass_stiffness, build_trace_space, h_half_gram_full, inverse_sqrt_gram, zero_sum_basis, BoundarySpace,
    SpaceKind,
};
