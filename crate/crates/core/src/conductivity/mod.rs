//! Structured conductivities σ(x) = A(x, a(x)) and scalar coefficient fields.

mod coefficient;
mod expr;
mod model;

pub use coefficient::{
    bump, bump_mass, estimate_modulus, extend_coefficient, mollifier_rule, mollify, w1p_norm, Modulus,
    ScalarCoefficient,
};
pub use expr::Expr;
pub use model::{
    eval_sigma, inverse_gap, verify_class_h, ClassHReport, Conductivity, ConductivityModel, ConstantSigma, Family,
    MatrixField, SigmaFn,
};
