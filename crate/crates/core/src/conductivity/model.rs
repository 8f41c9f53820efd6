use super::coefficient::ScalarCoefficient;
use super::expr::Expr;
use crate::error::{Error, Result};
use crate::geometry::{MeshDomain, Point};
use crate::linalg::Sym2;
use crate::quadrature::halton;
use std::sync::Arc;

/// Symmetric 2×2 matrix field.
#[derive(Debug, Clone)]
pub enum MatrixField {
    Constant(Sym2),
    Expr { a11: Expr, a12: Expr, a22: Expr },
    Nodal { mesh: Arc<MeshDomain>, values: Arc<Vec<Sym2>> },
}

impl MatrixField {
    pub fn eval(&self, x: Point) -> Result<Sym2> {
        match self {
            MatrixField::Constant(m) => Ok(*m),
            MatrixField::Expr { a11, a12, a22 } => Ok(Sym2::new(a11.eval(x), a12.eval(x), a22.eval(x))),
            MatrixField::Nodal { mesh, values } => {
                let (t, b) = mesh.locate(x).ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
                let tri = mesh.triangles()[t];
                Ok(values[tri[0]] * b[0] + values[tri[1]] * b[1] + values[tri[2]] * b[2])
            }
        }
    }

    pub fn as_constant(&self) -> Option<Sym2> {
        match self {
            MatrixField::Constant(m) => Some(*m),
            MatrixField::Expr { a11, a12, a22 } => {
                Some(Sym2::new(a11.as_constant()?, a12.as_constant()?, a22.as_constant()?))
            }
            MatrixField::Nodal { .. } => None,
        }
    }
}

impl From<Sym2> for MatrixField {
    fn from(m: Sym2) -> Self {
        MatrixField::Constant(m)
    }
}

/// Structured family of A(x, t).
#[derive(Debug, Clone)]
pub enum Family {
    /// A(x,t) = t·M(x).
    ScalarMultiple { m: MatrixField },
    /// A(x,t) = M0(x) + t·M1(x).
    Affine { m0: MatrixField, m1: MatrixField },
}

/// A conductivity class with its constants λ, 𝓔, 𝓕 and p.
#[derive(Debug, Clone)]
pub struct ConductivityModel {
    pub family: Family,
    pub lambda: f64,
    pub cal_e: f64,
    pub cal_f: f64,
    pub p: f64,
    /// Box `[xmin, xmax, ymin, ymax]` used for sampled verification.
    pub region: [f64; 4],
}

impl ConductivityModel {
    pub fn new(family: Family, lambda: f64, cal_e: f64, cal_f: f64, p: f64) -> Result<Self> {
        if !(lambda >= 1.0) {
            return Err(Error::InvalidInput(format!("lambda must be at least 1, got {lambda}")));
        }
        if !(cal_f > 0.0) {
            return Err(Error::InvalidInput(format!("monotonicity constant must be positive, got {cal_f}")));
        }
        if !(p > 2.0) {
            return Err(Error::InvalidInput(format!("Sobolev exponent must exceed 2, got {p}")));
        }
        Ok(ConductivityModel { family, lambda, cal_e, cal_f, p, region: [-1.0, 1.0, -1.0, 1.0] })
    }

    /// A(x,t) = t·I.
    pub fn isotropic(lambda: f64) -> Self {
        Self::new(Family::ScalarMultiple { m: Sym2::IDENTITY.into() }, lambda, lambda, 1.0, 4.0)
            .expect("valid isotropic model")
    }

    pub fn scalar_multiple(m: impl Into<MatrixField>, lambda: f64, cal_f: f64) -> Result<Self> {
        Self::new(Family::ScalarMultiple { m: m.into() }, lambda, lambda, cal_f, 4.0)
    }

    pub fn affine(m0: impl Into<MatrixField>, m1: impl Into<MatrixField>, lambda: f64, cal_f: f64) -> Result<Self> {
        Self::new(Family::Affine { m0: m0.into(), m1: m1.into() }, lambda, lambda, cal_f, 4.0)
    }

    pub fn with_region(mut self, region: [f64; 4]) -> Self {
        self.region = region;
        self
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::InvalidInput(format!("Sobolev exponent must exceed 2, got {p}")));
        }
        self.p = p;
        Ok(self)
    }

    /// Hölder exponent 1 − n/p.
    pub fn beta(&self) -> f64 {
        1.0 - 2.0 / self.p
    }

    pub fn a(&self, x: Point, t: f64) -> Result<Sym2> {
        match &self.family {
            Family::ScalarMultiple { m } => Ok(m.eval(x)? * t),
            Family::Affine { m0, m1 } => Ok(m0.eval(x)? + m1.eval(x)? * t),
        }
    }

    /// D_t A(x, ·), independent of t for both families.
    pub fn dt_a(&self, x: Point) -> Result<Sym2> {
        match &self.family {
            Family::ScalarMultiple { m } => m.eval(x),
            Family::Affine { m1, .. } => m1.eval(x),
        }
    }

    /// A(x, ·) when it does not depend on x.
    pub fn is_x_independent(&self) -> bool {
        match &self.family {
            Family::ScalarMultiple { m } => m.as_constant().is_some(),
            Family::Affine { m0, m1 } => m0.as_constant().is_some() && m1.as_constant().is_some(),
        }
    }
}

/// σ(x) = A(x, a(x)).
pub fn eval_sigma(model: &ConductivityModel, coeff: &ScalarCoefficient, x: Point) -> Result<Sym2> {
    model.a(x, coeff.eval(x)?)
}

/// Sampled margins of the ellipticity and monotonicity conditions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClassHReport {
    pub ellipticity_margin: f64,
    pub monotonicity_margin: f64,
    pub samples: usize,
}

impl ClassHReport {
    pub fn passes(&self) -> bool {
        self.ellipticity_margin >= 0.0 && self.monotonicity_margin >= 0.0
    }
}

/// Minimum margins over a Halton sample of `(x, t)` with `t ∈ [λ⁻¹, λ]`.
///
/// The ξ-minimum is taken exactly through eigenvalues. Sample points where a
/// mesh-backed field is undefined are skipped.
pub fn verify_class_h(model: &ConductivityModel, sample_count: usize) -> Result<ClassHReport> {
    if sample_count < 100 {
        return Err(Error::InvalidInput(format!("sample_count must be at least 100, got {sample_count}")));
    }
    let lam = model.lambda;
    let [x0, x1, y0, y1] = model.region;
    let mut ell = f64::INFINITY;
    let mut mono = f64::INFINITY;
    let mut used = 0;
    for i in 0..sample_count {
        let hs = halton(i as u64 + 1, 3, 0);
        let x = [x0 + (x1 - x0) * hs[0], y0 + (y1 - y0) * hs[1]];
        let t = match i % 3 {
            0 => 1.0 / lam,
            1 => lam,
            _ => 1.0 / lam + (lam - 1.0 / lam) * hs[2],
        };
        let (a, d) = match (model.a(x, t), model.dt_a(x)) {
            (Ok(a), Ok(d)) => (a, d),
            (Err(Error::OutOfDomain { .. }), _) | (_, Err(Error::OutOfDomain { .. })) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let (lo, hi) = a.eigenvalues();
        ell = ell.min((lo - 1.0 / lam).min(lam - hi));
        mono = mono.min(d.eigenvalues().0 - model.cal_f);
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidInput("no sample point lies where the model is defined".into()));
    }
    Ok(ClassHReport { ellipticity_margin: ell, monotonicity_margin: mono, samples: used })
}

/// Smallest eigenvalue of `A(x,a)⁻¹ − A(x,b)⁻¹` and the lower bound `𝓕(b−a)/λ²`.
pub fn inverse_gap(model: &ConductivityModel, x: Point, a: f64, b: f64) -> Result<(f64, f64)> {
    let ia = model.a(x, a)?.inverse().ok_or_else(|| Error::NotAdmissible("matrix is not positive definite".into()))?;
    let ib = model.a(x, b)?.inverse().ok_or_else(|| Error::NotAdmissible("matrix is not positive definite".into()))?;
    Ok(((ia - ib).eigenvalues().0, model.cal_f * (b - a) / (model.lambda * model.lambda)))
}

/// Pointwise conductivity evaluator.
pub trait SigmaFn: Send + Sync {
    fn sigma(&self, x: Point) -> Result<Sym2>;

    /// Short label identifying the conductivity in outputs.
    fn tag(&self) -> String {
        "sigma".into()
    }
}

/// σ(x) = A(x, a(x)) for a model and coefficient.
#[derive(Debug, Clone)]
pub struct Conductivity {
    pub model: Arc<ConductivityModel>,
    pub coeff: Arc<ScalarCoefficient>,
    pub label: String,
}

impl Conductivity {
    pub fn new(model: ConductivityModel, coeff: ScalarCoefficient, label: impl Into<String>) -> Self {
        Conductivity { model: Arc::new(model), coeff: Arc::new(coeff), label: label.into() }
    }

    pub fn with_coeff(&self, coeff: ScalarCoefficient, label: impl Into<String>) -> Self {
        Conductivity { model: self.model.clone(), coeff: Arc::new(coeff), label: label.into() }
    }
}

impl SigmaFn for Conductivity {
    fn sigma(&self, x: Point) -> Result<Sym2> {
        eval_sigma(&self.model, &self.coeff, x)
    }

    fn tag(&self) -> String {
        self.label.clone()
    }
}

/// A constant matrix conductivity.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSigma(pub Sym2);

impl SigmaFn for ConstantSigma {
    fn sigma(&self, _: Point) -> Result<Sym2> {
        Ok(self.0)
    }

    fn tag(&self) -> String {
        format!("const({},{},{})", self.0.a11, self.0.a12, self.0.a22)
    }
}

impl<S: SigmaFn + ?Sized> SigmaFn for Arc<S> {
    fn sigma(&self, x: Point) -> Result<Sym2> {
        (**self).sigma(x)
    }

    fn tag(&self) -> String {
        (**self).tag()
    }
}

impl<S: SigmaFn + ?Sized> SigmaFn for &S {
    fn sigma(&self, x: Point) -> Result<Sym2> {
        (**self).sigma(x)
    }

    fn tag(&self) -> String {
        (**self).tag()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::Modulus;

    #[test]
    fn eval_sigma_examples() {
        let iso = ConductivityModel::isotropic(2.0);
        let one = ScalarCoefficient::constant(1.0, 2.0);
        assert_eq!(eval_sigma(&iso, &one, [0.3, 0.1]).unwrap(), Sym2::IDENTITY);
        let lin = ScalarCoefficient::parse_expr("1+0.3*x1", 2.0, Modulus::Lipschitz(0.3)).unwrap();
        let s = eval_sigma(&iso, &lin, [1.0, 0.0]).unwrap();
        assert!((s.a11 - 1.3).abs() < 1e-15 && s.a12 == 0.0 && (s.a22 - 1.3).abs() < 1e-15);
        let aff = ConductivityModel::affine(Sym2::IDENTITY, Sym2::diag(1.0, 2.0), 4.0, 1.0).unwrap();
        let half = ScalarCoefficient::constant(0.5, 4.0);
        assert_eq!(eval_sigma(&aff, &half, [0.0, 0.0]).unwrap(), Sym2::diag(1.5, 2.0));
    }

    #[test]
    fn class_h_margins() {
        let r = verify_class_h(&ConductivityModel::isotropic(2.0), 200).unwrap();
        assert!(r.ellipticity_margin.abs() < 1e-15);
        assert!(r.monotonicity_margin.abs() < 1e-15);
        let mut m = ConductivityModel::isotropic(2.0);
        m.cal_f = 0.25;
        assert!((verify_class_h(&m, 100).unwrap().monotonicity_margin - 0.75).abs() < 1e-15);
        let aff = ConductivityModel::affine(Sym2::diag(0.5, 0.5), Sym2::diag(1.0, 2.0), 6.0, 1.0).unwrap();
        assert_eq!(verify_class_h(&aff, 100).unwrap().monotonicity_margin, 0.0);
        assert!(verify_class_h(&aff, 99).is_err());
    }

    #[test]
    fn inverse_gap_bound() {
        let m = ConductivityModel::scalar_multiple(Sym2::new(1.2, 0.3, 0.9), 3.0, 0.7).unwrap();
        let (gap, bound) = inverse_gap(&m, [0.0, 0.0], 0.8, 1.1).unwrap();
        assert!(gap >= bound && bound > 0.0);
    }
}
