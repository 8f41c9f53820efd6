use super::expr::Expr;
use crate::error::{Error, Result};
use crate::geometry::{dist, AugmentedDomain, MeshDomain, Point};
use crate::quadrature::{gauss_legendre, gauss_on};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

/// Modulus of continuity ω.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Modulus {
    /// ω(δ) = ℓ δ.
    Lipschitz(f64),
    /// ω(δ) = c δ^α.
    Holder { c: f64, alpha: f64 },
    /// Nondecreasing table `(δ, ω)` estimated from samples; not a certified bound.
    Estimated(Vec<(f64, f64)>),
}

impl Modulus {
    pub fn eval(&self, delta: f64) -> f64 {
        match self {
            Modulus::Lipschitz(l) => l * delta,
            Modulus::Holder { c, alpha } => c * delta.powf(*alpha),
            Modulus::Estimated(t) => t.iter().find(|(d, _)| *d >= delta).or(t.last()).map_or(0.0, |p| p.1),
        }
    }

    pub fn scaled(&self, s: f64) -> Modulus {
        match self {
            Modulus::Lipschitz(l) => Modulus::Lipschitz(s * l),
            Modulus::Holder { c, alpha } => Modulus::Holder { c: s * c, alpha: *alpha },
            Modulus::Estimated(t) => Modulus::Estimated(t.iter().map(|&(d, w)| (d, s * w)).collect()),
        }
    }

    pub fn is_certified(&self) -> bool {
        !matches!(self, Modulus::Estimated(_))
    }
}

#[derive(Debug, Clone)]
enum Field {
    Expr(Expr),
    Nodal { mesh: Arc<MeshDomain>, values: Arc<Vec<f64>> },
    Extended { base: Arc<ScalarCoefficient>, domain: Arc<MeshDomain> },
    Mollified { base: Arc<ScalarCoefficient>, eps: f64, kernel: Arc<Vec<(Point, f64)>> },
}

/// Scalar coefficient a(x) with bounds `[λ⁻¹, λ]`, norm bound E and modulus ω.
#[derive(Debug, Clone)]
pub struct ScalarCoefficient {
    field: Field,
    pub lambda: f64,
    pub w1p_bound: Option<f64>,
    pub omega: Modulus,
}

impl ScalarCoefficient {
    pub fn expr(e: Expr, lambda: f64, omega: Modulus) -> Self {
        ScalarCoefficient { field: Field::Expr(e), lambda, w1p_bound: None, omega }
    }

    pub fn constant(c: f64, lambda: f64) -> Self {
        Self::expr(Expr::constant(c), lambda, Modulus::Lipschitz(0.0))
    }

    pub fn parse_expr(src: &str, lambda: f64, omega: Modulus) -> Result<Self> {
        Ok(Self::expr(Expr::parse(src)?, lambda, omega))
    }

    pub fn nodal(mesh: Arc<MeshDomain>, values: Vec<f64>, lambda: f64, omega: Modulus) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "nodal coefficient has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite nodal coefficient".into()));
        }
        Ok(ScalarCoefficient { field: Field::Nodal { mesh, values: Arc::new(values) }, lambda, w1p_bound: None, omega })
    }

    pub fn with_w1p_bound(mut self, e: f64) -> Self {
        self.w1p_bound = Some(e);
        self
    }

    pub fn eval(&self, x: Point) -> Result<f64> {
        match &self.field {
            Field::Expr(e) => Ok(e.eval(x)),
            Field::Nodal { mesh, values } => {
                mesh.interpolate(values, x).ok_or(Error::OutOfDomain { x: x[0], y: x[1] })
            }
            Field::Extended { base, domain } => {
                if domain.contains(x) {
                    return base.eval(x);
                }
                let v = match base.eval(x) {
                    Ok(v) => v,
                    Err(Error::OutOfDomain { .. }) => {
                        let (_, p) = domain.boundary_distance(x);
                        let y = [2.0 * p[0] - x[0], 2.0 * p[1] - x[1]];
                        if domain.contains(y) {
                            base.eval(y)?
                        } else {
                            base.eval(p)?
                        }
                    }
                    Err(e) => return Err(e),
                };
                Ok(v.clamp(1.0 / self.lambda, self.lambda))
            }
            Field::Mollified { base, kernel, .. } => {
                let mut s = 0.0;
                for &(y, w) in kernel.iter() {
                    s += w * base.eval([x[0] - y[0], x[1] - y[1]])?;
                }
                Ok(s)
            }
        }
    }

    /// Mollification radius, if this field is a mollification.
    pub fn epsilon(&self) -> Option<f64> {
        match &self.field {
            Field::Mollified { eps, .. } => Some(*eps),
            _ => None,
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match &self.field {
            Field::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn nodal_values(&self) -> Option<&[f64]> {
        match &self.field {
            Field::Nodal { values, .. } => Some(values),
            _ => None,
        }
    }

    /// Values at every vertex of `mesh`.
    pub fn sample(&self, mesh: &MeshDomain) -> Result<Vec<f64>> {
        mesh.vertices().iter().map(|&v| self.eval(v)).collect()
    }

    /// Smallest signed margin of `λ⁻¹ ≤ a ≤ λ` over the vertices of `mesh`.
    pub fn bounds_margin(&self, mesh: &MeshDomain) -> Result<f64> {
        let lo = 1.0 / self.lambda;
        Ok(self.sample(mesh)?.iter().map(|&a| (a - lo).min(self.lambda - a)).fold(f64::INFINITY, f64::min))
    }

    /// `coef nodal N` + values, or `coef expr <source>`.
    pub fn to_text(&self) -> Result<String> {
        match &self.field {
            Field::Expr(e) => Ok(format!("coef expr {e}\n")),
            Field::Nodal { values, .. } => {
                let mut s = format!("coef nodal {}\n", values.len());
                for v in values.iter() {
                    let _ = writeln!(s, "{}", crate::geometry::fmt17(*v));
                }
                Ok(s)
            }
            _ => Err(Error::InvalidInput("derived coefficients have no text form".into())),
        }
    }

    pub fn from_text(text: &str, mesh: Option<Arc<MeshDomain>>, lambda: f64, omega: Modulus) -> Result<Self> {
        let t = text.trim_start();
        let first = t.lines().next().unwrap_or("");
        if let Some(src) = first.strip_prefix("coef expr ") {
            return Self::parse_expr(src, lambda, omega);
        }
        if let Some(n) = first.strip_prefix("coef nodal ") {
            let n: usize = n.trim().parse().map_err(|_| Error::Parse("bad nodal count".into()))?;
            let values: Vec<f64> = t
                .lines()
                .skip(1)
                .flat_map(|l| l.split_whitespace())
                .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{s}`"))))
                .collect::<Result<_>>()?;
            if values.len() != n {
                return Err(Error::Parse(format!("expected {n} nodal values, found {}", values.len())));
            }
            let mesh = mesh.ok_or_else(|| Error::InvalidInput("nodal coefficient needs a mesh".into()))?;
            return Self::nodal(mesh, values, lambda, omega);
        }
        Err(Error::Parse("coefficient must start with `coef expr` or `coef nodal`".into()))
    }
}

/// Extends a coefficient from Ω to Ω_ρ (and beyond).
///
/// Closed forms keep their formula; nodal fields are reflected across the
/// nearest boundary point. Values off Ω are clipped to `[λ⁻¹, λ]`.
pub fn extend_coefficient(coeff: &ScalarCoefficient, aug: &AugmentedDomain) -> ScalarCoefficient {
    ScalarCoefficient {
        field: Field::Extended { base: Arc::new(coeff.clone()), domain: aug.original.clone() },
        lambda: coeff.lambda,
        w1p_bound: coeff.w1p_bound,
        omega: coeff.omega.scaled(2.0),
    }
}

/// The unnormalized bump `exp(−1/(1−s²))` for `s < 1`.
pub fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// `∫_{B_1} bump(|y|) dy` by high-order Gauss quadrature.
pub fn bump_mass() -> f64 {
    let (x, w) = gauss_legendre(400);
    TAU * x.iter().zip(&w).map(|(&t, &wt)| {
        let s = 0.5 * (t + 1.0);
        0.5 * wt * bump(s) * s
    }).sum::<f64>()
}

const RADIAL_NODES: usize = 24;
const ANGULAR_NODES: usize = 32;

/// Polar product rule for the normalized bump kernel on `B_ε`; weights sum to 1.
pub fn mollifier_rule(eps: f64) -> Vec<(Point, f64)> {
    let mass = bump_mass();
    let mut rule = Vec::with_capacity(RADIAL_NODES * ANGULAR_NODES);
    for (s, ws) in gauss_on(0.0, 1.0, RADIAL_NODES) {
        let radial = ws * bump(s) * s / mass * (TAU / ANGULAR_NODES as f64);
        for j in 0..ANGULAR_NODES {
            let th = (j as f64 + 0.5) * TAU / ANGULAR_NODES as f64;
            rule.push(([eps * s * th.cos(), eps * s * th.sin()], radial));
        }
    }
    let total: f64 = rule.iter().map(|r| r.1).sum();
    for r in &mut rule {
        r.1 /= total;
    }
    rule
}

/// Convolution with the mass-one bump kernel of radius ε ≤ ρ/2.
pub fn mollify(coeff: &ScalarCoefficient, epsilon: f64, rho: f64) -> Result<ScalarCoefficient> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon > 0.5 * rho {
        return Err(Error::EpsilonTooLarge { eps: epsilon, limit: 0.5 * rho });
    }
    Ok(ScalarCoefficient {
        field: Field::Mollified { base: Arc::new(coeff.clone()), eps: epsilon, kernel: Arc::new(mollifier_rule(epsilon)) },
        lambda: coeff.lambda,
        w1p_bound: coeff.w1p_bound,
        omega: coeff.omega.clone(),
    })
}

/// Estimates ω from pairwise quotients over the given points (non-certified).
pub fn estimate_modulus(coeff: &ScalarCoefficient, points: &[Point], bins: usize) -> Result<Modulus> {
    let vals: Vec<f64> = points.iter().map(|&p| coeff.eval(p)).collect::<Result<_>>()?;
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist(points[i], points[j]);
            if d > 0.0 {
                dmax = dmax.max(d);
                dmin = dmin.min(d);
            }
        }
    }
    if !dmax.is_finite() || dmax == 0.0 {
        return Ok(Modulus::Estimated(vec![(0.0, 0.0)]));
    }
    let bins = bins.max(2);
    let edges: Vec<f64> =
        (0..bins).map(|k| dmin * (dmax / dmin).powf(k as f64 / (bins - 1) as f64)).collect();
    let mut w = vec![0.0f64; bins];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist(points[i], points[j]);
            let k = edges.partition_point(|&e| e < d).min(bins - 1);
            w[k] = w[k].max((vals[i] - vals[j]).abs());
        }
    }
    for k in 1..bins {
        w[k] = w[k].max(w[k - 1]);
    }
    Ok(Modulus::Estimated(edges.into_iter().zip(w).collect()))
}

/// W^{1,p}(Ω) norm of the P1 interpolant of `a` on `mesh`.
pub fn w1p_norm(coeff: &ScalarCoefficient, mesh: &MeshDomain, p: f64) -> Result<f64> {
    let v = coeff.sample(mesh)?;
    let mut s = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let g = crate::fem::p1_gradient(pts, [v[tri[0]], v[tri[1]], v[tri[2]]]);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let mean = (v[tri[0]].abs().powf(p) + v[tri[1]].abs().powf(p) + v[tri[2]].abs().powf(p)) / 3.0;
        s += area * (mean + gn.powf(p));
    }
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let r = mollifier_rule(0.3);
        let m: f64 = r.iter().map(|p| p.1).sum();
        assert!((m - 1.0).abs() < 1e-14);
        let first: f64 = r.iter().map(|p| p.1 * p.0[0]).sum();
        assert!(first.abs() < 1e-15);
        assert!(r.iter().all(|(y, _)| (y[0] * y[0] + y[1] * y[1]).sqrt() < 0.3));
        let (x, w) = gauss_legendre(600);
        let alt = TAU * x.iter().zip(&w).map(|(&t, &wt)| 0.5 * wt * bump(0.5 * (t + 1.0)) * 0.5 * (t + 1.0)).sum::<f64>();
        assert!((alt - bump_mass()).abs() < 1e-12);
    }

    #[test]
    fn mollify_preserves_constants_and_linears() {
        let c = ScalarCoefficient::constant(1.7, 2.0);
        let ce = mollify(&c, 0.1, 1.0).unwrap();
        assert!((ce.eval([0.2, 0.4]).unwrap() - 1.7).abs() < 1e-14);
        let l = ScalarCoefficient::parse_expr("x1", 2.0, Modulus::Lipschitz(1.0)).unwrap();
        let le = mollify(&l, 0.1, 1.0).unwrap();
        assert!((le.eval([0.3, -0.2]).unwrap() - 0.3).abs() < 1e-14);
        assert!(matches!(mollify(&l, 0.51, 1.0), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn modulus_evaluation() {
        assert_eq!(Modulus::Lipschitz(2.0).eval(0.25), 0.5);
        assert!((Modulus::Holder { c: 1.0, alpha: 0.5 }.eval(0.25) - 0.5).abs() < 1e-15);
        let e = Modulus::Estimated(vec![(0.1, 0.2), (0.2, 0.3)]);
        assert_eq!(e.eval(0.15), 0.3);
        assert!(!e.is_certified());
    }
}
