use super::kernel::Fundamental;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::Sym2;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Homogeneous singular term `c_n |J(x−z)|^{2−n−m} S_m(J(x−z)/|J(x−z)|)`,
/// with `c_n log|J(x−z)| S_0` when `n = 2, m = 0`.
///
/// In the plane `S_m(θ) = κ cos(mθ + φ₀)`; in higher dimensions `S_0 = κ`
/// and `S_1(ω) = κ ω₁`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LeadingTerm {
    pub n: usize,
    pub m: usize,
    pub z: Vec<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub j: DMatrix<f64>,
    pub kappa: f64,
    pub phi0: f64,
    pub c_n: f64,
    pub r0: f64,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

/// Default harmonic amplitude, leaving margin in the gradient lower bound.
pub const DEFAULT_KAPPA: f64 = 2.0;

impl LeadingTerm {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, m: usize, z: Vec<f64>, j: DMatrix<f64>, kappa: f64, phi0: f64, c_n: f64, r0: f64) -> Result<Self> {
        if n < 2 || z.len() != n || j.nrows() != n || j.ncols() != n {
            return Err(Error::InvalidInput(format!("dimension mismatch for n = {n}")));
        }
        if n > 2 && m > 1 {
            return Err(Error::InvalidInput(format!("harmonic degree {m} is only available for n = 2")));
        }
        if crate::linalg::dense::asymmetry(&j) > 1e-12 || crate::linalg::dense::sym_eigenvalues(&j)[0] <= 0.0 {
            return Err(Error::InvalidInput("J must be symmetric positive definite".into()));
        }
        if kappa == 0.0 || !kappa.is_finite() {
            return Err(Error::InvalidInput("harmonic amplitude must be nonzero".into()));
        }
        Ok(LeadingTerm { n, m, z, j, kappa, phi0, c_n, r0 })
    }

    /// Planar term with `J = √(σ(z)⁻¹)` and unit prefactor.
    pub fn planar(m: usize, z: Point, sigma_z: Sym2, kappa: f64, phi0: f64, r0: f64) -> Result<Self> {
        let j = sigma_z.inverse().ok_or_else(|| Error::NotAdmissible("matrix is not positive definite".into()))?.sqrt();
        Self::new(2, m, z.to_vec(), DMatrix::from_row_slice(2, 2, &[j.a11, j.a12, j.a12, j.a22]), kappa, phi0, 1.0, r0)
    }

    /// The frozen-coefficient fundamental solution at `z` as a leading term.
    pub fn green(z: Point, sigma_z: Sym2, r0: f64) -> Result<Self> {
        let mut t = Self::planar(0, z, sigma_z, 1.0, 0.0, r0)?;
        t.c_n = -1.0 / (2.0 * PI * sigma_z.det().sqrt());
        Ok(t)
    }

    pub fn z2(&self) -> Point {
        [self.z[0], self.z[1]]
    }

    pub fn j2(&self) -> Sym2 {
        Sym2::new(self.j[(0, 0)], self.j[(0, 1)], self.j[(1, 1)])
    }

    /// `‖J² σ − I‖` for a candidate `σ(z)`.
    pub fn j_sigma_residual(&self, sigma_z: &DMatrix<f64>) -> f64 {
        (&self.j * &self.j * sigma_z - DMatrix::identity(self.n, self.n)).norm()
    }

    /// Equivalent log kernel when `n = 2, m = 0`.
    pub fn as_kernel(&self) -> Option<Fundamental> {
        if self.n != 2 || self.m != 0 {
            return None;
        }
        let j = self.j2();
        let sigma_z = j.sandwich(&Sym2::IDENTITY).inverse()?;
        Some(Fundamental { z: self.z2(), sigma_z, m: sigma_z.inverse()?, c0: -0.5 * self.c_n * self.kappa })
    }

    /// Degree-m spherical harmonic and its angular derivative at angle θ (planar case).
    pub fn harmonic(&self, theta: f64) -> (f64, f64) {
        let a = self.m as f64 * theta + self.phi0;
        (self.kappa * a.cos(), -self.kappa * self.m as f64 * a.sin())
    }
}

/// Value and gradient of a leading term at `x ≠ z`.
pub fn eval_leading(term: &LeadingTerm, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = term.n;
    if x.len() != n {
        return Err(Error::InvalidInput(format!("point has {} coordinates, expected {n}", x.len())));
    }
    let d = DVector::from_iterator(n, x.iter().zip(&term.z).map(|(a, b)| a - b));
    let y = &term.j * d;
    let r = y.norm();
    if r == 0.0 {
        return Err(Error::EvalAtSingularity);
    }
    let c = term.c_n;
    let m = term.m as f64;
    let (value, gy) = if n == 2 {
        let theta = y[1].atan2(y[0]);
        let (s, ds) = term.harmonic(theta);
        let w = DVector::from_vec(vec![y[0] / r, y[1] / r]);
        let wp = DVector::from_vec(vec![-y[1] / r, y[0] / r]);
        if term.m == 0 {
            (c * r.ln() * s, w * (c * s / r))
        } else {
            let rm = r.powf(-m);
            (c * rm * s, (w * (-m * s) + wp * ds) * (c * rm / r))
        }
    } else {
        let k = 2.0 - n as f64 - m;
        if term.m == 0 {
            (c * term.kappa * r.powf(k), &y * (c * term.kappa * k * r.powf(k - 2.0)))
        } else {
            let rn = r.powf(-(n as f64));
            let mut g = &y * (-(n as f64) * y[0] * rn / (r * r));
            g[0] += rn;
            (c * term.kappa * y[0] * rn, g * (c * term.kappa))
        }
    };
    let gx = term.j.transpose() * gy;
    Ok((value, gx.iter().copied().collect()))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradientBoundRow {
    pub radius: f64,
    pub min_gradient: f64,
    pub bound: f64,
    /// `min_gradient / bound − 1`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradientBoundReport {
    pub rows: Vec<GradientBoundRow>,
    pub holds: bool,
}

/// Compares `min_{|x−z|=r} |∇u|` with `r^{1−(n+m)}` on sampled spheres.
pub fn check_gradient_lower_bound(term: &LeadingTerm, radii: &[f64]) -> Result<GradientBoundReport> {
    let dirs = sample_directions(term.n, 720);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut min_g = f64::INFINITY;
        for w in &dirs {
            let x: Vec<f64> = term.z.iter().zip(w).map(|(z, wi)| z + r * wi).collect();
            let (_, g) = eval_leading(term, &x)?;
            min_g = min_g.min(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let bound = r.powf(1.0 - (term.n + term.m) as f64);
        let margin = min_g / bound - 1.0;
        rows.push(GradientBoundRow { radius: r, min_gradient: min_g, bound, margin: if margin.abs() < 1e-12 { 0.0 } else { margin } });
    }
    let holds = rows.iter().all(|r| r.margin >= 0.0);
    Ok(GradientBoundReport { rows, holds })
}

fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let zc = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let rr = (1.0 - zc * zc).sqrt();
            let t = golden * k as f64;
            let mut v = vec![0.0; n];
            v[0] = rr * t.cos();
            v[1] = rr * t.sin();
            v[2] = zc;
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(n: usize, m: usize, kappa: f64) -> LeadingTerm {
        LeadingTerm::new(n, m, vec![0.0; n], DMatrix::identity(n, n), kappa, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn three_dimensional_newtonian_value() {
        let (v, g) = eval_leading(&term(3, 0, 1.0), &[2.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!((g.iter().map(|x| x * x).sum::<f64>().sqrt() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn planar_log_vanishes_on_unit_circle() {
        let (v, _) = eval_leading(&term(2, 0, 1.0), &[0.6, 0.8]).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(matches!(eval_leading(&term(2, 0, 1.0), &[0.0, 0.0]), Err(Error::EvalAtSingularity)));
    }

    #[test]
    fn dipole_is_harmonic() {
        let t = term(2, 1, 1.0);
        let x = [0.3, 0.4];
        let (v, _) = eval_leading(&t, &x).unwrap();
        assert!((v - 0.6 / 0.5).abs() < 1e-14);
        let h = 1e-3;
        let f = |a: f64, b: f64| eval_leading(&t, &[a, b]).unwrap().0;
        let lap = (f(x[0] + h, x[1]) + f(x[0] - h, x[1]) + f(x[0], x[1] + h) + f(x[0], x[1] - h) - 4.0 * v) / (h * h);
        assert!(lap.abs() < 1e-4);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (n, m) in [(2, 0), (2, 1), (2, 3), (3, 0), (3, 1), (4, 1)] {
            let mut j = DMatrix::identity(n, n);
            j[(0, 0)] = 1.3;
            j[(0, 1)] = 0.2;
            j[(1, 0)] = 0.2;
            let t = LeadingTerm::new(n, m, vec![0.1; n], j, 2.0, 0.4, 1.0, 1.0).unwrap();
            let mut x = vec![0.5; n];
            x[1] = -0.3;
            let (_, g) = eval_leading(&t, &x).unwrap();
            for k in 0..n {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (eval_leading(&t, &xp).unwrap().0 - eval_leading(&t, &xm).unwrap().0) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()), "n={n} m={m} k={k}");
            }
        }
    }

    #[test]
    fn gradient_lower_bound_cases() {
        let r = check_gradient_lower_bound(&term(3, 0, 2.0), &[0.1]).unwrap();
        assert!((r.rows[0].min_gradient - 200.0).abs() < 1e-9 && r.holds);
        let r = check_gradient_lower_bound(&term(2, 1, 2.0), &[0.1, 0.05]).unwrap();
        assert!(r.rows.iter().all(|row| (row.margin - 1.0).abs() < 1e-9));
        let r = check_gradient_lower_bound(&term(3, 0, 1.0), &[0.1]).unwrap();
        assert_eq!(r.rows[0].margin, 0.0);
    }

    #[test]
    fn green_term_matches_kernel() {
        let s = Sym2::new(1.0, 0.2, 4.0);
        let t = LeadingTerm::green([0.2, 0.1], s, 0.1).unwrap();
        let k = Fundamental::new([0.2, 0.1], s).unwrap();
        let x = [0.7, -0.4];
        assert!((eval_leading(&t, &x).unwrap().0 - k.value(x)).abs() < 1e-14);
        let kk = t.as_kernel().unwrap();
        assert!((kk.value(x) - k.value(x)).abs() < 1e-14);
        let sig = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 4.0]);
        assert!(t.j_sigma_residual(&sig) < 1e-12);
    }
}
