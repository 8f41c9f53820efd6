use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::Sym2;
use crate::quadrature::SegmentQuadratic;
use std::f64::consts::PI;

/// Frozen-coefficient logarithmic kernel `Φ(x) = −c₀ log q(x)`, `q = (x−z)·σ(z)⁻¹(x−z)`.
///
/// With `c₀ = 1/(4π√det σ(z))` this is the fundamental solution of
/// `−div(σ(z)∇Φ) = δ_z`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Fundamental {
    pub z: Point,
    pub sigma_z: Sym2,
    /// `σ(z)⁻¹`.
    pub m: Sym2,
    pub c0: f64,
}

impl Fundamental {
    pub fn new(z: Point, sigma_z: Sym2) -> Result<Self> {
        let m = sigma_z.inverse().ok_or_else(|| Error::NotAdmissible("matrix is not positive definite".into()))?;
        if !(sigma_z.eigenvalues().0 > 0.0) {
            return Err(Error::NotAdmissible("matrix is not positive definite".into()));
        }
        Ok(Fundamental { z, sigma_z, m, c0: 1.0 / (4.0 * PI * sigma_z.det().sqrt()) })
    }

    /// Same kernel with a different prefactor.
    pub fn scaled(&self, factor: f64) -> Self {
        Fundamental { c0: self.c0 * factor, ..*self }
    }

    fn d(&self, x: Point) -> Point {
        [x[0] - self.z[0], x[1] - self.z[1]]
    }

    pub fn q(&self, x: Point) -> f64 {
        let d = self.d(x);
        self.m.form(d, d)
    }

    pub fn value(&self, x: Point) -> f64 {
        -self.c0 * self.q(x).ln()
    }

    pub fn grad(&self, x: Point) -> Point {
        let d = self.d(x);
        let md = self.m.apply(d);
        let s = -2.0 * self.c0 / self.m.form(d, d);
        [s * md[0], s * md[1]]
    }

    /// `σ(z)∇Φ(x)`.
    pub fn flux(&self, x: Point) -> Point {
        let d = self.d(x);
        let s = -2.0 * self.c0 / self.m.form(d, d);
        [s * d[0], s * d[1]]
    }

    fn segment(&self, a: Point, b: Point) -> SegmentQuadratic {
        SegmentQuadratic::new(a, [b[0] - a[0], b[1] - a[1]], self.z, &self.m)
    }

    /// `∫_{[a,b]} Φ ds`.
    pub fn edge_integral(&self, a: Point, b: Point) -> f64 {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        -self.c0 * len * self.segment(a, b).int_log()
    }

    /// `∫_T ∇Φ dx` by the divergence theorem (valid even when z ∈ T).
    pub fn triangle_grad_integral(&self, p: [Point; 3]) -> Point {
        let orient = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).signum();
        let mut s = [0.0; 2];
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            let n = [orient * (b[1] - a[1]), -orient * (b[0] - a[0])];
            let v = -self.c0 * self.segment(a, b).int_log();
            s[0] += n[0] * v;
            s[1] += n[1] * v;
        }
        s
    }

    /// `(∫ σ(z)∂_νΦ φ_a, ∫ σ(z)∂_νΦ φ_b)` on a boundary edge with outward normal to the right of `a → b`.
    pub fn edge_flux_loads(&self, a: Point, b: Point) -> (f64, f64) {
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        let nu = [e[1] / len, -e[0] / len];
        let dn = (a[0] - self.z[0]) * nu[0] + (a[1] - self.z[1]) * nu[1];
        let seg = self.segment(a, b);
        let (i0, i1) = (seg.int_inv(), seg.int_s_inv());
        let k = -2.0 * self.c0 * dn * len;
        (k * (i0 - i1), k * i1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_on, triangle_adaptive};

    fn kernel() -> Fundamental {
        Fundamental::new([0.3, -0.2], Sym2::new(2.0, 0.4, 1.0)).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = kernel();
        let x = [0.9, 0.4];
        let h = 1e-6;
        let g = f.grad(x);
        let gx = (f.value([x[0] + h, x[1]]) - f.value([x[0] - h, x[1]])) / (2.0 * h);
        let gy = (f.value([x[0], x[1] + h]) - f.value([x[0], x[1] - h])) / (2.0 * h);
        assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
    }

    #[test]
    fn frozen_operator_annihilates_kernel() {
        let f = kernel();
        let h = 1e-4;
        let x = [0.8, 0.5];
        let div = |p: Point| {
            let a = f.flux([p[0] + h, p[1]])[0] - f.flux([p[0] - h, p[1]])[0];
            let b = f.flux([p[0], p[1] + h])[1] - f.flux([p[0], p[1] - h])[1];
            (a + b) / (2.0 * h)
        };
        assert!(div(x).abs() < 1e-6);
    }

    #[test]
    fn unit_flux_through_a_loop() {
        let f = kernel();
        let sq = [[-1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [-1.0, 2.0]];
        let mut total = 0.0;
        for k in 0..4 {
            let (a, b) = (sq[k], sq[(k + 1) % 4]);
            let (fa, fb) = f.edge_flux_loads(a, b);
            total += fa + fb;
        }
        assert!((total + 1.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_gradient_integral_agrees_with_quadrature() {
        let f = kernel();
        let p = [[0.5, 0.1], [1.2, 0.3], [0.7, 0.9]];
        let g = f.triangle_grad_integral(p);
        let gx = triangle_adaptive(p, &mut |x| f.grad(x)[0], 1e-13, 6);
        let gy = triangle_adaptive(p, &mut |x| f.grad(x)[1], 1e-13, 6);
        assert!((g[0] - gx).abs() < 1e-10 && (g[1] - gy).abs() < 1e-10);
        let a = [0.5, 0.1];
        let b = [1.2, 0.3];
        let brute: f64 = gauss_on(0.0, 1.0, 40)
            .map(|(s, w)| w * f.value([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
            .sum::<f64>()
            * ((0.7f64).powi(2) + 0.04).sqrt();
        assert!((f.edge_integral(a, b) - brute).abs() < 1e-12);
    }
}
