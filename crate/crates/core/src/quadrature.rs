//! Quadrature rules, quasi-random sequences and closed-form segment integrals.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.into_iter().zip(w).map(move |(x, w)| (m + r * x, r * w))
}

/// Symmetric 7-point rule of degree 5 on the reference triangle.
/// Entries are barycentric coordinates and weights summing to 1.
pub const TRIANGLE_DEG5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Integrates `f` over a triangle with the degree-5 rule.
pub fn triangle_deg5(p: [[f64; 2]; 3], f: &mut impl FnMut([f64; 2]) -> f64) -> f64 {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    let mut s = 0.0;
    for (l, w) in TRIANGLE_DEG5 {
        let x = [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ];
        s += w * f(x);
    }
    s * area
}

/// Adaptive integration over a triangle by uniform 4-way splitting.
pub fn triangle_adaptive(
    p: [[f64; 2]; 3],
    f: &mut impl FnMut([f64; 2]) -> f64,
    abs_tol: f64,
    max_depth: usize,
) -> f64 {
    let coarse = triangle_deg5(p, f);
    adapt(p, f, coarse, abs_tol, max_depth)
}

fn adapt(
    p: [[f64; 2]; 3],
    f: &mut impl FnMut([f64; 2]) -> f64,
    coarse: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let (m01, m12, m20) = (mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0]));
    let kids = [[p[0], m01, m20], [m01, p[1], m12], [m20, m12, p[2]], [m12, m20, m01]];
    let vals: Vec<f64> = kids.iter().map(|k| triangle_deg5(*k, f)).collect();
    let fine: f64 = vals.iter().sum();
    if depth == 0 || (fine - coarse).abs() <= tol {
        return fine;
    }
    kids.iter().zip(vals).map(|(k, v)| adapt(*k, f, v, 0.25 * tol, depth - 1)).sum()
}

/// Radical-inverse (van der Corput) value of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Point `i` of the Halton sequence in `[0,1)^dim` (dim ≤ 8), skipping `offset` leading points.
pub fn halton(i: u64, dim: usize, offset: u64) -> Vec<f64> {
    PRIMES[..dim].iter().map(|&b| radical_inverse(i + offset + 1, b)).collect()
}

/// Quadratic `q(s) = a s² + 2 b s + c` on `s ∈ [0,1]`, positive away from its root line.
#[derive(Debug, Clone, Copy)]
pub struct SegmentQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SegmentQuadratic {
    /// `q(s) = d(s)·M d(s)` with `d(s) = p + s e − z`.
    pub fn new(p: [f64; 2], e: [f64; 2], z: [f64; 2], m: &crate::linalg::Sym2) -> Self {
        let d = [p[0] - z[0], p[1] - z[1]];
        SegmentQuadratic { a: m.form(e, e), b: m.form(e, d), c: m.form(d, d) }
    }

    fn shift_and_k(&self) -> (f64, f64) {
        let u0 = self.b / self.a;
        let k2 = ((self.a * self.c - self.b * self.b) / (self.a * self.a)).max(0.0);
        (u0, k2.sqrt())
    }

    /// `∫₀¹ log q(s) ds`.
    pub fn int_log(&self) -> f64 {
        let (u0, k) = self.shift_and_k();
        let la = self.a.ln();
        let prim = |u: f64| -> f64 {
            let r2 = u * u + k * k;
            let l = if u == 0.0 { 0.0 } else { u * (la + r2.ln()) };
            let t = if k > 0.0 { 2.0 * k * (u / k).atan() } else { 0.0 };
            l - 2.0 * u + t
        };
        prim(u0 + 1.0) - prim(u0)
    }

    /// `∫₀¹ ds / q(s)`; requires the root line to miss the segment.
    pub fn int_inv(&self) -> f64 {
        let (u0, k) = self.shift_and_k();
        if k == 0.0 {
            return (1.0 / u0 - 1.0 / (u0 + 1.0)) / self.a;
        }
        let d = ((u0 + 1.0) / k).atan() - (u0 / k).atan();
        d / (self.a * k)
    }

    /// `∫₀¹ s ds / q(s)`.
    pub fn int_s_inv(&self) -> f64 {
        let (u0, k) = self.shift_and_k();
        let u1 = u0 + 1.0;
        let l = ((u1 * u1 + k * k) / (u0 * u0 + k * k)).ln() / (2.0 * self.a);
        l - u0 * self.int_inv()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Sym2;

    #[test]
    fn gauss_integrates_polynomials() {
        let s: f64 = gauss_on(0.0, 2.0, 5).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn deg5_rule_is_exact_for_quintics() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let v = triangle_deg5(p, &mut |x| x[0].powi(5));
        assert!((v - 1.0 / 42.0).abs() < 1e-14);
        let v = triangle_deg5(p, &mut |x| x[0].powi(2) * x[1].powi(3));
        assert!((v - 2.0 * 6.0 / 5040.0).abs() < 1e-14);
    }

    fn brute(q: &SegmentQuadratic, f: impl Fn(f64, f64) -> f64) -> f64 {
        gauss_on(0.0, 1.0, 60).map(|(s, w)| w * f(s, q.a * s * s + 2.0 * q.b * s + q.c)).sum()
    }

    #[test]
    fn segment_integrals_match_quadrature() {
        let m = Sym2::new(1.3, 0.2, 0.7);
        let q = SegmentQuadratic::new([0.3, 0.9], [0.4, -0.2], [0.1, 0.2], &m);
        assert!((q.int_log() - brute(&q, |_, v| v.ln())).abs() < 1e-12);
        assert!((q.int_inv() - brute(&q, |_, v| 1.0 / v)).abs() < 1e-12);
        assert!((q.int_s_inv() - brute(&q, |s, v| s / v)).abs() < 1e-12);
    }

    #[test]
    fn halton_is_in_unit_cube() {
        for i in 0..100 {
            assert!(halton(i, 3, 0).iter().all(|v| (0.0..1.0).contains(v)));
        }
        assert_eq!(radical_inverse(1, 2), 0.5);
    }
}
