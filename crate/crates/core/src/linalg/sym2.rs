use std::ops::{Add, Mul, Sub};

/// Symmetric 2x2 matrix stored as `[a11, a12, a22]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };
    pub const ZERO: Sym2 = Sym2 { a11: 0.0, a12: 0.0, a22: 0.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Sym2 { a11: d1, a12: 0.0, a22: d2 }
    }

    pub fn scaled(s: f64) -> Self {
        Sym2::diag(s, s)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d.abs() < f64::MIN_POSITIVE || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.a22 / d, -self.a12 / d, self.a11 / d))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * self.trace();
        let r = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (m - r, m + r)
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn norm(&self) -> f64 {
        let (l0, l1) = self.eigenvalues();
        l0.abs().max(l1.abs())
    }

    /// Principal square root of a positive semidefinite matrix.
    pub fn sqrt(&self) -> Sym2 {
        // sqrt(A) = (A + sqrt(det) I) / sqrt(tr + 2 sqrt(det)) for 2x2 SPD.
        let s = self.det().max(0.0).sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Sym2::new((self.a11 + s) / t, self.a12 / t, (self.a22 + s) / t)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// Quadratic form `u . A v`.
    pub fn form(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let av = self.apply(v);
        u[0] * av[0] + u[1] * av[1]
    }

    /// Matrix product `self * other * self`, symmetric by construction.
    pub fn sandwich(&self, other: &Sym2) -> Sym2 {
        let (a, b, c) = (self.a11, self.a12, self.a22);
        let (p, q, r) = (other.a11, other.a12, other.a22);
        // rows of self*other
        let m11 = a * p + b * q;
        let m12 = a * q + b * r;
        let m21 = b * p + c * q;
        let m22 = b * q + c * r;
        Sym2::new(m11 * a + m12 * b, m11 * b + m12 * c, m21 * b + m22 * c)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = Sym2::new(2.0, 0.3, 1.5);
        let s = a.sqrt();
        let back = s.sandwich(&Sym2::IDENTITY);
        assert!((back.a11 - a.a11).abs() < 1e-14);
        assert!((back.a12 - a.a12).abs() < 1e-14);
        assert!((back.a22 - a.a22).abs() < 1e-14);
    }

    #[test]
    fn inverse_and_eigen() {
        let a = Sym2::diag(1.0, 4.0);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, Sym2::diag(1.0, 0.25));
        assert_eq!(a.eigenvalues(), (1.0, 4.0));
        assert!(Sym2::ZERO.inverse().is_none());
    }
}
