use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym);
    let q = &eig.eigenvectors;
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let qd = q * DMatrix::from_diagonal(&d);
    symmetrize(&(qd * q.transpose()))
}

pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(a, |l| l.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(a, |l| 1.0 / l.sqrt())
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Relative asymmetry `‖A − Aᵀ‖_F / ‖A‖_F`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        0.0
    } else {
        (a - a.transpose()).norm() / n
    }
}

/// Largest singular value of `L⁻¹ D L⁻ᵀ` where `G = L Lᵀ` (Cholesky).
pub fn whitened_norm(d: &DMatrix<f64>, gram: &DMatrix<f64>) -> Option<f64> {
    let chol = gram.clone().cholesky()?;
    let l = chol.l();
    let x = l.solve_lower_triangular(d)?;
    let y = l.solve_lower_triangular(&x.transpose())?;
    Some(y.singular_values().iter().fold(0.0f64, |m, v| m.max(*v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_round_trip() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let s = sym_sqrt(&a);
        assert!((&s * &s - &a).norm() < 1e-12);
        let is = sym_inv_sqrt(&a);
        assert!((&is * &a * &is - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn whitened_identity_has_norm_one() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!((whitened_norm(&g, &g).unwrap() - 1.0).abs() < 1e-12);
    }
}
