use super::envelope::EnvelopeCholesky;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Systems above this size use preconditioned conjugate gradients.
pub const DIRECT_DOF_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    DirectCholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearSystemStats {
    pub dof_count: usize,
    pub solver: SolverKind,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(EnvelopeCholesky),
    Iterative { inv_diag: Vec<f64> },
}

/// A factored (or preconditioned) SPD system that can be solved repeatedly.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: CsrMatrix,
    backend: Backend,
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        Self::with_limit(matrix, DIRECT_DOF_LIMIT)
    }

    pub fn with_limit(matrix: CsrMatrix, direct_limit: usize) -> Result<Self> {
        let backend = if matrix.n() <= direct_limit {
            Backend::Direct(EnvelopeCholesky::factor(&matrix)?)
        } else {
            let d = matrix.diagonal();
            if let Some(&p) = d.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::SingularSystem { pivot: p });
            }
            Backend::Iterative { inv_diag: d.iter().map(|v| 1.0 / v).collect() }
        };
        Ok(SpdSolver { matrix, backend })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> SolverKind {
        match self.backend {
            Backend::Direct(_) => SolverKind::DirectCholesky,
            Backend::Iterative { .. } => SolverKind::ConjugateGradient,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_with_stats(b)?.0)
    }

    pub fn solve_with_stats(&self, b: &[f64]) -> Result<(Vec<f64>, LinearSystemStats)> {
        let (x, cond) = match &self.backend {
            Backend::Direct(f) => {
                let mut x = f.solve(b);
                // one step of iterative refinement
                let r = residual(&self.matrix, &x, b);
                let dx = f.solve(&r);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
                (x, f.condition_estimate())
            }
            Backend::Iterative { inv_diag } => {
                let x = pcg(&self.matrix, b, inv_diag, 1e-13, 20 * self.n().max(100))?;
                let dmax = inv_diag.iter().fold(0.0f64, |m, v| m.max(*v));
                let dmin = inv_diag.iter().fold(f64::INFINITY, |m, v| m.min(*v));
                (x, dmax / dmin)
            }
        };
        let r = residual(&self.matrix, &x, b);
        let stats = LinearSystemStats {
            dof_count: self.n(),
            solver: self.kind(),
            residual_norm: norm2(&r),
            condition_estimate: cond,
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularSystem { pivot: f64::NAN });
        }
        Ok((x, stats))
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, b: &[f64], inv_diag: &[f64], rtol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::SingularSystem { pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= rtol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::TripletBuilder;

    fn grid_laplacian(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut b = TripletBuilder::new(n);
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                b.add(k, k, 4.0);
                if i + 1 < m {
                    b.add(k, k + m, -1.0);
                    b.add(k + m, k, -1.0);
                }
                if j + 1 < m {
                    b.add(k, k + 1, -1.0);
                    b.add(k + 1, k, -1.0);
                }
            }
        }
        b.build()
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = grid_laplacian(12);
        let b: Vec<f64> = (0..144).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let d = SpdSolver::new(a.clone()).unwrap();
        let it = SpdSolver::with_limit(a, 10).unwrap();
        let (x1, s1) = d.solve_with_stats(&b).unwrap();
        let (x2, s2) = it.solve_with_stats(&b).unwrap();
        assert_eq!(s1.solver, SolverKind::DirectCholesky);
        assert_eq!(s2.solver, SolverKind::ConjugateGradient);
        assert!(s1.residual_norm <= 1e-10 * norm2(&b));
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
