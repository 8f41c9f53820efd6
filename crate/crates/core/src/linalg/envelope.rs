use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> =
                a.row(v).map(|(j, _)| j).filter(|&j| j != v && !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &CsrMatrix, start: usize, level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut touched = vec![start];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        for (j, _) in a.row(v) {
            if level[j] == usize::MAX {
                level[j] = level[v] + 1;
                depth = depth.max(level[j]);
                touched.push(j);
                queue.push_back(j);
            }
        }
    }
    (depth, touched)
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut level = vec![usize::MAX; a.n()];
    let mut current = seed;
    let (mut depth, mut touched) = bfs_levels(a, current, &mut level);
    for _ in 0..8 {
        let candidate = touched
            .iter()
            .copied()
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(current);
        for &v in &touched {
            level[v] = usize::MAX;
        }
        let (d, t) = bfs_levels(a, candidate, &mut level);
        touched = t;
        if d <= depth {
            break;
        }
        depth = d;
        current = candidate;
    }
    current
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ` under an RCM ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let c = inv[j];
                if c < first[new] {
                    first[new] = c;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let c = inv[j];
                if c <= new {
                    values[start[new] + c - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let k0 = fi.max(fj);
                let mut s = values[ri + j - fi];
                let a_row = &values[ri + k0 - fi..ri + j - fi];
                let b_row = &values[rj + k0 - fj..rj + j - fj];
                s -= dot(a_row, b_row);
                values[ri + j - fi] = s / values[rj + j - fj];
            }
            let row = &values[ri..ri + i - fi];
            let d = values[ri + i - fi] - dot(row, row);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularSystem { pivot: d });
            }
            values[ri + i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky { n, perm, first, start, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.values[self.start[i + 1] - 1]
    }

    /// `(max L_ii / min L_ii)²`, a cheap lower-bound style condition estimate.
    pub fn condition_estimate(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.n {
            let d = self.diag(i);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if self.n == 0 {
            1.0
        } else {
            (hi / lo).powi(2)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i];
            let s = dot(&self.values[ri..ri + i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / self.diag(i);
        }
        for i in (0..n).rev() {
            y[i] /= self.diag(i);
            let yi = y[i];
            let fi = self.first[i];
            let ri = self.start[i];
            for (k, l) in self.values[ri..ri + i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::TripletBuilder;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        assert!(matches!(
            EnvelopeCholesky::factor(&b.build()),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn rcm_is_permutation_for_disconnected_graph() {
        let mut b = TripletBuilder::new(5);
        for i in 0..5 {
            b.add(i, i, 1.0);
        }
        b.add(0, 3, 1.0);
        b.add(3, 0, 1.0);
        let mut p = reverse_cuthill_mckee(&b.build());
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }
}
