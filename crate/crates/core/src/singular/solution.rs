use super::kernel::Fundamental;
use super::leading::{eval_leading, LeadingTerm};
use crate::conductivity::SigmaFn;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness_on, gradient_loads, sigma_on_triangles, DirichletProblem, FemField, FieldKind, NeumannProblem,
};
use crate::geometry::{barycentric, dist, AugmentedDomain, MeshDomain, Point, SingularityPlacement};
use crate::linalg::{LinearSystemStats, Sym2};
use crate::quadrature::{triangle_adaptive, triangle_deg5};
use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    DirichletZeroOnBoundary,
    NeumannZeroOutsideS,
}

/// Weak boundary fluxes of a Neumann-type singular solution.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FluxReport {
    /// `Σ_i ∫_{∂Ω_ρ} σ∇u·ν φ_i`.
    pub total_flux: f64,
    /// Flux through S.
    pub s_flux: f64,
    /// Largest nodal flux on boundary nodes away from S.
    pub max_outside_s: f64,
    /// Nodal flux loads on ∂Ω seen from inside Ω (indexed by Ω vertices).
    pub omega_loads: Vec<f64>,
    /// Largest |load| removed from Δ before projection, relative to the largest load.
    pub delta_leak: f64,
}

/// Leading term plus FEM corrector on Ω_ρ.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub leading: LeadingTerm,
    pub kernel: Option<Fundamental>,
    pub corrector: FemField,
    pub bc_kind: BcKind,
    pub placement: Option<SingularityPlacement>,
    pub original: Arc<MeshDomain>,
    pub sigma_tag: String,
    pub stats: LinearSystemStats,
    pub flux: Option<FluxReport>,
}

impl SingularSolution {
    pub fn z(&self) -> Point {
        self.leading.z2()
    }

    pub fn leading_value(&self, x: Point) -> Result<f64> {
        match &self.kernel {
            Some(k) => {
                if x == k.z {
                    Err(Error::EvalAtSingularity)
                } else {
                    Ok(k.value(x))
                }
            }
            None => Ok(eval_leading(&self.leading, &x)?.0),
        }
    }

    pub fn leading_grad(&self, x: Point) -> Result<Point> {
        match &self.kernel {
            Some(k) => Ok(k.grad(x)),
            None => {
                let g = eval_leading(&self.leading, &x)?.1;
                Ok([g[0], g[1]])
            }
        }
    }

    /// Leading term plus interpolated corrector.
    pub fn total(&self, x: Point) -> Result<f64> {
        let c = self.corrector.eval(x).ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
        Ok(self.leading_value(x)? + c)
    }

    /// Total at every vertex of Ω (indices shared with Ω_ρ).
    pub fn omega_nodal(&self) -> Result<Vec<f64>> {
        (0..self.original.n_vertices())
            .map(|i| Ok(self.leading_value(self.original.vertex(i))? + self.corrector.values[i]))
            .collect()
    }

    /// Trace on ∂Ω: (max over Δ and the Γ endpoints, max over Γ nodes).
    pub fn trace_support(&self) -> Result<(f64, f64)> {
        let u = self.omega_nodal()?;
        let gamma: HashSet<usize> = self.original.gamma_interior_nodes().into_iter().collect();
        let (mut outside, mut inside) = (0.0f64, 0.0f64);
        for &i in self.original.boundary_nodes() {
            if gamma.contains(&i) {
                inside = inside.max(u[i].abs());
            } else {
                outside = outside.max(u[i].abs());
            }
        }
        Ok((outside, inside))
    }

    /// `(∫_Ω G², ∫_Ω |∇G|²)` with near-field adaptive quadrature.
    pub fn omega_l2_h1_semi(&self) -> Result<(f64, f64)> {
        let mesh = &self.original;
        let z = self.z();
        let (mut m, mut k) = (0.0, 0.0);
        for t in 0..mesh.n_triangles() {
            let p = mesh.triangle_points(t);
            let tri = mesh.triangles()[t];
            let w = [self.corrector.values[tri[0]], self.corrector.values[tri[1]], self.corrector.values[tri[2]]];
            let gw = self.corrector.gradient(t);
            let near = dist(mesh.centroid(t), z) < 4.0 * diameter(p);
            let mut err = None;
            let mut val = |x: Point| {
                let b = barycentric(x, p[0], p[1], p[2]);
                let r = b[0] * w[0] + b[1] * w[1] + b[2] * w[2];
                match self.leading_value(x) {
                    Ok(v) => (v + r).powi(2),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            };
            let vm = if near { triangle_adaptive(p, &mut val, 1e-12, 8) } else { triangle_deg5(p, &mut val) };
            let mut grad = |x: Point| match self.leading_grad(x) {
                Ok(g) => (g[0] + gw[0]).powi(2) + (g[1] + gw[1]).powi(2),
                Err(_) => 0.0,
            };
            let vk = if near { triangle_adaptive(p, &mut grad, 1e-12, 8) } else { triangle_deg5(p, &mut grad) };
            if let Some(e) = err {
                return Err(e);
            }
            m += vm;
            k += vk;
        }
        Ok((m, k))
    }

    /// `‖G‖²_{H¹(Ω)}`.
    pub fn omega_h1_sq(&self) -> Result<f64> {
        let (m, k) = self.omega_l2_h1_semi()?;
        Ok(m + k)
    }

    /// JSON record of the leading-term parameters.
    pub fn to_sidecar(&self) -> String {
        let v = serde_json::json!({
            "z": self.leading.z,
            "J": [[self.leading.j[(0, 0)], self.leading.j[(0, 1)]], [self.leading.j[(1, 0)], self.leading.j[(1, 1)]]],
            "m": self.leading.m,
            "kappa": self.leading.kappa,
            "phi0": self.leading.phi0,
            "c_n": self.leading.c_n,
            "r0": self.leading.r0,
            "bc_kind": self.bc_kind,
            "sigma_tag": self.sigma_tag,
        });
        serde_json::to_string_pretty(&v).expect("serializable sidecar")
    }
}

fn diameter(p: [Point; 3]) -> f64 {
    dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
}

/// A conductivity on Ω_ρ with lazily factored Dirichlet and Neumann problems.
pub struct AugmentedProblem {
    pub aug: Arc<AugmentedDomain>,
    sigma: Arc<dyn SigmaFn>,
    sigma_t: Vec<Sym2>,
    dirichlet: OnceLock<Result<DirichletProblem>>,
    neumann: OnceLock<Result<NeumannProblem>>,
}

impl std::fmt::Debug for AugmentedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AugmentedProblem").field("sigma", &self.sigma.tag()).finish_non_exhaustive()
    }
}

/// Adaptive tolerance for pointwise volume sources.
const SOURCE_TOL: f64 = 1e-10;

impl AugmentedProblem {
    pub fn new(aug: Arc<AugmentedDomain>, sigma: Arc<dyn SigmaFn>) -> Result<Self> {
        let sigma_t = sigma_on_triangles(&aug.mesh, sigma.as_ref())?;
        Ok(AugmentedProblem { aug, sigma, sigma_t, dirichlet: OnceLock::new(), neumann: OnceLock::new() })
    }

    pub fn sigma(&self) -> &Arc<dyn SigmaFn> {
        &self.sigma
    }

    pub fn sigma_t(&self) -> &[Sym2] {
        &self.sigma_t
    }

    pub fn mesh(&self) -> &Arc<MeshDomain> {
        &self.aug.mesh
    }

    pub fn dirichlet(&self) -> Result<&DirichletProblem> {
        self.dirichlet
            .get_or_init(|| DirichletProblem::new(self.aug.mesh.clone(), &self.sigma_t))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn neumann(&self) -> Result<&NeumannProblem> {
        self.neumann
            .get_or_init(|| NeumannProblem::new(self.aug.mesh.clone(), &self.sigma_t))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Smallest admissible distance from a source to ∂Ω_ρ.
    pub fn min_source_distance(&self) -> f64 {
        if self.aug.rho > 0.0 {
            self.aug.rho / 8.0
        } else {
            2.0 * self.aug.mesh.mesh_size()
        }
    }

    fn check_source(&self, z: Point) -> Result<()> {
        let min = self.min_source_distance();
        if !self.aug.mesh.contains(z) {
            return Err(Error::SourceTooCloseToBoundary { dist: 0.0, min });
        }
        let d = self.aug.mesh.boundary_distance(z).0;
        if d < min {
            return Err(Error::SourceTooCloseToBoundary { dist: d, min });
        }
        Ok(())
    }

    fn kernel_gradient_integrals(&self, k: &Fundamental) -> Vec<[f64; 2]> {
        let mesh = &self.aug.mesh;
        (0..mesh.n_triangles()).map(|t| k.triangle_grad_integral(mesh.triangle_points(t))).collect()
    }

    /// Loads `−Σ_T (σ_T − σ(z)) ∫_T ∇Φ · ∇φ_i`.
    fn frozen_source(&self, sigma_z: Sym2, grad_int: &[[f64; 2]]) -> Vec<f64> {
        let mesh = &self.aug.mesh;
        let tris: Vec<usize> = (0..mesh.n_triangles()).collect();
        let vecs: Vec<[f64; 2]> = grad_int
            .iter()
            .zip(&self.sigma_t)
            .map(|(g, s)| {
                let v = (*s - sigma_z).apply(*g);
                [-v[0], -v[1]]
            })
            .collect();
        gradient_loads(mesh, &tris, &vecs)
    }

    /// Loads `−∫ (σ(x) − σ(z)) ∇u·∇φ_i` with pointwise σ, graded toward z.
    fn pointwise_source(&self, term: &LeadingTerm, sigma_z: Sym2) -> Result<Vec<f64>> {
        let mesh = &self.aug.mesh;
        let z = term.z2();
        let tris: Vec<usize> = (0..mesh.n_triangles()).collect();
        let mut vecs = Vec::with_capacity(tris.len());
        for &t in &tris {
            let p = mesh.triangle_points(t);
            let near = dist(mesh.centroid(t), z) < 4.0 * diameter(p);
            let mut comp = [0.0; 2];
            for (c, slot) in comp.iter_mut().enumerate() {
                let mut err = None;
                let mut f = |x: Point| {
                    let r = self.sigma.sigma(x).and_then(|s| {
                        let g = eval_leading(term, &x)?.1;
                        Ok((s - sigma_z).apply([g[0], g[1]])[c])
                    });
                    r.unwrap_or_else(|e| {
                        if e != Error::EvalAtSingularity {
                            err = Some(e);
                        }
                        0.0
                    })
                };
                *slot = if near { triangle_adaptive(p, &mut f, SOURCE_TOL, 10) } else { triangle_deg5(p, &mut f) };
                if let Some(e) = err {
                    return Err(e);
                }
            }
            vecs.push([-comp[0], -comp[1]]);
        }
        Ok(gradient_loads(mesh, &tris, &vecs))
    }

    /// Singular solution vanishing on ∂Ω_ρ for a degree-0 or degree-1 leading term.
    pub fn dirichlet_singular(
        &self,
        term: &LeadingTerm,
        placement: Option<SingularityPlacement>,
    ) -> Result<SingularSolution> {
        self.dirichlet_inner(term, placement, FieldKind::Corrector)
    }

    fn dirichlet_inner(
        &self,
        term: &LeadingTerm,
        placement: Option<SingularityPlacement>,
        kind: FieldKind,
    ) -> Result<SingularSolution> {
        if term.n != 2 {
            return Err(Error::InvalidInput("correctors are computed in two dimensions only".into()));
        }
        if term.m > 1 {
            return Err(Error::InvalidInput(format!("no corrector for harmonic degree {}", term.m)));
        }
        let z = term.z2();
        self.check_source(z)?;
        let j = term.j2();
        let sigma_z = j
            .sandwich(&Sym2::IDENTITY)
            .inverse()
            .ok_or_else(|| Error::NotAdmissible("J is singular".into()))?;
        let mesh = &self.aug.mesh;
        let kernel = term.as_kernel();
        let load = match &kernel {
            Some(k) => self.frozen_source(sigma_z, &self.kernel_gradient_integrals(k)),
            None => self.pointwise_source(term, sigma_z)?,
        };
        let lead = |x: Point| -> Result<f64> {
            match &kernel {
                Some(k) => Ok(k.value(x)),
                None => Ok(eval_leading(term, &x)?.0),
            }
        };
        let mut g = vec![0.0; mesh.n_vertices()];
        for &i in mesh.boundary_nodes() {
            g[i] = -lead(mesh.vertex(i))?;
        }
        let problem = self.dirichlet()?;
        let (w, stats) = problem.solve(&g, Some(&load))?;
        Ok(SingularSolution {
            leading: term.clone(),
            kernel,
            corrector: FemField::new(mesh.clone(), w, kind)?,
            bc_kind: BcKind::DirichletZeroOnBoundary,
            placement,
            original: self.aug.original.clone(),
            sigma_tag: self.sigma.tag(),
            stats,
            flux: None,
        })
    }

    /// Green function with zero trace on ∂Ω_ρ and source at `z`.
    pub fn green_at(&self, z: Point, placement: Option<SingularityPlacement>) -> Result<SingularSolution> {
        let sigma_z = self.sigma.sigma(z)?;
        let r0 = if self.aug.rho > 0.0 { self.aug.rho / 8.0 } else { self.aug.mesh.boundary_distance(z).0 / 2.0 };
        let term = LeadingTerm::green(z, sigma_z, r0)?;
        self.dirichlet_inner(&term, placement, FieldKind::GreenRemainder)
    }

    pub fn green(&self, placement: &SingularityPlacement) -> Result<SingularSolution> {
        self.green_at(placement.z_tau, Some(*placement))
    }

    /// Singular solution with flux `−1/|S|` on the patch S and zero flux elsewhere on ∂Ω_ρ.
    pub fn neumann_singular(&self, placement: &SingularityPlacement, s_patch: Option<&[usize]>) -> Result<SingularSolution> {
        let z = placement.z_tau;
        self.check_source(z)?;
        let mesh = &self.aug.mesh;
        let patch = s_patch.unwrap_or(&self.aug.s_patch);
        let s_len: f64 = patch
            .iter()
            .map(|&e| {
                let [a, b] = mesh.boundary_edges()[e].nodes;
                dist(mesh.vertex(a), mesh.vertex(b))
            })
            .sum();
        if !(s_len > 0.0) {
            return Err(Error::IncompatibleFlux { integral: -1.0, norm: 0.0 });
        }
        let sigma_z = self.sigma.sigma(z)?;
        let kernel = Fundamental::new(z, sigma_z)?;
        let term = LeadingTerm::green(z, sigma_z, self.aug.rho / 8.0)?;
        let grad_int = self.kernel_gradient_integrals(&kernel);
        let mut load = self.frozen_source(sigma_z, &grad_int);
        let mut psi = vec![0.0; mesh.n_vertices()];
        let mut s_nodes = HashSet::new();
        for &e in patch {
            let [a, b] = mesh.boundary_edges()[e].nodes;
            let half = 0.5 * dist(mesh.vertex(a), mesh.vertex(b)) / s_len;
            psi[a] -= half;
            psi[b] -= half;
            s_nodes.insert(a);
            s_nodes.insert(b);
        }
        for e in mesh.boundary_edges() {
            let [a, b] = e.nodes;
            let (fa, fb) = kernel.edge_flux_loads(mesh.vertex(a), mesh.vertex(b));
            load[a] -= fa;
            load[b] -= fb;
        }
        for (l, p) in load.iter_mut().zip(&psi) {
            *l += p;
        }
        let problem = self.neumann()?;
        let (w, stats) = problem.solve_loads(&load)?;

        let sig_grad: Vec<[f64; 2]> = grad_int.iter().zip(&self.sigma_t).map(|(g, s)| s.apply(*g)).collect();
        let all: Vec<usize> = (0..mesh.n_triangles()).collect();
        let kw = problem.stiffness().mul_vec(&w);
        let extra = gradient_loads(mesh, &all, &sig_grad);
        let flux: Vec<f64> = kw.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let total_flux: f64 = mesh.boundary_nodes().iter().map(|&i| flux[i]).sum();
        let s_flux: f64 = s_nodes.iter().map(|&i| flux[i]).sum();
        let max_outside_s = mesh
            .boundary_nodes()
            .iter()
            .filter(|i| !s_nodes.contains(i))
            .map(|&i| flux[i].abs())
            .fold(0.0, f64::max);

        let omega = &self.aug.original;
        let omega_tris: Vec<usize> = (0..omega.n_triangles()).collect();
        let k_omega = assemble_stiffness_on(mesh, &self.sigma_t, omega_tris.iter().copied());
        let kw_o = k_omega.mul_vec(&w);
        let og: Vec<[f64; 2]> = omega_tris.iter().map(|&t| sig_grad[t]).collect();
        let extra_o = gradient_loads(mesh, &omega_tris, &og);
        let gamma: HashSet<usize> = omega.gamma_path().iter().copied().collect();
        let mut omega_loads = vec![0.0; omega.n_vertices()];
        let mut leak = 0.0f64;
        let mut peak = 0.0f64;
        for &i in omega.boundary_nodes() {
            let v = kw_o[i] + extra_o[i];
            peak = peak.max(v.abs());
            if gamma.contains(&i) {
                omega_loads[i] = v;
            } else {
                leak = leak.max(v.abs());
            }
        }
        let weights = omega.boundary_weights();
        let wsum: f64 = omega.gamma_path().iter().map(|&i| weights[i]).sum();
        let excess: f64 = omega_loads.iter().sum();
        for &i in omega.gamma_path() {
            omega_loads[i] -= excess * weights[i] / wsum;
        }
        Ok(SingularSolution {
            leading: term,
            kernel: Some(kernel),
            corrector: FemField::new(mesh.clone(), w, FieldKind::Corrector)?,
            bc_kind: BcKind::NeumannZeroOutsideS,
            placement: Some(*placement),
            original: omega.clone(),
            sigma_tag: self.sigma.tag(),
            stats,
            flux: Some(FluxReport {
                total_flux,
                s_flux,
                max_outside_s,
                omega_loads,
                delta_leak: if peak > 0.0 { leak / peak } else { 0.0 },
            }),
        })
    }
}

/// Least-squares power law `f ≈ C r^k`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientRadii(samples.len()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, v)| (r.ln(), v.abs().max(1e-300).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let k = sxy / sxx;
    let c = my - k * mx;
    let residual = (pts.iter().map(|p| (p.1 - c - k * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { exponent: k, log_prefactor: c, residual, samples: samples.to_vec() })
}

/// Slope of `log max_{|x−z|=r} |corrector|` against `log r`.
pub fn fit_remainder_rate(sol: &SingularSolution, radii: &[f64]) -> Result<RateFit> {
    if radii.len() < 4 {
        return Err(Error::InsufficientRadii(radii.len()));
    }
    let z = sol.z();
    let samples: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let m = (0..64)
                .filter_map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / 64.0;
                    sol.corrector.eval([z[0] + r * t.cos(), z[1] + r * t.sin()])
                })
                .fold(0.0f64, |a, v| a.max(v.abs()));
            (r, m)
        })
        .collect();
    fit_power_law(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::ConstantSigma;
    use crate::geometry::{augment_domain, compute_rho_sets, generate_mesh, place_singularity, GammaSpec, Shape};

    fn problem(sigma: Sym2) -> (AugmentedProblem, SingularityPlacement) {
        let mesh = Arc::new(generate_mesh(Shape::UnitDisk, 0.08, GammaSpec::upper_half_circle()).unwrap());
        let sets = compute_rho_sets(&mesh, 1.0).unwrap();
        let aug = Arc::new(augment_domain(&mesh, &sets).unwrap());
        let pl = place_singularity(&mesh, &sets, [0.0, 1.0], 0.1).unwrap();
        (AugmentedProblem::new(aug, Arc::new(ConstantSigma(sigma))).unwrap(), pl)
    }

    #[test]
    fn green_vanishes_on_the_augmented_boundary() {
        let (p, pl) = problem(Sym2::new(1.5, 0.3, 0.8));
        let g = p.green(&pl).unwrap();
        let mesh = p.mesh();
        let worst = mesh
            .boundary_nodes()
            .iter()
            .map(|&i| (g.leading_value(mesh.vertex(i)).unwrap() + g.corrector.values[i]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert_eq!(g.bc_kind, BcKind::DirichletZeroOnBoundary);
        assert!(g.to_sidecar().contains("\"bc_kind\": \"dirichlet_zero_on_boundary\""));
    }

    #[test]
    fn neumann_flux_concentrates_on_the_patch() {
        let (p, pl) = problem(Sym2::IDENTITY);
        let sol = p.neumann_singular(&pl, None).unwrap();
        let f = sol.flux.unwrap();
        assert!((f.total_flux + 1.0).abs() < 1e-10);
        assert!((f.s_flux + 1.0).abs() < 1e-10);
        assert!(f.max_outside_s < 1e-10);
    }

    #[test]
    fn sources_outside_are_refused() {
        let (p, pl) = problem(Sym2::IDENTITY);
        let far = SingularityPlacement { z_tau: [5.0, 5.0], ..pl };
        assert!(matches!(p.green(&far), Err(Error::SourceTooCloseToBoundary { .. })));
    }

    #[test]
    fn power_law_fit_is_exact_on_monomials() {
        let s: Vec<(f64, f64)> = [0.1, 0.2, 0.3, 0.5, 0.8].iter().map(|&r: &f64| (r, 3.0 * r.powf(1.7))).collect();
        let fit = fit_power_law(&s).unwrap();
        assert!((fit.exponent - 1.7).abs() < 1e-12);
        assert!((fit.log_prefactor - 3.0f64.ln()).abs() < 1e-12);
        assert!(matches!(fit_power_law(&s[..3]), Err(Error::InsufficientRadii(3))));
    }
}
