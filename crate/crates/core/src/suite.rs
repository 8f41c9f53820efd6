//! The acceptance checks as a runnable suite with independent oracles.

use crate::conductivity::{
    mollify, Conductivity, ConductivityModel, ConstantSigma, Modulus, ScalarCoefficient, SigmaFn,
};
use crate::error::Result;
use crate::fem::sigma_on_triangles;
use crate::geometry::{
    augment_domain, compute_rho_sets, dist, generate_mesh, place_singularity, AugmentedDomain, GammaSpec,
    MeshDomain, Point, Shape,
};
use crate::linalg::Sym2;
use crate::maps::{
    assemble_full_dn, assemble_global_nd, assemble_local_dn, assemble_local_nd, build_trace_space, op_norm, MapKind,
    SpaceKind,
};
use crate::quadrature::{halton, triangle_deg5};
use crate::recovery::{
    map_for, recover_boundary_difference, stability_sweep, CoefficientPair, RecoveryConfig, RecoveryResult,
};
use crate::singular::{fit_power_law, AugmentedProblem, LeadingTerm, DEFAULT_KAPPA};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub const CRITERIA: [&str; 12] = [
    "disk D-N Fourier symbol",
    "N-D inverts D-N on zero-mean traces",
    "local operators are symmetric",
    "boundary pairing equals volume integral",
    "Green function against images",
    "H1 blow-up of the Green function",
    "Dirichlet singular traces vanish off Gamma",
    "Neumann singular solution fluxes",
    "boundary recovery and sign",
    "mollification bounds",
    "stability ratio robustness",
    "D-N and N-D recoveries agree",
];

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub h_mesh: f64,
    pub rho: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { h_mesh: 0.02, rho: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured
        )
    }
}

fn outcome(id: usize, passed: bool, measured: String) -> CriterionOutcome {
    let name = id.checked_sub(1).and_then(|i| CRITERIA.get(i)).copied().unwrap_or("unknown");
    CriterionOutcome { id, name, passed, measured }
}

/// Meshes, recovery runs and coefficients shared between criteria.
pub struct Suite {
    pub config: SuiteConfig,
    disk_full: OnceLock<Arc<MeshDomain>>,
    disk_upper: OnceLock<Arc<MeshDomain>>,
    augmented: OnceLock<Arc<AugmentedDomain>>,
    dn: OnceLock<Result<RecoveryResult>>,
    nd: OnceLock<Result<RecoveryResult>>,
    signs: OnceLock<Result<Vec<(f64, RecoveryResult)>>>,
}

const X0: Point = [0.0, 1.0];
const TAUS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const LAMBDA: f64 = 2.0;

pub fn isotropic_model() -> ConductivityModel {
    ConductivityModel::isotropic(LAMBDA)
}

/// Affine family `A(x,t) = M0 + t M1` with constant anisotropic matrices.
pub fn anisotropic_model() -> ConductivityModel {
    ConductivityModel::affine(Sym2::new(0.4, 0.1, 0.3), Sym2::new(1.0, 0.2, 0.6), 4.0, 1.0)
        .expect("admissible affine model")
}

pub fn smooth_coefficient() -> ScalarCoefficient {
    ScalarCoefficient::parse_expr("1+0.2*sin(2*x1)*cos(x2)", LAMBDA, Modulus::Lipschitz(0.45)).expect("valid")
}

pub fn kink_coefficient() -> ScalarCoefficient {
    ScalarCoefficient::parse_expr("1+0.2*(x1^2)^0.5", LAMBDA, Modulus::Lipschitz(0.2)).expect("valid")
}

/// Interior oscillation `sin(k x1)` under a Gaussian centred away from Γ, plus `shift`.
pub fn oscillating_coefficient(k: u32, shift: f64) -> ScalarCoefficient {
    let src = format!("1+{shift}+0.3*sin({k}*x1)*exp(-(x1^2+(x2+0.3)^2)/0.08)");
    ScalarCoefficient::parse_expr(&src, LAMBDA, Modulus::Lipschitz(0.3 * (k as f64 + 3.1))).expect("valid")
}

fn constant(c: f64) -> ScalarCoefficient {
    ScalarCoefficient::constant(c, LAMBDA)
}

fn rel_max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

impl Suite {
    pub fn new(config: SuiteConfig) -> Self {
        Suite {
            config,
            disk_full: OnceLock::new(),
            disk_upper: OnceLock::new(),
            augmented: OnceLock::new(),
            dn: OnceLock::new(),
            nd: OnceLock::new(),
            signs: OnceLock::new(),
        }
    }

    pub fn disk_full(&self) -> Arc<MeshDomain> {
        self.disk_full
            .get_or_init(|| Arc::new(generate_mesh(Shape::UnitDisk, self.config.h_mesh, GammaSpec::Full).expect("disk")))
            .clone()
    }

    pub fn disk_upper(&self) -> Arc<MeshDomain> {
        self.disk_upper
            .get_or_init(|| {
                Arc::new(
                    generate_mesh(Shape::UnitDisk, self.config.h_mesh, GammaSpec::upper_half_circle()).expect("disk"),
                )
            })
            .clone()
    }

    pub fn augmented(&self) -> Result<Arc<AugmentedDomain>> {
        if let Some(a) = self.augmented.get() {
            return Ok(a.clone());
        }
        let mesh = self.disk_upper();
        let sets = compute_rho_sets(&mesh, self.config.rho)?;
        let aug = Arc::new(augment_domain(&mesh, &sets)?);
        Ok(self.augmented.get_or_init(|| aug).clone())
    }

    fn recovery_config(&self, kind: MapKind, a: ScalarCoefficient, b: ScalarCoefficient) -> RecoveryConfig {
        RecoveryConfig::new(self.disk_upper(), self.config.rho, X0, TAUS.to_vec(), kind, isotropic_model(), a, b)
    }

    pub fn dn_recovery(&self) -> Result<&RecoveryResult> {
        self.dn
            .get_or_init(|| {
                recover_boundary_difference(&self.recovery_config(MapKind::DN, constant(1.0), constant(1.1)))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn nd_recovery(&self) -> Result<&RecoveryResult> {
        self.nd
            .get_or_init(|| {
                recover_boundary_difference(&self.recovery_config(MapKind::ND, constant(1.0), constant(1.1)))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Randomized continuous pairs with `(a − b)(x⁰) = δ` and a small linear drift of `a − b`.
    pub fn sign_pairs(&self) -> Vec<(f64, ScalarCoefficient, ScalarCoefficient)> {
        (0..5)
            .map(|i| {
                let u = halton(i, 5, 17 + self.config.seed);
                let amp = 0.15 * u[0];
                let phase = PI * u[1];
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let delta = sign * (0.05 + 0.1 * u[2]);
                let drift = 0.04 * (u[3] - 0.5);
                let a = format!("1+{amp}*sin(2*x1+{phase})*cos(x2)");
                let b = format!("{a}-({delta})+({drift})*x1");
                let ca = ScalarCoefficient::parse_expr(&a, LAMBDA, Modulus::Lipschitz(0.4)).expect("valid");
                let cb = ScalarCoefficient::parse_expr(&b, LAMBDA, Modulus::Lipschitz(0.45)).expect("valid");
                (delta, ca, cb)
            })
            .collect()
    }

    pub fn sign_recoveries(&self) -> Result<&Vec<(f64, RecoveryResult)>> {
        self.signs
            .get_or_init(|| {
                self.sign_pairs()
                    .into_iter()
                    .map(|(d, a, b)| Ok((d, recover_boundary_difference(&self.recovery_config(MapKind::DN, a, b))?)))
                    .collect()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn run(&self, id: usize) -> CriterionOutcome {
        let r = match id {
            1 => self.disk_dn_symbol(),
            2 => self.nd_inverts_dn(),
            3 => self.symmetry(),
            4 => self.pairing_identity(),
            5 => self.green_images(),
            6 => self.h1_blow_up(),
            7 => self.trace_support(),
            8 => self.neumann_flux(),
            9 => self.boundary_recovery(),
            10 => self.mollification(),
            11 => self.stability(),
            12 => self.dn_nd_agreement(),
            _ => return outcome(id, false, format!("unknown criterion {id}")),
        };
        r.unwrap_or_else(|e| outcome(id, false, format!("error {}: {e}", e.name())))
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        (1..=12).map(|i| self.run(i)).collect()
    }

    fn disk_dn_symbol(&self) -> Result<CriterionOutcome> {
        let mesh = self.disk_full();
        let st = sigma_on_triangles(&mesh, &ConstantSigma(Sym2::IDENTITY))?;
        let (nodes, lam) = assemble_full_dn(&mesh, &st)?;
        let mut worst = 0.0f64;
        for k in 1..=5 {
            for phase in [0.0, 0.5 * PI] {
                let g = nalgebra::DVector::from_iterator(
                    nodes.len(),
                    nodes.iter().map(|&i| {
                        let p = mesh.vertex(i);
                        (k as f64 * p[1].atan2(p[0]) + phase).cos()
                    }),
                );
                let form = g.dot(&(&lam * &g));
                worst = worst.max((form / (PI * k as f64) - 1.0).abs());
            }
        }
        Ok(outcome(1, worst <= 0.02, format!("max relative error {worst:.3e} over |k| <= 5 (tol 2e-2)")))
    }

    fn nd_inverts_dn(&self) -> Result<CriterionOutcome> {
        let mesh = self.disk_full();
        let cases: Vec<(&str, Box<dyn SigmaFn>)> = vec![
            ("identity", Box::new(ConstantSigma(Sym2::IDENTITY))),
            ("affine", Box::new(Conductivity::new(anisotropic_model(), smooth_coefficient(), "affine"))),
        ];
        let mut worst = 0.0f64;
        for (_, sigma) in &cases {
            let st = sigma_on_triangles(&mesh, sigma.as_ref())?;
            let (nodes, lam) = assemble_full_dn(&mesh, &st)?;
            let nd = assemble_global_nd(&mesh, sigma.as_ref())?;
            let pos: std::collections::HashMap<usize, usize> =
                nodes.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let perm: Vec<usize> = nd.space.nodes.iter().map(|i| pos[i]).collect();
            let n = perm.len();
            let lam_p = DMatrix::from_fn(n, n, |r, c| lam[(perm[r], perm[c])]);
            let proj = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            let err = (&nd.nodal * &lam_p - &proj).norm() / proj.norm();
            worst = worst.max(err);
        }
        Ok(outcome(2, worst <= 1e-8, format!("max relative residual {worst:.3e} over {} conductivities (tol 1e-8)", cases.len())))
    }

    fn symmetry(&self) -> Result<CriterionOutcome> {
        let upper = self.disk_upper();
        let full = self.disk_full();
        let square = Arc::new(generate_mesh(Shape::UnitSquare, 2.0 * self.config.h_mesh, GammaSpec::square_top())?);
        let aniso = Conductivity::new(anisotropic_model(), smooth_coefficient(), "affine");
        let iso = ConstantSigma(Sym2::IDENTITY);
        let cases: Vec<(&Arc<MeshDomain>, &dyn SigmaFn)> =
            vec![(&upper, &iso), (&upper, &aniso), (&square, &aniso), (&full, &aniso)];
        let mut worst = 0.0f64;
        let mut count = 0;
        for (mesh, sigma) in cases {
            let dn_space = Arc::new(build_trace_space(mesh, SpaceKind::HHalfCoGamma)?);
            let nd_space = Arc::new(build_trace_space(mesh, SpaceKind::HMinusHalfZeroGamma)?);
            let dn = assemble_local_dn(mesh, sigma, &dn_space)?;
            let nd = assemble_local_nd(mesh, sigma, &nd_space)?;
            worst = worst.max(dn.asymmetry()).max(nd.asymmetry());
            count += 2;
        }
        Ok(outcome(3, worst <= 1e-10, format!("max relative asymmetry {worst:.3e} over {count} operators (tol 1e-10)")))
    }

    fn pairing_identity(&self) -> Result<CriterionOutcome> {
        let mut gaps = vec![self.dn_recovery()?.max_identity_gap(), self.nd_recovery()?.max_identity_gap()];
        gaps.extend(self.sign_recoveries()?.iter().map(|(_, r)| r.max_identity_gap()));
        let worst = rel_max(gaps.iter().copied());
        Ok(outcome(4, worst <= 1e-6, format!("max relative gap {worst:.3e} over {} recovery runs (tol 1e-6)", gaps.len())))
    }

    fn green_images(&self) -> Result<CriterionOutcome> {
        let mesh = self.disk_full();
        let aug = Arc::new(AugmentedDomain::identity(mesh.clone()));
        let prob = AugmentedProblem::new(aug, Arc::new(ConstantSigma(Sym2::IDENTITY)))?;
        let z = [0.5, 0.0];
        let sol = prob.green_at(z, None)?;
        let zs = [z[0] / (z[0] * z[0] + z[1] * z[1]), z[1] / (z[0] * z[0] + z[1] * z[1])];
        let rz = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let exact = |x: Point| -(dist(x, z).ln() - (rz * dist(x, zs)).ln()) / (2.0 * PI);
        let (mut num, mut den) = (0.0, 0.0);
        for t in 0..mesh.n_triangles() {
            if dist(mesh.centroid(t), z) < 0.1 {
                continue;
            }
            let p = mesh.triangle_points(t);
            num += triangle_deg5(p, &mut |x| (sol.total(x).unwrap_or(f64::NAN) - exact(x)).powi(2));
            den += triangle_deg5(p, &mut |x| exact(x).powi(2));
        }
        let l2 = (num / den).sqrt();
        let samples: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05, 0.025].iter().map(|&r| (r, 0.7 * f64::powf(r, 1.5))).collect();
        let fit = fit_power_law(&samples)?;
        let rate_err = (fit.exponent / 1.5 - 1.0).abs();
        Ok(outcome(
            5,
            l2 <= 0.02 && rate_err <= 0.01,
            format!("relative L2 error {l2:.3e} (tol 2e-2), rate self-test error {rate_err:.1e} (tol 1e-2)"),
        ))
    }

    fn h1_blow_up(&self) -> Result<CriterionOutcome> {
        let aug = self.augmented()?;
        let mesh = self.disk_upper();
        let sets = compute_rho_sets(&mesh, self.config.rho)?;
        let prob = AugmentedProblem::new(aug, Arc::new(ConstantSigma(Sym2::IDENTITY)))?;
        let mut ratios = Vec::new();
        for tau in TAUS {
            let pl = place_singularity(&mesh, &sets, X0, tau)?;
            let g = prob.green(&pl)?;
            ratios.push(g.omega_h1_sq()? / (1.0 / tau).ln());
        }
        let hi = rel_max(ratios.iter().copied());
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(outcome(6, hi / lo <= 3.0, format!("band max/min {:.3} with ratios {:?} (tol 3)", hi / lo, round3(&ratios))))
    }

    fn trace_support(&self) -> Result<CriterionOutcome> {
        let aug = self.augmented()?;
        let mesh = self.disk_upper();
        let sets = compute_rho_sets(&mesh, self.config.rho)?;
        let mut worst = 0.0f64;
        let mut count = 0;
        let sigmas: Vec<Sym2> = vec![Sym2::IDENTITY, Sym2::new(1.5, 0.3, 0.8)];
        for s in sigmas {
            let prob = AugmentedProblem::new(aug.clone(), Arc::new(ConstantSigma(s)))?;
            for tau in [0.1, 0.025] {
                let pl = place_singularity(&mesh, &sets, X0, tau)?;
                for m in [0, 1] {
                    let term = LeadingTerm::planar(m, pl.z_tau, s, DEFAULT_KAPPA, 0.3, self.config.rho / 8.0)?;
                    let sol = prob.dirichlet_singular(&term, Some(pl))?;
                    let (out, inside) = sol.trace_support()?;
                    worst = worst.max(out / inside);
                    count += 1;
                }
            }
        }
        Ok(outcome(7, worst <= 1e-8, format!("max trace ratio off Gamma {worst:.3e} over {count} solutions (tol 1e-8)")))
    }

    fn neumann_flux(&self) -> Result<CriterionOutcome> {
        let aug = self.augmented()?;
        let mesh = self.disk_upper();
        let sets = compute_rho_sets(&mesh, self.config.rho)?;
        let (mut total, mut outside) = (0.0f64, 0.0f64);
        let mut count = 0;
        for sigma in [Sym2::IDENTITY, Sym2::new(1.5, 0.3, 0.8)] {
            let prob = AugmentedProblem::new(aug.clone(), Arc::new(ConstantSigma(sigma)))?;
            for tau in [0.1, 0.025] {
                let pl = place_singularity(&mesh, &sets, X0, tau)?;
                let sol = prob.neumann_singular(&pl, None)?;
                let f = sol.flux.as_ref().expect("Neumann solutions carry a flux report");
                total = total.max((f.total_flux + 1.0).abs());
                outside = outside.max(f.max_outside_s);
                count += 1;
            }
        }
        Ok(outcome(
            8,
            total <= 1e-8 && outside <= 1e-6,
            format!("|total flux + 1| {total:.3e} (tol 1e-8), max edge flux off S {outside:.3e} (tol 1e-6) over {count} solutions"),
        ))
    }

    fn boundary_recovery(&self) -> Result<CriterionOutcome> {
        let r = self.dn_recovery()?;
        let rel = r.relative_error().unwrap_or(f64::INFINITY);
        let signs = self.sign_recoveries()?;
        let correct = signs.iter().filter(|(d, r)| d.signum() == r.extrapolated.signum()).count();
        Ok(outcome(
            9,
            rel <= 0.15 && correct == signs.len(),
            format!(
                "extrapolated {:.5} vs target {:.5}, relative error {rel:.3e} (tol 0.15); signs {correct}/{}",
                r.extrapolated,
                r.target.unwrap_or(f64::NAN),
                signs.len()
            ),
        ))
    }

    fn mollification(&self) -> Result<CriterionOutcome> {
        let mesh = self.disk_upper();
        let rho = self.config.rho;
        let half = compute_rho_sets(&mesh, 0.5 * rho)?;
        let mut nodes: Vec<usize> = half.u_rho.iter().flat_map(|&t| mesh.triangles()[t]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let eps: Vec<f64> = (1..=4).map(|k| rho / f64::powi(2.0, k)).collect();
        let mut coeffs = vec![smooth_coefficient(), kink_coefficient(), oscillating_coefficient(8, 0.0)];
        coeffs.extend(self.sign_pairs().into_iter().flat_map(|(_, a, b)| [a, b]));
        let mut worst_pointwise = 0.0f64;
        for c in &coeffs {
            for &e in &eps {
                let ce = mollify(c, e, rho)?;
                let bound = c.omega.eval(e);
                for &i in &nodes {
                    let x = mesh.vertex(i);
                    worst_pointwise = worst_pointwise.max((ce.eval(x)? - c.eval(x)?).abs() / bound);
                }
            }
        }
        let model = isotropic_model();
        let a = smooth_coefficient();
        let mut detail = Vec::new();
        let mut maps_ok = true;
        for kind in [MapKind::DN, MapKind::ND] {
            let la = map_for(&mesh, kind, &Conductivity::new(model.clone(), a.clone(), "a"))?;
            let norm_a = op_norm(&la, &la.scaled(0.0))?;
            let mut seq = Vec::new();
            for &e in &eps {
                let ae = mollify(&a, e, rho)?;
                let le = map_for(&mesh, kind, &Conductivity::new(model.clone(), ae, "a_eps"))?;
                seq.push(op_norm(&le, &la)? / norm_a);
            }
            let monotone = seq.windows(2).all(|w| w[1] <= 1.05 * w[0]);
            let last = *seq.last().expect("nonempty");
            maps_ok &= monotone && last <= 1e-3;
            detail.push(format!("{} final {last:.2e}{}", kind.label(), if monotone { "" } else { " non-monotone" }));
        }
        Ok(outcome(
            10,
            worst_pointwise <= 1.0 && maps_ok,
            format!(
                "max |a_eps - a|/omega(eps) {worst_pointwise:.3} (tol 1) on {} coefficients; map differences {} (tol 1e-3)",
                coeffs.len(),
                detail.join(", ")
            ),
        ))
    }

    fn stability(&self) -> Result<CriterionOutcome> {
        let model = isotropic_model();
        let mut pairs: Vec<CoefficientPair> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&d| CoefficientPair::new("const1", constant(1.0), &format!("const{}", 1.0 + d), constant(1.0 + d)))
            .collect();
        for k in [2, 4, 8] {
            pairs.push(CoefficientPair::new(
                &format!("osc{k}"),
                oscillating_coefficient(k, 0.0),
                &format!("osc{k}+"),
                oscillating_coefficient(k, 0.1),
            ));
        }
        let coarse =
            Arc::new(generate_mesh(Shape::UnitDisk, 2.0 * self.config.h_mesh, GammaSpec::upper_half_circle())?);
        let fine = self.disk_upper();
        let mut spread = 0.0f64;
        let mut drift = 0.0f64;
        for kind in [MapKind::DN, MapKind::ND] {
            let rc = stability_sweep(&pairs, kind, &coarse, self.config.rho, &model)?;
            let rf = stability_sweep(&pairs, kind, &fine, self.config.rho, &model)?;
            for r in [&rc, &rf] {
                let osc: Vec<f64> = r.rows.iter().filter(|x| x.tag_a.starts_with("osc")).map(|x| x.ratio).collect();
                spread = spread.max(rel_max(osc.iter().copied()) / osc.iter().copied().fold(f64::INFINITY, f64::min));
            }
            drift = drift.max((rf.sup_ratio / rc.sup_ratio - 1.0).abs());
        }
        Ok(outcome(
            11,
            spread <= 2.0 && drift <= 0.25,
            format!("E-escalation ratio spread {spread:.4} (tol 2), sup ratio change under refinement {drift:.3e} (tol 0.25)"),
        ))
    }

    fn dn_nd_agreement(&self) -> Result<CriterionOutcome> {
        let dn = self.dn_recovery()?.extrapolated;
        let nd = self.nd_recovery()?.extrapolated;
        let rel = ((dn - nd) / dn).abs();
        Ok(outcome(12, rel <= 0.1, format!("D-N {dn:.5}, N-D {nd:.5}, relative difference {rel:.3e} (tol 0.1)")))
    }
}

fn round3(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e3).round() / 1e3).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criteria_fail() {
        let suite = Suite::new(SuiteConfig { h_mesh: 0.1, ..SuiteConfig::default() });
        let o = suite.run(13);
        assert!(!o.passed);
        assert_eq!(o.id, 13);
        assert!(o.to_string().starts_with("[FAIL]"));
    }

    #[test]
    fn symmetry_holds_on_a_coarse_mesh() {
        let suite = Suite::new(SuiteConfig { h_mesh: 0.1, ..SuiteConfig::default() });
        let o = suite.run(3);
        assert!(o.passed, "{o}");
    }
}
