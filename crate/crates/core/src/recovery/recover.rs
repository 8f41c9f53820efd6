use super::normalizer::normalizer;
use super::pairing::{flux_on_gamma, pairing, scatter, trace_on_gamma};
use crate::conductivity::{
    extend_coefficient, mollify, Conductivity, ConductivityModel, ScalarCoefficient, SigmaFn,
};
use crate::error::{Error, Result};
use crate::fem::{sigma_on_triangles, DirichletProblem, NeumannProblem};
use crate::geometry::{
    augment_domain, compute_rho_sets, dist, place_singularity, tau0, AugmentedDomain, MeshDomain, Point, RhoSets,
};
use crate::linalg::Sym2;
use crate::maps::{
    build_trace_space, energy_split, local_dn_from_problem, nd_from_problem, op_norm, LocalOperator, MapKind,
    SpaceKind,
};
use crate::singular::AugmentedProblem;
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::sync::Arc;

/// Model used to extrapolate δ̂(τ) to τ → 0 by linear least squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// `δ̂(τ) ≈ δ + (c₁ + c₂τ)/K(τ)`; falls back to `InverseNormalizer` below three values of τ.
    DriftingNormalizer,
    /// `s = 1/K(τ)`.
    InverseNormalizer,
    /// `s = 1/log(1/τ)`.
    InverseLog,
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub mesh: Arc<MeshDomain>,
    pub rho: f64,
    pub x0: Point,
    pub tau_schedule: Vec<f64>,
    pub map_kind: MapKind,
    pub model: ConductivityModel,
    pub coeff_a: ScalarCoefficient,
    pub coeff_b: ScalarCoefficient,
    pub tag_a: String,
    pub tag_b: String,
    pub r0: f64,
    pub extrapolation: Extrapolation,
}

impl RecoveryConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: Arc<MeshDomain>,
        rho: f64,
        x0: Point,
        tau_schedule: Vec<f64>,
        map_kind: MapKind,
        model: ConductivityModel,
        coeff_a: ScalarCoefficient,
        coeff_b: ScalarCoefficient,
    ) -> Self {
        RecoveryConfig {
            mesh,
            rho,
            x0,
            tau_schedule,
            map_kind,
            model,
            coeff_a,
            coeff_b,
            tag_a: "a".into(),
            tag_b: "b".into(),
            r0: 0.5 * rho,
            extrapolation: Extrapolation::DriftingNormalizer,
        }
    }

    pub fn with_tags(mut self, a: &str, b: &str) -> Self {
        self.tag_a = a.into();
        self.tag_b = b.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_schedule.is_empty() {
            return Err(Error::InvalidInput("empty tau schedule".into()));
        }
        if self.tau_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("tau schedule must be strictly decreasing".into()));
        }
        let t0 = tau0(self.rho);
        for &t in &self.tau_schedule {
            if !(t > 0.0 && t < t0) {
                return Err(Error::TauTooLarge { tau: t, reason: format!("tau must lie in (0, {t0})") });
            }
            if !(2.0 * t < self.r0) {
                return Err(Error::TauTooLarge { tau: t, reason: format!("tau must be below r0/2 = {}", self.r0 / 2.0) });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TauRow {
    pub tau: f64,
    pub z: Point,
    pub pairing: f64,
    pub normalizer: f64,
    pub delta_hat: f64,
    /// Volume form of the pairing.
    pub volume_pairing: f64,
    /// `|P − P_vol| / |P|`.
    pub identity_gap: f64,
    /// Volume contribution from `B_{r0}(z)`.
    pub near_field: f64,
    /// Volume contribution from the rest of Ω.
    pub far_field: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RecoveryResult {
    pub map_kind: MapKind,
    pub tag_a: String,
    pub tag_b: String,
    pub per_tau: Vec<TauRow>,
    pub extrapolated: f64,
    pub extrapolation: Extrapolation,
    pub fit_residual: f64,
    pub target: Option<f64>,
    /// Successive differences of δ̂ shrink along the schedule.
    pub cauchy: bool,
}

impl RecoveryResult {
    pub fn max_identity_gap(&self) -> f64 {
        self.per_tau.iter().map(|r| r.identity_gap).fold(0.0, f64::max)
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| ((self.extrapolated - t) / t).abs())
    }

    /// `pair_a,pair_b,tau,P,K,delta_hat` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_a,pair_b,tau,P,K,delta_hat\n");
        for r in &self.per_tau {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{:.12e},{:.12e}",
                self.tag_a, self.tag_b, r.tau, r.pairing, r.normalizer, r.delta_hat
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "recovery {} {}/{}: extrapolated {:.6e}",
            self.map_kind.label(),
            self.tag_a,
            self.tag_b,
            self.extrapolated
        );
        if let Some(t) = self.target {
            let _ = write!(s, " target {t:.6e}");
        }
        let _ = write!(s, " identity gap {:.2e}", self.max_identity_gap());
        if !self.cauchy {
            s.push_str(" NonMonotoneEstimates");
        }
        s
    }
}

/// Least squares `y ≈ Σ c_k columns_k`; returns the coefficients and the rms residual.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let a = DMatrix::from_fn(y.len(), columns.len(), |i, k| columns[k][i]);
    let b = DVector::from_column_slice(y);
    let c = a.clone().svd(true, true).solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(columns.len()));
    let r = (&a * &c - &b).norm() / (y.len() as f64).sqrt();
    (c.iter().copied().collect(), r)
}

/// Extrapolated value at τ → 0 and the fit residual.
pub fn extrapolate(rows: &[TauRow], model: Extrapolation) -> (f64, f64) {
    let y: Vec<f64> = rows.iter().map(|r| r.delta_hat).collect();
    if rows.len() == 1 {
        return (y[0], 0.0);
    }
    let ones = vec![1.0; rows.len()];
    let inv_k: Vec<f64> = rows.iter().map(|r| 1.0 / r.normalizer).collect();
    let columns = match model {
        Extrapolation::DriftingNormalizer if rows.len() >= 3 => {
            vec![ones, inv_k, rows.iter().map(|r| r.tau / r.normalizer).collect()]
        }
        Extrapolation::DriftingNormalizer | Extrapolation::InverseNormalizer => vec![ones, inv_k],
        Extrapolation::InverseLog => vec![ones, rows.iter().map(|r| 1.0 / (1.0 / r.tau).ln()).collect()],
    };
    let (c, res) = least_squares(&columns, &y);
    (c[0], res)
}

enum OmegaMaps {
    Dn { pa: DirichletProblem, pb: DirichletProblem, diff: LocalOperator },
    Nd { pa: NeumannProblem, pb: NeumannProblem, diff: LocalOperator },
}

/// Geometry, factored problems and maps for one coefficient pair.
pub struct RecoverySetup {
    pub config: RecoveryConfig,
    pub sets: RhoSets,
    pub aug: Arc<AugmentedDomain>,
    sigma_a: Arc<dyn SigmaFn>,
    sigma_b: Arc<dyn SigmaFn>,
    diff_t: Vec<Sym2>,
    maps: OmegaMaps,
    aug_a: AugmentedProblem,
    aug_b: AugmentedProblem,
}

impl RecoverySetup {
    pub fn new(config: RecoveryConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh.clone();
        let sets = compute_rho_sets(&mesh, config.rho)?;
        let aug = Arc::new(augment_domain(&mesh, &sets)?);
        Self::with_geometry(config, sets, aug)
    }

    pub fn with_geometry(config: RecoveryConfig, sets: RhoSets, aug: Arc<AugmentedDomain>) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh.clone();
        let ext_a = extend_coefficient(&config.coeff_a, &aug);
        let ext_b = extend_coefficient(&config.coeff_b, &aug);
        let sigma_a: Arc<dyn SigmaFn> = Arc::new(Conductivity::new(config.model.clone(), ext_a, config.tag_a.clone()));
        let sigma_b: Arc<dyn SigmaFn> = Arc::new(Conductivity::new(config.model.clone(), ext_b, config.tag_b.clone()));
        let aug_a = AugmentedProblem::new(aug.clone(), sigma_a.clone())?;
        let aug_b = AugmentedProblem::new(aug.clone(), sigma_b.clone())?;
        let n_omega = mesh.n_triangles();
        let st_a: Vec<Sym2> = aug_a.sigma_t()[..n_omega].to_vec();
        let st_b: Vec<Sym2> = aug_b.sigma_t()[..n_omega].to_vec();
        let diff_t: Vec<Sym2> = st_a.iter().zip(&st_b).map(|(a, b)| *a - *b).collect();
        let maps = match config.map_kind {
            MapKind::DN => {
                let space = Arc::new(build_trace_space(&mesh, SpaceKind::HHalfCoGamma)?);
                let pa = DirichletProblem::new(mesh.clone(), &st_a)?;
                let pb = DirichletProblem::new(mesh.clone(), &st_b)?;
                let la = local_dn_from_problem(&pa, &space, &config.tag_a)?;
                let lb = local_dn_from_problem(&pb, &space, &config.tag_b)?;
                OmegaMaps::Dn { diff: la.difference(&lb)?, pa, pb }
            }
            MapKind::ND => {
                let space = Arc::new(build_trace_space(&mesh, SpaceKind::HMinusHalfZeroGamma)?);
                let pa = NeumannProblem::new(mesh.clone(), &st_a)?;
                let pb = NeumannProblem::new(mesh.clone(), &st_b)?;
                let na = nd_from_problem(&pa, &space, &config.tag_a)?;
                let nb = nd_from_problem(&pb, &space, &config.tag_b)?;
                OmegaMaps::Nd { diff: na.difference(&nb)?, pa, pb }
            }
        };
        Ok(RecoverySetup { config, sets, aug, sigma_a, sigma_b, diff_t, maps, aug_a, aug_b })
    }

    pub fn map_difference(&self) -> &LocalOperator {
        match &self.maps {
            OmegaMaps::Dn { diff, .. } | OmegaMaps::Nd { diff, .. } => diff,
        }
    }

    pub fn sigmas(&self) -> (&Arc<dyn SigmaFn>, &Arc<dyn SigmaFn>) {
        (&self.sigma_a, &self.sigma_b)
    }

    /// Pairing, volume cross-check, normalizer and estimate at one τ.
    pub fn evaluate(&self, tau: f64) -> Result<TauRow> {
        let cfg = &self.config;
        let mesh = &cfg.mesh;
        let placement = place_singularity(mesh, &self.sets, cfg.x0, tau)?;
        let z = placement.z_tau;
        let near: Vec<bool> = (0..mesh.n_triangles()).map(|t| dist(mesh.centroid(t), z) < cfg.r0).collect();
        let (p, split) = match &self.maps {
            OmegaMaps::Dn { pa, pb, diff } => {
                let (ga, gb) = rayon::join(|| self.aug_a.green(&placement), || self.aug_b.green(&placement));
                let (ga, gb) = (ga?, gb?);
                let p = pairing(diff, &ga, &gb)?;
                let (ta, tb) = (trace_on_gamma(diff, &ga)?, trace_on_gamma(diff, &gb)?);
                let nodes = &diff.space.nodes;
                let n = mesh.n_vertices();
                let (ua, _) = pa.solve(&scatter(n, nodes, &ta), None)?;
                let (ub, _) = pb.solve(&scatter(n, nodes, &tb), None)?;
                (p, energy_split(mesh, &self.diff_t, &ua, &ub, &near))
            }
            OmegaMaps::Nd { pa, pb, diff } => {
                let (na, nb) = rayon::join(
                    || self.aug_a.neumann_singular(&placement, None),
                    || self.aug_b.neumann_singular(&placement, None),
                );
                let (na, nb) = (na?, nb?);
                let p = pairing(diff, &nb, &na)?;
                let (fa, fb) = (flux_on_gamma(diff, &na)?, flux_on_gamma(diff, &nb)?);
                let nodes = &diff.space.nodes;
                let n = mesh.n_vertices();
                let (ua, _) = pa.solve_loads(&scatter(n, nodes, &fa))?;
                let (ub, _) = pb.solve_loads(&scatter(n, nodes, &fb))?;
                let (i, o) = energy_split(mesh, &self.diff_t, &ua, &ub, &near);
                (p, (-i, -o))
            }
        };
        let vol = split.0 + split.1;
        let k = normalizer(mesh, &cfg.model, &self.ext_a(), &self.ext_b(), &placement, cfg.r0)?;
        let sign = match cfg.map_kind {
            MapKind::DN => 1.0,
            MapKind::ND => -1.0,
        };
        let gap = if p != 0.0 { ((p - vol) / p).abs() } else { (p - vol).abs() };
        Ok(TauRow {
            tau,
            z,
            pairing: p,
            normalizer: k,
            delta_hat: sign * p / k,
            volume_pairing: vol,
            identity_gap: gap,
            near_field: split.0,
            far_field: split.1,
        })
    }

    fn ext_a(&self) -> ScalarCoefficient {
        extend_coefficient(&self.config.coeff_a, &self.aug)
    }

    fn ext_b(&self) -> ScalarCoefficient {
        extend_coefficient(&self.config.coeff_b, &self.aug)
    }

    pub fn run(&self) -> Result<RecoveryResult> {
        let cfg = &self.config;
        let rows = cfg.tau_schedule.iter().map(|&t| self.evaluate(t)).collect::<Result<Vec<_>>>()?;
        Ok(finish(cfg, rows))
    }
}

fn finish(cfg: &RecoveryConfig, rows: Vec<TauRow>) -> RecoveryResult {
    let (c0, res) = extrapolate(&rows, cfg.extrapolation);
    let y: Vec<f64> = rows.iter().map(|r| r.delta_hat).collect();
    let diffs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let cauchy = diffs.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-15);
    let target = match (cfg.coeff_a.eval(cfg.x0), cfg.coeff_b.eval(cfg.x0)) {
        (Ok(a), Ok(b)) => Some(a - b),
        _ => None,
    };
    RecoveryResult {
        map_kind: cfg.map_kind,
        tag_a: cfg.tag_a.clone(),
        tag_b: cfg.tag_b.clone(),
        per_tau: rows,
        extrapolated: c0,
        extrapolation: cfg.extrapolation,
        fit_residual: res,
        target,
        cauchy,
    }
}

/// Runs the τ-schedule and extrapolates the boundary difference.
pub fn recover_boundary_difference(config: &RecoveryConfig) -> Result<RecoveryResult> {
    RecoverySetup::new(config.clone())?.run()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MollifiedRow {
    pub epsilon: f64,
    pub delta_hat: f64,
    /// `|δ̂_ε − δ̂|`.
    pub deviation: f64,
    /// `2ω(ε)` from the modulus of `a − b`.
    pub omega_bound: f64,
    /// `‖Λ_{a_ε} − Λ_a‖ + ‖Λ_{b_ε} − Λ_b‖` in the operator norm of the map kind.
    pub map_perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MollifiedReport {
    pub base: RecoveryResult,
    pub rows: Vec<MollifiedRow>,
}

/// Recovery on mollified pairs `(a_ε, b_ε)` for each ε.
pub fn mollified_recovery(config: &RecoveryConfig, epsilons: &[f64]) -> Result<MollifiedReport> {
    for &e in epsilons {
        if e > 0.5 * config.rho {
            return Err(Error::EpsilonTooLarge { eps: e, limit: 0.5 * config.rho });
        }
    }
    let base_setup = RecoverySetup::new(config.clone())?;
    let base = base_setup.run()?;
    let aug = base_setup.aug.clone();
    let sets = base_setup.sets.clone();
    let ext_a = extend_coefficient(&config.coeff_a, &aug);
    let ext_b = extend_coefficient(&config.coeff_b, &aug);
    let map_of = |c: &ScalarCoefficient, tag: &str| -> Result<LocalOperator> {
        let sigma = Conductivity::new(config.model.clone(), c.clone(), tag);
        map_for(&config.mesh, config.map_kind, &sigma)
    };
    let la = map_of(&config.coeff_a, "a")?;
    let lb = map_of(&config.coeff_b, "b")?;
    let mut rows = Vec::new();
    for &e in epsilons {
        let ae = mollify(&ext_a, e, config.rho)?;
        let be = mollify(&ext_b, e, config.rho)?;
        let mut cfg = config.clone();
        cfg.coeff_a = ae.clone();
        cfg.coeff_b = be.clone();
        let res = RecoverySetup::with_geometry(cfg, sets.clone(), aug.clone())?.run()?;
        let pert = op_norm(&map_of(&ae, "a_eps")?, &la)? + op_norm(&map_of(&be, "b_eps")?, &lb)?;
        let omega = config.coeff_a.omega.eval(e) + config.coeff_b.omega.eval(e);
        rows.push(MollifiedRow {
            epsilon: e,
            delta_hat: res.extrapolated,
            deviation: (res.extrapolated - base.extrapolated).abs(),
            omega_bound: omega,
            map_perturbation: pert,
        });
    }
    Ok(MollifiedReport { base, rows })
}

/// The map of the requested kind on Ω for one conductivity.
pub fn map_for(mesh: &Arc<MeshDomain>, kind: MapKind, sigma: &dyn SigmaFn) -> Result<LocalOperator> {
    let st = sigma_on_triangles(mesh, sigma)?;
    match kind {
        MapKind::DN => {
            let space = Arc::new(build_trace_space(mesh, SpaceKind::HHalfCoGamma)?);
            local_dn_from_problem(&DirichletProblem::new(mesh.clone(), &st)?, &space, &sigma.tag())
        }
        MapKind::ND => {
            let space = Arc::new(build_trace_space(mesh, SpaceKind::HMinusHalfZeroGamma)?);
            nd_from_problem(&NeumannProblem::new(mesh.clone(), &st)?, &space, &sigma.tag())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    fn config(kind: MapKind, a: f64, b: f64) -> RecoveryConfig {
        let mesh = Arc::new(generate_mesh(Shape::UnitDisk, 0.08, GammaSpec::upper_half_circle()).unwrap());
        RecoveryConfig::new(
            mesh,
            1.0,
            [0.0, 1.0],
            vec![0.12, 0.08, 0.05],
            kind,
            ConductivityModel::isotropic(2.0),
            ScalarCoefficient::constant(a, 2.0),
            ScalarCoefficient::constant(b, 2.0),
        )
    }

    #[test]
    fn schedules_are_validated() {
        let mut c = config(MapKind::DN, 1.0, 1.1);
        assert!(c.validate().is_ok());
        c.tau_schedule = vec![];
        assert!(matches!(c.validate(), Err(Error::InvalidInput(_))));
        c.tau_schedule = vec![0.05, 0.08];
        assert!(matches!(c.validate(), Err(Error::InvalidInput(_))));
        c.tau_schedule = vec![0.3];
        assert!(matches!(c.validate(), Err(Error::TauTooLarge { .. })));
        c.tau_schedule = vec![0.08];
        c.r0 = 0.1;
        assert!(matches!(c.validate(), Err(Error::TauTooLarge { .. })));
    }

    #[test]
    fn equal_coefficients_give_zero() {
        for kind in [MapKind::DN, MapKind::ND] {
            let r = recover_boundary_difference(&config(kind, 1.2, 1.2)).unwrap();
            assert!(r.extrapolated.abs() < 1e-10, "{kind:?} {}", r.extrapolated);
            assert!(r.per_tau.iter().all(|row| row.pairing.abs() < 1e-10));
        }
    }

    #[test]
    fn swapping_the_pair_flips_the_sign() {
        let ab = RecoverySetup::new(config(MapKind::DN, 1.0, 1.15)).unwrap().evaluate(0.08).unwrap();
        let ba = RecoverySetup::new(config(MapKind::DN, 1.15, 1.0)).unwrap().evaluate(0.08).unwrap();
        assert!((ab.pairing + ba.pairing).abs() < 1e-9 * ab.pairing.abs());
        assert!((ab.delta_hat + ba.delta_hat).abs() < 1e-9 * ab.delta_hat.abs());
        assert!(ab.identity_gap < 1e-9);
    }

    #[test]
    fn extrapolation_is_exact_on_model_data() {
        let row = |tau: f64, k: f64, d: f64| TauRow {
            tau,
            z: [0.0, 0.0],
            pairing: 0.0,
            normalizer: k,
            delta_hat: d,
            volume_pairing: 0.0,
            identity_gap: 0.0,
            near_field: 0.0,
            far_field: 0.0,
        };
        let rows: Vec<TauRow> = [(0.1, 3.0), (0.05, 4.1), (0.02, 5.7), (0.01, 6.8)]
            .iter()
            .map(|&(t, k)| row(t, k, 0.3 + (0.5 + 2.0 * t) / k))
            .collect();
        let (d, res) = extrapolate(&rows, Extrapolation::DriftingNormalizer);
        assert!((d - 0.3).abs() < 1e-12 && res < 1e-12);
        let lin: Vec<TauRow> = rows.iter().map(|r| row(r.tau, r.normalizer, -0.1 + 0.7 / r.normalizer)).collect();
        let (d, _) = extrapolate(&lin, Extrapolation::InverseNormalizer);
        assert!((d + 0.1).abs() < 1e-12);
        let (d, _) = extrapolate(&rows[..2], Extrapolation::DriftingNormalizer);
        assert!(d.is_finite());
    }

    #[test]
    fn csv_has_one_row_per_tau() {
        let r = recover_boundary_difference(&config(MapKind::DN, 1.0, 1.1).with_tags("p", "q")).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("pair_a,pair_b,tau,P,K,delta_hat\np,q,0.12,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn oversized_mollifier_is_refused() {
        let c = config(MapKind::DN, 1.0, 1.1);
        assert!(matches!(mollified_recovery(&c, &[0.6]), Err(Error::EpsilonTooLarge { .. })));
    }
}
