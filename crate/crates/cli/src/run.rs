//! Command execution and artifact writing.

use crate::config::{CoefSource, Command, ExperimentConfig, FamilyChoice};
use calderon_core::conductivity::{ConductivityModel, Conductivity, Expr, Modulus, ScalarCoefficient};
use calderon_core::fem::solve_dirichlet;
use calderon_core::geometry::{
    augment_domain, compute_rho_sets, generate_mesh, place_singularity, MeshDomain,
};
use calderon_core::maps::{op_norm, MapKind};
use calderon_core::recovery::{
    map_for, mollified_recovery, recover_boundary_difference, stability_sweep, CoefficientPair, RecoveryConfig,
};
use calderon_core::singular::AugmentedProblem;
use calderon_core::suite::{Suite, SuiteConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Environment switch for timestamps in headers; unset or `1` keeps outputs byte-identical.
pub const DETERMINISTIC_ENV: &str = "CALDERON_DETERMINISTIC";

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(calderon_core::Error),
}

impl From<calderon_core::Error> for RunError {
    fn from(e: calderon_core::Error) -> Self {
        RunError::Numeric(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(e) => write!(f, "numeric failure {}: {e}", e.name()),
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Writes artifacts under one directory, each prefixed by a hash header.
pub struct Artifacts {
    dir: PathBuf,
    header: String,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, config_hash: &str, mesh_hash: &str) -> RunResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let mut header = format!("# calderon config={config_hash} mesh={mesh_hash}");
        if !deterministic() {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = write!(header, " generated={secs}");
        }
        header.push('\n');
        Ok(Artifacts { dir: dir.to_path_buf(), header, written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, body: &str) -> RunResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("{}{body}", self.header))
            .map_err(|e| RunError::Config(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

pub fn deterministic() -> bool {
    std::env::var(DETERMINISTIC_ENV).map(|v| v.trim() != "0").unwrap_or(true)
}

fn model_of(cfg: &ExperimentConfig) -> RunResult<ConductivityModel> {
    let m = match cfg.family {
        FamilyChoice::Isotropic => Ok(ConductivityModel::isotropic(cfg.lambda)),
        FamilyChoice::ScalarMultiple(m) => ConductivityModel::scalar_multiple(m, cfg.lambda, cfg.cal_f),
        FamilyChoice::Affine(m0, m1) => ConductivityModel::affine(m0, m1, cfg.lambda, cfg.cal_f),
    };
    m.and_then(|m| m.with_p(cfg.p)).map_err(|e| RunError::Config(e.to_string()))
}

fn coefficients(cfg: &ExperimentConfig, mesh: &Arc<MeshDomain>) -> RunResult<BTreeMap<String, ScalarCoefficient>> {
    cfg.coefficients
        .iter()
        .map(|(tag, spec)| {
            let omega = Modulus::Lipschitz(spec.lipschitz);
            let c = match &spec.source {
                CoefSource::Expr(e) => ScalarCoefficient::parse_expr(e, cfg.lambda, omega),
                CoefSource::File(f) => {
                    let text = std::fs::read_to_string(f)
                        .map_err(|e| RunError::Config(format!("cannot read coefficient file {f}: {e}")))?;
                    ScalarCoefficient::from_text(&text, Some(mesh.clone()), cfg.lambda, omega)
                }
            };
            c.map(|c| (tag.clone(), c)).map_err(|e| RunError::Config(format!("coefficient `{tag}`: {e}")))
        })
        .collect()
}

/// Runs one experiment and writes its artifacts under `out`; returns the stdout report.
pub fn run(cfg: &ExperimentConfig) -> RunResult<String> {
    cfg.validate().map_err(RunError::Config)?;
    let config_hash = cfg.hash();
    if cfg.command == Command::Verify {
        return verify(cfg, &config_hash);
    }
    let mesh = Arc::new(generate_mesh(cfg.shape, cfg.h_mesh, cfg.gamma.spec())?);
    let model = model_of(cfg)?;
    let coeffs = coefficients(cfg, &mesh)?;
    let mut out = Artifacts::new(Path::new(&cfg.out), &config_hash, &mesh.hash())?;
    out.write("mesh.txt", &mesh.to_text())?;
    let sigma_of = |tag: &str| Conductivity::new(model.clone(), coeffs[tag].clone(), tag);
    let mut report = String::new();
    match cfg.command {
        Command::Forward => {
            let tag = cfg.sigma.as_deref().expect("validated");
            let g = Expr::parse(cfg.boundary.as_deref().expect("validated"))
                .map_err(|e| RunError::Config(format!("boundary: {e}")))?;
            let data: Vec<f64> = mesh.vertices().iter().map(|&x| g.eval(x)).collect();
            let u = solve_dirichlet(&mesh, &sigma_of(tag), &data)?;
            out.write("forward.field", &u.to_text())?;
            out.write("forward.csv", &u.to_csv())?;
            let _ = writeln!(report, "forward {tag}: {} nodes, H1 norm {:.12e}", mesh.n_vertices(), calderon_core::fem::h1_norm(&u, None));
        }
        Command::DnMap | Command::NdMap => {
            let kind = if cfg.command == Command::DnMap { MapKind::DN } else { MapKind::ND };
            let mut tags: Vec<&str> = cfg.sigma.iter().map(String::as_str).collect();
            for (a, b) in &cfg.pairs {
                tags.push(a);
                tags.push(b);
            }
            tags.sort_unstable();
            tags.dedup();
            let mut ops = BTreeMap::new();
            for t in tags {
                let op = map_for(&mesh, kind, &sigma_of(t))?;
                out.write(&format!("{}_{t}.csv", kind.label().to_lowercase()), &op.to_csv(&cfg.gamma_label()))?;
                let _ = writeln!(report, "{} {t}: dim {}, asymmetry {:.3e}", kind.label(), op.matrix.nrows(), op.asymmetry());
                ops.insert(t, op);
            }
            if !cfg.pairs.is_empty() {
                let mut csv = String::from("pair_a,pair_b,norm\n");
                for (a, b) in &cfg.pairs {
                    let n = op_norm(&ops[a.as_str()], &ops[b.as_str()])?;
                    let _ = writeln!(csv, "{a},{b},{n:.11e}");
                    let _ = writeln!(report, "norm {} {a} - {b} = {n:.11e}", kind.label());
                }
                out.write(&format!("{}_norms.csv", kind.label().to_lowercase()), &csv)?;
            }
        }
        Command::Singular => {
            let tag = cfg.sigma.as_deref().expect("validated");
            let sets = compute_rho_sets(&mesh, cfg.rho)?;
            let aug = Arc::new(augment_domain(&mesh, &sets)?);
            let ext = calderon_core::conductivity::extend_coefficient(&coeffs[tag], &aug);
            let prob = AugmentedProblem::new(aug, Arc::new(Conductivity::new(model.clone(), ext, tag)))?;
            for &tau in &cfg.tau {
                let pl = place_singularity(&mesh, &sets, cfg.x0, tau)?;
                let sol = match cfg.map {
                    MapKind::DN => prob.green(&pl)?,
                    MapKind::ND => prob.neumann_singular(&pl, None)?,
                };
                let stem = format!("singular_{}_{tau}", cfg.map.label().to_lowercase());
                out.write(&format!("{stem}.field"), &sol.corrector.to_text())?;
                out.write(&format!("{stem}.json"), &sol.to_sidecar())?;
                let _ = write!(report, "singular {} tau {tau}: z = ({:.6}, {:.6})", cfg.map.label(), pl.z_tau[0], pl.z_tau[1]);
                match &sol.flux {
                    Some(f) => {
                        let _ = writeln!(report, ", total flux {:.12e}", f.total_flux);
                    }
                    None => {
                        let _ = writeln!(report, ", H1(Omega)^2 {:.12e}", sol.omega_h1_sq()?);
                    }
                }
            }
        }
        Command::Recover => {
            let mut csv = String::from("pair_a,pair_b,tau,P,K,delta_hat\n");
            let mut moll = String::from("pair_a,pair_b,epsilon,delta_hat,deviation,omega_bound,map_perturbation\n");
            for (a, b) in &cfg.pairs {
                let mut rc = RecoveryConfig::new(
                    mesh.clone(),
                    cfg.rho,
                    cfg.x0,
                    cfg.tau.clone(),
                    cfg.map,
                    model.clone(),
                    coeffs[a].clone(),
                    coeffs[b].clone(),
                )
                .with_tags(a, b);
                if let Some(r0) = cfg.r0 {
                    rc.r0 = r0;
                }
                rc.extrapolation = cfg.extrapolation;
                let r = recover_boundary_difference(&rc)?;
                csv.push_str(r.to_csv().split_once('\n').map(|x| x.1).unwrap_or(""));
                let _ = writeln!(report, "{}", r.summary());
                let mut dat = String::from("# inv_K delta_hat\n");
                for row in &r.per_tau {
                    let _ = writeln!(dat, "{:.12e} {:.12e}", 1.0 / row.normalizer, row.delta_hat);
                }
                out.write(&format!("recovery_{a}_{b}.dat"), &dat)?;
                if !cfg.eps.is_empty() {
                    let m = mollified_recovery(&rc, &cfg.eps)?;
                    for row in &m.rows {
                        let _ = writeln!(
                            moll,
                            "{a},{b},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                            row.epsilon, row.delta_hat, row.deviation, row.omega_bound, row.map_perturbation
                        );
                    }
                }
            }
            out.write("recovery.csv", &csv)?;
            if !cfg.eps.is_empty() {
                out.write("mollified.csv", &moll)?;
            }
        }
        Command::Sweep => {
            let pairs: Vec<CoefficientPair> = cfg
                .pairs
                .iter()
                .map(|(a, b)| CoefficientPair::new(a, coeffs[a].clone(), b, coeffs[b].clone()))
                .collect();
            let r = stability_sweep(&pairs, cfg.map, &mesh, cfg.rho, &model)?;
            out.write("sweep.csv", &r.to_csv())?;
            let _ = writeln!(report, "{}", r.summary());
        }
        Command::Verify => unreachable!("handled above"),
    }
    Ok(report)
}

fn verify(cfg: &ExperimentConfig, config_hash: &str) -> RunResult<String> {
    let suite = Suite::new(SuiteConfig { h_mesh: cfg.h_mesh, rho: cfg.rho, seed: cfg.seed });
    let outcomes = suite.run_all();
    let mut table = String::new();
    for o in &outcomes {
        let _ = writeln!(table, "{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(table, "{} passed, {failed} failed", outcomes.len() - failed);
    let mut out = Artifacts::new(Path::new(&cfg.out), config_hash, &suite.disk_upper().hash())?;
    out.write("verify.txt", &table)?;
    if failed > 0 {
        return Err(RunError::Numeric(calderon_core::Error::InvalidInput(format!(
            "{failed} acceptance checks failed\n{table}"
        ))));
    }
    Ok(table)
}
