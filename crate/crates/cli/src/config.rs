//! Experiment configuration: flat `key = value` lines grouped under `[section]` headers.

use calderon_core::geometry::{GammaSpec, Shape};
use calderon_core::linalg::Sym2;
use calderon_core::maps::MapKind;
use calderon_core::recovery::Extrapolation;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    DnMap,
    NdMap,
    Singular,
    Recover,
    Sweep,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Forward,
        Command::DnMap,
        Command::NdMap,
        Command::Singular,
        Command::Recover,
        Command::Sweep,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::DnMap => "dn-map",
            Command::NdMap => "nd-map",
            Command::Singular => "singular",
            Command::Recover => "recover",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    Full,
    UpperHalf,
    SquareTop,
    Arc(f64, f64),
}

impl GammaChoice {
    pub fn spec(self) -> GammaSpec {
        match self {
            GammaChoice::Full => GammaSpec::Full,
            GammaChoice::UpperHalf => GammaSpec::upper_half_circle(),
            GammaChoice::SquareTop => GammaSpec::square_top(),
            GammaChoice::Arc(start, end) => GammaSpec::Arc { start, end },
        }
    }

    fn to_text(self) -> String {
        match self {
            GammaChoice::Full => "full".into(),
            GammaChoice::UpperHalf => "upper_half".into(),
            GammaChoice::SquareTop => "square_top".into(),
            GammaChoice::Arc(a, b) => format!("arc {a:?} {b:?}"),
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        let f: Vec<&str> = s.split_whitespace().collect();
        match f.as_slice() {
            ["full"] => Ok(GammaChoice::Full),
            ["upper_half"] => Ok(GammaChoice::UpperHalf),
            ["square_top"] => Ok(GammaChoice::SquareTop),
            ["arc", a, b] => Ok(GammaChoice::Arc(num(a)?, num(b)?)),
            _ => Err(format!("bad gamma `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyChoice {
    Isotropic,
    ScalarMultiple(Sym2),
    Affine(Sym2, Sym2),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefSource {
    Expr(String),
    /// Path to a `coef expr` or `coef nodal` file.
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefSpec {
    pub source: CoefSource,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: String,
    pub shape: Shape,
    pub gamma: GammaChoice,
    pub h_mesh: f64,
    pub family: FamilyChoice,
    pub lambda: f64,
    pub cal_f: f64,
    pub p: f64,
    pub coefficients: BTreeMap<String, CoefSpec>,
    pub rho: f64,
    pub tau: Vec<f64>,
    pub eps: Vec<f64>,
    pub r0: Option<f64>,
    pub x0: [f64; 2],
    pub map: MapKind,
    pub extrapolation: Extrapolation,
    pub sigma: Option<String>,
    pub pairs: Vec<(String, String)>,
    pub boundary: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: Command::Verify,
            seed: 0,
            out: "out".into(),
            shape: Shape::UnitDisk,
            gamma: GammaChoice::UpperHalf,
            h_mesh: 0.02,
            family: FamilyChoice::Isotropic,
            lambda: 2.0,
            cal_f: 1.0,
            p: 4.0,
            coefficients: BTreeMap::new(),
            rho: 1.0,
            tau: vec![0.2, 0.1, 0.05, 0.025],
            eps: Vec::new(),
            r0: None,
            x0: [0.0, 1.0],
            map: MapKind::DN,
            extrapolation: Extrapolation::DriftingNormalizer,
            sigma: None,
            pairs: Vec::new(),
            boundary: None,
        }
    }
}

fn num(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("bad number `{s}`"))
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(num).collect()
}

fn sym(s: &str) -> Result<Sym2, String> {
    match list(s)?.as_slice() {
        [a11, a12, a22] => Ok(Sym2::new(*a11, *a12, *a22)),
        _ => Err(format!("matrix needs `a11 a12 a22`, got `{s}`")),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn fmt_sym(m: Sym2) -> String {
    format!("{:?} {:?} {:?}", m.a11, m.a12, m.a22)
}

fn extrapolation_name(e: Extrapolation) -> &'static str {
    match e {
        Extrapolation::DriftingNormalizer => "drifting",
        Extrapolation::InverseNormalizer => "inverse_k",
        Extrapolation::InverseLog => "inverse_log",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut c = ExperimentConfig::default();
        let mut section = String::new();
        let mut kv: Vec<(String, String, String, usize)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["", "geometry", "model", "coefficients", "numerics", "run"].contains(&section.as_str()) {
                    return Err(format!("line {}: unknown section [{section}]", n + 1));
                }
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            kv.push((section.clone(), k.trim().to_string(), v.trim().to_string(), n + 1));
        }
        let mut family = "isotropic".to_string();
        let (mut m, mut m0, mut m1) = (None, None, None);
        let mut lips: BTreeMap<String, f64> = BTreeMap::new();
        let mut files: BTreeMap<String, String> = BTreeMap::new();
        let mut exprs: BTreeMap<String, String> = BTreeMap::new();
        for (sec, k, v, n) in kv {
            let at = |e: String| format!("line {n}: {e}");
            match (sec.as_str(), k.as_str()) {
                ("", "command") => c.command = Command::parse(&v).map_err(at)?,
                ("", "seed") => c.seed = v.parse().map_err(|_| at(format!("bad seed `{v}`")))?,
                ("", "out") => c.out = v,
                ("geometry", "shape") => {
                    c.shape = match v.as_str() {
                        "disk" => Shape::UnitDisk,
                        "square" => Shape::UnitSquare,
                        _ => return Err(at(format!("unknown shape `{v}`"))),
                    }
                }
                ("geometry", "gamma") => c.gamma = GammaChoice::parse(&v).map_err(at)?,
                ("geometry", "h_mesh") => c.h_mesh = num(&v).map_err(at)?,
                ("model", "family") => family = v,
                ("model", "m") => m = Some(sym(&v).map_err(at)?),
                ("model", "m0") => m0 = Some(sym(&v).map_err(at)?),
                ("model", "m1") => m1 = Some(sym(&v).map_err(at)?),
                ("model", "lambda") => c.lambda = num(&v).map_err(at)?,
                ("model", "cal_f") => c.cal_f = num(&v).map_err(at)?,
                ("model", "p") => c.p = num(&v).map_err(at)?,
                ("coefficients", key) => {
                    if let Some(tag) = key.strip_suffix(".lipschitz") {
                        lips.insert(tag.to_string(), num(&v).map_err(at)?);
                    } else if let Some(tag) = key.strip_suffix(".file") {
                        files.insert(tag.to_string(), v);
                    } else {
                        exprs.insert(key.to_string(), v);
                    }
                }
                ("numerics", "rho") => c.rho = num(&v).map_err(at)?,
                ("numerics", "tau") => c.tau = list(&v).map_err(at)?,
                ("numerics", "eps") => c.eps = list(&v).map_err(at)?,
                ("numerics", "r0") => c.r0 = Some(num(&v).map_err(at)?),
                ("numerics", "x0") => match list(&v).map_err(at)?.as_slice() {
                    [x, y] => c.x0 = [*x, *y],
                    _ => return Err(at("x0 needs two coordinates".into())),
                },
                ("numerics", "map") => {
                    c.map = match v.as_str() {
                        "dn" => MapKind::DN,
                        "nd" => MapKind::ND,
                        _ => return Err(at(format!("map must be dn or nd, got `{v}`"))),
                    }
                }
                ("numerics", "extrapolation") => {
                    c.extrapolation = match v.as_str() {
                        "drifting" => Extrapolation::DriftingNormalizer,
                        "inverse_k" => Extrapolation::InverseNormalizer,
                        "inverse_log" => Extrapolation::InverseLog,
                        _ => return Err(at(format!("unknown extrapolation `{v}`"))),
                    }
                }
                ("run", "sigma") => c.sigma = Some(v),
                ("run", "boundary") => c.boundary = Some(v),
                ("run", "pairs") => {
                    c.pairs = v
                        .split(',')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| {
                            p.trim()
                                .split_once(':')
                                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                                .ok_or_else(|| at(format!("pair `{p}` must be `a:b`")))
                        })
                        .collect::<Result<_, _>>()?
                }
                _ => return Err(at(format!("unknown key `{k}` in [{sec}]"))),
            }
        }
        c.family = match family.as_str() {
            "isotropic" => FamilyChoice::Isotropic,
            "scalar_multiple" => FamilyChoice::ScalarMultiple(m.ok_or("scalar_multiple needs `m`")?),
            "affine" => FamilyChoice::Affine(m0.ok_or("affine needs `m0`")?, m1.ok_or("affine needs `m1`")?),
            _ => return Err(format!("unknown family `{family}`")),
        };
        for (tag, e) in exprs {
            if files.contains_key(&tag) {
                return Err(format!("coefficient `{tag}` has both an expression and a file"));
            }
            let l = lips.remove(&tag).unwrap_or(1.0);
            c.coefficients.insert(tag, CoefSpec { source: CoefSource::Expr(e), lipschitz: l });
        }
        for (tag, f) in files {
            let l = lips.remove(&tag).unwrap_or(1.0);
            c.coefficients.insert(tag, CoefSpec { source: CoefSource::File(f), lipschitz: l });
        }
        if let Some(tag) = lips.keys().next() {
            return Err(format!("lipschitz constant for undefined coefficient `{tag}`"));
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out);
        let _ = writeln!(s, "\n[geometry]");
        let _ = writeln!(s, "shape = {}", if self.shape == Shape::UnitDisk { "disk" } else { "square" });
        let _ = writeln!(s, "gamma = {}", self.gamma.to_text());
        let _ = writeln!(s, "h_mesh = {:?}", self.h_mesh);
        let _ = writeln!(s, "\n[model]");
        match self.family {
            FamilyChoice::Isotropic => {
                let _ = writeln!(s, "family = isotropic");
            }
            FamilyChoice::ScalarMultiple(m) => {
                let _ = writeln!(s, "family = scalar_multiple\nm = {}", fmt_sym(m));
            }
            FamilyChoice::Affine(m0, m1) => {
                let _ = writeln!(s, "family = affine\nm0 = {}\nm1 = {}", fmt_sym(m0), fmt_sym(m1));
            }
        }
        let _ = writeln!(s, "lambda = {:?}\ncal_f = {:?}\np = {:?}", self.lambda, self.cal_f, self.p);
        let _ = writeln!(s, "\n[coefficients]");
        for (tag, c) in &self.coefficients {
            match &c.source {
                CoefSource::Expr(e) => {
                    let _ = writeln!(s, "{tag} = {e}");
                }
                CoefSource::File(f) => {
                    let _ = writeln!(s, "{tag}.file = {f}");
                }
            }
            let _ = writeln!(s, "{tag}.lipschitz = {:?}", c.lipschitz);
        }
        let _ = writeln!(s, "\n[numerics]");
        let _ = writeln!(s, "rho = {:?}", self.rho);
        let _ = writeln!(s, "tau = {}", fmt_list(&self.tau));
        let _ = writeln!(s, "eps = {}", fmt_list(&self.eps));
        if let Some(r0) = self.r0 {
            let _ = writeln!(s, "r0 = {r0:?}");
        }
        let _ = writeln!(s, "x0 = {:?} {:?}", self.x0[0], self.x0[1]);
        let _ = writeln!(s, "map = {}", if self.map == MapKind::DN { "dn" } else { "nd" });
        let _ = writeln!(s, "extrapolation = {}", extrapolation_name(self.extrapolation));
        let _ = writeln!(s, "\n[run]");
        if let Some(t) = &self.sigma {
            let _ = writeln!(s, "sigma = {t}");
        }
        if let Some(b) = &self.boundary {
            let _ = writeln!(s, "boundary = {b}");
        }
        let pairs: Vec<String> = self.pairs.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let _ = writeln!(s, "pairs = {}", pairs.join(", "));
        s
    }

    /// Digest of the configuration with the output directory cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out.clear();
        calderon_core::geometry::short_hash(c.to_text().as_bytes())
    }

    pub fn gamma_label(&self) -> String {
        self.gamma.to_text()
    }

    /// Checks tags and numeric ranges before any solve.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.h_mesh > 0.0 && self.h_mesh < 1.0) {
            return Err(format!("h_mesh must lie in (0, 1), got {}", self.h_mesh));
        }
        if !(self.rho > 0.0) {
            return Err(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.lambda >= 1.0) {
            return Err(format!("lambda must be at least 1, got {}", self.lambda));
        }
        if self.tau.iter().any(|t| !(*t > 0.0)) || self.tau.windows(2).any(|w| !(w[1] < w[0])) {
            return Err("tau must be positive and strictly decreasing".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 0.5 * self.rho)) {
            return Err(format!("eps {e} must lie in (0, rho/2]"));
        }
        let r0 = self.r0.unwrap_or(0.5 * self.rho);
        if !(r0 > 0.0) {
            return Err(format!("r0 must be positive, got {r0}"));
        }
        if matches!(self.command, Command::Recover | Command::Singular) {
            if let Some(t) = self.tau.iter().find(|t| !(**t < 0.25 * self.rho && 2.0 * **t < r0)) {
                return Err(format!("tau {t} must be below rho/4 and r0/2"));
            }
        }
        for (tag, c) in &self.coefficients {
            if !(c.lipschitz > 0.0) {
                return Err(format!("coefficient `{tag}` needs a positive Lipschitz constant"));
            }
        }
        let resolve = |t: &String| {
            if self.coefficients.contains_key(t) {
                Ok(())
            } else {
                Err(format!("unknown coefficient tag `{t}`"))
            }
        };
        for (a, b) in &self.pairs {
            resolve(a)?;
            resolve(b)?;
        }
        if let Some(t) = &self.sigma {
            resolve(t)?;
        }
        match self.command {
            Command::Forward | Command::Singular if self.sigma.is_none() => {
                Err(format!("`{}` needs `sigma` in [run]", self.command.name()))
            }
            Command::Forward if self.boundary.is_none() => Err("`forward` needs `boundary` in [run]".into()),
            Command::DnMap | Command::NdMap if self.sigma.is_none() && self.pairs.is_empty() => {
                Err(format!("`{}` needs `sigma` or `pairs` in [run]", self.command.name()))
            }
            Command::Recover | Command::Sweep if self.pairs.is_empty() => {
                Err(format!("`{}` needs `pairs` in [run]", self.command.name()))
            }
            Command::Recover | Command::Singular if self.tau.is_empty() => Err("tau schedule is empty".into()),
            _ => Ok(()),
        }
    }
}
