use calderon_cli::config::{CoefSource, CoefSpec, Command, ExperimentConfig, FamilyChoice, GammaChoice};
use calderon_core::linalg::Sym2;
use calderon_core::maps::MapKind;
use proptest::prelude::*;
use std::path::Path;
use std::process::Command as Process;

const SWEEP: &str = "command = sweep
[geometry]
h_mesh = 0.08
[coefficients]
one = 1
c05 = 1.05
c10 = 1.1
c20 = 1.2
[run]
pairs = one:c05, one:c10, one:c20
";

fn calderon(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_calderon")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn sweep_with_three_constant_pairs_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SWEEP);
    let out = dir.path().join("a");
    let o = calderon(&["sweep", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# calderon config="));
    assert!(lines[0].contains(" mesh="));
    assert_eq!(lines[1], "pair_a,pair_b,sup_diff,map_norm,ratio");
    assert_eq!(lines.len(), 5);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SWEEP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = calderon(&["sweep", "--config", &conf, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success());
    }
    for f in ["sweep.csv", "mesh.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn h_mesh_override_changes_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SWEEP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    calderon(&["sweep", "--config", &conf, "--out", a.to_str().unwrap()]);
    calderon(&["sweep", "--config", &conf, "--out", b.to_str().unwrap(), "--h-mesh", "0.1"]);
    assert_ne!(body(&a.join("mesh.txt")), body(&b.join("mesh.txt")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "command = sweep\n[run]\npairs = a:b\n");
    let o = calderon(&["sweep", "--config", &conf]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown coefficient tag"));
    let o = calderon(&["nonsense", "--config", &conf]);
    assert_eq!(o.status.code(), Some(1));
    let o = calderon(&["sweep", "--config", dir.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numeric_failures_exit_with_two_and_name_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "command = forward\n[geometry]\ngamma = arc 0 0.05\nh_mesh = 0.2\n[coefficients]\none = 1\n[run]\nsigma = one\nboundary = x1\n",
    );
    let o = calderon(&["forward", "--config", &conf, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnresolvedGamma"));
}

#[test]
fn forward_reproduces_a_harmonic_polynomial() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "command = forward\n[geometry]\ngamma = full\nh_mesh = 0.05\n[coefficients]\none = 1\n[run]\nsigma = one\nboundary = x1^2-x2^2\n",
    );
    let out = dir.path().join("o");
    let o = calderon(&["forward", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = body(&out.join("forward.csv"));
    let mut worst = 0.0f64;
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        worst = worst.max((f[3] - (f[1] * f[1] - f[2] * f[2])).abs());
    }
    assert!(worst < 5e-3, "{worst}");
}

#[test]
fn validation_rejects_inadmissible_tau() {
    let mut c = ExperimentConfig::parse("command = recover\n[coefficients]\na = 1\nb = 1.1\n[run]\npairs = a:b\n").unwrap();
    assert!(c.validate().is_ok());
    c.tau = vec![0.3, 0.1];
    assert!(c.validate().unwrap_err().contains("tau"));
    c.tau = vec![0.1, 0.2];
    assert!(c.validate().is_err());
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    assert!(ExperimentConfig::parse("[nowhere]\n").is_err());
    assert!(ExperimentConfig::parse("[geometry]\ncolour = red\n").is_err());
    assert!(ExperimentConfig::parse("[coefficients]\na.lipschitz = 1\n").is_err());
    assert!(ExperimentConfig::parse("[model]\nfamily = affine\n").is_err());
}

#[test]
fn example_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let c = ExperimentConfig::parse(&std::fs::read_to_string(&p).unwrap()).unwrap();
        c.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        n += 1;
    }
    assert!(n >= 5);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, 1e-9..1e-3f64]
}

prop_compose! {
    fn configs()(
        cmd in 0usize..7,
        seed in any::<u64>(),
        h in 0.001..0.5f64,
        gamma in 0usize..4,
        g in (finite(), finite()),
        fam in 0usize..3,
        m in (finite(), finite(), finite()),
        lam in 1.0..10.0f64,
        taus in prop::collection::vec(1e-4..1.0f64, 0..5),
        eps in prop::collection::vec(1e-4..1.0f64, 0..3),
        r0 in prop::option::of(0.01..2.0f64),
        x0 in (finite(), finite()),
        nd in any::<bool>(),
        tags in prop::collection::btree_map("[a-z][a-z0-9_]{0,6}", ("[0-9x+*. ]{1,12}", 0.01..10.0f64, any::<bool>()), 0..4),
        sigma in prop::option::of("[a-z]{1,4}"),
    ) -> ExperimentConfig {
        let s = Sym2::new(m.0, m.1, m.2);
        let coefficients = tags
            .into_iter()
            .map(|(t, (src, l, file))| {
                let source = if file { CoefSource::File(format!("coef/{t}.txt")) } else { CoefSource::Expr(src.trim().to_string()) };
                (t, CoefSpec { source, lipschitz: l })
            })
            .filter(|(_, c)| !matches!(&c.source, CoefSource::Expr(e) if e.is_empty()))
            .collect::<std::collections::BTreeMap<_, _>>();
        let keys: Vec<String> = coefficients.keys().cloned().collect();
        let pairs = keys.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        ExperimentConfig {
            command: Command::ALL[cmd],
            seed,
            out: format!("out/{seed}"),
            h_mesh: h,
            gamma: [GammaChoice::Full, GammaChoice::UpperHalf, GammaChoice::SquareTop, GammaChoice::Arc(g.0, g.1)][gamma],
            family: [FamilyChoice::Isotropic, FamilyChoice::ScalarMultiple(s), FamilyChoice::Affine(s, Sym2::IDENTITY)][fam],
            lambda: lam,
            coefficients,
            tau: taus,
            eps,
            r0,
            x0: [x0.0, x0.1],
            map: if nd { MapKind::ND } else { MapKind::DN },
            sigma,
            pairs,
            boundary: Some("x1*x2".into()),
            ..ExperimentConfig::default()
        }
    }
}

proptest! {
    #[test]
    fn config_round_trips(c in configs()) {
        let text = c.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
    }
}
