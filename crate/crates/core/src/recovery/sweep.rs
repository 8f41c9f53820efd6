use super::recover::map_for;
use crate::conductivity::{w1p_norm, Conductivity, ConductivityModel, ScalarCoefficient};
use crate::error::Result;
use crate::geometry::{compute_rho_sets, MeshDomain};
use crate::maps::{op_norm, LocalOperator, MapKind};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

/// Numerators below this are treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CoefficientPair {
    pub tag_a: String,
    pub tag_b: String,
    pub a: ScalarCoefficient,
    pub b: ScalarCoefficient,
}

impl CoefficientPair {
    pub fn new(tag_a: &str, a: ScalarCoefficient, tag_b: &str, b: ScalarCoefficient) -> Self {
        CoefficientPair { tag_a: tag_a.into(), tag_b: tag_b.into(), a, b }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StabilityRow {
    pub tag_a: String,
    pub tag_b: String,
    /// `max_{Γ_ρ nodes} ‖A(x,a) − A(x,b)‖`.
    pub sup_diff: f64,
    pub map_norm: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StabilityReport {
    pub map_kind: MapKind,
    pub mesh_hash: String,
    pub h_mesh: f64,
    pub rho: f64,
    pub rows: Vec<StabilityRow>,
    pub sup_ratio: f64,
    /// `W^{1,p}` norms of the swept coefficients by tag.
    pub e_values: BTreeMap<String, f64>,
}

impl StabilityReport {
    /// `pair_a,pair_b,sup_diff,map_norm,ratio` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_a,pair_b,sup_diff,map_norm,ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.12e},{:.12e},{}",
                r.tag_a,
                r.tag_b,
                r.sup_diff,
                r.map_norm,
                if r.degenerate { "degenerate".to_string() } else { format!("{:.12e}", r.ratio) }
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let valid = self.rows.iter().filter(|r| !r.degenerate).count();
        format!(
            "sweep {} rho={} h={:.4}: {} pairs ({} degenerate), sup ratio {:.6e}",
            self.map_kind.label(),
            self.rho,
            self.h_mesh,
            self.rows.len(),
            self.rows.len() - valid,
            self.sup_ratio
        )
    }

    /// Largest over smallest ratio among non-degenerate rows.
    pub fn ratio_spread(&self) -> f64 {
        let r: Vec<f64> = self.rows.iter().filter(|r| !r.degenerate).map(|r| r.ratio).collect();
        let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Stability ratios `sup_{Γ_ρ}|A(·,a) − A(·,b)| / ‖map_a − map_b‖` over a list of pairs.
pub fn stability_sweep(
    pairs: &[CoefficientPair],
    map_kind: MapKind,
    mesh: &Arc<MeshDomain>,
    rho: f64,
    model: &ConductivityModel,
) -> Result<StabilityReport> {
    let sets = compute_rho_sets(mesh, rho)?;
    let mut coeffs: BTreeMap<String, ScalarCoefficient> = BTreeMap::new();
    for p in pairs {
        coeffs.entry(p.tag_a.clone()).or_insert_with(|| p.a.clone());
        coeffs.entry(p.tag_b.clone()).or_insert_with(|| p.b.clone());
    }
    let tags: Vec<&String> = coeffs.keys().collect();
    let maps: Vec<(LocalOperator, f64)> = tags
        .par_iter()
        .map(|t| {
            let c = &coeffs[*t];
            let sigma = Conductivity::new(model.clone(), c.clone(), t.as_str());
            Ok((map_for(mesh, map_kind, &sigma)?, w1p_norm(c, mesh, model.p)?))
        })
        .collect::<Result<_>>()?;
    let by_tag: BTreeMap<&String, &(LocalOperator, f64)> = tags.iter().cloned().zip(maps.iter()).collect();
    let mut rows: Vec<StabilityRow> = pairs
        .par_iter()
        .map(|p| {
            let mut sup = 0.0f64;
            for &i in &sets.gamma_rho_nodes {
                let x = mesh.vertex(i);
                let d = model.a(x, p.a.eval(x)?)? - model.a(x, p.b.eval(x)?)?;
                sup = sup.max(d.norm());
            }
            let map_norm = op_norm(&by_tag[&p.tag_a].0, &by_tag[&p.tag_b].0)?;
            let degenerate = sup <= DEGENERATE_TOL || !(map_norm > 0.0);
            let ratio = if degenerate { f64::NAN } else { sup / map_norm };
            Ok(StabilityRow { tag_a: p.tag_a.clone(), tag_b: p.tag_b.clone(), sup_diff: sup, map_norm, ratio, degenerate })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|x, y| (&x.tag_a, &x.tag_b).cmp(&(&y.tag_a, &y.tag_b)));
    let sup_ratio = rows.iter().filter(|r| !r.degenerate).map(|r| r.ratio).fold(0.0, f64::max);
    let e_values = by_tag.iter().map(|(t, (_, e))| ((*t).clone(), *e)).collect();
    Ok(StabilityReport {
        map_kind,
        mesh_hash: mesh.hash(),
        h_mesh: mesh.mesh_size(),
        rho,
        rows,
        sup_ratio,
        e_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    #[test]
    fn constant_pairs_share_a_ratio_and_equal_pairs_degenerate() {
        let mesh = Arc::new(generate_mesh(Shape::UnitDisk, 0.12, GammaSpec::upper_half_circle()).unwrap());
        let c = |v: f64| ScalarCoefficient::constant(v, 2.0);
        let pairs = vec![
            CoefficientPair::new("one", c(1.0), "one_tenth", c(1.1)),
            CoefficientPair::new("one", c(1.0), "one_fifth", c(1.2)),
            CoefficientPair::new("same", c(1.3), "same2", c(1.3)),
        ];
        let model = ConductivityModel::isotropic(2.0);
        let rep = stability_sweep(&pairs, MapKind::DN, &mesh, 1.0, &model).unwrap();
        assert_eq!(rep.rows.len(), 3);
        let deg: Vec<&StabilityRow> = rep.rows.iter().filter(|r| r.degenerate).collect();
        assert_eq!(deg.len(), 1);
        assert!(deg[0].ratio.is_nan());
        assert!((rep.ratio_spread() - 1.0).abs() < 1e-9);
        let csv = rep.to_csv();
        assert!(csv.lines().any(|l| l.ends_with(",degenerate")));
        assert_eq!(csv.lines().count(), 4);
    }
}
