//! Fixtures shared by the benchmarks.

use calderon_core::conductivity::{Conductivity, ConductivityModel, ScalarCoefficient};
use calderon_core::geometry::{generate_mesh, GammaSpec, MeshDomain, Shape};
use calderon_core::maps::MapKind;
use calderon_core::recovery::RecoveryConfig;
use std::sync::Arc;

pub fn upper_disk(h: f64) -> Arc<MeshDomain> {
    Arc::new(generate_mesh(Shape::UnitDisk, h, GammaSpec::upper_half_circle()).expect("mesh"))
}

pub fn isotropic(c: f64) -> Conductivity {
    Conductivity::new(ConductivityModel::isotropic(2.0), ScalarCoefficient::constant(c, 2.0), format!("{c}"))
}

/// The constant pair (1, 1.1) at `x⁰ = (0, 1)` with a single τ.
pub fn recovery_config(mesh: Arc<MeshDomain>, kind: MapKind, tau: f64) -> RecoveryConfig {
    RecoveryConfig::new(
        mesh,
        1.0,
        [0.0, 1.0],
        vec![tau],
        kind,
        ConductivityModel::isotropic(2.0),
        ScalarCoefficient::constant(1.0, 2.0),
        ScalarCoefficient::constant(1.1, 2.0),
    )
}
