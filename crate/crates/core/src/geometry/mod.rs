//! Meshes, boundary portions, ρ-sets, augmented domains and singularity placement.

mod augment;
mod generate;
mod mesh;
mod placement;
mod rho;

pub use augment::{augment_domain, AugmentationReport, AugmentedDomain, ATTACH_FRACTION, BUMP_THICKNESS};
pub use generate::{
    generate_disk, generate_mesh, generate_square, GammaSpec, Shape, DISK_DESCRIPTOR, SQUARE_DESCRIPTOR,
};
pub use mesh::{
    barycentric, dist, fmt17, normalize, segment_distance, short_hash, signed_area, BoundaryEdge, BoundaryShape,
    LipschitzDescriptor, MeshDomain, Point, Portion,
};
pub use placement::{place_singularity, project_to_gamma, tau0, SingularityPlacement};
pub use rho::{compute_rho_sets, rho0, RhoSets};
