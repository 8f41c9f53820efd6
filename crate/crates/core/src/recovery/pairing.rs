use crate::error::{Error, Result};
use crate::fem::{DirichletProblem, NeumannProblem};
use crate::maps::{LocalOperator, MapKind};
use crate::singular::SingularSolution;
use nalgebra::DVector;

/// Relative tolerance for traces leaking onto Δ.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Nodal trace of a Dirichlet-type solution on the D-N space nodes, checked for support in Γ.
pub fn trace_on_gamma(op: &LocalOperator, sol: &SingularSolution) -> Result<DVector<f64>> {
    let u = sol.omega_nodal()?;
    let (outside, inside) = sol.trace_support()?;
    if outside > SUPPORT_TOL * inside.max(f64::MIN_POSITIVE) {
        return Err(Error::SupportViolation { leak: outside / inside.max(f64::MIN_POSITIVE), tol: SUPPORT_TOL });
    }
    Ok(op.space.restrict(&u))
}

/// Flux loads of a Neumann-type solution on the N-D space nodes.
pub fn flux_on_gamma(op: &LocalOperator, sol: &SingularSolution) -> Result<DVector<f64>> {
    let flux = sol
        .flux
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("solution carries no boundary flux".into()))?;
    let f = op.space.restrict(&flux.omega_loads);
    let total: f64 = flux.omega_loads.iter().sum();
    let scale: f64 = flux.omega_loads.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    if (f.sum() - total).abs() > SUPPORT_TOL * scale || total.abs() > SUPPORT_TOL * scale {
        return Err(Error::SupportViolation { leak: (f.sum() - total).abs().max(total.abs()) / scale, tol: SUPPORT_TOL });
    }
    Ok(f)
}

/// `⟨D G_a, G_b⟩` for a map difference D.
///
/// D-N: `g_aᵀ D g_b`; N-D: `f_bᵀ D f_a` with the currents as arguments.
pub fn pairing(map_diff: &LocalOperator, sol_a: &SingularSolution, sol_b: &SingularSolution) -> Result<f64> {
    let (va, vb) = match map_diff.kind {
        MapKind::DN => (trace_on_gamma(map_diff, sol_a)?, trace_on_gamma(map_diff, sol_b)?),
        MapKind::ND => (flux_on_gamma(map_diff, sol_a)?, flux_on_gamma(map_diff, sol_b)?),
    };
    Ok((va.transpose() * &map_diff.nodal * vb)[(0, 0)])
}

pub(crate) fn scatter(len: usize, nodes: &[usize], v: &DVector<f64>) -> Vec<f64> {
    let mut full = vec![0.0; len];
    for (&i, x) in nodes.iter().zip(v.iter()) {
        full[i] = *x;
    }
    full
}

/// Volume form `u_aᵀ(K_a − K_b)u_b` of the D-N pairing, with `u_a, u_b` the
/// discrete Dirichlet extensions of the two traces for σ_a and σ_b.
pub fn dn_volume_pairing(
    pa: &DirichletProblem,
    pb: &DirichletProblem,
    nodes: &[usize],
    ga: &DVector<f64>,
    gb: &DVector<f64>,
) -> Result<f64> {
    let n = pa.mesh().n_vertices();
    let (ua, _) = pa.solve(&scatter(n, nodes, ga), None)?;
    let (ub, _) = pb.solve(&scatter(n, nodes, gb), None)?;
    Ok(pa.energy(&ua, &ub) - pb.energy(&ua, &ub))
}

/// Volume form `u_aᵀ(K_b − K_a)u_b` of the N-D pairing, with Neumann solutions for the two currents.
pub fn nd_volume_pairing(
    pa: &NeumannProblem,
    pb: &NeumannProblem,
    nodes: &[usize],
    fa: &DVector<f64>,
    fb: &DVector<f64>,
) -> Result<f64> {
    let n = pa.mesh().n_vertices();
    let (ua, _) = pa.solve_loads(&scatter(n, nodes, fa))?;
    let (ub, _) = pb.solve_loads(&scatter(n, nodes, fb))?;
    let kb = pb.stiffness().mul_vec(&ub);
    let ka = pa.stiffness().mul_vec(&ub);
    Ok(ua.iter().zip(kb.iter().zip(&ka)).map(|(u, (b, a))| u * (b - a)).sum())
}
