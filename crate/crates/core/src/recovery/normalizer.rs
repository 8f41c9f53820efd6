use crate::conductivity::{ConductivityModel, ScalarCoefficient};
use crate::error::{Error, Result};
use crate::geometry::{MeshDomain, Point, SingularityPlacement};
use crate::linalg::Sym2;
use crate::quadrature::gauss_on;
use std::f64::consts::PI;

const PIECE_NODES: usize = 24;

/// Directional kernel of `∇Φ_a·M̄∇Φ_b` in polar coordinates about z: the integrand is `h(θ)/r²`.
#[derive(Debug, Clone, Copy)]
pub struct PolarKernel {
    pub m_a: Sym2,
    pub m_b: Sym2,
    pub m_bar: Sym2,
    pub scale: f64,
}

impl PolarKernel {
    /// Kernel for the frozen fundamental solutions of `σ_a(z)` and `σ_b(z)`.
    pub fn new(sigma_a: Sym2, sigma_b: Sym2, m_bar: Sym2) -> Result<Self> {
        let inv = |s: Sym2| s.inverse().ok_or_else(|| Error::NotAdmissible("singular conductivity at z".into()));
        let ca = 1.0 / (4.0 * PI * sigma_a.det().sqrt());
        let cb = 1.0 / (4.0 * PI * sigma_b.det().sqrt());
        Ok(PolarKernel { m_a: inv(sigma_a)?, m_b: inv(sigma_b)?, m_bar, scale: 4.0 * ca * cb })
    }

    pub fn h(&self, theta: f64) -> f64 {
        let u = [theta.cos(), theta.sin()];
        let mau = self.m_a.apply(u);
        let mbu = self.m_b.apply(u);
        self.scale * self.m_bar.form(mau, mbu) / (self.m_a.form(u, u) * self.m_b.form(u, u))
    }
}

/// `∮_{∂Ω} F(r(θ), θ) dθ` over boundary edges meeting `B_{r0}(z)`, with z outside Ω.
///
/// `f(θ, r)` is the radial antiderivative, required to vanish for `r ≥ r0`.
fn boundary_polar_integral(mesh: &MeshDomain, z: Point, r0: f64, f: &impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for e in mesh.boundary_edges() {
        let a = mesh.vertex(e.nodes[0]);
        let b = mesh.vertex(e.nodes[1]);
        let (dseg, _) = crate::geometry::segment_distance(z, a, b);
        if dseg >= r0 {
            continue;
        }
        let da = [a[0] - z[0], a[1] - z[1]];
        let db = [b[0] - z[0], b[1] - z[1]];
        let ta = da[1].atan2(da[0]);
        let cross = da[0] * db[1] - da[1] * db[0];
        let dot = da[0] * db[0] + da[1] * db[1];
        let span = cross.atan2(dot);
        if span == 0.0 {
            continue;
        }
        let ev = [b[0] - a[0], b[1] - a[1]];
        // parameters where |a + s e − z| = r0
        let qa = ev[0] * ev[0] + ev[1] * ev[1];
        let qb = da[0] * ev[0] + da[1] * ev[1];
        let qc = da[0] * da[0] + da[1] * da[1] - r0 * r0;
        let mut cuts = vec![0.0, 1.0];
        let disc = qb * qb - qa * qc;
        if disc > 0.0 {
            for s in [(-qb - disc.sqrt()) / qa, (-qb + disc.sqrt()) / qa] {
                if s > 0.0 && s < 1.0 {
                    cuts.push(s);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let angle_at = |s: f64| {
            let p = [da[0] + s * ev[0], da[1] + s * ev[1]];
            let c = da[0] * p[1] - da[1] * p[0];
            let d = da[0] * p[0] + da[1] * p[1];
            c.atan2(d)
        };
        let nrm = [ev[1], -ev[0]];
        let num = nrm[0] * da[0] + nrm[1] * da[1];
        for w in cuts.windows(2) {
            let (t0, t1) = (angle_at(w[0]), angle_at(w[1]));
            if t1 == t0 {
                continue;
            }
            for (dt, wt) in gauss_on(t0, t1, PIECE_NODES) {
                let th = ta + dt;
                let r = num / (nrm[0] * th.cos() + nrm[1] * th.sin());
                total += wt * f(th, r);
            }
        }
    }
    total
}

/// Measure of `B_{r0}(z) ∩ Ω` for z outside Ω.
pub fn ball_intersection_area(mesh: &MeshDomain, z: Point, r0: f64) -> f64 {
    boundary_polar_integral(mesh, z, r0, &|_, r| 0.5 * (r.min(r0).powi(2) - r0 * r0))
}

/// `∫_{B_{r0}(z)∩Ω} h(θ)/|x−z|² dx` for z outside Ω.
pub fn polar_kernel_integral(mesh: &MeshDomain, z: Point, r0: f64, kernel: &PolarKernel) -> f64 {
    boundary_polar_integral(mesh, z, r0, &|th, r| kernel.h(th) * (r.min(r0) / r0).ln())
}

/// Normalizer `K(τ) = ∫_{B_{r0}(z_τ)∩Ω} ∇Φ_a·M̄∇Φ_b dx`, with `M̄ = D_tA(x⁰, ·)`.
pub fn normalizer(
    mesh: &MeshDomain,
    model: &ConductivityModel,
    coeff_a: &ScalarCoefficient,
    coeff_b: &ScalarCoefficient,
    placement: &SingularityPlacement,
    r0: f64,
) -> Result<f64> {
    let z = placement.z_tau;
    if !(r0 > 2.0 * placement.tau) {
        return Err(Error::DegenerateIntersection(format!("r0 = {r0} must exceed 2 tau = {}", 2.0 * placement.tau)));
    }
    let area = ball_intersection_area(mesh, z, r0);
    if area < 1e-6 {
        return Err(Error::DegenerateIntersection(format!("intersection area {area:e}")));
    }
    let sa = model.a(z, coeff_a.eval(z)?)?;
    let sb = model.a(z, coeff_b.eval(z)?)?;
    let m_bar = model.dt_a(placement.x0)?;
    let k = polar_kernel_integral(mesh, z, r0, &PolarKernel::new(sa, sb, m_bar)?);
    if !(k > 0.0) {
        return Err(Error::DegenerateIntersection(format!("normalizer is not positive: {k:e}")));
    }
    Ok(k)
}

/// `(1/4π²)·2∫_τ^{r0} arccos(τ/r)/r dr`, the isotropic value for a half-plane at distance τ.
pub fn half_plane_normalizer(tau: f64, r0: f64) -> f64 {
    let s: f64 = gauss_on(0.0, (tau / r0).acos(), 200).map(|(p, w)| w * p * p.tan()).sum();
    2.0 * s / (4.0 * PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_square, GammaSpec};
    use crate::quadrature::triangle_adaptive;

    #[test]
    fn half_plane_oracle_on_square_top() {
        let mesh = generate_square(0.05, GammaSpec::square_top()).unwrap();
        let k = PolarKernel::new(Sym2::IDENTITY, Sym2::IDENTITY, Sym2::IDENTITY).unwrap();
        for tau in [0.02, 0.05] {
            let z = [0.5, 1.0 + tau];
            let v = polar_kernel_integral(&mesh, z, 0.3, &k);
            let o = half_plane_normalizer(tau, 0.3);
            assert!((v / o - 1.0).abs() < 1e-10, "tau {tau}: {v} vs {o}");
            let area = ball_intersection_area(&mesh, z, 0.3);
            let exact = 0.09 * (tau / 0.3).acos() - tau * (0.09 - tau * tau).sqrt();
            assert!((area - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn anisotropic_integral_matches_volume_quadrature() {
        let mesh = generate_square(0.1, GammaSpec::square_top()).unwrap();
        let sa = Sym2::new(1.5, 0.2, 0.8);
        let sb = Sym2::new(1.2, -0.1, 1.1);
        let mb = Sym2::new(1.0, 0.3, 2.0);
        let k = PolarKernel::new(sa, sb, mb).unwrap();
        let z = [0.45, 1.08];
        let r0 = 0.4;
        let v = polar_kernel_integral(&mesh, z, r0, &k);
        let (ma, mbi) = (sa.inverse().unwrap(), sb.inverse().unwrap());
        let ca = 1.0 / (4.0 * PI * sa.det().sqrt());
        let cb = 1.0 / (4.0 * PI * sb.det().sqrt());
        let mut brute = 0.0;
        for t in 0..mesh.n_triangles() {
            brute += triangle_adaptive(
                mesh.triangle_points(t),
                &mut |x| {
                    let d = [x[0] - z[0], x[1] - z[1]];
                    let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    if r > r0 {
                        return 0.0;
                    }
                    let ga = ma.apply(d);
                    let gb = mbi.apply(d);
                    4.0 * ca * cb * mb.form(ga, gb) / (ma.form(d, d) * mbi.form(d, d))
                },
                1e-9,
                7,
            );
        }
        assert!((v / brute - 1.0).abs() < 2e-3, "{v} vs {brute}");
    }
}
