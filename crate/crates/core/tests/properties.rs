use calderon_core::conductivity::{inverse_gap, mollify, ConductivityModel, Expr, ScalarCoefficient};
use calderon_core::fem::{assemble_stiffness, DirichletProblem};
use calderon_core::geometry::{compute_rho_sets, generate_mesh, place_singularity, GammaSpec, MeshDomain, Shape};
use calderon_core::linalg::{SpdSolver, Sym2, TripletBuilder};
use calderon_core::maps::assemble_full_dn;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

fn coarse_disk() -> Arc<MeshDomain> {
    static M: OnceLock<Arc<MeshDomain>> = OnceLock::new();
    M.get_or_init(|| Arc::new(generate_mesh(Shape::UnitDisk, 0.25, GammaSpec::Full).unwrap())).clone()
}

fn upper_disk() -> Arc<MeshDomain> {
    static M: OnceLock<Arc<MeshDomain>> = OnceLock::new();
    M.get_or_init(|| Arc::new(generate_mesh(Shape::UnitDisk, 0.1, GammaSpec::upper_half_circle()).unwrap())).clone()
}

fn sym2() -> impl Strategy<Value = Sym2> {
    (0.5f64..2.0, -0.3f64..0.3, 0.5f64..2.0).prop_map(|(a, b, c)| Sym2::new(a, b, c))
}

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("pi".to_string()),
        (0.0f64..5.0).prop_map(|v| format!("{v:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just('+'), Just('-'), Just('*')])
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            (inner.clone(), prop_oneof![Just("sin"), Just("cos"), Just("exp")])
                .prop_map(|(a, f)| format!("{f}({a})")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

fn dn_for(mesh: &Arc<MeshDomain>, st: &[Sym2]) -> DMatrix<f64> {
    assemble_full_dn(mesh, st).unwrap().1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn disk_area_converges(h in 0.05f64..0.25) {
        let m = generate_mesh(Shape::UnitDisk, h, GammaSpec::Full).unwrap();
        prop_assert!((m.total_area() - std::f64::consts::PI).abs() <= h * h);
    }

    #[test]
    fn gamma_rho_shrinks_as_rho_grows(r1 in 0.2f64..0.9, dr in 0.05f64..0.5) {
        let m = upper_disk();
        let small = compute_rho_sets(&m, r1).unwrap();
        let large = compute_rho_sets(&m, r1 + dr).unwrap();
        let nodes: HashSet<usize> = small.gamma_rho_nodes.iter().copied().collect();
        prop_assert!(large.gamma_rho_nodes.iter().all(|i| nodes.contains(i)));
        prop_assert!(large.gamma_rho_nodes.len() <= small.gamma_rho_nodes.len());
        for t in 0..m.n_triangles() {
            let c = m.centroid(t);
            prop_assert!(!small.in_scaled(c, 0.5) || small.in_u_rho(c));
        }
    }

    #[test]
    fn placement_stays_in_the_nontangential_cone(theta in 1.3f64..1.85, frac in 0.05f64..0.95) {
        let m = upper_disk();
        let sets = compute_rho_sets(&m, 1.0).unwrap();
        let tau = frac * 0.25;
        let pl = place_singularity(&m, &sets, [theta.cos(), theta.sin()], tau).unwrap();
        prop_assert!(pl.distance <= tau * (1.0 + 1e-12));
        prop_assert!(pl.distance >= pl.c_lower * tau * (1.0 - 1e-12));
        prop_assert!(!m.contains(pl.z_tau));
    }

    #[test]
    fn scalar_multiple_differences_are_exact(m in sym2(), a in 0.6f64..1.6, b in 0.6f64..1.6, x in -1.0f64..1.0) {
        let model = ConductivityModel::scalar_multiple(m, 4.0, 0.5).unwrap();
        let d = model.a([x, 0.2], a).unwrap() - model.a([x, 0.2], b).unwrap();
        prop_assert!((d - m * (a - b)).norm() <= 1e-14 * (1.0 + m.norm()));
    }

    #[test]
    fn inverse_gap_respects_its_lower_bound(a in 0.6f64..1.7, db in 0.0f64..0.3) {
        let model = ConductivityModel::isotropic(2.0);
        let (gap, bound) = inverse_gap(&model, [0.1, 0.3], a, a + db).unwrap();
        prop_assert!(gap >= bound - 1e-12);
    }

    #[test]
    fn mollified_constants_are_unchanged(c in 0.7f64..1.8, eps in 0.05f64..0.5, x in -0.5f64..0.5) {
        let k = ScalarCoefficient::constant(c, 2.0);
        let m = mollify(&k, eps, 1.0).unwrap();
        prop_assert!((m.eval([x, 0.1]).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn stiffness_is_symmetric_and_kills_constants(s in sym2(), seed in 0u64..1000) {
        let m = coarse_disk();
        let st: Vec<Sym2> = (0..m.n_triangles())
            .map(|t| s * (1.0 + 0.5 * (((t as u64 * 7919 + seed) % 97) as f64 / 97.0)))
            .collect();
        let k = assemble_stiffness(&m, &st);
        prop_assert!(k.asymmetry() < 1e-12);
        let r = k.mul_vec(&vec![1.0; m.n_vertices()]);
        prop_assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dn_energy_matches_interior_energy(s in sym2(), g in prop::collection::vec(-1.0f64..1.0, 64)) {
        let m = coarse_disk();
        let st = vec![s; m.n_triangles()];
        let (nodes, d) = assemble_full_dn(&m, &st).unwrap();
        let gv = DVector::from_fn(nodes.len(), |i, _| g[i % g.len()]);
        let mut full = vec![0.0; m.n_vertices()];
        for (&i, v) in nodes.iter().zip(gv.iter()) {
            full[i] = *v;
        }
        let p = DirichletProblem::new(m.clone(), &st).unwrap();
        let (u, _) = p.solve(&full, None).unwrap();
        let lhs = gv.dot(&(&d * &gv));
        let rhs = p.energy(&u, &u);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn dn_is_monotone_and_separates(s in sym2(), bumps in prop::collection::vec(0.0f64..0.5, 8)) {
        let m = coarse_disk();
        let sa = vec![s; m.n_triangles()];
        let sb: Vec<Sym2> = (0..m.n_triangles()).map(|t| s + Sym2::IDENTITY * bumps[t % bumps.len()]).collect();
        let d = dn_for(&m, &sb) - dn_for(&m, &sa);
        let min = d.clone().symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * d.norm().max(1.0));
        let nonzero = bumps.iter().any(|&b| b > 1e-3);
        prop_assert_eq!(d.norm() > 1e-10, nonzero);
    }

    #[test]
    fn expressions_round_trip(src in expr_source(), x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let e = Expr::parse(&src).unwrap();
        let back: Expr = e.to_string().parse().unwrap();
        prop_assert_eq!(&back, &e);
        let (u, v) = (e.eval([x1, x2]), back.eval([x1, x2]));
        prop_assert!(u == v || (u.is_nan() && v.is_nan()));
    }

    #[test]
    fn mesh_text_round_trips(h in 0.1f64..0.4, square in any::<bool>()) {
        let m = if square {
            generate_mesh(Shape::UnitSquare, h, GammaSpec::square_top()).unwrap()
        } else {
            generate_mesh(Shape::UnitDisk, h, GammaSpec::upper_half_circle()).unwrap()
        };
        let back = MeshDomain::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back.hash(), m.hash());
        prop_assert_eq!(back.n_triangles(), m.n_triangles());
    }

    #[test]
    fn sparse_solver_matches_dense_cholesky(
        n in 5usize..40,
        w in prop::collection::vec(0.1f64..1.0, 80),
        b in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let mut tb = TripletBuilder::new(n);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i * 7 + 3) % n;
            let k = (i + 1) % n;
            for (a, c, v) in [(i, j, w[i]), (i, k, w[i + 40])] {
                if a != c {
                    for (p, q, s) in [(a, a, v), (c, c, v), (a, c, -v), (c, a, -v)] {
                        tb.add(p, q, s);
                        dense[(p, q)] += s;
                    }
                }
            }
            tb.add(i, i, 0.5);
            dense[(i, i)] += 0.5;
        }
        let x = SpdSolver::new(tb.build()).unwrap().solve(&b[..n]).unwrap();
        let y = dense.cholesky().unwrap().solve(&DVector::from_column_slice(&b[..n]));
        let err = x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10 * y.amax().max(1.0));
    }
}

#[test]
fn dirichlet_error_is_second_order() {
    let f = |p: [f64; 2]| p[0].sin() * p[1].exp();
    let errs: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let m = Arc::new(generate_mesh(Shape::UnitSquare, h, GammaSpec::square_top()).unwrap());
            let st = vec![Sym2::IDENTITY; m.n_triangles()];
            let g: Vec<f64> = m.vertices().iter().map(|&p| f(p)).collect();
            let (u, _) = DirichletProblem::new(m.clone(), &st).unwrap().solve(&g, None).unwrap();
            let mut e2 = 0.0;
            for t in 0..m.n_triangles() {
                let tri = m.triangles()[t];
                let p = m.triangle_points(t);
                for k in 0..3 {
                    let mid = [(p[k][0] + p[(k + 1) % 3][0]) / 2.0, (p[k][1] + p[(k + 1) % 3][1]) / 2.0];
                    let uh = (u[tri[k]] + u[tri[(k + 1) % 3]]) / 2.0;
                    e2 += m.triangle_area(t) / 3.0 * (uh - f(mid)).powi(2);
                }
            }
            (m.mesh_size(), e2.sqrt())
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        assert!(order >= 1.8, "{errs:?}");
    }
}
