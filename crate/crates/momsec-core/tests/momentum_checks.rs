//! Momentum-section suites on the bundled scenarios: the anchored triples,
//! the Dirac conditions over the corresponding graphs, verdict equivalences
//! under mutations, and the three-route bracket-compatibility agreement.

mod common;

use common::*;
use momsec_core::momentum::{
    check_d1, check_d2, check_d2_standard_equiv, check_d3, check_geometry_structure,
    check_momentum_map, check_p, check_quasi_poisson, check_s, check_twisted_poisson,
    check_twisted_presymplectic, nabla_mu, D1Candidate,
};
use momsec_core::report::Status;
use momsec_core::sample::sample_points;

const TOL: f64 = 1e-9;

fn pts(dim: usize) -> Vec<Vec<f64>> {
    sample_points(dim, 64, -2.0, 2.0, 42)
}

#[test]
fn nabla_mu_rotation_scenario() {
    let md = rotation_r2();
    let nm = nabla_mu(&md, &[0.7, -1.2]).unwrap();
    // d mu = x1 dx1 + x2 dx2
    assert!((nm[0][0].v - 0.7).abs() < 1e-14);
    assert!((nm[0][1].v + 1.2).abs() < 1e-14);
}

#[test]
fn s_triple_passes_on_rotation() {
    let md = rotation_r2();
    let rep = check_s(&md, &pts(2), 1e-10);
    assert!(rep.all_passed(), "{:?}", rep.entries);
}

#[test]
fn s2_fails_for_scaled_mu() {
    let md = scale_mu(&rotation_r2(), 2.0);
    let rep = check_s(&md, &pts(2), 1e-10);
    let s2 = rep.entry("momentum.S2").unwrap();
    assert!(matches!(s2.status, Status::Fail));
    // defect is linear: max |x| over the box is about 2
    assert!(s2.max_residual > 1.0);
}

#[test]
fn p_triple_passes_on_coadjoint() {
    let md = so3_coadjoint();
    let rep = check_p(&md, &pts(3), 1e-10);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    assert!(check_geometry_structure(&md, &pts(3), 1e-10).all_passed());
}

#[test]
fn p_triple_zero_algebroid_trivial() {
    let mut md = broken_pi_r3();
    // constant mu and zero anchor over a genuinely Poisson pi
    md.geometry = momsec_core::momentum::Geometry::Poisson {
        pi: so3_pi(),
        h: None,
    };
    md.mu = exprs(&["1"], &md.alg.chart.symbols());
    let rep = check_p(&md, &pts(3), 1e-12);
    assert!(rep.all_passed(), "{:?}", rep.entries);
}

#[test]
fn p2_fails_for_quadratic_perturbation() {
    // mu_1 -> mu_1 + x1^2 breaks the anchor compatibility
    let mut md = so3_coadjoint();
    let syms = md.alg.chart.symbols();
    md.mu[0] = momsec_core::expr::parse("x1 + x1^2", &syms).unwrap();
    let rep = check_p(&md, &pts(3), 1e-10);
    assert!(matches!(
        rep.entry("momentum.P2").unwrap().status,
        Status::Fail
    ));
}

#[test]
fn d_conditions_pass_on_both_base_scenarios() {
    for md in [rotation_r2(), so3_coadjoint()] {
        let points = pts(md.dim());
        let d1 = check_d1(&md, &D1Candidate::GraphFrame, &points, TOL);
        assert!(d1.all_passed(), "{:?}", d1.entries);
        let d1b = check_d1(&md, &D1Candidate::RhoNablaMu, &points, TOL);
        assert!(d1b.all_passed(), "{:?}", d1b.entries);
        let d2 = check_d2(&md, &points, TOL);
        assert!(d2.all_passed(), "{:?}", d2.entries);
        let d3 = check_d3(&md, &points, TOL);
        assert!(d3.all_passed(), "{:?}", d3.entries);
    }
}

#[test]
fn d1_detects_unpreserved_two_form() {
    // translation along x1 with omega = x1 dx1^dx2: L_{d_1} omega != 0
    use momsec_core::algebroid::{Connection, LieAlgebroid};
    use momsec_core::expr::Chart;
    let chart = Chart::standard(2);
    let syms = chart.symbols();
    let alg = LieAlgebroid::abelian(chart, vec![exprs(&["1", "0"], &syms)]);
    let md = momsec_core::momentum::MomentumData {
        conn: Connection::trivial(1, 2),
        mu: exprs(&["0"], &syms),
        geometry: momsec_core::momentum::Geometry::Presymplectic {
            omega: antisym(2, 2, &[(&[0, 1], "x1")], &syms),
            h: None,
        },
        p2_sign: 1.0,
        alg,
    };
    let rep = check_d1(&md, &D1Candidate::GraphFrame, &pts(2), TOL);
    assert!(matches!(
        rep.entry("momentum.D1").unwrap().status,
        Status::Fail
    ));
}

#[test]
fn d2_membership_fails_for_scaled_mu() {
    let md = scale_mu(&so3_coadjoint(), 2.0);
    let rep = check_d2(&md, &pts(3), TOL);
    assert!(matches!(
        rep.entry("momentum.D2").unwrap().status,
        Status::Fail
    ));
}

#[test]
fn d3_equivariance_detects_dropped_structure_constants() {
    let mut md = so3_coadjoint();
    for c in md.alg.c.iter_mut() {
        *c = momsec_core::tensor::Antisym::zeros(3, 2, momsec_core::expr::Expr::zero());
    }
    let rep = check_d3(&md, &[vec![1.0, 2.0, 3.0]], TOL);
    let eq = rep.entry("momentum.D3.equivariance").unwrap();
    assert!(matches!(eq.status, Status::Fail));
    assert!(eq.max_residual > 1e-2);
}

#[test]
fn specialization_coherence_on_mutations() {
    // the S/P verdicts must equal the D verdicts over the graphs, on the
    // base scenarios and on random mutations of mu
    let base_a = rotation_r2();
    let base_b = so3_coadjoint();
    for k in 0..20u64 {
        let amp = if k % 4 == 0 { 0.0 } else { 0.3 };
        for (idx, base) in [&base_a, &base_b].iter().enumerate() {
            let md = perturb_mu(base, 1000 + k * 7 + idx as u64, amp);
            let points = pts(md.dim());
            let classical = match md.geometry {
                momsec_core::momentum::Geometry::Presymplectic { .. } => {
                    let rep = check_s(&md, &points, TOL);
                    [
                        rep.entry("momentum.S1").unwrap().passed(),
                        rep.entry("momentum.S2").unwrap().passed(),
                        rep.entry("momentum.S3").unwrap().passed(),
                    ]
                }
                momsec_core::momentum::Geometry::Poisson { .. } => {
                    let rep = check_p(&md, &points, TOL);
                    [
                        rep.entry("momentum.P1").unwrap().passed(),
                        rep.entry("momentum.P2").unwrap().passed(),
                        rep.entry("momentum.P3").unwrap().passed(),
                    ]
                }
                _ => unreachable!(),
            };
            let d1 = check_d1(&md, &D1Candidate::GraphFrame, &points, TOL)
                .entry("momentum.D1")
                .unwrap()
                .passed();
            let d2 = check_d2(&md, &points, TOL)
                .entry("momentum.D2")
                .unwrap()
                .passed();
            let d3 = check_d3(&md, &points, TOL)
                .entry("momentum.D3.direct")
                .unwrap()
                .passed();
            assert_eq!(classical[0], d1, "D1 vs first condition, mutation {k}");
            assert_eq!(classical[1], d2, "D2 vs second condition, mutation {k}");
            assert_eq!(classical[2], d3, "D3 vs third condition, mutation {k}");
        }
    }
}

#[test]
fn d3_paths_agree_under_d2() {
    for md in [rotation_r2(), so3_coadjoint()] {
        let points = pts(md.dim());
        let rep = check_d3(&md, &points, TOL);
        let agree = rep.entry("momentum.D3.path_agreement").unwrap();
        assert!(agree.passed(), "{:?}", agree);
        assert!(agree.max_residual < 1e-9);
    }
}

#[test]
fn d2_standard_equivalence_tracks_direct_verdict() {
    let md = so3_coadjoint();
    let points = pts(3);
    let rep = check_d2_standard_equiv(&md, &points, TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    // broken mu: both paths must fail together
    for k in 0..20u64 {
        let broken = perturb_mu(&so3_coadjoint(), 400 + k, 0.4);
        let rep = check_d2_standard_equiv(&broken, &points, TOL);
        assert!(
            rep.entry("momentum.D2equiv.agreement").unwrap().passed(),
            "verdict equivalence failed on mutation {k}: {:?}",
            rep.entries
        );
    }
}

#[test]
fn twisted_presymplectic_scenario() {
    let md = twisted_h_r3();
    let rep = check_twisted_presymplectic(&md, &pts(3), TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    // omega without the -x1 factor: the structure residual is 2
    let syms = md.alg.chart.symbols();
    let mut bad = md.clone();
    bad.geometry = momsec_core::momentum::Geometry::Presymplectic {
        omega: antisym(3, 2, &[(&[1, 2], "x1")], &syms),
        h: Some(antisym(3, 3, &[(&[0, 1, 2], "1")], &syms)),
    };
    let rep = check_twisted_presymplectic(&bad, &pts(3), TOL);
    let st = rep.entry("momentum.twisted_structure").unwrap();
    assert!(matches!(st.status, Status::Fail));
    assert!((st.max_residual - 2.0).abs() < 1e-12);
}

#[test]
fn twisted_presymplectic_reduces_to_plain_s_when_h_vanishes() {
    let md = rotation_r2();
    let points = pts(2);
    let s = check_s(&md, &points, TOL);
    let t = check_twisted_presymplectic(&md, &points, TOL);
    for (id_s, id_t) in [
        ("momentum.S1", "momentum.tS1"),
        ("momentum.S2", "momentum.tS2"),
        ("momentum.S3", "momentum.tS3"),
    ] {
        let a = s.entry(id_s).unwrap().max_residual;
        let b = t.entry(id_t).unwrap().max_residual;
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn twisted_poisson_scenario_r4() {
    let md = twisted_pi_r4();
    // avoid the x3 = -1 hyperplane of the coefficient pole
    let points = sample_points(4, 64, -0.5, 0.5, 42);
    let rep = check_twisted_poisson(&md, &points, TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    // the graph of pi in the twisted standard structure closes
    let (cs, frame) = md.dirac_pair();
    let dirac = momsec_core::courant::check_dirac(&cs, &frame, &points, TOL);
    assert!(dirac.all_passed(), "{:?}", dirac.entries);
    // mismatched H: the structure check fails by the imbalance
    let mut bad = md.clone();
    if let momsec_core::momentum::Geometry::Poisson { h, .. } = &mut bad.geometry {
        *h = Some(antisym(
            4,
            3,
            &[(&[0, 1, 2], "1")],
            &bad.alg.chart.symbols(),
        ));
    }
    let rep = check_twisted_poisson(&bad, &points, TOL);
    assert!(matches!(
        rep.entry("momentum.twisted_poisson_structure").unwrap().status,
        Status::Fail
    ));
}

#[test]
fn quasi_poisson_torus_scenario() {
    let md = quasi_poisson_torus();
    let points = pts(4);
    assert!(check_geometry_structure(&md, &points, TOL).all_passed());
    let rep = check_quasi_poisson(&md, &points, TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    // the quasi-Poisson graph is a Dirac structure of the extended bundle
    let (cs, frame) = md.dirac_pair();
    let dirac = momsec_core::courant::check_dirac(&cs, &frame, &points, TOL);
    assert!(dirac.all_passed(), "{:?}", dirac.entries);
    // and D2 holds for the torus momentum map
    let d2 = check_d2(&md, &points, TOL);
    assert!(d2.all_passed(), "{:?}", d2.entries);
}

#[test]
fn quasi_poisson_su2_degenerate() {
    // su(2) constants with pi = 0, rho_g = 0 and constant mu
    use momsec_core::courant::{graph_quasi_poisson, CourantStructure};
    use momsec_core::expr::{Chart, Expr};
    use momsec_core::tensor::Antisym;
    let chart = Chart::standard(3);
    let syms = chart.symbols();
    let alg = momsec_core::algebroid::LieAlgebroid::abelian(
        chart,
        vec![exprs(&["0", "0", "0"], &syms)],
    );
    let n = 3;
    let mut c_tilde = Vec::new();
    for cc in 0..3u8 {
        let (a, b) = match cc {
            0 => (1u8, 2u8),
            1 => (2u8, 0u8),
            _ => (0u8, 1u8),
        };
        let mut t = Antisym::zeros(n, 2, Expr::zero());
        t.set(&[a, b], Expr::one());
        c_tilde.push(t);
    }
    let mut phi = Antisym::zeros(n, 3, Expr::zero());
    phi.set(&[0, 1, 2], Expr::one());
    let pi = Antisym::zeros(3, 2, Expr::zero());
    let rho_g = vec![vec![Expr::zero(); 3]; 3];
    let frame = graph_quasi_poisson(&pi, &rho_g);
    let md = momsec_core::momentum::MomentumData {
        conn: momsec_core::algebroid::Connection::trivial(1, 3),
        mu: exprs(&["1"], &syms),
        geometry: momsec_core::momentum::Geometry::Dirac {
            cs: CourantStructure::QuasiPoisson {
                dim: 3,
                n,
                c_tilde,
                phi,
                rho_g,
            },
            frame,
        },
        p2_sign: 1.0,
        alg,
    };
    let points = pts(3);
    let rep = check_quasi_poisson(&md, &points, TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
}

#[test]
fn momentum_map_reduction() {
    let md = rotation_r2();
    let points = pts(2);
    let rep = check_momentum_map(&md, &points, TOL);
    assert!(rep.all_passed(), "{:?}", rep.entries);
    // doubled two-form with unscaled mu: the first condition fails
    let syms = md.alg.chart.symbols();
    let mut bad = md.clone();
    bad.geometry = momsec_core::momentum::Geometry::Presymplectic {
        omega: antisym(2, 2, &[(&[0, 1], "2")], &syms),
        h: None,
    };
    let rep = check_momentum_map(&bad, &points, TOL);
    assert!(matches!(
        rep.entry("momentum.MM1").unwrap().status,
        Status::Fail
    ));
    // zero action with constant mu passes trivially
    let chart = momsec_core::expr::Chart::standard(2);
    let syms = chart.symbols();
    let zero = momsec_core::momentum::MomentumData {
        alg: momsec_core::algebroid::LieAlgebroid::abelian(
            chart,
            vec![exprs(&["0", "0"], &syms)],
        ),
        conn: momsec_core::algebroid::Connection::trivial(1, 2),
        mu: exprs(&["3"], &syms),
        geometry: momsec_core::momentum::Geometry::Presymplectic {
            omega: antisym(2, 2, &[(&[0, 1], "1")], &syms),
            h: None,
        },
        p2_sign: 1.0,
    };
    assert!(check_momentum_map(&zero, &points, TOL).all_passed());
}

#[test]
fn mutation_residuals_scale_linearly() {
    // first-order linearity of the defect under mu -> mu + eps * delta
    let base = so3_coadjoint();
    let points = pts(3);
    let r1 = {
        let md = perturb_mu(&base, 99, 1e-4);
        check_p(&md, &points, 1e-30)
            .entry("momentum.P2")
            .unwrap()
            .max_residual
    };
    let r2 = {
        let md = perturb_mu(&base, 99, 2e-4);
        check_p(&md, &points, 1e-30)
            .entry("momentum.P2")
            .unwrap()
            .max_residual
    };
    assert!((r2 / r1 - 2.0).abs() < 1e-6, "ratio {}", r2 / r1);
}

#[test]
fn quasi_poisson_su2_coadjoint_graph_closes() {
    // su(2) constants with the coadjoint action and pi = 0: the Cartan
    // trivector image vanishes on the orbit directions, so the graph is
    // Dirac with nontrivial phi in play
    use momsec_core::courant::{check_dirac, graph_quasi_poisson, CourantStructure};
    use momsec_core::expr::{Chart, Expr};
    use momsec_core::tensor::Antisym;
    let chart = Chart::standard(3);
    let syms = chart.symbols();
    let rho_g = vec![
        exprs(&["0", "x3", "-x2"], &syms),
        exprs(&["-x3", "0", "x1"], &syms),
        exprs(&["x2", "-x1", "0"], &syms),
    ];
    let n = 3;
    let mut c_tilde = Vec::new();
    for cc in 0..3u8 {
        let (a, b) = match cc {
            0 => (1u8, 2u8),
            1 => (2u8, 0u8),
            _ => (0u8, 1u8),
        };
        let mut t = Antisym::zeros(n, 2, Expr::zero());
        t.set(&[a, b], Expr::one());
        c_tilde.push(t);
    }
    let mut phi = Antisym::zeros(n, 3, Expr::zero());
    phi.set(&[0, 1, 2], Expr::one());
    let pi = Antisym::zeros(3, 2, Expr::zero());
    let cs = CourantStructure::QuasiPoisson {
        dim: 3,
        n,
        c_tilde,
        phi,
        rho_g: rho_g.clone(),
    };
    let frame = graph_quasi_poisson(&pi, &rho_g);
    // rank drops at the origin; sample away from it
    let points = sample_points(3, 32, 0.3, 2.0, 42);
    let rep = check_dirac(&cs, &frame, &points, 1e-9);
    assert!(rep.all_passed(), "{:?}", rep.entries);
}
