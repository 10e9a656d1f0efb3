//! Shared scenario builders for the integration suites. These mirror the
//! bundled scenario library: the planar rotation, the coadjoint orbit
//! structure on R^3, the twisted examples and the broken bivector.

use momsec_core::algebroid::{Connection, LieAlgebroid};
use momsec_core::courant::{graph_quasi_poisson, CourantStructure};
use momsec_core::expr::{parse, Chart, Expr, Symbols};
use momsec_core::momentum::{Geometry, MomentumData};
use momsec_core::tensor::Antisym;

pub fn exprs(src: &[&str], syms: &Symbols) -> Vec<Expr> {
    src.iter().map(|s| parse(s, syms).unwrap()).collect()
}

pub fn antisym(dim: usize, degree: usize, entries: &[(&[u8], &str)], syms: &Symbols) -> Antisym<Expr> {
    let mut a = Antisym::zeros(dim, degree, Expr::zero());
    for (idx, src) in entries {
        a.set(idx, parse(src, syms).unwrap());
    }
    a
}

/// so(3) action algebroid on R^3: `rho^i_a = eps_{aik} x^k`,
/// `C^c_{ab} = eps_{abc}`.
pub fn so3_algebroid() -> LieAlgebroid {
    let chart = Chart::standard(3);
    let syms = chart.symbols();
    let rho = vec![
        exprs(&["0", "x3", "-x2"], &syms),
        exprs(&["-x3", "0", "x1"], &syms),
        exprs(&["x2", "-x1", "0"], &syms),
    ];
    let mut c = Vec::new();
    for cc in 0..3u8 {
        let (a, b) = match cc {
            0 => (1u8, 2u8),
            1 => (2u8, 0u8),
            _ => (0u8, 1u8),
        };
        let mut t = Antisym::zeros(3, 2, Expr::zero());
        t.set(&[a, b], Expr::one());
        c.push(t);
    }
    LieAlgebroid::new(chart, 3, rho, c)
}

pub fn so3_pi() -> Antisym<Expr> {
    let syms = Chart::standard(3).symbols();
    antisym(
        3,
        2,
        &[(&[0, 1], "x3"), (&[0, 2], "-x2"), (&[1, 2], "x1")],
        &syms,
    )
}

/// Scenario: coadjoint structure with `mu_a = x^a` (linear Poisson).
pub fn so3_coadjoint() -> MomentumData {
    let alg = so3_algebroid();
    let syms = alg.chart.symbols();
    MomentumData {
        conn: Connection::trivial(3, 3),
        mu: exprs(&["x1", "x2", "x3"], &syms),
        geometry: Geometry::Poisson {
            pi: so3_pi(),
            h: None,
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scenario: planar rotation with the area form,
/// `mu = ((x1)^2 + (x2)^2)/2`.
pub fn rotation_r2() -> MomentumData {
    let chart = Chart::standard(2);
    let syms = chart.symbols();
    let alg = LieAlgebroid::abelian(chart, vec![exprs(&["-x2", "x1"], &syms)]);
    MomentumData {
        conn: Connection::trivial(1, 2),
        mu: exprs(&["(x1^2 + x2^2)/2"], &syms),
        geometry: Geometry::Presymplectic {
            omega: antisym(2, 2, &[(&[0, 1], "1")], &syms),
            h: None,
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scenario: twisted pre-symplectic data on R^3 with `d omega + H = 0` and
/// the degenerate compatible momentum section.
pub fn twisted_h_r3() -> MomentumData {
    let chart = Chart::standard(3);
    let syms = chart.symbols();
    let alg = LieAlgebroid::abelian(chart, vec![exprs(&["0", "0", "0"], &syms)]);
    MomentumData {
        conn: Connection::trivial(1, 3),
        mu: exprs(&["0"], &syms),
        geometry: Geometry::Presymplectic {
            omega: antisym(3, 2, &[(&[1, 2], "-x1")], &syms),
            h: Some(antisym(3, 3, &[(&[0, 1, 2], "1")], &syms)),
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scenario: non-Poisson bivector with a trivial abelian algebroid.
pub fn broken_pi_r3() -> MomentumData {
    let chart = Chart::standard(3);
    let syms = chart.symbols();
    let alg = LieAlgebroid::abelian(chart, vec![exprs(&["0", "0", "0"], &syms)]);
    MomentumData {
        conn: Connection::trivial(1, 3),
        mu: exprs(&["0"], &syms),
        geometry: Geometry::Poisson {
            pi: antisym(
                3,
                2,
                &[(&[0, 1], "x1"), (&[0, 2], "x2"), (&[1, 2], "1")],
                &syms,
            ),
            h: None,
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scenario: twisted Poisson data on R^4: `pi = -omega^{-1}` for
/// `omega = (1+x3) dx1^dx2 + dx3^dx4`, `H = -dx1^dx2^dx3`.
pub fn twisted_pi_r4() -> MomentumData {
    let chart = Chart::standard(4);
    let syms = chart.symbols();
    let alg = LieAlgebroid::abelian(chart, vec![exprs(&["0", "0", "0", "0"], &syms)]);
    MomentumData {
        conn: Connection::trivial(1, 4),
        mu: exprs(&["0"], &syms),
        geometry: Geometry::Poisson {
            pi: antisym(
                4,
                2,
                &[(&[0, 1], "1/(1 + x3)"), (&[2, 3], "1")],
                &syms,
            ),
            h: Some(antisym(4, 3, &[(&[0, 1, 2], "-1")], &syms)),
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scenario: commuting planar rotations on R^4, the inverse symplectic
/// bivector and the standard torus momentum map, packaged as a quasi-Poisson
/// Dirac geometry with an abelian two-dimensional algebra.
pub fn quasi_poisson_torus() -> MomentumData {
    let chart = Chart::standard(4);
    let syms = chart.symbols();
    let rho = vec![
        exprs(&["-x2", "x1", "0", "0"], &syms),
        exprs(&["0", "0", "-x4", "x3"], &syms),
    ];
    let alg = LieAlgebroid::abelian(chart, rho.clone());
    let pi = antisym(4, 2, &[(&[0, 1], "1"), (&[2, 3], "1")], &syms);
    let n = 2;
    let c_tilde = vec![Antisym::zeros(n, 2, Expr::zero()); n];
    let phi = Antisym::zeros(n, 3, Expr::zero());
    let frame = graph_quasi_poisson(&pi, &rho);
    MomentumData {
        conn: Connection::trivial(2, 4),
        mu: exprs(&["(x1^2 + x2^2)/2", "(x3^2 + x4^2)/2"], &syms),
        geometry: Geometry::Dirac {
            cs: CourantStructure::QuasiPoisson {
                dim: 4,
                n,
                c_tilde,
                phi,
                rho_g: rho,
            },
            frame,
        },
        p2_sign: 1.0,
        alg,
    }
}

/// Scale the momentum section by a factor (the generic mutation).
pub fn scale_mu(md: &MomentumData, factor: f64) -> MomentumData {
    let mut out = md.clone();
    for m in out.mu.iter_mut() {
        *m = Expr::mul(Expr::num(factor), m.clone());
    }
    out
}

/// Add a seeded random polynomial perturbation to every component of `mu`.
pub fn perturb_mu(md: &MomentumData, seed: u64, amp: f64) -> MomentumData {
    use momsec_core::sample::SplitMix64;
    let mut rng = SplitMix64::new(seed);
    let d = md.dim();
    let mut out = md.clone();
    for m in out.mu.iter_mut() {
        let mut pert = Expr::num(rng.uniform(-1.0, 1.0));
        for i in 0..d {
            pert = Expr::add(
                pert,
                Expr::mul(Expr::num(rng.uniform(-1.0, 1.0)), Expr::var(i)),
            );
            for j in i..d {
                pert = Expr::add(
                    pert,
                    Expr::mul(
                        Expr::num(rng.uniform(-1.0, 1.0)),
                        Expr::mul(Expr::var(i), Expr::var(j)),
                    ),
                );
            }
        }
        *m = Expr::add(m.clone(), Expr::mul(Expr::num(amp), pert));
    }
    out
}
