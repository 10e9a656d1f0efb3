//! Lie algebroid data in local coordinates: anchor components, structure
//! functions, axiom checks, the fiberwise differential, connections and the
//! associated torsion/curvature tensors.
//!
//! Tensors that admit both a coordinate expansion and a definition-level
//! (section-argument) evaluation are implemented twice; the test suites keep
//! the two paths equal, which pins every sign convention in this module.
//!
//! Connection sign convention: `nabla e_a = +omega^b_{ai} dx^i (x) e_b`, so
//! sections of the bundle differentiate as `d s^a + omega^a_{bi} s^b` and
//! dual sections as `d mu_a - omega^b_{ai} mu_b`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{Chart, EvalError, Expr};
use crate::jet::{seed_point, Jet};
use crate::report::{CheckReport, ResTrack, Status};
use crate::tensor::Antisym;

/// `rho[a][i] = rho^i_a`, `c[cc]` antisymmetric in the two lower indices.
#[derive(Debug, Clone)]
pub struct LieAlgebroid {
    pub chart: Chart,
    pub rank: usize,
    pub rho: Vec<Vec<Expr>>,
    pub c: Vec<Antisym<Expr>>,
}

impl LieAlgebroid {
    pub fn new(chart: Chart, rank: usize, rho: Vec<Vec<Expr>>, c: Vec<Antisym<Expr>>) -> Self {
        assert_eq!(rho.len(), rank);
        assert!(rho.iter().all(|r| r.len() == chart.dim()));
        assert_eq!(c.len(), rank);
        assert!(c.iter().all(|t| t.dim() == rank && t.degree() == 2));
        LieAlgebroid {
            chart,
            rank,
            rho,
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Abelian algebroid: given anchor columns, all brackets zero.
    pub fn abelian(chart: Chart, rho: Vec<Vec<Expr>>) -> Self {
        let rank = rho.len();
        let c = (0..rank)
            .map(|_| Antisym::zeros(rank, 2, Expr::zero()))
            .collect();
        LieAlgebroid::new(chart, rank, rho, c)
    }
}

/// Connection one-form table `omega[a][b][i] = omega^b_{ai}`.
#[derive(Debug, Clone)]
pub struct Connection {
    pub omega: Vec<Vec<Vec<Expr>>>,
}

impl Connection {
    pub fn trivial(rank: usize, dim: usize) -> Self {
        Connection {
            omega: vec![vec![vec![Expr::zero(); dim]; rank]; rank],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.omega
            .iter()
            .flatten()
            .flatten()
            .all(|e| e.is_zero())
    }
}

/// Everything evaluated at one point.
pub struct AlgebroidJets {
    pub dim: usize,
    pub rank: usize,
    pub rho: Vec<Vec<Jet>>,
    pub c: Vec<Antisym<Jet>>,
    pub omega: Vec<Vec<Vec<Jet>>>,
}

pub fn eval_at(
    alg: &LieAlgebroid,
    conn: &Connection,
    point: &[f64],
) -> Result<AlgebroidJets, EvalError> {
    let env = seed_point(point);
    eval_env(alg, conn, &env)
}

pub fn eval_env(
    alg: &LieAlgebroid,
    conn: &Connection,
    env: &[Jet],
) -> Result<AlgebroidJets, EvalError> {
    let rho = alg
        .rho
        .iter()
        .map(|row| row.iter().map(|e| e.eval(env)).collect::<Result<_, _>>())
        .collect::<Result<Vec<Vec<Jet>>, _>>()?;
    let c = alg
        .c
        .iter()
        .map(|t| t.eval(env))
        .collect::<Result<Vec<_>, _>>()?;
    let omega = conn
        .omega
        .iter()
        .map(|m| {
            m.iter()
                .map(|row| row.iter().map(|e| e.eval(env)).collect::<Result<_, _>>())
                .collect::<Result<Vec<Vec<Jet>>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AlgebroidJets {
        dim: alg.dim(),
        rank: alg.rank,
        rho,
        c,
        omega,
    })
}

impl AlgebroidJets {
    fn jet_dim(&self) -> usize {
        self.rho[0][0].dim()
    }

    pub(crate) fn jet_dim_pub(&self) -> usize {
        self.jet_dim()
    }

    /// Constant basis section `e_a`.
    pub fn basis(&self, a: usize) -> Vec<Jet> {
        (0..self.rank)
            .map(|b| Jet::constant(if a == b { 1.0 } else { 0.0 }, self.jet_dim()))
            .collect()
    }

    /// Anchor image of a section, `rho(e)^i = e^a rho^i_a`.
    pub fn anchor(&self, e: &[Jet]) -> Vec<Jet> {
        (0..self.dim)
            .map(|i| {
                let mut acc = Jet::zero(self.jet_dim());
                for a in 0..self.rank {
                    acc = acc.add(&e[a].mul(&self.rho[a][i]));
                }
                acc
            })
            .collect()
    }

    /// Bracket of sections including the anchor-derivative terms.
    pub fn bracket(&self, e: &[Jet], f: &[Jet]) -> Vec<Jet> {
        let re = self.anchor(e);
        let rf = self.anchor(f);
        (0..self.rank)
            .map(|cc| {
                let mut acc = Jet::zero(self.jet_dim());
                for a in 0..self.rank as u8 {
                    for b in 0..self.rank as u8 {
                        if a == b {
                            continue;
                        }
                        acc = acc.add(
                            &e[a as usize]
                                .mul(&f[b as usize])
                                .mul(&self.c[cc].get(&[a, b])),
                        );
                    }
                }
                acc = acc.add(&directional(&re, &f[cc]));
                acc = acc.sub(&directional(&rf, &e[cc]));
                acc
            })
            .collect()
    }

    /// `(nabla_v e)^a = v^i (d_i e^a + omega^a_{bi} e^b)`.
    pub fn nabla_along(&self, v: &[Jet], e: &[Jet]) -> Vec<Jet> {
        (0..self.rank)
            .map(|a| {
                let mut acc = Jet::zero(self.jet_dim());
                for i in 0..self.dim {
                    let mut term = e[a].partial(i);
                    for b in 0..self.rank {
                        term = term.add(&self.omega[b][a][i].mul(&e[b]));
                    }
                    acc = acc.add(&v[i].mul(&term));
                }
                acc
            })
            .collect()
    }

    /// Canonical A-connection on vector fields:
    /// `Anabla_e v = [rho(e), v] + rho(nabla_v e)`.
    pub fn a_conn_vec(&self, e: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let re = self.anchor(e);
        let lie = crate::tensor::vec_bracket(&re, v);
        let ne = self.nabla_along(v, e);
        let rne = self.anchor(&ne);
        (0..self.dim).map(|i| lie[i].add(&rne[i])).collect()
    }

    /// Canonical A-connection on one-forms, fixed by the duality contract
    /// `rho(e)<v,al> = <Anabla_e v, al> + <v, Anabla_e al>`.
    pub fn a_conn_form(&self, e: &[Jet], alpha: &[Jet]) -> Vec<Jet> {
        let re = self.anchor(e);
        (0..self.dim)
            .map(|i| {
                let mut acc = Jet::zero(self.jet_dim());
                for j in 0..self.dim {
                    acc = acc.add(&re[j].mul(&alpha[i].partial(j)));
                    acc = acc.add(&re[j].partial(i).mul(&alpha[j]));
                    // subtract rho^j_a (d_i e^a + omega^a_{bi} e^b) alpha_j
                    for a in 0..self.rank {
                        let mut corr = e[a].partial(i);
                        for b in 0..self.rank {
                            corr = corr.add(&self.omega[b][a][i].mul(&e[b]));
                        }
                        acc = acc.sub(&self.rho[a][j].mul(&corr).mul(&alpha[j]));
                    }
                }
                acc
            })
            .collect()
    }

    /// A-covariant derivative along basis section `a` of an antisymmetric
    /// table with all legs in `TM` (multivector) .
    pub fn a_nabla_multivector(&self, a: usize, p: &Antisym<Jet>) -> Antisym<Jet> {
        let d = self.dim;
        let mut out = Antisym::zeros(d, p.degree(), Jet::zero(self.jet_dim()));
        for (key, _) in p.iter() {
            let mut acc = Jet::zero(self.jet_dim());
            for j in 0..d {
                acc = acc.add(&self.rho[a][j].mul(&p.comp(&key).partial(j)));
            }
            for (m, &im) in key.iter().enumerate() {
                for j in 0..d as u8 {
                    let mut idx = key.clone();
                    idx[m] = j;
                    let pj = p.get(&idx);
                    // -(d_j rho^{im}_a) P^{..j..} + rho^{im}_b omega^b_{aj} P^{..j..}
                    acc = acc.sub(&self.rho[a][im as usize].partial(j as usize).mul(&pj));
                    for b in 0..self.rank {
                        acc = acc.add(
                            &self.rho[b][im as usize]
                                .mul(&self.omega[a][b][j as usize])
                                .mul(&pj),
                        );
                    }
                }
            }
            *out.comp_mut(&key) = acc;
        }
        out
    }

    /// A-covariant derivative along basis section `a` of a form (all legs
    /// in `T*M`).
    pub fn a_nabla_form(&self, a: usize, w: &Antisym<Jet>) -> Antisym<Jet> {
        let d = self.dim;
        let mut out = Antisym::zeros(d, w.degree(), Jet::zero(self.jet_dim()));
        for (key, _) in w.iter() {
            let mut acc = Jet::zero(self.jet_dim());
            for j in 0..d {
                acc = acc.add(&self.rho[a][j].mul(&w.comp(&key).partial(j)));
            }
            for (m, &im) in key.iter().enumerate() {
                for j in 0..d as u8 {
                    let mut idx = key.clone();
                    idx[m] = j;
                    let wj = w.get(&idx);
                    acc = acc.add(&self.rho[a][j as usize].partial(im as usize).mul(&wj));
                    for b in 0..self.rank {
                        acc = acc.sub(
                            &self.rho[b][j as usize]
                                .mul(&self.omega[a][b][im as usize])
                                .mul(&wj),
                        );
                    }
                }
            }
            *out.comp_mut(&key) = acc;
        }
        out
    }
}

/// Canonical A-connection along a general section applied to a k-form
/// (all legs in `T*M`), the multi-leg extension of [`AlgebroidJets::a_conn_form`].
pub fn a_nabla_form_along(aj: &AlgebroidJets, e: &[Jet], w: &crate::tensor::Antisym<Jet>) -> crate::tensor::Antisym<Jet> {
    let d = aj.dim;
    let jd = aj.jet_dim_pub();
    let re = aj.anchor(e);
    let mut out = crate::tensor::Antisym::zeros(d, w.degree(), Jet::zero(jd));
    for (key, _) in w.iter() {
        let mut acc = Jet::zero(jd);
        for j in 0..d {
            acc = acc.add(&re[j].mul(&w.comp(&key).partial(j)));
        }
        for (m, &im) in key.iter().enumerate() {
            for j in 0..d as u8 {
                let mut idx = key.clone();
                idx[m] = j;
                let wj = w.get(&idx);
                acc = acc.add(&re[j as usize].partial(im as usize).mul(&wj));
                for a in 0..aj.rank {
                    let mut corr = e[a].partial(im as usize);
                    for b in 0..aj.rank {
                        corr = corr.add(&aj.omega[b][a][im as usize].mul(&e[b]));
                    }
                    acc = acc.sub(&aj.rho[a][j as usize].mul(&corr).mul(&wj));
                }
            }
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// A form of base degree `k` with values in degree-`m` fiber covectors:
/// one `k`-form component table per sorted fiber multi-index.
#[derive(Debug, Clone)]
pub struct AValuedForm {
    pub fiber_degree: usize,
    /// indexed like `tensor::tuples(rank, fiber_degree)`
    pub comps: Vec<crate::tensor::Antisym<Expr>>,
}

impl AValuedForm {
    /// Contract the fiber legs with `m` section arguments (full
    /// antisymmetrized contraction) into a base `k`-form.
    fn contract(
        &self,
        rank: usize,
        args: &[&[Jet]],
        env: &[Jet],
    ) -> Result<crate::tensor::Antisym<Jet>, EvalError> {
        let jd = env.first().map(|j| j.dim()).unwrap_or(0);
        let tables: Vec<crate::tensor::Antisym<Jet>> = self
            .comps
            .iter()
            .map(|t| t.eval(env))
            .collect::<Result<_, _>>()?;
        let dim = tables[0].dim();
        let deg = tables[0].degree();
        let mut out = crate::tensor::Antisym::zeros(dim, deg, Jet::zero(jd));
        let keys = crate::tensor::tuples(rank, self.fiber_degree);
        // fiber contraction: sum over sorted fiber tuples of the values
        // table times the determinant of argument components
        for (fi, fkey) in keys.iter().enumerate() {
            let mut weight = Jet::zero(jd);
            let k = fkey.len();
            let mut perm: Vec<usize> = (0..k).collect();
            loop {
                let mut sign = 1.0;
                for i in 0..k {
                    for j in i + 1..k {
                        if perm[i] > perm[j] {
                            sign = -sign;
                        }
                    }
                }
                let mut prod = Jet::constant(sign, jd);
                for (slot, &p) in perm.iter().enumerate() {
                    prod = prod.mul(&args[slot][fkey[p] as usize]);
                }
                weight = weight.add(&prod);
                // next permutation (lexicographic)
                let mut i = k as isize - 2;
                while i >= 0 && perm[i as usize] >= perm[i as usize + 1] {
                    i -= 1;
                }
                if i < 0 {
                    break;
                }
                let mut j = k - 1;
                while perm[j] <= perm[i as usize] {
                    j -= 1;
                }
                perm.swap(i as usize, j);
                perm[i as usize + 1..].reverse();
            }
            for (bkey, _) in tables[fi].iter() {
                let v = tables[fi].comp(&bkey).mul(&weight);
                let slot = out.comp_mut(&bkey);
                *slot = slot.add(&v);
            }
        }
        Ok(out)
    }
}

/// The A-exterior covariant derivative of a fiber-valued base form,
/// evaluated on `m + 1` explicit section arguments at a point. Degree
/// overflow in the fiber returns the zero form.
pub fn a_exterior_covariant_derivative(
    alg: &LieAlgebroid,
    conn: &Connection,
    alpha: &AValuedForm,
    args: &[Vec<Expr>],
    point: &[f64],
) -> Result<crate::tensor::Antisym<Jet>, EvalError> {
    let env = seed_point(point);
    let aj = eval_env(alg, conn, &env)?;
    let m = alpha.fiber_degree;
    assert_eq!(args.len(), m + 1);
    let base_dim = alg.dim();
    let base_deg = alpha.comps[0].degree();
    if m + 1 > alg.rank {
        return Ok(crate::tensor::Antisym::zeros(
            base_dim,
            base_deg,
            Jet::zero(base_dim),
        ));
    }
    let args_j: Vec<Vec<Jet>> = args
        .iter()
        .map(|s| s.iter().map(|e| e.eval(&env)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut acc = crate::tensor::Antisym::zeros(base_dim, base_deg, Jet::zero(base_dim));
    for i in 0..=m {
        let rest: Vec<&[Jet]> = args_j
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, s)| s.as_slice())
            .collect();
        let val = alpha.contract(alg.rank, &rest, &env)?;
        let term = a_nabla_form_along(&aj, &args_j[i], &val);
        acc = if i % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        };
    }
    for i in 0..=m {
        for j in i + 1..=m {
            let br = aj.bracket(&args_j[i], &args_j[j]);
            let mut slots: Vec<&[Jet]> = Vec::with_capacity(m);
            slots.push(&br);
            for (k, s) in args_j.iter().enumerate() {
                if k != i && k != j {
                    slots.push(s.as_slice());
                }
            }
            let val = alpha.contract(alg.rank, &slots, &env)?;
            acc = if (i + j) % 2 == 0 {
                acc.add(&val)
            } else {
                acc.sub(&val)
            };
        }
    }
    Ok(acc)
}

/// `X(f)` as a jet (spends one derivative order of `f`).
pub fn directional(x: &[Jet], f: &Jet) -> Jet {
    let mut acc = Jet::zero(f.dim());
    for (i, xi) in x.iter().enumerate() {
        acc = acc.add(&xi.mul(&f.partial(i)));
    }
    acc
}

/// Anchor-morphism and Jacobi residuals over the sample sweep.
pub fn check_axioms(alg: &LieAlgebroid, points: &[Vec<f64>], tol: f64) -> CheckReport {
    let conn = Connection::trivial(alg.rank, alg.dim());
    let mut morph = ResTrack::new();
    let mut jac = ResTrack::new();
    let mut err: Option<String> = None;
    for p in points {
        let aj = match eval_at(alg, &conn, p) {
            Ok(a) => a,
            Err(e) => {
                err = Some(format!("evaluation failed: {e}"));
                break;
            }
        };
        let r = alg.rank;
        let d = alg.dim();
        for a in 0..r {
            for b in a + 1..r {
                for i in 0..d {
                    let mut res = Jet::zero(aj.jet_dim());
                    for j in 0..d {
                        res = res.add(&aj.rho[a][j].mul(&aj.rho[b][i].partial(j)));
                        res = res.sub(&aj.rho[b][j].mul(&aj.rho[a][i].partial(j)));
                    }
                    for cc in 0..r {
                        res = res.sub(&aj.c[cc].get(&[a as u8, b as u8]).mul(&aj.rho[cc][i]));
                    }
                    morph.update(res.v, p);
                }
            }
        }
        for a in 0..r {
            for b in a + 1..r {
                for cc in b + 1..r {
                    for e in 0..r {
                        let mut res = Jet::zero(aj.jet_dim());
                        for (x, y, z) in [(a, b, cc), (b, cc, a), (cc, a, b)] {
                            for dd in 0..r {
                                res = res.add(
                                    &aj.c[dd]
                                        .get(&[x as u8, y as u8])
                                        .mul(&aj.c[e].get(&[dd as u8, z as u8])),
                                );
                            }
                            let rc = &aj.rho[z];
                            let cab = aj.c[e].get(&[x as u8, y as u8]);
                            res = res.sub(&directional(rc, &cab));
                        }
                        jac.update(res.v, p);
                    }
                }
            }
        }
    }
    let mut report = CheckReport::new();
    let mut m_entry = morph.entry("algebroid.anchor_morphism", "Eq. (almostLA)", tol);
    let mut j_entry = jac.entry("algebroid.jacobi", "Definition 2.1 (Jacobi identity)", tol);
    if let Some(msg) = err {
        m_entry.status = Status::Fail;
        m_entry.notes.push(msg.clone());
        j_entry.status = Status::Fail;
        j_entry.notes.push(msg);
    }
    report.push(m_entry);
    report.push(j_entry);
    report
}

/// The fiberwise differential evaluated on explicit section arguments.
/// Degree overflow (`m + 1 > rank`) yields zero by convention.
pub fn a_differential(
    alg: &LieAlgebroid,
    eta: &Antisym<Expr>,
    args: &[Vec<Expr>],
    point: &[f64],
) -> Result<Jet, EvalError> {
    let conn = Connection::trivial(alg.rank, alg.dim());
    let env = seed_point(point);
    let aj = eval_env(alg, &conn, &env)?;
    let m = eta.degree();
    assert_eq!(args.len(), m + 1);
    if m + 1 > alg.rank {
        return Ok(Jet::zero(alg.dim()));
    }
    let eta_j = eta.eval(&env)?;
    let args_j: Vec<Vec<Jet>> = args
        .iter()
        .map(|s| s.iter().map(|e| e.eval(&env)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    Ok(a_differential_jets(&aj, &eta_j, &args_j))
}

pub fn a_differential_jets(aj: &AlgebroidJets, eta: &Antisym<Jet>, args: &[Vec<Jet>]) -> Jet {
    let m = eta.degree();
    let jd = aj.jet_dim();
    let mut acc = Jet::zero(jd);
    // first sum: (-1)^{i-1} rho(e_i) eta(..hat i..)
    for i in 0..=m {
        let rest: Vec<&[Jet]> = args
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, s)| s.as_slice())
            .collect();
        let val = crate::tensor::apply(eta, &rest);
        let term = directional(&aj.anchor(&args[i]), &val);
        acc = if i % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        };
    }
    // second sum: (-1)^{i+j} eta([e_i,e_j], ..)
    for i in 0..=m {
        for j in i + 1..=m {
            let br = aj.bracket(&args[i], &args[j]);
            let mut slots: Vec<&[Jet]> = Vec::with_capacity(m);
            slots.push(&br);
            for (k, s) in args.iter().enumerate() {
                if k != i && k != j {
                    slots.push(s.as_slice());
                }
            }
            let val = crate::tensor::apply(eta, &slots);
            acc = if (i + j) % 2 == 0 {
                acc.add(&val)
            } else {
                acc.sub(&val)
            };
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// torsion and curvature tensors
// ---------------------------------------------------------------------------

/// `T^c_{ab} = -C^c_{ab} + rho^i_a omega^c_{bi} - rho^i_b omega^c_{ai}`,
/// the torsion of the A-connection `nabla_{rho(e)}` on the bundle itself.
pub fn torsion_expr(alg: &LieAlgebroid, conn: &Connection) -> Vec<Antisym<Expr>> {
    let r = alg.rank;
    let d = alg.dim();
    (0..r)
        .map(|cc| {
            Antisym::from_fn(r, 2, Expr::zero(), |key| {
                let (a, b) = (key[0] as usize, key[1] as usize);
                let mut e = Expr::neg(alg.c[cc].get(&[a as u8, b as u8]));
                for i in 0..d {
                    e = Expr::add(
                        e,
                        Expr::mul(alg.rho[a][i].clone(), conn.omega[b][cc][i].clone()),
                    );
                    e = Expr::sub(
                        e,
                        Expr::mul(alg.rho[b][i].clone(), conn.omega[a][cc][i].clone()),
                    );
                }
                e
            })
        })
        .collect()
}

/// Curvature of the bundle connection,
/// `R^b_{ija} = d_i omega^b_{aj} - d_j omega^b_{ai}
///  + omega^c_{aj} omega^b_{ci} - omega^c_{ai} omega^b_{cj}`,
/// returned as `R[i][j][a][b]`.
pub fn curvature_expr(alg: &LieAlgebroid, conn: &Connection) -> Vec<Vec<Vec<Vec<Expr>>>> {
    let r = alg.rank;
    let d = alg.dim();
    let mut out = vec![vec![vec![vec![Expr::zero(); r]; r]; d]; d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            for a in 0..r {
                for b in 0..r {
                    let mut e = Expr::sub(
                        conn.omega[a][b][j].derivative(i),
                        conn.omega[a][b][i].derivative(j),
                    );
                    for cc in 0..r {
                        e = Expr::add(
                            e,
                            Expr::mul(
                                conn.omega[a][cc][j].clone(),
                                conn.omega[cc][b][i].clone(),
                            ),
                        );
                        e = Expr::sub(
                            e,
                            Expr::mul(
                                conn.omega[a][cc][i].clone(),
                                conn.omega[cc][b][j].clone(),
                            ),
                        );
                    }
                    out[i][j][a][b] = e;
                }
            }
        }
    }
    out
}

/// Basic curvature `S^c_{iab} = nabla_i T^c_{ab} + rho^j_b R^c_{ija}
/// - rho^j_a R^c_{ijb}`, returned as `S[i][cc]` antisymmetric over `(a,b)`.
pub fn basic_curvature_expr(alg: &LieAlgebroid, conn: &Connection) -> Vec<Vec<Antisym<Expr>>> {
    let r = alg.rank;
    let d = alg.dim();
    let t = torsion_expr(alg, conn);
    let rr = curvature_expr(alg, conn);
    (0..d)
        .map(|i| {
            (0..r)
                .map(|cc| {
                    Antisym::from_fn(r, 2, Expr::zero(), |key| {
                        let (a, b) = (key[0] as usize, key[1] as usize);
                        // nabla_i T^cc_{ab}
                        let mut e = t[cc].get(&[a as u8, b as u8]).derivative(i);
                        for dd in 0..r {
                            e = Expr::add(
                                e,
                                Expr::mul(
                                    conn.omega[dd][cc][i].clone(),
                                    t[dd].get(&[a as u8, b as u8]),
                                ),
                            );
                            e = Expr::sub(
                                e,
                                Expr::mul(
                                    conn.omega[a][dd][i].clone(),
                                    t[cc].get(&[dd as u8, b as u8]),
                                ),
                            );
                            e = Expr::sub(
                                e,
                                Expr::mul(
                                    conn.omega[b][dd][i].clone(),
                                    t[cc].get(&[a as u8, dd as u8]),
                                ),
                            );
                        }
                        // + rho^j_b R^cc_{ija} - rho^j_a R^cc_{ijb}
                        for j in 0..d {
                            e = Expr::add(
                                e,
                                Expr::mul(alg.rho[b][j].clone(), rr[i][j][a][cc].clone()),
                            );
                            e = Expr::sub(
                                e,
                                Expr::mul(alg.rho[a][j].clone(), rr[i][j][b][cc].clone()),
                            );
                        }
                        e
                    })
                })
                .collect()
        })
        .collect()
}

/// Definition-level basic curvature: the combination
/// `L_{e_a}(nabla e_b) - L_{e_b}(nabla e_a) - nabla_{rho(nabla e_a)} e_b
///  + nabla_{rho(nabla e_b)} e_a - nabla [e_a, e_b]`
/// expanded independently of [`basic_curvature_expr`]; the two agree on
/// valid data and the equality is a shipped property test.
pub fn basic_curvature_definition_jets(
    aj: &AlgebroidJets,
    i: usize,
    a: usize,
    b: usize,
    cc: usize,
) -> Jet {
    let d = aj.dim;
    let r = aj.rank;
    let jd = aj.jet_dim();
    let mut acc = Jet::zero(jd);
    // L_{e_a}(nabla e_b) [base-Lie along rho(e_a) + fiber rotation by the
    // bracket] minus (a <-> b)
    for (x, y, sgn) in [(a, b, 1.0), (b, a, -1.0)] {
        // rho^k_x d_k omega^cc_{yi} + (d_i rho^k_x) omega^cc_{yk}
        for k in 0..d {
            acc = acc.add(&aj.rho[x][k].mul(&aj.omega[y][cc][i].partial(k)).scale(sgn));
            acc = acc.add(&aj.rho[x][k].partial(i).mul(&aj.omega[y][cc][k]).scale(sgn));
        }
        // + C^cc_{x c'} omega^{c'}_{y i}
        for cp in 0..r {
            acc = acc.add(
                &aj.c[cc]
                    .get(&[x as u8, cp as u8])
                    .mul(&aj.omega[y][cp][i])
                    .scale(sgn),
            );
        }
        // - omega^{c'}_{x i} rho^j_{c'} omega^cc_{y j}
        for cp in 0..r {
            for j in 0..d {
                acc = acc.sub(
                    &aj.omega[x][cp][i]
                        .mul(&aj.rho[cp][j])
                        .mul(&aj.omega[y][cc][j])
                        .scale(sgn),
                );
            }
        }
    }
    // - nabla [e_a, e_b] = - d_i C^cc_{ab} - C^{c'}_{ab} omega^{c'->cc}_{i}
    acc = acc.sub(&aj.c[cc].get(&[a as u8, b as u8]).partial(i));
    for cp in 0..r {
        acc = acc.sub(
            &aj.c[cp]
                .get(&[a as u8, b as u8])
                .mul(&aj.omega[cp][cc][i]),
        );
    }
    acc
}

/// Curvature of the A-connection `nabla_{rho(e)}` on the bundle itself,
/// evaluated from nested covariant derivatives on basis sections:
/// returns `(AR)^e_{abc}` for `AR(e_a, e_b) e_c = ...^e`.
pub fn a_curvature_jets(aj: &AlgebroidJets, a: usize, b: usize, cc: usize, e: usize) -> Jet {
    let d = aj.dim;
    let r = aj.rank;
    let jd = aj.jet_dim();
    // Gamma^c_{ab} = rho^i_a omega^c_{bi}
    let gamma = |x: usize, y: usize, z: usize| -> Jet {
        let mut g = Jet::zero(jd);
        for i in 0..d {
            g = g.add(&aj.rho[x][i].mul(&aj.omega[y][z][i]));
        }
        g
    };
    let mut acc = Jet::zero(jd);
    // rho^i_a d_i Gamma^e_{bc} - rho^i_b d_i Gamma^e_{ac}
    for i in 0..d {
        acc = acc.add(&aj.rho[a][i].mul(&gamma(b, cc, e).partial(i)));
        acc = acc.sub(&aj.rho[b][i].mul(&gamma(a, cc, e).partial(i)));
    }
    for dd in 0..r {
        acc = acc.add(&gamma(b, cc, dd).mul(&gamma(a, dd, e)));
        acc = acc.sub(&gamma(a, cc, dd).mul(&gamma(b, dd, e)));
        acc = acc.sub(&aj.c[dd].get(&[a as u8, b as u8]).mul(&gamma(dd, cc, e)));
    }
    acc
}
