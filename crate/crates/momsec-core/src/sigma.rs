//! Desk-scale worldsheet realization: the gauged Poisson sigma model on a
//! discretized torus or rectangle, component gauge transformations, exact
//! first-order gauge variation via dual numbers, boundary terms and the
//! algebraic Dirac sigma model data (Cayley transform and its checks).
//!
//! Discretization: forward differences for the worldsheet differential,
//! pointwise wedge coefficients, Riemann sums with pairwise tree reduction
//! (bit-reproducible independent of evaluation chunking).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebroid::{
    basic_curvature_expr, curvature_expr, eval_env, torsion_expr, Connection, LieAlgebroid,
};
use crate::courant::{DiracFrame, GeneralizedSection};
use crate::expr::{EvalError, Expr, Symbols};
use crate::jet::{seed_point, Jet};
use crate::linalg::{jet_mat_inverse, Mat};
use crate::report::{CheckReport, ResTrack, Status};
use crate::sample::SplitMix64;
use crate::tensor::Antisym;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Torus,
    Rectangle,
}

#[derive(Debug, Clone, Copy)]
pub struct Worldsheet {
    pub topology: Topology,
    pub n: usize,
}

impl Worldsheet {
    pub fn new(topology: Topology, n: usize) -> Self {
        assert!(n >= 4, "worldsheet needs at least 4 sites per side");
        Worldsheet { topology, n }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// sites per side (rectangle keeps both boundary rows)
    pub fn side(&self) -> usize {
        match self.topology {
            Topology::Torus => self.n,
            Topology::Rectangle => self.n + 1,
        }
    }

    pub fn sites(&self) -> usize {
        self.side() * self.side()
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.side() + col
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s / self.side(), s % self.side())
    }

    /// forward neighbour in direction mu (0: col+1, 1: row+1)
    pub fn neighbor(&self, s: usize, mu: usize) -> usize {
        let (row, col) = self.coords(s);
        match (self.topology, mu) {
            (Topology::Torus, 0) => self.site(row, (col + 1) % self.n),
            (Topology::Torus, 1) => self.site((row + 1) % self.n, col),
            (Topology::Rectangle, 0) => self.site(row, col + 1),
            (Topology::Rectangle, 1) => self.site(row + 1, col),
            _ => unreachable!(),
        }
    }

    /// sites owning a plaquette (both forward links in range)
    pub fn plaquette_sites(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for row in 0..self.n {
            for col in 0..self.n {
                out.push(self.site(row, col));
            }
        }
        out
    }

    pub fn is_boundary(&self, s: usize) -> bool {
        match self.topology {
            Topology::Torus => false,
            Topology::Rectangle => {
                let (row, col) = self.coords(s);
                row == 0 || col == 0 || row == self.n || col == self.n
            }
        }
    }

    pub fn sigma(&self, s: usize) -> (f64, f64) {
        let (row, col) = self.coords(s);
        (col as f64 * self.h(), row as f64 * self.h())
    }

    /// counterclockwise boundary links as (start site, direction, signed
    /// step): only meaningful on the rectangle
    pub fn boundary_links(&self) -> Vec<(usize, usize, f64)> {
        assert_eq!(self.topology, Topology::Rectangle);
        let n = self.n;
        let mut out = Vec::new();
        for col in 0..n {
            out.push((self.site(0, col), 0, 1.0));
        }
        for row in 0..n {
            out.push((self.site(row, n), 1, 1.0));
        }
        for col in (0..n).rev() {
            out.push((self.site(n, col), 0, -1.0));
        }
        for row in (0..n).rev() {
            out.push((self.site(row, 0), 1, -1.0));
        }
        out
    }
}

/// Flat storage of the lattice fields.
#[derive(Debug, Clone)]
pub struct FieldConfig {
    pub d: usize,
    pub r: usize,
    pub x: Vec<f64>, // sites x d
    pub z: Vec<f64>, // sites x 2 x d
    pub a: Vec<f64>, // sites x 2 x r
    pub y: Vec<f64>, // sites x r
}

impl FieldConfig {
    pub fn zeros(ws: &Worldsheet, d: usize, r: usize) -> Self {
        let s = ws.sites();
        FieldConfig {
            d,
            r,
            x: vec![0.0; s * d],
            z: vec![0.0; s * 2 * d],
            a: vec![0.0; s * 2 * r],
            y: vec![0.0; s * r],
        }
    }

    pub fn x_at(&self, s: usize) -> &[f64] {
        &self.x[s * self.d..(s + 1) * self.d]
    }

    pub fn z_at(&self, s: usize, mu: usize, i: usize) -> f64 {
        self.z[(s * 2 + mu) * self.d + i]
    }

    pub fn a_at(&self, s: usize, mu: usize, a: usize) -> f64 {
        self.a[(s * 2 + mu) * self.r + a]
    }

    pub fn y_at(&self, s: usize, a: usize) -> f64 {
        self.y[s * self.r + a]
    }

    pub fn scale(&self, f: f64) -> FieldConfig {
        let mut out = self.clone();
        for v in out
            .x
            .iter_mut()
            .chain(out.z.iter_mut())
            .chain(out.a.iter_mut())
            .chain(out.y.iter_mut())
        {
            *v *= f;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct GaugeParams {
    pub d: usize,
    pub r: usize,
    pub t: Vec<f64>, // sites x d
    pub c: Vec<f64>, // sites x r
}

impl GaugeParams {
    pub fn t_at(&self, s: usize, i: usize) -> f64 {
        self.t[s * self.d + i]
    }

    pub fn c_at(&self, s: usize, a: usize) -> f64 {
        self.c[s * self.r + a]
    }

    pub fn scale(&self, f: f64) -> GaugeParams {
        let mut out = self.clone();
        for v in out.t.iter_mut().chain(out.c.iter_mut()) {
            *v *= f;
        }
        out
    }
}

/// Expression-valued continuum fields over the worldsheet coordinates,
/// sampled onto any lattice size (so convergence studies refine the same
/// smooth configuration).
#[derive(Debug, Clone)]
pub struct ConfigFields {
    pub x: Vec<Expr>,
    pub z: Vec<Vec<Expr>>, // [mu][i]
    pub a: Vec<Vec<Expr>>, // [mu][a]
    pub y: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub struct GaugeFields {
    pub t: Vec<Expr>,
    pub c: Vec<Expr>,
}

pub fn worldsheet_symbols() -> Symbols {
    Symbols::new(vec!["s1", "s2"])
}

const TAU: f64 = 6.283185307179586;

// smooth periodic scalar built from a seeded stream: a few low modes
fn random_trig(rng: &mut SplitMix64) -> Expr {
    let mut e = Expr::num(rng.uniform(-0.5, 0.5));
    for _ in 0..2 {
        let amp = rng.uniform(-0.5, 0.5);
        let k1 = 1.0;
        let k2 = (rng.next_u64() % 2) as f64;
        let phase = rng.uniform(0.0, TAU);
        let arg = Expr::add(
            Expr::add(
                Expr::mul(Expr::num(TAU * k1), Expr::var(0)),
                Expr::mul(Expr::num(TAU * k2), Expr::var(1)),
            ),
            Expr::num(phase),
        );
        e = Expr::add(e, Expr::mul(Expr::num(amp), Expr::call(crate::expr::Func::Sin, arg)));
    }
    e
}

/// Seeded smooth periodic configuration (documented stream: SplitMix64).
pub fn random_config_fields(d: usize, r: usize, seed: u64) -> ConfigFields {
    let mut rng = SplitMix64::new(seed);
    ConfigFields {
        x: (0..d).map(|_| random_trig(&mut rng)).collect(),
        z: (0..2)
            .map(|_| (0..d).map(|_| random_trig(&mut rng)).collect())
            .collect(),
        a: (0..2)
            .map(|_| (0..r).map(|_| random_trig(&mut rng)).collect())
            .collect(),
        y: (0..r).map(|_| random_trig(&mut rng)).collect(),
    }
}

pub fn random_gauge_fields(d: usize, r: usize, seed: u64) -> GaugeFields {
    let mut rng = SplitMix64::new(seed ^ 0x5173_AC1D);
    GaugeFields {
        t: (0..d).map(|_| random_trig(&mut rng)).collect(),
        c: (0..r).map(|_| random_trig(&mut rng)).collect(),
    }
}

impl ConfigFields {
    /// Evaluate on a lattice; with `clamp_x_boundary` the map is frozen to
    /// its corner value on boundary sites (the constant-map boundary
    /// condition as a configuration-generation option).
    pub fn sample(
        &self,
        ws: &Worldsheet,
        clamp_x_boundary: bool,
    ) -> Result<FieldConfig, EvalError> {
        let d = self.x.len();
        let r = self.y.len();
        let mut cfg = FieldConfig::zeros(ws, d, r);
        let corner: Vec<f64> = self
            .x
            .iter()
            .map(|e| e.eval_value(&[0.0, 0.0]))
            .collect::<Result<_, _>>()?;
        for s in 0..ws.sites() {
            let (s1, s2) = ws.sigma(s);
            let p = [s1, s2];
            for i in 0..d {
                cfg.x[s * d + i] = if clamp_x_boundary && ws.is_boundary(s) {
                    corner[i]
                } else {
                    self.x[i].eval_value(&p)?
                };
                for mu in 0..2 {
                    cfg.z[(s * 2 + mu) * d + i] = self.z[mu][i].eval_value(&p)?;
                }
            }
            for a in 0..r {
                for mu in 0..2 {
                    cfg.a[(s * 2 + mu) * r + a] = self.a[mu][a].eval_value(&p)?;
                }
                cfg.y[s * r + a] = self.y[a].eval_value(&p)?;
            }
        }
        Ok(cfg)
    }
}

impl GaugeFields {
    pub fn sample(&self, ws: &Worldsheet) -> Result<GaugeParams, EvalError> {
        let d = self.t.len();
        let r = self.c.len();
        let mut gp = GaugeParams {
            d,
            r,
            t: vec![0.0; ws.sites() * d],
            c: vec![0.0; ws.sites() * r],
        };
        for s in 0..ws.sites() {
            let (s1, s2) = ws.sigma(s);
            let p = [s1, s2];
            for i in 0..d {
                gp.t[s * d + i] = self.t[i].eval_value(&p)?;
            }
            for a in 0..r {
                gp.c[s * r + a] = self.c[a].eval_value(&p)?;
            }
        }
        Ok(gp)
    }
}

// ---------------------------------------------------------------------------
// dual numbers for exact first-order variations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub e: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { v: 0.0, e: 0.0 };

    pub fn c(v: f64) -> Dual {
        Dual { v, e: 0.0 }
    }

    pub fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            e: self.e + o.e,
        }
    }

    pub fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            e: self.e - o.e,
        }
    }

    pub fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            e: self.v * o.e + self.e * o.v,
        }
    }

    pub fn scale(self, f: f64) -> Dual {
        Dual {
            v: self.v * f,
            e: self.e * f,
        }
    }
}

/// Deterministic pairwise tree summation.
pub fn tree_sum(values: &mut Vec<Dual>) -> Dual {
    if values.is_empty() {
        return Dual::ZERO;
    }
    while values.len() > 1 {
        let mut next = Vec::with_capacity(values.len() / 2 + 1);
        let mut it = values.chunks(2);
        for ch in &mut it {
            next.push(if ch.len() == 2 { ch[0].add(ch[1]) } else { ch[0] });
        }
        *values = next;
    }
    values[0]
}

// ---------------------------------------------------------------------------
// target-space model data
// ---------------------------------------------------------------------------

/// Target data of the gauged Poisson sigma model, with the derived tensors
/// prepared once.
pub struct SigmaModel {
    pub alg: LieAlgebroid,
    pub conn: Connection,
    pub pi: Antisym<Expr>,
    torsion: Vec<Antisym<Expr>>,
    curv: Vec<Vec<Vec<Vec<Expr>>>>,
    basic: Vec<Vec<Antisym<Expr>>>,
}

impl SigmaModel {
    pub fn new(alg: LieAlgebroid, conn: Connection, pi: Antisym<Expr>) -> Self {
        let torsion = torsion_expr(&alg, &conn);
        let curv = curvature_expr(&alg, &conn);
        let basic = basic_curvature_expr(&alg, &conn);
        SigmaModel {
            alg,
            conn,
            pi,
            torsion,
            curv,
            basic,
        }
    }

    fn d(&self) -> usize {
        self.alg.dim()
    }

    fn r(&self) -> usize {
        self.alg.rank
    }
}

/// Target-space coefficients evaluated at one lattice site, as duals along
/// the configuration variation.
struct SiteCoeffs {
    pi: Vec<Vec<Dual>>,         // [i][j]
    rho: Vec<Vec<Dual>>,        // [a][i]
    c: Vec<Vec<Vec<Dual>>>,     // [cc][a][b]
    omega: Vec<Vec<Vec<Dual>>>, // [a][b][i]
    torsion: Vec<Vec<Vec<Dual>>>,
}

fn dualize(j: &Jet, dx: &[f64]) -> Dual {
    let mut e = 0.0;
    for (k, &dk) in dx.iter().enumerate() {
        e += j.grad(k) * dk;
    }
    Dual { v: j.v, e }
}

impl SigmaModel {
    fn coeffs_at(&self, x: &[f64], dx: &[f64]) -> Result<SiteCoeffs, EvalError> {
        let env = seed_point(x);
        let d = self.d();
        let r = self.r();
        let pj = self.pi.eval(&env)?;
        let mut pi = vec![vec![Dual::ZERO; d]; d];
        for i in 0..d as u8 {
            for j in 0..d as u8 {
                pi[i as usize][j as usize] = dualize(&pj.get(&[i, j]), dx);
            }
        }
        let mut rho = vec![vec![Dual::ZERO; d]; r];
        for a in 0..r {
            for i in 0..d {
                rho[a][i] = dualize(&self.alg.rho[a][i].eval(&env)?, dx);
            }
        }
        let mut c = vec![vec![vec![Dual::ZERO; r]; r]; r];
        let mut torsion = vec![vec![vec![Dual::ZERO; r]; r]; r];
        for cc in 0..r {
            let cj = self.alg.c[cc].eval(&env)?;
            let tj = self.torsion[cc].eval(&env)?;
            for a in 0..r as u8 {
                for b in 0..r as u8 {
                    c[cc][a as usize][b as usize] = dualize(&cj.get(&[a, b]), dx);
                    torsion[cc][a as usize][b as usize] = dualize(&tj.get(&[a, b]), dx);
                }
            }
        }
        let mut omega = vec![vec![vec![Dual::ZERO; d]; r]; r];
        for a in 0..r {
            for b in 0..r {
                for i in 0..d {
                    omega[a][b][i] = dualize(&self.conn.omega[a][b][i].eval(&env)?, dx);
                }
            }
        }
        Ok(SiteCoeffs {
            pi,
            rho,
            c,
            omega,
            torsion,
        })
    }
}

fn zero_dx(d: usize) -> Vec<f64> {
    vec![0.0; d]
}

struct SiteFields {
    x_d: Vec<Dual>,        // dX components [mu][i] as duals (continuum scale)
    z: Vec<Vec<Dual>>,     // [mu][i]
    a: Vec<Vec<Dual>>,     // [mu][a]
    y: Vec<Dual>,          // [a]
}

fn site_fields(
    ws: &Worldsheet,
    cfg: &FieldConfig,
    dcfg: Option<&FieldConfig>,
    s: usize,
) -> SiteFields {
    let d = cfg.d;
    let r = cfg.r;
    let h = ws.h();
    let mut x_d = vec![Dual::ZERO; 2 * d];
    for mu in 0..2 {
        let nb = ws.neighbor(s, mu);
        for i in 0..d {
            let v = (cfg.x[nb * d + i] - cfg.x[s * d + i]) / h;
            let e = match dcfg {
                Some(dc) => (dc.x[nb * d + i] - dc.x[s * d + i]) / h,
                None => 0.0,
            };
            x_d[mu * d + i] = Dual { v, e };
        }
    }
    let get = |v: &Vec<f64>, idx: usize| v[idx];
    let gete = |dc: Option<&FieldConfig>, f: fn(&FieldConfig) -> &Vec<f64>, idx: usize| match dc {
        Some(dc) => f(dc)[idx],
        None => 0.0,
    };
    let mut z = vec![vec![Dual::ZERO; d]; 2];
    let mut a = vec![vec![Dual::ZERO; r]; 2];
    for mu in 0..2 {
        for i in 0..d {
            let idx = (s * 2 + mu) * d + i;
            z[mu][i] = Dual {
                v: get(&cfg.z, idx),
                e: gete(dcfg, |c| &c.z, idx),
            };
        }
        for aa in 0..r {
            let idx = (s * 2 + mu) * r + aa;
            a[mu][aa] = Dual {
                v: get(&cfg.a, idx),
                e: gete(dcfg, |c| &c.a, idx),
            };
        }
    }
    let y = (0..r)
        .map(|aa| Dual {
            v: cfg.y[s * r + aa],
            e: match dcfg {
                Some(dc) => dc.y[s * r + aa],
                None => 0.0,
            },
        })
        .collect();
    SiteFields {
        x_d,
        z,
        a,
        y,
    }
}

fn wedge12(p: &[Vec<Dual>], q: &[Vec<Dual>], i: usize, j: usize) -> Dual {
    // (P_i ^ Q_j)_{12} for one-forms stored as [mu][index]
    p[0][i].mul(q[1][j]).sub(p[1][i].mul(q[0][j]))
}

/// Action of the ungauged model: `Z ^ dX + 1/2 pi(X) Z ^ Z`.
pub fn action_psm(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
) -> Result<f64, EvalError> {
    Ok(action_gpsm_dual(model, ws, cfg, None, false, PsmOnly::Yes)?.v)
}

/// Gauged action; `covariant` switches the evaluation route (the two agree
/// identically on every configuration).
pub fn action_gpsm(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    covariant: bool,
) -> Result<f64, EvalError> {
    Ok(action_gpsm_dual(model, ws, cfg, None, covariant, PsmOnly::No)?.v)
}

#[derive(PartialEq, Clone, Copy)]
enum PsmOnly {
    Yes,
    No,
}

fn action_gpsm_dual(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    dcfg: Option<&FieldConfig>,
    covariant: bool,
    psm_only: PsmOnly,
) -> Result<Dual, EvalError> {
    let d = model.d();
    let r = model.r();
    let h2 = ws.h() * ws.h();
    let mut contributions = Vec::with_capacity(ws.plaquette_sites().len());
    for s in ws.plaquette_sites() {
        let dx_site: Vec<f64> = match dcfg {
            Some(dc) => dc.x[s * d..(s + 1) * d].to_vec(),
            None => zero_dx(d),
        };
        let co = model.coeffs_at(cfg.x_at(s), &dx_site)?;
        let f = site_fields(ws, cfg, dcfg, s);
        let dxf = |mu: usize, i: usize| f.x_d[mu * d + i];
        let mut total = Dual::ZERO;
        if !covariant || psm_only == PsmOnly::Yes {
            // flat grouping
            let mut zdx = Dual::ZERO;
            let mut pizz = Dual::ZERO;
            for i in 0..d {
                zdx = zdx.add(f.z[0][i].mul(dxf(1, i)).sub(f.z[1][i].mul(dxf(0, i))));
                for j in 0..d {
                    pizz = pizz.add(co.pi[i][j].mul(f.z[0][i]).mul(f.z[1][j]));
                }
            }
            total = total.add(zdx).add(pizz);
            if psm_only == PsmOnly::No {
                let mut gauge = Dual::ZERO;
                for a in 0..r {
                    // Y dA
                    let nb0 = ws.neighbor(s, 0);
                    let nb1 = ws.neighbor(s, 1);
                    let hh = ws.h();
                    let da = Dual {
                        v: (cfg.a_at(nb0, 1, a) - cfg.a_at(s, 1, a)) / hh
                            - (cfg.a_at(nb1, 0, a) - cfg.a_at(s, 0, a)) / hh,
                        e: match dcfg {
                            Some(dc) => {
                                (dc.a_at(nb0, 1, a) - dc.a_at(s, 1, a)) / hh
                                    - (dc.a_at(nb1, 0, a) - dc.a_at(s, 0, a)) / hh
                            }
                            None => 0.0,
                        },
                    };
                    gauge = gauge.add(f.y[a].mul(da));
                    for i in 0..d {
                        gauge = gauge.sub(co.rho[a][i].mul(wedge12(&f.z, &f.a, i, a)));
                    }
                    for b in 0..r {
                        for cc in 0..r {
                            gauge = gauge.add(
                                co.c[cc][a][b]
                                    .mul(f.a[0][a])
                                    .mul(f.a[1][b])
                                    .mul(f.y[cc]),
                            );
                        }
                    }
                }
                total = total.add(gauge);
            }
        } else {
            // covariant grouping: rotated momenta, covariantized potential
            // derivative, torsion term, plus the exact regrouping remainder
            let mut w = vec![vec![Dual::ZERO; d]; 2];
            for mu in 0..2 {
                for i in 0..d {
                    for a in 0..r {
                        for b in 0..r {
                            w[mu][i] = w[mu][i]
                                .add(co.omega[a][b][i].mul(f.a[mu][a]).mul(f.y[b]));
                        }
                    }
                }
            }
            let mut zn = vec![vec![Dual::ZERO; d]; 2];
            for mu in 0..2 {
                for i in 0..d {
                    zn[mu][i] = f.z[mu][i].sub(w[mu][i]);
                }
            }
            let mut total_cov = Dual::ZERO;
            for i in 0..d {
                total_cov = total_cov
                    .add(zn[0][i].mul(dxf(1, i)).sub(zn[1][i].mul(dxf(0, i))));
                for j in 0..d {
                    total_cov = total_cov.add(co.pi[i][j].mul(zn[0][i]).mul(zn[1][j]));
                }
            }
            let hh = ws.h();
            for a in 0..r {
                let nb0 = ws.neighbor(s, 0);
                let nb1 = ws.neighbor(s, 1);
                let mut da = Dual {
                    v: (cfg.a_at(nb0, 1, a) - cfg.a_at(s, 1, a)) / hh
                        - (cfg.a_at(nb1, 0, a) - cfg.a_at(s, 0, a)) / hh,
                    e: match dcfg {
                        Some(dc) => {
                            (dc.a_at(nb0, 1, a) - dc.a_at(s, 1, a)) / hh
                                - (dc.a_at(nb1, 0, a) - dc.a_at(s, 0, a)) / hh
                        }
                        None => 0.0,
                    },
                };
                // D A^a = dA^a + omega^a_{bi} A^b ^ dX^i
                for b in 0..r {
                    for i in 0..d {
                        let adx = f.a[0][b]
                            .mul(dxf(1, i))
                            .sub(f.a[1][b].mul(dxf(0, i)));
                        da = da.add(co.omega[b][a][i].mul(adx));
                    }
                }
                total_cov = total_cov.add(f.y[a].mul(da));
                for i in 0..d {
                    total_cov = total_cov.sub(co.rho[a][i].mul(wedge12(&zn, &f.a, i, a)));
                }
                for b in 0..r {
                    for cc in 0..r {
                        // antisymmetry of T over (a,b) absorbs the 1/2 of
                        // the half-sum form
                        total_cov = total_cov.sub(
                            co.torsion[cc][a][b]
                                .mul(f.a[0][a])
                                .mul(f.a[1][b])
                                .mul(f.y[cc]),
                        );
                    }
                }
            }
            // exact remainder of the regrouping:
            // pi W Z_cov + 1/2 pi W W - rho omega Y A A
            //   + 1/2 (rho omega - rho omega) A A Y
            for i in 0..d {
                for j in 0..d {
                    total_cov = total_cov.add(co.pi[i][j].mul(
                        wedge12(&w, &zn, i, j).add(wedge12(&w, &w, i, j).scale(0.5)),
                    ));
                }
            }
            for a in 0..r {
                for b in 0..r {
                    for cc in 0..r {
                        for i in 0..d {
                            // - rho^i_a omega^cc_{bi} Y_cc A^b ^ A^a
                            total_cov = total_cov.sub(
                                co.rho[a][i]
                                    .mul(co.omega[b][cc][i])
                                    .mul(f.y[cc])
                                    .mul(wedge12(&f.a, &f.a, b, a)),
                            );
                            // + 1/2 (rho^i_a omega^cc_{bi}
                            //        - rho^i_b omega^cc_{ai}) A^a ^ A^b Y_cc
                            total_cov = total_cov.add(
                                co.rho[a][i]
                                    .mul(co.omega[b][cc][i])
                                    .sub(co.rho[b][i].mul(co.omega[a][cc][i]))
                                    .mul(f.y[cc])
                                    .mul(wedge12(&f.a, &f.a, a, b))
                                    .scale(0.5),
                            );
                        }
                    }
                }
            }
            total = total_cov;
        }
        contributions.push(total.scale(h2));
    }
    Ok(tree_sum(&mut contributions))
}

// ---------------------------------------------------------------------------
// gauge transformations
// ---------------------------------------------------------------------------

/// Which reading of the covariantized transformation of the dual potential
/// to use: with the momentum-parameter term or without it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YVariant {
    WithT,
    WithoutT,
}

/// First-order field increments for the given parameters; linear in `(t, c)`
/// by construction.
pub fn gauge_transform(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    params: &GaugeParams,
    covariant: bool,
    y_variant: YVariant,
) -> Result<FieldConfig, EvalError> {
    let d = model.d();
    let r = model.r();
    let h = ws.h();
    let mut out = FieldConfig::zeros(ws, d, r);
    // pointwise pieces first (X, Y and the non-derivative parts of Z, A)
    for s in 0..ws.sites() {
        let env = seed_point(cfg.x_at(s));
        let aj = eval_env(&model.alg, &model.conn, &env)?;
        let pj = self::eval_pi(&model.pi, &env)?;
        let t: Vec<f64> = (0..d).map(|i| params.t_at(s, i)).collect();
        let c: Vec<f64> = (0..r).map(|a| params.c_at(s, a)).collect();
        let y: Vec<f64> = (0..r).map(|a| cfg.y_at(s, a)).collect();
        if !covariant {
            for i in 0..d {
                let mut dx = 0.0;
                for j in 0..d {
                    dx -= pj.get(&[i as u8, j as u8]).v * t[j];
                }
                for a in 0..r {
                    dx += aj.rho[a][i].v * c[a];
                }
                out.x[s * d + i] = dx;
            }
            for a in 0..r {
                let mut dy = 0.0;
                for i in 0..d {
                    dy -= aj.rho[a][i].v * t[i];
                }
                for b in 0..r {
                    for cc in 0..r {
                        dy -= aj.c[cc].get(&[a as u8, b as u8]).v * y[cc] * c[b];
                    }
                }
                out.y[s * r + a] = dy;
                for mu in 0..2 {
                    let mut daa = 0.0;
                    for b in 0..r {
                        for cc in 0..r {
                            daa += aj.c[a].get(&[b as u8, cc as u8]).v
                                * cfg.a_at(s, mu, b)
                                * c[cc];
                        }
                    }
                    out.a[(s * 2 + mu) * r + a] = daa;
                }
            }
            for mu in 0..2 {
                for i in 0..d {
                    let mut dz = 0.0;
                    for j in 0..d {
                        for k in 0..d {
                            dz += pj.get(&[j as u8, k as u8]).grad(i)
                                * cfg.z_at(s, mu, j)
                                * t[k];
                        }
                        for a in 0..r {
                            dz += aj.rho[a][j].grad(i) * t[j] * cfg.a_at(s, mu, a);
                            dz -= aj.rho[a][j].grad(i) * cfg.z_at(s, mu, j) * c[a];
                        }
                    }
                    for a in 0..r {
                        for b in 0..r {
                            for cc in 0..r {
                                dz += aj.c[cc].get(&[a as u8, b as u8]).grad(i)
                                    * cfg.a_at(s, mu, a)
                                    * y[cc]
                                    * c[b];
                            }
                        }
                    }
                    out.z[(s * 2 + mu) * d + i] = dz;
                }
            }
        } else {
            covariant_site(model, ws, cfg, params, s, y_variant, &mut out)?;
        }
    }
    // derivative pieces: forward differences of the parameters
    for s in 0..ws.sites() {
        for mu in 0..2 {
            let nb = ws.neighbor_checked(s, mu);
            let nb = match nb {
                Some(n) => n,
                None => continue,
            };
            if !covariant {
                for i in 0..d {
                    out.z[(s * 2 + mu) * d + i] +=
                        (params.t_at(nb, i) - params.t_at(s, i)) / h;
                }
            }
            for a in 0..r {
                out.a[(s * 2 + mu) * r + a] += (params.c_at(nb, a) - params.c_at(s, a)) / h;
            }
        }
    }
    Ok(out)
}

impl Worldsheet {
    fn neighbor_checked(&self, s: usize, mu: usize) -> Option<usize> {
        let (row, col) = self.coords(s);
        match (self.topology, mu) {
            (Topology::Torus, _) => Some(self.neighbor(s, mu)),
            (Topology::Rectangle, 0) => (col < self.n).then(|| self.neighbor(s, mu)),
            (Topology::Rectangle, 1) => (row < self.n).then(|| self.neighbor(s, mu)),
            _ => None,
        }
    }
}

fn eval_pi(pi: &Antisym<Expr>, env: &[Jet]) -> Result<Antisym<Jet>, EvalError> {
    pi.eval(env)
}

// covariantized transformation at one site (everything except the
// finite-difference derivative terms, which are added by the caller)
fn covariant_site(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    params: &GaugeParams,
    s: usize,
    y_variant: YVariant,
    out: &mut FieldConfig,
) -> Result<(), EvalError> {
    let d = model.d();
    let r = model.r();
    let h = ws.h();
    let env = seed_point(cfg.x_at(s));
    let aj = eval_env(&model.alg, &model.conn, &env)?;
    let pj = model.pi.eval(&env)?;
    let y: Vec<f64> = (0..r).map(|a| cfg.y_at(s, a)).collect();
    let c: Vec<f64> = (0..r).map(|a| params.c_at(s, a)).collect();
    // rotated parameter t_cov = t - omega^b_{ai} c^a y_b
    let tn: Vec<f64> = (0..d)
        .map(|i| {
            let mut v = params.t_at(s, i);
            for a in 0..r {
                for b in 0..r {
                    v -= aj.omega[a][b][i].v * c[a] * y[b];
                }
            }
            v
        })
        .collect();
    // rotated momenta
    let zn = |mu: usize, i: usize| -> f64 {
        let mut v = cfg.z_at(s, mu, i);
        for a in 0..r {
            for b in 0..r {
                v -= aj.omega[a][b][i].v * cfg.a_at(s, mu, a) * y[b];
            }
        }
        v
    };
    // delta X
    for i in 0..d {
        let mut dx = 0.0;
        for j in 0..d {
            dx -= pj.get(&[i as u8, j as u8]).v * tn[j];
        }
        for a in 0..r {
            dx += aj.rho[a][i].v * c[a];
        }
        out.x[s * d + i] = dx;
    }
    // delta Y
    for a in 0..r {
        let mut dy = 0.0;
        for j in 0..d {
            dy -= aj.rho[a][j].v * tn[j];
        }
        for b in 0..r {
            for cc in 0..r {
                dy -= aj.c[cc].get(&[a as u8, b as u8]).v * y[cc] * c[b];
            }
        }
        // + omega^cc_{bi} rho^i_a y_cc c^b
        for b in 0..r {
            for cc in 0..r {
                for i in 0..d {
                    dy += aj.omega[b][cc][i].v * aj.rho[a][i].v * y[cc] * c[b];
                }
            }
        }
        if y_variant == YVariant::WithT {
            for i in 0..d {
                for j in 0..d {
                    for b in 0..r {
                        dy -= pj.get(&[i as u8, j as u8]).v
                            * aj.omega[a][b][i].v
                            * y[b]
                            * tn[j];
                    }
                }
            }
        }
        out.y[s * r + a] = dy;
    }
    // delta A (pointwise parts; dc is added by the caller)
    for mu in 0..2 {
        for a in 0..r {
            let mut da = 0.0;
            for b in 0..r {
                for cc in 0..r {
                    da += aj.c[a].get(&[b as u8, cc as u8]).v * cfg.a_at(s, mu, b) * c[cc];
                }
            }
            // + omega^a_{bi} c^b dX^i
            if let Some(nb) = ws.neighbor_checked(s, mu) {
                for b in 0..r {
                    for i in 0..d {
                        let dx = (cfg.x[nb * d + i] - cfg.x[s * d + i]) / h;
                        da += aj.omega[b][a][i].v * c[b] * dx;
                    }
                }
            }
            // - pi^{ij} omega^a_{bi} (-A^b t_j + c^b Z_j)
            for b in 0..r {
                for i in 0..d {
                    for j in 0..d {
                        let p = pj.get(&[i as u8, j as u8]).v;
                        da -= p * aj.omega[b][a][i].v
                            * (-cfg.a_at(s, mu, b) * tn[j] + c[b] * zn(mu, j));
                    }
                }
            }
            out.a[(s * 2 + mu) * r + a] = da;
        }
    }
    // delta Z = delta Z_cov + delta(omega A y) chain
    // delta Z_cov needs d(t_cov); assemble with the neighbour's rotated
    // parameter so the difference sees the full composite field
    for mu in 0..2 {
        let nb = ws.neighbor_checked(s, mu);
        for i in 0..d {
            let mut dzn = 0.0;
            if let Some(nb) = nb {
                let env_nb = seed_point(cfg.x_at(nb));
                let aj_nb = eval_env(&model.alg, &model.conn, &env_nb)?;
                let mut tn_nb = params.t_at(nb, i);
                for a in 0..r {
                    for b in 0..r {
                        tn_nb -= aj_nb.omega[a][b][i].v
                            * params.c_at(nb, a)
                            * cfg.y_at(nb, b);
                    }
                }
                dzn += (tn_nb - tn[i]) / h;
            }
            for j in 0..d {
                for k in 0..d {
                    dzn += pj.get(&[j as u8, k as u8]).grad(i) * zn(mu, j) * tn[k];
                }
            }
            // nabla_i rho^j_a (t_j A^a - Z_j c^a)
            for a in 0..r {
                for j in 0..d {
                    let mut nab = aj.rho[a][j].grad(i);
                    for b in 0..r {
                        nab -= aj.omega[a][b][i].v * aj.rho[b][j].v;
                    }
                    dzn += nab * (tn[j] * cfg.a_at(s, mu, a) - zn(mu, j) * c[a]);
                }
            }
            // - pi^{jk} R^b_{ija} A^a Y_b t_k + S^cc_{iab} A^a Y_cc c^b
            for a in 0..r {
                for b in 0..r {
                    for j in 0..d {
                        for k in 0..d {
                            let rr = model.curv[i][j][a][b].eval(&env)?.v;
                            dzn -= pj.get(&[j as u8, k as u8]).v
                                * rr
                                * cfg.a_at(s, mu, a)
                                * y[b]
                                * tn[k];
                        }
                    }
                    for cc in 0..r {
                        let ss = model.basic[i][cc].get(&[a as u8, b as u8]).eval(&env)?.v;
                        dzn += ss * cfg.a_at(s, mu, a) * y[cc] * c[b];
                    }
                }
            }
            // chain back to the plain momentum:
            // delta Z = delta Z_cov + d(omega A y) along the variation
            let mut dw = 0.0;
            for a in 0..r {
                for b in 0..r {
                    let om = &aj.omega[a][b][i];
                    // omega gradient term with delta X
                    for k in 0..d {
                        dw += om.grad(k) * out.x[s * d + k] * cfg.a_at(s, mu, a) * y[b];
                    }
                    dw += om.v * out.a[(s * 2 + mu) * r + a] * y[b];
                    dw += om.v * cfg.a_at(s, mu, a) * out.y[s * r + b];
                }
            }
            out.z[(s * 2 + mu) * d + i] = dzn + dw;
        }
    }
    Ok(())
}

/// Exact derivative of the discrete action along the discrete gauge
/// transformation (dual-number directional derivative, no finite epsilon).
pub fn gauge_variation(
    model: &SigmaModel,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    params: &GaugeParams,
    covariant: bool,
    y_variant: YVariant,
) -> Result<f64, EvalError> {
    let dcfg = gauge_transform(model, ws, cfg, params, covariant, y_variant)?;
    Ok(action_gpsm_dual(model, ws, cfg, Some(&dcfg), false, PsmOnly::No)?.e)
}

// ---------------------------------------------------------------------------
// boundary checks
// ---------------------------------------------------------------------------

/// Per-term decomposition of the boundary gauge variation.
#[derive(Debug, Clone)]
pub struct BoundaryBreakdown {
    pub total: f64,
    pub term_dx: f64,
    pub term_anchor: f64,
    pub term_equivariance: f64,
    /// pointwise max of the anchor-compatibility coefficient on the boundary
    pub coeff_anchor_max: f64,
    /// pointwise max of the equivariance coefficient on the boundary
    pub coeff_equivariance_max: f64,
}

/// Discretized boundary integrand of the gauge variation:
/// `(t_i - nabla_i mu_a c^a) dX^i - (rho^i_a - pi^{ji} nabla_j mu_a) t_i A^a
///  + (rho^i_a d_i mu_b - C^c_{ab} mu_c) c^a A^b`;
/// the middle contraction follows the same first-slot sharp convention as
/// the momentum checks (`p2_sign` toggle).
pub fn boundary_variation(
    model: &SigmaModel,
    mu: &[Expr],
    p2_sign: f64,
    ws: &Worldsheet,
    cfg: &FieldConfig,
    params: &GaugeParams,
) -> Result<BoundaryBreakdown, EvalError> {
    assert_eq!(ws.topology, Topology::Rectangle);
    let d = model.d();
    let r = model.r();
    let h = ws.h();
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    let mut c2max = 0.0f64;
    let mut c3max = 0.0f64;
    for (s, mudir, sign) in ws.boundary_links() {
        let env = seed_point(cfg.x_at(s));
        let aj = eval_env(&model.alg, &model.conn, &env)?;
        let pj = model.pi.eval(&env)?;
        let muj: Vec<Jet> = mu
            .iter()
            .map(|e| e.eval(&env))
            .collect::<Result<_, _>>()?;
        let nmu: Vec<Vec<Jet>> = (0..r)
            .map(|a| {
                (0..d)
                    .map(|i| {
                        let mut v = muj[a].partial(i);
                        for b in 0..r {
                            v = v.sub(&aj.omega[a][b][i].mul(&muj[b]));
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let nb = ws.neighbor(s, mudir);
        let step = sign * h;
        // term 1: (t_i - nabla_i mu_a c^a) dX^i along the link
        let mut v1 = 0.0;
        for i in 0..d {
            let dx = (cfg.x[nb * d + i] - cfg.x[s * d + i]) / h;
            let mut coef = params.t_at(s, i);
            for a in 0..r {
                coef -= nmu[a][i].v * params.c_at(s, a);
            }
            v1 += coef * dx;
        }
        t1.push(Dual::c(v1 * step));
        // terms 2 and 3 multiply the link potential
        let mut v2 = 0.0;
        let mut v3 = 0.0;
        for a in 0..r {
            let a_link = cfg.a_at(s, mudir, a);
            for i in 0..d {
                let mut coef = aj.rho[a][i].v;
                for j in 0..d as u8 {
                    coef -= p2_sign * nmu[a][j as usize].v * pj.get(&[j, i as u8]).v;
                }
                c2max = c2max.max(coef.abs());
                v2 -= coef * params.t_at(s, i) * a_link;
            }
            for b in 0..r {
                let mut coef = 0.0;
                for i in 0..d {
                    coef += aj.rho[a][i].v * muj[b].grad(i);
                }
                for cc in 0..r {
                    coef -= aj.c[cc].get(&[a as u8, b as u8]).v * muj[cc].v;
                }
                c3max = c3max.max(coef.abs());
                v3 += coef * params.c_at(s, a) * cfg.a_at(s, mudir, b);
            }
        }
        t2.push(Dual::c(v2 * step));
        t3.push(Dual::c(v3 * step));
    }
    let term_dx = tree_sum(&mut t1).v;
    let term_anchor = tree_sum(&mut t2).v;
    let term_equivariance = tree_sum(&mut t3).v;
    Ok(BoundaryBreakdown {
        total: term_dx + term_anchor + term_equivariance,
        term_dx,
        term_anchor,
        term_equivariance,
        coeff_anchor_max: c2max,
        coeff_equivariance_max: c3max,
    })
}

// ---------------------------------------------------------------------------
// Dirac sigma model algebraic data
// ---------------------------------------------------------------------------

/// Metric and orthogonal field defining the Cayley-transform graph.
#[derive(Debug, Clone)]
pub struct GdsmData {
    pub g: Vec<Vec<Expr>>,
    pub orth: Vec<Vec<Expr>>,
}

impl GdsmData {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `U = (id - O)(id + O)^{-1} g^{-1}` with the factor ordering fixed by
    /// the parametrization `Z = g(id + O) a`, `V = (id - O) a`; errors on a
    /// singular `id + O`.
    pub fn u_at(&self, point: &[f64]) -> Result<Vec<Vec<Jet>>, String> {
        let env = seed_point(point);
        let d = self.dim();
        let ev = |m: &Vec<Vec<Expr>>| -> Result<Vec<Vec<Jet>>, String> {
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|e| e.eval(&env).map_err(|er| format!("{er}")))
                        .collect()
                })
                .collect()
        };
        let g = ev(&self.g)?;
        let o = ev(&self.orth)?;
        let mut id_plus = vec![vec![Jet::zero(d); d]; d];
        let mut id_minus = vec![vec![Jet::zero(d); d]; d];
        for i in 0..d {
            for j in 0..d {
                let idv = Jet::constant(if i == j { 1.0 } else { 0.0 }, d);
                id_plus[i][j] = idv.add(&o[i][j]);
                id_minus[i][j] = idv.sub(&o[i][j]);
            }
        }
        let inv_plus =
            jet_mat_inverse(&id_plus).ok_or_else(|| String::from("singular id + O"))?;
        let inv_g = jet_mat_inverse(&g).ok_or_else(|| String::from("singular metric"))?;
        // U = (id - O) * inv_plus * inv_g
        let mut tmp = vec![vec![Jet::zero(d); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Jet::zero(d);
                for k in 0..d {
                    acc = acc.add(&id_minus[i][k].mul(&inv_plus[k][j]));
                }
                tmp[i][j] = acc;
            }
        }
        let mut u = vec![vec![Jet::zero(d); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Jet::zero(d);
                for k in 0..d {
                    acc = acc.add(&tmp[i][k].mul(&inv_g[k][j]));
                }
                u[i][j] = acc;
            }
        }
        Ok(u)
    }

    /// Frame of the Cayley graph from the parametrization columns
    /// `V = (id - O) e_k`, `Z = g(id + O) e_k` (expression level, no
    /// inversions).
    pub fn graph_frame(&self) -> DiracFrame {
        let d = self.dim();
        let mut sections = Vec::with_capacity(d);
        for k in 0..d {
            let vec: Vec<Expr> = (0..d)
                .map(|i| {
                    let idv = if i == k { Expr::one() } else { Expr::zero() };
                    Expr::sub(idv, self.orth[i][k].clone())
                })
                .collect();
            let form: Vec<Expr> = (0..d)
                .map(|l| {
                    let mut e = Expr::zero();
                    for j in 0..d {
                        let idv = if j == k { Expr::one() } else { Expr::zero() };
                        e = Expr::add(
                            e,
                            Expr::mul(
                                self.g[l][j].clone(),
                                Expr::add(idv, self.orth[j][k].clone()),
                            ),
                        );
                    }
                    e
                })
                .collect();
            sections.push(GeneralizedSection::tangent_pair(vec, form));
        }
        DiracFrame {
            sections,
            expected_rank: d,
        }
    }
}

/// Validates the orthogonality and invertibility invariants, the
/// parametrization/ordering identity `V = U Z`, and the antisymmetry of `U`
/// forced by isotropy of the graph.
pub fn check_gdsm_structure(gd: &GdsmData, points: &[Vec<f64>], tol: f64) -> CheckReport {
    let d = gd.dim();
    let mut orth = ResTrack::new();
    let mut order = ResTrack::new();
    let mut anti = ResTrack::new();
    let mut failure: Option<String> = None;
    let mut rng = SplitMix64::new(0xC0FFEE);
    for p in points {
        let env = seed_point(p);
        let r = (|| -> Result<(), String> {
            let gm = Mat::from_rows(
                &gd.g
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| e.eval(&env).map(|j| j.v).map_err(|er| format!("{er}")))
                            .collect::<Result<Vec<f64>, String>>()
                    })
                    .collect::<Result<Vec<_>, String>>()?,
            );
            let om = Mat::from_rows(
                &gd.orth
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| e.eval(&env).map(|j| j.v).map_err(|er| format!("{er}")))
                            .collect::<Result<Vec<f64>, String>>()
                    })
                    .collect::<Result<Vec<_>, String>>()?,
            );
            orth.update(om.transpose().matmul(&gm).matmul(&om).sub(&gm).max_abs(), p);
            let u = gd.u_at(p)?;
            // ordering oracle: draw a, build Z and V, check V = U Z
            let a: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let mut zvec = vec![0.0; d];
            let mut vvec = vec![0.0; d];
            for i in 0..d {
                for k in 0..d {
                    let idp = if i == k { 1.0 } else { 0.0 };
                    vvec[i] += (idp - om[(i, k)]) * a[k];
                    let mut gp = 0.0;
                    for j in 0..d {
                        let idpj = if j == k { 1.0 } else { 0.0 };
                        gp += gm[(i, j)] * (idpj + om[(j, k)]);
                    }
                    zvec[i] += gp * a[k];
                }
            }
            for i in 0..d {
                let mut ui = 0.0;
                for j in 0..d {
                    ui += u[i][j].v * zvec[j];
                }
                order.update(ui - vvec[i], p);
            }
            for i in 0..d {
                for j in 0..d {
                    anti.update(u[i][j].v + u[j][i].v, p);
                }
            }
            Ok(())
        })();
        if let Err(e) = r {
            failure = Some(e);
            break;
        }
    }
    let mut rep = CheckReport::new();
    let mut e0 = orth.entry("gdsm.orthogonality", "O^T g O = g", 1e-10);
    let mut e1 = order.entry("gdsm.u_ordering", "Eq. (defU) / Eq. (gauge41)", tol);
    let mut e2 = anti.entry("gdsm.u_antisymmetry", "Cayley-transform isotropy", tol);
    if let Some(msg) = &failure {
        for e in [&mut e0, &mut e1, &mut e2] {
            e.status = Status::Fail;
            e.notes.push(msg.clone());
        }
    }
    rep.push(e0);
    rep.push(e1);
    rep.push(e2);
    rep
}

/// `Anabla U = 0` with both contravariant legs of `U` transformed, plus the
/// boundary parametrization solve certifying membership of the composite
/// section.
pub fn check_gdsm_d1(
    alg: &LieAlgebroid,
    conn: &Connection,
    gd: &GdsmData,
    points: &[Vec<f64>],
    tol: f64,
) -> CheckReport {
    let d = alg.dim();
    let r = alg.rank;
    let mut t = ResTrack::new();
    let mut failure: Option<String> = None;
    for p in points {
        let res = (|| -> Result<(), String> {
            let env = seed_point(p);
            let aj = eval_env(alg, conn, &env).map_err(|e| format!("{e}"))?;
            let u = gd.u_at(p)?;
            for a in 0..r {
                for i in 0..d {
                    for j in 0..d {
                        let mut v = 0.0;
                        for k in 0..d {
                            v += aj.rho[a][k].v * u[i][j].grad(k);
                            // vector-leg corrections on both indices
                            v -= aj.rho[a][i].partial(k).v * u[k][j].v;
                            v -= aj.rho[a][j].partial(k).v * u[i][k].v;
                            for b in 0..r {
                                v += aj.rho[b][i].v * aj.omega[a][b][k].v * u[k][j].v;
                                v += aj.rho[b][j].v * aj.omega[a][b][k].v * u[i][k].v;
                            }
                        }
                        t.update(v, p);
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e);
            break;
        }
    }
    let mut rep = CheckReport::new();
    let mut e = t.entry("gdsm.anabla_u", "Eq. (gauge35) / condition (D1)", tol);
    if let Some(msg) = &failure {
        e.status = Status::Fail;
        e.notes.push(msg.clone());
    }
    rep.push(e);
    rep
}

/// Least-squares solve of the boundary parametrization
/// `nabla mu = g(id + O) b`, `rho = (id - O) b` per fiber index; the
/// residual certifies Dirac membership of the composite section.
pub fn gdsm_membership_solve(
    alg: &LieAlgebroid,
    conn: &Connection,
    mu: &[Expr],
    gd: &GdsmData,
    points: &[Vec<f64>],
    tol: f64,
) -> CheckReport {
    let d = alg.dim();
    let r = alg.rank;
    let mut t = ResTrack::new();
    let mut failure: Option<String> = None;
    for p in points {
        let res = (|| -> Result<(), String> {
            let env = seed_point(p);
            let aj = eval_env(alg, conn, &env).map_err(|e| format!("{e}"))?;
            let muj: Vec<Jet> = mu
                .iter()
                .map(|e| e.eval(&env).map_err(|er| format!("{er}")))
                .collect::<Result<_, _>>()?;
            let ev = |m: &Vec<Vec<Expr>>| -> Result<Vec<Vec<f64>>, String> {
                m.iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| e.eval(&env).map(|j| j.v).map_err(|er| format!("{er}")))
                            .collect()
                    })
                    .collect()
            };
            let gm = ev(&gd.g)?;
            let om = ev(&gd.orth)?;
            // stacked system rows: first the form part, then the vector part
            let mut rows = Vec::with_capacity(2 * d);
            for l in 0..d {
                let mut row = vec![0.0; d];
                for k in 0..d {
                    for j in 0..d {
                        let idv = if j == k { 1.0 } else { 0.0 };
                        row[k] += gm[l][j] * (idv + om[j][k]);
                    }
                }
                rows.push(row);
            }
            for i in 0..d {
                let mut row = vec![0.0; d];
                for k in 0..d {
                    let idv = if i == k { 1.0 } else { 0.0 };
                    row[k] = idv - om[i][k];
                }
                rows.push(row);
            }
            let m = Mat::from_rows(&rows);
            for a in 0..r {
                let mut rhs = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut v = muj[a].partial(i);
                    for b in 0..r {
                        v = v.sub(&aj.omega[a][b][i].mul(&muj[b]));
                    }
                    rhs.push(v.v);
                }
                for i in 0..d {
                    rhs.push(aj.rho[a][i].v);
                }
                let (_, res) = m
                    .lstsq(&rhs)
                    .ok_or_else(|| String::from("degenerate parametrization system"))?;
                t.update(res, p);
            }
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e);
            break;
        }
    }
    let mut rep = CheckReport::new();
    let mut e = t.entry("gdsm.membership_solve", "Eq. (bou12) parametrization", tol);
    if let Some(msg) = &failure {
        e.status = Status::Fail;
        e.notes.push(msg.clone());
    }
    rep.push(e);
    rep
}

/// Pointwise boundary-condition coefficients (the Poisson and GDSM cases).
pub fn check_boundary_conditions(
    model: &SigmaModel,
    mu: &[Expr],
    p2_sign: f64,
    gdsm: Option<&GdsmData>,
    points: &[Vec<f64>],
    tol: f64,
) -> CheckReport {
    let d = model.d();
    let r = model.r();
    let mut anchor = ResTrack::new();
    let mut equivariance = ResTrack::new();
    let mut failure: Option<String> = None;
    for p in points {
        let res = (|| -> Result<(), String> {
            let env = seed_point(p);
            let aj = eval_env(&model.alg, &model.conn, &env).map_err(|e| format!("{e}"))?;
            let muj: Vec<Jet> = mu
                .iter()
                .map(|e| e.eval(&env).map_err(|er| format!("{er}")))
                .collect::<Result<_, _>>()?;
            let nmu: Vec<Vec<f64>> = (0..r)
                .map(|a| {
                    (0..d)
                        .map(|i| {
                            let mut v = muj[a].partial(i);
                            for b in 0..r {
                                v = v.sub(&aj.omega[a][b][i].mul(&muj[b]));
                            }
                            v.v
                        })
                        .collect()
                })
                .collect();
            match gdsm {
                None => {
                    let pj = model.pi.eval(&env).map_err(|e| format!("{e}"))?;
                    for a in 0..r {
                        for i in 0..d {
                            let mut v = aj.rho[a][i].v;
                            for j in 0..d as u8 {
                                v -= p2_sign * nmu[a][j as usize] * pj.get(&[j, i as u8]).v;
                            }
                            anchor.update(v, p);
                        }
                    }
                }
                Some(gd) => {
                    let u = gd.u_at(p)?;
                    for a in 0..r {
                        for i in 0..d {
                            let mut v = aj.rho[a][i].v;
                            for j in 0..d {
                                v -= u[i][j].v * nmu[a][j];
                            }
                            anchor.update(v, p);
                        }
                    }
                }
            }
            for a in 0..r {
                for b in 0..r {
                    let mut v = 0.0;
                    for i in 0..d {
                        v += aj.rho[a][i].v * muj[b].grad(i);
                    }
                    for cc in 0..r {
                        v -= aj.c[cc].get(&[a as u8, b as u8]).v * muj[cc].v;
                    }
                    equivariance.update(v, p);
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e);
            break;
        }
    }
    let (id2, an2) = if gdsm.is_some() {
        ("sigma.bou12", "Eq. (bou12)")
    } else {
        ("sigma.bou02", "Eq. (bou02)")
    };
    let (id3, an3) = if gdsm.is_some() {
        ("sigma.bou14", "Eq. (bou14)")
    } else {
        ("sigma.bou04", "Eq. (bou04)")
    };
    let mut rep = CheckReport::new();
    let mut e0 = anchor.entry(id2, an2, tol);
    let mut e1 = equivariance.entry(id3, an3, tol);
    if let Some(msg) = &failure {
        for e in [&mut e0, &mut e1] {
            e.status = Status::Fail;
            e.notes.push(msg.clone());
        }
    }
    rep.push(e0);
    rep.push(e1);
    rep
}
