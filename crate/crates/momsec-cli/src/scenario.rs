//! Scenario files: a TOML document describing the chart, named tensor
//! fields, the algebroid, connection, momentum section, geometry and
//! optional lattice/GDSM blocks. Loading validates every reference and
//! expression and reports the first failure with its location.
//!
//! The machine-readable schema ships in `schemas/scenario-schema.json` and
//! is a versioned interface; indices in files are 1-based as in the
//! write-ups, converted to 0-based internally.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use momsec_core::algebroid::{Connection, LieAlgebroid};
use momsec_core::courant::{graph_quasi_poisson, CourantStructure};
use momsec_core::expr::{parse, Chart, Expr, Symbols};
use momsec_core::momentum::{Geometry, MomentumData};
use momsec_core::sigma::GdsmData;
use momsec_core::tensor::{Antisym, TensorField, Variance};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub chart: ChartBlock,
    #[serde(default)]
    pub fields: Vec<FieldBlock>,
    pub algebroid: AlgebroidBlock,
    #[serde(default)]
    pub connection: ConnectionBlock,
    pub momentum: MomentumBlock,
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub sigma: Option<SigmaBlock>,
    #[serde(default)]
    pub gdsm: Option<GdsmBlock>,
    #[serde(default)]
    pub checks: ChecksBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    pub coords: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub name: String,
    pub kind: String,
    pub degree: usize,
    pub components: Vec<ComponentEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    pub index: Vec<usize>,
    pub expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidBlock {
    pub rank: usize,
    /// `rho[a][i]`
    pub rho: Vec<Vec<String>>,
    #[serde(default)]
    pub c: Vec<StructureEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntry {
    pub index: Vec<usize>,
    pub upper: usize,
    pub expr: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionBlock {
    #[serde(default)]
    pub trivial: bool,
    #[serde(default)]
    pub omega: Vec<OmegaEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaEntry {
    pub a: usize,
    pub b: usize,
    pub i: usize,
    pub expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumBlock {
    pub mu: Vec<String>,
    #[serde(default = "default_sign")]
    pub anchor_sign: f64,
}

fn default_sign() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub kind: String,
    #[serde(default)]
    pub omega: Option<String>,
    #[serde(default)]
    pub pi: Option<String>,
    #[serde(default)]
    pub h: Option<String>,
    /// quasi-Poisson extension
    #[serde(default)]
    pub algebra_dim: Option<usize>,
    #[serde(default)]
    pub rho_g: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub c_tilde: Vec<StructureEntry>,
    #[serde(default)]
    pub phi: Vec<ComponentEntry>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SigmaBlock {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_gauge_seed")]
    pub gauge_seed: u64,
    #[serde(default = "default_grid")]
    pub grid: Vec<usize>,
}

fn default_seed() -> u64 {
    41
}

fn default_gauge_seed() -> u64 {
    42
}

fn default_grid() -> Vec<usize> {
    vec![8, 16, 32]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdsmBlock {
    pub g: Vec<Vec<String>>,
    pub orth: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct ChecksBlock {
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_box")]
    pub r#box: Vec<f64>,
    #[serde(default = "default_check_seed")]
    pub seed: u64,
}

fn default_suites() -> Vec<String> {
    vec!["all".into()]
}

fn default_tol() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    64
}

fn default_box() -> Vec<f64> {
    vec![-2.0, 2.0]
}

fn default_check_seed() -> u64 {
    42
}

impl Default for ChecksBlock {
    fn default() -> Self {
        ChecksBlock {
            suites: default_suites(),
            tol: default_tol(),
            samples: default_samples(),
            r#box: default_box(),
            seed: default_check_seed(),
        }
    }
}

/// Fully validated scenario with core data structures built.
pub struct Scenario {
    pub name: String,
    pub chart: Chart,
    pub fields: BTreeMap<String, TensorField>,
    pub momentum: MomentumData,
    pub sigma: Option<SigmaBlock>,
    pub gdsm: Option<GdsmData>,
    pub checks: ChecksBlock,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let file: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
    build_scenario(file).with_context(|| format!("invalid scenario {}", path.display()))
}

pub fn build_scenario(file: ScenarioFile) -> Result<Scenario> {
    let chart = Chart::new(file.chart.coords.clone()).map_err(|e| anyhow!("chart: {e}"))?;
    let syms = chart.symbols();
    let d = chart.dim();
    let parse_in = |src: &str, what: &str| -> Result<Expr> {
        parse(src, &syms).map_err(|e| anyhow!("{what}: `{src}`: {e}"))
    };

    // named tensor fields
    let mut fields = BTreeMap::new();
    for fb in &file.fields {
        let variance = match fb.kind.as_str() {
            "form" => Variance::Form,
            "multivector" => Variance::Multivector,
            other => bail!("field `{}`: unknown kind `{other}`", fb.name),
        };
        if fb.degree > d {
            bail!("field `{}`: degree {} exceeds chart dimension {d}", fb.name, fb.degree);
        }
        let mut comps = Antisym::zeros(d, fb.degree, Expr::zero());
        for ce in &fb.components {
            let idx = to_zero_based(&ce.index, d, &format!("field `{}`", fb.name))?;
            if idx.len() != fb.degree {
                bail!(
                    "field `{}`: component index {:?} has {} entries, expected {}",
                    fb.name,
                    ce.index,
                    idx.len(),
                    fb.degree
                );
            }
            comps.set(&idx, parse_in(&ce.expr, &format!("field `{}` component", fb.name))?);
        }
        if fields
            .insert(fb.name.clone(), TensorField { variance, comps })
            .is_some()
        {
            bail!("duplicate field name `{}`", fb.name);
        }
    }

    // algebroid
    let r = file.algebroid.rank;
    if r == 0 {
        bail!("algebroid rank must be at least 1");
    }
    if file.algebroid.rho.len() != r {
        bail!(
            "algebroid: rho has {} rows, expected rank {r}",
            file.algebroid.rho.len()
        );
    }
    let mut rho = Vec::with_capacity(r);
    for (a, row) in file.algebroid.rho.iter().enumerate() {
        if row.len() != d {
            bail!("algebroid: rho row {} has {} entries, expected {d}", a + 1, row.len());
        }
        let mut out = Vec::with_capacity(d);
        for src in row {
            out.push(parse_in(src, "algebroid anchor component")?);
        }
        rho.push(out);
    }
    let mut c = vec![Antisym::zeros(r, 2, Expr::zero()); r];
    for se in &file.algebroid.c {
        let idx = to_zero_based(&se.index, r, "structure function")?;
        if idx.len() != 2 {
            bail!("structure function index {:?} must have 2 entries", se.index);
        }
        if se.upper == 0 || se.upper > r {
            bail!("structure function upper index {} out of range 1..={r}", se.upper);
        }
        c[se.upper - 1].set(&idx, parse_in(&se.expr, "structure function")?);
    }
    let alg = LieAlgebroid::new(chart.clone(), r, rho, c);

    // connection
    let mut conn = Connection::trivial(r, d);
    if !file.connection.omega.is_empty() {
        for oe in &file.connection.omega {
            if oe.a == 0 || oe.a > r || oe.b == 0 || oe.b > r || oe.i == 0 || oe.i > d {
                bail!(
                    "connection entry (a={}, b={}, i={}) out of range",
                    oe.a,
                    oe.b,
                    oe.i
                );
            }
            conn.omega[oe.a - 1][oe.b - 1][oe.i - 1] = parse_in(&oe.expr, "connection component")?;
        }
    } else if !file.connection.trivial && file.sigma.is_some() {
        // an omitted block means trivial; `trivial = true` is the
        // self-documenting spelling
    }

    // momentum section
    if file.momentum.mu.len() != r {
        bail!(
            "momentum: mu has {} components, expected rank {r}",
            file.momentum.mu.len()
        );
    }
    let mu = file
        .momentum
        .mu
        .iter()
        .map(|s| parse_in(s, "momentum component"))
        .collect::<Result<Vec<_>>>()?;

    // geometry
    let lookup = |name: &Option<String>, what: &str| -> Result<Option<Antisym<Expr>>> {
        match name {
            None => Ok(None),
            Some(n) => match fields.get(n) {
                Some(f) => Ok(Some(f.comps.clone())),
                None => bail!("geometry {what} references undeclared field `{n}`"),
            },
        }
    };
    let geometry = match file.geometry.kind.as_str() {
        "presymplectic" => {
            let omega = lookup(&file.geometry.omega, "omega")?
                .ok_or_else(|| anyhow!("presymplectic geometry needs an `omega` field reference"))?;
            require_degree(&omega, 2, "omega")?;
            let h = lookup(&file.geometry.h, "h")?;
            if let Some(h) = &h {
                require_degree(h, 3, "h")?;
            }
            Geometry::Presymplectic { omega, h }
        }
        "poisson" => {
            let pi = lookup(&file.geometry.pi, "pi")?
                .ok_or_else(|| anyhow!("poisson geometry needs a `pi` field reference"))?;
            require_degree(&pi, 2, "pi")?;
            let h = lookup(&file.geometry.h, "h")?;
            if let Some(h) = &h {
                require_degree(h, 3, "h")?;
            }
            Geometry::Poisson { pi, h }
        }
        "quasi_poisson" => {
            let pi = lookup(&file.geometry.pi, "pi")?
                .ok_or_else(|| anyhow!("quasi-Poisson geometry needs a `pi` field reference"))?;
            require_degree(&pi, 2, "pi")?;
            let n = file
                .geometry
                .algebra_dim
                .ok_or_else(|| anyhow!("quasi-Poisson geometry needs `algebra_dim`"))?;
            let rho_g_src = file
                .geometry
                .rho_g
                .as_ref()
                .ok_or_else(|| anyhow!("quasi-Poisson geometry needs `rho_g`"))?;
            if rho_g_src.len() != n {
                bail!("rho_g has {} rows, expected algebra_dim {n}", rho_g_src.len());
            }
            let mut rho_g = Vec::with_capacity(n);
            for row in rho_g_src {
                if row.len() != d {
                    bail!("rho_g row has {} entries, expected {d}", row.len());
                }
                rho_g.push(
                    row.iter()
                        .map(|s| parse_in(s, "rho_g component"))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            let mut c_tilde = vec![Antisym::zeros(n, 2, Expr::zero()); n];
            for se in &file.geometry.c_tilde {
                let idx = to_zero_based(&se.index, n, "c_tilde")?;
                if se.upper == 0 || se.upper > n {
                    bail!("c_tilde upper index {} out of range", se.upper);
                }
                c_tilde[se.upper - 1].set(&idx, parse_in(&se.expr, "c_tilde")?);
            }
            let mut phi = Antisym::zeros(n, 3, Expr::zero());
            for ce in &file.geometry.phi {
                let idx = to_zero_based(&ce.index, n, "phi")?;
                phi.set(&idx, parse_in(&ce.expr, "phi")?);
            }
            let frame = graph_quasi_poisson(&pi, &rho_g);
            Geometry::Dirac {
                cs: CourantStructure::QuasiPoisson {
                    dim: d,
                    n,
                    c_tilde,
                    phi,
                    rho_g,
                },
                frame,
            }
        }
        "gdsm" => {
            let gd = file
                .gdsm
                .as_ref()
                .ok_or_else(|| anyhow!("gdsm geometry needs a [gdsm] block"))?;
            let data = build_gdsm(gd, d, &syms)?;
            let h = lookup(&file.geometry.h, "h")?;
            Geometry::Dirac {
                cs: CourantStructure::Standard { dim: d, h },
                frame: data.graph_frame(),
            }
        }
        other => bail!(
            "unknown geometry kind `{other}` (expected presymplectic, poisson, quasi_poisson or gdsm)"
        ),
    };

    let gdsm = match &file.gdsm {
        Some(gd) => Some(build_gdsm(gd, d, &syms)?),
        None => None,
    };

    if file.checks.r#box.len() != 2 || file.checks.r#box[0] >= file.checks.r#box[1] {
        bail!("checks.box must be [lo, hi] with lo < hi");
    }
    if let Some(sb) = &file.sigma {
        for &n in &sb.grid {
            if n < 4 {
                bail!("sigma grid sizes must be at least 4, got {n}");
            }
        }
    }

    Ok(Scenario {
        name: file.name,
        chart,
        fields,
        momentum: MomentumData {
            alg,
            conn,
            mu,
            geometry,
            p2_sign: file.momentum.anchor_sign,
        },
        sigma: file.sigma,
        gdsm,
        checks: file.checks,
    })
}

fn build_gdsm(gd: &GdsmBlock, d: usize, syms: &Symbols) -> Result<GdsmData> {
    let parse_mat = |m: &Vec<Vec<String>>, what: &str| -> Result<Vec<Vec<Expr>>> {
        if m.len() != d || m.iter().any(|row| row.len() != d) {
            bail!("gdsm {what} must be a {d}x{d} matrix");
        }
        m.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse(s, syms).map_err(|e| anyhow!("gdsm {what}: `{s}`: {e}")))
                    .collect()
            })
            .collect()
    };
    Ok(GdsmData {
        g: parse_mat(&gd.g, "metric")?,
        orth: parse_mat(&gd.orth, "orthogonal field")?,
    })
}

fn require_degree(t: &Antisym<Expr>, deg: usize, what: &str) -> Result<()> {
    if t.degree() != deg {
        bail!("{what} must have degree {deg}, found {}", t.degree());
    }
    Ok(())
}

fn to_zero_based(idx: &[usize], limit: usize, what: &str) -> Result<Vec<u8>> {
    idx.iter()
        .map(|&i| {
            if i == 0 || i > limit {
                bail!("{what}: index {i} out of range 1..={limit}");
            }
            Ok((i - 1) as u8)
        })
        .collect()
}
