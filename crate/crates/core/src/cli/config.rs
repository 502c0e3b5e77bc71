//! Run configuration: a sectioned TOML file whose field values are numbers
//! or expressions in `x` and `y`.
//!
//! ```toml
//! [domain]
//! nx = 33
//! [material]
//! mu = 1.0
//! lambda = 1.0
//! [growth]
//! kap_11 = 1
//! kap_22 = "1 + 0.1*sin(x)"
//! [run]
//! mode = "solve2d"
//! ```
//!
//! Every error carries the line of the offending entry when one exists.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector2;
use serde::Deserialize;
use toml::Spanned;

use crate::energy2d::Displacement2D;
use crate::error::{Error, Result};
use crate::fields::{Field2, FieldExpr, FieldTable, Grid2, Matrix3Field2, ScalarField2};
use crate::growth::{make_compatible, GrowthField};
use crate::material::Material;
use crate::plate3d::{ThicknessRule, WarpingSign};
use crate::solver2d::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Check,
    Solve2d,
    Airy,
    Verify3d,
    Sweep3d,
    Scaling,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Check, Mode::Solve2d, Mode::Airy, Mode::Verify3d, Mode::Sweep3d, Mode::Scaling];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Check => "check",
            Mode::Solve2d => "solve2d",
            Mode::Airy => "airy",
            Mode::Verify3d => "verify3d",
            Mode::Sweep3d => "sweep3d",
            Mode::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
            Error::config(format!("unknown mode '{s}', expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Value {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    nx: usize,
    ny: Option<usize>,
    #[serde(default = "one")]
    lx: f64,
    #[serde(default = "one")]
    ly: f64,
    #[serde(default)]
    x0: f64,
    #[serde(default)]
    y0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    mu: f64,
    lambda: f64,
}

impl Default for RawMaterial {
    fn default() -> Self {
        Self { mu: 1.0, lambda: 1.0 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
    history: Option<usize>,
    armijo: Option<f64>,
    backtrack: Option<f64>,
    init_amplitude: Option<f64>,
    newton_iters: Option<usize>,
    newton_switch: Option<f64>,
    starts: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    h_list: Option<Vec<f64>>,
    nz: Option<usize>,
    sign: Option<Spanned<String>>,
    rule: Option<Spanned<String>>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScaling {
    gamma: Option<f64>,
    theta: Option<f64>,
    h_list: Option<Vec<f64>>,
    nz: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    mode: Option<Mode>,
    output: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    growth: BTreeMap<String, Spanned<Value>>,
    #[serde(default)]
    state: BTreeMap<String, Spanned<Value>>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    scaling: RawScaling,
    #[serde(default)]
    run: RawRun,
}

/// Settings of the three-dimensional modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub h_list: Vec<f64>,
    pub nz: usize,
    pub sign: WarpingSign,
    pub rule: ThicknessRule,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            h_list: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            nz: 9,
            sign: WarpingSign::default(),
            rule: ThicknessRule::default(),
            max_iters: 2000,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub gamma: f64,
    pub theta: f64,
    pub h_list: Vec<f64>,
    pub nz: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { gamma: 2.0, theta: 1.0, h_list: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], nz: 9 }
    }
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Grid2,
    pub material: Material,
    pub growth: GrowthField,
    /// Displacements given in the file; modes that need one solve otherwise.
    pub state: Option<Displacement2D>,
    pub solver: SolverConfig,
    /// Random starts in addition to the zero state.
    pub starts: usize,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
    pub mode: Mode,
    pub output: PathBuf,
    /// The file text, echoed into the run manifest.
    pub source: String,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
    dir: &'a Path,
}

impl Ctx<'_> {
    fn err_at<T>(&self, span: std::ops::Range<usize>, msg: impl Into<String>) -> Result<T> {
        Err(Error::Config { line: Some(line_of(self.text, span.start)), msg: msg.into() })
    }

    fn field(&self, key: &str, v: &Spanned<Value>, grid: &Grid2) -> Result<ScalarField2> {
        match v.get_ref() {
            Value::Number(c) => Ok(Field2::filled(*grid, *c)),
            Value::Text(s) => {
                let parsed = FieldExpr::parse(s);
                match parsed.and_then(|e| e.sample(grid)) {
                    Ok(f) => Ok(f),
                    Err(e) => self.err_at(v.span(), format!("{key}: {e}")),
                }
            }
        }
    }

    fn path(&self, key: &str, v: &Spanned<Value>) -> Result<PathBuf> {
        let Value::Text(s) = v.get_ref() else {
            return self.err_at(v.span(), format!("{key} must be a file path"));
        };
        let p = self.dir.join(s);
        if !p.is_file() {
            return self.err_at(v.span(), format!("{key}: file '{}' not found", p.display()));
        }
        Ok(p)
    }

    fn table(&self, key: &str, v: &Spanned<Value>, grid: &Grid2) -> Result<FieldTable> {
        let p = self.path(key, v)?;
        let t = FieldTable::read(&p).map_err(|e| Error::Config { line: Some(line_of(self.text, v.span().start)), msg: format!("{key}: {e}") })?;
        if t.grid.nx != grid.nx || t.grid.ny != grid.ny {
            return self.err_at(v.span(), format!("{key}: file grid {}x{} differs from the domain", t.grid.nx, t.grid.ny));
        }
        Ok(t)
    }

    fn growth(&self, entries: &BTreeMap<String, Spanned<Value>>, grid: &Grid2) -> Result<GrowthField> {
        let compat = ["compatible_w1", "compatible_w2", "compatible_v"];
        if entries.keys().any(|k| compat.contains(&k.as_str())) {
            if let Some((k, v)) = entries.iter().find(|(k, _)| !compat.contains(&k.as_str())) {
                return self.err_at(v.span(), format!("growth.{k} cannot be combined with compatible_* entries"));
            }
            let get = |k: &str| entries.get(k).map_or(Ok(Field2::zeros(*grid)), |v| self.field(k, v, grid));
            let w = get("compatible_w1")?.zip_map(&get("compatible_w2")?, |a, b| Vector2::new(*a, *b));
            return make_compatible(&w, &get("compatible_v")?);
        }
        let mut eps = Matrix3Field2::zeros(*grid);
        let mut kap = Matrix3Field2::zeros(*grid);
        for (key, v) in entries {
            match key.as_str() {
                "eps_csv" => eps = self.table(key, v, grid)?.get_matrix3("eps_g")?,
                "kap_csv" => kap = self.table(key, v, grid)?.get_matrix3("kap_g")?,
                _ => {
                    let Some((target, i, j)) = entry_index(key) else {
                        return self.err_at(v.span(), format!("unknown growth entry '{key}'"));
                    };
                    let f = self.field(key, v, grid)?;
                    let m = if target == "eps" { &mut eps } else { &mut kap };
                    for (mv, fv) in m.values.iter_mut().zip(&f.values) {
                        mv[(i, j)] = *fv;
                    }
                }
            }
        }
        GrowthField::new(eps.with_grid(*grid), kap.with_grid(*grid))
    }

    fn state(&self, entries: &BTreeMap<String, Spanned<Value>>, grid: &Grid2) -> Result<Option<Displacement2D>> {
        if entries.is_empty() {
            return Ok(None);
        }
        if let Some(v) = entries.get("csv") {
            if let Some((k, v)) = entries.iter().find(|(k, _)| k.as_str() != "csv") {
                return self.err_at(v.span(), format!("state.{k} cannot be combined with state.csv"));
            }
            let t = self.table("csv", v, grid)?;
            let w = t.get_vector("w")?;
            let s = t.get_scalar("v")?;
            return Ok(Some(Displacement2D { w: w.with_grid(*grid), v: s.with_grid(*grid) }));
        }
        for (k, v) in entries {
            if !["w1", "w2", "v"].contains(&k.as_str()) {
                return self.err_at(v.span(), format!("unknown state entry '{k}'"));
            }
        }
        let get = |k: &str| entries.get(k).map_or(Ok(Field2::zeros(*grid)), |v| self.field(k, v, grid));
        let w = get("w1")?.zip_map(&get("w2")?, |a, b| Vector2::new(*a, *b));
        Ok(Some(Displacement2D::new(w, get("v")?)?))
    }
}

/// `eps_ij` / `kap_ij` with `i, j ∈ 1..=3`.
fn entry_index(key: &str) -> Option<(&'static str, usize, usize)> {
    let (target, rest) = if let Some(r) = key.strip_prefix("eps_") {
        ("eps", r)
    } else {
        ("kap", key.strip_prefix("kap_")?)
    };
    let b = rest.as_bytes();
    if b.len() != 2 || !(b'1'..=b'3').contains(&b[0]) || !(b'1'..=b'3').contains(&b[1]) {
        return None;
    }
    Some((target, (b[0] - b'1') as usize, (b[1] - b'1') as usize))
}

trait WithGrid {
    fn with_grid(self, grid: Grid2) -> Self;
}

impl<T> WithGrid for Field2<T> {
    /// Re-anchors a field read from a file onto the configured grid, whose
    /// node layout it already matches.
    fn with_grid(mut self, grid: Grid2) -> Self {
        self.grid = grid;
        self
    }
}

fn check_h_list(h: &[f64], what: &str) -> Result<()> {
    if h.is_empty() || h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::config(format!("{what}.h_list must hold positive thicknesses")));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read '{}': {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    /// Parses config text; relative file paths resolve against `dir`.
    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        let ctx = Ctx { text, dir };
        let d = &raw.domain;
        let grid = Grid2::with_origin(d.nx, d.ny.unwrap_or(d.nx), d.lx, d.ly, Vector2::new(d.x0, d.y0))
            .map_err(|e| Error::config(e.to_string()))?;
        let material = Material::new(raw.material.mu, raw.material.lambda)
            .and_then(|m| m.validate_plate().map(|_| m))
            .map_err(|e| Error::config(e.to_string()))?;
        let growth = ctx.growth(&raw.growth, &grid)?;
        let state = ctx.state(&raw.state, &grid)?;

        let s = &raw.solver;
        let base = SolverConfig::default();
        let solver = SolverConfig {
            max_iters: s.max_iters.unwrap_or(base.max_iters),
            grad_tol: s.grad_tol.unwrap_or(base.grad_tol),
            history: s.history.unwrap_or(base.history),
            armijo: s.armijo.unwrap_or(base.armijo),
            backtrack: s.backtrack.unwrap_or(base.backtrack),
            seed: raw.run.seed.unwrap_or(base.seed),
            init_amplitude: s.init_amplitude.unwrap_or(base.init_amplitude),
            newton_iters: s.newton_iters.unwrap_or(base.newton_iters),
            newton_switch: s.newton_switch.unwrap_or(base.newton_switch),
        };
        solver.validate().map_err(|e| Error::config(e.to_string()))?;

        let w = &raw.sweep;
        let dflt = SweepConfig::default();
        let sign = match &w.sign {
            None => dflt.sign,
            Some(s) => match s.get_ref().as_str() {
                "plus" => WarpingSign::Plus,
                "minus" => WarpingSign::Minus,
                other => return ctx.err_at(s.span(), format!("unknown sign '{other}', expected plus or minus")),
            },
        };
        let rule = match &w.rule {
            None => dflt.rule,
            Some(s) => match s.get_ref().as_str() {
                "simpson" => ThicknessRule::Simpson,
                "trapezoid" => ThicknessRule::Trapezoid,
                other => return ctx.err_at(s.span(), format!("unknown rule '{other}', expected simpson or trapezoid")),
            },
        };
        let sweep = SweepConfig {
            h_list: w.h_list.clone().unwrap_or(dflt.h_list),
            nz: w.nz.unwrap_or(dflt.nz),
            sign,
            rule,
            max_iters: w.max_iters.unwrap_or(dflt.max_iters),
            grad_tol: w.grad_tol.unwrap_or(dflt.grad_tol),
        };
        check_h_list(&sweep.h_list, "sweep")?;
        if sweep.nz < 3 || sweep.nz.is_multiple_of(2) {
            return Err(Error::config(format!("sweep.nz must be odd and at least 3, got {}", sweep.nz)));
        }

        let c = &raw.scaling;
        let dflt = ScalingConfig::default();
        let scaling = ScalingConfig {
            gamma: c.gamma.unwrap_or(dflt.gamma),
            theta: c.theta.unwrap_or(dflt.theta),
            h_list: c.h_list.clone().unwrap_or(dflt.h_list),
            nz: c.nz.unwrap_or(dflt.nz),
        };
        check_h_list(&scaling.h_list, "scaling")?;
        if !(scaling.gamma > 0.0 && scaling.theta > 0.0) {
            return Err(Error::config("scaling exponents must be positive"));
        }

        Ok(Self {
            grid,
            material,
            growth,
            state,
            solver,
            starts: s.starts.unwrap_or(4),
            sweep,
            scaling,
            mode: raw.run.mode.unwrap_or(Mode::Check),
            output: PathBuf::from(raw.run.output.unwrap_or_else(|| "out".into())),
            source: text.to_string(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.solver.seed = seed;
    }
}
