//! Minimization of the discrete growth energy modulo its gauge group.
//!
//! The energy is unchanged by in-plane rigid motions of `w`, vertical shifts
//! of `v`, and the compensated tilt `(w, v) ↦ (w − v a − ½(a·x) a, v + a·x)`.
//! [`gauge_fix`] picks the representative with zero mean `v`, zero mean `∇v`,
//! zero mean `w` and zero skew part of the mean of `∇w`.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy2d::{Displacement2D, EnergyBreakdown, PlateEnergy};
use crate::error::{Error, Result};
use crate::fields::{Diff2, Field2, Grid2, ScalarField2};
use crate::growth::GrowthField;
use crate::material::Material;
use crate::optim::{lbfgs, LbfgsParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Quasi-Newton iteration budget.
    pub max_iters: usize,
    /// Bound on the max-norm of the gradient per unit cell area.
    pub grad_tol: f64,
    pub history: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub seed: u64,
    /// Random starts use `v` amplitudes of this fraction of the shorter side.
    pub init_amplitude: f64,
    /// Newton iterations allowed after the quasi-Newton phase; zero disables.
    pub newton_iters: usize,
    /// Gradient level at which the quasi-Newton phase hands over to Newton.
    pub newton_switch: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-9,
            history: 30,
            armijo: 1e-4,
            backtrack: 0.5,
            seed: 0,
            init_amplitude: 0.1,
            newton_iters: 50,
            newton_switch: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.history > 0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.init_amplitude >= 0.0
            && self.init_amplitude.is_finite()
            && self.newton_switch > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent solver settings {self:?}")))
        }
    }

    fn lbfgs(&self) -> LbfgsParams {
        let tol = if self.newton_iters > 0 { self.grad_tol.max(self.newton_switch) } else { self.grad_tol };
        LbfgsParams {
            max_iters: self.max_iters,
            grad_tol: tol,
            history: self.history,
            armijo: self.armijo,
            backtrack: self.backtrack,
            ..Default::default()
        }
    }
}

/// Gauge components removed by [`gauge_fix`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaugeData {
    pub translation: Vector2<f64>,
    pub rotation: f64,
    pub vertical_shift: f64,
    pub tilt: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub energy: EnergyBreakdown,
    pub initial_energy: f64,
    /// Quasi-Newton iterations.
    pub iterations: usize,
    pub newton_iterations: usize,
    pub grad_norm: f64,
    /// Rounding floor of the gradient norm at the final state; convergence
    /// means `grad_norm ≤ max(grad_tol, grad_floor)`.
    pub grad_floor: f64,
    pub converged: bool,
    pub line_search_failed: bool,
    /// `v` was replaced by `−v` to select the canonical mirror image.
    pub mirrored: bool,
    pub gauge: GaugeData,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn ok(&self) -> bool {
        self.converged && !self.line_search_failed
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "energy_total: {:e}", self.energy.total())?;
        writeln!(f, "energy_membrane: {:e}", self.energy.membrane)?;
        writeln!(f, "energy_bending: {:e}", self.energy.bending)?;
        writeln!(f, "initial_energy: {:e}", self.initial_energy)?;
        writeln!(f, "iterations: {}", self.iterations)?;
        writeln!(f, "newton_iterations: {}", self.newton_iterations)?;
        writeln!(f, "grad_norm: {:e}", self.grad_norm)?;
        writeln!(f, "grad_floor: {:e}", self.grad_floor)?;
        writeln!(f, "converged: {}", self.converged)?;
        writeln!(f, "line_search_failed: {}", self.line_search_failed)?;
        writeln!(f, "mirrored: {}", self.mirrored)?;
        writeln!(f, "gauge_translation: {:e} {:e}", self.gauge.translation.x, self.gauge.translation.y)?;
        writeln!(f, "gauge_rotation: {:e}", self.gauge.rotation)?;
        writeln!(f, "gauge_vertical_shift: {:e}", self.gauge.vertical_shift)?;
        writeln!(f, "gauge_tilt: {:e} {:e}", self.gauge.tilt.x, self.gauge.tilt.y)
    }
}

struct Gauge {
    grid: Grid2,
    diff: Diff2,
    weights: Vec<f64>,
    centroid: Vector2<f64>,
}

impl Gauge {
    fn new(grid: Grid2) -> Self {
        Self { grid, diff: Diff2::new(&grid), weights: grid.trapezoid_weights(), centroid: grid.centroid() }
    }

    fn mean(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(f, w)| f * w).sum::<f64>() / self.grid.area()
    }

    /// Applies the gauge in place on packed `[w₁ | w₂ | v]`.
    fn apply(&self, x: &mut [f64]) -> GaugeData {
        let n = self.grid.len();
        let d = &self.diff;
        let (w, v) = x.split_at_mut(2 * n);
        let (w1, w2) = w.split_at_mut(n);

        let a = Vector2::new(self.mean(&d.dx(v)), self.mean(&d.dy(v)));
        for k in 0..n {
            let p = self.grid.point(k);
            let shift = a * v[k] - 0.5 * a.dot(&p) * a;
            w1[k] += shift.x;
            w2[k] += shift.y;
            v[k] -= a.dot(&p);
        }
        let c = self.mean(v);
        v.iter_mut().for_each(|v| *v -= c);

        let rot = 0.5 * (self.mean(&d.dy(w1)) - self.mean(&d.dx(w2)));
        for k in 0..n {
            let r = self.grid.point(k) - self.centroid;
            w1[k] -= rot * r.y;
            w2[k] += rot * r.x;
        }
        let t = Vector2::new(self.mean(w1), self.mean(w2));
        w1.iter_mut().for_each(|w| *w -= t.x);
        w2.iter_mut().for_each(|w| *w -= t.y);
        GaugeData { translation: t, rotation: rot, vertical_shift: c, tilt: a }
    }

    /// Mean of `v` over the quadrant `x < x̄`, `y > ȳ`.
    fn upper_left_mean(&self, v: &[f64]) -> f64 {
        let (mut s, mut a) = (0.0, 0.0);
        for (k, (v, w)) in v.iter().zip(&self.weights).enumerate() {
            let p = self.grid.point(k);
            if p.x <= self.centroid.x && p.y >= self.centroid.y {
                s += v * w;
                a += w;
            }
        }
        s / a
    }
}

/// Canonical gauge representative of `d`; the energy is unchanged.
pub fn gauge_fix(d: &Displacement2D) -> Displacement2D {
    gauge_fix_with_data(d).0
}

pub fn gauge_fix_with_data(d: &Displacement2D) -> (Displacement2D, GaugeData) {
    let gauge = Gauge::new(d.grid());
    let mut x = d.to_vec();
    let data = gauge.apply(&mut x);
    (Displacement2D::from_slice(d.grid(), &x), data)
}

/// Whether `v ↦ −v` is an exact symmetry of the energy for this growth.
fn mirror_symmetric(g: &GrowthField) -> bool {
    let tol = 1e-14 * g.scale();
    g.kap_sym2().values.iter().all(|k| k.amax() <= tol)
}

/// Minimizes the energy from `init` with L-BFGS, gauge-fixing after every
/// accepted step. The best iterate is returned even when not converged.
pub fn minimize(
    init: &Displacement2D,
    g: &GrowthField,
    m: &Material,
    cfg: &SolverConfig,
) -> Result<(Displacement2D, SolveReport)> {
    cfg.validate()?;
    let grid = init.grid();
    if grid != g.grid() {
        return Err(Error::GridMismatch);
    }
    if !init.is_finite() {
        return Err(Error::InvalidArgument("initial state is not finite".into()));
    }
    let start = Instant::now();
    let energy = PlateEnergy::new(g, m);
    let gauge = Gauge::new(grid);
    let mut x0 = init.to_vec();
    let gauge_data = gauge.apply(&mut x0);
    let initial_energy = energy.energy(&x0).total();
    let scale = 1.0 / (grid.hx() * grid.hy());
    let out = lbfgs(|x, gr| energy.energy_and_gradient(x, gr).total(), x0, &cfg.lbfgs(), scale, |x| {
        gauge.apply(x);
    });
    let mut x = out.x;
    let (mut grad_norm, mut failed) = (out.grad_norm, out.line_search_failed);
    let mut converged = grad_norm <= cfg.grad_tol.max(gradient_floor(&x, m, grid));
    let mut newton_iterations = 0;
    if !converged && cfg.newton_iters > 0 {
        let nt = newton(&energy, &gauge, &mut x, cfg, scale);
        newton_iterations = nt.iterations;
        grad_norm = nt.grad_norm;
        converged = nt.converged;
        failed = nt.failed && !converged;
    }
    let grad_floor = gradient_floor(&x, m, grid);
    let n = grid.len();
    let mut mirrored = false;
    if mirror_symmetric(g) && gauge.upper_left_mean(&x[2 * n..]) < 0.0 {
        x[2 * n..].iter_mut().for_each(|v| *v = -*v);
        mirrored = true;
    }
    let state = Displacement2D::from_slice(grid, &x);
    let report = SolveReport {
        energy: energy.energy(&x),
        initial_energy,
        iterations: out.iterations,
        newton_iterations,
        grad_norm,
        grad_floor,
        converged,
        line_search_failed: failed,
        mirrored,
        gauge: gauge_data,
        wall_time: start.elapsed(),
    };
    Ok((state, report))
}

/// Gradient noise caused by rounding the nodal values: the bending operator
/// amplifies relative perturbations of size ε by `h⁻⁴`.
fn gradient_floor(x: &[f64], m: &Material, grid: Grid2) -> f64 {
    let h = grid.hx().min(grid.hy());
    let amp = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    64.0 * f64::EPSILON * amp * (2.0 * m.mu + m.plate_lambda().abs()) / h.powi(4)
}

struct NewtonOutcome {
    iterations: usize,
    grad_norm: f64,
    converged: bool,
    failed: bool,
}

/// Degrees of freedom held fixed in Newton steps; they cut every gauge
/// orbit transversally (three non-collinear `v` values, `w` at one corner
/// and `w₂` at a second corner).
fn pinned_dofs(grid: Grid2) -> [usize; 6] {
    let n = grid.len();
    let (a, b, c) = (grid.idx(0, 0), grid.idx(grid.nx - 1, 0), grid.idx(0, grid.ny - 1));
    [2 * n + a, 2 * n + b, 2 * n + c, a, n + a, n + b]
}

/// Damped Newton on the gauge slice. The shift grows geometrically while
/// the pinned Hessian fails to factor.
fn newton(energy: &PlateEnergy, gauge: &Gauge, x: &mut Vec<f64>, cfg: &SolverConfig, scale: f64) -> NewtonOutcome {
    let dim = x.len();
    let pinned = pinned_dofs(energy.grid());
    let mut is_pinned = vec![false; dim];
    pinned.iter().for_each(|&p| is_pinned[p] = true);
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * scale;
    let mut grad = vec![0.0; dim];
    let mut fx = energy.energy_and_gradient(x, &mut grad).total();
    let mut gn = norm(&grad);
    let mut trial_grad = vec![0.0; dim];
    let m = energy.material();
    let tol = |x: &[f64]| cfg.grad_tol.max(gradient_floor(x, m, energy.grid()));
    let mut out = NewtonOutcome { iterations: 0, grad_norm: gn, converged: gn <= tol(x), failed: false };
    while !out.converged && out.iterations < cfg.newton_iters {
        let mut h = energy.hessian_lower(x);
        h.entries.retain(|t| !is_pinned[t.row] && !is_pinned[t.col]);
        let max_diag = h.entries.iter().filter(|t| t.row == t.col).fold(0.0f64, |m, t| m.max(t.val.abs()));
        let rhs: Vec<f64> = grad.iter().zip(&is_pinned).map(|(g, &p)| if p { 0.0 } else { -g }).collect();
        let base = h.entries.len();
        let mut step = None;
        let mut shift = 0.0;
        while shift <= max_diag {
            h.entries.truncate(base);
            for (k, &p) in is_pinned.iter().enumerate() {
                h.push(k, k, if p { 1.0 } else { shift });
            }
            if let Ok(s) = crate::sparse::cholesky_solve(&h, &rhs) {
                step = Some(s);
                break;
            }
            shift = if shift == 0.0 { 1e-10 * max_diag } else { shift * 100.0 };
        }
        let Some(step) = step else {
            out.failed = true;
            break;
        };
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            gauge.apply(&mut trial);
            let f_new = energy.energy_and_gradient(&trial, &mut trial_grad).total();
            let g_new = norm(&trial_grad);
            let decrease = f_new <= fx + cfg.armijo * t * slope;
            // below the rounding floor of the energy, a smaller gradient decides
            let flat = f_new <= fx + 64.0 * f64::EPSILON * fx.abs() && g_new < gn;
            if f_new.is_finite() && (decrease || flat) {
                accepted = Some((trial, f_new, g_new));
                break;
            }
            t *= cfg.backtrack;
        }
        let Some((trial, f_new, g_new)) = accepted else {
            out.failed = true;
            break;
        };
        *x = trial;
        std::mem::swap(&mut grad, &mut trial_grad);
        fx = f_new.min(fx);
        gn = g_new;
        out.iterations += 1;
        out.grad_norm = gn;
        out.converged = gn <= tol(x);
    }
    out
}

/// Smooth random start: `w = 0`, `v` a random cosine series of low
/// frequency scaled to the requested amplitude.
pub fn random_smooth_state(grid: Grid2, amplitude: f64, rng: &mut impl Rng) -> Displacement2D {
    const MODES: usize = 3;
    let mut c = [[0.0; MODES + 1]; MODES + 1];
    for (p, row) in c.iter_mut().enumerate() {
        for (q, c) in row.iter_mut().enumerate() {
            *c = rng.random_range(-1.0..1.0) / (1 + p + q) as f64;
        }
    }
    let v = ScalarField2::from_fn(grid, |pt| {
        let s = (pt.x - grid.origin.x) / grid.lx * std::f64::consts::PI;
        let t = (pt.y - grid.origin.y) / grid.ly * std::f64::consts::PI;
        let mut acc = 0.0;
        for (p, row) in c.iter().enumerate() {
            for (q, c) in row.iter().enumerate() {
                acc += c * (p as f64 * s).cos() * (q as f64 * t).cos();
            }
        }
        acc
    });
    let peak = v.max_abs().max(f64::MIN_POSITIVE);
    Displacement2D { w: Field2::filled(grid, Vector2::zeros()), v: v.map(|x| x * amplitude / peak) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartReport {
    pub best: SolveReport,
    /// Index of the winning start; start 0 is the zero state.
    pub best_index: usize,
    pub energies: Vec<f64>,
    /// `(max − min) / max(|min|, tiny)` over all starts.
    pub spread: f64,
}

impl fmt::Display for MultistartReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.best)?;
        writeln!(f, "starts: {}", self.energies.len())?;
        writeln!(f, "best_start: {}", self.best_index)?;
        writeln!(f, "spread: {:e}", self.spread)
    }
}

/// Minimizes from the zero state and `n_starts` random smooth states, in
/// parallel, and keeps the lowest energy (earliest start on ties).
pub fn multistart(
    g: &GrowthField,
    m: &Material,
    cfg: &SolverConfig,
    n_starts: usize,
) -> Result<(Displacement2D, MultistartReport)> {
    let grid = g.grid();
    let amplitude = cfg.init_amplitude * grid.lx.min(grid.ly);
    let inits: Vec<Displacement2D> = (0..=n_starts)
        .map(|k| {
            if k == 0 {
                return Displacement2D::zeros(grid);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            random_smooth_state(grid, amplitude, &mut rng)
        })
        .collect();
    let results: Vec<(Displacement2D, SolveReport)> =
        inits.par_iter().map(|d| minimize(d, g, m, cfg)).collect::<Result<_>>()?;
    let energies: Vec<f64> = results.iter().map(|(_, r)| r.energy.total()).collect();
    let best_index = (0..energies.len())
        .min_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)))
        .expect("at least one start");
    let lo = energies[best_index];
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo.abs().max(f64::MIN_POSITIVE);
    let (state, best) = results.into_iter().nth(best_index).expect("index in range");
    Ok((state, MultistartReport { best, best_index, energies, spread }))
}

/// `(x − x̄) ↦ ω J (x − x̄)` as a field, for tests and callers building gauge
/// orbits.
pub fn infinitesimal_rotation(grid: Grid2, omega: f64) -> crate::fields::VectorField2 {
    let c = grid.centroid();
    let j = Matrix2::new(0.0, -omega, omega, 0.0);
    Field2::from_fn(grid, |p| j * (p - c))
}
