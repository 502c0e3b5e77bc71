//! Mode dispatch. Each run writes `manifest.txt`, `report.txt` and CSV
//! files under `fields/` to the output directory; reports are `key: value`
//! lines and do not depend on timing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::airy::{boundary_residuals, div_m_norm, el_residuals, StressState};
use crate::energy2d::Displacement2D;
use crate::error::{Error, Result};
use crate::fields::FieldTable;
use crate::growth::scaling_probe;
use crate::plate3d::{gamma_limit_probe, minimize3d, recovery_sequence, Minimize3Config};
use crate::solver2d::multistart;

use super::config::{Mode, RunConfig};

/// Interior used for the equilibrium residual norms, as a fraction of the
/// side length; nodes nearer the boundary carry a grid-scale layer.
pub const RESIDUAL_INTERIOR_FRACTION: f64 = 0.125;

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    /// A module flagged a numerical failure.
    pub failed: bool,
}

/// Exit status: 0 success, 1 numerical failure, 2 configuration error.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if !o.failed => 0,
        Ok(_) => 1,
        Err(e) if is_config_error(e) => 2,
        Err(_) => 1,
    }
}

pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config { .. } | Error::Parse { .. } | Error::InvalidGrid(_) | Error::InvalidMaterial(_))
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.output.as_path();
    fs::create_dir_all(out.join("fields"))?;
    fs::write(out.join("manifest.txt"), manifest(cfg))?;
    let mut report = String::new();
    writeln!(report, "mode: {}", cfg.mode).expect("string write");
    let failed = match cfg.mode {
        Mode::Check => check(cfg, out, &mut report)?,
        Mode::Solve2d => state(cfg, out, &mut report, true)?.1,
        Mode::Airy => airy(cfg, out, &mut report)?,
        Mode::Verify3d => verify3d(cfg, out, &mut report)?,
        Mode::Sweep3d => sweep3d(cfg, out, &mut report)?,
        Mode::Scaling => {
            let s = &cfg.scaling;
            let p = scaling_probe(&cfg.growth, s.gamma, s.theta, &s.h_list, s.nz)?;
            write!(report, "{p}").expect("string write");
            !p.var_ah_samples.iter().all(|(_, v)| finite(*v))
        }
    };
    writeln!(report, "failed: {failed}").expect("string write");
    fs::write(out.join("report.txt"), &report)?;
    Ok(Outcome { report, failed })
}

fn manifest(cfg: &RunConfig) -> String {
    let m = &cfg.material;
    let g = &cfg.grid;
    let mut s = String::new();
    let _ = writeln!(s, "version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "mode: {}", cfg.mode);
    let _ = writeln!(s, "seed: {}", cfg.seed());
    let _ = writeln!(s, "grid: {}x{} on [{}, {}]x[{}, {}]", g.nx, g.ny, g.origin.x, g.origin.x + g.lx, g.origin.y, g.origin.y + g.ly);
    let _ = writeln!(s, "spacing: {:e} {:e}", g.hx(), g.hy());
    let _ = writeln!(s, "mu: {}", m.mu);
    let _ = writeln!(s, "lambda: {}", m.lambda);
    let _ = writeln!(s, "poisson_ratio: {:e}", m.nu());
    let _ = writeln!(s, "young_modulus: {:e}", m.young());
    let _ = writeln!(s, "bending_stiffness: {:e}", m.bending_stiffness());
    let _ = writeln!(s, "plate_lambda: {:e}", m.plate_lambda());
    let _ = writeln!(s, "config:");
    for line in cfg.source.lines() {
        let _ = writeln!(s, "  {line}");
    }
    s
}

fn check(cfg: &RunConfig, out: &Path, report: &mut String) -> Result<bool> {
    let g = &cfg.growth;
    // difference operators leave O(spacing²) residue on compatible data
    let tol = g.default_tolerance().max(10.0 * cfg.grid.spacing().powi(2) * g.scale());
    let c = g.curvature_conditions(tol);
    let f = g.flatness_test(tol);
    write!(report, "{c}{f}").expect("string write");
    let mut t = FieldTable::new(cfg.grid);
    t.matrix3("eps_g", &g.eps_g).matrix3("kap_g", &g.kap_g).scalar("lambda_g", &g.lambda_g()).scalar("co2", &g.co2_field());
    t.write(out.join("fields/growth.csv"))?;
    Ok(!(finite(c.co1_norm) && finite(c.co2_norm)))
}

/// The configured state, or a multistart minimizer. Writes
/// `fields/state.csv` and returns whether the solve was flagged.
fn state(cfg: &RunConfig, out: &Path, report: &mut String, force_solve: bool) -> Result<(Displacement2D, bool)> {
    let (d, failed) = match (&cfg.state, force_solve) {
        (Some(d), false) => (d.clone(), false),
        _ => {
            let (d, r) = multistart(&cfg.growth, &cfg.material, &cfg.solver, cfg.starts)?;
            write!(report, "{r}").expect("string write");
            (d, !r.best.ok())
        }
    };
    let mut t = FieldTable::new(cfg.grid);
    t.vector("w", &d.w).scalar("v", &d.v);
    t.write(out.join("fields/state.csv"))?;
    Ok((d, failed))
}

fn airy(cfg: &RunConfig, out: &Path, report: &mut String) -> Result<bool> {
    let (d, solve_failed) = state(cfg, out, report, false)?;
    let st = StressState::compute(&d, &cfg.growth, &cfg.material)?;
    let el = el_residuals(&d, &st.phi, &cfg.growth, &cfg.material)?;
    let bc = boundary_residuals(&d, &st.phi, &cfg.growth, &cfg.material)?;
    let r = report;
    let _ = writeln!(r, "airy_misfit: {:e}", st.fit.misfit);
    let _ = writeln!(r, "airy_relative_misfit: {:e}", st.fit.relative_misfit);
    let _ = writeln!(r, "airy_consistent: {}", st.fit.is_consistent());
    let _ = writeln!(r, "div_m_norm: {:e}", div_m_norm(&st.m));
    let _ = writeln!(r, "r1_norm: {:e}", el.r1_norm());
    let _ = writeln!(r, "r2_norm: {:e}", el.r2_norm());
    let _ = writeln!(r, "interior_fraction: {RESIDUAL_INTERIOR_FRACTION}");
    let _ = writeln!(r, "r1_norm_interior: {:e}", el.r1_norm_away(RESIDUAL_INTERIOR_FRACTION));
    let _ = writeln!(r, "r2_norm_interior: {:e}", el.r2_norm_away(RESIDUAL_INTERIOR_FRACTION));
    let _ = writeln!(r, "form_gap: {:e}", el.form_gap());
    let _ = write!(r, "{bc}");
    let mut t = FieldTable::new(cfg.grid);
    t.matrix("m", &st.m).scalar("phi", &st.phi).scalar("r1", &el.r1).scalar("r2", &el.r2);
    t.write(out.join("fields/stress.csv"))?;
    let numbers = [st.fit.misfit, el.r1_norm(), el.r2_norm(), bc.bc1(), bc.b1(), bc.b2()];
    Ok(solve_failed || !st.fit.is_consistent() || !numbers.iter().all(|v| finite(*v)))
}

fn verify3d(cfg: &RunConfig, out: &Path, report: &mut String) -> Result<bool> {
    let (d, solve_failed) = state(cfg, out, report, false)?;
    let s = &cfg.sweep;
    let p = gamma_limit_probe(&d, &cfg.growth, &cfg.material, &s.h_list, s.nz, s.sign, s.rule)?;
    write!(report, "{p}").expect("string write");
    p.write_csv(fs::File::create(out.join("fields/sweep.csv"))?)?;
    Ok(solve_failed || !p.monotone || !p.samples.iter().all(|x| finite(x.error)))
}

fn sweep3d(cfg: &RunConfig, out: &Path, report: &mut String) -> Result<bool> {
    let (d, solve_failed) = state(cfg, out, report, false)?;
    let s = &cfg.sweep;
    let mc = Minimize3Config { max_iters: s.max_iters, grad_tol: s.grad_tol, rule: s.rule, ..Default::default() };
    let mut w = csv::Writer::from_path(out.join("fields/sweep3d.csv"))?;
    w.write_record(["h", "initial_energy", "energy", "energy/h^4", "iterations", "converged"])?;
    let mut scaled = Vec::new();
    for &h in &s.h_list {
        let init = recovery_sequence(&d, &cfg.growth, &cfg.material, h, s.nz, s.sign)?;
        let (_, r) = minimize3d(&init, &cfg.growth, &cfg.material, &mc)?;
        let _ = writeln!(
            report,
            "h: {:e} scaled_energy: {:e} initial_scaled: {:e} iterations: {} converged: {}",
            h,
            r.scaled_energy(),
            r.initial_energy / h.powi(4),
            r.iterations,
            r.converged
        );
        w.write_record([
            format!("{h:e}"),
            format!("{:e}", r.initial_energy),
            format!("{:e}", r.energy),
            format!("{:e}", r.scaled_energy()),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])?;
        scaled.push(r.scaled_energy());
    }
    w.flush()?;
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let all_positive = scaled.iter().all(|v| *v > 0.0 && finite(*v));
    let _ = writeln!(report, "all_positive: {all_positive}");
    let _ = writeln!(report, "max_min_ratio: {:e}", hi / lo);
    let _ = writeln!(report, "within_factor_3: {}", all_positive && hi <= 3.0 * lo);
    Ok(solve_failed || !all_positive)
}
