use std::fs;
use std::path::Path;
use std::process::Command;

use grownplate::fields::FieldTable;
use tempfile::TempDir;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run_bin(config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_grownplate"))
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn report_value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no '{key}' in report:\n{report}"))
}

#[test]
fn zero_growth_is_flat() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[domain]\nnx = 9\n");
    let (code, report) = run_bin(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(code, 0);
    assert_eq!(report_value(&report, "flat"), "true");
    assert!(dir.path().join("out/manifest.txt").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[domain]\nnx = 9\n[growth]\nkap_11 = \"sin(x\"\n");
    assert_eq!(run_bin(&cfg, &dir.path().join("out"), &[]).0, 2);
    let cfg = write_config(dir.path(), "[domain]\nnx = 9\n");
    assert_eq!(run_bin(&cfg, &dir.path().join("out"), &["--mode", "solve2"]).0, 2);
    assert_eq!(run_bin(&dir.path().join("missing.toml"), &dir.path().join("out"), &[]).0, 2);
}

#[test]
fn unconverged_solve_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[domain]\nnx = 17\n[growth]\nkap_11 = 1\nkap_22 = 1\n[solver]\nmax_iters = 1\nnewton_iters = 0\nstarts = 0\n[run]\nmode = \"solve2d\"\n",
    );
    let (code, report) = run_bin(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(code, 1, "{report}");
    assert_eq!(report_value(&report, "failed"), "true");
}

#[test]
fn compatible_solve_reaches_small_energy_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let growth = "[domain]\nnx = 17\n[growth]\ncompatible_w1 = \"0.1*x*y\"\ncompatible_v = \"0.3*x^2 - 0.2*y^3\"\n";
    let cfg = write_config(dir.path(), &format!("{growth}[run]\nmode = \"solve2d\"\n"));
    let out = dir.path().join("out");
    let (code, report) = run_bin(&cfg, &out, &[]);
    assert_eq!(code, 0, "{report}");
    let energy: f64 = report_value(&report, "energy_total").parse().unwrap();
    assert!(energy < 1e-10, "{energy}");

    let table = FieldTable::read(out.join("fields/state.csv")).unwrap();
    let v = table.get_scalar("v").unwrap();
    let w = table.get_vector("w").unwrap();
    assert_eq!((v.grid.nx, v.grid.ny), (17, 17));
    assert!(v.values.iter().chain(w.values.iter().flat_map(|p| p.iter())).all(|x| x.is_finite()));

    // the written state is accepted back as input
    let csv = out.join("fields/state.csv");
    let cfg2 = write_config(dir.path(), &format!("{growth}[state]\ncsv = \"{}\"\n[run]\nmode = \"airy\"\n", csv.display()));
    let (code, report) = run_bin(&cfg2, &dir.path().join("out2"), &[]);
    assert_eq!(code, 0, "{report}");
    let r1: f64 = report_value(&report, "r1_norm").parse().unwrap();
    assert!(r1 < 1e-6, "{report}");
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[domain]\nnx = 13\n[growth]\nkap_11 = 1\nkap_22 = \"0.5 + x\"\n[solver]\nstarts = 2\n[run]\nmode = \"solve2d\"\n");
    let read = |name: &str| {
        let out = dir.path().join(name);
        run_bin(&cfg, &out, &["--seed", "11"]);
        (fs::read_to_string(out.join("report.txt")).unwrap(), fs::read_to_string(out.join("fields/state.csv")).unwrap())
    };
    assert_eq!(read("a"), read("b"));
}
