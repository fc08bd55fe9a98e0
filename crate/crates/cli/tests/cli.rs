use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sfwm_cli::parse_config;
use sfwm_cli::run::config_hash;
use sfwm_core::dispersion::{Fiber, FiberSpec};
use sfwm_core::spectral::{resonance_spacing, Topology};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sfwm(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfwm"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn ok(sub: &str, config: &str, out: &Path, extra: &[&str]) {
    let o = sfwm(sub, &configs().join(config), out, extra);
    assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
}

fn key_values(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn geom_reports_the_enhancement() {
    let dir = tempfile::tempdir().unwrap();
    ok("geom", "csi_comb.ini", dir.path(), &[]);
    let kv = key_values(&read(&dir.path().join("geom.txt")));
    let e: f64 = kv["E"].parse().unwrap();
    assert!((e - 160f64.sqrt()).abs() < 1e-9, "{e}");
    assert!(kv["E"].starts_with("1.2649"));
    let meta = read(&dir.path().join("geom.txt.meta"));
    assert!(meta.starts_with("subcommand=geom\nfile=geom.txt\n"));
}

#[test]
fn jsi_maxima_sit_on_the_resonance_lattice() {
    let dir = tempfile::tempdir().unwrap();
    ok("jsi", "csi_comb.ini", dir.path(), &[]);
    let csv = read(&dir.path().join("jsi.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega_s_rad_per_s,omega_i_rad_per_s,value"));
    let rows: Vec<[f64; 3]> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let n = (rows.len() as f64).sqrt() as usize;
    assert_eq!(n * n, rows.len());
    let at = |i: usize, j: usize| rows[i * n + j][2];
    let max = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let mut maxima = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let v = at(i, j);
            let neighbours = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
            if v > 0.01 * max && neighbours.iter().all(|&(a, b)| v > at(a, b)) {
                maxima.push((rows[i * n + j][0], rows[i * n + j][1]));
            }
        }
    }
    assert!(maxima.len() >= 4, "{} maxima", maxima.len());

    let meta = key_values(&read(&dir.path().join("jsi.csv.meta")));
    let step: f64 = meta["grid.step_rad_per_s"].parse().unwrap();
    let center_s: f64 = meta["center_s_rad_per_s"].parse().unwrap();
    let center_i: f64 = meta["center_i_rad_per_s"].parse().unwrap();
    let fiber = Fiber::tabulated(FiberSpec::new(0.68e-6, 0.5, 0.01, 0.07).unwrap()).unwrap();
    for (axis, center) in [(0, center_s), (1, center_i)] {
        let spacing = resonance_spacing(&fiber, Topology::Linear, center).unwrap();
        let mut values: Vec<f64> = maxima.iter().map(|m| if axis == 0 { m.0 } else { m.1 }).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert!(values.len() >= 2);
        for w in values.windows(2) {
            assert!((w[1] - w[0] - spacing).abs() <= step, "axis {axis}: {} vs {spacing}", w[1] - w[0]);
        }
    }
}

#[test]
fn flux_sweep_annotates_three_zones() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        "flux-sweep",
        "flux_sweep.ini",
        dir.path(),
        &["--override", "flux.sigma_I_list_rad_per_s=2e11,2e10,2e9"],
    );
    let zones = read(&dir.path().join("flux_sweep_zones.csv"));
    let labels: Vec<&str> = zones.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels, ["i", "ii", "iii"]);
    let csv = read(&dir.path().join("flux_sweep.csv"));
    let ratios: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!((ratios[0] - 1.0).abs() < 0.05, "{ratios:?}");
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");
    let meta = key_values(&read(&dir.path().join("flux_sweep.csv.meta")));
    let narrow: f64 = meta["zone_boundary_narrow_rad_per_s"].parse().unwrap();
    let broad: f64 = meta["zone_boundary_broad_rad_per_s"].parse().unwrap();
    assert!(2e9 < narrow && narrow < 2e10 && 2e10 < broad && broad < 2e11);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fast = ["--override", "grid.points=161", "--override", "temporal.cutoff=0.01"];
    for (dir, threads) in [(a.path(), "1"), (b.path(), "3")] {
        let mut args = fast.to_vec();
        args.extend(["--threads", threads]);
        ok("modes", "csi_comb.ini", dir, &args);
        ok("jti", "csi_comb.ini", dir, &args);
        ok("flux", "flux_sweep.ini", dir, &["--threads", threads]);
    }
    let names = [
        "modes.csv",
        "modes.csv.meta",
        "jti.csv",
        "jti.csv.meta",
        "jti_rotated.csv",
        "flux.txt",
        "flux.txt.meta",
    ];
    for name in names {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn sidecar_names_subcommand_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    ok("design", "cesium_design.ini", dir.path(), &[]);
    let meta = read(&dir.path().join("design.txt.meta"));
    let cfg = parse_config(&read(&configs().join("cesium_design.ini"))).unwrap();
    let kv = key_values(&meta);
    assert_eq!(kv["subcommand"], "design");
    assert_eq!(kv["config_sha256"], config_hash(&cfg.config));
    assert!(kv["tool"].starts_with("sfwm "));
    assert!(meta.contains("\n[defaults]\n") && meta.contains("fiber.cladding=linear"));
    let echoed = meta.split("\n[config]\n").nth(1).unwrap();
    assert_eq!(parse_config(echoed).unwrap().config, cfg.config);
    let report = key_values(&read(&dir.path().join("design.txt")));
    assert!(report["r2"].starts_with("9.92"), "{}", report["r2"]);
}

fn failure(sub: &str, config: &Path, extra: &[&str]) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let o = sfwm(sub, config, dir.path(), extra);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0, "no output on failure");
    let stderr = String::from_utf8(o.stderr).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    (o.status.code().unwrap(), lines[0].to_string())
}

#[test]
fn failures_exit_with_their_class() {
    let comb = configs().join("csi_comb.ini");
    let (code, line) = failure("jsi", &comb, &["--override", "fiber.air_fill_fraction=1.5"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error kind=config exit=2 subcommand=jsi message="), "{line}");
    assert!(line.contains("air_fill_fraction"));

    let (code, line) = failure("design", &comb, &[]);
    assert_eq!(code, 2, "{line}");

    let (code, line) = failure("flux", &comb, &["--override", "pump.peak_power_W=1e5"]);
    assert_eq!(code, 4, "{line}");
    assert!(line.contains("kind=infeasible") && line.contains("phasematch"), "{line}");

    let (code, line) = failure(
        "flux",
        &configs().join("flux_sweep.ini"),
        &["--override", "flux.rel_tol=1e-300", "--override", "flux.max_doublings=1"],
    );
    assert_eq!(code, 3, "{line}");
    assert!(line.contains("kind=numerical") && line.contains("relative change"), "{line}");

    let (code, line) = failure(
        "design",
        &configs().join("cesium_design.ini"),
        &["--override", "design.linewidth_rad_per_s=1e11"],
    );
    assert_eq!(code, 4, "{line}");

    let (code, _) = failure("jsi", Path::new("/nonexistent/config.ini"), &[]);
    assert_eq!(code, 1);
}
