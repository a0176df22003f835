use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use windtree::commands::replay_entry;
use windtree::config::RunConfig;
use windtree::error::CliError;
use windtree::formats::CatalogEntry;
use windtree_core::adic::AdicError;
use windtree_core::invariant::InvariantError;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_windtree"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let p = dir.join("run.toml");
        std::fs::write(&p, text).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.output().unwrap()
}

fn small_plot(mode: &str) -> String {
    let mut cfg = RunConfig::default();
    cfg.plot.x1 = 2.0;
    cfg.plot.y1 = 2.0;
    cfg.plot.resolution = 15.0;
    cfg.plot.mode = mode.into();
    cfg.to_text()
}

#[test]
fn config_round_trips() {
    let mut cfg = RunConfig::default();
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    cfg.plot.z = Some(0.25);
    cfg.search.sizes.push([1, 3]);
    cfg.record.block = "+-".into();
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
}

#[test]
fn bad_configs_are_config_errors() {
    for text in ["colour = 1", "[plot]\nmode = \"sepia\"", "[record]\nblock = \"x\"", "workers = 0"] {
        let e = RunConfig::parse(text).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}");
    }
}

#[test]
fn exit_codes_are_distinct_per_family() {
    let errs = [
        CliError::Config(String::new()),
        CliError::Io(std::io::Error::other("x")),
        CliError::Rauzy(windtree_core::rauzy::RauzyError::NotALoop),
        CliError::Adic(AdicError::Residual(1.0)),
        CliError::Invariant(InvariantError::SingularC),
        CliError::Billiard(windtree_core::billiard::BilliardError::BadVelocity),
        CliError::Certificate(String::new()),
    ];
    let mut codes: Vec<i32> = errs.iter().map(|e| e.exit_code()).collect();
    assert!(codes.iter().all(|&c| c > 0));
    codes.dedup();
    assert_eq!(codes.len(), errs.len());
    let complex = CliError::from(InvariantError::Adic(AdicError::ComplexStableSpace(vec![])));
    assert_eq!((complex.exit_code(), complex.family()), (5, "spectrum"));
}

#[test]
fn empty_search() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["search"], Some("[search]\nmax_len = 0"));
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("out/catalog.txt")).unwrap(), "");
}

#[test]
fn search_finds_the_golden_loop_and_entries_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["search"], Some("[search]\nmax_len = 4\nslopes = [[-1, 1, 1, 2]]"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cat = std::fs::read_to_string(dir.path().join("out/catalog.txt")).unwrap();
    let entries: Vec<CatalogEntry> = cat.lines().map(|l| CatalogEntry::parse(l).unwrap()).collect();
    let golden = entries.iter().find(|e| e.word == "bt").unwrap();
    assert!((golden.rho - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!(entries.iter().any(|e| e.record.is_some() && e.word.len() == 56));
    for e in &entries {
        let p = replay_entry(e).unwrap();
        assert!(p.rho.contains(e.rho) || (p.rho.mid() - e.rho).abs() < 1e-9 * e.rho);
        assert_eq!(CatalogEntry::parse(&e.to_line()).unwrap(), *e);
    }
}

#[test]
fn analyze_reports_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["analyze", "--seed", "3"], None);
    assert!(out.status.success());
    let r = String::from_utf8(out.stdout).unwrap();
    for key in ["eigenvalues = ", "psi[0] = ", "b = ", "C = ", "Lambda = ", "gamma_h unstable = true", "invariance failures = 0"] {
        assert!(r.contains(key), "{key}");
    }
    assert!(r.lines().any(|l| l.starts_with("witness = (")));
}

#[test]
fn plots_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_plot("level");
    assert!(run(dir.path(), &["plot"], Some(&text)).status.success());
    let a = std::fs::read(dir.path().join("out/plot.pgm")).unwrap();
    let meta = std::fs::read_to_string(dir.path().join("out/plot.txt")).unwrap();
    assert!(run(dir.path(), &["plot", "--workers", "3"], Some(&text)).status.success());
    assert_eq!(a, std::fs::read(dir.path().join("out/plot.pgm")).unwrap());
    assert!(a.starts_with(b"P5\n30 30 255\n"));
    assert_eq!(a.len(), "P5\n30 30 255\n".len() + 900);
    for key in ["depth = 30", "undetermined = ", "max_enclosure_width", "record = "] {
        assert!(meta.contains(key), "{key}");
    }
    assert!(run(dir.path(), &["plot"], Some(&small_plot("torus"))).status.success());
    let c = std::fs::read(dir.path().join("out/plot.ppm")).unwrap();
    assert!(c.starts_with(b"P6\n30 30 255\n"));
    let meta = std::fs::read_to_string(dir.path().join("out/plot.txt")).unwrap();
    assert!(meta.contains("max_enclosure_width") && meta.contains("undetermined = "));
}

#[test]
fn default_plot_is_400_square() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["plot"], None).status.success());
    let a = std::fs::read(dir.path().join("out/plot.pgm")).unwrap();
    assert!(a.starts_with(b"P5\n400 400 255\n"));
}

#[test]
fn hdim_report_and_cantor_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["hdim"], None);
    assert!(out.status.success());
    let r = String::from_utf8(out.stdout).unwrap();
    assert!(r.contains("F lambda^b / (1 - lambda) = ") && r.contains(": true"));
    let beta: f64 = r.lines().find_map(|l| l.strip_prefix("beta0 = ")).unwrap().parse().unwrap();
    assert!(beta < 1.0);
    let out = run(dir.path(), &["hdim"], Some("[hdim]\ncantor_fixture = true"));
    let r = String::from_utf8(out.stdout).unwrap();
    let d: f64 = r.lines().find_map(|l| l.strip_prefix("box dimension = ")).unwrap().parse().unwrap();
    assert!((d - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
    assert!(dir.path().join("out/cover.csv").exists());
}

#[test]
fn simulate_writes_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate"], None);
    assert!(out.status.success());
    let mut rd = csv::Reader::from_path(dir.path().join("out/trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10);
    for r in &rows {
        assert!((r[3].hypot(r[4]) - 1.0).abs() < 1e-15);
    }
    assert!((rows.last().unwrap()[0] - 100.0).abs() < 1e-9);
}

#[test]
fn errors_go_to_stderr_with_their_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate"], Some("[simulate]\nvelocity = [0.0, 0.0]"));
    assert_eq!(out.status.code(), Some(8));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error family=billiard code=8"));
    let out = run(dir.path(), &["plot"], Some("[plot]\nresolution = -1.0"));
    assert_eq!(out.status.code(), Some(2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_text_round_trip(seed in 0..i64::MAX as u64, depth in 1usize..60, tol in 1e-6f64..1.0, z in proptest::option::of(-10.0f64..10.0)) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.plot.depth = depth;
        cfg.plot.tol = tol;
        cfg.plot.z = z;
        prop_assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
