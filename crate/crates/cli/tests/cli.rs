use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Datelike, NaiveDate};
use dfdr_core::bootstrap::PValueSet;
use dfdr_core::mht::{dfdr_procedure, LambdaGrid};

const SMALL_GRID: &str = r#"
[filter]
thresholds = [0.005, 0.01, 0.02]
[moving_average]
fast = [1, 5]
slow = [10, 20, 50]
[rsi]
lookbacks = [14]
overbought = [70.0]
oversold = [30.0]
"#;

fn dfdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfdr"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    /// Three years of a drifting random walk with a flat 2% bill rate.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let dates: Vec<NaiveDate> = NaiveDate::from_ymd_opt(2010, 1, 1)
            .unwrap()
            .iter_days()
            .filter(|d| d.weekday().number_from_monday() <= 5)
            .take(800)
            .collect();
        // xorshift keeps the fixture free of extra dependencies
        let mut s: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut p = 100.0f64;
        let mut prices = String::from("date,close\n");
        let mut rf = String::from("date,annual_rate\n");
        let mut stress = String::from("date,stress\n");
        for (i, d) in dates.iter().enumerate() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let u = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            p *= (0.0004 + 0.02 * u).exp();
            prices.push_str(&format!("{d},{p:.6}\n"));
            rf.push_str(&format!("{d},0.02\n"));
            let level = if (i / 60) % 2 == 0 { 0.5 } else { -0.5 };
            stress.push_str(&format!("{d},{level}\n"));
        }
        fs::write(dir.path().join("world.csv"), prices).unwrap();
        fs::write(dir.path().join("rf.csv"), rf).unwrap();
        fs::write(dir.path().join("stress.csv"), stress).unwrap();
        fs::write(dir.path().join("grid.toml"), SMALL_GRID).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn data_args(&self) -> Vec<String> {
        vec![
            "--prices".into(),
            self.path("world.csv"),
            "--risk-free".into(),
            self.path("rf.csv"),
            "--universe".into(),
            self.path("grid.toml"),
        ]
    }
}

fn run_with(fx: &Fixture, cmd: &str, out: &str, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![cmd.into(), "--out".into(), out.into()];
    if cmd != "montecarlo" && cmd != "rules" {
        args.extend(fx.data_args());
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    dfdr(&refs)
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    files.sort();
    files
}

const ROLL: &[&str] = &["--is-months", "6", "--replications", "40", "--seed", "7"];

#[test]
fn outputs_do_not_depend_on_threads() {
    let fx = Fixture::new();
    let out = fx.path("det");
    for (cmd, extra) in [
        ("montecarlo", &["--rules", "300", "--reps", "3", "--replications", "40", "--seed", "7"][..]),
        ("rolling", ROLL),
    ] {
        let mut snaps = Vec::new();
        for threads in ["1", "8", "8"] {
            let mut args = extra.to_vec();
            args.extend(["--threads", threads]);
            ok(&run_with(&fx, cmd, &out, &args));
            snaps.push(snapshot(Path::new(&out)));
        }
        assert!(snaps[0].iter().any(|(p, _)| p.ends_with("manifest.json")));
        assert_eq!(snaps[0], snaps[1], "{cmd}: 1 vs 8 threads");
        assert_eq!(snaps[1], snaps[2], "{cmd}: rerun");
        fs::remove_dir_all(&out).unwrap();
    }
}

#[test]
fn missing_file_names_path() {
    let fx = Fixture::new();
    let missing = fx.path("nope/prices.csv");
    let o = dfdr(&["backtest", "--out", &fx.path("o"), "--prices", &missing]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(&missing));
}

#[test]
fn bad_config_names_key() {
    let fx = Fixture::new();
    let cfg = fx.path("bad.toml");
    fs::write(&cfg, "[cost]\ntc_bp = 10\n").unwrap();
    let o = dfdr(&["rules", "--config", &cfg, "--out", &fx.path("o")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("tc_bp"));

    fs::write(&cfg, "[select]\ntarget = 2.0\n").unwrap();
    let o = dfdr(&["rules", "--config", &cfg, "--out", &fx.path("o")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("select.target"));

    let o = dfdr(&["rules", "--no-such-flag"]);
    assert!(!o.status.success());
}

#[test]
fn failed_run_stays_marked_incomplete() {
    let fx = Fixture::new();
    let out = fx.path("fail");
    // stress without an index file fails after the directory exists
    let o = run_with(&fx, "stress", &out, ROLL);
    assert!(!o.status.success());
    assert!(Path::new(&out).join(".incomplete").exists());
    assert!(!Path::new(&out).join("manifest.json").exists());
}

#[test]
fn select_matches_library_call() {
    let fx = Fixture::new();
    let b = 20usize;
    let mut csv = String::from("id,phi,sign,p\n");
    let mut ranks = Vec::new();
    let mut signs = Vec::new();
    for j in 0..40usize {
        let k = if j < 8 { 1 } else { 1 + (j * 7) % b };
        let sign: i8 = if j % 3 == 0 && j >= 8 { -1 } else { 1 };
        ranks.push(k);
        signs.push(sign);
        csv.push_str(&format!("{j},{},{sign},{}\n", f64::from(sign) * 0.1, k as f64 / b as f64));
    }
    let pv = fx.path("fixture.csv");
    fs::write(&pv, csv).unwrap();
    let out = fx.path("sel");
    let stdout = ok(&dfdr(&[
        "select", "--out", &out, "--pvalues", &pv, "--replications", "20", "--method", "dfdr", "--target", "0.1",
    ]));

    let p = PValueSet::from_ranks(b, ranks, signs, vec![0.0; 40]).unwrap();
    let grid = LambdaGrid::equal_width(0.05, b).unwrap();
    let (rb, sel) = dfdr_procedure(&p, &grid, 0.1).unwrap();
    let want = format!(
        "lambda_star={} pi0={} gamma_star={} R_plus={}",
        rb.lambda_star,
        sel.pi0,
        sel.gamma_star.map_or("NA".into(), |g| g.to_string()),
        sel.discoveries
    );
    assert!(stdout.contains(&want), "{stdout}\nwant {want}");

    let text = fs::read_to_string(Path::new(&out).join("selection_fixture.csv")).unwrap();
    let selected: Vec<usize> = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(selected, sel.selected);
    assert!(!selected.is_empty());
}

#[test]
fn every_subcommand_completes() {
    let fx = Fixture::new();
    let stress = fx.path("stress.csv");
    let grid = fx.path("grid.toml");
    let cases: Vec<(&str, Vec<&str>, &[&str])> = vec![
        ("rules", vec!["--universe", grid.as_str()], &["rules.csv"]),
        ("backtest", vec![], &["backtest.csv"]),
        ("pvalues", vec!["--replications", "50"], &["pvalues_world.csv", "support_world.csv"]),
        ("select", vec!["--replications", "50", "--method", "rw"], &["selection_world.csv", "summary.csv"]),
        ("select", vec!["--replications", "50", "--method", "storey"], &["selection_world.csv", "summary.csv"]),
        ("rolling", ROLL.to_vec(), &["rolling.csv", "windows.csv"]),
        ("persistence", ROLL.to_vec(), &["persistence.csv", "persistence_windows.csv"]),
        ("crossval", ROLL.to_vec(), &["crossval.csv", "crossval_windows.csv"]),
        ("breakeven", ROLL.to_vec(), &["breakeven.csv", "breakeven_windows.csv"]),
        ("stress", [ROLL, &["--stress", stress.as_str()]].concat(), &["stress.csv", "stress_windows.csv"]),
    ];
    for (i, (cmd, extra, files)) in cases.into_iter().enumerate() {
        let out = fx.path(&format!("run{i}"));
        ok(&run_with(&fx, cmd, &out, &extra));
        let dir = Path::new(&out);
        assert!(!dir.join(".incomplete").exists(), "{cmd}");
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], cmd);
        for f in files {
            assert!(dir.join(f).exists(), "{cmd}: {f}");
            let listed = manifest["outputs"].as_array().unwrap().iter().any(|o| o["path"] == *f);
            assert!(listed, "{cmd}: {f} missing from manifest");
        }
        if cmd != "rules" {
            assert!(!manifest["inputs"].as_array().unwrap().is_empty(), "{cmd}");
        }
    }
}

#[test]
fn numeric_flags_round_trip_into_manifest() {
    let fx = Fixture::new();
    let out = fx.path("rt");
    ok(&run_with(
        &fx,
        "backtest",
        &out,
        &["--tc-bps", "12.345678901234567", "--seed", "18446744073709551615"],
    ));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&out).join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["cost"]["tc_bps"].as_f64().unwrap(), 12.345678901234567);
    assert_eq!(m["seed"].as_u64().unwrap(), u64::MAX);
}

#[test]
fn print_grid_emits_schema() {
    let o = dfdr(&["rules", "--print-grid"]);
    let text = ok(&o);
    assert!(text.contains("[moving_average]"));
}
