use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergopath")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["price-asian", "--iters", "20000", "--seed", "42"];
    assert_eq!(stdout(&args), stdout(&args));
    let bns = ["--set", "model=bns", "price-asian", "--iters", "20000", "--seed", "42"];
    assert_eq!(stdout(&bns), stdout(&bns));
}

#[test]
fn thread_count_does_not_change_results() {
    let base = [
        "price-asian",
        "--iters",
        "10000",
        "--set",
        "replications=3",
        "--set",
        "maturities=0.5,1",
        "--set",
        "strikes=48:52:2",
    ];
    let one = stdout(&[&base[..], &["--threads", "1"]].concat());
    let four = stdout(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
    assert_eq!(rows(&one).len(), 6);
}

#[test]
fn seeds_change_results() {
    let a = stdout(&["price-asian", "--iters", "5000", "--seed", "1"]);
    let b = stdout(&["price-asian", "--iters", "5000", "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn price_rows_follow_the_grid() {
    let csv = stdout(&["price-asian", "--iters", "5000"]);
    assert_eq!(csv.lines().next().unwrap(), "model,maturity,strike,kind,estimate,std_error,n,seed,replications");
    let r = rows(&csv);
    assert_eq!(r.len(), 13);
    assert_eq!(r[0][2], "44");
    assert_eq!(r[12][2], "56");
    let timed = stdout(&["price-european", "--iters", "5000", "--timing", "--set", "strikes=50"]);
    assert!(timed.lines().next().unwrap().ends_with(",wall_seconds"));
    assert_eq!(rows(&timed).len(), 1);
}

#[test]
fn vol_surface_has_one_row_per_point() {
    let csv = stdout(&["vol-surface", "--iters", "20000"]);
    let r = rows(&csv);
    assert_eq!(r.len(), 13);
    assert!(r.iter().all(|row| row.last().unwrap() == "ok" || row.last().unwrap() == "band-violation"));

    let short = stdout(&["vol-surface", "--iters", "20000", "--set", "maturities=0.1"]);
    for row in rows(&short) {
        if row[6] == "ok" {
            let iv: f64 = row[5].parse().unwrap();
            assert!(iv > 0.0 && iv < 1.0);
        }
    }
}

#[test]
fn stationary_stats_checkpoints_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist.csv");
    let csv = stdout(&[
        "stationary-stats",
        "--iters",
        "50000",
        "--set",
        "histogram_bins=25",
        "--set",
        &format!("histogram_out={}", hist.display()),
    ]);
    // 10, 100, 1000, 10000 and 50000.
    assert_eq!(rows(&csv).len(), 5);
    let h = std::fs::read_to_string(&hist).unwrap();
    let masses: Vec<f64> = rows(&h).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(masses.len(), 27);
    // Each printed mass carries up to 5e-12 relative rounding.
    assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn output_file_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "model = heston\nstrikes = 50, 51\n# comment\niters = 3000\nseed = 5\n").unwrap();
    let out = dir.path().join("out.csv");
    let printed = stdout(&["--config", conf.to_str().unwrap(), "price-asian"]);
    stdout(&["--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "price-asian"]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), printed);
    assert_eq!(rows(&printed).len(), 2);
    // Flags override the file.
    let overridden = stdout(&["--config", conf.to_str().unwrap(), "--seed", "6", "price-asian"]);
    assert!(rows(&overridden).iter().all(|r| r[7] == "6"));
}

#[test]
fn check_schedule_reports_all_conditions() {
    let csv = stdout(&["check-schedule", "--set", "scan_to=10000"]);
    let names: std::collections::BTreeSet<String> = rows(&csv).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(names.into_iter().collect::<Vec<_>>(), vec!["invariance", "series", "weight_step"]);
}

#[test]
fn oracles_run() {
    let csv = stdout(&["oracle", "levy-moment"]);
    let r = &rows(&csv)[0];
    assert!(r[6].parse::<f64>().unwrap() < 1e-9 && r[7].parse::<f64>().unwrap() < 1e-9);
    let csv = stdout(&["oracle", "cir-asian", "--set", "oracle_paths=640", "--set", "strikes=50"]);
    assert_eq!(rows(&csv).len(), 1);
    let csv = stdout(&["oracle", "ou", "--iters", "10000"]);
    assert_eq!(rows(&csv).len(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--set", "bogus=1", "price-asian"]).status.code(), Some(2));
    assert_eq!(run(&["--set", "rho=2", "price-asian"]).status.code(), Some(2));
    assert_eq!(run(&["--set", "model=bns", "--set", "rho=0.5", "price-asian"]).status.code(), Some(2));
    assert_eq!(run(&["--iters", "0", "price-asian"]).status.code(), Some(2));
    assert_eq!(run(&["--config", "/nonexistent/run.conf", "price-asian"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "nope"]).status.code(), Some(2));
    let blown = run(&["--set", "k=1e308", "--set", "v_init=1", "price-asian", "--iters", "100"]);
    assert_eq!(blown.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&blown.stderr).contains("non-finite"));
}

#[test]
fn reference_heston_warns_but_runs() {
    let out = run(&["price-asian", "--iters", "1000", "--set", "strikes=50"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
