use std::process::Command;

fn sweep(args: &[&str]) -> (Option<i32>, Vec<Vec<String>>) {
    let out = Command::new(env!("CARGO_BIN_EXE_gdcert"))
        .arg("sweep")
        .args(args)
        .output()
        .unwrap();
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (out.status.code(), rows)
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn noiseless_rows_reproduce_classical_rate() {
    let (code, rows) = sweep(&["--m", "1,2", "--L", "10", "--alpha", "0.05,0.1,0.15", "--delta", "0", "--class", "sector"]);
    assert_eq!(code, Some(0));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let (m, l, a): (f64, f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap());
        let rho: f64 = r[6].parse().unwrap();
        assert!((rho - (1.0 - a * m).max(a * l - 1.0)).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn strongly_convex_window_is_tight() {
    // α over [1/L, 2/((1+δ)L + (1-δ)m)] for (m, L, δ) = (1, 10, 0.1)
    let hi = 2.0 / (1.1 * 10.0 + 0.9);
    let grid: Vec<String> = (0..8).map(|i| format!("{}", 0.1 + (hi - 0.1) * i as f64 / 7.0)).collect();
    let alphas = grid.join(",");
    let (code, rows) = sweep(&["--m", "1", "--L", "10", "--alpha", &alphas, "--delta", "0.1", "--class", "strongly-convex"]);
    assert_eq!(code, Some(0));
    for r in &rows {
        assert_eq!(r[5], "strongly-convex");
        assert!(r[10].parse::<f64>().unwrap().abs() <= 1e-9, "{r:?}");
    }
}

#[test]
fn interior_gap_is_positive() {
    let (code, rows) = sweep(&["--m", "1", "--L", "10", "--alpha", "0.13,0.15,0.16", "--delta", "0.1", "--class", "sector"]);
    assert_eq!(code, Some(0));
    for r in &rows {
        assert_eq!(r[5], "interior");
        let (rho, witnessed, gap) = (r[6].parse::<f64>().unwrap(), r[9].parse::<f64>().unwrap(), r[10].parse::<f64>().unwrap());
        let a: f64 = r[2].parse().unwrap();
        let lower = (1.0 - a * 0.9).max(1.1 * 10.0 * a - 1.0);
        assert!((witnessed - lower).abs() < 1e-12);
        assert!(gap > 0.0 && (rho - witnessed - gap).abs() < 1e-15);
    }
}

#[test]
fn config_file_and_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.conf");
    let out = dir.path().join("grid.csv");
    std::fs::write(
        &cfg,
        format!(
            "# example grid\nm = 1\nL = 10, 100\nalpha_frac = linspace(0.25, 1, 4)\ndelta = 0, 0.05\nclass = sector\noutput = {}\nseed = 9\n",
            out.display()
        ),
    )
    .unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_gdcert"))
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<Vec<String>> = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    assert_eq!(rows.len(), 16);
    let ls = col(&rows, 1);
    let ds = col(&rows, 3);
    assert!(ls[..8].iter().all(|&l| l == 10.0) && ls[8..].iter().all(|&l| l == 100.0));
    assert_eq!(ds[..4], [0.0, 0.05, 0.0, 0.05]);
    assert!(rows.iter().all(|r| r[11] == "9"));
    let first = std::fs::read(&out).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gdcert"))
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn bad_configs_exit_one() {
    let (code, _) = sweep(&["--m", "1", "--L", "10", "--delta", "0"]);
    assert_eq!(code, Some(1));
    let (code, _) = sweep(&["--m", "1", "--L", "10", "--alpha", "0.1", "--delta", "1.2"]);
    assert_eq!(code, Some(1));
    let (code, _) = sweep(&["--m", "1", "--L", "10", "--alpha", "0.1", "--delta", "0", "--output", "/nonexistent/dir/x.csv"]);
    assert_eq!(code, Some(1));
}
