use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jumpcopula::io::{parse_skew_report, SkewTable};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpcopula")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn table(o: &Output) -> SkewTable {
    assert_eq!(code(o), 0, "{}", stderr(o));
    parse_skew_report(&String::from_utf8_lossy(&o.stdout), "stdout").expect("report parses")
}

fn values(t: &SkewTable, col: &str) -> Vec<f64> {
    t.column(col).unwrap_or_else(|| panic!("no column {col}")).iter().map(|v| v.unwrap()).collect()
}

/// Compares a report, provenance comments aside, with a checked-in copy.
/// `UPDATE_GOLDEN=1` rewrites the copy.
fn golden(name: &str, o: &Output) {
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let got = String::from_utf8_lossy(&o.stdout);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, strip(&got) + "\n").unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(strip(&got), strip(&want), "report differs from {}", path.display());
}

#[test]
fn no_jumps_reprices_market_vols() {
    let bundle = fixture("dax_synthetic");
    let o = run(&[
        "price-single",
        "--bundle",
        bundle.to_str().unwrap(),
        "--asset",
        "A2",
        "--maturity",
        "1",
        "--no-jumps",
        "--digits",
        "12",
        "--min-moneyness",
        "0.5",
        "--max-moneyness",
        "1.5",
        "--points",
        "11",
        "--tolerance-vol-points",
        "1e-6",
    ]);
    let t = table(&o);
    for (model, market) in values(&t, "implied_vol").iter().zip(values(&t, "market_vol")) {
        assert!((model - market).abs() < 1e-8, "{model} vs {market}");
    }
}

#[test]
fn jump_skew_flattens_at_higher_diffusive_vol() {
    let bundle = fixture("dax_synthetic");
    let spread = |sigma: &str, golden_name: &str| {
        let o = run(&[
            "price-single",
            "--bundle",
            bundle.to_str().unwrap(),
            "--asset",
            "A1",
            "--maturity",
            "1",
            "--sigma",
            sigma,
            "--lambda",
            "0.25",
            "--k-hat",
            "-0.16",
            "--delta",
            "0.18",
            "--kappa",
            "0",
        ]);
        golden(golden_name, &o);
        let v = values(&table(&o), "implied_vol");
        v[0] - v[v.len() - 1]
    };
    let low = spread("0.15", "price_single_sigma15.csv");
    let high = spread("0.30", "price_single_sigma30.csv");
    assert!(low > 0.0 && high > 0.0);
    assert!(high < low, "spread {high} at 30% not below {low} at 15%");
}

#[test]
fn unknown_asset_is_a_validation_error() {
    let o = run(&["price-single", "--bundle", fixture("dax_synthetic").to_str().unwrap(), "--asset", "NOPE"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("NOPE"), "{}", stderr(&o));
}

#[test]
fn broken_bundle_is_a_validation_error() {
    let o = run(&["price-single", "--bundle", "/nonexistent/bundle", "--asset", "A1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn aggressive_jumps_are_a_numeric_failure() {
    let o = run(&[
        "calibrate-diffusive",
        "--bundle",
        fixture("steep_skew").to_str().unwrap(),
        "--asset",
        "STEEP",
        "--lambda",
        "3",
        "--k-hat",
        "-0.5",
        "--kappa",
        "0",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("nonpositive"));
}

#[test]
fn three_moment_basket_of_one_matches_single_pricing() {
    let bundle = fixture("steep_skew");
    let common = ["--bundle", bundle.to_str().unwrap(), "--sigma", "0.22", "--digits", "15"];
    let single = table(&run(&[&["price-single", "--asset", "STEEP"][..], &common].concat()));
    let basket = table(&run(&[&["price-basket", "--mode", "tm"][..], &common].concat()));
    for (a, b) in values(&single, "call").iter().zip(values(&basket, "price")) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn copula_jump_curve_is_steeper_than_baseline() {
    let o = run(&[
        "price-basket",
        "--bundle",
        fixture("dax_synthetic").to_str().unwrap(),
        "--maturity",
        "1",
        "--seed",
        "11",
        "--paths",
        "40000",
    ]);
    let t = table(&o);
    let jump = values(&t, "implied_vol");
    let base = values(&t, "baseline_implied_vol");
    let n = jump.len() - 1;
    assert!(jump[0] - jump[n] > base[0] - base[n], "jump {jump:?} baseline {base:?}");
    assert!(values(&t, "std_error").iter().all(|&se| se > 0.0));
}

#[test]
fn copula_mode_requires_a_seed() {
    let o = run(&["price-basket", "--bundle", fixture("dax_synthetic").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
}

#[test]
fn diffusive_calibration_on_generated_slice_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "calibrate-diffusive",
        "--bundle",
        fixture("dax_synthetic").to_str().unwrap(),
        "--asset",
        "A3",
        "--maturity",
        "2",
        "--tolerance-vol-points",
        "1e-5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["converged"], true);
    let last = v["report"]["max_mismatch_vol_points"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    // vol points to vol units
    assert!(last / 100.0 < 1e-6, "residual {last} vol points");
    assert_eq!(v["report"]["outcome"]["kind"], "diffusive_curve");
}

#[test]
fn non_convergence_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "calibrate-diffusive",
        "--bundle",
        fixture("steep_skew").to_str().unwrap(),
        "--asset",
        "STEEP",
        "--max-iterations",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["converged"], false);
}

fn write_high_correlation_bundle(dir: &Path) {
    let src = fixture("dax_synthetic");
    fs::create_dir_all(dir.join("surfaces")).unwrap();
    fs::copy(src.join("bundle.toml"), dir.join("bundle.toml")).unwrap();
    for f in fs::read_dir(src.join("surfaces")).unwrap() {
        let f = f.unwrap();
        fs::copy(f.path(), dir.join("surfaces").join(f.file_name())).unwrap();
    }
    let ids = ["A1", "A2", "A3", "A4", "A5"];
    let mut text = format!("id,{}\n", ids.join(","));
    for (i, id) in ids.iter().enumerate() {
        let row: Vec<&str> = (0..5).map(|j| if i == j { "1" } else { "0.99" }).collect();
        text.push_str(&format!("{id},{}\n", row.join(",")));
    }
    fs::write(dir.join("correlation.csv"), text).unwrap();
}

#[test]
fn unreachable_correlation_reports_feasible_range() {
    let dir = tempfile::tempdir().unwrap();
    write_high_correlation_bundle(dir.path());
    let o = run(&[
        "calibrate-tuple",
        "--bundle",
        dir.path().to_str().unwrap(),
        "--maturity",
        "1",
        "--seed",
        "1",
        "--lambda-range",
        "100,200",
        "--k-hat-range=-0.4,-0.3",
        "--kappa-range",
        "1,1",
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("feasible lambda range"), "{}", stderr(&o));
}

#[test]
fn correlation_report_starts_at_total_correlation() {
    let o = run(&["report-correlation", "--bundle", fixture("dax_synthetic").to_str().unwrap(), "--lambdas", "0,0.25"]);
    let t = table(&o);
    assert_eq!(t.key, "lambda");
    assert_eq!(t.column("A1:A2").unwrap()[0], Some(0.5));
    assert_eq!(t.column("A1:A4").unwrap()[0], Some(0.6));
    let rho = t.column("A1:A2").unwrap()[1].unwrap();
    assert!(rho < 0.5, "diffusive correlation {rho} should drop below the total one");
}

#[test]
fn help_lists_defaults() {
    let o = run(&["price-basket", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for d in ["[default: 100000]", "[default: copula]", "[default: 0.8]", "[default: 20]", "[default: 0.05]"] {
        assert!(text.contains(d), "missing {d} in\n{text}");
    }
}
