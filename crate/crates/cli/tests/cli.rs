use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastoscatter"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str], scenario: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    for rec in r.records() {
        rows.push(rec.unwrap().iter().map(String::from).collect());
    }
    rows
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|h| h == name).unwrap();
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

fn summary(path: &Path, key: &str) -> f64 {
    let rows = read_csv(path);
    rows[1..].iter().find(|r| r[0] == key).unwrap()[1].parse().unwrap()
}

#[test]
fn validate_accepts_every_shipped_scenario() {
    let mut n = 0;
    for e in std::fs::read_dir(scenarios()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let o = bin().arg("validate").arg("--scenario").arg(&p).output().unwrap();
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn equal_materials_give_zero_p_and_q() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["symbol-check"], &scenarios().join("symbol_equal.toml"), out.path());
    assert!(o.status.success());
    let rows = read_csv(&out.path().join("symbol.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(column(&rows, "p")[0], "0.0");
    assert_eq!(column(&rows, "q")[0], "0.0");
    assert_eq!(column(&rows, "normal_type")[0], "true");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cases = [
        ("symbol-check", "symbol_sweep.toml", "symbol.csv"),
        ("probe", "probe_sphere.toml", "probe.csv"),
        ("solve-medium", "medium_radial.toml", "medium_farfield.csv"),
    ];
    for (cmd, sc, file) in cases {
        for d in [&a, &b] {
            let o = run(&[cmd], &scenarios().join(sc), d.path());
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
    // the sweep writes the scenario pair plus 200 sampled pairs
    assert_eq!(read_csv(&a.path().join("symbol.csv")).len(), 202);
}

#[test]
fn probe_reports_linear_growth() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["probe"], &scenarios().join("probe_sphere.toml"), out.path());
    assert!(o.status.success());
    let rows = read_csv(&out.path().join("probe.csv"));
    assert_eq!(rows[0], ["j", "distance", "norm2", "f_norm", "h_norm"]);
    assert_eq!(rows.len(), 33);
    let slope = summary(&out.path().join("probe_summary.csv"), "growth_slope");
    assert!((slope - 1.0).abs() < 0.2, "{slope}");
    assert_eq!(summary(&out.path().join("probe_summary.csv"), "d0_radius"), 0.4);
}

#[test]
fn itp_threshold_row() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["itp-threshold"], &scenarios().join("itp_ball.toml"), out.path());
    assert!(o.status.success());
    let rows = read_csv(&out.path().join("itp.csv"));
    assert_eq!(column(&rows, "regime")[0], "rho_star_gt_1");
    let l1: f64 = column(&rows, "lambda1")[0].parse().unwrap();
    let w2: f64 = column(&rows, "omega_max_squared")[0].parse().unwrap();
    assert!((w2 - l1 / 3.0).abs() < 1e-12);
}

#[test]
fn transmission_far_field_is_split() {
    let out = tempfile::tempdir().unwrap();
    let sc = out.path().join("coarse.toml");
    let text = std::fs::read_to_string(scenarios().join("transmission_sphere.toml"))
        .unwrap()
        .replace("order = 8", "order = 6");
    std::fs::write(&sc, text).unwrap();
    let o = run(&["solve-transmission", "--log-level", "info"], &sc, out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tangential defect"));
    let s = out.path().join("transmission_summary.csv");
    assert!(summary(&s, "farfield_radial_defect") < 1e-8);
    assert!(summary(&s, "farfield_tangential_defect") < 1e-8);
    assert!(summary(&s, "residual_displacement") < 1e-3);
    let ff = read_csv(&out.path().join("transmission_farfield.csv"));
    assert_eq!(ff.len(), 1 + 6 * 8);
    assert_eq!(read_csv(&out.path().join("transmission_field.csv")).len(), 3);
}

#[test]
fn single_level_convergence_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &["convergence", "--levels", "6"],
        &scenarios().join("convergence_transmission.toml"),
        out.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3"));
}

#[test]
fn medium_convergence_table() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &["convergence", "--levels", "4,8,16"],
        &scenarios().join("convergence_medium.toml"),
        out.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.path().join("convergence.csv"));
    assert_eq!(rows.len(), 4);
    let order: f64 = column(&rows, "observed_order")[2].parse().unwrap();
    assert!(order > 0.8, "{order}");
    assert!(column(&rows, "field_change")[0].is_empty());
}

#[test]
fn parse_errors_name_the_line_and_field() {
    let out = tempfile::tempdir().unwrap();
    let sc = out.path().join("bad.toml");
    std::fs::write(
        &sc,
        "[geometry]\nd = { kind = \"sphere\", radius = 1.0 }\n[materials]\ninterior = { lambda = 1.0, mu = 1.0 }\nexterior = { lambda = 1.0, muu = 1.0 }\nomega = 1.0\n",
    )
    .unwrap();
    let o = run(&["validate"], &sc, out.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("muu"), "{err}");
}

#[test]
fn referential_integrity_is_checked() {
    let out = tempfile::tempdir().unwrap();
    let sc = out.path().join("b.toml");
    std::fs::write(
        &sc,
        "[geometry]\nd = { kind = \"sphere\", radius = 1.0 }\nd_b = { kind = \"sphere\", center = [0.9, 0.0, 0.0], radius = 0.3 }\n[materials]\ninterior = { lambda = 1.0, mu = 1.0 }\nexterior = { lambda = 1.0, mu = 1.0 }\nomega = 1.0\n",
    )
    .unwrap();
    let o = run(&["validate"], &sc, out.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not contained"));

    std::fs::write(
        &sc,
        "[geometry]\nd = { kind = \"sphere\", radius = 1.0 }\n[materials]\ninterior = { lambda = 1.0, mu = 1.0 }\nexterior = { lambda = 1.0, mu = 1.0 }\nomega = 1.0\n[incidence]\nkind = \"grad_point_source\"\nsource = [0.2, 0.0, 0.0]\n",
    )
    .unwrap();
    let o = run(&["validate"], &sc, out.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inside geometry.d"));
}

#[test]
fn solver_errors_exit_nonzero() {
    // variable density cannot go through the transmission solver
    let out = tempfile::tempdir().unwrap();
    let o = run(&["solve-transmission"], &scenarios().join("medium_bump.toml"), out.path());
    assert_eq!(o.status.code(), Some(1));
    // missing section
    let o = run(&["probe"], &scenarios().join("symbol_equal.toml"), out.path());
    assert_eq!(o.status.code(), Some(1));
    // missing scenario flag
    let o = bin().arg("validate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
