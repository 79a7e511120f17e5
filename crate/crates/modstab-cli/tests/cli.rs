use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FOCUSING: &str =
    r#""linear_point": {"E": 0.3, "kappa": 0.2, "omega": -0.5, "zeta": 1.0, "U": 0.7}"#;
const DEFOCUSING: &str =
    r#""linear_point": {"E": 1.0, "kappa": 0.5, "omega": 3.0, "zeta": -1.0, "U": -0.4}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Run {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn cubic(&self, name: &str, rest: &str) -> PathBuf {
        self.config(
            name,
            &format!(r#"{{"potential": {{"name": "cubic"}}, {rest}}}"#),
        )
    }
}

fn modstab(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modstab"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn check_reports_three_concordant_d_values() {
    let r = Run::new();
    let o = modstab("check", &r.cubic("c.json", FOCUSING), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["omega_valid"], true);
    let d: Vec<f64> = v["D"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((d[0] - d[1]).abs() < 1e-6 * d[0].abs() && (d[0] - d[2]).abs() < 1e-6 * d[0].abs());
    assert!(v["roots"]["r_minus"].as_f64().unwrap() < v["roots"]["r_plus"].as_f64().unwrap());
    assert!(v["profile_period_rel_diff"].as_f64().unwrap() < 1e-8);
}

#[test]
fn negative_kappa_fails_validation() {
    let r = Run::new();
    let p = r.cubic(
        "j.json",
        r#""point": {"H": 0.6, "U": 0.7, "J": -1, "gamma_star": 0.9, "beta": 0.39, "zeta": 1.0}"#,
    );
    let o = modstab("check", &p, &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["reason"], "kappa>0 violated");
}

#[test]
fn configuration_errors_exit_2() {
    let r = Run::new();
    assert_eq!(
        code(&modstab(
            "check",
            &r.config("m.json", r#"{"potential": "#),
            &[]
        )),
        2
    );
    let unknown = r.cubic("u.json", &format!(r#"{FOCUSING}, "colour": "blue""#));
    assert_eq!(code(&modstab("verify", &unknown, &[])), 2);
    assert_eq!(
        code(&modstab(
            "check",
            Path::new("/nonexistent/config.json"),
            &[]
        )),
        2
    );
    let bare = Command::new(env!("CARGO_BIN_EXE_modstab"))
        .arg("check")
        .output()
        .unwrap();
    assert_eq!(code(&bare), 2);
    let bad_branch = modstab(
        "verify",
        &r.cubic("b.json", FOCUSING),
        &["--branch", "sideways"],
    );
    assert_eq!(code(&bad_branch), 2);
}

#[test]
fn zero_nonlinearity_is_degenerate() {
    let r = Run::new();
    let p = r.cubic(
        "z.json",
        r#""point": {"H": 4, "U": 0, "J": 4, "gamma_star": -0.5, "beta": 0, "zeta": 0}"#,
    );
    assert_eq!(code(&modstab("verify", &p, &[])), 3);
    let o = modstab("check", &p, &[]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["generic"], false);
}

#[test]
fn verify_is_concordant_at_both_signs() {
    let r = Run::new();
    for (seed, verdict) in [(FOCUSING, "unstable"), (DEFOCUSING, "stable")] {
        let o = modstab("verify", &r.cubic("v.json", seed), &[]);
        assert_eq!(code(&o), 0);
        let rep = &json(&o)["report"];
        assert_eq!(rep["verdict_normal_form"], verdict);
        assert_eq!(rep["verdict_whitham"], verdict);
        assert!(rep["max_mismatch"].as_f64().unwrap() < rep["mismatch_tol"].as_f64().unwrap());
    }
}

#[test]
fn forcing_an_inadmissible_branch_exits_3() {
    // Constrained cubic point where W_JJ changes sign; eliminating J divides by it.
    let r = Run::new();
    let p = r.cubic(
        "w.json",
        r#""point": {"H": 1.7363605619774627, "U": 0.0, "J": 0.2968972260780153, "gamma_star": 1.0, "beta": 0.8879821529664983, "zeta": 1.0}"#,
    );
    assert_eq!(code(&modstab("verify", &p, &[])), 0);
    assert_eq!(
        code(&modstab("verify", &p, &["--branch", "eliminate_h"])),
        0
    );
    let o = modstab("verify", &p, &["--branch", "eliminate_j"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("W_JJ"));
}

fn sweep_config(r: &Run) -> PathBuf {
    r.cubic(
        "s.json",
        r#""point": {"H": 0.6073, "U": 0.7, "J": 0.8, "gamma_star": 0.8961, "beta": 0.39086, "zeta": 1.0},
           "sweep": {"x": {"coord": "gamma_star", "min": -1.5, "max": 0.0, "count": 10},
                     "y": {"coord": "zeta", "min": -1.0, "max": 1.0, "count": 9}}"#,
    )
}

#[test]
fn sweep_writes_one_row_per_cell_in_raster_order() {
    let r = Run::new();
    let out = r.dir.path().join("map.csv");
    let o = modstab(
        "sweep",
        &sweep_config(&r),
        &["--out", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(
        rows[0].join(","),
        "coord1,coord2,omega_valid,generic,verdict,max_re_ratio,max_im_speed,mismatch"
    );
    assert_eq!(rows.len(), 1 + 90);
    for (i, row) in rows[1..].iter().enumerate() {
        let (x, y): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        assert!((x - (-1.5 + (i % 10) as f64 / 6.0)).abs() < 1e-12);
        assert!((y - (-1.0 + 0.25 * (i / 10) as f64)).abs() < 1e-12);
        if row[3] == "false" {
            assert_eq!(row[4], "");
        }
    }
    // The ζ = 0 row is valid but non-generic throughout.
    for row in rows[1..]
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == 0.0)
    {
        assert_eq!(row[3], "false", "{row:?}");
    }
    let verdicts: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r[4])
        .filter(|v| !v.is_empty())
        .collect();
    assert!(
        verdicts.contains(&"stable") && verdicts.contains(&"unstable"),
        "{verdicts:?}"
    );
    assert!(!verdicts.contains(&"discordant"));
    for row in rows[1..].iter().filter(|r| !r[4].is_empty()) {
        let y: f64 = row[1].parse().unwrap();
        assert_eq!(
            row[4],
            if y > 0.0 { "unstable" } else { "stable" },
            "{row:?}"
        );
    }
}

#[test]
fn outputs_are_deterministic_across_job_counts() {
    let r = Run::new();
    let cfg = sweep_config(&r);
    let one = modstab("sweep", &cfg, &["--jobs", "1"]);
    let many = modstab("sweep", &cfg, &["--jobs", "3"]);
    assert_eq!(one.stdout, many.stdout);
    let batch = r.cubic("b.json", r#""batch": {"count": 8}, "seed": 11"#);
    let a = modstab("verify", &batch, &[]);
    let b = modstab("verify", &batch, &["--jobs", "2"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["concordant"], 8);
}

#[test]
fn spectrum_lists_curves_slopes_and_normal_form() {
    let r = Run::new();
    let o = modstab("spectrum", &r.cubic("h.json", FOCUSING), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&o);
    assert_eq!(rows[0].join(","), "kind,mu,branch,re,im");
    let count = |kind: &str| rows.iter().filter(|r| r[0] == kind).count();
    assert_eq!(
        (count("eigenvalue"), count("slope"), count("normal_form")),
        (12, 4, 4)
    );
    let pick = |kind: &str| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r[0] == kind)
            .map(|r| (r[3].parse().unwrap(), r[4].parse().unwrap()))
            .collect()
    };
    let scale = pick("normal_form")
        .iter()
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    for (s, n) in pick("slope").iter().zip(pick("normal_form")) {
        assert!(
            (s.0 - n.0).hypot(s.1 - n.1) < 1e-3 * scale,
            "{s:?} vs {n:?}"
        );
    }
}

#[test]
fn spectrum_mu_list_is_checked() {
    let r = Run::new();
    let zero = r.cubic("z.json", &format!(r#"{FOCUSING}, "hill_mu_list": [0.0]"#));
    let o = modstab("spectrum", &zero, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&o);
    let eig: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "eigenvalue").collect();
    assert_eq!(eig.len(), 4);
    for row in eig {
        let (re, im): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        assert!(re.hypot(im) < 1e-3, "{row:?}");
    }
    let empty = r.cubic("e.json", &format!(r#"{FOCUSING}, "hill_mu_list": []"#));
    assert_eq!(code(&modstab("spectrum", &empty, &[])), 2);
    let large = r.cubic("l.json", &format!(r#"{FOCUSING}, "hill_mu_list": [0.5]"#));
    assert_eq!(code(&modstab("spectrum", &large, &[])), 2);
}
