use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qbg_core::io::{self as qio, MatrixFile};
use serde_json::Value;

fn qbg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbg"))
        .args(args)
        .current_dir(cwd)
        .env_remove("QBG_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_matrix(dir: &Path, name: &str, re: Vec<Vec<f64>>, im: Vec<Vec<f64>>) -> PathBuf {
    let path = dir.join(name);
    let file = MatrixFile {
        dim: re.len(),
        re,
        im,
    };
    fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    path
}

fn zeros(d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]; d]
}

fn diag(values: &[f64]) -> Vec<Vec<f64>> {
    let mut m = zeros(values.len());
    for (k, v) in values.iter().enumerate() {
        m[k][k] = *v;
    }
    m
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn decompose_maximally_mixed() {
    let dir = tempfile::tempdir().unwrap();
    let third = 1.0 / 3.0;
    let input = write_matrix(
        dir.path(),
        "mm.json",
        diag(&[third, third, third]),
        zeros(3),
    );
    let o = qbg(
        &["decompose", input.to_str().unwrap(), "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("r.json"));
    for key in ["s_d", "s_x", "s_i", "s_r"] {
        assert!(r["coordinates"][key].as_f64().unwrap().abs() < 1e-12);
    }
    assert_eq!(r["verdict"]["all_satisfied"], Value::Bool(true));
}

#[test]
fn decompose_qubit_imaginary_state_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_matrix(
        dir.path(),
        "y.json",
        diag(&[0.5, 0.5]),
        vec![vec![0.0, -0.5], vec![0.5, 0.0]],
    );
    let o = qbg(&["decompose", input.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["i_im"][0][1].as_f64(), Some(-1.0));
    assert_eq!(r["i_im"][1][0].as_f64(), Some(1.0));
    assert!((r["coordinates"]["s_i"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn decompose_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_matrix(dir.path(), "bad.json", diag(&[1.2, -0.2]), zeros(2));
    let o = qbg(&["decompose", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("NotPositive"), "{err}");
    assert_eq!(err.lines().count(), 1);

    let o = qbg(&["decompose", "missing.json"], dir.path());
    assert_eq!(code(&o), 1);

    fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(code(&qbg(&["decompose", "junk.json"], dir.path())), 1);

    // loose tolerance admits the slightly negative state
    let near = write_matrix(
        dir.path(),
        "near.json",
        diag(&[1.0 + 1e-6, -1e-6]),
        zeros(2),
    );
    let path = near.to_str().unwrap();
    assert_eq!(code(&qbg(&["decompose", path], dir.path())), 2);
    assert_eq!(
        code(&qbg(&["decompose", path, "--psd-tol", "1e-5"], dir.path())),
        0
    );
}

fn regions(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect()
}

#[test]
fn boundary_regions_by_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbg(
        &["boundary", "--dim", "5", "--n", "1000", "--out", "b5.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("b5.csv")).unwrap();
    assert!(csv.starts_with("s_r,s_i_max,region\n"));
    let tags = regions(&csv);
    assert_eq!(tags.len(), 1000);
    for r in ["LINEAR", "QUADRATIC", "PURITY"] {
        assert!(tags.iter().any(|t| t == r), "missing {r}");
    }
    let lm = read_json(&dir.path().join("b5.landmarks.json"));
    assert_eq!(lm["odd_tangent"][0].as_f64(), Some(0.5));

    qbg(
        &["boundary", "--dim", "4", "--n", "1000", "--out", "b4.csv"],
        dir.path(),
    );
    let csv = fs::read_to_string(dir.path().join("b4.csv")).unwrap();
    assert!(!regions(&csv).iter().any(|t| t == "LINEAR"));
}

#[test]
fn boundary_d101_linear_strip() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbg(
        &["boundary", "--dim", "101", "--n", "10000", "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let curve =
        qio::read_boundary_csv(fs::File::open(dir.path().join("b.csv")).unwrap(), 101).unwrap();
    let linear: Vec<f64> = curve
        .samples
        .iter()
        .filter(|s| s.region == qbg_core::Region::Linear)
        .map(|s| s.s_r)
        .collect();
    assert_eq!(linear[0], 0.0);
    let last = *linear.last().unwrap();
    let step = 10.0 / 9999.0;
    assert!(last <= 0.1 && last > 0.1 - step);
}

#[test]
fn boundary_formats_and_empirical_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbg(
        &[
            "boundary", "--dim", "3", "--n", "50", "--format", "svg", "--out", "b.svg",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(dir.path().join("b.svg"))
        .unwrap()
        .contains("<polyline"));

    let o = qbg(
        &[
            "boundary",
            "--dim",
            "3",
            "--n",
            "50",
            "--out",
            "b.json",
            "--format",
            "json",
            "--empirical-out",
            "emp.csv",
            "--bins",
            "10",
            "--samples",
            "2000",
            "--seed",
            "4",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        read_json(&dir.path().join("b.json"))["samples"]
            .as_array()
            .unwrap()
            .len(),
        50
    );
    let emp = qio::read_empirical_csv(fs::File::open(dir.path().join("emp.csv")).unwrap()).unwrap();
    assert!(!emp.is_empty() && emp.len() <= 10);
    for (s_r, s_i) in emp {
        assert!(s_i <= qbg_core::max_imaginary(s_r.min(2f64.sqrt()), 3).unwrap() + 0.2);
    }
}

#[test]
fn boundary_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qbg(&["boundary", "--dim", "5"], dir.path())), 1);
    assert_eq!(
        code(&qbg(
            &["boundary", "--dim", "1", "--out", "x.csv"],
            dir.path()
        )),
        1
    );
    assert_eq!(
        code(&qbg(
            &["boundary", "--dim", "3", "--n", "1", "--out", "x.csv"],
            dir.path()
        )),
        1
    );
    assert_eq!(
        code(&qbg(
            &["boundary", "--dim", "3", "--out", "/no/such/dir/x.csv"],
            dir.path()
        )),
        1
    );
}

#[test]
fn cloud_is_deterministic_and_pure_when_haar() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "cloud",
        "--dim",
        "3",
        "--n",
        "1000",
        "--measure",
        "HS_MIXED",
        "--seed",
        "7",
        "--out",
    ];
    let run = |name: &str| {
        let mut a = args.to_vec();
        a.push(name);
        assert_eq!(code(&qbg(&a, dir.path())), 0);
        fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));

    let o = qbg(
        &[
            "cloud",
            "--dim",
            "2",
            "--n",
            "500",
            "--measure",
            "HAAR_PURE",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let rows = qio::read_cloud_csv(&o.stdout[..], 2).unwrap();
    assert_eq!(rows.len(), 500);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row.record.idx, k as u64);
        assert!((row.record.purity - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn cloud_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let with_env = Command::new(env!("CARGO_BIN_EXE_qbg"))
        .args(["cloud", "--dim", "3", "--n", "20"])
        .env("QBG_SEED", "11")
        .output()
        .unwrap();
    let with_flag = qbg(
        &["cloud", "--dim", "3", "--n", "20", "--seed", "11"],
        dir.path(),
    );
    let default = qbg(&["cloud", "--dim", "3", "--n", "20"], dir.path());
    assert_eq!(with_env.stdout, with_flag.stdout);
    assert_ne!(with_env.stdout, default.stdout);
}

#[test]
fn cloud_json_and_robustness_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbg(
        &[
            "cloud",
            "--dim",
            "4",
            "--n",
            "30",
            "--robustness",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 30);
    let r = rows[0]["robustness"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&r));
    assert!(rows[0]["full_imaginarity"].is_boolean());

    let o = qbg(
        &["cloud", "--dim", "4", "--n", "30", "--robustness"],
        dir.path(),
    );
    let rows = qio::read_cloud_csv(&o.stdout[..], 4).unwrap();
    assert!(rows.iter().all(|r| r.robustness.is_some()));

    assert_eq!(
        code(&qbg(
            &["cloud", "--dim", "4", "--n", "3", "--format", "svg"],
            dir.path()
        )),
        1
    );
    assert_eq!(
        code(&qbg(&["cloud", "--dim", "1", "--n", "3"], dir.path())),
        1
    );
    assert_eq!(
        code(&qbg(
            &["cloud", "--dim", "3", "--n", "3", "--measure", "GAUSS"],
            dir.path()
        )),
        1
    );
}

#[test]
fn verify_small_run_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "99"] {
        let o = qbg(
            &[
                "verify",
                "--dims",
                "2..4",
                "--samples",
                "200",
                "--seed",
                seed,
                "--out",
                "v.json",
                "--format",
                "json",
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        let table = String::from_utf8_lossy(&o.stdout);
        assert!(table.contains("PASS") && !table.contains("FAIL"));
        let results = read_json(&dir.path().join("v.json"));
        assert!(results
            .as_array()
            .unwrap()
            .iter()
            .all(|r| r["passed"] == Value::Bool(true)));
    }
    assert_eq!(
        code(&qbg(
            &["verify", "--dims", "1,2,3", "--samples", "10"],
            dir.path()
        )),
        1
    );
    assert_eq!(
        code(&qbg(
            &["verify", "--dims", "3", "--samples", "0"],
            dir.path()
        )),
        1
    );
}

fn extremal(dir: &Path, spec: &str) -> (i32, Option<Value>) {
    fs::write(dir.join("spec.json"), spec).unwrap();
    let o = qbg(&["extremal", "spec.json", "--out", "state.json"], dir);
    let report = dir.join("state.report.json");
    let value = (code(&o) == 0).then(|| read_json(&report));
    let _ = fs::remove_file(report);
    (code(&o), value)
}

#[test]
fn extremal_reports_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let (c, r) = extremal(
        dir.path(),
        r#"{"family": "ODD_LINEAR", "dim": 5, "alpha": 0.22}"#,
    );
    assert_eq!(c, 0);
    assert!(
        r.unwrap()["verdict"]["linear_margin"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-10
    );
    let state: MatrixFile =
        serde_json::from_value(read_json(&dir.path().join("state.json"))).unwrap();
    assert_eq!(state.dim, 5);
    assert!((state.im[0][1] + 0.22).abs() < 1e-15);

    let sixth = 1.0 / 6.0;
    let spec =
        format!(r#"{{"family": "EVEN_BLOCK", "dim": 6, "alphas": [{sixth}, {sixth}, {sixth}]}}"#);
    let (c, r) = extremal(dir.path(), &spec);
    assert_eq!(c, 0);
    assert!(
        r.unwrap()["verdict"]["quadratic_margin"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-10
    );
}

#[test]
fn extremal_rejects_malformed_specs() {
    let dir = tempfile::tempdir().unwrap();
    for spec in [
        "{",
        r#"{"family": "NOPE", "dim": 3}"#,
        r#"{"family": "ODD_LINEAR", "dim": 5}"#,
        r#"{"family": "ODD_LINEAR", "dim": 5, "alpha": 0.5}"#,
        r#"{"family": "EVEN_BLOCK", "dim": 6, "alphas": [0.25, 0.25]}"#,
        r#"{"family": "EVEN_BLOCK", "dim": 4, "alphas": [0.25, 0.25], "extra": 1}"#,
    ] {
        assert_eq!(extremal(dir.path(), spec).0, 1, "{spec}");
    }
    assert_eq!(code(&qbg(&["extremal", "spec.json"], dir.path())), 1);
}

#[test]
fn sweep_flattens_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_matrix(dir.path(), "d4.json", diag(&[0.4, 0.3, 0.2, 0.1]), zeros(4));
    let o = qbg(
        &["sweep", input.to_str().unwrap(), "--out", "sw.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out: MatrixFile = serde_json::from_value(read_json(&dir.path().join("sw.json"))).unwrap();
    for k in 0..4 {
        assert!((out.re[k][k] - 0.25).abs() <= 1e-8);
    }
    let report = read_json(&dir.path().join("sw.report.json"));
    let before = report["before"]["s_r"].as_f64().unwrap();
    let after = report["after"]["s_r"].as_f64().unwrap();
    assert!((before - after).abs() <= 1e-10);

    let steps = qio::read_step_log(std::io::BufReader::new(
        fs::File::open(dir.path().join("sw.steps.jsonl")).unwrap(),
    ))
    .unwrap();
    assert!(!steps.is_empty());
    let rho = qbg_core::state::validate_density(
        MatrixFile {
            dim: 4,
            re: diag(&[0.4, 0.3, 0.2, 0.1]),
            im: zeros(4),
        }
        .to_matrix()
        .unwrap(),
        Default::default(),
    )
    .unwrap();
    let replayed = qbg_core::transform::replay(&rho, &steps).unwrap();
    assert!(replayed.matrix().max_abs_diff(&out.to_matrix().unwrap()) <= 1e-11);
}

#[test]
fn sweep_leaves_uniform_diagonals_alone() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_matrix(dir.path(), "mm.json", diag(&[0.25; 4]), zeros(4));
    assert_eq!(
        code(&qbg(
            &["sweep", input.to_str().unwrap(), "--out", "o.json"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("o.steps.jsonl")).unwrap(),
        ""
    );

    let mut re = diag(&[1.0 / 3.0; 3]);
    re[0][1] = 0.1;
    re[1][0] = 0.1;
    let mut im = zeros(3);
    im[1][2] = -0.05;
    im[2][1] = 0.05;
    let input = write_matrix(dir.path(), "u.json", re, im);
    assert_eq!(
        code(&qbg(
            &["sweep", input.to_str().unwrap(), "--out", "u_out.json"],
            dir.path()
        )),
        0
    );
    let report = read_json(&dir.path().join("u_out.report.json"));
    assert_eq!(report["steps"].as_u64(), Some(0));
    assert_eq!(report["before"], report["after"]);

    let bad = write_matrix(dir.path(), "bad.json", diag(&[0.6, 0.6]), zeros(2));
    assert_eq!(
        code(&qbg(
            &["sweep", bad.to_str().unwrap(), "--out", "b.json"],
            dir.path()
        )),
        2
    );
}
