use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use tempfile::TempDir;

fn lodm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lodm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, json).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GARCH: &str = r#"{"family":"garch_gaussian","p":1,"q":1,"omega":0.1,"a":[0.5],"b":[0.3],"seed":7,"n":500,"burn_in":200}"#;
const WORKED: &str = r#"{"family":"log_lin_poisson","p":2,"q":2,"omega":0.1,"a":[0.7,-0.1],"b":[0.4,-0.2],"seed":3,"n":3000}"#;

#[test]
fn simulate_writes_trajectory_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", GARCH);
    let out = dir.path().join("t.csv");
    let r = lodm(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,y,x"));
    assert_eq!(lines.count(), 500);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["burn_in"], 200);
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", GARCH);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(
        code(&lodm(&["simulate", "--config", s(&cfg), "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&lodm(&["simulate", "--config", s(&cfg), "--out", s(&b)])),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = dir.path().join("c.csv");
    assert_eq!(
        code(&lodm(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(&c),
            "--seed",
            "8"
        ])),
        0
    );
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn simulate_refuses_nonstationary_without_force() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "u.json",
        r#"{"family":"garch","p":1,"q":1,"omega":0.1,"a":[1.5],"b":[0.1],"n":20,"burn_in":0}"#,
    );
    let out = dir.path().join("t.csv");
    let r = lodm(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("--force"));
    assert!(!out.exists());

    let r = lodm(&["simulate", "--config", s(&cfg), "--out", s(&out), "--force"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 21);
}

#[test]
fn check_exit_codes_carry_verdict() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", GARCH);
    let r = lodm(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&r), 0);
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["verdict"], "Identifiable");

    let cfg = write_config(
        &dir,
        "z.json",
        r#"{"family":"garch","p":1,"q":1,"omega":0.1,"a":[0.5],"b":[0.0]}"#,
    );
    let r = lodm(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&r), 3);
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_abs_diff_eq!(
        report["common_roots"][0][0].as_f64().unwrap(),
        0.5,
        epsilon = 1e-12
    );

    let cfg = write_config(
        &dir,
        "u.json",
        r#"{"family":"garch","p":1,"q":1,"omega":0.1,"a":[1.2],"b":[0.3]}"#,
    );
    assert_eq!(code(&lodm(&["check", "--config", s(&cfg)])), 4);
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"family":"garch","p":2,"q":1,"omega":0.1,"a":[0.5],"b":[0.3]}"#,
    );
    assert_eq!(code(&lodm(&["check", "--config", s(&cfg)])), 2);
    let cfg = write_config(
        &dir,
        "fam.json",
        r#"{"family":"arma","p":1,"q":1,"omega":0.1,"a":[0.5],"b":[0.3]}"#,
    );
    assert_eq!(code(&lodm(&["check", "--config", s(&cfg)])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&lodm(&["check", "--config", s(&missing)])), 2);
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn curve_rows_and_guards() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "w.json", WORKED);
    let out = dir.path().join("c.csv");
    let r = lodm(&[
        "curve",
        "--config",
        s(&cfg),
        "--d",
        "0.1,0",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("d,omega,a1,a2,b1,b2\n"));
    let rows = csv_rows(&text);
    let want = [0.1, 0.12, 0.6, -0.08, 0.4, -0.16];
    for (x, y) in rows[0].iter().zip(want) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
    }
    assert_eq!(rows[1], vec![0.0, 0.1, 0.7, -0.1, 0.4, -0.2]);
    assert!(dir.path().join("c.csv.curve.json").exists());

    let r = lodm(&["curve", "--config", s(&cfg), "--d", "2.5"]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("admissible range"));

    let g = write_config(&dir, "g.json", GARCH);
    let r = lodm(&["curve", "--config", s(&g)]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("no curve exists"));
}

#[test]
fn impulse_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", GARCH);
    let r = lodm(&["impulse", "--config", s(&cfg), "--horizon", "4"]);
    assert_eq!(code(&r), 0);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("k,h\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        assert_abs_diff_eq!(row[1], 0.3 * 0.5f64.powi(k as i32), epsilon = 1e-15);
    }
}

#[test]
fn data_commands_roundtrip() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "w.json", WORKED);
    let traj = dir.path().join("t.csv");
    assert_eq!(
        code(&lodm(&["simulate", "--config", s(&cfg), "--out", s(&traj)])),
        0
    );

    // the recovered latent path forgets its start and matches the simulated one
    let r = lodm(&["reconstruct", "--config", s(&cfg), "--input", s(&traj)]);
    assert_eq!(code(&r), 0);
    let rec = csv_rows(&String::from_utf8(r.stdout).unwrap());
    let sim = csv_rows(&fs::read_to_string(&traj).unwrap());
    assert_eq!(rec.len(), sim.len());
    for (u, v) in rec.iter().zip(&sim).skip(100) {
        assert_abs_diff_eq!(u[2], v[2], epsilon = 1e-10);
    }

    let r = lodm(&[
        "profile",
        "--config",
        s(&cfg),
        "--input",
        s(&traj),
        "--d",
        "-0.1,0,0.1",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("d,loglik\n"));
    let prof = csv_rows(&text);
    assert_eq!(prof.len(), 3);
    for row in &prof {
        assert_abs_diff_eq!(row[1], prof[1][1], epsilon = 1e-4);
    }

    let (f1, f2) = (dir.path().join("f1.json"), dir.path().join("f2.json"));
    for f in [&f1, &f2] {
        let r = lodm(&[
            "fit",
            "--config",
            s(&cfg),
            "--input",
            s(&traj),
            "--out",
            s(f),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(fs::read(&f1).unwrap(), fs::read(&f2).unwrap());
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(&f1).unwrap()).unwrap();
    assert!(fit["loglik"].as_f64().unwrap().is_finite());
    assert_eq!(fit["start"]["omega"], 0.1);
}

#[test]
fn data_commands_need_invertible_link() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", GARCH);
    let traj = dir.path().join("t.csv");
    assert_eq!(
        code(&lodm(&["simulate", "--config", s(&cfg), "--out", s(&traj)])),
        0
    );
    let bad = write_config(
        &dir,
        "u.json",
        r#"{"family":"garch","p":1,"q":1,"omega":0.1,"a":[1.2],"b":[0.3]}"#,
    );
    assert_eq!(
        code(&lodm(&[
            "reconstruct",
            "--config",
            s(&bad),
            "--input",
            s(&traj)
        ])),
        4
    );
    assert_eq!(
        code(&lodm(&["fit", "--config", s(&bad), "--input", s(&traj)])),
        4
    );
}
