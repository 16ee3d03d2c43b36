use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "fixtures",
        &format!("{name}.json"),
    ]
    .iter()
    .collect();
    p.to_str().unwrap().to_string()
}

fn bmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmlab"))
        .args(args)
        .output()
        .expect("spawn bmlab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_bad_input() {
    let out = bmlab(&["--help"]);
    assert_eq!(code(&out), 0);
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "john",
        "loewner",
        "ader-certify",
        "bm",
        "onesym",
        "stability",
        "cover",
        "fixtures",
    ] {
        assert!(help.contains(sub), "{sub} missing from --help");
    }
    assert!(help.contains("BM_LAB_THREADS"));

    let out = bmlab(&["bm", "ball", "--body", &fixture("cube2"), "--frobnicate"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"vertices\": [[1, 0]").unwrap();
    let out = bmlab(&["bm", "ball", "--body", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = bmlab(&["bm", "ball", "--body", "/nonexistent/body.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn ball_square_certificate() {
    let out = bmlab(&["bm", "ball", "--body", &fixture("cube2")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(v["converged"], true);
    assert_eq!(v["certificate"]["outer"].as_array().unwrap().len(), 2);
    assert_eq!(v["certificate"]["inner"].as_array().unwrap().len(), 2);
    assert_eq!(v["verification"]["pass"], true);
}

#[test]
fn ellipsoids() {
    for cmd in ["john", "loewner"] {
        let out = bmlab(&[cmd, "--body", &fixture("cube3")]);
        assert_eq!(code(&out), 0, "{cmd}");
        let v = json(&out);
        assert_eq!(v["ellipsoid"]["dim"], 3);
        assert_eq!(v["residual"]["pass"], true);
    }
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("e.json");
    let out = bmlab(&[
        "john",
        "--body",
        &fixture("hexagon"),
        "--out",
        e.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&e).unwrap()).unwrap();
    assert_eq!(v["Q"].as_array().unwrap().len(), 2);
}

#[test]
fn ader_exit_codes() {
    let out = bmlab(&[
        "ader-certify",
        "--body",
        &fixture("truncated-cube4"),
        "--r",
        "1",
        "--R",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["R"], 2.0);
    for o in v["outer"].as_array().unwrap() {
        let y: Vec<f64> = o["y"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(
            !(y.iter().all(|c| *c > 0.0) || y.iter().all(|c| *c < 0.0)),
            "cut vertex in support"
        );
    }

    let dir = tempfile::tempdir().unwrap();
    let rect = dir.path().join("rect.json");
    std::fs::write(
        &rect,
        r#"{"dim": 2, "vertices": [[2, 1], [2, -1]], "label": "rect"}"#,
    )
    .unwrap();
    let out = bmlab(&[
        "ader-certify",
        "--body",
        rect.to_str().unwrap(),
        "--r",
        "1",
        "--R",
        "2.23606797749979",
    ]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert!(v["margin"].as_f64().unwrap() > 0.0);
    assert_eq!(v["A"].as_array().unwrap().len(), 2);

    let out = bmlab(&[
        "ader-certify",
        "--body",
        rect.to_str().unwrap(),
        "--r",
        "2",
        "--R",
        "3",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn planar_distances() {
    let out = bmlab(&[
        "bm",
        "planar",
        "--a",
        &fixture("cube2"),
        "--b",
        &fixture("hexagon"),
    ]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["value"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    let out = bmlab(&["bm", "pgram", "--body", &fixture("octagon")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(v["witness"]["kind"], "map");
}

#[test]
fn onesym_commands() {
    let out = bmlab(&["onesym", "check", "--body", &fixture("octagon")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["condition_holds"], true);
    let out = bmlab(&["onesym", "check", "--body", &fixture("cube2")]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert!(v["worst_margin"].as_f64().unwrap() < 0.0);
    assert_eq!(v["witness"].as_array().unwrap().len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let body = dir.path().join("ex4.json");
    let out = bmlab(&[
        "onesym",
        "example4",
        "--v",
        "0.9,0.28",
        "--out",
        body.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["condition_holds"], true);
    let out = bmlab(&[
        "onesym",
        "pair",
        "--a",
        body.to_str().unwrap(),
        "--b",
        &fixture("cube2"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["value"].as_f64().unwrap() <= 2f64.sqrt() + 1e-5);
    let out = bmlab(&["onesym", "example4", "--v", "0.5,0.1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_poly() {
    let out = bmlab(&["stability", "verify-poly"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["factorization_holds"], true);
    assert_eq!(v["f_positive"]["certified"], true);
    assert_eq!(v["g_positive"]["certified"], true);
}

#[test]
fn scan_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let svg = dir.path().join("s.svg");
    let out = bmlab(&[
        "stability",
        "scan",
        "--trials",
        "12",
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let single = Command::new(env!("CARGO_BIN_EXE_bmlab"))
        .args([
            "stability",
            "scan",
            "--trials",
            "12",
            "--seed",
            "7",
            "--out",
            b.to_str().unwrap(),
        ])
        .env("BM_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&single), 0);
    assert_eq!(json(&single)["threads"], 1);
    let ca = std::fs::read(&a).unwrap();
    assert_eq!(ca, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("id,epsilon,dist_ball,dist_pgram,bound,slack\n"));
    assert_eq!(text.lines().count(), 13);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn cover_small() {
    let out = bmlab(&["cover", "--trials", "20", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["violations"], 0);
    assert!(v["max_min"].as_f64().unwrap() < 1.363);
}

#[test]
fn fixtures_verify() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures"]
        .iter()
        .collect();
    let out = bmlab(&["fixtures", "verify", "--dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["pass"], true);
}
