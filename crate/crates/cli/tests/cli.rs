use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tentcocycle")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn const1(dir: &Path) -> String {
    let p = dir.join("const1.json");
    std::fs::write(&p, r#"{"kind":"periodic","table":[[1,1]]}"#).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn markov_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["markov", "--n-range", "5", "12", "--format", "csv"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "n,kappa,r_n,rho,lambda2,ratio_to_minus_2kappa,charpoly_ok");
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "5");
    let l2: f64 = row[4].parse().unwrap();
    assert!((l2 + 0.0656).abs() < 1e-3);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn bound_for_constant_driving() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = const1(dir.path());
    let o = bin(&["bound", "--config", &cfg, "--format", "json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["k_P"], 15);
    assert!((v["D_P"].as_f64().unwrap() - 98.108).abs() < 1e-3);
    assert!(v["C"].as_f64().unwrap() < 0.0);
    let csv = stdout(&bin(&["bound", "--config", &cfg], dir.path()));
    assert!(csv.starts_with("M,D_eps,B,m1,m3,d,k_P,D_P,G_P_freq,C,"));
}

#[test]
fn full_run_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    std::fs::write(
        &p,
        r#"{"driving":{"kind":"iid","table":[[1,0.5,0.5],[0.25,1,0.5]],"seed":3},
            "cone":{"a":120,"nu":0.8},"numeric":{"mode":"float","pullback_depth":30}}"#,
    )
    .unwrap();
    let o = bin(&["simulate", "--config", p.to_str().unwrap(), "--steps", "100"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[4].abs() < 0.01, "lambda1 = {}", row[4]);
    assert!(row[6] < 0.0);
}

#[test]
fn ly_sweep_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["ly-sweep", "--samples", "10000", "--format", "json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["general_violations"], 0);
    assert_eq!(v["sharp_violations"], 0);
    assert!(v["sharp_cases"].as_u64().unwrap() > 0);

    let p = dir.path().join("exact.json");
    std::fs::write(&p, r#"{"numeric":{"mode":"rational"}}"#).unwrap();
    let o = bin(&["ly-sweep", "--samples", "1000", "--config", p.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("rational,1000,0,"));
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("iid.json");
    std::fs::write(&p, r#"{"kind":"iid","table":[[1,0.5,0.5],[0.25,1,0.5]]}"#).unwrap();
    let cfg = p.to_str().unwrap();
    for cmd in [&["eta-check", "--samples", "5"][..], &["ly-sweep", "--samples", "500"], &["bound", "--kappa", "0.01"]] {
        let mut outs = Vec::new();
        for name in ["a.out", "b.out"] {
            let mut args = cmd.to_vec();
            args.extend(["--config", cfg, "--seed", "7", "--format", "json", "--out", name]);
            assert!(bin(&args, dir.path()).status.success());
            outs.push(std::fs::read(dir.path().join(name)).unwrap());
        }
        assert_eq!(outs[0], outs[1], "{cmd:?}");
    }
}

#[test]
fn graph_and_schedule_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = const1(dir.path());
    let o = bin(&["schedule", "--config", &cfg, "--horizon", "200", "--emit-graph", "g.csv"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 201);
    let o = bin(&["markov", "--n-range", "1", "2", "--emit-graph", "g.csv"], dir.path());
    assert!(o.status.success());
    let g = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(g.starts_with("n,x,y\n1,-1,"));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"kind":"periodic","table":[[1,1]],"colour":"red"}"#).unwrap();
    assert_eq!(bin(&["bound", "--config", p.to_str().unwrap()], dir.path()).status.code(), Some(1));
    std::fs::write(&p, r#"{"kind":"periodic","table":[[1,0]]}"#).unwrap();
    assert_eq!(bin(&["bound", "--config", p.to_str().unwrap()], dir.path()).status.code(), Some(1));
    assert_eq!(bin(&["markov", "--n-range", "4", "2"], dir.path()).status.code(), Some(1));
    assert_eq!(bin(&["bound", "--config", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(bin(&["--help"], dir.path()).status.code(), Some(0));
}
