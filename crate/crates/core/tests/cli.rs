use std::path::Path;
use std::process::{Command, Output};

use fpu_solitary::io::{read_csv, read_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpu-solitary"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("FPU_SOLITARY_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn limit_ode_reports_mu_bar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "limit-ode",
            "--m",
            "2",
            "--xmax",
            "50",
            "--step",
            "1e-3",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("o/limit_m2.json")).unwrap();
    let mu = j["mu_bar"].as_f64().unwrap();
    assert!((mu - 2.0 / 6f64.sqrt()).abs() < 1e-15);
    let (header, rows) = read_csv(&dir.path().join("o/limit_m2.csv")).unwrap();
    assert_eq!(header, ["xbar", "Sbar", "Sbar_prime"]);
    assert_eq!(rows.len(), 50_001);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("limit_m2.csv") && stdout.contains("manifest_limit-ode.json"));
}

#[test]
fn limit_ode_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["limit-ode", "--xmax", "50"], dir.path())), 2);
    assert_eq!(
        code(&run(&["limit-ode", "--m", "2", "--step", "10"], dir.path())),
        1
    );
}

#[test]
fn solve_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["solve", "--m", "2", "--delta", "0.1", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("o/wave_m2_d0.1.csv");
    let first = std::fs::read(&csv).unwrap();
    let j = read_json(&csv.with_extension("json")).unwrap();
    assert!(j["residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(j["grid"]["h"].as_f64().unwrap(), 1.0 / 512.0);
    assert_eq!(
        code(&run(
            &["solve", "--m", "2", "--delta", "0.1", "--out", "o"],
            dir.path()
        )),
        0
    );
    assert_eq!(first, std::fs::read(&csv).unwrap());
    let hash = j["manifest_sha256"].as_str().unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with(&format!("# manifest_sha256={hash}\n")));
    assert_eq!(code(&run(&["solve", "--delta", "0.9"], dir.path())), 2);
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["solve", "--delta", "0.2", "--out", "sub"])
        .env("FPU_SOLITARY_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("sub/wave_m2_d0.2.json").exists());
    assert!(dir.path().join("sub/manifest_solve.json").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# coarse\nh = 0.0078125\ntol = 1e-9\nout = fromcfg\n",
    )
    .unwrap();
    let o = run(
        &[
            "--config", "run.cfg", "solve", "--delta", "0.2", "--tol", "1e-10",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("fromcfg/wave_m2_d0.2.json")).unwrap();
    assert_eq!(j["grid"]["h"].as_f64().unwrap(), 0.0078125);
    let m = read_json(&dir.path().join("fromcfg/manifest_solve.json")).unwrap();
    assert_eq!(m["config"]["tol"].as_f64().unwrap(), 1e-10);
    std::fs::write(dir.path().join("bad.cfg"), "flavour = 3\n").unwrap();
    assert_eq!(code(&run(&["--config", "bad.cfg", "solve"], dir.path())), 2);
    assert_eq!(
        code(&run(&["--config", "absent.cfg", "solve"], dir.path())),
        2
    );
}

#[test]
fn wave_consumers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(&["solve", "--delta", "0.1", "--out", "o"], d)), 0);
    let wave = "o/wave_m2_d0.1.json";

    let o = run(
        &["linearize", "--wave", wave, "--a-frac", "0.5", "--out", "o"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout).to_string();
    let spec_json = stdout
        .lines()
        .find(|l| l.contains("spectrum_") && l.ends_with(".json"))
        .unwrap();
    let j = read_json(&d.join(spec_json)).unwrap();
    let a = j["report"]["a"].as_f64().unwrap();
    let a_c = j["a_c"].as_f64().unwrap();
    assert!((a - 0.5 * a_c).abs() < 1e-14);
    assert_eq!(j["kernel_count"].as_u64().unwrap(), 1);

    let o = run(&["rescale", "--wave", wave, "--out", "o"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&d.join("o/rescaled_m2_d0.1.json")).unwrap();
    for key in [
        "c_e",
        "c_o",
        "sup_residual_eq18",
        "fp_residual_eq12",
        "E0_int0",
        "E0_int1",
        "Z_inf",
    ] {
        assert!(j[key].as_f64().is_some(), "{key}");
    }
    let (header, _) = read_csv(&d.join("o/rescaled_m2_d0.1.csv")).unwrap();
    assert_eq!(header, ["xt", "St", "Te", "To", "Pt", "Zt"]);
    assert_eq!(code(&run(&["rescale", "--wave", "o/missing.json"], d)), 2);

    let o = run(
        &[
            "simulate",
            "--wave",
            wave,
            "--T-transits",
            "5",
            "--out",
            "o",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&d.join("o/simulate_m2_d0.1.json")).unwrap();
    let sigma = j["sigma_ref"].as_f64().unwrap();
    assert!((j["T"].as_f64().unwrap() - 5.0 / sigma.sqrt()).abs() < 1e-14);
    let (header, _) = read_csv(&d.join("o/traj_t0.000000.csv")).unwrap();
    assert_eq!(header, ["j", "r", "v"]);
}

#[test]
fn sweep_rejects_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["sweep", "--deltas", ""], dir.path())), 2);
    assert_eq!(code(&run(&["sweep", "--deltas", "0.2,abc"], dir.path())), 2);
}

#[test]
fn sweep_table_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "sweep",
            "--deltas",
            "0.2,0.1,0.05",
            "--h",
            "0.00390625",
            "--report",
            "t/sweep.csv",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("t/sweep.csv")).unwrap();
    assert_eq!(header.len(), 12);
    assert_eq!(header[4], "err_R_inf");
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![0.2, 0.1, 0.05]
    );
    assert!(rows.iter().all(|r| r[10] == 1.0));
    let text = std::fs::read_to_string(dir.path().join("t/sweep.csv")).unwrap();
    assert!(text
        .lines()
        .last()
        .unwrap()
        .starts_with("# slopes,err_R_inf="));
    let j = read_json(&dir.path().join("t/sweep.json")).unwrap();
    assert!(j["slopes"]["err_R_inf"].as_f64().unwrap() >= 1.5);
    assert_eq!(j["nondegeneracy"]["rows"].as_array().unwrap().len(), 3);
}
