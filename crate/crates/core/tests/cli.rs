use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use drlogit::cli::{cmd_compare, cmd_fit, cmd_simulate, Command, ConfigFile, Overrides, RunConfig};
use drlogit::estimators::solve_beta;
use drlogit::io::write_dataset_file;
use drlogit::model::{Basis, PhiSpec, ZFamily};
use drlogit::nuisance::{fit_covariate, fit_outcome_mle};
use drlogit::sim::{sample_gaussian_tilted, select_scenarios};

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/binary_beta0.csv")
}

fn drlogit(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_drlogit"));
    cmd.args(args).env_remove("DRLOGIT_SEED");
    if let Some(s) = seed_env {
        cmd.env("DRLOGIT_SEED", s);
    }
    cmd.output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fit_config(data: &Path, out: &Path) -> RunConfig {
    let flags = Overrides {
        data: Some(data.to_path_buf()),
        out_dir: Some(out.to_path_buf()),
        ..Default::default()
    };
    RunConfig::resolve(Command::Fit, ConfigFile::default(), flags, None).unwrap()
}

#[test]
fn fit_reads_back_what_the_sampler_wrote() {
    let dir = tempfile::tempdir().unwrap();
    let sc = select_scenarios(&["S1-gauss".into()]).unwrap().remove(0);
    let data = sample_gaussian_tilted(&sc.law, 1500, 77).unwrap();
    let csv = dir.path().join("d.csv");
    write_dataset_file(&csv, &data).unwrap();

    let out = cmd_fit(&fit_config(&csv, dir.path()), &mut Vec::new()).unwrap();
    assert_eq!(out.z_families, [ZFamily::Gaussian]);
    let basis = Basis::linear(2);
    let outcome = fit_outcome_mle(&data, &basis).unwrap();
    let covar = fit_covariate(&data, &basis, &[ZFamily::Gaussian]).unwrap();
    for spec in [PhiSpec::Identity, PhiSpec::Simple, PhiSpec::optimal()] {
        let direct = solve_beta(&data, &outcome, &covar, spec, &basis).unwrap().beta_hat[0];
        let via_cli = out.estimate(&format!("dr0-{spec}")).unwrap().beta_hat[0];
        assert!((direct - via_cli).abs() <= 1e-12, "{spec}");
    }
    assert!((out.estimate("mle").unwrap().beta_hat[0] - outcome.params.beta[0]).abs() <= 1e-12);
}

#[test]
fn bundled_file_is_consistent_with_zero_effect() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fit_config(&bundled(), dir.path());
    cfg.estimators.push("closed-form".parse().unwrap());
    cfg.estimators.push("dr1-simple".parse().unwrap());
    let mut table = Vec::new();
    let out = cmd_fit(&cfg, &mut table).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.estimates.len(), 6);
    for e in &out.estimates {
        assert!(e.beta_hat[0].abs() < 4.0 * e.std_errors[0], "{}: {}", e.estimator, e.beta_hat[0]);
    }
    let text = String::from_utf8(table).unwrap();
    assert!(text.lines().any(|l| l.starts_with("closed-form")));
}

#[test]
fn fit_output_is_byte_identical_on_repeat() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = drlogit(&["fit", "--data", path_str(&bundled()), "--out", path_str(dir.path()), "--phi", "simple,optimal"], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ja = std::fs::read(a.path().join("estimates.json")).unwrap();
    let jb = std::fs::read(b.path().join("estimates.json")).unwrap();
    assert_eq!(ja, jb);
    let text = String::from_utf8(ja).unwrap();
    assert!(!text.contains(path_str(a.path())));
    assert!(text.contains("dr0-optimal") && !text.contains("dr0-identity"));
}

#[test]
fn fit_reports_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "z1,x1\n1,0.5\n0,0.2\n").unwrap();
    let o = drlogit(&["fit", "--data", path_str(&bad), "--out", path_str(dir.path())], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`y`"));

    std::fs::write(&bad, "y,z1,x1\n1,oops,0.5\n0,1,0.2\n").unwrap();
    let o = drlogit(&["fit", "--data", path_str(&bad)], None);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = drlogit(&["fit", "--data", "/nonexistent/file.csv"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = drlogit(&["fit", "--data", path_str(&bundled()), "--level", "1.2"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = drlogit(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"data": "{}", "basis": ["1", "x1", "x2", "x1^2"], "estimators": ["mle", "dr0-identity"], "level": 0.9}}"#,
            path_str(&bundled())
        ),
    )
    .unwrap();
    let o = drlogit(&["fit", "--config", path_str(&cfg), "--out", path_str(dir.path()), "--level", "0.8"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("estimates.json")).unwrap()).unwrap();
    assert_eq!(json["level"], 0.8);
    assert_eq!(json["basis"].as_array().unwrap().len(), 4);
    assert_eq!(json["estimates"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_reproducible_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--n", "300", "--replications", "16", "--phi", "identity,simple"];
    for (dir, w) in [(&a, "1"), (&b, "8")] {
        let mut args = vec!["simulate", "S1", "--scenarios", "S2-bin", "--workers", w, "--out", path_str(dir.path())];
        args.extend(common);
        let o = drlogit(&args, Some("5"));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["summary.json", "summary.md", "S1-bin.csv", "S1-gauss.json", "S2-bin.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenarios"].as_array().unwrap().len(), 3);
    assert_eq!(summary["estimators"], serde_json::json!(["mle", "dr0-identity", "dr0-simple"]));

    // A different environment seed moves the draws; an explicit flag beats the environment.
    let c = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "S1-bin", "--out", path_str(c.path())];
    args.extend(common);
    assert!(drlogit(&args, Some("6")).status.success());
    let s6 = std::fs::read(c.path().join("S1-bin.json")).unwrap();
    assert_ne!(s6, std::fs::read(a.path().join("S1-bin.json")).unwrap());
    args.extend(["--seed", "5"]);
    assert!(drlogit(&args, Some("6")).status.success());
    assert_eq!(std::fs::read(c.path().join("S1-bin.json")).unwrap(), std::fs::read(a.path().join("S1-bin.json")).unwrap());
}

#[test]
fn simulate_rejects_unknown_scenarios() {
    let o = drlogit(&["simulate", "S9", "--replications", "2"], None);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("S9") && err.contains("S1b0-bin"), "{err}");
}

#[test]
fn compare_needs_two_variants_and_writes_ratios() {
    let o = drlogit(&["compare", "--phi", "simple"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least two"));

    let dir = tempfile::tempdir().unwrap();
    let flags = Overrides {
        phi: Some(vec!["identity".into(), "simple".into()]),
        scenarios: Some(vec!["S1b1-bin".into()]),
        n: Some(300),
        replications: Some(12),
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let cfg = RunConfig::resolve(Command::Compare, ConfigFile::default(), flags, None).unwrap();
    let mut text = Vec::new();
    let recs = cmd_compare(&cfg, &mut text).unwrap();
    assert_eq!(recs[0].comparison.labels, ["dr0-identity", "dr0-simple"]);
    assert_eq!(recs[0].ratios[1][1][0], 1.0);
    assert!(dir.path().join("compare.md").exists() && dir.path().join("compare.json").exists());
    assert!(String::from_utf8(text).unwrap().contains("ratio"));
}

#[test]
fn simulate_in_process_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let flags = Overrides {
        scenarios: Some(vec!["S3-bin".into()]),
        n: Some(250),
        replications: Some(8),
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let cfg = RunConfig::resolve(Command::Simulate, ConfigFile::default(), flags, None).unwrap();
    let mut text = Vec::new();
    let out = cmd_simulate(&cfg, &mut text).unwrap();
    assert_eq!(out.scenarios[0].rows.len(), 5);
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("dr1-simple"));
}
