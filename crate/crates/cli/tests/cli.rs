use std::fs;
use std::path::Path;
use std::process::Command as Process;

use stablekern_cli::{run, run_file, Command, ExperimentConfig, RunOptions};

const SCALING: &str = r#"
[experiment]
command = "density-eval"
mode = "scaling"
alphas = [1.2, 1.7]

[sampling]
draws = 50
"#;

fn opts(dir: &Path, threads: usize) -> RunOptions {
    RunOptions {
        out_dir: dir.to_path_buf(),
        seed: None,
        threads: Some(threads),
    }
}

#[test]
fn manifest_parses_back_to_the_same_config() {
    let cfg = ExperimentConfig::parse(SCALING, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, &opts(dir.path(), 1)).unwrap();
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("version = \"stablekern-v"));
    let again = ExperimentConfig::parse(&manifest, Some(Command::DensityEval)).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn results_are_identical_across_thread_counts() {
    let text = r#"
[experiment]
command = "rate-invariant"
mode = "monte-carlo"
alphas = [1.8]

[invariant]
t_burn = 2.0
t_sample = 10.0
n_steps = 32
n_chains = 8
"#;
    let cfg = ExperimentConfig::parse(text, None).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&cfg, &opts(a.path(), 1)).unwrap();
    run(&cfg, &opts(b.path(), 3)).unwrap();
    for f in ["results.csv", "slices/invariant_mc_a1.8.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, SCALING).unwrap();
    let mut o = opts(&dir.path().join("out"), 1);
    o.seed = Some(99);
    run_file(&path, Some(Command::DensityEval), &o).unwrap();
    let manifest = fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 99"));
}

#[test]
fn config_errors_name_the_key() {
    let bad = [
        ("[experiment]\ncommand = \"rate-kernel\"\nalphas = [1.9, 2.0]\n", "experiment.alphas"),
        ("[experiment]\ncommand = \"rate-sde\"\nalphas = [1.5, 1.9, 1.95]\n", "experiment.alphas"),
        ("[experiment]\ncommand = \"density-eval\"\ncolour = 3\n", "experiment.colour"),
        ("[experiment]\ncommand = \"density-eval\"\n[nonsense]\nx = 1\n", "nonsense"),
        ("[experiment]\ncommand = \"rate-invariant\"\n[drift]\nname = \"zero\"\n", "drift.name"),
        ("[experiment]\ncommand = \"density-eval\"\nmode = \"fast\"\n", "experiment.mode"),
        ("[experiment]\ncommand = \"parametrix-build\"\n[parametrix]\nn_t = 64\n", "parametrix"),
    ];
    for (text, key) in bad {
        let err = ExperimentConfig::parse(text, None).unwrap_err().to_string();
        assert!(err.contains(key), "{err} should name {key}");
    }
    let err = ExperimentConfig::parse(SCALING, Some(Command::RateSde)).unwrap_err().to_string();
    assert!(err.contains("density-eval"));
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_stablekern"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, SCALING).unwrap();
    let status = binary()
        .args(["density-eval", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("o1"))
        .env("STABLEKERN_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("o1/summary.json").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[experiment]\ncommand = \"density-eval\"\nalphas = [2.5]\n").unwrap();
    let out = binary().args(["density-eval", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.alphas"));

    // A failing check exits 1 but still writes every output.
    let strict = dir.path().join("strict.toml");
    fs::write(&strict, format!("{SCALING}\n[tolerances]\nscaling_rel = 1e-30\n")).unwrap();
    let status = binary()
        .args(["density-eval", "--config"])
        .arg(&strict)
        .arg("--out")
        .arg(dir.path().join("o2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o2/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], false);

    let usage = binary().args(["no-such-command", "--config", "x"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
