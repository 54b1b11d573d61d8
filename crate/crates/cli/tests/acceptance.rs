//! The ten acceptance criteria, each one CLI command driven by a file in
//! `configs/`. Prints one line per criterion and fails if any check or
//! runtime budget is missed.

use std::time::Duration;

use stablekern_cli::{run, ExperimentConfig, Report, RunOptions};

struct Criterion {
    id: u32,
    what: &'static str,
    config: &'static str,
    budget: Duration,
}

macro_rules! config {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/", $name))
    };
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, what: "closed-form oracles", config: config!("c01_density_oracle.toml"), budget: secs(10) },
        Criterion { id: 2, what: "scaling identity", config: config!("c02_density_scaling.toml"), budget: secs(30) },
        Criterion { id: 3, what: "uniform bound stability", config: config!("c03_uniform_bounds.toml"), budget: secs(60) },
        Criterion { id: 4, what: "kernel difference rate", config: config!("c04_kernel_rate.toml"), budget: secs(120) },
        Criterion { id: 5, what: "generator difference rate", config: config!("c05_generator_rate.toml"), budget: secs(60) },
        Criterion { id: 6, what: "parametrix vs OU kernel", config: config!("c06_parametrix_ou.toml"), budget: secs(600) },
        Criterion { id: 7, what: "SDE kernel alpha-continuity", config: config!("c07_sde_rate.toml"), budget: secs(1800) },
        Criterion { id: 8, what: "OU invariant-law rates", config: config!("c08_invariant_exact.toml"), budget: secs(300) },
        Criterion { id: 9, what: "Monte Carlo invariant law", config: config!("c09_invariant_monte_carlo.toml"), budget: secs(600) },
        Criterion { id: 10, what: "inequality suites", config: config!("c10_inequalities.toml"), budget: secs(300) },
    ]
}

fn headline(r: &Report) -> String {
    let mut parts: Vec<String> = r
        .rows
        .iter()
        .filter(|row| row.pass.is_some())
        .fold(Vec::<(String, f64)>::new(), |mut acc, row| {
            // Worst value per checked metric name.
            match acc.iter_mut().find(|(m, _)| *m == row.metric) {
                Some((_, v)) if row.pass == Some(false) || row.value.abs() > v.abs() => *v = row.value,
                Some(_) => {}
                None => acc.push((row.metric.clone(), row.value)),
            }
            acc
        })
        .into_iter()
        .map(|(m, v)| format!("{m}={v:.3e}"))
        .collect();
    parts.truncate(4);
    parts.join(" ")
}

#[test]
fn acceptance_criteria() {
    let out = tempfile::tempdir().unwrap();
    let mut failed = Vec::new();
    for c in criteria() {
        let cfg = ExperimentConfig::parse(c.config, None).unwrap();
        let opts = RunOptions {
            out_dir: out.path().join(format!("c{:02}", c.id)),
            seed: None,
            threads: None,
        };
        let line = match run(&cfg, &opts) {
            Ok(o) => {
                let in_time = o.elapsed <= c.budget;
                let ok = o.report.passed() && in_time;
                if !ok {
                    failed.push(c.id);
                }
                let mut line = format!(
                    "criterion {}: {} {} ({:.1}s of {}s) {}",
                    c.id,
                    if ok { "PASS" } else { "FAIL" },
                    c.what,
                    o.elapsed.as_secs_f64(),
                    c.budget.as_secs(),
                    headline(&o.report)
                );
                for f in o.report.failures() {
                    line += &format!("\n    failed {} [{}] = {:e}, want {}", f.metric, f.params, f.value, f.threshold.as_deref().unwrap_or(""));
                }
                if !in_time {
                    line += "\n    over the runtime budget";
                }
                line
            }
            Err(e) => {
                failed.push(c.id);
                format!("criterion {}: FAIL {} ({e})", c.id, c.what)
            }
        };
        println!("{line}");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
