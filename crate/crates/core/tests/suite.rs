use std::path::Path;

use qhgeom::suite::{Suite, SuiteConfig};
use qhgeom::uniformity::CheckStatus;

fn small_config(dir: &Path) -> SuiteConfig {
    std::fs::write(
        dir.join("broken.json"),
        r#"{"ambient": {"kind": "matrix", "matrix": [[0,1,3],[1,0,1],[3,1,0]]}, "interior": [0, 1], "boundary": [2]}"#,
    )
    .unwrap();
    serde_json::from_str(
        r#"{
            "seed": 5,
            "pair_samples": 400,
            "subsample": 60,
            "quadruple_samples": 2000,
            "domains": [
                {"name": "disk", "spec": {"kind": "disk", "h": 0.2}},
                {"name": "broken", "file": "broken.json"}
            ],
            "random_spaces": {"count": 4, "min_points": 8, "max_points": 20, "exhaustive_points": 9, "exhaustive_count": 2},
            "uniform_domain": "disk",
            "arc": {"n": 200, "u": [0.4, 0.2]},
            "snowflake": {"epsilon": 0.5, "levels": [0.1, 0.05]},
            "correspondences": {"levels": [0.2, 0.1], "arc_u": 0.4, "arc_n": [200, 300]}
        }"#,
    )
    .unwrap()
}

#[test]
fn broken_matrix_fails_the_sandwich_check_with_a_triangle_witness() {
    let dir = tempfile::tempdir().unwrap();
    let suite = Suite::prepare(small_config(dir.path()), dir.path()).unwrap();
    let report = suite.run();
    assert!(!report.pass);
    let ids: Vec<u32> = report.checks.iter().map(|c| c.id).collect();
    assert_eq!(ids, (1..=10).collect::<Vec<_>>());
    let first = &report.checks[0];
    assert_eq!(first.status, CheckStatus::Fail);
    let witness = &first.witnesses["metric"][0];
    assert_eq!(witness["domain"], "broken");
    assert_eq!(witness["first"]["axiom"], "triangle");
    assert_eq!(report.checks[6].status, CheckStatus::Pass);
    assert_eq!(report.checks[8].status, CheckStatus::Diverges);
    let growth = report.checks[8].measured["trend"]["growth"].as_f64().unwrap();
    assert!(growth >= 1.3);
}

#[test]
fn reports_repeat_and_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: u64| {
        let mut config = small_config(dir.path());
        config.seed = seed;
        Suite::prepare(config, dir.path()).unwrap().run().without_timing()
    };
    let a = run(5);
    assert_eq!(a, run(5));
    assert_eq!(a["seed"], 5);
    assert_ne!(a["checks"][0]["measured"], run(6)["checks"][0]["measured"]);
}

#[test]
fn configuration_problems_are_reported_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.uniform_domain = "nowhere".into();
    assert!(matches!(Suite::prepare(config, dir.path()), Err(qhgeom::Error::Config(_))));
    let mut config = small_config(dir.path());
    config.snowflake.levels.truncate(1);
    assert!(matches!(Suite::prepare(config, dir.path()), Err(qhgeom::Error::Config(_))));
}
