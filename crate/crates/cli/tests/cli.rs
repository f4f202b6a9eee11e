//! End-to-end subcommand tests against the checked-in fixture bundle:
//! exit codes, output files, error routing, and the config-hash contract.

mod common;

use std::fs;

use common::{copy_fixtures, dir_listing, exit_code, fixtures_dir, run_cli, stderr, stdout};
use tempfile::tempdir;

fn fixture_path(name: &str) -> String {
    fixtures_dir().join(name).display().to_string()
}

#[test]
fn ingest_check_summarizes_every_configured_input() {
    let output = run_cli(&["ingest-check", "--config", &fixture_path("config.json")]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["phd_rows"], 65);
    assert_eq!(summary["publications"], 120);
    assert_eq!(summary["panel_units"], 35);
    assert_eq!(summary["fe_spec"], "ok");
    assert_eq!(summary["fep_spec"], "ok");
}

#[test]
fn report_with_minimal_config_carries_exactly_one_fit_section() {
    let out = tempdir().unwrap();
    let output = run_cli(&[
        "report",
        "--config",
        &fixture_path("minimal_config.json"),
        "--out",
        out.path().to_str().unwrap(),
        "--fixed-clock",
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    // serde_json sorts object keys on parse, so compare as a sorted set
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["fit_fe", "metadata", "year_effects"]);
    assert!(report["fit_fe"]["coefficients"]["staff_costs"].is_number());
    assert_eq!(
        dir_listing(out.path()),
        ["fit_fe.json", "report.json", "year_effects.csv"]
    );
}

#[test]
fn report_passes_through_the_all_zero_outcome_drop() {
    let out = tempdir().unwrap();
    let output = run_cli(&[
        "report",
        "--config",
        &fixture_path("allzero_config.json"),
        "--out",
        out.path().to_str().unwrap(),
        "--fixed-clock",
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    let dropped = report["fit_fep"]["drop_report"]["dropped_units"]
        .as_array()
        .unwrap();
    let zeroed: Vec<&serde_json::Value> = dropped
        .iter()
        .filter(|d| d["reason"] == "all_zero_outcome")
        .collect();
    assert_eq!(zeroed.len(), 1);
    assert_eq!(zeroed[0]["unit_id"], "SP03");
}

#[test]
fn fit_fe_writes_the_year_effect_series_with_a_base_row() {
    let out = tempdir().unwrap();
    let output = run_cli(&[
        "fit-fe",
        "--config",
        &fixture_path("minimal_config.json"),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let series = fs::read_to_string(out.path().join("year_effects.csv")).unwrap();
    let lines: Vec<&str> = series.lines().collect();
    assert_eq!(lines[0], "model,year,estimate,std_error,flag");
    assert_eq!(lines[1], "fe,2005,0.0,0.0,base");
    assert!(lines[2..].iter().all(|l| l.starts_with("fe,2")));
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let output = run_cli(&["report", "--config", "/nonexistent/run.json"]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("config"), "{}", stderr(&output));
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"keywords_kk": 10}"#).unwrap();
    let output = run_cli(&["report", "--config", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("keywords_kk"), "{}", stderr(&output));
}

#[test]
fn separable_count_outcome_exits_with_the_non_convergence_code() {
    let dir = tempdir().unwrap();
    // within each unit the positive outcome coincides exactly with x = 1,
    // so the conditional likelihood increases in beta without bound
    let mut panel = String::from("unit,year,n_dp,staff_costs,travel_costs,x\n");
    for unit in ["A", "B", "C"] {
        panel.push_str(&format!("{unit},2005,0,1.0,1.0,0\n"));
        panel.push_str(&format!("{unit},2006,5,1.0,1.0,1\n"));
    }
    fs::write(dir.path().join("panel.csv"), panel).unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{
            "panel": "panel.csv",
            "fep_dependent": "n_dp",
            "fep_regressors": ["x"],
            "fep_time_dummies": false,
            "sections": ["fit_fep"]
        }"#,
    )
    .unwrap();

    let out = dir.path().join("out");
    let output = run_cli(&[
        "report",
        "--config",
        dir.path().join("run.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2, "stderr: {}", stderr(&output));
    assert!(
        stderr(&output).contains("did not converge"),
        "{}",
        stderr(&output)
    );
    assert_eq!(dir_listing(&out), Vec::<String>::new());
}

#[test]
fn failed_report_leaves_no_partial_outputs() {
    let dir = tempdir().unwrap();
    copy_fixtures(dir.path());
    // empty the second corpus so the keywords stage fails after the fits
    let corpus_b = dir.path().join("corpus_b");
    fs::remove_dir_all(&corpus_b).unwrap();
    fs::create_dir_all(&corpus_b).unwrap();

    let out = dir.path().join("out");
    let output = run_cli(&[
        "report",
        "--config",
        dir.path().join("config.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1, "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("corpus"), "{}", stderr(&output));
    assert_eq!(dir_listing(&out), Vec::<String>::new());
}

#[test]
fn config_hash_tracks_fields_not_formatting() {
    let base = tempdir().unwrap();
    copy_fixtures(base.path());
    let read_hash = |config: &str, out: &str| -> String {
        let out_dir = base.path().join(out);
        let output = run_cli(&[
            "report",
            "--config",
            base.path().join(config).to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--fixed-clock",
        ]);
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap())
                .unwrap();
        report["metadata"]["config_hash"].as_str().unwrap().to_string()
    };

    let original = read_hash("minimal_config.json", "out1");

    // identical fields, different formatting and key order: same hash
    let text = fs::read_to_string(base.path().join("minimal_config.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut reordered = String::from("{");
    let object = parsed.as_object().unwrap();
    for (i, key) in object.keys().rev().enumerate() {
        if i > 0 {
            reordered.push(',');
        }
        reordered.push_str(&format!(
            "\n    {}: {}",
            serde_json::to_string(key).unwrap(),
            object[key]
        ));
    }
    reordered.push_str("\n}\n");
    fs::write(base.path().join("reformatted.json"), reordered).unwrap();
    assert_eq!(read_hash("reformatted.json", "out2"), original);

    // one field changed: different hash
    let mut changed = parsed.clone();
    changed["fe_regressors"] = serde_json::json!(["staff_costs"]);
    fs::write(
        base.path().join("changed.json"),
        serde_json::to_string(&changed).unwrap(),
    )
    .unwrap();
    assert_ne!(read_hash("changed.json", "out3"), original);
}

#[test]
fn csv_summaries_are_key_value_lines() {
    let out = tempdir().unwrap();
    let output = run_cli(&[
        "mosaic",
        "--config",
        &fixture_path("config.json"),
        "--out",
        out.path().to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.lines().any(|l| l == "total,65"), "{text}");
}

#[test]
fn network_subcommand_honors_the_configured_formats() {
    let dir = tempdir().unwrap();
    copy_fixtures(dir.path());
    let config = dir.path().join("net.json");
    fs::write(
        &config,
        r#"{"publications": "publications.csv", "network_formats": ["graphml"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = run_cli(&[
        "network",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    assert_eq!(dir_listing(&out), ["network.graphml"]);
}

#[test]
fn keywords_overlap_matches_the_engineered_corpora() {
    let out = tempdir().unwrap();
    let output = run_cli(&[
        "keywords",
        "--config",
        &fixture_path("config.json"),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(summary["overlap"], 0.5);
    let csv_text = fs::read_to_string(out.path().join("keywords.csv")).unwrap();
    assert_eq!(csv_text.lines().count(), 21, "header plus 10 rows per corpus");
}
