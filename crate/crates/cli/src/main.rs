//! `crcperf` — panel-econometric performance analysis for research centers.
//!
//! Every subcommand reads one flat JSON config file (see `--help` for the
//! key list), writes its artifacts into the output directory, and prints a
//! short machine-readable summary to stdout. Exit codes: 0 success, 1 input
//! or validation error, 2 estimation non-convergence, 3 internal error.

mod config;
mod error;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use config::{load_config, RunConfig};
use error::CliError;
use report::{
    emit_year_effect_series, keywords_csv, lagged_model, load_corpus, load_panel, load_phd,
    load_publications, load_staff, load_stopwords, run_report, stage_fit_fe, stage_fit_fep,
    stage_indicators, stage_keywords, stage_mosaic, stage_network, to_json_bytes,
    year_effects_csv, OutputWriter, YearEffectRow,
};

const CONFIG_KEYS_HELP: &str = "\
Config file keys (one flat JSON object; relative paths resolve against the
config file's directory):

  Inputs:
    panel                      panel CSV of unit-year observations
    publications               publication CSV (citations, authors, JEL codes)
    staff                      staff CSV (unit-year FTE records)
    phd                        doctoral-cohort CSV
    corpus_a, corpus_b         directories of .txt documents
    stopwords                  stop-word list, one per line (default: bundled)

  Panel column mapping:
    panel_unit_column          default \"unit\"
    panel_year_column          default \"year\"
    panel_ndp_column           default \"n_dp\"
    panel_staff_costs_column   default \"staff_costs\"
    panel_travel_costs_column  default \"travel_costs\"

  Models:
    fe_dependent               dependent column of the linear within model
    fe_regressors              regressor columns (array)
    fe_base_year               base year for dummies (default: earliest)
    fe_time_dummies            default true
    fe_lags                    lag the regressors in `fit-fe` (default false)
    fep_dependent              dependent column of the count model
    fep_regressors             regressor columns (array)
    fep_base_year              base year for dummies (default: earliest)
    fep_time_dummies           default true
    fep_lags                   lag the regressors in `fit-fep` (default false)
    lag_order                  calendar-year lag distance (default 1)
    log_costs                  log cost columns before fitting (default false)

  Outputs and analysis:
    out_dir                    output directory (overridden by --out)
    sections                   report sections (default: all eight of
                               fit_fe, fit_fe_lags, fit_fep, fit_fep_lags,
                               indicators, network, keywords, mosaic)
    network_formats            any of dot, graphml, json (default: all)
    keywords_k                 keywords per corpus (default 15)
    indicators_unit            unit id for indicator numerators (default: all)
    total_costs                efficiency denominator (default: panel cost sum)
    staff_measure              fte_sum (default) or head_count
    ra_reading                 per_publication_average (default) or total
";

#[derive(Parser)]
#[command(
    name = "crcperf",
    version,
    about = "Panel-econometric performance analysis for research centers",
    after_long_help = CONFIG_KEYS_HELP
)]
struct Cli {
    /// Run configuration, a flat JSON file (see long --help for the keys).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's out_dir (default: ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Format of the stdout summary.
    #[arg(long, global = true, value_enum, default_value_t = SummaryFormat::Json)]
    format: SummaryFormat,

    /// Seed for fixture generation only; accepted and ignored by the
    /// analysis subcommands, which are deterministic by construction.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Freeze the report timestamp so repeated runs are byte-identical.
    #[arg(long, global = true)]
    fixed_clock: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SummaryFormat {
    Json,
    Csv,
}

impl std::fmt::Display for SummaryFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SummaryFormat::Json => "json",
            SummaryFormat::Csv => "csv",
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate every input the config names, writing nothing.
    IngestCheck,
    /// Fit the linear within model and write fit_fe.json (+ year_effects.csv).
    FitFe,
    /// Fit the conditional count model and write fit_fep.json (+ year_effects.csv).
    FitFep,
    /// Compute the indicator table and write indicators.json.
    Indicators,
    /// Build the publication–subject-code network and write network.<format>.
    Network,
    /// Extract corpus keywords and write keywords.csv.
    Keywords,
    /// Lay out the gender × location × sector mosaic and write mosaic.json.
    Mosaic,
    /// Run every configured section and write report.json plus all artifacts.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
    let (config, config_hash) = load_config(config_path)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match cli.command {
        Command::IngestCheck => cmd_ingest_check(&config, cli.format),
        Command::FitFe => cmd_fit_fe(&config, &out_dir, cli.format),
        Command::FitFep => cmd_fit_fep(&config, &out_dir, cli.format),
        Command::Indicators => cmd_indicators(&config, &out_dir, cli.format),
        Command::Network => cmd_network(&config, &out_dir, cli.format),
        Command::Keywords => cmd_keywords(&config, &out_dir, cli.format),
        Command::Mosaic => cmd_mosaic(&config, &out_dir, cli.format),
        Command::Report => cmd_report(&config, &config_hash, &out_dir, cli.format, cli.fixed_clock),
    }
}

// ---------------------------------------------------------------------------
// stdout summaries
// ---------------------------------------------------------------------------

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn print_summary(format: SummaryFormat, pairs: &[(String, Value)]) {
    match format {
        SummaryFormat::Json => {
            let map: serde_json::Map<String, Value> = pairs.iter().cloned().collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&Value::Object(map)).expect("summary serializes")
            );
        }
        SummaryFormat::Csv => {
            for (key, value) in pairs {
                let rendered = match value {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                println!("{},{}", csv_escape(key), csv_escape(&rendered));
            }
        }
    }
}

fn path_list(paths: &[PathBuf]) -> Value {
    Value::Array(
        paths
            .iter()
            .map(|p| Value::String(p.display().to_string()))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn cmd_ingest_check(config: &RunConfig, format: SummaryFormat) -> Result<(), CliError> {
    let mut pairs: Vec<(String, Value)> = Vec::new();

    if config.panel.is_some() {
        let loaded = load_panel(config)?;
        let years = loaded.panel.years();
        pairs.push(("panel_rows".into(), json!(loaded.panel.observations().len())));
        pairs.push(("panel_units".into(), json!(loaded.panel.units().len())));
        pairs.push((
            "panel_years".into(),
            json!(format!(
                "{}-{}",
                years.first().copied().unwrap_or_default(),
                years.last().copied().unwrap_or_default()
            )),
        ));
        // when a model is configured, check it against the panel as well
        if config.fe_dependent.is_some() {
            let spec = config.fe_spec()?;
            spec.validate(&loaded.panel)
                .map_err(|e| CliError::input("ingest/panel", e))?;
            pairs.push(("fe_spec".into(), json!("ok")));
        }
        if config.fep_dependent.is_some() {
            let spec = config.fep_spec()?;
            spec.validate(&loaded.panel)
                .map_err(|e| CliError::input("ingest/panel", e))?;
            pairs.push(("fep_spec".into(), json!("ok")));
        }
    }
    if config.publications.is_some() {
        pairs.push(("publications".into(), json!(load_publications(config)?.len())));
    }
    if config.staff.is_some() {
        pairs.push(("staff_rows".into(), json!(load_staff(config)?.len())));
    }
    if config.phd.is_some() {
        pairs.push(("phd_rows".into(), json!(load_phd(config)?.len())));
    }
    if let Some(dir) = &config.corpus_a {
        pairs.push(("corpus_a_docs".into(), json!(load_corpus("corpus_a", dir)?.len())));
    }
    if let Some(dir) = &config.corpus_b {
        pairs.push(("corpus_b_docs".into(), json!(load_corpus("corpus_b", dir)?.len())));
    }
    if config.stopwords.is_some() {
        pairs.push(("stopwords".into(), json!(load_stopwords(config)?.len())));
    }

    if pairs.is_empty() {
        return Err(CliError::Config(
            "config names no inputs to check".into(),
        ));
    }
    pairs.push(("status".into(), json!("ok")));
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_fit_fe(config: &RunConfig, out_dir: &Path, format: SummaryFormat) -> Result<(), CliError> {
    let loaded = load_panel(config)?;
    let base_spec = config.fe_spec()?;
    let lags = config.fe_lags.unwrap_or(false);
    let (panel, spec, key, model_tag) = if lags {
        let (panel, spec) = lagged_model(&loaded.panel, &base_spec, config.lag_order())?;
        (panel, spec, "fit_fe_lags", "fe_lags")
    } else {
        (loaded.panel.clone(), base_spec, "fit_fe", "fe")
    };
    let fit = stage_fit_fe(if lags { "fit-fe-lags" } else { "fit-fe" }, &panel, &spec)?;

    let mut writer = OutputWriter::new(out_dir)?;
    let written = (|| -> Result<(), CliError> {
        writer.write("fit_fe.json", &to_json_bytes(&json!({ key: &fit }))?)?;
        if fit.base_year.is_some() {
            let rows = emit_year_effect_series(&fit, model_tag)?;
            writer.write("year_effects.csv", &year_effects_csv(&rows)?)?;
        }
        Ok(())
    })();
    if let Err(error) = written {
        writer.discard();
        return Err(error);
    }

    let mut pairs: Vec<(String, Value)> = vec![
        ("model".into(), json!(model_tag)),
        ("n_obs".into(), json!(fit.n_obs)),
        ("n_units".into(), json!(fit.n_units)),
        ("r2_within".into(), json!(fit.r2_within)),
        ("aic".into(), json!(fit.aic)),
        ("bic".into(), json!(fit.bic)),
        ("omitted".into(), json!(fit.omitted)),
        ("outputs".into(), path_list(&writer.into_paths())),
    ];
    for (name, value) in &fit.coefficients {
        pairs.push((format!("coef.{name}"), json!(value)));
        pairs.push((format!("se.{name}"), json!(fit.std_errors[name])));
    }
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_fit_fep(config: &RunConfig, out_dir: &Path, format: SummaryFormat) -> Result<(), CliError> {
    let loaded = load_panel(config)?;
    let base_spec = config.fep_spec()?;
    let lags = config.fep_lags.unwrap_or(false);
    let (panel, spec, key, model_tag) = if lags {
        let (panel, spec) = lagged_model(&loaded.panel, &base_spec, config.lag_order())?;
        (panel, spec, "fit_fep_lags", "fep_lags")
    } else {
        (loaded.panel.clone(), base_spec, "fit_fep", "fep")
    };
    let fit = stage_fit_fep(if lags { "fit-fep-lags" } else { "fit-fep" }, &panel, &spec)?;

    let mut writer = OutputWriter::new(out_dir)?;
    let written = (|| -> Result<(), CliError> {
        writer.write("fit_fep.json", &to_json_bytes(&json!({ key: &fit }))?)?;
        if fit.base_year.is_some() {
            let rows = emit_year_effect_series(&fit, model_tag)?;
            writer.write("year_effects.csv", &year_effects_csv(&rows)?)?;
        }
        Ok(())
    })();
    if let Err(error) = written {
        writer.discard();
        return Err(error);
    }

    let mut pairs: Vec<(String, Value)> = vec![
        ("model".into(), json!(model_tag)),
        ("n_obs".into(), json!(fit.n_obs)),
        ("n_groups".into(), json!(fit.n_groups)),
        ("loglik".into(), json!(fit.loglik)),
        ("aic".into(), json!(fit.aic)),
        ("bic".into(), json!(fit.bic)),
        ("converged".into(), json!(fit.converged)),
        ("iterations".into(), json!(fit.iterations)),
        ("omitted".into(), json!(fit.omitted)),
        ("outputs".into(), path_list(&writer.into_paths())),
    ];
    for (name, value) in &fit.coefficients {
        pairs.push((format!("coef.{name}"), json!(value)));
        pairs.push((format!("se.{name}"), json!(fit.std_errors[name])));
    }
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_indicators(
    config: &RunConfig,
    out_dir: &Path,
    format: SummaryFormat,
) -> Result<(), CliError> {
    let indicators = stage_indicators(config, None)?;
    let mut writer = OutputWriter::new(out_dir)?;
    if let Err(error) = writer.write("indicators.json", &to_json_bytes(&indicators)?) {
        writer.discard();
        return Err(error);
    }

    let table = serde_json::to_value(&indicators)
        .map_err(|e| CliError::internal("indicators", format!("serialization failed: {e}")))?;
    let mut pairs: Vec<(String, Value)> = table
        .as_object()
        .expect("indicator report serializes to an object")
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    pairs.push(("outputs".into(), path_list(&writer.into_paths())));
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_network(config: &RunConfig, out_dir: &Path, format: SummaryFormat) -> Result<(), CliError> {
    let (graph, summary) = stage_network(config)?;
    let mut writer = OutputWriter::new(out_dir)?;
    let written = (|| -> Result<(), CliError> {
        for fmt in config.network_format_list()? {
            let name = format!("network.{fmt}");
            writer.write(&name, crcperf_core::descriptive::export_network(&graph, fmt).as_bytes())?;
        }
        Ok(())
    })();
    if let Err(error) = written {
        writer.discard();
        return Err(error);
    }

    let pairs: Vec<(String, Value)> = vec![
        ("n_dp".into(), json!(summary.n_dp)),
        ("n_jel".into(), json!(summary.n_jel)),
        ("n_edges".into(), json!(summary.n_edges)),
        ("outputs".into(), path_list(&writer.into_paths())),
    ];
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_keywords(config: &RunConfig, out_dir: &Path, format: SummaryFormat) -> Result<(), CliError> {
    let keywords = stage_keywords(config)?;
    let mut writer = OutputWriter::new(out_dir)?;
    if let Err(error) = writer.write("keywords.csv", &keywords_csv(&keywords)?) {
        writer.discard();
        return Err(error);
    }

    let mut pairs: Vec<(String, Value)> = vec![
        ("k".into(), json!(keywords.k)),
        ("corpus_a_terms".into(), json!(keywords.corpus_a.len())),
    ];
    if let Some(corpus_b) = &keywords.corpus_b {
        pairs.push(("corpus_b_terms".into(), json!(corpus_b.len())));
    }
    if let Some(overlap) = keywords.overlap {
        pairs.push(("overlap".into(), json!(overlap)));
    }
    pairs.push(("outputs".into(), path_list(&writer.into_paths())));
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_mosaic(config: &RunConfig, out_dir: &Path, format: SummaryFormat) -> Result<(), CliError> {
    let mosaic = stage_mosaic(config)?;
    let mut writer = OutputWriter::new(out_dir)?;
    if let Err(error) = writer.write("mosaic.json", &to_json_bytes(&mosaic)?) {
        writer.discard();
        return Err(error);
    }

    let pairs: Vec<(String, Value)> = vec![
        ("total".into(), json!(mosaic.total)),
        ("tiles".into(), json!(mosaic.rects.len())),
        ("outputs".into(), path_list(&writer.into_paths())),
    ];
    print_summary(format, &pairs);
    Ok(())
}

fn cmd_report(
    config: &RunConfig,
    config_hash: &str,
    out_dir: &Path,
    format: SummaryFormat,
    fixed_clock: bool,
) -> Result<(), CliError> {
    let (document, paths) = run_report(config, config_hash, out_dir, fixed_clock)?;

    let mut sections: Vec<&str> = Vec::new();
    if document.fit_fe.is_some() {
        sections.push("fit_fe");
    }
    if document.fit_fe_lags.is_some() {
        sections.push("fit_fe_lags");
    }
    if document.fit_fep.is_some() {
        sections.push("fit_fep");
    }
    if document.fit_fep_lags.is_some() {
        sections.push("fit_fep_lags");
    }
    if document.indicators.is_some() {
        sections.push("indicators");
    }
    if document.network.is_some() {
        sections.push("network");
    }
    if document.keywords.is_some() {
        sections.push("keywords");
    }
    if document.mosaic.is_some() {
        sections.push("mosaic");
    }

    let year_rows = document
        .year_effects
        .as_deref()
        .map(<[YearEffectRow]>::len)
        .unwrap_or(0);
    let pairs: Vec<(String, Value)> = vec![
        ("timestamp".into(), json!(document.metadata.timestamp)),
        ("config_hash".into(), json!(document.metadata.config_hash)),
        ("sections".into(), json!(sections)),
        ("year_effect_rows".into(), json!(year_rows)),
        ("outputs".into(), path_list(&paths)),
    ];
    print_summary(format, &pairs);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escaping_quotes_only_when_needed() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn cli_parses_global_flags_anywhere() {
        let cli = Cli::try_parse_from([
            "crcperf",
            "report",
            "--config",
            "run.json",
            "--fixed-clock",
            "--seed",
            "7",
            "--format",
            "csv",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Report));
        assert!(cli.fixed_clock);
        assert_eq!(cli.seed, Some(7));
        assert_eq!(cli.format, SummaryFormat::Csv);
    }

}
