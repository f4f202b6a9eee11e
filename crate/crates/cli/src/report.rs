//! Pipeline stages and report assembly.
//!
//! Every subcommand is a thin wrapper over the stage functions here; the
//! `report` subcommand runs the requested set in dependency order (ingest →
//! transform → estimate/describe → serialize) and writes one JSON document
//! plus the per-section artifact files. All outputs are deterministic for a
//! given config and input set: maps are ordered, corpora are read in file
//! name order, and the only wall-clock dependence (the metadata timestamp)
//! is frozen by `--fixed-clock`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crcperf_core::descriptive::{
    build_jel_network, bundled_stopwords, export_network, extract_keywords, keyword_overlap,
    mosaic_layout, parse_stopwords, BipartiteGraph, ContingencyTable3, DescriptiveError,
    MosaicRect, GENDERS, LOCATIONS, SECTORS,
};
use crcperf_core::indicators::{
    indicator_report, ingest_phd, ingest_publications, ingest_staff, IndicatorReport, PhdRecord,
    PublicationRecord, StaffRecord,
};
use crcperf_core::linear::{fit_fe, year_dummy_name, FitResult, ModelSpec};
use crcperf_core::panel::{add_lags, ingest_panel, lag_column_name, log_transform, Panel};
use crcperf_core::poisson::{fit_fep, FepFit};

use crate::config::RunConfig;
use crate::error::CliError;

/// Timestamp written under `--fixed-clock`.
pub const FIXED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

/// The eight report sections a config may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    FitFe,
    FitFeLags,
    FitFep,
    FitFepLags,
    Indicators,
    Network,
    Keywords,
    Mosaic,
}

impl Section {
    pub const ALL: [Section; 8] = [
        Section::FitFe,
        Section::FitFeLags,
        Section::FitFep,
        Section::FitFepLags,
        Section::Indicators,
        Section::Network,
        Section::Keywords,
        Section::Mosaic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Section::FitFe => "fit_fe",
            Section::FitFeLags => "fit_fe_lags",
            Section::FitFep => "fit_fep",
            Section::FitFepLags => "fit_fep_lags",
            Section::Indicators => "indicators",
            Section::Network => "network",
            Section::Keywords => "keywords",
            Section::Mosaic => "mosaic",
        }
    }
}

impl FromStr for Section {
    type Err = String;
    fn from_str(s: &str) -> Result<Section, String> {
        Section::ALL
            .iter()
            .copied()
            .find(|section| section.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Section::ALL.iter().map(|s| s.name()).collect();
                format!("sections: unknown section {s:?} (expected one of {known:?})")
            })
    }
}

/// Returns the current time as RFC 3339, or the fixed epoch in test mode.
pub fn timestamp(fixed_clock: bool) -> String {
    if fixed_clock {
        return FIXED_TIMESTAMP.to_string();
    }
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| FIXED_TIMESTAMP.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub timestamp: String,
    pub config_hash: String,
    pub tool_version: String,
}

/// Row status in the year-effect series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearEffectFlag {
    /// The base year: estimate fixed at zero by normalization.
    Base,
    /// Dropped for collinearity; no estimate exists.
    Omitted,
    /// A freely estimated dummy.
    Estimated,
}

/// One point of the year-dummy coefficient series (plot data). `estimate`
/// and `std_error` are empty exactly when the year was omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearEffectRow {
    pub model: String,
    pub year: i32,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub flag: YearEffectFlag,
}

/// The slice of a fitted model the year-effect series needs; both model
/// families convert into it.
pub struct YearDummySource<'a> {
    pub terms: &'a [String],
    pub coefficients: &'a BTreeMap<String, f64>,
    pub std_errors: &'a BTreeMap<String, f64>,
    pub omitted: &'a [String],
    pub base_year: Option<i32>,
}

impl<'a> From<&'a FitResult> for YearDummySource<'a> {
    fn from(fit: &'a FitResult) -> YearDummySource<'a> {
        YearDummySource {
            terms: &fit.terms,
            coefficients: &fit.coefficients,
            std_errors: &fit.std_errors,
            omitted: &fit.omitted,
            base_year: fit.base_year,
        }
    }
}

impl<'a> From<&'a FepFit> for YearDummySource<'a> {
    fn from(fit: &'a FepFit) -> YearDummySource<'a> {
        YearDummySource {
            terms: &fit.terms,
            coefficients: &fit.coefficients,
            std_errors: &fit.std_errors,
            omitted: &fit.omitted,
            base_year: fit.base_year,
        }
    }
}

/// Expands a fitted model's year dummies into ordered rows: the base year
/// carries estimate 0 and flag `base`, collinearity-omitted years carry no
/// estimate and flag `omitted`, and the rest carry their estimates and
/// standard errors, all in ascending year order.
pub fn emit_year_effect_series<'a>(
    fit: impl Into<YearDummySource<'a>>,
    model: &str,
) -> Result<Vec<YearEffectRow>, CliError> {
    let source = fit.into();
    let base_year = source.base_year.ok_or_else(|| {
        CliError::Config(format!(
            "model {model}: the fit was estimated without year dummies, so there is no year-effect series"
        ))
    })?;
    let mut years = BTreeSet::from([base_year]);
    for term in source.terms {
        if let Some(year) = term.strip_prefix("year_").and_then(|y| y.parse::<i32>().ok()) {
            years.insert(year);
        }
    }
    let rows = years
        .into_iter()
        .map(|year| {
            if year == base_year {
                return YearEffectRow {
                    model: model.to_string(),
                    year,
                    estimate: Some(0.0),
                    std_error: Some(0.0),
                    flag: YearEffectFlag::Base,
                };
            }
            let name = year_dummy_name(year);
            if source.omitted.contains(&name) {
                YearEffectRow {
                    model: model.to_string(),
                    year,
                    estimate: None,
                    std_error: None,
                    flag: YearEffectFlag::Omitted,
                }
            } else {
                YearEffectRow {
                    model: model.to_string(),
                    year,
                    estimate: source.coefficients.get(&name).copied(),
                    std_error: source.std_errors.get(&name).copied(),
                    flag: YearEffectFlag::Estimated,
                }
            }
        })
        .collect();
    Ok(rows)
}

/// Bipartite-network section: node and edge counts plus per-code statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n_dp: usize,
    pub n_jel: usize,
    pub n_edges: usize,
    pub jel_degree: BTreeMap<String, usize>,
    pub jel_share: BTreeMap<String, f64>,
}

impl NetworkSummary {
    pub fn from_graph(graph: &BipartiteGraph) -> NetworkSummary {
        NetworkSummary {
            n_dp: graph.dp_nodes().len(),
            n_jel: graph.jel_nodes().len(),
            n_edges: graph.edge_count(),
            jel_degree: graph
                .jel_degree()
                .iter()
                .map(|(code, &d)| (code.to_string(), d))
                .collect(),
            jel_share: graph
                .jel_share()
                .iter()
                .map(|(code, &s)| (code.to_string(), s))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub rank: usize,
    pub term: String,
    pub frequency: u64,
}

/// Keyword section: the ranked lists and, when two corpora were configured,
/// their top-k overlap ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordReport {
    pub k: usize,
    pub corpus_a: Vec<KeywordEntry>,
    pub corpus_b: Option<Vec<KeywordEntry>>,
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicCell {
    pub gender: String,
    pub location: String,
    pub sector: String,
    pub count: u64,
}

/// Mosaic section: the contingency counts and the unit-square tiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicReport {
    pub total: u64,
    pub cells: Vec<MosaicCell>,
    pub rects: Vec<MosaicRect>,
}

/// The assembled report. Sections the config did not request are absent
/// from the serialized document; `year_effects` accompanies whichever fit
/// sections carried year dummies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub metadata: ReportMetadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_fe: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_fe_lags: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_fep: Option<FepFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_fep_lags: Option<FepFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year_effects: Option<Vec<YearEffectRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indicators: Option<IndicatorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keywords: Option<KeywordReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mosaic: Option<MosaicReport>,
}

// ---------------------------------------------------------------------------
// input loading
// ---------------------------------------------------------------------------

/// The panel after configured transforms, plus the nominal cost total taken
/// before any log transform (used as the default efficiency denominator).
pub struct LoadedPanel {
    pub panel: Panel,
    pub nominal_cost_total: f64,
}

pub fn load_panel(config: &RunConfig) -> Result<LoadedPanel, CliError> {
    let path = config
        .panel
        .as_ref()
        .ok_or_else(|| CliError::Config("panel is required for this command".into()))?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::input("ingest/panel", format!("{}: {e}", path.display())))?;
    let panel = ingest_panel(file, &config.schema()).map_err(|e| CliError::input("ingest/panel", e))?;
    let nominal_cost_total = panel
        .observations()
        .iter()
        .map(|o| o.staff_costs + o.travel_costs)
        .sum();
    let panel = if config.log_costs.unwrap_or(false) {
        log_transform(
            &panel,
            &["staff_costs".to_string(), "travel_costs".to_string()],
        )
        .map_err(|e| CliError::input("ingest/panel", e))?
    } else {
        panel
    };
    Ok(LoadedPanel {
        panel,
        nominal_cost_total,
    })
}

pub fn load_publications(config: &RunConfig) -> Result<Vec<PublicationRecord>, CliError> {
    let path = config
        .publications
        .as_ref()
        .ok_or_else(|| CliError::Config("publications is required for this command".into()))?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::input("ingest/publications", format!("{}: {e}", path.display())))?;
    ingest_publications(file).map_err(|e| CliError::input("ingest/publications", e))
}

pub fn load_staff(config: &RunConfig) -> Result<Vec<StaffRecord>, CliError> {
    let path = config
        .staff
        .as_ref()
        .ok_or_else(|| CliError::Config("staff is required for this command".into()))?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::input("ingest/staff", format!("{}: {e}", path.display())))?;
    ingest_staff(file).map_err(|e| CliError::input("ingest/staff", e))
}

pub fn load_phd(config: &RunConfig) -> Result<Vec<PhdRecord>, CliError> {
    let path = config
        .phd
        .as_ref()
        .ok_or_else(|| CliError::Config("phd is required for this command".into()))?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::input("ingest/phd", format!("{}: {e}", path.display())))?;
    ingest_phd(file).map_err(|e| CliError::input("ingest/phd", e))
}

/// Reads every `.txt` file in a corpus directory, in file-name order, one
/// document per file.
pub fn load_corpus(key: &'static str, dir: &Path) -> Result<Vec<String>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::input("ingest/corpus", format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::input(
            "ingest/corpus",
            format!("{key}: no .txt documents in {}", dir.display()),
        ));
    }
    paths
        .iter()
        .map(|p| {
            fs::read_to_string(p)
                .map_err(|e| CliError::input("ingest/corpus", format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn load_stopwords(config: &RunConfig) -> Result<BTreeSet<String>, CliError> {
    match &config.stopwords {
        None => Ok(bundled_stopwords()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::input("ingest/stopwords", format!("{}: {e}", path.display()))
            })?;
            Ok(parse_stopwords(&text))
        }
    }
}

// ---------------------------------------------------------------------------
// stages
// ---------------------------------------------------------------------------

/// Derives the lagged model: the panel gains `<role>_lag<order>` columns and
/// the spec regresses on the originals plus their lags.
pub fn lagged_model(
    panel: &Panel,
    spec: &ModelSpec,
    order: u32,
) -> Result<(Panel, ModelSpec), CliError> {
    let lagged_panel = add_lags(panel, &spec.regressors, order)
        .map_err(|e| CliError::input("transform/lags", e))?;
    let mut regressors = spec.regressors.clone();
    regressors.extend(
        spec.regressors
            .iter()
            .map(|role| lag_column_name(role, order)),
    );
    let lagged_spec = ModelSpec {
        regressors,
        include_lags: true,
        ..spec.clone()
    };
    Ok((lagged_panel, lagged_spec))
}

pub fn stage_fit_fe(
    stage: &'static str,
    panel: &Panel,
    spec: &ModelSpec,
) -> Result<FitResult, CliError> {
    fit_fe(panel, spec).map_err(|e| CliError::input(stage, e))
}

/// Runs the count fit; a fit that stops without converging is a
/// non-convergence error (exit code 2), with the optimizer's diagnosis
/// attached when it has one.
pub fn stage_fit_fep(
    stage: &'static str,
    panel: &Panel,
    spec: &ModelSpec,
) -> Result<FepFit, CliError> {
    let fit = fit_fep(panel, spec).map_err(|e| CliError::input(stage, e))?;
    if !fit.converged {
        let mut message = format!("did not converge after {} iterations", fit.iterations);
        if let Some(note) = &fit.divergence_note {
            message.push_str(": ");
            message.push_str(note);
        }
        return Err(CliError::NonConvergence { stage, message });
    }
    Ok(fit)
}

pub fn stage_indicators(
    config: &RunConfig,
    loaded_panel: Option<&LoadedPanel>,
) -> Result<IndicatorReport, CliError> {
    let publications = load_publications(config)?;
    let staff = load_staff(config)?;
    let phds = load_phd(config)?;
    let total_costs = match config.total_costs {
        Some(costs) => costs,
        None => match loaded_panel {
            Some(loaded) => loaded.nominal_cost_total,
            None => load_panel(config)
                .map_err(|_| {
                    CliError::Config(
                        "total_costs is required for indicators when no panel is configured"
                            .into(),
                    )
                })?
                .nominal_cost_total,
        },
    };
    let unit_pubs: Vec<PublicationRecord> = match &config.indicators_unit {
        None => publications.clone(),
        Some(unit) => {
            let subset: Vec<PublicationRecord> = publications
                .iter()
                .filter(|p| &p.unit_id == unit)
                .cloned()
                .collect();
            if subset.is_empty() {
                return Err(CliError::input(
                    "indicators",
                    format!("unit {unit:?} has no publications"),
                ));
            }
            subset
        }
    };
    indicator_report(
        &unit_pubs,
        &publications,
        &staff,
        &phds,
        total_costs,
        config.indicator_options(),
    )
    .map_err(|e| CliError::input("indicators", e))
}

pub fn stage_network(config: &RunConfig) -> Result<(BipartiteGraph, NetworkSummary), CliError> {
    let publications = load_publications(config)?;
    let graph = build_jel_network(&publications);
    let summary = NetworkSummary::from_graph(&graph);
    Ok((graph, summary))
}

pub fn stage_keywords(config: &RunConfig) -> Result<KeywordReport, CliError> {
    let dir_a = config
        .corpus_a
        .as_ref()
        .ok_or_else(|| CliError::Config("corpus_a is required for keywords".into()))?;
    let corpus_a = load_corpus("corpus_a", dir_a)?;
    let stopwords = load_stopwords(config)?;
    let k = config.keywords_k();
    let top_a = extract_keywords(&corpus_a, k, &stopwords);
    let entries = |list: &[(String, u64)]| -> Vec<KeywordEntry> {
        list.iter()
            .enumerate()
            .map(|(i, (term, frequency))| KeywordEntry {
                rank: i + 1,
                term: term.clone(),
                frequency: *frequency,
            })
            .collect()
    };
    let (corpus_b, overlap) = match &config.corpus_b {
        None => (None, None),
        Some(dir_b) => {
            let corpus_b = load_corpus("corpus_b", dir_b)?;
            let top_b = extract_keywords(&corpus_b, k, &stopwords);
            let overlap = keyword_overlap(&top_a, &top_b).map_err(|e| match e {
                DescriptiveError::KeywordListMismatch { .. } => CliError::Config(format!(
                    "keywords: {e} (both corpora must support {k} keywords)"
                )),
                other => CliError::input("keywords", other),
            })?;
            (Some(entries(&top_b)), Some(overlap))
        }
    };
    Ok(KeywordReport {
        k,
        corpus_a: entries(&top_a),
        corpus_b,
        overlap,
    })
}

pub fn stage_mosaic(config: &RunConfig) -> Result<MosaicReport, CliError> {
    let phds = load_phd(config)?;
    let table = ContingencyTable3::from_phd_records(&phds);
    let rects = mosaic_layout(&table).map_err(|e| CliError::input("mosaic", e))?;
    let mut cells = Vec::new();
    for gender in GENDERS {
        for location in LOCATIONS {
            for sector in SECTORS {
                cells.push(MosaicCell {
                    gender: gender.to_string(),
                    location: location.to_string(),
                    sector: sector.to_string(),
                    count: table.count(gender, location, sector),
                });
            }
        }
    }
    Ok(MosaicReport {
        total: table.total(),
        cells,
        rects,
    })
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal("write", format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn year_effects_csv(rows: &[YearEffectRow]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::internal("write", format!("year_effects.csv: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::internal("write", format!("year_effects.csv: {e}")))
}

pub fn keywords_csv(report: &KeywordReport) -> Result<Vec<u8>, CliError> {
    #[derive(Serialize)]
    struct Row<'a> {
        corpus: &'a str,
        rank: usize,
        term: &'a str,
        frequency: u64,
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut emit = |corpus: &str, entries: &[KeywordEntry]| -> Result<(), CliError> {
        for entry in entries {
            writer
                .serialize(Row {
                    corpus,
                    rank: entry.rank,
                    term: &entry.term,
                    frequency: entry.frequency,
                })
                .map_err(|e| CliError::internal("write", format!("keywords.csv: {e}")))?;
        }
        Ok(())
    };
    emit("a", &report.corpus_a)?;
    if let Some(corpus_b) = &report.corpus_b {
        emit("b", corpus_b)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::internal("write", format!("keywords.csv: {e}")))
}

/// Collects files under one output directory and can undo a partial run:
/// on failure every file written so far is removed.
pub struct OutputWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<OutputWriter, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::internal("write", format!("{}: {e}", dir.display())))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::internal("write", format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Removes everything written so far (failure cleanup).
    pub fn discard(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }

    pub fn into_paths(self) -> Vec<PathBuf> {
        self.written
    }
}

// ---------------------------------------------------------------------------
// the full pipeline
// ---------------------------------------------------------------------------

/// Runs the configured sections and writes `report.json` plus the
/// per-section artifacts into `out_dir`. Returns the document and the list
/// of files written; on any failure nothing is left behind.
pub fn run_report(
    config: &RunConfig,
    config_hash: &str,
    out_dir: &Path,
    fixed_clock: bool,
) -> Result<(ReportDocument, Vec<PathBuf>), CliError> {
    let sections = config.sections_set()?;
    let wants_fe = sections.contains(&Section::FitFe) || sections.contains(&Section::FitFeLags);
    let wants_fep = sections.contains(&Section::FitFep) || sections.contains(&Section::FitFepLags);

    let loaded_panel = if wants_fe || wants_fep {
        Some(load_panel(config)?)
    } else {
        None
    };

    let mut document = ReportDocument {
        metadata: ReportMetadata {
            timestamp: timestamp(fixed_clock),
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        fit_fe: None,
        fit_fe_lags: None,
        fit_fep: None,
        fit_fep_lags: None,
        year_effects: None,
        indicators: None,
        network: None,
        keywords: None,
        mosaic: None,
    };
    let mut year_rows: Vec<YearEffectRow> = Vec::new();

    if wants_fe {
        let panel = &loaded_panel.as_ref().expect("panel loaded").panel;
        let spec = config.fe_spec()?;
        if sections.contains(&Section::FitFe) {
            let fit = stage_fit_fe("fit-fe", panel, &spec)?;
            if fit.base_year.is_some() {
                year_rows.extend(emit_year_effect_series(&fit, "fe")?);
            }
            document.fit_fe = Some(fit);
        }
        if sections.contains(&Section::FitFeLags) {
            let (lagged_panel, lagged_spec) = lagged_model(panel, &spec, config.lag_order())?;
            let fit = stage_fit_fe("fit-fe-lags", &lagged_panel, &lagged_spec)?;
            if fit.base_year.is_some() {
                year_rows.extend(emit_year_effect_series(&fit, "fe_lags")?);
            }
            document.fit_fe_lags = Some(fit);
        }
    }

    if wants_fep {
        let panel = &loaded_panel.as_ref().expect("panel loaded").panel;
        let spec = config.fep_spec()?;
        if sections.contains(&Section::FitFep) {
            let fit = stage_fit_fep("fit-fep", panel, &spec)?;
            if fit.base_year.is_some() {
                year_rows.extend(emit_year_effect_series(&fit, "fep")?);
            }
            document.fit_fep = Some(fit);
        }
        if sections.contains(&Section::FitFepLags) {
            let (lagged_panel, lagged_spec) = lagged_model(panel, &spec, config.lag_order())?;
            let fit = stage_fit_fep("fit-fep-lags", &lagged_panel, &lagged_spec)?;
            if fit.base_year.is_some() {
                year_rows.extend(emit_year_effect_series(&fit, "fep_lags")?);
            }
            document.fit_fep_lags = Some(fit);
        }
    }

    if !year_rows.is_empty() {
        document.year_effects = Some(year_rows);
    }

    if sections.contains(&Section::Indicators) {
        document.indicators = Some(stage_indicators(config, loaded_panel.as_ref())?);
    }

    let mut graph = None;
    if sections.contains(&Section::Network) {
        let (g, summary) = stage_network(config)?;
        graph = Some(g);
        document.network = Some(summary);
    }

    if sections.contains(&Section::Keywords) {
        document.keywords = Some(stage_keywords(config)?);
    }

    if sections.contains(&Section::Mosaic) {
        document.mosaic = Some(stage_mosaic(config)?);
    }

    let mut writer = OutputWriter::new(out_dir)?;
    let written = write_outputs(&mut writer, config, &document, graph.as_ref());
    match written {
        Ok(()) => Ok((document, writer.into_paths())),
        Err(error) => {
            writer.discard();
            Err(error)
        }
    }
}

fn write_outputs(
    writer: &mut OutputWriter,
    config: &RunConfig,
    document: &ReportDocument,
    graph: Option<&BipartiteGraph>,
) -> Result<(), CliError> {
    writer.write("report.json", &to_json_bytes(document)?)?;

    if document.fit_fe.is_some() || document.fit_fe_lags.is_some() {
        let mut fits = serde_json::Map::new();
        if let Some(fit) = &document.fit_fe {
            fits.insert("fit_fe".into(), serde_json::to_value(fit).unwrap());
        }
        if let Some(fit) = &document.fit_fe_lags {
            fits.insert("fit_fe_lags".into(), serde_json::to_value(fit).unwrap());
        }
        writer.write("fit_fe.json", &to_json_bytes(&json!(fits))?)?;
    }
    if document.fit_fep.is_some() || document.fit_fep_lags.is_some() {
        let mut fits = serde_json::Map::new();
        if let Some(fit) = &document.fit_fep {
            fits.insert("fit_fep".into(), serde_json::to_value(fit).unwrap());
        }
        if let Some(fit) = &document.fit_fep_lags {
            fits.insert("fit_fep_lags".into(), serde_json::to_value(fit).unwrap());
        }
        writer.write("fit_fep.json", &to_json_bytes(&json!(fits))?)?;
    }
    if let Some(rows) = &document.year_effects {
        writer.write("year_effects.csv", &year_effects_csv(rows)?)?;
    }
    if let Some(indicators) = &document.indicators {
        writer.write("indicators.json", &to_json_bytes(indicators)?)?;
    }
    if let Some(graph) = graph {
        for format in config.network_format_list()? {
            let name = format!("network.{format}");
            writer.write(&name, export_network(graph, format).as_bytes())?;
        }
    }
    if let Some(keywords) = &document.keywords {
        writer.write("keywords.csv", &keywords_csv(keywords)?)?;
    }
    if let Some(mosaic) = &document.mosaic {
        writer.write("mosaic.json", &to_json_bytes(mosaic)?)?;
    }
    Ok(())
}
