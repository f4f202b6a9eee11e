//! Run configuration: one flat JSON object whose values are scalars or
//! arrays of scalars. Unknown keys are rejected so a typo cannot silently
//! drop a setting, and the config hash is taken over the parsed document, so
//! it changes exactly when a field's value changes — reformatting the file
//! or reordering its keys leaves the hash alone.
//!
//! Relative paths are resolved against the directory containing the config
//! file, which keeps fixture bundles relocatable.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crcperf_core::descriptive::NetworkFormat;
use crcperf_core::indicators::{IndicatorOptions, RaCitationReading, StaffMeasure};
use crcperf_core::linear::ModelSpec;
use crcperf_core::panel::CsvSchema;

use crate::error::CliError;
use crate::report::Section;

/// The parsed config document. Every key is optional so that single-purpose
/// runs (say, keywords only) need not describe inputs they never touch;
/// each stage checks for the keys it needs and names the missing one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // --- input paths ---
    /// Panel CSV (unit-year observations).
    pub panel: Option<PathBuf>,
    /// Publication CSV with citation and subject-code columns.
    pub publications: Option<PathBuf>,
    /// Staff CSV (unit-year FTE records).
    pub staff: Option<PathBuf>,
    /// Doctoral-cohort CSV.
    pub phd: Option<PathBuf>,
    /// Directory of `.txt` documents forming the first corpus.
    pub corpus_a: Option<PathBuf>,
    /// Directory of `.txt` documents forming the second corpus.
    pub corpus_b: Option<PathBuf>,
    /// Stop-word list, one word per line; the bundled English list is used
    /// when absent.
    pub stopwords: Option<PathBuf>,

    // --- panel column mapping ---
    pub panel_unit_column: Option<String>,
    pub panel_year_column: Option<String>,
    pub panel_ndp_column: Option<String>,
    pub panel_staff_costs_column: Option<String>,
    pub panel_travel_costs_column: Option<String>,

    // --- model specifications ---
    pub fe_dependent: Option<String>,
    #[serde(default)]
    pub fe_regressors: Vec<String>,
    pub fe_base_year: Option<i32>,
    /// Year dummies for the linear model; defaults to true.
    pub fe_time_dummies: Option<bool>,
    /// Adds lagged regressors to the `fit-fe` subcommand's model.
    pub fe_lags: Option<bool>,
    pub fep_dependent: Option<String>,
    #[serde(default)]
    pub fep_regressors: Vec<String>,
    pub fep_base_year: Option<i32>,
    /// Year dummies for the count model; defaults to true.
    pub fep_time_dummies: Option<bool>,
    /// Adds lagged regressors to the `fit-fep` subcommand's model.
    pub fep_lags: Option<bool>,
    /// Calendar-year lag distance for the lagged model variants; default 1.
    pub lag_order: Option<u32>,
    /// Replace staff and travel costs by their natural logs before fitting.
    pub log_costs: Option<bool>,

    // --- outputs ---
    pub out_dir: Option<PathBuf>,
    /// Formats for the subject-code network export; default all of
    /// `dot`, `graphml`, `json`.
    pub network_formats: Option<Vec<String>>,
    /// Report sections to produce; default is all eight.
    pub sections: Option<Vec<String>>,

    // --- analysis settings ---
    /// Number of keywords to extract per corpus; default 15.
    pub keywords_k: Option<usize>,
    /// Unit whose publications form the indicator numerators; when absent
    /// the whole publication set is treated as the unit.
    pub indicators_unit: Option<String>,
    /// Total costs for the efficiency denominators; when absent they are
    /// summed from the panel's cost columns.
    pub total_costs: Option<f64>,
    /// `fte_sum` (default) or `head_count`.
    pub staff_measure: Option<StaffMeasure>,
    /// `per_publication_average` (default) or `total`.
    pub ra_reading: Option<RaCitationReading>,
}

/// Reads and parses a config file, returning the document together with its
/// hash. The hash is computed before path resolution so it depends only on
/// the file's contents, not on where the run was started from.
pub fn load_config(path: &Path) -> Result<(RunConfig, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
    let hash = config_hash(&config);
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve_paths(base);
    config.validate()?;
    Ok((config, hash))
}

/// SHA-256 over the canonical serialization of the parsed document.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn join(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&p);
        }
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        join(base, &mut self.panel);
        join(base, &mut self.publications);
        join(base, &mut self.staff);
        join(base, &mut self.phd);
        join(base, &mut self.corpus_a);
        join(base, &mut self.corpus_b);
        join(base, &mut self.stopwords);
        join(base, &mut self.out_dir);
    }

    /// Checks everything that can be checked without reading data: referenced
    /// paths exist, enumeration-valued keys parse, counts are positive.
    pub fn validate(&self) -> Result<(), CliError> {
        let files = [
            ("panel", &self.panel),
            ("publications", &self.publications),
            ("staff", &self.staff),
            ("phd", &self.phd),
            ("stopwords", &self.stopwords),
        ];
        for (key, path) in files {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(CliError::Config(format!(
                        "{key}: no such file: {}",
                        p.display()
                    )));
                }
            }
        }
        for (key, path) in [("corpus_a", &self.corpus_a), ("corpus_b", &self.corpus_b)] {
            if let Some(p) = path {
                if !p.is_dir() {
                    return Err(CliError::Config(format!(
                        "{key}: no such directory: {}",
                        p.display()
                    )));
                }
            }
        }
        self.sections_set()?;
        self.network_format_list()?;
        if self.keywords_k == Some(0) {
            return Err(CliError::Config("keywords_k must be at least 1".into()));
        }
        if self.lag_order == Some(0) {
            return Err(CliError::Config("lag_order must be at least 1".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> CsvSchema {
        let defaults = CsvSchema::default();
        CsvSchema {
            unit: self.panel_unit_column.clone().unwrap_or(defaults.unit),
            year: self.panel_year_column.clone().unwrap_or(defaults.year),
            n_dp: self.panel_ndp_column.clone().unwrap_or(defaults.n_dp),
            staff_costs: self
                .panel_staff_costs_column
                .clone()
                .unwrap_or(defaults.staff_costs),
            travel_costs: self
                .panel_travel_costs_column
                .clone()
                .unwrap_or(defaults.travel_costs),
        }
    }

    /// The linear model spec, without lag derivation (stages add lags).
    pub fn fe_spec(&self) -> Result<ModelSpec, CliError> {
        let dependent = self
            .fe_dependent
            .clone()
            .ok_or_else(|| CliError::Config("fe_dependent is required for the linear fit".into()))?;
        Ok(ModelSpec {
            dependent,
            regressors: self.fe_regressors.clone(),
            time_dummies: self.fe_time_dummies.unwrap_or(true),
            base_year: self.fe_base_year,
            include_lags: false,
        })
    }

    /// The count model spec, without lag derivation.
    pub fn fep_spec(&self) -> Result<ModelSpec, CliError> {
        let dependent = self.fep_dependent.clone().ok_or_else(|| {
            CliError::Config("fep_dependent is required for the count fit".into())
        })?;
        Ok(ModelSpec {
            dependent,
            regressors: self.fep_regressors.clone(),
            time_dummies: self.fep_time_dummies.unwrap_or(true),
            base_year: self.fep_base_year,
            include_lags: false,
        })
    }

    pub fn lag_order(&self) -> u32 {
        self.lag_order.unwrap_or(1)
    }

    pub fn keywords_k(&self) -> usize {
        self.keywords_k.unwrap_or(15)
    }

    pub fn indicator_options(&self) -> IndicatorOptions {
        IndicatorOptions {
            staff_measure: self.staff_measure.unwrap_or_default(),
            ra_reading: self.ra_reading.unwrap_or_default(),
        }
    }

    /// The requested report sections, defaulting to all eight.
    pub fn sections_set(&self) -> Result<BTreeSet<Section>, CliError> {
        match &self.sections {
            None => Ok(Section::ALL.iter().copied().collect()),
            Some(names) => {
                let mut set = BTreeSet::new();
                for name in names {
                    let section = name.parse::<Section>().map_err(CliError::Config)?;
                    if !set.insert(section) {
                        return Err(CliError::Config(format!(
                            "sections: {name} listed more than once"
                        )));
                    }
                }
                if set.is_empty() {
                    return Err(CliError::Config("sections: empty list".into()));
                }
                Ok(set)
            }
        }
    }

    /// The requested network export formats, defaulting to all three.
    pub fn network_format_list(&self) -> Result<Vec<NetworkFormat>, CliError> {
        match &self.network_formats {
            None => Ok(vec![
                NetworkFormat::Dot,
                NetworkFormat::Graphml,
                NetworkFormat::Json,
            ]),
            Some(names) => {
                let mut formats = Vec::new();
                for name in names {
                    let format = name
                        .parse::<NetworkFormat>()
                        .map_err(|e| CliError::Config(format!("network_formats: {e}")))?;
                    if formats.contains(&format) {
                        return Err(CliError::Config(format!(
                            "network_formats: {name} listed more than once"
                        )));
                    }
                    formats.push(format);
                }
                if formats.is_empty() {
                    return Err(CliError::Config("network_formats: empty list".into()));
                }
                Ok(formats)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_formatting_but_tracks_fields() {
        let a: RunConfig = serde_json::from_str(r#"{"keywords_k": 15, "lag_order": 1}"#).unwrap();
        let b: RunConfig =
            serde_json::from_str("{\n  \"lag_order\": 1,\n  \"keywords_k\": 15\n}").unwrap();
        let c: RunConfig = serde_json::from_str(r#"{"keywords_k": 16, "lag_order": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let parsed: Result<RunConfig, _> = serde_json::from_str(r#"{"keyword_k": 10}"#);
        let message = parsed.unwrap_err().to_string();
        assert!(message.contains("keyword_k"), "{message}");
    }

    #[test]
    fn defaults_cover_the_full_report() {
        let config = RunConfig::default();
        assert_eq!(config.sections_set().unwrap().len(), 8);
        assert_eq!(config.network_format_list().unwrap().len(), 3);
        assert_eq!(config.keywords_k(), 15);
        assert_eq!(config.lag_order(), 1);
    }

    #[test]
    fn bad_section_name_is_a_config_error() {
        let config = RunConfig {
            sections: Some(vec!["fit_fe".into(), "nonsense".into()]),
            ..RunConfig::default()
        };
        assert!(matches!(config.sections_set(), Err(CliError::Config(_))));
    }
}
