//! Unbalanced panel data model and transformations.
//!
//! A [`Panel`] holds sub-project × year observations of research output and
//! funding inputs. Panels may be unbalanced: per-unit year sets differ. The
//! transformations here (logs, calendar-year lags, singleton drops) prepare a
//! panel for the estimators; panels are immutable after construction and every
//! transformation returns a new value.
//!
//! Columns are addressed by role name: the built-in roles `n_dp`,
//! `staff_costs` and `travel_costs`, plus any number of named extra columns
//! (caller-supplied covariates and derived lag columns). Extra columns carry an
//! explicit missing marker; the built-in columns are always present.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Built-in column role for the discussion-paper count.
pub const ROLE_N_DP: &str = "n_dp";
/// Built-in column role for nominal staff costs.
pub const ROLE_STAFF_COSTS: &str = "staff_costs";
/// Built-in column role for nominal travel costs.
pub const ROLE_TRAVEL_COSTS: &str = "travel_costs";

/// Errors raised by panel construction, ingestion and transformation.
#[derive(Debug, Error)]
pub enum PanelError {
    #[error("CSV row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("missing required column {column:?} in CSV header")]
    MissingColumn { column: String },
    #[error("duplicate observation for unit {unit:?}, year {year}")]
    Duplicate { unit: String, year: i32 },
    #[error("unit {unit:?}, year {year}: column {column} is negative ({value})")]
    Negative {
        unit: String,
        year: i32,
        column: String,
        value: f64,
    },
    #[error("unit {unit:?}, year {year}: count column {column} is not an integer ({value})")]
    NonIntegerCount {
        unit: String,
        year: i32,
        column: String,
        value: f64,
    },
    #[error("unknown column role {role:?}")]
    UnknownColumn { role: String },
    #[error("column {column} holds counts; log transform applies to real-valued columns")]
    NotRealValued { column: String },
    #[error("unit {unit:?}, year {year}: log of non-positive {column} = {value}")]
    NonPositiveLog {
        unit: String,
        year: i32,
        column: String,
        value: f64,
    },
    #[error("unit {unit:?}, year {year}: missing value in column {column}")]
    MissingValue {
        unit: String,
        year: i32,
        column: String,
    },
    #[error("observations carry inconsistent extra columns (unit {unit:?}, year {year})")]
    RaggedExtras { unit: String, year: i32 },
    #[error("lag order must be >= 1")]
    ZeroLagOrder,
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// One sub-project × year row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub unit_id: String,
    pub year: i32,
    /// Count of discussion papers.
    pub n_dp: u32,
    /// Nominal staff costs in EUR (or their log after [`log_transform`]).
    pub staff_costs: f64,
    /// Nominal travel costs in EUR (or their log after [`log_transform`]).
    pub travel_costs: f64,
    /// Named real-valued covariates; `None` marks a missing value
    /// (legal only for lag-derived columns).
    pub extra: BTreeMap<String, Option<f64>>,
}

impl PanelObservation {
    /// Looks up a value by column role. `Ok(None)` means the column exists but
    /// the value is missing for this row.
    pub fn value(&self, role: &str) -> Result<Option<f64>, PanelError> {
        match role {
            ROLE_N_DP => Ok(Some(f64::from(self.n_dp))),
            ROLE_STAFF_COSTS => Ok(Some(self.staff_costs)),
            ROLE_TRAVEL_COSTS => Ok(Some(self.travel_costs)),
            _ => self
                .extra
                .get(role)
                .copied()
                .ok_or_else(|| PanelError::UnknownColumn {
                    role: role.to_string(),
                }),
        }
    }
}

/// An unbalanced panel: observations sorted by (unit, year), with the distinct
/// unit and year sets cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    observations: Vec<PanelObservation>,
    units: Vec<String>,
    years: Vec<i32>,
}

/// Why observations were removed from a panel before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    SingletonGroup,
    AllZeroOutcome,
}

/// One removed unit with its observation count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedUnit {
    pub unit_id: String,
    pub observations: usize,
    pub reason: DropReason,
}

/// Record of observations removed before estimation.
///
/// `dropped_singletons` is the total observation count removed, over all
/// reasons; it always equals the sum over `dropped_units`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped_singletons: usize,
    pub dropped_units: Vec<DroppedUnit>,
}

impl DropReport {
    pub fn merge(mut self, other: DropReport) -> DropReport {
        self.dropped_singletons += other.dropped_singletons;
        self.dropped_units.extend(other.dropped_units);
        self
    }
}

/// Maps the required column roles to CSV header names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub unit: String,
    pub year: String,
    pub n_dp: String,
    pub staff_costs: String,
    pub travel_costs: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            unit: "unit".into(),
            year: "year".into(),
            n_dp: ROLE_N_DP.into(),
            staff_costs: ROLE_STAFF_COSTS.into(),
            travel_costs: ROLE_TRAVEL_COSTS.into(),
        }
    }
}

impl Panel {
    /// Builds a panel from rows, sorting by (unit, year) and validating
    /// uniqueness and the extra-column layout.
    pub fn from_observations(mut rows: Vec<PanelObservation>) -> Result<Panel, PanelError> {
        rows.sort_by(|a, b| (a.unit_id.as_str(), a.year).cmp(&(b.unit_id.as_str(), b.year)));
        for w in rows.windows(2) {
            if w[0].unit_id == w[1].unit_id && w[0].year == w[1].year {
                return Err(PanelError::Duplicate {
                    unit: w[1].unit_id.clone(),
                    year: w[1].year,
                });
            }
        }
        if let Some(first) = rows.first() {
            let keys: Vec<&String> = first.extra.keys().collect();
            for row in &rows[1..] {
                if row.extra.len() != keys.len() || !row.extra.keys().eq(keys.iter().copied()) {
                    return Err(PanelError::RaggedExtras {
                        unit: row.unit_id.clone(),
                        year: row.year,
                    });
                }
            }
        }
        let units: Vec<String> = rows
            .iter()
            .map(|o| o.unit_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let years: Vec<i32> = rows
            .iter()
            .map(|o| o.year)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Panel {
            observations: rows,
            units,
            years,
        })
    }

    pub fn observations(&self) -> &[PanelObservation] {
        &self.observations
    }

    /// Distinct unit ids, sorted.
    pub fn units(&self) -> &[String] {
        &self.units
    }

    /// Distinct calendar years, sorted.
    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Column roles available on this panel: the built-ins plus extras.
    pub fn column_roles(&self) -> Vec<String> {
        let mut roles = vec![
            ROLE_N_DP.to_string(),
            ROLE_STAFF_COSTS.to_string(),
            ROLE_TRAVEL_COSTS.to_string(),
        ];
        if let Some(first) = self.observations.first() {
            roles.extend(first.extra.keys().cloned());
        }
        roles
    }

    /// True when `role` names an existing column.
    pub fn has_column(&self, role: &str) -> bool {
        matches!(role, ROLE_N_DP | ROLE_STAFF_COSTS | ROLE_TRAVEL_COSTS)
            || self
                .observations
                .first()
                .is_some_and(|o| o.extra.contains_key(role))
    }

    /// Materializes one column in observation order.
    pub fn column(&self, role: &str) -> Result<Vec<Option<f64>>, PanelError> {
        self.observations.iter().map(|o| o.value(role)).collect()
    }

    /// Rows with a non-missing value in every listed column.
    ///
    /// Returns the retained sub-panel and the number of excluded rows.
    pub fn complete_cases(&self, roles: &[String]) -> Result<(Panel, usize), PanelError> {
        for role in roles {
            if !self.has_column(role) {
                return Err(PanelError::UnknownColumn { role: role.clone() });
            }
        }
        let mut kept = Vec::with_capacity(self.observations.len());
        for obs in &self.observations {
            let complete = roles
                .iter()
                .map(|r| obs.value(r))
                .collect::<Result<Vec<_>, _>>()?
                .iter()
                .all(Option::is_some);
            if complete {
                kept.push(obs.clone());
            }
        }
        let dropped = self.observations.len() - kept.len();
        Ok((Panel::from_observations(kept)?, dropped))
    }

    /// Serializes to CSV under the given header schema. Extra columns follow
    /// the required ones in name order; missing values are empty cells.
    pub fn to_csv(&self, schema: &CsvSchema) -> String {
        let extra_names: Vec<String> = self
            .observations
            .first()
            .map(|o| o.extra.keys().cloned().collect())
            .unwrap_or_default();
        let mut out = String::new();
        let mut header = vec![
            schema.unit.clone(),
            schema.year.clone(),
            schema.n_dp.clone(),
            schema.staff_costs.clone(),
            schema.travel_costs.clone(),
        ];
        header.extend(extra_names.iter().cloned());
        out.push_str(&header.join(","));
        out.push('\n');
        for obs in &self.observations {
            let mut cells = vec![
                obs.unit_id.clone(),
                obs.year.to_string(),
                obs.n_dp.to_string(),
                obs.staff_costs.to_string(),
                obs.travel_costs.to_string(),
            ];
            for name in &extra_names {
                cells.push(match obs.extra[name] {
                    Some(v) => v.to_string(),
                    None => String::new(),
                });
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reads a panel from UTF-8 CSV with a header row.
///
/// `schema` maps the required roles to column names; every unmapped column is
/// ingested as an extra covariate under its own header name. Empty cells are
/// legal only in extra columns, where they mark missing values.
pub fn ingest_panel<R: Read>(reader: R, schema: &CsvSchema) -> Result<Panel, PanelError> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = csv_reader.headers()?.clone();

    let find = |name: &str| -> Result<usize, PanelError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PanelError::MissingColumn {
                column: name.to_string(),
            })
    };
    let unit_idx = find(&schema.unit)?;
    let year_idx = find(&schema.year)?;
    let ndp_idx = find(&schema.n_dp)?;
    let staff_idx = find(&schema.staff_costs)?;
    let travel_idx = find(&schema.travel_costs)?;
    let required = [unit_idx, year_idx, ndp_idx, staff_idx, travel_idx];
    let extra_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !required.contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut rows = Vec::new();
    for (record_idx, record) in csv_reader.records().enumerate() {
        let row = record_idx + 1;
        let record = record.map_err(|e| PanelError::Parse {
            row,
            message: e.to_string(),
        })?;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

        let parse_f64 = |idx: usize, what: &str| -> Result<f64, PanelError> {
            let text = cell(idx);
            if text.is_empty() {
                return Err(PanelError::Parse {
                    row,
                    message: format!("empty {what} cell"),
                });
            }
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PanelError::Parse {
                    row,
                    message: format!("cannot parse {what} value {text:?}"),
                })
        };

        let unit_id = cell(unit_idx).to_string();
        if unit_id.is_empty() {
            return Err(PanelError::Parse {
                row,
                message: "empty unit cell".into(),
            });
        }
        let year: i32 = cell(year_idx).parse().map_err(|_| PanelError::Parse {
            row,
            message: format!("cannot parse year value {:?}", cell(year_idx)),
        })?;

        let ndp_raw = parse_f64(ndp_idx, "count")?;
        if ndp_raw < 0.0 {
            return Err(PanelError::Negative {
                unit: unit_id,
                year,
                column: ROLE_N_DP.into(),
                value: ndp_raw,
            });
        }
        if ndp_raw.fract() != 0.0 || ndp_raw > f64::from(u32::MAX) {
            return Err(PanelError::NonIntegerCount {
                unit: unit_id,
                year,
                column: ROLE_N_DP.into(),
                value: ndp_raw,
            });
        }
        let staff_costs = parse_f64(staff_idx, "staff cost")?;
        let travel_costs = parse_f64(travel_idx, "travel cost")?;
        for (value, column) in [(staff_costs, ROLE_STAFF_COSTS), (travel_costs, ROLE_TRAVEL_COSTS)]
        {
            if value < 0.0 {
                return Err(PanelError::Negative {
                    unit: unit_id,
                    year,
                    column: column.into(),
                    value,
                });
            }
        }

        let mut extra = BTreeMap::new();
        for (idx, name) in &extra_cols {
            let text = cell(*idx);
            let value = if text.is_empty() {
                None
            } else {
                Some(text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                    || PanelError::Parse {
                        row,
                        message: format!("cannot parse column {name} value {text:?}"),
                    },
                )?)
            };
            extra.insert(name.clone(), value);
        }

        rows.push(PanelObservation {
            unit_id,
            year,
            n_dp: ndp_raw as u32,
            staff_costs,
            travel_costs,
            extra,
        });
    }
    Panel::from_observations(rows)
}

/// Replaces the targeted columns by their natural logarithms.
///
/// Every targeted value must be strictly positive; count columns are rejected.
pub fn log_transform(panel: &Panel, columns: &[String]) -> Result<Panel, PanelError> {
    for role in columns {
        if role == ROLE_N_DP {
            return Err(PanelError::NotRealValued {
                column: role.clone(),
            });
        }
        if !panel.has_column(role) {
            return Err(PanelError::UnknownColumn { role: role.clone() });
        }
    }
    let mut rows = panel.observations.clone();
    for obs in &mut rows {
        for role in columns {
            let current = match role.as_str() {
                ROLE_STAFF_COSTS => obs.staff_costs,
                ROLE_TRAVEL_COSTS => obs.travel_costs,
                _ => match obs.extra[role] {
                    Some(v) => v,
                    None => {
                        return Err(PanelError::MissingValue {
                            unit: obs.unit_id.clone(),
                            year: obs.year,
                            column: role.clone(),
                        })
                    }
                },
            };
            if current <= 0.0 {
                return Err(PanelError::NonPositiveLog {
                    unit: obs.unit_id.clone(),
                    year: obs.year,
                    column: role.clone(),
                    value: current,
                });
            }
            let logged = current.ln();
            match role.as_str() {
                ROLE_STAFF_COSTS => obs.staff_costs = logged,
                ROLE_TRAVEL_COSTS => obs.travel_costs = logged,
                _ => {
                    obs.extra.insert(role.clone(), Some(logged));
                }
            }
        }
    }
    Panel::from_observations(rows)
}

/// Name of the column `add_lags` derives from `role` at the given order.
pub fn lag_column_name(role: &str, order: u32) -> String {
    format!("{role}_lag{order}")
}

/// Adds calendar-year lag columns `<role>_lag<order>`.
///
/// The lagged value at year `y` is the same unit's value at year `y - order`,
/// or missing if that calendar year is absent for the unit; gaps therefore
/// produce missing lags and lags never cross unit boundaries. An existing lag
/// column of the same name is recomputed, so repeated application is a no-op.
pub fn add_lags(panel: &Panel, columns: &[String], order: u32) -> Result<Panel, PanelError> {
    if order == 0 {
        return Err(PanelError::ZeroLagOrder);
    }
    for role in columns {
        if !panel.has_column(role) {
            return Err(PanelError::UnknownColumn { role: role.clone() });
        }
    }
    // (unit, year) -> row index for calendar lookup
    let index: BTreeMap<(&str, i32), usize> = panel
        .observations
        .iter()
        .enumerate()
        .map(|(i, o)| ((o.unit_id.as_str(), o.year), i))
        .collect();

    let mut lagged: Vec<Vec<Option<f64>>> = Vec::with_capacity(columns.len());
    for role in columns {
        let values = panel.column(role)?;
        let column = panel
            .observations
            .iter()
            .map(|obs| {
                index
                    .get(&(obs.unit_id.as_str(), obs.year - order as i32))
                    .and_then(|&i| values[i])
            })
            .collect();
        lagged.push(column);
    }

    let mut rows = panel.observations.clone();
    for (role, column) in columns.iter().zip(lagged) {
        let name = lag_column_name(role, order);
        for (obs, value) in rows.iter_mut().zip(column) {
            obs.extra.insert(name.clone(), value);
        }
    }
    Panel::from_observations(rows)
}

/// Removes units with fewer than two observations.
pub fn drop_singleton_groups(panel: &Panel) -> (Panel, DropReport) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for obs in &panel.observations {
        *counts.entry(obs.unit_id.as_str()).or_insert(0) += 1;
    }
    let singletons: BTreeSet<String> = counts
        .iter()
        .filter(|(_, &n)| n < 2)
        .map(|(u, _)| u.to_string())
        .collect();
    let kept: Vec<PanelObservation> = panel
        .observations
        .iter()
        .filter(|o| !singletons.contains(&o.unit_id))
        .cloned()
        .collect();
    let report = DropReport {
        dropped_singletons: singletons.iter().map(|u| counts[u.as_str()]).sum(),
        dropped_units: singletons
            .iter()
            .map(|u| DroppedUnit {
                unit_id: u.clone(),
                observations: counts[u.as_str()],
                reason: DropReason::SingletonGroup,
            })
            .collect(),
    };
    let panel = Panel::from_observations(kept).expect("subset of a valid panel stays valid");
    (panel, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(unit: &str, year: i32, n_dp: u32) -> PanelObservation {
        PanelObservation {
            unit_id: unit.into(),
            year,
            n_dp,
            staff_costs: 50_000.0,
            travel_costs: 4_000.0,
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn ingest_minimal_two_rows() {
        let csv = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,3,50000,4000\nSP01,2006,4,52000,4100\n";
        let panel = ingest_panel(csv.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(panel.units(), ["SP01".to_string()]);
        assert_eq!(panel.years(), [2005, 2006]);
        assert_eq!(panel.len(), 2);
    }

    #[test]
    fn ingest_rejects_duplicate_unit_year() {
        let csv = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,3,50000,4000\nSP01,2005,4,52000,4100\n";
        let err = ingest_panel(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, PanelError::Duplicate { ref unit, year: 2005 } if unit == "SP01"));
    }

    #[test]
    fn ingest_rejects_negative_cost_and_count() {
        let neg_cost = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,3,-1,4000\n";
        assert!(matches!(
            ingest_panel(neg_cost.as_bytes(), &CsvSchema::default()).unwrap_err(),
            PanelError::Negative { .. }
        ));
        let neg_count = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,-3,1,4000\n";
        assert!(matches!(
            ingest_panel(neg_count.as_bytes(), &CsvSchema::default()).unwrap_err(),
            PanelError::Negative { .. }
        ));
        let frac_count = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,3.5,1,4000\n";
        assert!(matches!(
            ingest_panel(frac_count.as_bytes(), &CsvSchema::default()).unwrap_err(),
            PanelError::NonIntegerCount { .. }
        ));
    }

    #[test]
    fn ingest_maps_schema_and_extra_columns() {
        let csv = "sp,jahr,papers,staff,travel,guests\nSP01,2005,3,50000,4000,2\nSP01,2006,4,52000,4100,\n";
        let schema = CsvSchema {
            unit: "sp".into(),
            year: "jahr".into(),
            n_dp: "papers".into(),
            staff_costs: "staff".into(),
            travel_costs: "travel".into(),
        };
        let panel = ingest_panel(csv.as_bytes(), &schema).unwrap();
        assert_eq!(panel.column("guests").unwrap(), vec![Some(2.0), None]);
    }

    #[test]
    fn parse_error_names_the_row() {
        let csv = "unit,year,n_dp,staff_costs,travel_costs\nSP01,2005,3,50000,4000\nSP01,2006,x,52000,4100\n";
        let err = ingest_panel(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        match err {
            PanelError::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn log_transform_of_e_and_one() {
        let mut a = obs("SP01", 2005, 1);
        a.staff_costs = std::f64::consts::E;
        let mut b = obs("SP01", 2006, 1);
        b.staff_costs = 1.0;
        let panel = Panel::from_observations(vec![a, b]).unwrap();
        let logged = log_transform(&panel, &[ROLE_STAFF_COSTS.to_string()]).unwrap();
        assert!((logged.observations()[0].staff_costs - 1.0).abs() < 1e-15);
        assert!(logged.observations()[1].staff_costs.abs() < 1e-15);
    }

    #[test]
    fn log_transform_rejects_zero() {
        let mut a = obs("SP01", 2005, 1);
        a.travel_costs = 0.0;
        let panel = Panel::from_observations(vec![a, obs("SP01", 2006, 1)]).unwrap();
        let err = log_transform(&panel, &[ROLE_TRAVEL_COSTS.to_string()]).unwrap_err();
        assert!(matches!(
            err,
            PanelError::NonPositiveLog { year: 2005, .. }
        ));
    }

    #[test]
    fn lag_first_observation_is_missing() {
        let panel = Panel::from_observations(vec![
            obs("SP01", 2005, 3),
            obs("SP01", 2006, 4),
            obs("SP01", 2007, 5),
        ])
        .unwrap();
        let lagged = add_lags(&panel, &[ROLE_N_DP.to_string()], 1).unwrap();
        assert_eq!(
            lagged.column("n_dp_lag1").unwrap(),
            vec![None, Some(3.0), Some(4.0)]
        );
    }

    #[test]
    fn lag_respects_calendar_gaps() {
        let panel =
            Panel::from_observations(vec![obs("SP01", 2005, 3), obs("SP01", 2007, 5)]).unwrap();
        let lagged = add_lags(&panel, &[ROLE_N_DP.to_string()], 1).unwrap();
        // 2007 has no 2006 predecessor, so its lag is missing despite being adjacent in the data
        assert_eq!(lagged.column("n_dp_lag1").unwrap(), vec![None, None]);
    }

    #[test]
    fn lag_never_crosses_units() {
        let panel = Panel::from_observations(vec![
            obs("SPA", 2005, 1),
            obs("SPA", 2006, 2),
            obs("SPB", 2006, 9),
            obs("SPB", 2007, 8),
        ])
        .unwrap();
        let lagged = add_lags(&panel, &[ROLE_N_DP.to_string()], 1).unwrap();
        assert_eq!(
            lagged.column("n_dp_lag1").unwrap(),
            vec![None, Some(1.0), None, Some(9.0)]
        );
    }

    #[test]
    fn add_lags_twice_is_a_no_op() {
        let panel = Panel::from_observations(vec![
            obs("SP01", 2005, 3),
            obs("SP01", 2006, 4),
            obs("SP02", 2005, 1),
            obs("SP02", 2007, 2),
        ])
        .unwrap();
        let cols = [ROLE_N_DP.to_string(), ROLE_STAFF_COSTS.to_string()];
        let once = add_lags(&panel, &cols, 1).unwrap();
        let twice = add_lags(&once, &cols, 1).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn drop_singletons_removes_one_observation_units() {
        let mut rows = vec![obs("LONE", 2005, 1)];
        for u in 0..10 {
            rows.push(obs(&format!("SP{u:02}"), 2005, 1));
            rows.push(obs(&format!("SP{u:02}"), 2006, 2));
        }
        let panel = Panel::from_observations(rows).unwrap();
        let (kept, report) = drop_singleton_groups(&panel);
        assert_eq!(report.dropped_singletons, 1);
        assert_eq!(report.dropped_units.len(), 1);
        assert_eq!(report.dropped_units[0].unit_id, "LONE");
        assert_eq!(report.dropped_units[0].reason, DropReason::SingletonGroup);
        assert!(kept.units().iter().all(|u| u != "LONE"));
        assert!(kept
            .units()
            .iter()
            .all(|u| kept.observations().iter().filter(|o| &o.unit_id == u).count() >= 2));
    }

    #[test]
    fn drop_singletons_is_a_no_op_on_clean_panels() {
        let panel =
            Panel::from_observations(vec![obs("SP01", 2005, 1), obs("SP01", 2006, 2)]).unwrap();
        let (kept, report) = drop_singleton_groups(&panel);
        assert_eq!(report.dropped_singletons, 0);
        assert!(report.dropped_units.is_empty());
        assert_eq!(kept, panel);
    }

    #[test]
    fn csv_round_trip_preserves_the_panel() {
        let mut a = obs("SP01", 2005, 3);
        a.staff_costs = 51234.567;
        a.extra.insert("n_dp_lag1".into(), None);
        let mut b = obs("SP01", 2006, 4);
        b.staff_costs = 0.1 + 0.2; // not exactly representable, still must round-trip
        b.extra.insert("n_dp_lag1".into(), Some(3.0));
        let panel = Panel::from_observations(vec![a, b]).unwrap();
        let schema = CsvSchema::default();
        let csv = panel.to_csv(&schema);
        let back = ingest_panel(csv.as_bytes(), &schema).unwrap();
        assert_eq!(panel, back);
    }
}
