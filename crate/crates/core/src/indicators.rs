//! Research-performance indicators over publication, staff, and doctoral
//! records.
//!
//! The catalog covers citation ratios (overall and normalized by field or
//! journal baselines), research activity relative to a reference center,
//! fractional (co-author-weighted) productivity, field-normalized scientific
//! strength, the h-index, staff efficiency ratios, and doctoral promotion
//! statistics. Citation baselines are caller-supplied; nothing is fetched
//! from bibliometric services.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jel::JelCode;

/// Errors raised by indicator computation and record ingestion.
#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("undefined ratio: {0}")]
    UndefinedRatio(&'static str),
    #[error("publication {pub_id:?}: field mean citations must be positive, got {value}")]
    NonPositiveFieldMean { pub_id: String, value: f64 },
    #[error("publication {pub_id:?}: journal mean citations must be positive, got {value}")]
    NonPositiveJournalMean { pub_id: String, value: f64 },
    #[error("invalid record {id:?}: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("missing required column {name:?}")]
    MissingColumn { name: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One publication with its citation counts, authorship, caller-supplied
/// citation baselines, and subject codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub unit_id: String,
    pub year: i32,
    pub citations: u32,
    pub n_authors: u32,
    /// Mean citations of comparable publications in the field (FC_m).
    pub field_mean_citations: f64,
    /// Mean citations of publications in the same journal (JC_m).
    pub journal_mean_citations: f64,
    pub jel_codes: Vec<JelCode>,
}

impl PublicationRecord {
    /// Checks the record invariants: at least one author and finite,
    /// non-negative baselines.
    pub fn validate(&self) -> Result<(), IndicatorError> {
        if self.n_authors < 1 {
            return Err(IndicatorError::InvalidRecord {
                id: self.pub_id.clone(),
                message: "publication needs at least one author".into(),
            });
        }
        for (label, v) in [
            ("field_mean_citations", self.field_mean_citations),
            ("journal_mean_citations", self.journal_mean_citations),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(IndicatorError::InvalidRecord {
                    id: self.pub_id.clone(),
                    message: format!("{label} must be a finite non-negative number, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Staff position in one unit-year, measured in full-time equivalents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffRecord {
    pub unit_id: String,
    pub year: i32,
    pub fte: f64,
    pub role: StaffRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaffRole {
    Doc,
    Postdoc,
}

impl FromStr for StaffRole {
    type Err = String;
    fn from_str(s: &str) -> Result<StaffRole, String> {
        match s {
            "doc" => Ok(StaffRole::Doc),
            "postdoc" => Ok(StaffRole::Postdoc),
            other => Err(format!("unknown staff role {other:?} (expected doc or postdoc)")),
        }
    }
}

impl fmt::Display for StaffRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaffRole::Doc => "doc",
            StaffRole::Postdoc => "postdoc",
        })
    }
}

/// One completed doctorate with its timeline and first post-degree position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhdRecord {
    pub person_id: String,
    pub gender: Gender,
    pub start_year: i32,
    pub defense_year: i32,
    pub publications: u32,
    pub post_phd_location: Location,
    pub post_phd_sector: Sector,
}

macro_rules! two_way_enum {
    ($name:ident, $a:ident = $astr:literal, $b:ident = $bstr:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $a,
            $b,
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<$name, String> {
                match s {
                    $astr => Ok($name::$a),
                    $bstr => Ok($name::$b),
                    other => Err(format!(
                        "unknown {} {other:?} (expected {} or {})",
                        stringify!($name),
                        $astr,
                        $bstr
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $name::$a => $astr,
                    $name::$b => $bstr,
                })
            }
        }
    };
}

two_way_enum!(Gender, Female = "female", Male = "male");
two_way_enum!(Location, Germany = "germany", Abroad = "abroad");
two_way_enum!(Sector, Academia = "academia", Other = "other");

/// Citation ratios of a publication set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationRatios {
    /// Citations per publication, ΣNC / N.
    pub c_pub: f64,
    /// Mean of per-publication citations over field-mean citations.
    pub c_pub_over_fc: f64,
    /// Mean of per-publication citations over journal-mean citations.
    pub c_pub_over_jc: f64,
}

/// Citations per publication and its field/journal-normalized variants.
pub fn citation_ratios(pubs: &[PublicationRecord]) -> Result<CitationRatios, IndicatorError> {
    if pubs.is_empty() {
        return Err(IndicatorError::UndefinedRatio(
            "citation ratios need at least one publication",
        ));
    }
    let n = pubs.len() as f64;
    let total: u64 = pubs.iter().map(|p| u64::from(p.citations)).sum();
    let mut over_fc = 0.0;
    let mut over_jc = 0.0;
    for p in pubs {
        if p.field_mean_citations <= 0.0 {
            return Err(IndicatorError::NonPositiveFieldMean {
                pub_id: p.pub_id.clone(),
                value: p.field_mean_citations,
            });
        }
        if p.journal_mean_citations <= 0.0 {
            return Err(IndicatorError::NonPositiveJournalMean {
                pub_id: p.pub_id.clone(),
                value: p.journal_mean_citations,
            });
        }
        over_fc += f64::from(p.citations) / p.field_mean_citations;
        over_jc += f64::from(p.citations) / p.journal_mean_citations;
    }
    Ok(CitationRatios {
        c_pub: total as f64 / n,
        c_pub_over_fc: over_fc / n,
        c_pub_over_jc: over_jc / n,
    })
}

/// Which citation aggregate enters the research-activity ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaCitationReading {
    /// Per-publication citation averages for both unit and center (default).
    #[default]
    PerPublicationAverage,
    /// Raw citation totals for both unit and center.
    Total,
}

/// Research activity of a unit relative to a reference center:
/// `RA = N_unit · C_unit / C_center`, with `C` the per-publication citation
/// average (see [`RaCitationReading`] for the total-citation variant).
pub fn research_activity(
    unit_pubs: &[PublicationRecord],
    center_pubs: &[PublicationRecord],
) -> Result<f64, IndicatorError> {
    research_activity_with(unit_pubs, center_pubs, RaCitationReading::default())
}

/// [`research_activity`] with an explicit citation reading.
pub fn research_activity_with(
    unit_pubs: &[PublicationRecord],
    center_pubs: &[PublicationRecord],
    reading: RaCitationReading,
) -> Result<f64, IndicatorError> {
    let center_total: u64 = center_pubs.iter().map(|p| u64::from(p.citations)).sum();
    if center_pubs.is_empty() || center_total == 0 {
        return Err(IndicatorError::UndefinedRatio(
            "research activity needs a center with positive citations",
        ));
    }
    if unit_pubs.is_empty() {
        return Ok(0.0);
    }
    let unit_total: u64 = unit_pubs.iter().map(|p| u64::from(p.citations)).sum();
    let n_unit = unit_pubs.len() as f64;
    let (c_unit, c_center) = match reading {
        RaCitationReading::PerPublicationAverage => (
            unit_total as f64 / n_unit,
            center_total as f64 / center_pubs.len() as f64,
        ),
        RaCitationReading::Total => (unit_total as f64, center_total as f64),
    };
    Ok(n_unit * c_unit / c_center)
}

/// Publication count with every paper weighted by the inverse of its author
/// count: `Σ 1/n_authors`.
pub fn fractional_productivity(pubs: &[PublicationRecord]) -> f64 {
    pubs.iter().map(|p| 1.0 / f64::from(p.n_authors)).sum()
}

/// Field-normalized weighted publication sum: `Σ citations/field_mean`.
pub fn scientific_strength(pubs: &[PublicationRecord]) -> Result<f64, IndicatorError> {
    let mut total = 0.0;
    for p in pubs {
        if p.field_mean_citations <= 0.0 {
            return Err(IndicatorError::NonPositiveFieldMean {
                pub_id: p.pub_id.clone(),
                value: p.field_mean_citations,
            });
        }
        total += f64::from(p.citations) / p.field_mean_citations;
    }
    Ok(total)
}

/// Largest `h` such that at least `h` entries are `≥ h`.
pub fn h_index(citations: &[u32]) -> usize {
    let mut sorted: Vec<u32> = citations.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|&(i, &c)| c as usize > i)
        .count()
}

/// Components of the absolute citation profile: the total, the single best
/// publication, and the uncited tail. No combining formula is applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsCitationProfile {
    pub total_citations: u64,
    pub max_citations: u32,
    pub zero_citation_pubs: usize,
}

/// The absolute citation triple of a publication set.
pub fn abs_citation_profile(pubs: &[PublicationRecord]) -> AbsCitationProfile {
    AbsCitationProfile {
        total_citations: pubs.iter().map(|p| u64::from(p.citations)).sum(),
        max_citations: pubs.iter().map(|p| p.citations).max().unwrap_or(0),
        zero_citation_pubs: pubs.iter().filter(|p| p.citations == 0).count(),
    }
}

/// How staff quantity is measured in efficiency ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaffMeasure {
    /// Summed full-time equivalents (default).
    #[default]
    FteSum,
    /// Number of staff records.
    HeadCount,
}

/// Per-staff efficiency ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRatios {
    pub pub_per_staff: f64,
    pub cit_per_staff: f64,
    pub cost_per_staff: f64,
}

/// Publications, citations, and costs per staff unit (FTE sum by default).
pub fn efficiency_ratios(
    pubs: &[PublicationRecord],
    staff: &[StaffRecord],
    total_costs: f64,
) -> Result<EfficiencyRatios, IndicatorError> {
    efficiency_ratios_with(pubs, staff, total_costs, StaffMeasure::default())
}

/// [`efficiency_ratios`] with an explicit staff measure.
pub fn efficiency_ratios_with(
    pubs: &[PublicationRecord],
    staff: &[StaffRecord],
    total_costs: f64,
    measure: StaffMeasure,
) -> Result<EfficiencyRatios, IndicatorError> {
    let denom = match measure {
        StaffMeasure::FteSum => staff.iter().map(|s| s.fte).sum::<f64>(),
        StaffMeasure::HeadCount => staff.len() as f64,
    };
    if denom <= 0.0 {
        return Err(IndicatorError::UndefinedRatio(
            "efficiency ratios need positive staff quantity",
        ));
    }
    let citations: u64 = pubs.iter().map(|p| u64::from(p.citations)).sum();
    Ok(EfficiencyRatios {
        pub_per_staff: pubs.len() as f64 / denom,
        cit_per_staff: citations as f64 / denom,
        cost_per_staff: total_costs / denom,
    })
}

/// Doctoral promotion statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionStats {
    pub n_phd: usize,
    /// Mean of defense year minus start year; absent for an empty record set.
    pub mean_duration_years: Option<f64>,
    /// Summed publication counts of the graduates.
    pub n_pub_phd: u64,
    /// Fraction whose first post-degree position is academic; absent for an
    /// empty record set.
    pub academia_share: Option<f64>,
}

/// Counts, mean study duration, graduate publications, and the academic
/// career share of a doctoral cohort.
pub fn promotion_stats(records: &[PhdRecord]) -> PromotionStats {
    let n = records.len();
    if n == 0 {
        return PromotionStats {
            n_phd: 0,
            mean_duration_years: None,
            n_pub_phd: 0,
            academia_share: None,
        };
    }
    let duration: i64 = records
        .iter()
        .map(|r| i64::from(r.defense_year) - i64::from(r.start_year))
        .sum();
    let academia = records
        .iter()
        .filter(|r| r.post_phd_sector == Sector::Academia)
        .count();
    PromotionStats {
        n_phd: n,
        mean_duration_years: Some(duration as f64 / n as f64),
        n_pub_phd: records.iter().map(|r| u64::from(r.publications)).sum(),
        academia_share: Some(academia as f64 / n as f64),
    }
}

/// An indicator defined as a named list of items (prizes, editorships,
/// memberships, transfer projects, patents): the aggregation is the list
/// itself plus its count, with no invented scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListIndicator {
    pub name: String,
    pub items: Vec<String>,
}

impl ListIndicator {
    pub fn new(name: impl Into<String>, items: Vec<String>) -> ListIndicator {
        ListIndicator {
            name: name.into(),
            items,
        }
    }

    pub fn count(&self) -> usize {
        self.items.len()
    }
}

/// Options for assembling an [`IndicatorReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorOptions {
    pub staff_measure: StaffMeasure,
    pub ra_reading: RaCitationReading,
}

/// The assembled indicator table, serialized under the catalog's symbol
/// names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    /// Number of publications.
    pub n_pub: usize,
    /// Total citations.
    pub nc_pub: u64,
    pub c_pub: f64,
    pub c_pub_over_fc: f64,
    pub c_pub_over_jc: f64,
    /// Research activity relative to the center.
    pub ra: f64,
    /// Fractional (co-author-weighted) productivity.
    pub fn_pub: f64,
    /// Scientific strength.
    pub scs: f64,
    /// h-index of the publication set.
    pub h: usize,
    pub abs_c_pub: AbsCitationProfile,
    /// Staff quantity under the configured measure.
    pub n_staff: f64,
    pub pub_per_staff: f64,
    pub cit_per_staff: f64,
    pub cost_per_staff: f64,
    pub n_phd: usize,
    /// Mean doctoral duration in years.
    pub d_phd: Option<f64>,
    pub n_pub_phd: u64,
    pub academia_share: Option<f64>,
}

/// Computes the full indicator table for one unit against a reference
/// center's publication set.
pub fn indicator_report(
    unit_pubs: &[PublicationRecord],
    center_pubs: &[PublicationRecord],
    staff: &[StaffRecord],
    phds: &[PhdRecord],
    total_costs: f64,
    options: IndicatorOptions,
) -> Result<IndicatorReport, IndicatorError> {
    let ratios = citation_ratios(unit_pubs)?;
    let citations: Vec<u32> = unit_pubs.iter().map(|p| p.citations).collect();
    let efficiency = efficiency_ratios_with(unit_pubs, staff, total_costs, options.staff_measure)?;
    let promotion = promotion_stats(phds);
    let n_staff = match options.staff_measure {
        StaffMeasure::FteSum => staff.iter().map(|s| s.fte).sum::<f64>(),
        StaffMeasure::HeadCount => staff.len() as f64,
    };
    Ok(IndicatorReport {
        n_pub: unit_pubs.len(),
        nc_pub: unit_pubs.iter().map(|p| u64::from(p.citations)).sum(),
        c_pub: ratios.c_pub,
        c_pub_over_fc: ratios.c_pub_over_fc,
        c_pub_over_jc: ratios.c_pub_over_jc,
        ra: research_activity_with(unit_pubs, center_pubs, options.ra_reading)?,
        fn_pub: fractional_productivity(unit_pubs),
        scs: scientific_strength(unit_pubs)?,
        h: h_index(&citations),
        abs_c_pub: abs_citation_profile(unit_pubs),
        n_staff,
        pub_per_staff: efficiency.pub_per_staff,
        cit_per_staff: efficiency.cit_per_staff,
        cost_per_staff: efficiency.cost_per_staff,
        n_phd: promotion.n_phd,
        d_phd: promotion.mean_duration_years,
        n_pub_phd: promotion.n_pub_phd,
        academia_share: promotion.academia_share,
    })
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize, IndicatorError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IndicatorError::MissingColumn { name: name.into() })
}

fn cell<'a>(
    record: &'a csv::StringRecord,
    idx: usize,
    row: usize,
    name: &str,
) -> Result<&'a str, IndicatorError> {
    record.get(idx).ok_or_else(|| IndicatorError::Parse {
        row,
        message: format!("missing cell in column {name:?}"),
    })
}

fn parse_cell<T: FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    row: usize,
    name: &str,
) -> Result<T, IndicatorError>
where
    T::Err: fmt::Display,
{
    let raw = cell(record, idx, row, name)?;
    raw.parse().map_err(|e| IndicatorError::Parse {
        row,
        message: format!("column {name:?}: cannot parse {raw:?}: {e}"),
    })
}

/// Reads publication records from CSV with header
/// `pub_id,unit_id,year,citations,n_authors,field_mean_citations,journal_mean_citations,jel_codes`.
/// Rows are numbered from 1 in error messages; JEL cells may separate letters
/// with any non-letter characters.
pub fn ingest_publications<R: Read>(reader: R) -> Result<Vec<PublicationRecord>, IndicatorError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let idx_pub = header_index(&headers, "pub_id")?;
    let idx_unit = header_index(&headers, "unit_id")?;
    let idx_year = header_index(&headers, "year")?;
    let idx_cit = header_index(&headers, "citations")?;
    let idx_auth = header_index(&headers, "n_authors")?;
    let idx_fc = header_index(&headers, "field_mean_citations")?;
    let idx_jc = header_index(&headers, "journal_mean_citations")?;
    let idx_jel = header_index(&headers, "jel_codes")?;

    let mut out = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let pub_id = cell(&record, idx_pub, row, "pub_id")?.to_string();
        let jel_raw = cell(&record, idx_jel, row, "jel_codes")?;
        let jel_codes = JelCode::parse_list(jel_raw).map_err(|e| IndicatorError::Parse {
            row,
            message: format!("publication {pub_id:?}: {e}"),
        })?;
        let rec = PublicationRecord {
            pub_id,
            unit_id: cell(&record, idx_unit, row, "unit_id")?.to_string(),
            year: parse_cell(&record, idx_year, row, "year")?,
            citations: parse_cell(&record, idx_cit, row, "citations")?,
            n_authors: parse_cell(&record, idx_auth, row, "n_authors")?,
            field_mean_citations: parse_cell(&record, idx_fc, row, "field_mean_citations")?,
            journal_mean_citations: parse_cell(&record, idx_jc, row, "journal_mean_citations")?,
            jel_codes,
        };
        rec.validate().map_err(|e| IndicatorError::Parse {
            row,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads staff records from CSV with header `unit_id,year,fte,role`.
pub fn ingest_staff<R: Read>(reader: R) -> Result<Vec<StaffRecord>, IndicatorError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let idx_unit = header_index(&headers, "unit_id")?;
    let idx_year = header_index(&headers, "year")?;
    let idx_fte = header_index(&headers, "fte")?;
    let idx_role = header_index(&headers, "role")?;

    let mut out = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let fte: f64 = parse_cell(&record, idx_fte, row, "fte")?;
        if !fte.is_finite() || fte <= 0.0 {
            return Err(IndicatorError::Parse {
                row,
                message: format!("fte must be positive and finite, got {fte}"),
            });
        }
        out.push(StaffRecord {
            unit_id: cell(&record, idx_unit, row, "unit_id")?.to_string(),
            year: parse_cell(&record, idx_year, row, "year")?,
            fte,
            role: parse_cell(&record, idx_role, row, "role")?,
        });
    }
    Ok(out)
}

/// Reads doctoral records from CSV with header
/// `person_id,gender,start_year,defense_year,publications,post_phd_location,post_phd_sector`.
pub fn ingest_phd<R: Read>(reader: R) -> Result<Vec<PhdRecord>, IndicatorError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let idx_person = header_index(&headers, "person_id")?;
    let idx_gender = header_index(&headers, "gender")?;
    let idx_start = header_index(&headers, "start_year")?;
    let idx_defense = header_index(&headers, "defense_year")?;
    let idx_pubs = header_index(&headers, "publications")?;
    let idx_loc = header_index(&headers, "post_phd_location")?;
    let idx_sector = header_index(&headers, "post_phd_sector")?;

    let mut out = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let start_year: i32 = parse_cell(&record, idx_start, row, "start_year")?;
        let defense_year: i32 = parse_cell(&record, idx_defense, row, "defense_year")?;
        if defense_year < start_year {
            return Err(IndicatorError::Parse {
                row,
                message: format!(
                    "defense year {defense_year} precedes start year {start_year}"
                ),
            });
        }
        out.push(PhdRecord {
            person_id: cell(&record, idx_person, row, "person_id")?.to_string(),
            gender: parse_cell(&record, idx_gender, row, "gender")?,
            start_year,
            defense_year,
            publications: parse_cell(&record, idx_pubs, row, "publications")?,
            post_phd_location: parse_cell(&record, idx_loc, row, "post_phd_location")?,
            post_phd_sector: parse_cell(&record, idx_sector, row, "post_phd_sector")?,
        });
    }
    Ok(out)
}

/// Distinct JEL letters appearing across a publication set.
pub fn jel_coverage(pubs: &[PublicationRecord]) -> BTreeSet<JelCode> {
    pubs.iter().flat_map(|p| p.jel_codes.iter().copied()).collect()
}
