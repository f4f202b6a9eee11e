//! Time fixed-effects (within) regression with cluster-robust inference.
//!
//! The estimator demeans every variable by unit, which absorbs the unit
//! effects, and runs pooled least squares on the deviations. Year dummies
//! capture period shifts common to all units; columns that the demeaned design
//! cannot identify are detected by a rank-revealing orthogonal decomposition
//! and reported as omitted. Standard errors come from the clustered sandwich
//! `c (X'X)^-1 (Σ_g X_g' u_g u_g' X_g) (X'X)^-1` with the finite-sample factor
//! `c = [G/(G-1)] [(N-1)/(N-K)]`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{drop_singleton_groups, DropReport, Panel, PanelError};

/// Default relative tolerance for rank decisions, against the largest diagonal
/// of the orthogonal decomposition.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Errors raised by the linear estimators.
#[derive(Debug, Error)]
pub enum LinearError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("unknown column role {role:?}")]
    UnknownColumn { role: String },
    #[error("unit {unit:?} has a single observation; drop singleton groups first")]
    SingletonUnit { unit: String },
    #[error("need at least 2 units after drops, found {found}")]
    TooFewUnits { found: usize },
    #[error("unit {unit:?}, year {year}: missing value in column {column}; exclude incomplete rows first")]
    MissingValue {
        unit: String,
        year: i32,
        column: String,
    },
    #[error("dependent variable has no within-unit variation")]
    DegenerateModel,
    #[error("underdetermined model: {n_obs} observations for {n_params} parameters")]
    Underdetermined { n_obs: usize, n_params: usize },
    #[error("cluster-robust covariance needs at least 2 clusters")]
    SingleCluster,
    #[error("design matrix is rank deficient; remove collinear columns first")]
    RankDeficient,
    #[error("rank tolerance must be positive")]
    InvalidTolerance,
    #[error("{what} length {got} does not match {expected} rows")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// A regression specification: dependent column, regressor columns, and the
/// time-dummy setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    /// Add one dummy per panel year except the base year.
    pub time_dummies: bool,
    /// Base (omitted) year for the dummies; defaults to the earliest year.
    pub base_year: Option<i32>,
    /// Marks a specification whose regressors include lag-derived columns.
    /// Rows with missing values in any referenced column are always excluded
    /// from estimation; pipelines use this flag to decide whether to derive
    /// lag columns before fitting.
    pub include_lags: bool,
}

impl ModelSpec {
    pub fn new(dependent: impl Into<String>, regressors: Vec<String>) -> ModelSpec {
        ModelSpec {
            dependent: dependent.into(),
            regressors,
            time_dummies: true,
            base_year: None,
            include_lags: false,
        }
    }

    /// Checks the spec against a panel: referenced columns exist, the
    /// dependent is not among the regressors, and an explicit base year is in
    /// the panel's year set.
    pub fn validate(&self, panel: &Panel) -> Result<(), LinearError> {
        if self.regressors.contains(&self.dependent) {
            return Err(LinearError::InvalidSpec(format!(
                "dependent {:?} also appears among the regressors",
                self.dependent
            )));
        }
        for role in std::iter::once(&self.dependent).chain(self.regressors.iter()) {
            if !panel.has_column(role) {
                return Err(LinearError::UnknownColumn { role: role.clone() });
            }
        }
        if let Some(base) = self.base_year {
            if !panel.years().contains(&base) {
                return Err(LinearError::InvalidSpec(format!(
                    "base year {base} is not in the panel's year set"
                )));
            }
        }
        Ok(())
    }

    /// All columns the spec reads from the panel.
    pub fn referenced_columns(&self) -> Vec<String> {
        let mut cols = vec![self.dependent.clone()];
        cols.extend(self.regressors.iter().cloned());
        cols
    }
}

/// Name of the dummy column for a calendar year.
pub fn year_dummy_name(year: i32) -> String {
    format!("year_{year}")
}

/// The demeaned design produced by [`within_transform`]: deviations from unit
/// means plus the stored means needed to recover unit effects and the
/// constant.
#[derive(Debug, Clone)]
pub struct DemeanedDesign {
    /// Demeaned dependent variable.
    pub y: DVector<f64>,
    /// Demeaned design matrix: regressors first, then year dummies.
    pub x: DMatrix<f64>,
    /// Column names of `x`, in order.
    pub column_names: Vec<String>,
    /// Distinct unit ids in row-block order.
    pub unit_ids: Vec<String>,
    /// Per-row index into `unit_ids`; doubles as the cluster label.
    pub cluster: Vec<usize>,
    /// Per-row calendar year.
    pub years: Vec<i32>,
    /// Per-unit mean of the dependent variable.
    pub unit_mean_y: Vec<f64>,
    /// Per-unit means of the design columns (n_units × k).
    pub unit_mean_x: DMatrix<f64>,
    /// Grand mean of the dependent variable.
    pub grand_mean_y: f64,
    /// Grand means of the design columns.
    pub grand_mean_x: DVector<f64>,
}

/// Demeans the dependent variable and design columns by unit.
///
/// The design holds the spec's regressors followed by year dummies (one per
/// panel year except the base year, which defaults to the earliest year in
/// this panel). Every unit must have at least two observations.
pub fn within_transform(panel: &Panel, spec: &ModelSpec) -> Result<DemeanedDesign, LinearError> {
    let n = panel.len();
    let unit_ids: Vec<String> = panel.units().to_vec();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for obs in panel.observations() {
        *counts.entry(obs.unit_id.as_str()).or_insert(0) += 1;
    }
    if let Some((unit, _)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(LinearError::SingletonUnit {
            unit: unit.to_string(),
        });
    }

    let mut column_names = spec.regressors.clone();
    let mut dummy_years: Vec<i32> = Vec::new();
    if spec.time_dummies {
        let base = spec
            .base_year
            .or_else(|| panel.years().first().copied())
            .ok_or_else(|| LinearError::InvalidSpec("empty panel".into()))?;
        dummy_years = panel.years().iter().copied().filter(|&y| y != base).collect();
        column_names.extend(dummy_years.iter().map(|&y| year_dummy_name(y)));
    }
    let k = column_names.len();

    let mut y = DVector::zeros(n);
    let mut x = DMatrix::zeros(n, k);
    let mut cluster = Vec::with_capacity(n);
    let mut years = Vec::with_capacity(n);
    for (row, obs) in panel.observations().iter().enumerate() {
        let require = |role: &str| -> Result<f64, LinearError> {
            obs.value(role)?.ok_or_else(|| LinearError::MissingValue {
                unit: obs.unit_id.clone(),
                year: obs.year,
                column: role.to_string(),
            })
        };
        y[row] = require(&spec.dependent)?;
        for (j, role) in spec.regressors.iter().enumerate() {
            x[(row, j)] = require(role)?;
        }
        for (j, &dummy_year) in dummy_years.iter().enumerate() {
            x[(row, spec.regressors.len() + j)] = f64::from(obs.year == dummy_year);
        }
        let idx = unit_ids
            .binary_search(&obs.unit_id)
            .expect("panel units contain every observation unit");
        cluster.push(idx);
        years.push(obs.year);
    }

    let n_units = unit_ids.len();
    let mut unit_mean_y = vec![0.0; n_units];
    let mut unit_mean_x = DMatrix::zeros(n_units, k);
    let mut unit_count = vec![0.0f64; n_units];
    for row in 0..n {
        let u = cluster[row];
        unit_count[u] += 1.0;
        unit_mean_y[u] += y[row];
        for j in 0..k {
            unit_mean_x[(u, j)] += x[(row, j)];
        }
    }
    for u in 0..n_units {
        unit_mean_y[u] /= unit_count[u];
        for j in 0..k {
            unit_mean_x[(u, j)] /= unit_count[u];
        }
    }
    let grand_mean_y = y.iter().sum::<f64>() / n as f64;
    let grand_mean_x =
        DVector::from_iterator(k, (0..k).map(|j| x.column(j).iter().sum::<f64>() / n as f64));

    for row in 0..n {
        let u = cluster[row];
        y[row] -= unit_mean_y[u];
        for j in 0..k {
            x[(row, j)] -= unit_mean_x[(u, j)];
        }
    }

    Ok(DemeanedDesign {
        y,
        x,
        column_names,
        unit_ids,
        cluster,
        years,
        unit_mean_y,
        unit_mean_x,
        grand_mean_y,
        grand_mean_x,
    })
}

/// Greedy rank-revealing orthogonalization of design columns, left to right.
///
/// Columns whose residual after projection on the kept basis falls below
/// `tol` times the largest diagonal are omitted, so earlier-listed columns
/// win ties against later ones.
pub(crate) struct OrthoDecomp {
    /// Orthonormal basis of the kept columns (n × rank).
    q: DMatrix<f64>,
    /// Upper-triangular factor over the kept columns (rank × rank).
    r: DMatrix<f64>,
    pub kept: Vec<usize>,
    pub omitted: Vec<usize>,
}

impl OrthoDecomp {
    pub fn factor(x: &DMatrix<f64>, tol: f64) -> Result<OrthoDecomp, LinearError> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(LinearError::InvalidTolerance);
        }
        let n = x.nrows();
        let mut q_cols: Vec<DVector<f64>> = Vec::new();
        let mut r_cols: Vec<Vec<f64>> = Vec::new();
        let mut kept = Vec::new();
        let mut omitted = Vec::new();
        let mut max_diag = 0.0f64;
        for j in 0..x.ncols() {
            let original = x.column(j).clone_owned();
            let norm0 = original.norm();
            let mut v = original;
            let mut coeffs = vec![0.0; q_cols.len()];
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for (i, q) in q_cols.iter().enumerate() {
                    let c = q.dot(&v);
                    coeffs[i] += c;
                    v.axpy(-c, q, 1.0);
                }
            }
            let residual_norm = v.norm();
            let scale = max_diag.max(norm0);
            if residual_norm <= tol * scale {
                omitted.push(j);
            } else {
                kept.push(j);
                max_diag = max_diag.max(residual_norm);
                q_cols.push(v / residual_norm);
                coeffs.push(residual_norm);
                r_cols.push(coeffs);
            }
        }
        let rank = kept.len();
        let q = if rank == 0 {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&q_cols)
        };
        let mut r = DMatrix::zeros(rank, rank);
        for (col, coeffs) in r_cols.iter().enumerate() {
            for (row, &value) in coeffs.iter().enumerate() {
                r[(row, col)] = value;
            }
        }
        Ok(OrthoDecomp { q, r, kept, omitted })
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let qty = self.q.transpose() * y;
        self.back_substitute(&qty)
    }

    fn back_substitute(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let rank = self.kept.len();
        let mut out = DVector::zeros(rank);
        for i in (0..rank).rev() {
            let mut acc = rhs[i];
            for j in i + 1..rank {
                acc -= self.r[(i, j)] * out[j];
            }
            out[i] = acc / self.r[(i, i)];
        }
        out
    }

    /// `(X'X)^-1` over the kept columns, from the triangular factor.
    pub fn normal_matrix_inverse(&self) -> DMatrix<f64> {
        let rank = self.kept.len();
        let mut r_inv = DMatrix::zeros(rank, rank);
        for col in 0..rank {
            let mut e = DVector::zeros(rank);
            e[col] = 1.0;
            let solved = self.back_substitute(&e);
            for row in 0..rank {
                r_inv[(row, col)] = solved[row];
            }
        }
        &r_inv * r_inv.transpose()
    }
}

/// Indices of design columns to omit so the rest are full column rank.
///
/// Earlier columns are preferred over later ones; an all-zero matrix omits
/// every column.
pub fn detect_collinearity(x: &DMatrix<f64>, tol: f64) -> Result<Vec<usize>, LinearError> {
    Ok(OrthoDecomp::factor(x, tol)?.omitted)
}

/// Cluster-robust sandwich covariance with `K` equal to the column count.
///
/// `V = c (X'X)^-1 (Σ_g X_g' u_g u_g' X_g) (X'X)^-1` with
/// `c = [G/(G-1)] [(N-1)/(N-K)]`.
pub fn cluster_robust_vcov(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: &[usize],
) -> Result<DMatrix<f64>, LinearError> {
    cluster_robust_vcov_with_dof(x, residuals, clusters, x.ncols())
}

/// Cluster-robust sandwich covariance with an explicit parameter count for
/// the finite-sample factor (the fixed-effects fit counts slopes plus the
/// reported constant).
pub fn cluster_robust_vcov_with_dof(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: &[usize],
    k_params: usize,
) -> Result<DMatrix<f64>, LinearError> {
    let n = x.nrows();
    let k = x.ncols();
    if residuals.len() != n {
        return Err(LinearError::LengthMismatch {
            what: "residuals",
            got: residuals.len(),
            expected: n,
        });
    }
    if clusters.len() != n {
        return Err(LinearError::LengthMismatch {
            what: "clusters",
            got: clusters.len(),
            expected: n,
        });
    }
    let n_clusters = {
        let mut labels: Vec<usize> = clusters.to_vec();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    };
    if n_clusters < 2 {
        return Err(LinearError::SingleCluster);
    }
    if n <= k_params {
        return Err(LinearError::Underdetermined {
            n_obs: n,
            n_params: k_params,
        });
    }
    let decomp = OrthoDecomp::factor(x, DEFAULT_RANK_TOL)?;
    if !decomp.omitted.is_empty() {
        return Err(LinearError::RankDeficient);
    }
    let bread = decomp.normal_matrix_inverse();

    // Meat: Σ_g s_g s_g' with per-cluster score s_g = X_g' u_g.
    let max_label = clusters.iter().copied().max().unwrap_or(0);
    let mut scores = vec![DVector::<f64>::zeros(k); max_label + 1];
    for row in 0..n {
        let u = residuals[row];
        let s = &mut scores[clusters[row]];
        for j in 0..k {
            s[j] += x[(row, j)] * u;
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in &scores {
        meat.ger(1.0, s, s, 1.0);
    }

    let g = n_clusters as f64;
    let n_f = n as f64;
    let c = (g / (g - 1.0)) * ((n_f - 1.0) / (n_f - k_params as f64));
    let vcov = &bread * meat * &bread * c;
    // kill roundoff asymmetry
    let vcov = (&vcov + vcov.transpose()) * 0.5;
    Ok(vcov)
}

/// Fitted time fixed-effects regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimated slopes by column name (regressors and year dummies).
    pub coefficients: BTreeMap<String, f64>,
    /// Cluster-robust standard errors, same keys as `coefficients`.
    pub std_errors: BTreeMap<String, f64>,
    /// Columns dropped for collinearity.
    pub omitted: Vec<String>,
    /// Average of the recovered unit effects.
    pub constant: f64,
    /// Squared correlation of demeaned fitted values with the demeaned
    /// dependent variable.
    pub r2_within: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub n_units: usize,
    pub drop_report: DropReport,
    /// Within residuals in estimation-sample row order.
    pub residuals: Vec<f64>,
    /// Recovered unit effect per unit id.
    pub fixed_effects: BTreeMap<String, f64>,
    /// Requested design columns in order (estimated and omitted together).
    pub terms: Vec<String>,
    /// Base year of the dummy set, when time dummies were requested.
    pub base_year: Option<i32>,
}

/// Fits the within regression described by `spec`.
///
/// Rows with a missing value in any referenced column are excluded, singleton
/// units are dropped with a report, collinear design columns are omitted, and
/// inference uses the clustered sandwich with units as clusters.
pub fn fit_fe(panel: &Panel, spec: &ModelSpec) -> Result<FitResult, LinearError> {
    spec.validate(panel)?;
    let (sample, _excluded) = panel.complete_cases(&spec.referenced_columns())?;
    let (sample, drop_report) = drop_singleton_groups(&sample);
    if sample.units().len() < 2 {
        return Err(LinearError::TooFewUnits {
            found: sample.units().len(),
        });
    }

    let design = within_transform(&sample, spec)?;
    let n = design.y.len();

    let raw_scale: f64 = sample
        .observations()
        .iter()
        .map(|o| {
            let v = o.value(&spec.dependent).expect("validated").unwrap_or(0.0);
            v * v
        })
        .sum();
    let tss: f64 = design.y.iter().map(|v| v * v).sum();
    if tss <= 1e-12 * raw_scale.max(f64::MIN_POSITIVE) {
        return Err(LinearError::DegenerateModel);
    }

    let decomp = OrthoDecomp::factor(&design.x, DEFAULT_RANK_TOL)?;
    let kept = decomp.kept.clone();
    let omitted: Vec<String> = decomp
        .omitted
        .iter()
        .map(|&j| design.column_names[j].clone())
        .collect();
    if n < kept.len() + 1 {
        return Err(LinearError::Underdetermined {
            n_obs: n,
            n_params: kept.len() + 1,
        });
    }

    let x_kept = if kept.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        let cols: Vec<DVector<f64>> =
            kept.iter().map(|&j| design.x.column(j).clone_owned()).collect();
        DMatrix::from_columns(&cols)
    };
    let beta = decomp.solve(&design.y);
    let fitted = &x_kept * &beta;
    let residuals = &design.y - &fitted;

    let std_errors_vec: Vec<f64> = if kept.is_empty() {
        Vec::new()
    } else {
        let vcov = cluster_robust_vcov_with_dof(
            &x_kept,
            &residuals,
            &design.cluster,
            kept.len() + 1,
        )?;
        (0..kept.len()).map(|j| vcov[(j, j)].max(0.0).sqrt()).collect()
    };

    // Unit effects from the stored means: c_i = ȳ_i - x̄_i' β (omitted slopes 0).
    let k_all = design.column_names.len();
    let mut beta_full = DVector::zeros(k_all);
    for (slot, &j) in kept.iter().enumerate() {
        beta_full[j] = beta[slot];
    }
    let mut fixed_effects = BTreeMap::new();
    for (u, unit) in design.unit_ids.iter().enumerate() {
        let xbar = design.unit_mean_x.row(u).transpose();
        fixed_effects.insert(unit.clone(), design.unit_mean_y[u] - xbar.dot(&beta_full));
    }
    let constant = fixed_effects.values().sum::<f64>() / fixed_effects.len() as f64;

    let r2_within = squared_correlation(fitted.as_slice(), design.y.as_slice());

    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let n_f = n as f64;
    let sigma2 = rss / n_f;
    let loglik = -0.5 * n_f * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);
    let k_ic = kept.len() as f64 + 1.0;
    let aic = -2.0 * loglik + 2.0 * k_ic;
    let bic = -2.0 * loglik + k_ic * n_f.ln();

    let mut coefficients = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    for (slot, &j) in kept.iter().enumerate() {
        coefficients.insert(design.column_names[j].clone(), beta[slot]);
        std_errors.insert(design.column_names[j].clone(), std_errors_vec[slot]);
    }

    let base_year = if spec.time_dummies {
        Some(
            spec.base_year
                .or_else(|| sample.years().first().copied())
                .expect("non-empty sample"),
        )
    } else {
        None
    };

    Ok(FitResult {
        coefficients,
        std_errors,
        omitted,
        constant,
        r2_within,
        aic,
        bic,
        n_obs: n,
        n_units: design.unit_ids.len(),
        drop_report,
        residuals: residuals.iter().copied().collect(),
        fixed_effects,
        terms: design.column_names,
        base_year,
    })
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return 0.0;
    }
    (cov * cov) / (var_a * var_b)
}

/// Expected level change of the dependent variable when a log regressor
/// moves by `pct_change` percent: `coef * pct_change / 100`.
pub fn interpret_level_log(coef: f64, pct_change: f64) -> f64 {
    coef * pct_change / 100.0
}
