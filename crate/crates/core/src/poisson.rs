//! Fixed-effects Poisson (quasi-)maximum likelihood for count panels.
//!
//! Conditioning on each unit's outcome total removes the unit effect exactly:
//! the within-unit outcome vector is multinomial with cell probabilities
//! `p_it = exp(x_it'β) / Σ_s exp(x_is'β)`, so the conditional log likelihood
//! is `Σ_i Σ_t y_it log p_it`. The score is `Σ_i Σ_t (y_it - n_i p_it) x_it`
//! with `n_i = Σ_t y_it`, and the Hessian has the closed multinomial form,
//! so the optimizer is plain Newton with step-halving. Inference uses the
//! robust sandwich `A^-1 (Σ_i s_i s_i') A^-1` built from per-unit scores,
//! which stays valid when the counts are not literally Poisson.
//!
//! Group-level accumulation of the likelihood, score, and Hessian is
//! embarrassingly parallel; with the `parallel` feature the kernels fan out
//! over groups via rayon, and the sequential fallbacks in [`seq`] are always
//! compiled and tested.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linear::{detect_collinearity, year_dummy_name, LinearError, ModelSpec, DEFAULT_RANK_TOL};
use crate::panel::{
    drop_singleton_groups, DropReason, DropReport, DroppedUnit, Panel, PanelError,
};

/// Convergence tolerance on the gradient max-norm and on the Newton step norm.
pub const FEP_TOL: f64 = 1e-8;
/// Iteration cap for the Newton loop.
pub const FEP_MAX_ITER: usize = 100;
/// Coefficient max-norm beyond which the fit is declared divergent; on the
/// log scale this is a rate factor above 3·10^6, far outside any plausible
/// estimate, and it is reached before a separable likelihood's vanishing
/// gradient can masquerade as convergence.
const DIVERGENCE_BOUND: f64 = 15.0;

/// Errors raised by the count-model estimator.
#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("unit {unit:?}, year {year}: outcome {value} is not a non-negative integer")]
    NonIntegerOutcome { unit: String, year: i32, value: f64 },
    #[error("need at least 2 groups after drops, found {found}")]
    TooFewGroups { found: usize },
    #[error("no design column has within-group variation")]
    DegenerateModel,
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// One unit's block of the count panel: outcomes, design rows, and the
/// outcome total the likelihood conditions on.
#[derive(Debug, Clone)]
pub struct FepGroup {
    pub unit_id: String,
    /// Outcome counts, stored as reals.
    pub y: DVector<f64>,
    /// Design rows (T_i × k), aligned with `y`.
    pub x: DMatrix<f64>,
    /// Sum of the outcomes, `n_i`.
    pub total: f64,
}

impl FepGroup {
    pub fn new(unit_id: impl Into<String>, y: DVector<f64>, x: DMatrix<f64>) -> FepGroup {
        let total = y.iter().sum();
        FepGroup {
            unit_id: unit_id.into(),
            y,
            x,
            total,
        }
    }

    /// Within-group probabilities `softmax(Xβ)`, guarded by max-subtraction
    /// so large indexes cannot overflow the exponentials.
    fn probabilities(&self, beta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * beta;
        let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = eta.map(|e| (e - max).exp());
        let denom: f64 = p.iter().sum();
        p /= denom;
        p
    }

    fn loglik(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.x * beta;
        let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + eta.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        self.y
            .iter()
            .zip(eta.iter())
            .map(|(&y, &e)| if y > 0.0 { y * (e - lse) } else { 0.0 })
            .sum()
    }

    /// Per-group score `X'(y - n_i p)`.
    fn score(&self, beta: &DVector<f64>) -> DVector<f64> {
        let p = self.probabilities(beta);
        let resid = &self.y - p * self.total;
        self.x.transpose() * resid
    }

    /// Per-group negative Hessian `n_i [X'diag(p)X - (X'p)(X'p)']`, which is
    /// positive semidefinite.
    fn neg_hessian(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let k = beta.len();
        let p = self.probabilities(beta);
        let mut weighted = DMatrix::zeros(k, k);
        for t in 0..self.x.nrows() {
            let row = self.x.row(t).transpose();
            weighted.ger(p[t], &row, &row, 1.0);
        }
        let xp = self.x.transpose() * &p;
        weighted.ger(-1.0, &xp, &xp, 1.0);
        weighted * self.total
    }
}

/// Sequential kernels over the group blocks. These are the reference
/// implementations; the top-level functions dispatch to rayon equivalents
/// when the `parallel` feature is enabled.
pub mod seq {
    use super::*;

    pub fn fep_loglik(groups: &[FepGroup], beta: &DVector<f64>) -> f64 {
        groups.iter().map(|g| g.loglik(beta)).sum()
    }

    pub fn fep_score(groups: &[FepGroup], beta: &DVector<f64>) -> DVector<f64> {
        groups
            .iter()
            .fold(DVector::zeros(beta.len()), |acc, g| acc + g.score(beta))
    }

    pub fn fep_neg_hessian(groups: &[FepGroup], beta: &DVector<f64>) -> DMatrix<f64> {
        groups
            .iter()
            .fold(DMatrix::zeros(beta.len(), beta.len()), |acc, g| {
                acc + g.neg_hessian(beta)
            })
    }
}

/// Conditional log likelihood `Σ_i Σ_t y_it log p_it`.
pub fn fep_loglik(groups: &[FepGroup], beta: &DVector<f64>) -> f64 {
    #[cfg(feature = "parallel")]
    {
        groups.par_iter().map(|g| g.loglik(beta)).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::fep_loglik(groups, beta)
    }
}

/// Score of the conditional likelihood, `Σ_i X_i'(y_i - n_i p_i)`.
pub fn fep_score(groups: &[FepGroup], beta: &DVector<f64>) -> DVector<f64> {
    #[cfg(feature = "parallel")]
    {
        groups
            .par_iter()
            .map(|g| g.score(beta))
            .reduce(|| DVector::zeros(beta.len()), |a, b| a + b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::fep_score(groups, beta)
    }
}

/// Negative Hessian of the conditional likelihood (positive semidefinite).
pub fn fep_neg_hessian(groups: &[FepGroup], beta: &DVector<f64>) -> DMatrix<f64> {
    #[cfg(feature = "parallel")]
    {
        groups
            .par_iter()
            .map(|g| g.neg_hessian(beta))
            .reduce(
                || DMatrix::zeros(beta.len(), beta.len()),
                |a, b| a + b,
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::fep_neg_hessian(groups, beta)
    }
}

/// Group blocks plus the design bookkeeping produced while assembling them.
pub struct FepDesign {
    pub groups: Vec<FepGroup>,
    /// Estimated design columns, in order.
    pub kept_names: Vec<String>,
    /// Columns omitted for lacking identifying (within-group) variation.
    pub omitted: Vec<String>,
    /// All requested design columns in order.
    pub terms: Vec<String>,
    pub drop_report: DropReport,
    pub base_year: Option<i32>,
    pub n_obs: usize,
}

/// Builds the per-unit blocks for the count model described by `spec`.
///
/// Rows with missing values in referenced columns are excluded; singleton
/// units and units whose outcome is zero in every period are dropped with a
/// report. Design columns are the regressors followed by year dummies, and a
/// column is omitted when it has no within-group variation left (detected on
/// the group-demeaned design, earlier columns preferred).
pub fn build_fep_design(panel: &Panel, spec: &ModelSpec) -> Result<FepDesign, PoissonError> {
    spec.validate(panel)?;
    let (sample, _excluded) = panel.complete_cases(&spec.referenced_columns())?;
    let (sample, mut drop_report) = drop_singleton_groups(&sample);

    // outcome must be counts
    for obs in sample.observations() {
        let v = obs.value(&spec.dependent)?.expect("complete cases");
        if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
            return Err(PoissonError::NonIntegerOutcome {
                unit: obs.unit_id.clone(),
                year: obs.year,
                value: v,
            });
        }
    }

    // drop units with an all-zero outcome: their conditional likelihood is
    // identically zero and carries no information about β
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for obs in sample.observations() {
        let v = obs.value(&spec.dependent)?.expect("complete cases");
        *totals.entry(obs.unit_id.as_str()).or_insert(0.0) += v;
    }
    let zero_units: Vec<String> = totals
        .iter()
        .filter(|(_, &t)| t == 0.0)
        .map(|(u, _)| u.to_string())
        .collect();
    let sample = if zero_units.is_empty() {
        sample
    } else {
        for unit in &zero_units {
            let n_obs = sample
                .observations()
                .iter()
                .filter(|o| &o.unit_id == unit)
                .count();
            drop_report.dropped_units.push(DroppedUnit {
                unit_id: unit.clone(),
                observations: n_obs,
                reason: DropReason::AllZeroOutcome,
            });
        }
        let keep: Vec<_> = sample
            .observations()
            .iter()
            .filter(|o| !zero_units.contains(&o.unit_id))
            .cloned()
            .collect();
        Panel::from_observations(keep)?
    };

    if sample.units().len() < 2 {
        return Err(PoissonError::TooFewGroups {
            found: sample.units().len(),
        });
    }

    let mut column_names = spec.regressors.clone();
    let mut dummy_years: Vec<i32> = Vec::new();
    let base_year = if spec.time_dummies {
        let base = spec
            .base_year
            .or_else(|| sample.years().first().copied())
            .expect("non-empty sample");
        dummy_years = sample.years().iter().copied().filter(|&y| y != base).collect();
        column_names.extend(dummy_years.iter().map(|&y| year_dummy_name(y)));
        Some(base)
    } else {
        None
    };
    let k_all = column_names.len();

    let n = sample.len();
    let mut raw = DMatrix::zeros(n, k_all);
    let mut unit_of_row = Vec::with_capacity(n);
    let units: Vec<String> = sample.units().to_vec();
    for (row, obs) in sample.observations().iter().enumerate() {
        for (j, role) in spec.regressors.iter().enumerate() {
            raw[(row, j)] = obs.value(role)?.expect("complete cases");
        }
        for (j, &dummy_year) in dummy_years.iter().enumerate() {
            raw[(row, spec.regressors.len() + j)] = f64::from(obs.year == dummy_year);
        }
        unit_of_row.push(units.binary_search(&obs.unit_id).expect("unit listed"));
    }

    // rank detection on the group-demeaned design: conditioning makes any
    // group-constant direction unidentifiable
    let mut demeaned = raw.clone();
    let mut counts = vec![0.0f64; units.len()];
    let mut means: DMatrix<f64> = DMatrix::zeros(units.len(), k_all);
    for row in 0..n {
        let u = unit_of_row[row];
        counts[u] += 1.0;
        for j in 0..k_all {
            means[(u, j)] += raw[(row, j)];
        }
    }
    for u in 0..units.len() {
        for j in 0..k_all {
            means[(u, j)] /= counts[u];
        }
    }
    for row in 0..n {
        let u = unit_of_row[row];
        for j in 0..k_all {
            demeaned[(row, j)] -= means[(u, j)];
        }
    }
    let omitted_idx = detect_collinearity(&demeaned, DEFAULT_RANK_TOL)?;
    let kept_idx: Vec<usize> = (0..k_all).filter(|j| !omitted_idx.contains(j)).collect();
    if kept_idx.is_empty() {
        return Err(PoissonError::DegenerateModel);
    }
    let omitted: Vec<String> = omitted_idx
        .iter()
        .map(|&j| column_names[j].clone())
        .collect();
    let kept_names: Vec<String> = kept_idx.iter().map(|&j| column_names[j].clone()).collect();

    let mut groups = Vec::with_capacity(units.len());
    for (u, unit) in units.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&r| unit_of_row[r] == u).collect();
        let mut y = DVector::zeros(rows.len());
        let mut x = DMatrix::zeros(rows.len(), kept_idx.len());
        for (slot, &r) in rows.iter().enumerate() {
            y[slot] = sample.observations()[r]
                .value(&spec.dependent)?
                .expect("complete cases");
            for (jj, &j) in kept_idx.iter().enumerate() {
                x[(slot, jj)] = raw[(r, j)];
            }
        }
        groups.push(FepGroup::new(unit.clone(), y, x));
    }

    Ok(FepDesign {
        groups,
        kept_names,
        omitted,
        terms: column_names,
        drop_report,
        base_year,
        n_obs: n,
    })
}

/// Fitted fixed-effects count model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FepFit {
    /// Estimated slopes by column name.
    pub coefficients: BTreeMap<String, f64>,
    /// Robust (sandwich) standard errors, same keys as `coefficients`.
    pub std_errors: BTreeMap<String, f64>,
    /// Columns dropped for lacking within-group variation.
    pub omitted: Vec<String>,
    /// Conditional log likelihood at the estimate.
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub n_groups: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the optimizer stopped because the coefficients ran away,
    /// which typically signals a separable outcome pattern.
    pub divergence_note: Option<String>,
    pub drop_report: DropReport,
    /// Requested design columns in order (estimated and omitted together).
    pub terms: Vec<String>,
    pub base_year: Option<i32>,
}

/// Fits the fixed-effects count model by Newton iteration on the conditional
/// likelihood, starting from zero, with step-halving on any decrease.
pub fn fit_fep(panel: &Panel, spec: &ModelSpec) -> Result<FepFit, PoissonError> {
    let design = build_fep_design(panel, spec)?;
    let k = design.kept_names.len();
    let mut beta = DVector::zeros(k);
    let mut loglik = fep_loglik(&design.groups, &beta);
    let mut converged = false;
    let mut divergence_note = None;
    let mut iterations = 0;

    for iter in 1..=FEP_MAX_ITER {
        iterations = iter;
        let score = fep_score(&design.groups, &beta);
        if score.amax() < FEP_TOL {
            converged = true;
            break;
        }
        let info = fep_neg_hessian(&design.groups, &beta);
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&score),
            None => match info.lu().solve(&score) {
                Some(s) => s,
                None => {
                    divergence_note = Some(
                        "information matrix is singular away from the optimum; \
                         the outcome pattern may be separable within groups"
                            .to_string(),
                    );
                    break;
                }
            },
        };
        let step_norm = step.norm();
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = &beta + &step * lambda;
            let candidate_ll = fep_loglik(&design.groups, &candidate);
            if candidate_ll >= loglik {
                beta = candidate;
                loglik = candidate_ll;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // the quadratic model cannot improve a concave likelihood unless
            // we are at (numerical) stationarity
            converged = score.amax() < FEP_TOL.sqrt();
            break;
        }
        if beta.amax() > DIVERGENCE_BOUND {
            break;
        }
        if step_norm < FEP_TOL {
            converged = true;
            break;
        }
    }
    if beta.amax() > DIVERGENCE_BOUND {
        converged = false;
        divergence_note = Some(format!(
            "coefficient magnitude exceeded {DIVERGENCE_BOUND} on the log scale; \
             the outcome pattern may be separable within groups"
        ));
    }
    if divergence_note.is_some() {
        converged = false;
    }

    // robust sandwich from per-group scores at the estimate
    let info = fep_neg_hessian(&design.groups, &beta);
    let std_errors_vec: Vec<f64> = match info.clone().try_inverse() {
        Some(bread) => {
            let mut meat = DMatrix::zeros(k, k);
            for g in &design.groups {
                let s = g.score(&beta);
                meat.ger(1.0, &s, &s, 1.0);
            }
            let vcov = &bread * meat * &bread;
            (0..k).map(|j| vcov[(j, j)].max(0.0).sqrt()).collect()
        }
        None => vec![f64::NAN; k],
    };

    let n_f = design.n_obs as f64;
    let k_f = k as f64;
    let aic = -2.0 * loglik + 2.0 * k_f;
    let bic = -2.0 * loglik + k_f * n_f.ln();

    let mut coefficients = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    for (j, name) in design.kept_names.iter().enumerate() {
        coefficients.insert(name.clone(), beta[j]);
        std_errors.insert(name.clone(), std_errors_vec[j]);
    }

    Ok(FepFit {
        coefficients,
        std_errors,
        omitted: design.omitted,
        loglik,
        aic,
        bic,
        n_obs: design.n_obs,
        n_groups: design.groups.len(),
        converged,
        iterations,
        divergence_note,
        drop_report: design.drop_report,
        terms: design.terms,
        base_year: design.base_year,
    })
}

/// Expected percent change of the count when a log regressor moves by
/// `pct_change` percent: `coef * pct_change`, read as a percentage.
pub fn interpret_semi_elasticity(coef: f64, pct_change: f64) -> f64 {
    coef * pct_change
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelObservation;
    use std::collections::BTreeMap as Map;

    fn count_panel(rows: &[(&str, i32, f64, f64, f64)]) -> Panel {
        // (unit, year, count y, x1, x2)
        let obs = rows
            .iter()
            .map(|&(unit, year, y, x1, x2)| PanelObservation {
                unit_id: unit.into(),
                year,
                n_dp: 0,
                staff_costs: 0.0,
                travel_costs: 0.0,
                extra: Map::from([
                    ("y".to_string(), Some(y)),
                    ("x1".to_string(), Some(x1)),
                    ("x2".to_string(), Some(x2)),
                ]),
            })
            .collect();
        Panel::from_observations(obs).unwrap()
    }

    fn spec_x1() -> ModelSpec {
        ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        }
    }

    #[test]
    fn loglik_and_score_match_hand_case() {
        // one group, y = (1, 0), scalar x = (0, 1), β = 0:
        // p = (1/2, 1/2); ℓ = ln(1/2); score = (1-0.5)·0 + (0-0.5)·1 = -1/2
        let g = FepGroup::new(
            "A",
            DVector::from_column_slice(&[1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        );
        let beta = DVector::zeros(1);
        let groups = vec![g];
        assert!((seq::fep_loglik(&groups, &beta) - 0.5f64.ln()).abs() < 1e-12);
        assert!((seq::fep_score(&groups, &beta)[0] + 0.5).abs() < 1e-12);
        // neg Hessian: n [Σ p x² - (Σ p x)²] = 1·(0.5 - 0.25) = 0.25
        assert!((seq::fep_neg_hessian(&groups, &beta)[(0, 0)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn parallel_kernels_match_sequential() {
        let groups: Vec<FepGroup> = (0..8)
            .map(|i| {
                let t = 3 + (i % 3);
                let y = DVector::from_iterator(t, (0..t).map(|s| ((i + s) % 4) as f64));
                let x = DMatrix::from_fn(t, 2, |r, c| ((i * 7 + r * 3 + c) % 5) as f64 * 0.3 - 0.6);
                FepGroup::new(format!("G{i}"), y, x)
            })
            .collect();
        let beta = DVector::from_column_slice(&[0.4, -0.7]);
        assert!((fep_loglik(&groups, &beta) - seq::fep_loglik(&groups, &beta)).abs() < 1e-12);
        let d = fep_score(&groups, &beta) - seq::fep_score(&groups, &beta);
        assert!(d.amax() < 1e-12);
        let h = fep_neg_hessian(&groups, &beta) - seq::fep_neg_hessian(&groups, &beta);
        assert!(h.amax() < 1e-12);
    }

    #[test]
    fn loglik_guard_survives_huge_indexes() {
        let g = FepGroup::new(
            "A",
            DVector::from_column_slice(&[2.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        );
        let beta = DVector::from_column_slice(&[800.0]);
        let ll = seq::fep_loglik(&[g], &beta);
        assert!(ll.is_finite());
        // p ≈ (e^-800, 1): ℓ ≈ 2·(-800) + 1·0
        assert!((ll + 1600.0).abs() < 1e-6);
    }

    fn dgp_count_panel(seed: u64) -> Panel {
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, Poisson};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for unit in 0..35 {
            let c_i: f64 = rng.gen_range(-0.5..0.5);
            let span = rng.gen_range(4..=12);
            for year in 2005..2005 + span {
                let x1: f64 = rng.gen_range(-1.0..1.0);
                let x2: f64 = rng.gen_range(-1.0..1.0);
                let rate = (c_i + 0.5 * x1 - 0.2 * x2 + 1.0).exp();
                let y: f64 = Poisson::new(rate).unwrap().sample(&mut rng);
                rows.push((format!("U{unit:02}"), year, y, x1, x2));
            }
        }
        let obs = rows
            .into_iter()
            .map(|(unit, year, y, x1, x2)| PanelObservation {
                unit_id: unit,
                year,
                n_dp: 0,
                staff_costs: 0.0,
                travel_costs: 0.0,
                extra: Map::from([
                    ("y".to_string(), Some(y)),
                    ("x1".to_string(), Some(x1)),
                    ("x2".to_string(), Some(x2)),
                ]),
            })
            .collect();
        Panel::from_observations(obs).unwrap()
    }

    #[test]
    fn recovers_poisson_dgp_slopes() {
        let panel = dgp_count_panel(41);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into(), "x2".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        };
        let fit = fit_fep(&panel, &spec).unwrap();
        assert!(fit.converged, "did not converge in {} iterations", fit.iterations);
        assert!((fit.coefficients["x1"] - 0.5).abs() < 3.0 * fit.std_errors["x1"]);
        assert!((fit.coefficients["x2"] + 0.2).abs() < 3.0 * fit.std_errors["x2"]);
        assert!(fit.iterations < 20);
    }

    #[test]
    fn gradient_vanishes_at_the_estimate() {
        let panel = dgp_count_panel(43);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into(), "x2".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        };
        let fit = fit_fep(&panel, &spec).unwrap();
        let design = build_fep_design(&panel, &spec).unwrap();
        let beta = DVector::from_column_slice(&[
            fit.coefficients["x1"],
            fit.coefficients["x2"],
        ]);
        assert!(fep_score(&design.groups, &beta).amax() < FEP_TOL);
    }

    #[test]
    fn adding_group_constant_to_regressor_leaves_fit_unchanged() {
        let panel = dgp_count_panel(47);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into(), "x2".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        };
        let base = fit_fep(&panel, &spec).unwrap();
        let shifted: Vec<PanelObservation> = panel
            .observations()
            .iter()
            .map(|o| {
                let mut o = o.clone();
                let shift = (o.unit_id.as_bytes()[1] as f64) * 0.31;
                let x1 = o.extra["x1"].unwrap() + shift;
                o.extra.insert("x1".into(), Some(x1));
                o
            })
            .collect();
        let moved = fit_fep(&Panel::from_observations(shifted).unwrap(), &spec).unwrap();
        for role in ["x1", "x2"] {
            assert!(
                (base.coefficients[role] - moved.coefficients[role]).abs() < 1e-8,
                "{role} moved"
            );
        }
    }

    #[test]
    fn all_zero_outcome_units_are_dropped_with_reason() {
        let panel = count_panel(&[
            ("A", 2005, 0.0, 0.1, 0.0),
            ("A", 2006, 0.0, 0.9, 0.0),
            ("B", 2005, 1.0, 0.2, 0.0),
            ("B", 2006, 2.0, 0.8, 0.0),
            ("C", 2005, 3.0, 0.5, 0.0),
            ("C", 2006, 1.0, 0.1, 0.0),
        ]);
        let fit = fit_fep(&panel, &spec_x1()).unwrap();
        assert_eq!(fit.n_groups, 2);
        let dropped: Vec<_> = fit
            .drop_report
            .dropped_units
            .iter()
            .filter(|d| d.reason == DropReason::AllZeroOutcome)
            .collect();
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].unit_id, "A");
    }

    #[test]
    fn fractional_outcome_is_rejected() {
        let panel = count_panel(&[
            ("A", 2005, 1.5, 0.1, 0.0),
            ("A", 2006, 1.0, 0.9, 0.0),
            ("B", 2005, 1.0, 0.2, 0.0),
            ("B", 2006, 2.0, 0.8, 0.0),
        ]);
        assert!(matches!(
            fit_fep(&panel, &spec_x1()),
            Err(PoissonError::NonIntegerOutcome { value, .. }) if value == 1.5
        ));
    }

    #[test]
    fn separable_pattern_reports_divergence() {
        // outcome mass sits entirely on the high-x period in every group, so
        // the likelihood increases in β without bound
        let panel = count_panel(&[
            ("A", 2005, 0.0, 0.0, 0.0),
            ("A", 2006, 3.0, 1.0, 0.0),
            ("B", 2005, 0.0, 0.0, 0.0),
            ("B", 2006, 2.0, 1.0, 0.0),
        ]);
        let fit = fit_fep(&panel, &spec_x1()).unwrap();
        assert!(!fit.converged);
        assert!(fit.divergence_note.is_some());
    }

    #[test]
    fn newton_matches_coarse_grid_search() {
        let panel = dgp_count_panel(53);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into(), "x2".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        };
        let fit = fit_fep(&panel, &spec).unwrap();
        let design = build_fep_design(&panel, &spec).unwrap();
        // refine a 2-d grid around zero down to 1e-3 spacing
        let mut center = (0.0f64, 0.0f64);
        let mut step = 0.64f64;
        while step >= 1e-3 {
            let mut best = (f64::NEG_INFINITY, center);
            for i in -4..=4i32 {
                for j in -4..=4i32 {
                    let cand = (center.0 + step * i as f64, center.1 + step * j as f64);
                    let ll = fep_loglik(
                        &design.groups,
                        &DVector::from_column_slice(&[cand.0, cand.1]),
                    );
                    if ll > best.0 {
                        best = (ll, cand);
                    }
                }
            }
            center = best.1;
            step /= 2.0;
        }
        assert!((fit.coefficients["x1"] - center.0).abs() < 5e-3);
        assert!((fit.coefficients["x2"] - center.1).abs() < 5e-3);
    }

    #[test]
    fn information_criteria_use_slope_count_only() {
        let panel = dgp_count_panel(59);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into(), "x2".into()],
            time_dummies: false,
            base_year: None,
            include_lags: false,
        };
        let fit = fit_fep(&panel, &spec).unwrap();
        assert!((fit.aic - (-2.0 * fit.loglik + 4.0)).abs() < 1e-10);
        let expected_bic = -2.0 * fit.loglik + 2.0 * (fit.n_obs as f64).ln();
        assert!((fit.bic - expected_bic).abs() < 1e-10);
    }

    #[test]
    fn semi_elasticity_interpretation_matches_convention() {
        assert!((interpret_semi_elasticity(0.47, 100.0) - 47.0).abs() < 1e-12);
        assert!((interpret_semi_elasticity(-0.22, 10.0) + 2.2).abs() < 1e-12);
    }

    #[test]
    fn year_dummies_exclude_base_year() {
        let panel = dgp_count_panel(61);
        let spec = ModelSpec {
            dependent: "y".into(),
            regressors: vec!["x1".into()],
            time_dummies: true,
            base_year: Some(2005),
            include_lags: false,
        };
        let fit = fit_fep(&panel, &spec).unwrap();
        assert_eq!(fit.base_year, Some(2005));
        assert!(!fit.coefficients.contains_key("year_2005"));
        assert!(fit.coefficients.contains_key("year_2006"));
    }
}
