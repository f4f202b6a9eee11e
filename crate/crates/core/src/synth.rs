//! Deterministic synthetic data generators for the test suite, the
//! benchmarks, and the bundled demonstration fixtures.
//!
//! Every generator is driven by a seeded ChaCha stream, so the same seed
//! always produces the same data on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::indicators::{
    Gender, Location, PhdRecord, PublicationRecord, Sector, StaffRecord, StaffRole,
};
use crate::jel::JelCode;
use crate::panel::{Panel, PanelObservation};

use std::collections::BTreeMap;

fn real_panel_row(
    unit: String,
    year: i32,
    y: f64,
    x1: f64,
    x2: f64,
) -> PanelObservation {
    PanelObservation {
        unit_id: unit,
        year,
        n_dp: 0,
        staff_costs: 0.0,
        travel_costs: 0.0,
        extra: BTreeMap::from([
            ("y".to_string(), Some(y)),
            ("x1".to_string(), Some(x1)),
            ("x2".to_string(), Some(x2)),
        ]),
    }
}

/// Unbalanced linear panel with unit effects: 35 units observed for 2–12
/// years inside 2005–2016, `y = 1.5·x1 − 0.9·x2 + c_i + ε` with
/// `ε ~ N(0, 0.5)`. Columns `y`, `x1`, `x2`.
pub fn fe_panel(seed: u64) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).expect("valid sigma");
    let mut rows = Vec::new();
    for unit in 0..35 {
        let c_i: f64 = rng.gen_range(-2.0..2.0);
        let span = rng.gen_range(2..=12);
        let start = 2005 + rng.gen_range(0..=(12 - span));
        for year in start..start + span {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            let y = 1.5 * x1 - 0.9 * x2 + c_i + noise.sample(&mut rng);
            rows.push(real_panel_row(format!("SP{unit:02}"), year, y, x1, x2));
        }
    }
    Panel::from_observations(rows).expect("generated rows are unique")
}

/// Unbalanced count panel with unit effects: outcomes drawn from
/// `Poisson(exp(1 + 0.5·x1 − 0.2·x2 + c_i))`. Columns `y`, `x1`, `x2`.
pub fn count_panel(seed: u64) -> Panel {
    count_panel_sized(seed, 35, 4, 12)
}

/// [`count_panel`] with explicit unit count and span range; larger settings
/// feed the benchmarks.
pub fn count_panel_sized(seed: u64, n_units: usize, min_span: i32, max_span: i32) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for unit in 0..n_units {
        let c_i: f64 = rng.gen_range(-0.5..0.5);
        let span = rng.gen_range(min_span..=max_span);
        for offset in 0..span {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            let rate = (1.0 + 0.5 * x1 - 0.2 * x2 + c_i).exp();
            let y: f64 = Poisson::new(rate).expect("positive rate").sample(&mut rng);
            rows.push(real_panel_row(format!("U{unit:03}"), 2005 + offset, y, x1, x2));
        }
    }
    Panel::from_observations(rows).expect("generated rows are unique")
}

/// Research-center-shaped panel: 35 sub-projects over 2005–2016 with the
/// life-span mix 12×4, 11×8, 5×12 years plus 7 irregular spans; count
/// outcome `n_dp` driven by log staff and travel costs with unit effects and
/// a mild time trend.
pub fn study_panel(seed: u64) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let staff_ln = Normal::<f64>::new(12.5, 0.4).expect("valid sigma");
    let travel_ln = Normal::<f64>::new(9.5, 0.5).expect("valid sigma");
    let mut spans: Vec<i32> = Vec::new();
    spans.extend([4; 12]);
    spans.extend([8; 11]);
    spans.extend([12; 5]);
    for _ in 0..7 {
        spans.push(rng.gen_range(2..=12));
    }
    let mut rows = Vec::new();
    for (unit, &span) in spans.iter().enumerate() {
        let c_i: f64 = rng.gen_range(-0.3..0.3);
        let start = 2005 + rng.gen_range(0..=(12 - span));
        for year in start..start + span {
            let staff_costs = staff_ln.sample(&mut rng).exp();
            let travel_costs = travel_ln.sample(&mut rng).exp();
            let eta = -3.0 + 0.45 * staff_costs.ln() - 0.15 * travel_costs.ln()
                + c_i
                + 0.03 * f64::from(year - 2005);
            let n_dp = Poisson::new(eta.exp())
                .expect("positive rate")
                .sample(&mut rng) as u32;
            rows.push(PanelObservation {
                unit_id: format!("SP{:02}", unit + 1),
                year,
                n_dp,
                staff_costs: (staff_costs * 100.0).round() / 100.0,
                travel_costs: (travel_costs * 100.0).round() / 100.0,
                extra: BTreeMap::new(),
            });
        }
    }
    Panel::from_observations(rows).expect("generated rows are unique")
}

/// Publication set whose subject codes cover all 20 letters: the first codes
/// cycle through the alphabet and up to two extra codes are drawn at random,
/// with skewed citation counts.
pub fn network_publications(seed: u64, n_pubs: usize) -> Vec<PublicationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<JelCode> = JelCode::all().collect();
    (0..n_pubs)
        .map(|i| {
            let mut codes = vec![letters[i % letters.len()]];
            for _ in 0..rng.gen_range(0..=2usize) {
                let extra = letters[rng.gen_range(0..letters.len())];
                if !codes.contains(&extra) {
                    codes.push(extra);
                }
            }
            let skew: f64 = rng.gen::<f64>();
            PublicationRecord {
                pub_id: format!("DP{i:04}"),
                unit_id: format!("SP{:02}", 1 + i % 35),
                year: 2005 + (i % 12) as i32,
                citations: (skew * skew * skew * 60.0) as u32,
                n_authors: rng.gen_range(1..=5),
                field_mean_citations: rng.gen_range(1.0..10.0),
                journal_mean_citations: rng.gen_range(1.0..12.0),
                jel_codes: codes,
            }
        })
        .collect()
}

/// Staff roster across the 35 sub-projects with fractional positions.
pub fn staff_roster(seed: u64, n_records: usize) -> Vec<StaffRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_records)
        .map(|i| StaffRecord {
            unit_id: format!("SP{:02}", 1 + i % 35),
            year: 2005 + (i % 12) as i32,
            fte: (rng.gen_range(0.5..=2.5f64) * 20.0).round() / 20.0,
            role: if i % 3 == 0 {
                StaffRole::Postdoc
            } else {
                StaffRole::Doc
            },
        })
        .collect()
}

/// Doctoral cohort of 65 graduates whose academia cells count 11/6/21/7 by
/// (gender, location) and whose 20 remaining graduates went elsewhere.
pub fn phd_cohort() -> Vec<PhdRecord> {
    let cells: [(Gender, Location, Sector, usize); 8] = [
        (Gender::Female, Location::Germany, Sector::Academia, 11),
        (Gender::Female, Location::Abroad, Sector::Academia, 6),
        (Gender::Male, Location::Germany, Sector::Academia, 21),
        (Gender::Male, Location::Abroad, Sector::Academia, 7),
        (Gender::Female, Location::Germany, Sector::Other, 8),
        (Gender::Female, Location::Abroad, Sector::Other, 1),
        (Gender::Male, Location::Germany, Sector::Other, 9),
        (Gender::Male, Location::Abroad, Sector::Other, 2),
    ];
    let mut records = Vec::new();
    let mut serial = 0;
    for (gender, location, sector, count) in cells {
        for _ in 0..count {
            serial += 1;
            let start = 2005 + serial % 8;
            records.push(PhdRecord {
                person_id: format!("PHD{serial:03}"),
                gender,
                start_year: start,
                defense_year: start + 3 + serial % 3,
                publications: (serial % 5) as u32,
                post_phd_location: location,
                post_phd_sector: sector,
            });
        }
    }
    records
}

/// Two document collections whose top-`k` keyword sets intersect in exactly
/// `shared` terms: `shared` common high-frequency terms, `k − shared`
/// distinct high-frequency terms per side, plus low-frequency filler that
/// never reaches the cutoff.
pub fn engineered_corpora(k: usize, shared: usize) -> (Vec<String>, Vec<String>) {
    assert!(shared <= k, "shared terms cannot exceed k");
    let build = |prefix: &str| -> Vec<String> {
        let mut doc = String::new();
        for i in 0..shared {
            for _ in 0..10 {
                doc.push_str(&format!("common{i:03} "));
            }
        }
        for i in shared..k {
            for _ in 0..10 {
                doc.push_str(&format!("{prefix}{i:03} "));
            }
        }
        let mut filler = String::new();
        for i in 0..k {
            filler.push_str(&format!("{prefix}filler{i:03} "));
        }
        vec![doc, filler]
    };
    (build("alpha"), build("bravo"))
}
