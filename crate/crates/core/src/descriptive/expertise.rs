//! Expertise attribution for project leaders and field-level correlations.
//!
//! Each person-year of project leadership carries a total weight of 1,
//! divided evenly first across the projects the person leads that year and
//! then across each project's subject areas: leading one project with four
//! areas gives 0.25 per area, leading two single-area projects gives 0.5 per
//! project. Summing over active years yields weighted expertise years per
//! (person, subject) pair. Rank is carried as a grouping attribute for
//! breakdowns and never changes the weights.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DescriptiveError;
use crate::jel::JelCode;

/// Academic rank of a project leader; a grouping attribute only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiRank {
    FullProfessor,
    JuniorProfessor,
    Postdoc,
}

impl FromStr for PiRank {
    type Err = String;
    fn from_str(s: &str) -> Result<PiRank, String> {
        match s {
            "full_professor" => Ok(PiRank::FullProfessor),
            "junior_professor" => Ok(PiRank::JuniorProfessor),
            "postdoc" => Ok(PiRank::Postdoc),
            other => Err(format!(
                "unknown rank {other:?} (expected full_professor, junior_professor, or postdoc)"
            )),
        }
    }
}

impl fmt::Display for PiRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PiRank::FullProfessor => "full_professor",
            PiRank::JuniorProfessor => "junior_professor",
            PiRank::Postdoc => "postdoc",
        })
    }
}

/// One project led by a person: its subject areas and active years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectLead {
    pub project_id: String,
    pub areas: Vec<JelCode>,
    pub active_years: Vec<i32>,
}

/// A person's full leadership record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiAssignment {
    pub person_id: String,
    pub rank: PiRank,
    pub projects: Vec<ProjectLead>,
}

/// Weighted expertise years per (person, subject) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseWeights {
    by_person: BTreeMap<String, BTreeMap<JelCode, f64>>,
    rank_of: BTreeMap<String, PiRank>,
}

impl ExpertiseWeights {
    /// Weighted years per subject for one person.
    pub fn person(&self, person_id: &str) -> Option<&BTreeMap<JelCode, f64>> {
        self.by_person.get(person_id)
    }

    pub fn persons(&self) -> impl Iterator<Item = (&String, &BTreeMap<JelCode, f64>)> {
        self.by_person.iter()
    }

    pub fn rank(&self, person_id: &str) -> Option<PiRank> {
        self.rank_of.get(person_id).copied()
    }

    /// Weighted years per subject summed over all persons.
    pub fn jel_totals(&self) -> BTreeMap<JelCode, f64> {
        let mut totals = BTreeMap::new();
        for weights in self.by_person.values() {
            for (&jel, &w) in weights {
                *totals.entry(jel).or_insert(0.0) += w;
            }
        }
        totals
    }

    /// Weighted years per subject summed over persons of one rank.
    pub fn jel_totals_for_rank(&self, rank: PiRank) -> BTreeMap<JelCode, f64> {
        let mut totals = BTreeMap::new();
        for (person, weights) in &self.by_person {
            if self.rank_of.get(person) == Some(&rank) {
                for (&jel, &w) in weights {
                    *totals.entry(jel).or_insert(0.0) += w;
                }
            }
        }
        totals
    }
}

/// Accumulates weighted expertise years from leadership records.
///
/// For every calendar year a person has at least one active project, a unit
/// weight is split as `(1 / projects active that year) · (1 / areas in the
/// project)` over the project's distinct areas, so each person-year
/// contributes exactly 1 in total.
pub fn expertise_weights(
    assignments: &[PiAssignment],
) -> Result<ExpertiseWeights, DescriptiveError> {
    let mut by_person: BTreeMap<String, BTreeMap<JelCode, f64>> = BTreeMap::new();
    let mut rank_of = BTreeMap::new();
    for assignment in assignments {
        if by_person.contains_key(&assignment.person_id) {
            return Err(DescriptiveError::DuplicatePerson {
                person: assignment.person_id.clone(),
            });
        }
        if assignment.projects.is_empty() {
            return Err(DescriptiveError::NoProjects {
                person: assignment.person_id.clone(),
            });
        }
        let mut areas_per_project: Vec<BTreeSet<JelCode>> = Vec::new();
        for project in &assignment.projects {
            let areas: BTreeSet<JelCode> = project.areas.iter().copied().collect();
            if areas.is_empty() {
                return Err(DescriptiveError::NoAreas {
                    person: assignment.person_id.clone(),
                    project: project.project_id.clone(),
                });
            }
            areas_per_project.push(areas);
        }

        let mut active: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (idx, project) in assignment.projects.iter().enumerate() {
            for &year in &project.active_years {
                let slots = active.entry(year).or_default();
                if !slots.contains(&idx) {
                    slots.push(idx);
                }
            }
        }

        let weights = by_person.entry(assignment.person_id.clone()).or_default();
        for project_idxs in active.values() {
            let project_weight = 1.0 / project_idxs.len() as f64;
            for &idx in project_idxs {
                let areas = &areas_per_project[idx];
                let area_weight = project_weight / areas.len() as f64;
                for &jel in areas {
                    *weights.entry(jel).or_insert(0.0) += area_weight;
                }
            }
        }
        rank_of.insert(assignment.person_id.clone(), assignment.rank);
    }
    Ok(ExpertiseWeights { by_person, rank_of })
}

/// Pearson correlation of two subject-indexed series over their shared keys.
pub fn field_correlation(
    a: &BTreeMap<JelCode, f64>,
    b: &BTreeMap<JelCode, f64>,
) -> Result<f64, DescriptiveError> {
    let shared: Vec<JelCode> = a.keys().filter(|k| b.contains_key(k)).copied().collect();
    if shared.len() < 2 {
        return Err(DescriptiveError::TooFewSharedFields {
            found: shared.len(),
        });
    }
    let n = shared.len() as f64;
    let xs: Vec<f64> = shared.iter().map(|k| a[k]).collect();
    let ys: Vec<f64> = shared.iter().map(|k| b[k]).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
    }
    if var_x <= 0.0 || var_y <= 0.0 {
        return Err(DescriptiveError::ZeroVariance);
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jel(letter: char) -> JelCode {
        JelCode::new(letter).unwrap()
    }

    fn lead(project: &str, areas: &str, years: &[i32]) -> ProjectLead {
        ProjectLead {
            project_id: project.into(),
            areas: JelCode::parse_list(areas).unwrap(),
            active_years: years.to_vec(),
        }
    }

    #[test]
    fn four_areas_give_a_quarter_each() {
        let assignments = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::FullProfessor,
            projects: vec![lead("A1", "C;E;G;J", &[2010])],
        }];
        let weights = expertise_weights(&assignments).unwrap();
        let person = weights.person("p1").unwrap();
        for letter in ['C', 'E', 'G', 'J'] {
            assert!((person[&jel(letter)] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_projects_split_the_year_in_half() {
        let assignments = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::JuniorProfessor,
            projects: vec![lead("A1", "C", &[2010]), lead("B2", "G", &[2010])],
        }];
        let weights = expertise_weights(&assignments).unwrap();
        let person = weights.person("p1").unwrap();
        assert!((person[&jel('C')] - 0.5).abs() < 1e-15);
        assert!((person[&jel('G')] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn years_accumulate_unit_weights() {
        let assignments = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::Postdoc,
            projects: vec![lead("A1", "C", &[2008, 2009, 2010])],
        }];
        let weights = expertise_weights(&assignments).unwrap();
        assert!((weights.person("p1").unwrap()[&jel('C')] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn every_person_year_sums_to_one() {
        // staggered activity: 2008 one project, 2009 both, 2010 the other
        let assignments = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::FullProfessor,
            projects: vec![
                lead("A1", "C;E;G", &[2008, 2009]),
                lead("B2", "J;L", &[2009, 2010]),
            ],
        }];
        let weights = expertise_weights(&assignments).unwrap();
        let total: f64 = weights.person("p1").unwrap().values().sum();
        // three person-years of activity
        assert!((total - 3.0).abs() < 1e-12);
        // the shared year splits half/half across projects
        let person = weights.person("p1").unwrap();
        assert!((person[&jel('J')] - (0.5 / 2.0 + 1.0 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn duplicate_areas_within_a_project_collapse() {
        let assignments = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::FullProfessor,
            projects: vec![lead("A1", "C;C", &[2010])],
        }];
        let weights = expertise_weights(&assignments).unwrap();
        assert!((weights.person("p1").unwrap()[&jel('C')] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_errors_name_the_offender() {
        let no_projects = vec![PiAssignment {
            person_id: "p1".into(),
            rank: PiRank::Postdoc,
            projects: vec![],
        }];
        assert!(matches!(
            expertise_weights(&no_projects),
            Err(DescriptiveError::NoProjects { ref person }) if person == "p1"
        ));

        let no_areas = vec![PiAssignment {
            person_id: "p2".into(),
            rank: PiRank::Postdoc,
            projects: vec![ProjectLead {
                project_id: "A1".into(),
                areas: vec![],
                active_years: vec![2010],
            }],
        }];
        assert!(matches!(
            expertise_weights(&no_areas),
            Err(DescriptiveError::NoAreas { ref project, .. }) if project == "A1"
        ));
    }

    #[test]
    fn rank_breakdown_partitions_the_totals() {
        let assignments = vec![
            PiAssignment {
                person_id: "p1".into(),
                rank: PiRank::FullProfessor,
                projects: vec![lead("A1", "C", &[2010])],
            },
            PiAssignment {
                person_id: "p2".into(),
                rank: PiRank::Postdoc,
                projects: vec![lead("B2", "C", &[2010, 2011])],
            },
        ];
        let weights = expertise_weights(&assignments).unwrap();
        let all = weights.jel_totals();
        let seniors = weights.jel_totals_for_rank(PiRank::FullProfessor);
        let postdocs = weights.jel_totals_for_rank(PiRank::Postdoc);
        assert!((all[&jel('C')] - 3.0).abs() < 1e-15);
        assert!((seniors[&jel('C')] - 1.0).abs() < 1e-15);
        assert!((postdocs[&jel('C')] - 2.0).abs() < 1e-15);
    }

    fn series(values: &[(char, f64)]) -> BTreeMap<JelCode, f64> {
        values.iter().map(|&(c, v)| (jel(c), v)).collect()
    }

    #[test]
    fn correlation_of_a_series_with_itself_is_one() {
        let a = series(&[('C', 1.0), ('E', 5.0), ('G', 2.0)]);
        assert!((field_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_flips_sign_under_negation() {
        let a = series(&[('C', 1.0), ('E', 5.0), ('G', 2.0)]);
        let b = series(&[('C', -1.0 + 4.0), ('E', -5.0 + 4.0), ('G', -2.0 + 4.0)]);
        assert!((field_correlation(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_hand_case() {
        let a = series(&[('C', 1.0), ('E', 2.0), ('G', 3.0)]);
        let b = series(&[('C', 2.0), ('E', 4.0), ('G', 7.0)]);
        // r = 15/√228: nΣxy−ΣxΣy = 93−78 = 15; denominators √6 and √38
        let r = field_correlation(&a, &b).unwrap();
        assert!((r - 15.0 / 228.0f64.sqrt()).abs() < 1e-12);
        assert!((r - 0.9934).abs() < 1e-4);
    }

    #[test]
    fn correlation_is_invariant_to_positive_affine_maps() {
        let a = series(&[('C', 1.0), ('E', 2.0), ('G', 5.0), ('J', 3.0)]);
        let b = series(&[('C', 4.0), ('E', 1.0), ('G', 2.0), ('J', 9.0)]);
        let scaled: BTreeMap<JelCode, f64> =
            a.iter().map(|(&k, &v)| (k, 2.5 * v + 7.0)).collect();
        let r1 = field_correlation(&a, &b).unwrap();
        let r2 = field_correlation(&scaled, &b).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_series_are_rejected() {
        let a = series(&[('C', 1.0)]);
        assert!(matches!(
            field_correlation(&a, &a),
            Err(DescriptiveError::TooFewSharedFields { found: 1 })
        ));
        let flat = series(&[('C', 2.0), ('E', 2.0), ('G', 2.0)]);
        let varying = series(&[('C', 1.0), ('E', 2.0), ('G', 3.0)]);
        assert!(matches!(
            field_correlation(&flat, &varying),
            Err(DescriptiveError::ZeroVariance)
        ));
    }

    #[test]
    fn correlation_uses_only_shared_keys() {
        let a = series(&[('C', 1.0), ('E', 2.0), ('G', 3.0), ('Z', 99.0)]);
        let b = series(&[('C', 2.0), ('E', 4.0), ('G', 6.0), ('Y', -1.0)]);
        assert!((field_correlation(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }
}
