//! Mosaic-plot layout for a three-way contingency table.
//!
//! The unit square is tiled so every rectangle's area equals its cell's share
//! of the total count: a vertical split by gender first, then a horizontal
//! split by location inside each gender band, then a nested horizontal split
//! by sector inside each location cell. Zero-count cells produce no
//! rectangle. The data model carries no padding; spacing is a renderer
//! concern.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DescriptiveError;
use crate::indicators::{Gender, Location, PhdRecord, Sector};

/// Counts indexed by (gender, location, sector).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContingencyTable3 {
    counts: BTreeMap<(Gender, Location, Sector), u64>,
    total: u64,
}

impl ContingencyTable3 {
    pub fn new() -> ContingencyTable3 {
        ContingencyTable3::default()
    }

    /// Builds a table from explicit cells; repeated cells accumulate.
    pub fn from_cells(cells: &[((Gender, Location, Sector), u64)]) -> ContingencyTable3 {
        let mut table = ContingencyTable3::new();
        for &(key, count) in cells {
            table.add(key.0, key.1, key.2, count);
        }
        table
    }

    /// Tallies doctoral records by gender and first post-degree position.
    pub fn from_phd_records(records: &[PhdRecord]) -> ContingencyTable3 {
        let mut table = ContingencyTable3::new();
        for r in records {
            table.add(r.gender, r.post_phd_location, r.post_phd_sector, 1);
        }
        table
    }

    pub fn add(&mut self, gender: Gender, location: Location, sector: Sector, count: u64) {
        *self.counts.entry((gender, location, sector)).or_insert(0) += count;
        self.total += count;
    }

    pub fn count(&self, gender: Gender, location: Location, sector: Sector) -> u64 {
        self.counts
            .get(&(gender, location, sector))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn gender_margin(&self, gender: Gender) -> u64 {
        self.counts
            .iter()
            .filter(|((g, _, _), _)| *g == gender)
            .map(|(_, &c)| c)
            .sum()
    }

    fn gender_location_margin(&self, gender: Gender, location: Location) -> u64 {
        self.counts
            .iter()
            .filter(|((g, l, _), _)| *g == gender && *l == location)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Gender levels in layout order (bands, top to bottom).
pub const GENDERS: [Gender; 2] = [Gender::Female, Gender::Male];
/// Location levels in layout order (outer horizontal split, left to right).
pub const LOCATIONS: [Location; 2] = [Location::Germany, Location::Abroad];
/// Sector levels in layout order (inner horizontal split, left to right).
pub const SECTORS: [Sector; 2] = [Sector::Academia, Sector::Other];

/// One tile of the mosaic, in unit-square coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicRect {
    pub gender: Gender,
    pub location: Location,
    pub sector: Sector,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl MosaicRect {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Tiles the unit square in proportion to the table's cells.
///
/// Band heights are gender shares of the total; within a band, each
/// (location, sector) cell's width is its share of the gender count, laid
/// out left to right with locations outermost. Every rectangle's area equals
/// `count / total` up to floating-point rounding.
pub fn mosaic_layout(table: &ContingencyTable3) -> Result<Vec<MosaicRect>, DescriptiveError> {
    if table.total() == 0 {
        return Err(DescriptiveError::EmptyTable);
    }
    let total = table.total() as f64;
    let mut rects = Vec::new();
    let mut y = 0.0f64;
    for gender in GENDERS {
        let n_gender = table.gender_margin(gender);
        if n_gender == 0 {
            continue;
        }
        let height = n_gender as f64 / total;
        let mut x = 0.0f64;
        for location in LOCATIONS {
            if table.gender_location_margin(gender, location) == 0 {
                continue;
            }
            for sector in SECTORS {
                let count = table.count(gender, location, sector);
                if count == 0 {
                    continue;
                }
                let width = count as f64 / n_gender as f64;
                rects.push(MosaicRect {
                    gender,
                    location,
                    sector,
                    x,
                    y,
                    width,
                    height,
                });
                x += width;
            }
        }
        y += height;
    }
    Ok(rects)
}
