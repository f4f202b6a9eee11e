//! JEL subject classification codes.
//!
//! Single-letter codes from the Journal of Economic Literature classification.
//! The alphabet has 20 letters; S–X are not assigned.

use serde::{Deserialize, Serialize};
use std::fmt;

use thiserror::Error;

/// The 20 assigned JEL letters, in alphabetical order.
pub const JEL_LETTERS: [char; 20] = [
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R', 'Y',
    'Z',
];

/// A validated single-letter JEL code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "char", into = "char")]
pub struct JelCode(char);

/// Rejected JEL letter.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown JEL code {0:?}; expected one of A-R, Y, Z")]
pub struct UnknownJelCode(pub char);

impl JelCode {
    /// Validates a letter against the JEL alphabet. Lowercase input is accepted.
    pub fn new(letter: char) -> Result<Self, UnknownJelCode> {
        let upper = letter.to_ascii_uppercase();
        if JEL_LETTERS.contains(&upper) {
            Ok(JelCode(upper))
        } else {
            Err(UnknownJelCode(letter))
        }
    }

    /// All 20 codes in alphabetical order.
    pub fn all() -> impl Iterator<Item = JelCode> {
        JEL_LETTERS.iter().map(|&c| JelCode(c))
    }

    pub fn letter(&self) -> char {
        self.0
    }

    /// Name of the research field the letter stands for.
    pub fn field_name(&self) -> &'static str {
        match self.0 {
            'A' => "General Economics and Teaching",
            'B' => "History of Economic Thought, Methodology, and Heterodox Approaches",
            'C' => "Mathematical and Quantitative Methods",
            'D' => "Microeconomics",
            'E' => "Macroeconomics and Monetary Economics",
            'F' => "International Economics",
            'G' => "Financial Economics",
            'H' => "Public Economics",
            'I' => "Health, Education, and Welfare",
            'J' => "Labor and Demographic Economics",
            'K' => "Law and Economics",
            'L' => "Industrial Organization",
            'M' => "Business Administration and Business Economics / Marketing / Accounting / Personnel Economics",
            'N' => "Economic History",
            'O' => "Economic Development, Innovation, Technological Change, and Growth",
            'P' => "Economic Systems",
            'Q' => "Agricultural and Natural Resource Economics / Environmental and Ecological Economics",
            'R' => "Urban, Rural, Regional, Real Estate, and Transportation Economics",
            'Y' => "Miscellaneous Categories",
            'Z' => "Other Special Topics",
            _ => unreachable!("constructor validates the letter"),
        }
    }

    /// Parses a list of codes from a cell like `"C;G"`, `"C G"` or `"CG"`.
    ///
    /// Any non-alphabetic character acts as a separator; a run of letters is
    /// read one code per letter. Duplicates are kept in input order.
    pub fn parse_list(cell: &str) -> Result<Vec<JelCode>, UnknownJelCode> {
        cell.chars()
            .filter(|c| c.is_alphabetic())
            .map(JelCode::new)
            .collect()
    }
}

impl fmt::Display for JelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<char> for JelCode {
    type Error = UnknownJelCode;
    fn try_from(value: char) -> Result<Self, Self::Error> {
        JelCode::new(value)
    }
}

impl From<JelCode> for char {
    fn from(code: JelCode) -> char {
        code.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_has_twenty_letters() {
        assert_eq!(JelCode::all().count(), 20);
        assert!(JelCode::new('S').is_err());
        assert!(JelCode::new('X').is_err());
        assert_eq!(JelCode::new('c').unwrap().letter(), 'C');
    }

    #[test]
    fn parse_list_accepts_common_separators() {
        let codes = JelCode::parse_list("C;G").unwrap();
        assert_eq!(codes.len(), 2);
        assert_eq!(codes[0].letter(), 'C');
        assert_eq!(codes[1].letter(), 'G');
        assert_eq!(JelCode::parse_list("CG").unwrap(), codes);
        assert_eq!(JelCode::parse_list("C G").unwrap(), codes);
        assert!(JelCode::parse_list("C;W").is_err());
        assert!(JelCode::parse_list("").unwrap().is_empty());
    }
}
