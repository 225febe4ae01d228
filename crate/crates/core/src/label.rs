use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Bearing condition class.
///
/// Healthy is class index 0 and the positive class of the metrics; Damaged
/// is class index 1 and the negative class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "H")]
    Healthy,
    #[serde(rename = "D")]
    Damaged,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Healthy, Label::Damaged];

    pub fn index(self) -> usize {
        match self {
            Label::Healthy => 0,
            Label::Damaged => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Healthy),
            1 => Some(Label::Damaged),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Label::Healthy => "H",
            Label::Damaged => "D",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Healthy => Label::Damaged,
            Label::Damaged => Label::Healthy,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(Label::Healthy),
            "D" => Ok(Label::Damaged),
            other => Err(Error::Data(format!("unknown label {other:?} (expected H or D)"))),
        }
    }
}
