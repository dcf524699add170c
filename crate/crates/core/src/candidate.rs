use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sequence::{merit_from_energy, BinarySequence};

/// Which stage produced a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    /// Step 1 walk pivot that passed the sieve.
    Saw,
    /// Step 2 single-flip neighbour.
    Refine,
    /// Step 2 cyclic rotation.
    Rotation,
    /// Append/remove length operator.
    Operator,
    /// Rotated-and-extended Legendre sequence.
    Construction,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Saw => "saw",
            Origin::Refine => "refine",
            Origin::Rotation => "rotation",
            Origin::Operator => "operator",
            Origin::Construction => "construction",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "saw" => Origin::Saw,
            "refine" => Origin::Refine,
            "rotation" => Origin::Rotation,
            "operator" => Origin::Operator,
            "construction" => Origin::Construction,
            other => return Err(Error::Record(format!("unknown origin {other:?}"))),
        })
    }
}

/// A sequence with its exact energy and provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub sequence: BinarySequence,
    pub energy: i64,
    pub origin: Origin,
    /// Restriction-class prefix of the walk that found it, if any.
    pub partition: Option<Vec<i8>>,
}

impl Candidate {
    pub fn new(sequence: BinarySequence, origin: Origin) -> Self {
        let energy = sequence.energy();
        Self {
            sequence,
            energy,
            origin,
            partition: None,
        }
    }

    pub(crate) fn with_energy(sequence: BinarySequence, energy: i64, origin: Origin) -> Self {
        debug_assert_eq!(sequence.energy(), energy);
        Self {
            sequence,
            energy,
            origin,
            partition: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn merit(&self) -> f64 {
        // every sequence of length >= 2 has |C_{L-1}| = 1, so E >= 1
        merit_from_energy(self.len(), self.energy).unwrap_or(f64::INFINITY)
    }
}
