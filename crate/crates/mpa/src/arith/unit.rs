use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;
use crate::{Error, Result};

/// Nonzero complex scalar `mag * e^(2*pi*i*phase)` with `mag` a positive
/// rational and `phase` a rational in `[0, 1)`. These form the subgroup of
/// `C^*` inside which all eigenvalues and parameters live; the group
/// operations below never leave it and never lose exactness.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct UnitScalar {
    mag: Rational,
    phase: Rational,
}

impl UnitScalar {
    /// Builds a scalar, normalizing the phase into `[0, 1)`.
    /// Fails on nonpositive magnitude.
    pub fn new(mag: Rational, phase: Rational) -> Result<Self> {
        if !mag.is_positive() {
            return Err(Error::InvalidInput(format!(
                "unit scalar magnitude must be positive, got {mag}"
            )));
        }
        Ok(UnitScalar {
            mag,
            phase: phase.frac(),
        })
    }

    /// Positive rational scalar (phase 0).
    pub fn positive(mag: Rational) -> Self {
        assert!(mag.is_positive());
        UnitScalar {
            mag,
            phase: Rational::zero(),
        }
    }

    /// Root of unity `e^(2*pi*i*phase)`.
    pub fn root_of_unity(phase: Rational) -> Self {
        UnitScalar {
            mag: Rational::one(),
            phase: phase.frac(),
        }
    }

    pub fn one() -> Self {
        UnitScalar {
            mag: Rational::one(),
            phase: Rational::zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.mag.is_one() && self.phase.is_zero()
    }

    pub fn mag(&self) -> &Rational {
        &self.mag
    }

    pub fn phase(&self) -> &Rational {
        &self.phase
    }

    pub fn mul(&self, rhs: &UnitScalar) -> UnitScalar {
        UnitScalar {
            mag: &self.mag * &rhs.mag,
            phase: (&self.phase + &rhs.phase).frac(),
        }
    }

    pub fn inv(&self) -> UnitScalar {
        UnitScalar {
            mag: self.mag.recip(),
            phase: (-&self.phase).frac(),
        }
    }

    pub fn pow(&self, exp: i64) -> UnitScalar {
        UnitScalar {
            mag: self.mag.pow(exp),
            phase: (&self.phase * &Rational::integer(exp)).frac(),
        }
    }

    /// Sort key realizing the canonical eigenvalue order: by phase, then by
    /// magnitude, both ascending.
    pub fn sort_key(&self) -> (Rational, Rational) {
        (self.phase.clone(), self.mag.clone())
    }

    /// Denominator of the phase: the order of the root-of-unity part.
    pub fn phase_denominator(&self) -> u64 {
        use num::ToPrimitive;
        self.phase
            .denom()
            .to_u64()
            .expect("phase denominator exceeds u64")
    }
}

impl fmt::Display for UnitScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase.is_zero() {
            write!(f, "{}", self.mag)
        } else {
            write!(f, "{}*e(2pi*i*{})", self.mag, self.phase)
        }
    }
}

impl fmt::Debug for UnitScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<'de> Deserialize<'de> for UnitScalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            mag: Rational,
            phase: Rational,
        }
        let raw = Raw::deserialize(deserializer)?;
        UnitScalar::new(raw.mag, raw.phase).map_err(serde::de::Error::custom)
    }
}
