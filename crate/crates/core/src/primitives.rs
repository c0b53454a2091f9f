//! Shared numeric and classification primitives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ValueError;

/// Automotive Safety Integrity Level. Ordered `QM < A < B < C < D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Asil {
    /// Quality managed, no safety requirement.
    QM,
    A,
    B,
    C,
    D,
}

impl Asil {
    pub const ALL: [Asil; 5] = [Asil::QM, Asil::A, Asil::B, Asil::C, Asil::D];

    /// True for A..=D.
    pub fn is_safety_rated(self) -> bool {
        self >= Asil::A
    }
}

impl fmt::Display for Asil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Asil::QM => f.write_str("QM"),
            Asil::A => f.write_str("ASIL A"),
            Asil::B => f.write_str("ASIL B"),
            Asil::C => f.write_str("ASIL C"),
            Asil::D => f.write_str("ASIL D"),
        }
    }
}

impl FromStr for Asil {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "QM" => Ok(Asil::QM),
            "A" => Ok(Asil::A),
            "B" => Ok(Asil::B),
            "C" => Ok(Asil::C),
            "D" => Ok(Asil::D),
            other => Err(ValueError::UnknownAsil(other.to_string())),
        }
    }
}

/// A real number in `[0, 1]`. Carries probabilities, coverages and scores.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub const ZERO: UnitInterval = UnitInterval(0.0);
    pub const ONE: UnitInterval = UnitInterval(1.0);

    pub fn new(value: f64) -> Result<Self, ValueError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(UnitInterval(value))
        } else {
            Err(ValueError::OutsideUnitInterval(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitInterval {
    type Error = ValueError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        UnitInterval::new(value)
    }
}

impl fmt::Display for UnitInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl Serialize for UnitInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for UnitInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        UnitInterval::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Unit in which a failure rate is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateUnit {
    /// Failures in time: one failure per 1e9 hours.
    #[serde(rename = "FIT")]
    Fit,
    #[serde(rename = "per_hour")]
    PerHour,
}

const HOURS_PER_FIT: f64 = 1e9;

/// A nonnegative failure rate, stored canonically per hour.
///
/// FIT values are converted by dividing by the exactly representable `1e9`,
/// so a FIT -> per hour -> FIT round trip stays within one ulp.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct FailureRate {
    per_hour: f64,
}

impl FailureRate {
    pub const ZERO: FailureRate = FailureRate { per_hour: 0.0 };

    pub fn per_hour(value: f64) -> Result<Self, ValueError> {
        if value.is_finite() && value >= 0.0 {
            // normalizes -0.0
            Ok(FailureRate { per_hour: value + 0.0 })
        } else {
            Err(ValueError::InvalidRate(value))
        }
    }

    pub fn fit(value: f64) -> Result<Self, ValueError> {
        if value.is_finite() && value >= 0.0 {
            FailureRate::per_hour(value / HOURS_PER_FIT)
        } else {
            Err(ValueError::InvalidRate(value))
        }
    }

    pub fn new(value: f64, unit: RateUnit) -> Result<Self, ValueError> {
        match unit {
            RateUnit::Fit => FailureRate::fit(value),
            RateUnit::PerHour => FailureRate::per_hour(value),
        }
    }

    /// Internal constructor for values derived from already-valid rates.
    pub(crate) fn from_per_hour_unchecked(per_hour: f64) -> Self {
        debug_assert!(per_hour.is_finite() && per_hour >= 0.0, "bad rate {per_hour}");
        FailureRate { per_hour: per_hour.max(0.0) }
    }

    pub(crate) fn from_fit_unchecked(fit: f64) -> Self {
        FailureRate::from_per_hour_unchecked(fit / HOURS_PER_FIT)
    }

    #[inline]
    pub fn as_per_hour(self) -> f64 {
        self.per_hour
    }

    #[inline]
    pub fn as_fit(self) -> f64 {
        self.per_hour * HOURS_PER_FIT
    }
}

impl fmt::Display for FailureRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/h", self.per_hour)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateRepr {
    value: f64,
    unit: RateUnit,
}

impl Serialize for FailureRate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RateRepr { value: self.per_hour, unit: RateUnit::PerHour }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FailureRate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RateRepr::deserialize(deserializer)?;
        FailureRate::new(repr.value, repr.unit).map_err(serde::de::Error::custom)
    }
}

/// Neumaier compensated summation. Keeps aggregate rates stable to ~1e-16
/// relative regardless of row order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
