use std::cmp::Ordering;
use std::fmt;

/// A level value on the extended real line.
///
/// `NEG_INFINITY` marks "before the first level" and `INFINITY` is the
/// extinction level. NaN is rejected at construction so the order is total.
#[derive(Clone, Copy)]
pub struct ExtendedLevel(f64);

impl ExtendedLevel {
    pub const NEG_INFINITY: ExtendedLevel = ExtendedLevel(f64::NEG_INFINITY);
    pub const INFINITY: ExtendedLevel = ExtendedLevel(f64::INFINITY);

    /// Panics on NaN: a NaN reaction coordinate is a model bug.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "level must not be NaN");
        ExtendedLevel(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_pos_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }
}

impl PartialEq for ExtendedLevel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtendedLevel {}

impl PartialOrd for ExtendedLevel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedLevel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<f64> for ExtendedLevel {
    fn from(value: f64) -> Self {
        ExtendedLevel::new(value)
    }
}

impl fmt::Debug for ExtendedLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ExtendedLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}
