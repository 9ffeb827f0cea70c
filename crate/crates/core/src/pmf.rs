use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::rational::{fmt_fraction, fmt_value, Value};

/// A probability mass function over finitely many rational values.
///
/// Entries keep their declaration order; that order is the enumeration
/// order used by the exact engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePmf {
    entries: Vec<(Value, BigRational)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PmfError {
    #[error("pmf has no entries")]
    Empty,
    #[error("negative probability {prob} for value {value}")]
    Negative { value: String, prob: String },
    #[error("duplicate value {0} in pmf")]
    Duplicate(String),
    #[error("pmf not normalized: probabilities sum to {0}")]
    NotNormalized(String),
}

impl FinitePmf {
    /// Checked constructor.
    pub fn new(entries: Vec<(Value, BigRational)>) -> Result<Self, PmfError> {
        let pmf = FinitePmf { entries };
        match pmf.problems().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(pmf),
        }
    }

    /// Keeps whatever was declared; [`FinitePmf::problems`] reports what is wrong with it.
    pub fn from_entries_unchecked(entries: Vec<(Value, BigRational)>) -> Self {
        FinitePmf { entries }
    }

    /// Uniform law on the integers `lo..=hi`.
    pub fn uniform_range(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty uniform range {lo}..{hi}");
        let n = hi - lo + 1;
        let p = BigRational::new(1.into(), n.into());
        FinitePmf { entries: (lo..=hi).map(|v| (Value::from_integer(v), p.clone())).collect() }
    }

    pub fn point(value: Value) -> Self {
        FinitePmf { entries: vec![(value, BigRational::one())] }
    }

    pub fn entries(&self) -> &[(Value, BigRational)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().map(|(v, _)| v)
    }

    pub fn prob_of(&self, value: &Value) -> BigRational {
        self.entries.iter().find(|(v, _)| v == value).map(|(_, p)| p.clone()).unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.entries.iter().fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }

    /// True when all mass sits on one value.
    pub fn is_point_mass(&self) -> bool {
        self.entries.iter().filter(|(_, p)| !p.is_zero()).count() == 1
    }

    /// The first value carrying the largest mass.
    pub fn mode(&self) -> Option<Value> {
        let mut best: Option<&(Value, BigRational)> = None;
        for e in &self.entries {
            if best.is_none_or(|b| e.1 > b.1) {
                best = Some(e);
            }
        }
        best.map(|(v, _)| *v)
    }

    pub fn problems(&self) -> Vec<PmfError> {
        let mut out = Vec::new();
        if self.entries.is_empty() {
            out.push(PmfError::Empty);
            return out;
        }
        for (i, (v, p)) in self.entries.iter().enumerate() {
            if p.is_negative() {
                out.push(PmfError::Negative { value: fmt_value(v), prob: fmt_fraction(p) });
            }
            if self.entries[..i].iter().any(|(w, _)| w == v) {
                out.push(PmfError::Duplicate(fmt_value(v)));
            }
        }
        let total = self.total();
        if !total.is_one() {
            out.push(PmfError::NotNormalized(fmt_fraction(&total)));
        }
        out
    }
}

impl fmt::Display for FinitePmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if p.is_integer() {
                write!(f, "{}:{}", fmt_value(v), p.numer())?;
            } else {
                write!(f, "{}:{}/{}", fmt_value(v), p.numer(), p.denom())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn rejects_unnormalized() {
        let err = FinitePmf::new(vec![(int(0), frac(1, 2)), (int(1), frac(2, 5))]).unwrap_err();
        assert_eq!(err, PmfError::NotNormalized("9/10".into()));
        assert!(err.to_string().contains("pmf not normalized"));
    }

    #[test]
    fn rejects_duplicates_and_negatives() {
        let pmf = FinitePmf::from_entries_unchecked(vec![(int(0), frac(3, 2)), (int(0), frac(-1, 2))]);
        let problems = pmf.problems();
        assert!(problems.contains(&PmfError::Duplicate("0".into())));
        assert!(problems.iter().any(|p| matches!(p, PmfError::Negative { .. })));
    }

    #[test]
    fn uniform_and_point() {
        let u = FinitePmf::uniform_range(1, 10);
        assert_eq!(u.len(), 10);
        assert_eq!(u.prob_of(&int(3)), frac(1, 10));
        assert_eq!(u.prob_of(&int(11)), frac(0, 1));
        assert!(u.problems().is_empty());
        assert!(!u.is_point_mass());
        let p = FinitePmf::point(int(4));
        assert!(p.is_point_mass());
        assert_eq!(p.mode(), Some(int(4)));
        assert_eq!(p.to_string(), "4:1");
    }
}
