use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Population,
    Weights,
    Features,
    PmfNotNormalized,
    Pmf,
    DuplicateName,
    Domain,
    MissingEquation,
    DuplicateEquation,
    UnknownName,
    NoiseReuse,
    GroupCoverage,
    CyclicDependency,
    OutOfDomain,
    Evaluation,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

/// Well-formedness findings; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation { kind, message: message.into() });
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            f.write_str(&v.message)?;
        }
        Ok(())
    }
}

/// Outcome of one identity-checking suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub checked: usize,
    pub mismatches: Vec<String>,
    /// Free-form lines, e.g. both sides of an identity.
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(suite: &str) -> Self {
        VerificationReport { suite: suite.to_string(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.mismatches.push(what());
        }
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
        self.notes.extend(other.notes);
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "pass" } else { "FAIL" };
        writeln!(f, "{}: {} ({} checked, {} mismatches)", self.suite, status, self.checked, self.mismatches.len())?;
        for n in &self.notes {
            writeln!(f, "  {n}")?;
        }
        for m in self.mismatches.iter().take(20) {
            writeln!(f, "  mismatch: {m}")?;
        }
        Ok(())
    }
}
