//! Violation reports shared by the certifying checks.

use std::fmt;

/// One failed condition with the place where it failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Short tag naming the condition, e.g. `"conservation"`.
    pub condition: String,
    /// Node, arc or interval that witnesses the failure.
    pub location: String,
    pub detail: String,
}

impl Violation {
    pub fn new(
        condition: impl Into<String>,
        location: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Violation {
            condition: condition.into(),
            location: location.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:<28} {}",
            self.condition, self.location, self.detail
        )
    }
}

/// PASS iff `violations` is empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CertReport {
    pub violations: Vec<Violation>,
}

impl CertReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(
        &mut self,
        condition: impl Into<String>,
        location: impl Into<String>,
        detail: impl Into<String>,
    ) {
        self.violations
            .push(Violation::new(condition, location, detail));
    }

    pub fn merge(&mut self, other: CertReport) {
        self.violations.extend(other.violations);
    }

    pub fn has(&self, condition: &str) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

impl fmt::Display for CertReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return f.write_str("PASS");
        }
        writeln!(f, "FAIL ({} violations)", self.violations.len())?;
        writeln!(f, "{:<22} {:<28} detail", "condition", "location")?;
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}
