use serde::{Deserialize, Serialize};
use std::fmt;

/// Outcome of a finite probe of a limit or inequality condition.
///
/// Limits cannot be decided from finitely many samples, so probes report
/// `Inconclusive` whenever the observed trend is ambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    pub fn fails(self) -> bool {
        self == Verdict::Fails
    }

    /// Combine two verdicts over a conjunction: any failure wins, then any doubt.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Holds,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A sample point at which a probe observed a violation (or its worst case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    /// Scalar arguments of the probe (t, s, c, ... depending on the check).
    pub args: Vec<(String, f64)>,
    pub value: f64,
}

impl Witness {
    pub fn new(x: &[f64], args: &[(&str, f64)], value: f64) -> Self {
        Witness {
            x: x.to_vec(),
            args: args.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x=(")?;
        for (i, xi) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{xi:?}")?;
        }
        write!(f, ")")?;
        for (k, v) in &self.args {
            write!(f, " {k}={v:?}")?;
        }
        write!(f, " value={:?}", self.value)
    }
}
