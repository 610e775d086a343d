//! Verification reports: one per inequality suite, JSON-serializable with
//! fixed field names.

use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;

/// Where the worst value of a sweep occurred.
///
/// Serialized untagged; the field sets are pairwise distinct.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
#[derive(Default)]
pub enum Location {
    Flow {
        n: u32,
        r0: f64,
        d: f64,
        time: f64,
    },
    ProofTerm {
        m: u32,
        i: u32,
        t: f64,
        rho: f64,
    },
    Proof {
        m: u32,
        t: f64,
        rho: f64,
    },
    Grid {
        n: u32,
        t: f64,
        rho: f64,
    },
    Semigroup {
        s: f64,
        t: f64,
        d01: f64,
    },
    Ladder {
        l: u32,
        rho: f64,
    },
    Time {
        n: u32,
        t: f64,
    },
    Structure {
        m: u32,
    },
    #[default]
    Nowhere,
}

/// Result of one verification suite: grid swept, worst margin seen, where,
/// and whether it stayed within tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub grid: GridSpec,
    pub worst_value: f64,
    pub worst_location: Location,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Running minimum tracker for sweeps where "worst" means smallest.
#[derive(Debug, Clone)]
pub(crate) struct WorstMin {
    pub value: f64,
    pub location: Location,
}

impl WorstMin {
    pub fn new() -> Self {
        WorstMin {
            value: f64::INFINITY,
            location: Location::Nowhere,
        }
    }

    pub fn update(&mut self, value: f64, location: Location) {
        if value < self.value {
            self.value = value;
            self.location = location;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.update(other.value, other.location);
        self
    }
}

/// Running maximum tracker for sweeps where "worst" means largest.
#[derive(Debug, Clone)]
pub(crate) struct WorstMax {
    pub value: f64,
    pub location: Location,
}

impl WorstMax {
    pub fn new() -> Self {
        WorstMax {
            value: f64::NEG_INFINITY,
            location: Location::Nowhere,
        }
    }

    pub fn update(&mut self, value: f64, location: Location) {
        if value > self.value {
            self.value = value;
            self.location = location;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.update(other.value, other.location);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    #[test]
    fn report_json_field_names() {
        let report = VerificationReport {
            check_name: "demo".into(),
            grid: GridSpec::new(vec![Axis::log("rho", 1e-3, 30.0, 40)]),
            worst_value: 0.25,
            worst_location: Location::Ladder { l: 3, rho: 1.0 },
            tolerance: 0.0,
            pass: true,
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in [
            "check_name",
            "grid",
            "worst_value",
            "worst_location",
            "tolerance",
            "pass",
        ] {
            assert!(v.get(key).is_some(), "missing field {key}");
        }
        assert_eq!(v["worst_location"]["l"], 3);
    }
}
