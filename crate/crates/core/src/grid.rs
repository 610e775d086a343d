//! Grid axes for verification sweeps.

use serde::{Deserialize, Serialize};

/// One axis of a verification grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: String,
    #[serde(skip)]
    explicit: Option<Vec<f64>>,
}

impl Axis {
    pub fn log(name: &str, min: f64, max: f64, count: usize) -> Self {
        Axis {
            name: name.to_string(),
            min,
            max,
            count,
            spacing: "log".to_string(),
            explicit: None,
        }
    }

    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        Axis {
            name: name.to_string(),
            min,
            max,
            count,
            spacing: "linear".to_string(),
            explicit: None,
        }
    }

    pub fn list(name: &str, values: &[f64]) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Axis {
            name: name.to_string(),
            min,
            max,
            count: values.len(),
            spacing: "list".to_string(),
            explicit: Some(values.to_vec()),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.spacing.as_str() {
            "list" => self.explicit.clone().unwrap_or_default(),
            "linear" => linear_space(self.min, self.max, self.count),
            _ => log_space(self.min, self.max, self.count),
        }
    }
}

/// Grid description attached to every verification report.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Self {
        GridSpec { axes }
    }
}

/// `count` points from `min` to `max` inclusive, uniform in log scale.
pub fn log_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && min > 0.0 && max > min);
    let (la, lb) = (min.ln(), max.ln());
    (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `count` points from `min` to `max` inclusive, uniform spacing.
pub fn linear_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect()
}
