//! Experiment reports: JSON documents with inputs, constants, measurements
//! and named assertions.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named inequality `lhs ≤ rhs` (or an equality checked to a tolerance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub inputs: Map<String, Value>,
    pub constants: Map<String, Value>,
    pub measurements: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub seed: u64,
    pub runtime_ms: u64,
    pub version: String,
    #[serde(skip)]
    started: Option<Instant>,
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            inputs: Map::new(),
            constants: Map::new(),
            measurements: Map::new(),
            assertions: Vec::new(),
            seed,
            runtime_ms: 0,
            version: VERSION.to_string(),
            started: Some(Instant::now()),
        }
    }

    pub fn input<T: Serialize>(&mut self, key: &str, v: T) -> &mut Self {
        self.inputs.insert(key.to_string(), to_value(v));
        self
    }

    pub fn constant<T: Serialize>(&mut self, key: &str, v: T) -> &mut Self {
        self.constants.insert(key.to_string(), to_value(v));
        self
    }

    pub fn measure<T: Serialize>(&mut self, key: &str, v: T) -> &mut Self {
        self.measurements.insert(key.to_string(), to_value(v));
        self
    }

    /// Records `lhs ≤ rhs`. NaN on either side fails.
    pub fn assert_le(&mut self, name: &str, lhs: f64, rhs: f64) -> bool {
        let pass = lhs <= rhs;
        self.assertions.push(Assertion { name: name.to_string(), pass, lhs, rhs });
        pass
    }

    /// Records `|lhs − rhs| ≤ tol`; the stored right side is `rhs`.
    pub fn assert_close(&mut self, name: &str, lhs: f64, rhs: f64, tol: f64) -> bool {
        let pass = (lhs - rhs).abs() <= tol;
        self.assertions.push(Assertion { name: name.to_string(), pass, lhs, rhs });
        pass
    }

    pub fn assert_true(&mut self, name: &str, pass: bool) -> bool {
        self.assertions.push(Assertion {
            name: name.to_string(),
            pass,
            lhs: f64::from(u8::from(pass)),
            rhs: 1.0,
        });
        pass
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.pass)
    }

    /// Stops the clock.
    pub fn finish(&mut self) {
        if let Some(t) = self.started.take() {
            self.runtime_ms = t.elapsed().as_millis() as u64;
        }
    }

    /// Appends the assertions and measurements of `other` under a prefix.
    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        for mut a in other.assertions {
            a.name = format!("{prefix}.{}", a.name);
            self.assertions.push(a);
        }
        let mut sub = Map::new();
        sub.insert("constants".into(), Value::Object(other.constants));
        sub.insert("measurements".into(), Value::Object(other.measurements));
        self.measurements.insert(prefix.to_string(), Value::Object(sub));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
    }
}

/// Writes one column of ratios (with instance index) as CSV.
pub fn write_ratios_csv(path: &Path, column: &str, values: &[f64]) -> Result<()> {
    let io = |e: csv::Error| Error::invalid(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["instance", column]).map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
}
