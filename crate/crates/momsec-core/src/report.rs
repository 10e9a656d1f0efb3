//! Check outcomes: one entry per verified condition, carrying the equation
//! anchor it implements, the max residual over the sample sweep and the
//! worst sample point.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    /// Not run because a prerequisite check failed.
    Skipped(String),
}

impl Status {
    pub fn as_str(&self) -> &str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped(_) => "skipped:precondition",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub tol: f64,
    pub notes: Vec<String>,
}

impl CheckEntry {
    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn new() -> Self {
        CheckReport {
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed())
    }

    pub fn entry(&self, id: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Running max-residual tracker remembering the worst sample point.
#[derive(Debug, Clone)]
pub struct ResTrack {
    pub max: f64,
    pub worst: Vec<f64>,
}

impl ResTrack {
    pub fn new() -> Self {
        ResTrack {
            max: 0.0,
            worst: Vec::new(),
        }
    }

    pub fn update(&mut self, residual: f64, point: &[f64]) {
        let r = residual.abs();
        if r >= self.max {
            self.max = r;
            self.worst = point.to_vec();
        }
    }

    pub fn entry(&self, id: &str, anchor: &str, tol: f64) -> CheckEntry {
        CheckEntry {
            id: String::from(id),
            anchor: String::from(anchor),
            status: if self.max < tol && self.max.is_finite() {
                Status::Pass
            } else {
                Status::Fail
            },
            max_residual: self.max,
            worst_point: self.worst.clone(),
            tol,
            notes: Vec::new(),
        }
    }
}

impl Default for ResTrack {
    fn default() -> Self {
        Self::new()
    }
}
