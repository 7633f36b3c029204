//! JSON schema for scenario inputs and result reports. Complex numbers are
//! [re, im] pairs; polynomial matrices are coefficient tensors indexed
//! rows, columns, z-power, conjugate-power (for clutching functions the
//! second power counts inverse powers of z instead).

use serde::{Deserialize, Serialize};
use twistor_core::bipoly::CoeffTensor;
use twistor_core::ToleranceConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Energy,
    HarmonicCheck,
    Split,
    Hn,
    Birkhoff,
    TwistorVerify,
    Lift,
    ReduceLength,
    HsDemo,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Energy => "energy",
            Task::HarmonicCheck => "harmonic-check",
            Task::Split => "split",
            Task::Hn => "hn",
            Task::Birkhoff => "birkhoff",
            Task::TwistorVerify => "twistor-verify",
            Task::Lift => "lift",
            Task::ReduceLength => "reduce-length",
            Task::HsDemo => "hs-demo",
        }
    }
}

/// Task-specific payload. Unused fields stay None; the runner validates
/// that the fields a task needs are present.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Inputs {
    /// A single frame: curve column or subbundle frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<CoeffTensor>,
    /// Moving flag piece frames, or the bundle-side pieces of a
    /// presentation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<CoeffTensor>>,
    /// Complement-side pieces of a presentation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perp_frames: Option<Vec<CoeffTensor>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<usize>>,
    /// Degree of a rational normal curve to construct.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// Clutching function grid: entry (k, l) multiplies z^k z^{-l}.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<CoeffTensor>,
    /// Build the flag pseudo-randomly from the scenario seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_flag: Option<bool>,
    /// Truncation levels for a stability sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    /// Built-in truncation family name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Virtual flag pieces as signed basis indices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_slot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_slot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_exponents: Option<Vec<[i64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_kappas: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_sigma: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_deltas: Option<Vec<[i64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_harmonic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_type: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_virtual_dim: Option<i64>,
}

impl Inputs {
    pub fn is_empty(&self) -> bool {
        serde_json::to_value(self)
            .map(|v| v.as_object().map(|o| o.is_empty()).unwrap_or(true))
            .unwrap_or(true)
    }
}

/// Partial tolerance override; unset fields keep their defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

impl TolSpec {
    pub fn resolve(&self, base: ToleranceConfig) -> ToleranceConfig {
        ToleranceConfig {
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            residual_tol: self.residual_tol.unwrap_or(base.residual_tol),
            prune_tol: self.prune_tol.unwrap_or(base.prune_tol),
            fd_step: self.fd_step.unwrap_or(base.fd_step),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Absent only when catalog_ref supplies the task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Radial and angular quadrature orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolSpec>,
    #[serde(default, skip_serializing_if = "Inputs::is_empty")]
    pub inputs: Inputs,
}

impl Scenario {
    pub fn for_task(task: Task) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            task: Some(task),
            catalog_ref: None,
            seed: None,
            grid: None,
            tolerances: None,
            inputs: Inputs::default(),
        }
    }
}

/// One verdict that contributed to the overall pass flag; `detail` repeats
/// the numbers the verdict was computed from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub grid_order: usize,
    pub residual: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedTol {
    pub rank_tol: f64,
    pub residual_tol: f64,
    pub prune_tol: f64,
    pub fd_step: f64,
}

impl From<ToleranceConfig> for ResolvedTol {
    fn from(t: ToleranceConfig) -> Self {
        ResolvedTol {
            rank_tol: t.rank_tol,
            residual_tol: t.residual_tol,
            prune_tol: t.prune_tol,
            fd_step: t.fd_step,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: [usize; 2],
    pub tolerances: ResolvedTol,
    /// Scalar results keyed alphabetically; the checks recompute from
    /// these and the tolerances alone.
    pub scalars: serde_json::Map<String, serde_json::Value>,
    pub convergence: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Milliseconds; the only field excluded from determinism comparisons.
    pub wall_time_ms: f64,
}

impl Report {
    /// Serialization with the wall-time field cleared, for byte-level
    /// determinism comparisons.
    pub fn deterministic_json(&self) -> serde_json::Result<String> {
        let mut clone = self.clone();
        clone.wall_time_ms = 0.0;
        serde_json::to_string_pretty(&clone)
    }
}

/// CSV convergence table with the fixed header row.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("grid_order,residual,energy\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e}\n", r.grid_order, r.residual, r.energy));
    }
    out
}
