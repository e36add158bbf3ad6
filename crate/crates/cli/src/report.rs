//! Report records written by the `analyze` and `lemmas` commands.

use std::collections::BTreeMap;

use projlab_core::diagnostics::ConditionRow;
use projlab_core::lemmas::{CampaignSizes, CampaignSummary, ImplicationRow};
use projlab_core::simulate::{BridgeCheck, CltTestResult};
use projlab_core::variance::Extrapolated;
use projlab_core::{ChainClassification, Tolerances};
use serde::{Deserialize, Serialize};

/// Bumped on any change to the report layout; mirrored in the schema file.
pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wall-clock milliseconds per stage. The only field allowed to differ
/// between runs with equal inputs.
pub type Timings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub horizon: usize,
    pub n_paths: usize,
    pub lemma_cases: u64,
    pub sqrt_n_max: usize,
    pub min_series_terms: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub n_states: usize,
    pub states: Vec<String>,
    pub stationary: Vec<f64>,
    /// π-mean of the observable as supplied; the analysis uses `f − mean`.
    pub original_mean: f64,
    pub recentered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicRow {
    pub r: usize,
    pub n: usize,
    /// `E(S_n²)/n` from the doubling recursion.
    pub recursion: f64,
    /// `E(S_n²)/n` from autocovariances.
    pub exact: f64,
    pub delta: f64,
    pub bound: f64,
    pub bound_holds: bool,
    pub eta_curve: Option<f64>,
    pub theta_curve: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub first_len: usize,
    pub second_len: usize,
    pub covariance: f64,
    pub holder_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub sigma2_closed: Option<f64>,
    pub sigma2_dyadic: f64,
    pub variance_at_horizon: f64,
    pub eta2: Option<Extrapolated>,
    pub theta2: Option<Extrapolated>,
    pub eta_theta_refusal: Option<String>,
    pub dyadic: Vec<DyadicRow>,
    /// Block pairs of the binary-expansion split at the horizon.
    pub binary_split: Vec<HolderRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub n_steps: usize,
    pub n_paths: usize,
    pub clt: Vec<CltTestResult>,
    pub bridge_max_abs_z: Option<f64>,
    pub bridge_groups: usize,
    /// Why part or all of the simulation was skipped.
    pub skipped: Option<String>,
}

impl SimulationSummary {
    pub fn from_check(n_steps: usize, n_paths: usize, clt: Vec<CltTestResult>, check: Option<&BridgeCheck>) -> Self {
        Self {
            n_steps,
            n_paths,
            clt,
            bridge_max_abs_z: check.map(|c| c.max_abs_z),
            bridge_groups: check.map_or(0, |c| c.groups.len()),
            skipped: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the spec file bytes.
    pub chain_fingerprint: String,
    pub seed: u64,
    pub settings: Settings,
    pub chain: ChainSummary,
    pub classification: ChainClassification,
    pub conditions: Vec<ConditionRow>,
    pub implications: Vec<ImplicationRow>,
    pub variance: VarianceSummary,
    pub simulation: SimulationSummary,
    pub lemma_campaigns: Vec<CampaignSummary>,
    /// Anomalies worth a second look; never claims about the infinite-horizon properties.
    pub flags: Vec<String>,
    pub timings_ms: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub sizes: CampaignSizes,
    pub campaigns: Vec<CampaignSummary>,
    pub all_pass: bool,
    pub timings_ms: Timings,
}
