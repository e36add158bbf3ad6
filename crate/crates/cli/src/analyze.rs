//! The `analyze` pipeline: classify, tabulate operators, evaluate every
//! condition, profile the variance, simulate, report.

use std::path::Path;
use std::time::Instant;

use projlab_core::config::{BRIDGE_MAX_HORIZON, BRIDGE_MAX_STATES};
use projlab_core::diagnostics::{condition_rows, MIN_SERIES_TERMS};
use projlab_core::lemmas::{check_implications, run_all, CampaignSizes};
use projlab_core::operators::sqrt_range_membership;
use projlab_core::simulate::{clt_test, empirical_bridge_check, simulate_with, TrajectoryBatch};
use projlab_core::variance::{autocovariances, binary_split, second_moments};
use projlab_core::diagnostics::bridge_conditional;
use projlab_core::{
    ChainModel, ChainSpec, ConditionalNorms, OperatorTable, Side, StatisticKind, Verdict,
    VarianceProfile,
};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::report::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub horizon: usize,
    pub seed: u64,
    pub n_paths: usize,
    pub lemma_cases: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            horizon: 4096,
            seed: 0,
            n_paths: 20_000,
            lemma_cases: 0,
        }
    }
}

/// A finished analysis plus the raw sequences behind the plot-ready exports.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub profile: VarianceProfile,
    pub bridge: Vec<f64>,
    pub batch: Option<TrajectoryBatch>,
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_spec(path: &Path) -> CliResult<(Vec<u8>, ChainSpec)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::input("spec is not UTF-8", e))?;
    let spec = ChainSpec::parse(text).map_err(|e| CliError::input("invalid chain spec", e))?;
    Ok((bytes, spec))
}

fn check_options(chain: &ChainModel, opts: &AnalyzeOptions) -> CliResult<()> {
    if opts.horizon < MIN_SERIES_TERMS {
        return Err(CliError::Input(format!(
            "horizon must be at least {MIN_SERIES_TERMS}, got {}",
            opts.horizon
        )));
    }
    if opts.horizon > BRIDGE_MAX_HORIZON {
        return Err(CliError::ResourceCap(format!(
            "horizon {} exceeds {BRIDGE_MAX_HORIZON}",
            opts.horizon
        )));
    }
    if chain.n_states() > BRIDGE_MAX_STATES {
        return Err(CliError::ResourceCap(format!(
            "chain has {} states, at most {BRIDGE_MAX_STATES} are supported",
            chain.n_states()
        )));
    }
    if opts.n_paths < 2 {
        return Err(CliError::Input(format!("--paths must be at least 2, got {}", opts.n_paths)));
    }
    Ok(())
}

fn timed<T>(timings: &mut Timings, stage: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    timings.insert(stage.to_string(), t.elapsed().as_secs_f64() * 1e3);
    out
}

pub fn analyze_file(path: &Path, opts: &AnalyzeOptions) -> CliResult<Analysis> {
    let (bytes, spec) = load_spec(path)?;
    analyze_spec(&bytes, &spec, opts)
}

/// Runs the full pipeline on a parsed spec; `bytes` are the file contents
/// the fingerprint is taken from.
pub fn analyze_spec(bytes: &[u8], spec: &ChainSpec, opts: &AnalyzeOptions) -> CliResult<Analysis> {
    let mut timings = Timings::new();
    let chain = timed(&mut timings, "build", || spec.build())?;
    check_options(&chain, opts)?;
    let n = opts.horizon;
    let tol = *chain.tolerances();
    let classification = timed(&mut timings, "classify", || chain.classify());

    let table = timed(&mut timings, "operators", || OperatorTable::build(&chain, n))?;
    let norms = timed(&mut timings, "conditions", || ConditionalNorms::compute(&chain, &table, n))?;
    let sqrt_past = sqrt_range_membership(&chain, Side::Q, n, tol.classifier_margin)?;
    let sqrt_future = sqrt_range_membership(&chain, Side::QStar, n, tol.classifier_margin)?;
    let conditions = condition_rows(&norms, &sqrt_past, &sqrt_future, tol.classifier_margin)?;
    let implications = check_implications(&norms, n)?;

    let profile = timed(&mut timings, "variance", || {
        VarianceProfile::compute(&chain, &table, &norms.bridge, n)
    })?;
    let cov = autocovariances(&chain, &table);
    let moments = second_moments(&cov, n)?;
    let split = binary_split(&chain, &table, &cov, &moments, n)?;
    let variance = variance_summary(&profile, &split);

    let sim_start = Instant::now();
    let (simulation, batch) = run_simulation(&chain, &profile, &norms.bridge, opts)?;
    timings.insert("simulation".into(), sim_start.elapsed().as_secs_f64() * 1e3);

    let lemma_campaigns = if opts.lemma_cases > 0 {
        timed(&mut timings, "lemmas", || {
            run_all(&CampaignSizes::uniform(opts.lemma_cases), opts.seed)
        })?
    } else {
        Vec::new()
    };

    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        command: "analyze".into(),
        chain_fingerprint: fingerprint(bytes),
        seed: opts.seed,
        settings: Settings {
            horizon: n,
            n_paths: opts.n_paths,
            lemma_cases: opts.lemma_cases,
            sqrt_n_max: n,
            min_series_terms: MIN_SERIES_TERMS,
            tolerances: tol,
        },
        chain: ChainSummary {
            n_states: chain.n_states(),
            states: chain.states().to_vec(),
            stationary: chain.stationary().iter().copied().collect(),
            original_mean: chain.centering().original_mean,
            recentered: chain.centering().recentered,
        },
        classification,
        conditions,
        implications,
        variance,
        simulation,
        lemma_campaigns,
        flags: Vec::new(),
        timings_ms: Timings::new(),
    };
    report.flags = flags(&report, &sqrt_past.verdict, sqrt_past.exact_member, &sqrt_future.verdict, sqrt_future.exact_member);
    report.timings_ms = timings;
    Ok(Analysis {
        report,
        profile,
        bridge: norms.bridge,
        batch,
    })
}

fn variance_summary(profile: &VarianceProfile, split: &projlab_core::variance::BinarySplit) -> VarianceSummary {
    let d = &profile.dyadic;
    let et = &profile.eta_theta;
    let dyadic = (0..=d.r_max)
        .map(|r| {
            let n = 1usize << r;
            let at = et.n_grid.iter().position(|&g| g == n);
            DyadicRow {
                r,
                n,
                recursion: d.normalized[r],
                exact: profile.var_seq[n],
                delta: d.delta_curve[r],
                bound: d.bounds[r],
                bound_holds: d.bound_holds(r, 1e-10 * d.bounds[r].abs().max(1.0)),
                eta_curve: at.map(|i| et.eta_curve[i]),
                theta_curve: at.map(|i| et.theta_curve[i]),
            }
        })
        .collect();
    let binary_split = split
        .pairs
        .iter()
        .map(|p| HolderRow {
            first_len: split.blocks[p.first].len,
            second_len: split.blocks[p.second].len,
            covariance: p.covariance,
            holder_bound: p.holder_bound,
            holds: p.covariance.abs() <= p.holder_bound * (1.0 + 1e-10) + 1e-12,
        })
        .collect();
    VarianceSummary {
        sigma2_closed: profile.sigma2_closed,
        sigma2_dyadic: profile.sigma2_dyadic,
        variance_at_horizon: *profile.var_seq.last().expect("nonempty"),
        eta2: et.eta2,
        theta2: et.theta2,
        eta_theta_refusal: et.refusal.clone(),
        dyadic,
        binary_split,
    }
}

/// Raw CLT against `σ²` whenever the closed form exists; bridge-centered CLT
/// against the exact finite-`n` variance of the centered sum when the chain
/// is totally ergodic.
fn run_simulation(
    chain: &ChainModel,
    profile: &VarianceProfile,
    bridge: &[f64],
    opts: &AnalyzeOptions,
) -> CliResult<(SimulationSummary, Option<TrajectoryBatch>)> {
    let n = opts.horizon;
    let class = chain.classify();
    let Some(sigma2) = profile.sigma2_closed else {
        let mut s = SimulationSummary::from_check(n, opts.n_paths, Vec::new(), None);
        s.skipped = Some("no closed-form long-run variance".into());
        return Ok((s, None));
    };
    let tol = chain.tolerances();
    let table = bridge_conditional(chain, n)?;
    let batch = simulate_with(chain, n, opts.n_paths, opts.seed, Some(&table))?;
    let mut clt = vec![clt_test(
        &batch,
        StatisticKind::Raw,
        sigma2,
        tol.degenerate_target,
        1.0 / (n as f64).sqrt(),
    )?];
    let mut skipped = None;
    if class.totally_ergodic {
        let theta_n = profile.var_seq[n] - bridge[n].powi(2) / n as f64;
        clt.push(clt_test(
            &batch,
            StatisticKind::Centered,
            theta_n.max(0.0),
            tol.degenerate_target,
            1.0 / (n as f64).sqrt(),
        )?);
    } else {
        skipped = Some("centered CLT skipped: chain is not totally ergodic".into());
    }
    let check = empirical_bridge_check(chain, &batch)?;
    let mut summary = SimulationSummary::from_check(n, opts.n_paths, clt, Some(&check));
    summary.skipped = skipped;
    Ok((summary, Some(batch)))
}

fn flags(
    report: &AnalysisReport,
    sqrt_p: &Verdict,
    exact_p: bool,
    sqrt_f: &Verdict,
    exact_f: bool,
) -> Vec<String> {
    let mut out = Vec::new();
    for row in &report.implications {
        if !row.holds {
            out.push(format!(
                "implication {:?} fails at horizon {}: {} > {}",
                row.implication, row.horizon, row.lhs, row.rhs
            ));
        }
    }
    for (name, v, exact) in [("SQRT_P", sqrt_p, exact_p), ("SQRT_F", sqrt_f, exact_f)] {
        let disagree = matches!(
            (v, exact),
            (Verdict::Convergent, false) | (Verdict::Divergent, true)
        );
        if disagree {
            out.push(format!("{name}: dyadic verdict {v:?} disagrees with exact finite-state answer {exact}"));
        }
    }
    let v = &report.variance;
    if let (Some(s), Some(e), Some(t)) = (v.sigma2_closed, v.eta2, v.theta2) {
        if (e.value + t.value - s).abs() > 1e-6 * s.abs().max(1.0) {
            out.push(format!("eta2 + theta2 = {} differs from sigma2 = {s}", e.value + t.value));
        }
    }
    if v.dyadic.iter().any(|r| !r.bound_holds) {
        out.push("dyadic variance bound fails at some scale".into());
    }
    if v.binary_split.iter().any(|r| !r.holds) {
        out.push("Hölder bound fails for some block pair".into());
    }
    out
}
