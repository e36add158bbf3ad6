//! Seeded simulation of stationary trajectories and empirical CLT checks.
//!
//! Path `i` draws from a ChaCha8 generator seeded with the master seed and
//! switched to stream `i`, so a batch depends only on
//! `(seed, chain, n_steps, n_paths)` and never on how paths are scheduled.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::ChainModel;
use crate::config::{BRIDGE_MAX_HORIZON, BRIDGE_MAX_STATES};
use crate::diagnostics::bridge_conditional;
use crate::error::{Error, Result};

/// Inverse-CDF sampler over a fixed state order.
#[derive(Debug, Clone)]
struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    fn new<'a>(weights: impl Iterator<Item = &'a f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        // close the last bin with positive mass at exactly 1
        let mut last = cumulative.len() - 1;
        while last > 0 && cumulative[last] == cumulative[last - 1] {
            last -= 1;
        }
        for c in &mut cumulative[last..] {
            *c = 1.0;
        }
        Self { cumulative }
    }

    fn sample(&self, u: f64) -> usize {
        self.cumulative.partition_point(|&c| c <= u)
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub n_steps: usize,
    pub n_paths: usize,
    /// `(ξ_0, ξ_n)` per path.
    pub endpoints: Vec<(usize, usize)>,
    /// `S_n = f(ξ_1) + … + f(ξ_n)` per path.
    pub sums: Vec<f64>,
    /// `S_n − E(S_n | ξ_0, ξ_n)` per path, when the exact bridge table was available.
    pub centered: Option<Vec<f64>>,
}

/// Simulates `n_paths` stationary paths of `n_steps` steps. The centered
/// statistic is filled in whenever the dense bridge table fits the caps.
pub fn simulate(
    chain: &ChainModel,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<TrajectoryBatch> {
    let table = if chain.n_states() <= BRIDGE_MAX_STATES && (1..=BRIDGE_MAX_HORIZON).contains(&n_steps) {
        Some(bridge_conditional(chain, n_steps)?)
    } else {
        None
    };
    simulate_with(chain, n_steps, n_paths, seed, table.as_ref())
}

/// As [`simulate`], with a caller-supplied `E(S_n | ξ_0 = x, ξ_n = y)` table.
pub fn simulate_with(
    chain: &ChainModel,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    bridge: Option<&DMatrix<f64>>,
) -> Result<TrajectoryBatch> {
    if n_steps == 0 || n_paths == 0 {
        return Err(Error::InvalidParameter(
            "n_steps and n_paths must be at least 1".into(),
        ));
    }
    let initial = Categorical::new(chain.stationary().iter());
    let q = chain.kernel();
    let rows: Vec<Categorical> = (0..chain.n_states())
        .map(|x| Categorical::new(q.row(x).iter()))
        .collect();
    let f = chain.observable();

    let paths: Vec<(usize, usize, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let x0 = initial.sample(rng.random());
            let mut x = x0;
            let mut sum = 0.0;
            for _ in 0..n_steps {
                x = rows[x].sample(rng.random());
                sum += f[x];
            }
            (x0, x, sum)
        })
        .collect();

    let endpoints: Vec<(usize, usize)> = paths.iter().map(|p| (p.0, p.1)).collect();
    let sums: Vec<f64> = paths.iter().map(|p| p.2).collect();
    let centered = bridge.map(|b| {
        endpoints
            .iter()
            .zip(&sums)
            .map(|(&(x, y), s)| s - b[(x, y)])
            .collect()
    });
    Ok(TrajectoryBatch {
        seed,
        n_steps,
        n_paths,
        endpoints,
        sums,
        centered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `S_n/√n`
    Raw,
    /// `(S_n − E(S_n|ξ_0,ξ_n))/√n`
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltTestResult {
    pub statistic_kind: StatisticKind,
    pub n_steps: usize,
    pub n_paths: usize,
    pub target_variance: f64,
    /// Kolmogorov–Smirnov distance to `N(0, target_variance)`, or to the
    /// point mass at 0 when the target is degenerate.
    pub ks_distance: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
    pub max_abs: f64,
    pub degenerate: bool,
    /// For degenerate targets: `max|statistic| ≤ degenerate_bound`.
    pub degenerate_bound: Option<f64>,
    pub degenerate_pass: Option<bool>,
}

/// One-sample KS distance `sup_x |F_N(x) − F(x)|`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let c = cdf(x);
        let above = (i + 1) as f64 / n - c;
        let below = c - i as f64 / n;
        acc.max(above).max(below)
    })
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

impl TrajectoryBatch {
    /// Per-path statistic scaled by `1/√n`.
    pub fn statistic(&self, kind: StatisticKind) -> Result<Vec<f64>> {
        let scale = (self.n_steps as f64).sqrt();
        let raw = match kind {
            StatisticKind::Raw => &self.sums,
            StatisticKind::Centered => self.centered.as_ref().ok_or_else(|| {
                Error::InvalidParameter("batch carries no bridge-centered sums".into())
            })?,
        };
        Ok(raw.iter().map(|s| s / scale).collect())
    }
}

/// Compares the batch statistic with `N(0, target_variance)`. Targets below
/// `degenerate_target` switch to checking `max|statistic| ≤ degenerate_bound`.
pub fn clt_test(
    batch: &TrajectoryBatch,
    kind: StatisticKind,
    target_variance: f64,
    degenerate_target: f64,
    degenerate_bound: f64,
) -> Result<CltTestResult> {
    if batch.sums.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    if target_variance.is_nan() || target_variance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target variance must be nonnegative, got {target_variance}"
        )));
    }
    let stat = batch.statistic(kind)?;
    let (sample_mean, sample_var) = moments(&stat);
    let max_abs = stat.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let degenerate = target_variance < degenerate_target;
    let ks = if degenerate {
        ks_distance(&stat, |x| if x >= 0.0 { 1.0 } else { 0.0 })
    } else {
        let normal = Normal::new(0.0, target_variance.sqrt())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        ks_distance(&stat, |x| normal.cdf(x))
    };
    Ok(CltTestResult {
        statistic_kind: kind,
        n_steps: batch.n_steps,
        n_paths: batch.n_paths,
        target_variance,
        ks_distance: ks,
        sample_mean,
        sample_var,
        max_abs,
        degenerate,
        degenerate_bound: degenerate.then_some(degenerate_bound),
        degenerate_pass: degenerate.then_some(max_abs <= degenerate_bound),
    })
}

/// `q`-quantile of the KS distance between `n_samples` true standard normal
/// draws and `N(0,1)`, over `reps` seeded replications.
pub fn calibrate_ks_threshold(n_samples: usize, reps: usize, q: f64, seed: u64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut dists: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = path_rng(seed, r);
            let xs: Vec<f64> = (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
            ks_distance(&xs, |x| normal.cdf(x))
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    let idx = ((q * reps as f64).ceil() as usize).clamp(1, reps) - 1;
    dists[idx]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointGroup {
    pub x0: usize,
    pub xn: usize,
    pub count: usize,
    pub mean: f64,
    pub exact: f64,
    pub std_error: f64,
    /// `(mean − exact)/std_error`; absent for groups too small to judge.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheck {
    pub n_steps: usize,
    pub groups: Vec<EndpointGroup>,
    pub max_abs_z: f64,
}

/// Groups paths by endpoint pair and compares each group's mean of `S_n`
/// with the exact `E(S_n | ξ_0, ξ_n)`.
pub fn empirical_bridge_check(chain: &ChainModel, batch: &TrajectoryBatch) -> Result<BridgeCheck> {
    let exact = bridge_conditional(chain, batch.n_steps)?;
    let s = chain.n_states();
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); s * s];
    for (&(x, y), &sum) in batch.endpoints.iter().zip(&batch.sums) {
        buckets[x * s + y].push(sum);
    }
    let mut groups = Vec::new();
    let mut max_abs_z = 0.0f64;
    for (idx, vals) in buckets.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        let (x0, xn) = (idx / s, idx % s);
        let (mean, var) = moments(vals);
        let target = exact[(x0, xn)];
        let std_error = (var / vals.len() as f64).sqrt();
        let tol = 1e-9 * (1.0 + target.abs());
        let z = if vals.len() < 2 {
            None
        } else if std_error > 0.0 {
            Some((mean - target) / std_error)
        } else if (mean - target).abs() <= tol {
            Some(0.0)
        } else {
            Some(f64::MAX)
        };
        if let Some(z) = z {
            max_abs_z = max_abs_z.max(z.abs());
        }
        groups.push(EndpointGroup {
            x0,
            xn,
            count: vals.len(),
            mean,
            exact: target,
            std_error,
            z,
        });
    }
    Ok(BridgeCheck {
        n_steps: batch.n_steps,
        groups,
        max_abs_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;

    fn flip(p: f64) -> ChainModel {
        build_chain(&[vec![1.0 - p, p], vec![p, 1.0 - p]], &[1.0, -1.0], None).unwrap()
    }

    #[test]
    fn categorical_skips_empty_bins() {
        let c = Categorical::new([0.0, 0.5, 0.5, 0.0].iter());
        assert_eq!(c.sample(0.0), 1);
        assert_eq!(c.sample(0.49), 1);
        assert_eq!(c.sample(0.5), 2);
        assert_eq!(c.sample(0.9999999999), 2);
    }

    #[test]
    fn two_cycle_paths_alternate() {
        let c = build_chain(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, -1.0], None).unwrap();
        let b = simulate(&c, 7, 50, 3).unwrap();
        for (&(x, y), &s) in b.endpoints.iter().zip(&b.sums) {
            assert_eq!(y, 1 - x);
            assert_eq!(s, if x == 0 { -1.0 } else { 1.0 });
        }
        let centered = b.centered.as_ref().unwrap();
        assert!(centered.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn iid_mean_within_standard_error() {
        let row = vec![0.2, 0.3, 0.5];
        let c = build_chain(&[row.clone(), row.clone(), row], &[1.0, 2.0, -4.0], None).unwrap();
        let b = simulate(&c, 64, 10_000, 11).unwrap();
        let stat = b.statistic(StatisticKind::Raw).unwrap();
        let (mean, _) = moments(&stat);
        let sigma = c.norm(c.observable());
        assert!(mean.abs() <= 4.0 * sigma / (10_000f64).sqrt());
    }

    #[test]
    fn same_seed_same_batch() {
        let c = flip(0.3);
        let a = simulate(&c, 100, 200, 42).unwrap();
        let b = simulate(&c, 100, 200, 42).unwrap();
        assert_eq!(a, b);
        let other = simulate(&c, 100, 200, 43).unwrap();
        assert_ne!(a.sums, other.sums);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        let d = ks_distance(&xs, |x| normal.cdf(x));
        assert!((d - 0.0005).abs() < 1e-9);
    }

    #[test]
    fn degenerate_rule() {
        let c = build_chain(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, -1.0], None).unwrap();
        let b = simulate(&c, 64, 100, 0).unwrap();
        let r = clt_test(&b, StatisticKind::Raw, 0.0, 1e-12, 1.0 / 8.0).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.degenerate_pass, Some(true));
        assert!(r.max_abs <= 0.125);
        assert!(clt_test(&b, StatisticKind::Raw, -1.0, 1e-12, 1.0).is_err());
    }

    #[test]
    fn bridge_check_first_step() {
        let c = flip(0.3);
        let b = simulate(&c, 1, 2000, 5).unwrap();
        let chk = empirical_bridge_check(&c, &b).unwrap();
        // S_1 = f(ξ_1) exactly, so every group is exact
        assert!(chk.max_abs_z <= 4.0);
        for g in &chk.groups {
            assert!((g.mean - c.observable()[g.xn]).abs() < 1e-12);
        }
    }
}
