//! Variance of partial sums: the exact sequence `E(S_n²)/n`, the long-run
//! variance σ², the dyadic doubling recursion with its upper bound, the
//! binary-expansion split of `E(S_n²)`, and the bridge limits η² and θ².

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ChainModel;
use crate::diagnostics::bridge_norms;
use crate::error::{Error, Result};
use crate::operators::OperatorTable;

/// Autocovariances `c_k = ⟨f, Qᵏf⟩_π` for `k = 0..=K_max`.
pub fn autocovariances(chain: &ChainModel, table: &OperatorTable) -> Vec<f64> {
    let f = chain.observable();
    table.qk_f().iter().map(|v| chain.inner(f, v)).collect()
}

/// `E(S_n²)/n = c_0 + (2/n) Σ_{k=1}^{n−1} (n−k) c_k`.
pub fn exact_variance(chain: &ChainModel, table: &OperatorTable, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    table.check(n - 1)?;
    let f = chain.observable();
    let mut acc = 0.0;
    for k in 1..n {
        acc += (n - k) as f64 * chain.inner(f, &table.qk_f()[k]);
    }
    let c0 = chain.inner(f, f);
    Ok(c0 + 2.0 * acc / n as f64)
}

/// Second moments `E(S_n²)` for `n = 0..=n_max` from the increment
/// `E(S_{n+1}²) = E(S_n²) + c_0 + 2 Σ_{k=1}^{n} c_k`.
pub fn second_moments(cov: &[f64], n_max: usize) -> Result<Vec<f64>> {
    if n_max > cov.len() {
        return Err(Error::HorizonExceeded {
            requested: n_max,
            available: cov.len(),
        });
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    let mut run = 0.0;
    let mut m = 0.0;
    for n in 0..n_max {
        if n >= 1 {
            run += cov[n];
        }
        m += cov[0] + 2.0 * run;
        out.push(m);
    }
    Ok(out)
}

/// `var_seq[n] = E(S_n²)/n`, with `var_seq[0] = 0`.
pub fn variance_sequence(cov: &[f64], n_max: usize) -> Result<Vec<f64>> {
    let m = second_moments(cov, n_max)?;
    Ok(m.iter()
        .enumerate()
        .map(|(n, v)| if n == 0 { 0.0 } else { v / n as f64 })
        .collect())
}

/// `σ² = 2⟨f, g⟩_π − ⟨f, f⟩_π` with `(I − Q)g = f`, `⟨g, 1⟩_π = 0`.
///
/// Solved as `(I − Q + 1πᵀ) g = f`, which is invertible exactly when 1 is a
/// simple eigenvalue of `Q`.
pub fn sigma2_closed_form(chain: &ChainModel) -> Result<f64> {
    let g = poisson_solution(chain)?;
    let f = chain.observable();
    Ok(2.0 * chain.inner(f, &g) - chain.inner(f, f))
}

fn poisson_solution(chain: &ChainModel) -> Result<DVector<f64>> {
    let s = chain.n_states();
    let pi = chain.stationary();
    let a = DMatrix::identity(s, s) - chain.kernel() + DMatrix::from_fn(s, s, |_, y| pi[y]);
    let g = a.lu().solve(chain.observable()).ok_or(Error::SingularSystem)?;
    let residual = (chain.apply(&g) - &g + chain.observable()).amax();
    let scale = 1.0 + chain.observable().amax() + g.amax();
    if !g.iter().all(|v| v.is_finite()) || residual > 1e-8 * scale {
        return Err(Error::SingularSystem);
    }
    Ok(g)
}

/// Output of the dyadic doubling recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicRecursion {
    pub r_max: usize,
    /// `E(S_{2^r}²)/2^r` for `r = 0..=r_max`.
    pub normalized: Vec<f64>,
    /// `E[E(S_m|ξ_m)·E(S̄_m|ξ_m)]` at `m = 2^j`, `j = 0..r_max`.
    pub cross_terms: Vec<f64>,
    /// `Δ_{2^r} = Σ_{i<r} ‖E(S_{2^i}|ξ_0)‖·‖E(S_{2^i}|ξ_{2^i})‖ / 2^i`.
    pub delta_curve: Vec<f64>,
    /// `E(X_0²) + Δ_{2^r}`, the bound on `normalized[r]`.
    pub bounds: Vec<f64>,
    pub sigma2_dyadic: f64,
}

impl DyadicRecursion {
    pub fn bound_holds(&self, r: usize, slack: f64) -> bool {
        self.normalized[r] <= self.bounds[r] + slack
    }

    /// `sigma2_dyadic − E(X_0²)`: the limit of the accumulated cross terms.
    pub fn limit_constant(&self) -> f64 {
        self.sigma2_dyadic - self.normalized[0]
    }
}

/// `E[E(S_m|ξ_m)·E(S̄_m|ξ_m)] = ⟨V*_{m−1} f, Σ_{k=1}^m Qᵏ f⟩_π`, where
/// `S̄_m = X_{m+1} + … + X_{2m}`.
pub fn markov_cross_term(chain: &ChainModel, table: &OperatorTable, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("block length must be at least 1".into()));
    }
    table.check(m)?;
    let a = &table.vnstar_f()[m - 1];
    let b = &table.vn_f()[m] - chain.observable();
    Ok(chain.inner(a, &b))
}

/// `E(S_m S̄_m) = Σ_{d=1}^{2m−1} min(d, 2m−d) c_d`.
pub fn covariance_cross_term(cov: &[f64], m: usize) -> Result<f64> {
    if 2 * m > cov.len() {
        return Err(Error::HorizonExceeded {
            requested: 2 * m - 1,
            available: cov.len().saturating_sub(1),
        });
    }
    Ok((1..2 * m).map(|d| d.min(2 * m - d) as f64 * cov[d]).sum())
}

/// Runs `E(S_{2m}²) = 2E(S_m²) + 2E[E(S_m|ξ_m)E(S̄_m|ξ_m)]` for `m = 1, 2, …, 2^{r_max−1}`.
pub fn dyadic_recursion(
    chain: &ChainModel,
    table: &OperatorTable,
    r_max: usize,
) -> Result<DyadicRecursion> {
    if r_max >= 1 {
        table.check(1 << (r_max - 1))?;
    }
    let f = chain.observable();
    let c0 = chain.inner(f, f);
    let mut normalized = vec![c0];
    let mut cross_terms = Vec::with_capacity(r_max);
    let mut delta_curve = vec![0.0];
    let mut bounds = vec![c0];
    for j in 0..r_max {
        let m = 1usize << j;
        let cross = markov_cross_term(chain, table, m)?;
        cross_terms.push(cross);
        normalized.push(normalized[j] + cross / m as f64);
        let past = chain.norm(&(&table.vn_f()[m] - f));
        let future = chain.norm(&table.vnstar_f()[m - 1]);
        let delta = delta_curve[j] + past * future / m as f64;
        delta_curve.push(delta);
        bounds.push(c0 + delta);
    }
    Ok(DyadicRecursion {
        r_max,
        sigma2_dyadic: *normalized.last().expect("r = 0 entry"),
        normalized,
        cross_terms,
        delta_curve,
        bounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// Binary digit index; the block has length `2^bit`.
    pub bit: usize,
    /// First summand index (1-based).
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPair {
    /// Earlier (lower-digit) block.
    pub first: usize,
    /// Later block.
    pub second: usize,
    pub covariance: f64,
    /// `‖E(S_{L_first}|ξ_{L_first})‖·‖E(S_{L_second}|ξ_0)‖`.
    pub holder_bound: f64,
}

/// `E(S_n²) = I_n + J_n` with `S_n` cut into the blocks of the binary digits of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySplit {
    pub n: usize,
    pub blocks: Vec<Block>,
    /// `Σ_j E(U_{2^j}²)`.
    pub diagonal: f64,
    /// `Σ_{i≠j} E(U_{2^i} U_{2^j})`.
    pub cross: f64,
    pub pairs: Vec<BlockPair>,
}

impl BinarySplit {
    pub fn second_moment(&self) -> f64 {
        self.diagonal + self.cross
    }
}

/// Blocks in summation order: lowest binary digit first.
pub fn binary_blocks(n: usize) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut start = 1;
    let mut bit = 0;
    while (n >> bit) > 0 {
        if (n >> bit) & 1 == 1 {
            let len = 1usize << bit;
            blocks.push(Block { bit, start, len });
            start += len;
        }
        bit += 1;
    }
    blocks
}

/// Assembles `E(S_n²)` block by block from autocovariances; the Hölder bound
/// on each pair uses the operator table's conditional norms.
pub fn binary_split(
    chain: &ChainModel,
    table: &OperatorTable,
    cov: &[f64],
    moments: &[f64],
    n: usize,
) -> Result<BinarySplit> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if cov.len() < n || moments.len() <= n {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: cov.len().min(moments.len().saturating_sub(1)),
        });
    }
    table.check(n)?;
    let mut prefix = vec![0.0; cov.len()];
    for t in 1..cov.len() {
        prefix[t] = prefix[t - 1] + cov[t];
    }
    let blocks = binary_blocks(n);
    let diagonal = blocks.iter().map(|b| moments[b.len]).sum();
    let f = chain.observable();
    let mut pairs = Vec::new();
    for (i, a) in blocks.iter().enumerate() {
        for (j, b) in blocks.iter().enumerate().skip(i + 1) {
            let gap = b.start - (a.start + a.len);
            let covariance: f64 = (0..a.len)
                .map(|u| prefix[u + gap + b.len] - prefix[u + gap])
                .sum();
            let future = chain.norm(&table.vnstar_f()[a.len - 1]);
            let past = chain.norm(&(&table.vn_f()[b.len] - f));
            pairs.push(BlockPair {
                first: i,
                second: j,
                covariance,
                holder_bound: future * past,
            });
        }
    }
    let cross = 2.0 * pairs.iter().map(|p| p.covariance).sum::<f64>();
    Ok(BinarySplit {
        n,
        blocks,
        diagonal,
        cross,
        pairs,
    })
}

/// A limit read off a sequence, with the disagreement between the last two
/// extrapolants as its spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    pub spread: f64,
}

/// Richardson extrapolation under `v(n) ≈ L + K/n` across the last three points.
pub fn extrapolate(points: &[(usize, f64)]) -> Option<Extrapolated> {
    if points.len() < 3 {
        return None;
    }
    let tail = &points[points.len() - 3..];
    let step = |a: (usize, f64), b: (usize, f64)| {
        let (na, nb) = (a.0 as f64, b.0 as f64);
        (nb * b.1 - na * a.1) / (nb - na)
    };
    let r1 = step(tail[0], tail[1]);
    let r2 = step(tail[1], tail[2]);
    Some(Extrapolated {
        value: r2,
        spread: (r2 - r1).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTheta {
    pub n_grid: Vec<usize>,
    /// `(1/n)‖E(S_n|ξ_0,ξ_n)‖²` on the grid.
    pub eta_curve: Vec<f64>,
    /// `(1/n)‖S_n − E(S_n|ξ_0,ξ_n)‖² = E(S_n²)/n − eta_curve`.
    pub theta_curve: Vec<f64>,
    pub eta2: Option<Extrapolated>,
    pub theta2: Option<Extrapolated>,
    /// Why point estimates were withheld.
    pub refusal: Option<String>,
}

/// Curves and limits of η² and θ² from precomputed `var_seq` and `bridge`
/// sequences (both indexed by `n`). The two curves sum to `var_seq` by
/// orthogonality of `E(S_n|ξ_0,ξ_n)` and its residual.
pub fn eta2_theta2_from(
    var_seq: &[f64],
    bridge: &[f64],
    n_grid: &[usize],
    totally_ergodic: bool,
) -> Result<EtaTheta> {
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if let Some(&bad) = grid.iter().find(|&&n| n == 0 || n >= var_seq.len() || n >= bridge.len()) {
        return Err(Error::HorizonExceeded {
            requested: bad,
            available: var_seq.len().min(bridge.len()).saturating_sub(1),
        });
    }
    let eta_curve: Vec<f64> = grid.iter().map(|&n| bridge[n].powi(2) / n as f64).collect();
    let theta_curve: Vec<f64> = grid
        .iter()
        .zip(&eta_curve)
        .map(|(&n, e)| var_seq[n] - e)
        .collect();
    let (eta2, theta2, refusal) = if totally_ergodic {
        let pts = |c: &[f64]| grid.iter().copied().zip(c.iter().copied()).collect::<Vec<_>>();
        (
            extrapolate(&pts(&eta_curve)),
            extrapolate(&pts(&theta_curve)),
            None,
        )
    } else {
        (None, None, Some(Error::NotTotallyErgodic.to_string()))
    };
    Ok(EtaTheta {
        n_grid: grid,
        eta_curve,
        theta_curve,
        eta2,
        theta2,
        refusal,
    })
}

/// Convenience wrapper computing the needed sequences itself.
pub fn eta2_theta2(chain: &ChainModel, n_grid: &[usize]) -> Result<EtaTheta> {
    let n_max = n_grid.iter().copied().max().unwrap_or(1).max(1);
    let table = OperatorTable::build(chain, n_max)?;
    let cov = autocovariances(chain, &table);
    let var_seq = variance_sequence(&cov, n_max)?;
    let bridge = bridge_norms(chain, n_max)?;
    eta2_theta2_from(&var_seq, &bridge, n_grid, chain.classify().totally_ergodic)
}

/// Everything the reporter needs about the variance of partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    /// `E(S_n²)/n` for `n = 0..=n_max` (entry 0 unused).
    pub var_seq: Vec<f64>,
    pub sigma2_closed: Option<f64>,
    pub sigma2_dyadic: f64,
    pub dyadic: DyadicRecursion,
    pub eta_theta: EtaTheta,
}

impl VarianceProfile {
    pub fn eta2(&self) -> Option<f64> {
        self.eta_theta.eta2.map(|e| e.value)
    }

    pub fn theta2(&self) -> Option<f64> {
        self.eta_theta.theta2.map(|e| e.value)
    }

    pub fn delta_curve(&self) -> &[f64] {
        &self.dyadic.delta_curve
    }

    pub fn compute(
        chain: &ChainModel,
        table: &OperatorTable,
        bridge: &[f64],
        n_max: usize,
    ) -> Result<Self> {
        let cov = autocovariances(chain, table);
        let var_seq = variance_sequence(&cov, n_max)?;
        let r_max = n_max.ilog2() as usize;
        let dyadic = dyadic_recursion(chain, table, r_max)?;
        let grid: Vec<usize> = (0..=r_max).map(|r| 1usize << r).collect();
        let eta_theta =
            eta2_theta2_from(&var_seq, bridge, &grid, chain.classify().totally_ergodic)?;
        Ok(Self {
            sigma2_closed: sigma2_closed_form(chain).ok(),
            sigma2_dyadic: dyadic.sigma2_dyadic,
            var_seq,
            dyadic,
            eta_theta,
        })
    }
}
