//! Exact conditional-expectation norms behind every projective condition,
//! and a tail-decay classifier for their truncated series.
//!
//! Sequences indexed by `n` are stored with a slot for `n = 0` so that
//! `past[n]` reads naturally; the `n = 0` entry of a partial-sum norm is 0.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ChainModel;
use crate::config::{BRIDGE_MAX_HORIZON, BRIDGE_MAX_STATES};
use crate::error::{Error, Result};
use crate::operators::{OperatorTable, SqrtMembership};

/// Minimum number of terms accepted by [`evaluate_condition`].
pub const MIN_SERIES_TERMS: usize = 64;
/// A tail whose last two octaves add less than this fraction of the partial
/// sum is treated as numerically exhausted.
pub const SATURATION_RATIO: f64 = 1e-12;

// ---------------------------------------------------------------------------
// single-n evaluators

/// `‖E(S_n | ξ_0)‖ = ‖Σ_{k=1}^n Qᵏ f‖_π`.
pub fn cond_norm_past(chain: &ChainModel, table: &OperatorTable, n: usize) -> Result<f64> {
    positive(n)?;
    table.check(n)?;
    Ok(chain.norm(&(&table.vn_f()[n] - chain.observable())))
}

/// `‖E(S_n | ξ_n)‖ = ‖Σ_{j=0}^{n−1} (Q*)ʲ f‖_π`.
pub fn cond_norm_future(chain: &ChainModel, table: &OperatorTable, n: usize) -> Result<f64> {
    positive(n)?;
    table.check(n - 1)?;
    Ok(chain.norm(&table.vnstar_f()[n - 1]))
}

fn positive(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `Q⁰, Q¹, …, Qⁿ`.
pub fn matrix_powers(kernel: &DMatrix<f64>, n: usize) -> Vec<DMatrix<f64>> {
    let s = kernel.nrows();
    let mut out = Vec::with_capacity(n + 1);
    out.push(DMatrix::identity(s, s));
    for i in 1..=n {
        out.push(&out[i - 1] * kernel);
    }
    out
}

/// `f` scaled into each column: `(A·diag f)(x, y) = A(x, y) f(y)`.
fn scale_columns(a: &DMatrix<f64>, f: &DVector<f64>, out: &mut DMatrix<f64>) {
    out.copy_from(a);
    for (mut col, &w) in out.column_iter_mut().zip(f.iter()) {
        col *= w;
    }
}

/// `‖E(S_n | ξ_0, ξ_n)‖` straight from `E(X_i | x, y) = Σ_s f(s) Qⁱ(x,s) Q^{n−i}(s,y) / Qⁿ(x,y)`.
/// `powers[i]` must hold `Qⁱ` for `i ≤ n`. Null endpoint pairs carry no weight.
pub fn cond_norm_bridge(chain: &ChainModel, n: usize, powers: &[DMatrix<f64>]) -> Result<f64> {
    positive(n)?;
    if powers.len() <= n {
        return Err(Error::HorizonExceeded {
            requested: n,
            available: powers.len().saturating_sub(1),
        });
    }
    let s = chain.n_states();
    let f = chain.observable();
    let mut numer = DMatrix::zeros(s, s);
    let mut scaled = DMatrix::zeros(s, s);
    for i in 1..=n {
        scale_columns(&powers[i], f, &mut scaled);
        numer += &scaled * &powers[n - i];
    }
    Ok(endpoint_norm(chain.stationary(), &numer, &powers[n]))
}

/// `sqrt(Σ_{x,y: P(x,y)>0} π(x) P(x,y) (N(x,y)/P(x,y))²)`.
fn endpoint_norm(pi: &DVector<f64>, numer: &DMatrix<f64>, pair: &DMatrix<f64>) -> f64 {
    let s = pi.len();
    let mut acc = 0.0;
    for x in 0..s {
        let mut row = 0.0;
        for y in 0..s {
            let p = pair[(x, y)];
            if p > 0.0 {
                row += numer[(x, y)] * numer[(x, y)] / p;
            }
        }
        acc += pi[x] * row;
    }
    acc.sqrt()
}

fn conditional_from(numer: &DMatrix<f64>, pair: &DMatrix<f64>) -> DMatrix<f64> {
    numer.zip_map(pair, |a, p| if p > 0.0 { a / p } else { 0.0 })
}

/// Walks `n = 1, 2, …` through the recurrence
/// `M_n = M_{n−1} Q + Qⁿ diag(f)`, where `M_n(x,y) = Σ_{i≤n} (Qⁱ diag f Q^{n−i})(x,y)`,
/// so that `E(S_n | ξ_0 = x, ξ_n = y) = M_n(x,y) / Qⁿ(x,y)`.
pub struct BridgeWalker<'a> {
    chain: &'a ChainModel,
    n: usize,
    power: DMatrix<f64>,
    numer: DMatrix<f64>,
    scratch: DMatrix<f64>,
    scaled: DMatrix<f64>,
}

impl<'a> BridgeWalker<'a> {
    pub fn new(chain: &'a ChainModel) -> Self {
        let s = chain.n_states();
        Self {
            chain,
            n: 0,
            power: DMatrix::identity(s, s),
            numer: DMatrix::zeros(s, s),
            scratch: DMatrix::zeros(s, s),
            scaled: DMatrix::zeros(s, s),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn advance(&mut self) {
        let q = self.chain.kernel();
        self.numer.mul_to(q, &mut self.scratch);
        std::mem::swap(&mut self.numer, &mut self.scratch);
        self.power.mul_to(q, &mut self.scratch);
        std::mem::swap(&mut self.power, &mut self.scratch);
        scale_columns(&self.power, self.chain.observable(), &mut self.scaled);
        self.numer += &self.scaled;
        self.n += 1;
    }

    /// `‖E(S_n | ξ_0, ξ_n)‖` at the current `n`.
    pub fn norm(&self) -> f64 {
        endpoint_norm(self.chain.stationary(), &self.numer, &self.power)
    }

    /// Table `(x, y) ↦ E(S_n | ξ_0 = x, ξ_n = y)`, zero on null pairs.
    pub fn conditional(&self) -> DMatrix<f64> {
        conditional_from(&self.numer, &self.power)
    }

    /// `Qⁿ` at the current `n`.
    pub fn power(&self) -> &DMatrix<f64> {
        &self.power
    }
}

fn check_dense_caps(chain: &ChainModel, n: usize) -> Result<()> {
    if chain.n_states() > BRIDGE_MAX_STATES {
        return Err(Error::ResourceCap(format!(
            "dense bridge computations support at most {BRIDGE_MAX_STATES} states, chain has {}",
            chain.n_states()
        )));
    }
    if n > BRIDGE_MAX_HORIZON {
        return Err(Error::ResourceCap(format!(
            "dense bridge horizon {n} exceeds {BRIDGE_MAX_HORIZON}"
        )));
    }
    Ok(())
}

/// `bridge[n]` for `n = 0..=n_max` (`bridge[0] = 0`).
pub fn bridge_norms(chain: &ChainModel, n_max: usize) -> Result<Vec<f64>> {
    check_dense_caps(chain, n_max)?;
    let mut walker = BridgeWalker::new(chain);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    for _ in 0..n_max {
        walker.advance();
        out.push(walker.norm());
    }
    Ok(out)
}

/// Exact `E(S_n | ξ_0 = x, ξ_n = y)` table.
pub fn bridge_conditional(chain: &ChainModel, n: usize) -> Result<DMatrix<f64>> {
    positive(n)?;
    check_dense_caps(chain, n)?;
    let mut walker = BridgeWalker::new(chain);
    while walker.n() < n {
        walker.advance();
    }
    Ok(walker.conditional())
}

/// `‖E(X_0 | ξ_{−k}, ξ_k)‖` from `Σ_s f(s) Qᵏ(x,s) Qᵏ(s,y) / Q²ᵏ(x,y)` under the pair law `π(x)Q²ᵏ(x,y)`.
pub fn mixingale_norm(chain: &ChainModel, k: usize) -> Result<f64> {
    positive(k)?;
    let qk = matrix_powers(chain.kernel(), k).pop().expect("k >= 1");
    Ok(mixingale_at(chain, &qk))
}

fn mixingale_at(chain: &ChainModel, qk: &DMatrix<f64>) -> f64 {
    let s = chain.n_states();
    let mut scaled = DMatrix::zeros(s, s);
    scale_columns(qk, chain.observable(), &mut scaled);
    let numer = &scaled * qk;
    let q2k = qk * qk;
    endpoint_norm(chain.stationary(), &numer, &q2k)
}

/// `mix_bridge[k]` for `k = 0..=k_max`; `k = 0` conditions on `ξ_0` itself, giving `‖f‖_π`.
pub fn mixingale_norms(chain: &ChainModel, k_max: usize) -> Result<Vec<f64>> {
    check_dense_caps(chain, k_max)?;
    let s = chain.n_states();
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(chain.norm(chain.observable()));
    let mut qk = DMatrix::identity(s, s);
    let mut scratch = DMatrix::zeros(s, s);
    for _ in 1..=k_max {
        qk.mul_to(chain.kernel(), &mut scratch);
        std::mem::swap(&mut qk, &mut scratch);
        out.push(mixingale_at(chain, &qk));
    }
    Ok(out)
}

/// All conditional norm sequences to a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalNorms {
    pub n_max: usize,
    /// `‖E(S_n|ξ_0)‖`.
    pub past: Vec<f64>,
    /// `‖E(S_n|ξ_n)‖`.
    pub future: Vec<f64>,
    /// `‖E(S_n|ξ_0,ξ_n)‖`.
    pub bridge: Vec<f64>,
    /// `‖E(X_k|ξ_0)‖ = ‖Qᵏf‖_π`.
    pub mix_past: Vec<f64>,
    /// `‖E(X_{−k}|ξ_0)‖ = ‖(Q*)ᵏf‖_π`.
    pub mix_future: Vec<f64>,
    /// `‖E(X_0|ξ_{−k},ξ_k)‖`.
    pub mix_bridge: Vec<f64>,
}

impl ConditionalNorms {
    pub fn compute(chain: &ChainModel, table: &OperatorTable, n_max: usize) -> Result<Self> {
        positive(n_max)?;
        table.check(n_max)?;
        let f = chain.observable();
        let mut past = vec![0.0];
        let mut future = vec![0.0];
        for n in 1..=n_max {
            past.push(chain.norm(&(&table.vn_f()[n] - f)));
            future.push(chain.norm(&table.vnstar_f()[n - 1]));
        }
        let mix_past = table.qk_f()[..=n_max].iter().map(|v| chain.norm(v)).collect();
        let mix_future = table.qstar_k_f()[..=n_max]
            .iter()
            .map(|v| chain.norm(v))
            .collect();
        Ok(Self {
            n_max,
            past,
            future,
            bridge: bridge_norms(chain, n_max)?,
            mix_past,
            mix_future,
            mix_bridge: mixingale_norms(chain, n_max)?,
        })
    }
}

// ---------------------------------------------------------------------------
// series classifier

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `1/n²`
    InverseSquare,
    /// `1/n^{3/2}`
    InverseThreeHalves,
    None,
}

impl Weight {
    fn at(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Weight::InverseSquare => 1.0 / (n * n),
            Weight::InverseThreeHalves => 1.0 / (n * n.sqrt()),
            Weight::None => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    /// `partial_sums[N−1] = Σ_{n≤N} w_n·term_n`.
    pub partial_sums: Vec<f64>,
    /// Slope of `log(w_n·term_n)` against `log n` over `n ∈ [N/4, N]`.
    pub tail_exponent: Option<f64>,
    pub verdict: Verdict,
    /// The tail window contributed below [`SATURATION_RATIO`] of the sum.
    pub saturated: bool,
}

impl SeriesVerdict {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Classifies `Σ_{n≥1} w_n·terms[n−1]` from its first `N = terms.len()` terms.
///
/// Convergent needs a tail slope below `−1 − margin`, divergent a slope at or
/// above `−1 + margin`; anything between is inconclusive.
pub fn evaluate_condition(terms: &[f64], weight: Weight, margin: f64) -> Result<SeriesVerdict> {
    if terms.len() < MIN_SERIES_TERMS {
        return Err(Error::TooFewTerms {
            got: terms.len(),
            required: MIN_SERIES_TERMS,
        });
    }
    if terms.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter(
            "series terms must be finite and nonnegative".into(),
        ));
    }
    let weighted: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| t * weight.at(i + 1))
        .collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = weighted
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();

    let big_n = terms.len();
    let start = big_n.div_ceil(4);
    let window: Vec<(f64, f64)> = (start..=big_n)
        .map(|n| (n as f64, weighted[n - 1]))
        .collect();
    let window_sum: f64 = window.iter().map(|p| p.1).sum();
    let tail_exponent = loglog_slope(&window);
    let saturated = window_sum <= SATURATION_RATIO * acc || window_sum == 0.0;
    let verdict = if saturated {
        Verdict::Convergent
    } else {
        match tail_exponent {
            Some(s) if s < -1.0 - margin => Verdict::Convergent,
            Some(s) if s >= -1.0 + margin => Verdict::Divergent,
            _ => Verdict::Inconclusive,
        }
    };
    Ok(SeriesVerdict {
        partial_sums,
        tail_exponent,
        verdict,
        saturated,
    })
}

/// Least-squares slope of `log y` against `log x` over points with `y > 0`.
pub(crate) fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Verdict on dyadic Cauchy increments `d(n) = ‖s_{2n} − s_n‖`.
///
/// The increment over an octave spreads over `n` indices, so its per-index
/// density has slope `slope − 1`; the series rule then reads: convergent
/// below `−margin`, divergent at or above `+margin`.
pub(crate) fn dyadic_slope_verdict(
    increments: &[(usize, f64)],
    scale: f64,
    margin: f64,
) -> (Option<f64>, Verdict) {
    if increments.len() < 3 {
        return (None, Verdict::Inconclusive);
    }
    let tail = &increments[increments.len() - 3..];
    let pts: Vec<(f64, f64)> = tail.iter().map(|&(n, d)| (n as f64, d)).collect();
    let slope = loglog_slope(&pts);
    if tail.iter().all(|p| p.1 <= SATURATION_RATIO * scale) {
        return (slope, Verdict::Convergent);
    }
    let verdict = match slope {
        Some(s) if s < -margin => Verdict::Convergent,
        Some(s) if s >= margin => Verdict::Divergent,
        _ => Verdict::Inconclusive,
    };
    (slope, verdict)
}

// ---------------------------------------------------------------------------
// condition rows

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    /// `Σ ‖E(S_n|ξ_0)‖ / n^{3/2}`
    #[serde(rename = "MW")]
    Mw,
    /// `Σ ‖E(S_n|ξ_0)‖² / n²`
    #[serde(rename = "C1")]
    C1,
    /// `Σ ‖E(S_n|ξ_n)‖² / n²`
    #[serde(rename = "C2")]
    C2,
    /// `Σ ‖Qᵏf‖²`
    #[serde(rename = "TWO_MIX_P")]
    TwoMixPast,
    /// `Σ ‖(Q*)ᵏf‖²`
    #[serde(rename = "TWO_MIX_F")]
    TwoMixFuture,
    /// `f ∈ √(I − Q) L²(π)`
    #[serde(rename = "SQRT_P")]
    SqrtPast,
    /// `f ∈ √(I − Q*) L²(π)`
    #[serde(rename = "SQRT_F")]
    SqrtFuture,
    /// `Σ ‖E(S_n|ξ_0,ξ_n)‖² / n²`
    #[serde(rename = "BAD")]
    Bad,
    /// `Σ ‖E(X_0|ξ_{−k},ξ_k)‖²`
    #[serde(rename = "MIXINGALE")]
    Mixingale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition_id: ConditionId,
    pub n_max: usize,
    /// Truncated series sum, or `‖s_N‖_π` for the square-root rows.
    pub partial_sum: f64,
    pub tail_exponent: Option<f64>,
    pub verdict: Verdict,
    pub saturated: bool,
    /// Finite-state exact answer, where one exists.
    pub exact: Option<bool>,
}

fn series_row(
    id: ConditionId,
    terms: &[f64],
    weight: Weight,
    margin: f64,
) -> Result<ConditionRow> {
    let v = evaluate_condition(terms, weight, margin)?;
    Ok(ConditionRow {
        condition_id: id,
        n_max: terms.len(),
        partial_sum: v.total(),
        tail_exponent: v.tail_exponent,
        verdict: v.verdict,
        saturated: v.saturated,
        exact: None,
    })
}

fn sqrt_row(id: ConditionId, m: &SqrtMembership) -> ConditionRow {
    ConditionRow {
        condition_id: id,
        n_max: m.n_max,
        partial_sum: m.partial_norms.last().map(|p| p.1).unwrap_or(0.0),
        tail_exponent: m.increment_slope,
        verdict: m.verdict,
        saturated: false,
        exact: Some(m.exact_member),
    }
}

/// Rows for every condition, in a fixed order.
pub fn condition_rows(
    norms: &ConditionalNorms,
    sqrt_past: &SqrtMembership,
    sqrt_future: &SqrtMembership,
    margin: f64,
) -> Result<Vec<ConditionRow>> {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<f64>>();
    Ok(vec![
        series_row(ConditionId::Mw, &norms.past[1..], Weight::InverseThreeHalves, margin)?,
        series_row(ConditionId::C1, &sq(&norms.past[1..]), Weight::InverseSquare, margin)?,
        series_row(ConditionId::C2, &sq(&norms.future[1..]), Weight::InverseSquare, margin)?,
        series_row(ConditionId::TwoMixPast, &sq(&norms.mix_past[1..]), Weight::None, margin)?,
        series_row(ConditionId::TwoMixFuture, &sq(&norms.mix_future[1..]), Weight::None, margin)?,
        sqrt_row(ConditionId::SqrtPast, sqrt_past),
        sqrt_row(ConditionId::SqrtFuture, sqrt_future),
        series_row(ConditionId::Bad, &sq(&norms.bridge[1..]), Weight::InverseSquare, margin)?,
        series_row(ConditionId::Mixingale, &sq(&norms.mix_bridge[1..]), Weight::None, margin)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::config::CLASSIFIER_MARGIN;

    fn flip(p: f64) -> ChainModel {
        build_chain(&[vec![1.0 - p, p], vec![p, 1.0 - p]], &[1.0, -1.0], None).unwrap()
    }

    fn two_cycle() -> ChainModel {
        build_chain(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, -1.0], None).unwrap()
    }

    fn iid() -> ChainModel {
        let row = vec![0.2, 0.3, 0.5];
        build_chain(&[row.clone(), row.clone(), row], &[1.0, 2.0, -4.0], None).unwrap()
    }

    /// Enumerates all paths of length `n` weighted by π(x_0)ΠQ and returns
    /// `‖E(S_n | ξ_0, ξ_n)‖`.
    fn brute_bridge(chain: &ChainModel, n: usize) -> f64 {
        let s = chain.n_states();
        let q = chain.kernel();
        let f = chain.observable();
        let mut mass = vec![vec![0.0; s]; s];
        let mut weighted = vec![vec![0.0; s]; s];
        let mut path = vec![0usize; n + 1];
        let total = s.pow(n as u32 + 1);
        for code in 0..total {
            let mut c = code;
            for slot in path.iter_mut() {
                *slot = c % s;
                c /= s;
            }
            let mut p = chain.stationary()[path[0]];
            for w in path.windows(2) {
                p *= q[(w[0], w[1])];
            }
            let sum: f64 = path[1..].iter().map(|&x| f[x]).sum();
            mass[path[0]][path[n]] += p;
            weighted[path[0]][path[n]] += p * sum;
        }
        let mut acc = 0.0;
        for x in 0..s {
            for y in 0..s {
                if mass[x][y] > 0.0 {
                    acc += weighted[x][y].powi(2) / mass[x][y];
                }
            }
        }
        acc.sqrt()
    }

    #[test]
    fn past_norms() {
        let c = iid();
        let t = OperatorTable::build(&c, 16).unwrap();
        for n in 1..=16 {
            assert!(cond_norm_past(&c, &t, n).unwrap() < 1e-14);
            let fut = cond_norm_future(&c, &t, n).unwrap();
            assert!((fut - c.norm(c.observable())).abs() < 1e-13);
        }
        assert!(cond_norm_past(&c, &t, 17).is_err());

        let p = 0.3;
        let c = flip(p);
        let t = OperatorTable::build(&c, 40).unwrap();
        let lambda: f64 = 1.0 - 2.0 * p;
        for n in 1..=40 {
            let brute: f64 = (1..=n).map(|k| lambda.powi(k as i32)).sum();
            let closed = (lambda * (1.0 - lambda.powi(n as i32)) / (1.0 - lambda)).abs();
            let got = cond_norm_past(&c, &t, n).unwrap();
            assert!((got - brute.abs()).abs() < 1e-14);
            assert!((got - closed).abs() < 1e-14);
        }

        let c = two_cycle();
        let t = OperatorTable::build(&c, 10).unwrap();
        for n in 1..=10 {
            let want = if n % 2 == 1 { 1.0 } else { 0.0 };
            assert!((cond_norm_past(&c, &t, n).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn reversible_future_is_shifted_past() {
        let rows = vec![
            vec![0.6, 0.4, 0.0],
            vec![0.3, 0.4, 0.3],
            vec![0.0, 0.5, 0.5],
        ];
        let c = build_chain(&rows, &[1.0, 0.0, -2.0], None).unwrap();
        assert!(c.classify().reversible);
        let t = OperatorTable::build(&c, 30).unwrap();
        for n in 1..=30 {
            let fut = cond_norm_future(&c, &t, n).unwrap();
            let shifted = c.norm(&t.vn_f()[n - 1]);
            assert!((fut - shifted).abs() < 1e-12);
        }
    }

    #[test]
    fn bridge_routes_agree_with_path_enumeration() {
        let rows = vec![
            vec![0.1, 0.6, 0.3],
            vec![0.5, 0.0, 0.5],
            vec![0.2, 0.2, 0.6],
        ];
        let c = build_chain(&rows, &[1.0, -0.5, 2.0], None).unwrap();
        let powers = matrix_powers(c.kernel(), 6);
        let walked = bridge_norms(&c, 6).unwrap();
        for n in 1..=6 {
            let brute = brute_bridge(&c, n);
            let direct = cond_norm_bridge(&c, n, &powers).unwrap();
            assert!((direct - brute).abs() < 1e-12, "n={n}");
            assert!((walked[n] - brute).abs() < 1e-12, "n={n}");
        }
        let f = flip(0.3);
        assert!((bridge_norms(&f, 2).unwrap()[2] - brute_bridge(&f, 2)).abs() < 1e-14);
    }

    #[test]
    fn bridge_first_step_is_norm_of_f() {
        for c in [iid(), flip(0.2), two_cycle()] {
            let b = bridge_norms(&c, 1).unwrap();
            assert!((b[1] - c.norm(c.observable())).abs() < 1e-14);
        }
    }

    #[test]
    fn iid_bridge_is_constant() {
        let c = iid();
        let b = bridge_norms(&c, 20).unwrap();
        let nf = c.norm(c.observable());
        assert!(b[1..].iter().all(|v| (v - nf).abs() < 1e-12));
    }

    #[test]
    fn mixingale_examples() {
        let c = iid();
        for k in 1..5 {
            assert!(mixingale_norm(&c, k).unwrap() < 1e-14);
        }
        let c = two_cycle();
        for k in 1..6 {
            assert!((mixingale_norm(&c, k).unwrap() - 1.0).abs() < 1e-14);
        }
        // two-state flip: enumerate (x, s, y) over k-step transitions
        let c = flip(0.3);
        let k = 3;
        let qk = matrix_powers(c.kernel(), k).pop().unwrap();
        let mut acc = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let mut mass = 0.0;
                let mut wsum = 0.0;
                for s in 0..2 {
                    let p = c.stationary()[x] * qk[(x, s)] * qk[(s, y)];
                    mass += p;
                    wsum += p * c.observable()[s];
                }
                acc += wsum * wsum / mass;
            }
        }
        assert!((mixingale_norm(&c, k).unwrap() - acc.sqrt()).abs() < 1e-14);
        let seq = mixingale_norms(&c, 5).unwrap();
        assert!((seq[3] - acc.sqrt()).abs() < 1e-14);
        assert!((seq[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(matches!(
            bridge_norms(&flip(0.3), BRIDGE_MAX_HORIZON + 1),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn classifier_examples() {
        let m = CLASSIFIER_MARGIN;
        let geo: Vec<f64> = (1..=64).map(|n| 0.5f64.powi(n)).collect();
        assert_eq!(evaluate_condition(&geo, Weight::None, m).unwrap().verdict, Verdict::Convergent);

        let harmonic: Vec<f64> = (1..=4096).map(|n| 1.0 / n as f64).collect();
        let v = evaluate_condition(&harmonic, Weight::None, m).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!((v.tail_exponent.unwrap() + 1.0).abs() < 1e-12);

        // n^{0.49}·n^{-3/2} has slope −1.01, inside the margin
        let boundary: Vec<f64> = (1..=4096).map(|n| (n as f64).powf(0.49)).collect();
        let v = evaluate_condition(&boundary, Weight::InverseThreeHalves, m).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        let clear: Vec<f64> = (1..=4096).map(|n| (n as f64).powf(0.3)).collect();
        let v = evaluate_condition(&clear, Weight::InverseThreeHalves, m).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);

        let grow: Vec<f64> = (1..=256).map(|n| (n as f64).sqrt()).collect();
        assert_eq!(evaluate_condition(&grow, Weight::None, m).unwrap().verdict, Verdict::Divergent);

        assert_eq!(
            evaluate_condition(&geo[..63], Weight::None, m).unwrap_err(),
            Error::TooFewTerms { got: 63, required: 64 }
        );
        let zeros = vec![0.0; 100];
        let v = evaluate_condition(&zeros, Weight::InverseSquare, m).unwrap();
        assert!(v.saturated && v.verdict == Verdict::Convergent);
    }

    #[test]
    fn partial_sums_are_monotone() {
        let terms: Vec<f64> = (1..=200).map(|n| ((n * 7919) % 13) as f64).collect();
        let v = evaluate_condition(&terms, Weight::InverseSquare, CLASSIFIER_MARGIN).unwrap();
        assert!(v.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }
}
