//! Finite checks of the auxiliary inequalities on synthetic and chain-induced
//! inputs, plus seeded campaigns that run them at scale.
//!
//! Every check is a finite inequality that a counterexample would genuinely
//! violate: truncations only drop terms from the bounded side or keep the
//! full set of terms the dominating side needs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainModel;
use crate::diagnostics::{bridge_norms, ConditionalNorms};
use crate::error::{Error, Result};
use crate::gallery::random_chain;
use crate::operators::OperatorTable;

/// Constant in the dyadic bound `Σ V_{2^i}²/2^i ≤ 65 Σ V_k²/k²`.
pub const LNEGLI_CONSTANT: f64 = 65.0;
/// Constant in `Σ_k k^{-2}(Σ_{i≤k} a_i)² ≤ 4 Σ a_i²`.
pub const AUX_CONSTANT: f64 = 4.0;
/// Slack allowed on chain-induced subadditivity.
pub const SUBADDITIVE_TOL: f64 = 1e-10;

/// Positive sequence `V_1, …, V_M`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditiveSequence {
    values: Vec<f64>,
}

impl SubadditiveSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "sequence must be nonempty, finite and positive".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V_m`, one-based.
    pub fn at(&self, m: usize) -> f64 {
        self.values[m - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_{n+m ≤ M} (V_{n+m} − V_n − V_m)`; nonpositive for subadditive input.
    pub fn max_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for total in 2..=self.len() {
            for n in 1..=total / 2 {
                worst = worst.max(self.at(total) - self.at(n) - self.at(total - n));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubadditiveStyle {
    ConcavePower,
    RandomMin,
    ChainInduced,
}

/// `V_m = c·m^α`, subadditive for `α ∈ (0, 1]`.
pub fn concave_power(len: usize, scale: f64, exponent: f64) -> Result<SubadditiveSequence> {
    if !(exponent > 0.0 && exponent <= 1.0 && scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "concave power needs scale > 0 and exponent in (0, 1], got {scale}, {exponent}"
        )));
    }
    SubadditiveSequence::new((1..=len).map(|m| scale * (m as f64).powf(exponent)).collect())
}

/// Draws a subadditive sequence of length `len` in the given style.
pub fn gen_subadditive(seed: u64, len: usize, style: SubadditiveStyle) -> Result<SubadditiveSequence> {
    if len < 4 {
        return Err(Error::InvalidParameter(format!("length must be >= 4, got {len}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match style {
        SubadditiveStyle::ConcavePower => {
            let scale = rng.random_range(0.1..10.0);
            let exponent = 1.0 - rng.random::<f64>();
            concave_power(len, scale, exponent)
        }
        SubadditiveStyle::RandomMin => Ok(random_min(&mut rng, len)),
        SubadditiveStyle::ChainInduced => chain_induced(&mut rng, len),
    }
}

/// `V_n = U_n · min_{k<n} (V_k + V_{n−k})`, with `U_n = 1` half the time and
/// uniform on `[1/2, 1)` otherwise; multiplying the split minimum by
/// `U_n ≤ 1` keeps every split inequality exact in floating point.
fn random_min<R: Rng>(rng: &mut R, len: usize) -> SubadditiveSequence {
    let mut v = Vec::with_capacity(len);
    v.push(rng.random_range(0.5..2.0));
    for n in 2..=len {
        let best = min_split(&v, n);
        let shrink = if rng.random::<bool>() {
            1.0
        } else {
            rng.random_range(0.5..1.0)
        };
        v.push(best * shrink);
    }
    SubadditiveSequence { values: v }
}

/// `min_{1≤k≤n/2} (V_k + V_{n−k})` with `v` holding `V_1..V_{n−1}`.
fn min_split(v: &[f64], n: usize) -> f64 {
    let half = n / 2;
    let lo = &v[..half];
    // V_{n−k} for k = 1..=half, read backwards
    let hi = &v[n - 1 - half..n - 1];
    // independent lanes let the loop vectorize
    let mut lanes = [f64::INFINITY; 8];
    let mut lo_chunks = lo.chunks_exact(8);
    let mut hi_chunks = hi.rchunks_exact(8);
    for (a, b) in lo_chunks.by_ref().zip(hi_chunks.by_ref()) {
        for j in 0..8 {
            let s = a[j] + b[7 - j];
            lanes[j] = if s < lanes[j] { s } else { lanes[j] };
        }
    }
    let mut best = lanes.iter().copied().fold(f64::INFINITY, f64::min);
    for (a, b) in lo_chunks.remainder().iter().zip(hi_chunks.remainder().iter().rev()) {
        best = best.min(a + b);
    }
    best
}

/// Past, future or bridge norm sequence of a random chain.
fn chain_induced<R: Rng>(rng: &mut R, len: usize) -> Result<SubadditiveSequence> {
    loop {
        let size = rng.random_range(2..=6);
        let zero_fraction = rng.random_range(0.0..0.5);
        let chain = random_chain(rng, size, zero_fraction)?;
        let kind = rng.random_range(0..3);
        let values = chain_norm_sequence(&chain, len, kind)?;
        if values.iter().all(|v| *v > 0.0) {
            return SubadditiveSequence::new(values);
        }
    }
}

/// `kind` 0, 1, 2 selects `‖E(S_n|ξ_0)‖`, `‖E(S_n|ξ_n)‖`, `‖E(S_n|ξ_0,ξ_n)‖`
/// for `n = 1..=len`.
pub fn chain_norm_sequence(chain: &ChainModel, len: usize, kind: usize) -> Result<Vec<f64>> {
    let f = chain.observable();
    match kind {
        0 => {
            let t = OperatorTable::build(chain, len)?;
            Ok((1..=len).map(|n| chain.norm(&(&t.vn_f()[n] - f))).collect())
        }
        1 => {
            let t = OperatorTable::build(chain, len)?;
            Ok((1..=len).map(|n| chain.norm(&t.vnstar_f()[n - 1])).collect())
        }
        _ => Ok(bridge_norms(chain, len)?[1..].to_vec()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; at most 1 when the bound holds.
    pub utilization: f64,
    /// The smallest constant that would still have worked.
    pub empirical_constant: f64,
    pub pass: bool,
}

fn bound_check(lhs: f64, base: f64, constant: f64, slack: f64) -> BoundCheck {
    let rhs = constant * base;
    BoundCheck {
        lhs,
        rhs,
        utilization: if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::MAX } else { 0.0 },
        empirical_constant: if base > 0.0 { lhs / base } else { 0.0 },
        pass: lhs <= rhs + slack,
    }
}

/// `Σ_{i≥1, 2^i ≤ M} V_{2^i}²/2^i ≤ 65 Σ_{k≤M} V_k²/k²`.
///
/// Each dyadic term is dominated by terms with indices no larger than its
/// own, so truncating both sides at `M` keeps the inequality valid.
pub fn check_lnegli(seq: &SubadditiveSequence) -> BoundCheck {
    let m = seq.len();
    let mut lhs = 0.0;
    let mut p = 2;
    while p <= m {
        lhs += seq.at(p).powi(2) / p as f64;
        p *= 2;
    }
    let base: f64 = (1..=m).map(|k| seq.at(k).powi(2) / (k * k) as f64).sum();
    bound_check(lhs, base, LNEGLI_CONSTANT, 0.0)
}

/// `|A_N|` for `A_N = {i ≤ N : V_i ≥ V_N/2}` and whether `|A_N| ≥ N/2`.
pub fn check_cardinality_property(seq: &SubadditiveSequence, n: usize) -> Result<(usize, bool)> {
    if n == 0 || n > seq.len() {
        return Err(Error::InvalidParameter(format!(
            "N must lie in 1..={}, got {n}",
            seq.len()
        )));
    }
    let half = seq.at(n) / 2.0;
    let count = (1..=n).filter(|&i| seq.at(i) >= half).count();
    Ok((count, 2 * count >= n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardinalityScan {
    /// `N` minimizing `|A_N| / (N/2)`.
    pub worst_n: usize,
    pub worst_count: usize,
    /// `(N/2)/|A_N|` at the worst `N`; at most 1 when the property holds.
    pub utilization: f64,
    pub pass: bool,
}

/// Checks `|A_N| ≥ N/2` for every `N ≤ M` in `O(M log M)` with a Fenwick tree
/// over value ranks.
pub fn cardinality_scan(seq: &SubadditiveSequence) -> CardinalityScan {
    let m = seq.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| seq.values[a].total_cmp(&seq.values[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let sorted: Vec<f64> = order.iter().map(|&i| seq.values[i]).collect();
    let mut tree = vec![0usize; m + 1];
    let mut worst = CardinalityScan {
        worst_n: 1,
        worst_count: 1,
        utilization: 0.0,
        pass: true,
    };
    for n in 1..=m {
        let mut i = rank[n - 1] + 1;
        while i <= m {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
        let first = sorted.partition_point(|&v| v < seq.at(n) / 2.0);
        let mut below = 0;
        let mut i = first;
        while i > 0 {
            below += tree[i];
            i -= i & i.wrapping_neg();
        }
        let count = n - below;
        let utilization = (n as f64 / 2.0) / count as f64;
        if utilization > worst.utilization {
            worst = CardinalityScan {
                worst_n: n,
                worst_count: count,
                utilization,
                pass: worst.pass && 2 * count >= n,
            };
        } else if 2 * count < n {
            worst.pass = false;
        }
    }
    worst
}

/// `A_m = Σ_{k≤m} k^{-2} (Σ_{i≤k} a_i)² ≤ 4 Σ_{i≤m} a_i²`.
pub fn check_aux(a: &[f64], m: usize) -> Result<BoundCheck> {
    if m == 0 || m > a.len() {
        return Err(Error::InvalidParameter(format!(
            "m must lie in 1..={}, got {m}",
            a.len()
        )));
    }
    let mut partial = 0.0;
    let mut lhs = 0.0;
    for (k, &ak) in a[..m].iter().enumerate() {
        partial += ak;
        lhs += partial * partial / ((k + 1) * (k + 1)) as f64;
    }
    let base: f64 = a[..m].iter().map(|x| x * x).sum();
    Ok(bound_check(lhs, base, AUX_CONSTANT, 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImplicationId {
    /// `Σ ‖E(S_n|ξ_0)‖²/n² ≤ 4 Σ_{k=1}^m ‖Qᵏf‖²`.
    #[serde(rename = "MIX1_BOUNDS_C1")]
    Mix1BoundsC1,
    /// `Σ ‖E(S_n|ξ_n)‖²/n² ≤ 4 Σ_{k=0}^{m−1} ‖(Q*)ᵏf‖²`.
    #[serde(rename = "MIX2_BOUNDS_C2")]
    Mix2BoundsC2,
    /// `Σ_{2^i≤m} ‖E(S_{2^i}|ξ_0)‖²/2^i ≤ 65 Σ ‖E(S_n|ξ_0)‖²/n²`.
    #[serde(rename = "C1_BOUNDS_DYADIC_P")]
    C1BoundsDyadicPast,
    /// `Σ_{2^i≤m} ‖E(S_{2^i}|ξ_{2^i})‖²/2^i ≤ 65 Σ ‖E(S_n|ξ_n)‖²/n²`.
    #[serde(rename = "C2_BOUNDS_DYADIC_F")]
    C2BoundsDyadicFuture,
    /// `‖E(S_n|ξ_0)‖ ≤ ‖E(S_n|ξ_0,ξ_n)‖` for each `n`, hence for the sums.
    #[serde(rename = "BAD_DOMINATES_C1")]
    BadDominatesC1,
    /// `‖E(S_n|ξ_n)‖ ≤ ‖E(S_n|ξ_0,ξ_n)‖` for each `n`.
    #[serde(rename = "BAD_DOMINATES_C2")]
    BadDominatesC2,
    /// `Σ ‖E(S_n|ξ_0,ξ_n)‖²/n² ≤ 16 Σ_{k=0}^{m−1} ‖E(X_0|ξ_{−k},ξ_k)‖²`.
    #[serde(rename = "MIXINGALE_BOUNDS_BAD")]
    MixingaleBoundsBad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicationRow {
    pub implication: ImplicationId,
    pub horizon: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn row(implication: ImplicationId, horizon: usize, lhs: f64, rhs: f64) -> ImplicationRow {
    ImplicationRow {
        implication,
        horizon,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-12,
    }
}

/// Finite-horizon versions of the orderings between conditions.
///
/// For the mixingale row: `‖E(X_i|ξ_0,ξ_n)‖ ≤ ‖E(X_0|ξ_{−d},ξ_d)‖` with
/// `d = min(i, n−i)`, so `‖E(S_n|ξ_0,ξ_n)‖ ≤ Σ_{k=1}^n 2‖E(X_0|ξ_{−(k−1)},ξ_{k−1})‖`,
/// and the square-sum bound with constant 4 gives 16.
pub fn check_implications(norms: &ConditionalNorms, horizon: usize) -> Result<Vec<ImplicationRow>> {
    if horizon == 0 || horizon > norms.n_max {
        return Err(Error::HorizonExceeded {
            requested: horizon,
            available: norms.n_max,
        });
    }
    let m = horizon;
    let weighted = |v: &[f64]| -> f64 {
        (1..=m).map(|n| v[n] * v[n] / (n * n) as f64).sum()
    };
    let squares = |v: &[f64], lo: usize, hi: usize| -> f64 { v[lo..=hi].iter().map(|x| x * x).sum() };
    let dyadic = |v: &[f64]| -> f64 {
        let mut acc = 0.0;
        let mut p = 2;
        while p <= m {
            acc += v[p] * v[p] / p as f64;
            p *= 2;
        }
        acc
    };
    let c1 = weighted(&norms.past);
    let c2 = weighted(&norms.future);
    let bad = weighted(&norms.bridge);
    let termwise = |small: &[f64]| {
        (1..=m).all(|n| small[n] <= norms.bridge[n] + 1e-10)
    };
    let mut rows = vec![
        row(ImplicationId::Mix1BoundsC1, m, c1, AUX_CONSTANT * squares(&norms.mix_past, 1, m)),
        row(
            ImplicationId::Mix2BoundsC2,
            m,
            c2,
            AUX_CONSTANT * squares(&norms.mix_future, 0, m - 1),
        ),
        row(ImplicationId::C1BoundsDyadicPast, m, dyadic(&norms.past), LNEGLI_CONSTANT * c1),
        row(ImplicationId::C2BoundsDyadicFuture, m, dyadic(&norms.future), LNEGLI_CONSTANT * c2),
        row(ImplicationId::BadDominatesC1, m, c1, bad),
        row(ImplicationId::BadDominatesC2, m, c2, bad),
        row(
            ImplicationId::MixingaleBoundsBad,
            m,
            bad,
            4.0 * AUX_CONSTANT * squares(&norms.mix_bridge, 0, m - 1),
        ),
    ];
    rows[4].holds &= termwise(&norms.past);
    rows[5].holds &= termwise(&norms.future);
    Ok(rows)
}

// ---------------------------------------------------------------------------
// campaigns

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    #[serde(rename = "LNEGLI_CONCAVE")]
    LnegliConcave,
    #[serde(rename = "LNEGLI_RANDOM_MIN")]
    LnegliRandomMin,
    #[serde(rename = "LNEGLI_CHAIN")]
    LnegliChain,
    #[serde(rename = "CARDINALITY_CONCAVE")]
    CardinalityConcave,
    #[serde(rename = "CARDINALITY_RANDOM_MIN")]
    CardinalityRandomMin,
    #[serde(rename = "CARDINALITY_CHAIN")]
    CardinalityChain,
    #[serde(rename = "AUX")]
    Aux,
    #[serde(rename = "LSUBAD")]
    Lsubad,
}

impl LemmaId {
    pub const ALL: [LemmaId; 8] = [
        LemmaId::LnegliConcave,
        LemmaId::LnegliRandomMin,
        LemmaId::LnegliChain,
        LemmaId::CardinalityConcave,
        LemmaId::CardinalityRandomMin,
        LemmaId::CardinalityChain,
        LemmaId::Aux,
        LemmaId::Lsubad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::LnegliConcave => "LNEGLI_CONCAVE",
            LemmaId::LnegliRandomMin => "LNEGLI_RANDOM_MIN",
            LemmaId::LnegliChain => "LNEGLI_CHAIN",
            LemmaId::CardinalityConcave => "CARDINALITY_CONCAVE",
            LemmaId::CardinalityRandomMin => "CARDINALITY_RANDOM_MIN",
            LemmaId::CardinalityChain => "CARDINALITY_CHAIN",
            LemmaId::Aux => "AUX",
            LemmaId::Lsubad => "LSUBAD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    fn tag(self) -> u64 {
        // cardinality cases reuse the sequences of the matching Lnegli campaign
        match self {
            LemmaId::LnegliConcave | LemmaId::CardinalityConcave => 1,
            LemmaId::LnegliRandomMin | LemmaId::CardinalityRandomMin => 2,
            LemmaId::LnegliChain | LemmaId::CardinalityChain => 3,
            LemmaId::Aux => 4,
            LemmaId::Lsubad => 5,
        }
    }

    fn style(self) -> Option<SubadditiveStyle> {
        match self {
            LemmaId::LnegliConcave | LemmaId::CardinalityConcave => Some(SubadditiveStyle::ConcavePower),
            LemmaId::LnegliRandomMin | LemmaId::CardinalityRandomMin => Some(SubadditiveStyle::RandomMin),
            LemmaId::LnegliChain | LemmaId::CardinalityChain => Some(SubadditiveStyle::ChainInduced),
            _ => None,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of case `index` in a campaign; replaying it reproduces the case.
pub fn case_seed(master: u64, lemma: LemmaId, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(lemma.tag())).wrapping_add(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub pass: bool,
    /// Bound utilization; at most 1 when the case passes.
    pub utilization: f64,
    /// Smallest constant that would have sufficed, where the lemma has one.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignSizes {
    /// Sequence length for the dyadic-bound campaigns.
    pub sequence_len: usize,
    /// Cases per subadditive style.
    pub lnegli_cases: u64,
    pub aux_cases: u64,
    pub aux_max_len: usize,
    pub lsubad_cases: u64,
    pub lsubad_max_states: usize,
    /// Subadditivity is checked for all `n + m ≤ lsubad_horizon`.
    pub lsubad_horizon: usize,
}

impl Default for CampaignSizes {
    fn default() -> Self {
        Self {
            sequence_len: 4096,
            lnegli_cases: 1000,
            aux_cases: 10_000,
            aux_max_len: 512,
            lsubad_cases: 100,
            lsubad_max_states: 16,
            lsubad_horizon: 64,
        }
    }
}

impl CampaignSizes {
    /// Same shape, every case count set to `n`.
    pub fn uniform(n: u64) -> Self {
        Self {
            lnegli_cases: n,
            aux_cases: n,
            lsubad_cases: n,
            ..Self::default()
        }
    }

    fn cases(&self, lemma: LemmaId) -> u64 {
        match lemma {
            LemmaId::Aux => self.aux_cases,
            LemmaId::Lsubad => self.lsubad_cases,
            _ => self.lnegli_cases,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub lemma_id: LemmaId,
    pub n_cases: u64,
    pub n_pass: u64,
    pub worst_ratio: Option<f64>,
    pub worst_seed: Option<u64>,
    pub worst_constant: Option<f64>,
}

impl CampaignSummary {
    pub fn all_pass(&self) -> bool {
        self.n_pass == self.n_cases
    }
}

/// Runs a single case from its seed.
pub fn replay(lemma: LemmaId, seed: u64, sizes: &CampaignSizes) -> Result<CaseOutcome> {
    match lemma {
        LemmaId::Aux => aux_case(seed, sizes.aux_max_len),
        LemmaId::Lsubad => lsubad_case(seed, sizes),
        LemmaId::LnegliConcave | LemmaId::LnegliRandomMin | LemmaId::LnegliChain => {
            let seq = gen_subadditive(seed, sizes.sequence_len, lemma.style().expect("style"))?;
            let c = check_lnegli(&seq);
            Ok(CaseOutcome {
                pass: c.pass,
                utilization: c.utilization,
                constant: Some(c.empirical_constant),
            })
        }
        _ => {
            let seq = gen_subadditive(seed, sizes.sequence_len, lemma.style().expect("style"))?;
            let c = cardinality_scan(&seq);
            Ok(CaseOutcome {
                pass: c.pass,
                utilization: c.utilization,
                constant: None,
            })
        }
    }
}

fn aux_case(seed: u64, max_len: usize) -> Result<CaseOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=max_len.max(1));
    let cauchy = Cauchy::new(0.0, 1.0).expect("unit cauchy");
    let a: Vec<f64> = match rng.random_range(0..5) {
        0 => (0..m).map(|_| rng.sample(StandardNormal)).collect(),
        1 => (0..m).map(|_| cauchy.sample(&mut rng)).collect(),
        2 => (0..m)
            .map(|i| {
                let x: f64 = rng.sample(StandardNormal);
                if i % 2 == 0 { x.abs() } else { -x.abs() }
            })
            .collect(),
        3 => (0..m)
            .map(|_| if rng.random::<f64>() < 0.05 { rng.sample(StandardNormal) } else { 0.0 })
            .collect(),
        _ => {
            let c = rng.random_range(0.1..3.0);
            vec![c; m]
        }
    };
    let c = check_aux(&a, m)?;
    Ok(CaseOutcome {
        pass: c.pass,
        utilization: c.utilization,
        constant: Some(c.empirical_constant),
    })
}

fn lsubad_case(seed: u64, sizes: &CampaignSizes) -> Result<CaseOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = rng.random_range(2..=sizes.lsubad_max_states.max(2));
    let zero_fraction = rng.random_range(0.0..0.7);
    let chain = random_chain(&mut rng, size, zero_fraction)?;
    let h = sizes.lsubad_horizon;
    let mut pass = true;
    let mut utilization = 0.0f64;
    for kind in 0..3 {
        let v = chain_norm_sequence(&chain, h, kind)?;
        for total in 2..=h {
            for n in 1..=total / 2 {
                let (a, b, c) = (v[total - 1], v[n - 1], v[total - n - 1]);
                if a > b + c + SUBADDITIVE_TOL {
                    pass = false;
                }
                if b + c > 0.0 {
                    utilization = utilization.max(a / (b + c));
                }
            }
        }
    }
    Ok(CaseOutcome {
        pass,
        utilization,
        constant: None,
    })
}

/// Runs `n_cases` seeded cases; the worst case is the first with the largest
/// utilization, so summaries are stable under any scheduling.
pub fn run_campaign(lemma: LemmaId, n_cases: u64, master: u64, sizes: &CampaignSizes) -> Result<CampaignSummary> {
    let outcomes: Vec<(u64, CaseOutcome)> = (0..n_cases)
        .into_par_iter()
        .map(|i| {
            let seed = case_seed(master, lemma, i);
            replay(lemma, seed, sizes).map(|o| (seed, o))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(lemma, &outcomes))
}

fn summarize(lemma: LemmaId, outcomes: &[(u64, CaseOutcome)]) -> CampaignSummary {
    let mut worst: Option<&(u64, CaseOutcome)> = None;
    for o in outcomes {
        if worst.is_none_or(|w| o.1.utilization > w.1.utilization) {
            worst = Some(o);
        }
    }
    let worst_constant = outcomes
        .iter()
        .filter_map(|o| o.1.constant)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    CampaignSummary {
        lemma_id: lemma,
        n_cases: outcomes.len() as u64,
        n_pass: outcomes.iter().filter(|o| o.1.pass).count() as u64,
        worst_ratio: worst.map(|w| w.1.utilization),
        worst_seed: worst.map(|w| w.0),
        worst_constant,
    }
}

/// Every campaign; the dyadic-bound and cardinality checks share sequences.
/// A zero-case configuration yields an empty list.
pub fn run_all(sizes: &CampaignSizes, master: u64) -> Result<Vec<CampaignSummary>> {
    let mut out = Vec::new();
    for (lnegli, card) in [
        (LemmaId::LnegliConcave, LemmaId::CardinalityConcave),
        (LemmaId::LnegliRandomMin, LemmaId::CardinalityRandomMin),
        (LemmaId::LnegliChain, LemmaId::CardinalityChain),
    ] {
        if sizes.lnegli_cases == 0 {
            continue;
        }
        let style = lnegli.style().expect("style");
        let pairs: Vec<(u64, CaseOutcome, CaseOutcome)> = (0..sizes.lnegli_cases)
            .into_par_iter()
            .map(|i| {
                let seed = case_seed(master, lnegli, i);
                let seq = gen_subadditive(seed, sizes.sequence_len, style)?;
                let l = check_lnegli(&seq);
                let c = cardinality_scan(&seq);
                Ok((
                    seed,
                    CaseOutcome { pass: l.pass, utilization: l.utilization, constant: Some(l.empirical_constant) },
                    CaseOutcome { pass: c.pass, utilization: c.utilization, constant: None },
                ))
            })
            .collect::<Result<_>>()?;
        let l: Vec<_> = pairs.iter().map(|p| (p.0, p.1)).collect();
        let c: Vec<_> = pairs.iter().map(|p| (p.0, p.2)).collect();
        out.push(summarize(lnegli, &l));
        out.push(summarize(card, &c));
    }
    for lemma in [LemmaId::Aux, LemmaId::Lsubad] {
        let n = sizes.cases(lemma);
        if n > 0 {
            out.push(run_campaign(lemma, n, master, sizes)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;

    #[test]
    fn min_split_matches_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1.0)).collect();
        for n in 2..=201 {
            let direct = (1..=n / 2).map(|k| v[k - 1] + v[n - k - 1]).fold(f64::INFINITY, f64::min);
            assert_eq!(min_split(&v[..n - 1], n), direct, "n = {n}");
        }
    }

    #[test]
    fn concave_power_examples() {
        let lin = concave_power(64, 1.0, 1.0).unwrap();
        assert_eq!(lin.at(5), 5.0);
        assert!(lin.max_violation() <= 0.0);
        let root = concave_power(64, 1.0, 0.5).unwrap();
        assert!(root.max_violation() <= 0.0);
        assert!(concave_power(8, 1.0, 1.5).is_err());
    }

    #[test]
    fn generators_are_subadditive() {
        for (i, style) in [SubadditiveStyle::ConcavePower, SubadditiveStyle::RandomMin, SubadditiveStyle::ChainInduced]
            .into_iter()
            .enumerate()
        {
            let seq = gen_subadditive(i as u64, 300, style).unwrap();
            assert!(seq.max_violation() <= SUBADDITIVE_TOL, "{style:?}");
        }
        assert!(gen_subadditive(0, 3, SubadditiveStyle::RandomMin).is_err());
    }

    #[test]
    fn flip_chain_sequences_are_subadditive() {
        let c = build_chain(&[vec![0.7, 0.3], vec![0.3, 0.7]], &[1.0, -1.0], None).unwrap();
        for kind in 0..3 {
            let v = chain_norm_sequence(&c, 128, kind).unwrap();
            let seq = SubadditiveSequence::new(v).unwrap();
            assert!(seq.max_violation() <= SUBADDITIVE_TOL);
        }
    }

    #[test]
    fn lnegli_examples() {
        for len in [8, 100, 4096] {
            let c = check_lnegli(&concave_power(len, 1.0, 1.0).unwrap());
            assert!(c.pass);
            // Σ_{2^i ≤ M} 2^i against 65·M
            let lhs: f64 = (1..).map(|i| 1usize << i).take_while(|&p| p <= len).map(|p| p as f64).sum();
            assert!((c.lhs - lhs).abs() < 1e-9);
            assert!((c.rhs - 65.0 * len as f64).abs() < 1e-9);
        }
        let c = check_lnegli(&concave_power(4096, 1.0, 0.5).unwrap());
        assert!((c.lhs - 12.0).abs() < 1e-12);
        let harmonic: f64 = (1..=4096).map(|k| 1.0 / k as f64).sum();
        assert!((c.rhs - 65.0 * harmonic).abs() < 1e-9);
        assert!(c.pass);
    }

    #[test]
    fn cardinality_examples() {
        let lin = concave_power(16, 1.0, 1.0).unwrap();
        assert_eq!(check_cardinality_property(&lin, 8).unwrap(), (5, true));
        let flat = SubadditiveSequence::new(vec![2.0; 10]).unwrap();
        assert_eq!(check_cardinality_property(&flat, 10).unwrap(), (10, true));
        assert!(check_cardinality_property(&flat, 11).is_err());
    }

    #[test]
    fn scan_matches_direct_counts() {
        for seed in 0..5 {
            let seq = gen_subadditive(seed, 200, SubadditiveStyle::RandomMin).unwrap();
            let scan = cardinality_scan(&seq);
            let mut worst = (0, 0, 0.0);
            for n in 1..=200 {
                let (count, pass) = check_cardinality_property(&seq, n).unwrap();
                assert!(pass);
                let u = (n as f64 / 2.0) / count as f64;
                if u > worst.2 {
                    worst = (n, count, u);
                }
            }
            assert_eq!((scan.worst_n, scan.worst_count), (worst.0, worst.1));
            assert!(scan.pass);
        }
        // a sequence that is not subadditive can fail the property
        let mut v = vec![1.0; 10];
        v[9] = 100.0;
        let bad = SubadditiveSequence::new(v).unwrap();
        assert!(!cardinality_scan(&bad).pass);
        assert_eq!(check_cardinality_property(&bad, 10).unwrap(), (1, false));
    }

    #[test]
    fn aux_examples() {
        let mut a = vec![0.0; 100];
        a[0] = 1.0;
        let c = check_aux(&a, 100).unwrap();
        let zeta: f64 = (1..=100).map(|k| 1.0 / (k * k) as f64).sum();
        assert!((c.lhs - zeta).abs() < 1e-12);
        assert!((c.lhs - 1.6350).abs() < 1e-4);
        assert!(c.pass && c.rhs == 4.0);
        let z = check_aux(&[0.0; 5], 5).unwrap();
        assert!(z.pass && z.lhs == 0.0);
        assert!(check_aux(&[1.0], 2).is_err());
    }

    #[test]
    fn campaigns_replay_their_worst_case() {
        let sizes = CampaignSizes {
            sequence_len: 256,
            ..CampaignSizes::uniform(20)
        };
        let rows = run_all(&sizes, 7).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert!(r.all_pass(), "{:?}", r.lemma_id);
            let again = replay(r.lemma_id, r.worst_seed.unwrap(), &sizes).unwrap();
            assert_eq!(Some(again.utilization), r.worst_ratio);
        }
        assert!(run_all(&CampaignSizes::uniform(0), 7).unwrap().is_empty());
    }

    #[test]
    fn lemma_ids_round_trip() {
        for l in LemmaId::ALL {
            assert_eq!(LemmaId::parse(l.as_str()), Some(l));
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{}\"", l.as_str()));
        }
    }
}
