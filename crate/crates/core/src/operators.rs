//! Operator powers applied to the observable, partial-sum operators, and the
//! square-root operator `√(I − Q) = I − Σ δ_n Qⁿ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{communicating_classes, ChainModel};
use crate::diagnostics::{dyadic_slope_verdict, Verdict};
use crate::error::{Error, Result};

/// Sequences `Qᵏf`, `(Q*)ᵏf`, `V_n f` and `V*_n f` for `k, n = 0..=k_max`.
#[derive(Debug, Clone)]
pub struct OperatorTable {
    k_max: usize,
    qk_f: Vec<DVector<f64>>,
    qstar_k_f: Vec<DVector<f64>>,
    vn_f: Vec<DVector<f64>>,
    vnstar_f: Vec<DVector<f64>>,
}

impl OperatorTable {
    /// Iterated matrix–vector products; no matrix power is formed.
    pub fn build(chain: &ChainModel, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        let qk_f = orbit(chain, chain.kernel(), k_max);
        let qstar_k_f = orbit(chain, &chain.adjoint(), k_max);
        Ok(Self {
            k_max,
            vn_f: prefix_sums(&qk_f),
            vnstar_f: prefix_sums(&qstar_k_f),
            qk_f,
            qstar_k_f,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn qk_f(&self) -> &[DVector<f64>] {
        &self.qk_f
    }

    pub fn qstar_k_f(&self) -> &[DVector<f64>] {
        &self.qstar_k_f
    }

    pub fn vn_f(&self) -> &[DVector<f64>] {
        &self.vn_f
    }

    pub fn vnstar_f(&self) -> &[DVector<f64>] {
        &self.vnstar_f
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if n > self.k_max {
            Err(Error::HorizonExceeded {
                requested: n,
                available: self.k_max,
            })
        } else {
            Ok(())
        }
    }
}

fn orbit(chain: &ChainModel, op: &DMatrix<f64>, k_max: usize) -> Vec<DVector<f64>> {
    let pi = chain.stationary();
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(chain.observable().clone());
    let mut next = DVector::zeros(chain.n_states());
    for k in 1..=k_max {
        op.mul_to(&out[k - 1], &mut next);
        // π-mean is invariant and zero; strip the round-off drift along 1
        let drift = pi.dot(&next);
        out.push(next.add_scalar(-drift));
    }
    out
}

fn prefix_sums(seq: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(seq.len());
    for (k, v) in seq.iter().enumerate() {
        if k == 0 {
            out.push(v.clone());
        } else {
            out.push(&out[k - 1] + v);
        }
    }
    out
}

/// Coefficients of `1 − √(1 − x) = Σ δ_n xⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtSeries {
    pub delta: Vec<f64>,
    pub n_trunc: usize,
    pub partial_mass: f64,
}

impl SqrtSeries {
    /// Mass of the coefficients beyond the truncation order.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.partial_mass
    }
}

/// `δ_1 = 1/2`, `δ_{n+1} = δ_n (2n − 1)/(2n + 2)`.
pub fn sqrt_coefficients(n_trunc: usize) -> Result<SqrtSeries> {
    if n_trunc == 0 {
        return Err(Error::InvalidParameter("n_trunc must be at least 1".into()));
    }
    let mut delta = Vec::with_capacity(n_trunc);
    let mut d = 0.5f64;
    for n in 1..=n_trunc {
        delta.push(d);
        d *= (2 * n) as f64 - 1.0;
        d /= (2 * n) as f64 + 2.0;
    }
    // summing smallest-first keeps the mass strictly below one
    let partial_mass = delta.iter().rev().sum();
    Ok(SqrtSeries {
        delta,
        n_trunc,
        partial_mass,
    })
}

#[derive(Debug, Clone)]
pub struct SqrtApplication {
    pub value: DVector<f64>,
    /// `(1 − Σ_{n≤N} δ_n)·‖g‖_π`, bounding the omitted tail of the series.
    pub residual_bound: f64,
}

/// Truncated `√(I − Q) g = g − Σ_{n≤N} δ_n Qⁿ g`.
pub fn apply_sqrt(chain: &ChainModel, g: &DVector<f64>, n_trunc: usize) -> Result<SqrtApplication> {
    apply_sqrt_with(chain.kernel(), chain, g, &sqrt_coefficients(n_trunc)?)
}

/// Same as [`apply_sqrt`] with an explicit operator (use the adjoint for `√(I − Q*)`).
pub fn apply_sqrt_with(
    op: &DMatrix<f64>,
    chain: &ChainModel,
    g: &DVector<f64>,
    series: &SqrtSeries,
) -> Result<SqrtApplication> {
    if g.len() != chain.n_states() {
        return Err(Error::LengthMismatch {
            what: "g",
            got: g.len(),
            expected: chain.n_states(),
        });
    }
    let mut value = g.clone();
    let mut power = g.clone();
    let mut next = DVector::zeros(g.len());
    for &d in &series.delta {
        op.mul_to(&power, &mut next);
        std::mem::swap(&mut power, &mut next);
        value.axpy(-d, &power, 1.0);
    }
    Ok(SqrtApplication {
        value,
        residual_bound: series.tail_mass() * chain.norm(g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Powers of `Q`.
    Q,
    /// Powers of `Q*`.
    QStar,
}

/// Whether `Σ_{k≤n} k^{-1/2} Qᵏ f` settles in `L²(π)`, judged two ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtMembership {
    pub side: Side,
    pub n_max: usize,
    /// `(n, ‖s_n‖_π)` at dyadic `n`.
    pub partial_norms: Vec<(usize, f64)>,
    /// `(n, ‖s_{2n} − s_n‖_π)` at dyadic `n` with `2n ≤ n_max`.
    pub cauchy_increments: Vec<(usize, f64)>,
    /// Log-log slope of the last two octaves of increments.
    pub increment_slope: Option<f64>,
    /// Truncated-series diagnostic.
    pub verdict: Verdict,
    /// Exact answer at finite state count: `f` is in the range of `I − Q`
    /// (hence of `√(I − Q)`) iff it has zero π-mass on every communicating class.
    pub exact_member: bool,
}

pub fn sqrt_range_membership(
    chain: &ChainModel,
    side: Side,
    n_max: usize,
    margin: f64,
) -> Result<SqrtMembership> {
    if n_max < 16 {
        return Err(Error::InvalidParameter(format!(
            "sqrt membership needs n_max >= 16, got {n_max}"
        )));
    }
    let op = match side {
        Side::Q => chain.kernel().clone(),
        Side::QStar => chain.adjoint(),
    };
    let pi = chain.stationary();
    let s = chain.n_states();
    let mut power = chain.observable().clone();
    let mut next = DVector::zeros(s);
    let mut partial = DVector::zeros(s);
    let mut snapshots = vec![(0usize, DVector::zeros(s))];
    for k in 1..=n_max {
        op.mul_to(&power, &mut next);
        let drift = pi.dot(&next);
        next.add_scalar_mut(-drift);
        std::mem::swap(&mut power, &mut next);
        partial.axpy(1.0 / (k as f64).sqrt(), &power, 1.0);
        if k.is_power_of_two() {
            snapshots.push((k, partial.clone()));
        }
    }
    let partial_norms: Vec<(usize, f64)> = snapshots[1..]
        .iter()
        .map(|(n, v)| (*n, chain.norm(v)))
        .collect();
    let cauchy_increments: Vec<(usize, f64)> = snapshots[1..]
        .windows(2)
        .map(|w| (w[0].0, chain.norm(&(&w[1].1 - &w[0].1))))
        .collect();
    let scale = partial_norms.last().map(|p| p.1).unwrap_or(0.0);
    let (increment_slope, verdict) = dyadic_slope_verdict(&cauchy_increments, scale, margin);
    Ok(SqrtMembership {
        side,
        n_max,
        partial_norms,
        cauchy_increments,
        increment_slope,
        verdict,
        exact_member: exact_range_member(chain),
    })
}

/// Communicating classes of `Q` and `Q*` coincide under full-support π, so
/// one answer serves both sides.
fn exact_range_member(chain: &ChainModel) -> bool {
    let f = chain.observable();
    let pi = chain.stationary();
    let scale = chain.norm(f).max(f64::MIN_POSITIVE);
    communicating_classes(chain.kernel()).iter().all(|(class, _)| {
        let mass: f64 = class.iter().map(|&x| pi[x] * f[x]).sum();
        mass.abs() <= 1e-12 * scale
    })
}
