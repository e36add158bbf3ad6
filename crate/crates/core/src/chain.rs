//! Stationary finite-state chains with a centered observable, and the
//! `L²(π)` geometry they carry.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, DIRECT_SOLVE_MAX_STATES};
use crate::error::{Error, Result};

/// How the supplied observable was brought into `L²₀(π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    /// π-mean of the observable as supplied.
    pub original_mean: f64,
    /// True when `|original_mean|` exceeded the centering tolerance.
    pub recentered: bool,
}

/// The `(Q, π, f)` triple. Immutable once built.
#[derive(Debug, Clone)]
pub struct ChainModel {
    states: Vec<String>,
    kernel: DMatrix<f64>,
    stationary: DVector<f64>,
    observable: DVector<f64>,
    centering: Centering,
    tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainClassification {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// Largest period over communicating classes.
    pub period: usize,
    pub ergodic: bool,
    pub totally_ergodic: bool,
    pub reversible: bool,
    pub normal: bool,
    /// Max detailed-balance violation `|π(x)Q(x,y) − π(y)Q(y,x)|`.
    pub reversibility_defect: f64,
    /// Hilbert–Schmidt norm of `QQ* − Q*Q` on `L²(π)`.
    pub normality_defect: f64,
}

/// Builds a model with default tolerances and index labels.
pub fn build_chain(
    kernel: &[Vec<f64>],
    observable: &[f64],
    stationary: Option<&[f64]>,
) -> Result<ChainModel> {
    ChainBuilder::new(kernel, observable)
        .stationary(stationary)
        .build()
}

pub struct ChainBuilder<'a> {
    kernel: &'a [Vec<f64>],
    observable: &'a [f64],
    stationary: Option<&'a [f64]>,
    states: Option<Vec<String>>,
    tolerances: Tolerances,
}

impl<'a> ChainBuilder<'a> {
    pub fn new(kernel: &'a [Vec<f64>], observable: &'a [f64]) -> Self {
        Self {
            kernel,
            observable,
            stationary: None,
            states: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn stationary(mut self, stationary: Option<&'a [f64]>) -> Self {
        self.stationary = stationary;
        self
    }

    pub fn states(mut self, states: Vec<String>) -> Self {
        self.states = Some(states);
        self
    }

    pub fn tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn build(self) -> Result<ChainModel> {
        let tol = self.tolerances;
        let kernel = validate_kernel(self.kernel, tol.stochastic)?;
        let s = kernel.nrows();
        if self.observable.len() != s {
            return Err(Error::LengthMismatch {
                what: "observable",
                got: self.observable.len(),
                expected: s,
            });
        }
        if self.observable.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observable"));
        }
        let states = match self.states {
            Some(states) if states.len() != s => {
                return Err(Error::LengthMismatch {
                    what: "states",
                    got: states.len(),
                    expected: s,
                })
            }
            Some(states) => states,
            None => (0..s).map(|i| i.to_string()).collect(),
        };

        let stationary = match self.stationary {
            Some(pi) => validate_stationary(&kernel, pi, tol.fixed)?,
            None => compute_stationary(&kernel, tol.fixed)?,
        };

        let f = DVector::from_column_slice(self.observable);
        let mean = stationary.dot(&f);
        let observable = f.add_scalar(-mean);
        Ok(ChainModel {
            states,
            kernel,
            stationary,
            observable,
            centering: Centering {
                original_mean: mean,
                recentered: mean.abs() > tol.mean,
            },
            tolerances: tol,
        })
    }
}

fn validate_kernel(rows: &[Vec<f64>], tol: f64) -> Result<DMatrix<f64>> {
    let s = rows.len();
    if s == 0 {
        return Err(Error::EmptyKernel);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != s {
            return Err(Error::RaggedKernel {
                row: i,
                len: row.len(),
                expected: s,
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonStochasticKernel {
                row: i,
                reason: format!("has non-finite entry at column {j}"),
            });
        }
        if let Some(j) = row.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::NonStochasticKernel {
                row: i,
                reason: format!("has entry {} at column {j} outside [0, 1]", row[j]),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NonStochasticKernel {
                row: i,
                reason: format!("sums to {sum}"),
            });
        }
    }
    Ok(DMatrix::from_fn(s, s, |i, j| rows[i][j]))
}

fn validate_stationary(kernel: &DMatrix<f64>, pi: &[f64], tol: f64) -> Result<DVector<f64>> {
    let s = kernel.nrows();
    if pi.len() != s {
        return Err(Error::LengthMismatch {
            what: "stationary",
            got: pi.len(),
            expected: s,
        });
    }
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("stationary"));
    }
    if let Some(x) = pi.iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidStationary(format!(
            "negative mass {} at state {x}",
            pi[x]
        )));
    }
    let pi = DVector::from_column_slice(pi);
    let total = pi.sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidStationary(format!("sums to {total}")));
    }
    let residual = fixed_point_residual(kernel, &pi);
    if residual > tol {
        return Err(Error::InvalidStationary(format!(
            "not invariant: max |πQ − π| = {residual:e}"
        )));
    }
    if let Some(x) = pi.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroMassState { state: x });
    }
    Ok(pi)
}

fn fixed_point_residual(kernel: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let moved = kernel.tr_mul(pi);
    (moved - pi).amax()
}

pub(crate) fn kernel_graph(kernel: &DMatrix<f64>) -> DiGraph<(), ()> {
    let s = kernel.nrows();
    let mut g = DiGraph::with_capacity(s, s * 2);
    for _ in 0..s {
        g.add_node(());
    }
    for x in 0..s {
        for y in 0..s {
            if kernel[(x, y)] > 0.0 {
                g.add_edge(NodeIndex::new(x), NodeIndex::new(y), ());
            }
        }
    }
    g
}

/// Communicating classes of the kernel, each as a sorted state list, with a
/// flag telling whether the class is closed.
pub(crate) fn communicating_classes(kernel: &DMatrix<f64>) -> Vec<(Vec<usize>, bool)> {
    let g = kernel_graph(kernel);
    let s = kernel.nrows();
    let mut class_of = vec![0usize; s];
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    for (k, c) in classes.iter().enumerate() {
        for &x in c {
            class_of[x] = k;
        }
    }
    classes
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let closed = c
                .iter()
                .all(|&x| (0..s).all(|y| kernel[(x, y)] == 0.0 || class_of[y] == k));
            (c, closed)
        })
        .collect()
}

fn compute_stationary(kernel: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    let classes = communicating_classes(kernel);
    let closed: Vec<&Vec<usize>> = classes.iter().filter(|c| c.1).map(|c| &c.0).collect();
    if closed.len() != 1 {
        return Err(Error::NoUniqueStationaryLaw {
            closed_classes: closed.len(),
        });
    }
    if let Some((transient, _)) = classes.iter().find(|c| !c.1) {
        return Err(Error::ZeroMassState {
            state: transient[0],
        });
    }
    let s = kernel.nrows();
    let pi = if s <= DIRECT_SOLVE_MAX_STATES {
        solve_stationary(kernel)?
    } else {
        power_iteration(kernel, tol)
    };
    let residual = fixed_point_residual(kernel, &pi);
    if residual > tol {
        return Err(Error::InvalidStationary(format!(
            "computed law not invariant: residual {residual:e}"
        )));
    }
    if let Some(x) = pi.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroMassState { state: x });
    }
    Ok(pi)
}

/// Solves `(Qᵀ − I)π = 0` with the last equation replaced by `Σπ = 1`.
fn solve_stationary(kernel: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s = kernel.nrows();
    let mut a = kernel.transpose() - DMatrix::identity(s, s);
    a.row_mut(s - 1).fill(1.0);
    let mut b = DVector::zeros(s);
    b[s - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or(Error::NoUniqueStationaryLaw { closed_classes: 0 })?;
    // clip round-off negatives, then renormalize
    let pi = pi.map(|v| v.max(0.0));
    let total = pi.sum();
    Ok(pi / total)
}

/// Power iteration on the lazy kernel `(I + Q)/2`, which shares π and is aperiodic.
fn power_iteration(kernel: &DMatrix<f64>, tol: f64) -> DVector<f64> {
    let s = kernel.nrows();
    let mut pi = DVector::from_element(s, 1.0 / s as f64);
    for _ in 0..1_000_000 {
        let next = (kernel.tr_mul(&pi) + &pi) * 0.5;
        let change = (&next - &pi).amax();
        pi = next;
        if change < tol * 1e-3 {
            break;
        }
    }
    let total = pi.sum();
    pi / total
}

impl ChainModel {
    pub fn n_states(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    /// The centered observable `f`.
    pub fn observable(&self) -> &DVector<f64> {
        &self.observable
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// `(Qg)(x) = Σ_y Q(x,y) g(y)`.
    pub fn apply(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.kernel * g
    }

    /// `L²(π)` inner product.
    pub fn pi_inner(&self, g: &[f64], h: &[f64]) -> Result<f64> {
        let s = self.n_states();
        for (what, v) in [("g", g), ("h", h)] {
            if v.len() != s {
                return Err(Error::LengthMismatch {
                    what,
                    got: v.len(),
                    expected: s,
                });
            }
        }
        Ok(pi_weighted_dot(&self.stationary, g, h))
    }

    pub fn pi_norm(&self, g: &[f64]) -> Result<f64> {
        self.pi_inner(g, g).map(f64::sqrt)
    }

    /// Inner product on vectors already known to have length `S`.
    pub fn inner(&self, g: &DVector<f64>, h: &DVector<f64>) -> f64 {
        pi_weighted_dot(&self.stationary, g.as_slice(), h.as_slice())
    }

    pub fn norm(&self, g: &DVector<f64>) -> f64 {
        self.inner(g, g).sqrt()
    }

    /// Time-reversed kernel `Q*(x,y) = π(y)Q(y,x)/π(x)`.
    pub fn adjoint(&self) -> DMatrix<f64> {
        let pi = &self.stationary;
        let s = self.n_states();
        DMatrix::from_fn(s, s, |x, y| pi[y] * self.kernel[(y, x)] / pi[x])
    }

    /// The chain driven by the adjoint kernel, with the same π and `f`.
    pub fn reversed(&self) -> ChainModel {
        ChainModel {
            kernel: self.adjoint(),
            ..self.clone()
        }
    }

    pub fn classify(&self) -> ChainClassification {
        let classes = communicating_classes(&self.kernel);
        let irreducible = classes.len() == 1;
        let period = classes
            .iter()
            .map(|(c, _)| class_period(&self.kernel, c))
            .max()
            .unwrap_or(1);
        let aperiodic = period == 1;

        let s = self.n_states();
        let pi = &self.stationary;
        let mut rev_defect = 0.0f64;
        for x in 0..s {
            for y in 0..s {
                let d = (pi[x] * self.kernel[(x, y)] - pi[y] * self.kernel[(y, x)]).abs();
                rev_defect = rev_defect.max(d);
            }
        }

        let adj = self.adjoint();
        let comm = &self.kernel * &adj - &adj * &self.kernel;
        let mut hs = 0.0;
        for x in 0..s {
            for y in 0..s {
                hs += pi[x] * comm[(x, y)].powi(2) / pi[y];
            }
        }
        let normality_defect = hs.sqrt();
        let tol = self.tolerances.normal;
        let reversible = rev_defect <= tol;
        ChainClassification {
            irreducible,
            aperiodic,
            period,
            ergodic: irreducible,
            totally_ergodic: irreducible && aperiodic,
            reversible,
            normal: reversible || normality_defect <= tol,
            reversibility_defect: rev_defect,
            normality_defect,
        }
    }
}

fn pi_weighted_dot(pi: &DVector<f64>, g: &[f64], h: &[f64]) -> f64 {
    pi.iter()
        .zip(g.iter().zip(h))
        .map(|(p, (a, b))| p * a * b)
        .sum()
}

/// Period of a communicating class: gcd of `level(u) + 1 − level(v)` over
/// the class's edges, levels taken from a BFS rooted at its first state.
fn class_period(kernel: &DMatrix<f64>, class: &[usize]) -> usize {
    let s = kernel.nrows();
    let mut in_class = vec![false; s];
    for &x in class {
        in_class[x] = true;
    }
    let mut level = vec![usize::MAX; s];
    let mut queue = std::collections::VecDeque::new();
    level[class[0]] = 0;
    queue.push_back(class[0]);
    while let Some(u) = queue.pop_front() {
        for v in 0..s {
            if in_class[v] && kernel[(u, v)] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for &u in class {
        for v in 0..s {
            if in_class[v] && kernel[(u, v)] > 0.0 {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    // a single state without a self-loop has no cycle; report period 1
    g.max(1)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
