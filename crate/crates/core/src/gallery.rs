//! Named example chains covering the i.i.d., reversible, normal and generic
//! non-normal classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chain::{build_chain, ChainModel};
use crate::error::{Error, Result};
use crate::spec_file::{ChainSpec, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum GalleryChain {
    /// Every row equals `π(x) ∝ x + 1`; `f(x) = x`, centered.
    Iid { size: usize },
    /// Flip with probability `p`; `f = (1, −1)`.
    TwoState { p: f64 },
    /// `Q(x, x+1) = p`, `Q(x, x−1) = 1 − p` on a ring; circulant, so normal.
    CycleWalk { size: usize, p: f64 },
    /// Up with `p`, down with `1 − p`, holding at the ends; reversible.
    BirthDeath { size: usize, p: f64 },
    /// Uniform random rows and a Gaussian observable.
    RandomDense { size: usize, seed: u64 },
}

impl GalleryChain {
    pub fn name(&self) -> &'static str {
        match self {
            GalleryChain::Iid { .. } => "iid",
            GalleryChain::TwoState { .. } => "two-state",
            GalleryChain::CycleWalk { .. } => "cycle-walk",
            GalleryChain::BirthDeath { .. } => "birth-death",
            GalleryChain::RandomDense { .. } => "random-dense",
        }
    }

    /// Builds from a gallery name and optional parameters, filling defaults.
    pub fn from_name(
        name: &str,
        size: Option<usize>,
        p: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let chain = match name {
            "iid" => GalleryChain::Iid {
                size: size.unwrap_or(3),
            },
            "two-state" => GalleryChain::TwoState {
                p: p.unwrap_or(0.3),
            },
            "cycle-walk" => GalleryChain::CycleWalk {
                size: size.unwrap_or(5),
                p: p.unwrap_or(0.8),
            },
            "birth-death" => GalleryChain::BirthDeath {
                size: size.unwrap_or(4),
                p: p.unwrap_or(0.4),
            },
            "random-dense" => GalleryChain::RandomDense {
                size: size.unwrap_or(6),
                seed: seed.unwrap_or(0),
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown gallery chain '{other}'"
                )))
            }
        };
        chain.validate()?;
        Ok(chain)
    }

    fn validate(&self) -> Result<()> {
        let check_size = |s: usize| {
            if s < 2 {
                Err(Error::InvalidParameter(format!("size must be >= 2, got {s}")))
            } else {
                Ok(())
            }
        };
        let check_p = |p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")))
            }
        };
        match *self {
            GalleryChain::Iid { size } | GalleryChain::RandomDense { size, .. } => check_size(size),
            GalleryChain::TwoState { p } => check_p(p),
            GalleryChain::CycleWalk { size, p } | GalleryChain::BirthDeath { size, p } => {
                check_size(size)?;
                check_p(p)
            }
        }
    }

    fn kernel_and_observable(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match *self {
            GalleryChain::Iid { size } => {
                let total = (size * (size + 1) / 2) as f64;
                let row: Vec<f64> = (0..size).map(|x| (x + 1) as f64 / total).collect();
                (vec![row; size], (0..size).map(|x| x as f64).collect())
            }
            GalleryChain::TwoState { p } => (
                vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
                vec![1.0, -1.0],
            ),
            GalleryChain::CycleWalk { size, p } => {
                let kernel = (0..size)
                    .map(|x| {
                        let mut row = vec![0.0; size];
                        row[(x + 1) % size] += p;
                        row[(x + size - 1) % size] += 1.0 - p;
                        row
                    })
                    .collect();
                let f = (0..size)
                    .map(|x| (2.0 * std::f64::consts::PI * x as f64 / size as f64).cos())
                    .collect();
                (kernel, f)
            }
            GalleryChain::BirthDeath { size, p } => {
                let kernel = (0..size)
                    .map(|x| {
                        let mut row = vec![0.0; size];
                        row[(x + 1).min(size - 1)] += p;
                        row[x.saturating_sub(1)] += 1.0 - p;
                        row
                    })
                    .collect();
                (kernel, (0..size).map(|x| x as f64).collect())
            }
            GalleryChain::RandomDense { size, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let kernel = random_kernel(&mut rng, size, 0.0);
                let f = (0..size).map(|_| rng.sample(StandardNormal)).collect();
                (kernel, f)
            }
        }
    }

    pub fn build(&self) -> Result<ChainModel> {
        self.validate()?;
        let (kernel, f) = self.kernel_and_observable();
        build_chain(&kernel, &f, None)
    }

    /// Chain-spec file contents with the observable already centered.
    pub fn spec(&self) -> Result<ChainSpec> {
        let model = self.build()?;
        let (kernel, _) = self.kernel_and_observable();
        Ok(ChainSpec {
            states: (0..model.n_states())
                .map(|i| StateLabel::Index(i as i64))
                .collect(),
            kernel,
            observable: model.observable().iter().copied().collect(),
            stationary: None,
        })
    }
}

/// The five named chains at their default parameters.
pub fn default_gallery() -> Vec<GalleryChain> {
    ["iid", "two-state", "cycle-walk", "birth-death", "random-dense"]
        .iter()
        .map(|n| GalleryChain::from_name(n, None, None, None).expect("defaults are valid"))
        .collect()
}

/// Random row-stochastic kernel; each off-ring entry is zeroed with
/// probability `zero_fraction`, and the ring `x → x+1` is always kept so the
/// kernel is irreducible.
pub fn random_kernel<R: Rng>(rng: &mut R, size: usize, zero_fraction: f64) -> Vec<Vec<f64>> {
    (0..size)
        .map(|x| {
            let mut row: Vec<f64> = (0..size)
                .map(|y| {
                    let keep = y == (x + 1) % size || rng.random::<f64>() >= zero_fraction;
                    if keep {
                        rng.random::<f64>() + 1e-3
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            row
        })
        .collect()
}

/// Random irreducible chain with a Gaussian observable.
pub fn random_chain<R: Rng>(rng: &mut R, size: usize, zero_fraction: f64) -> Result<ChainModel> {
    let kernel = random_kernel(rng, size, zero_fraction);
    let f: Vec<f64> = (0..size).map(|_| rng.sample(StandardNormal)).collect();
    build_chain(&kernel, &f, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gallery_classes() {
        let k = GalleryChain::CycleWalk { size: 5, p: 0.8 }.build().unwrap().classify();
        assert!(k.normal && !k.reversible);
        let k = GalleryChain::BirthDeath { size: 4, p: 0.4 }.build().unwrap().classify();
        assert!(k.reversible);
        let k = GalleryChain::RandomDense { size: 6, seed: 0 }.build().unwrap().classify();
        assert!(!k.normal && k.totally_ergodic);
        for g in default_gallery() {
            assert!(g.build().unwrap().classify().totally_ergodic, "{}", g.name());
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GalleryChain::from_name("two-state", None, Some(1.0), None).is_err());
        assert!(GalleryChain::from_name("cycle-walk", Some(1), None, None).is_err());
        assert!(GalleryChain::from_name("nope", None, None, None).is_err());
    }

    #[test]
    fn spec_round_trips_to_same_model() {
        let g = GalleryChain::BirthDeath { size: 4, p: 0.4 };
        let spec = g.spec().unwrap();
        let reparsed = ChainSpec::parse(&spec.to_json()).unwrap();
        let a = g.build().unwrap();
        let b = reparsed.build().unwrap();
        assert!((a.stationary() - b.stationary()).amax() < 1e-14);
        assert!((a.observable() - b.observable()).amax() < 1e-14);
        assert!(!b.centering().recentered);
    }

    #[test]
    fn random_kernels_are_irreducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c = random_chain(&mut rng, 7, 0.6).unwrap();
            assert!(c.classify().irreducible);
        }
    }
}
