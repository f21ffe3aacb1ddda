//! Monte Carlo collectors.
//!
//! Every trial owns a ChaCha8 stream: the generator is seeded from the run
//! seed and switched to stream number `trial_index`. A trial's draws are
//! therefore fixed by `(seed, trial_index)` alone, and samples come out the
//! same whether trials run serially or on any number of rayon workers.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::album::AlbumSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    spec: AlbumSpec,
    trials: u64,
    seed: u64,
    t_cap: u64,
}

impl SimulationConfig {
    /// `t_cap = None` selects [`default_t_cap`].
    pub fn new(spec: AlbumSpec, trials: u64, seed: u64, t_cap: Option<u64>) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidSimulation(
                "at least one trial is required".into(),
            ));
        }
        let t_cap = t_cap.unwrap_or_else(|| default_t_cap(spec.n()));
        if t_cap < spec.n() as u64 {
            return Err(Error::InvalidSimulation(format!(
                "t_cap = {t_cap} is below the album size {}",
                spec.n()
            )));
        }
        Ok(Self {
            spec,
            trials,
            seed,
            t_cap,
        })
    }

    pub fn spec(&self) -> &AlbumSpec {
        &self.spec
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t_cap(&self) -> u64 {
        self.t_cap
    }
}

/// Runaway guard of `50 n ln n` purchases, never below `n`.
pub fn default_t_cap(n: usize) -> u64 {
    let nf = n as f64;
    ((50.0 * nf * nf.ln()).ceil() as u64).max(n as u64)
}

/// Result of one simulated collector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialOutcome {
    /// Album completed after this many purchases.
    Completed(u64),
    /// Still incomplete when the purchase cap was hit.
    Censored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub t_cap: u64,
    /// Completion times of the completed trials, in trial-index order.
    pub samples: Vec<u64>,
    /// Indices of trials that hit `t_cap` without completing.
    pub censored: Vec<u64>,
    /// Statistics over `samples`; `None` when every trial was censored.
    pub summary: Option<Summary>,
}

impl SimulationReport {
    /// Fraction of all trials whose completion time exceeds `t`.
    ///
    /// Censored trials count as exceeding `t`, which is exact for
    /// `t < t_cap`.
    pub fn empirical_tail(&self, t: u64) -> f64 {
        let above = self.samples.iter().filter(|&&s| s > t).count() + self.censored.len();
        above as f64 / self.trials as f64
    }

    pub fn tail_table(&self, queries: &[u64]) -> Vec<(u64, f64)> {
        queries
            .iter()
            .map(|&t| (t, self.empirical_tail(t)))
            .collect()
    }

    /// Standard error of the sample mean.
    pub fn standard_error(&self) -> Option<f64> {
        let s = self.summary.as_ref()?;
        Some(s.std_dev / (self.samples.len() as f64).sqrt())
    }
}

fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws stickers until the album is complete or `t_cap` is reached,
/// reporting each purchase as `(state before the purchase, advanced)`.
fn play<F: FnMut(usize, bool)>(
    config: &SimulationConfig,
    trial_index: u64,
    seen: &mut [bool],
    mut observe: F,
) -> TrialOutcome {
    let n = config.spec.n();
    seen.iter_mut().for_each(|s| *s = false);
    let mut rng = trial_rng(config.seed, trial_index);
    let sticker = Uniform::new(0, n).expect("album has at least one sticker");
    let mut collected = 0usize;
    let mut draws = 0u64;
    while collected < n {
        if draws == config.t_cap {
            return TrialOutcome::Censored;
        }
        let k = sticker.sample(&mut rng);
        draws += 1;
        let new = !seen[k];
        observe(collected, new);
        if new {
            seen[k] = true;
            collected += 1;
        }
    }
    TrialOutcome::Completed(draws)
}

/// Outcome of the trial with the given index, computed on its own.
pub fn simulate_trial(config: &SimulationConfig, trial_index: u64) -> TrialOutcome {
    let mut seen = vec![false; config.spec.n()];
    play(config, trial_index, &mut seen, |_, _| {})
}

fn summarize(samples: &[u64]) -> Option<Summary> {
    let (&min, &max) = (samples.iter().min()?, samples.iter().max()?);
    let count = samples.len() as f64;
    let total: u128 = samples.iter().map(|&s| s as u128).sum();
    let mean = total as f64 / count;
    let std_dev = if samples.len() > 1 {
        let ss: f64 = samples.iter().map(|&s| (s as f64 - mean).powi(2)).sum();
        (ss / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(Summary {
        mean,
        std_dev,
        min,
        max,
    })
}

fn assemble(config: &SimulationConfig, outcomes: Vec<TrialOutcome>) -> SimulationReport {
    let mut samples = Vec::with_capacity(outcomes.len());
    let mut censored = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            TrialOutcome::Completed(t) => samples.push(t),
            TrialOutcome::Censored => censored.push(i as u64),
        }
    }
    let summary = summarize(&samples);
    SimulationReport {
        n: config.spec.n(),
        trials: config.trials,
        seed: config.seed,
        t_cap: config.t_cap,
        samples,
        censored,
        summary,
    }
}

/// Runs all trials on the current rayon pool.
pub fn run_simulation(config: &SimulationConfig) -> SimulationReport {
    let n = config.spec.n();
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |seen, i| play(config, i, seen, |_, _| {}),
        )
        .collect();
    assemble(config, outcomes)
}

/// Same trials as [`run_simulation`], one after another on this thread.
pub fn run_simulation_serial(config: &SimulationConfig) -> SimulationReport {
    let mut seen = vec![false; config.spec.n()];
    let outcomes = (0..config.trials)
        .map(|i| play(config, i, &mut seen, |_, _| {}))
        .collect();
    assemble(config, outcomes)
}

/// Per-state counts of purchases made and of purchases that yielded a new
/// sticker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionTable {
    pub n: usize,
    pub visits: Vec<u64>,
    pub advances: Vec<u64>,
}

impl TransitionTable {
    fn empty(n: usize) -> Self {
        Self {
            n,
            visits: vec![0; n + 1],
            advances: vec![0; n + 1],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        for (a, b) in self.advances.iter_mut().zip(&other.advances) {
            *a += b;
        }
        self
    }

    /// Observed fraction of purchases from state `i` that advanced.
    pub fn advance_frequency(&self, i: usize) -> Option<f64> {
        let v = *self.visits.get(i)?;
        (v > 0).then(|| self.advances[i] as f64 / v as f64)
    }

    /// Model advance probability `(n - i)/n`.
    pub fn expected_advance(&self, i: usize) -> f64 {
        (self.n - i) as f64 / self.n as f64
    }

    /// `(observed - expected) / binomial standard error`. Zero when the
    /// model probability is degenerate (0 or 1) and the observation agrees.
    pub fn z_score(&self, i: usize) -> Option<f64> {
        let freq = self.advance_frequency(i)?;
        let p = self.expected_advance(i);
        let se = (p * (1.0 - p) / self.visits[i] as f64).sqrt();
        let diff = freq - p;
        Some(if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        })
    }

    pub fn total_draws(&self) -> u64 {
        self.visits.iter().sum()
    }
}

/// Tallies stay-versus-advance decisions from every simulated purchase.
pub fn empirical_transition_check(config: &SimulationConfig) -> TransitionTable {
    let n = config.spec.n();
    (0..config.trials)
        .into_par_iter()
        .fold(
            || (TransitionTable::empty(n), vec![false; n]),
            |(mut table, mut seen), i| {
                play(config, i, &mut seen, |state, advanced| {
                    table.visits[state] += 1;
                    if advanced {
                        table.advances[state] += 1;
                    }
                });
                (table, seen)
            },
        )
        .map(|(table, _)| table)
        .reduce(|| TransitionTable::empty(n), TransitionTable::merge)
}
