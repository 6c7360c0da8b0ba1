//! Trial orchestration and failure-rate estimation.
//!
//! A trial draws everything from its own stream `trial_rng(seed, i)`, in the order: losses,
//! then (if the losses do not percolate) circuit faults and readout, or phenomenological flips.
//! Percolation-only estimates read the same loss bits, so on shared seeds they agree exactly
//! with the percolation failures of full trials.

use rayon::prelude::*;

use crate::decoder::{decode, DecoderOptions, WeightMode};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::loss_recovery::{build_test_surfaces, SuperCheckPartition};
use crate::noise::{
    measure, sample_circuit_noise, sample_flips, sample_losses, CircuitLayout, GateSchedule,
    LossSet, NoiseMode, NoiseParams, OutcomeGrid,
};
use crate::rng::{point_seed, trial_rng};

/// Decoder switches that do not depend on the noise rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderSettings {
    pub degeneracy: bool,
    pub weight_mode: WeightMode,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        DecoderSettings {
            degeneracy: true,
            weight_mode: WeightMode::LogLikelihood,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub size: usize,
    pub noise: NoiseParams,
    pub trials: u64,
    /// Seed of this grid point; trial `i` uses stream `i` of it.
    pub seed: u64,
    pub decoder: DecoderSettings,
    pub schedule: GateSchedule,
}

impl TrialConfig {
    /// Config for one grid point of a sweep, with the point seed derived from `base_seed`.
    pub fn for_point(base_seed: u64, size: usize, noise: NoiseParams, trials: u64) -> Self {
        TrialConfig {
            size,
            noise,
            trials,
            seed: point_seed(base_seed, size, noise.p_loss, noise.p_comp()),
            decoder: DecoderSettings::default(),
            schedule: GateSchedule::standard(),
        }
    }

    pub fn with_decoder(mut self, decoder: DecoderSettings) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Lattice::new(self.size)?;
        self.noise.validate()?;
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        Ok(())
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions::new(self.noise.effective_flip_probability())
            .with_degeneracy(self.decoder.degeneracy)
            .with_weight_mode(self.decoder.weight_mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    FailureHomology,
    FailurePercolation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    pub outcome: Outcome,
    pub syndrome_size: usize,
    pub lost: usize,
    pub components: usize,
    pub homology: [bool; 3],
    pub wraps: [bool; 3],
}

/// Sampled data of one trial. `grid` is `None` when the losses percolate.
#[derive(Debug, Clone)]
pub struct TrialSample {
    pub losses: LossSet,
    pub partition: SuperCheckPartition,
    pub grid: Option<OutcomeGrid>,
}

/// A trial config together with the lattice and gate layout it needs.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: TrialConfig,
    lattice: Lattice,
    layout: Option<CircuitLayout>,
    options: DecoderOptions,
}

impl Simulator {
    pub fn new(config: TrialConfig) -> Result<Self> {
        config.validate()?;
        let lattice = Lattice::new(config.size)?;
        let layout = (config.noise.mode == NoiseMode::Circuit)
            .then(|| CircuitLayout::new(lattice, config.schedule));
        Ok(Simulator {
            options: config.decoder_options(),
            config,
            lattice,
            layout,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Losses, partition and (when not percolating) the outcome grid of trial `index`.
    pub fn sample(&self, index: u64) -> TrialSample {
        let mut rng = trial_rng(self.config.seed, index);
        let losses = sample_losses(&self.lattice, self.config.noise.p_loss, &mut rng);
        let partition = SuperCheckPartition::build(&self.lattice, &losses);
        if partition.percolates() {
            return TrialSample {
                losses,
                partition,
                grid: None,
            };
        }
        let grid = match &self.layout {
            Some(layout) => {
                let frame = sample_circuit_noise(layout, &self.config.noise, &losses, &mut rng)
                    .expect("layout exists only in circuit mode");
                measure(&self.lattice, &self.config.noise, &frame, &losses, &mut rng)
            }
            None => sample_flips(&self.lattice, self.config.noise.p_flip, losses.clone(), &mut rng),
        };
        TrialSample {
            losses,
            partition,
            grid: Some(grid),
        }
    }

    pub fn run_trial(&self, index: u64) -> TrialResult {
        let TrialSample {
            losses,
            partition,
            grid,
        } = self.sample(index);
        let mut result = TrialResult {
            outcome: Outcome::FailurePercolation,
            syndrome_size: 0,
            lost: losses.len(),
            components: partition.n_components(),
            homology: [false; 3],
            wraps: partition.wraps(),
        };
        let Some(grid) = grid else {
            return result;
        };
        let Some(surfaces) = build_test_surfaces(&self.lattice, &partition, &losses) else {
            return result;
        };
        let d = decode(&self.lattice, &partition, &grid, &surfaces, &self.options);
        result.outcome = if d.is_success() {
            Outcome::Success
        } else {
            Outcome::FailureHomology
        };
        result.syndrome_size = d.syndrome.len();
        result.homology = d.homology;
        result
    }

    pub fn run_batch(&self) -> BatchResult {
        let tallies = (0..self.config.trials)
            .into_par_iter()
            .map(|i| Tallies::from_outcome(self.run_trial(i).outcome))
            .reduce(Tallies::default, Tallies::merge);
        BatchResult::new(tallies)
    }
}

pub fn run_trial(config: &TrialConfig, index: u64) -> Result<TrialResult> {
    Ok(Simulator::new(*config)?.run_trial(index))
}

pub fn run_batch(config: &TrialConfig) -> Result<BatchResult> {
    Ok(Simulator::new(*config)?.run_batch())
}

/// Run a batch on a dedicated pool of `workers` threads.
pub fn run_batch_with_workers(config: &TrialConfig, workers: usize) -> Result<BatchResult> {
    let sim = Simulator::new(*config)?;
    Ok(with_pool(workers, || sim.run_batch()))
}

pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Outcome counts; merging is commutative and associative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Tallies {
    pub trials: u64,
    pub failures_percolation: u64,
    pub failures_homology: u64,
}

impl Tallies {
    pub fn from_outcome(outcome: Outcome) -> Self {
        Tallies {
            trials: 1,
            failures_percolation: (outcome == Outcome::FailurePercolation) as u64,
            failures_homology: (outcome == Outcome::FailureHomology) as u64,
        }
    }

    pub fn merge(self, other: Tallies) -> Tallies {
        Tallies {
            trials: self.trials + other.trials,
            failures_percolation: self.failures_percolation + other.failures_percolation,
            failures_homology: self.failures_homology + other.failures_homology,
        }
    }

    pub fn failures(&self) -> u64 {
        self.failures_percolation + self.failures_homology
    }
}

/// Binomial rate with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureEstimate {
    pub p_fail: f64,
    /// Half-width of the Wilson interval divided by `z`.
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
}

impl FailureEstimate {
    pub const Z: f64 = 1.96;

    pub fn wilson(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Self::Z * Self::Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Self::Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        let lower = (center - half).max(0.0).min(p);
        let upper = (center + half).min(1.0).max(p);
        FailureEstimate {
            p_fail: p,
            stderr: (upper - lower) / (2.0 * Self::Z),
            lower,
            upper,
            trials,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchResult {
    pub tallies: Tallies,
    pub estimate: FailureEstimate,
}

impl BatchResult {
    pub fn new(tallies: Tallies) -> Self {
        BatchResult {
            estimate: FailureEstimate::wilson(tallies.failures(), tallies.trials),
            tallies,
        }
    }
}

/// Wrapping-probability estimate for loss percolation alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercolationEstimate {
    pub size: usize,
    pub p_loss: f64,
    pub wrapping: u64,
    pub seed: u64,
    pub estimate: FailureEstimate,
}

/// Fraction of `trials` loss samples that percolate along some axis, using the streams of
/// grid point `(size, p_loss, p_comp = 0)`.
pub fn estimate_percolation(
    size: usize,
    p_loss: f64,
    trials: u64,
    base_seed: u64,
) -> Result<PercolationEstimate> {
    let lattice = Lattice::new(size)?;
    if !(0.0..=1.0).contains(&p_loss) {
        return Err(Error::InvalidProbability {
            name: "p_loss",
            value: p_loss,
        });
    }
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let seed = point_seed(base_seed, size, p_loss, 0.0);
    let wrapping = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let losses = sample_losses(&lattice, p_loss, &mut rng);
            SuperCheckPartition::build(&lattice, &losses).percolates() as u64
        })
        .sum();
    Ok(PercolationEstimate {
        size,
        p_loss,
        wrapping,
        seed,
        estimate: FailureEstimate::wilson(wrapping, trials),
    })
}
