//! Experiment protocol: generate a network, baseline-test it with plasticity
//! off, train its delays on held-out instances, retest on the baseline
//! inputs, and decode both phases through PGP clustering. Sweeps repeat this
//! over independently seeded networks, optionally in parallel.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::{build_split, Instance, RawImage, SplitSpec};
use crate::encoder::{encode, EncoderConfig};
use crate::error::{Error, Result};
use crate::pgp::{self, Pgp, ScoreReport};
use crate::plasticity::PlasticityConfig;
use crate::sim::{run_trial, SpikeRecord, TrialConfig};
use crate::topology::{generate_feedforward, NetworkTopology};
use crate::seeds;

/// Everything that defines one experiment. Defaults follow the reference
/// protocol: three layers of 100, connection probability 0.1, weight 6,
/// integer initial delays in [1, 39] ms, digits 0 and 1 trained with 2
/// unseen, 20 train / 25 test instances per class, thresholds 0.8 and 0.9.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub layer_sizes: Vec<usize>,
    pub connection_probability: f64,
    pub weight: f64,
    pub initial_delay_range: (u32, u32),
    pub plasticity: PlasticityConfig,
    pub trained_classes: Vec<u8>,
    pub unseen_classes: Vec<u8>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub thresholds: Vec<f64>,
    pub trial: TrialConfig,
    pub encoder: EncoderConfig,
    /// 0-based layer indices whose spikes form the PGP readout.
    pub readout_layers: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![100, 100, 100],
            connection_probability: 0.1,
            weight: 6.0,
            initial_delay_range: (1, 39),
            plasticity: PlasticityConfig::default(),
            trained_classes: vec![0, 1],
            unseen_classes: vec![2],
            train_per_class: 20,
            test_per_class: 25,
            thresholds: vec![0.8, 0.9],
            trial: TrialConfig::default(),
            encoder: EncoderConfig::default(),
            readout_layers: vec![1, 2],
            epochs: 1,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::Config("at least one PGP threshold required".into()));
        }
        for &t in &self.thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("PGP threshold {t} outside (0, 1]")));
            }
        }
        if self.test_per_class == 0 {
            return Err(Error::Config("test instances per class must be positive".into()));
        }
        if self.trained_classes.is_empty() {
            return Err(Error::Config("at least one trained class required".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self
            .readout_layers
            .iter()
            .any(|&l| l == 0 || l >= self.layer_sizes.len())
        {
            return Err(Error::Config(
                "readout layers must name non-input layers of the network".into(),
            ));
        }
        if self.layer_sizes.first() != Some(&crate::dataio::GRID_PIXELS) {
            return Err(Error::Config(format!(
                "input layer must have one neuron per pixel of the {}x{} grid",
                crate::dataio::GRID_SIDE,
                crate::dataio::GRID_SIDE
            )));
        }
        if self.encoder.t_max_ms >= self.trial.duration_ms {
            return Err(Error::Config(
                "latency window must fit inside the trial duration".into(),
            ));
        }
        self.plasticity.validate()
    }

    fn split_spec(&self, network_seed: u64) -> SplitSpec {
        SplitSpec {
            trained_classes: self.trained_classes.clone(),
            unseen_classes: self.unseen_classes.clone(),
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            seed: seeds::derive(network_seed, STREAM_SPLIT),
        }
    }
}

const STREAM_TOPOLOGY: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_ORDER: u64 = 3;
const STREAM_NETWORK: u64 = 100;

/// Per-threshold scores of the two test phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub theta: f64,
    pub baseline: ScoreReport,
    pub trained: ScoreReport,
}

/// Result of one network's full protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    pub seed: u64,
    pub per_threshold: Vec<ThresholdReport>,
}

/// One test phase's presented instances and their recorded activity.
#[derive(Debug, Clone)]
pub struct PhaseTrace {
    pub pgps: Vec<Pgp>,
    /// Per presented instance: (source index in the dataset, label).
    pub presented: Vec<(usize, u8)>,
    /// Full spike records, kept only when requested.
    pub records: Option<Vec<SpikeRecord>>,
}

/// Report plus the artifacts needed for inspection and checkpointing.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: NetworkReport,
    pub initial_topology: NetworkTopology,
    pub final_topology: NetworkTopology,
    pub baseline: PhaseTrace,
    pub test: PhaseTrace,
}

fn run_test_phase(
    topology: &mut NetworkTopology,
    instances: &[Instance],
    config: &ExperimentConfig,
    keep_records: bool,
) -> Result<PhaseTrace> {
    let mut pgps = Vec::with_capacity(instances.len());
    let mut presented = Vec::with_capacity(instances.len());
    let mut records = keep_records.then(Vec::new);
    for (trial, inst) in instances.iter().enumerate() {
        let pattern = encode(inst, &config.encoder)?;
        let record = run_trial(topology, &pattern, &config.trial, None)?;
        pgps.push(pgp::extract(
            &record,
            topology,
            &config.readout_layers,
            trial,
            inst.label,
        ));
        presented.push((inst.source_index, inst.label));
        if let Some(r) = records.as_mut() {
            r.push(record);
        }
    }
    Ok(PhaseTrace {
        pgps,
        presented,
        records,
    })
}

/// Run the whole protocol for one network seed.
pub fn run_single(
    config: &ExperimentConfig,
    images: &[RawImage],
    labels: &[u8],
    keep_records: bool,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let seed = config.seed;
    let (train_set, test_set) = build_split(images, labels, &config.split_spec(seed))?;

    let mut topology = generate_feedforward(
        &config.layer_sizes,
        config.connection_probability,
        config.weight,
        config.initial_delay_range,
        seeds::derive(seed, STREAM_TOPOLOGY),
    )?;
    if let Err(v) = topology.validate() {
        return Err(Error::Fault(format!("generated topology invalid: {v}")));
    }
    let initial_topology = topology.clone();

    // Baseline phase: plasticity off.
    let baseline = run_test_phase(&mut topology, &test_set, config, keep_records)?;
    debug_assert_eq!(topology, initial_topology);

    // Training phase: seeded shuffled interleaving of the train instances,
    // plasticity on, delays persisting across trials.
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
            seed,
            STREAM_ORDER + epoch as u64,
        ));
        order.shuffle(&mut rng);
        for &i in &order {
            let pattern = encode(&train_set[i], &config.encoder)?;
            run_trial(&mut topology, &pattern, &config.trial, Some(&config.plasticity))?;
        }
    }

    // Test phase: identical instances and order as the baseline.
    let test = run_test_phase(&mut topology, &test_set, config, keep_records)?;

    let mut per_threshold = Vec::with_capacity(config.thresholds.len());
    for &theta in &config.thresholds {
        let baseline_clusters = pgp::cluster(&baseline.pgps, theta)?;
        let trained_clusters = pgp::cluster(&test.pgps, theta)?;
        per_threshold.push(ThresholdReport {
            theta,
            baseline: pgp::score(
                &baseline_clusters,
                &baseline.pgps,
                theta,
                &config.trained_classes,
                &config.unseen_classes,
            ),
            trained: pgp::score(
                &trained_clusters,
                &test.pgps,
                theta,
                &config.trained_classes,
                &config.unseen_classes,
            ),
        });
    }

    Ok(ExperimentOutcome {
        report: NetworkReport {
            seed,
            per_threshold,
        },
        initial_topology,
        final_topology: topology,
        baseline,
        test,
    })
}

/// Accuracy histogram over [0, 1].
pub const HISTOGRAM_BINS: usize = 20;

fn histogram(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut bins = vec![0usize; HISTOGRAM_BINS];
    for v in values {
        let b = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// Aggregates of one phase across a sweep, per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub mean_trained_accuracy: f64,
    pub mean_unseen_accuracy: f64,
    pub nonseparable_fraction: f64,
    pub unseen_nonseparable_fraction: f64,
    pub trained_accuracy_histogram: Vec<usize>,
    pub unseen_accuracy_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSummary {
    pub theta: f64,
    pub baseline: PhaseSummary,
    pub trained: PhaseSummary,
    /// Networks separable (on the trained classes) in both phases.
    pub separable_both: usize,
    /// Of those, the fraction whose post-training accuracy did not drop.
    pub improved_fraction: f64,
    /// Mean of (post - baseline) accuracy over the separable-both networks.
    pub mean_improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub master_seed: u64,
    pub n_networks: usize,
    pub per_threshold: Vec<ThresholdSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub reports: Vec<NetworkReport>,
    pub summary: SweepSummary,
}

fn phase_summary<'a>(scores: impl Iterator<Item = &'a ScoreReport> + Clone) -> PhaseSummary {
    let n = scores.clone().count().max(1) as f64;
    PhaseSummary {
        mean_trained_accuracy: scores.clone().map(|s| s.trained_accuracy).sum::<f64>() / n,
        mean_unseen_accuracy: scores.clone().map(|s| s.unseen_accuracy).sum::<f64>() / n,
        nonseparable_fraction: scores.clone().filter(|s| !s.trained_separable).count() as f64 / n,
        unseen_nonseparable_fraction: scores.clone().filter(|s| !s.unseen_separable).count() as f64
            / n,
        trained_accuracy_histogram: histogram(scores.clone().map(|s| s.trained_accuracy)),
        unseen_accuracy_histogram: histogram(scores.clone().map(|s| s.unseen_accuracy)),
    }
}

/// Summarize sweep reports. Pure so that the summary is identical however
/// the reports were computed.
pub fn summarize(master_seed: u64, reports: &[NetworkReport]) -> SweepSummary {
    let thresholds: Vec<f64> = reports
        .first()
        .map(|r| r.per_threshold.iter().map(|t| t.theta).collect())
        .unwrap_or_default();
    let per_threshold = thresholds
        .iter()
        .enumerate()
        .map(|(ti, &theta)| {
            let baseline = phase_summary(reports.iter().map(move |r| &r.per_threshold[ti].baseline));
            let trained = phase_summary(reports.iter().map(move |r| &r.per_threshold[ti].trained));
            let both: Vec<(f64, f64)> = reports
                .iter()
                .map(|r| &r.per_threshold[ti])
                .filter(|t| t.baseline.trained_separable && t.trained.trained_separable)
                .map(|t| (t.baseline.trained_accuracy, t.trained.trained_accuracy))
                .collect();
            let separable_both = both.len();
            let improved = both.iter().filter(|(b, t)| t >= b).count();
            ThresholdSummary {
                theta,
                baseline,
                trained,
                separable_both,
                improved_fraction: if separable_both == 0 {
                    0.0
                } else {
                    improved as f64 / separable_both as f64
                },
                mean_improvement: if separable_both == 0 {
                    0.0
                } else {
                    both.iter().map(|(b, t)| t - b).sum::<f64>() / separable_both as f64
                },
            }
        })
        .collect();
    SweepSummary {
        master_seed,
        n_networks: reports.len(),
        per_threshold,
    }
}

/// Run `n_networks` independent experiments. Child seeds derive from the
/// master seed per network index, so the outcome does not depend on `jobs`.
pub fn run_sweep(
    config: &ExperimentConfig,
    images: &[RawImage],
    labels: &[u8],
    n_networks: usize,
    jobs: Option<usize>,
) -> Result<SweepOutcome> {
    if n_networks == 0 {
        return Err(Error::Config("sweep needs at least one network".into()));
    }
    config.validate()?;
    let run_all = || -> Result<Vec<NetworkReport>> {
        (0..n_networks)
            .into_par_iter()
            .map(|i| {
                let child = ExperimentConfig {
                    seed: seeds::derive(config.seed, STREAM_NETWORK + i as u64),
                    ..config.clone()
                };
                run_single(&child, images, labels, false).map(|o| o.report)
            })
            .collect()
    };
    let reports = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Fault(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    }?;
    let summary = summarize(config.seed, &reports);
    Ok(SweepOutcome { reports, summary })
}
