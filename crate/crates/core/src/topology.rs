//! Feedforward network structure: layers, random inter-layer synapses with
//! homogeneous weights, and per-synapse plastic delays.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hard floor for synaptic delays (ms). Keeps every delivery causal on the
/// simulation grid.
pub const DELAY_FLOOR_MS: f64 = 1.0;

/// Hard ceiling for synaptic delays (ms). Bounds the delivery horizon.
pub const DELAY_CEIL_MS: f64 = 60.0;

/// Directed edge between adjacent layers. `delay` is the plastic quantity;
/// it is integer-valued at initialization and real-valued after training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub pre: u32,
    pub post: u32,
    pub weight: f64,
    pub delay: f64,
}

/// First violated structural invariant found by [`NetworkTopology::validate`].
/// Violations are data about a topology, not execution faults.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewLayers,
    NeuronIndexOutOfRange { synapse: usize },
    NonAdjacentLayers { synapse: usize },
    BackwardEdge { synapse: usize },
    DelayBelowMinimum { synapse: usize, delay: f64 },
    DelayAboveMaximum { synapse: usize, delay: f64 },
    DuplicateEdge { pre: u32, post: u32 },
    HeterogeneousWeights { synapse: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewLayers => write!(f, "fewer than 2 layers"),
            Violation::NeuronIndexOutOfRange { synapse } => {
                write!(f, "synapse {synapse}: neuron index out of range")
            }
            Violation::NonAdjacentLayers { synapse } => {
                write!(f, "synapse {synapse}: non-adjacent layers")
            }
            Violation::BackwardEdge { synapse } => {
                write!(f, "synapse {synapse}: pre not in the earlier layer")
            }
            Violation::DelayBelowMinimum { synapse, delay } => {
                write!(f, "synapse {synapse}: delay below minimum ({delay} ms)")
            }
            Violation::DelayAboveMaximum { synapse, delay } => {
                write!(f, "synapse {synapse}: delay above maximum ({delay} ms)")
            }
            Violation::DuplicateEdge { pre, post } => {
                write!(f, "duplicate edge ({pre}, {post})")
            }
            Violation::HeterogeneousWeights { synapse } => {
                write!(f, "synapse {synapse}: weight differs from the rest")
            }
        }
    }
}

/// Layered feedforward network. Neurons are numbered globally, layer by
/// layer, starting at 0 with the input layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    layer_sizes: Vec<usize>,
    layer_offsets: Vec<usize>,
    pub synapses: Vec<Synapse>,
}

impl NetworkTopology {
    pub fn new(layer_sizes: Vec<usize>, synapses: Vec<Synapse>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "topology needs at least 2 layers, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Config("empty layer".into()));
        }
        let mut layer_offsets = Vec::with_capacity(layer_sizes.len());
        let mut acc = 0usize;
        for &n in &layer_sizes {
            layer_offsets.push(acc);
            acc += n;
        }
        Ok(Self {
            layer_sizes,
            layer_offsets,
            synapses,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn num_neurons(&self) -> usize {
        self.layer_offsets.last().unwrap() + self.layer_sizes.last().unwrap()
    }

    /// Global index range of layer `k`.
    pub fn layer_range(&self, k: usize) -> std::ops::Range<u32> {
        let start = self.layer_offsets[k] as u32;
        start..start + self.layer_sizes[k] as u32
    }

    /// Layer containing global neuron index `n`.
    pub fn layer_of(&self, n: u32) -> Option<usize> {
        if (n as usize) >= self.num_neurons() {
            return None;
        }
        Some(
            self.layer_offsets
                .partition_point(|&off| off <= n as usize)
                - 1,
        )
    }

    pub fn is_input(&self, n: u32) -> bool {
        (n as usize) < self.layer_sizes[0]
    }

    /// Check all structural invariants; returns the first violation found.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.layer_sizes.len() < 2 {
            return Err(Violation::TooFewLayers);
        }
        let weight = self.synapses.first().map(|s| s.weight);
        let mut seen = std::collections::HashSet::with_capacity(self.synapses.len());
        for (i, s) in self.synapses.iter().enumerate() {
            let (pre_layer, post_layer) = match (self.layer_of(s.pre), self.layer_of(s.post)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Violation::NeuronIndexOutOfRange { synapse: i }),
            };
            if post_layer < pre_layer {
                return Err(Violation::BackwardEdge { synapse: i });
            }
            if post_layer != pre_layer + 1 {
                return Err(Violation::NonAdjacentLayers { synapse: i });
            }
            if s.delay < DELAY_FLOOR_MS {
                return Err(Violation::DelayBelowMinimum {
                    synapse: i,
                    delay: s.delay,
                });
            }
            if s.delay > DELAY_CEIL_MS {
                return Err(Violation::DelayAboveMaximum {
                    synapse: i,
                    delay: s.delay,
                });
            }
            if !seen.insert((s.pre, s.post)) {
                return Err(Violation::DuplicateEdge {
                    pre: s.pre,
                    post: s.post,
                });
            }
            if s.weight != weight.unwrap() {
                return Err(Violation::HeterogeneousWeights { synapse: i });
            }
        }
        Ok(())
    }

    /// Serialize to the line-oriented checkpoint format.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "layers:")?;
        for n in &self.layer_sizes {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
        for s in &self.synapses {
            writeln!(w, "{} {} {} {:.6}", s.pre, s.post, s.weight, s.delay)?;
        }
        writeln!(w, "schema: polychron-topology-v1")
    }

    /// Parse the checkpoint format written by [`Self::write_text`]. A trailing
    /// `schema:` line is accepted but not required.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("topology file is empty".into()))?
            .map_err(|e| Error::Data(format!("topology read: {e}")))?;
        let sizes_str = header
            .strip_prefix("layers:")
            .ok_or_else(|| Error::Data("topology header must start with 'layers:'".into()))?;
        let layer_sizes: Vec<usize> = sizes_str
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad layer size '{t}'")))
            })
            .collect::<Result<_>>()?;

        let mut synapses = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Data(format!("topology read: {e}")))?;
            if line.is_empty() || line.starts_with("schema:") {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = |name: &str| {
                it.next().ok_or_else(|| {
                    Error::Data(format!("topology line {}: missing {name}", lineno + 2))
                })
            };
            let pre = next("pre")?
                .parse::<u32>()
                .map_err(|_| Error::Data(format!("topology line {}: bad pre", lineno + 2)))?;
            let post = next("post")?
                .parse::<u32>()
                .map_err(|_| Error::Data(format!("topology line {}: bad post", lineno + 2)))?;
            let weight = next("weight")?
                .parse::<f64>()
                .map_err(|_| Error::Data(format!("topology line {}: bad weight", lineno + 2)))?;
            let delay = next("delay")?
                .parse::<f64>()
                .map_err(|_| Error::Data(format!("topology line {}: bad delay", lineno + 2)))?;
            synapses.push(Synapse {
                pre,
                post,
                weight,
                delay,
            });
        }
        Self::new(layer_sizes, synapses)
    }
}

/// Generate a random feedforward topology. Each ordered pair of neurons in
/// adjacent layers becomes a synapse independently with
/// `connection_probability`; each synapse gets an independent uniform integer
/// delay from `delay_range` (inclusive, in ms). The same seed always yields
/// the same topology.
pub fn generate_feedforward(
    layer_sizes: &[usize],
    connection_probability: f64,
    weight: f64,
    delay_range: (u32, u32),
    seed: u64,
) -> Result<NetworkTopology> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "topology needs at least 2 layers, got {}",
            layer_sizes.len()
        )));
    }
    if !(0.0..=1.0).contains(&connection_probability) {
        return Err(Error::Config(format!(
            "connection probability {connection_probability} outside [0, 1]"
        )));
    }
    let (dmin, dmax) = delay_range;
    if dmin > dmax || dmin == 0 {
        return Err(Error::Config(format!(
            "bad initial delay range [{dmin}, {dmax}]"
        )));
    }

    let topo = NetworkTopology::new(layer_sizes.to_vec(), Vec::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synapses = Vec::new();
    for k in 0..layer_sizes.len() - 1 {
        for pre in topo.layer_range(k) {
            for post in topo.layer_range(k + 1) {
                if rng.random::<f64>() < connection_probability {
                    let delay = rng.random_range(dmin..=dmax) as f64;
                    synapses.push(Synapse {
                        pre,
                        post,
                        weight,
                        delay,
                    });
                }
            }
        }
    }
    NetworkTopology::new(layer_sizes.to_vec(), synapses)
}
