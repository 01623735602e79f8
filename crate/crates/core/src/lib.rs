//! Event-driven spiking network simulator with activity-dependent delay
//! plasticity, latency-coded inputs and polychronous-group-pattern decoding.
//!
//! The pipeline: digit images are downscaled to a 10x10 grid ([`dataio`]),
//! latency-coded into one spike per input neuron ([`encoder`]), and driven
//! through a three-layer feedforward network of regular-spiking neurons
//! ([`neuron`], [`topology`], [`sim`]). During training, each post-synaptic
//! spike pulls the delays of recently arrived pre-synaptic spikes toward
//! their mean arrival time ([`plasticity`]). Output spike sequences are
//! clustered by matching-spike ratio and scored per class ([`pgp`]);
//! [`experiment`] orchestrates the baseline / train / retest protocol and
//! seeded multi-network sweeps.

pub mod dataio;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod neuron;
pub mod pgp;
pub mod plasticity;
pub mod report;
pub mod seeds;
pub mod sim;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
