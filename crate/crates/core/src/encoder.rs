//! Latency coding: one spike per input neuron, earlier for smaller pixel
//! values, with the instance's dynamic range rescaled onto [0, t_max].

use crate::dataio::Instance;
use crate::error::{Error, Result};
use crate::neuron::DT_MS;

/// One spike time per input neuron for a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpikePattern {
    /// (input neuron index, spike time ms), at most one entry per neuron.
    pub spikes: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    /// Upper end of the latency window (ms).
    pub t_max_ms: f64,
    /// Flip polarity so that high pixel values fire first.
    pub invert: bool,
    /// Simulation grid the spike times are quantized to.
    pub dt_ms: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            t_max_ms: 40.0,
            invert: false,
            dt_ms: DT_MS,
        }
    }
}

/// Latencies before grid quantization: `t_max * (p - min) / (max - min)`,
/// or all zeros for a flat instance.
pub fn latencies(instance: &Instance, config: &EncoderConfig) -> Result<Vec<f64>> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &p in &instance.pixels {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("pixel value {p} outside [0, 1]")));
        }
        min = min.min(p);
        max = max.max(p);
    }
    let span = max - min;
    Ok(instance
        .pixels
        .iter()
        .map(|&p| {
            if span == 0.0 {
                0.0
            } else if config.invert {
                config.t_max_ms * (max - p) / span
            } else {
                config.t_max_ms * (p - min) / span
            }
        })
        .collect())
}

/// Encode one instance: per-pixel latencies quantized to the simulation grid
/// (round half to even), one spike per input neuron.
pub fn encode(instance: &Instance, config: &EncoderConfig) -> Result<InputSpikePattern> {
    let raw = latencies(instance, config)?;
    let spikes = raw
        .iter()
        .enumerate()
        .map(|(i, &t)| (i as u32, (t / config.dt_ms).round_ties_even() * config.dt_ms))
        .collect();
    Ok(InputSpikePattern { spikes })
}
