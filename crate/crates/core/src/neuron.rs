//! Izhikevich two-variable neuron dynamics.
//!
//! Forward Euler at a fixed step, v updated before u, hard reset on the
//! 30 mV threshold. Spikes are timestamped at the end of the step in which
//! the threshold was crossed.

use crate::error::{Error, Result};

/// Fixed simulation step in milliseconds.
pub const DT_MS: f64 = 0.5;

/// Firing threshold in millivolts.
pub const SPIKE_THRESHOLD_MV: f64 = 30.0;

/// Parameters of the two-variable quadratic integrate-and-reset model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IzhikevichParams {
    /// Recovery time scale (1/ms).
    pub a: f64,
    /// Recovery sensitivity to v.
    pub b: f64,
    /// Post-spike reset potential (mV).
    pub c: f64,
    /// Post-spike recovery increment.
    pub d: f64,
}

impl IzhikevichParams {
    /// Regular-spiking preset (cortical excitatory cell).
    pub const fn regular_spiking() -> Self {
        Self {
            a: 0.02,
            b: 0.2,
            c: -65.0,
            d: 8.0,
        }
    }
}

impl Default for IzhikevichParams {
    fn default() -> Self {
        Self::regular_spiking()
    }
}

/// Membrane potential and recovery variable of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Recovery variable.
    pub u: f64,
}

/// Resting state: v at the reset potential, u at its nullcline value b·v.
pub fn rest_state(params: &IzhikevichParams) -> NeuronState {
    NeuronState {
        v: params.c,
        u: params.b * params.c,
    }
}

/// Advance one neuron by `dt` under drive `input_current`.
///
/// Returns the new state and whether the neuron fired this step. On a fire
/// the returned state is already reset (v = c, u = u + d).
pub fn step(
    state: NeuronState,
    params: &IzhikevichParams,
    input_current: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    if !state.v.is_finite() || !state.u.is_finite() || !input_current.is_finite() {
        return Err(Error::Fault(format!(
            "non-finite neuron input: v={} u={} i={}",
            state.v, state.u, input_current
        )));
    }

    let v = state.v + dt * (0.04 * state.v * state.v + 5.0 * state.v + 140.0 - state.u + input_current);
    let u = state.u + dt * params.a * (params.b * v - state.u);

    if !v.is_finite() || !u.is_finite() {
        return Err(Error::Fault(format!("neuron state diverged: v={v} u={u}")));
    }

    if v >= SPIKE_THRESHOLD_MV {
        Ok((
            NeuronState {
                v: params.c,
                u: u + params.d,
            },
            true,
        ))
    } else {
        Ok((NeuronState { v, u }, false))
    }
}
