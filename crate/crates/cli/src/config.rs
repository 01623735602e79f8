//! Flat `key = value` experiment configuration files. Keys mirror the
//! experiment's parameter names; CLI flags override file values.

use std::path::Path;

use polychron_core::experiment::ExperimentConfig;
use polychron_core::{Error, Result};

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(key, t))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("bad value '{other}' for {key}"))),
    }
}

/// Layer shape under construction. The input layer is always the 10x10
/// pixel grid; `layer_size` configures the other layers.
#[derive(Default)]
struct Shape {
    layer_size: Option<usize>,
    num_layers: Option<usize>,
}

impl Shape {
    fn finish(&self, config: &mut ExperimentConfig) -> Result<()> {
        let n = self.num_layers.unwrap_or(config.layer_sizes.len());
        if n < 2 {
            return Err(Error::Config("num_layers must be at least 2".into()));
        }
        let size = self.layer_size.unwrap_or(config.layer_sizes[1]);
        config.layer_sizes = std::iter::once(polychron_core::dataio::GRID_PIXELS)
            .chain(std::iter::repeat_n(size, n - 1))
            .collect();
        Ok(())
    }
}

/// Apply one `key = value` assignment to the config.
fn apply(config: &mut ExperimentConfig, shape: &mut Shape, key: &str, value: &str) -> Result<()> {
    match key {
        "layer_size" => shape.layer_size = Some(parse(key, value)?),
        "num_layers" => shape.num_layers = Some(parse(key, value)?),
        "connection_probability" => config.connection_probability = parse(key, value)?,
        "weight" => config.weight = parse(key, value)?,
        "delay_init_min" => config.initial_delay_range.0 = parse(key, value)?,
        "delay_init_max" => config.initial_delay_range.1 = parse(key, value)?,
        "delay_min" => config.plasticity.delay_min_ms = parse(key, value)?,
        "delay_max" => config.plasticity.delay_max_ms = parse(key, value)?,
        "plasticity_window" => config.plasticity.window_ms = parse(key, value)?,
        "plasticity_amplitude" => config.plasticity.amplitude_ms = parse(key, value)?,
        "plasticity_slope" => config.plasticity.slope_ms = parse(key, value)?,
        "digits_trained" => config.trained_classes = parse_list(key, value)?,
        "digits_unseen" => config.unseen_classes = parse_list(key, value)?,
        "train_instances" => config.train_per_class = parse(key, value)?,
        "test_instances" => config.test_per_class = parse(key, value)?,
        "pgp_thresholds" => config.thresholds = parse_list(key, value)?,
        "latency_max" => config.encoder.t_max_ms = parse(key, value)?,
        "invert_input" => config.encoder.invert = parse_bool(key, value)?,
        "trial_duration" => config.trial.duration_ms = parse(key, value)?,
        "dt" => {
            let dt: f64 = parse(key, value)?;
            config.trial.dt_ms = dt;
            config.encoder.dt_ms = dt;
        }
        "epochs" => config.epochs = parse(key, value)?,
        "readout_layers" => {
            // 1-based in the file (the input layer is layer 1).
            let layers: Vec<usize> = parse_list(key, value)?;
            if layers.contains(&0) {
                return Err(Error::Config("readout_layers are 1-based".into()));
            }
            config.readout_layers = layers.into_iter().map(|l| l - 1).collect();
        }
        "seed" => config.seed = parse(key, value)?,
        other => return Err(Error::Config(format!("unknown config key '{other}'"))),
    }
    Ok(())
}

/// Parse a config file into an [`ExperimentConfig`], starting from defaults.
/// Lines are `key = value`; blank lines and `#` comments are ignored.
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut shape = Shape::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {}: expected 'key = value', got '{raw}'",
                lineno + 1
            )));
        };
        apply(&mut config, &mut shape, key.trim(), value)?;
    }
    shape.finish(&mut config)?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_protocol() {
        let c = parse_config_text("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.layer_sizes, vec![100, 100, 100]);
        assert_eq!(c.thresholds, vec![0.8, 0.9]);
    }

    #[test]
    fn full_table_parses() {
        let text = "\
# reference parameters
layer_size = 50
num_layers = 4
connection_probability = 0.2
weight = 5.5
delay_init_min = 2
delay_init_max = 20
delay_min = 0.5  # trailing comment
delay_max = 50
plasticity_window = 12
plasticity_amplitude = 2.5
plasticity_slope = 2.0
digits_trained = 3,4
digits_unseen = 5,6
train_instances = 10
test_instances = 15
pgp_thresholds = 0.7
latency_max = 30
invert_input = yes
trial_duration = 150
dt = 0.25
epochs = 2
readout_layers = 3,4
seed = 99
";
        let c = parse_config_text(text).unwrap();
        assert_eq!(c.layer_sizes, vec![100, 50, 50, 50]);
        assert_eq!(c.connection_probability, 0.2);
        assert_eq!(c.initial_delay_range, (2, 20));
        assert_eq!(c.plasticity.delay_min_ms, 0.5);
        assert_eq!(c.trained_classes, vec![3, 4]);
        assert_eq!(c.unseen_classes, vec![5, 6]);
        assert_eq!(c.thresholds, vec![0.7]);
        assert!(c.encoder.invert);
        assert_eq!(c.encoder.dt_ms, 0.25);
        assert_eq!(c.trial.dt_ms, 0.25);
        assert_eq!(c.readout_layers, vec![2, 3]);
        assert_eq!(c.epochs, 2);
        assert_eq!(c.seed, 99);
    }

    #[test]
    fn order_of_size_and_layers_does_not_matter() {
        let a = parse_config_text("layer_size = 60\nnum_layers = 4\n").unwrap();
        let b = parse_config_text("num_layers = 4\nlayer_size = 60\n").unwrap();
        assert_eq!(a.layer_sizes, vec![100, 60, 60, 60]);
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(parse_config_text("wat = 1\n").is_err());
        assert!(parse_config_text("weight six\n").is_err());
        assert!(parse_config_text("weight = six\n").is_err());
        assert!(parse_config_text("readout_layers = 0,1\n").is_err());
        assert!(parse_config_text("invert_input = maybe\n").is_err());
    }
}
