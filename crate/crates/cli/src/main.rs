//! Command-line surface: single experiments, seeded sweeps, raster dumps,
//! latency-coding previews and synthetic dataset generation.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
//! fault — each with a one-line diagnostic on stderr.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use polychron_core::dataio::{self, Instance, RawImage};
use polychron_core::encoder;
use polychron_core::experiment::{run_single, run_sweep, ExperimentConfig, PhaseTrace};
use polychron_core::report;
use polychron_core::synth;
use polychron_core::{Error, Result};

/// Environment variable naming the dataset directory; `--data-dir` overrides.
const DATA_DIR_ENV: &str = "POLYCHRON_DATA_DIR";

const RASTER_SCHEMA: &str = "schema: polychron-raster-v1";
const PREVIEW_SCHEMA: &str = "schema: polychron-latency-v1";

#[derive(Parser)]
#[command(name = "polychron", version, about = "Delay-plasticity spiking network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment (baseline test, train, retest) and write its
    /// report and final delay snapshot.
    Run(RunArgs),
    /// Run a multi-network sweep and write per-network reports, a summary
    /// and accuracy histograms.
    Sweep(SweepArgs),
    /// Re-run one experiment and dump spike rasters of a test phase.
    Raster(RasterArgs),
    /// Print the latency code of one instance as `neuron_index time_ms`.
    EncodePreview(PreviewArgs),
    /// Generate a synthetic digit dataset in IDX format.
    SynthData(SynthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (`key = value` lines); defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with the IDX image/label files.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// Directory all output files are written into.
    #[arg(long, default_value = "polychron-out")]
    out_dir: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the number of training instances per class.
    #[arg(long)]
    train_count: Option<usize>,
    /// Flip input polarity (high pixel values fire first).
    #[arg(long)]
    invert: bool,
    /// Also write per-phase raster dumps.
    #[arg(long)]
    dump_rasters: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of networks.
    #[arg(short, default_value_t = 20)]
    n: usize,
    /// Parallel workers (default: all cores). The outputs do not depend on
    /// this.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum Phase {
    Baseline,
    Trained,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Baseline => "baseline",
            Phase::Trained => "trained",
        }
    }
}

#[derive(Clone)]
enum Selector {
    All,
    Index(usize),
}

impl std::str::FromStr for Selector {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            return Ok(Selector::All);
        }
        s.parse::<usize>()
            .map(Selector::Index)
            .map_err(|_| format!("expected 'all' or an instance index, got '{s}'"))
    }
}

#[derive(Args)]
struct RasterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which test phase to dump.
    #[arg(long, value_enum)]
    phase: Phase,
    /// Presentation index within the phase, or `all`.
    #[arg(long, default_value = "all")]
    instance: Selector,
}

#[derive(Args)]
struct PreviewArgs {
    /// Directory with the IDX image/label files (needed for numeric
    /// selectors).
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// `zeros`, `ramp`, or a dataset image index.
    #[arg(long, default_value = "zeros")]
    image: String,
    /// Flip input polarity.
    #[arg(long)]
    invert: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory the IDX files are written into.
    #[arg(long, default_value = "polychron-data")]
    out_dir: PathBuf,
    /// Digit classes to generate.
    #[arg(long, default_value = "0,1,2", value_delimiter = ',')]
    classes: Vec<u8>,
    /// Instances per class.
    #[arg(long, default_value_t = 60)]
    per_class: usize,
    #[arg(long, default_value_t = 4242)]
    seed: u64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Raster(args) => cmd_raster(args),
        Command::EncodePreview(args) => cmd_encode_preview(args),
        Command::SynthData(args) => cmd_synth_data(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn load_experiment_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => config::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_dataset(common: &CommonArgs) -> Result<(Vec<RawImage>, Vec<u8>)> {
    let dir = common
        .data_dir
        .clone()
        .ok_or_else(|| Error::Data(format!("no data directory (--data-dir or {DATA_DIR_ENV})")))?;
    if !dir.is_dir() {
        return Err(Error::Data(format!(
            "data directory {} does not exist",
            dir.display()
        )));
    }
    for (img, lbl) in [
        (synth::IMAGES_FILE, synth::LABELS_FILE),
        ("images-idx3-ubyte", "labels-idx1-ubyte"),
    ] {
        let (img, lbl) = (dir.join(img), dir.join(lbl));
        if img.is_file() && lbl.is_file() {
            let images = dataio::read_images(&img)?;
            let labels = dataio::read_labels(&lbl)?;
            if images.len() != labels.len() {
                return Err(Error::Data(format!(
                    "{} images but {} labels in {}",
                    images.len(),
                    labels.len(),
                    dir.display()
                )));
            }
            return Ok((images, labels));
        }
    }
    Err(Error::Data(format!(
        "no IDX dataset ({}/{}) found in {}",
        synth::IMAGES_FILE,
        synth::LABELS_FILE,
        dir.display()
    )))
}

fn create_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|()| w.flush())
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Raster lines `time_ms neuron_index input_id class` for the selected
/// presentations of one phase.
fn write_phase_raster<W: Write>(
    w: &mut W,
    phase: &PhaseTrace,
    selection: &Selector,
) -> std::io::Result<()> {
    let records = phase
        .records
        .as_ref()
        .expect("phase was captured with records");
    for (trial, record) in records.iter().enumerate() {
        if let Selector::Index(i) = selection {
            if *i != trial {
                continue;
            }
        }
        let (_, label) = phase.presented[trial];
        for e in &record.events {
            writeln!(w, "{:.3} {} {} {}", e.time_ms, e.neuron, trial, label)?;
        }
    }
    writeln!(w, "{RASTER_SCHEMA}")
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = load_experiment_config(&args.common)?;
    if let Some(n) = args.train_count {
        config.train_per_class = n;
    }
    if args.invert {
        config.encoder.invert = true;
    }
    let (images, labels) = load_dataset(&args.common)?;
    let out_dir = &args.common.out_dir;
    create_out_dir(out_dir)?;

    let outcome = run_single(&config, &images, &labels, args.dump_rasters)?;
    let seed = config.seed;

    let delays_name = format!("delays_seed{seed}.txt");
    write_file(&out_dir.join(&delays_name), |w| {
        outcome.final_topology.write_text(w)
    })?;
    write_file(&out_dir.join(format!("report_seed{seed}.txt")), |w| {
        report::write_network_report(w, &outcome.report, Some(&delays_name))
    })?;
    if args.dump_rasters {
        for (phase, trace) in [
            (Phase::Baseline, &outcome.baseline),
            (Phase::Trained, &outcome.test),
        ] {
            write_file(
                &out_dir.join(format!("rasters_{}_seed{seed}.txt", phase.name())),
                |w| write_phase_raster(w, trace, &Selector::All),
            )?;
        }
    }

    for t in &outcome.report.per_threshold {
        println!(
            "theta {:.2}: baseline {:.6} -> trained {:.6} (unseen {:.6} -> {:.6})",
            t.theta,
            t.baseline.trained_accuracy,
            t.trained.trained_accuracy,
            t.baseline.unseen_accuracy,
            t.trained.unseen_accuracy,
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = load_experiment_config(&args.common)?;
    let (images, labels) = load_dataset(&args.common)?;
    let out_dir = &args.common.out_dir;
    create_out_dir(out_dir)?;

    let outcome = run_sweep(&config, &images, &labels, args.n, args.jobs)?;
    for (i, r) in outcome.reports.iter().enumerate() {
        write_file(&out_dir.join(format!("network_{i:03}.txt")), |w| {
            report::write_network_report(w, r, None)
        })?;
    }
    write_file(&out_dir.join("summary.txt"), |w| {
        report::write_sweep_summary(w, &outcome.summary)
    })?;
    for t in &outcome.summary.per_threshold {
        for (phase, p) in [("baseline", &t.baseline), ("trained", &t.trained)] {
            for (eval, bins) in [
                ("trained", &p.trained_accuracy_histogram),
                ("unseen", &p.unseen_accuracy_histogram),
            ] {
                let name = format!("hist_{phase}_{eval}_theta{:.2}.txt", t.theta);
                let title = format!("phase={phase} eval={eval} theta={:.2}", t.theta);
                write_file(&out_dir.join(name), |w| {
                    report::write_histogram(w, &title, bins)
                })?;
            }
        }
    }

    for t in &outcome.summary.per_threshold {
        println!(
            "theta {:.2}: mean baseline {:.6} -> trained {:.6}, nonseparable {:.6} -> {:.6}, improved {:.6} of {}",
            t.theta,
            t.baseline.mean_trained_accuracy,
            t.trained.mean_trained_accuracy,
            t.baseline.nonseparable_fraction,
            t.trained.nonseparable_fraction,
            t.improved_fraction,
            t.separable_both,
        );
    }
    Ok(())
}

fn cmd_raster(args: RasterArgs) -> Result<()> {
    let config = load_experiment_config(&args.common)?;
    let (images, labels) = load_dataset(&args.common)?;
    let out_dir = &args.common.out_dir;
    create_out_dir(out_dir)?;

    let outcome = run_single(&config, &images, &labels, true)?;
    let trace = match args.phase {
        Phase::Baseline => &outcome.baseline,
        Phase::Trained => &outcome.test,
    };
    let n = trace.presented.len();
    if let Selector::Index(i) = args.instance {
        if i >= n {
            return Err(Error::Config(format!(
                "instance {i} out of range (phase has {n} presentations)"
            )));
        }
    }
    let suffix = match args.instance {
        Selector::All => "all".to_string(),
        Selector::Index(i) => format!("{i}"),
    };
    let name = format!(
        "raster_{}_seed{}_{}.txt",
        args.phase.name(),
        config.seed,
        suffix
    );
    write_file(&out_dir.join(&name), |w| {
        write_phase_raster(w, trace, &args.instance)
    })?;
    println!("{}", out_dir.join(&name).display());
    Ok(())
}

fn cmd_encode_preview(args: PreviewArgs) -> Result<()> {
    let pixels: Vec<f64> = match args.image.as_str() {
        "zeros" => vec![0.0; dataio::GRID_PIXELS],
        "ramp" => (0..dataio::GRID_PIXELS)
            .map(|i| i as f64 / (dataio::GRID_PIXELS - 1) as f64)
            .collect(),
        selector => {
            let index: usize = selector.parse().map_err(|_| {
                Error::Config(format!(
                    "image selector must be 'zeros', 'ramp' or an index, got '{selector}'"
                ))
            })?;
            let common = CommonArgs {
                config: None,
                data_dir: args.data_dir.clone(),
                out_dir: PathBuf::new(),
                seed: None,
            };
            let (images, _) = load_dataset(&common)?;
            let image = images.get(index).ok_or_else(|| {
                Error::Config(format!(
                    "image index {index} out of range ({} images)",
                    images.len()
                ))
            })?;
            dataio::downscale(image)
        }
    };
    let instance = Instance {
        pixels,
        label: 0,
        source_index: 0,
    };
    let enc = encoder::EncoderConfig {
        invert: args.invert,
        ..encoder::EncoderConfig::default()
    };
    let pattern = encoder::encode(&instance, &enc)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let mut print = || -> std::io::Result<()> {
        for (neuron, time) in &pattern.spikes {
            writeln!(w, "{neuron} {time:.3}")?;
        }
        writeln!(w, "{PREVIEW_SCHEMA}")
    };
    match print() {
        Ok(()) => Ok(()),
        // A closed pipe (e.g. `| head`) is not an error.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::Fault(format!("stdout: {e}"))),
    }
}

fn cmd_synth_data(args: SynthArgs) -> Result<()> {
    synth::write_dataset(&args.out_dir, &args.classes, args.per_class, args.seed)?;
    println!(
        "wrote {} instances ({} classes x {}) to {}",
        args.classes.len() * args.per_class,
        args.classes.len(),
        args.per_class,
        args.out_dir.display()
    );
    Ok(())
}
