//! `dvs` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{DvsError, Result};
use crate::experiment::{compare, split_series, train_method, Method, RunConfig};
use crate::manifest::{unix_now, RunManifest};
use crate::series::{load_series, make_windows, synth_series, SynthSpec, TimeSeries, WindowSet};
use crate::training::{predict, TrainedModel};
use crate::visibility::{
    dvs_compress, dvs_transform, enhanced_matrix, visibility_adjacency, visibility_adjacency_at,
};

#[derive(Debug, Parser)]
#[command(
    name = "dvs",
    version,
    about = "Visibility-graph series transform and forecaster"
)]
pub struct Cli {
    /// Seed for every random choice (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration JSON; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the visibility adjacency, enhanced matrix and compressed series.
    Transform(TransformArgs),
    /// Train one network method on the training split.
    Train(TrainArgs),
    /// Predict every window of a series with a trained model.
    Predict(PredictArgs),
    /// Compare forecasters on the shared chronological test split.
    Compare(CompareArgs),
    /// Generate a seeded synthetic trend + season + noise series.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub series: PathBuf,
    /// Compress each sliding window of this length instead of the whole series.
    #[arg(long)]
    pub window: Option<usize>,
    /// Use the `t` column as node positions instead of 0, 1, 2, ...
    #[arg(long)]
    pub use_timestamps: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub series: PathBuf,
    #[arg(long, default_value = "dvs-cnn")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub series: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Only the test split defined by the run configuration.
    #[arg(long)]
    pub test_only: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub series: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "dvs-cnn,cnn,dvs-ann,ann,sma,ses,linear,vg-walk"
    )]
    pub methods: Vec<String>,
    /// Seeds for the neural methods; defaults to the configured seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 295)]
    pub length: usize,
    #[arg(long, default_value_t = 20.0)]
    pub slope: f64,
    #[arg(long, default_value_t = 150.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 12.0)]
    pub period: f64,
    #[arg(long, default_value_t = 30.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 4700.0)]
    pub base: f64,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| DvsError::io(path, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| DvsError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| DvsError::io(path, e))
}

fn read_series(path: &Path) -> Result<(TimeSeries, Vec<u8>)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| DvsError::Parse {
        line: 0,
        message: format!("{} is not UTF-8", path.display()),
    })?;
    Ok((load_series(&text)?, bytes))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let bytes = read(path)?;
                let text = String::from_utf8_lossy(&bytes);
                let cfg: RunConfig = serde_json::from_str(&text)?;
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let command_line = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let cli =
        Cli::try_parse_from(&args).map_err(|e| DvsError::InvalidConfig(vec![e.to_string()]))?;
    run(&cli, command_line)
}

pub fn run(cli: &Cli, command_line: Vec<String>) -> Result<()> {
    let started = unix_now();
    match &cli.command {
        Command::Transform(a) => cmd_transform(cli, a, command_line, started),
        Command::Train(a) => cmd_train(cli, a, command_line, started),
        Command::Predict(a) => cmd_predict(cli, a, command_line, started),
        Command::Compare(a) => cmd_compare(cli, a, command_line, started),
        Command::Synth(a) => cmd_synth(cli, a, command_line, started),
    }
}

fn cmd_transform(cli: &Cli, a: &TransformArgs, argv: Vec<String>, started: f64) -> Result<()> {
    let (series, bytes) = read_series(&a.series)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let format = cli.format.unwrap_or(Format::Json);

    match a.window {
        Some(w) => {
            let ws = make_windows(&series, w)?;
            let mut csv = String::from("window,index,zip\n");
            for (k, win) in ws.windows.iter().enumerate() {
                for (i, z) in dvs_transform(&win.input)?.z.iter().enumerate() {
                    csv.push_str(&format!("{k},{i},{}\n", crate::series::format_sig17(*z)));
                }
            }
            write(&out.join("zip_windows.csv"), csv)?;
        }
        None => {
            let adjacency = if a.use_timestamps {
                visibility_adjacency_at(series.times(), series.values())?
            } else {
                visibility_adjacency(series.values())?
            };
            match format {
                Format::Csv => write(&out.join("adjacency.csv"), adjacency.to_dense_csv())?,
                _ => write(&out.join("adjacency.json"), adjacency.to_json()?)?,
            }
            let enhanced = enhanced_matrix(&adjacency, series.values())?;
            write(&out.join("evg.csv"), enhanced.to_dense_csv())?;
            let zip = dvs_compress(&enhanced);
            write(&out.join("zip.csv"), zip.to_csv())?;
            if format == Format::Text {
                print!("{}", zip.to_csv());
            }
        }
    }
    let manifest = RunManifest::new(
        argv,
        &(a.window, a.use_timestamps),
        None,
        Some(&bytes),
        started,
    )?;
    write(&out.join("manifest.json"), manifest.to_json()?)
}

fn cmd_train(cli: &Cli, a: &TrainArgs, argv: Vec<String>, started: f64) -> Result<()> {
    let cfg = cli.run_config()?;
    let method: Method = a.method.parse()?;
    if !method.is_neural() {
        return Err(DvsError::UnknownMethod(format!(
            "{} is not a trainable network",
            method.name()
        )));
    }
    let (series, bytes) = read_series(&a.series)?;
    let (train_set, _) = split_series(&series, &cfg)?;
    let report = train_method(method, &train_set, &cfg, cfg.train.seed)?;

    let model_path = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("model.json"));
    write(&model_path, report.model.to_json()?)?;
    let report_path = sibling(&model_path, "report.json");
    write(
        &report_path,
        report.to_json(Some(&model_path.to_string_lossy()))?,
    )?;
    let manifest = RunManifest::new(argv, &cfg, Some(cfg.train.seed), Some(&bytes), started)?;
    write(&sibling(&model_path, "manifest.json"), manifest.to_json()?)?;
    eprintln!(
        "trained {} for {} iterations: loss {:.6} -> {:.6}",
        method.name(),
        report.loss_curve.len(),
        report.loss_curve[0],
        report.loss_curve[report.loss_curve.len() - 1]
    );
    Ok(())
}

fn cmd_predict(cli: &Cli, a: &PredictArgs, argv: Vec<String>, started: f64) -> Result<()> {
    let model_bytes = read(&a.model)?;
    let model = TrainedModel::from_json(&String::from_utf8_lossy(&model_bytes))?;
    let (series, bytes) = read_series(&a.series)?;
    let windows: WindowSet = if a.test_only {
        let cfg = RunConfig {
            window_len: model.input_len(),
            ..cli.run_config()?
        };
        split_series(&series, &cfg)?.1
    } else {
        make_windows(&series, model.input_len())?
    };
    let preds = predict(&model, &windows)?;
    let mut csv = String::from("index,actual,predicted\n");
    for ((i, w), p) in windows
        .target_indices
        .iter()
        .zip(&windows.windows)
        .zip(&preds)
    {
        csv.push_str(&format!(
            "{i},{},{}\n",
            crate::series::format_sig17(w.target),
            crate::series::format_sig17(*p)
        ));
    }
    match &cli.out {
        Some(path) => {
            write(path, csv)?;
            let manifest = RunManifest::new(
                argv,
                &model.to_json()?,
                Some(model.stack.seed()),
                Some(&bytes),
                started,
            )?;
            write(&sibling(path, "manifest.json"), manifest.to_json()?)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_compare(cli: &Cli, a: &CompareArgs, argv: Vec<String>, started: f64) -> Result<()> {
    let cfg = cli.run_config()?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<Method>>>()?;
    let seeds = if a.seeds.is_empty() {
        vec![cfg.train.seed]
    } else {
        a.seeds.clone()
    };
    let (series, bytes) = read_series(&a.series)?;
    let comparison = compare(&series, &cfg, &methods, &seeds)?;

    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("compare_out"));
    let json = serde_json::to_string_pretty(&comparison)?;
    write(&out.join("comparison.json"), &json)?;
    for r in &comparison.methods {
        for run in &r.runs {
            let name = if r.runs.len() > 1 {
                format!("predictions_{}_seed{}.csv", r.method.name(), run.seed)
            } else {
                format!("predictions_{}.csv", r.method.name())
            };
            write(&out.join(name), comparison.predictions_csv(run))?;
        }
    }
    let manifest = RunManifest::new(argv, &(&cfg, &seeds), Some(seeds[0]), Some(&bytes), started)?;
    write(&out.join("manifest.json"), manifest.to_json()?)?;

    match cli.format.unwrap_or(Format::Text) {
        Format::Json => println!("{json}"),
        _ => print!("{}", comparison.to_text()),
    }
    Ok(())
}

fn cmd_synth(cli: &Cli, a: &SynthArgs, argv: Vec<String>, started: f64) -> Result<()> {
    let spec = SynthSpec {
        length: a.length,
        trend_slope: a.slope,
        seasonal_amplitude: a.amplitude,
        seasonal_period: a.period,
        noise_sigma: a.sigma,
        base_level: a.base,
        seed: cli.seed.unwrap_or(7),
    };
    let series = synth_series(&spec)?;
    let body = match cli.format {
        Some(Format::Json) => serde_json::to_string(&series)?,
        _ => series.to_csv(),
    };
    match &cli.out {
        Some(path) => {
            write(path, &body)?;
            let manifest = RunManifest::new(argv, &spec, Some(spec.seed), None, started)?;
            write(&sibling(path, "manifest.json"), manifest.to_json()?)
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
