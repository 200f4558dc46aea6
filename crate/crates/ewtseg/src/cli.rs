use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, MaskKind, SegmentInput, WhiteningMode};
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

macro_rules! overrides {
    ($($field:ident),* $(,)?) => {
        /// Per-key overrides of the configuration file.
        #[derive(Debug, Default, Args)]
        pub struct Overrides {
            $(
                #[arg(long, global = true, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl Overrides {
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $(
                    if let Some(value) = &self.$field {
                        v.push((stringify!($field), value.as_str()));
                    }
                )*
                v
            }
        }
    };
}

overrides!(
    dictionary,
    output_dir,
    color_mode,
    window,
    drop_lowpass,
    zca_epsilon,
    radial_threshold,
    angular_threshold,
    scale_step,
    max_scale_steps,
    architecture,
    hidden,
    learning_rate,
    weight_decay,
    beta1,
    beta2,
    adam_epsilon,
    epochs,
    batch_size,
    refine_fraction,
    rng_seed,
    mask_sigma,
);

/// Texture segmentation with empirical curvelet features.
#[derive(Debug, Parser)]
#[command(name = "ewtseg", version)]
pub struct Cli {
    /// Flat `key = value` settings file; flags of the same name win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MaskStyle {
    Grayscale,
    Voronoi,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect boundaries on the texture dictionary and write the bank.
    BuildBank {
        #[arg(long)]
        output: PathBuf,
        /// Grid width; defaults to the first texture's.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// Write EWTF features (and EWTL labels for masks) into the output dir.
    Extract {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long = "image", required = true)]
        images: Vec<PathBuf>,
        #[arg(long = "mask")]
        masks: Vec<PathBuf>,
        /// Fit one whitening transform on all images and save it here.
        #[arg(long, conflicts_with = "whitening")]
        fit_whitening: Option<PathBuf>,
        /// Apply a previously fitted whitening transform.
        #[arg(long)]
        whitening: Option<PathBuf>,
    },
    /// Fit the pixel classifier on EWTF/EWTL pairs.
    Train {
        #[arg(long = "features", required = true)]
        features: Vec<PathBuf>,
        #[arg(long = "labels", required = true)]
        labels: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        classes: Option<usize>,
    },
    /// Label every pixel; refines when refine_fraction > 0.
    Segment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "image", required_unless_present = "image")]
        features: Option<PathBuf>,
        #[arg(long, requires = "bank")]
        image: Option<PathBuf>,
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long)]
        whitening: Option<PathBuf>,
        /// Label map, PGM or `.ewtl`.
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare a predicted map to the ground truth.
    Evaluate {
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        /// Also write the JSON report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate masks and texture mosaics from the dictionary.
    GenDataset {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, value_enum, default_value = "grayscale")]
        masks: MaskStyle,
        /// Connected regions per grayscale mask.
        #[arg(long, default_value_t = 2)]
        regions: usize,
        /// Cells per Voronoi mask.
        #[arg(long, default_value_t = 8)]
        cells: usize,
    },
}

impl Cli {
    pub fn pipeline_config(&self) -> CliResult<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (key, value) in self.overrides.pairs() {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }
}

/// Runs a parsed command and returns what it prints.
pub fn run(cli: &Cli) -> CliResult<String> {
    let cfg = cli.pipeline_config()?;
    match &cli.command {
        Command::BuildBank {
            output,
            width,
            height,
        } => commands::build_bank(&cfg, output, *width, *height),
        Command::Extract {
            bank,
            images,
            masks,
            fit_whitening,
            whitening,
        } => {
            let mode = match (fit_whitening, whitening) {
                (Some(p), _) => WhiteningMode::Fit(p),
                (None, Some(p)) => WhiteningMode::Apply(p),
                (None, None) => WhiteningMode::Skip,
            };
            commands::extract(&cfg, bank, images, masks, mode)
        }
        Command::Train {
            features,
            labels,
            output,
            classes,
        } => commands::train_model(&cfg, features, labels, output, *classes),
        Command::Segment {
            model,
            features,
            image,
            bank,
            whitening,
            output,
        } => {
            let input = match (features, image, bank) {
                (Some(f), _, _) => SegmentInput::Features(f),
                (None, Some(image), Some(bank)) => SegmentInput::Image {
                    image,
                    bank,
                    whitening: whitening.as_deref(),
                },
                _ => {
                    return Err(CliError::input(
                        "segment needs --features or --image with --bank",
                    ))
                }
            };
            commands::segment(&cfg, model, input, output)
        }
        Command::Evaluate {
            prediction,
            ground_truth,
            format,
            json,
        } => {
            let scores = commands::evaluate(prediction, ground_truth)?;
            if let Some(path) = json {
                std::fs::write(path, commands::scores_json(&scores)?)
                    .map_err(|e| CliError::from(e).at(path))?;
            }
            match format {
                ReportFormat::Text => Ok(commands::scores_text(&scores)),
                ReportFormat::Json => commands::scores_json(&scores),
            }
        }
        Command::GenDataset {
            count,
            width,
            height,
            masks,
            regions,
            cells,
        } => {
            let kind = match masks {
                MaskStyle::Grayscale => MaskKind::Grayscale { regions: *regions },
                MaskStyle::Voronoi => MaskKind::Voronoi { cells: *cells },
            };
            commands::gen_dataset(&cfg, *count, *width, *height, kind)
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
