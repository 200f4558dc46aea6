//! Pipeline settings from a flat `key = value` file and command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ewtseg_core::boundaries::MergeConfig;
use ewtseg_core::classify::{Architecture, TrainConfig, DEFAULT_REFINE_FRACTION};
use ewtseg_core::datagen::DEFAULT_MASK_SIGMA;
use ewtseg_core::features::FeatureConfig;
use ewtseg_core::spectral::ScaleSpaceConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    Grayscale,
    /// HSV value channel `max(R, G, B)`.
    ColorVChannel,
}

impl FromStr for ColorMode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "grayscale" => Ok(Self::Grayscale),
            "color_v_channel" | "color-v-channel" => Ok(Self::ColorVChannel),
            _ => Err(CliError::input(format!("unknown color mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dictionary: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub color_mode: ColorMode,
    pub window: usize,
    /// `None` picks the color-mode default.
    pub drop_lowpass: Option<bool>,
    pub zca_epsilon: f64,
    pub radial_threshold: f64,
    pub angular_threshold: f64,
    pub scale_space: ScaleSpaceConfig,
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub refine_fraction: f64,
    pub mask_sigma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dictionary: None,
            output_dir: None,
            color_mode: ColorMode::Grayscale,
            window: 1,
            drop_lowpass: None,
            zca_epsilon: FeatureConfig::grayscale().zca_epsilon,
            radial_threshold: MergeConfig::radial().min_width,
            angular_threshold: MergeConfig::angular().min_width,
            scale_space: ScaleSpaceConfig::default(),
            architecture: Architecture::SoftmaxLinear,
            train: TrainConfig::default(),
            refine_fraction: DEFAULT_REFINE_FRACTION,
            mask_sigma: DEFAULT_MASK_SIGMA,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::input(format!("bad value {value:?} for {key}")))
}

pub const KEYS: &[&str] = &[
    "dictionary",
    "output_dir",
    "color_mode",
    "window",
    "drop_lowpass",
    "zca_epsilon",
    "radial_threshold",
    "angular_threshold",
    "scale_step",
    "max_scale_steps",
    "architecture",
    "hidden",
    "learning_rate",
    "weight_decay",
    "beta1",
    "beta2",
    "adam_epsilon",
    "epochs",
    "batch_size",
    "refine_fraction",
    "rng_seed",
    "mask_sigma",
];

impl PipelineConfig {
    /// Sets one key. Dashes and underscores in keys are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        match k {
            "dictionary" => self.dictionary = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "color_mode" => self.color_mode = value.parse()?,
            "window" => self.window = parse(k, value)?,
            "drop_lowpass" => self.drop_lowpass = Some(parse(k, value)?),
            "zca_epsilon" => self.zca_epsilon = parse(k, value)?,
            "radial_threshold" => self.radial_threshold = parse(k, value)?,
            "angular_threshold" => self.angular_threshold = parse(k, value)?,
            "scale_step" => self.scale_space.step = parse(k, value)?,
            "max_scale_steps" => self.scale_space.max_scale_steps = parse(k, value)?,
            "architecture" => {
                self.architecture = match value {
                    "softmax" | "softmax_linear" => Architecture::SoftmaxLinear,
                    "mlp" => match self.architecture {
                        Architecture::Mlp { hidden } => Architecture::Mlp { hidden },
                        Architecture::SoftmaxLinear => Architecture::Mlp { hidden: 32 },
                    },
                    _ => return Err(CliError::input(format!("unknown architecture {value:?}"))),
                }
            }
            "hidden" => {
                self.architecture = Architecture::Mlp {
                    hidden: parse(k, value)?,
                }
            }
            "learning_rate" => self.train.learning_rate = parse(k, value)?,
            "weight_decay" => self.train.weight_decay = parse(k, value)?,
            "beta1" => self.train.beta1 = parse(k, value)?,
            "beta2" => self.train.beta2 = parse(k, value)?,
            "adam_epsilon" => self.train.adam_epsilon = parse(k, value)?,
            "epochs" => self.train.epochs = parse(k, value)?,
            "batch_size" => self.train.batch_size = parse(k, value)?,
            "refine_fraction" => self.refine_fraction = parse(k, value)?,
            "rng_seed" => self.train.rng_seed = parse(k, value)?,
            "mask_sigma" => self.mask_sigma = parse(k, value)?,
            _ => return Err(CliError::input(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::input(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
        self.apply_text(&text).map_err(|e| e.at(path))
    }

    pub fn rng_seed(&self) -> u64 {
        self.train.rng_seed
    }

    pub fn features(&self) -> FeatureConfig {
        let base = match self.color_mode {
            ColorMode::Grayscale => FeatureConfig::grayscale(),
            ColorMode::ColorVChannel => FeatureConfig::color(),
        };
        FeatureConfig {
            window: self.window,
            drop_lowpass: self.drop_lowpass.unwrap_or(base.drop_lowpass),
            zca_epsilon: self.zca_epsilon,
        }
    }

    pub fn radial_merge(&self) -> MergeConfig {
        MergeConfig {
            min_width: self.radial_threshold,
        }
    }

    pub fn angular_merge(&self) -> MergeConfig {
        MergeConfig {
            min_width: self.angular_threshold,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.radial_threshold > 0.0 && self.angular_threshold > 0.0) {
            return Err(CliError::input("merge thresholds must be positive"));
        }
        if !(0.0..1.0).contains(&self.refine_fraction) {
            return Err(CliError::input("refine_fraction must lie in [0, 1)"));
        }
        self.features().validate()?;
        self.scale_space.validate()?;
        self.train.validate()?;
        Ok(())
    }
}
