//! The subcommands as library functions. Each returns the summary it would
//! print.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ewtseg_core::classify::{predict, refine, train, ClassifierModel};
use ewtseg_core::datagen::{
    compose_mosaic, gen_grayscale_mask_detailed, gen_voronoi_mask, MaskSpec,
};
use ewtseg_core::features::{
    apply_zca, build_dictionary_bank, extract_features, fit_zca_pooled, v_channel, FeatureTensor,
    Whitening, WhiteningTransform,
};
use ewtseg_core::metrics::{score, Scores};
use ewtseg_core::{Plane, SegmentationMap};

use crate::config::{ColorMode, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::persist;
use crate::pnm::{self, Image};
use crate::tensor_io;

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Image files of a directory in file-name order.
pub fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::from(e).at(dir))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if has_extension(&path, "pgm") || has_extension(&path, "ppm") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn to_plane(image: Image, mode: ColorMode, path: &Path) -> CliResult<Plane> {
    match (image, mode) {
        (Image::Gray(p), _) => Ok(p),
        (Image::Rgb(rgb), ColorMode::ColorVChannel) => Ok(v_channel(&rgb)),
        (Image::Rgb(_), ColorMode::Grayscale) => Err(CliError::input(
            "color image in grayscale mode (set color_mode = color_v_channel)",
        )
        .at(path)),
    }
}

pub fn load_plane(path: &Path, cfg: &PipelineConfig) -> CliResult<Plane> {
    to_plane(pnm::read_image(path)?, cfg.color_mode, path)
}

/// Label maps come either as EWTL files or as PGM images of class indices.
pub fn read_map(path: &Path) -> CliResult<SegmentationMap> {
    if has_extension(path, "ewtl") {
        tensor_io::read_label_file(path)
    } else {
        pnm::read_labels(path)
    }
}

pub fn write_map(path: &Path, map: &SegmentationMap) -> CliResult<()> {
    if has_extension(path, "ewtl") {
        tensor_io::write_label_file(path, map)
    } else {
        pnm::write_labels(path, map)
    }
}

fn dictionary(cfg: &PipelineConfig) -> CliResult<(&Path, Vec<PathBuf>)> {
    let dir = cfg
        .dictionary
        .as_deref()
        .ok_or_else(|| CliError::input("no texture dictionary given (set dictionary)"))?;
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(CliError::input("no PGM/PPM images in the dictionary").at(dir));
    }
    Ok((dir, paths))
}

fn output_dir(cfg: &PipelineConfig) -> CliResult<&Path> {
    let dir = cfg
        .output_dir
        .as_deref()
        .ok_or_else(|| CliError::input("no output directory given (set output_dir)"))?;
    fs::create_dir_all(dir).map_err(|e| CliError::from(e).at(dir))?;
    Ok(dir)
}

fn stem(path: &Path) -> CliResult<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| CliError::input("cannot derive an output name").at(path))
}

pub fn build_bank(
    cfg: &PipelineConfig,
    output: &Path,
    width: Option<usize>,
    height: Option<usize>,
) -> CliResult<String> {
    cfg.validate()?;
    let (_, paths) = dictionary(cfg)?;
    let textures = paths
        .iter()
        .map(|p| load_plane(p, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    let width = width.unwrap_or(textures[0].width());
    let height = height.unwrap_or(textures[0].height());
    let bank = build_dictionary_bank(
        &textures,
        &cfg.radial_merge(),
        &cfg.angular_merge(),
        &cfg.scale_space,
        width,
        height,
    )?;
    persist::save_bank(output, &bank)?;
    Ok(format!(
        "N_s = {}\nN_theta = {}\nK = {}\n",
        bank.scales().support_count(),
        bank.sector_count(),
        bank.len()
    ))
}

pub enum WhiteningMode<'a> {
    Skip,
    Fit(&'a Path),
    Apply(&'a Path),
}

/// Writes `<stem>.ewtf` per image and `<stem>.ewtl` per mask. Masks pair with
/// images in order.
pub fn extract(
    cfg: &PipelineConfig,
    bank_path: &Path,
    images: &[PathBuf],
    masks: &[PathBuf],
    whitening: WhiteningMode<'_>,
) -> CliResult<String> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(CliError::input("no images given"));
    }
    if !masks.is_empty() && masks.len() != images.len() {
        return Err(CliError::input(format!(
            "{} masks for {} images",
            masks.len(),
            images.len()
        )));
    }
    let out = output_dir(cfg)?;
    let bank = persist::load_bank(bank_path)?;
    let fcfg = cfg.features();
    let mut raw = Vec::with_capacity(images.len());
    for path in images {
        let plane = load_plane(path, cfg)?;
        let (t, _) = extract_features(&plane, &bank, &fcfg, Whitening::Skip)
            .map_err(|e| CliError::from(e).at(path))?;
        raw.push(t);
    }
    let mut report = String::new();
    let tensors: Vec<FeatureTensor> = match whitening {
        WhiteningMode::Skip => raw,
        WhiteningMode::Fit(path) => {
            let w = fit_zca_pooled(&raw, fcfg.zca_epsilon)?;
            persist::save_whitening(path, &w)?;
            writeln!(
                report,
                "whitening fitted on {} images -> {}",
                raw.len(),
                path.display()
            )
            .unwrap();
            raw.iter()
                .map(|t| apply_zca(t, &w))
                .collect::<Result<_, _>>()?
        }
        WhiteningMode::Apply(path) => {
            let w = persist::load_whitening(path)?;
            raw.iter()
                .map(|t| apply_zca(t, &w))
                .collect::<Result<_, _>>()?
        }
    };
    for (i, (path, t)) in images.iter().zip(&tensors).enumerate() {
        let name = stem(path)?;
        let target = out.join(format!("{name}.ewtf"));
        tensor_io::write_features(&target, t)?;
        writeln!(
            report,
            "{} -> {} ({}x{}, K = {})",
            path.display(),
            target.display(),
            t.width(),
            t.height(),
            t.k()
        )
        .unwrap();
        if let Some(mask_path) = masks.get(i) {
            let mask = read_map(mask_path)?;
            if mask.labels().dims() != (t.width(), t.height()) {
                return Err(CliError::input(format!(
                    "mask is {}x{} but the image is {}x{}",
                    mask.width(),
                    mask.height(),
                    t.width(),
                    t.height()
                ))
                .at(mask_path));
            }
            let target = out.join(format!("{name}.ewtl"));
            tensor_io::write_label_file(&target, &mask)?;
        }
    }
    Ok(report)
}

pub fn train_model(
    cfg: &PipelineConfig,
    features: &[PathBuf],
    labels: &[PathBuf],
    output: &Path,
    classes: Option<usize>,
) -> CliResult<String> {
    cfg.validate()?;
    if features.is_empty() || features.len() != labels.len() {
        return Err(CliError::input(format!(
            "need matching feature and label files, got {} and {}",
            features.len(),
            labels.len()
        )));
    }
    let tensors = features
        .iter()
        .map(|p| tensor_io::read_features(p))
        .collect::<CliResult<Vec<_>>>()?;
    let maps = labels
        .iter()
        .map(|p| read_map(p))
        .collect::<CliResult<Vec<_>>>()?;
    let classes =
        classes.unwrap_or_else(|| maps.iter().map(|m| m.classes() as usize).max().unwrap_or(0));
    let samples: Vec<_> = tensors.iter().zip(&maps).collect();
    let (model, report) = train(&samples, cfg.architecture, classes, &cfg.train)?;
    persist::save_model(output, &model)?;
    let mut out = format!(
        "trained {} epochs on {} pixels, {classes} classes\n",
        report.epoch_losses.len(),
        tensors.iter().map(FeatureTensor::rows).sum::<usize>()
    );
    if let (Some(first), Some(last)) = (report.epoch_losses.first(), report.epoch_losses.last()) {
        writeln!(out, "loss {first:.6} -> {last:.6}").unwrap();
    }
    if !report.missing_classes.is_empty() {
        writeln!(out, "classes without pixels: {:?}", report.missing_classes).unwrap();
    }
    Ok(out)
}

pub enum SegmentInput<'a> {
    Features(&'a Path),
    Image {
        image: &'a Path,
        bank: &'a Path,
        whitening: Option<&'a Path>,
    },
}

pub fn segment(
    cfg: &PipelineConfig,
    model_path: &Path,
    input: SegmentInput<'_>,
    output: &Path,
) -> CliResult<String> {
    cfg.validate()?;
    let model: ClassifierModel = persist::load_model(model_path)?;
    let features = match input {
        SegmentInput::Features(path) => tensor_io::read_features(path)?,
        SegmentInput::Image {
            image,
            bank,
            whitening,
        } => {
            let bank = persist::load_bank(bank)?;
            let plane = load_plane(image, cfg)?;
            let w: Option<WhiteningTransform> =
                whitening.map(persist::load_whitening).transpose()?;
            let mode = w.as_ref().map_or(Whitening::Skip, Whitening::Apply);
            extract_features(&plane, &bank, &cfg.features(), mode)
                .map_err(|e| CliError::from(e).at(image))?
                .0
        }
    };
    let mut map = predict(&features, &model)?;
    let refined = cfg.refine_fraction > 0.0;
    if refined {
        map = refine(&map, cfg.refine_fraction)?;
    }
    write_map(output, &map)?;
    Ok(format!(
        "{}x{} map with {} classes{} -> {}\n",
        map.width(),
        map.height(),
        map.classes(),
        if refined { ", refined" } else { "" },
        output.display()
    ))
}

pub fn scores_text(s: &Scores) -> String {
    s.as_pairs()
        .iter()
        .map(|(k, v)| format!("{k} = {v:.4}\n"))
        .collect()
}

pub fn scores_json(s: &Scores) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(s)?;
    text.push('\n');
    Ok(text)
}

pub fn evaluate(prediction: &Path, ground_truth: &Path) -> CliResult<Scores> {
    let pred = read_map(prediction)?;
    let gt = read_map(ground_truth)?;
    if pred.labels().dims() != gt.labels().dims() {
        return Err(CliError::input(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(score(&pred, &gt)?)
}

#[derive(Debug, Clone, Copy)]
pub enum MaskKind {
    /// Median-thresholded smooth noise with this many connected regions.
    Grayscale {
        regions: usize,
    },
    Voronoi {
        cells: usize,
    },
}

/// Texture index for each region of a grayscale mask.
fn region_textures(phases: &[u32], textures: usize) -> Vec<u32> {
    let regions = phases.len();
    if textures >= regions {
        (0..regions as u32).collect()
    } else if textures == 2 {
        phases.to_vec()
    } else {
        (0..regions).map(|r| (r % textures) as u32).collect()
    }
}

/// Writes `sample_NNN_mask.pgm` and `sample_NNN_mosaic.pgm` (`.ppm` for color
/// dictionaries). Sample `i` uses seed `rng_seed + i`.
pub fn gen_dataset(
    cfg: &PipelineConfig,
    count: usize,
    width: usize,
    height: usize,
    kind: MaskKind,
) -> CliResult<String> {
    let (_, paths) = dictionary(cfg)?;
    let images = paths
        .iter()
        .map(|p| pnm::read_image(p))
        .collect::<CliResult<Vec<_>>>()?;
    let out = output_dir(cfg)?;
    let color = images.iter().any(|i| matches!(i, Image::Rgb(_)));
    let rgb: Vec<_> = images
        .iter()
        .map(|i| match i {
            Image::Gray(p) => p.map(|&v| [v; 3]),
            Image::Rgb(p) => p.clone(),
        })
        .collect();
    let gray: Vec<_> = images
        .into_iter()
        .filter_map(|i| match i {
            Image::Gray(p) => Some(p),
            Image::Rgb(_) => None,
        })
        .collect();

    let mut report = String::new();
    for i in 0..count {
        let seed = cfg.rng_seed().wrapping_add(i as u64);
        let mask = match kind {
            MaskKind::Grayscale { regions } => {
                let spec = MaskSpec {
                    sigma: cfg.mask_sigma,
                    ..MaskSpec::new(width, height, regions, seed)
                };
                let m = gen_grayscale_mask_detailed(&spec)?;
                let mapping = region_textures(&m.phases, paths.len());
                SegmentationMap::from_labels(m.regions.remap(&mapping)?.into_labels())
            }
            MaskKind::Voronoi { cells } => {
                gen_voronoi_mask(width, height, cells, paths.len(), seed)?
            }
        };
        let mosaic = if color {
            Image::Rgb(compose_mosaic(&mask, &rgb)?)
        } else {
            Image::Gray(compose_mosaic(&mask, &gray)?)
        };
        let mask_path = out.join(format!("sample_{i:03}_mask.pgm"));
        let ext = if color { "ppm" } else { "pgm" };
        let mosaic_path = out.join(format!("sample_{i:03}_mosaic.{ext}"));
        pnm::write_labels(&mask_path, &mask)?;
        pnm::write_image(&mosaic_path, &mosaic)?;
        writeln!(report, "{} {}", mask_path.display(), mosaic_path.display()).unwrap();
    }
    Ok(report)
}
