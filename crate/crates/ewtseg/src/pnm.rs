//! Binary 8-bit PGM (P5) and PPM (P6) images.

use std::fs;
use std::path::Path;

use ewtseg_core::{Grid, Plane, RgbImage, SegmentationMap};

use crate::error::{CliError, CliResult};

/// A decoded image with samples scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Image {
    Gray(Plane),
    Rgb(RgbImage),
}

impl Image {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Gray(p) => p.dims(),
            Self::Rgb(p) => p.dims(),
        }
    }
}

struct Raw {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    data: Vec<u8>,
}

fn parse(bytes: &[u8]) -> CliResult<Raw> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(CliError::input("not a binary PGM/PPM file")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::input("malformed PNM header"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(CliError::input("malformed PNM header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(CliError::input("image has zero size"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(CliError::input(format!(
            "only 8-bit images are supported (maxval {maxval})"
        )));
    }
    let (width, height) = (width as usize, height as usize);
    let need = width * height * channels;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| CliError::input("truncated image data"))?
        .to_vec();
    Ok(Raw {
        channels,
        width,
        height,
        maxval,
        data,
    })
}

fn read_raw(path: &Path) -> CliResult<Raw> {
    let bytes = fs::read(path).map_err(|e| CliError::from(e).at(path))?;
    parse(&bytes).map_err(|e| e.at(path))
}

pub fn read_image(path: &Path) -> CliResult<Image> {
    let raw = read_raw(path)?;
    let scale = f64::from(raw.maxval);
    let (w, h) = (raw.width, raw.height);
    if raw.channels == 1 {
        let v = raw.data.iter().map(|&b| f64::from(b) / scale).collect();
        Ok(Image::Gray(Plane::from_vec(w, h, v)?))
    } else {
        let v = raw
            .data
            .chunks_exact(3)
            .map(|c| [0, 1, 2].map(|i| f64::from(c[i]) / scale))
            .collect();
        Ok(Image::Rgb(Grid::from_vec(w, h, v)?))
    }
}

/// Reads a PGM whose sample values are class labels.
pub fn read_labels(path: &Path) -> CliResult<SegmentationMap> {
    let raw = read_raw(path)?;
    if raw.channels != 1 {
        return Err(CliError::input("label maps must be PGM").at(path));
    }
    let labels = raw.data.iter().map(|&b| u32::from(b)).collect();
    Ok(SegmentationMap::from_labels(Grid::from_vec(
        raw.width, raw.height, labels,
    )?))
}

fn encode(magic: &str, width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_image(image: &Image) -> Vec<u8> {
    match image {
        Image::Gray(p) => {
            let data: Vec<u8> = p.as_slice().iter().map(|&v| quantize(v)).collect();
            encode("P5", p.width(), p.height(), &data)
        }
        Image::Rgb(p) => {
            let data: Vec<u8> = p.as_slice().iter().flat_map(|c| c.map(quantize)).collect();
            encode("P6", p.width(), p.height(), &data)
        }
    }
}

pub fn write_image(path: &Path, image: &Image) -> CliResult<()> {
    fs::write(path, encode_image(image)).map_err(|e| CliError::from(e).at(path))
}

pub fn write_labels(path: &Path, map: &SegmentationMap) -> CliResult<()> {
    if map.classes() > 256 {
        return Err(CliError::input(format!(
            "{} classes do not fit an 8-bit label map",
            map.classes()
        )));
    }
    let data: Vec<u8> = map.labels().as_slice().iter().map(|&l| l as u8).collect();
    fs::write(path, encode("P5", map.width(), map.height(), &data))
        .map_err(|e| CliError::from(e).at(path))
}
