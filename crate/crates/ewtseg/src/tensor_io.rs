//! EWTF feature tensors and EWTL label maps.
//!
//! Both are little-endian: a 4-byte magic, a `u32` format version, `u32`
//! height and width (plus `u32` K for features), then row-major pixels.
//! Features are `f32`, pixel-major and feature-minor. Labels are `u16`.

use std::fs;
use std::path::Path;

use ewtseg_core::features::FeatureTensor;
use ewtseg_core::{Grid, SegmentationMap};

use crate::error::{CliError, CliResult};

pub const FEATURE_MAGIC: &[u8; 4] = b"EWTF";
pub const LABEL_MAGIC: &[u8; 4] = b"EWTL";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> CliResult<()> {
    let v = u32::try_from(v).map_err(|_| CliError::input("dimension exceeds u32"))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode_features(t: &FeatureTensor) -> CliResult<Vec<u8>> {
    let mut out = Vec::with_capacity(20 + 4 * t.as_slice().len());
    out.extend_from_slice(FEATURE_MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize)?;
    put_u32(&mut out, t.height())?;
    put_u32(&mut out, t.width())?;
    put_u32(&mut out, t.k())?;
    for &v in t.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn encode_labels(map: &SegmentationMap) -> CliResult<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 2 * map.len());
    out.extend_from_slice(LABEL_MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize)?;
    put_u32(&mut out, map.height())?;
    put_u32(&mut out, map.width())?;
    for &l in map.labels().as_slice() {
        let l = u16::try_from(l).map_err(|_| CliError::input(format!("label {l} exceeds u16")))?;
        out.extend_from_slice(&l.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CliError::input("truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> CliResult<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn header(&mut self, magic: &[u8; 4]) -> CliResult<()> {
        if self.take(4)? != magic {
            return Err(CliError::input(format!(
                "expected {} magic",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION as usize {
            return Err(CliError::input(format!(
                "unsupported format version {version}"
            )));
        }
        Ok(())
    }

    fn finish(&self) -> CliResult<()> {
        if self.pos != self.bytes.len() {
            return Err(CliError::input("trailing bytes after payload"));
        }
        Ok(())
    }
}

pub fn decode_features(bytes: &[u8]) -> CliResult<FeatureTensor> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(FEATURE_MAGIC)?;
    let (height, width, k) = (r.u32()?, r.u32()?, r.u32()?);
    let n = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(k))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| CliError::input("header dimensions overflow"))?;
    let data = r
        .take(n)?
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    r.finish()?;
    Ok(FeatureTensor::new(width, height, k, data)?)
}

pub fn decode_labels(bytes: &[u8]) -> CliResult<SegmentationMap> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(LABEL_MAGIC)?;
    let (height, width) = (r.u32()?, r.u32()?);
    let n = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| CliError::input("header dimensions overflow"))?;
    let labels = r
        .take(n)?
        .chunks_exact(2)
        .map(|c| u32::from(u16::from_le_bytes([c[0], c[1]])))
        .collect();
    r.finish()?;
    Ok(SegmentationMap::from_labels(Grid::from_vec(
        width, height, labels,
    )?))
}

pub fn write_features(path: &Path, t: &FeatureTensor) -> CliResult<()> {
    fs::write(path, encode_features(t)?).map_err(|e| CliError::from(e).at(path))
}

pub fn write_label_file(path: &Path, map: &SegmentationMap) -> CliResult<()> {
    fs::write(path, encode_labels(map)?).map_err(|e| CliError::from(e).at(path))
}

pub fn read_features(path: &Path) -> CliResult<FeatureTensor> {
    let bytes = fs::read(path).map_err(|e| CliError::from(e).at(path))?;
    decode_features(&bytes).map_err(|e| e.at(path))
}

pub fn read_label_file(path: &Path) -> CliResult<SegmentationMap> {
    let bytes = fs::read(path).map_err(|e| CliError::from(e).at(path))?;
    decode_labels(&bytes).map_err(|e| e.at(path))
}
