//! JSON files for banks, whitening transforms and classifier models.
//!
//! Each document carries a `format` tag and a `version`. Banks store only
//! their boundaries and parameters; the filters are rebuilt on load.

use std::fs;
use std::path::Path;

use ewtseg_core::bank::{build_bank, BankConfig, CurveletBank};
use ewtseg_core::classify::ClassifierModel;
use ewtseg_core::features::WhiteningTransform;
use ewtseg_core::spectral::BoundarySet;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct BankBody {
    width: usize,
    height: usize,
    scales: BoundarySet,
    angles: BoundarySet,
    config: BankConfig,
}

#[derive(Serialize, Deserialize)]
struct Wrapped<T> {
    #[serde(flatten)]
    inner: T,
}

fn encode<T: Serialize>(format: &str, body: T) -> CliResult<String> {
    let env = Envelope {
        format: format.to_owned(),
        version: VERSION,
        body,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

fn decode<T: DeserializeOwned>(format: &str, text: &str) -> CliResult<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.format != format {
        return Err(CliError::input(format!(
            "expected a {format} document, found {}",
            env.format
        )));
    }
    if env.version != VERSION {
        return Err(CliError::input(format!(
            "unsupported {format} version {}",
            env.version
        )));
    }
    Ok(env.body)
}

fn load<T: DeserializeOwned>(path: &Path, format: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
    decode(format, &text).map_err(|e| e.at(path))
}

fn save(path: &Path, text: String) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::from(e).at(path))
}

pub fn encode_bank(bank: &CurveletBank) -> CliResult<String> {
    encode(
        "bank",
        BankBody {
            width: bank.width(),
            height: bank.height(),
            scales: bank.scales().clone(),
            angles: bank.angles().clone(),
            config: *bank.config(),
        },
    )
}

pub fn decode_bank(text: &str) -> CliResult<CurveletBank> {
    let b: BankBody = decode("bank", text)?;
    Ok(build_bank(
        &b.scales, &b.angles, &b.config, b.width, b.height,
    )?)
}

pub fn save_bank(path: &Path, bank: &CurveletBank) -> CliResult<()> {
    save(path, encode_bank(bank)?)
}

pub fn load_bank(path: &Path) -> CliResult<CurveletBank> {
    let text = fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
    decode_bank(&text).map_err(|e| e.at(path))
}

pub fn save_model(path: &Path, model: &ClassifierModel) -> CliResult<()> {
    save(path, encode("model", Wrapped { inner: model })?)
}

pub fn load_model(path: &Path) -> CliResult<ClassifierModel> {
    let w: Wrapped<ClassifierModel> = load(path, "model")?;
    w.inner.validate().map_err(|e| CliError::from(e).at(path))?;
    Ok(w.inner)
}

pub fn save_whitening(path: &Path, w: &WhiteningTransform) -> CliResult<()> {
    save(path, encode("whitening", Wrapped { inner: w })?)
}

pub fn load_whitening(path: &Path) -> CliResult<WhiteningTransform> {
    let w: Wrapped<WhiteningTransform> = load(path, "whitening")?;
    w.inner.validate().map_err(|e| CliError::from(e).at(path))?;
    Ok(w.inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ewtseg_core::bank::auto_gamma;
    use ewtseg_core::spectral::Axis;
    use std::f64::consts::PI;

    #[test]
    fn bank_round_trip() {
        let scales = BoundarySet::new(vec![0.0, 0.7, PI], Axis::Radial, PI).unwrap();
        let angles =
            BoundarySet::with_origin(vec![0.0, 1.1, 2.0, PI], Axis::Angular, PI, 0.3).unwrap();
        let cfg = auto_gamma(&scales, &angles).unwrap();
        let bank = build_bank(&scales, &angles, &cfg, 24, 16).unwrap();
        let text = encode_bank(&bank).unwrap();
        let back = decode_bank(&text).unwrap();
        assert_eq!(back.scales(), bank.scales());
        assert_eq!(back.angles(), bank.angles());
        assert_eq!(back.config(), bank.config());
        assert_eq!(back.filters(), bank.filters());
        assert_eq!(encode_bank(&back).unwrap(), text);
    }

    #[test]
    fn invalid_documents_are_rejected() {
        let w = WhiteningTransform {
            mean: vec![0.0, 1.0],
            matrix: vec![1.0, 0.0, 0.0, 1.0],
        };
        let text = encode("whitening", Wrapped { inner: &w }).unwrap();
        assert!(decode::<BankBody>("bank", &text).is_err());
        let bad = text.replace("\"version\": 1", "\"version\": 7");
        assert!(decode::<Wrapped<WhiteningTransform>>("whitening", &bad).is_err());
        let unsorted = r#"{"format":"bank","version":1,"width":8,"height":8,
            "scales":{"boundaries":[0.0,2.0,1.0,3.141592653589793],"axis":"radial","domain_max":3.141592653589793},
            "angles":{"boundaries":[0.0,3.141592653589793],"axis":"angular","domain_max":3.141592653589793},
            "config":{"gamma":0.05,"delta_theta":0.1}}"#;
        assert!(decode_bank(unsorted).is_err());
    }
}
