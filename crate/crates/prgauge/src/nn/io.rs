//! Model persistence.
//!
//! Models are stored as JSON: a header with the architecture, class count,
//! input dims, training seed, and hyperparameter assignment, plus one weight
//! entry per layer. Weights are flat little-endian `f32` arrays encoded as
//! base64 (`w` then `b`); parameterless layers get an empty string.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Layer, LayerParams, Network};
use crate::shape::Shape;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub arch: Vec<Layer>,
    pub k: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    /// Categorical hyperparameter assignment (axis name → value).
    pub hyperparams: BTreeMap<String, String>,
    /// One entry per layer: base64 of `w` then `b` as little-endian f32.
    pub weights: Vec<String>,
}

fn encode_params(p: &LayerParams) -> String {
    if p.w.is_empty() && p.b.is_empty() {
        return String::new();
    }
    let mut bytes = Vec::with_capacity((p.w.len() + p.b.len()) * 4);
    for &v in p.w.iter().chain(&p.b) {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_params(layer: &Layer, encoded: &str) -> Result<LayerParams> {
    let (nw, nb) = match *layer {
        Layer::Dense { d_in, d_out } => (d_in * d_out, d_out),
        Layer::Conv2d { c_in, c_out, kernel, .. } => (c_out * c_in * kernel * kernel, c_out),
        _ => (0, 0),
    };
    if nw == 0 {
        if !encoded.is_empty() {
            return Err(Error::invalid("weight entry for a parameterless layer"));
        }
        return Ok(LayerParams { w: Vec::new(), b: Vec::new() });
    }
    let bytes = BASE64
        .decode(encoded)
        .map_err(|e| Error::invalid(format!("bad base64 weight block: {e}")))?;
    if bytes.len() != (nw + nb) * 4 {
        return Err(Error::invalid(format!(
            "weight block holds {} bytes, expected {}",
            bytes.len(),
            (nw + nb) * 4
        )));
    }
    let floats: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(LayerParams { w: floats[..nw].to_vec(), b: floats[nw..].to_vec() })
}

pub fn save_model(
    net: &Network,
    seed: u64,
    hyperparams: &BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    let doc = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        arch: net.layers().to_vec(),
        k: net.num_classes(),
        dims: net.input_shape().dims(),
        seed,
        hyperparams: hyperparams.clone(),
        weights: net.params().iter().map(encode_params).collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Network, ModelFile)> {
    let doc: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::invalid(format!(
            "unsupported model format version {}",
            doc.format_version
        )));
    }
    if doc.weights.len() != doc.arch.len() {
        return Err(Error::invalid(format!(
            "{} weight entries for {} layers",
            doc.weights.len(),
            doc.arch.len()
        )));
    }
    let params = doc
        .arch
        .iter()
        .zip(&doc.weights)
        .map(|(layer, enc)| decode_params(layer, enc))
        .collect::<Result<Vec<_>>>()?;
    let shape = Shape::from_dims(&doc.dims)?;
    let net = Network::with_params(doc.arch.clone(), shape, params)?;
    if net.num_classes() != doc.k {
        return Err(Error::invalid(format!(
            "header says {} classes but the architecture produces {}",
            doc.k,
            net.num_classes()
        )));
    }
    Ok((net, doc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn round_trip_preserves_f32_quantized_weights() {
        let mut r = rng::stream(2, &[4]);
        let net = Network::new(
            vec![
                Layer::Conv2d { c_in: 3, c_out: 4, kernel: 3, stride: 1 },
                Layer::Relu,
                Layer::Flatten,
                Layer::Dense { d_in: 4 * 8 * 8, d_out: 4 },
                Layer::Softmax,
            ],
            Shape::Image { c: 3, h: 10, w: 10 },
            &mut r,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut hp = BTreeMap::new();
        hp.insert("depth".to_string(), "1".to_string());
        save_model(&net, 33, &hp, &path).unwrap();
        let (back, doc) = load_model(&path).unwrap();
        assert_eq!(doc.seed, 33);
        assert_eq!(doc.hyperparams, hp);
        assert_eq!(back.layers(), net.layers());
        // weights survive up to the f32 quantization applied on save
        for (a, b) in back.params().iter().zip(net.params()) {
            for (x, y) in a.w.iter().zip(&b.w) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
        // saving the loaded model again is byte-stable
        let path2 = dir.path().join("model2.json");
        save_model(&back, 33, &hp, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupt_weight_block_rejected() {
        let mut r = rng::stream(2, &[5]);
        let net = Network::new(
            vec![Layer::Dense { d_in: 2, d_out: 2 }, Layer::Softmax],
            Shape::Flat(2),
            &mut r,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&net, 1, &BTreeMap::new(), &path).unwrap();
        let mut doc: ModelFile =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        doc.weights[0] = BASE64.encode([0u8; 4]); // wrong length
        fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(load_model(&path).is_err());
    }
}
