//! JSON weight files.
//!
//! ```json
//! {"format_version":1,"input_dim":2,"class_count":2,
//!  "layers":[{"type":"dense","in":2,"out":2,"W":[1.0,0.0,0.0,1.0],"b":[0.0,0.0]},
//!            {"type":"relu"}]}
//! ```
//!
//! `W` is the `[out, in]` matrix flattened row-major. Floats are written in
//! shortest round-trip form, so save → load → save is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classifier, Dense, Layer};
use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct WeightFile {
    format_version: u32,
    input_dim: usize,
    class_count: usize,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum LayerRecord {
    Dense {
        #[serde(rename = "in")]
        in_dim: usize,
        #[serde(rename = "out")]
        out_dim: usize,
        #[serde(rename = "W")]
        w: Vec<f64>,
        b: Vec<f64>,
    },
    Relu,
    Tanh,
}

pub fn encode_weights(net: &Classifier) -> String {
    let file = WeightFile {
        format_version: FORMAT_VERSION,
        input_dim: net.input_dim(),
        class_count: net.class_count(),
        layers: net
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => LayerRecord::Dense {
                    in_dim: d.in_dim,
                    out_dim: d.out_dim,
                    w: d.w.clone(),
                    b: d.b.clone(),
                },
                Layer::Relu => LayerRecord::Relu,
                Layer::Tanh => LayerRecord::Tanh,
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&file).expect("weight file serializes");
    s.push('\n');
    s
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn decode_weights(text: &str) -> Result<Classifier> {
    let file: WeightFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .map(|r| match r {
            LayerRecord::Dense {
                in_dim,
                out_dim,
                w,
                b,
            } => Layer::Dense(Dense {
                in_dim,
                out_dim,
                w,
                b,
            }),
            LayerRecord::Relu => Layer::Relu,
            LayerRecord::Tanh => Layer::Tanh,
        })
        .collect();
    Classifier::new(file.input_dim, file.class_count, layers)
}

pub fn save_weights(net: &Classifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(net)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Activation;

    #[test]
    fn round_trip_is_byte_identical() {
        let net = Classifier::mlp(&[5, 7, 7, 3], Activation::Tanh, 4).unwrap();
        let first = encode_weights(&net);
        let loaded = decode_weights(&first).unwrap();
        assert_eq!(loaded, net);
        assert_eq!(encode_weights(&loaded), first);
    }

    #[test]
    fn hand_written_two_layer_file() {
        let text = r#"{"format_version":1,"input_dim":3,"class_count":2,"layers":[
            {"type":"dense","in":3,"out":4,"W":[1,0,0,0,1,0,0,0,1,1,1,1],"b":[0,0,0,0.5]},
            {"type":"relu"},
            {"type":"dense","in":4,"out":2,"W":[1,0,0,0,0,1,0,0],"b":[0,0]}]}"#;
        let net = decode_weights(text).unwrap();
        assert_eq!(net.input_dim(), 3);
        assert_eq!(net.class_count(), 2);
        let widths: Vec<(usize, usize)> = net.dense_layers().map(|d| (d.in_dim, d.out_dim)).collect();
        assert_eq!(widths, vec![(3, 4), (4, 2)]);
    }

    #[test]
    fn mismatched_dims_are_schema_errors() {
        let text = r#"{"format_version":1,"input_dim":2,"class_count":2,"layers":[
            {"type":"dense","in":2,"out":3,"W":[0,0,0,0,0,0],"b":[0,0,0]},
            {"type":"dense","in":2,"out":2,"W":[0,0,0,0],"b":[0,0]}]}"#;
        assert!(matches!(decode_weights(text), Err(Error::Schema(_))));
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let text = "{\"format_version\":1,\n\"input_dim\":x}";
        match decode_weights(text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&text[offset..offset + 1], "x"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
