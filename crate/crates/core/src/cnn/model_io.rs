//! Plain-text model files. Floats are written in shortest round-trip form, so
//! save followed by load reproduces every parameter bit for bit.

use std::fmt::Write as _;

use super::config::{LayerKind, LayerSpec, NetworkConfig};
use super::network::{LayerParams, Network};
use crate::error::{Error, Result};

const MAGIC: &str = "ppgcnn-model";
const VERSION: u32 = 1;

impl Network {
    /// Serializes config, caller metadata (`meta` key/value pairs) and parameters.
    pub fn to_model_text(&self, meta: &[(String, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "frame={}", self.config.frame_size);
        let _ = writeln!(out, "activation={}", self.config.activation);
        let _ = writeln!(out, "seed={}", self.config.seed);
        for (k, v) in meta {
            let _ = writeln!(out, "meta {k}={v}");
        }
        for spec in &self.config.layers {
            match spec.kind {
                LayerKind::Conv1D { kernel_size, subsample } => {
                    let _ = writeln!(out, "layer conv {} {} {}", spec.neurons, kernel_size, subsample);
                }
                LayerKind::Mlp => {
                    let _ = writeln!(out, "layer mlp {}", spec.neurons);
                }
                LayerKind::Output => {
                    let _ = writeln!(out, "layer output {}", spec.neurons);
                }
            }
        }
        for p in &self.params {
            write_values(&mut out, "w", &p.weights);
            write_values(&mut out, "b", &p.biases);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_model_text(text: &str) -> Result<(Network, Vec<(String, String)>)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, header) = lines.next().ok_or_else(|| fmt_err(1, "empty model file"))?;
        if header != format!("{MAGIC} {VERSION}") {
            return Err(fmt_err(ln, &format!("unsupported header {header:?}")));
        }
        let mut frame_size = None;
        let mut activation = None;
        let mut seed = None;
        let mut meta = Vec::new();
        let mut layers = Vec::new();
        let mut weights: Vec<Vec<f64>> = Vec::new();
        let mut biases: Vec<Vec<f64>> = Vec::new();
        let mut ended = false;
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once('=').ok_or_else(|| fmt_err(ln, "meta needs key=value"))?;
                meta.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = line.strip_prefix("layer ") {
                layers.push(parse_layer(ln, rest)?);
            } else if let Some(rest) = line.strip_prefix("w") {
                weights.push(parse_values(ln, rest)?);
            } else if let Some(rest) = line.strip_prefix("b") {
                biases.push(parse_values(ln, rest)?);
            } else if let Some((k, v)) = line.split_once('=') {
                let bad = || fmt_err(ln, &format!("bad value for {k}"));
                match k {
                    "frame" => frame_size = Some(v.parse().map_err(|_| bad())?),
                    "activation" => activation = Some(v.parse().map_err(|_| bad())?),
                    "seed" => seed = Some(v.parse().map_err(|_| bad())?),
                    _ => return Err(fmt_err(ln, &format!("unknown key {k:?}"))),
                }
            } else {
                return Err(fmt_err(ln, &format!("unrecognized line {line:?}")));
            }
        }
        if !ended {
            return Err(fmt_err(text.lines().count(), "truncated model file (no end marker)"));
        }
        if weights.len() != biases.len() {
            return Err(fmt_err(0, "weight/bias block count mismatch"));
        }
        let config = NetworkConfig {
            layers,
            frame_size: frame_size.ok_or_else(|| fmt_err(0, "missing frame"))?,
            activation: activation.ok_or_else(|| fmt_err(0, "missing activation"))?,
            seed: seed.ok_or_else(|| fmt_err(0, "missing seed"))?,
        };
        let params = weights
            .into_iter()
            .zip(biases)
            .map(|(weights, biases)| LayerParams { weights, biases })
            .collect();
        Ok((Network::from_params(config, params)?, meta))
    }
}

fn write_values(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        let _ = write!(out, " {v:e}");
    }
    out.push('\n');
}

fn parse_values(ln: usize, rest: &str) -> Result<Vec<f64>> {
    rest.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| fmt_err(ln, &format!("bad number {t:?}"))))
        .collect()
}

fn parse_layer(ln: usize, rest: &str) -> Result<LayerSpec> {
    let parts: Vec<&str> = rest.split_whitespace().collect();
    let num = |s: &str| s.parse::<usize>().map_err(|_| fmt_err(ln, &format!("bad layer field {s:?}")));
    match parts.as_slice() {
        ["conv", n, f, ss] => Ok(LayerSpec::conv(num(n)?, num(f)?, num(ss)?)),
        ["mlp", n] => Ok(LayerSpec::mlp(num(n)?)),
        ["output", n] => Ok(LayerSpec::output(num(n)?)),
        _ => Err(fmt_err(ln, &format!("bad layer line {rest:?}"))),
    }
}

fn fmt_err(line: usize, msg: &str) -> Error {
    Error::ModelFormat {
        line,
        msg: msg.to_string(),
    }
}
