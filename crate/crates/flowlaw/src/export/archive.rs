//! Self-describing text archive for trained models.
//!
//! Weights, biases, normalization ranges, and training provenance travel
//! together; numbers are written with 17 significant digits so a
//! save -> load -> save cycle is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlp::{Activation, DenseLayer, MlpModel, NormalizationRanges};

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

const MAGIC: &str = "flowlaw-archive";

/// Where the weights came from: training seed, iteration count, and the
/// SHA-256 of the training dataset's canonical CSV form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub iterations: u64,
    pub dataset_hash: String,
}

/// A model plus its provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArchive {
    pub model: MlpModel,
    pub provenance: Provenance,
}

/// 17 significant digits; enough to reproduce any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::archive(format!("{field}: malformed number `{s}`")))
}

impl ModelArchive {
    pub fn new(model: MlpModel, provenance: Provenance) -> Self {
        ModelArchive { model, provenance }
    }

    pub fn to_text(&self) -> String {
        let model = &self.model;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "schema_version {ARCHIVE_SCHEMA_VERSION}");
        let _ = writeln!(out, "activation {}", model.activation.name());
        let widths: Vec<String> = model.widths().iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "widths {}", widths.join(" "));
        let r = &model.ranges;
        for (key, v) in [
            ("eps_p_min", r.eps_p_min),
            ("eps_p_max", r.eps_p_max),
            ("log_rate_min", r.log_rate_min),
            ("log_rate_max", r.log_rate_max),
            ("t_min", r.t_min),
            ("t_max", r.t_max),
            ("sigma_min", r.sigma_min),
            ("sigma_max", r.sigma_max),
            ("eps_dot_ref", r.eps_dot_ref),
        ] {
            let _ = writeln!(out, "ranges {key} {}", fmt_f64(v));
        }
        for (k, layer) in model.hidden.iter().enumerate() {
            let _ = writeln!(
                out,
                "hidden {} weights {} {}",
                k + 1,
                layer.out_width(),
                layer.in_width
            );
            for i in 0..layer.out_width() {
                let row: Vec<String> = (0..layer.in_width)
                    .map(|j| fmt_f64(layer.weight(i, j)))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
            let _ = writeln!(out, "hidden {} bias {}", k + 1, layer.out_width());
            let row: Vec<String> = layer.bias.iter().map(|&b| fmt_f64(b)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        let _ = writeln!(out, "output weights {}", model.out_weights.len());
        let row: Vec<String> = model.out_weights.iter().map(|&w| fmt_f64(w)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
        let _ = writeln!(out, "output bias {}", fmt_f64(model.out_bias));
        let _ = writeln!(out, "provenance seed {}", self.provenance.seed);
        let _ = writeln!(out, "provenance iterations {}", self.provenance.iterations);
        let _ = writeln!(
            out,
            "provenance dataset_hash {}",
            if self.provenance.dataset_hash.is_empty() {
                "-"
            } else {
                &self.provenance.dataset_hash
            }
        );
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().peekable();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::archive(format!("missing `{MAGIC}` header")));
        }

        let mut schema_version: Option<u32> = None;
        let mut activation: Option<Activation> = None;
        let mut widths: Option<Vec<usize>> = None;
        let mut ranges: Vec<(String, f64)> = Vec::new();
        let mut hidden: Vec<DenseLayer> = Vec::new();
        let mut out_weights: Option<Vec<f64>> = None;
        let mut out_bias: Option<f64> = None;
        let mut provenance = Provenance::default();

        let parse_row = |field: &str, line: Option<&str>, expected: usize| -> Result<Vec<f64>> {
            let line =
                line.ok_or_else(|| Error::archive(format!("{field}: unexpected end of file")))?;
            let vals = line
                .split_whitespace()
                .map(|tok| parse_f64(field, tok))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != expected {
                return Err(Error::archive(format!(
                    "{field}: expected {expected} numbers, found {}",
                    vals.len()
                )));
            }
            Ok(vals)
        };

        while let Some(line) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["schema_version", v] => {
                    let v: u32 = v
                        .parse()
                        .map_err(|_| Error::archive("schema_version: malformed integer"))?;
                    if v != ARCHIVE_SCHEMA_VERSION {
                        return Err(Error::archive(format!(
                            "schema_version {v} unsupported (expected {ARCHIVE_SCHEMA_VERSION})"
                        )));
                    }
                    schema_version = Some(v);
                }
                ["activation", name] => activation = Some(Activation::parse(name)?),
                ["widths", rest @ ..] => {
                    let w = rest
                        .iter()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| Error::archive("widths: malformed integer"))
                        })
                        .collect::<Result<Vec<usize>>>()?;
                    widths = Some(w);
                }
                ["ranges", key, value] => {
                    ranges.push((key.to_string(), parse_f64(&format!("ranges {key}"), value)?));
                }
                ["hidden", idx, "weights", rows, cols] => {
                    let field = format!("hidden {idx} weights");
                    let rows: usize = rows
                        .parse()
                        .map_err(|_| Error::archive(format!("{field}: malformed shape")))?;
                    let cols: usize = cols
                        .parse()
                        .map_err(|_| Error::archive(format!("{field}: malformed shape")))?;
                    let mut weights = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        weights.extend(parse_row(&field, lines.next(), cols)?);
                    }
                    hidden.push(DenseLayer {
                        weights,
                        bias: Vec::new(),
                        in_width: cols,
                    });
                }
                ["hidden", idx, "bias", count] => {
                    let field = format!("hidden {idx} bias");
                    let count: usize = count
                        .parse()
                        .map_err(|_| Error::archive(format!("{field}: malformed shape")))?;
                    let layer = hidden
                        .last_mut()
                        .ok_or_else(|| Error::archive(format!("{field} precedes its weights")))?;
                    layer.bias = parse_row(&field, lines.next(), count)?;
                }
                ["output", "weights", count] => {
                    let count: usize = count
                        .parse()
                        .map_err(|_| Error::archive("output weights: malformed shape"))?;
                    out_weights = Some(parse_row("output weights", lines.next(), count)?);
                }
                ["output", "bias", value] => {
                    out_bias = Some(parse_f64("output bias", value)?);
                }
                ["provenance", "seed", v] => {
                    provenance.seed = v
                        .parse()
                        .map_err(|_| Error::archive("provenance seed: malformed integer"))?;
                }
                ["provenance", "iterations", v] => {
                    provenance.iterations = v
                        .parse()
                        .map_err(|_| Error::archive("provenance iterations: malformed integer"))?;
                }
                ["provenance", "dataset_hash", v] => {
                    provenance.dataset_hash = if *v == "-" { String::new() } else { v.to_string() };
                }
                _ => {
                    return Err(Error::archive(format!("unrecognized line `{line}`")));
                }
            }
        }

        if schema_version.is_none() {
            return Err(Error::archive("schema_version required"));
        }
        let activation = activation.ok_or_else(|| Error::archive("activation required"))?;
        let widths = widths.ok_or_else(|| Error::archive("widths required"))?;
        if ranges.is_empty() {
            return Err(Error::archive("ranges required"));
        }
        let mut range_of = |key: &str| -> Result<f64> {
            ranges
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::archive(format!("ranges {key} required")))
        };
        let ranges = NormalizationRanges {
            eps_p_min: range_of("eps_p_min")?,
            eps_p_max: range_of("eps_p_max")?,
            log_rate_min: range_of("log_rate_min")?,
            log_rate_max: range_of("log_rate_max")?,
            t_min: range_of("t_min")?,
            t_max: range_of("t_max")?,
            sigma_min: range_of("sigma_min")?,
            sigma_max: range_of("sigma_max")?,
            eps_dot_ref: range_of("eps_dot_ref")?,
        };
        let out_weights = out_weights.ok_or_else(|| Error::archive("output weights required"))?;
        let out_bias = out_bias.ok_or_else(|| Error::archive("output bias required"))?;
        for (k, layer) in hidden.iter().enumerate() {
            if layer.bias.is_empty() {
                return Err(Error::archive(format!("hidden {} bias required", k + 1)));
            }
        }

        let model = MlpModel::new(hidden, activation, out_weights, out_bias, ranges)
            .map_err(|e| Error::archive(format!("inconsistent archive: {e}")))?;
        let declared: Vec<usize> = model.widths();
        if declared != widths {
            return Err(Error::archive(format!(
                "widths {widths:?} do not match stored layers {declared:?}"
            )));
        }
        Ok(ModelArchive { model, provenance })
    }
}

/// Write `model` (plus provenance) to `path` in the schema-1 text format.
pub fn save_model(model: &MlpModel, provenance: &Provenance, path: impl AsRef<Path>) -> Result<()> {
    let archive = ModelArchive::new(model.clone(), provenance.clone());
    std::fs::write(path, archive.to_text())?;
    Ok(())
}

/// Read a model archive written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArchive> {
    ModelArchive::from_text(&std::fs::read_to_string(path)?)
}
