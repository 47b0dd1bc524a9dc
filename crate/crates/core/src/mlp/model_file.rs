//! Plain-text model file.
//!
//! ```text
//! LEGIMPACT-MLP
//! version 1
//! layers 4 26 26 26 26 26 26 2
//! activation tansig
//! input_scale <4 values>
//! input_offset <4 values>
//! output_scale <2 values>
//! output_offset <2 values>
//! weights 26 4        # rows cols, then `rows` lines of `cols` values
//! ...
//! biases 26           # then one line of values
//! ...                 # repeated per layer
//! end
//! ```
//!
//! Values are space separated and written in shortest round-trip form, so a
//! saved and reloaded network is bit-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::network::Network;
use super::normalize::Normalizer;
use super::MlpError;

pub const MODEL_MAGIC: &str = "LEGIMPACT-MLP";
pub const MODEL_VERSION: u32 = 1;
/// Upper bound on any declared width; larger headers are rejected before
/// anything is allocated.
pub const MAX_LAYER_WIDTH: usize = 4096;
pub const MAX_LAYERS: usize = 64;

pub fn to_model_string(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "version {MODEL_VERSION}");
    let widths: Vec<String> = net.spec().widths().iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "layers {}", widths.join(" "));
    let _ = writeln!(out, "activation tansig");
    write_row(&mut out, "input_scale", net.input_normalizer().scale());
    write_row(&mut out, "input_offset", net.input_normalizer().offset());
    write_row(&mut out, "output_scale", net.output_normalizer().scale());
    write_row(&mut out, "output_offset", net.output_normalizer().offset());
    for layer in net.layers() {
        let _ = writeln!(out, "weights {} {}", layer.outputs(), layer.inputs());
        for row in layer.weights().chunks_exact(layer.inputs()) {
            write_values(&mut out, row);
        }
        let _ = writeln!(out, "biases {}", layer.outputs());
        write_values(&mut out, layer.biases());
    }
    out.push_str("end\n");
    out
}

fn write_row(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push(' ');
    write_values(out, values);
}

fn write_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Result<(usize, &'a str), MlpError> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                return Ok((i + 1, l));
            }
        }
        Err(MlpError::DimMismatch("unexpected end of model file".into()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), MlpError> {
        let (n, line) = self.next()?;
        let rest = line
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| MlpError::Parse {
                line: n,
                msg: format!("expected `{key}`"),
            })?;
        Ok((n, rest.trim()))
    }
}

fn parse_values(line: usize, text: &str, expected: usize) -> Result<Vec<f64>, MlpError> {
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        if out.len() == expected {
            return Err(MlpError::DimMismatch(format!(
                "line {line}: more than {expected} values"
            )));
        }
        let v: f64 = tok.parse().map_err(|_| MlpError::Parse {
            line,
            msg: format!("bad number `{tok}`"),
        })?;
        if !v.is_finite() {
            return Err(MlpError::Parse {
                line,
                msg: "non-finite value".into(),
            });
        }
        out.push(v);
    }
    if out.len() != expected {
        return Err(MlpError::DimMismatch(format!(
            "line {line}: expected {expected} values, found {}",
            out.len()
        )));
    }
    Ok(out)
}

fn parse_dims(line: usize, text: &str) -> Result<Vec<usize>, MlpError> {
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        let w: usize = tok.parse().map_err(|_| MlpError::Parse {
            line,
            msg: format!("bad width `{tok}`"),
        })?;
        if w == 0 || w > MAX_LAYER_WIDTH {
            return Err(MlpError::DimMismatch(format!("line {line}: width {w} out of range")));
        }
        out.push(w);
        if out.len() > MAX_LAYERS + 1 {
            return Err(MlpError::DimMismatch(format!("line {line}: too many layers")));
        }
    }
    Ok(out)
}

pub fn from_model_str(text: &str) -> Result<Network, MlpError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    match lines.next() {
        Ok((_, l)) if l == MODEL_MAGIC => {}
        _ => return Err(MlpError::BadMagic),
    }
    if !text.trim_end().ends_with("\nend") {
        return Err(MlpError::DimMismatch("model file is truncated (no `end` line)".into()));
    }
    let (n, v) = lines.keyed("version")?;
    let found: u32 = v.parse().map_err(|_| MlpError::Parse {
        line: n,
        msg: "bad version".into(),
    })?;
    if found != MODEL_VERSION {
        return Err(MlpError::VersionMismatch {
            found,
            expected: MODEL_VERSION,
        });
    }
    let (n, dims) = lines.keyed("layers")?;
    let widths = parse_dims(n, dims)?;
    if widths.len() < 3 {
        return Err(MlpError::DimMismatch(format!(
            "line {n}: need input, at least one hidden and an output width"
        )));
    }
    let (n, act) = lines.keyed("activation")?;
    if act != "tansig" {
        return Err(MlpError::Parse {
            line: n,
            msg: format!("unsupported activation `{act}`"),
        });
    }
    let (input_dim, output_dim) = (widths[0], widths[widths.len() - 1]);
    let mut norm_row = |key: &str, dim: usize| -> Result<Vec<f64>, MlpError> {
        let (n, rest) = lines.keyed(key)?;
        parse_values(n, rest, dim)
    };
    let in_scale = norm_row("input_scale", input_dim)?;
    let in_offset = norm_row("input_offset", input_dim)?;
    let out_scale = norm_row("output_scale", output_dim)?;
    let out_offset = norm_row("output_offset", output_dim)?;
    let bad_norm = || MlpError::Parse {
        line: 0,
        msg: "normaliser scale must be finite and non-zero".into(),
    };
    let input_norm = Normalizer::from_parts(in_scale, in_offset).ok_or_else(bad_norm)?;
    let output_norm = Normalizer::from_parts(out_scale, out_offset).ok_or_else(bad_norm)?;

    let mut layers = Vec::new();
    for w in widths.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let (n, shape) = lines.keyed("weights")?;
        let shape = parse_dims(n, shape)?;
        if shape != [outputs, inputs] {
            return Err(MlpError::DimMismatch(format!(
                "line {n}: weights {shape:?} do not match layer {outputs} x {inputs}"
            )));
        }
        let mut weights = Vec::new();
        for _ in 0..outputs {
            let (n, row) = lines.next()?;
            weights.extend(parse_values(n, row, inputs)?);
        }
        let (n, count) = lines.keyed("biases")?;
        if parse_dims(n, count)? != [outputs] {
            return Err(MlpError::DimMismatch(format!("line {n}: bias count mismatch")));
        }
        let (n, row) = lines.next()?;
        let biases = parse_values(n, row, outputs)?;
        layers.push(Network::layer(inputs, outputs, weights, biases));
    }
    let (n, last) = lines.next()?;
    if last != "end" {
        return Err(MlpError::Parse {
            line: n,
            msg: "expected `end`".into(),
        });
    }
    Network::from_parts(layers, input_norm, output_norm)
}

pub fn save_model(net: &Network, path: &Path) -> Result<(), MlpError> {
    std::fs::write(path, to_model_string(net)).map_err(|e| MlpError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Network, MlpError> {
    let bytes = std::fs::read(path).map_err(|e| MlpError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| MlpError::BadMagic)?;
    from_model_str(text)
}
