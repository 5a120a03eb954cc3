//! Self-describing text checkpoints with bit-exact weight round trips.
//!
//! Format:
//!
//! ```text
//! bpskfnn-checkpoint v1
//! depth=3
//! half_width=3
//! input_dim=1
//! head=linear
//! init=he
//! seed=42
//! layer=1 rows=6 cols=1
//! 1.2345678901234567e0
//! ...
//! ```
//!
//! One weight per line in row-major order, printed with 17 significant
//! digits so every f64 survives the round trip exactly.

use std::path::Path;

use crate::error::Error;
use crate::fnn::{FnnArchitecture, FnnModel, Head};

const MAGIC: &str = "bpskfnn-checkpoint v1";

/// Initializer/seed provenance carried alongside the weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    /// e.g. "he", "lecun", or "unknown".
    pub init: String,
    pub seed: u64,
}

impl Default for CheckpointMeta {
    fn default() -> Self {
        CheckpointMeta { init: "unknown".into(), seed: 0 }
    }
}

pub fn render_checkpoint(model: &FnnModel, meta: &CheckpointMeta) -> String {
    let arch = &model.arch;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("depth={}\n", arch.depth));
    out.push_str(&format!("half_width={}\n", arch.half_width));
    out.push_str(&format!("input_dim={}\n", arch.input_dim));
    out.push_str(&format!(
        "head={}\n",
        match arch.head {
            Head::Linear => "linear",
            Head::Tanh => "tanh",
        }
    ));
    out.push_str(&format!("init={}\n", meta.init));
    out.push_str(&format!("seed={}\n", meta.seed));
    for (k, w) in model.weights.iter().enumerate() {
        out.push_str(&format!("layer={} rows={} cols={}\n", k + 1, w.len(), w[0].len()));
        for row in w {
            for &v in row {
                out.push_str(&format!("{v:.16e}\n"));
            }
        }
    }
    out
}

pub fn parse_checkpoint(text: &str) -> Result<(FnnModel, CheckpointMeta), Error> {
    let mut lines = text.lines();
    let ctx = "checkpoint";
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::parse(ctx, format!("missing '{MAGIC}' header")));
    }
    let mut depth = None;
    let mut half_width = None;
    let mut input_dim = None;
    let mut head = None;
    let mut meta = CheckpointMeta::default();
    let mut peeked: Option<&str> = None;
    for line in lines.by_ref() {
        let line = line.trim();
        if line.starts_with("layer=") {
            peeked = Some(line);
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(ctx, format!("expected key=value, got '{line}'")))?;
        match key {
            "depth" => depth = Some(parse_field(ctx, key, value)?),
            "half_width" => half_width = Some(parse_field(ctx, key, value)?),
            "input_dim" => input_dim = Some(parse_field(ctx, key, value)?),
            "head" => {
                head = Some(match value {
                    "linear" => Head::Linear,
                    "tanh" => Head::Tanh,
                    other => return Err(Error::parse(ctx, format!("unknown head '{other}'"))),
                })
            }
            "init" => meta.init = value.to_string(),
            "seed" => meta.seed = parse_field(ctx, key, value)?,
            other => return Err(Error::parse(ctx, format!("unknown field '{other}'"))),
        }
    }
    let missing = |name: &str| Error::parse(ctx, format!("missing field '{name}'"));
    let arch = FnnArchitecture::new(
        depth.ok_or_else(|| missing("depth"))?,
        half_width.ok_or_else(|| missing("half_width"))?,
        input_dim.ok_or_else(|| missing("input_dim"))?,
        head.ok_or_else(|| missing("head"))?,
    )?;

    let mut weights = Vec::with_capacity(arch.depth);
    for k in 1..=arch.depth {
        let header = match peeked.take() {
            Some(h) => h,
            None => lines
                .next()
                .map(str::trim)
                .ok_or_else(|| Error::parse(ctx, format!("truncated before layer {k}")))?,
        };
        let (rows, cols) = parse_layer_header(ctx, header, k)?;
        let expect = arch.weight_shape(k);
        if (rows, cols) != expect {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint layer {k} is {rows}x{cols}, architecture expects {}x{}",
                expect.0, expect.1
            )));
        }
        let mut w = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for c in 0..cols {
                let line = lines.next().map(str::trim).ok_or_else(|| {
                    Error::parse(ctx, format!("truncated in layer {k} at row {r} col {c}"))
                })?;
                row.push(
                    line.parse::<f64>()
                        .map_err(|e| Error::parse(ctx, format!("layer {k} weight '{line}': {e}")))?,
                );
            }
            w.push(row);
        }
        weights.push(w);
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        if extra.trim().starts_with("layer=") {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has more weight blocks than depth {}",
                arch.depth
            )));
        }
        return Err(Error::parse(ctx, format!("trailing content '{}'", extra.trim())));
    }
    Ok((FnnModel::new(arch, weights)?, meta))
}

fn parse_layer_header(ctx: &str, line: &str, k: usize) -> Result<(usize, usize), Error> {
    let mut layer = None;
    let mut rows = None;
    let mut cols = None;
    for part in line.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(ctx, format!("bad layer header '{line}'")))?;
        match key {
            "layer" => layer = Some(parse_field(ctx, key, value)?),
            "rows" => rows = Some(parse_field(ctx, key, value)?),
            "cols" => cols = Some(parse_field(ctx, key, value)?),
            other => return Err(Error::parse(ctx, format!("bad layer header key '{other}'"))),
        }
    }
    if layer != Some(k) {
        return Err(Error::parse(ctx, format!("expected layer {k} header, got '{line}'")));
    }
    match (rows, cols) {
        (Some(r), Some(c)) if r > 0 && c > 0 => Ok((r, c)),
        _ => Err(Error::parse(ctx, format!("bad layer header '{line}'"))),
    }
}

fn parse_field<T: std::str::FromStr>(ctx: &str, key: &str, value: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::parse(ctx, format!("field '{key}': {e}")))
}

pub fn save_checkpoint(model: &FnnModel, meta: &CheckpointMeta, path: &Path) -> Result<(), Error> {
    std::fs::write(path, render_checkpoint(model, meta))
        .map_err(|e| Error::io(format!("writing checkpoint {}", path.display()), e))
}

pub fn load_checkpoint(path: &Path) -> Result<(FnnModel, CheckpointMeta), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
    parse_checkpoint(&text)
}
