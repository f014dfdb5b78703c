//! Model file format.
//!
//! A UTF-8 text container, self-describing and diff-friendly:
//!
//! ```text
//! goalshift-predictor 1
//! offsets = 1,2,4,8,16,32
//! radius = 4
//! layers = 333,128,128,108
//! config.<key> = <value>        (training configuration echo, optional)
//! layer 0 weights 333 128
//! <333 lines of 128 space-separated values, input-major>
//! layer 0 bias 128
//! <one line of 128 values>
//! ...
//! ```
//!
//! Values are written in Rust's shortest round-trip decimal form, so
//! save → load reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::{join, parse_list, KvMap};

use super::mlp::Mlp;
use super::net::PredictorNet;

const MAGIC: &str = "goalshift-predictor 1";

pub fn to_text(net: &PredictorNet, config_echo: &KvMap) -> String {
    let mlp = net.mlp();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "offsets = {}", join(net.offsets()));
    let _ = writeln!(out, "radius = {}", net.radius());
    let _ = writeln!(out, "layers = {}", join(mlp.sizes()));
    for (k, v) in config_echo.iter() {
        let _ = writeln!(out, "config.{k} = {v}");
    }
    let sizes = mlp.sizes();
    for l in 0..sizes.len() - 1 {
        let (wr, br) = mlp.layer_ranges(l);
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let _ = writeln!(out, "layer {l} weights {n_in} {n_out}");
        for row in mlp.params()[wr].chunks(n_out) {
            push_row(&mut out, row);
        }
        let _ = writeln!(out, "layer {l} bias {n_out}");
        push_row(&mut out, &mlp.params()[br]);
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Parses a model file, returning the network and its configuration echo.
pub fn from_text(text: &str) -> Result<(PredictorNet, KvMap)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(Error::parse(1, format!("missing `{MAGIC}` header"))),
    }
    let mut header = KvMap::new();
    let mut echo = KvMap::new();
    let mut pending = None;
    for (n, line) in lines.by_ref() {
        if line.starts_with("layer ") {
            pending = Some((n, line));
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(n, "expected header entry"))?;
        let (k, v) = (k.trim(), v.trim());
        match k.strip_prefix("config.") {
            Some(key) => echo.set(key, v),
            None => header.set(k, v),
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| Error::parse(1, format!("missing `{k}`")));
    let offsets: Vec<u32> = parse_list("offsets", get("offsets")?)?;
    let radius: usize = crate::kv::parse_value("radius", get("radius")?)?;
    let sizes: Vec<usize> = parse_list("layers", get("layers")?)?;
    if sizes.len() < 2 {
        return Err(Error::parse(1, "need at least two layer sizes"));
    }

    let mut params = Vec::with_capacity(Mlp::param_count_for(&sizes));
    let mut next_line = pending;
    for l in 0..sizes.len() - 1 {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let (n, line) = next_line
            .take()
            .or_else(|| lines.next())
            .ok_or_else(|| Error::parse(0, "truncated model file"))?;
        if line != format!("layer {l} weights {n_in} {n_out}") {
            return Err(Error::parse(n, format!("expected weights of layer {l}")));
        }
        for _ in 0..n_in {
            read_row(&mut lines, n_out, &mut params)?;
        }
        let (n, line) = lines.next().ok_or_else(|| Error::parse(0, "truncated model file"))?;
        if line != format!("layer {l} bias {n_out}") {
            return Err(Error::parse(n, format!("expected bias of layer {l}")));
        }
        read_row(&mut lines, n_out, &mut params)?;
    }
    let mlp = Mlp::from_params(&sizes, params)?;
    Ok((PredictorNet::from_mlp(&offsets, radius, mlp)?, echo))
}

fn read_row<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, width: usize, params: &mut Vec<f64>) -> Result<()> {
    let (n, line) = lines.next().ok_or_else(|| Error::parse(0, "truncated model file"))?;
    let before = params.len();
    for tok in line.split_whitespace() {
        params.push(tok.parse().map_err(|_| Error::parse(n, format!("bad value `{tok}`")))?);
    }
    if params.len() - before != width {
        return Err(Error::parse(n, format!("expected {width} values")));
    }
    Ok(())
}

pub fn save(net: &PredictorNet, config_echo: &KvMap, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(net, config_echo)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(PredictorNet, KvMap)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}
