//! Text checkpoint: a comma-separated header describing every tensor,
//! followed by the values, one matrix row per line.
//!
//! ```text
//! coaching-checkpoint,1
//! obs_dim,4
//! act_dim,1
//! obs_norm_count,12345
//! layer,policy,0,64,4        # net, index, rows (out), cols (in)
//! ...
//! vector,log_std,1           # name, length
//! vector,obs_mean,4
//! vector,obs_m2,4
//! end_header
//! <layers in header order: `rows` lines of `cols` weights, then one bias line>
//! <vectors in header order: one line each>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a save/load cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::Mlp;
use super::norm::RunningNorm;
use super::policy::{AgentParams, GaussianPolicy, ValueNet};
use crate::error::{Error, Result};

const MAGIC: &str = "coaching-checkpoint";
const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:?}").expect("writing to a String cannot fail");
    }
    s
}

fn layer_headers(out: &mut String, net_name: &str, net: &Mlp) {
    for (i, w) in net.sizes().windows(2).enumerate() {
        let _ = writeln!(out, "layer,{net_name},{i},{},{}", w[1], w[0]);
    }
}

fn layer_rows(out: &mut String, net: &Mlp) {
    let mut offset = 0;
    for w in net.sizes().windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        for row in net.params()[offset..offset + fan_in * fan_out].chunks_exact(fan_in) {
            out.push_str(&join(row));
            out.push('\n');
        }
        offset += fan_in * fan_out;
        out.push_str(&join(&net.params()[offset..offset + fan_out]));
        out.push('\n');
        offset += fan_out;
    }
}

pub fn to_string(params: &AgentParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC},{VERSION}");
    let _ = writeln!(out, "obs_dim,{}", params.obs_dim());
    let _ = writeln!(out, "act_dim,{}", params.policy.act_dim());
    let _ = writeln!(out, "obs_norm_count,{:?}", params.obs_norm.count);
    layer_headers(&mut out, "policy", &params.policy.mean_net);
    layer_headers(&mut out, "value", &params.value.net);
    let _ = writeln!(out, "vector,log_std,{}", params.policy.log_std.len());
    let _ = writeln!(out, "vector,obs_mean,{}", params.obs_norm.mean.len());
    let _ = writeln!(out, "vector,obs_m2,{}", params.obs_norm.m2.len());
    out.push_str("end_header\n");
    layer_rows(&mut out, &params.policy.mean_net);
    layer_rows(&mut out, &params.value.net);
    for v in [
        &params.policy.log_std,
        &params.obs_norm.mean,
        &params.obs_norm.m2,
    ] {
        out.push_str(&join(v));
        out.push('\n');
    }
    out
}

pub fn save(params: &AgentParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<AgentParams> {
    let text = std::fs::read_to_string(path)?;
    from_str(&text).map_err(|message| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>), String> {
        loop {
            let (i, line) = self
                .inner
                .next()
                .ok_or_else(|| "unexpected end of file".to_string())?;
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Ok((i + 1, line.split(',').map(str::trim).collect()));
            }
        }
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>, String> {
        let (lineno, fields) = self.next_fields()?;
        if fields.len() != expected {
            return Err(format!(
                "line {lineno}: expected {expected} values, found {}",
                fields.len()
            ));
        }
        fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| format!("line {lineno}: bad number `{f}`: {e}"))
            })
            .collect()
    }
}

fn parse_usize(lineno: usize, s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|e| format!("line {lineno}: bad integer `{s}`: {e}"))
}

fn expect_key(lineno: usize, fields: &[&str], key: &str, arity: usize) -> Result<(), String> {
    if fields.first() != Some(&key) || fields.len() != arity {
        return Err(format!(
            "line {lineno}: expected `{key}` with {} fields",
            arity - 1
        ));
    }
    Ok(())
}

pub fn from_str(text: &str) -> Result<AgentParams, String> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (n, f) = lines.next_fields()?;
    expect_key(n, &f, MAGIC, 2)?;
    if parse_usize(n, f[1])? != VERSION as usize {
        return Err(format!("unsupported checkpoint version {}", f[1]));
    }
    let (n, f) = lines.next_fields()?;
    expect_key(n, &f, "obs_dim", 2)?;
    let obs_dim = parse_usize(n, f[1])?;
    let (n, f) = lines.next_fields()?;
    expect_key(n, &f, "act_dim", 2)?;
    let act_dim = parse_usize(n, f[1])?;
    let (n, f) = lines.next_fields()?;
    expect_key(n, &f, "obs_norm_count", 2)?;
    let count: f64 = f[1]
        .parse()
        .map_err(|e| format!("line {n}: bad count: {e}"))?;

    let mut policy_shapes = Vec::new();
    let mut value_shapes = Vec::new();
    let mut vectors = Vec::new();
    loop {
        let (n, f) = lines.next_fields()?;
        match f[0] {
            "layer" => {
                expect_key(n, &f, "layer", 5)?;
                let shape = (parse_usize(n, f[3])?, parse_usize(n, f[4])?);
                match f[1] {
                    "policy" => policy_shapes.push(shape),
                    "value" => value_shapes.push(shape),
                    other => return Err(format!("line {n}: unknown network `{other}`")),
                }
            }
            "vector" => {
                expect_key(n, &f, "vector", 3)?;
                vectors.push((f[1].to_string(), parse_usize(n, f[2])?));
            }
            "end_header" => break,
            other => return Err(format!("line {n}: unknown header entry `{other}`")),
        }
    }

    let mut read_net = |shapes: &[(usize, usize)], name: &str| -> Result<Mlp, String> {
        let sizes = sizes_from_shapes(shapes, name)?;
        let mut params = Vec::with_capacity(Mlp::param_count(&sizes));
        for &(rows, cols) in shapes {
            for _ in 0..rows {
                params.extend(lines.floats(cols)?);
            }
            params.extend(lines.floats(rows)?);
        }
        Mlp::from_parts(sizes, params).ok_or_else(|| format!("{name}: inconsistent layer sizes"))
    };
    let mean_net = read_net(&policy_shapes, "policy")?;
    let value_net = read_net(&value_shapes, "value")?;

    let mut log_std = None;
    let mut mean = None;
    let mut m2 = None;
    for (name, len) in vectors {
        let values = lines.floats(len)?;
        match name.as_str() {
            "log_std" => log_std = Some(values),
            "obs_mean" => mean = Some(values),
            "obs_m2" => m2 = Some(values),
            other => return Err(format!("unknown vector `{other}`")),
        }
    }
    let log_std = log_std.ok_or("missing log_std")?;
    let mean = mean.ok_or("missing obs_mean")?;
    let m2 = m2.ok_or("missing obs_m2")?;

    if mean_net.input_dim() != obs_dim
        || value_net.input_dim() != obs_dim
        || mean.len() != obs_dim
        || m2.len() != obs_dim
    {
        return Err(format!("tensor shapes disagree with obs_dim {obs_dim}"));
    }
    if mean_net.output_dim() != act_dim || log_std.len() != act_dim || value_net.output_dim() != 1 {
        return Err(format!("tensor shapes disagree with act_dim {act_dim}"));
    }
    Ok(AgentParams {
        policy: GaussianPolicy { mean_net, log_std },
        value: ValueNet { net: value_net },
        obs_norm: RunningNorm { count, mean, m2 },
    })
}

fn sizes_from_shapes(shapes: &[(usize, usize)], name: &str) -> Result<Vec<usize>, String> {
    let first = shapes.first().ok_or_else(|| format!("{name}: no layers"))?;
    let mut sizes = vec![first.1];
    for (i, &(rows, cols)) in shapes.iter().enumerate() {
        if cols != *sizes.last().expect("non-empty") {
            return Err(format!(
                "{name}: layer {i} input width {cols} does not chain"
            ));
        }
        sizes.push(rows);
    }
    Ok(sizes)
}
