//! Attribution export records.
//!
//! One record is a text header followed by the values as f64 LE. Records
//! can be concatenated into a single archive file.
//!
//! ```text
//! GNLAB-ATTR1\n
//! sample <id>\n
//! class <c>\n
//! method <name>\n
//! enhancer <name>\n
//! seed <u64>\n
//! config none | config sigma_sg=<f> sigma_ng=<f> n=<N> m=<M> base_seed=<u64> scope=<all|weights> averaging=<post_abs|pre_abs> shared=<0|1>\n
//! shape <d0>x<d1>...\n
//! end\n
//! <values>
//! ```

use super::{Attribution, Enhancer, Method};
use crate::enhance::{Averaging, EnhancerConfig};
use crate::format::{parse_keyed, parse_num, LineReader};
use crate::nn::NoiseScope;
use crate::{Error, Result, Tensor};

pub const ATTRIBUTION_MAGIC: &[u8] = b"GNLAB-ATTR1\n";

const MAX_VALUES: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRecord {
    pub sample_id: u64,
    pub class_index: usize,
    pub attribution: Attribution,
}

pub fn encode_attribution(record: &AttributionRecord) -> Vec<u8> {
    let a = &record.attribution;
    let shape: Vec<String> = a.values.shape().iter().map(|s| s.to_string()).collect();
    let config = match &a.config {
        None => "none".to_string(),
        Some(c) => format!(
            "sigma_sg={} sigma_ng={} n={} m={} base_seed={} scope={} averaging={} shared={}",
            c.sigma_sg,
            c.sigma_ng,
            c.n_inputs,
            c.m_models,
            c.base_seed,
            c.noise_scope.name(),
            c.averaging.name(),
            u8::from(c.share_input_noise)
        ),
    };
    let header = format!(
        "sample {}\nclass {}\nmethod {}\nenhancer {}\nseed {}\nconfig {}\nshape {}\nend\n",
        record.sample_id,
        record.class_index,
        a.method.name(),
        a.enhancer.name(),
        a.seed,
        config,
        shape.join("x")
    );
    let mut out = Vec::with_capacity(ATTRIBUTION_MAGIC.len() + header.len() + a.values.len() * 8);
    out.extend_from_slice(ATTRIBUTION_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for v in a.values.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Reads every record of a (possibly concatenated) archive.
pub fn decode_attributions(bytes: &[u8]) -> Result<Vec<AttributionRecord>> {
    let mut records = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (record, used) = decode_one(&bytes[pos..]).map_err(|e| match e {
            Error::Format { offset, message } => Error::Format {
                offset: offset + pos,
                message,
            },
            other => other,
        })?;
        records.push(record);
        pos += used;
    }
    Ok(records)
}

fn decode_one(bytes: &[u8]) -> Result<(AttributionRecord, usize)> {
    let mut r = LineReader::new(bytes);
    r.expect_magic(ATTRIBUTION_MAGIC)?;
    let (off, line) = r.line()?;
    let sample_id: u64 = parse_keyed(off, line, "sample")?;
    let (off, line) = r.line()?;
    let class_index: usize = parse_keyed(off, line, "class")?;
    let (off, line) = r.line()?;
    let method = line
        .strip_prefix("method ")
        .and_then(Method::parse)
        .ok_or_else(|| Error::format(off, "expected `method <name>`"))?;
    let (off, line) = r.line()?;
    let enhancer = line
        .strip_prefix("enhancer ")
        .and_then(Enhancer::parse)
        .ok_or_else(|| Error::format(off, "expected `enhancer <name>`"))?;
    let (off, line) = r.line()?;
    let seed: u64 = parse_keyed(off, line, "seed")?;
    let (off, line) = r.line()?;
    let config = parse_config(off, line)?;
    let (off, line) = r.line()?;
    let dims = line
        .strip_prefix("shape ")
        .ok_or_else(|| Error::format(off, "expected `shape <dims>`"))?;
    let shape = dims
        .split('x')
        .map(|s| parse_num::<usize>(off, s))
        .collect::<Result<Vec<_>>>()?;
    let n = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&n| n <= MAX_VALUES)
        .ok_or_else(|| Error::format(off, "shape too large"))?;
    let (off, line) = r.line()?;
    if line != "end" {
        return Err(Error::format(off, "expected `end`"));
    }
    let data = r
        .take(n * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let values = Tensor::new(shape, data)?;
    let record = AttributionRecord {
        sample_id,
        class_index,
        attribution: Attribution {
            values,
            method,
            enhancer,
            config,
            seed,
        },
    };
    Ok((record, r.pos))
}

fn parse_config(off: usize, line: &str) -> Result<Option<EnhancerConfig>> {
    let body = line
        .strip_prefix("config ")
        .ok_or_else(|| Error::format(off, "expected `config ...`"))?;
    if body == "none" {
        return Ok(None);
    }
    let mut cfg = EnhancerConfig::default();
    let mut seen = 0u8;
    for item in body.split(' ') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::format(off, format!("malformed config item `{item}`")))?;
        let bit = match key {
            "sigma_sg" => {
                cfg.sigma_sg = parse_num(off, value)?;
                0
            }
            "sigma_ng" => {
                cfg.sigma_ng = parse_num(off, value)?;
                1
            }
            "n" => {
                cfg.n_inputs = parse_num(off, value)?;
                2
            }
            "m" => {
                cfg.m_models = parse_num(off, value)?;
                3
            }
            "base_seed" => {
                cfg.base_seed = parse_num(off, value)?;
                4
            }
            "scope" => {
                cfg.noise_scope =
                    NoiseScope::parse(value).ok_or_else(|| Error::format(off, format!("unknown scope `{value}`")))?;
                5
            }
            "averaging" => {
                cfg.averaging =
                    Averaging::parse(value).ok_or_else(|| Error::format(off, format!("unknown averaging `{value}`")))?;
                6
            }
            "shared" => {
                cfg.share_input_noise = match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::format(off, "shared must be 0 or 1")),
                };
                7
            }
            _ => return Err(Error::format(off, format!("unknown config key `{key}`"))),
        };
        if seen & (1 << bit) != 0 {
            return Err(Error::format(off, format!("duplicate config key `{key}`")));
        }
        seen |= 1 << bit;
    }
    if seen != 0xff {
        return Err(Error::format(off, "incomplete config"));
    }
    Ok(Some(cfg))
}
