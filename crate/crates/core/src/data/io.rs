//! Dataset file.
//!
//! ```text
//! GNLAB-DS1\n
//! n <count>\n
//! shape <d0>x<d1>...\n
//! classes <k>\n
//! has_masks <0|1>\n
//! name <utf-8 text>\n
//! end\n
//! <n*d f64 LE inputs> <n i32 LE labels> [<n*d u8 masks>]
//! ```

use std::path::Path;

use super::Dataset;
use crate::format::{parse_keyed, parse_num, LineReader};
use crate::{Error, Result, Tensor};

pub const DATASET_MAGIC: &[u8] = b"GNLAB-DS1\n";

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let shape: Vec<String> = d.sample_shape().iter().map(|s| s.to_string()).collect();
    let header = format!(
        "n {}\nshape {}\nclasses {}\nhas_masks {}\nname {}\nend\n",
        d.len(),
        shape.join("x"),
        d.num_classes(),
        u8::from(d.masks().is_some()),
        d.name()
    );
    let dim = d.input_dim();
    let mut out = Vec::with_capacity(DATASET_MAGIC.len() + header.len() + d.len() * (dim * 9 + 4));
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for x in d.inputs() {
        for v in x.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for &y in d.labels() {
        out.extend_from_slice(&(y as i32).to_le_bytes());
    }
    if let Some(masks) = d.masks() {
        for m in masks {
            out.extend(m.data().iter().map(|&v| v as u8));
        }
    }
    out
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = LineReader::new(bytes);
    r.expect_magic(DATASET_MAGIC)?;

    let (off_n, line) = r.line()?;
    let n: usize = parse_keyed(off_n, line, "n")?;

    let (off, line) = r.line()?;
    let dims = line
        .strip_prefix("shape ")
        .ok_or_else(|| Error::format(off, "expected `shape <dims>`"))?;
    let shape = dims
        .split('x')
        .map(|s| parse_num::<usize>(off, s))
        .collect::<Result<Vec<_>>>()?;
    if shape.is_empty() || shape.len() > 8 {
        return Err(Error::format(off, "unsupported rank"));
    }
    let dim = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::format(off, "shape overflows"))?;

    let (off, line) = r.line()?;
    let classes: usize = parse_keyed(off, line, "classes")?;

    let (off, line) = r.line()?;
    let has_masks = match parse_keyed::<u8>(off, line, "has_masks")? {
        0 => false,
        1 => true,
        v => return Err(Error::format(off, format!("has_masks must be 0 or 1, got {v}"))),
    };

    let (off, line) = r.line()?;
    let name = line
        .strip_prefix("name ")
        .or_else(|| (line == "name").then_some(""))
        .ok_or_else(|| Error::format(off, "expected `name <text>`"))?
        .to_string();

    let (off, line) = r.line()?;
    if line != "end" {
        return Err(Error::format(off, "expected `end`"));
    }

    let per_sample = dim
        .checked_mul(if has_masks { 9 } else { 8 })
        .and_then(|b| b.checked_add(4))
        .ok_or_else(|| Error::format(off_n, "sample size overflows"))?;
    let needed = n
        .checked_mul(per_sample)
        .ok_or_else(|| Error::format(off_n, "dataset size overflows"))?;
    if r.remaining() != needed {
        return Err(Error::format(
            r.pos + r.remaining().min(needed),
            format!("payload is {} bytes, header declares {needed}", r.remaining()),
        ));
    }

    let mut inputs = Vec::with_capacity(n);
    for _ in 0..n {
        let block = r.take(dim * 8)?;
        let data = block
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        inputs.push(Tensor::new(shape.clone(), data)?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.pos;
        let y = i32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        let y = usize::try_from(y).map_err(|_| Error::format(at, format!("negative label {y}")))?;
        if y >= classes {
            return Err(Error::format(at, format!("label {y} outside {classes} classes")));
        }
        labels.push(y);
    }
    let masks = if has_masks {
        let mut masks = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.pos;
            let block = r.take(dim)?;
            if block.iter().any(|&b| b > 1) {
                return Err(Error::format(at, "mask bytes must be 0 or 1"));
            }
            masks.push(Tensor::new(shape.clone(), block.iter().map(|&b| f64::from(b)).collect())?);
        }
        Some(masks)
    } else {
        None
    };
    let body = DATASET_MAGIC.len();
    Dataset::new(name, shape, classes, inputs, labels, masks).map_err(|e| Error::format(body, e.to_string()))
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_dataset(d))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    decode_dataset(&std::fs::read(path)?)
}
