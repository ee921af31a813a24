//! Model checkpoint file.
//!
//! ```text
//! GNLAB-MLP1\n
//! layers <L>\n
//! layer <in> <out> <relu|identity>\n      (L times, input side first)
//! end\n
//! <per layer: out*in weights row-major, then out biases; f64 little-endian>
//! ```
//!
//! The payload length must match the header exactly; anything else is
//! reported as a [`Error::Format`] with the offending byte offset.

use std::path::Path;

use super::{Activation, Layer, MlpModel};
use crate::format::{parse_keyed, parse_num, LineReader};
use crate::{Error, Result, Tensor};

pub const CHECKPOINT_MAGIC: &[u8] = b"GNLAB-MLP1\n";

const MAX_LAYERS: usize = 4096;

pub fn encode_checkpoint(model: &MlpModel) -> Vec<u8> {
    let mut header = String::new();
    header.push_str(&format!("layers {}\n", model.layers().len()));
    for l in model.layers() {
        header.push_str(&format!("layer {} {} {}\n", l.in_dim(), l.out_dim(), l.activation.name()));
    }
    header.push_str("end\n");

    let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + header.len() + model.num_params() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for l in model.layers() {
        for v in l.weight.data().iter().chain(l.bias.data()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = LineReader::new(bytes);
    r.expect_magic(CHECKPOINT_MAGIC)?;

    let (off, line) = r.line()?;
    let n_layers: usize = parse_keyed(off, line, "layers")?;
    if n_layers == 0 || n_layers > MAX_LAYERS {
        return Err(Error::format(off, format!("unsupported layer count {n_layers}")));
    }

    let mut specs = Vec::with_capacity(n_layers);
    let mut payload: usize = 0;
    for _ in 0..n_layers {
        let (off, line) = r.line()?;
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(Error::format(off, "expected `layer <in> <out> <activation>`"));
        }
        let n_in: usize = parse_num(off, parts[1])?;
        let n_out: usize = parse_num(off, parts[2])?;
        let act = Activation::parse(parts[3])
            .ok_or_else(|| Error::format(off, format!("unknown activation `{}`", parts[3])))?;
        let count = n_in
            .checked_mul(n_out)
            .and_then(|w| w.checked_add(n_out))
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::format(off, "layer size overflows"))?;
        payload = payload
            .checked_add(count)
            .ok_or_else(|| Error::format(off, "model size overflows"))?;
        specs.push((off, n_in, n_out, act));
    }
    let (off, line) = r.line()?;
    if line != "end" {
        return Err(Error::format(off, "expected `end`"));
    }

    let body_start = r.pos;
    let remaining = bytes.len() - body_start;
    if remaining != payload {
        let at = body_start + remaining.min(payload);
        return Err(Error::format(
            at,
            format!("weight payload is {remaining} bytes, header declares {payload}"),
        ));
    }

    let mut floats = bytes[body_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut layers = Vec::with_capacity(n_layers);
    for (off, n_in, n_out, act) in specs {
        let w: Vec<f64> = floats.by_ref().take(n_in * n_out).collect();
        let b: Vec<f64> = floats.by_ref().take(n_out).collect();
        let layer = Layer::new(Tensor::new(vec![n_out, n_in], w)?, Tensor::from_vec(b), act)
            .map_err(|e| Error::format(off, e.to_string()))?;
        layers.push(layer);
    }
    MlpModel::new(layers).map_err(|e| Error::format(body_start, e.to_string()))
}

pub fn save_checkpoint(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpModel> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = MlpModel::init(&[3, 5, 2], 17).unwrap();
        m.layers_mut()[0].bias.data_mut()[1] = -0.0;
        m.layers_mut()[1].bias.data_mut()[0] = f64::MIN_POSITIVE / 3.0;
        let bytes = encode_checkpoint(&m);
        assert!(bytes.starts_with(b"GNLAB-MLP1\nlayers 2\nlayer 3 5 relu\nlayer 5 2 identity\nend\n"));
        let back = decode_checkpoint(&bytes).unwrap();
        assert!(back.bits_eq(&m));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gnmlp");
        let m = MlpModel::init(&[2, 16, 16, 2], 1).unwrap();
        save_checkpoint(&m, &path).unwrap();
        assert!(load_checkpoint(&path).unwrap().bits_eq(&m));
    }

    #[test]
    fn corrupt_inputs_are_format_errors() {
        let m = MlpModel::init(&[2, 3, 2], 1).unwrap();
        let bytes = encode_checkpoint(&m);
        assert!(matches!(decode_checkpoint(b"NOPE"), Err(Error::Format { offset: 0, .. })));
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(decode_checkpoint(truncated), Err(Error::Format { .. })));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_checkpoint(&extra), Err(Error::Format { .. })));
        let bad_act = String::from_utf8_lossy(&bytes).replace("relu", "tanh").into_bytes();
        assert!(matches!(decode_checkpoint(&bad_act), Err(Error::Format { .. })));
        let huge = b"GNLAB-MLP1\nlayers 1\nlayer 18446744073709551615 2 identity\nend\n";
        assert!(matches!(decode_checkpoint(huge), Err(Error::Format { .. })));
    }
}
