//! Little-endian model checkpoint.
//!
//! ```text
//! magic        4 bytes  "LCPM"
//! layer_count  u32      number of weight layers L
//! widths       (L + 1) x u32: input, hidden..., output
//! params       f64 each, layer by layer: weights (out x in, row-major), then biases
//! ```

use std::io::{Read, Write};

use super::model::ClassifierModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LCPM";

/// Refuse absurd headers before allocating.
const MAX_PARAMS: usize = 1 << 28;

pub fn write_checkpoint(model: &ClassifierModel, mut w: impl Write) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(model.n_layers() as u32).to_le_bytes())?;
    for &d in model.dims() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("checkpoint is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_checkpoint(mut r: impl Read) -> Result<ClassifierModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let layers = read_u32(&mut r)? as usize;
    if layers == 0 || layers > 64 {
        return Err(Error::Format(format!("implausible layer count {layers}")));
    }
    let dims = (0..=layers).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let count: usize = dims.windows(2).map(|w| w[0].saturating_mul(w[1]).saturating_add(w[1])).sum();
    if count > MAX_PARAMS {
        return Err(Error::Format(format!("implausible parameter count {count}")));
    }
    let mut params = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b).map_err(truncated)?;
        params.push(f64::from_le_bytes(b));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    ClassifierModel::from_parts(dims, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = ClassifierModel::random(&[3, 2, 4], &mut rng).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"LCPM");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(buf.len(), 4 + 4 + 3 * 4 + model.params().len() * 8);
        assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), model);
    }

    #[test]
    fn rejects_damage() {
        let model = ClassifierModel::zeros(&[2, 2]).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_checkpoint(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_checkpoint(long.as_slice()).is_err());
    }
}
