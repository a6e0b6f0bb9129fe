//! `EMB1` little-endian embedding files.
//!
//! ```text
//! magic "EMB1"
//! u32 count, u32 dim
//! count × {
//!     u16 id length, id bytes (UTF-8)
//!     u16 subject length, subject bytes (UTF-8)
//!     u8 demographic code
//!     u8 beard-area code (0 CS, 1 CA, 2 S2S)
//!     f32 confidence
//!     dim × f32 components
//! }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{BeardArea, Demographic, EmbeddingRecord, EmbeddingSet};
use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated file: {what} at byte {} needs {n} bytes", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format(format!("{what} is not valid UTF-8")))
    }
}

pub fn read_embeddings<R: Read>(mut reader: R) -> Result<EmbeddingSet> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let magic = c.take(4, "magic")?;
    if magic != EMBEDDING_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"EMB1\"")));
    }
    let count = c.u32("record count")? as usize;
    let dim = c.u32("dimension")? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let id = c.string("record id")?;
        let subject = c.string("subject id")?;
        let demographic = Demographic(c.u8("demographic code")?);
        let code = c.u8("beard-area code")?;
        let beard = BeardArea::from_code(code)
            .ok_or_else(|| Error::Format(format!("record {i}: unknown beard-area code {code}")))?;
        let confidence = c.f32("confidence")?;
        let raw = c.take(dim.checked_mul(4).ok_or_else(|| Error::Format("dimension overflow".into()))?, "vector")?;
        let vector = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        records.push(EmbeddingRecord { id, subject, demographic, beard, confidence, vector });
    }
    if c.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes after {count} records", buf.len() - c.pos)));
    }
    EmbeddingSet::new(dim, records)
}

pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut w: W) -> Result<()> {
    let count = u32::try_from(set.len()).map_err(|_| Error::Input("too many records".into()))?;
    let dim = u32::try_from(set.dim()).map_err(|_| Error::Input("dimension too large".into()))?;
    let mut out = Vec::with_capacity(12 + set.len() * (16 + 4 * set.dim()));
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for r in set.records() {
        for s in [&r.id, &r.subject] {
            let len = u16::try_from(s.len()).map_err(|_| Error::Input(format!("identifier longer than 65535 bytes: {s}")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out.push(r.demographic.0);
        out.push(r.beard.code());
        out.extend_from_slice(&r.confidence.to_le_bytes());
        for v in &r.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&out)?;
    Ok(())
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    read_embeddings(std::fs::File::open(path)?)
}

pub fn save_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    write_embeddings(set, std::io::BufWriter::new(std::fs::File::create(path)?))
}
