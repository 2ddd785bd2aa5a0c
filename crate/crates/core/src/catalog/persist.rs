//! Catalog file format.
//!
//! ```text
//! magic[8] version:u32 clock:u64 | content | digest:u64
//! content = index_depth:u32
//!           flag_count:u32 { name_len:u16 name[name_len] bit:u8 }*
//!           table_count:u32 { table:u8 rows:u64 columns:u16 }*
//!           column blocks, per table in header order, per column in schema order
//! ```
//!
//! All integers and floats are little-endian. The digest is the first eight
//! bytes (little-endian) of SHA-256 over `content`; the load clock is kept
//! outside it so that undo can restore an earlier digest exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Catalog, FlagDictionary, TableName};
use crate::error::{Error, Result};
use crate::htm::MAX_DEPTH;

pub const MAGIC: [u8; 8] = *b"SKYCAT\x1a\n";
pub const FORMAT_VERSION: u32 = 1;

impl Catalog {
    fn encode_content(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.index_depth().to_le_bytes());
        let flags = self.flags().entries();
        out.extend_from_slice(&(flags.len() as u32).to_le_bytes());
        for (name, bit) in flags {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(bit);
        }
        out.extend_from_slice(&(TableName::ALL.len() as u32).to_le_bytes());
        for t in TableName::ALL {
            let table = self.table(t);
            out.push(t.code());
            out.extend_from_slice(&(table.len() as u64).to_le_bytes());
            out.extend_from_slice(&(table.columns().len() as u16).to_le_bytes());
        }
        for t in TableName::ALL {
            for (_, col) in self.table(t).columns() {
                col.write_le(&mut out);
            }
        }
        out
    }

    /// 64-bit content digest over every table, the index depth and the flag
    /// dictionary.
    pub fn digest(&self) -> u64 {
        digest_bytes(&self.encode_content())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let content = self.encode_content();
        let mut out = Vec::with_capacity(content.len() + 28);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.clock().to_le_bytes());
        out.extend_from_slice(&content);
        out.extend_from_slice(&digest_bytes(&content).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Catalog> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < MAGIC.len() {
            return if MAGIC.starts_with(bytes) {
                Err(Error::Truncated)
            } else {
                Err(Error::Format("bad magic".into()))
            };
        }
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FORMAT_VERSION,
                found: version,
            });
        }
        let clock = r.u64()?;
        let content_start = r.pos;

        let index_depth = r.u32()?;
        if index_depth > MAX_DEPTH {
            return Err(Error::Format(format!("index depth {index_depth}")));
        }
        let flag_count = r.u32()? as usize;
        let mut pairs = Vec::with_capacity(flag_count.min(64));
        for _ in 0..flag_count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Format("flag name is not UTF-8".into()))?
                .to_string();
            pairs.push((name, r.u8()?));
        }
        let mut cat = Catalog::with_flags(index_depth, FlagDictionary::from_pairs(pairs)?)?;
        cat.clock = clock;

        let table_count = r.u32()? as usize;
        if table_count != TableName::ALL.len() {
            return Err(Error::Format(format!("expected 6 tables, found {table_count}")));
        }
        let mut shapes = Vec::with_capacity(table_count);
        for expected in TableName::ALL {
            let code = r.u8()?;
            let rows = usize::try_from(r.u64()?).map_err(|_| Error::Format("row count".into()))?;
            let cols = r.u16()? as usize;
            if code != expected.code() || cols != cat.table(expected).columns().len() {
                return Err(Error::Format(format!("unexpected layout for table {expected}")));
            }
            shapes.push((expected, rows));
        }
        for (t, rows) in shapes {
            for mut col in cat.table_mut(t).columns_mut() {
                let len = rows
                    .checked_mul(col.width())
                    .ok_or_else(|| Error::Format("column size overflows".into()))?;
                col.read_le(r.take(len)?, rows)?;
            }
        }
        let content_end = r.pos;
        let stored = r.u64()?;
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after digest",
                bytes.len() - r.pos
            )));
        }
        let computed = digest_bytes(&bytes[content_start..content_end]);
        if stored != computed {
            return Err(Error::DigestMismatch { stored, computed });
        }
        Ok(cat)
    }

    /// Writes atomically: a sibling temp file renamed over `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Catalog> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Catalog::from_bytes(&bytes)
    }
}

fn digest_bytes(content: &[u8]) -> u64 {
    let hash = Sha256::digest(content);
    u64::from_le_bytes(hash[..8].try_into().expect("sha256 is 32 bytes"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FieldRow, PhotoObj};

    fn sample() -> Catalog {
        let mut cat = Catalog::new(10).unwrap();
        cat.fields.push(&FieldRow {
            field_id: 1,
            run: 752,
            camcol: 3,
            field: 40,
            load_stamp: 1,
        });
        let mut o = PhotoObj {
            obj_id: 42,
            field_id: 1,
            ra: 185.0,
            dec: -0.5,
            rowv: 1.5,
            load_stamp: 2,
            ..Default::default()
        };
        cat.derive_position(&mut o).unwrap();
        cat.append_photo(&[o]);
        cat.tick();
        cat.tick();
        cat
    }

    #[test]
    fn round_trip() {
        let cat = sample();
        let back = Catalog::from_bytes(&cat.to_bytes()).unwrap();
        assert_eq!(back, cat);
        assert_eq!(back.digest(), cat.digest());
    }

    #[test]
    fn empty_catalog_round_trip() {
        let cat = Catalog::default();
        let back = Catalog::from_bytes(&cat.to_bytes()).unwrap();
        assert!(back.row_counts().iter().all(|&(_, n)| n == 0));
    }

    #[test]
    fn truncation_and_corruption_are_distinguished() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            Catalog::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated)
        ));
        assert!(matches!(Catalog::from_bytes(&bytes[..3]), Err(Error::Truncated)));

        let mut flipped = bytes.clone();
        let mid = bytes.len() - 20;
        flipped[mid] ^= 0x40;
        assert!(matches!(
            Catalog::from_bytes(&flipped),
            Err(Error::DigestMismatch { .. })
        ));

        let mut version = bytes.clone();
        version[8] = 9;
        assert!(matches!(
            Catalog::from_bytes(&version),
            Err(Error::VersionMismatch { found: 9, .. })
        ));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(Catalog::from_bytes(&magic), Err(Error::Format(_))));

        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(Catalog::from_bytes(&extra), Err(Error::Format(_))));
    }

    #[test]
    fn clock_is_outside_the_digest() {
        let mut cat = sample();
        let d = cat.digest();
        cat.tick();
        assert_eq!(cat.digest(), d);
    }
}
