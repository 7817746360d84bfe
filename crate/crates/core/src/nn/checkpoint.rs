//! Flat archive of named arrays with a text metadata header.
//!
//! ```text
//! magic    b"PIDCKPT1"
//! u32      header length, then that many bytes of `key=value\n` lines
//! u32      array count
//! per array:
//!   u32 name length, UTF-8 name
//!   u32 ndim, ndim x u64 dims
//!   prod(dims) x f64, row-major
//! ```
//! All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Mat;

const MAGIC: &[u8; 8] = b"PIDCKPT1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Archive {
    pub meta: BTreeMap<String, String>,
    pub arrays: BTreeMap<String, Mat>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("checkpoint lacks `{key}`")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("checkpoint field `{key}` has bad value `{raw}`")))
    }

    pub fn array(&self, name: &str) -> Result<&Mat> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::Format(format!("checkpoint lacks array `{name}`")))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        let mut header = String::new();
        for (k, v) in &self.meta {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Format(format!("metadata entry `{k}` is not representable")));
            }
            header.push_str(k);
            header.push('=');
            header.push_str(v);
            header.push('\n');
        }
        write_u32(&mut w, header.len())?;
        w.write_all(header.as_bytes())?;
        write_u32(&mut w, self.arrays.len())?;
        for (name, m) in &self.arrays {
            write_u32(&mut w, name.len())?;
            w.write_all(name.as_bytes())?;
            write_u32(&mut w, 2)?;
            w.write_all(&(m.rows() as u64).to_le_bytes())?;
            w.write_all(&(m.cols() as u64).to_le_bytes())?;
            let mut buf = Vec::with_capacity(8 * m.len());
            for x in m.as_slice() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint archive".into()));
        }
        let hlen = read_u32(&mut r)? as usize;
        let header = String::from_utf8(read_bytes(&mut r, hlen)?)
            .map_err(|_| Error::Format("checkpoint header is not UTF-8".into()))?;
        let mut meta = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header line `{line}`")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let count = read_u32(&mut r)?;
        let mut arrays = BTreeMap::new();
        for _ in 0..count {
            let nlen = read_u32(&mut r)? as usize;
            let name = String::from_utf8(read_bytes(&mut r, nlen)?)
                .map_err(|_| Error::Format("array name is not UTF-8".into()))?;
            let ndim = read_u32(&mut r)? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                dims.push(u64::from_le_bytes(b) as usize);
            }
            let (rows, cols) = match dims[..] {
                [n] => (1, n),
                [a, b] => (a, b),
                _ => return Err(Error::Format(format!("array `{name}` has {ndim} dimensions"))),
            };
            let raw = read_bytes(&mut r, 8 * rows * cols)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            arrays.insert(name, Mat::from_vec(rows, cols, data));
        }
        Ok(Self { meta, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        // Write next to the target then rename, so a crash never leaves a torn file.
        let tmp = path.with_extension("tmp");
        let f = std::fs::File::create(&tmp)?;
        self.write_to(std::io::BufWriter::new(f))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn write_u32<W: Write>(w: &mut W, n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::Format("length exceeds u32".into()))?;
    w.write_all(&n.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}
