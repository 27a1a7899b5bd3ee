//! Hashing, the binary tensor format, and small serialization helpers.
//!
//! Tensor layout (all integers little-endian):
//!
//! ```text
//! magic    4 bytes  "FMTN"
//! version  u16      1
//! dtype    u16      1 = complex64 (f32 re, f32 im), 2 = complex128 (f64 re, f64 im)
//! ndim     u32
//! dims     ndim x u64
//! config   u64      config hash
//! seed     u64
//! data     prod(dims) complex values, row-major
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FMTN";
const VERSION: u16 = 1;

/// Element precision of a stored tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Complex64,
    Complex128,
}

impl Precision {
    fn code(self) -> u16 {
        match self {
            Precision::Complex64 => 1,
            Precision::Complex128 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorHeader {
    pub shape: Vec<usize>,
    pub config_hash: u64,
    pub seed: u64,
}

impl TensorHeader {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// First 8 bytes of the SHA-256 of the value's JSON encoding.
pub fn hash_u64<T: Serialize + ?Sized>(value: &T) -> u64 {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    let digest = Sha256::digest(&bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

pub fn hash_hex<T: Serialize + ?Sized>(value: &T) -> String {
    format!("{:016x}", hash_u64(value))
}

pub fn write_tensor<W: Write>(
    mut w: W,
    header: &TensorHeader,
    data: &[Complex64],
    precision: Precision,
) -> Result<()> {
    if header.len() != data.len() {
        return Err(Error::ShapeMismatch(format!(
            "header describes {} elements, got {}",
            header.len(),
            data.len()
        )));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&precision.code().to_le_bytes())?;
    w.write_all(&(header.shape.len() as u32).to_le_bytes())?;
    for &d in &header.shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&header.config_hash.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    let mut buf = Vec::with_capacity(data.len() * 16);
    for z in data {
        match precision {
            Precision::Complex64 => {
                buf.extend_from_slice(&(z.re as f32).to_le_bytes());
                buf.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
            Precision::Complex128 => {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<(TensorHeader, Vec<Complex64>)> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::TensorFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::TensorFormat(format!("unsupported version {version}")));
    }
    let precision = match u16::from_le_bytes(read_array(&mut r)?) {
        1 => Precision::Complex64,
        2 => Precision::Complex128,
        other => return Err(Error::TensorFormat(format!("unknown dtype {other}"))),
    };
    let ndim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if ndim > 16 {
        return Err(Error::TensorFormat(format!("implausible rank {ndim}")));
    }
    let shape = (0..ndim)
        .map(|_| Ok(u64::from_le_bytes(read_array(&mut r)?) as usize))
        .collect::<Result<Vec<_>>>()?;
    let config_hash = u64::from_le_bytes(read_array(&mut r)?);
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let header = TensorHeader { shape, config_hash, seed };
    let n = header.len();
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let z = match precision {
            Precision::Complex64 => Complex64::new(
                f32::from_le_bytes(read_array(&mut r)?) as f64,
                f32::from_le_bytes(read_array(&mut r)?) as f64,
            ),
            Precision::Complex128 => Complex64::new(
                f64::from_le_bytes(read_array(&mut r)?),
                f64::from_le_bytes(read_array(&mut r)?),
            ),
        };
        data.push(z);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::TensorFormat("trailing bytes after tensor data".into()));
    }
    Ok((header, data))
}

/// Complex number as an explicit `{ "re": .., "im": .. }` JSON object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReIm {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ReIm {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ReIm> for Complex64 {
    fn from(z: ReIm) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// serde adapter storing `Vec<Complex64>` as a list of [`ReIm`] objects.
pub mod complex_vec {
    use super::ReIm;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| ReIm::from(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<ReIm>::deserialize(d)?.into_iter().map(Complex64::from).collect())
    }
}
