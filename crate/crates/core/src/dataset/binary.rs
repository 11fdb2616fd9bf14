//! `LKE1` dense dataset files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size       field
//! 0       4          magic "LKE1"
//! 4       8          N  (u64, rows)
//! 12      8          d  (u64, feature columns)
//! 20      8          c  (u64, class count)
//! 28      8·N·d      features, f64, row-major
//! ..      4·N        labels, u32
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::Dataset;

pub const LKE_MAGIC: &[u8; 4] = b"LKE1";

pub fn write_lke<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    out.write_all(LKE_MAGIC)?;
    out.write_all(&(data.len() as u64).to_le_bytes())?;
    out.write_all(&(data.dim() as u64).to_le_bytes())?;
    out.write_all(&(data.num_classes as u64).to_le_bytes())?;
    for v in data.features.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    for &l in &data.labels {
        out.write_all(&(l as u32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_lke<R: Read>(mut input: R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != LKE_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected LKE1")));
    }
    let n = read_u64(&mut input)? as usize;
    let d = read_u64(&mut input)? as usize;
    let c = read_u64(&mut input)? as usize;
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("header overflow".into()))?;
    let mut bytes = vec![0u8; len * 8];
    input.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let mut bytes = vec![0u8; n * 4];
    input.read_exact(&mut bytes)?;
    let labels = bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4-byte chunk")) as usize)
        .collect();
    Dataset::new(Matrix::from_vec(n, d, values)?, labels, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(
            rows in 1usize..20, cols in 1usize..6, c in 2usize..5,
            seed in any::<u64>(),
        ) {
            let mut x = seed;
            let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1); f64::from_bits((x >> 12) | 0x3FF0_0000_0000_0000) - 1.0 };
            let vals: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
            let labels: Vec<usize> = (0..rows).map(|i| i % c).collect();
            let d = Dataset::new(Matrix::from_vec(rows, cols, vals).unwrap(), labels, c).unwrap();
            let mut buf = Vec::new();
            write_lke(&d, &mut buf).unwrap();
            prop_assert_eq!(buf.len(), 28 + rows * cols * 8 + rows * 4);
            let back = read_lke(buf.as_slice()).unwrap();
            prop_assert_eq!(back, d);
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(read_lke(&b"LKE2\0\0\0\0"[..]).is_err());
        let d = Dataset::new(Matrix::zeros(2, 2), vec![0, 1], 2).unwrap();
        let mut buf = Vec::new();
        write_lke(&d, &mut buf).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_lke(buf.as_slice()).is_err());
    }
}
