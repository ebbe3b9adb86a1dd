//! Binary channel-stack format.
//!
//! All integers are little-endian `u32`:
//!
//! | offset | field                                   |
//! |--------|-----------------------------------------|
//! | 0      | magic `b"NSRM"`                         |
//! | 4      | format version (`1`)                    |
//! | 8      | dtype code (`1` = IEEE 754 binary32)    |
//! | 12     | rank (`3`)                              |
//! | 16     | dims: channels, height, width           |
//! | 28     | payload, row-major little-endian values |
//!
//! Channel labels are not stored; a stack read back is labelled `0..C`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::ChannelStack;

pub const MAGIC: [u8; 4] = *b"NSRM";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 1;
const RANK: u32 = 3;
pub const HEADER_LEN: usize = 16 + 4 * RANK as usize;

pub fn encode_tensor(stack: &ChannelStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * stack.data.len());
    out.extend_from_slice(&MAGIC);
    for v in [VERSION, DTYPE_F32, RANK] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for d in [stack.channels, stack.height, stack.width] {
        let d = u32::try_from(d).expect("tensor dimension exceeds u32");
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in &stack.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<ChannelStack> {
    let bad = |m: String| Err(Error::TensorFormat(m));
    if bytes.len() < 16 {
        return bad(format!("truncated header ({} bytes)", bytes.len()));
    }
    if bytes[..4] != MAGIC {
        return bad(format!("bad magic {:?}", &bytes[..4]));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return bad(format!("unsupported version {version}"));
    }
    let dtype = u32_at(bytes, 8);
    if dtype != DTYPE_F32 {
        return bad(format!("unsupported dtype code {dtype}"));
    }
    let rank = u32_at(bytes, 12);
    if rank != RANK {
        return bad(format!("expected rank {RANK}, found {rank}"));
    }
    if bytes.len() < HEADER_LEN {
        return bad(format!("truncated header ({} bytes)", bytes.len()));
    }
    let dims = [u32_at(bytes, 16), u32_at(bytes, 20), u32_at(bytes, 24)].map(|d| d as usize);
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::TensorFormat("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 4 {
        return bad(format!(
            "payload holds {} bytes, dims {}x{}x{} need {}",
            payload.len(),
            dims[0],
            dims[1],
            dims[2],
            count * 4
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ChannelStack::from_raw(dims[0], dims[1], dims[2], data)
}

pub fn write_tensor(stack: &ChannelStack, path: &Path) -> Result<()> {
    fs::write(path, encode_tensor(stack))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_tensor(path: &Path) -> Result<ChannelStack> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_tensor(&bytes)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn single_value_layout() {
        let s = ChannelStack::from_raw(1, 1, 1, vec![1.5f32]).unwrap();
        let bytes = encode_tensor(&s);
        assert_eq!(bytes.len(), 28 + 4);
        assert_eq!(&bytes[..4], b"NSRM");
        assert_eq!(&bytes[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[16..28], &[1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[28..], &1.5f32.to_le_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.nsrm");
        let data: Vec<f32> = (0..7 * 46 * 46).map(|i| (i as f32 * 0.37).sin().abs()).collect();
        let s = ChannelStack::from_raw(7, 46, 46, data).unwrap();
        write_tensor(&s, &p).unwrap();
        let back = read_tensor(&p).unwrap();
        assert_eq!(back.shape(), s.shape());
        assert!(back.data.iter().zip(&s.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_corruption() {
        let s = ChannelStack::from_raw(2, 2, 2, vec![0.25f32; 8]).unwrap();
        let good = encode_tensor(&s);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tensor(&bad), Err(Error::TensorFormat(_))));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode_tensor(&bad).is_err());

        let mut bad = good.clone();
        bad[8] = 2;
        assert!(decode_tensor(&bad).is_err());

        assert!(decode_tensor(&good[..good.len() - 1]).is_err());
        assert!(decode_tensor(&good[..20]).is_err());
        assert!(decode_tensor(&[good.clone(), vec![0; 4]].concat()).is_err());
        assert!(read_tensor(Path::new("/nonexistent/nope.nsrm")).is_err());
    }

    proptest! {
        #[test]
        fn bitwise_round_trip(c in 1usize..4, h in 1usize..6, w in 1usize..6, seed in any::<u32>()) {
            // arbitrary bit patterns, NaN payloads included
            let data: Vec<f32> = (0..c * h * w)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503)))
                .collect();
            let s = ChannelStack::from_raw(c, h, w, data).unwrap();
            let back = decode_tensor(&encode_tensor(&s)).unwrap();
            prop_assert_eq!(back.shape(), s.shape());
            prop_assert!(back.data.iter().zip(&s.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
