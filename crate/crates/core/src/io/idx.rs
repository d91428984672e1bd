//! Reader for the big-endian IDX container used by (fashion-)MNIST.

use std::path::Path;

use crate::coding::Image;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxKind {
    Images,
    Labels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxTensor {
    pub kind: IdxKind,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated header at byte {at}")))
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    let magic = read_u32(bytes, 0)?;
    let (kind, ndims) = match magic {
        IMAGES_MAGIC => (IdxKind::Images, 3),
        LABELS_MAGIC => (IdxKind::Labels, 1),
        other => return Err(Error::Format(format!("unknown magic 0x{other:08x}"))),
    };
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(read_u32(bytes, 4 + 4 * d)? as usize);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("dimension overflow in {dims:?}")))?;
    let header = 4 + 4 * ndims;
    let payload = &bytes[header..];
    if payload.len() < len {
        return Err(Error::Format(format!(
            "truncated payload: expected {len} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > len {
        return Err(Error::Format(format!(
            "trailing data: expected {len} bytes, found {}",
            payload.len()
        )));
    }
    Ok(IdxTensor {
        kind,
        dims,
        data: payload.to_vec(),
    })
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

impl IdxTensor {
    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Image `index` with intensities scaled to `[0, 1]`.
    pub fn image(&self, index: usize) -> Result<Image> {
        if self.kind != IdxKind::Images {
            return Err(Error::Format("tensor holds labels, not images".into()));
        }
        if index >= self.len() {
            return Err(Error::IndexOutOfRange { index, n: self.len() });
        }
        let (rows, cols) = (self.dims[1], self.dims[2]);
        let size = rows * cols;
        let pixels = self.data[index * size..(index + 1) * size]
            .iter()
            .map(|&b| f64::from(b) / 255.0)
            .collect();
        Image::new(rows, cols, pixels)
    }

    pub fn labels(&self) -> Result<&[u8]> {
        match self.kind {
            IdxKind::Labels => Ok(&self.data),
            IdxKind::Images => Err(Error::Format("tensor holds images, not labels".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(count: u32, rows: u32, cols: u32) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend(IMAGES_MAGIC.to_be_bytes());
        for d in [count, rows, cols] {
            bytes.extend(d.to_be_bytes());
        }
        bytes.extend((0..count * rows * cols).map(|k| (k % 256) as u8));
        bytes
    }

    #[test]
    fn single_28x28_image() {
        let bytes = fixture(1, 28, 28);
        assert_eq!(bytes.len(), 16 + 784);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.dims, vec![1, 28, 28]);
        let img = t.image(0).unwrap();
        assert_eq!((img.rows(), img.cols()), (28, 28));
        assert_eq!(img.get(0, 1), 1.0 / 255.0);
        assert_eq!(img.get(9, 3), ((9 * 28 + 3) % 256) as f64 / 255.0);
        assert!(t.image(1).is_err());
    }

    #[test]
    fn labels() {
        let mut bytes = LABELS_MAGIC.to_be_bytes().to_vec();
        bytes.extend(3u32.to_be_bytes());
        bytes.extend([7, 2, 9]);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.labels().unwrap(), &[7, 2, 9]);
        assert!(t.image(0).is_err());
    }

    #[test]
    fn unknown_magic() {
        let mut bytes = fixture(1, 2, 2);
        bytes[..4].copy_from_slice(&0x1234_5678u32.to_be_bytes());
        let err = parse_idx(&bytes).unwrap_err();
        assert!(err.to_string().contains("unknown magic"), "{err}");
    }

    #[test]
    fn truncated_payload() {
        let bytes = fixture(1, 28, 28);
        let err = parse_idx(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(err.to_string().contains("truncated payload"), "{err}");
        assert!(parse_idx(&bytes[..10]).is_err());
    }

    #[test]
    fn trailing_bytes_and_overflow() {
        let mut bytes = fixture(1, 2, 2);
        bytes.push(0);
        assert!(parse_idx(&bytes).unwrap_err().to_string().contains("trailing"));

        let mut huge = IMAGES_MAGIC.to_be_bytes().to_vec();
        for _ in 0..3 {
            huge.extend(u32::MAX.to_be_bytes());
        }
        let err = parse_idx(&huge).unwrap_err().to_string();
        assert!(err.contains("overflow") || err.contains("truncated"), "{err}");
    }
}
