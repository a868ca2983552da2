use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::nn::ImageShape;

use super::{Dataset, LabeledImage};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(buf: &[u8], offset: usize) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(offset as u64, "truncated header"))
}

/// Loads an IDX image/label pair, gzip-compressed or raw.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = read_maybe_gz(images_path.as_ref())?;
    let labels = read_maybe_gz(labels_path.as_ref())?;
    parse_idx(&images, &labels)
}

/// Parses decompressed IDX bytes; pixel bytes are scaled by 1/255.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let magic = be_u32(images, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(0, format!("image file magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let n = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;

    let lmagic = be_u32(labels, 0)?;
    if lmagic != LABELS_MAGIC {
        return Err(Error::format(0, format!("label file magic {lmagic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let ln = be_u32(labels, 4)? as usize;
    if ln != n {
        return Err(Error::format(4, format!("label count {ln} does not match image count {n}")));
    }

    let px = rows * cols;
    let need = 16 + n * px;
    if images.len() < need {
        return Err(Error::format(images.len() as u64, format!("image data truncated, expected {need} bytes")));
    }
    if labels.len() < 8 + n {
        return Err(Error::format(labels.len() as u64, format!("label data truncated, expected {} bytes", 8 + n)));
    }

    let shape = ImageShape::new(1, rows, cols);
    let label_bytes = &labels[8..8 + n];
    let class_count = label_bytes.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let items = images[16..need]
        .chunks_exact(px.max(1))
        .take(n)
        .zip(label_bytes)
        .map(|(chunk, &label)| LabeledImage {
            pixels: chunk.iter().map(|&b| b as f64 / 255.0).collect(),
            shape,
            label: label as usize,
        })
        .collect();
    Ok(Dataset::new(items, class_count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        for v in [IMAGES_MAGIC, 2, 2, 2] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&[0, 255, 51, 102, 255, 0, 0, 204]);
        let mut lbl = Vec::new();
        for v in [LABELS_MAGIC, 2] {
            lbl.extend_from_slice(&v.to_be_bytes());
        }
        lbl.extend_from_slice(&[3, 7]);
        (img, lbl)
    }

    #[test]
    fn parses_hand_built_pair() {
        let (img, lbl) = fixture();
        let ds = parse_idx(&img, &lbl).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.items[0].pixels, vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.items[1].pixels, vec![1.0, 0.0, 0.0, 0.8]);
        assert_eq!(ds.labels(), vec![3, 7]);
        assert_eq!(ds.items[0].shape, ImageShape::new(1, 2, 2));
    }

    #[test]
    fn count_mismatch_and_bad_magic() {
        let (img, mut lbl) = fixture();
        lbl[7] = 3;
        assert!(matches!(parse_idx(&img, &lbl), Err(Error::Format { offset: 4, .. })));
        let (mut img, lbl) = fixture();
        img[3] = 0x01;
        assert!(matches!(parse_idx(&img, &lbl), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncated_images_name_offset() {
        let (img, lbl) = fixture();
        let err = parse_idx(&img[..20], &lbl).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 20, .. }), "{err}");
    }

    #[test]
    fn gzip_and_raw_agree() {
        let (img, lbl) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let raw_i = dir.path().join("i.idx");
        let raw_l = dir.path().join("l.idx");
        std::fs::write(&raw_i, &img).unwrap();
        std::fs::write(&raw_l, &lbl).unwrap();
        let gz_i = dir.path().join("i.idx.gz");
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&img).unwrap();
        std::fs::write(&gz_i, enc.finish().unwrap()).unwrap();
        assert_eq!(load_idx(&raw_i, &raw_l).unwrap(), load_idx(&gz_i, &raw_l).unwrap());
    }
}
