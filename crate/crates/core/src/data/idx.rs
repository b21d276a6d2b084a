//! IDX image/label files (the MNIST container format).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::DataError;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Greyscale images (row-major, one byte per pixel) with one label each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImageSet {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawImageSet {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self, DataError> {
        if pixels.len() != height * width * labels.len() {
            return Err(DataError::Shape(format!(
                "{} pixels for {} images of {height}x{width}",
                pixels.len(),
                labels.len()
            )));
        }
        Ok(RawImageSet {
            height,
            width,
            pixels,
            labels,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Subset of images in the given order.
    pub fn select(&self, indices: &[usize]) -> RawImageSet {
        let mut pixels = Vec::with_capacity(indices.len() * self.height * self.width);
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        RawImageSet {
            height: self.height,
            width: self.width,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, DataError> {
    let mut raw = Vec::new();
    File::open(path)
        .map_err(|e| DataError::io(path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| DataError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| DataError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(buf: &[u8], at: usize, path: &Path) -> Result<u32, DataError> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Truncated {
            path: path.display().to_string(),
            expected: at + 4,
            found: buf.len(),
        })
}

fn check_magic(found: u32, expected: u32, path: &Path) -> Result<(), DataError> {
    if found != expected {
        return Err(DataError::BadMagic {
            path: path.display().to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

fn payload<'a>(buf: &'a [u8], offset: usize, len: usize, path: &Path) -> Result<&'a [u8], DataError> {
    buf.get(offset..offset + len).ok_or_else(|| DataError::Truncated {
        path: path.display().to_string(),
        expected: offset + len,
        found: buf.len(),
    })
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<RawImageSet, DataError> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let img = read_all(images_path)?;
    check_magic(be_u32(&img, 0, images_path)?, IMAGE_MAGIC, images_path)?;
    let count = be_u32(&img, 4, images_path)? as usize;
    let height = be_u32(&img, 8, images_path)? as usize;
    let width = be_u32(&img, 12, images_path)? as usize;

    let lab = read_all(labels_path)?;
    check_magic(be_u32(&lab, 0, labels_path)?, LABEL_MAGIC, labels_path)?;
    let label_count = be_u32(&lab, 4, labels_path)? as usize;
    if label_count != count {
        return Err(DataError::DimensionMismatch {
            images: count,
            labels: label_count,
        });
    }

    let pixels = payload(&img, 16, count * height * width, images_path)?.to_vec();
    let labels = payload(&lab, 8, count, labels_path)?.to_vec();
    RawImageSet::new(height, width, pixels, labels)
}

pub fn write_idx(
    set: &RawImageSet,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let mut f = File::create(images_path).map_err(|e| DataError::io(images_path, e))?;
    let mut header = Vec::with_capacity(16);
    for v in [IMAGE_MAGIC, set.count() as u32, set.height as u32, set.width as u32] {
        header.extend_from_slice(&v.to_be_bytes());
    }
    f.write_all(&header)
        .and_then(|_| f.write_all(&set.pixels))
        .map_err(|e| DataError::io(images_path, e))?;

    let mut f = File::create(labels_path).map_err(|e| DataError::io(labels_path, e))?;
    let mut header = Vec::with_capacity(8);
    for v in [LABEL_MAGIC, set.count() as u32] {
        header.extend_from_slice(&v.to_be_bytes());
    }
    f.write_all(&header)
        .and_then(|_| f.write_all(&set.labels))
        .map_err(|e| DataError::io(labels_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;

    fn write_raw(path: &Path, bytes: &[u8]) {
        std::fs::write(path, bytes).unwrap();
    }

    fn header(words: &[u32]) -> Vec<u8> {
        words.iter().flat_map(|w| w.to_be_bytes()).collect()
    }

    #[test]
    fn minimal_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        let mut img = header(&[0x803, 1, 2, 2]);
        img.extend([0, 0, 0, 0]);
        write_raw(&ip, &img);
        let mut lab = header(&[0x801, 1]);
        lab.push(7);
        write_raw(&lp, &lab);
        let set = load_idx(&ip, &lp).unwrap();
        assert_eq!(set.count(), 1);
        assert_eq!((set.height, set.width), (2, 2));
        assert_eq!(set.labels, vec![7]);
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        let mut img = header(&[0x803, 1, 1, 1]);
        img.push(3);
        write_raw(&ip, &img);
        let mut lab = header(&[0x801, 2]);
        lab.extend([1, 2]);
        write_raw(&lp, &lab);
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DataError::DimensionMismatch { images: 1, labels: 2 })
        ));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_raw(&ip, &header(&[0x801, 1, 1, 1]));
        write_raw(&lp, &header(&[0x801, 1]));
        assert!(matches!(load_idx(&ip, &lp), Err(DataError::BadMagic { .. })));

        write_raw(&ip, &header(&[0x803, 2, 2, 2]));
        let mut lab = header(&[0x801, 2]);
        lab.extend([0, 1]);
        write_raw(&lp, &lab);
        assert!(matches!(load_idx(&ip, &lp), Err(DataError::Truncated { .. })));
    }

    #[test]
    fn gzip_variant() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.gz"), dir.path().join("l"));
        let mut img = header(&[0x803, 1, 1, 2]);
        img.extend([9, 255]);
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&img).unwrap();
        write_raw(&ip, &enc.finish().unwrap());
        let mut lab = header(&[0x801, 1]);
        lab.push(4);
        write_raw(&lp, &lab);
        let set = load_idx(&ip, &lp).unwrap();
        assert_eq!(set.pixels, vec![9, 255]);
    }
}
