use super::matrix::{Attribute, Column, FeatureMatrix, Schema};
use super::{DataError, RawImageSet};
use crate::bits::Bits;

pub const DEFAULT_THRESHOLD: u8 = 128;

/// Name of the flattened pixel attribute at zero-based offset `i`.
pub fn pixel_name(i: usize) -> String {
    format!("px_{}", i + 1)
}

/// Black/white encoding: a pixel is 1 iff its intensity is at least `threshold`.
pub fn binarize(raw: &RawImageSet, threshold: u8) -> Result<FeatureMatrix, DataError> {
    if threshold == 0 {
        return Err(DataError::InvalidParameter("threshold must be in [1, 255]".into()));
    }
    let n = raw.count();
    let width = raw.height * raw.width;
    let mut columns = vec![Bits::zeros(n); width];
    for i in 0..n {
        for (c, &px) in raw.image(i).iter().enumerate() {
            if px >= threshold {
                columns[c].set(i, true);
            }
        }
    }
    let schema = Schema::new((0..width).map(|i| Attribute::binary(pixel_name(i))).collect())?;
    FeatureMatrix::new(
        schema,
        columns.into_iter().map(Column::Binary).collect(),
        raw.labels.iter().map(|l| l.to_string()).collect(),
    )
}

/// Non-overlapping `window`x`window` block averages (stride = window),
/// rounded half up back into [0, 255].
pub fn moving_average(raw: &RawImageSet, window: usize) -> Result<RawImageSet, DataError> {
    if window != 2 && window != 4 {
        return Err(DataError::InvalidParameter(format!(
            "window must be 2 or 4, got {window}"
        )));
    }
    if !raw.height.is_multiple_of(window) || !raw.width.is_multiple_of(window) {
        return Err(DataError::InvalidParameter(format!(
            "{}x{} image is not divisible by window {window}",
            raw.height, raw.width
        )));
    }
    let (oh, ow) = (raw.height / window, raw.width / window);
    let area = (window * window) as u32;
    let mut pixels = Vec::with_capacity(raw.count() * oh * ow);
    for i in 0..raw.count() {
        let img = raw.image(i);
        for by in 0..oh {
            for bx in 0..ow {
                let mut sum = 0u32;
                for y in by * window..(by + 1) * window {
                    for x in bx * window..(bx + 1) * window {
                        sum += img[y * raw.width + x] as u32;
                    }
                }
                pixels.push(((sum + area / 2) / area) as u8);
            }
        }
    }
    RawImageSet::new(oh, ow, pixels, raw.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Cell;
    use proptest::prelude::*;

    fn single(h: usize, w: usize, pixels: Vec<u8>) -> RawImageSet {
        RawImageSet::new(h, w, pixels, vec![0]).unwrap()
    }

    #[test]
    fn threshold_boundaries() {
        let m = binarize(&single(1, 3, vec![200, 127, 128]), 128).unwrap();
        assert_eq!(m.cell(0, 0), Cell::Bit(true));
        assert_eq!(m.cell(0, 1), Cell::Bit(false));
        assert_eq!(m.cell(0, 2), Cell::Bit(true));
        assert_eq!(m.schema().attribute(2).name, "px_3");
    }

    #[test]
    fn zero_image_and_width() {
        let m = binarize(&single(28, 28, vec![0; 784]), 128).unwrap();
        assert_eq!(m.width(), 784);
        assert!((0..784).all(|c| m.cell(0, c) == Cell::Bit(false)));
        assert_eq!(m.schema().attribute(783).name, "px_784");
    }

    #[test]
    fn zero_threshold_rejected() {
        assert!(binarize(&single(1, 1, vec![0]), 0).is_err());
    }

    #[test]
    fn moving_average_examples() {
        let out = moving_average(&single(28, 28, vec![255; 784]), 4).unwrap();
        assert_eq!((out.height, out.width), (7, 7));
        assert!(out.pixels.iter().all(|&p| p == 255));

        let out = moving_average(&single(2, 2, vec![0, 0, 0, 4]), 2).unwrap();
        assert_eq!(out.pixels, vec![1]);

        let out = moving_average(&single(28, 28, vec![0; 784]), 2).unwrap();
        assert_eq!((out.height, out.width), (14, 14));
    }

    #[test]
    fn rounding_is_half_up() {
        // 2 / 4 = 0.5 rounds to 1; 1 / 4 = 0.25 rounds to 0
        assert_eq!(
            moving_average(&single(2, 2, vec![0, 0, 1, 1]), 2).unwrap().pixels,
            vec![1]
        );
        assert_eq!(
            moving_average(&single(2, 2, vec![0, 0, 0, 1]), 2).unwrap().pixels,
            vec![0]
        );
    }

    #[test]
    fn non_divisible_rejected() {
        assert!(moving_average(&single(3, 4, vec![0; 12]), 2).is_err());
        assert!(moving_average(&single(4, 4, vec![0; 16]), 3).is_err());
    }

    proptest! {
        #[test]
        fn binarize_idempotent_on_black_white(bits in proptest::collection::vec(any::<bool>(), 16), t in 1u8..=255) {
            let raw = single(4, 4, bits.iter().map(|&b| if b { 255 } else { 0 }).collect());
            let m = binarize(&raw, t).unwrap();
            for (c, &b) in bits.iter().enumerate() {
                prop_assert_eq!(m.cell(0, c), Cell::Bit(b));
            }
        }

        #[test]
        fn constant_blocks_commute(blocks in proptest::collection::vec(any::<u8>(), 4), t in 1u8..=255) {
            // 4x4 image made of four constant 2x2 blocks
            let mut px = vec![0u8; 16];
            for y in 0..4 {
                for x in 0..4 {
                    px[y * 4 + x] = blocks[(y / 2) * 2 + x / 2];
                }
            }
            let raw = single(4, 4, px);
            let pooled = binarize(&moving_average(&raw, 2).unwrap(), t).unwrap();
            let direct = binarize(&raw, t).unwrap();
            for b in 0..4 {
                let (by, bx) = (b / 2, b % 2);
                prop_assert_eq!(pooled.cell(0, b), direct.cell(0, by * 8 + bx * 2));
            }
        }
    }
}
