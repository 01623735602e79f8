//! Handwritten-digit ingestion: IDX container parsing, 28x28 -> 10x10
//! area-average downscaling, and seeded per-class train/test splits.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds;

/// Input image side length.
pub const IMG_SIDE: usize = 28;
/// Downscaled side length; one input neuron per pixel.
pub const GRID_SIDE: usize = 10;
/// Number of input neurons.
pub const GRID_PIXELS: usize = GRID_SIDE * GRID_SIDE;

const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

/// One raw 28x28 grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub pixels: Vec<u8>,
}

/// One downscaled, normalized instance ready for encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// 10x10 grid, row-major, each value in [0, 1].
    pub pixels: Vec<f64>,
    pub label: u8,
    /// Position of the source image in the dataset file.
    pub source_index: usize,
}

/// Which classes are trained vs only tested, and how many instances of each.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub trained_classes: Vec<u8>,
    pub unseen_classes: Vec<u8>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

fn read_u32_be<R: Read>(r: &mut R, offset: usize, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Data(format!("idx: truncated {what} at offset {offset}")))?;
    Ok(u32::from_be_bytes(b))
}

/// Parse an IDX image file (magic 2051, big-endian dimensions).
pub fn read_images_from<R: Read>(mut r: R) -> Result<Vec<RawImage>> {
    let magic = read_u32_be(&mut r, 0, "header")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "idx: bad magic number {magic} at offset 0 (expected {IDX_IMAGES_MAGIC})"
        )));
    }
    let count = read_u32_be(&mut r, 4, "header")? as usize;
    let rows = read_u32_be(&mut r, 8, "header")? as usize;
    let cols = read_u32_be(&mut r, 12, "header")? as usize;
    if rows != IMG_SIDE || cols != IMG_SIDE {
        return Err(Error::Data(format!(
            "idx: dimension mismatch at offset 8: {rows}x{cols}, expected {IMG_SIDE}x{IMG_SIDE}"
        )));
    }
    let mut images = Vec::with_capacity(count);
    for item in 0..count {
        let mut pixels = vec![0u8; rows * cols];
        r.read_exact(&mut pixels).map_err(|_| {
            Error::Data(format!(
                "idx: truncated at item {item} (offset {})",
                16 + item * rows * cols
            ))
        })?;
        images.push(RawImage { pixels });
    }
    Ok(images)
}

/// Parse an IDX label file (magic 2049).
pub fn read_labels_from<R: Read>(mut r: R) -> Result<Vec<u8>> {
    let magic = read_u32_be(&mut r, 0, "header")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Data(format!(
            "idx: bad magic number {magic} at offset 0 (expected {IDX_LABELS_MAGIC})"
        )));
    }
    let count = read_u32_be(&mut r, 4, "header")? as usize;
    let mut labels = vec![0u8; count];
    r.read_exact(&mut labels)
        .map_err(|_| Error::Data("idx: truncated at item 0 (offset 8)".to_string()))?;
    Ok(labels)
}

pub fn read_images(path: &Path) -> Result<Vec<RawImage>> {
    let f = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_images_from(BufReader::new(f))
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let f = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_labels_from(BufReader::new(f))
}

/// Serialize images back to the IDX container byte-for-byte.
pub fn write_images<W: Write>(mut w: W, images: &[RawImage]) -> std::io::Result<()> {
    w.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    w.write_all(&(images.len() as u32).to_be_bytes())?;
    w.write_all(&(IMG_SIDE as u32).to_be_bytes())?;
    w.write_all(&(IMG_SIDE as u32).to_be_bytes())?;
    for img in images {
        w.write_all(&img.pixels)?;
    }
    Ok(())
}

pub fn write_labels<W: Write>(mut w: W, labels: &[u8]) -> std::io::Result<()> {
    w.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    w.write_all(labels)
}

/// Per-axis overlap, in tenths of an input pixel, between output cell `r`
/// and input pixel `i`. Integer-exact, so area pooling preserves total mass.
fn overlap(r: usize, i: usize) -> u32 {
    let lo = (IMG_SIDE * r).max(GRID_SIDE * i);
    let hi = (IMG_SIDE * (r + 1)).min(GRID_SIDE * (i + 1));
    hi.saturating_sub(lo) as u32
}

/// Exact area-average pooling of a 28x28 image to a 10x10 grid, normalized
/// to [0, 1]. Fractional edge pixels are weighted by coverage.
pub fn downscale(image: &RawImage) -> Vec<f64> {
    debug_assert_eq!(image.pixels.len(), IMG_SIDE * IMG_SIDE);
    // Each output cell spans 2.8 input pixels per axis = 28 tenth-units;
    // its area is 28 * 28 units^2.
    const CELL_AREA: f64 = (IMG_SIDE * IMG_SIDE) as f64;
    let mut out = vec![0.0f64; GRID_PIXELS];
    for r in 0..GRID_SIDE {
        for c in 0..GRID_SIDE {
            let mut acc: u64 = 0;
            for i in 0..IMG_SIDE {
                let wr = overlap(r, i);
                if wr == 0 {
                    continue;
                }
                for j in 0..IMG_SIDE {
                    let wc = overlap(c, j);
                    if wc == 0 {
                        continue;
                    }
                    acc += (wr * wc) as u64 * image.pixels[i * IMG_SIDE + j] as u64;
                }
            }
            out[r * GRID_SIDE + c] = acc as f64 / (CELL_AREA * 255.0);
        }
    }
    out
}

/// Build deterministic train/test sets: per trained class, the first
/// `train_per_class` then the next `test_per_class` instances under a seeded
/// shuffle of that class; unseen classes contribute test instances only.
pub fn build_split(
    images: &[RawImage],
    labels: &[u8],
    spec: &SplitSpec,
) -> Result<(Vec<Instance>, Vec<Instance>)> {
    if images.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let mut all_classes = spec.trained_classes.clone();
    all_classes.extend(&spec.unseen_classes);
    {
        let mut dedup = all_classes.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != all_classes.len() {
            return Err(Error::Config("split classes overlap".into()));
        }
    }

    let shuffled_of = |class: u8| -> Vec<usize> {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, class as u64));
        idx.shuffle(&mut rng);
        idx
    };
    let instance = |i: usize| Instance {
        pixels: downscale(&images[i]),
        label: labels[i],
        source_index: i,
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    for &class in &spec.trained_classes {
        let idx = shuffled_of(class);
        let need = spec.train_per_class + spec.test_per_class;
        if idx.len() < need {
            return Err(Error::Config(format!(
                "class {class} has {} instances, {need} required",
                idx.len()
            )));
        }
        train.extend(idx[..spec.train_per_class].iter().map(|&i| instance(i)));
        test.extend(
            idx[spec.train_per_class..need]
                .iter()
                .map(|&i| instance(i)),
        );
    }
    for &class in &spec.unseen_classes {
        let idx = shuffled_of(class);
        if idx.len() < spec.test_per_class {
            return Err(Error::Config(format!(
                "unseen class {class} has {} instances, {} required",
                idx.len(),
                spec.test_per_class
            )));
        }
        test.extend(idx[..spec.test_per_class].iter().map(|&i| instance(i)));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(value: u8) -> RawImage {
        RawImage {
            pixels: vec![value; IMG_SIDE * IMG_SIDE],
        }
    }

    #[test]
    fn idx_round_trip_is_byte_identical() {
        let images: Vec<RawImage> = (0..5u8)
            .map(|k| RawImage {
                pixels: (0..784).map(|i| (i as u8).wrapping_mul(k)).collect(),
            })
            .collect();
        let mut bytes = Vec::new();
        write_images(&mut bytes, &images).unwrap();
        let back = read_images_from(&bytes[..]).unwrap();
        assert_eq!(back, images);
        let mut again = Vec::new();
        write_images(&mut again, &back).unwrap();
        assert_eq!(again, bytes);

        let labels = vec![0u8, 1, 2, 1, 0];
        let mut bytes = Vec::new();
        write_labels(&mut bytes, &labels).unwrap();
        assert_eq!(read_labels_from(&bytes[..]).unwrap(), labels);
    }

    #[test]
    fn idx_errors_name_the_offset() {
        let err = read_images_from(&[0, 0, 8, 3][..]).unwrap_err();
        assert!(err.to_string().contains("offset 4"), "{err}");

        let bad_magic = 99u32.to_be_bytes();
        let err = read_images_from(&bad_magic[..]).unwrap_err();
        assert!(err.to_string().contains("bad magic number 99"), "{err}");

        // Header only: truncated at item 0.
        let mut header = Vec::new();
        header.extend(2051u32.to_be_bytes());
        header.extend(3u32.to_be_bytes());
        header.extend(28u32.to_be_bytes());
        header.extend(28u32.to_be_bytes());
        let err = read_images_from(&header[..]).unwrap_err();
        assert!(err.to_string().contains("truncated at item 0"), "{err}");

        // Wrong dimensions.
        let mut header = Vec::new();
        header.extend(2051u32.to_be_bytes());
        header.extend(1u32.to_be_bytes());
        header.extend(27u32.to_be_bytes());
        header.extend(14u32.to_be_bytes());
        let err = read_images_from(&header[..]).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");

        let err = read_labels_from(&2049u32.to_be_bytes()[..]).unwrap_err();
        assert!(err.to_string().contains("offset 4"), "{err}");
    }

    #[test]
    fn downscale_constants() {
        assert!(downscale(&flat(255)).iter().all(|&p| p == 1.0));
        assert!(downscale(&flat(0)).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn downscale_single_corner_pixel() {
        let mut img = flat(0);
        img.pixels[0] = 255;
        let out = downscale(&img);
        // The corner output cell covers that pixel fully: 1 / 2.8^2.
        assert!((out[0] - 0.12755102040816327).abs() < 1e-12, "{}", out[0]);
        assert!(out[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn downscale_preserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let img = RawImage {
                pixels: (0..784).map(|_| rand::Rng::random::<u8>(&mut rng)).collect(),
            };
            let out = downscale(&img);
            let mean_out = out.iter().sum::<f64>() / out.len() as f64;
            let mean_in =
                img.pixels.iter().map(|&p| p as f64).sum::<f64>() / (784.0 * 255.0);
            assert!((mean_out - mean_in).abs() < 1e-9);
            assert!(out.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    fn tiny_dataset() -> (Vec<RawImage>, Vec<u8>) {
        // 60 instances per class for classes 0, 1, 2.
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..180usize {
            let class = (i % 3) as u8;
            images.push(flat((i % 251) as u8 + 1));
            labels.push(class);
        }
        (images, labels)
    }

    fn table1_spec(seed: u64) -> SplitSpec {
        SplitSpec {
            trained_classes: vec![0, 1],
            unseen_classes: vec![2],
            train_per_class: 20,
            test_per_class: 25,
            seed,
        }
    }

    #[test]
    fn split_counts_match_protocol() {
        let (images, labels) = tiny_dataset();
        let (train, test) = build_split(&images, &labels, &table1_spec(3)).unwrap();
        assert_eq!(train.len(), 40);
        assert_eq!(test.len(), 75);
        assert!(train.iter().all(|i| i.label == 0 || i.label == 1));
        assert_eq!(test.iter().filter(|i| i.label == 2).count(), 25);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (images, labels) = tiny_dataset();
        let (tr1, te1) = build_split(&images, &labels, &table1_spec(9)).unwrap();
        let (tr2, te2) = build_split(&images, &labels, &table1_spec(9)).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);

        for seed in 0..100 {
            let (train, test) = build_split(&images, &labels, &table1_spec(seed)).unwrap();
            let train_idx: std::collections::HashSet<usize> =
                train.iter().map(|i| i.source_index).collect();
            assert!(test.iter().all(|i| !train_idx.contains(&i.source_index)));
        }
    }

    #[test]
    fn zero_train_count_still_produces_tests() {
        let (images, labels) = tiny_dataset();
        let spec = SplitSpec {
            train_per_class: 0,
            ..table1_spec(1)
        };
        let (train, test) = build_split(&images, &labels, &spec).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 75);
    }

    #[test]
    fn insufficient_instances_is_a_config_error() {
        let (images, labels) = tiny_dataset();
        let spec = SplitSpec {
            train_per_class: 50,
            ..table1_spec(1)
        };
        assert!(build_split(&images, &labels, &spec).is_err());
    }

    #[test]
    fn overlapping_classes_rejected() {
        let (images, labels) = tiny_dataset();
        let spec = SplitSpec {
            trained_classes: vec![0, 1],
            unseen_classes: vec![1],
            ..table1_spec(1)
        };
        assert!(build_split(&images, &labels, &spec).is_err());
    }
}
