//! Deterministic synthetic digit images in the standard IDX container.
//!
//! The real handwritten-digit files are not redistributable with this crate,
//! so tests and quick-start runs render digit-like glyphs instead: polyline
//! stroke templates with per-instance jitter in position, scale, rotation,
//! stroke width and ink level. The output is class-structured the same way
//! the pipeline expects (distinct shapes, varying instances per class).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{self, RawImage, IMG_SIDE};
use crate::error::{Error, Result};
use crate::seeds;

pub const IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const LABELS_FILE: &str = "train-labels-idx1-ubyte";

type Stroke = Vec<(f64, f64)>;

/// Stroke templates in a local frame: x right, y down, roughly [-5,5]x[-8,8].
fn glyph(digit: u8) -> Vec<Stroke> {
    fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Stroke {
        (0..=24)
            .map(|i| {
                let a = i as f64 / 24.0 * std::f64::consts::TAU;
                (cx + rx * a.cos(), cy + ry * a.sin())
            })
            .collect()
    }
    match digit {
        0 => vec![ellipse(0.0, 0.0, 4.2, 7.0)],
        1 => vec![vec![(-1.8, -5.2), (0.6, -7.5), (0.6, 7.5)]],
        2 => vec![vec![
            (-3.8, -4.8),
            (-2.2, -7.3),
            (2.2, -7.3),
            (3.8, -4.8),
            (3.2, -2.2),
            (-3.9, 5.8),
            (-3.9, 7.6),
            (4.2, 7.6),
        ]],
        3 => vec![vec![
            (-3.4, -7.2),
            (2.0, -7.4),
            (3.8, -4.6),
            (1.6, -1.4),
            (-1.2, -0.9),
            (1.8, -0.4),
            (3.9, 2.8),
            (2.2, 6.6),
            (-3.4, 7.2),
        ]],
        4 => vec![
            vec![(1.4, -7.6), (-4.4, 2.2), (4.4, 2.2)],
            vec![(1.4, -3.4), (1.4, 7.6)],
        ],
        5 => vec![vec![
            (3.8, -7.4),
            (-3.4, -7.4),
            (-3.6, -1.0),
            (0.8, -1.6),
            (3.9, 1.4),
            (3.0, 5.8),
            (-3.5, 6.9),
        ]],
        6 => vec![vec![
            (2.9, -7.4),
            (-1.8, -3.2),
            (-3.5, 1.8),
            (-2.0, 6.4),
            (2.0, 6.9),
            (3.5, 3.8),
            (2.0, 0.7),
            (-2.9, 1.2),
        ]],
        7 => vec![vec![(-4.0, -7.4), (4.0, -7.4), (-0.8, 7.6)]],
        8 => vec![
            ellipse(0.0, -3.9, 3.2, 3.4),
            ellipse(0.0, 3.6, 3.9, 3.9),
        ],
        9 => vec![vec![
            (-2.9, 7.4),
            (1.8, 3.2),
            (3.5, -1.8),
            (2.0, -6.4),
            (-2.0, -6.9),
            (-3.5, -3.8),
            (-2.0, -0.7),
            (2.9, -1.2),
        ]],
        _ => Vec::new(),
    }
}

fn dist_sq_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (px, py) = p;
    let (ax, ay) = a;
    let (bx, by) = b;
    let (dx, dy) = (bx - ax, by - ay);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len_sq).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    (px - cx) * (px - cx) + (py - cy) * (py - cy)
}

/// Render one jittered instance of `digit` onto a 28x28 canvas.
fn render(digit: u8, rng: &mut ChaCha8Rng) -> RawImage {
    let dx: f64 = rng.random_range(-1.2..1.2);
    let dy: f64 = rng.random_range(-1.2..1.2);
    let sx: f64 = rng.random_range(0.9..1.1);
    let sy: f64 = rng.random_range(0.9..1.1);
    let rot: f64 = rng.random_range(-0.1..0.1);
    let sigma: f64 = rng.random_range(0.95..1.25);
    let ink: f64 = rng.random_range(0.8..1.0);
    let (cos_r, sin_r) = (rot.cos(), rot.sin());

    let place = |(x, y): (f64, f64)| -> (f64, f64) {
        let (x, y) = (x * sx, y * sy);
        let (x, y) = (x * cos_r - y * sin_r, x * sin_r + y * cos_r);
        (x + 13.5 + dx, y + 13.5 + dy)
    };
    let strokes: Vec<Stroke> = glyph(digit)
        .into_iter()
        .map(|s| s.into_iter().map(place).collect())
        .collect();

    let mut pixels = vec![0u8; IMG_SIDE * IMG_SIDE];
    for row in 0..IMG_SIDE {
        for col in 0..IMG_SIDE {
            let p = (col as f64 + 0.5, row as f64 + 0.5);
            let mut d_sq = f64::INFINITY;
            for s in &strokes {
                for w in s.windows(2) {
                    d_sq = d_sq.min(dist_sq_to_segment(p, w[0], w[1]));
                }
            }
            let v = 255.0 * ink * (-d_sq / (2.0 * sigma * sigma)).exp();
            pixels[row * IMG_SIDE + col] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RawImage { pixels }
}

/// Generate `per_class` instances of each requested class, interleaved.
pub fn generate(classes: &[u8], per_class: usize, seed: u64) -> Result<(Vec<RawImage>, Vec<u8>)> {
    if classes.iter().any(|&c| c > 9) {
        return Err(Error::Config("digit classes must be 0..=9".into()));
    }
    let mut images = Vec::with_capacity(classes.len() * per_class);
    let mut labels = Vec::with_capacity(classes.len() * per_class);
    let mut rngs: Vec<ChaCha8Rng> = classes
        .iter()
        .map(|&c| ChaCha8Rng::seed_from_u64(seeds::derive(seed, 1000 + c as u64)))
        .collect();
    for _ in 0..per_class {
        for (k, &class) in classes.iter().enumerate() {
            images.push(render(class, &mut rngs[k]));
            labels.push(class);
        }
    }
    Ok((images, labels))
}

/// Write a synthetic dataset into `dir` under the standard IDX file names.
pub fn write_dataset(dir: &Path, classes: &[u8], per_class: usize, seed: u64) -> Result<()> {
    let (images, labels) = generate(classes, per_class, seed)?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", dir.display())))?;
    let img_path = dir.join(IMAGES_FILE);
    let f = File::create(&img_path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", img_path.display())))?;
    dataio::write_images(BufWriter::new(f), &images)
        .map_err(|e| Error::Data(format!("write images: {e}")))?;
    let lbl_path = dir.join(LABELS_FILE);
    let f = File::create(&lbl_path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", lbl_path.display())))?;
    dataio::write_labels(BufWriter::new(f), &labels)
        .map_err(|e| Error::Data(format!("write labels: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let (a, _) = generate(&[0, 1, 2], 5, 7).unwrap();
        let (b, _) = generate(&[0, 1, 2], 5, 7).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate(&[0, 1, 2], 5, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn instances_vary_within_a_class() {
        let (images, labels) = generate(&[0], 4, 3).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        assert_ne!(images[0], images[1]);
        assert_ne!(images[1], images[2]);
    }

    #[test]
    fn images_have_ink_and_background() {
        let (images, _) = generate(&[0, 1, 2, 7, 8], 3, 1).unwrap();
        for img in &images {
            let dark = img.pixels.iter().filter(|&&p| p == 0).count();
            let bright = img.pixels.iter().filter(|&&p| p > 128).count();
            assert!(dark > 300, "background too small: {dark}");
            assert!(bright > 15, "stroke too faint: {bright}");
        }
    }

    #[test]
    fn classes_are_distinguishable_after_downscale() {
        let (images, labels) = generate(&[0, 1, 2], 20, 11).unwrap();
        let grids: Vec<(u8, Vec<f64>)> = images
            .iter()
            .zip(&labels)
            .map(|(img, &l)| (l, dataio::downscale(img)))
            .collect();
        let l2 = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        };
        // Mean within-class distance is smaller than cross-class distance.
        let mut within = (0.0, 0usize);
        let mut across = (0.0, 0usize);
        for i in 0..grids.len() {
            for j in i + 1..grids.len() {
                let d = l2(&grids[i].1, &grids[j].1);
                if grids[i].0 == grids[j].0 {
                    within = (within.0 + d, within.1 + 1);
                } else {
                    across = (across.0 + d, across.1 + 1);
                }
            }
        }
        let within = within.0 / within.1 as f64;
        let across = across.0 / across.1 as f64;
        assert!(
            within < across,
            "within {within} should be below across {across}"
        );
    }

    #[test]
    fn idx_files_parse_back(){
        let dir = std::env::temp_dir().join(format!("polychron-synth-test-{}", std::process::id()));
        write_dataset(&dir, &[0, 1, 2], 3, 5).unwrap();
        let images = dataio::read_images(&dir.join(IMAGES_FILE)).unwrap();
        let labels = dataio::read_labels(&dir.join(LABELS_FILE)).unwrap();
        assert_eq!(images.len(), 9);
        assert_eq!(labels.len(), 9);
        std::fs::remove_dir_all(&dir).ok();
    }
}
