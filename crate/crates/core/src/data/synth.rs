use super::{DataError, Dataset, Labeling, Prng};
use crate::nn::Tensor;

/// Gaussian blobs: `num_classes` centers drawn from N(0, I) in `dim`
/// dimensions, each sample's class drawn uniformly, then the sample placed at
/// its center plus `spread`-scaled Gaussian noise.
pub fn synth_blobs(n: usize, num_classes: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(DataError::InvalidArgument(format!("spread {spread} must be positive")));
    }
    if num_classes == 0 || dim == 0 || n < num_classes {
        return Err(DataError::InvalidArgument(format!(
            "need n >= num_classes > 0 and dim > 0 (n={n}, classes={num_classes}, dim={dim})"
        )));
    }
    let mut rng = Prng::new(seed);
    let centers: Vec<f64> = (0..num_classes * dim).map(|_| rng.normal()).collect();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.below(num_classes as u64) as usize;
        labels.push(c);
        data.extend(centers[c * dim..(c + 1) * dim].iter().map(|&m| m + spread * rng.normal()));
    }
    Dataset::new(Tensor::new(vec![n, dim], data)?, labels, num_classes, Labeling::True)
}

/// Number of shape families produced by [`synth_shapes`].
pub const SHAPE_CLASSES: usize = 10;

#[derive(Clone, Copy)]
struct Point(f64, f64);

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn polyline_distance(p: Point, pts: &[Point], closed: bool) -> f64 {
    let mut d = f64::INFINITY;
    for w in pts.windows(2) {
        d = d.min(segment_distance(p, w[0], w[1]));
    }
    if closed && pts.len() > 2 {
        d = d.min(segment_distance(p, pts[pts.len() - 1], pts[0]));
    }
    d
}

/// Stroke intensity for a pixel at distance `d` from the stroke center line.
fn ink(d: f64, half_width: f64) -> f64 {
    (1.0 - (d - half_width)).clamp(0.0, 1.0)
}

/// Procedural grayscale images of ten line-drawing families (bars, diagonals,
/// ring, square, plus, cross, triangle, disk) with random position, size,
/// stroke width, rotation jitter and background noise. Samples have shape
/// `(1, side, side)` with values in `[0, 1]`; the family index is the label.
pub fn synth_shapes(n: usize, side: usize, seed: u64) -> Result<Dataset, DataError> {
    if n == 0 || side < 8 {
        return Err(DataError::InvalidArgument(format!("need n > 0 and side >= 8 (n={n}, side={side})")));
    }
    let mut rng = Prng::new(seed);
    let s = side as f64;
    let mut data = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.below(SHAPE_CLASSES as u64) as usize;
        let cx = s / 2.0 + (rng.next_f64() - 0.5) * s * 0.25;
        let cy = s / 2.0 + (rng.next_f64() - 0.5) * s * 0.25;
        let r = s * (0.2 + 0.15 * rng.next_f64());
        let half_width = 0.6 + 0.8 * rng.next_f64();
        let angle = (rng.next_f64() - 0.5) * 0.5;
        let noise = 0.08 * rng.next_f64();
        let (sin, cos) = angle.sin_cos();
        let at = |x: f64, y: f64| Point(cx + x * cos - y * sin, cy + x * sin + y * cos);

        let strokes: Vec<(Vec<Point>, bool)> = match class {
            0 => vec![(vec![at(-r, 0.0), at(r, 0.0)], false)],
            1 => vec![(vec![at(0.0, -r), at(0.0, r)], false)],
            2 => vec![(vec![at(-r, -r), at(r, r)], false)],
            3 => vec![(vec![at(-r, r), at(r, -r)], false)],
            4 => {
                let ring = (0..24)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / 24.0;
                        at(r * t.cos(), r * t.sin())
                    })
                    .collect();
                vec![(ring, true)]
            }
            5 => vec![(vec![at(-r, -r), at(r, -r), at(r, r), at(-r, r)], true)],
            6 => vec![(vec![at(-r, 0.0), at(r, 0.0)], false), (vec![at(0.0, -r), at(0.0, r)], false)],
            7 => vec![(vec![at(-r, -r), at(r, r)], false), (vec![at(-r, r), at(r, -r)], false)],
            8 => vec![(vec![at(0.0, -r), at(r, r), at(-r, r)], true)],
            _ => Vec::new(),
        };
        let disk_radius = r * 0.7;
        for y in 0..side {
            for x in 0..side {
                let p = Point(x as f64 + 0.5, y as f64 + 0.5);
                let v = if class == 9 {
                    let d = ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt();
                    (disk_radius + 0.5 - d).clamp(0.0, 1.0)
                } else {
                    strokes
                        .iter()
                        .map(|(pts, closed)| ink(polyline_distance(p, pts, *closed), half_width))
                        .fold(0.0, f64::max)
                };
                data.push((v + noise * rng.next_f64()).min(1.0));
            }
        }
        labels.push(class);
    }
    Dataset::new(Tensor::new(vec![n, 1, side, side], data)?, labels, SHAPE_CLASSES, Labeling::True)
}
