//! Spatial region-of-interest extraction and binary-image rendering.
//!
//! A window of events is cropped to a rectangle holding a trimmed fraction
//! of the events around their centroid, with an optional smoothness prior
//! that drops events far outside the previous window's box. The crop is
//! rendered as a binary occupancy image, resized to a fixed square and
//! flattened into a `[-1, 1]` input vector.

use crate::event::Event;
use crate::Scalar;

/// Inclusive rectangular pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiBox {
    pub x_min: u16,
    pub x_max: u16,
    pub y_min: u16,
    pub y_max: u16,
}

impl RoiBox {
    pub fn width(&self) -> usize {
        (self.x_max - self.x_min) as usize + 1
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min) as usize + 1
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Chebyshev distance from a pixel to the box (0 inside).
    pub fn chebyshev_outside(&self, x: u16, y: u16) -> u16 {
        let dx = if x < self.x_min {
            self.x_min - x
        } else if x > self.x_max {
            x - self.x_max
        } else {
            0
        };
        let dy = if y < self.y_min {
            self.y_min - y
        } else if y > self.y_max {
            y - self.y_max
        } else {
            0
        };
        dx.max(dy)
    }
}

/// Row-major binary raster; square once it has been through [`resize_square`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Fraction of pixels equal between two same-size images.
    pub fn agreement(&self, other: &BinaryImage) -> f64 {
        assert_eq!(self.pixels.len(), other.pixels.len(), "size mismatch");
        let same = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.pixels.len() as f64
    }
}

/// Flattened image scaled to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputVector<T> {
    pub values: Vec<T>,
}

/// Result of ROI estimation on one window.
#[derive(Debug, Clone)]
pub struct RoiEstimate {
    pub roi: RoiBox,
    /// Events inside the box, in input order.
    pub retained: Vec<Event>,
    /// True when the smoothness prior rejected every event and the
    /// estimator fell back to prior-free estimation.
    pub prior_fallback: bool,
}

/// Estimate the spatial ROI of a window.
///
/// With a previous box, events whose Chebyshev distance outside that box
/// exceeds `smooth_dist` are excluded first. The box is then the per-axis
/// quantile trim around the centroid of the surviving events: on each side
/// of the centroid along each axis, `floor((1 - trim_fraction) * side_count)`
/// events are trimmed away. Degenerate boxes are widened to at least 2x2
/// around the centroid, clamped to the sensor.
pub fn estimate_spatial_roi(
    events: &[Event],
    trim_fraction: f64,
    prev_roi: Option<&RoiBox>,
    smooth_dist: u16,
    geometry: (u16, u16),
) -> RoiEstimate {
    assert!(!events.is_empty(), "ROI estimation needs a nonempty window");
    assert!(
        trim_fraction > 0.0 && trim_fraction <= 1.0,
        "trim_fraction in (0, 1]"
    );
    let mut prior_fallback = false;
    let filtered: Vec<&Event> = match prev_roi {
        Some(prev) => {
            let kept: Vec<&Event> = events
                .iter()
                .filter(|e| prev.chebyshev_outside(e.x, e.y) <= smooth_dist)
                .collect();
            if kept.is_empty() {
                prior_fallback = true;
                events.iter().collect()
            } else {
                kept
            }
        }
        None => events.iter().collect(),
    };

    let cx = filtered.iter().map(|e| e.x as f64).sum::<f64>() / filtered.len() as f64;
    let cy = filtered.iter().map(|e| e.y as f64).sum::<f64>() / filtered.len() as f64;

    let (x_min, x_max) = axis_bounds(filtered.iter().map(|e| e.x), cx, trim_fraction);
    let (y_min, y_max) = axis_bounds(filtered.iter().map(|e| e.y), cy, trim_fraction);

    let roi = ensure_min_box(x_min, x_max, y_min, y_max, cx, cy, geometry);

    let retained = filtered
        .into_iter()
        .filter(|e| roi.contains(e.x, e.y))
        .copied()
        .collect();
    RoiEstimate {
        roi,
        retained,
        prior_fallback,
    }
}

fn axis_bounds(values: impl Iterator<Item = u16>, center: f64, trim_fraction: f64) -> (u16, u16) {
    let mut sorted: Vec<u16> = values.collect();
    sorted.sort_unstable();
    let m = sorted.len();
    let below = sorted.iter().filter(|&&v| (v as f64) < center).count();
    let above = sorted.iter().filter(|&&v| (v as f64) > center).count();
    // The epsilon guards the floor against binary rounding, e.g.
    // (1 - 0.9) * 50 = 4.999...; the intended count is 5.
    let drop_lo = ((1.0 - trim_fraction) * below as f64 + 1e-9).floor() as usize;
    let drop_hi = ((1.0 - trim_fraction) * above as f64 + 1e-9).floor() as usize;
    let lo = sorted[drop_lo.saturating_sub(1)];
    let hi = sorted[m - 1 - drop_hi.min(m - 1)];
    (lo, hi.max(lo))
}

fn ensure_min_box(
    x_min: u16,
    x_max: u16,
    y_min: u16,
    y_max: u16,
    cx: f64,
    cy: f64,
    (width, height): (u16, u16),
) -> RoiBox {
    let fix = |lo: u16, hi: u16, c: f64, limit: u16| -> (u16, u16) {
        if hi > lo {
            (lo, hi)
        } else {
            let c = c.round() as i64;
            let mut lo = (c - 1).clamp(0, limit as i64 - 2) as u16;
            let mut hi = lo + 1;
            if hi >= limit {
                hi = limit - 1;
                lo = hi - 1;
            }
            (lo, hi)
        }
    };
    let (x_min, x_max) = fix(x_min, x_max, cx, width);
    let (y_min, y_max) = fix(y_min, y_max, cy, height);
    RoiBox {
        x_min,
        x_max,
        y_min,
        y_max,
    }
}

/// Render events within the box as a binary occupancy image; a pixel is 1
/// iff at least one event landed on it.
pub fn binarize(events: &[Event], roi: &RoiBox) -> BinaryImage {
    let mut img = BinaryImage::zeros(roi.width(), roi.height());
    for e in events {
        if roi.contains(e.x, e.y) {
            img.set((e.x - roi.x_min) as usize, (e.y - roi.y_min) as usize, 1);
        }
    }
    img
}

/// Nearest-neighbor resize to `side x side`; output stays binary.
pub fn resize_square(image: &BinaryImage, side: usize) -> BinaryImage {
    assert!(image.width > 0 && image.height > 0, "source must be nonempty");
    assert!(side > 0);
    let mut out = BinaryImage::zeros(side, side);
    for oy in 0..side {
        let sy = (((oy as f64 + 0.5) * image.height as f64 / side as f64) as usize)
            .min(image.height - 1);
        for ox in 0..side {
            let sx = (((ox as f64 + 0.5) * image.width as f64 / side as f64) as usize)
                .min(image.width - 1);
            out.set(ox, oy, image.get(sx, sy));
        }
    }
    out
}

/// Row-major flatten with 0 -> -1 and 1 -> +1.
pub fn to_input_vector<T: Scalar>(image: &BinaryImage) -> InputVector<T> {
    let one = <T as num_traits::One>::one();
    InputVector {
        values: image
            .pixels
            .iter()
            .map(|&p| if p != 0 { one } else { -one })
            .collect(),
    }
}

/// Parameters for the full window -> vector chain.
#[derive(Debug, Clone, Copy)]
pub struct RoiParams {
    pub trim_fraction: f64,
    pub smooth_dist: u16,
    pub side: usize,
}

impl Default for RoiParams {
    fn default() -> Self {
        RoiParams {
            trim_fraction: 0.9,
            smooth_dist: 10,
            side: 60,
        }
    }
}

/// Full chain: ROI estimate, binarize, resize, scale. Returns the vector and
/// the box to thread into the next window's smoothness prior.
pub fn extract<T: Scalar>(
    events: &[Event],
    params: &RoiParams,
    prev_roi: Option<&RoiBox>,
    geometry: (u16, u16),
) -> (InputVector<T>, RoiBox, bool) {
    let est = estimate_spatial_roi(
        events,
        params.trim_fraction,
        prev_roi,
        params.smooth_dist,
        geometry,
    );
    let img = binarize(&est.retained, &est.roi);
    let sq = resize_square(&img, params.side);
    (to_input_vector(&sq), est.roi, est.prior_fallback)
}
