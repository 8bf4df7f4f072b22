//! Cross-module oracle checks: the simulator's ground truth is compared
//! against what the downstream stages actually compute.

use slow_elm::event::{parse_event_stream, serialize_event_stream, window_by_count, Format};
use slow_elm::roi::{binarize, extract, BinaryImage, RoiBox, RoiParams};
use slow_elm::synth::{
    builtin_shapes, generate_recording, generate_suite, load_labels, render_edge_mask,
    DistanceClass, ElevationClass, RigConfig, SuiteConfig,
};

fn rig(seed: u64) -> RigConfig {
    RigConfig {
        omega_rad_s: std::f64::consts::PI,
        distance: DistanceClass::Near,
        elevation: ElevationClass::Low,
        events_per_degree: 25.0,
        noise_rate: 0.05,
        seed,
        width: 128,
        height: 128,
    }
}

/// A ~10k-event generated stream survives a serialize/parse round trip in
/// both formats, field by field.
#[test]
fn generated_stream_round_trips_in_both_formats() {
    let shapes = builtin_shapes();
    let stream = generate_recording(&shapes[6], &rig(11), 400.0).unwrap();
    assert!(stream.events.len() >= 9_000, "want ~10k events");

    for format in [Format::EvtBin, Format::EvtCsv] {
        let bytes = serialize_event_stream(&stream, format);
        let parsed = parse_event_stream(&bytes, format, Some((128, 128))).unwrap();
        assert_eq!(parsed.rejected_out_of_bounds, 0);
        assert_eq!(parsed.stream.width, stream.width);
        assert_eq!(parsed.stream.height, stream.height);
        assert_eq!(parsed.stream.events, stream.events);
    }
}

/// Binarized event windows reproduce the generator's analytic edge mask:
/// >= 90% of mask pixels have an event pixel within one pixel (the event
/// jitter plus rasterization tolerance).
#[test]
fn binarized_window_covers_ground_truth_edge_mask() {
    let shapes = builtin_shapes();
    let mut cfg = rig(5);
    cfg.noise_rate = 0.0;
    cfg.events_per_degree = 400.0;

    for shape in [&shapes[3], &shapes[6]] {
        let stream = generate_recording(shape, &cfg, 10.0).unwrap();
        let windows = window_by_count(&stream, 800, 800);
        assert!(!windows.is_empty());
        let win = &windows[0];
        let ann = stream.metadata.angle.unwrap();
        let mid_t = (win.start_t + win.end_t) / 2;
        let mask = render_edge_mask(shape, &cfg, ann.angle_deg(mid_t));

        let full = RoiBox {
            x_min: 0,
            x_max: 127,
            y_min: 0,
            y_max: 127,
        };
        let img = binarize(&win.events, &full);
        let covered_within_one = |m: &BinaryImage, x: usize, y: usize| -> bool {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0
                        && ny >= 0
                        && (nx as usize) < m.width
                        && (ny as usize) < m.height
                        && img.get(nx as usize, ny as usize) != 0
                    {
                        return true;
                    }
                }
            }
            false
        };

        let mut edge_pixels = 0usize;
        let mut hit = 0usize;
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.get(x, y) != 0 {
                    edge_pixels += 1;
                    if covered_within_one(&img, x, y) {
                        hit += 1;
                    }
                }
            }
        }
        assert!(edge_pixels > 50, "mask should not be degenerate");
        let frac = hit as f64 / edge_pixels as f64;
        assert!(
            frac >= 0.90,
            "shape {}: only {frac:.3} of {edge_pixels} edge pixels covered",
            shape.name
        );
    }
}

/// Sanity floor: the synthetic objects are separable by a nearest-centroid
/// classifier on raw resized images at a fixed pose.
#[test]
fn nearest_centroid_at_fixed_pose_exceeds_90_percent() {
    let shapes = builtin_shapes();
    let params = RoiParams {
        trim_fraction: 0.9,
        smooth_dist: 10,
        side: 60,
    };
    let d = params.side * params.side;

    // For each object, collect windows whose span starts at pose 0 (mod 360),
    // across a couple of independently seeded recordings.
    let mut images: Vec<(usize, Vec<f64>)> = Vec::new();
    for (oid, shape) in shapes.iter().enumerate() {
        for seed in [21u64, 22, 23] {
            let stream = generate_recording(shape, &rig(seed), 720.0).unwrap();
            // 400 events at 25/deg span 16 degrees; stride one revolution
            // keeps every window at the same pose.
            let rev_stride = (360.0 * 25.0) as usize;
            for win in window_by_count(&stream, 400, rev_stride) {
                let (v, _, _) = extract::<f64>(&win.events, &params, None, (128, 128));
                images.push((oid, v.values));
            }
        }
    }
    assert!(images.len() >= 8 * 3 * 2);

    let mut centroids = vec![vec![0.0f64; d]; shapes.len()];
    let mut counts = vec![0usize; shapes.len()];
    for (oid, v) in &images {
        counts[*oid] += 1;
        for (c, x) in centroids[*oid].iter_mut().zip(v) {
            *c += x;
        }
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        assert!(*n > 0);
        for v in c.iter_mut() {
            *v /= *n as f64;
        }
    }

    let correct = images
        .iter()
        .filter(|(oid, v)| {
            let nearest = centroids
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let da: f64 = a.iter().zip(v.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
                    let db: f64 = b.iter().zip(v.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            nearest == *oid
        })
        .count();
    let acc = correct as f64 / images.len() as f64;
    assert!(acc > 0.90, "nearest-centroid accuracy {acc:.3}");
}

/// Every manifest entry's label sidecar has exactly one row per window at
/// the manifest's window parameters.
#[test]
fn label_rows_match_window_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = SuiteConfig {
        num_objects: 2,
        omegas_rad_s: vec![std::f64::consts::PI],
        distances: vec![DistanceClass::Near],
        elevations: vec![ElevationClass::Low, ElevationClass::High],
        events_per_degree: 8.0,
        noise_rate: 0.05,
        total_rotation_deg: 360.0,
        seed: 3,
        width: 128,
        height: 128,
        window_count: 400,
        window_stride: 200,
        pose_bins: 8,
    };
    let manifest = generate_suite(&config, dir.path()).unwrap();
    assert_eq!(manifest.entries.len(), 2 * 1 * 1 * 2);

    for entry in &manifest.entries {
        let bytes = std::fs::read(dir.path().join(&entry.path)).unwrap();
        let parsed = parse_event_stream(&bytes, Format::EvtBin, None).unwrap();
        let windows = window_by_count(
            &parsed.stream,
            manifest.window_count,
            manifest.window_stride,
        );
        let labels = load_labels(&dir.path().join(&entry.labels_path)).unwrap();
        assert_eq!(labels.len(), windows.len(), "entry {}", entry.path);
        assert_eq!(entry.num_windows, windows.len());
        for (i, (idx, oid, _angle)) in labels.iter().enumerate() {
            assert_eq!(*idx, i);
            assert_eq!(*oid, entry.object_id);
        }
    }
}
