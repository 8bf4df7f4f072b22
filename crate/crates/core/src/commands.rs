//! High-level pipeline commands backing the CLI: dataset synthesis,
//! training, evaluation sweeps and throughput benchmarking. Everything here
//! is deterministic per (seed, config, platform).

use crate::config::RunConfig;
use crate::event::{self, Format};
use crate::model::{
    self, fit_output, fit_projection, hidden_activations_batch, init_hidden, project_batch,
    ProjectionMode,
};
use crate::pose::{balance_by_duplication, classify_single, encode_target, PoseLabel, VoteState};
use crate::roi::{self, RoiParams};
use crate::synth::{self, Manifest, ManifestEntry};
use crate::{Error, Real, Result, SlowElmModel};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

/// Extracted input vectors with their labels and recording structure.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    /// samples x side^2
    pub x: DMatrix<Real>,
    pub labels: Vec<PoseLabel>,
    pub angles: Vec<f64>,
    /// Manifest entry index per sample.
    pub entry_index: Vec<usize>,
    /// Consecutive-run lengths, aligned with `entry_order`.
    pub recording_lens: Vec<usize>,
    pub entry_order: Vec<usize>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn entry_format(entry: &ManifestEntry) -> Format {
    if entry.path.ends_with(".evtb") || entry.path.ends_with(".bin") {
        Format::EvtBin
    } else {
        Format::EvtCsv
    }
}

/// Window every recording of one split and run the ROI chain.
pub fn extract_features(
    manifest: &Manifest,
    dir: &Path,
    config: &RunConfig,
    split: &str,
) -> Result<FeatureSet> {
    let params = RoiParams {
        trim_fraction: config.trim_fraction,
        smooth_dist: config.smooth_dist,
        side: config.side,
    };
    let geometry = (manifest.width, manifest.height);
    let selected: Vec<(usize, &ManifestEntry)> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split == split)
        .collect();
    if selected.is_empty() {
        return Err(Error::Manifest(format!("no '{split}' entries in manifest")));
    }

    type PerEntry = (usize, Vec<Vec<Real>>, Vec<PoseLabel>, Vec<f64>);
    let per_entry: Vec<Result<PerEntry>> = selected
        .par_iter()
        .map(|&(idx, entry)| -> Result<PerEntry> {
            let bytes = std::fs::read(dir.join(&entry.path))?;
            let parsed =
                event::parse_event_stream(&bytes, entry_format(entry), Some(geometry))?;
            let windows = event::window_by_count(
                &parsed.stream,
                manifest.window_count,
                manifest.window_stride,
            );
            let labels = synth::load_labels(&dir.join(&entry.labels_path))?;
            if labels.len() != windows.len() {
                return Err(Error::Manifest(format!(
                    "{}: {} label rows but {} windows",
                    entry.labels_path,
                    labels.len(),
                    windows.len()
                )));
            }
            let mut vectors = Vec::with_capacity(windows.len());
            let mut window_labels = Vec::with_capacity(windows.len());
            let mut angles = Vec::with_capacity(windows.len());
            let mut prev = None;
            for (w, &(widx, obj, angle)) in windows.iter().zip(&labels) {
                debug_assert_eq!(widx, w.window_index);
                let (vec, roi_box, _flag) =
                    roi::extract::<Real>(&w.events, &params, prev.as_ref(), geometry);
                prev = Some(roi_box);
                vectors.push(vec.values);
                window_labels.push(PoseLabel::from_angle(obj, angle, manifest.pose_bins)?);
                angles.push(angle);
            }
            Ok((idx, vectors, window_labels, angles))
        })
        .collect();

    let mut rows: Vec<Vec<Real>> = Vec::new();
    let mut labels = Vec::new();
    let mut angles = Vec::new();
    let mut entry_index = Vec::new();
    let mut recording_lens = Vec::new();
    let mut entry_order = Vec::new();
    for result in per_entry {
        let (idx, vectors, wl, wa) = result?;
        recording_lens.push(vectors.len());
        entry_order.push(idx);
        for v in vectors {
            rows.push(v);
            entry_index.push(idx);
        }
        labels.extend(wl);
        angles.extend(wa);
    }
    if rows.is_empty() {
        return Err(Error::Manifest(format!(
            "split '{split}' produced no windows; check window_count vs recording length"
        )));
    }
    let dim = config.side * config.side;
    let x = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    Ok(FeatureSet {
        x,
        labels,
        angles,
        entry_index,
        recording_lens,
        entry_order,
    })
}

/// Projection-constraint residuals on training data.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintResiduals {
    pub max_abs_mean: f64,
    pub max_var_deviation: f64,
    pub max_abs_corr: f64,
}

/// Mean / unit-variance / decorrelation residuals of projected features.
pub fn constraint_residuals(y: &DMatrix<Real>) -> ConstraintResiduals {
    let (m, k) = (y.nrows(), y.ncols());
    let mut means = vec![0.0; k];
    for j in 0..k {
        means[j] = y.column(j).iter().sum::<f64>() / m as f64;
    }
    let mut vars = vec![0.0; k];
    for j in 0..k {
        vars[j] = y
            .column(j)
            .iter()
            .map(|v| (v - means[j]).powi(2))
            .sum::<f64>()
            / (m as f64 - 1.0);
    }
    let mut max_corr = 0.0f64;
    for a in 0..k {
        for b in (a + 1)..k {
            let mut cov = 0.0;
            for i in 0..m {
                cov += (y[(i, a)] - means[a]) * (y[(i, b)] - means[b]);
            }
            cov /= m as f64 - 1.0;
            let corr = cov / (vars[a].sqrt() * vars[b].sqrt());
            max_corr = max_corr.max(corr.abs());
        }
    }
    ConstraintResiduals {
        max_abs_mean: means.iter().fold(0.0, |acc, v| acc.max(v.abs())),
        max_var_deviation: vars.iter().fold(0.0, |acc, v| acc.max((v - 1.0).abs())),
        max_abs_corr: max_corr,
    }
}

/// Synthesize the dataset suite into `out_dir` and echo the resolved config.
pub fn run_synth(config: &RunConfig, out_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let manifest = synth::generate_suite(&config.suite_config(), out_dir)?;
    std::fs::write(out_dir.join("synth_config.txt"), config.render())?;
    Ok(manifest)
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: SlowElmModel,
    pub residuals: Option<ConstraintResiduals>,
    pub log: String,
}

/// Train on the manifest's train split; optionally write model and log files.
pub fn run_train(
    config: &RunConfig,
    data_dir: &Path,
    model_path: Option<&Path>,
    log_path: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let manifest = Manifest::load(&data_dir.join("manifest.json"))?;
    let features = extract_features(&manifest, data_dir, config, "train")?;
    let input_dim = config.side * config.side;

    let hidden = init_hidden::<Real>(input_dim, config.n_hidden, config.seed);
    let h = hidden_activations_batch(&features.x, &hidden)?;
    let projection = fit_projection(&h, &features.recording_lens, config.k, config.mode, config.eps)?;
    let y = project_batch(&h, &projection)?;

    let residuals = match config.mode {
        ProjectionMode::Slow | ProjectionMode::Fast => Some(constraint_residuals(&y)),
        _ => None,
    };

    let m_classes = (manifest.num_objects * manifest.pose_bins) as usize;
    let mut targets = DMatrix::zeros(features.len(), m_classes);
    for (i, label) in features.labels.iter().enumerate() {
        let row: Vec<Real> = encode_target(label, manifest.num_objects, manifest.pose_bins);
        for (j, v) in row.into_iter().enumerate() {
            targets[(i, j)] = v;
        }
    }
    let output = fit_output(&y, &targets, config.c)?;

    let model = SlowElmModel {
        hidden,
        projection,
        output,
        num_objects: manifest.num_objects,
        pose_bins: manifest.pose_bins,
    };
    model.validate()?;

    let mut log = String::new();
    log.push_str("# resolved configuration\n");
    log.push_str(&config.render());
    log.push_str(&format!("train_samples={}\n", features.len()));
    if let Some(r) = residuals {
        log.push_str(&format!("residual_max_abs_mean={:e}\n", r.max_abs_mean));
        log.push_str(&format!("residual_max_var_dev={:e}\n", r.max_var_deviation));
        log.push_str(&format!("residual_max_abs_corr={:e}\n", r.max_abs_corr));
    }
    log.push_str("delta_energies=");
    log.push_str(
        &model
            .projection
            .delta_energies
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    log.push('\n');

    if let Some(path) = model_path {
        model::save_model(&model, path)?;
    }
    if let Some(path) = log_path {
        std::fs::write(path, &log)?;
    }
    Ok(TrainOutcome {
        model,
        residuals,
        log,
    })
}

/// Which evaluation sweeps to run.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalSweeps {
    pub speed_distance: bool,
    pub projection_count: bool,
    pub multiview: bool,
}

impl EvalSweeps {
    pub fn all() -> Self {
        EvalSweeps {
            speed_distance: true,
            projection_count: true,
            multiview: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub overall_object_accuracy: f64,
    pub balanced_samples: usize,
    /// object-level confusion, rows = truth
    pub confusion_object: Vec<Vec<usize>>,
    /// flat pose-class confusion, rows = truth
    pub confusion_flat: Vec<Vec<usize>>,
    /// (omega, distance label, accuracy, samples)
    pub speed_distance: Vec<(f64, String, f64, usize)>,
    /// (mode, k, object accuracy)
    pub projection_sweep: Vec<(String, usize, f64)>,
    /// (span degrees, object accuracy, decisions)
    pub multiview: Vec<(f64, f64, usize)>,
}

fn accuracy_of(balanced: &[(PoseLabel, usize)], decisions: &[u32]) -> f64 {
    let correct = balanced
        .iter()
        .filter(|(label, row)| decisions[*row] == label.object_id)
        .count();
    correct as f64 / balanced.len() as f64
}

/// Evaluate a model on the manifest's test split.
///
/// Single-sample metrics are computed on the duplication-balanced test set;
/// the multi-view sweep slides a pose-span window over each raw recording
/// and averages over all starting poses.
pub fn run_eval(
    model: &SlowElmModel,
    config: &RunConfig,
    data_dir: &Path,
    out_dir: Option<&Path>,
    sweeps: EvalSweeps,
) -> Result<EvalReport> {
    config.validate()?;
    let manifest = Manifest::load(&data_dir.join("manifest.json"))?;
    let test = extract_features(&manifest, data_dir, config, "test")?;
    let pose_bins = manifest.pose_bins;
    let num_objects = manifest.num_objects;
    let m_classes = (num_objects * pose_bins) as usize;

    // Score every distinct test window once.
    let scores = model.predict_batch(&test.x)?;
    let mut decisions = Vec::with_capacity(test.len());
    let mut flat_predictions = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let row: Vec<Real> = scores.row(i).iter().copied().collect();
        decisions.push(classify_single(&row, num_objects, pose_bins)?);
        let mut best = 0usize;
        for (j, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = j;
            }
        }
        flat_predictions.push(best);
    }

    // Balance the evaluation set by random duplication.
    let indexed: Vec<(PoseLabel, usize)> = test
        .labels
        .iter()
        .copied()
        .zip(0..test.len())
        .collect();
    let balanced = balance_by_duplication(&indexed, num_objects, pose_bins, config.balance_seed)?;

    let overall = accuracy_of(&balanced, &decisions);
    let mut confusion_object = vec![vec![0usize; num_objects as usize]; num_objects as usize];
    let mut confusion_flat = vec![vec![0usize; m_classes]; m_classes];
    for (label, row) in &balanced {
        confusion_object[label.object_id as usize][decisions[*row] as usize] += 1;
        confusion_flat[label.flat_class(pose_bins)][flat_predictions[*row]] += 1;
    }

    let mut speed_distance = Vec::new();
    if sweeps.speed_distance {
        let mut keys: Vec<(u64, String)> = Vec::new();
        for e in manifest.test_entries() {
            let key = (e.omega_rad_s.to_bits(), e.distance.as_str().to_string());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.sort();
        for (omega_bits, dist) in keys {
            let omega = f64::from_bits(omega_bits);
            let subset: Vec<&(PoseLabel, usize)> = balanced
                .iter()
                .filter(|(_, row)| {
                    let e = &manifest.entries[test.entry_index[*row]];
                    e.omega_rad_s.to_bits() == omega_bits && e.distance.as_str() == dist
                })
                .collect();
            if subset.is_empty() {
                continue;
            }
            let correct = subset
                .iter()
                .filter(|(l, row)| decisions[*row] == l.object_id)
                .count();
            speed_distance.push((omega, dist, correct as f64 / subset.len() as f64, subset.len()));
        }
    }

    let mut projection_sweep = Vec::new();
    if sweeps.projection_count {
        // Refit projection + output per (mode, k) on the same hidden layer so
        // the comparison isolates the selection criterion.
        let train = extract_features(&manifest, data_dir, config, "train")?;
        let h_train = hidden_activations_batch(&train.x, &model.hidden)?;
        let h_test = hidden_activations_batch(&test.x, &model.hidden)?;
        let mut targets = DMatrix::zeros(train.len(), m_classes);
        for (i, label) in train.labels.iter().enumerate() {
            targets[(i, label.flat_class(pose_bins))] = 1.0;
        }
        for mode in [
            ProjectionMode::Slow,
            ProjectionMode::Pca,
            ProjectionMode::Identity,
            ProjectionMode::Fast,
        ] {
            for &k in &config.k_sweep {
                let proj = match fit_projection(&h_train, &train.recording_lens, k, mode, config.eps)
                {
                    Ok(p) => p,
                    Err(Error::RankDeficient { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let y_train = project_batch(&h_train, &proj)?;
                let out = fit_output(&y_train, &targets, config.c)?;
                let y_test = project_batch(&h_test, &proj)?;
                let scores = y_test * &out.w_out;
                let mut sweep_decisions = Vec::with_capacity(test.len());
                for i in 0..test.len() {
                    let row: Vec<Real> = scores.row(i).iter().copied().collect();
                    sweep_decisions.push(classify_single(&row, num_objects, pose_bins)?);
                }
                let acc = accuracy_of(&balanced, &sweep_decisions);
                projection_sweep.push((mode.as_str().to_string(), k, acc));
            }
        }
    }

    let mut multiview = Vec::new();
    if sweeps.multiview {
        for &span in &config.multiview_spans_deg {
            let mut correct = 0usize;
            let mut total = 0usize;
            let mut offset = 0usize;
            for (run, &len) in test.recording_lens.iter().enumerate() {
                let entry = &manifest.entries[test.entry_order[run]];
                for start in 0..len {
                    let mut votes = VoteState::new(num_objects);
                    let a0 = test.angles[offset + start];
                    let mut j = start;
                    while j < len && test.angles[offset + j] - a0 <= span {
                        votes.update(decisions[offset + j]);
                        j += 1;
                    }
                    if votes.decide()? == entry.object_id {
                        correct += 1;
                    }
                    total += 1;
                }
                offset += len;
            }
            multiview.push((span, correct as f64 / total as f64, total));
        }
    }

    let report = EvalReport {
        overall_object_accuracy: overall,
        balanced_samples: balanced.len(),
        confusion_object,
        confusion_flat,
        speed_distance,
        projection_sweep,
        multiview,
    };
    if let Some(dir) = out_dir {
        write_report(&report, config, dir)?;
    }
    Ok(report)
}

fn write_confusion(path: &Path, confusion: &[Vec<usize>]) -> Result<()> {
    let mut s = String::from("truth\\prediction");
    for j in 0..confusion.len() {
        s.push_str(&format!(",{j}"));
    }
    s.push('\n');
    for (i, row) in confusion.iter().enumerate() {
        s.push_str(&i.to_string());
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    Ok(std::fs::write(path, s)?)
}

fn write_report(report: &EvalReport, config: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::from("metric,value\n");
    summary.push_str(&format!(
        "overall_object_accuracy,{}\n",
        report.overall_object_accuracy
    ));
    summary.push_str(&format!("balanced_samples,{}\n", report.balanced_samples));
    std::fs::write(dir.join("summary.csv"), summary)?;
    write_confusion(&dir.join("confusion_object.csv"), &report.confusion_object)?;
    write_confusion(&dir.join("confusion_flat.csv"), &report.confusion_flat)?;

    let mut sd = String::from("omega_rad_s,distance,object_accuracy,samples\n");
    for (omega, dist, acc, n) in &report.speed_distance {
        sd.push_str(&format!("{omega},{dist},{acc},{n}\n"));
    }
    std::fs::write(dir.join("speed_distance.csv"), sd)?;

    let mut ps = String::from("mode,k,object_accuracy\n");
    for (mode, k, acc) in &report.projection_sweep {
        ps.push_str(&format!("{mode},{k},{acc}\n"));
    }
    std::fs::write(dir.join("projection_sweep.csv"), ps)?;

    let mut mv = String::from("span_deg,object_accuracy,decisions\n");
    for (span, acc, n) in &report.multiview {
        mv.push_str(&format!("{span},{acc},{n}\n"));
    }
    std::fs::write(dir.join("multiview.csv"), mv)?;
    std::fs::write(dir.join("eval_config.txt"), config.render())?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub label: String,
    pub mean_ms_per_sample: f64,
    pub p99_ms: f64,
    pub classifications_per_sec: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub hardware: String,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# hardware: {}\n", self.hardware);
        s.push_str("phase,mean_ms_per_sample,p99_ms,classifications_per_sec\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.label, r.mean_ms_per_sample, r.p99_ms, r.classifications_per_sec
            ));
        }
        s
    }

    pub fn row(&self, label: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn hardware_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1).map(|s| s.trim().to_string()))
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!("{cpu} ({cores} logical cores)")
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

/// Measure end-to-end inference throughput.
///
/// Four phases share the duration budget: batched and single-sample
/// inference on pre-extracted vectors, single-sample inference including
/// ROI extraction, and multi-worker batched throughput.
pub fn run_bench(model: &SlowElmModel, config: &RunConfig) -> Result<BenchReport> {
    model.validate()?;
    let d = model.hidden.input_dim();
    let phase = (config.bench_duration_secs / 4.0).max(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = config.bench_batch.max(1);
    let x = DMatrix::from_fn(batch, d, |_, _| if rng.gen_bool(0.5) { 1.0 } else { -1.0 });

    let mut rows = Vec::new();

    // Batched, single worker.
    {
        let mut times = Vec::new();
        let start = Instant::now();
        let mut total = 0usize;
        while start.elapsed().as_secs_f64() < phase {
            let t0 = Instant::now();
            let scores = model.predict_batch(&x)?;
            std::hint::black_box(scores[(0, 0)]);
            times.push(t0.elapsed().as_secs_f64() / batch as f64);
            total += batch;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(BenchRow {
            label: "vectors_batched".into(),
            mean_ms_per_sample: elapsed / total as f64 * 1e3,
            p99_ms: percentile(&sorted, 0.99) * 1e3,
            classifications_per_sec: total as f64 / elapsed,
        });
    }

    // Single sample, single worker.
    {
        let sample: Vec<Real> = x.row(0).iter().copied().collect();
        let mut times = Vec::new();
        let start = Instant::now();
        while start.elapsed().as_secs_f64() < phase {
            let t0 = Instant::now();
            let scores = model.predict(&sample)?;
            std::hint::black_box(scores[0]);
            times.push(t0.elapsed().as_secs_f64());
        }
        let elapsed = start.elapsed().as_secs_f64();
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(BenchRow {
            label: "vectors_single".into(),
            mean_ms_per_sample: elapsed / times.len() as f64 * 1e3,
            p99_ms: percentile(&sorted, 0.99) * 1e3,
            classifications_per_sec: times.len() as f64 / elapsed,
        });
    }

    // Including ROI extraction, single worker.
    {
        let side = (d as f64).sqrt().round() as usize;
        let shapes = synth::builtin_shapes();
        let rig = synth::RigConfig {
            omega_rad_s: std::f64::consts::PI,
            distance: synth::DistanceClass::Near,
            elevation: synth::ElevationClass::Low,
            events_per_degree: config.events_per_degree,
            noise_rate: config.noise_rate,
            seed: config.seed,
            width: config.width,
            height: config.height,
        };
        let rotation = (config.window_count as f64 / config.events_per_degree * 8.0).max(90.0);
        let stream = synth::generate_recording(&shapes[0], &rig, rotation)?;
        let windows = event::window_by_count(&stream, config.window_count, config.window_stride);
        if windows.is_empty() {
            return Err(Error::Config(
                "bench recording too short for configured window_count".into(),
            ));
        }
        let params = RoiParams {
            trim_fraction: config.trim_fraction,
            smooth_dist: config.smooth_dist,
            side,
        };
        let mut times = Vec::new();
        let start = Instant::now();
        let mut prev = None;
        let mut i = 0usize;
        while start.elapsed().as_secs_f64() < phase {
            let w = &windows[i % windows.len()];
            let t0 = Instant::now();
            let (vec, roi_box, _) = roi::extract::<Real>(
                &w.events,
                &params,
                prev.as_ref(),
                (config.width, config.height),
            );
            let scores = model.predict(&vec.values)?;
            std::hint::black_box(scores[0]);
            times.push(t0.elapsed().as_secs_f64());
            prev = Some(roi_box);
            i += 1;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(BenchRow {
            label: "with_roi_single".into(),
            mean_ms_per_sample: elapsed / times.len() as f64 * 1e3,
            p99_ms: percentile(&sorted, 0.99) * 1e3,
            classifications_per_sec: times.len() as f64 / elapsed,
        });
    }

    // Multi-worker batched throughput.
    {
        let workers = rayon::current_num_threads().max(1);
        let start = Instant::now();
        let mut total = 0usize;
        while start.elapsed().as_secs_f64() < phase {
            let counts: Vec<usize> = (0..workers)
                .into_par_iter()
                .map(|_| {
                    let scores = model.predict_batch(&x).expect("bench batch");
                    std::hint::black_box(scores[(0, 0)]);
                    batch
                })
                .collect();
            total += counts.iter().sum::<usize>();
        }
        let elapsed = start.elapsed().as_secs_f64();
        rows.push(BenchRow {
            label: "vectors_multiworker".into(),
            mean_ms_per_sample: elapsed / total as f64 * 1e3,
            p99_ms: 0.0,
            classifications_per_sec: total as f64 / elapsed,
        });
    }

    Ok(BenchReport {
        hardware: hardware_descriptor(),
        rows,
    })
}
