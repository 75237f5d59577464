//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails. Criterion 10 runs only when `HRV_AFFECT_WESAD_DIR`
//! points at a WESAD export.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hrv_affect::dsp::{design_butterworth_bandpass, filter_signal, segment_windows, FilterSpec, WindowSpec};
use hrv_affect::explain::{coalition_values_generic, shapley_explain, shapley_from_table};
use hrv_affect::hrv::{compute_features, detect_beats_in, BeatSeries, FEATURE_COUNT, FEATURE_NAMES};
use hrv_affect::ingest::{adapt_wesad, generate_synthetic, load_dataset, StateSpec, SyntheticSpec, MANIFEST_FILE, PPG_PEAK_OFFSET_S};
use hrv_affect::learn::{evaluate, roc_ovr, train_extra_trees, Classifier, ExtraTreesParams, ModelFamily, SplitStrategy};
use hrv_affect::model::{AffectLabel, DiscreteState, Modality, RngSeed, SignalRecord};
use hrv_affect::pipeline::{extract_dataset, extract_subject, ExtractConfig};
use hrv_affect::table::{FeatureRow, LabeledMatrix};
use hrv_affect::variance::inter_signal_variance;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- oracles

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pstd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 0 {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    } else {
        s[n / 2]
    }
}

/// Breathing rate by direct DFT of a Welch-averaged tachogram.
fn breathing_oracle(rr: &[f64]) -> Option<f64> {
    let mut ends = Vec::new();
    let mut t = 0.0;
    for r in rr {
        t += r / 1000.0;
        ends.push(t);
    }
    if t + 1e-9 < 8.0 {
        return None;
    }
    let n = ((ends[ends.len() - 1] - ends[0]) * 4.0 + 1e-9).floor() as usize + 1;
    let mut grid = Vec::new();
    for k in 0..n {
        let at = ends[0] + k as f64 * 0.25;
        let j = (0..ends.len() - 1).find(|&j| ends[j + 1] >= at).unwrap_or(ends.len() - 2);
        let f = ((at - ends[j]) / (ends[j + 1] - ends[j])).clamp(0.0, 1.0);
        grid.push(rr[j] + f * (rr[j + 1] - rr[j]));
    }
    let g = mean(&grid);
    grid.iter_mut().for_each(|v| *v -= g);
    let len = grid.len().min(32);
    let step = len - len / 2;
    let hann: Vec<f64> = (0..len).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / len as f64).cos())).collect();
    let u: f64 = hann.iter().map(|w| w * w).sum();
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=512usize {
        let f = k as f64 * 4.0 / 1024.0;
        if !(0.1..=0.4).contains(&f) {
            continue;
        }
        let (mut p, mut segs) = (0.0, 0);
        let mut s = 0;
        while s + len <= grid.len() {
            let seg = &grid[s..s + len];
            let m = mean(seg);
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in seg.iter().enumerate() {
                let a = -2.0 * PI * (k * i) as f64 / 1024.0;
                re += (v - m) * hann[i] * a.cos();
                im += (v - m) * hann[i] * a.sin();
            }
            p += 2.0 * (re * re + im * im) / (4.0 * u);
            segs += 1;
            s += step;
        }
        p /= segs as f64;
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((f, p));
        }
    }
    best.filter(|b| b.1 > 1e-12).map(|b| b.0)
}

fn feature_oracle(rr: &[f64]) -> [Option<f64>; FEATURE_COUNT] {
    let d: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let ibi = mean(rr);
    let sdnn = pstd(rr);
    let rmssd = mean(&d.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
    let above = |t: f64| d.iter().filter(|x| x.abs() > t).count() as f64 / d.len() as f64;
    let med = median(rr);
    let sd1 = (rmssd * rmssd / 2.0).sqrt();
    let sd2 = (2.0 * sdnn * sdnn - rmssd * rmssd / 2.0).max(0.0).sqrt();
    [
        Some(60_000.0 / ibi),
        Some(ibi),
        Some(sdnn),
        Some(pstd(&d)),
        Some(rmssd),
        Some(above(20.0)),
        Some(above(50.0)),
        Some(median(&rr.iter().map(|r| (r - med).abs()).collect::<Vec<_>>())),
        breathing_oracle(rr),
        Some(sd1),
        Some(sd2),
        Some(PI * sd1 * sd2),
        if sd2 > 0.0 { Some(sd1 / sd2) } else { None },
    ]
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-300)
    }
}

fn random_series() -> Vec<Vec<f64>> {
    let mut rng = RngSeed(2024).rng();
    (0..100)
        .map(|_| {
            let n = rng.random_range(5..=100);
            (0..n).map(|_| rng.random_range(300..=2000) as f64).collect()
        })
        .collect()
}

fn features_of(rr: &[f64]) -> [Option<f64>; FEATURE_COUNT] {
    let mut peaks = vec![0usize];
    for r in rr {
        peaks.push(peaks.last().unwrap() + *r as usize);
    }
    compute_features(&BeatSeries::from_peaks(peaks, 1000.0), 1000.0).unwrap().values()
}

// --------------------------------------------------------------- criteria

fn c1_feature_oracle() -> Outcome {
    let mut worst = (0.0, "none");
    let mut mismatched = Vec::new();
    let mut br_present = 0;
    for (i, rr) in random_series().iter().enumerate() {
        let got = features_of(rr);
        let want = feature_oracle(rr);
        for f in 0..FEATURE_COUNT {
            match (got[f], want[f]) {
                (Some(a), Some(b)) => {
                    let e = rel_err(a, b);
                    if e > worst.0 {
                        worst = (e, FEATURE_NAMES[f]);
                    }
                    if e > 1e-9 {
                        mismatched.push(format!("series {i} {}", FEATURE_NAMES[f]));
                    }
                }
                (None, None) => {}
                _ => mismatched.push(format!("series {i} {} missingness", FEATURE_NAMES[f])),
            }
        }
        br_present += usize::from(want[8].is_some());
    }
    outcome(
        mismatched.is_empty(),
        format!("100 series, worst rel err {:.1e} ({}), br present in {br_present}, mismatches {:?}", worst.0, worst.1, mismatched),
    )
}

fn c2_poincare() -> Outcome {
    let (mut e1, mut e2, mut clamped) = (0.0f64, 0.0f64, 0);
    for rr in random_series() {
        let f = features_of(&rr);
        let (sdnn, rmssd, sd1, sd2) = (f[2].unwrap(), f[4].unwrap(), f[9].unwrap(), f[10].unwrap());
        e1 = e1.max((sd1 - rmssd / 2f64.sqrt()).abs() / rmssd.max(1.0));
        let rhs = 2.0 * sdnn * sdnn;
        e2 = e2.max((sd1 * sd1 + sd2 * sd2 - rhs).abs() / rhs.max(1.0));
        clamped += usize::from(rhs < 0.5 * rmssd * rmssd);
    }
    outcome(e1 <= 1e-9 && e2 <= 1e-9, format!("max err sd1 {e1:.1e}, sd1^2+sd2^2 {e2:.1e}, sd2 clamp active in {clamped}/100"))
}

fn c3_beats() -> Outcome {
    let mut worst_recall: f64 = 1.0;
    let mut worst_bpm: f64 = 0.0;
    for bpm in [50.0, 75.0, 120.0, 150.0] {
        for (modality, rate) in [(Modality::Ecg, 700.0), (Modality::Ecg, 1000.0), (Modality::Ppg, 64.0), (Modality::Ppg, 1000.0)] {
            let (e, p) = if modality == Modality::Ecg { (rate, 64.0) } else { (700.0, rate) };
            let rec = generate_synthetic(&SyntheticSpec::steady(bpm, 60.0, e, p)).unwrap();
            let ecg = filter_signal(&rec.ecg, &FilterSpec::ecg_default()).unwrap();
            let ppg = filter_signal(&rec.ppg, &FilterSpec::ppg_default()).unwrap();
            let windows = segment_windows(&ecg, &ppg, &rec.annotations, &WindowSpec::default()).unwrap();
            let offset = if modality == Modality::Ecg { 0.0 } else { PPG_PEAK_OFFSET_S };
            let (mut truth, mut hit) = (0, 0);
            for (w, tw) in windows.iter().zip(&rec.truth.windows) {
                let seg = if modality == Modality::Ecg { &w.ecg } else { &w.ppg };
                let Ok(beats) = detect_beats_in(seg) else {
                    worst_bpm = f64::INFINITY;
                    continue;
                };
                let times: Vec<f64> = beats.peak_indices.iter().map(|&i| seg.window_start_s + i as f64 / seg.sample_rate_hz).collect();
                for t in rec.truth.beats_between(seg.window_start_s, seg.window_start_s + 10.0, offset) {
                    truth += 1;
                    hit += usize::from(times.iter().any(|d| (d - t).abs() <= 0.020));
                }
                let est = compute_features(&beats, seg.sample_rate_hz).map_or(f64::INFINITY, |f| f.bpm);
                worst_bpm = worst_bpm.max((est - tw.features.unwrap().bpm).abs());
            }
            worst_recall = worst_recall.min(hit as f64 / truth as f64);
        }
    }
    outcome(worst_recall >= 0.99 && worst_bpm <= 2.0, format!("16 configurations, worst recall {worst_recall:.4}, worst window bpm error {worst_bpm:.3}"))
}

fn c4_breathing() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for f in [0.20, 0.25, 0.33] {
        let mut spec = SyntheticSpec::steady(75.0, 600.0, 700.0, 64.0);
        spec.respiratory_rate_hz = f;
        spec.respiratory_rr_modulation_ms = 40.0;
        let rows = extract_subject(&generate_synthetic(&spec).unwrap().into_bundle(), &ExtractConfig::default()).unwrap();
        let ecg: Vec<&FeatureRow> = rows.iter().filter(|r| r.modality == Modality::Ecg).collect();
        let ok = ecg.iter().filter(|r| r.features[8].is_some_and(|b| (b - f).abs() <= 0.02)).count();
        let frac = ok as f64 / ecg.len() as f64;
        pass &= frac >= 0.95;
        parts.push(format!("{f} Hz {ok}/{}", ecg.len()));
    }
    outcome(pass, format!("ECG windows within 0.02 Hz: {}", parts.join(", ")))
}

/// |H|^2 of the cascade from its coefficients.
fn power_gain(sections: &[([f64; 3], [f64; 3])], f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let mut g = 1.0;
    for (b, a) in sections {
        let mag2 = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
            re * re + im * im
        };
        g *= mag2(b) / mag2(a);
    }
    g
}

fn measured_gain(f: f64, fs: f64, seconds: f64) -> f64 {
    let n = (seconds * fs) as usize;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
    let y = filter_signal(&SignalRecord::new("g", Modality::Ecg, fs, x), &FilterSpec::ecg_default()).unwrap().samples;
    let mid = &y[n / 4..3 * n / 4];
    (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn c5_filter() -> Outcome {
    let fs = 700.0;
    let filt = design_butterworth_bandpass(&FilterSpec::ecg_default(), fs).unwrap();
    let sections: Vec<_> = filt.sections.iter().map(|s| (s.b, s.a)).collect();
    let tf: Vec<f64> = [5.0, 0.05, 60.0].iter().map(|&f| power_gain(&sections, f, fs)).collect();
    let measured = [measured_gain(5.0, fs, 20.0), measured_gain(0.05, fs, 400.0), measured_gain(60.0, fs, 20.0)];
    let gains_ok = |g: &[f64]| g[0] >= 0.9 && g[1] <= 0.1 && g[2] <= 0.1;

    let rec = generate_synthetic(&SyntheticSpec::steady(60.0, 30.0, fs, 64.0)).unwrap();
    let y = filter_signal(&rec.ecg, &FilterSpec::ecg_default()).unwrap().samples;
    let argmax = |v: &[f64], lo: usize, hi: usize| (lo..hi).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let mut shift = 0usize;
    for &t in &rec.truth.beat_times_s[1..rec.truth.beat_times_s.len() - 1] {
        let c = (t * fs).round() as usize;
        let (lo, hi) = (c - 35, c + 36);
        shift = shift.max(argmax(&rec.ecg.samples, lo, hi).abs_diff(argmax(&y, lo, hi)));
    }
    outcome(
        gains_ok(&tf) && gains_ok(&measured) && shift <= 1,
        format!(
            "|H|^2 at 5/0.05/60 Hz {:.3}/{:.3}/{:.3}, measured {:.3}/{:.3}/{:.3}, max peak shift {shift} samples",
            tf[0], tf[1], tf[2], measured[0], measured[1], measured[2]
        ),
    )
}

fn c6_auc() -> Outcome {
    let mut rng = RngSeed(66).rng();
    let mut worst: f64 = 0.0;
    let mut fixtures = 0;
    while fixtures < 50 {
        let n = rng.random_range(8..60);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        if (0..3).any(|c| !y.contains(&c)) {
            continue;
        }
        // coarse scores so ties are common
        let proba: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..3).map(|_| (rng.random::<f64>() * 5.0).round() + 0.1).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let curves = roc_ovr(&proba, &y, 3).unwrap();
        for (c, curve) in curves.iter().enumerate() {
            let (mut num, mut pairs) = (0.0, 0.0);
            for i in (0..n).filter(|&i| y[i] == c) {
                for j in (0..n).filter(|&j| y[j] != c) {
                    pairs += 1.0;
                    num += match proba[i][c].partial_cmp(&proba[j][c]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
            worst = worst.max((curve.auc - num / pairs).abs());
        }
        fixtures += 1;
    }
    outcome(worst <= 1e-9, format!("50 fixtures x 3 classes with ties, max |AUC - pair statistic| {worst:.1e}"))
}

fn permutation_shapley(v: &[f64], m: usize) -> Vec<f64> {
    fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(i);
            for mut p in perms(rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }
    let all = perms((0..m).collect());
    let mut phi = vec![0.0; m];
    for p in &all {
        let mut s = 0;
        for &i in p {
            phi[i] += v[s | 1 << i] - v[s];
            s |= 1 << i;
        }
    }
    phi.iter().map(|x| x / all.len() as f64).collect()
}

fn uniform_rows(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngSeed(seed).rng();
    (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect()
}

fn c7_shapley() -> Outcome {
    // hand-built games and small tree games against full enumeration
    let mut rng = RngSeed(7).rng();
    let mut enum_err: f64 = 0.0;
    for m in 1..=5 {
        for _ in 0..10 {
            let v: Vec<f64> = (0..1 << m).map(|_| rng.random::<f64>()).collect();
            for (a, b) in shapley_from_table(&v, m).iter().zip(permutation_shapley(&v, m)) {
                enum_err = enum_err.max((a - b).abs());
            }
        }
    }
    for m in 2..=5 {
        let x = uniform_rows(120, m, m as u64);
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] + r[1] > 1.0)).collect();
        let model = train_extra_trees(&x, &y, 2, &ExtraTreesParams { n_trees: 20, ..Default::default() }, RngSeed(m as u64)).unwrap();
        for row in &x[..5] {
            let v = coalition_values_generic(&model, row, &x[60..80], 1).unwrap();
            let e = shapley_explain(&model, row, &x[60..80], 1).unwrap();
            for (a, b) in e.phi.iter().zip(permutation_shapley(&v, m)) {
                enum_err = enum_err.max((a - b).abs());
            }
        }
    }

    // 13 features, three of them constant so no tree can use them
    let mut x = uniform_rows(400, 13, 13);
    for r in &mut x {
        r[10] = 1.0;
        r[11] = 2.0;
        r[12] = 3.0;
    }
    let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] + 0.5 * r[1] > 0.75) + usize::from(r[2] > 0.8)).collect();
    let model = train_extra_trees(&x, &y, 3, &ExtraTreesParams { n_trees: 50, ..Default::default() }, RngSeed(3)).unwrap();
    let used = model.used_features();
    let background = &x[..100];
    let (mut local_err, mut dummy_violations, mut slowest): (f64, usize, f64) = (0.0, 0, 0.0);
    for (row, &class) in x[300..306].iter().zip(&y[300..306]) {
        let start = Instant::now();
        let e = shapley_explain(&model, row, background, class).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let p = model.predict_proba(row).unwrap()[e.class];
        local_err = local_err.max((e.output() - p).abs());
        dummy_violations += (0..13).filter(|&j| !used[j] && e.phi[j] != 0.0).count();
    }
    let unused = used.iter().filter(|u| !**u).count();
    outcome(
        enum_err <= 1e-9 && local_err <= 1e-6 && dummy_violations == 0 && unused >= 3 && slowest <= 10.0,
        format!(
            "enumeration err {enum_err:.1e}, local accuracy err {local_err:.1e}, dummy violations {dummy_violations} over {unused} unused features, slowest 13-feature explanation {slowest:.2} s"
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hrv-affect")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline_run(root: &Path) -> Result<(), String> {
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/separable_spec.json");
    cli(root, &["synth", "--spec", spec.to_str().unwrap(), "--out", "data", "--seed", "11"])?;
    cli(root, &["extract", "--manifest", "data", "--out", "run", "--seed", "5"])?;
    for stage in ["variance", "train-eval", "importance", "report"] {
        cli(root, &[stage, "--out", "run"])?;
    }
    Ok(())
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["data", "run"] {
        let mut entries: Vec<_> = std::fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), std::fs::read(&p).unwrap()));
        }
    }
    out
}

fn c8_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    if let Err(e) = pipeline_run(a.path()).and_then(|_| pipeline_run(b.path())) {
        return outcome(false, e);
    }
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    let differing: Vec<&str> = fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let kinds = |ext: &str| fa.iter().filter(|f| f.0.ends_with(ext)).count();
    outcome(
        fa.len() == fb.len() && differing.is_empty(),
        format!("{} files ({} csv, {} json, {} svg), differing {:?}", fa.len(), kinds(".csv"), kinds(".json"), kinds(".svg"), differing),
    )
}

struct Twin {
    variance: f64,
    accuracy: [f64; 2],
    stress_auc_wins: bool,
    aucs: Vec<String>,
}

fn twin(ecg_rate: f64, ppg_rate: f64, noise: f64, ppg_noise: f64, base: u64) -> Twin {
    let states = [(DiscreteState::Baseline, 65.0), (DiscreteState::Amusement, 67.0), (DiscreteState::Meditation, 69.0), (DiscreteState::Stress, 90.0)];
    let subjects = (0..8)
        .map(|s| {
            let spec = SyntheticSpec {
                subject_id: format!("S{s}"),
                duration_s: 1200.0,
                ecg_rate_hz: ecg_rate,
                ppg_rate_hz: ppg_rate,
                states: states
                    .iter()
                    .map(|&(st, bpm)| StateSpec { label: AffectLabel::State(st), mean_bpm: bpm, bpm_jitter_ms: 50.0, duration_s: 300.0 })
                    .collect(),
                respiratory_rate_hz: 0.25,
                respiratory_rr_modulation_ms: 25.0,
                noise_std: noise,
                ppg_noise_std: Some(ppg_noise),
                annotation_rate_hz: Some(4.0),
                seed: RngSeed(base + s),
            };
            generate_synthetic(&spec).unwrap().into_bundle()
        })
        .collect();
    let ds = hrv_affect::ingest::Dataset { name: "twin".into(), label_scheme: hrv_affect::model::LabelScheme::DiscreteState, subjects };
    let rows = extract_dataset(&ds, &ExtractConfig::default()).unwrap();
    let of = |m: Modality| rows.iter().filter(|r| r.modality == m).cloned().collect::<Vec<_>>();
    let variance = inter_signal_variance(&of(Modality::Ecg), &of(Modality::Ppg)).unwrap().mean_normalized();
    let mut accuracy = [0.0; 2];
    let mut stress_auc_wins = true;
    let mut aucs = Vec::new();
    for (i, m) in Modality::ALL.iter().enumerate() {
        let lm = LabeledMatrix::from_rows(&rows, *m);
        let ev = evaluate(&ModelFamily::standard(), &lm.x, &lm.y, lm.classes.len(), &SplitStrategy::RowWise, RngSeed(base)).unwrap();
        accuracy[i] = ev.report.holdout_accuracy;
        let stress = lm.classes.iter().position(|c| *c == AffectLabel::State(DiscreteState::Stress)).unwrap();
        let auc: Vec<f64> = ev.report.roc.iter().map(|r| r.curve.auc).collect();
        stress_auc_wins &= (0..auc.len()).all(|c| c == stress || auc[stress] > auc[c]);
        aucs.push(format!("{m} stress {:.3} others max {:.3}", auc[stress], (0..auc.len()).filter(|&c| c != stress).map(|c| auc[c]).fold(0.0, f64::max)));
    }
    Twin { variance, accuracy, stress_auc_wins, aucs }
}

fn c9_twins() -> Outcome {
    let hi = twin(1000.0, 1000.0, 0.01, 0.01, 100);
    let lo = twin(700.0, 64.0, 0.1, 0.3, 100);
    let gap = |t: &Twin| t.accuracy[0] - t.accuracy[1];
    let a = lo.variance > hi.variance;
    let b = gap(&lo) > gap(&hi);
    let c = hi.stress_auc_wins && lo.stress_auc_wins;
    outcome(
        a && b && c,
        format!(
            "(a) variance hi {:.3} lo {:.3}: {}; (b) ECG-PPG gap hi {:.3} lo {:.3}: {}; (c) stress AUC highest: {} [{}; {}]",
            hi.variance,
            lo.variance,
            a,
            gap(&hi),
            gap(&lo),
            b,
            c,
            hi.aucs.join(", "),
            lo.aucs.join(", ")
        ),
    )
}

fn c10_wesad(raw: &Path) -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let ds = match adapt_wesad(raw, out.path()).and_then(|_| load_dataset(&out.path().join(MANIFEST_FILE))) {
        Ok(ds) => ds,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rows = extract_dataset(&ds, &ExtractConfig::default()).unwrap();
    let mut accs = Vec::new();
    for m in Modality::ALL {
        let lm = LabeledMatrix::from_rows(&rows, m);
        match evaluate(&ModelFamily::standard(), &lm.x, &lm.y, lm.classes.len(), &SplitStrategy::RowWise, RngSeed(42)) {
            Ok(ev) => accs.push(ev.report.holdout_accuracy),
            Err(e) => return outcome(false, format!("{m}: {e}")),
        }
    }
    outcome(accs.iter().all(|a| *a > 0.4), format!("holdout accuracy ECG {:.3} PPG {:.3}", accs[0], accs[1]))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("feature formulas match the direct oracle", c1_feature_oracle),
        ("Poincare identities", c2_poincare),
        ("beat detection on synthetic ECG and PPG", c3_beats),
        ("breathing-rate recovery", c4_breathing),
        ("band-pass gain and peak position", c5_filter),
        ("one-vs-rest AUC equals the pair statistic", c6_auc),
        ("Shapley axioms and runtime", c7_shapley),
        ("end-to-end determinism", c8_determinism),
        ("fidelity twins reproduce the variance/accuracy direction", c9_twins),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {} {name} ({:.2} s): {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
    }
    match std::env::var_os("HRV_AFFECT_WESAD_DIR") {
        Some(dir) => {
            let start = Instant::now();
            let o = c10_wesad(Path::new(&dir));
            failed += usize::from(!o.pass);
            println!("criterion 10 {} WESAD sanity band ({:.2} s): {}", if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
        }
        None => println!("criterion 10 SKIP WESAD sanity band: HRV_AFFECT_WESAD_DIR not set"),
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
