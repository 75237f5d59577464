//! Respiratory frequency from RR-interval oscillation (respiratory sinus
//! arrhythmia) via a Welch spectrum of the resampled tachogram.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::HrvError;

pub const TACHOGRAM_RATE_HZ: f64 = 4.0;
pub const SEGMENT_S: f64 = 8.0;
pub const BAND_HZ: (f64, f64) = (0.1, 0.4);
/// Zero-padded FFT length; gives 4 / 1024 Hz bin spacing.
pub const NFFT: usize = 1024;
const MIN_PEAK_POWER: f64 = 1e-12;

/// One-sided Welch power spectral density.
///
/// Segments are mean-detrended, Hann tapered (periodic) and zero-padded to
/// `nfft`. Returns `(frequencies, psd)`.
pub fn welch_psd(x: &[f64], fs: f64, segment_len: usize, overlap: usize, nfft: usize) -> (Vec<f64>, Vec<f64>) {
    let seg = segment_len.min(x.len()).max(1);
    let step = seg.saturating_sub(overlap).max(1);
    let nfft = nfft.max(seg);
    let window: Vec<f64> = (0..seg).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos()).collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);

    let bins = nfft / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut segments = 0usize;
    let mut start = 0;
    while start + seg <= x.len() {
        let chunk = &x[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        let mut buf: Vec<Complex64> = chunk
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        buf.resize(nfft, Complex64::new(0.0, 0.0));
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            let scale = if k == 0 || (nfft % 2 == 0 && k == nfft / 2) { 1.0 } else { 2.0 };
            *p += scale * buf[k].norm_sqr() / (fs * win_power);
        }
        segments += 1;
        start += step;
    }
    if segments > 0 {
        for p in &mut psd {
            *p /= segments as f64;
        }
    }
    let freqs = (0..bins).map(|k| k as f64 * fs / nfft as f64).collect();
    (freqs, psd)
}

/// Linear interpolation of `(times, values)` onto a uniform grid starting at
/// `times[0]`.
fn resample_linear(times: &[f64], values: &[f64], rate: f64) -> Vec<f64> {
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let n = (span * rate + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = t0 + k as f64 / rate;
        while j + 2 < times.len() && times[j + 1] < t {
            j += 1;
        }
        let (ta, tb) = (times[j], times[j + 1]);
        let frac = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(values[j] + frac * (values[j + 1] - values[j]));
    }
    out
}

/// Dominant frequency (Hz) of RR oscillation inside [`BAND_HZ`].
///
/// `times_s[i]` is the time at which interval `rr_ms[i]` ends; together the
/// intervals must cover [`SEGMENT_S`]. Returns
/// `Ok(None)` when the band carries no power (e.g. a constant RR series).
pub fn estimate_breathing(rr_ms: &[f64], times_s: &[f64]) -> Result<Option<f64>, HrvError> {
    assert_eq!(rr_ms.len(), times_s.len(), "one timestamp per interval");
    if rr_ms.len() < 4 {
        return Err(HrvError::TooFewBeats { accepted: rr_ms.len() });
    }
    // the intervals cover from the start of the first to the end of the last
    let span = times_s[times_s.len() - 1] - (times_s[0] - rr_ms[0] / 1000.0);
    if span + 1e-9 < SEGMENT_S {
        return Err(HrvError::InsufficientSpan { span_s: span });
    }
    let mut grid = resample_linear(times_s, rr_ms, TACHOGRAM_RATE_HZ);
    let mean = grid.iter().sum::<f64>() / grid.len() as f64;
    for v in &mut grid {
        *v -= mean;
    }
    // the resampled grid starts at the end of the first interval, so it can
    // be a little shorter than one full segment
    let seg = ((SEGMENT_S * TACHOGRAM_RATE_HZ).round() as usize).min(grid.len());
    let (freqs, psd) = welch_psd(&grid, TACHOGRAM_RATE_HZ, seg, seg / 2, NFFT);
    let peak = freqs
        .iter()
        .zip(&psd)
        .filter(|(f, _)| (BAND_HZ.0..=BAND_HZ.1).contains(*f))
        .fold(None::<(f64, f64)>, |best, (&f, &p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((f, p)),
        });
    Ok(peak.filter(|&(_, p)| p > MIN_PEAK_POWER).map(|(f, _)| f))
}
