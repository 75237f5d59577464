//! Butterworth band-pass design (bilinear transform with pre-warping) realised
//! as a cascade of second-order sections, plus forward-backward filtering.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::model::{Modality, SignalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: usize,
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    #[serde(default = "default_true")]
    pub zero_phase: bool,
}

fn default_true() -> bool {
    true
}

impl FilterSpec {
    pub fn ecg_default() -> Self {
        Self { order: 3, low_cut_hz: 0.67, high_cut_hz: 40.0, zero_phase: true }
    }

    pub fn ppg_default() -> Self {
        Self { order: 3, low_cut_hz: 0.5, high_cut_hz: 8.0, zero_phase: true }
    }

    pub fn default_for(modality: Modality) -> Self {
        match modality {
            Modality::Ecg => Self::ecg_default(),
            Modality::Ppg => Self::ppg_default(),
        }
    }
}

/// One biquad, `a[0] == 1`, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

/// Second-order-section cascade for a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate_hz: f64,
}

impl SosFilter {
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Magnitude of the single-pass transfer function at `freq_hz`.
    pub fn gain(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Magnitude actually applied to a signal: `|H|^2` for zero-phase
    /// filtering, `|H|` for a single pass.
    pub fn applied_gain(&self, freq_hz: f64, zero_phase: bool) -> f64 {
        let g = self.gain(freq_hz);
        if zero_phase {
            g * g
        } else {
            g
        }
    }

    /// Steady-state section states for a unit-level constant input.
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let out = g * level;
                let z2 = s.b[2] * level - s.a[2] * out;
                let z1 = s.b[1] * level - s.a[1] * out + z2;
                level = out;
                [z1, z2]
            })
            .collect()
    }

    /// Single causal pass, initial state matched to the first sample.
    pub fn filter_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let Some(&x0) = x.first() else { return y };
        for (s, zi) in self.sections.iter().zip(self.step_states()) {
            let mut z1 = zi[0] * x0;
            let mut z2 = zi[1] * x0;
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    fn forward_backward(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let mut y = self.filter_forward(&ext);
        y.reverse();
        let mut y = self.filter_forward(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }

    /// Zero-phase filtering: the mean of forward-then-backward and
    /// backward-then-forward passes over an odd-reflection padded signal.
    ///
    /// Averaging both pass orders makes the result exactly equivariant under
    /// time reversal.
    pub fn filter_zero_phase(&self, x: &[f64], order: usize) -> Vec<f64> {
        if x.len() < 2 {
            return x.to_vec();
        }
        let pad = (3 * order).min(x.len() - 1);
        let fb = self.forward_backward(x, pad);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let mut bf = self.forward_backward(&rev, pad);
        bf.reverse();
        fb.iter().zip(&bf).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Designs a Butterworth band-pass of the given order (`2 * order` poles).
pub fn design_butterworth_bandpass(spec: &FilterSpec, sample_rate_hz: f64) -> Result<SosFilter, DspError> {
    if spec.order == 0 {
        return Err(DspError::InvalidOrder);
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(spec.low_cut_hz > 0.0) || !(spec.low_cut_hz < spec.high_cut_hz) {
        return Err(DspError::InvalidBand { low_hz: spec.low_cut_hz, high_hz: spec.high_cut_hz });
    }
    if !(spec.high_cut_hz < nyquist) {
        return Err(DspError::CutoffAboveNyquist { cutoff_hz: spec.high_cut_hz, nyquist_hz: nyquist });
    }

    let fs2 = 2.0 * sample_rate_hz;
    let warp = |f: f64| fs2 * (PI * f / sample_rate_hz).tan();
    let (wl, wh) = (warp(spec.low_cut_hz), warp(spec.high_cut_hz));
    let bw = wh - wl;
    let w0 = (wl * wh).sqrt();

    let n = spec.order;
    let mut z_poles = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0 * w0).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            z_poles.push((fs2 + s) / (fs2 - s));
        }
    }

    let eps = 1e-10;
    let mut complex: Vec<Complex64> = z_poles.iter().copied().filter(|z| z.im > eps).collect();
    let mut real: Vec<f64> = z_poles.iter().filter(|z| z.im.abs() <= eps).map(|z| z.re).collect();
    complex.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    real.sort_by(f64::total_cmp);
    debug_assert_eq!(2 * complex.len() + real.len(), 2 * n);

    let mut sections: Vec<Biquad> = complex
        .iter()
        .map(|p| Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -2.0 * p.re, p.norm_sqr()] })
        .collect();
    for pair in real.chunks(2) {
        let (p, q) = (pair[0], pair[1]);
        sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -(p + q), p * q] });
    }

    // The analog prototype has unit gain at w0, which the pre-warped bilinear
    // map sends to this digital centre frequency.
    let mut filter = SosFilter { sections, sample_rate_hz };
    let centre_hz = (w0 / fs2).atan() * sample_rate_hz / PI;
    let g = filter.gain(centre_hz);
    let per_section = g.powf(-1.0 / filter.sections.len() as f64);
    for s in &mut filter.sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    Ok(filter)
}

/// Filters a record with the designed band-pass; output length equals input.
pub fn filter_signal(record: &SignalRecord, spec: &FilterSpec) -> Result<SignalRecord, DspError> {
    let filter = design_butterworth_bandpass(spec, record.sample_rate_hz)?;
    let samples = if spec.zero_phase {
        filter.filter_zero_phase(&record.samples, spec.order)
    } else {
        filter.filter_forward(&record.samples)
    };
    Ok(SignalRecord { samples, ..record.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ecg_filter() -> SosFilter {
        design_butterworth_bandpass(&FilterSpec::ecg_default(), 700.0).unwrap()
    }

    #[test]
    fn ecg_band_gain_on_frequency_grid() {
        let f = ecg_filter();
        let g = |hz| f.applied_gain(hz, true);
        assert!(g(5.0) >= 0.9, "gain at 5 Hz {}", g(5.0));
        assert!(g(0.05) <= 0.1, "gain at 0.05 Hz {}", g(0.05));
        assert!(g(60.0) <= 0.1, "gain at 60 Hz {}", g(60.0));
        assert!(f.gain(60.0) > 0.1);
        // -3 dB at both cut-offs for a Butterworth response
        let half_power = 1.0 / 2f64.sqrt();
        assert!((f.gain(0.67) - half_power).abs() < 1e-6);
        assert!((f.gain(40.0) - half_power).abs() < 1e-6);
    }

    #[test]
    fn magnitude_monotonic_outside_band() {
        let f = ecg_filter();
        let mut prev = 0.0;
        for i in 1..=60 {
            let g = f.gain(i as f64 * 0.01);
            assert!(g >= prev);
            prev = g;
        }
        let mut prev = f64::INFINITY;
        for i in 0..300 {
            let g = f.gain(40.0 + i as f64);
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn section_count_matches_order() {
        for order in 1..=6 {
            let spec = FilterSpec { order, ..FilterSpec::ppg_default() };
            let f = design_butterworth_bandpass(&spec, 64.0).unwrap();
            assert_eq!(f.sections.len(), order);
            assert!(f.gain(2.0) > 0.9);
            assert!(f.gain(2.0) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn ppg_band_at_64hz_is_valid() {
        assert!(design_butterworth_bandpass(&FilterSpec::ppg_default(), 64.0).is_ok());
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        let spec = FilterSpec { high_cut_hz: 40.0, ..FilterSpec::ppg_default() };
        assert!(matches!(
            design_butterworth_bandpass(&spec, 64.0),
            Err(DspError::CutoffAboveNyquist { .. })
        ));
    }

    #[test]
    fn dc_signal_is_removed() {
        let rec = SignalRecord::new("s", Modality::Ecg, 700.0, vec![3.5; 7000]);
        let out = filter_signal(&rec, &FilterSpec::ecg_default()).unwrap();
        assert_eq!(out.samples.len(), 7000);
        assert!(out.samples.iter().all(|v| v.abs() < 1e-6));
    }

    fn sine(freq: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / rate).sin()).collect()
    }

    fn mid_amplitude(x: &[f64]) -> f64 {
        let q = x.len() / 4;
        x[q..3 * q].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn passband_sine_keeps_amplitude_and_timing() {
        let x = sine(5.0, 700.0, 7000);
        let rec = SignalRecord::new("s", Modality::Ecg, 700.0, x.clone());
        let y = filter_signal(&rec, &FilterSpec::ecg_default()).unwrap().samples;
        assert!(mid_amplitude(&y) / mid_amplitude(&x) >= 0.9);
        // crest near the middle: sin peaks at i = 35 + 140 k
        let k = 3500 - 35;
        let lo = k - 20;
        let idx = (lo..lo + 140).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
        let expected = (lo..lo + 140).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        assert!((idx as i64 - expected as i64).abs() <= 1);
    }

    #[test]
    fn mains_sine_is_attenuated() {
        let x = sine(60.0, 700.0, 7000);
        let rec = SignalRecord::new("s", Modality::Ecg, 700.0, x.clone());
        let y = filter_signal(&rec, &FilterSpec::ecg_default()).unwrap().samples;
        assert!(mid_amplitude(&y) / mid_amplitude(&x) <= 0.1);
    }

    #[test]
    fn single_pass_has_same_length() {
        let spec = FilterSpec { zero_phase: false, ..FilterSpec::ecg_default() };
        let rec = SignalRecord::new("s", Modality::Ecg, 700.0, sine(5.0, 700.0, 1000));
        assert_eq!(filter_signal(&rec, &spec).unwrap().samples.len(), 1000);
    }
}
