//! Waveform handling and fixed-representation feature extraction.
//!
//! Converts raw audio into the inputs the networks consume: resampled
//! fixed-length segments, log-mel spectrograms for the embedding backbone,
//! periodized 2D views for multi-period discriminators, and linear-magnitude
//! spectrograms for multi-resolution discriminators.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mono audio segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    /// Validates that the signal is non-empty, finite, and has a positive rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("waveform must contain samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("waveform contains non-finite samples".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Feature-extraction parameters for the log-mel frontend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub sample_rate: u32,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub log_floor: f64,
    pub segment_s: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            win_ms: 25.0,
            hop_ms: 10.0,
            n_fft: 512,
            n_mels: 80,
            log_floor: 1e-6,
            segment_s: 3.0,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("frontend.sample_rate must be positive".into()));
        }
        if !(self.win_ms > 0.0 && self.hop_ms > 0.0) {
            return Err(Error::Config("frontend window and hop must be positive".into()));
        }
        if self.hop_ms > self.win_ms {
            return Err(Error::Config(format!(
                "frontend.hop_ms ({}) must not exceed win_ms ({})",
                self.hop_ms, self.win_ms
            )));
        }
        if self.n_fft < 2 {
            return Err(Error::Config("frontend.n_fft must be at least 2".into()));
        }
        if self.n_mels == 0 || self.n_mels > self.n_fft / 2 + 1 {
            return Err(Error::Config(format!(
                "frontend.n_mels ({}) must be in 1..={}",
                self.n_mels,
                self.n_fft / 2 + 1
            )));
        }
        if self.win_samples() > self.n_fft {
            return Err(Error::Config(format!(
                "window of {} samples exceeds n_fft {}",
                self.win_samples(),
                self.n_fft
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config("frontend.log_floor must be positive".into()));
        }
        if !(self.segment_s > 0.0) {
            return Err(Error::Config("frontend.segment_s must be positive".into()));
        }
        Ok(())
    }

    pub fn win_samples(&self) -> usize {
        (self.win_ms * f64::from(self.sample_rate) / 1000.0).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_ms * f64::from(self.sample_rate) / 1000.0).round() as usize
    }

    pub fn segment_samples(&self) -> usize {
        (self.segment_s * f64::from(self.sample_rate)).round() as usize
    }
}

/// Log-mel spectrogram, `values` laid out `[n_mels, n_frames]`.
#[derive(Debug, Clone)]
pub struct LogMel {
    pub values: Array2<f64>,
    pub params: FrontendConfig,
}

impl LogMel {
    pub fn n_mels(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }
}

/// Band-limited resampling via normalized windowed-sinc interpolation.
///
/// Output length is `round(len * target / source)`; interpolation kernels are
/// sum-normalized per output sample, so constant signals are preserved
/// exactly and edge truncation causes no droop.
pub fn resample(wave: &Waveform, target: u32) -> Result<Waveform> {
    if target == 0 {
        return Err(Error::Validation("target sample rate must be positive".into()));
    }
    if target == wave.sample_rate {
        return Ok(wave.clone());
    }

    let ratio = f64::from(target) / f64::from(wave.sample_rate);
    let out_len = (wave.len() as f64 * ratio).round() as usize;
    if out_len == 0 {
        return Err(Error::Validation(
            "resampled output would be empty; input too short".into(),
        ));
    }

    // Cutoff relative to the input Nyquist; < 1 when downsampling.
    let cutoff = ratio.min(1.0);
    const ZERO_CROSSINGS: f64 = 16.0;
    let half_width = ZERO_CROSSINGS / cutoff;

    let x = &wave.samples;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let center = n as f64 / ratio;
        let lo = ((center - half_width).ceil() as i64).max(0) as usize;
        let hi = ((center + half_width).floor() as i64).min(x.len() as i64 - 1) as usize;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (j, &xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
            let d = j as f64 - center;
            let sinc = if d.abs() < 1e-12 {
                1.0
            } else {
                (std::f64::consts::PI * cutoff * d).sin() / (std::f64::consts::PI * cutoff * d)
            };
            let window = 0.5 * (1.0 + (std::f64::consts::PI * d / half_width).cos());
            let k = sinc * window;
            acc += xj * k;
            norm += k;
        }
        out.push(if norm.abs() > 1e-12 { acc / norm } else { 0.0 });
    }
    Waveform::new(out, target)
}

/// Fixes a waveform to `round(segment_s * sample_rate)` samples.
///
/// Longer inputs are cropped starting at `offset % (len - target + 1)`;
/// shorter inputs are tiled and truncated.
pub fn crop_or_pad(wave: &Waveform, segment_s: f64, offset: usize) -> Result<Waveform> {
    if !(segment_s > 0.0) {
        return Err(Error::Validation("segment_s must be positive".into()));
    }
    let target = (segment_s * f64::from(wave.sample_rate)).round() as usize;
    if target == 0 {
        return Err(Error::Validation("segment too short for one sample".into()));
    }
    let t = wave.len();
    let samples = if t == target {
        wave.samples.clone()
    } else if t > target {
        let start = offset % (t - target + 1);
        wave.samples[start..start + target].to_vec()
    } else {
        (0..target).map(|i| wave.samples[i % t]).collect()
    };
    Waveform::new(samples, wave.sample_rate)
}

fn hann_window(len: usize) -> Vec<f64> {
    // Periodic Hann.
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

/// One-sided magnitude STFT: `[n_fft/2 + 1, n_frames]` without centering,
/// `n_frames = 1 + floor((len - win_len) / hop)`.
pub fn magnitude_stft(
    samples: &[f64],
    n_fft: usize,
    win_len: usize,
    hop: usize,
) -> Result<Array2<f64>> {
    if win_len == 0 || hop == 0 || n_fft < win_len {
        return Err(Error::Validation(format!(
            "invalid STFT geometry: n_fft {n_fft}, win {win_len}, hop {hop}"
        )));
    }
    if samples.len() < win_len {
        return Err(Error::Validation(format!(
            "signal of {} samples shorter than one window of {win_len}",
            samples.len()
        )));
    }
    let n_frames = 1 + (samples.len() - win_len) / hop;
    let n_bins = n_fft / 2 + 1;
    let window = hann_window(win_len);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut mags = Array2::<f64>::zeros((n_bins, n_frames));

    for frame in 0..n_frames {
        let start = frame * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let v = if i < win_len {
                samples[start + i] * window[i]
            } else {
                0.0
            };
            *slot = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (bin, value) in buf.iter().take(n_bins).enumerate() {
            mags[(bin, frame)] = value.norm();
        }
    }
    Ok(mags)
}

/// Triangular mel filterbank `[n_mels, n_fft/2 + 1]`, peak 1, covering
/// `0..sample_rate/2` on the HTK mel scale.
pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Array2<f64> {
    fn hz_to_mel(f: f64) -> f64 {
        2595.0 * (1.0 + f / 700.0).log10()
    }
    fn mel_to_hz(m: f64) -> f64 {
        700.0 * (10f64.powf(m / 2595.0) - 1.0)
    }

    let n_bins = n_fft / 2 + 1;
    let f_max = f64::from(sample_rate) / 2.0;
    let mel_max = hz_to_mel(f_max);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut bank = Array2::<f64>::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for bin in 0..n_bins {
            let f = bin as f64 * f64::from(sample_rate) / n_fft as f64;
            let w = if f <= lo || f >= hi {
                0.0
            } else if f <= mid {
                (f - lo) / (mid - lo)
            } else {
                (hi - f) / (hi - mid)
            };
            bank[(m, bin)] = w.max(0.0);
        }
    }
    bank
}

/// Log-mel spectrogram: magnitude STFT squared to power, mel filterbank,
/// then `ln(power + log_floor)`.
pub fn log_mel(wave: &Waveform, cfg: &FrontendConfig) -> Result<LogMel> {
    cfg.validate()?;
    if wave.sample_rate != cfg.sample_rate {
        return Err(Error::Validation(format!(
            "waveform rate {} does not match frontend rate {}",
            wave.sample_rate, cfg.sample_rate
        )));
    }
    let win = cfg.win_samples();
    let hop = cfg.hop_samples();
    let mags = magnitude_stft(&wave.samples, cfg.n_fft, win, hop)?;
    let power = mags.mapv(|m| m * m);
    let bank = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels);
    let mel = bank.dot(&power);
    let values = mel.mapv(|p| (p + cfg.log_floor).ln());
    Ok(LogMel {
        values,
        params: cfg.clone(),
    })
}

/// Reshapes a waveform into a `[ceil(len/period), period]` matrix, zero-padded,
/// so column `j` holds samples at positions congruent to `j (mod period)`.
pub fn periodize(wave: &Waveform, period: usize) -> Result<Array2<f64>> {
    if period == 0 {
        return Err(Error::Validation("period must be at least 1".into()));
    }
    let t = wave.len();
    let rows = t.div_ceil(period);
    let mut out = Array2::<f64>::zeros((rows, period));
    for (i, &s) in wave.samples.iter().enumerate() {
        out[(i / period, i % period)] = s;
    }
    Ok(out)
}

/// One linear-magnitude STFT per `(n_fft, hop)` resolution, window length
/// equal to `n_fft`.
pub fn multi_resolution_spectrograms(
    wave: &Waveform,
    resolutions: &[(usize, usize)],
) -> Result<Vec<Array2<f64>>> {
    resolutions
        .iter()
        .map(|&(n_fft, hop)| {
            if hop == 0 || n_fft < 2 * hop {
                return Err(Error::Validation(format!(
                    "invalid resolution (n_fft {n_fft}, hop {hop}): need n_fft >= 2*hop"
                )));
            }
            magnitude_stft(&wave.samples, n_fft, n_fft, hop)
        })
        .collect()
}
