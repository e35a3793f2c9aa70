//! 16-bit PCM WAV reading and writing.
//!
//! All corpus audio is mono 16-bit PCM. Samples are exposed as `f64` in
//! `[-1, 1)` using the `i16 / 32768` convention; writing quantizes by
//! rounding and saturating, so a write/read round trip of already-quantized
//! audio is exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frontend::Waveform;

fn wav_err(path: &Path, e: hound::Error) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Read a mono 16-bit PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Wav {
            path: path.to_path_buf(),
            message: format!("expected mono audio, got {} channels", spec.channels),
        });
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Wav {
            path: path.to_path_buf(),
            message: format!(
                "expected 16-bit PCM, got {:?} with {} bits",
                spec.sample_format, spec.bits_per_sample
            ),
        });
    }
    let samples: std::result::Result<Vec<i16>, _> = reader.samples::<i16>().collect();
    let samples = samples.map_err(|e| wav_err(path, e))?;
    let scaled: Vec<f64> = samples.iter().map(|&s| f64::from(s) / 32768.0).collect();
    Waveform::new(scaled, spec.sample_rate)
}

/// Write a mono 16-bit PCM WAV file, rounding and saturating samples.
pub fn write_wav(path: impl AsRef<Path>, wave: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in &wave.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))?;
    Ok(())
}
