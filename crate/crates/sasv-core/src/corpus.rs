//! Corpus metadata, trial lists, and the synthetic micro-corpus generator.
//!
//! Manifest and trial files are plain UTF-8, whitespace-delimited, one record
//! per line. Lines starting with `#` are comments. Audio paths in a manifest
//! are resolved relative to the manifest's directory.
//!
//! The micro-corpus generator produces a fully deterministic stand-in for a
//! real training corpus: bona fide utterances are noise shaped by a
//! speaker-specific two-resonance filter, and each synthetic "TTS system"
//! adds a separable artifact (a fixed-frequency tone plus amplitude
//! quantization) on top of the same speaker filter.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::Waveform;
use crate::wav::write_wav;

/// Source tag carried by genuine recordings.
pub const BONAFIDE_TAG: &str = "bonafide";

/// One corpus utterance: identity, provenance, and audio location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub speaker_id: String,
    pub source_tag: String,
    pub audio_path: PathBuf,
}

impl UtteranceRecord {
    pub fn is_bonafide(&self) -> bool {
        self.source_tag == BONAFIDE_TAG
    }
}

/// Trial classification for spoof-aware verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialLabel {
    Target,
    Nontarget,
    Spoof,
}

impl TrialLabel {
    pub fn parse(s: &str) -> Option<TrialLabel> {
        match s {
            "target" => Some(TrialLabel::Target),
            "nontarget" => Some(TrialLabel::Nontarget),
            "spoof" => Some(TrialLabel::Spoof),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TrialLabel::Target => "target",
            TrialLabel::Nontarget => "nontarget",
            TrialLabel::Spoof => "spoof",
        }
    }
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluation trial: enrollment utterances against a test utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub enroll_utt_ids: Vec<String>,
    pub test_utt_id: String,
    pub label: TrialLabel,
}

/// Shape of the synthetic micro-corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroCorpusSpec {
    pub n_speakers: usize,
    pub n_tts_systems: usize,
    pub utts_per_cell: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl MicroCorpusSpec {
    /// Shortest utterance the generator will emit; matches the largest
    /// default analysis window so every downstream frontend call succeeds.
    pub const MIN_SAMPLES: usize = 1024;

    pub fn validate(&self) -> Result<()> {
        if self.n_speakers == 0 || self.n_tts_systems == 0 || self.utts_per_cell == 0 {
            return Err(Error::Validation(
                "micro-corpus counts must all be at least 1".into(),
            ));
        }
        if self.sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Validation("duration_s must be positive".into()));
        }
        let samples = (self.duration_s * f64::from(self.sample_rate)).round() as usize;
        if samples < Self::MIN_SAMPLES {
            return Err(Error::Validation(format!(
                "duration_s * sample_rate = {samples} is below the minimum segment of {} samples",
                Self::MIN_SAMPLES
            )));
        }
        Ok(())
    }
}

fn open_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Parses a manifest of whitespace-delimited
/// `utt_id speaker_id source_tag audio_path` lines.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<UtteranceRecord>> {
    let path = path.as_ref();
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in open_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let record = UtteranceRecord {
            utt_id: fields[0].to_string(),
            speaker_id: fields[1].to_string(),
            source_tag: fields[2].to_string(),
            audio_path: PathBuf::from(fields[3]),
        };
        if record.speaker_id.is_empty() || record.source_tag.is_empty() {
            return Err(Error::parse(path, lineno, "empty speaker or source field"));
        }
        if !seen.insert(record.utt_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate utt_id {:?} at line {lineno} of {}",
                record.utt_id,
                path.display()
            )));
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the manifest format accepted by [`load_manifest`].
pub fn write_manifest(path: impl AsRef<Path>, records: &[UtteranceRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{} {} {} {}\n",
            r.utt_id,
            r.speaker_id,
            r.source_tag,
            r.audio_path.display()
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a trial list of `enroll_ids(comma-joined) test_utt label` lines.
pub fn load_trials(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let mut trials = Vec::new();
    for (idx, line) in open_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let enroll: Vec<String> = fields[0]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if enroll.is_empty() {
            return Err(Error::parse(path, lineno, "empty enrollment list"));
        }
        let label = TrialLabel::parse(fields[2]).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!(
                    "unknown label {:?}; expected target, nontarget, or spoof",
                    fields[2]
                ),
            )
        })?;
        trials.push(TrialRecord {
            enroll_utt_ids: enroll,
            test_utt_id: fields[1].to_string(),
            label,
        });
    }
    Ok(trials)
}

/// Writes trials in the format accepted by [`load_trials`].
pub fn write_trials(path: impl AsRef<Path>, trials: &[TrialRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for t in trials {
        out.push_str(&format!(
            "{} {} {}\n",
            t.enroll_utt_ids.join(","),
            t.test_utt_id,
            t.label
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Resolves a record's audio path relative to its manifest's directory.
pub fn resolve_audio_path(manifest_path: &Path, record: &UtteranceRecord) -> PathBuf {
    if record.audio_path.is_absolute() {
        record.audio_path.clone()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&record.audio_path)
    }
}

// SplitMix64; stable per-utterance stream derivation.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn utterance_rng(seed: u64, speaker: usize, system: usize, utt: usize) -> ChaCha8Rng {
    let key = mix64(
        seed ^ mix64(speaker as u64 ^ 0x5043)
            ^ mix64((system as u64) << 20 ^ 0x7f31)
            ^ mix64((utt as u64) << 40 ^ 0x11c9),
    );
    ChaCha8Rng::seed_from_u64(key)
}

/// Two-pole resonator applied in cascade to shape noise into a
/// speaker-specific spectrum.
fn resonator(signal: &mut [f64], freq_hz: f64, bandwidth_hz: f64, sample_rate: f64) {
    let r = (-std::f64::consts::PI * bandwidth_hz / sample_rate).exp();
    let theta = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for s in signal.iter_mut() {
        let y = *s + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *s = y;
    }
}

fn normalize_rms(signal: &mut [f64], target: f64) {
    let rms = (signal.iter().map(|s| s * s).sum::<f64>() / signal.len() as f64).sqrt();
    if rms > 1e-12 {
        let g = target / rms;
        for s in signal.iter_mut() {
            *s *= g;
        }
    }
}

/// Speaker formant pair. Evenly spread across speaker indices so small
/// corpora stay well separated in the mel domain.
fn speaker_formants(speaker: usize) -> (f64, f64) {
    let k = speaker % 12;
    let wrap = (speaker / 12) as f64;
    let f1 = 280.0 + 130.0 * k as f64 + 41.0 * wrap;
    let f2 = 1450.0 + 160.0 * k as f64 + 57.0 * wrap;
    (f1, f2)
}

/// Per-system artifact parameters: tone frequency and quantization levels.
fn system_artifact(system: usize) -> (f64, u32) {
    let tone_hz = 2750.0 + 331.0 * system as f64;
    let levels = match system % 4 {
        0 => 48,
        1 => 32,
        2 => 20,
        _ => 12,
    };
    (tone_hz, levels)
}

fn synthesize_utterance(
    spec: &MicroCorpusSpec,
    speaker: usize,
    system: Option<usize>,
    utt: usize,
) -> Waveform {
    let n = (spec.duration_s * f64::from(spec.sample_rate)).round() as usize;
    let sr = f64::from(spec.sample_rate);
    let mut rng = utterance_rng(spec.seed, speaker, system.map_or(0, |s| s + 1), utt);

    let mut signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (f1, f2) = speaker_formants(speaker);
    resonator(&mut signal, f1, 110.0, sr);
    resonator(&mut signal, f2, 170.0, sr);
    normalize_rms(&mut signal, 0.1);

    // Mild per-utterance gain spread.
    let gain = rng.gen_range(0.9..1.1);
    for s in signal.iter_mut() {
        *s *= gain;
    }

    if let Some(sys) = system {
        let (tone_hz, levels) = system_artifact(sys);
        let nyquist = sr / 2.0;
        let tone_hz = tone_hz.min(0.9 * nyquist);
        let peak = signal
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.abs()))
            .max(1e-9);
        let half = f64::from(levels) / 2.0;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let tone_amp = 0.035;
        for (i, s) in signal.iter_mut().enumerate() {
            // Amplitude quantization of the shaped signal.
            let q = (*s / peak * half).round() / half * peak;
            let tone = tone_amp * (2.0 * std::f64::consts::PI * tone_hz * i as f64 / sr + phase).sin();
            *s = 0.9 * q + tone;
        }
    }

    for s in signal.iter_mut() {
        *s = s.clamp(-0.99, 0.99);
    }
    Waveform::new(signal, spec.sample_rate).expect("synthesized signal is non-empty and finite")
}

/// Output locations produced by [`generate_micro_corpus`].
#[derive(Debug, Clone)]
pub struct MicroCorpusPaths {
    pub manifest: PathBuf,
    pub trials: PathBuf,
}

/// Generates the synthetic corpus: one WAV per
/// (speaker x {bonafide, tts_1..tts_M} x utts_per_cell) cell, a manifest
/// covering all of them, and a balanced trial list with all three labels.
///
/// Deterministic: the same spec (including seed) produces byte-identical
/// audio, manifest, and trial files.
pub fn generate_micro_corpus(
    spec: &MicroCorpusSpec,
    out_dir: impl AsRef<Path>,
) -> Result<MicroCorpusPaths> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let wav_dir = out_dir.join("wav");
    std::fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;

    let mut records = Vec::new();
    for speaker in 0..spec.n_speakers {
        let speaker_id = format!("spk{speaker:03}");
        for cell in 0..=spec.n_tts_systems {
            let (system, tag) = if cell == 0 {
                (None, BONAFIDE_TAG.to_string())
            } else {
                (Some(cell - 1), format!("tts{cell:02}"))
            };
            for utt in 0..spec.utts_per_cell {
                let utt_id = format!("{speaker_id}_{tag}_{utt:03}");
                let wave = synthesize_utterance(spec, speaker, system, utt);
                let rel = PathBuf::from("wav").join(format!("{utt_id}.wav"));
                write_wav(out_dir.join(&rel), &wave)?;
                records.push(UtteranceRecord {
                    utt_id,
                    speaker_id: speaker_id.clone(),
                    source_tag: tag.clone(),
                    audio_path: rel,
                });
            }
        }
    }

    let trials = build_trials(spec, &records);

    let manifest = out_dir.join("manifest.txt");
    let trial_path = out_dir.join("trials.txt");
    write_manifest(&manifest, &records)?;
    write_trials(&trial_path, &trials)?;
    Ok(MicroCorpusPaths {
        manifest,
        trials: trial_path,
    })
}

/// Balanced trials: per speaker, bona fide enrollment versus held-out bona
/// fide tests (target), other speakers' bona fide tests (nontarget), and the
/// same speaker's generated tests (spoof).
fn build_trials(spec: &MicroCorpusSpec, records: &[UtteranceRecord]) -> Vec<TrialRecord> {
    let speakers: Vec<String> = (0..spec.n_speakers).map(|k| format!("spk{k:03}")).collect();
    let bona_of = |spk: &str| -> Vec<&UtteranceRecord> {
        records
            .iter()
            .filter(|r| r.speaker_id == spk && r.is_bonafide())
            .collect()
    };
    let spoof_of = |spk: &str| -> Vec<&UtteranceRecord> {
        records
            .iter()
            .filter(|r| r.speaker_id == spk && !r.is_bonafide())
            .collect()
    };

    let enroll_n = if spec.utts_per_cell >= 3 { 2 } else { 1 };
    let mut trials = Vec::new();
    for (k, spk) in speakers.iter().enumerate() {
        let bona = bona_of(spk);
        let enroll: Vec<String> = bona
            .iter()
            .take(enroll_n)
            .map(|r| r.utt_id.clone())
            .collect();
        let tests: Vec<&UtteranceRecord> = bona.iter().skip(enroll_n).copied().collect();

        for t in &tests {
            trials.push(TrialRecord {
                enroll_utt_ids: enroll.clone(),
                test_utt_id: t.utt_id.clone(),
                label: TrialLabel::Target,
            });
        }

        // Nontargets: cycle other speakers' held-out bona fide utterances.
        if speakers.len() > 1 {
            let want = tests.len().max(1);
            let mut produced = 0;
            let mut other = (k + 1) % speakers.len();
            let mut pick = enroll_n;
            while produced < want {
                let pool = bona_of(&speakers[other]);
                if pick < pool.len() {
                    trials.push(TrialRecord {
                        enroll_utt_ids: enroll.clone(),
                        test_utt_id: pool[pick].utt_id.clone(),
                        label: TrialLabel::Nontarget,
                    });
                    produced += 1;
                }
                other = (other + 1) % speakers.len();
                if other == k {
                    other = (other + 1) % speakers.len();
                    pick += 1;
                    if pick >= spec.utts_per_cell {
                        break;
                    }
                }
            }
        }

        // Spoofs: generated utterances claiming this same speaker.
        let spoofs = spoof_of(spk);
        let want = tests.len().max(1).min(spoofs.len());
        let step = (spoofs.len() / want.max(1)).max(1);
        for t in spoofs.iter().step_by(step).take(want) {
            trials.push(TrialRecord {
                enroll_utt_ids: enroll.clone(),
                test_utt_id: t.utt_id.clone(),
                label: TrialLabel::Spoof,
            });
        }
    }
    trials
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("sasv_corpus_tests").join(name);
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn manifest_line_maps_fields_directly() {
        let dir = tmp("manifest_direct");
        let path = dir.join("m.txt");
        std::fs::write(&path, "u1 spk1001 bonafide a/u1.wav\n").unwrap();
        let records = load_manifest(&path).unwrap();
        assert_eq!(
            records,
            vec![UtteranceRecord {
                utt_id: "u1".into(),
                speaker_id: "spk1001".into(),
                source_tag: "bonafide".into(),
                audio_path: "a/u1.wav".into(),
            }]
        );
    }

    #[test]
    fn empty_manifest_yields_empty_list() {
        let dir = tmp("manifest_empty");
        let path = dir.join("m.txt");
        std::fs::write(&path, "").unwrap();
        assert!(load_manifest(&path).unwrap().is_empty());
    }

    #[test]
    fn duplicate_utt_id_is_rejected() {
        let dir = tmp("manifest_dup");
        let path = dir.join("m.txt");
        std::fs::write(&path, "u1 s1 bonafide a.wav\nu1 s2 tts01 b.wav\n").unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tmp("manifest_badline");
        let path = dir.join("m.txt");
        std::fs::write(&path, "u1 s1 bonafide a.wav\nu2 s1\n").unwrap();
        match load_manifest(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trial_lines_parse_and_reject_unknown_labels() {
        let dir = tmp("trials");
        let path = dir.join("t.txt");
        std::fs::write(&path, "e1,e2 t9 spoof\ne1 t1 target\n").unwrap();
        let trials = load_trials(&path).unwrap();
        assert_eq!(
            trials[0],
            TrialRecord {
                enroll_utt_ids: vec!["e1".into(), "e2".into()],
                test_utt_id: "t9".into(),
                label: TrialLabel::Spoof,
            }
        );
        assert_eq!(trials[1].enroll_utt_ids, vec!["e1".to_string()]);
        assert_eq!(trials[1].label, TrialLabel::Target);

        std::fs::write(&path, "e1 t1 genuine\n").unwrap();
        assert!(load_trials(&path).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tmp("roundtrip");
        let path = dir.join("m.txt");
        let records = vec![
            UtteranceRecord {
                utt_id: "a".into(),
                speaker_id: "s0".into(),
                source_tag: "bonafide".into(),
                audio_path: "wav/a.wav".into(),
            },
            UtteranceRecord {
                utt_id: "b".into(),
                speaker_id: "s0".into(),
                source_tag: "tts01".into(),
                audio_path: "wav/b.wav".into(),
            },
        ];
        write_manifest(&path, &records).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), records);
    }

    fn small_spec(seed: u64) -> MicroCorpusSpec {
        MicroCorpusSpec {
            n_speakers: 2,
            n_tts_systems: 2,
            utts_per_cell: 3,
            duration_s: 0.25,
            sample_rate: 8000,
            seed,
        }
    }

    #[test]
    fn micro_corpus_counts_cells() {
        let dir = tmp("gen_counts");
        let paths = generate_micro_corpus(&small_spec(7), &dir).unwrap();
        let records = load_manifest(&paths.manifest).unwrap();
        // 2 speakers x (1 bonafide + 2 systems) x 3 utterances.
        assert_eq!(records.len(), 18);
        for r in &records {
            assert!(resolve_audio_path(&paths.manifest, r).exists());
        }
    }

    #[test]
    fn micro_corpus_is_byte_deterministic() {
        let d1 = tmp("gen_det_a");
        let d2 = tmp("gen_det_b");
        let p1 = generate_micro_corpus(&small_spec(11), &d1).unwrap();
        let p2 = generate_micro_corpus(&small_spec(11), &d2).unwrap();

        let m1 = std::fs::read(&p1.manifest).unwrap();
        let m2 = std::fs::read(&p2.manifest).unwrap();
        assert_eq!(m1, m2);
        let t1 = std::fs::read(&p1.trials).unwrap();
        let t2 = std::fs::read(&p2.trials).unwrap();
        assert_eq!(t1, t2);

        for r in load_manifest(&p1.manifest).unwrap() {
            let a = std::fs::read(resolve_audio_path(&p1.manifest, &r)).unwrap();
            let b = std::fs::read(resolve_audio_path(&p2.manifest, &r)).unwrap();
            assert_eq!(a, b, "audio for {} differs between runs", r.utt_id);
        }
    }

    #[test]
    fn micro_corpus_trials_cover_all_labels_and_resolve() {
        let dir = tmp("gen_labels");
        let paths = generate_micro_corpus(&small_spec(3), &dir).unwrap();
        let records = load_manifest(&paths.manifest).unwrap();
        let trials = load_trials(&paths.trials).unwrap();

        let mut by_label: BTreeMap<TrialLabel, usize> = BTreeMap::new();
        let ids: BTreeSet<&str> = records.iter().map(|r| r.utt_id.as_str()).collect();
        for t in &trials {
            *by_label.entry(t.label).or_default() += 1;
            assert!(ids.contains(t.test_utt_id.as_str()));
            for e in &t.enroll_utt_ids {
                assert!(ids.contains(e.as_str()));
                assert_ne!(e, &t.test_utt_id, "enrollment reused as test utterance");
            }
        }
        assert!(by_label.get(&TrialLabel::Target).copied().unwrap_or(0) >= 1);
        assert!(by_label.get(&TrialLabel::Nontarget).copied().unwrap_or(0) >= 1);
        assert!(by_label.get(&TrialLabel::Spoof).copied().unwrap_or(0) >= 1);
    }

    #[test]
    fn unwritable_directory_errors() {
        let spec = small_spec(1);
        assert!(generate_micro_corpus(&spec, "/proc/definitely/not/writable").is_err());
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = small_spec(1);
        spec.n_speakers = 0;
        assert!(spec.validate().is_err());
        let mut spec = small_spec(1);
        spec.duration_s = 0.01;
        assert!(spec.validate().is_err(), "too few samples must be rejected");
    }
}
