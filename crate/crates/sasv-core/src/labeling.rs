//! Speaker-ID label design: mapping (speaker, source) pairs to training
//! classes.
//!
//! Three strategies are provided. `Dual` gives every speaker one bona fide
//! class and one shared class for all of that speaker's generated speech.
//! `MultiGlobal` keeps one bona fide class per speaker and adds one class per
//! generator system, shared across speakers. `MultiPerSpeaker` instead gives
//! every (speaker, generator) pair its own class.
//!
//! Class indices are contiguous, bona fide classes first, with keys ordered
//! lexicographically inside each group, so the same records always produce
//! the same map regardless of input order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::UtteranceRecord;
use crate::error::{Error, Result};

/// Label-design strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelStrategy {
    Dual,
    MultiGlobal,
    MultiPerSpeaker,
}

impl LabelStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dual" => Some(Self::Dual),
            "multi_global" => Some(Self::MultiGlobal),
            "multi_per_speaker" => Some(Self::MultiPerSpeaker),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dual => "dual",
            Self::MultiGlobal => "multi_global",
            Self::MultiPerSpeaker => "multi_per_speaker",
        }
    }
}

impl fmt::Display for LabelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Immutable mapping from (speaker_id, source_tag) to a training class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub strategy: LabelStrategy,
    class_of: BTreeMap<(String, String), usize>,
    pub n_classes: usize,
    bonafide_classes: BTreeSet<usize>,
}

impl LabelMap {
    /// Class index for a (speaker, source) pair; training corpora are
    /// closed-set, so unseen pairs are an error.
    pub fn label_of(&self, speaker_id: &str, source_tag: &str) -> Result<usize> {
        self.class_of
            .get(&(speaker_id.to_string(), source_tag.to_string()))
            .copied()
            .ok_or_else(|| {
                Error::Lookup(format!(
                    "no class for speaker {speaker_id:?} with source {source_tag:?}"
                ))
            })
    }

    /// Whether a class index holds bona fide utterances.
    pub fn is_bonafide_class(&self, class: usize) -> Result<bool> {
        if class >= self.n_classes {
            return Err(Error::Lookup(format!(
                "class index {class} out of range 0..{}",
                self.n_classes
            )));
        }
        Ok(self.bonafide_classes.contains(&class))
    }

    pub fn bonafide_classes(&self) -> &BTreeSet<usize> {
        &self.bonafide_classes
    }

    /// All mapped (speaker, source) pairs with their classes, in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), usize)> {
        self.class_of.iter().map(|(k, v)| (k, *v))
    }

    /// Serializes the class table to a plain-text sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str("# label map v1\n");
        out.push_str(&format!("strategy {}\n", self.strategy));
        out.push_str(&format!("n_classes {}\n", self.n_classes));
        for ((speaker, source), class) in self.class_of.iter() {
            let kind = if self.bonafide_classes.contains(class) {
                "bonafide"
            } else {
                "generated"
            };
            out.push_str(&format!("map {speaker} {source} {class} {kind}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Loads a sidecar written by [`LabelMap::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut strategy = None;
        let mut n_classes = None;
        let mut class_of = BTreeMap::new();
        let mut bonafide_classes = BTreeSet::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["strategy", s] => {
                    strategy = Some(LabelStrategy::parse(s).ok_or_else(|| {
                        Error::parse(path, lineno, format!("unknown strategy {s:?}"))
                    })?);
                }
                ["n_classes", n] => {
                    n_classes = Some(n.parse::<usize>().map_err(|_| {
                        Error::parse(path, lineno, format!("bad class count {n:?}"))
                    })?);
                }
                ["map", speaker, source, class, kind] => {
                    let class: usize = class.parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad class index {class:?}"))
                    })?;
                    if *kind == "bonafide" {
                        bonafide_classes.insert(class);
                    }
                    class_of.insert((speaker.to_string(), source.to_string()), class);
                }
                _ => return Err(Error::parse(path, lineno, "unrecognized label-map line")),
            }
        }
        let strategy =
            strategy.ok_or_else(|| Error::Checkpoint("label map missing strategy".into()))?;
        let n_classes =
            n_classes.ok_or_else(|| Error::Checkpoint("label map missing n_classes".into()))?;
        let map = LabelMap {
            strategy,
            class_of,
            n_classes,
            bonafide_classes,
        };
        map.check_contiguous()?;
        Ok(map)
    }

    fn check_contiguous(&self) -> Result<()> {
        let used: BTreeSet<usize> = self.class_of.values().copied().collect();
        if used.len() != self.n_classes
            || used.iter().next() != Some(&0).filter(|_| self.n_classes > 0)
            || used.iter().next_back() != Some(&(self.n_classes - 1))
        {
            return Err(Error::Validation(
                "label map classes are not contiguous from 0".into(),
            ));
        }
        Ok(())
    }
}

/// Key identifying one training class before indices are assigned.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ClassKey {
    /// Bona fide class of one speaker.
    Bonafide(String),
    /// All generated speech of one speaker (dual strategy).
    SpeakerGenerated(String),
    /// One generator system shared across speakers (multi_global).
    System(String),
    /// One (speaker, system) pair (multi_per_speaker).
    SpeakerSystem(String, String),
}

/// Builds the class map for a record set under the chosen strategy.
pub fn build_label_map(records: &[UtteranceRecord], strategy: LabelStrategy) -> Result<LabelMap> {
    if records.is_empty() {
        return Err(Error::Validation(
            "cannot build a label map from an empty corpus".into(),
        ));
    }
    for r in records {
        if r.source_tag.is_empty() {
            return Err(Error::Validation(format!(
                "record {:?} has an empty source tag",
                r.utt_id
            )));
        }
        if r.speaker_id.is_empty() {
            return Err(Error::Validation(format!(
                "record {:?} has an empty speaker id",
                r.utt_id
            )));
        }
    }

    // Pair -> class key. BTree keeps construction order-independent.
    let mut pair_keys: BTreeMap<(String, String), ClassKey> = BTreeMap::new();
    for r in records {
        let pair = (r.speaker_id.clone(), r.source_tag.clone());
        let key = if r.is_bonafide() {
            ClassKey::Bonafide(r.speaker_id.clone())
        } else {
            match strategy {
                LabelStrategy::Dual => ClassKey::SpeakerGenerated(r.speaker_id.clone()),
                LabelStrategy::MultiGlobal => ClassKey::System(r.source_tag.clone()),
                LabelStrategy::MultiPerSpeaker => {
                    ClassKey::SpeakerSystem(r.speaker_id.clone(), r.source_tag.clone())
                }
            }
        };
        pair_keys.insert(pair, key);
    }

    let mut bona_keys: BTreeSet<ClassKey> = BTreeSet::new();
    let mut gen_keys: BTreeSet<ClassKey> = BTreeSet::new();
    for key in pair_keys.values() {
        match key {
            ClassKey::Bonafide(_) => bona_keys.insert(key.clone()),
            _ => gen_keys.insert(key.clone()),
        };
    }

    // Bona fide classes first, then generated; lexicographic inside each.
    let mut index_of: BTreeMap<ClassKey, usize> = BTreeMap::new();
    let mut bonafide_classes = BTreeSet::new();
    for (i, key) in bona_keys.iter().enumerate() {
        index_of.insert(key.clone(), i);
        bonafide_classes.insert(i);
    }
    for (i, key) in gen_keys.iter().enumerate() {
        index_of.insert(key.clone(), bona_keys.len() + i);
    }

    let class_of: BTreeMap<(String, String), usize> = pair_keys
        .into_iter()
        .map(|(pair, key)| (pair, index_of[&key]))
        .collect();

    Ok(LabelMap {
        strategy,
        class_of,
        n_classes: bona_keys.len() + gen_keys.len(),
        bonafide_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(utt: &str, spk: &str, tag: &str) -> UtteranceRecord {
        UtteranceRecord {
            utt_id: utt.into(),
            speaker_id: spk.into(),
            source_tag: tag.into(),
            audio_path: format!("{utt}.wav").into(),
        }
    }

    /// 2 speakers x {bonafide, ttsA, ttsB}, one utterance per cell.
    fn two_speaker_corpus() -> Vec<UtteranceRecord> {
        let mut out = Vec::new();
        for spk in ["s1", "s2"] {
            for tag in ["bonafide", "ttsA", "ttsB"] {
                out.push(rec(&format!("{spk}_{tag}"), spk, tag));
            }
        }
        out
    }

    #[test]
    fn dual_groups_all_generated_per_speaker() {
        let map = build_label_map(&two_speaker_corpus(), LabelStrategy::Dual).unwrap();
        assert_eq!(map.n_classes, 4);
        let a = map.label_of("s1", "ttsA").unwrap();
        let b = map.label_of("s1", "ttsB").unwrap();
        assert_eq!(a, b, "dual: one generated class per speaker");
        assert_ne!(map.label_of("s1", "bonafide").unwrap(), a);
        assert!(!map.is_bonafide_class(a).unwrap());
        assert!(map
            .is_bonafide_class(map.label_of("s1", "bonafide").unwrap())
            .unwrap());
    }

    #[test]
    fn multi_global_shares_system_classes_across_speakers() {
        let map = build_label_map(&two_speaker_corpus(), LabelStrategy::MultiGlobal).unwrap();
        assert_eq!(map.n_classes, 4); // 2 speakers + 2 systems
        assert_eq!(
            map.label_of("s1", "ttsA").unwrap(),
            map.label_of("s2", "ttsA").unwrap()
        );
        assert_ne!(
            map.label_of("s1", "ttsA").unwrap(),
            map.label_of("s1", "ttsB").unwrap()
        );
    }

    #[test]
    fn multi_per_speaker_splits_every_pair() {
        let map = build_label_map(&two_speaker_corpus(), LabelStrategy::MultiPerSpeaker).unwrap();
        assert_eq!(map.n_classes, 6); // 2 speakers + 4 pairs
        assert_ne!(
            map.label_of("s1", "ttsA").unwrap(),
            map.label_of("s2", "ttsA").unwrap()
        );
    }

    #[test]
    fn bonafide_classes_come_first_and_are_pure() {
        for strategy in [
            LabelStrategy::Dual,
            LabelStrategy::MultiGlobal,
            LabelStrategy::MultiPerSpeaker,
        ] {
            let map = build_label_map(&two_speaker_corpus(), strategy).unwrap();
            for ((_, source), class) in map.entries() {
                let bona = source == "bonafide";
                assert_eq!(map.is_bonafide_class(class).unwrap(), bona);
                if bona {
                    assert!(class < map.bonafide_classes().len());
                }
            }
        }
    }

    #[test]
    fn map_is_order_invariant() {
        let mut shuffled = two_speaker_corpus();
        shuffled.reverse();
        for strategy in [
            LabelStrategy::Dual,
            LabelStrategy::MultiGlobal,
            LabelStrategy::MultiPerSpeaker,
        ] {
            let a = build_label_map(&two_speaker_corpus(), strategy).unwrap();
            let b = build_label_map(&shuffled, strategy).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unseen_pair_and_bad_index_error() {
        let map = build_label_map(&two_speaker_corpus(), LabelStrategy::Dual).unwrap();
        assert!(map.label_of("s1", "ttsZ").is_err());
        assert!(map.label_of("s9", "bonafide").is_err());
        assert!(map.is_bonafide_class(map.n_classes).is_err());
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(build_label_map(&[], LabelStrategy::Dual).is_err());
        let bad = vec![rec("u", "s1", "")];
        assert!(build_label_map(&bad, LabelStrategy::Dual).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = std::env::temp_dir().join("sasv_labelmap_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("labels.txt");
        for strategy in [
            LabelStrategy::Dual,
            LabelStrategy::MultiGlobal,
            LabelStrategy::MultiPerSpeaker,
        ] {
            let map = build_label_map(&two_speaker_corpus(), strategy).unwrap();
            map.save(&path).unwrap();
            let back = LabelMap::load(&path).unwrap();
            assert_eq!(map, back);
        }
    }
}
