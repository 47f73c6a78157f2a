//! Text persistence for chains and annotation stores.
//!
//! Models are written in canonical form: transitions sorted by source and
//! target, label lines sorted by state, probabilities with 17 significant
//! digits. The SHA-256 digest of that text identifies the model, and an
//! annotation file only loads against the model it was computed on.

use std::fmt::{self, Write as _};
use std::io::{self, Read, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bouquet::{AnnotationStore, FlowerMark};
use crate::dtmc::{Dtmc, Violation};
use crate::formula::FormulaFingerprint;

const DIGEST_NAME: &str = "sha256";
const ANNOTATIONS_HEADER: &str = "annotations v1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("refusing to write an invalid model: {0}")]
    InvalidModel(#[from] Violation),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("annotations belong to model {found}, expected {expected}")]
    FingerprintMismatch {
        expected: ModelFingerprint,
        found: ModelFingerprint,
    },
    #[error("annotations were computed for k={stored}, run uses k={requested}")]
    KMismatch { stored: usize, requested: usize },
    #[error("annotation file line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelFingerprint(pub [u8; 32]);

impl ModelFingerprint {
    pub fn of(model: &Dtmc) -> Self {
        let text = canonical_text(model);
        ModelFingerprint(Sha256::digest(text.as_bytes()).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        let bytes = hex::decode(text).ok()?;
        Some(ModelFingerprint(bytes.try_into().ok()?))
    }
}

impl fmt::Display for ModelFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Renders `model` in canonical model-file form.
pub fn canonical_text(model: &Dtmc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dtmc");
    let _ = writeln!(out, "states {}", model.n());
    let _ = writeln!(out, "init {}", model.initial());
    let _ = writeln!(out, "transitions {}", model.transition_count());
    for s in 0..model.n() {
        for (t, p) in model.row(s).iter() {
            let _ = writeln!(out, "{s} {t} {p:.16e}");
        }
    }
    out.push_str("labels");
    for name in model.ap_names() {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    for s in 0..model.n() {
        let mut names: Vec<&str> = model.labels(s).map(|ap| model.ap_names()[ap].as_str()).collect();
        if names.is_empty() {
            continue;
        }
        names.sort_unstable();
        let _ = writeln!(out, "{s}: {}", names.join(" "));
    }
    out
}

/// Validates `model`, then writes it in canonical form.
pub fn write_model<W: Write>(model: &Dtmc, mut sink: W) -> Result<(), StoreError> {
    model.validate()?;
    sink.write_all(canonical_text(model).as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Writes structural annotations and cached values. Counters are not saved.
pub fn save_annotations<W: Write>(
    store: &AnnotationStore,
    fp: &ModelFingerprint,
    mut sink: W,
) -> Result<(), StoreError> {
    let mut out = String::new();
    let _ = writeln!(out, "{ANNOTATIONS_HEADER}");
    let _ = writeln!(out, "model {DIGEST_NAME} {fp}");
    let _ = writeln!(out, "states {}", store.n());
    let _ = writeln!(out, "k {}", store.k());
    for s in 0..store.n() {
        match store.mark(s) {
            FlowerMark::Unknown => {}
            FlowerMark::NotFlower => {
                let _ = writeln!(out, "state {s} notflower");
            }
            FlowerMark::Flower => match store.reach_count(s) {
                Some(count) => {
                    let _ = writeln!(out, "state {s} flower reach {count}");
                }
                None => {
                    let _ = writeln!(out, "state {s} flower");
                }
            },
        }
    }
    for (formula, s, value) in store.cached_values() {
        let _ = writeln!(out, "prob {formula} {s} {value:.16e}");
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Reads an annotation file written for the model with fingerprint `fp`.
/// With `k` given, a store computed under another threshold is rejected.
pub fn load_annotations<R: Read>(
    mut source: R,
    fp: &ModelFingerprint,
    k: Option<usize>,
) -> Result<AnnotationStore, StoreError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_annotations(&text, fp, k)
}

fn parse_annotations(text: &str, fp: &ModelFingerprint, k: Option<usize>) -> Result<AnnotationStore, StoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header = |expected: &str| -> Result<(usize, Vec<&str>), StoreError> {
        let (line, l) = lines
            .next()
            .ok_or_else(|| corrupt(0, format!("missing `{expected}` header")))?;
        let mut words = l.split_whitespace();
        if words.next() != Some(expected) {
            return Err(corrupt(line, format!("expected `{expected}` header")));
        }
        Ok((line, words.collect()))
    };

    let (line, version) = header("annotations")?;
    if version != ["v1"] {
        return Err(corrupt(line, "unsupported annotation format version".into()));
    }
    let (line, model) = header("model")?;
    let found = match model[..] {
        [DIGEST_NAME, digest] => ModelFingerprint::from_hex(digest),
        _ => None,
    }
    .ok_or_else(|| corrupt(line, format!("expected `model {DIGEST_NAME} <hex>`")))?;
    if found != *fp {
        return Err(StoreError::FingerprintMismatch { expected: *fp, found });
    }
    let (line, states) = header("states")?;
    let n = single_number(line, &states)?;
    let (line, threshold) = header("k")?;
    let stored_k = single_number(line, &threshold)?;
    if let Some(requested) = k {
        if requested != stored_k {
            return Err(StoreError::KMismatch {
                stored: stored_k,
                requested,
            });
        }
    }

    let mut store = AnnotationStore::new(n, stored_k);
    for (line, l) in lines {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words[..] {
            ["state", s, kind, ref rest @ ..] => {
                let s = state_index(line, s, n)?;
                if store.mark(s) != FlowerMark::Unknown {
                    return Err(corrupt(line, format!("state {s} annotated twice")));
                }
                match (kind, rest) {
                    ("notflower", []) => store.annotate(s, FlowerMark::NotFlower),
                    ("flower", []) => store.annotate(s, FlowerMark::Flower),
                    ("flower", ["reach", count]) => {
                        let count = number(line, count)?;
                        store.annotate(s, FlowerMark::Flower);
                        store.set_reach_count(
                            s,
                            Some(u32::try_from(count).map_err(|_| corrupt(line, "reach count too large".into()))?),
                        );
                    }
                    _ => return Err(corrupt(line, "malformed state line".into())),
                }
            }
            ["prob", formula, s, value] => {
                let formula = FormulaFingerprint::from_hex(formula)
                    .ok_or_else(|| corrupt(line, "malformed formula fingerprint".into()))?;
                let s = state_index(line, s, n)?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| corrupt(line, format!("invalid probability `{value}`")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(corrupt(line, format!("probability {value} outside [0, 1]")));
                }
                if store.mark(s) != FlowerMark::Flower {
                    return Err(corrupt(line, format!("cached value for non-flower state {s}")));
                }
                if store.cached(&formula, s).is_some() {
                    return Err(corrupt(line, format!("duplicate cached value for state {s}")));
                }
                store.insert_value(formula, s, value);
            }
            _ => return Err(corrupt(line, format!("unrecognized line `{l}`"))),
        }
    }
    Ok(store)
}

fn corrupt(line: usize, message: String) -> StoreError {
    StoreError::Corrupt { line, message }
}

fn number(line: usize, word: &str) -> Result<usize, StoreError> {
    word.parse()
        .map_err(|_| corrupt(line, format!("invalid number `{word}`")))
}

fn single_number(line: usize, words: &[&str]) -> Result<usize, StoreError> {
    match words {
        [w] => number(line, w),
        _ => Err(corrupt(line, "expected a single number".into())),
    }
}

fn state_index(line: usize, word: &str, n: usize) -> Result<usize, StoreError> {
    let s = number(line, word)?;
    if s >= n {
        return Err(corrupt(line, format!("state {s} out of range for {n} states")));
    }
    Ok(s)
}
