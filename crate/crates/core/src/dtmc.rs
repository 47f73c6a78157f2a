//! Labeled discrete-time Markov chains.
//!
//! A [`Dtmc`] stores its transition function as compressed sparse rows with
//! every row sorted by ascending target. States are dense indices `0..n`.
//! Atomic propositions are named once in [`Dtmc::ap_names`] and referenced
//! by index from the per-state label sets.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use thiserror::Error;

/// Row-sum tolerance used by [`Dtmc::validate`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// First violated structural invariant of a chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("chain has no states")]
    NoStates,
    #[error("initial state {initial} out of range for {n} states")]
    InitialOutOfRange { initial: usize, n: usize },
    #[error("empty row at state {state}")]
    EmptyRow { state: usize },
    #[error("transition {state} -> {target} targets a state outside 0..{n}")]
    TargetOutOfRange { state: usize, target: usize, n: usize },
    #[error("duplicate transition {state} -> {target}")]
    DuplicateTarget { state: usize, target: usize },
    #[error("transition {state} -> {target} has probability {prob} outside (0, 1]")]
    BadProbability { state: usize, target: usize, prob: f64 },
    #[error("row-sum {sum} at state {state}")]
    RowSum { state: usize, sum: f64 },
    #[error("state {state} carries label index {ap} but only {count} propositions exist")]
    LabelOutOfRange { state: usize, ap: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected `{expected}`")]
    Header { expected: &'static str },
    #[error("malformed transition line, expected `<src> <dst> <prob>`")]
    MalformedTransition,
    #[error("malformed label line, expected `<state>: <ap> ...`")]
    MalformedLabel,
    #[error("invalid number `{0}`")]
    Number(String),
    #[error("unknown state index {state} (model has {n} states)")]
    UnknownState { state: usize, n: usize },
    #[error("probability {prob} outside (0, 1]")]
    Probability { prob: f64 },
    #[error("duplicate transition {src} -> {dst}")]
    DuplicateTransition { src: usize, dst: usize },
    #[error("row-sum {sum} at state {state}")]
    RowSum { state: usize, sum: f64 },
    #[error("state {state} has no outgoing transitions")]
    EmptyRow { state: usize },
    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),
    #[error("duplicate atomic proposition `{0}`")]
    DuplicateProposition(String),
    #[error("labels for state {0} given twice")]
    DuplicateLabelLine(usize),
    #[error("expected {expected} transitions, found {found}")]
    TransitionCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid model: {0}")]
    Invalid(#[from] Violation),
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("density needs at least 2 states, model has {n}")]
    DensityUndefined { n: usize },
}

/// A finite labeled Markov chain with a single initial state.
#[derive(Clone, PartialEq)]
pub struct Dtmc {
    initial: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
    ap_names: Vec<String>,
    labels: Vec<Vec<u32>>,
}

impl fmt::Debug for Dtmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dtmc")
            .field("n", &self.n())
            .field("initial", &self.initial)
            .field("transitions", &self.targets.len())
            .field("ap_names", &self.ap_names)
            .finish()
    }
}

impl Dtmc {
    /// Builds a chain and checks every invariant.
    pub fn new(
        initial: usize,
        rows: Vec<Vec<(usize, f64)>>,
        ap_names: Vec<String>,
        labels: Vec<Vec<usize>>,
    ) -> Result<Self, Violation> {
        let model = Self::new_unchecked(initial, rows, ap_names, labels);
        model.validate()?;
        Ok(model)
    }

    /// Builds a chain without checking invariants. Rows are sorted by target
    /// and label sets deduplicated; everything else is stored as given, so
    /// [`Dtmc::validate`] must be consulted before the model is used.
    ///
    /// `labels` may be shorter than `rows`; missing entries are empty sets.
    pub fn new_unchecked(
        initial: usize,
        rows: Vec<Vec<(usize, f64)>>,
        ap_names: Vec<String>,
        labels: Vec<Vec<usize>>,
    ) -> Self {
        let n = rows.len();
        let edges = rows.iter().map(Vec::len).sum();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(edges);
        let mut probs = Vec::with_capacity(edges);
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(t, _)| t);
            for (t, p) in row {
                targets.push(u32::try_from(t).unwrap_or(u32::MAX));
                probs.push(p);
            }
            offsets.push(targets.len());
        }
        let mut label_sets: Vec<Vec<u32>> = labels
            .into_iter()
            .map(|set| {
                let mut set: Vec<u32> = set
                    .into_iter()
                    .map(|ap| u32::try_from(ap).unwrap_or(u32::MAX))
                    .collect();
                set.sort_unstable();
                set.dedup();
                set
            })
            .collect();
        label_sets.resize(n, Vec::new());
        Dtmc {
            initial,
            offsets,
            targets,
            probs,
            ap_names,
            labels: label_sets,
        }
    }

    /// Reports the first violated invariant, scanning states in order.
    pub fn validate(&self) -> Result<(), Violation> {
        let n = self.n();
        if n == 0 {
            return Err(Violation::NoStates);
        }
        if self.initial >= n {
            return Err(Violation::InitialOutOfRange {
                initial: self.initial,
                n,
            });
        }
        for state in 0..n {
            let row = self.row(state);
            if row.is_empty() {
                return Err(Violation::EmptyRow { state });
            }
            let mut sum = 0.0;
            let mut prev: Option<usize> = None;
            for (target, prob) in row.iter() {
                if target >= n {
                    return Err(Violation::TargetOutOfRange { state, target, n });
                }
                if prev == Some(target) {
                    return Err(Violation::DuplicateTarget { state, target });
                }
                prev = Some(target);
                if !(prob > 0.0 && prob <= 1.0) {
                    return Err(Violation::BadProbability { state, target, prob });
                }
                sum += prob;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Violation::RowSum { state, sum });
            }
            let count = self.ap_names.len();
            if let Some(&ap) = self.labels[state].iter().find(|&&ap| ap as usize >= count) {
                return Err(Violation::LabelOutOfRange {
                    state,
                    ap: ap as usize,
                    count,
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transition_count(&self) -> usize {
        self.targets.len()
    }

    pub fn ap_names(&self) -> &[String] {
        &self.ap_names
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.ap_names.iter().position(|ap| ap == name)
    }

    /// Sorted proposition indices holding in `state`.
    pub fn labels(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels[state].iter().map(|&ap| ap as usize)
    }

    pub fn has_label(&self, state: usize, ap: usize) -> bool {
        u32::try_from(ap).is_ok_and(|ap| self.labels[state].binary_search(&ap).is_ok())
    }

    /// Borrowed view of `state`'s row. Panics when `state` is out of range.
    pub fn row(&self, state: usize) -> Row<'_> {
        let (lo, hi) = (self.offsets[state], self.offsets[state + 1]);
        Row {
            targets: &self.targets[lo..hi],
            probs: &self.probs[lo..hi],
        }
    }

    fn check_state(&self, state: usize) -> Result<(), ModelError> {
        if state < self.n() {
            Ok(())
        } else {
            Err(ModelError::StateOutOfRange { state, n: self.n() })
        }
    }

    /// `state`'s row by value, ascending by target.
    pub fn successors(&self, state: usize) -> Result<Vec<(usize, f64)>, ModelError> {
        self.check_state(state)?;
        Ok(self.row(state).iter().collect())
    }

    /// Draws a successor of `state` by inverse CDF over the stored row order.
    pub fn sample_successor<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Result<usize, ModelError> {
        self.check_state(state)?;
        Ok(self.row(state).sample(rng))
    }

    /// Transition count over `n(n-1)`. Self-loops count as edges.
    pub fn density(&self) -> Result<f64, ModelError> {
        let n = self.n();
        if n < 2 {
            return Err(ModelError::DensityUndefined { n });
        }
        Ok(self.transition_count() as f64 / (n as f64 * (n - 1) as f64))
    }
}

/// One state's outgoing transitions.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    targets: &'a [u32],
    probs: &'a [f64],
}

impl<'a> Row<'a> {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.targets.iter().zip(self.probs).map(|(&t, &p)| (t as usize, p))
    }

    pub fn target(&self, i: usize) -> usize {
        self.targets[i] as usize
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + 'a {
        self.targets.iter().map(|&t| t as usize)
    }

    /// Inverse-CDF lookup for `u` in `[0, 1)`. Rounding slack at the top of
    /// the row falls through to the last target.
    pub fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (t, p) in self.iter() {
            acc += p;
            if u < acc {
                return t;
            }
        }
        *self.targets.last().expect("row is non-empty") as usize
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.targets.len() == 1 {
            return self.targets[0] as usize;
        }
        self.pick(rng.random::<f64>())
    }
}

/// Successor access as seen by the sampling engines.
///
/// Every [`Chain::fetch`] models one retrieval of a successor row from
/// backing storage. [`Chain::model`] gives uncounted access for work that
/// happens in memory (formula evaluation, flower extraction).
pub trait Chain: Sync {
    fn model(&self) -> &Dtmc;

    fn fetch(&self, state: usize) -> Row<'_>;

    /// Books `count` fetches that did not go through [`Chain::fetch`].
    fn charge(&self, _count: u64) {}
}

impl Chain for Dtmc {
    fn model(&self) -> &Dtmc {
        self
    }

    fn fetch(&self, state: usize) -> Row<'_> {
        self.row(state)
    }
}

/// A chain wrapper counting row fetches.
#[derive(Debug)]
pub struct Metered<'a> {
    model: &'a Dtmc,
    fetches: AtomicU64,
}

impl<'a> Metered<'a> {
    pub fn new(model: &'a Dtmc) -> Self {
        Metered {
            model,
            fetches: AtomicU64::new(0),
        }
    }

    pub fn fetches(&self) -> u64 {
        self.fetches.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.fetches.store(0, Ordering::Relaxed);
    }
}

impl Chain for Metered<'_> {
    fn model(&self) -> &Dtmc {
        self.model
    }

    fn fetch(&self, state: usize) -> Row<'_> {
        self.fetches.fetch_add(1, Ordering::Relaxed);
        self.model.row(state)
    }

    fn charge(&self, count: u64) {
        self.fetches.fetch_add(count, Ordering::Relaxed);
    }
}

/// A finite path prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<usize>,
    /// Generation stopped at the step limit rather than at a verdict.
    pub truncated: bool,
}

impl Trace {
    pub fn new(states: Vec<usize>, truncated: bool) -> Self {
        Trace { states, truncated }
    }

    /// Whether consecutive states are linked by positive-probability
    /// transitions of `model`.
    pub fn is_path_of(&self, model: &Dtmc) -> bool {
        let n = model.n();
        self.states.iter().all(|&s| s < n)
            && self
                .states
                .windows(2)
                .all(|w| model.row(w[0]).iter().any(|(t, p)| t == w[1] && p > 0.0))
    }
}

/// A subset of a chain's states, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        StateSet { mask: vec![true; n] }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        StateSet { mask }
    }

    pub fn from_members(n: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(n);
        for s in members {
            set.insert(s);
        }
        set
    }

    pub fn insert(&mut self, state: usize) -> bool {
        !std::mem::replace(&mut self.mask[state], true)
    }

    pub fn contains(&self, state: usize) -> bool {
        self.mask.get(state).copied().unwrap_or(false)
    }

    /// Size of the universe, not the member count.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(s, &m)| m.then_some(s))
    }

    pub fn as_mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Parses the line-oriented model format.
pub fn parse_model(text: &str) -> Result<Dtmc, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let last_line = text.lines().count().max(1);

    let mut header = |expected: &'static str| -> Result<(usize, Vec<&str>), ParseError> {
        match lines.next() {
            Some((line, l)) => {
                let mut words = l.split_whitespace();
                if words.next() == Some(expected) {
                    Ok((line, words.collect()))
                } else {
                    Err(ParseError {
                        line,
                        kind: ParseErrorKind::Header { expected },
                    })
                }
            }
            None => Err(ParseError {
                line: last_line,
                kind: ParseErrorKind::Header { expected },
            }),
        }
    };

    let single = |line: usize, words: &[&str], expected: &'static str| -> Result<usize, ParseError> {
        match words {
            [w] => parse_number(line, w),
            _ => Err(ParseError {
                line,
                kind: ParseErrorKind::Header { expected },
            }),
        }
    };

    let (line, rest) = header("dtmc")?;
    if !rest.is_empty() {
        return Err(ParseError {
            line,
            kind: ParseErrorKind::Header { expected: "dtmc" },
        }
        .into());
    }
    let (line, rest) = header("states")?;
    let n = single(line, &rest, "states <n>")?;
    if n == 0 {
        return Err(Violation::NoStates.into());
    }
    let (line, rest) = header("init")?;
    let initial = single(line, &rest, "init <state>")?;
    if initial >= n {
        return Err(ParseError {
            line,
            kind: ParseErrorKind::UnknownState { state: initial, n },
        }
        .into());
    }
    let (transitions_line, rest) = header("transitions")?;
    let m = single(transitions_line, &rest, "transitions <m>")?;

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut first_line = vec![0usize; n];
    for found in 0..m {
        let Some((line, l)) = lines.next() else {
            return Err(ParseError {
                line: last_line,
                kind: ParseErrorKind::TransitionCount { expected: m, found },
            }
            .into());
        };
        let words: Vec<&str> = l.split_whitespace().collect();
        let [src, dst, prob] = words[..] else {
            let kind = if words.first() == Some(&"labels") {
                ParseErrorKind::TransitionCount { expected: m, found }
            } else {
                ParseErrorKind::MalformedTransition
            };
            return Err(ParseError { line, kind }.into());
        };
        let src = parse_number(line, src)?;
        let dst = parse_number(line, dst)?;
        for state in [src, dst] {
            if state >= n {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::UnknownState { state, n },
                }
                .into());
            }
        }
        let prob: f64 = prob.parse().map_err(|_| ParseError {
            line,
            kind: ParseErrorKind::Number(prob.to_string()),
        })?;
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::Probability { prob },
            }
            .into());
        }
        if rows[src].iter().any(|&(t, _)| t == dst) {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::DuplicateTransition { src, dst },
            }
            .into());
        }
        if rows[src].is_empty() {
            first_line[src] = line;
        }
        rows[src].push((dst, prob));
    }

    for (state, row) in rows.iter().enumerate() {
        if row.is_empty() {
            return Err(ParseError {
                line: transitions_line,
                kind: ParseErrorKind::EmptyRow { state },
            }
            .into());
        }
        let sum: f64 = row.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(ParseError {
                line: first_line[state],
                kind: ParseErrorKind::RowSum { state, sum },
            }
            .into());
        }
    }

    let mut ap_names: Vec<String> = Vec::new();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); n];
    if let Some((line, l)) = lines.next() {
        let mut words = l.split_whitespace();
        if words.next() != Some("labels") {
            return Err(ParseError {
                line,
                kind: if l.split_whitespace().count() == 3 {
                    ParseErrorKind::TransitionCount {
                        expected: m,
                        found: m + 1,
                    }
                } else {
                    ParseErrorKind::Header { expected: "labels" }
                },
            }
            .into());
        }
        for name in words {
            if ap_names.iter().any(|ap| ap == name) {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::DuplicateProposition(name.to_string()),
                }
                .into());
            }
            ap_names.push(name.to_string());
        }
        let mut seen = vec![false; n];
        for (line, l) in lines {
            let Some((state, aps)) = l.split_once(':') else {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::MalformedLabel,
                }
                .into());
            };
            let state = parse_number(line, state.trim())?;
            if state >= n {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::UnknownState { state, n },
                }
                .into());
            }
            if std::mem::replace(&mut seen[state], true) {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::DuplicateLabelLine(state),
                }
                .into());
            }
            for name in aps.split_whitespace() {
                let ap = ap_names.iter().position(|ap| ap == name).ok_or_else(|| ParseError {
                    line,
                    kind: ParseErrorKind::UnknownProposition(name.to_string()),
                })?;
                labels[state].push(ap);
            }
        }
    }

    Ok(Dtmc::new(initial, rows, ap_names, labels)?)
}

fn parse_number(line: usize, word: &str) -> Result<usize, ParseError> {
    word.parse().map_err(|_| ParseError {
        line,
        kind: ParseErrorKind::Number(word.to_string()),
    })
}

impl std::str::FromStr for Dtmc {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_t1() {
        let model = parse_model(T1_TEXT).unwrap();
        assert_eq!(model.n(), 3);
        assert_eq!(model.row(0).len(), 2);
        assert_eq!(model, t1());
    }

    #[test]
    fn row_sum_error_names_state() {
        let text = T1_TEXT.replace("0 2 0.5", "0 2 0.4");
        let err = parse_model(&text).unwrap_err();
        match err {
            ModelError::Parse(ParseError {
                line: 5,
                kind: ParseErrorKind::RowSum { state: 0, sum },
            }) => assert!((sum - 0.9).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_state_is_reported_with_line() {
        let text = T1_TEXT.replace("0 2 0.5", "0 5 0.5");
        let err = parse_model(&text).unwrap_err();
        assert_eq!(
            err,
            ModelError::Parse(ParseError {
                line: 6,
                kind: ParseErrorKind::UnknownState { state: 5, n: 3 }
            })
        );
    }

    #[test]
    fn parse_errors() {
        let cases = [
            (T1_TEXT.replace("dtmc", "ctmc"), 1),
            (T1_TEXT.replace("0 2 0.5", "0 2 1.5"), 6),
            (T1_TEXT.replace("0 2 0.5", "0 1 0.5"), 6),
            (T1_TEXT.replace("transitions 4", "transitions 5"), 9),
            (T1_TEXT.replace("1: b", "1: c"), 11),
            (T1_TEXT.replace("states 3", "states three"), 2),
        ];
        for (text, line) in cases {
            match parse_model(&text) {
                Err(ModelError::Parse(e)) => assert_eq!(e.line, line, "{e}"),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_missing_labels_are_accepted() {
        let text = "# header\ndtmc\nstates 1\ninit 0\n\ntransitions 1\n# loop\n0 0 1.0\n";
        let model = parse_model(text).unwrap();
        assert_eq!(model.n(), 1);
        assert!(model.ap_names().is_empty());
    }

    #[test]
    fn validate_reports_first_violation() {
        assert_eq!(t1().validate(), Ok(()));

        let emptied = Dtmc::new_unchecked(
            0,
            vec![vec![(1, 0.5), (2, 0.5)], vec![], vec![(2, 1.0)]],
            vec!["a".into(), "b".into()],
            vec![],
        );
        assert_eq!(emptied.validate(), Err(Violation::EmptyRow { state: 1 }));

        let heavy = Dtmc::new_unchecked(
            0,
            vec![vec![(1, 0.5), (2, 0.6)], vec![(1, 1.0)], vec![(2, 1.0)]],
            vec![],
            vec![],
        );
        match heavy.validate() {
            Err(Violation::RowSum { state: 0, sum }) => assert!((sum - 1.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }

        let bad_label = Dtmc::new_unchecked(0, vec![vec![(0, 1.0)]], vec![], vec![vec![0]]);
        assert!(matches!(
            bad_label.validate(),
            Err(Violation::LabelOutOfRange { state: 0, .. })
        ));
    }

    #[test]
    fn successors_are_sorted_and_checked() {
        let model = t1();
        assert_eq!(model.successors(0).unwrap(), vec![(1, 0.5), (2, 0.5)]);
        assert_eq!(model.successors(1).unwrap(), vec![(1, 1.0)]);
        assert_eq!(model.successors(3), Err(ModelError::StateOutOfRange { state: 3, n: 3 }));
        let shuffled = Dtmc::new(0, vec![vec![(1, 0.25), (0, 0.75)], vec![(1, 1.0)]], vec![], vec![]).unwrap();
        assert_eq!(shuffled.successors(0).unwrap(), vec![(0, 0.75), (1, 0.25)]);
    }

    #[test]
    fn sampling() {
        let model = t1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(model.sample_successor(1, &mut rng).unwrap(), 1);
        assert!(model.sample_successor(3, &mut rng).is_err());

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            model.sample_successor(0, &mut rng).unwrap()
        };
        assert!([1, 2].contains(&draw(11)));
        assert_eq!(draw(11), draw(11));

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| model.sample_successor(0, &mut rng).unwrap() == 1)
            .count();
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn density_counts_self_loops() {
        assert!((t1().density().unwrap() - 4.0 / 6.0).abs() < 1e-12);
        let complete = Dtmc::new(
            0,
            (0..4)
                .map(|s| (0..4).filter(|&t| t != s).map(|t| (t, 1.0 / 3.0)).collect())
                .collect(),
            vec![],
            vec![],
        )
        .unwrap();
        assert_eq!(complete.density().unwrap(), 1.0);
        let single = Dtmc::new(0, vec![vec![(0, 1.0)]], vec![], vec![]).unwrap();
        assert_eq!(single.density(), Err(ModelError::DensityUndefined { n: 1 }));
    }

    #[test]
    fn metered_counts_fetches_only() {
        let model = l10();
        let metered = Metered::new(&model);
        let _ = metered.model().row(3);
        assert_eq!(metered.fetches(), 0);
        let _ = metered.fetch(3);
        let _ = metered.fetch(4);
        metered.charge(5);
        assert_eq!(metered.fetches(), 7);
    }

    #[test]
    fn trace_validity() {
        let model = t1();
        assert!(Trace::new(vec![0, 1, 1], false).is_path_of(&model));
        assert!(!Trace::new(vec![0, 1, 2], false).is_path_of(&model));
        assert!(!Trace::new(vec![4], false).is_path_of(&model));
    }
}
