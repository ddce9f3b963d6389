//! The N-Grams environment: build strings up to a maximum length, scored
//! by normalized counts of given unigram or bigram patterns.

use crate::envs::{Environment, EnumerableEnvironment};
use crate::error::{Error, Result};
use crate::pareto::{ObjectiveVector, PointSet};

/// Uppercase alphabet used as the default vocabulary.
pub const ALPHABET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

#[derive(Debug, Clone)]
pub struct NGramEnv {
    vocab: Vec<char>,
    max_len: usize,
    patterns: Vec<String>,
}

impl NGramEnv {
    /// Builds the environment; patterns must be non-empty strings over
    /// the vocabulary.
    pub fn new(vocab: &str, max_len: usize, patterns: Vec<String>) -> Result<Self> {
        let vocab: Vec<char> = vocab.chars().collect();
        if vocab.is_empty() || max_len == 0 {
            return Err(Error::InvalidInput(
                "ngrams needs a vocabulary and max length >= 1".into(),
            ));
        }
        if patterns.is_empty() {
            return Err(Error::InvalidInput("no patterns configured".into()));
        }
        for p in &patterns {
            if p.is_empty() || p.chars().any(|c| !vocab.contains(&c)) {
                return Err(Error::InvalidInput(format!(
                    "pattern {p:?} not over the vocabulary"
                )));
            }
            if p.chars().count() > max_len {
                return Err(Error::InvalidInput(format!(
                    "pattern {p:?} longer than the maximum length"
                )));
            }
        }
        Ok(Self {
            vocab,
            max_len,
            patterns,
        })
    }

    /// Default-vocabulary constructor (26 uppercase letters).
    pub fn with_alphabet(max_len: usize, patterns: Vec<String>) -> Result<Self> {
        Self::new(ALPHABET, max_len, patterns)
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    /// Overlapping occurrences of `pattern` in `seq`.
    fn count_occurrences(seq: &str, pattern: &str) -> usize {
        let seq: Vec<char> = seq.chars().collect();
        let pat: Vec<char> = pattern.chars().collect();
        if pat.is_empty() || seq.len() < pat.len() {
            return 0;
        }
        seq.windows(pat.len()).filter(|w| *w == pat.as_slice()).count()
    }

    /// Normalized pattern-count reward of a sequence.
    ///
    /// Objective i is the overlapping count of pattern i divided by the
    /// maximum number of occurrences a length-L string could hold
    /// (`L - len(pattern) + 1`), so a unigram normalizes by L and a
    /// bigram by `L - 1`. Rewards depend only on the realized characters.
    pub fn reward(&self, seq: &str) -> Result<ObjectiveVector> {
        let values = self
            .patterns
            .iter()
            .map(|p| {
                let max_occurrences = self.max_len - p.chars().count() + 1;
                Self::count_occurrences(seq, p) as f64 / max_occurrences as f64
            })
            .collect();
        ObjectiveVector::new(values)
    }

    /// Reward vectors of a batch of sequences as a point set.
    pub fn reward_set(&self, seqs: &[String]) -> Result<PointSet> {
        let rows = seqs
            .iter()
            .map(|s| self.reward(s).map(|o| o.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        PointSet::from_rows(rows)
    }
}

impl Environment for NGramEnv {
    type State = String;

    fn initial_state(&self) -> String {
        String::new()
    }

    fn num_actions(&self) -> usize {
        self.vocab.len() + 1
    }

    fn action_mask(&self, state: &String) -> Vec<bool> {
        let len = state.chars().count();
        let can_append = len < self.max_len;
        let mut mask = vec![can_append; self.vocab.len()];
        // The empty string is not a valid terminal.
        mask.push(len >= 1);
        mask
    }

    fn apply(&self, state: &String, action: usize) -> String {
        debug_assert!(action < self.vocab.len());
        let mut next = state.clone();
        next.push(self.vocab[action]);
        next
    }

    fn parent_action_count(&self, state: &String) -> usize {
        // A non-empty prefix has exactly one parent (drop the last char).
        usize::from(!state.is_empty())
    }

    fn input_dim(&self) -> usize {
        // One-hot per slot over vocab + pad, plus a length scalar.
        self.max_len * (self.vocab.len() + 1) + 1
    }

    fn encode_state(&self, state: &String, out: &mut Vec<f64>) {
        let slot_width = self.vocab.len() + 1;
        out.clear();
        out.resize(self.input_dim(), 0.0);
        let mut len = 0usize;
        for (slot, c) in state.chars().enumerate() {
            let v = self.vocab.iter().position(|&x| x == c).expect("vocab char");
            out[slot * slot_width + v] = 1.0;
            len += 1;
        }
        for slot in len..self.max_len {
            out[slot * slot_width + self.vocab.len()] = 1.0; // pad marker
        }
        *out.last_mut().unwrap() = len as f64 / self.max_len as f64;
    }

    fn objective_dim(&self) -> usize {
        self.patterns.len()
    }

    fn objectives(&self, state: &String) -> Result<ObjectiveVector> {
        self.reward(state)
    }

    fn object_distance(&self, a: &String, b: &String) -> f64 {
        edit_distance(a, b) as f64
    }

    fn state_label(&self, state: &String) -> String {
        state.clone()
    }
}

impl EnumerableEnvironment for NGramEnv {
    fn state_count(&self) -> usize {
        // sum_{l=0..=L} V^l
        let v = self.vocab.len();
        let mut total = 1usize;
        let mut level = 1usize;
        for _ in 0..self.max_len {
            level *= v;
            total += level;
        }
        total
    }

    fn states_topological(&self) -> Vec<String> {
        let mut states = vec![String::new()];
        let mut frontier = vec![String::new()];
        for _ in 0..self.max_len {
            let mut next = Vec::with_capacity(frontier.len() * self.vocab.len());
            for s in &frontier {
                for &c in &self.vocab {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            states.extend(next.iter().cloned());
            frontier = next;
        }
        states
    }
}

/// Levenshtein edit distance between two sequences.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, &ac) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &bc) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ac != bc);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
