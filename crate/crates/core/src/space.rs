//! Finite labelled percept and action spaces.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Label of the distinguished empty percept/action.
pub const EMPTY: &str = "ε";

/// An ordered set of distinct labels with a bijection to `0..len`.
///
/// When `contains_empty` is set, [`EMPTY`] sits at index 0.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    name: Arc<str>,
    labels: Vec<Arc<str>>,
    contains_empty: bool,
    index: HashMap<Arc<str>, usize>,
}

impl FiniteSpace {
    /// Builds a space from non-empty labels; `with_empty` prepends ε.
    pub fn new<I, S>(name: &str, labels: I, with_empty: bool) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut all: Vec<Arc<str>> = Vec::new();
        if with_empty {
            all.push(Arc::from(EMPTY));
        }
        for l in labels {
            let l = l.as_ref();
            if l == EMPTY {
                return Err(Error::InvalidSpace(format!(
                    "`{EMPTY}` must be added through the empty flag"
                )));
            }
            all.push(Arc::from(l));
        }
        let mut index = HashMap::with_capacity(all.len());
        for (i, l) in all.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!(
                    "duplicate label `{l}` in `{name}`"
                )));
            }
        }
        if all.is_empty() {
            return Err(Error::InvalidSpace(format!("space `{name}` has no labels")));
        }
        Ok(Self {
            name: Arc::from(name),
            labels: all,
            contains_empty: with_empty,
            index,
        })
    }

    /// Action space `{"0", "1", …, "n-1"}` without ε.
    pub fn indexed(name: &str, n: usize) -> Result<Self> {
        Self::new(name, (0..n).map(|i| i.to_string()), false)
    }

    /// All `n^len` action sequences, first action most significant.
    ///
    /// Labels concatenate digits when `n <= 10` and are comma-separated
    /// otherwise, so label order equals mixed-radix code order.
    pub fn sequences(name: &str, n: usize, len: usize) -> Result<Self> {
        let total = n
            .checked_pow(len as u32)
            .ok_or_else(|| Error::InvalidSpace(format!("{n}^{len} sequences overflow")))?;
        let sep = if n <= 10 { "" } else { "," };
        let labels = (0..total).map(|code| {
            decode(code, n, len)
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(sep)
        });
        Self::new(name, labels, false)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains_empty(&self) -> bool {
        self.contains_empty
    }

    /// Index of ε, when present.
    pub fn empty_index(&self) -> Option<usize> {
        self.contains_empty.then_some(0)
    }

    pub fn labels(&self) -> &[Arc<str>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &Arc<str> {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel {
                space: self.name.to_string(),
                label: label.to_string(),
            })
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// Indices of the non-empty labels.
    pub fn proper_indices(&self) -> std::ops::Range<usize> {
        (self.contains_empty as usize)..self.labels.len()
    }

    /// Same labels, ignoring the space name.
    pub fn same_labels(&self, other: &FiniteSpace) -> bool {
        self.labels == other.labels
    }
}

/// Mixed-radix digits of `code`, most significant first.
pub fn decode(mut code: usize, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
    out
}

/// Inverse of [`decode`].
pub fn encode(digits: &[usize], n: usize) -> usize {
    digits.iter().fold(0, |acc, d| acc * n + d)
}

impl fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteSpace")
            .field("name", &self.name)
            .field("labels", &self.labels)
            .finish()
    }
}

/// The percept/action structure an agent and environment agree on.
///
/// `percepts` is the raw percept space 𝒮′ (with ε); the reward flag travels
/// next to it, so the full percept space is 𝒮′ × {0, 1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spaces {
    pub percepts: FiniteSpace,
    pub actions: FiniteSpace,
    /// Actions per epoch for episodic tasks.
    pub epoch_len: usize,
}

impl Spaces {
    pub fn new(percepts: FiniteSpace, actions: FiniteSpace, epoch_len: usize) -> Result<Self> {
        if !percepts.contains_empty() {
            return Err(Error::InvalidSpace("percept space must contain ε".into()));
        }
        if actions.contains_empty() {
            return Err(Error::InvalidSpace(
                "agents never emit the empty action".into(),
            ));
        }
        if epoch_len == 0 {
            return Err(Error::InvalidSpace("epoch length must be positive".into()));
        }
        Ok(Self {
            percepts,
            actions,
            epoch_len,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Checks that two parties agree on labels and epoch length.
    pub fn check_compatible(&self, other: &Spaces) -> Result<()> {
        if !self.percepts.same_labels(&other.percepts) {
            return Err(Error::SpaceMismatch("percept labels differ".into()));
        }
        if !self.actions.same_labels(&other.actions) {
            return Err(Error::SpaceMismatch("action labels differ".into()));
        }
        if self.epoch_len != other.epoch_len {
            return Err(Error::SpaceMismatch(format!(
                "epoch length {} vs {}",
                self.epoch_len, other.epoch_len
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_a_bijection() {
        let s = FiniteSpace::new("s", ["a", "b", "c"], true).unwrap();
        assert_eq!(s.len(), 4);
        for (i, l) in s.labels().iter().enumerate() {
            assert_eq!(s.index_of(l).unwrap(), i);
        }
        assert_eq!(s.empty_index(), Some(0));
        assert_eq!(s.proper_indices(), 1..4);
    }

    #[test]
    fn rejects_duplicates_and_explicit_empty() {
        assert!(FiniteSpace::new("s", ["a", "a"], false).is_err());
        assert!(FiniteSpace::new("s", [EMPTY], false).is_err());
        assert!(FiniteSpace::new("s", Vec::<String>::new(), false).is_err());
    }

    #[test]
    fn sequence_labels_follow_codes() {
        let s = FiniteSpace::sequences("a", 2, 3).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(&**s.label(5), "101");
        assert_eq!(decode(5, 2, 3), vec![1, 0, 1]);
        assert_eq!(encode(&[1, 0, 1], 2), 5);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let s = FiniteSpace::indexed("a", 2).unwrap();
        assert!(matches!(s.index_of("7"), Err(Error::UnknownLabel { .. })));
    }
}
