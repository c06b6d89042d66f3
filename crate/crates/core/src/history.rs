//! Alternating percept/action records.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Spaces, EMPTY};

/// One entry of a history.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Entry {
    Percept { label: Arc<str>, reward: bool },
    Action { label: Arc<str> },
}

impl Entry {
    pub fn is_percept(&self) -> bool {
        matches!(self, Entry::Percept { .. })
    }

    pub fn label(&self) -> &Arc<str> {
        match self {
            Entry::Percept { label, .. } | Entry::Action { label } => label,
        }
    }

    pub fn reward(&self) -> bool {
        matches!(self, Entry::Percept { reward: true, .. })
    }
}

/// A history `(ε, a_1, s_2, a_2, …)`.
///
/// Always opens with the empty percept, so `len()` counts it: a single
/// M-action epoch has length 2M + 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    entries: Vec<Entry>,
}

impl Default for History {
    fn default() -> Self {
        Self::new()
    }
}

impl History {
    /// The history holding only the opening ε percept.
    pub fn new() -> Self {
        Self {
            entries: vec![Entry::Percept {
                label: Arc::from(EMPTY),
                reward: false,
            }],
        }
    }

    /// Builds a history from entries that follow the opening ε.
    pub fn from_entries<I: IntoIterator<Item = Entry>>(tail: I) -> Result<Self> {
        let mut h = Self::new();
        for e in tail {
            h.push(e)?;
        }
        Ok(h)
    }

    /// Appends an entry, rejecting a repeated role.
    pub fn push(&mut self, entry: Entry) -> Result<()> {
        let last = self.entries.last().expect("history is never empty");
        if last.is_percept() == entry.is_percept() {
            return Err(Error::AlternationViolation {
                index: self.entries.len(),
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn push_action(&mut self, label: Arc<str>) -> Result<()> {
        self.push(Entry::Action { label })
    }

    pub fn push_percept(&mut self, label: Arc<str>, reward: bool) -> Result<()> {
        self.push(Entry::Percept { label, reward })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when only the opening ε is present.
    pub fn is_empty(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn rewards(&self) -> usize {
        self.entries.iter().filter(|e| e.reward()).count()
    }

    /// Action labels in order.
    pub fn actions(&self) -> impl Iterator<Item = &Arc<str>> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Action { label } => Some(label),
            _ => None,
        })
    }

    /// Percepts after the opening ε, in order.
    pub fn percepts(&self) -> impl Iterator<Item = (&Arc<str>, bool)> {
        self.entries.iter().skip(1).filter_map(|e| match e {
            Entry::Percept { label, reward } => Some((label, *reward)),
            _ => None,
        })
    }

    /// Checks every label against the agreed spaces.
    pub fn validate(&self, spaces: &Spaces) -> Result<()> {
        for e in &self.entries {
            match e {
                Entry::Percept { label, .. } => {
                    spaces.percepts.index_of(label)?;
                }
                Entry::Action { label } => {
                    spaces.actions.index_of(label)?;
                }
            }
        }
        Ok(())
    }

    /// String-wise concatenation `self ∘ other`, dropping `other`'s opening ε.
    pub fn concat(&self, other: &History) -> Result<History> {
        let mut out = self.clone();
        out.entries.reserve(other.len() - 1);
        for e in other.entries.iter().skip(1) {
            out.push(e.clone())?;
        }
        Ok(out)
    }

    /// `self` concatenated with itself `copies` times.
    pub fn repeat(&self, copies: usize) -> Result<History> {
        let mut out = History::new();
        for _ in 0..copies {
            out = out.concat(self)?;
        }
        Ok(out)
    }

    /// Writes one JSON object per entry.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, e) in self.entries.iter().enumerate() {
            let line = match e {
                Entry::Percept { label, reward } => JsonEntry {
                    t,
                    role: Role::Percept,
                    label: label.to_string(),
                    reward: Some(u8::from(*reward)),
                },
                Entry::Action { label } => JsonEntry {
                    t,
                    role: Role::Action,
                    label: label.to_string(),
                    reward: None,
                },
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`History::write_jsonl`].
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<History> {
        let mut entries = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let j: JsonEntry = serde_json::from_str(&line)?;
            if j.t != entries.len() {
                return Err(Error::Config(format!("entry index {} out of order", j.t)));
            }
            entries.push(match j.role {
                Role::Percept => Entry::Percept {
                    label: Arc::from(j.label.as_str()),
                    reward: j.reward.unwrap_or(0) == 1,
                },
                Role::Action => Entry::Action {
                    label: Arc::from(j.label.as_str()),
                },
            });
        }
        match entries.first() {
            Some(Entry::Percept { label, .. }) if &**label == EMPTY => {}
            _ => return Err(Error::AlternationViolation { index: 0 }),
        }
        History::from_entries(entries.into_iter().skip(1))
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Role {
    Percept,
    Action,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    t: usize,
    role: Role,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    reward: Option<u8>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// One M-step epoch on binary actions, rewarded on the final percept.
    pub(crate) fn epoch(m: usize, win: bool) -> History {
        let mut h = History::new();
        for i in 0..m {
            h.push_action(Arc::from("0")).unwrap();
            h.push_percept(Arc::from(format!("v{}", i + 1)), win && i + 1 == m)
                .unwrap();
        }
        h
    }

    #[test]
    fn opens_with_empty_percept() {
        let h = History::new();
        assert_eq!(h.len(), 1);
        assert!(h.is_empty());
        assert_eq!(&**h.entries()[0].label(), EMPTY);
    }

    #[test]
    fn alternation_is_enforced() {
        let mut h = History::new();
        let err = h.push_percept(Arc::from("x"), false).unwrap_err();
        assert_eq!(err, Error::AlternationViolation { index: 1 });
        h.push_action(Arc::from("0")).unwrap();
        assert!(h.push_action(Arc::from("0")).is_err());
    }

    #[test]
    fn concat_with_empty_is_identity() {
        let h = epoch(3, true);
        assert_eq!(h.concat(&History::new()).unwrap(), h);
    }

    #[test]
    fn concat_lengths() {
        let m = 5;
        let w = epoch(m, true);
        assert_eq!(w.len(), 2 * m + 1);
        assert_eq!(w.concat(&w).unwrap().len(), 4 * m + 1);
        // M=2, n=2, k=1: 1 + 1*ceil(sqrt(4)) = 3 copies of a 5-entry epoch.
        let tot = epoch(2, true).repeat(3).unwrap();
        assert_eq!(tot.len(), 13);
    }

    #[test]
    fn jsonl_round_trip() {
        let h = epoch(3, true);
        let mut buf = Vec::new();
        h.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"t":0,"role":"percept","label":"ε","reward":0}"#));
        assert!(text.contains(r#"{"t":1,"role":"action","label":"0"}"#));
        let back = History::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, h);
    }
}
