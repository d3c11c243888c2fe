//! Dense tables of exact rationals indexed by variable realizations.
//!
//! A [`DistTable`] stores one rational per joint realization of its scope
//! (a sorted list of variable names with finite cardinalities). Values are
//! laid out row-major in scope order with the last variable varying fastest.
//! Tables are how observational and interventional distributions enter and
//! leave the library.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VarId;
use crate::rational::{format_rat, parse_rat, Rat};

/// A dense map from realizations of a variable scope to exact rationals.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableWire", into = "TableWire")]
pub struct DistTable {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<Rat>,
}

/// JSON wire form: `{"scope": [...], "cards": [...], "entries":
/// [[[0,0],"1/3"], ...]}` with entries in row-major order.
#[derive(Serialize, Deserialize)]
struct TableWire {
    scope: Vec<String>,
    cards: Vec<usize>,
    entries: Vec<(Vec<usize>, String)>,
}

impl TryFrom<TableWire> for DistTable {
    type Error = Error;
    fn try_from(w: TableWire) -> Result<Self> {
        let mut t = DistTable::zeros(
            w.scope
                .iter()
                .cloned()
                .zip(w.cards.iter().copied())
                .collect(),
        )?;
        if w.entries.len() != t.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} table entries, got {}",
                t.len(),
                w.entries.len()
            )));
        }
        for (expected_idx, (codes, value)) in w.entries.iter().enumerate() {
            let idx = t.index_of(codes)?;
            if idx != expected_idx {
                return Err(Error::InvalidArgument(
                    "table entries are not in row-major order".into(),
                ));
            }
            t.values[idx] = parse_rat(value)?;
        }
        Ok(t)
    }
}

impl From<DistTable> for TableWire {
    fn from(t: DistTable) -> Self {
        let entries = (0..t.len())
            .map(|i| (t.decode(i), format_rat(&t.values[i])))
            .collect();
        TableWire {
            scope: t.scope,
            cards: t.cards,
            entries,
        }
    }
}

impl std::fmt::Debug for DistTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DistTable{{scope: {:?}, cards: {:?}, [", self.scope, self.cards)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rat(v))?;
        }
        write!(f, "]}}")
    }
}

impl DistTable {
    /// An all-zero table over `scope`, given as `(name, cardinality)` pairs
    /// in strictly increasing name order. Cardinalities must be positive and
    /// the total size must fit in memory (`usize`).
    pub fn zeros(scope: Vec<(VarId, usize)>) -> Result<Self> {
        for pair in scope.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(Error::InvalidArgument(
                    "table scope must be strictly increasing".into(),
                ));
            }
        }
        let mut size: usize = 1;
        for (name, card) in &scope {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty variable name".into()));
            }
            if *card == 0 {
                return Err(Error::InvalidArgument(format!(
                    "zero cardinality for `{name}`"
                )));
            }
            size = size.checked_mul(*card).ok_or_else(|| Error::TooLarge {
                states: u64::MAX,
                limit: usize::MAX as u64,
            })?;
        }
        let (scope, cards) = scope.into_iter().unzip();
        Ok(DistTable {
            scope,
            cards,
            values: vec![Rat::zero(); size],
        })
    }

    /// Build a table from row-major values; the length must match the shape
    /// of the scope.
    pub fn from_raw(scope: Vec<(VarId, usize)>, values: Vec<Rat>) -> Result<Self> {
        let mut t = Self::zeros(scope)?;
        if values.len() != t.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for the table shape, got {}",
                t.len(),
                values.len()
            )));
        }
        t.values = values;
        Ok(t)
    }

    /// Build a table by evaluating `f` on every realization, row-major.
    pub fn from_fn(
        scope: Vec<(VarId, usize)>,
        mut f: impl FnMut(&[usize]) -> Rat,
    ) -> Result<Self> {
        let mut t = Self::zeros(scope)?;
        for i in 0..t.len() {
            let codes = t.decode(i);
            t.values[i] = f(&codes);
        }
        Ok(t)
    }

    /// Variable names, strictly increasing.
    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    /// Cardinalities, parallel to [`scope`](Self::scope).
    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Cardinality of `name`, if it is in scope.
    pub fn card_of(&self, name: &str) -> Option<usize> {
        self.scope
            .iter()
            .position(|v| v == name)
            .map(|i| self.cards[i])
    }

    /// Number of entries (product of cardinalities).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True iff the scope is empty (a single scalar entry remains).
    pub fn is_empty(&self) -> bool {
        self.scope.is_empty()
    }

    /// Row-major index of a full realization given as per-variable codes in
    /// scope order.
    pub fn index_of(&self, codes: &[usize]) -> Result<usize> {
        if codes.len() != self.cards.len() {
            return Err(Error::InvalidRealization(format!(
                "expected {} codes, got {}",
                self.cards.len(),
                codes.len()
            )));
        }
        let mut idx = 0usize;
        for (k, (&code, &card)) in codes.iter().zip(&self.cards).enumerate() {
            if code >= card {
                return Err(Error::InvalidRealization(format!(
                    "value {code} out of range for `{}` (cardinality {card})",
                    self.scope[k]
                )));
            }
            idx = idx * card + code;
        }
        Ok(idx)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut codes = vec![0usize; self.cards.len()];
        for k in (0..self.cards.len()).rev() {
            codes[k] = idx % self.cards[k];
            idx /= self.cards[k];
        }
        codes
    }

    /// Value at a realization given as codes in scope order.
    pub fn value_at(&self, codes: &[usize]) -> Result<&Rat> {
        Ok(&self.values[self.index_of(codes)?])
    }

    /// Overwrite the value at a realization.
    pub fn set(&mut self, codes: &[usize], value: Rat) -> Result<()> {
        let idx = self.index_of(codes)?;
        self.values[idx] = value;
        Ok(())
    }

    /// Value at a realization given as a name → code map. The map may bind
    /// extra variables (ignored); a missing scope variable is a
    /// [`Error::ScopeMismatch`], an out-of-range code an
    /// [`Error::InvalidRealization`].
    pub fn get(&self, at: &BTreeMap<VarId, usize>) -> Result<&Rat> {
        let mut codes = Vec::with_capacity(self.scope.len());
        for name in &self.scope {
            let code = at.get(name).ok_or_else(|| {
                Error::ScopeMismatch(format!("realization does not bind `{name}`"))
            })?;
            codes.push(*code);
        }
        self.value_at(&codes)
    }

    /// Sum of all entries.
    pub fn sum(&self) -> Rat {
        self.values.iter().sum()
    }

    /// Iterate over `(codes, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &Rat)> + '_ {
        (0..self.len()).map(move |i| (self.decode(i), &self.values[i]))
    }

    /// Raw values in row-major order.
    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// True iff every entry is strictly positive.
    pub fn all_positive(&self) -> bool {
        self.values.iter().all(|v| *v > Rat::zero())
    }
}
