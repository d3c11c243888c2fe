//! Symbolic estimand expressions and their exact evaluation.
//!
//! An [`Estimand`] is a tree over opaque input distributions `Q0, Q1, …`
//! (the [`Estimand::Given`] leaves, indexing into a caller-supplied list of
//! [`DistTable`]s) combined by marginalization, products, and quotients.
//! The identification algorithms emit these trees; [`Estimand::evaluate`]
//! computes their exact rational value at a concrete realization.
//!
//! There is no algebraic simplifier: expressions evaluate as-is, and
//! [`Estimand::render`] prints them deterministically. Quotients produced by
//! the telescoping factorization of an observational input carry an optional
//! conditional-probability [`CondHint`] that only affects rendering.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VarId, VarSet};
use crate::rational::Rat;
use crate::table::DistTable;

/// Rendering hint for a quotient that is a conditional probability of an
/// observational input: `P(target | given)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondHint {
    /// Conditioned variables, in rendering order.
    pub target: Vec<VarId>,
    /// Conditioning variables, in rendering order.
    pub given: Vec<VarId>,
}

/// A symbolic expression over given distributions.
///
/// Build values through the smart constructors ([`Estimand::given`],
/// [`Estimand::marginal`], [`Estimand::product`], [`Estimand::quotient`]),
/// which enforce the scope invariants and normalize away empty
/// marginalizations and one-child products.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EstimandWire", into = "EstimandWire")]
pub enum Estimand {
    /// The `index`-th given distribution, a table over `scope`.
    Given { index: usize, scope: VarSet },
    /// Sum of `child` over all realizations of `over`.
    Marginal { child: Box<Estimand>, over: VarSet },
    /// Product of the children.
    Product { children: Vec<Estimand> },
    /// `numerator / denominator`, with an optional conditional-probability
    /// rendering hint.
    Quotient {
        numerator: Box<Estimand>,
        denominator: Box<Estimand>,
        cond: Option<CondHint>,
    },
}

impl Estimand {
    /// Leaf referring to the `index`-th given distribution over `scope`.
    pub fn given(index: usize, scope: VarSet) -> Estimand {
        Estimand::Given { index, scope }
    }

    /// Sum `child` over `over`. Requires `over ⊆ child.scope()`; an empty
    /// `over` returns `child` unchanged.
    pub fn marginal(child: Estimand, over: VarSet) -> Result<Estimand> {
        if over.is_empty() {
            return Ok(child);
        }
        if !over.is_subset(&child.scope()) {
            return Err(Error::ScopeMismatch(
                "cannot marginalize over variables outside the child scope".into(),
            ));
        }
        Ok(Estimand::Marginal {
            child: Box::new(child),
            over,
        })
    }

    /// Product of `children`. Requires at least one child; a single child is
    /// returned unchanged.
    pub fn product(mut children: Vec<Estimand>) -> Result<Estimand> {
        match children.len() {
            0 => Err(Error::InvalidArgument("empty product".into())),
            1 => Ok(children.pop().expect("len checked")),
            _ => Ok(Estimand::Product { children }),
        }
    }

    /// `numerator / denominator`. Requires
    /// `denominator.scope() ⊆ numerator.scope()`.
    pub fn quotient(
        numerator: Estimand,
        denominator: Estimand,
        cond: Option<CondHint>,
    ) -> Result<Estimand> {
        if !denominator.scope().is_subset(&numerator.scope()) {
            return Err(Error::ScopeMismatch(
                "denominator scope exceeds numerator scope".into(),
            ));
        }
        Ok(Estimand::Quotient {
            numerator: Box::new(numerator),
            denominator: Box::new(denominator),
            cond,
        })
    }

    /// Free variables the expression depends on.
    pub fn scope(&self) -> VarSet {
        match self {
            Estimand::Given { scope, .. } => scope.clone(),
            Estimand::Marginal { child, over } => {
                child.scope().difference(over).cloned().collect()
            }
            Estimand::Product { children } => children
                .iter()
                .flat_map(|c| c.scope().into_iter())
                .collect(),
            Estimand::Quotient { numerator, .. } => numerator.scope(),
        }
    }

    /// Largest `Given` index referenced, if any leaf exists.
    pub fn max_given_index(&self) -> Option<usize> {
        match self {
            Estimand::Given { index, .. } => Some(*index),
            Estimand::Marginal { child, .. } => child.max_given_index(),
            Estimand::Product { children } => {
                children.iter().filter_map(|c| c.max_given_index()).max()
            }
            Estimand::Quotient {
                numerator,
                denominator,
                ..
            } => numerator
                .max_given_index()
                .into_iter()
                .chain(denominator.max_given_index())
                .max(),
        }
    }

    /// Exact value of the expression at `at`, reading the `Given(i)` leaves
    /// from `given[i]`.
    ///
    /// `at` must bind every variable in [`scope`](Self::scope); extra
    /// bindings are ignored and never read. Errors: a zero denominator is
    /// [`Error::NonPositiveInput`]; a missing binding or a table/leaf scope
    /// disagreement is [`Error::ScopeMismatch`]; an out-of-range value is
    /// [`Error::InvalidRealization`].
    pub fn evaluate(
        &self,
        given: &[DistTable],
        at: &BTreeMap<VarId, usize>,
    ) -> Result<Rat> {
        // Shared variables must have one cardinality across all tables, or
        // marginal bounds would be ambiguous.
        for (i, a) in given.iter().enumerate() {
            for b in given.iter().skip(i + 1) {
                for name in a.scope() {
                    if let Some(cb) = b.card_of(name) {
                        if cb != a.card_of(name).expect("own scope") {
                            return Err(Error::ScopeMismatch(format!(
                                "tables disagree on the cardinality of `{name}`"
                            )));
                        }
                    }
                }
            }
        }
        let mut work = at.clone();
        self.eval_inner(given, &mut work)
    }

    fn eval_inner(
        &self,
        given: &[DistTable],
        at: &mut BTreeMap<VarId, usize>,
    ) -> Result<Rat> {
        match self {
            Estimand::Given { index, scope } => {
                let table = given.get(*index).ok_or_else(|| {
                    Error::ScopeMismatch(format!("no table supplied for Q{index}"))
                })?;
                let table_scope: VarSet = table.scope().iter().cloned().collect();
                if table_scope != *scope {
                    return Err(Error::ScopeMismatch(format!(
                        "table for Q{index} has scope {table_scope:?}, leaf expects {scope:?}"
                    )));
                }
                table.get(at).cloned()
            }
            Estimand::Marginal { child, over } => {
                let vars: Vec<&VarId> = over.iter().collect();
                let mut cards = Vec::with_capacity(vars.len());
                for v in &vars {
                    let card = given
                        .iter()
                        .find_map(|t| t.card_of(v))
                        .ok_or_else(|| {
                            Error::ScopeMismatch(format!(
                                "no table defines the cardinality of `{v}`"
                            ))
                        })?;
                    cards.push(card);
                }
                let saved: Vec<Option<usize>> =
                    vars.iter().map(|v| at.get(*v).copied()).collect();
                let count = cards.iter().try_fold(1usize, |acc, c| {
                    acc.checked_mul(*c)
                }).ok_or(Error::TooLarge {
                    states: u64::MAX,
                    limit: usize::MAX as u64,
                })?;
                let mut total = Rat::zero();
                let mut codes = vec![0usize; vars.len()];
                for flat in 0..count {
                    let mut rem = flat;
                    for k in (0..vars.len()).rev() {
                        codes[k] = rem % cards[k];
                        rem /= cards[k];
                    }
                    for (v, c) in vars.iter().zip(&codes) {
                        at.insert((*v).clone(), *c);
                    }
                    total += child.eval_inner(given, at)?;
                }
                for (v, old) in vars.iter().zip(saved) {
                    match old {
                        Some(x) => at.insert((*v).clone(), x),
                        None => at.remove(*v),
                    };
                }
                Ok(total)
            }
            Estimand::Product { children } => {
                let mut total = Rat::one();
                for c in children {
                    total *= c.eval_inner(given, at)?;
                }
                Ok(total)
            }
            Estimand::Quotient {
                numerator,
                denominator,
                ..
            } => {
                let den = denominator.eval_inner(given, at)?;
                if den.is_zero() {
                    let binding: Vec<String> = denominator
                        .scope()
                        .iter()
                        .map(|v| match at.get(v) {
                            Some(x) => format!("{v}={x}"),
                            None => format!("{v}=?"),
                        })
                        .collect();
                    return Err(Error::NonPositiveInput(format!(
                        "denominator evaluates to 0 at {{{}}}",
                        binding.join(", ")
                    )));
                }
                Ok(numerator.eval_inner(given, at)? / den)
            }
        }
    }

    /// Deterministic human-readable form, e.g.
    /// `sum_{Y1} ( Q0 / sum_{Y1,Y2} Q0 )`, using `P(a|b,c)` sugar for
    /// quotients that carry a [`CondHint`].
    pub fn render(&self) -> String {
        match self {
            Estimand::Given { index, .. } => format!("Q{index}"),
            Estimand::Marginal { child, over } => {
                let vars: Vec<String> = over.iter().cloned().collect();
                format!("sum_{{{}}} {}", vars.join(","), child.render_operand())
            }
            Estimand::Product { children } => children
                .iter()
                .map(|c| c.render_operand())
                .collect::<Vec<_>>()
                .join(" * "),
            Estimand::Quotient {
                numerator,
                denominator,
                cond,
            } => match cond {
                Some(hint) => {
                    let t: Vec<String> =
                        hint.target.iter().map(|v| v.to_lowercase()).collect();
                    if hint.given.is_empty() {
                        format!("P({})", t.join(","))
                    } else {
                        let g: Vec<String> =
                            hint.given.iter().map(|v| v.to_lowercase()).collect();
                        format!("P({}|{})", t.join(","), g.join(","))
                    }
                }
                None => format!(
                    "{} / {}",
                    numerator.render_operand(),
                    denominator.render_operand()
                ),
            },
        }
    }

    /// Render with parentheses when the node would otherwise be ambiguous as
    /// an operand (`Marginal` self-delimits; `Given` and sugared quotients
    /// are atomic).
    fn render_operand(&self) -> String {
        let atomic = matches!(
            self,
            Estimand::Given { .. }
                | Estimand::Marginal { .. }
                | Estimand::Quotient { cond: Some(_), .. }
        );
        if atomic {
            self.render()
        } else {
            format!("( {} )", self.render())
        }
    }
}

/// JSON wire form with node kinds as tagged objects.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EstimandWire {
    Given {
        index: usize,
        scope: Vec<String>,
    },
    Marginal {
        child: Box<EstimandWire>,
        over: Vec<String>,
    },
    Product {
        children: Vec<EstimandWire>,
    },
    Quotient {
        numerator: Box<EstimandWire>,
        denominator: Box<EstimandWire>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cond: Option<CondHint>,
    },
}

impl TryFrom<EstimandWire> for Estimand {
    type Error = Error;
    fn try_from(w: EstimandWire) -> Result<Self> {
        match w {
            EstimandWire::Given { index, scope } => {
                Ok(Estimand::given(index, scope.into_iter().collect()))
            }
            EstimandWire::Marginal { child, over } => Estimand::marginal(
                (*child).try_into()?,
                over.into_iter().collect(),
            ),
            EstimandWire::Product { children } => Estimand::product(
                children
                    .into_iter()
                    .map(TryInto::try_into)
                    .collect::<Result<Vec<_>>>()?,
            ),
            EstimandWire::Quotient {
                numerator,
                denominator,
                cond,
            } => Estimand::quotient((*numerator).try_into()?, (*denominator).try_into()?, cond),
        }
    }
}

impl From<Estimand> for EstimandWire {
    fn from(e: Estimand) -> Self {
        match e {
            Estimand::Given { index, scope } => EstimandWire::Given {
                index,
                scope: scope.into_iter().collect(),
            },
            Estimand::Marginal { child, over } => EstimandWire::Marginal {
                child: Box::new((*child).into()),
                over: over.into_iter().collect(),
            },
            Estimand::Product { children } => EstimandWire::Product {
                children: children.into_iter().map(Into::into).collect(),
            },
            Estimand::Quotient {
                numerator,
                denominator,
                cond,
            } => EstimandWire::Quotient {
                numerator: Box::new((*numerator).into()),
                denominator: Box::new((*denominator).into()),
                cond,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::varset;
    use crate::rational::rat;

    fn table_ab() -> DistTable {
        // P(A,B) over 2x2: 1/8, 1/8, 1/4, 1/2.
        let mut t = DistTable::zeros(vec![("A".into(), 2), ("B".into(), 2)]).unwrap();
        t.set(&[0, 0], rat(1, 8)).unwrap();
        t.set(&[0, 1], rat(1, 8)).unwrap();
        t.set(&[1, 0], rat(1, 4)).unwrap();
        t.set(&[1, 1], rat(1, 2)).unwrap();
        t
    }

    fn at(pairs: &[(&str, usize)]) -> BTreeMap<VarId, usize> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn given_leaf_is_identity() {
        let e = Estimand::given(0, varset(["A", "B"]));
        let v = e.evaluate(&[table_ab()], &at(&[("A", 1), ("B", 0)])).unwrap();
        assert_eq!(v, rat(1, 4));
    }

    #[test]
    fn marginal_sums_and_restores_bindings() {
        let leaf = Estimand::given(0, varset(["A", "B"]));
        let e = Estimand::marginal(leaf, varset(["B"])).unwrap();
        assert_eq!(e.scope(), varset(["A"]));
        let v = e.evaluate(&[table_ab()], &at(&[("A", 0)])).unwrap();
        assert_eq!(v, rat(1, 4));
        // An outer binding for B is overridden during the sum but not leaked.
        let v = e.evaluate(&[table_ab()], &at(&[("A", 1), ("B", 0)])).unwrap();
        assert_eq!(v, rat(3, 4));
    }

    #[test]
    fn marginal_distributes() {
        let leaf = Estimand::given(0, varset(["A", "B"]));
        let marg = Estimand::marginal(leaf.clone(), varset(["A"])).unwrap();
        let tables = [table_ab()];
        let direct = marg.evaluate(&tables, &at(&[("B", 1)])).unwrap();
        let by_hand = leaf.evaluate(&tables, &at(&[("A", 0), ("B", 1)])).unwrap()
            + leaf.evaluate(&tables, &at(&[("A", 1), ("B", 1)])).unwrap();
        assert_eq!(direct, by_hand);
    }

    #[test]
    fn quotient_is_a_conditional() {
        let leaf = Estimand::given(0, varset(["A", "B"]));
        let den = Estimand::marginal(leaf.clone(), varset(["B"])).unwrap();
        let e = Estimand::quotient(leaf, den, None).unwrap();
        // P(B=1 | A=1) = (1/2) / (3/4) = 2/3.
        let v = e.evaluate(&[table_ab()], &at(&[("A", 1), ("B", 1)])).unwrap();
        assert_eq!(v, rat(2, 3));
    }

    #[test]
    fn zero_denominator_is_reported() {
        let mut t = DistTable::zeros(vec![("A".into(), 2)]).unwrap();
        t.set(&[1], rat(1, 1)).unwrap();
        let num = Estimand::given(0, varset(["A"]));
        let e = Estimand::quotient(num.clone(), num, None).unwrap();
        let err = e.evaluate(&[t], &at(&[("A", 0)])).unwrap_err();
        match err {
            Error::NonPositiveInput(msg) => assert!(msg.contains("A=0"), "{msg}"),
            other => panic!("expected NonPositiveInput, got {other:?}"),
        }
    }

    #[test]
    fn missing_binding_is_scope_mismatch() {
        let e = Estimand::given(0, varset(["A", "B"]));
        assert!(matches!(
            e.evaluate(&[table_ab()], &at(&[("A", 0)])),
            Err(Error::ScopeMismatch(_))
        ));
    }

    #[test]
    fn poisoned_extra_bindings_are_never_read() {
        let leaf = Estimand::given(0, varset(["A", "B"]));
        let e = Estimand::marginal(leaf, varset(["B"])).unwrap();
        // Z is out of scope and bound to garbage; evaluation must ignore it.
        let v = e
            .evaluate(&[table_ab()], &at(&[("A", 0), ("Z", usize::MAX)]))
            .unwrap();
        assert_eq!(v, rat(1, 4));
    }

    #[test]
    fn constructors_enforce_scopes() {
        let leaf = Estimand::given(0, varset(["A"]));
        assert!(Estimand::marginal(leaf.clone(), varset(["B"])).is_err());
        assert!(Estimand::product(vec![]).is_err());
        // Singleton product collapses.
        assert_eq!(Estimand::product(vec![leaf.clone()]).unwrap(), leaf);
        // Empty marginal collapses.
        assert_eq!(
            Estimand::marginal(leaf.clone(), VarSet::new()).unwrap(),
            leaf
        );
        let big = Estimand::given(0, varset(["A", "B"]));
        assert!(Estimand::quotient(leaf, big, None).is_err());
    }

    #[test]
    fn render_goldens() {
        let q0 = Estimand::given(0, varset(["Y1", "Y2"]));
        assert_eq!(q0.render(), "Q0");

        let den = Estimand::marginal(q0.clone(), varset(["Y1", "Y2"])).unwrap();
        let quot = Estimand::quotient(q0.clone(), den, None).unwrap();
        let e = Estimand::Marginal {
            child: Box::new(quot),
            over: varset(["Y1"]),
        };
        assert_eq!(e.render(), "sum_{Y1} ( Q0 / sum_{Y1,Y2} Q0 )");
        assert_eq!(e.render(), e.render());

        let sugar = Estimand::quotient(
            q0.clone(),
            Estimand::marginal(q0, varset(["Y2"])).unwrap(),
            Some(CondHint {
                target: vec!["Y2".into()],
                given: vec!["Y1".into(), "X1".into()],
            }),
        )
        .unwrap();
        assert_eq!(sugar.render(), "P(y2|y1,x1)");
    }

    #[test]
    fn json_round_trip() {
        let q0 = Estimand::given(0, varset(["A", "B"]));
        let den = Estimand::marginal(q0.clone(), varset(["B"])).unwrap();
        let e = Estimand::quotient(
            q0,
            den,
            Some(CondHint {
                target: vec!["B".into()],
                given: vec!["A".into()],
            }),
        )
        .unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"kind\":\"quotient\""));
        let back: Estimand = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);

        // Invalid scopes are rejected at deserialization time.
        let bad = r#"{"kind":"marginal","over":["Z"],"child":{"kind":"given","index":0,"scope":["A"]}}"#;
        assert!(serde_json::from_str::<Estimand>(bad).is_err());
    }
}
