//! Ambient structures: integer lattices, free semigroups and free groups.
//!
//! Elements are immutable values in canonical form, so structural equality is
//! group equality. Ordering is lexicographic on the canonical form, which gives
//! every measure a deterministic iteration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator label.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// A free-group letter: a generator or its formal inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub sym: Sym,
    pub inverse: bool,
}

impl Letter {
    pub fn new(sym: Sym, inverse: bool) -> Self {
        Letter { sym, inverse }
    }

    fn cancels(&self, other: &Letter) -> bool {
        self.sym == other.sym && self.inverse != other.inverse
    }

    fn inverted(&self) -> Letter {
        Letter::new(self.sym.clone(), !self.inverse)
    }
}

/// Word over generator labels; the empty word is the identity `e`.
pub type Word = Vec<Sym>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    /// Point of `Z^d`.
    Lattice(Vec<i64>),
    /// Element of a free semigroup.
    Word(Word),
    /// Reduced word of a free group.
    Reduced(Vec<Letter>),
}

impl GroupElement {
    pub fn word(letters: &[&str]) -> Self {
        GroupElement::Word(letters.iter().map(|s| sym(s)).collect())
    }

    pub fn lattice(coords: &[i64]) -> Self {
        GroupElement::Lattice(coords.to_vec())
    }

    /// Identity of the family this element belongs to.
    pub fn identity_like(&self) -> GroupElement {
        match self {
            GroupElement::Lattice(v) => GroupElement::Lattice(vec![0; v.len()]),
            GroupElement::Word(_) => GroupElement::Word(Vec::new()),
            GroupElement::Reduced(_) => GroupElement::Reduced(Vec::new()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Lattice(v) => v.iter().all(|&c| c == 0),
            GroupElement::Word(w) => w.is_empty(),
            GroupElement::Reduced(w) => w.is_empty(),
        }
    }

    /// Word length for words; L1 norm for lattice points.
    pub fn length(&self) -> u64 {
        match self {
            GroupElement::Lattice(v) => v.iter().map(|c| c.unsigned_abs()).sum(),
            GroupElement::Word(w) => w.len() as u64,
            GroupElement::Reduced(w) => w.len() as u64,
        }
    }

    /// Group law. Free-group products are reduced eagerly.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                if a.len() != b.len() {
                    return Err(Error::Mismatch(format!(
                        "lattice dimensions {} and {}",
                        a.len(),
                        b.len()
                    )));
                }
                Ok(GroupElement::Lattice(
                    a.iter().zip(b).map(|(x, y)| x + y).collect(),
                ))
            }
            (GroupElement::Word(a), GroupElement::Word(b)) => {
                let mut w = Vec::with_capacity(a.len() + b.len());
                w.extend(a.iter().cloned());
                w.extend(b.iter().cloned());
                Ok(GroupElement::Word(w))
            }
            (GroupElement::Reduced(a), GroupElement::Reduced(b)) => {
                let mut w = a.clone();
                for l in b {
                    match w.last() {
                        Some(last) if last.cancels(l) => {
                            w.pop();
                        }
                        _ => w.push(l.clone()),
                    }
                }
                Ok(GroupElement::Reduced(w))
            }
            (a, b) => Err(Error::Mismatch(format!(
                "cannot compose {} with {}",
                a.family(),
                b.family()
            ))),
        }
    }

    /// Group inverse; in a free semigroup only `e` is invertible.
    pub fn inverse(&self) -> Option<GroupElement> {
        match self {
            GroupElement::Lattice(v) => Some(GroupElement::Lattice(v.iter().map(|c| -c).collect())),
            GroupElement::Word(w) if w.is_empty() => Some(self.clone()),
            GroupElement::Word(_) => None,
            GroupElement::Reduced(w) => Some(GroupElement::Reduced(
                w.iter().rev().map(Letter::inverted).collect(),
            )),
        }
    }

    /// `x^{-1} y`; for free semigroups this exists only when `x <= y`.
    pub fn left_quotient(&self, y: &GroupElement) -> Result<Option<GroupElement>> {
        match (self, y) {
            (GroupElement::Word(x), GroupElement::Word(y)) => Ok(word_quotient(x, y)),
            _ => match self.inverse() {
                Some(inv) => inv.compose(y).map(Some),
                None => Ok(None),
            },
        }
    }

    fn family(&self) -> &'static str {
        match self {
            GroupElement::Lattice(_) => "lattice point",
            GroupElement::Word(_) => "free-semigroup word",
            GroupElement::Reduced(_) => "free-group word",
        }
    }

    /// Lower bound on the number of unit-length moves needed to go from
    /// `self` to `to` by right multiplication; `None` when unreachable.
    pub fn distance_to(&self, to: &GroupElement) -> Option<u64> {
        match (self, to) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                Some(a.iter().zip(b).map(|(x, y)| (x - y).unsigned_abs()).sum())
            }
            (GroupElement::Word(a), GroupElement::Word(b)) => {
                prefix_leq(a, b).then(|| (b.len() - a.len()) as u64)
            }
            (GroupElement::Reduced(_), GroupElement::Reduced(_)) => {
                self.left_quotient(to).ok().flatten().map(|q| q.length())
            }
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&Word> {
        match self {
            GroupElement::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Word(w) => f.write_str(&format_word(w)),
            GroupElement::Reduced(w) => {
                if w.is_empty() {
                    return f.write_str("e");
                }
                let parts: Vec<String> = w
                    .iter()
                    .map(|l| {
                        if l.inverse {
                            format!("{}^-1", l.sym)
                        } else {
                            l.sym.to_string()
                        }
                    })
                    .collect();
                f.write_str(&parts.join("·"))
            }
        }
    }
}

pub fn format_word(w: &[Sym]) -> String {
    if w.is_empty() {
        "e".to_string()
    } else {
        w.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join("·")
    }
}

/// `x <= y`: `x` is a prefix of `y`.
pub fn prefix_leq(x: &[Sym], y: &[Sym]) -> bool {
    x.len() <= y.len() && x.iter().zip(y).all(|(a, b)| a == b)
}

/// The `h` with `y = x h`, when `x <= y`.
pub fn word_quotient(x: &[Sym], y: &[Sym]) -> Option<GroupElement> {
    prefix_leq(x, y).then(|| GroupElement::Word(y[x.len()..].to_vec()))
}

/// Generating set of a free semigroup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Generators {
    Finite(Vec<Sym>),
    /// Countably many labels `<prefix>_0, <prefix>_1, ...`, materialized lazily.
    Indexed {
        indexed: String,
    },
}

impl Generators {
    pub fn contains(&self, s: &str) -> bool {
        match self {
            Generators::Finite(v) => v.iter().any(|g| g.as_ref() == s),
            Generators::Indexed { indexed } => s
                .strip_prefix(indexed.as_str())
                .and_then(|r| r.strip_prefix('_'))
                .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Generators::Finite(_))
    }

    /// The `i`-th generator label.
    pub fn label(&self, i: usize) -> Option<Sym> {
        match self {
            Generators::Finite(v) => v.get(i).cloned(),
            Generators::Indexed { indexed } => Some(sym(&format!("{indexed}_{i}"))),
        }
    }
}

/// Which ambient structure the elements live in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupSpec {
    IntegerLattice { dim: usize },
    FreeSemigroup { generators: Generators },
    FreeGroup { generators: Vec<Sym> },
}

const RESERVED: &[char] = &['·', '.', '^', '(', ')', ',', ' ', '\t', '\n'];

impl GroupSpec {
    pub fn lattice(dim: usize) -> Self {
        GroupSpec::IntegerLattice { dim }
    }

    pub fn free_semigroup(labels: &[&str]) -> Self {
        GroupSpec::FreeSemigroup {
            generators: Generators::Finite(labels.iter().map(|s| sym(s)).collect()),
        }
    }

    pub fn free_group(labels: &[&str]) -> Self {
        GroupSpec::FreeGroup {
            generators: labels.iter().map(|s| sym(s)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_labels = |labels: &[Sym]| -> Result<()> {
            let mut seen = BTreeSet::new();
            for l in labels {
                if l.is_empty() || l.as_ref() == "e" || l.contains(RESERVED) {
                    return Err(Error::Parse(format!("invalid generator label `{l}`")));
                }
                if !seen.insert(l.clone()) {
                    return Err(Error::Parse(format!("duplicate generator label `{l}`")));
                }
            }
            Ok(())
        };
        match self {
            GroupSpec::IntegerLattice { dim } if *dim == 0 => {
                Err(Error::Parse("lattice dimension must be at least 1".into()))
            }
            GroupSpec::IntegerLattice { .. } => Ok(()),
            GroupSpec::FreeSemigroup {
                generators: Generators::Finite(v),
            } => check_labels(v),
            GroupSpec::FreeSemigroup {
                generators: Generators::Indexed { indexed },
            } => check_labels(&[sym(indexed)]),
            GroupSpec::FreeGroup { generators } => check_labels(generators),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::IntegerLattice { dim } => GroupElement::Lattice(vec![0; *dim]),
            GroupSpec::FreeSemigroup { .. } => GroupElement::Word(Vec::new()),
            GroupSpec::FreeGroup { .. } => GroupElement::Reduced(Vec::new()),
        }
    }

    /// Whether `g` is a canonical element of this structure.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (GroupSpec::IntegerLattice { dim }, GroupElement::Lattice(v)) => v.len() == *dim,
            (GroupSpec::FreeSemigroup { generators }, GroupElement::Word(w)) => {
                w.iter().all(|s| generators.contains(s))
            }
            (GroupSpec::FreeGroup { generators }, GroupElement::Reduced(w)) => {
                w.iter().all(|l| generators.contains(&l.sym))
                    && w.windows(2).all(|p| !p[0].cancels(&p[1]))
            }
            _ => false,
        }
    }

    /// Parses the text encoding: `(c1,...,cd)` for lattices, `·`-separated
    /// labels (or `e`) for words, `label^-1` for free-group inverses.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let t = text.trim();
        let bad = || Error::Parse(format!("cannot parse `{text}` as an element of {self:?}"));
        let g = match self {
            GroupSpec::IntegerLattice { dim } => {
                let inner = t
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(bad)?;
                let coords = inner
                    .split(',')
                    .map(|c| c.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                if coords.len() != *dim {
                    return Err(bad());
                }
                GroupElement::Lattice(coords)
            }
            GroupSpec::FreeSemigroup { .. } => {
                GroupElement::Word(split_labels(t).into_iter().map(sym).collect())
            }
            GroupSpec::FreeGroup { .. } => {
                let letters = split_labels(t)
                    .into_iter()
                    .map(|p| match p.strip_suffix("^-1") {
                        Some(s) => Letter::new(sym(s), true),
                        None => Letter::new(sym(p), false),
                    });
                // Reduce whatever the user typed.
                let mut w: Vec<Letter> = Vec::new();
                for l in letters {
                    match w.last() {
                        Some(last) if last.cancels(&l) => {
                            w.pop();
                        }
                        _ => w.push(l),
                    }
                }
                GroupElement::Reduced(w)
            }
        };
        if !self.contains(&g) {
            return Err(bad());
        }
        Ok(g)
    }

    /// Single-generator elements (for free structures) in label order.
    pub fn letter(&self, label: &str) -> Result<GroupElement> {
        self.parse_element(label)
    }
}

fn split_labels(t: &str) -> Vec<&str> {
    if t == "e" || t.is_empty() {
        return Vec::new();
    }
    t.split(['·', '.']).map(str::trim).collect()
}

/// Semigroup homomorphism from a free semigroup, given by letter images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    pub images: BTreeMap<Sym, GroupElement>,
    pub target_identity: GroupElement,
}

impl Homomorphism {
    pub fn new(images: BTreeMap<Sym, GroupElement>, target_identity: GroupElement) -> Self {
        Homomorphism {
            images,
            target_identity,
        }
    }

    /// Product of the letter images; `e` maps to the identity.
    pub fn evaluate(&self, w: &[Sym]) -> Result<GroupElement> {
        let mut acc = self.target_identity.clone();
        for l in w {
            let img = self
                .images
                .get(l)
                .ok_or_else(|| Error::UnassignedLetter(l.to_string()))?;
            acc = acc.compose(img)?;
        }
        Ok(acc)
    }

    pub fn evaluate_element(&self, g: &GroupElement) -> Result<GroupElement> {
        match g {
            GroupElement::Word(w) => self.evaluate(w),
            other => Err(Error::Mismatch(format!(
                "homomorphism source is a free semigroup, got {other}"
            ))),
        }
    }
}

/// Infinite word, given either as `prefix · period^∞` or as an explicit
/// finite prefix beyond which nothing is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InfiniteWord {
    Periodic { prefix: Vec<Sym>, period: Vec<Sym> },
    Explicit { known: Vec<Sym> },
}

impl InfiniteWord {
    pub fn periodic(prefix: &[&str], period: &[&str]) -> Self {
        InfiniteWord::Periodic {
            prefix: prefix.iter().map(|s| sym(s)).collect(),
            period: period.iter().map(|s| sym(s)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InfiniteWord::Periodic { period, .. } if period.is_empty() => {
                Err(Error::Parse("infinite word needs a nonempty period".into()))
            }
            _ => Ok(()),
        }
    }

    /// Letter at 0-based position `i`.
    pub fn letter(&self, i: usize) -> Result<Sym> {
        match self {
            InfiniteWord::Periodic { prefix, period } => {
                if i < prefix.len() {
                    Ok(prefix[i].clone())
                } else if period.is_empty() {
                    Err(Error::Parse("infinite word needs a nonempty period".into()))
                } else {
                    Ok(period[(i - prefix.len()) % period.len()].clone())
                }
            }
            InfiniteWord::Explicit { known } => known.get(i).cloned().ok_or(Error::Undecidable {
                needed: i + 1,
                available: known.len(),
            }),
        }
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        (0..n).map(|i| self.letter(i)).collect()
    }

    /// Whether the finite word `x` is an initial segment of this word.
    pub fn has_prefix(&self, x: &[Sym]) -> Result<bool> {
        for (i, l) in x.iter().enumerate() {
            if &self.letter(i)? != l {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for InfiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfiniteWord::Periodic { prefix, period } => {
                if !prefix.is_empty() {
                    write!(f, "{}·", format_word(prefix))?;
                }
                write!(f, "({})^∞", format_word(period))
            }
            InfiniteWord::Explicit { known } => write!(f, "{}…", format_word(known)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fg(s: &str) -> GroupElement {
        GroupSpec::free_group(&["a", "b"]).parse_element(s).unwrap()
    }

    #[test]
    fn compose_examples() {
        let z3 = GroupSpec::lattice(3);
        let e = z3.identity();
        let g = GroupElement::lattice(&[1, 0, 0]);
        assert_eq!(e.compose(&g).unwrap(), g);
        assert_eq!(
            g.compose(&GroupElement::lattice(&[0, -2, 0])).unwrap(),
            GroupElement::lattice(&[1, -2, 0])
        );
        let ba = GroupElement::word(&["b", "b", "a"]);
        let c = GroupElement::word(&["b"])
            .compose(&GroupElement::word(&["b", "a"]))
            .unwrap();
        assert_eq!(c, ba);
        assert_eq!(c.length(), 3);
    }

    #[test]
    fn compose_mismatch() {
        let err = GroupElement::lattice(&[1])
            .compose(&GroupElement::word(&["a"]))
            .unwrap_err();
        assert!(matches!(err, Error::Mismatch(_)));
        assert!(GroupElement::lattice(&[1])
            .compose(&GroupElement::lattice(&[1, 2]))
            .is_err());
    }

    #[test]
    fn free_group_reduces() {
        assert_eq!(fg("a·b").compose(&fg("b^-1·a^-1")).unwrap(), fg("e"));
        assert_eq!(fg("a·a^-1·b"), fg("b"));
        assert_eq!(fg("a·b^-1").to_string(), "a·b^-1");
    }

    #[test]
    fn prefix_examples() {
        let b = [sym("b")];
        let ba = [sym("b"), sym("a")];
        assert!(prefix_leq(&b, &ba));
        assert_eq!(word_quotient(&b, &ba), Some(GroupElement::word(&["a"])));
        assert!(!prefix_leq(&[sym("a")], &ba));
        assert!(prefix_leq(&[], &ba));
    }

    #[test]
    fn hom_examples() {
        let z = GroupSpec::lattice(1);
        let phi = Homomorphism::new(
            [
                (sym("A"), GroupElement::lattice(&[1])),
                (sym("B"), GroupElement::lattice(&[-1])),
            ]
            .into_iter()
            .collect(),
            z.identity(),
        );
        assert_eq!(phi.evaluate(&[]).unwrap(), z.identity());
        let w: Vec<Sym> = ["A", "B", "B"].iter().map(|s| sym(s)).collect();
        assert_eq!(phi.evaluate(&w).unwrap(), GroupElement::lattice(&[-1]));
        assert!(matches!(
            phi.evaluate(&[sym("C")]),
            Err(Error::UnassignedLetter(_))
        ));

        let g = fg("a");
        let same = Homomorphism::new(
            [(sym("A"), g.clone()), (sym("B"), g.clone())]
                .into_iter()
                .collect(),
            fg("e"),
        );
        let ab = same.evaluate(&[sym("A"), sym("B")]).unwrap();
        let ba = same.evaluate(&[sym("B"), sym("A")]).unwrap();
        assert_eq!(ab, fg("a·a"));
        assert_eq!(ab, ba);
    }

    #[test]
    fn text_encoding() {
        let z3 = GroupSpec::lattice(3);
        let g = z3.parse_element("(1,-2,0)").unwrap();
        assert_eq!(g.to_string(), "(1,-2,0)");
        assert!(z3.parse_element("(1,2)").is_err());
        let f = GroupSpec::free_semigroup(&["a", "b"]);
        assert_eq!(f.parse_element("e").unwrap(), GroupElement::word(&[]));
        assert_eq!(f.parse_element("b·a").unwrap().to_string(), "b·a");
        assert!(f.parse_element("c").is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(GroupSpec::lattice(0).validate().is_err());
        assert!(GroupSpec::free_semigroup(&["a", "a"]).validate().is_err());
        assert!(GroupSpec::free_semigroup(&["e"]).validate().is_err());
        assert!(GroupSpec::free_group(&["a", "b"]).validate().is_ok());
    }

    #[test]
    fn indexed_generators() {
        let spec = GroupSpec::FreeSemigroup {
            generators: Generators::Indexed {
                indexed: "g".into(),
            },
        };
        assert!(spec.parse_element("g_0·g_17").is_ok());
        assert!(spec.parse_element("g_x").is_err());
        assert!(spec.parse_element("h_1").is_err());
    }

    #[test]
    fn infinite_words() {
        let g = InfiniteWord::periodic(&[], &["a", "b"]);
        assert_eq!(g.prefix(3).unwrap(), vec![sym("a"), sym("b"), sym("a")]);
        assert!(g.has_prefix(&[sym("a"), sym("b")]).unwrap());
        assert!(!g.has_prefix(&[sym("b")]).unwrap());
        let short = InfiniteWord::Explicit {
            known: vec![sym("a")],
        };
        assert!(matches!(
            short.has_prefix(&[sym("a"), sym("b")]),
            Err(Error::Undecidable { needed: 2, .. })
        ));
    }

    fn lattice_elem() -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(-5i64..=5, 3).prop_map(GroupElement::Lattice)
    }

    fn semigroup_elem() -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..6)
            .prop_map(|v| GroupElement::word(&v))
    }

    fn free_group_elem() -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(prop::sample::select(vec!["a", "a^-1", "b", "b^-1"]), 0..8)
            .prop_map(|v| fg(&v.join("·")))
    }

    fn any_triple() -> impl Strategy<Value = (GroupElement, GroupElement, GroupElement)> {
        prop_oneof![
            (lattice_elem(), lattice_elem(), lattice_elem()),
            (semigroup_elem(), semigroup_elem(), semigroup_elem()),
            (free_group_elem(), free_group_elem(), free_group_elem()),
        ]
    }

    proptest! {
        #[test]
        fn associativity_and_identity((a, b, c) in any_triple()) {
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
            let e = a.identity_like();
            prop_assert_eq!(e.compose(&a).unwrap(), a.clone());
            prop_assert_eq!(a.compose(&e).unwrap(), a);
        }

        #[test]
        fn reduction_idempotent(g in free_group_elem()) {
            let spec = GroupSpec::free_group(&["a", "b"]);
            prop_assert!(spec.contains(&g));
            prop_assert_eq!(spec.parse_element(&g.to_string()).unwrap(), g);
        }

        #[test]
        fn hom_is_multiplicative(w1 in semigroup_elem(), w2 in semigroup_elem()) {
            let phi = Homomorphism::new(
                [("a", "a·b"), ("b", "b^-1"), ("c", "a^-1·a^-1")]
                    .into_iter()
                    .map(|(k, v)| (sym(k), fg(v)))
                    .collect(),
                fg("e"),
            );
            let joined = w1.compose(&w2).unwrap();
            let lhs = phi.evaluate_element(&joined).unwrap();
            let rhs = phi
                .evaluate_element(&w1)
                .unwrap()
                .compose(&phi.evaluate_element(&w2).unwrap())
                .unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn prefix_matches_naive(x in semigroup_elem(), y in semigroup_elem()) {
            let (xw, yw) = (x.as_word().unwrap(), y.as_word().unwrap());
            let mut naive = xw.len() <= yw.len();
            if naive {
                for i in 0..xw.len() {
                    if xw[i] != yw[i] {
                        naive = false;
                        break;
                    }
                }
            }
            prop_assert_eq!(prefix_leq(xw, yw), naive);
            if let Some(h) = word_quotient(xw, yw) {
                prop_assert_eq!(x.compose(&h).unwrap(), y);
            }
        }
    }
}
