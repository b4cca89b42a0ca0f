//! Green functions, Martin kernels and boundary-sequence diagnostics.
//!
//! On free semigroups with generator-supported measures both objects have
//! closed forms. Elsewhere the Green series is summed up to a horizon; all
//! terms are nonnegative, so the truncated value is a lower bound.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{prefix_leq, GroupElement, InfiniteWord, Sym, Word};
use crate::measure::Measure;
use crate::rational::{self, Rational};

/// Default cap on DP states visited by the truncated series.
pub const DEFAULT_SERIES_BUDGET: u64 = 50_000_000;

/// Default relative tolerance for the stabilization verdict.
pub const DEFAULT_STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    Exact,
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelValue {
    Rational(Rational),
    Float(f64),
}

impl KernelValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            KernelValue::Rational(r) => rational::to_f64(r),
            KernelValue::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            KernelValue::Rational(r) => Some(r),
            KernelValue::Float(_) => None,
        }
    }

    /// `p/q` for rationals, decimal otherwise.
    pub fn render(&self) -> String {
        match self {
            KernelValue::Rational(r) => rational::format(r),
            KernelValue::Float(x) => format!("{x:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub value: KernelValue,
    pub mode: KernelMode,
    pub horizon: usize,
    /// Last summed series term (0 in exact mode).
    pub last_term: f64,
    /// Ratio of the last two nonzero terms, when there are two.
    pub ratio: Option<f64>,
    pub tail_note: String,
}

impl KernelReport {
    fn exact(value: Rational, note: &str) -> Self {
        KernelReport {
            value: KernelValue::Rational(value),
            mode: KernelMode::Exact,
            horizon: 0,
            last_term: 0.0,
            ratio: None,
            tail_note: note.to_string(),
        }
    }

    pub fn rational(&self) -> Option<&Rational> {
        self.value.as_rational()
    }
}

/// Either a finite word or an infinite word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelTarget {
    Finite(Word),
    Infinite(InfiniteWord),
}

fn generator_weights(mu: &Measure) -> Result<HashMap<Sym, Rational>> {
    let mut out = HashMap::new();
    for (g, w) in mu.atoms() {
        match g.as_word() {
            Some(word) if word.len() == 1 => {
                out.insert(word[0].clone(), w.clone());
            }
            _ => {
                return Err(Error::Contract(format!(
                    "closed forms need a measure supported on single generators, found atom {g}"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Contract("zero measure".into()));
    }
    Ok(out)
}

/// `mu^{|w|}(w)`: the product of the letter weights.
fn word_mass(weights: &HashMap<Sym, Rational>, w: &[Sym]) -> Rational {
    w.iter()
        .map(|s| weights.get(s).cloned().unwrap_or_else(Rational::zero))
        .fold(Rational::one(), |a, b| a * b)
}

fn require_word(g: &GroupElement) -> Result<&Word> {
    g.as_word()
        .ok_or_else(|| Error::Mismatch(format!("expected a free-semigroup word, got {g}")))
}

/// `G(x,y) = mu^{|x^{-1}y|}(x^{-1}y)` if `x <= y`, else 0.
pub fn green_free(mu: &Measure, x: &GroupElement, y: &GroupElement) -> Result<KernelReport> {
    let weights = generator_weights(mu)?;
    let (x, y) = (require_word(x)?, require_word(y)?);
    let v = if prefix_leq(x, y) {
        word_mass(&weights, &y[x.len()..])
    } else {
        Rational::zero()
    };
    Ok(KernelReport::exact(
        v,
        "closed form; the series has one nonzero term",
    ))
}

/// `K(x, target) = 1/mu^{|x|}(x)` if `x` is a prefix of the target, else 0.
pub fn martin_free(mu: &Measure, x: &GroupElement, target: &KernelTarget) -> Result<KernelReport> {
    let weights = generator_weights(mu)?;
    let x = require_word(x)?;
    let on_geodesic = match target {
        KernelTarget::Finite(y) => prefix_leq(x, y),
        KernelTarget::Infinite(g) => g.has_prefix(x)?,
    };
    let v = if on_geodesic {
        let m = word_mass(&weights, x);
        if m.is_zero() {
            return Err(Error::NotReached(
                format!("{}", GroupElement::Word(x.clone())),
                0,
            ));
        }
        m.recip()
    } else {
        Rational::zero()
    };
    Ok(KernelReport::exact(v, "closed form"))
}

/// Series terms `mu^{*n}(target)` for `n = 0..=horizon`, for every target.
///
/// Runs the convolution DP on integer numerators over the common
/// denominator `D^n`, discarding states that cannot reach any target in
/// the remaining steps.
pub fn series_terms(
    mu: &Measure,
    targets: &[GroupElement],
    horizon: usize,
    budget: u64,
) -> Result<Vec<Vec<Rational>>> {
    let identity = mu.identity()?;
    let denom = mu
        .atoms()
        .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    let steps: Vec<(GroupElement, BigInt)> = mu
        .atoms()
        .map(|(g, w)| {
            (
                g.clone(),
                (w * Rational::from_integer(denom.clone())).to_integer(),
            )
        })
        .collect();
    let max_len = steps
        .iter()
        .map(|(g, _)| g.length())
        .max()
        .unwrap_or(1)
        .max(1);
    let denom_r = Rational::from_integer(denom);

    let reachable = |p: &GroupElement, remaining: usize| {
        targets.iter().any(|t| {
            p.distance_to(t)
                .is_some_and(|d| d <= remaining as u64 * max_len)
        })
    };

    let mut terms = vec![Vec::with_capacity(horizon + 1); targets.len()];
    let mut scale = Rational::one();
    let mut layer: HashMap<GroupElement, BigInt> = HashMap::new();
    if reachable(&identity, horizon) {
        layer.insert(identity, BigInt::one());
    }
    let mut visited: u64 = 0;
    for n in 0..=horizon {
        for (i, t) in targets.iter().enumerate() {
            let v = layer
                .get(t)
                .map(|c| Rational::from_integer(c.clone()) / &scale)
                .unwrap_or_else(Rational::zero);
            terms[i].push(v);
        }
        if n == horizon {
            break;
        }
        visited += (layer.len() * steps.len()) as u64;
        if visited > budget {
            return Err(Error::Budget {
                budget,
                depth_reached: n,
            });
        }
        let remaining = horizon - n - 1;
        let expand = |(p, c): (&GroupElement, &BigInt)| -> Result<Vec<(GroupElement, BigInt)>> {
            let mut out = Vec::with_capacity(steps.len());
            for (h, w) in &steps {
                let q = p.compose(h)?;
                if reachable(&q, remaining) {
                    out.push((q, c * w));
                }
            }
            Ok(out)
        };
        let mut next: HashMap<GroupElement, BigInt> = HashMap::with_capacity(layer.len() * 2);
        if layer.len() >= 4096 {
            let parts: Vec<Vec<(GroupElement, BigInt)>> =
                layer.par_iter().map(expand).collect::<Result<_>>()?;
            for (q, v) in parts.into_iter().flatten() {
                *next.entry(q).or_insert_with(BigInt::zero) += v;
            }
        } else {
            for entry in layer.iter() {
                for (q, v) in expand(entry)? {
                    *next.entry(q).or_insert_with(BigInt::zero) += v;
                }
            }
        }
        layer = next;
        scale *= &denom_r;
    }
    Ok(terms)
}

fn report_from_terms(terms: &[Rational], horizon: usize) -> KernelReport {
    let sum = terms.iter().fold(Rational::zero(), |a, t| a + t);
    let nonzero: Vec<&Rational> = terms.iter().filter(|t| !t.is_zero()).collect();
    let ratio = match nonzero.as_slice() {
        [.., a, b] => Some(rational::to_f64(&(*b / *a))),
        _ => None,
    };
    KernelReport {
        value: KernelValue::Rational(sum),
        mode: KernelMode::Truncated,
        horizon,
        last_term: terms.last().map(rational::to_f64).unwrap_or(0.0),
        ratio,
        tail_note: "partial sum of nonnegative terms; a lower bound for G".into(),
    }
}

fn quotient(x: &GroupElement, y: &GroupElement) -> Result<Option<GroupElement>> {
    x.left_quotient(y)
}

/// `sum_{n=0}^{horizon} mu^{*n}(x^{-1}y)`, exactly.
pub fn green_truncated(
    mu: &Measure,
    x: &GroupElement,
    y: &GroupElement,
    horizon: usize,
) -> Result<KernelReport> {
    match quotient(x, y)? {
        None => Ok(report_from_terms(
            &vec![Rational::zero(); horizon + 1],
            horizon,
        )),
        Some(z) => {
            let terms = series_terms(mu, &[z], horizon, DEFAULT_SERIES_BUDGET)?;
            Ok(report_from_terms(&terms[0], horizon))
        }
    }
}

/// Ratio of truncated Green functions `G_H(x,y) / G_H(e,y)`.
pub fn martin_truncated(
    mu: &Measure,
    x: &GroupElement,
    y: &GroupElement,
    horizon: usize,
) -> Result<KernelReport> {
    let table = kernel_grid(
        mu,
        std::slice::from_ref(x),
        std::slice::from_ref(y),
        horizon,
    )?;
    Ok(table
        .into_iter()
        .next()
        .expect("one probe")
        .into_iter()
        .next()
        .expect("one point"))
}

/// `K_H(probe, y)` for every probe and point, sharing one series DP.
pub fn kernel_grid(
    mu: &Measure,
    probes: &[GroupElement],
    points: &[GroupElement],
    horizon: usize,
) -> Result<Vec<Vec<KernelReport>>> {
    let mut targets: Vec<GroupElement> = Vec::new();
    let mut index: HashMap<GroupElement, usize> = HashMap::new();
    let mut slot = |g: GroupElement, targets: &mut Vec<GroupElement>| {
        *index.entry(g.clone()).or_insert_with(|| {
            targets.push(g);
            targets.len() - 1
        })
    };
    let mut denom_slot = Vec::with_capacity(points.len());
    for y in points {
        denom_slot.push(slot(y.clone(), &mut targets));
    }
    let mut numer_slot = vec![vec![None; points.len()]; probes.len()];
    for (i, x) in probes.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if let Some(z) = quotient(x, y)? {
                numer_slot[i][j] = Some(slot(z, &mut targets));
            }
        }
    }
    let terms = series_terms(mu, &targets, horizon, DEFAULT_SERIES_BUDGET)?;
    let diags: Vec<KernelReport> = terms
        .iter()
        .map(|t| report_from_terms(t, horizon))
        .collect();
    let mut out = Vec::with_capacity(probes.len());
    for (i, _) in probes.iter().enumerate() {
        let mut row = Vec::with_capacity(points.len());
        for (j, y) in points.iter().enumerate() {
            let den = diags[denom_slot[j]].rational().expect("rational series");
            if den.is_zero() {
                return Err(Error::NotReached(y.to_string(), horizon));
            }
            let (value, last_term, ratio) = match numer_slot[i][j] {
                Some(k) => {
                    let d = &diags[k];
                    (
                        d.rational().expect("rational series") / den,
                        d.last_term,
                        d.ratio,
                    )
                }
                None => (Rational::zero(), 0.0, None),
            };
            row.push(KernelReport {
                value: KernelValue::Rational(value),
                mode: KernelMode::Truncated,
                horizon,
                last_term,
                ratio,
                tail_note:
                    "ratio of truncated Green functions (ratio of lower bounds, not certified)"
                        .into(),
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// Green series for a measure with floating weights, restricted to
/// elements of length at most `window`. Mass leaving the window is dropped,
/// so the result is a lower bound.
pub fn green_float(
    steps: &[(GroupElement, f64)],
    targets: &[GroupElement],
    horizon: usize,
    window: u64,
) -> Result<Vec<f64>> {
    let identity = steps
        .first()
        .map(|(g, _)| g.identity_like())
        .ok_or_else(|| Error::Contract("empty step distribution".into()))?;
    // A step longer than twice the window cannot connect two window points.
    let steps: Vec<&(GroupElement, f64)> = steps
        .iter()
        .filter(|(h, _)| h.length() <= 2 * window)
        .collect();
    let mut sums = vec![0.0; targets.len()];
    let mut layer: HashMap<GroupElement, f64> = HashMap::from([(identity, 1.0)]);
    for n in 0..=horizon {
        for (i, t) in targets.iter().enumerate() {
            sums[i] += layer.get(t).copied().unwrap_or(0.0);
        }
        if n == horizon {
            break;
        }
        let mut next: HashMap<GroupElement, f64> = HashMap::with_capacity(layer.len() * 2);
        for (p, c) in &layer {
            for (h, w) in &steps {
                let q = p.compose(h)?;
                if q.length() <= window {
                    *next.entry(q).or_insert(0.0) += c * w;
                }
            }
        }
        layer = next;
    }
    Ok(sums)
}

/// `K(probe, y)` from a floating Green series, one row per probe.
pub fn kernel_grid_float(
    steps: &[(GroupElement, f64)],
    probes: &[GroupElement],
    points: &[GroupElement],
    horizon: usize,
    window: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut targets: Vec<GroupElement> = points.to_vec();
    let mut numer = vec![vec![None; points.len()]; probes.len()];
    for (i, x) in probes.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if let Some(z) = quotient(x, y)? {
                numer[i][j] = Some(targets.len());
                targets.push(z);
            }
        }
    }
    let sums = green_float(steps, &targets, horizon, window)?;
    let mut out = Vec::with_capacity(probes.len());
    for row in numer {
        let mut vals = Vec::with_capacity(points.len());
        for (j, k) in row.into_iter().enumerate() {
            let den = sums[j];
            if den <= 0.0 {
                return Err(Error::NotReached(points[j].to_string(), horizon));
            }
            vals.push(k.map(|k| sums[k]).unwrap_or(0.0) / den);
        }
        out.push(vals);
    }
    Ok(out)
}

/// Finite stretch of a sequence in the group, probed toward the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySequence {
    pub points: Vec<GroupElement>,
    pub description: String,
}

impl BoundarySequence {
    /// `start·step^n` for `n` in `range`.
    pub fn ray(
        step: &GroupElement,
        range: std::ops::RangeInclusive<usize>,
        description: &str,
    ) -> Result<Self> {
        let mut points = Vec::new();
        for n in range {
            let mut p = step.identity_like();
            for _ in 0..n {
                p = p.compose(step)?;
            }
            points.push(p);
        }
        Ok(BoundarySequence {
            points,
            description: description.to_string(),
        })
    }

    /// Prefixes of an infinite word with lengths in `range`.
    pub fn prefixes(g: &InfiniteWord, range: std::ops::RangeInclusive<usize>) -> Result<Self> {
        let points = range
            .map(|n| g.prefix(n).map(GroupElement::Word))
            .collect::<Result<_>>()?;
        Ok(BoundarySequence {
            points,
            description: format!("prefixes of {g}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub probe: GroupElement,
    pub values: Vec<f64>,
    /// Exact values when the series was summed in rational arithmetic.
    pub exact: Option<Vec<Rational>>,
    pub stabilized: bool,
}

impl KernelRow {
    pub fn limit(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub sequence: BoundarySequence,
    pub horizon: usize,
    pub tol: f64,
    pub rows: Vec<KernelRow>,
}

impl KernelTable {
    pub fn all_stabilized(&self) -> bool {
        self.rows.iter().all(|r| r.stabilized)
    }

    /// Last value of every row.
    pub fn limit_row(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.limit().unwrap_or(f64::NAN))
            .collect()
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// The last three values differ pairwise by at most `tol`, relatively.
pub fn is_stabilized(values: &[f64], tol: f64) -> bool {
    match values {
        [.., a, b, c] => close(*a, *b, tol) && close(*a, *c, tol) && close(*b, *c, tol),
        _ => false,
    }
}

/// Number of clusters among limit rows, two rows joining when every
/// coordinate is within `tol` relatively.
pub fn distinct_limit_rows(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for r in rows {
        let same =
            |s: &&Vec<f64>| s.len() == r.len() && s.iter().zip(r).all(|(a, b)| close(*a, *b, tol));
        if !reps.iter().any(same) {
            reps.push(r);
        }
    }
    reps.len()
}

/// `K_H(probe, seq_n)` with a per-probe stabilization verdict.
pub fn kernel_sequence(
    mu: &Measure,
    probes: &[GroupElement],
    seq: &BoundarySequence,
    horizon: usize,
    tol: f64,
) -> Result<KernelTable> {
    let grid = kernel_grid(mu, probes, &seq.points, horizon)?;
    let rows = probes
        .iter()
        .zip(grid)
        .map(|(p, reports)| {
            let exact: Vec<Rational> = reports
                .iter()
                .map(|r| r.rational().cloned().expect("rational series"))
                .collect();
            let values: Vec<f64> = exact.iter().map(rational::to_f64).collect();
            KernelRow {
                probe: p.clone(),
                stabilized: is_stabilized(&values, tol),
                values,
                exact: Some(exact),
            }
        })
        .collect();
    Ok(KernelTable {
        sequence: seq.clone(),
        horizon,
        tol,
        rows,
    })
}

/// Floating counterpart of [`kernel_sequence`] for empirical measures.
pub fn kernel_sequence_float(
    steps: &[(GroupElement, f64)],
    probes: &[GroupElement],
    seq: &BoundarySequence,
    horizon: usize,
    window: u64,
    tol: f64,
) -> Result<KernelTable> {
    let grid = kernel_grid_float(steps, probes, &seq.points, horizon, window)?;
    let rows = probes
        .iter()
        .zip(grid)
        .map(|(p, values)| KernelRow {
            probe: p.clone(),
            stabilized: is_stabilized(&values, tol),
            values,
            exact: None,
        })
        .collect();
    Ok(KernelTable {
        sequence: seq.clone(),
        horizon,
        tol,
        rows,
    })
}

/// Boundary behavior suggested by a finite stretch of a sequence of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    EventuallyConstant {
        word: Word,
    },
    IncreasingCommonPrefix {
        prefix: Word,
    },
    /// Common prefix stays fixed while the next letter leaves every finite
    /// set of generators; only possible in infinite rank.
    FiniteCommonPrefixEscaping {
        prefix: Word,
    },
    Inconclusive,
}

fn common_prefix_len(a: &[Sym], b: &[Sym]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Matches the evidence against the three convergence classes. `window` is
/// the finite set of generators the escaping case must eventually leave.
pub fn classify_free_sequence(seq: &[Word], window: &BTreeSet<Sym>) -> Classification {
    let n = seq.len();
    if n == 0 {
        return Classification::Inconclusive;
    }
    let tail = &seq[n.saturating_sub(3)..];
    if tail.len() >= 2 && tail.iter().all(|w| w == &tail[0]) {
        return Classification::EventuallyConstant {
            word: tail[0].clone(),
        };
    }
    if n < 3 {
        return Classification::Inconclusive;
    }
    let lcp: Vec<usize> = seq
        .windows(2)
        .map(|p| common_prefix_len(&p[0], &p[1]))
        .collect();
    let half = lcp.len() / 2;
    let late = &lcp[half..];
    if late.windows(2).all(|p| p[0] <= p[1]) && late.last() > late.first() {
        let last = seq.last().expect("nonempty");
        return Classification::IncreasingCommonPrefix {
            prefix: last[..*lcp.last().expect("n >= 3")].to_vec(),
        };
    }
    let p = lcp[half];
    if late.iter().all(|&c| c == p) {
        let tail = &seq[half..];
        let next: Vec<Option<&Sym>> = tail.iter().map(|w| w.get(p)).collect();
        let distinct: BTreeSet<&Sym> = next.iter().flatten().copied().collect();
        let escapes = next
            .last()
            .copied()
            .flatten()
            .is_some_and(|s| !window.contains(s));
        if next.iter().all(Option::is_some) && distinct.len() == tail.len() && escapes {
            return Classification::FiniteCommonPrefixEscaping {
                prefix: tail[0][..p].to_vec(),
            };
        }
    }
    Classification::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{sym, GroupSpec};
    use crate::measure::tests::z3_example;
    use crate::rational::{int, ratio};
    use crate::stopping::{transform_bounded, StoppingRule};

    fn w(s: &str) -> GroupElement {
        GroupSpec::free_semigroup(&["a", "b", "c"])
            .parse_element(s)
            .unwrap()
    }

    fn fair() -> Measure {
        Measure::from_atoms([(w("a"), ratio(1, 2)), (w("b"), ratio(1, 2))]).unwrap()
    }

    fn val(r: &KernelReport) -> Rational {
        r.rational().unwrap().clone()
    }

    #[test]
    fn free_closed_forms() {
        let mu = fair();
        assert_eq!(val(&green_free(&mu, &w("e"), &w("e")).unwrap()), int(1));
        assert_eq!(
            val(&green_free(&mu, &w("e"), &w("a·b")).unwrap()),
            ratio(1, 4)
        );
        assert_eq!(val(&green_free(&mu, &w("b"), &w("a·b")).unwrap()), int(0));

        let abab = KernelTarget::Infinite(InfiniteWord::periodic(&[], &["a", "b"]));
        let aaa = KernelTarget::Infinite(InfiniteWord::periodic(&[], &["a"]));
        assert_eq!(val(&martin_free(&mu, &w("e"), &aaa).unwrap()), int(1));
        assert_eq!(val(&martin_free(&mu, &w("a·b"), &abab).unwrap()), int(4));
        assert_eq!(val(&martin_free(&mu, &w("b"), &aaa).unwrap()), int(0));

        let short = KernelTarget::Infinite(InfiniteWord::Explicit {
            known: vec![sym("a")],
        });
        assert!(matches!(
            martin_free(&mu, &w("a·b"), &short),
            Err(Error::Undecidable {
                needed: 2,
                available: 1
            })
        ));
        let long = Measure::from_atoms([(w("a·b"), int(1))]).unwrap();
        assert!(matches!(
            green_free(&long, &w("e"), &w("e")),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn truncated_matches_closed_form() {
        let mu = Measure::from_atoms([
            (w("a"), ratio(1, 3)),
            (w("b"), ratio(1, 2)),
            (w("c"), ratio(1, 6)),
        ])
        .unwrap();
        let words = ["e", "a", "b·a", "a·c·b", "a·b·a·c"];
        for x in words {
            for y in words {
                let (x, y) = (w(x), w(y));
                let g = green_truncated(&mu, &x, &y, 6).unwrap();
                assert_eq!(val(&g), val(&green_free(&mu, &x, &y).unwrap()));
                let k = martin_truncated(&mu, &x, &y, 6).unwrap();
                let want =
                    martin_free(&mu, &x, &KernelTarget::Finite(y.as_word().unwrap().clone()))
                        .unwrap();
                assert_eq!(val(&k), val(&want));
            }
        }
    }

    #[test]
    fn truncated_trivia() {
        let mu = z3_example();
        let o = GroupElement::lattice(&[0, 0, 0]);
        assert_eq!(val(&green_truncated(&mu, &o, &o, 0).unwrap()), int(1));
        let y = GroupElement::lattice(&[1, 2, 0]);
        assert_eq!(val(&martin_truncated(&mu, &o, &y, 9).unwrap()), int(1));
        assert!(matches!(
            martin_truncated(&mu, &o, &y, 2),
            Err(Error::NotReached(_, 2))
        ));
    }

    #[test]
    fn truncated_series_oracle_on_z3() {
        // Pruned DP against plain convolution powers.
        let mu = z3_example();
        let o = GroupElement::lattice(&[0, 0, 0]);
        let y = GroupElement::lattice(&[0, -1, 0]);
        let mut direct = Rational::zero();
        let mut p = Measure::dirac(o.clone());
        for _ in 0..=8 {
            direct += p.weight(&y);
            p = p.convolve(&mu).unwrap();
        }
        assert_eq!(val(&green_truncated(&mu, &o, &y, 8).unwrap()), direct);
    }

    #[test]
    fn truncated_green_is_monotone() {
        let mu = z3_example();
        let o = GroupElement::lattice(&[0, 0, 0]);
        let y = GroupElement::lattice(&[0, -1, 0]);
        let mut prev = Rational::zero();
        for h in [0, 5, 10, 20] {
            let g = val(&green_truncated(&mu, &o, &y, h).unwrap());
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn transformed_kernel_is_two_valued() {
        let mu = fair();
        let tau = StoppingRule::min_hit([w("a")], 3);
        let mt = transform_bounded(&mu, &tau).unwrap();
        let probes = ["e", "a", "b", "a·b", "b·b", "a·a·b"];
        // Positions the transformed walk can occupy.
        let targets = ["e", "a", "b·a", "b·b·b", "a·a", "a·b·b·a", "b·b·b·b·a"];
        for x in probes {
            let inv = mu
                .power(w(x).length() as usize)
                .unwrap()
                .weight(&w(x))
                .recip();
            for y in targets {
                let k = martin_truncated(&mt, &w(x), &w(y), 6).unwrap();
                let v = val(&k);
                assert!(v.is_zero() || v == inv, "K({x},{y}) = {v}");
            }
        }
    }

    #[test]
    fn free_sequence_rows_are_eventually_constant() {
        let mu = fair();
        let g = InfiniteWord::periodic(&[], &["a", "b"]);
        let seq = BoundarySequence::prefixes(&g, 1..=8).unwrap();
        let probes = [w("e"), w("a"), w("a·b"), w("b")];
        let table = kernel_sequence(&mu, &probes, &seq, 8, DEFAULT_STABILITY_TOL).unwrap();
        assert!(table.all_stabilized());
        assert_eq!(table.limit_row(), vec![1.0, 2.0, 4.0, 0.0]);
    }

    #[test]
    fn stabilization_verdicts() {
        assert!(is_stabilized(&[5.0, 1.0, 1.01, 1.02], 0.05));
        assert!(!is_stabilized(&[1.0, 1.2, 1.0], 0.05));
        assert!(!is_stabilized(&[1.0, 1.0], 0.05));
        assert_eq!(
            distinct_limit_rows(&[vec![1.0, 3.0], vec![1.01, 3.0], vec![1.0, 1.0]], 0.05),
            2
        );
    }

    #[test]
    fn float_green_agrees_with_exact() {
        let mu = z3_example();
        let steps: Vec<_> = mu
            .atoms()
            .map(|(g, w)| (g.clone(), rational::to_f64(w)))
            .collect();
        let o = GroupElement::lattice(&[0, 0, 0]);
        let y = GroupElement::lattice(&[0, -1, 0]);
        let f = green_float(&steps, std::slice::from_ref(&y), 12, 100).unwrap()[0];
        let e = rational::to_f64(&val(&green_truncated(&mu, &o, &y, 12).unwrap()));
        assert!((f - e).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let word = |s: &str| w(s).as_word().unwrap().clone();
        let none = BTreeSet::new();
        let same = vec![word("a·b"); 4];
        assert_eq!(
            classify_free_sequence(&same, &none),
            Classification::EventuallyConstant { word: word("a·b") }
        );
        let g = InfiniteWord::periodic(&[], &["a", "b"]);
        let pre: Vec<Word> = (1..8).map(|n| g.prefix(n).unwrap()).collect();
        assert_eq!(
            classify_free_sequence(&pre, &none),
            Classification::IncreasingCommonPrefix {
                prefix: g.prefix(6).unwrap()
            }
        );
        let gens: Vec<Word> = (0..6).map(|i| vec![sym(&format!("g_{i}"))]).collect();
        let window: BTreeSet<Sym> = [sym("g_0"), sym("g_1")].into();
        assert_eq!(
            classify_free_sequence(&gens, &window),
            Classification::FiniteCommonPrefixEscaping { prefix: vec![] }
        );
        let wobble = vec![word("a"), word("b"), word("a"), word("b")];
        assert_eq!(
            classify_free_sequence(&wobble, &none),
            Classification::Inconclusive
        );
    }
}
