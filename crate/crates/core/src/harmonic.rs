//! The operator `P^mu f(g) = sum_h f(gh) mu(h)`, harmonicity on finite
//! windows, the minimal functions `u^g` of free semigroups and the `Z_+`
//! chain obtained by conditioning a walk to follow an infinite word.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{GroupElement, InfiniteWord, Letter, Sym, Word};
use crate::measure::Measure;
use crate::rational::{self, Rational};

/// A function on the group with exact rational values.
pub trait HarmonicFn: Send + Sync {
    fn eval(&self, g: &GroupElement) -> Result<Rational>;
    fn describe(&self) -> String;
}

pub type SharedFn = Arc<dyn HarmonicFn>;

impl fmt::Debug for dyn HarmonicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn eval_error(g: &GroupElement, reason: impl Into<String>) -> Error {
    Error::Eval {
        element: g.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone)]
pub struct Constant(pub Rational);

impl HarmonicFn for Constant {
    fn eval(&self, _: &GroupElement) -> Result<Rational> {
        Ok(self.0.clone())
    }

    fn describe(&self) -> String {
        format!("constant {}", rational::format(&self.0))
    }
}

/// `f(letter^n) = base^n` on powers of one generator, 0 on other words.
#[derive(Debug, Clone)]
pub struct GeodesicPower {
    pub letter: Sym,
    pub base: Rational,
}

impl HarmonicFn for GeodesicPower {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        let w = g
            .as_word()
            .ok_or_else(|| eval_error(g, "expected a free-semigroup word"))?;
        Ok(if w.iter().all(|s| *s == self.letter) {
            rational::pow(&self.base, w.len() as i64)
        } else {
            Rational::zero()
        })
    }

    fn describe(&self) -> String {
        format!("{}^n -> {}^n", self.letter, rational::format(&self.base))
    }
}

/// `f(x) = prod_i base_i^{x_i}` on `Z^d`.
#[derive(Debug, Clone)]
pub struct LatticeExponential {
    pub base: Vec<Rational>,
}

impl HarmonicFn for LatticeExponential {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        match g {
            GroupElement::Lattice(v) if v.len() == self.base.len() => Ok(v
                .iter()
                .zip(&self.base)
                .fold(Rational::one(), |acc, (&x, b)| acc * rational::pow(b, x))),
            _ => Err(eval_error(g, "dimension mismatch")),
        }
    }

    fn describe(&self) -> String {
        let b: Vec<String> = self.base.iter().map(rational::format).collect();
        format!("exponential with bases ({})", b.join(","))
    }
}

/// `f(x) = c + sum_i a_i x_i` on `Z^d`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl HarmonicFn for Affine {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        match g {
            GroupElement::Lattice(v) if v.len() == self.coeffs.len() => Ok(v
                .iter()
                .zip(&self.coeffs)
                .fold(self.constant.clone(), |acc, (&x, a)| {
                    acc + a * rational::int(x)
                })),
            _ => Err(eval_error(g, "dimension mismatch")),
        }
    }

    fn describe(&self) -> String {
        let a: Vec<String> = self.coeffs.iter().map(rational::format).collect();
        format!(
            "affine ({}) + {}",
            a.join(","),
            rational::format(&self.constant)
        )
    }
}

/// Explicit values on finitely many elements, `default` elsewhere.
#[derive(Debug, Clone)]
pub struct Table {
    pub values: BTreeMap<GroupElement, Rational>,
    pub default: Rational,
}

impl HarmonicFn for Table {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        Ok(self
            .values
            .get(g)
            .cloned()
            .unwrap_or_else(|| self.default.clone()))
    }

    fn describe(&self) -> String {
        format!(
            "table with {} entries, default {}",
            self.values.len(),
            rational::format(&self.default)
        )
    }
}

/// `base` with `delta` added at one element.
pub struct Perturbed {
    pub base: SharedFn,
    pub at: GroupElement,
    pub delta: Rational,
}

impl HarmonicFn for Perturbed {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        let v = self.base.eval(g)?;
        Ok(if *g == self.at { v + &self.delta } else { v })
    }

    fn describe(&self) -> String {
        format!(
            "{} perturbed by {} at {}",
            self.base.describe(),
            rational::format(&self.delta),
            self.at
        )
    }
}

/// `P^mu f` as a function in its own right.
pub struct Applied {
    pub mu: Measure,
    pub f: SharedFn,
}

impl HarmonicFn for Applied {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        apply_p(&self.mu, self.f.as_ref(), g)
    }

    fn describe(&self) -> String {
        format!("P applied to ({})", self.f.describe())
    }
}

/// Function given by a closure.
pub struct FromFn<F> {
    pub f: F,
    pub description: String,
}

impl<F> HarmonicFn for FromFn<F>
where
    F: Fn(&GroupElement) -> Result<Rational> + Send + Sync,
{
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        (self.f)(g)
    }

    fn describe(&self) -> String {
        self.description.clone()
    }
}

pub fn from_fn<F>(description: &str, f: F) -> SharedFn
where
    F: Fn(&GroupElement) -> Result<Rational> + Send + Sync + 'static,
{
    Arc::new(FromFn {
        f,
        description: description.to_string(),
    })
}

/// `u^g(x) = 1/mu^{|x|}(x)` on prefixes of `g`, 0 elsewhere.
#[derive(Debug, Clone)]
pub struct MinimalWitness {
    weights: BTreeMap<Sym, Rational>,
    pub geodesic: InfiniteWord,
}

impl HarmonicFn for MinimalWitness {
    fn eval(&self, g: &GroupElement) -> Result<Rational> {
        let x = g
            .as_word()
            .ok_or_else(|| eval_error(g, "expected a free-semigroup word"))?;
        if !self.geodesic.has_prefix(x)? {
            return Ok(Rational::zero());
        }
        let mut mass = Rational::one();
        for s in x {
            mass *= self.weights.get(s).cloned().unwrap_or_else(Rational::zero);
        }
        if mass.is_zero() {
            return Err(eval_error(g, "prefix has zero mass under mu"));
        }
        Ok(mass.recip())
    }

    fn describe(&self) -> String {
        format!("u^g for g = {}", self.geodesic)
    }
}

/// Letter weights of a measure supported on single generators.
pub fn letter_weights(mu: &Measure) -> Result<BTreeMap<Sym, Rational>> {
    let mut out = BTreeMap::new();
    for (g, w) in mu.atoms() {
        match g.as_word() {
            Some(word) if word.len() == 1 => {
                out.insert(word[0].clone(), w.clone());
            }
            _ => {
                return Err(Error::Contract(format!(
                    "expected a measure on single generators, found atom {g}"
                )))
            }
        }
    }
    Ok(out)
}

/// The minimal harmonic function `u^g` attached to an infinite word.
pub fn minimal_witness(mu: &Measure, g: &InfiniteWord) -> Result<MinimalWitness> {
    g.validate()?;
    Ok(MinimalWitness {
        weights: letter_weights(mu)?,
        geodesic: g.clone(),
    })
}

/// `P^mu f(g)`, exactly.
pub fn apply_p(mu: &Measure, f: &dyn HarmonicFn, g: &GroupElement) -> Result<Rational> {
    let mut acc = Rational::zero();
    for (h, w) in mu.atoms() {
        let gh = g.compose(h)?;
        let v = f.eval(&gh).map_err(|e| match e {
            Error::Eval { .. } => e,
            other => eval_error(&gh, other.to_string()),
        })?;
        acc += v * w;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicFailure {
    pub element: GroupElement,
    pub pf: Rational,
    pub f: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicityReport {
    pub window: Vec<GroupElement>,
    pub max_defect: Rational,
    pub failures: Vec<HarmonicFailure>,
}

impl HarmonicityReport {
    pub fn is_harmonic(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares `P^mu f` with `f` at every window element.
pub fn check_harmonic(
    mu: &Measure,
    f: &dyn HarmonicFn,
    window: &[GroupElement],
) -> Result<HarmonicityReport> {
    let rows: Vec<(Rational, Rational)> = window
        .par_iter()
        .map(|g| Ok((apply_p(mu, f, g)?, f.eval(g)?)))
        .collect::<Result<_>>()?;
    let mut max_defect = Rational::zero();
    let mut failures = Vec::new();
    for (g, (pf, fv)) in window.iter().zip(rows) {
        let d = (&pf - &fv).abs();
        if !d.is_zero() {
            if d > max_defect {
                max_defect = d.clone();
            }
            failures.push(HarmonicFailure {
                element: g.clone(),
                pf,
                f: fv,
            });
        }
    }
    Ok(HarmonicityReport {
        window: window.to_vec(),
        max_defect,
        failures,
    })
}

/// Prefixes of `g` of length `0..len`.
pub fn prefix_window(g: &InfiniteWord, len: usize) -> Result<Vec<GroupElement>> {
    (0..len)
        .map(|n| g.prefix(n).map(GroupElement::Word))
        .collect()
}

/// All words of length at most `radius`.
pub fn word_ball(generators: &[Sym], radius: usize) -> Vec<GroupElement> {
    let mut out = vec![GroupElement::Word(Vec::new())];
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..radius {
        let mut next = Vec::with_capacity(frontier.len() * generators.len());
        for w in &frontier {
            for s in generators {
                let mut v = w.clone();
                v.push(s.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(GroupElement::Word));
        frontier = next;
    }
    out
}

/// Reduced free-group words of length at most `radius`.
pub fn reduced_ball(generators: &[Sym], radius: usize) -> Vec<GroupElement> {
    let letters: Vec<Letter> = generators
        .iter()
        .flat_map(|s| [Letter::new(s.clone(), false), Letter::new(s.clone(), true)])
        .collect();
    let mut out = vec![GroupElement::Reduced(Vec::new())];
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                if w.last()
                    .is_some_and(|last| last.sym == l.sym && last.inverse != l.inverse)
                {
                    continue;
                }
                let mut v = w.clone();
                v.push(l.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(GroupElement::Reduced));
        frontier = next;
    }
    out
}

/// Lattice points of L1 norm at most `radius`, in lexicographic order.
pub fn lattice_ball(dim: usize, radius: u64) -> Vec<GroupElement> {
    fn fill(dim: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<GroupElement>) {
        if cur.len() == dim {
            out.push(GroupElement::Lattice(cur.clone()));
            return;
        }
        for c in -left..=left {
            cur.push(c);
            fill(dim, left - c.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    fill(dim, radius as i64, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Transition probabilities `q(n, n+k)` of the walk conditioned to follow
/// an infinite word, for `n` in `0..rows.len()` and `k` in `1..=jump_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicChain {
    pub geodesic: InfiniteWord,
    pub jump_bound: usize,
    /// `rows[n][k-1] = q(n, n+k)`.
    pub rows: Vec<Vec<Rational>>,
    /// `min_n q(n, n+1)`.
    pub t: Rational,
}

impl GeodesicChain {
    pub fn q(&self, n: usize, k: usize) -> Rational {
        self.rows[n][k - 1].clone()
    }
}

/// `q(n, n+k) = mu_tt(s) / mu^{*k}(s)` with `s = g_{n+1} ... g_{n+k}`.
///
/// Rows must sum to 1 exactly; a failure means `u^g` is not
/// `mu_tt`-harmonic, i.e. the inputs are not of the expected form.
pub fn build_conditional_chain(
    mu_tt: &Measure,
    mu: &Measure,
    g: &InfiniteWord,
    len: usize,
) -> Result<GeodesicChain> {
    let weights = letter_weights(mu)?;
    let mut jump_bound = 0;
    for h in mu_tt.support() {
        let w = h
            .as_word()
            .ok_or_else(|| Error::Mismatch(format!("expected words, found {h}")))?;
        if w.is_empty() {
            return Err(Error::Contract(
                "transformed measure charges the identity".into(),
            ));
        }
        jump_bound = jump_bound.max(w.len());
    }
    let letters = g.prefix(len + jump_bound)?;
    let mut rows = Vec::with_capacity(len);
    let mut t: Option<Rational> = None;
    for n in 0..len {
        let mut row = Vec::with_capacity(jump_bound);
        let mut seg_mass = Rational::one();
        for k in 1..=jump_bound {
            let seg = &letters[n..n + k];
            seg_mass *= weights
                .get(&seg[k - 1])
                .cloned()
                .unwrap_or_else(Rational::zero);
            if seg_mass.is_zero() {
                return Err(Error::Contract(format!(
                    "segment {} has zero mass under mu",
                    GroupElement::Word(seg.to_vec())
                )));
            }
            row.push(mu_tt.weight(&GroupElement::Word(seg.to_vec())) / &seg_mass);
        }
        let sum = row.iter().fold(Rational::zero(), |a, b| a + b);
        if !sum.is_one() {
            return Err(Error::Inconsistency(format!(
                "row {n} of the conditional chain sums to {}",
                rational::format(&sum)
            )));
        }
        t = Some(match t {
            Some(t) if t <= row[0] => t,
            _ => row[0].clone(),
        });
        rows.push(row);
    }
    Ok(GeodesicChain {
        geodesic: g.clone(),
        jump_bound,
        rows,
        t: t.unwrap_or_else(Rational::one),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSolution {
    /// `f(0..=n_max)`, normalized so that `f(0) = 1`.
    pub values: Vec<Rational>,
    /// Last index of the interior range `[0, n_max - M]`.
    pub interior_end: usize,
    pub min: Rational,
    pub max: Rational,
}

/// Solves `f(n) = sum_k q(n,n+k) f(n+k)` downward from terminal values on
/// `[n_max - M + 1, n_max]`; the chain needs rows up to `n_max - M`.
pub fn solve_chain_harmonic(
    chain: &GeodesicChain,
    n_max: usize,
    terminal: &[Rational],
) -> Result<ChainSolution> {
    let m = chain.jump_bound;
    if terminal.len() != m {
        return Err(Error::Contract(format!(
            "need {m} terminal values, got {}",
            terminal.len()
        )));
    }
    if terminal.iter().any(|v| !v.is_positive()) {
        return Err(Error::Contract("terminal values must be positive".into()));
    }
    if n_max + 1 < m || chain.rows.len() + m <= n_max {
        return Err(Error::Contract(format!(
            "chain with {} rows and jump bound {m} cannot be solved up to {n_max}",
            chain.rows.len()
        )));
    }
    let mut f = vec![Rational::zero(); n_max + 1];
    f[n_max + 1 - m..].clone_from_slice(terminal);
    for n in (0..=n_max - m).rev() {
        f[n] = (1..=m).fold(Rational::zero(), |acc, k| acc + chain.q(n, k) * &f[n + k]);
    }
    let f0 = f[0].clone();
    for v in &mut f {
        *v /= &f0;
    }
    let interior_end = n_max - m;
    let interior = &f[..=interior_end];
    let min = interior.iter().min().cloned().expect("nonempty");
    let max = interior.iter().max().cloned().expect("nonempty");
    Ok(ChainSolution {
        values: f,
        interior_end,
        min,
        max,
    })
}

/// Elements where two measures differ, if any.
fn first_difference(a: &Measure, b: &Measure) -> Option<GroupElement> {
    a.support()
        .chain(b.support())
        .find(|g| a.weight(g) != b.weight(g))
        .cloned()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexReport {
    /// Per index `i`: whether `theta_1 * theta_i = theta_i * theta_1`, with a
    /// witness element when not.
    pub commutation: Vec<(bool, Option<GroupElement>)>,
    /// Largest `|P^theta P^theta1 f - P^theta1 P^theta f|` on the window.
    pub operator_defect: Rational,
    /// Harmonicity of `f` for each `theta_i` on the window.
    pub component_reports: Vec<HarmonicityReport>,
    pub theta_report: HarmonicityReport,
    /// `f` is `theta_i`-harmonic on the window for every `i`.
    pub premise: bool,
    /// Premise implies `theta`-harmonicity with defect 0.
    pub inclusion_holds: bool,
}

impl ConvexReport {
    pub fn passes(&self) -> bool {
        self.commutation.iter().all(|(ok, _)| *ok)
            && self.operator_defect.is_zero()
            && self.inclusion_holds
    }
}

/// Checks the hypotheses and window consequences of
/// `H^+(theta) = H^+(theta_1)` for `theta = sum_i a_i theta_i`.
pub fn check_convex_theorem(
    thetas: &[Measure],
    a: &[Rational],
    f: SharedFn,
    window: &[GroupElement],
) -> Result<ConvexReport> {
    if thetas.is_empty() || thetas.len() != a.len() {
        return Err(Error::Contract(format!(
            "{} measures for {} weights",
            thetas.len(),
            a.len()
        )));
    }
    if !a[0].is_positive() {
        return Err(Error::Contract("a_1 must be positive".into()));
    }
    let theta = crate::measure::mix_subconvex(a, thetas)?;
    let theta1 = &thetas[0];
    let mut commutation = Vec::with_capacity(thetas.len());
    for t in thetas {
        let lr = theta1.convolve(t)?;
        let rl = t.convolve(theta1)?;
        let witness = first_difference(&lr, &rl);
        commutation.push((witness.is_none(), witness));
    }
    let p1f: SharedFn = Arc::new(Applied {
        mu: theta1.clone(),
        f: f.clone(),
    });
    let ptf: SharedFn = Arc::new(Applied {
        mu: theta.clone(),
        f: f.clone(),
    });
    let diffs: Vec<Rational> = window
        .par_iter()
        .map(|g| Ok((apply_p(&theta, p1f.as_ref(), g)? - apply_p(theta1, ptf.as_ref(), g)?).abs()))
        .collect::<Result<_>>()?;
    let operator_defect = diffs.into_iter().max().unwrap_or_else(Rational::zero);
    let component_reports = thetas
        .iter()
        .map(|t| check_harmonic(t, f.as_ref(), window))
        .collect::<Result<Vec<_>>>()?;
    let theta_report = check_harmonic(&theta, f.as_ref(), window)?;
    let premise = component_reports.iter().all(HarmonicityReport::is_harmonic);
    Ok(ConvexReport {
        commutation,
        operator_defect,
        inclusion_holds: !premise || theta_report.is_harmonic(),
        component_reports,
        theta_report,
        premise,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// Positivity followed a single word to the probed depth.
    Geodesic,
    /// Several positive continuations: `f` is not supported on one geodesic.
    Branching { at: Word, letters: Vec<Sym> },
    /// `f(x) > 0` but no continuation carries positive mass.
    Dead { at: Word },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub prefix: Word,
    pub outcome: ProbeOutcome,
}

/// Follows positivity of `f` one generator at a time from `e`.
pub fn geodesic_support_probe(
    mu_tt: &Measure,
    f: &dyn HarmonicFn,
    depth: usize,
) -> Result<ProbeReport> {
    let mut letters: Vec<Sym> = Vec::new();
    for h in mu_tt.support() {
        for s in h
            .as_word()
            .ok_or_else(|| Error::Mismatch(format!("expected words, found {h}")))?
        {
            if !letters.contains(s) {
                letters.push(s.clone());
            }
        }
    }
    letters.sort();
    let mut x: Word = Vec::new();
    if !f.eval(&GroupElement::Word(x.clone()))?.is_positive() {
        return Ok(ProbeReport {
            prefix: x.clone(),
            outcome: ProbeOutcome::Dead { at: x },
        });
    }
    for _ in 0..depth {
        let mut positive = Vec::new();
        for s in &letters {
            let mut y = x.clone();
            y.push(s.clone());
            if f.eval(&GroupElement::Word(y))?.is_positive() {
                positive.push(s.clone());
            }
        }
        let here = GroupElement::Word(x.clone());
        let has_mass = mu_tt.atoms().try_fold(false, |found, (h, w)| {
            Ok::<_, Error>(found || (f.eval(&here.compose(h)?)? * w).is_positive())
        })?;
        match positive.len() {
            _ if !has_mass => {
                return Ok(ProbeReport {
                    prefix: x.clone(),
                    outcome: ProbeOutcome::Dead { at: x },
                })
            }
            1 => x.push(positive.pop().expect("one letter")),
            0 => {
                return Ok(ProbeReport {
                    prefix: x.clone(),
                    outcome: ProbeOutcome::Dead { at: x },
                })
            }
            _ => {
                return Ok(ProbeReport {
                    prefix: x.clone(),
                    outcome: ProbeOutcome::Branching {
                        at: x,
                        letters: positive,
                    },
                })
            }
        }
    }
    Ok(ProbeReport {
        prefix: x,
        outcome: ProbeOutcome::Geodesic,
    })
}
