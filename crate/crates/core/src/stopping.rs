//! Bounded randomized stopping times and the transformed measures `mu_tau`.
//!
//! A randomized stopping time is carried as conditional stop probabilities:
//! given increments `h_1..h_k` and that the walk has not stopped before time
//! `k`, it stops at `k` with probability `stop_prob(h_1..h_k)`. Enumerating
//! the increment tree with these weights yields `mu_tau` exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{mix, mix_subconvex, Measure, MeasureDeficit};
use crate::rational::{self, Rational};

/// Default cap on enumerated increment-tree nodes.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// A stopping rule that stops almost surely by time `bound()`.
pub trait StopRule: Send + Sync + fmt::Debug {
    fn bound(&self) -> usize;

    /// Probability of stopping at `k = prefix.len()` given the increments and
    /// given the walk has not stopped before `k`.
    fn stop_prob(&self, prefix: &[GroupElement]) -> Rational;

    /// Probability that the rule stops exactly at `prefix.len()`, given only
    /// the increments.
    fn stop_at(&self, prefix: &[GroupElement]) -> Rational {
        let mut survive = Rational::one();
        for j in 1..prefix.len() {
            survive *= Rational::one() - self.stop_prob(&prefix[..j]);
        }
        survive * self.stop_prob(prefix)
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

/// Conditional stop probability recovered from unconditional stop-at values.
fn conditional_from_stop_at(rule: &dyn StopRule, prefix: &[GroupElement]) -> Rational {
    let mut earlier = Rational::zero();
    for j in 1..prefix.len() {
        earlier += rule.stop_at(&prefix[..j]);
    }
    let alive = Rational::one() - earlier;
    if alive.is_zero() {
        // Unreachable branch; any value keeps the tree consistent.
        Rational::one()
    } else {
        rule.stop_at(prefix) / alive
    }
}

/// Stop probabilities looked up by increment prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTable {
    pub bound: usize,
    pub default: Rational,
    pub entries: BTreeMap<Vec<GroupElement>, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoppingRule {
    /// `tau = k`.
    Constant(usize),
    /// `min{ first i with h_i in target, cap }`.
    MinHit {
        target: BTreeSet<GroupElement>,
        cap: usize,
    },
    /// Per-prefix stop probabilities; forced to stop at `bound`.
    Table(PrefixTable),
    /// `tau_1 + tau_2 ∘ U^{tau_1}`: run the first rule, then the second on
    /// the increments that follow.
    Composed(Box<StoppingRule>, Box<StoppingRule>),
    /// Draw component `i` with probability `a_i`, then follow it.
    Mixture(Vec<(Rational, StoppingRule)>),
}

impl StoppingRule {
    pub fn min_hit(target: impl IntoIterator<Item = GroupElement>, cap: usize) -> Self {
        StoppingRule::MinHit {
            target: target.into_iter().collect(),
            cap,
        }
    }

    pub fn composed(first: StoppingRule, second: StoppingRule) -> Self {
        StoppingRule::Composed(Box::new(first), Box::new(second))
    }

    /// Checks parameters that do not depend on the measure.
    pub fn validate(&self) -> Result<()> {
        match self {
            StoppingRule::Constant(0) | StoppingRule::MinHit { cap: 0, .. } => {
                Err(Error::Contract("stopping times must be at least 1".into()))
            }
            StoppingRule::Table(t) if t.bound == 0 => {
                Err(Error::Contract("table bound must be at least 1".into()))
            }
            StoppingRule::Table(t) => {
                let bad = std::iter::once(&t.default)
                    .chain(t.entries.values())
                    .find(|p| !rational::in_unit_interval(p));
                match bad {
                    Some(p) => Err(Error::Contract(format!(
                        "stop probability {} outside [0,1]",
                        rational::format(p)
                    ))),
                    None => Ok(()),
                }
            }
            StoppingRule::Composed(a, b) => {
                a.validate()?;
                b.validate()
            }
            StoppingRule::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(Error::Contract("empty mixture".into()));
                }
                let sum = parts.iter().fold(Rational::zero(), |s, (w, _)| s + w);
                if !sum.is_one() || parts.iter().any(|(w, _)| !rational::in_unit_interval(w)) {
                    return Err(Error::WeightSum {
                        expected: "1".into(),
                        actual: rational::format(&sum),
                    });
                }
                parts.iter().try_for_each(|(_, r)| r.validate())
            }
            _ => Ok(()),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            StoppingRule::Constant(_) | StoppingRule::MinHit { .. } => true,
            StoppingRule::Table(t) => std::iter::once(&t.default)
                .chain(t.entries.values())
                .all(|p| p.is_zero() || p.is_one()),
            StoppingRule::Composed(a, b) => a.is_deterministic() && b.is_deterministic(),
            StoppingRule::Mixture(parts) => {
                parts.iter().filter(|(w, _)| !w.is_zero()).count() == 1
                    && parts.iter().all(|(_, r)| r.is_deterministic())
            }
        }
    }
}

impl StopRule for StoppingRule {
    fn bound(&self) -> usize {
        match self {
            StoppingRule::Constant(k) => *k,
            StoppingRule::MinHit { cap, .. } => *cap,
            StoppingRule::Table(t) => t.bound,
            StoppingRule::Composed(a, b) => a.bound() + b.bound(),
            StoppingRule::Mixture(parts) => parts.iter().map(|(_, r)| r.bound()).max().unwrap_or(0),
        }
    }

    fn stop_prob(&self, prefix: &[GroupElement]) -> Rational {
        let k = prefix.len();
        match self {
            StoppingRule::Constant(c) => indicator(k >= *c),
            StoppingRule::MinHit { target, cap } => {
                indicator(k >= *cap || prefix.last().is_some_and(|h| target.contains(h)))
            }
            StoppingRule::Table(t) => {
                if k >= t.bound {
                    Rational::one()
                } else {
                    t.entries
                        .get(prefix)
                        .cloned()
                        .unwrap_or_else(|| t.default.clone())
                }
            }
            StoppingRule::Composed(..) | StoppingRule::Mixture(_) => {
                conditional_from_stop_at(self, prefix)
            }
        }
    }

    fn stop_at(&self, prefix: &[GroupElement]) -> Rational {
        match self {
            StoppingRule::Composed(first, second) => {
                let k = prefix.len();
                (1..k).fold(Rational::zero(), |acc, j| {
                    acc + first.stop_at(&prefix[..j]) * second.stop_at(&prefix[j..])
                })
            }
            StoppingRule::Mixture(parts) => parts
                .iter()
                .fold(Rational::zero(), |acc, (w, r)| acc + w * r.stop_at(prefix)),
            _ => {
                let mut survive = Rational::one();
                for j in 1..prefix.len() {
                    survive *= Rational::one() - self.stop_prob(&prefix[..j]);
                }
                survive * self.stop_prob(prefix)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            StoppingRule::Constant(k) => format!("constant {k}"),
            StoppingRule::MinHit { target, cap } => {
                let t: Vec<String> = target.iter().map(|g| g.to_string()).collect();
                format!("min(hit{{{}}}, {cap})", t.join(","))
            }
            StoppingRule::Table(t) => format!(
                "table(bound {}, {} entries, default {})",
                t.bound,
                t.entries.len(),
                rational::format(&t.default)
            ),
            StoppingRule::Composed(a, b) => format!("({}) then ({})", a.describe(), b.describe()),
            StoppingRule::Mixture(parts) => {
                let p: Vec<String> = parts
                    .iter()
                    .map(|(w, r)| format!("{}: {}", rational::format(w), r.describe()))
                    .collect();
                format!("mixture[{}]", p.join("; "))
            }
        }
    }
}

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Random prefix-table rule over the given increments. Deterministic rules
/// draw stop probabilities from {0, 1}, randomized ones from {0, 1/4, ..., 1}.
pub fn random_table_rule<R: Rng>(
    increments: &[GroupElement],
    bound: usize,
    deterministic: bool,
    rng: &mut R,
) -> StoppingRule {
    let mut entries = BTreeMap::new();
    let mut frontier: Vec<Vec<GroupElement>> = vec![Vec::new()];
    for _ in 1..bound {
        let mut next = Vec::new();
        for p in &frontier {
            for h in increments {
                let mut q = p.clone();
                q.push(h.clone());
                let prob = if deterministic {
                    rational::int(rng.gen_range(0..2))
                } else {
                    rational::ratio(rng.gen_range(0..=4), 4)
                };
                entries.insert(q.clone(), prob);
                next.push(q);
            }
        }
        frontier = next;
    }
    StoppingRule::Table(PrefixTable {
        bound,
        default: Rational::zero(),
        entries,
    })
}

/// Enumerated increment-tree node counter.
struct Budget {
    limit: u64,
    used: u64,
    deepest: usize,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget {
            limit,
            used: 0,
            deepest: 0,
        }
    }

    fn tick(&mut self, depth: usize) -> Result<()> {
        self.used += 1;
        self.deepest = self.deepest.max(depth);
        if self.used > self.limit {
            Err(Error::Budget {
                budget: self.limit,
                depth_reached: self.deepest,
            })
        } else {
            Ok(())
        }
    }
}

fn checked_stop_prob(tau: &dyn StopRule, prefix: &[GroupElement]) -> Result<Rational> {
    let s = tau.stop_prob(prefix);
    if !rational::in_unit_interval(&s) {
        return Err(Error::Contract(format!(
            "stop probability {} outside [0,1] for rule {}",
            rational::format(&s),
            tau.describe()
        )));
    }
    if prefix.len() >= tau.bound() && !s.is_one() {
        return Err(Error::Contract(format!(
            "rule {} does not stop by its bound {}",
            tau.describe(),
            tau.bound()
        )));
    }
    Ok(s)
}

fn require_bounded(tau: &dyn StopRule) -> Result<()> {
    if tau.bound() == 0 {
        Err(Error::Contract(format!(
            "rule {} has bound 0; stopping times are at least 1",
            tau.describe()
        )))
    } else {
        Ok(())
    }
}

/// Exact `mu_tau` for a bounded rule, using the default budget.
pub fn transform_bounded(mu: &Measure, tau: &dyn StopRule) -> Result<Measure> {
    transform_bounded_with_budget(mu, tau, DEFAULT_BUDGET)
}

pub fn transform_bounded_with_budget(
    mu: &Measure,
    tau: &dyn StopRule,
    budget: u64,
) -> Result<Measure> {
    mu.require_probability("mu")?;
    require_bounded(tau)?;
    let steps: Vec<(GroupElement, Rational)> =
        mu.atoms().map(|(g, w)| (g.clone(), w.clone())).collect();
    let mut out: BTreeMap<GroupElement, Rational> = BTreeMap::new();
    let mut budget = Budget::new(budget);
    let mut prefix = Vec::with_capacity(tau.bound());
    descend(
        &steps,
        tau,
        &mut prefix,
        &mu.identity()?,
        &Rational::one(),
        &mut out,
        &mut budget,
    )?;
    Measure::from_atoms(out)
}

fn descend(
    steps: &[(GroupElement, Rational)],
    tau: &dyn StopRule,
    prefix: &mut Vec<GroupElement>,
    position: &GroupElement,
    mass: &Rational,
    out: &mut BTreeMap<GroupElement, Rational>,
    budget: &mut Budget,
) -> Result<()> {
    for (h, w) in steps {
        prefix.push(h.clone());
        budget.tick(prefix.len())?;
        let pos = position.compose(h)?;
        let m = mass * w;
        let s = checked_stop_prob(tau, prefix)?;
        if !s.is_zero() {
            *out.entry(pos.clone()).or_insert_with(Rational::zero) += &m * &s;
        }
        if !s.is_one() {
            descend(
                steps,
                tau,
                prefix,
                &pos,
                &(m * (Rational::one() - s)),
                out,
                budget,
            )?;
        }
        prefix.pop();
    }
    Ok(())
}

/// Distribution of `x_{tau_n}`, enumerated directly over increment paths of
/// length up to `n * bound`, restarting the rule after each stop.
pub fn iterate_transform(mu: &Measure, tau: &dyn StopRule, n: usize) -> Result<Measure> {
    iterate_transform_with_budget(mu, tau, n, DEFAULT_BUDGET)
}

pub fn iterate_transform_with_budget(
    mu: &Measure,
    tau: &dyn StopRule,
    n: usize,
    budget: u64,
) -> Result<Measure> {
    mu.require_probability("mu")?;
    require_bounded(tau)?;
    if n == 0 {
        return Err(Error::Contract("iteration count must be positive".into()));
    }
    let steps: Vec<(GroupElement, Rational)> =
        mu.atoms().map(|(g, w)| (g.clone(), w.clone())).collect();
    let mut walker = IterWalker {
        steps: &steps,
        tau,
        n,
        out: BTreeMap::new(),
        budget: Budget::new(budget),
    };
    walker.go(0, &mut Vec::new(), 0, &mu.identity()?, &Rational::one())?;
    Measure::from_atoms(walker.out)
}

struct IterWalker<'a> {
    steps: &'a [(GroupElement, Rational)],
    tau: &'a dyn StopRule,
    n: usize,
    out: BTreeMap<GroupElement, Rational>,
    budget: Budget,
}

impl IterWalker<'_> {
    /// `stage` completed stops so far; `segment` holds the increments since
    /// the last stop, i.e. the shifted path the rule is applied to.
    fn go(
        &mut self,
        stage: usize,
        segment: &mut Vec<GroupElement>,
        depth: usize,
        position: &GroupElement,
        mass: &Rational,
    ) -> Result<()> {
        for (h, w) in self.steps {
            segment.push(h.clone());
            self.budget.tick(depth + 1)?;
            let pos = position.compose(h)?;
            let m = mass * w;
            let s = checked_stop_prob(self.tau, segment)?;
            if !s.is_zero() {
                let stopped = &m * &s;
                if stage + 1 == self.n {
                    *self.out.entry(pos.clone()).or_insert_with(Rational::zero) += stopped;
                } else {
                    self.go(stage + 1, &mut Vec::new(), depth + 1, &pos, &stopped)?;
                }
            }
            if !s.is_one() {
                self.go(
                    stage,
                    segment,
                    depth + 1,
                    &pos,
                    &(m * (Rational::one() - s)),
                )?;
            }
            segment.pop();
        }
        Ok(())
    }
}

/// First time an increment lands in `target`; unbounded, so only its
/// truncated series is ever materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingRule {
    pub target: BTreeSet<GroupElement>,
    pub depth: usize,
}

impl HittingRule {
    pub fn new(target: impl IntoIterator<Item = GroupElement>, depth: usize) -> Self {
        HittingRule {
            target: target.into_iter().collect(),
            depth,
        }
    }
}

/// Partial sum `sum_{i<N} alpha^{*i} * beta` with missing mass `(1 - mu(B))^N`.
pub fn transform_hitting(mu: &Measure, rule: &HittingRule) -> Result<MeasureDeficit> {
    mu.require_probability("mu")?;
    if rule.depth == 0 {
        return Err(Error::Contract("series depth must be positive".into()));
    }
    let (beta, alpha) = mu.split(|g| rule.target.contains(g));
    if beta.is_empty() {
        return Err(Error::Divergence(
            "mu(B) = 0, the hitting time is infinite almost surely".into(),
        ));
    }
    let mut term = beta.clone();
    let mut sum = Measure::zero();
    for i in 0..rule.depth {
        sum = sum.add(&term);
        if i + 1 < rule.depth {
            term = alpha.convolve(&term)?;
        }
    }
    let missing_mass = num_traits::pow(alpha.total_mass().clone(), rule.depth);
    Ok(MeasureDeficit {
        measure: sum,
        missing_mass,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleComponent {
    Bounded(StoppingRule),
    Hitting(HittingRule),
}

/// Randomized choice among component rules with weights `a_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureRule {
    pub components: Vec<(Rational, RuleComponent)>,
}

/// `sum a_i mu_{rho_i}` with missing mass `sum a_i deficit_i`.
pub fn transform_mixture(mu: &Measure, m: &MixtureRule) -> Result<MeasureDeficit> {
    let weights: Vec<Rational> = m.components.iter().map(|(w, _)| w.clone()).collect();
    let sum = weights.iter().fold(Rational::zero(), |a, w| a + w);
    if !sum.is_one() {
        return Err(Error::WeightSum {
            expected: "1".into(),
            actual: rational::format(&sum),
        });
    }
    let mut parts = Vec::with_capacity(weights.len());
    let mut missing = Rational::zero();
    for (w, c) in &m.components {
        let d = transform_component(mu, c)?;
        missing += w * &d.missing_mass;
        parts.push(d.measure);
    }
    Ok(MeasureDeficit {
        measure: mix_subconvex(&weights, &parts)?,
        missing_mass: missing,
    })
}

pub fn transform_component(mu: &Measure, c: &RuleComponent) -> Result<MeasureDeficit> {
    match c {
        RuleComponent::Bounded(r) => {
            r.validate()?;
            Ok(MeasureDeficit::exact(transform_bounded(mu, r)?))
        }
        RuleComponent::Hitting(h) => transform_hitting(mu, h),
    }
}

fn check_t(t: &Rational) -> Result<()> {
    if t.is_zero() || !rational::in_unit_interval(t) {
        Err(Error::Contract(format!(
            "t = {} must lie in (0,1]",
            rational::format(t)
        )))
    } else {
        Ok(())
    }
}

/// `mu_{tau,t} = t mu + (1 - t) mu_tau`.
pub fn make_mu_tau_t(mu: &Measure, tau: &dyn StopRule, t: &Rational) -> Result<Measure> {
    check_t(t)?;
    let mu_tau = transform_bounded(mu, tau)?;
    mu_tau_t(mu, &mu_tau, t)
}

/// Convex combination with a precomputed `mu_tau`.
pub fn mu_tau_t(mu: &Measure, mu_tau: &Measure, t: &Rational) -> Result<Measure> {
    check_t(t)?;
    mix(
        &[t.clone(), Rational::one() - t],
        &[mu.clone(), mu_tau.clone()],
    )
}

/// Convex combination with a truncated `mu_tau`; the deficit scales by `1 - t`.
pub fn mu_tau_t_deficit(
    mu: &Measure,
    mu_tau: &MeasureDeficit,
    t: &Rational,
) -> Result<MeasureDeficit> {
    check_t(t)?;
    let s = Rational::one() - t;
    Ok(MeasureDeficit {
        measure: mix_subconvex(
            &[t.clone(), s.clone()],
            &[mu.clone(), mu_tau.measure.clone()],
        )?,
        missing_mass: s * &mu_tau.missing_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::rational::{int, ratio};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> GroupElement {
        GroupSpec::free_semigroup(&["a", "b", "c"])
            .parse_element(s)
            .unwrap()
    }

    fn fair() -> Measure {
        Measure::from_atoms([(w("a"), ratio(1, 2)), (w("b"), ratio(1, 2))]).unwrap()
    }

    fn atoms(list: &[(&str, Rational)]) -> Measure {
        Measure::from_atoms(list.iter().map(|(s, r)| (w(s), r.clone()))).unwrap()
    }

    #[test]
    fn constant_rules() {
        let mu = fair();
        assert_eq!(
            transform_bounded(&mu, &StoppingRule::Constant(1)).unwrap(),
            mu
        );
        assert_eq!(
            transform_bounded(&mu, &StoppingRule::Constant(3)).unwrap(),
            mu.power(3).unwrap()
        );
    }

    #[test]
    fn capped_hit_by_enumeration() {
        // The 8 prefixes of length <= 3, stopped at the first `a`.
        let rule = StoppingRule::min_hit([w("a")], 3);
        let got = transform_bounded(&fair(), &rule).unwrap();
        let want = atoms(&[
            ("a", ratio(1, 2)),
            ("b·a", ratio(1, 4)),
            ("b·b·a", ratio(1, 8)),
            ("b·b·b", ratio(1, 8)),
        ]);
        assert_eq!(got, want);
        assert!(got.is_probability());
    }

    #[test]
    fn transform_contracts() {
        let half = atoms(&[("a", ratio(1, 2))]);
        assert!(matches!(
            transform_bounded(&half, &StoppingRule::Constant(1)),
            Err(Error::Contract(_))
        ));
        let leaky = StoppingRule::Table(PrefixTable {
            bound: 2,
            default: ratio(1, 2),
            entries: BTreeMap::new(),
        });
        assert!(transform_bounded(&fair(), &leaky).is_ok());

        #[derive(Debug)]
        struct Never;
        impl StopRule for Never {
            fn bound(&self) -> usize {
                2
            }
            fn stop_prob(&self, _: &[GroupElement]) -> Rational {
                Rational::zero()
            }
        }
        assert!(matches!(
            transform_bounded(&fair(), &Never),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let err =
            transform_bounded_with_budget(&fair(), &StoppingRule::Constant(10), 100).unwrap_err();
        match err {
            Error::Budget {
                budget,
                depth_reached,
            } => {
                assert_eq!(budget, 100);
                assert!(depth_reached >= 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hitting_series() {
        let mu = fair();
        let d = transform_hitting(&mu, &HittingRule::new([w("a")], 4)).unwrap();
        let want = atoms(&[
            ("a", ratio(1, 2)),
            ("b·a", ratio(1, 4)),
            ("b·b·a", ratio(1, 8)),
            ("b·b·b·a", ratio(1, 16)),
        ]);
        assert_eq!(d.measure, want);
        assert_eq!(d.missing_mass, ratio(1, 16));
        assert!(d.is_consistent());

        let all = transform_hitting(&mu, &HittingRule::new([w("a"), w("b")], 3)).unwrap();
        assert_eq!(all.measure, mu);
        assert_eq!(all.missing_mass, int(0));

        assert!(matches!(
            transform_hitting(&mu, &HittingRule::new([w("c")], 3)),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn hitting_on_z() {
        let z = |n: i64| GroupElement::lattice(&[n]);
        let mu = Measure::from_atoms([(z(1), ratio(1, 2)), (z(-1), ratio(1, 2))]).unwrap();
        let d = transform_hitting(&mu, &HittingRule::new([z(1)], 2)).unwrap();
        let want = Measure::from_atoms([(z(1), ratio(1, 2)), (z(0), ratio(1, 4))]).unwrap();
        assert_eq!(d.measure, want);
        assert_eq!(d.missing_mass, ratio(1, 4));
    }

    #[test]
    fn hitting_deficit_ratio() {
        let mu = Measure::from_atoms([
            (w("a"), ratio(1, 3)),
            (w("b"), ratio(1, 2)),
            (w("c"), ratio(1, 6)),
        ])
        .unwrap();
        let mut prev = None;
        for n in 1..7 {
            let d = transform_hitting(&mu, &HittingRule::new([w("a")], n)).unwrap();
            if let Some(p) = prev {
                assert_eq!(&d.missing_mass / p, ratio(2, 3));
            }
            prev = Some(d.missing_mass);
        }
    }

    #[test]
    fn iteration_examples() {
        let mu = fair();
        let c2 = StoppingRule::Constant(2);
        assert_eq!(
            iterate_transform(&mu, &c2, 2).unwrap(),
            mu.power(4).unwrap()
        );
        let capped = StoppingRule::min_hit([w("a")], 2);
        let one = transform_bounded(&mu, &capped).unwrap();
        assert_eq!(iterate_transform(&mu, &capped, 1).unwrap(), one);
        assert_eq!(
            iterate_transform(&mu, &capped, 2).unwrap(),
            one.convolve(&one).unwrap()
        );
    }

    #[test]
    fn mixture_examples() {
        let mu = fair();
        let single = MixtureRule {
            components: vec![(int(1), RuleComponent::Bounded(StoppingRule::Constant(2)))],
        };
        let d = transform_mixture(&mu, &single).unwrap();
        assert_eq!(d.measure, mu.power(2).unwrap());
        assert_eq!(d.missing_mass, int(0));

        let n = 6;
        let intro = MixtureRule {
            components: vec![
                (
                    ratio(1, 2),
                    RuleComponent::Bounded(StoppingRule::Constant(1)),
                ),
                (
                    ratio(1, 2),
                    RuleComponent::Hitting(HittingRule::new([w("a")], n)),
                ),
            ],
        };
        let d = transform_mixture(&mu, &intro).unwrap();
        let mut want = vec![];
        for k in 0..n {
            let word: Vec<&str> = std::iter::repeat_n("b", k).chain(["a"]).collect();
            want.push((
                GroupElement::word(&word),
                rational::pow(&ratio(1, 2), k as i64 + 2),
            ));
        }
        let want = Measure::from_atoms(want)
            .unwrap()
            .add(&mu.scale(&ratio(1, 2)));
        assert_eq!(d.measure, want);
        assert_eq!(d.missing_mass, rational::pow(&ratio(1, 2), n as i64 + 1));

        let a = [ratio(1, 2), ratio(1, 3), ratio(1, 6)];
        let powers = MixtureRule {
            components: a
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    (
                        w.clone(),
                        RuleComponent::Bounded(StoppingRule::Constant(i + 1)),
                    )
                })
                .collect(),
        };
        let want = mix(
            &a,
            &[mu.clone(), mu.power(2).unwrap(), mu.power(3).unwrap()],
        )
        .unwrap();
        assert_eq!(transform_mixture(&mu, &powers).unwrap().measure, want);
    }

    #[test]
    fn mixture_as_stopping_rule() {
        // The conditional-probability form of a mixture reproduces the mixed transform.
        let mu = fair();
        let parts = vec![
            (ratio(1, 3), StoppingRule::Constant(1)),
            (ratio(2, 3), StoppingRule::min_hit([w("b")], 3)),
        ];
        let rule = StoppingRule::Mixture(parts.clone());
        rule.validate().unwrap();
        let direct = transform_bounded(&mu, &rule).unwrap();
        let mixed = mix(
            &[ratio(1, 3), ratio(2, 3)],
            &[
                transform_bounded(&mu, &parts[0].1).unwrap(),
                transform_bounded(&mu, &parts[1].1).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(direct, mixed);
    }

    #[test]
    fn composition_law() {
        let mu = fair();
        let t1 = StoppingRule::min_hit([w("a")], 2);
        let t2 = StoppingRule::Constant(2);
        let comp = StoppingRule::composed(t1.clone(), t2.clone());
        let lhs = transform_bounded(&mu, &comp).unwrap();
        let rhs = transform_bounded(&mu, &t1)
            .unwrap()
            .convolve(&transform_bounded(&mu, &t2).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mu_tau_t_examples() {
        let mu = fair();
        let rule = StoppingRule::Constant(2);
        assert_eq!(make_mu_tau_t(&mu, &rule, &int(1)).unwrap(), mu);
        assert!(make_mu_tau_t(&mu, &rule, &int(0)).is_err());
        assert!(make_mu_tau_t(&mu, &rule, &ratio(3, 2)).is_err());
        let m = make_mu_tau_t(&mu, &rule, &ratio(1, 3)).unwrap();
        assert!(mu.support().all(|g| m.weight(g) > int(0)));

        let hit = transform_hitting(&mu, &HittingRule::new([w("a")], 5)).unwrap();
        let d = mu_tau_t_deficit(&mu, &hit, &ratio(1, 2)).unwrap();
        assert_eq!(d.missing_mass, rational::pow(&ratio(1, 2), 6));
        assert!(d.is_consistent());
    }

    #[test]
    fn random_rules_have_unit_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mu = Measure::from_atoms([
            (w("a"), ratio(1, 5)),
            (w("b"), ratio(3, 5)),
            (w("c"), ratio(1, 5)),
        ])
        .unwrap();
        let inc: Vec<_> = mu.support().cloned().collect();
        for bound in 1..=3 {
            for det in [true, false] {
                let rule = random_table_rule(&inc, bound, det, &mut rng);
                rule.validate().unwrap();
                assert_eq!(rule.is_deterministic(), det || rule.is_deterministic());
                assert!(transform_bounded(&mu, &rule).unwrap().is_probability());
            }
        }
    }
}
