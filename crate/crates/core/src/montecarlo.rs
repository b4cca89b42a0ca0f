//! Sampling estimates of transformed measures.
//!
//! Samples are split into fixed-size chunks; chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so results depend only
//! on the seed and configuration, never on the number of worker threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::distributions::{Distribution, Uniform};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{Measure, MeasureDeficit};
use crate::rational::{self, Rational};
use crate::stopping::{HittingRule, StopRule};

/// Trajectories per RNG stream.
pub const CHUNK: u64 = 4096;

/// Default confidence parameter of the comparison band.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub num_samples: u64,
    pub step_cap: u64,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 || self.step_cap == 0 {
            return Err(Error::Contract(
                "num_samples and step_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmpiricalMeasure {
    pub counts: BTreeMap<GroupElement, u64>,
    /// Trajectories that reached the step cap without stopping.
    pub aborted: u64,
    pub num_samples: u64,
}

impl EmpiricalMeasure {
    pub fn stopped(&self) -> u64 {
        self.num_samples - self.aborted
    }

    /// `sum counts + aborted == num_samples`.
    pub fn is_consistent(&self) -> bool {
        self.counts.values().sum::<u64>() + self.aborted == self.num_samples
    }

    pub fn aborted_fraction(&self) -> f64 {
        self.aborted as f64 / self.num_samples as f64
    }

    /// Counts divided by the number of stopped trajectories.
    pub fn normalized(&self) -> Result<Measure> {
        let n = self.stopped();
        if n == 0 {
            return Err(Error::AllAborted(self.num_samples));
        }
        Measure::from_atoms(
            self.counts
                .iter()
                .map(|(g, &c)| (g.clone(), rational::ratio(c as i64, n as i64))),
        )
    }

    /// Normalized frequencies as floats.
    pub fn frequencies(&self) -> Vec<(GroupElement, f64)> {
        let n = self.stopped() as f64;
        self.counts
            .iter()
            .map(|(g, &c)| (g.clone(), c as f64 / n))
            .collect()
    }

    fn merge(mut self, other: EmpiricalMeasure) -> EmpiricalMeasure {
        for (g, c) in other.counts {
            *self.counts.entry(g).or_insert(0) += c;
        }
        self.aborted += other.aborted;
        self.num_samples += other.num_samples;
        self
    }

    /// `element,count` rows in canonical element order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("element,count\n");
        for (g, c) in &self.counts {
            s.push_str(&format!("\"{g}\",{c}\n"));
        }
        s
    }
}

/// Draws support indices of a measure by exact inverse CDF over its
/// canonically ordered atoms.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// Denominator `2^bits`: `bits` random bits index a lookup table.
    Dyadic { bits: u32, table: Vec<u32> },
    /// `thresholds[i]` = numerator of the CDF through atom `i`.
    General {
        uniform: Uniform<u128>,
        thresholds: Vec<u128>,
    },
}

/// Buffered source of random bits.
struct Bits<'a> {
    rng: &'a mut ChaCha8Rng,
    word: u64,
    left: u32,
}

impl<'a> Bits<'a> {
    fn new(rng: &'a mut ChaCha8Rng) -> Self {
        Bits {
            rng,
            word: 0,
            left: 0,
        }
    }

    fn take(&mut self, bits: u32) -> u64 {
        if self.left < bits {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let v = self.word & ((1u64 << bits) - 1);
        self.word >>= bits;
        self.left -= bits;
        v
    }
}

impl IndexSampler {
    pub fn new(mu: &Measure) -> Result<Self> {
        mu.require_probability("mu")?;
        let denom = mu
            .atoms()
            .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
        let numerators: Vec<BigInt> = mu
            .atoms()
            .map(|(_, w)| (w * Rational::from_integer(denom.clone())).to_integer())
            .collect();
        let too_big = || Error::Contract("sampling needs a common denominator below 2^127".into());
        let d = denom.to_u128().ok_or_else(too_big)?;
        if d.is_power_of_two() && d.trailing_zeros() <= 16 {
            let mut table = Vec::with_capacity(d as usize);
            for (i, n) in numerators.iter().enumerate() {
                let n = n.to_usize().expect("bounded by the denominator");
                table.extend(std::iter::repeat_n(i as u32, n));
            }
            return Ok(IndexSampler {
                kind: SamplerKind::Dyadic {
                    bits: d.trailing_zeros().max(1),
                    table: if d == 1 { vec![0, 0] } else { table },
                },
            });
        }
        let mut acc = 0u128;
        let mut thresholds = Vec::with_capacity(numerators.len());
        for n in &numerators {
            acc += n.to_u128().ok_or_else(too_big)?;
            thresholds.push(acc);
        }
        Ok(IndexSampler {
            kind: SamplerKind::General {
                uniform: Uniform::new(0, d),
                thresholds,
            },
        })
    }

    fn draw(&self, bits: &mut Bits<'_>) -> usize {
        match &self.kind {
            SamplerKind::Dyadic { bits: b, table } => table[bits.take(*b) as usize] as usize,
            SamplerKind::General {
                uniform,
                thresholds,
            } => {
                let u = uniform.sample(bits.rng);
                thresholds.partition_point(|&t| t <= u)
            }
        }
    }
}

/// Bernoulli(`p`) decided exactly from 64 random bits: `r / 2^64 < p`.
fn bernoulli(p: &Rational, bits: &mut Bits<'_>) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.is_one() {
        return true;
    }
    let r = BigInt::from(bits.rng.next_u64());
    r * p.denom() < p.numer() << 64
}

fn rng_for_chunk(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// `(x_0 = e, x_1, ..., x_length)`.
pub fn sample_walk(mu: &Measure, length: usize, seed: u64) -> Result<Vec<GroupElement>> {
    let sampler = IndexSampler::new(mu)?;
    let steps: Vec<&GroupElement> = mu.support().collect();
    let mut rng = rng_for_chunk(seed, 0);
    let mut bits = Bits::new(&mut rng);
    let mut out = Vec::with_capacity(length + 1);
    out.push(mu.identity()?);
    for _ in 0..length {
        let h = steps[sampler.draw(&mut bits)];
        let next = out.last().expect("nonempty").compose(h)?;
        out.push(next);
    }
    Ok(out)
}

/// Stops at the first `k >= 1` with `x_k` in the subgroup spanned by the
/// given coordinate axes of `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupHit {
    pub axes: BTreeSet<usize>,
}

impl SubgroupHit {
    pub fn contains(&self, g: &GroupElement) -> bool {
        match g {
            GroupElement::Lattice(v) => v
                .iter()
                .enumerate()
                .all(|(i, &c)| c == 0 || self.axes.contains(&i)),
            _ => false,
        }
    }
}

/// What ends a sampled trajectory.
#[derive(Clone, Copy)]
pub enum Stopper<'a> {
    Rule(&'a dyn StopRule),
    Hitting(&'a HittingRule),
    Subgroup(&'a SubgroupHit),
}

/// Empirical distribution of `x_tau` over `cfg.num_samples` trajectories.
pub fn estimate_transform(
    mu: &Measure,
    stopper: Stopper<'_>,
    cfg: &SampleConfig,
) -> Result<EmpiricalMeasure> {
    cfg.validate()?;
    let sampler = IndexSampler::new(mu)?;
    let steps: Vec<GroupElement> = mu.support().cloned().collect();
    let identity = mu.identity()?;
    let lattice: Option<Vec<Vec<i64>>> = steps
        .iter()
        .map(|g| match g {
            GroupElement::Lattice(v) => Some(v.clone()),
            _ => None,
        })
        .collect();
    let chunks = cfg.num_samples.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Result<EmpiricalMeasure> {
        let n = CHUNK.min(cfg.num_samples - c * CHUNK);
        let mut rng = rng_for_chunk(cfg.seed, c);
        let mut bits = Bits::new(&mut rng);
        let mut counts: HashMap<GroupElement, u64> = HashMap::new();
        let mut aborted = 0;
        for _ in 0..n {
            let end = match (&lattice, stopper) {
                (Some(vecs), Stopper::Hitting(_) | Stopper::Subgroup(_)) => {
                    lattice_trajectory(vecs, &steps, &sampler, stopper, cfg.step_cap, &mut bits)
                }
                _ => generic_trajectory(
                    &steps,
                    &identity,
                    &sampler,
                    stopper,
                    cfg.step_cap,
                    &mut bits,
                )?,
            };
            match end {
                Some(g) => *counts.entry(g).or_insert(0) += 1,
                None => aborted += 1,
            }
        }
        Ok(EmpiricalMeasure {
            counts: counts.into_iter().collect(),
            aborted,
            num_samples: n,
        })
    };
    let parts: Vec<EmpiricalMeasure> = (0..chunks)
        .into_par_iter()
        .map(run_chunk)
        .collect::<Result<_>>()?;
    let total = parts
        .into_iter()
        .fold(EmpiricalMeasure::default(), EmpiricalMeasure::merge);
    if total.stopped() == 0 {
        return Err(Error::AllAborted(total.num_samples));
    }
    Ok(total)
}

fn lattice_trajectory(
    vecs: &[Vec<i64>],
    steps: &[GroupElement],
    sampler: &IndexSampler,
    stopper: Stopper<'_>,
    cap: u64,
    bits: &mut Bits<'_>,
) -> Option<GroupElement> {
    let dim = vecs[0].len();
    let mut pos = vec![0i64; dim];
    match stopper {
        Stopper::Hitting(rule) => {
            let hit: Vec<bool> = steps.iter().map(|g| rule.target.contains(g)).collect();
            for _ in 0..cap {
                let i = sampler.draw(bits);
                pos.iter_mut().zip(&vecs[i]).for_each(|(p, d)| *p += d);
                if hit[i] {
                    return Some(GroupElement::Lattice(pos));
                }
            }
            None
        }
        Stopper::Subgroup(sub) => {
            let free: Vec<usize> = (0..dim).filter(|i| !sub.axes.contains(i)).collect();
            for _ in 0..cap {
                let i = sampler.draw(bits);
                pos.iter_mut().zip(&vecs[i]).for_each(|(p, d)| *p += d);
                if free.iter().all(|&j| pos[j] == 0) {
                    return Some(GroupElement::Lattice(pos));
                }
            }
            None
        }
        Stopper::Rule(_) => unreachable!("bounded rules take the generic path"),
    }
}

fn generic_trajectory(
    steps: &[GroupElement],
    identity: &GroupElement,
    sampler: &IndexSampler,
    stopper: Stopper<'_>,
    cap: u64,
    bits: &mut Bits<'_>,
) -> Result<Option<GroupElement>> {
    let mut pos = identity.clone();
    let mut prefix: Vec<GroupElement> = Vec::new();
    for _ in 0..cap {
        let h = &steps[sampler.draw(bits)];
        pos = pos.compose(h)?;
        let stop = match stopper {
            Stopper::Hitting(rule) => rule.target.contains(h),
            Stopper::Subgroup(sub) => sub.contains(&pos),
            Stopper::Rule(rule) => {
                prefix.push(h.clone());
                bernoulli(&rule.stop_prob(&prefix), bits)
            }
        };
        if stop {
            return Ok(Some(pos));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tv: f64,
    pub band: f64,
    pub delta: f64,
    pub samples: u64,
    pub missing_mass: f64,
    pub pass: bool,
}

/// Band `2 sqrt(ln(2/delta) / (2n)) + missing_mass` for `n` stopped samples.
pub fn confidence_band(n: u64, delta: f64, missing_mass: f64) -> f64 {
    2.0 * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt() + missing_mass
}

/// Total variation between the normalized sample and an exact truncation.
pub fn compare(
    empirical: &EmpiricalMeasure,
    exact: &MeasureDeficit,
    delta: f64,
) -> Result<CompareReport> {
    let emp = empirical.normalized()?;
    let tv = rational::to_f64(&crate::measure::total_variation(&emp, &exact.measure));
    let missing_mass = rational::to_f64(&exact.missing_mass);
    let n = empirical.stopped();
    let band = confidence_band(n, delta, missing_mass);
    Ok(CompareReport {
        tv,
        band,
        delta,
        samples: n,
        missing_mass,
        pass: tv <= band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::measure::tests::z3_example;
    use crate::rational::{int, ratio};
    use crate::stopping::{transform_bounded, transform_hitting, StoppingRule};

    fn w(s: &str) -> GroupElement {
        GroupSpec::free_semigroup(&["a", "b", "c"])
            .parse_element(s)
            .unwrap()
    }

    fn fair() -> Measure {
        Measure::from_atoms([(w("a"), ratio(1, 2)), (w("b"), ratio(1, 2))]).unwrap()
    }

    fn cfg(seed: u64, n: u64) -> SampleConfig {
        SampleConfig {
            seed,
            num_samples: n,
            step_cap: 1000,
        }
    }

    #[test]
    fn walks() {
        assert_eq!(sample_walk(&fair(), 0, 1).unwrap(), vec![w("e")]);
        let d = Measure::dirac(w("a"));
        assert_eq!(
            sample_walk(&d, 3, 1).unwrap(),
            vec![w("e"), w("a"), w("a·a"), w("a·a·a")]
        );
        let a = sample_walk(&fair(), 12, 42).unwrap();
        assert_eq!(a, sample_walk(&fair(), 12, 42).unwrap());
        assert_eq!(a[12].to_string(), "b·a·a·a·a·b·a·b·b·b·a·b");
    }

    #[test]
    fn sampler_frequencies() {
        let mu = Measure::from_atoms([
            (w("a"), ratio(1, 3)),
            (w("b"), ratio(1, 2)),
            (w("c"), ratio(1, 6)),
        ])
        .unwrap();
        let emp = estimate_transform(
            &mu,
            Stopper::Rule(&StoppingRule::Constant(1)),
            &cfg(5, 60_000),
        )
        .unwrap();
        let r = compare(&emp, &MeasureDeficit::exact(mu), DEFAULT_DELTA).unwrap();
        assert!(r.pass && r.tv < 0.01, "{r:?}");
    }

    #[test]
    fn constant_two_within_band() {
        let mu = fair();
        let emp = estimate_transform(
            &mu,
            Stopper::Rule(&StoppingRule::Constant(2)),
            &cfg(9, 100_000),
        )
        .unwrap();
        assert!(emp.is_consistent());
        let good = compare(
            &emp,
            &MeasureDeficit::exact(mu.power(2).unwrap()),
            DEFAULT_DELTA,
        )
        .unwrap();
        assert!(good.pass);
        let bad = compare(&emp, &MeasureDeficit::exact(mu.clone()), DEFAULT_DELTA).unwrap();
        assert!(!bad.pass && (bad.tv - 1.0).abs() < 1e-12);
        let same = compare(
            &emp,
            &MeasureDeficit::exact(emp.normalized().unwrap()),
            DEFAULT_DELTA,
        )
        .unwrap();
        assert_eq!(same.tv, 0.0);
    }

    #[test]
    fn hitting_against_series() {
        let mu = fair();
        let rule = HittingRule::new([w("a")], 40);
        let emp = estimate_transform(&mu, Stopper::Hitting(&rule), &cfg(3, 50_000)).unwrap();
        let exact = transform_hitting(&mu, &HittingRule::new([w("a")], 12)).unwrap();
        assert!(compare(&emp, &exact, DEFAULT_DELTA).unwrap().pass);
    }

    #[test]
    fn randomized_rule_matches_exact() {
        let mu = fair();
        let rule = StoppingRule::Mixture(vec![
            (ratio(1, 3), StoppingRule::Constant(1)),
            (ratio(2, 3), StoppingRule::min_hit([w("b")], 3)),
        ]);
        let exact = transform_bounded(&mu, &rule).unwrap();
        let emp = estimate_transform(&mu, Stopper::Rule(&rule), &cfg(17, 50_000)).unwrap();
        assert!(
            compare(&emp, &MeasureDeficit::exact(exact), DEFAULT_DELTA)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn determinism_and_thread_independence() {
        let mu = z3_example();
        let sub = SubgroupHit { axes: [1].into() };
        let c = SampleConfig {
            seed: 1,
            num_samples: 10_000,
            step_cap: 500,
        };
        let a = estimate_transform(&mu, Stopper::Subgroup(&sub), &c).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| estimate_transform(&mu, Stopper::Subgroup(&sub), &c).unwrap());
        assert_eq!(a, b);
        assert!(a.is_consistent());
        assert!(a.counts.keys().all(|g| sub.contains(g)));
    }

    #[test]
    fn lattice_and_generic_paths_agree() {
        let mu = z3_example();
        let rule = HittingRule::new([GroupElement::lattice(&[0, 1, 0])], 1);
        let c = SampleConfig {
            seed: 4,
            num_samples: 3000,
            step_cap: 50,
        };
        let fast = estimate_transform(&mu, Stopper::Hitting(&rule), &c).unwrap();
        // Same streams through the element-by-element loop.
        let sampler = IndexSampler::new(&mu).unwrap();
        let steps: Vec<_> = mu.support().cloned().collect();
        let mut slow = EmpiricalMeasure::default();
        for ch in 0..c.num_samples.div_ceil(CHUNK) {
            let mut rng = rng_for_chunk(c.seed, ch);
            let mut bits = Bits::new(&mut rng);
            for _ in 0..CHUNK.min(c.num_samples - ch * CHUNK) {
                let end = generic_trajectory(
                    &steps,
                    &GroupElement::lattice(&[0, 0, 0]),
                    &sampler,
                    Stopper::Hitting(&rule),
                    c.step_cap,
                    &mut bits,
                )
                .unwrap();
                slow.num_samples += 1;
                match end {
                    Some(g) => *slow.counts.entry(g).or_insert(0) += 1,
                    None => slow.aborted += 1,
                }
            }
        }
        assert_eq!(fast, slow);
    }

    #[test]
    fn all_aborted_is_an_error() {
        let mu = fair();
        let rule = HittingRule::new([w("c")], 1);
        let c = SampleConfig {
            seed: 0,
            num_samples: 10,
            step_cap: 5,
        };
        assert!(matches!(
            estimate_transform(&mu, Stopper::Hitting(&rule), &c),
            Err(Error::AllAborted(10))
        ));
    }

    #[test]
    fn general_sampler_denominators() {
        let mu = Measure::from_atoms([(w("a"), ratio(2, 7)), (w("b"), ratio(5, 7))]).unwrap();
        let emp = estimate_transform(
            &mu,
            Stopper::Rule(&StoppingRule::Constant(1)),
            &cfg(2, 40_000),
        )
        .unwrap();
        let freq = emp.counts[&w("a")] as f64 / 40_000.0;
        assert!((freq - 2.0 / 7.0).abs() < 0.01);
        let single = Measure::dirac(w("c"));
        let emp = estimate_transform(
            &single,
            Stopper::Rule(&StoppingRule::Constant(2)),
            &cfg(2, 10),
        )
        .unwrap();
        assert_eq!(emp.counts[&w("c·c")], 10);
        assert_eq!(emp.to_csv(), "element,count\n\"c·c\",10\n");
    }

    #[test]
    fn bernoulli_edges() {
        let mut rng = rng_for_chunk(0, 0);
        let mut bits = Bits::new(&mut rng);
        assert!(!bernoulli(&int(0), &mut bits));
        assert!(bernoulli(&int(1), &mut bits));
        let hits = (0..20_000)
            .filter(|_| bernoulli(&ratio(1, 4), &mut bits))
            .count();
        assert!((hits as f64 / 20_000.0 - 0.25).abs() < 0.02);
    }
}
