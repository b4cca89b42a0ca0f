//! Finitely supported measures with exact rational weights.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::rational::{self, Rational};

/// Products of support sizes above this are convolved in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// Finitely supported measure. Atoms have strictly positive weight and are
/// iterated in canonical element order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Measure {
    atoms: BTreeMap<GroupElement, Rational>,
    total: Rational,
}

impl Measure {
    pub fn zero() -> Self {
        Measure {
            atoms: BTreeMap::new(),
            total: Rational::zero(),
        }
    }

    pub fn dirac(g: GroupElement) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(g, Rational::one());
        Measure {
            atoms,
            total: Rational::one(),
        }
    }

    /// Builds a measure, summing repeated elements and dropping zeros.
    pub fn from_atoms<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, Rational)>,
    {
        let mut acc: BTreeMap<GroupElement, Rational> = BTreeMap::new();
        for (g, w) in atoms {
            if w.is_negative() {
                return Err(Error::Contract(format!(
                    "negative weight {} at {g}",
                    rational::format(&w)
                )));
            }
            *acc.entry(g).or_insert_with(Rational::zero) += w;
        }
        Ok(Self::from_map(acc))
    }

    fn from_map(mut atoms: BTreeMap<GroupElement, Rational>) -> Self {
        atoms.retain(|_, w| !w.is_zero());
        let total = atoms.values().fold(Rational::zero(), |a, w| a + w);
        Measure { atoms, total }
    }

    pub fn weight(&self, g: &GroupElement) -> Rational {
        self.atoms.get(g).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&GroupElement, &Rational)> {
        self.atoms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.atoms.keys()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> &Rational {
        &self.total
    }

    pub fn is_probability(&self) -> bool {
        self.total.is_one()
    }

    pub fn require_probability(&self, what: &str) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{what} must be a probability measure, total mass is {}",
                rational::format(&self.total)
            )))
        }
    }

    /// Identity of the ambient structure, inferred from any atom.
    pub fn identity(&self) -> Result<GroupElement> {
        self.atoms
            .keys()
            .next()
            .map(GroupElement::identity_like)
            .ok_or_else(|| Error::Contract("zero measure has no ambient identity".into()))
    }

    /// `(mu * nu)(g) = sum over h k = g of mu(h) nu(k)`.
    pub fn convolve(&self, other: &Measure) -> Result<Measure> {
        let left: Vec<_> = self.atoms.iter().collect();
        let right: Vec<_> = other.atoms.iter().collect();
        // Outer loop over the smaller support; the product order is fixed.
        let outer_is_left = left.len() <= right.len();
        let (outer, inner) = if outer_is_left {
            (&left, &right)
        } else {
            (&right, &left)
        };
        let pair = |o: &(&GroupElement, &Rational), i: &(&GroupElement, &Rational)| {
            let g = if outer_is_left {
                o.0.compose(i.0)
            } else {
                i.0.compose(o.0)
            }?;
            Ok::<_, Error>((g, o.1 * i.1))
        };
        let fold_chunk =
            |chunk: &[(&GroupElement, &Rational)]| -> Result<HashMap<GroupElement, Rational>> {
                let mut acc: HashMap<GroupElement, Rational> = HashMap::new();
                for o in chunk {
                    for i in inner.iter() {
                        let (g, w) = pair(o, i)?;
                        *acc.entry(g).or_insert_with(Rational::zero) += w;
                    }
                }
                Ok(acc)
            };
        let merged = if outer.len() * inner.len() >= PARALLEL_THRESHOLD && outer.len() > 1 {
            let chunk = outer
                .len()
                .div_ceil(rayon::current_num_threads().max(1) * 4)
                .max(1);
            let parts: Vec<_> = outer
                .par_chunks(chunk)
                .map(fold_chunk)
                .collect::<Result<Vec<_>>>()?;
            let mut acc: BTreeMap<GroupElement, Rational> = BTreeMap::new();
            for part in parts {
                for (g, w) in part {
                    *acc.entry(g).or_insert_with(Rational::zero) += w;
                }
            }
            acc
        } else {
            fold_chunk(outer)?.into_iter().collect()
        };
        Ok(Measure::from_map(merged))
    }

    /// `mu^{*n}`, with `mu^{*0} = delta_e`.
    pub fn power(&self, n: usize) -> Result<Measure> {
        let mut acc = Measure::dirac(self.identity()?);
        for _ in 0..n {
            acc = acc.convolve(self)?;
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &Rational) -> Measure {
        Measure::from_map(self.atoms.iter().map(|(g, w)| (g.clone(), w * c)).collect())
    }

    /// Restriction `beta(g) = mu(g) 1_B(g)`.
    pub fn restrict(&self, inside: impl Fn(&GroupElement) -> bool) -> Measure {
        self.split(inside).0
    }

    /// `(beta, alpha)` with `beta` the restriction to `B` and `alpha = mu - beta`.
    pub fn split(&self, inside: impl Fn(&GroupElement) -> bool) -> (Measure, Measure) {
        let (b, a): (BTreeMap<_, _>, BTreeMap<_, _>) = self
            .atoms
            .iter()
            .map(|(g, w)| (g.clone(), w.clone()))
            .partition(|(g, _)| inside(g));
        (Measure::from_map(b), Measure::from_map(a))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Measure) -> Measure {
        let mut acc = self.atoms.clone();
        for (g, w) in &other.atoms {
            *acc.entry(g.clone()).or_insert_with(Rational::zero) += w;
        }
        Measure::from_map(acc)
    }

    /// Pushforward along a map of elements.
    pub fn map_elements(
        &self,
        f: impl Fn(&GroupElement) -> Result<GroupElement>,
    ) -> Result<Measure> {
        let mut acc: BTreeMap<GroupElement, Rational> = BTreeMap::new();
        for (g, w) in &self.atoms {
            *acc.entry(f(g)?).or_insert_with(Rational::zero) += w;
        }
        Ok(Measure::from_map(acc))
    }

    pub fn to_records(&self) -> Vec<AtomRecord> {
        self.atoms
            .iter()
            .map(|(g, w)| AtomRecord {
                element: g.to_string(),
                weight: rational::format(w),
            })
            .collect()
    }

    pub fn from_records(spec: &GroupSpec, records: &[AtomRecord]) -> Result<Measure> {
        Measure::from_atoms(
            records
                .iter()
                .map(|r| Ok((spec.parse_element(&r.element)?, rational::parse(&r.weight)?)))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// Serialized atom `{element, weight: "p/q"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub element: String,
    pub weight: String,
}

/// Truncation of a probability measure with certified missing mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureDeficit {
    pub measure: Measure,
    pub missing_mass: Rational,
}

impl MeasureDeficit {
    pub fn exact(measure: Measure) -> Self {
        let missing_mass = Rational::one() - measure.total_mass();
        MeasureDeficit {
            measure,
            missing_mass,
        }
    }

    /// `measure.total_mass + missing_mass == 1`.
    pub fn is_consistent(&self) -> bool {
        (self.measure.total_mass() + &self.missing_mass).is_one()
    }
}

/// Convex combination `sum_i w_i mu_i`; weights must sum to exactly 1.
pub fn mix(weights: &[Rational], measures: &[Measure]) -> Result<Measure> {
    let sum = weighted_sum(weights, measures)?;
    let wsum = weights.iter().fold(Rational::zero(), |a, w| a + w);
    if !wsum.is_one() {
        return Err(Error::WeightSum {
            expected: "1".into(),
            actual: rational::format(&wsum),
        });
    }
    Ok(sum)
}

/// Like [`mix`] but allows `sum w_i <= 1` (truncated tails).
pub fn mix_subconvex(weights: &[Rational], measures: &[Measure]) -> Result<Measure> {
    let wsum = weights.iter().fold(Rational::zero(), |a, w| a + w);
    if wsum > Rational::one() {
        return Err(Error::WeightSum {
            expected: "at most 1".into(),
            actual: rational::format(&wsum),
        });
    }
    weighted_sum(weights, measures)
}

fn weighted_sum(weights: &[Rational], measures: &[Measure]) -> Result<Measure> {
    if weights.len() != measures.len() {
        return Err(Error::Contract(format!(
            "{} weights for {} measures",
            weights.len(),
            measures.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(Error::Contract(format!(
            "negative mixture weight {}",
            rational::format(w)
        )));
    }
    let mut acc: BTreeMap<GroupElement, Rational> = BTreeMap::new();
    for (w, m) in weights.iter().zip(measures) {
        for (g, x) in m.atoms() {
            *acc.entry(g.clone()).or_insert_with(Rational::zero) += w * x;
        }
    }
    Ok(Measure::from_map(acc))
}

/// `1/2 sum_g |mu(g) - nu(g)|` over the union of supports.
pub fn total_variation(mu: &Measure, nu: &Measure) -> Rational {
    let mut diff = Rational::zero();
    for (g, w) in mu.atoms() {
        diff += (w - nu.weight(g)).abs();
    }
    for (g, w) in nu.atoms() {
        if !mu.atoms.contains_key(g) {
            diff += w;
        }
    }
    diff / Rational::from_integer(2.into())
}

/// Memoized convolution powers `mu^{*0}, ..., mu^{*n}`.
#[derive(Debug, Clone)]
pub struct PowerTable {
    base: Measure,
    powers: Vec<Measure>,
}

impl PowerTable {
    pub fn new(base: Measure) -> Result<Self> {
        let first = Measure::dirac(base.identity()?);
        Ok(PowerTable {
            base,
            powers: vec![first],
        })
    }

    pub fn get(&mut self, n: usize) -> Result<&Measure> {
        while self.powers.len() <= n {
            let next = self.powers.last().expect("nonempty").convolve(&self.base)?;
            self.powers.push(next);
        }
        Ok(&self.powers[n])
    }
}
