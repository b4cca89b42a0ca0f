//! The free cover `phi: F -> Gamma` of a finitely supported measure: one
//! free generator per atom, evaluated back into the group.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{sym, GroupElement, GroupSpec, Homomorphism, Sym};
use crate::harmonic::{check_harmonic, word_ball, HarmonicFn, HarmonicityReport, SharedFn};
use crate::measure::Measure;
use crate::rational::{self, Rational};
use crate::stopping::StopRule;

/// Default cap on words enumerated by the cover checks.
pub const DEFAULT_WORD_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeCover {
    pub base_measure: Measure,
    pub cover: GroupSpec,
    pub generators: Vec<Sym>,
    pub phi: Homomorphism,
    /// `bold_mu(h_hat) = mu(h)`.
    pub bold_mu: Measure,
}

/// One generator of the cover, as exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverRow {
    pub generator: String,
    pub atom: String,
    pub weight: String,
}

/// Generator label derived from the atom it covers, avoiding the reserved
/// characters of word syntax.
pub fn cover_label(h: &GroupElement) -> String {
    let body = match h {
        GroupElement::Lattice(v) => v.iter().map(i64::to_string).collect::<Vec<_>>().join(";"),
        GroupElement::Word(w) if w.is_empty() => "e".into(),
        GroupElement::Word(w) => w
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("_"),
        GroupElement::Reduced(w) if w.is_empty() => "e".into(),
        GroupElement::Reduced(w) => w
            .iter()
            .map(|l| {
                if l.inverse {
                    format!("{}'", l.sym)
                } else {
                    l.sym.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("_"),
    };
    format!("[{body}]")
}

/// One fresh generator per atom of `mu`.
pub fn build_cover(mu: &Measure) -> Result<FreeCover> {
    let identity = mu.identity()?;
    let mut images = BTreeMap::new();
    let mut generators = Vec::with_capacity(mu.len());
    let mut atoms = Vec::with_capacity(mu.len());
    for (h, w) in mu.atoms() {
        let label = sym(&cover_label(h));
        if images.insert(label.clone(), h.clone()).is_some() {
            return Err(Error::Inconsistency(format!(
                "cover label {label} is not unique"
            )));
        }
        generators.push(label.clone());
        atoms.push((GroupElement::Word(vec![label]), w.clone()));
    }
    let cover = GroupSpec::FreeSemigroup {
        generators: crate::group::Generators::Finite(generators.clone()),
    };
    cover.validate()?;
    Ok(FreeCover {
        base_measure: mu.clone(),
        cover,
        generators,
        phi: Homomorphism::new(images, identity),
        bold_mu: Measure::from_atoms(atoms)?,
    })
}

impl FreeCover {
    pub fn image(&self, w: &GroupElement) -> Result<GroupElement> {
        self.phi.evaluate_element(w)
    }

    pub fn export(&self) -> Vec<CoverRow> {
        self.generators
            .iter()
            .map(|g| {
                let atom = &self.phi.images[g];
                CoverRow {
                    generator: g.to_string(),
                    atom: atom.to_string(),
                    weight: rational::format(&self.base_measure.weight(atom)),
                }
            })
            .collect()
    }

    /// All cover words of length at most `depth`, shortest first.
    pub fn words(&self, depth: usize) -> Result<Vec<GroupElement>> {
        let n = self.generators.len();
        let count: usize = (0..=depth).map(|k| n.saturating_pow(k as u32)).sum();
        if count > DEFAULT_WORD_BUDGET {
            return Err(Error::Budget {
                budget: DEFAULT_WORD_BUDGET as u64,
                depth_reached: depth,
            });
        }
        Ok(word_ball(&self.generators, depth))
    }
}

/// `(phi_* nu)(g) = sum of nu(w) over words w with phi(w) = g`.
pub fn pushforward(cover: &FreeCover, nu: &Measure) -> Result<Measure> {
    nu.map_elements(|w| cover.image(w))
}

/// `f_hat = f ∘ phi`.
pub struct Lifted {
    phi: Homomorphism,
    pub f: SharedFn,
}

impl HarmonicFn for Lifted {
    fn eval(&self, w: &GroupElement) -> Result<Rational> {
        self.f.eval(&self.phi.evaluate_element(w)?)
    }

    fn describe(&self) -> String {
        format!("lift of ({})", self.f.describe())
    }
}

pub fn lift_fn(cover: &FreeCover, f: SharedFn) -> Lifted {
    Lifted {
        phi: cover.phi.clone(),
        f,
    }
}

/// `f` on the group recovered from a function on the cover, by evaluating
/// at a chosen preimage (shortest, then least) within `depth`.
pub fn restrict_fn(cover: &FreeCover, fhat: SharedFn, depth: usize) -> Result<SharedFn> {
    let mut table = BTreeMap::new();
    for w in cover.words(depth)? {
        let g = cover.image(&w)?;
        if let std::collections::btree_map::Entry::Vacant(e) = table.entry(g) {
            e.insert(fhat.eval(&w)?);
        }
    }
    Ok(Arc::new(crate::harmonic::Table {
        values: table,
        default: Rational::from_integer(0.into()),
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub depth: usize,
    pub words: usize,
    pub classes: usize,
    /// Two words with equal images and different values.
    pub witness: Option<(GroupElement, GroupElement, GroupElement)>,
}

impl InvarianceReport {
    pub fn passes(&self) -> bool {
        self.witness.is_none()
    }
}

/// Whether `fhat` is constant on every fiber of `phi` among words up to `depth`.
pub fn check_phi_invariant(
    cover: &FreeCover,
    fhat: &dyn HarmonicFn,
    depth: usize,
) -> Result<InvarianceReport> {
    let words = cover.words(depth)?;
    let mut seen: BTreeMap<GroupElement, (GroupElement, Rational)> = BTreeMap::new();
    let mut witness = None;
    for w in &words {
        let g = cover.image(w)?;
        let v = fhat.eval(w)?;
        match seen.get(&g) {
            Some((first, fv)) => {
                if *fv != v && witness.is_none() {
                    witness = Some((first.clone(), w.clone(), g));
                }
            }
            None => {
                seen.insert(g, (w.clone(), v));
            }
        }
    }
    Ok(InvarianceReport {
        depth,
        words: words.len(),
        classes: seen.len(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferReport {
    pub base: HarmonicityReport,
    pub lifted: HarmonicityReport,
    /// Window elements with no preimage of length at most the depth.
    pub uncovered: Vec<GroupElement>,
    /// Failures on the group and on the cover agree under `phi`.
    pub correspond: bool,
}

/// Checks `f` for `mu` on a group window and `f ∘ phi` for `bold_mu` on
/// every preimage word of length at most `depth`.
pub fn transfer_harmonicity(
    cover: &FreeCover,
    f: SharedFn,
    window: &[GroupElement],
    depth: usize,
) -> Result<TransferReport> {
    let base = check_harmonic(&cover.base_measure, f.as_ref(), window)?;
    let in_window: BTreeSet<&GroupElement> = window.iter().collect();
    let mut preimages = Vec::new();
    let mut images = Vec::new();
    for w in cover.words(depth)? {
        let g = cover.image(&w)?;
        if in_window.contains(&g) {
            preimages.push(w);
            images.push(g);
        }
    }
    let fhat = lift_fn(cover, f);
    let lifted = check_harmonic(&cover.bold_mu, &fhat, &preimages)?;

    let covered: BTreeSet<&GroupElement> = images.iter().collect();
    let uncovered: Vec<GroupElement> = window
        .iter()
        .filter(|g| !covered.contains(g))
        .cloned()
        .collect();
    let base_fail: BTreeMap<&GroupElement, _> = base
        .failures
        .iter()
        .map(|x| (&x.element, (&x.pf, &x.f)))
        .collect();
    let lifted_fail: BTreeMap<&GroupElement, _> = lifted
        .failures
        .iter()
        .map(|x| (&x.element, (&x.pf, &x.f)))
        .collect();
    let mut correspond = true;
    for (w, g) in preimages.iter().zip(&images) {
        if base_fail.get(g) != lifted_fail.get(w) {
            correspond = false;
        }
    }
    Ok(TransferReport {
        base,
        lifted,
        uncovered,
        correspond,
    })
}

/// A rule on group increments applied to the images of cover increments.
#[derive(Debug)]
pub struct LiftedRule<R> {
    phi: Homomorphism,
    pub rule: R,
}

pub fn lift_rule<R: StopRule>(cover: &FreeCover, rule: R) -> LiftedRule<R> {
    LiftedRule {
        phi: cover.phi.clone(),
        rule,
    }
}

impl<R: StopRule> LiftedRule<R> {
    fn images(&self, prefix: &[GroupElement]) -> Vec<GroupElement> {
        prefix
            .iter()
            .map(|w| {
                self.phi
                    .evaluate_element(w)
                    .expect("cover increments are single generators of the cover")
            })
            .collect()
    }
}

impl<R: StopRule> StopRule for LiftedRule<R> {
    fn bound(&self) -> usize {
        self.rule.bound()
    }

    fn stop_prob(&self, prefix: &[GroupElement]) -> Rational {
        self.rule.stop_prob(&self.images(prefix))
    }

    fn stop_at(&self, prefix: &[GroupElement]) -> Rational {
        self.rule.stop_at(&self.images(prefix))
    }

    fn describe(&self) -> String {
        format!("lift of ({})", self.rule.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{lattice_ball, Affine, Constant, LatticeExponential, Perturbed};
    use crate::measure::tests::z3_example;
    use crate::rational::{int, ratio};
    use crate::stopping::{random_table_rule, transform_bounded, StoppingRule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(n: i64) -> GroupElement {
        GroupElement::lattice(&[n])
    }

    fn simple_z() -> Measure {
        Measure::from_atoms([(z(1), ratio(1, 2)), (z(-1), ratio(1, 2))]).unwrap()
    }

    fn cw(cover: &FreeCover, labels: &[&str]) -> GroupElement {
        cover.cover.parse_element(&labels.join("·")).unwrap()
    }

    #[test]
    fn cover_shapes() {
        let c = build_cover(&Measure::dirac(z(1))).unwrap();
        assert_eq!(c.generators.len(), 1);
        let c = build_cover(&simple_z()).unwrap();
        assert_eq!(c.image(&cw(&c, &["[1]"])).unwrap(), z(1));
        assert_eq!(c.image(&cw(&c, &["[-1]"])).unwrap(), z(-1));
        assert_eq!(build_cover(&z3_example()).unwrap().generators.len(), 6);
        let rows = c.export();
        assert_eq!(rows[0].weight, "1/2");
        assert_eq!(rows[0].generator, "[-1]");
    }

    #[test]
    fn free_group_labels() {
        let spec = GroupSpec::free_group(&["a", "b"]);
        let mu = Measure::from_atoms([
            (spec.parse_element("a").unwrap(), ratio(1, 2)),
            (spec.parse_element("a^-1·b").unwrap(), ratio(1, 2)),
        ])
        .unwrap();
        let c = build_cover(&mu).unwrap();
        assert_eq!(c.generators, vec![sym("[a]"), sym("[a'_b]")]);
    }

    #[test]
    fn pushforward_examples() {
        let mu = simple_z();
        let c = build_cover(&mu).unwrap();
        assert_eq!(pushforward(&c, &c.bold_mu).unwrap(), mu);
        assert_eq!(
            pushforward(&c, &c.bold_mu.power(2).unwrap()).unwrap(),
            mu.power(2).unwrap()
        );
        let q = ratio(1, 4);
        let nu = Measure::from_atoms([
            (cw(&c, &["[1]", "[-1]"]), q.clone()),
            (cw(&c, &["[-1]", "[1]"]), q.clone()),
            (cw(&c, &["[1]", "[1]"]), q.clone()),
            (cw(&c, &["[-1]", "[-1]"]), q.clone()),
        ])
        .unwrap();
        let want =
            Measure::from_atoms([(z(2), q.clone()), (z(0), ratio(1, 2)), (z(-2), q)]).unwrap();
        assert_eq!(pushforward(&c, &nu).unwrap(), want);
    }

    #[test]
    fn lifted_functions() {
        let c = build_cover(&simple_z()).unwrap();
        let f = lift_fn(&c, Arc::new(LatticeExponential { base: vec![int(2)] }));
        assert_eq!(
            f.eval(&cw(&c, &["[1]", "[-1]", "[-1]"])).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(
            f.eval(&cw(&c, &["[1]", "[-1]"])).unwrap(),
            f.eval(&cw(&c, &["[-1]", "[1]"])).unwrap()
        );
        assert!(check_phi_invariant(&c, &f, 4).unwrap().passes());
        let one = lift_fn(&c, Arc::new(Constant(int(1))));
        assert_eq!(one.eval(&cw(&c, &["[1]"])).unwrap(), int(1));
    }

    #[test]
    fn length_is_not_invariant() {
        let c = build_cover(&simple_z()).unwrap();
        let len =
            crate::harmonic::from_fn("word length", |w: &GroupElement| Ok(int(w.length() as i64)));
        let r = check_phi_invariant(&c, len.as_ref(), 2).unwrap();
        let (a, b, g) = r.witness.unwrap();
        assert_eq!(g, z(0));
        assert!(a.is_identity());
        assert_eq!(b.length(), 2);

        let single = build_cover(&Measure::dirac(z(1))).unwrap();
        assert!(check_phi_invariant(&single, len.as_ref(), 5)
            .unwrap()
            .passes());
    }

    #[test]
    fn round_trip() {
        let c = build_cover(&z3_example()).unwrap();
        let f: SharedFn = Arc::new(LatticeExponential {
            base: vec![int(1), int(3), int(1)],
        });
        let lifted: SharedFn = Arc::new(lift_fn(&c, f.clone()));
        let back = restrict_fn(&c, lifted.clone(), 2).unwrap();
        for g in lattice_ball(3, 2) {
            assert_eq!(back.eval(&g).unwrap(), f.eval(&g).unwrap());
        }
        let again = lift_fn(&c, back);
        for w in c.words(2).unwrap() {
            assert_eq!(again.eval(&w).unwrap(), lifted.eval(&w).unwrap());
        }
    }

    #[test]
    fn transfer_examples() {
        let c = build_cover(&simple_z()).unwrap();
        let window: Vec<_> = (-3..=3).map(z).collect();
        let r = transfer_harmonicity(&c, Arc::new(Constant(int(1))), &window, 4).unwrap();
        assert!(r.base.is_harmonic() && r.lifted.is_harmonic() && r.correspond);

        let affine: SharedFn = Arc::new(Affine {
            coeffs: vec![int(1)],
            constant: int(1),
        });
        let r = transfer_harmonicity(&c, affine.clone(), &window, 4).unwrap();
        assert!(r.base.is_harmonic() && r.lifted.is_harmonic() && r.correspond);

        let bent: SharedFn = Arc::new(Perturbed {
            base: affine,
            at: z(1),
            delta: int(1),
        });
        let r = transfer_harmonicity(&c, bent, &window, 4).unwrap();
        let flagged: BTreeSet<_> = r.base.failures.iter().map(|x| x.element.clone()).collect();
        assert_eq!(flagged, [z(0), z(1), z(2)].into());
        let lifted_images: BTreeSet<_> = r
            .lifted
            .failures
            .iter()
            .map(|x| c.image(&x.element).unwrap())
            .collect();
        assert_eq!(lifted_images, flagged);
        assert!(r.correspond);
    }

    #[test]
    fn pushforward_is_multiplicative() {
        let c = build_cover(&z3_example()).unwrap();
        let nu1 = c.bold_mu.power(2).unwrap();
        let nu2 = Measure::from_atoms(
            c.words(1)
                .unwrap()
                .into_iter()
                .skip(1)
                .map(|w| (w, ratio(1, 6))),
        )
        .unwrap();
        let lhs = pushforward(&c, &nu1.convolve(&nu2).unwrap()).unwrap();
        let rhs = pushforward(&c, &nu1)
            .unwrap()
            .convolve(&pushforward(&c, &nu2).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn stopping_commutes_with_pushforward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mu in [simple_z(), z3_example()] {
            let c = build_cover(&mu).unwrap();
            let inc: Vec<_> = mu.support().cloned().collect();
            for bound in 1..=3 {
                let rule = random_table_rule(&inc, bound, false, &mut rng);
                let down = transform_bounded(&mu, &rule).unwrap();
                let up = transform_bounded(&c.bold_mu, &lift_rule(&c, rule.clone())).unwrap();
                assert_eq!(pushforward(&c, &up).unwrap(), down);
            }
            let hit = StoppingRule::min_hit([inc[0].clone()], 3);
            let up = transform_bounded(&c.bold_mu, &lift_rule(&c, hit.clone())).unwrap();
            assert_eq!(
                pushforward(&c, &up).unwrap(),
                transform_bounded(&mu, &hit).unwrap()
            );
        }
    }
}
