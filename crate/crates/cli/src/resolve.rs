//! Turns configuration values into core objects.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use transwalk::group::{sym, Generators, GroupElement, GroupSpec, InfiniteWord};
use transwalk::harmonic::{
    lattice_ball, minimal_witness, prefix_window, reduced_ball, word_ball, Affine, Constant,
    GeodesicPower, LatticeExponential, Perturbed, SharedFn, Table,
};
use transwalk::kernel::BoundarySequence;
use transwalk::measure::{Measure, MeasureDeficit};
use transwalk::rational::{self, Rational};
use transwalk::stopping::{
    transform_bounded_with_budget, transform_hitting, transform_mixture, HittingRule, MixtureRule,
    PrefixTable, RuleComponent, StoppingRule, DEFAULT_BUDGET,
};

use crate::config::*;
use crate::error::{CliError, CliResult};

pub fn group(c: &GroupConfig) -> CliResult<GroupSpec> {
    let spec = match c {
        GroupConfig::IntegerLattice { dim } => GroupSpec::lattice(*dim),
        GroupConfig::FreeSemigroup {
            generators,
            indexed,
        } => match (generators, indexed) {
            (Some(g), None) => GroupSpec::FreeSemigroup {
                generators: Generators::Finite(g.iter().map(|s| sym(s)).collect()),
            },
            (None, Some(p)) => GroupSpec::FreeSemigroup {
                generators: Generators::Indexed { indexed: p.clone() },
            },
            _ => {
                return Err(CliError::Config(
                    "free-semigroup needs exactly one of `generators` or `indexed`".into(),
                ))
            }
        },
        GroupConfig::FreeGroup { generators } => GroupSpec::FreeGroup {
            generators: generators.iter().map(|s| sym(s)).collect(),
        },
    };
    spec.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

pub fn element(spec: &GroupSpec, s: &str) -> CliResult<GroupElement> {
    spec.parse_element(s)
        .map_err(|e| CliError::Config(format!("element `{s}`: {e}")))
}

pub fn elements(spec: &GroupSpec, list: &[String]) -> CliResult<Vec<GroupElement>> {
    list.iter().map(|s| element(spec, s)).collect()
}

pub fn rat(s: &str) -> CliResult<Rational> {
    rational::parse(s).map_err(|e| CliError::Config(e.to_string()))
}

pub fn rats(list: &[String]) -> CliResult<Vec<Rational>> {
    list.iter().map(|s| rat(s)).collect()
}

pub fn measure(spec: &GroupSpec, c: &MeasureConfig) -> CliResult<Measure> {
    let atoms = c
        .atoms
        .iter()
        .map(|a| Ok((element(spec, &a.element)?, rat(&a.weight)?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Measure::from_atoms(atoms)?)
}

pub fn required_measure(spec: &GroupSpec, c: &Config) -> CliResult<Measure> {
    let m = c
        .measure
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [measure]".into()))?;
    measure(spec, m)
}

/// A stopping rule in the most specific form that can be transformed.
#[derive(Debug, Clone)]
pub enum Rule {
    Bounded(StoppingRule),
    Hitting(HittingRule),
    Mixture(MixtureRule),
}

impl Rule {
    pub fn transform(&self, mu: &Measure, budget: u64) -> CliResult<MeasureDeficit> {
        Ok(match self {
            Rule::Bounded(r) => {
                MeasureDeficit::exact(transform_bounded_with_budget(mu, r, budget)?)
            }
            Rule::Hitting(h) => transform_hitting(mu, h)?,
            Rule::Mixture(m) => transform_mixture(mu, m)?,
        })
    }

    pub fn bounded(&self) -> CliResult<&StoppingRule> {
        match self {
            Rule::Bounded(r) => Ok(r),
            _ => Err(CliError::Config(
                "this operation needs a bounded rule".into(),
            )),
        }
    }

    pub fn describe(&self) -> String {
        use transwalk::stopping::StopRule;
        match self {
            Rule::Bounded(r) => r.describe(),
            Rule::Hitting(h) => format!(
                "first increment in a set of {} (depth {})",
                h.target.len(),
                h.depth
            ),
            Rule::Mixture(m) => format!("mixture of {} components", m.components.len()),
        }
    }
}

fn target_set(spec: &GroupSpec, t: &[String]) -> CliResult<BTreeSet<GroupElement>> {
    t.iter().map(|s| element(spec, s)).collect()
}

fn bounded(spec: &GroupSpec, c: &RuleConfig) -> CliResult<StoppingRule> {
    match rule(spec, c)? {
        Rule::Bounded(r) => Ok(r),
        _ => Err(CliError::Config(
            "hitting rules can only appear at the top level or directly in a mixture".into(),
        )),
    }
}

pub fn rule(spec: &GroupSpec, c: &RuleConfig) -> CliResult<Rule> {
    let r = match c {
        RuleConfig::Constant { k } => Rule::Bounded(StoppingRule::Constant(*k)),
        RuleConfig::MinHit { target, cap } => Rule::Bounded(StoppingRule::MinHit {
            target: target_set(spec, target)?,
            cap: *cap,
        }),
        RuleConfig::Hitting { target, depth } => Rule::Hitting(HittingRule {
            target: target_set(spec, target)?,
            depth: *depth,
        }),
        RuleConfig::Table {
            bound,
            default,
            entries,
        } => {
            let mut map = BTreeMap::new();
            for e in entries {
                map.insert(elements(spec, &e.prefix)?, rat(&e.stop)?);
            }
            Rule::Bounded(StoppingRule::Table(PrefixTable {
                bound: *bound,
                default: rat(default)?,
                entries: map,
            }))
        }
        RuleConfig::Composed { first, second } => Rule::Bounded(StoppingRule::composed(
            bounded(spec, first)?,
            bounded(spec, second)?,
        )),
        RuleConfig::Mixture { components } => {
            let parts = components
                .iter()
                .map(|w| Ok((rat(&w.weight)?, rule(spec, &w.rule)?)))
                .collect::<CliResult<Vec<_>>>()?;
            if parts.iter().all(|(_, r)| matches!(r, Rule::Bounded(_))) {
                Rule::Bounded(StoppingRule::Mixture(
                    parts
                        .into_iter()
                        .map(|(w, r)| match r {
                            Rule::Bounded(b) => (w, b),
                            _ => unreachable!(),
                        })
                        .collect(),
                ))
            } else {
                let components = parts
                    .into_iter()
                    .map(|(w, r)| match r {
                        Rule::Bounded(b) => Ok((w, RuleComponent::Bounded(b))),
                        Rule::Hitting(h) => Ok((w, RuleComponent::Hitting(h))),
                        Rule::Mixture(_) => Err(CliError::Config(
                            "nested mixtures with hitting rules".into(),
                        )),
                    })
                    .collect::<CliResult<_>>()?;
                Rule::Mixture(MixtureRule { components })
            }
        }
    };
    if let Rule::Bounded(b) = &r {
        b.validate()?;
    }
    Ok(r)
}

pub fn required_rule(spec: &GroupSpec, c: &Config) -> CliResult<Rule> {
    let r = c
        .rule
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [rule]".into()))?;
    rule(spec, r)
}

pub fn transform_budget(c: &Config) -> u64 {
    c.transform
        .as_ref()
        .and_then(|t| t.budget)
        .unwrap_or(DEFAULT_BUDGET)
}

pub fn infinite_word(c: &InfiniteWordConfig) -> CliResult<InfiniteWord> {
    let w = if c.period.is_empty() {
        InfiniteWord::Explicit {
            known: c.prefix.iter().map(|s| sym(s)).collect(),
        }
    } else {
        InfiniteWord::Periodic {
            prefix: c.prefix.iter().map(|s| sym(s)).collect(),
            period: c.period.iter().map(|s| sym(s)).collect(),
        }
    };
    w.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(w)
}

pub fn function(spec: &GroupSpec, mu: Option<&Measure>, c: &FnConfig) -> CliResult<SharedFn> {
    Ok(match c {
        FnConfig::Constant { value } => Arc::new(Constant(rat(value)?)),
        FnConfig::IndicatorScaled { letter, base } => Arc::new(GeodesicPower {
            letter: sym(letter),
            base: rat(base)?,
        }),
        FnConfig::UG { prefix, period } => {
            let mu = mu.ok_or_else(|| CliError::Config("u-g needs [measure]".into()))?;
            let g = infinite_word(&InfiniteWordConfig {
                prefix: prefix.clone(),
                period: period.clone(),
            })?;
            Arc::new(minimal_witness(mu, &g)?)
        }
        FnConfig::Table { entries, default } => Arc::new(Table {
            values: entries
                .iter()
                .map(|e| Ok((element(spec, &e.element)?, rat(&e.value)?)))
                .collect::<CliResult<_>>()?,
            default: rat(default)?,
        }),
        FnConfig::LatticeExponential { base } => Arc::new(LatticeExponential { base: rats(base)? }),
        FnConfig::Affine { coeffs, constant } => Arc::new(Affine {
            coeffs: rats(coeffs)?,
            constant: rat(constant)?,
        }),
        FnConfig::Perturbed { base, at, delta } => Arc::new(Perturbed {
            base: function(spec, mu, base)?,
            at: element(spec, at)?,
            delta: rat(delta)?,
        }),
    })
}

pub fn window(spec: &GroupSpec, c: &WindowConfig) -> CliResult<Vec<GroupElement>> {
    match c {
        WindowConfig::Ball { radius } => match spec {
            GroupSpec::IntegerLattice { dim } => Ok(lattice_ball(*dim, *radius as u64)),
            GroupSpec::FreeSemigroup {
                generators: Generators::Finite(g),
            } => Ok(word_ball(g, *radius)),
            GroupSpec::FreeGroup { generators } => Ok(reduced_ball(generators, *radius)),
            GroupSpec::FreeSemigroup { .. } => Err(CliError::Config(
                "balls are infinite in infinite rank; use an element list".into(),
            )),
        },
        WindowConfig::Powers { letter, max } => {
            let l = element(spec, letter)?;
            let mut out = vec![spec.identity()];
            for _ in 0..*max {
                let next = out.last().expect("nonempty").compose(&l)?;
                out.push(next);
            }
            Ok(out)
        }
        WindowConfig::Prefixes { word, length } => {
            Ok(prefix_window(&infinite_word(word)?, *length)?)
        }
        WindowConfig::Elements { elements: e } => elements(spec, e),
    }
}

pub fn sequence(spec: &GroupSpec, c: &SequenceConfig) -> CliResult<BoundarySequence> {
    Ok(match c {
        SequenceConfig::Ray { step, from, to } => BoundarySequence::ray(
            &element(spec, step)?,
            *from..=*to,
            &format!("{step}^n, n = {from}..{to}"),
        )?,
        SequenceConfig::Prefixes { word, from, to } => {
            BoundarySequence::prefixes(&infinite_word(word)?, *from..=*to)?
        }
        SequenceConfig::Elements { elements: e } => BoundarySequence {
            points: elements(spec, e)?,
            description: "explicit points".into(),
        },
    })
}
