//! Packaged reproductions. Each pipeline turns its `[scenario]` parameters
//! into named pass/fail checks plus supporting tables.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use transwalk::group::{GroupElement, GroupSpec};
use transwalk::harmonic::{
    build_conditional_chain, check_convex_theorem, check_harmonic, solve_chain_harmonic,
};
use transwalk::kernel::{
    classify_free_sequence, distinct_limit_rows, kernel_grid, kernel_sequence,
    kernel_sequence_float, martin_free, BoundarySequence, Classification, KernelTable,
    KernelTarget,
};
use transwalk::lift::{
    build_cover, check_phi_invariant, lift_fn, lift_rule, pushforward, transfer_harmonicity,
};
use transwalk::measure::Measure;
use transwalk::montecarlo::{estimate_transform, SampleConfig, Stopper, SubgroupHit};
use transwalk::rational::{self, Rational};
use transwalk::stopping::{mu_tau_t, random_table_rule, transform_bounded, StopRule, StoppingRule};

use crate::commands::Context;
use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{rat_pair, Outcome, Table};
use crate::resolve;

/// Pipeline names, in the order they are listed to users.
pub const NAMES: [&str; 6] = [
    "counterexample-semigroup",
    "counterexample-z3",
    "free-boundary",
    "lemma-zplus",
    "lift-invariance",
    "convex-convolutions",
];

pub fn pipeline_name(s: &ScenarioConfig) -> &'static str {
    match s {
        ScenarioConfig::CounterexampleSemigroup { .. } => NAMES[0],
        ScenarioConfig::CounterexampleZ3 { .. } => NAMES[1],
        ScenarioConfig::FreeBoundary { .. } => NAMES[2],
        ScenarioConfig::LemmaZplus { .. } => NAMES[3],
        ScenarioConfig::LiftInvariance { .. } => NAMES[4],
        ScenarioConfig::ConvexConvolutions { .. } => NAMES[5],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn finish(self, extra: serde_json::Value, mut tables: Vec<Table>) -> Outcome {
        let mut t = Table::new("checks", &["check", "pass", "detail"]);
        for c in &self.0 {
            t.push(vec![c.name.clone(), c.pass.to_string(), c.detail.clone()]);
        }
        tables.insert(0, t);
        let passed = self.0.iter().all(|c| c.pass);
        Outcome {
            result: json!({ "passed": passed, "checks": self.0, "details": extra }),
            tables,
            passed,
        }
    }
}

pub fn run(ctx: &Context) -> CliResult<Outcome> {
    let sc = ctx
        .config
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [scenario]".into()))?;
    let spec = resolve::group(&ctx.config.group)?;
    match sc {
        ScenarioConfig::CounterexampleSemigroup {
            function,
            window,
            expected_deficit,
            expected_witness,
            expected_pf,
            expected_f,
        } => {
            let mu = resolve::required_measure(&spec, &ctx.config)?;
            let rule = resolve::required_rule(&spec, &ctx.config)?;
            let md = rule.transform(&mu, resolve::transform_budget(&ctx.config))?;
            let f = resolve::function(&spec, Some(&mu), function)?;
            let window = resolve::window(&spec, window)?;
            let mut checks = Checks::default();
            let want = resolve::rat(expected_deficit)?;
            checks.add(
                "transform deficit",
                md.missing_mass == want,
                format!("missing mass {}", rational::format(&md.missing_mass)),
            );
            let under_mu = check_harmonic(&mu, f.as_ref(), &window)?;
            checks.add(
                "harmonic under mu",
                under_mu.is_harmonic(),
                format!("max defect {}", rational::format(&under_mu.max_defect)),
            );
            let under_tau = check_harmonic(&md.measure, f.as_ref(), &window)?;
            let witness = resolve::element(&spec, expected_witness)?;
            let first = under_tau.failures.first();
            let ok = first.is_some_and(|x| {
                x.element == witness
                    && resolve::rat(expected_pf).is_ok_and(|p| p == x.pf)
                    && resolve::rat(expected_f).is_ok_and(|v| v == x.f)
            });
            let detail = match first {
                Some(x) => format!(
                    "first failure at {}: P f = {} vs f = {}",
                    x.element,
                    rational::format(&x.pf),
                    rational::format(&x.f)
                ),
                None => "no failure".into(),
            };
            checks.add("not harmonic under transform", ok, detail);
            let mut table = Table::new("transform", &["element", "weight", "weight_float"]);
            for (g, w) in md.measure.atoms() {
                let [p, fl] = rat_pair(w);
                table.push(vec![g.to_string(), p, fl]);
            }
            Ok(checks.finish(
                json!({ "rule": rule.describe(), "atoms": md.measure.len() }),
                vec![table],
            ))
        }
        ScenarioConfig::CounterexampleZ3 {
            num_samples,
            step_cap,
            axes,
            max_abort_fraction,
            horizon,
            probes,
            direction,
            mu_range,
            tau_probes,
            tau_range,
            tau_window,
            min_separation,
        } => {
            let mu = resolve::required_measure(&spec, &ctx.config)?;
            let sub = SubgroupHit {
                axes: axes.iter().copied().collect(),
            };
            let cfg = SampleConfig {
                seed: ctx.seed(),
                num_samples: *num_samples,
                step_cap: *step_cap,
            };
            let emp = estimate_transform(&mu, Stopper::Subgroup(&sub), &cfg)?;
            let mut checks = Checks::default();
            let outside = emp.counts.keys().filter(|g| !sub.contains(g)).count();
            checks.add(
                "stopped samples lie in the subgroup",
                outside == 0,
                format!("{outside} atoms outside"),
            );
            let frac = emp.aborted_fraction();
            checks.add(
                "aborted fraction",
                frac < *max_abort_fraction,
                format!(
                    "{} of {} aborted ({frac:.4}), limit {max_abort_fraction}",
                    emp.aborted, emp.num_samples
                ),
            );

            let d = resolve::element(&spec, direction)?;
            let back = d
                .inverse()
                .ok_or_else(|| CliError::Config("direction must be invertible".into()))?;
            let probes = resolve::elements(&spec, probes)?;
            let tol = ctx.tol();
            let ray = |step: &GroupElement, r: &RangeConfig, label: &str| {
                BoundarySequence::ray(step, r.from..=r.to, &format!("{label} n·{step}"))
            };
            let plus = kernel_sequence(&mu, &probes, &ray(&d, mu_range, "+")?, *horizon, tol)?;
            let minus = kernel_sequence(&mu, &probes, &ray(&back, mu_range, "-")?, *horizon, tol)?;
            checks.add(
                "mu kernel stabilizes in both directions",
                plus.all_stabilized() && minus.all_stabilized(),
                format!("+: {:?}, -: {:?}", plus.limit_row(), minus.limit_row()),
            );
            let sep = distinct_limit_rows(&[plus.limit_row(), minus.limit_row()], *min_separation);
            checks.add(
                "directional limits differ",
                sep == 2,
                format!("{sep} distinct rows at relative separation {min_separation}"),
            );

            let steps: Vec<(GroupElement, f64)> = emp
                .frequencies()
                .into_iter()
                .filter(|(g, _)| sub.contains(g))
                .collect();
            let tau_probes = resolve::elements(&spec, tau_probes)?;
            let tplus = kernel_sequence_float(
                &steps,
                &tau_probes,
                &ray(&d, tau_range, "+")?,
                *horizon,
                *tau_window,
                tol,
            )?;
            let tminus = kernel_sequence_float(
                &steps,
                &tau_probes,
                &ray(&back, tau_range, "-")?,
                *horizon,
                *tau_window,
                tol,
            )?;
            let rows = distinct_limit_rows(&[tplus.limit_row(), tminus.limit_row()], tol);
            checks.add(
                "empirical transformed kernel stabilizes to at most two rows",
                tplus.all_stabilized() && tminus.all_stabilized() && rows <= 2,
                format!(
                    "+: {:?}, -: {:?}, {rows} distinct",
                    tplus.limit_row(),
                    tminus.limit_row()
                ),
            );

            let tables = vec![
                kernel_rows("mu_plus", &plus),
                kernel_rows("mu_minus", &minus),
                kernel_rows("tau_plus", &tplus),
                kernel_rows("tau_minus", &tminus),
            ];
            let extra = json!({
                "seed": cfg.seed,
                "stopped": emp.stopped(),
                "aborted": emp.aborted,
                "atoms": emp.counts.len(),
            });
            Ok(checks.finish(extra, tables))
        }
        ScenarioConfig::FreeBoundary {
            word,
            probes,
            range,
        } => {
            let mu = resolve::required_measure(&spec, &ctx.config)?;
            let g = resolve::infinite_word(word)?;
            let probes = resolve::elements(&spec, probes)?;
            let seq = BoundarySequence::prefixes(&g, range.from..=range.to)?;
            let mut checks = Checks::default();
            let mut table = Table::new(
                "kernel",
                &["probe", "point", "closed_form", "series", "limit"],
            );
            let grid = kernel_grid(&mu, &probes, &seq.points, range.to)?;
            for (x, row) in probes.iter().zip(&grid) {
                let limit = martin_free(&mu, x, &KernelTarget::Infinite(g.clone()))?;
                let limit = limit.rational().cloned().expect("closed form");
                let mut agree = true;
                let mut last = None;
                for (y, series) in seq.points.iter().zip(row) {
                    let word = y.as_word().expect("prefix words").clone();
                    let closed = martin_free(&mu, x, &KernelTarget::Finite(word))?;
                    let closed = closed.rational().cloned().expect("closed form");
                    let s = series.rational().cloned().expect("exact series");
                    agree &= s == closed;
                    table.push(vec![
                        x.to_string(),
                        y.to_string(),
                        rational::format(&closed),
                        rational::format(&s),
                        rational::format(&limit),
                    ]);
                    last = Some(closed);
                }
                checks.add(
                    format!("series matches closed form for {x}"),
                    agree,
                    format!("{} points", seq.points.len()),
                );
                checks.add(
                    format!("kernel reaches the boundary value for {x}"),
                    last.as_ref() == Some(&limit),
                    format!("limit {}", rational::format(&limit)),
                );
            }
            let words: Vec<_> = seq
                .points
                .iter()
                .map(|p| p.as_word().expect("words").clone())
                .collect();
            let gens: BTreeSet<_> = match &spec {
                GroupSpec::FreeSemigroup {
                    generators: transwalk::group::Generators::Finite(g),
                } => g.iter().cloned().collect(),
                _ => {
                    return Err(CliError::Config(
                        "free-boundary needs a finite free semigroup".into(),
                    ))
                }
            };
            let class = classify_free_sequence(&words, &gens);
            checks.add(
                "prefixes classify as an increasing common prefix",
                matches!(class, Classification::IncreasingCommonPrefix { .. }),
                format!("{class:?}"),
            );
            Ok(checks.finish(json!({ "word": g.to_string() }), vec![table]))
        }
        ScenarioConfig::LemmaZplus {
            word,
            t_values,
            constant_k,
            random_rules,
            random_t,
            max_bound,
            length,
            terminals,
            interior_end,
        } => {
            let mu = resolve::required_measure(&spec, &ctx.config)?;
            let g = resolve::infinite_word(word)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
            let increments: Vec<GroupElement> = mu.support().cloned().collect();
            let mut chains: Vec<(String, StoppingRule, Rational)> = Vec::new();
            for t in t_values {
                chains.push((
                    format!("constant {constant_k}, t = {t}"),
                    StoppingRule::Constant(*constant_k),
                    resolve::rat(t)?,
                ));
            }
            for i in 0..*random_rules {
                let bound = rng.gen_range(1..=*max_bound);
                let rule = random_table_rule(&increments, bound, false, &mut rng);
                chains.push((
                    format!("random rule {i} (bound {bound}), t = {random_t}"),
                    rule,
                    resolve::rat(random_t)?,
                ));
            }
            let mut checks = Checks::default();
            let mut table = Table::new(
                "bounds",
                &[
                    "chain",
                    "rule",
                    "jump_bound",
                    "lower",
                    "upper",
                    "min",
                    "max",
                    "violations",
                ],
            );
            for (label, rule, t) in &chains {
                let mu_tau = transform_bounded(&mu, rule)?;
                let mtt = mu_tau_t(&mu, &mu_tau, t)?;
                let chain = build_conditional_chain(&mtt, &mu, &g, *length + 1)?;
                let m = chain.jump_bound as i64;
                let lower = rational::pow(t, m);
                let upper = rational::pow(t, -m);
                let mut violations = 0usize;
                let mut lo: Option<Rational> = None;
                let mut hi: Option<Rational> = None;
                for _ in 0..*terminals {
                    let terminal: Vec<Rational> = (0..chain.jump_bound)
                        .map(|_| rational::ratio(rng.gen_range(16..=32), 16))
                        .collect();
                    let sol = solve_chain_harmonic(&chain, *length, &terminal)?;
                    let end = (*interior_end).min(sol.interior_end);
                    for v in &sol.values[..=end] {
                        if *v < lower || *v > upper {
                            violations += 1;
                        }
                        if lo.as_ref().is_none_or(|l| v < l) {
                            lo = Some(v.clone());
                        }
                        if hi.as_ref().is_none_or(|h| v > h) {
                            hi = Some(v.clone());
                        }
                    }
                }
                let lo = lo.unwrap_or_else(rational::one);
                let hi = hi.unwrap_or_else(rational::one);
                checks.add(
                    format!("bounds hold: {label}"),
                    violations == 0,
                    format!(
                        "f in [{}, {}], allowed [{}, {}]",
                        rational::to_f64(&lo),
                        rational::to_f64(&hi),
                        rational::format(&lower),
                        rational::format(&upper)
                    ),
                );
                table.push(vec![
                    label.clone(),
                    rule.describe(),
                    m.to_string(),
                    rational::format(&lower),
                    rational::format(&upper),
                    rational::to_f64(&lo).to_string(),
                    rational::to_f64(&hi).to_string(),
                    violations.to_string(),
                ]);
            }
            Ok(checks.finish(
                json!({ "word": g.to_string(), "chains": chains.len() }),
                vec![table],
            ))
        }
        ScenarioConfig::LiftInvariance { cases } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
            let mut checks = Checks::default();
            for case in cases {
                let (_, mu, f, window) = resolve_case(case)?;
                let cover = build_cover(&mu)?;
                let tr = transfer_harmonicity(&cover, f.clone(), &window, case.depth)?;
                checks.add(
                    format!("{}: defects correspond", case.label),
                    tr.correspond && tr.uncovered.is_empty(),
                    format!(
                        "{} base failures, {} lifted failures, {} uncovered",
                        tr.base.failures.len(),
                        tr.lifted.failures.len(),
                        tr.uncovered.len()
                    ),
                );
                let inv = check_phi_invariant(&cover, &lift_fn(&cover, f), case.depth)?;
                checks.add(
                    format!("{}: lift is constant on fibers", case.label),
                    inv.passes(),
                    format!("{} words in {} classes", inv.words, inv.classes),
                );
                let increments: Vec<GroupElement> = mu.support().cloned().collect();
                let mut bad = 0;
                for _ in 0..case.random_rules {
                    let bound = rng.gen_range(1..=case.max_bound.max(1));
                    let rule = random_table_rule(&increments, bound, false, &mut rng);
                    let down = transform_bounded(&mu, &rule)?;
                    let up = transform_bounded(&cover.bold_mu, &lift_rule(&cover, rule))?;
                    if pushforward(&cover, &up)? != down {
                        bad += 1;
                    }
                }
                checks.add(
                    format!("{}: pushforward commutes with stopping", case.label),
                    bad == 0,
                    format!("{bad} of {} rules disagree", case.random_rules),
                );
            }
            Ok(checks.finish(json!({ "cases": cases.len() }), Vec::new()))
        }
        ScenarioConfig::ConvexConvolutions { cases } => {
            let mut checks = Checks::default();
            for case in cases {
                let (_, mu, f, window) = resolve_case(case)?;
                let a = resolve::rats(&case.weights)?;
                let thetas = (1..=a.len())
                    .map(|i| mu.power(i))
                    .collect::<Result<Vec<Measure>, _>>()?;
                let r = check_convex_theorem(&thetas, &a, f, &window)?;
                checks.add(
                    format!("{}: convolution powers commute", case.label),
                    r.commutation.iter().all(|(ok, _)| *ok),
                    format!("{} pairs", r.commutation.len()),
                );
                checks.add(
                    format!("{}: operators commute on the window", case.label),
                    r.operator_defect == rational::zero(),
                    format!("defect {}", rational::format(&r.operator_defect)),
                );
                checks.add(
                    format!(
                        "{}: harmonic for theta_1 implies harmonic for theta",
                        case.label
                    ),
                    r.inclusion_holds,
                    format!(
                        "premise {}, theta defect {}",
                        r.premise,
                        rational::format(&r.theta_report.max_defect)
                    ),
                );
            }
            Ok(checks.finish(json!({ "cases": cases.len() }), Vec::new()))
        }
    }
}

type ResolvedCase = (
    GroupSpec,
    Measure,
    transwalk::harmonic::SharedFn,
    Vec<GroupElement>,
);

fn resolve_case(case: &CaseConfig) -> CliResult<ResolvedCase> {
    let spec = resolve::group(&case.group)?;
    let mu = resolve::measure(&spec, &case.measure)?;
    let f = resolve::function(&spec, Some(&mu), &case.function)?;
    let window = resolve::window(&spec, &case.window)?;
    Ok((spec, mu, f, window))
}

fn kernel_rows(name: &str, t: &KernelTable) -> Table {
    let mut out = Table::new(name, &["probe", "index", "point", "value", "stabilized"]);
    for row in &t.rows {
        for (i, (p, v)) in t.sequence.points.iter().zip(&row.values).enumerate() {
            out.push(vec![
                row.probe.to_string(),
                i.to_string(),
                p.to_string(),
                v.to_string(),
                row.stabilized.to_string(),
            ]);
        }
    }
    out
}
