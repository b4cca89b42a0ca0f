//! Thin wrappers from a resolved config to module calls.

use std::collections::BTreeSet;

use serde_json::{json, Value};
use transwalk::group::GroupSpec;
use transwalk::harmonic::{check_harmonic, HarmonicityReport};
use transwalk::kernel::{
    green_free, kernel_grid, kernel_sequence, martin_free, KernelTarget, DEFAULT_STABILITY_TOL,
};
use transwalk::lift::{
    build_cover, check_phi_invariant, lift_fn, lift_rule, pushforward, transfer_harmonicity,
};
use transwalk::measure::{Measure, MeasureDeficit};
use transwalk::montecarlo::{
    compare, estimate_transform, SampleConfig, Stopper, SubgroupHit, DEFAULT_DELTA,
};
use transwalk::rational;
use transwalk::stopping::{
    iterate_transform_with_budget, mu_tau_t_deficit, transform_bounded_with_budget,
};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{rat_json, rat_pair, Outcome, Table};
use crate::resolve::{self, Rule};

/// A config with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Config,
}

impl Context {
    pub fn new(mut config: Config, seed: Option<u64>, tol: Option<f64>) -> CliResult<Self> {
        if seed.is_some() {
            config.seed = seed;
        }
        if tol.is_some() {
            config.tol = tol;
        }
        if let Some(t) = config.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Config(format!("tol must lie in (0, 1), got {t}")));
            }
        }
        Ok(Context { config })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.config.tol.unwrap_or(DEFAULT_STABILITY_TOL)
    }

    fn spec(&self) -> CliResult<GroupSpec> {
        resolve::group(&self.config.group)
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        s.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}]")))
    }
}

fn measure_table(name: &str, m: &Measure) -> Table {
    let mut t = Table::new(name, &["element", "weight", "weight_float"]);
    for (g, w) in m.atoms() {
        let [p, f] = rat_pair(w);
        t.push(vec![g.to_string(), p, f]);
    }
    t
}

fn deficit_json(md: &MeasureDeficit) -> Value {
    json!({
        "atoms": md.measure.len(),
        "total_mass": rat_json(md.measure.total_mass()),
        "missing_mass": rat_json(&md.missing_mass),
    })
}

fn harmonic_json(r: &HarmonicityReport) -> Value {
    json!({
        "harmonic": r.is_harmonic(),
        "window_size": r.window.len(),
        "failures": r.failures.len(),
        "max_defect": rat_json(&r.max_defect),
        "first_failure": r.failures.first().map(|x| json!({
            "element": x.element.to_string(),
            "pf": rational::format(&x.pf),
            "f": rational::format(&x.f),
        })),
    })
}

fn failure_table(name: &str, r: &HarmonicityReport) -> Table {
    let mut t = Table::new(name, &["element", "pf", "pf_float", "f", "f_float"]);
    for x in &r.failures {
        let [a, b] = rat_pair(&x.pf);
        let [c, d] = rat_pair(&x.f);
        t.push(vec![x.element.to_string(), a, b, c, d]);
    }
    t
}

/// `mu_tau` (or its truncation) for the configured rule.
fn transformed(ctx: &Context, spec: &GroupSpec, mu: &Measure) -> CliResult<(Rule, MeasureDeficit)> {
    let rule = resolve::required_rule(spec, &ctx.config)?;
    let md = rule.transform(mu, resolve::transform_budget(&ctx.config))?;
    Ok((rule, md))
}

pub fn transform(ctx: &Context) -> CliResult<Outcome> {
    let spec = ctx.spec()?;
    let mu = resolve::required_measure(&spec, &ctx.config)?;
    let rule = resolve::required_rule(&spec, &ctx.config)?;
    let tc = ctx.config.transform.clone().unwrap_or(TransformConfig {
        t: None,
        iterate: None,
        budget: None,
    });
    let budget = resolve::transform_budget(&ctx.config);
    let mut md = match tc.iterate {
        Some(n) => MeasureDeficit::exact(iterate_transform_with_budget(
            &mu,
            rule.bounded()?,
            n,
            budget,
        )?),
        None => rule.transform(&mu, budget)?,
    };
    if let Some(t) = &tc.t {
        md = mu_tau_t_deficit(&mu, &md, &resolve::rat(t)?)?;
    }
    let result = json!({
        "rule": rule.describe(),
        "iterate": tc.iterate,
        "t": tc.t,
        "measure": deficit_json(&md),
    });
    Ok(Outcome {
        result,
        tables: vec![measure_table("measure", &md.measure)],
        passed: true,
    })
}

pub fn kernel(ctx: &Context) -> CliResult<Outcome> {
    let spec = ctx.spec()?;
    let kc = ctx.section(&ctx.config.kernel, "kernel")?;
    let base = resolve::required_measure(&spec, &ctx.config)?;
    let (mu, note) = if kc.transformed {
        let (_, md) = transformed(ctx, &spec, &base)?;
        let note = if rational::to_f64(&md.missing_mass) > 0.0 {
            format!(
                "transformed measure truncated, missing mass {}",
                rational::format(&md.missing_mass)
            )
        } else {
            "exact transformed measure".to_string()
        };
        (md.measure, note)
    } else {
        (base, "mu".to_string())
    };
    let probes = resolve::elements(&spec, &kc.probes)?;
    let points = resolve::elements(&spec, &kc.points)?;
    match kc.mode {
        KernelModeConfig::Free => {
            let mut t = Table::new(
                "kernel",
                &[
                    "probe",
                    "point",
                    "green",
                    "green_float",
                    "martin",
                    "martin_float",
                ],
            );
            for x in &probes {
                for y in &points {
                    let g = green_free(&mu, x, y)?;
                    let word = y
                        .as_word()
                        .ok_or_else(|| CliError::Config(format!("{y} is not a word")))?
                        .clone();
                    let k = martin_free(&mu, x, &KernelTarget::Finite(word))?;
                    t.push(vec![
                        x.to_string(),
                        y.to_string(),
                        g.value.render(),
                        g.value.to_f64().to_string(),
                        k.value.render(),
                        k.value.to_f64().to_string(),
                    ]);
                }
            }
            let mut boundary = Vec::new();
            if let Some(target) = &kc.target {
                let g = resolve::infinite_word(target)?;
                for x in &probes {
                    let k = martin_free(&mu, x, &KernelTarget::Infinite(g.clone()))?;
                    boundary.push(json!({ "probe": x.to_string(), "target": g.to_string(), "martin": k.value.render() }));
                }
            }
            Ok(Outcome {
                result: json!({ "mode": "free", "measure": note, "pairs": t.rows.len(), "boundary": boundary }),
                tables: vec![t],
                passed: true,
            })
        }
        KernelModeConfig::Truncated => {
            let grid = kernel_grid(&mu, &probes, &points, kc.horizon)?;
            let mut t = Table::new(
                "kernel",
                &[
                    "probe",
                    "point",
                    "value",
                    "value_float",
                    "horizon",
                    "last_term",
                    "ratio",
                    "note",
                ],
            );
            for (x, row) in probes.iter().zip(&grid) {
                for (y, r) in points.iter().zip(row) {
                    t.push(vec![
                        x.to_string(),
                        y.to_string(),
                        r.value.render(),
                        r.value.to_f64().to_string(),
                        r.horizon.to_string(),
                        r.last_term.to_string(),
                        r.ratio.map(|v| v.to_string()).unwrap_or_default(),
                        r.tail_note.clone(),
                    ]);
                }
            }
            Ok(Outcome {
                result: json!({ "mode": "truncated", "measure": note, "horizon": kc.horizon, "pairs": t.rows.len() }),
                tables: vec![t],
                passed: true,
            })
        }
        KernelModeConfig::Sequence => {
            let seq = resolve::sequence(&spec, ctx.section(&kc.sequence, "kernel.sequence")?)?;
            let table = kernel_sequence(&mu, &probes, &seq, kc.horizon, ctx.tol())?;
            let mut t = Table::new(
                "sequence",
                &["probe", "index", "point", "value", "value_float"],
            );
            for row in &table.rows {
                let exact = row.exact.as_ref().expect("exact series");
                for (i, (p, v)) in seq.points.iter().zip(exact).enumerate() {
                    let [a, b] = rat_pair(v);
                    t.push(vec![
                        row.probe.to_string(),
                        i.to_string(),
                        p.to_string(),
                        a,
                        b,
                    ]);
                }
            }
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| json!({ "probe": r.probe.to_string(), "stabilized": r.stabilized, "limit": r.limit() }))
                .collect();
            Ok(Outcome {
                result: json!({
                    "mode": "sequence",
                    "measure": note,
                    "sequence": seq.description,
                    "horizon": kc.horizon,
                    "tol": ctx.tol(),
                    "all_stabilized": table.all_stabilized(),
                    "rows": rows,
                }),
                tables: vec![t],
                passed: true,
            })
        }
    }
}

pub fn harmonic(ctx: &Context) -> CliResult<Outcome> {
    let spec = ctx.spec()?;
    let hc = ctx.section(&ctx.config.harmonic, "harmonic")?;
    let mu = resolve::required_measure(&spec, &ctx.config)?;
    let f = resolve::function(&spec, Some(&mu), &hc.function)?;
    let window = resolve::window(&spec, &hc.window)?;
    let (under, label) = match hc.under {
        UnderConfig::Mu => (mu, "mu".to_string()),
        UnderConfig::Transformed => (
            transformed(ctx, &spec, &mu)?.1.measure,
            "mu_tau".to_string(),
        ),
        UnderConfig::MuTauT => {
            let t =
                hc.t.as_ref()
                    .ok_or_else(|| CliError::Config("under = \"mu-tau-t\" needs `t`".into()))?;
            let (_, md) = transformed(ctx, &spec, &mu)?;
            (
                mu_tau_t_deficit(&mu, &md, &resolve::rat(t)?)?.measure,
                format!("mu_tau_t, t = {t}"),
            )
        }
    };
    let report = check_harmonic(&under, f.as_ref(), &window)?;
    let passed = match hc.expect {
        None => true,
        Some(ExpectConfig::Harmonic) => report.is_harmonic(),
        Some(ExpectConfig::NotHarmonic) => !report.is_harmonic(),
    };
    Ok(Outcome {
        result: json!({
            "function": f.describe(),
            "under": label,
            "expect": hc.expect,
            "report": harmonic_json(&report),
        }),
        tables: vec![failure_table("failures", &report)],
        passed,
    })
}

pub fn lift(ctx: &Context) -> CliResult<Outcome> {
    let spec = ctx.spec()?;
    let lc = ctx.config.lift.clone().unwrap_or(LiftConfig {
        function: None,
        window: None,
        depth: 4,
    });
    let mu = resolve::required_measure(&spec, &ctx.config)?;
    let cover = build_cover(&mu)?;
    let mut rows = Table::new("cover", &["generator", "atom", "weight", "weight_float"]);
    for r in cover.export() {
        let w = resolve::rat(&r.weight)?;
        rows.push(vec![
            r.generator,
            r.atom,
            r.weight,
            rational::to_f64(&w).to_string(),
        ]);
    }
    let mut tables = vec![rows];
    let mut passed = true;
    let mut result = json!({ "generators": cover.generators.len(), "depth": lc.depth });

    match (&lc.function, &lc.window) {
        (Some(fc), Some(wc)) => {
            let f = resolve::function(&spec, Some(&mu), fc)?;
            let window = resolve::window(&spec, wc)?;
            let tr = transfer_harmonicity(&cover, f.clone(), &window, lc.depth)?;
            let inv = check_phi_invariant(&cover, &lift_fn(&cover, f.clone()), lc.depth)?;
            passed &= tr.correspond && inv.passes();
            result["transfer"] = json!({
                "base": harmonic_json(&tr.base),
                "lifted": harmonic_json(&tr.lifted),
                "uncovered": tr.uncovered.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
                "correspond": tr.correspond,
            });
            result["invariance"] = json!({
                "words": inv.words,
                "classes": inv.classes,
                "passes": inv.passes(),
            });
            tables.push(failure_table("base_failures", &tr.base));
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Config(
                "[lift] needs both `function` and `window`, or neither".into(),
            ))
        }
    }

    if ctx.config.rule.is_some() {
        let rule = resolve::required_rule(&spec, &ctx.config)?;
        let rule = rule.bounded()?.clone();
        let budget = resolve::transform_budget(&ctx.config);
        let down = transform_bounded_with_budget(&mu, &rule, budget)?;
        let up = transform_bounded_with_budget(&cover.bold_mu, &lift_rule(&cover, rule), budget)?;
        let commutes = pushforward(&cover, &up)? == down;
        passed &= commutes;
        result["stopping_commutes"] = json!(commutes);
        tables.push(measure_table("lifted_transform", &up));
    }
    Ok(Outcome {
        result,
        tables,
        passed,
    })
}

pub fn montecarlo(ctx: &Context) -> CliResult<Outcome> {
    let spec = ctx.spec()?;
    let mc = ctx.section(&ctx.config.montecarlo, "montecarlo")?;
    let mu = resolve::required_measure(&spec, &ctx.config)?;
    let cfg = SampleConfig {
        seed: ctx.seed(),
        num_samples: mc.num_samples,
        step_cap: mc.step_cap,
    };
    let rule = match &ctx.config.rule {
        Some(r) => Some(resolve::rule(&spec, r)?),
        None => None,
    };
    let sub;
    let stopper = match (&mc.stop, &rule) {
        (Some(StopConfig::Subgroup { axes }), _) => {
            sub = SubgroupHit {
                axes: axes.iter().copied().collect::<BTreeSet<_>>(),
            };
            Stopper::Subgroup(&sub)
        }
        (None, Some(Rule::Bounded(r))) => Stopper::Rule(r),
        (None, Some(Rule::Hitting(h))) => Stopper::Hitting(h),
        (None, Some(Rule::Mixture(_))) => {
            return Err(CliError::Config(
                "sampling supports bounded and hitting rules".into(),
            ))
        }
        (None, None) => return Err(CliError::Config("montecarlo needs [rule] or `stop`".into())),
    };
    let emp = estimate_transform(&mu, stopper, &cfg)?;
    let mut t = Table::new("empirical", &["element", "count", "frequency"]);
    let n = emp.stopped().max(1) as f64;
    for (g, c) in &emp.counts {
        t.push(vec![
            g.to_string(),
            c.to_string(),
            (*c as f64 / n).to_string(),
        ]);
    }
    let mut result = json!({
        "seed": cfg.seed,
        "num_samples": emp.num_samples,
        "stopped": emp.stopped(),
        "aborted": emp.aborted,
        "aborted_fraction": emp.aborted_fraction(),
        "atoms": emp.counts.len(),
    });
    let mut passed = true;
    if mc.compare {
        let rule = rule.ok_or_else(|| CliError::Config("compare needs [rule]".into()))?;
        let exact = rule.transform(&mu, resolve::transform_budget(&ctx.config))?;
        let report = compare(&emp, &exact, mc.delta.unwrap_or(DEFAULT_DELTA))?;
        passed = report.pass;
        result["compare"] = serde_json::to_value(&report).expect("serializable report");
    }
    Ok(Outcome {
        result,
        tables: vec![t],
        passed,
    })
}
