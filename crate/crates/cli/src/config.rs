//! Run configuration documents (TOML). Rationals are always strings in
//! `p/q` form; group elements use the display syntax of the core crate.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative tolerance for numeric verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub group: GroupConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupConfig {
    IntegerLattice {
        dim: usize,
    },
    /// Finite `generators`, or infinitely many `<indexed>_0, <indexed>_1, ...`.
    FreeSemigroup {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        indexed: Option<String>,
    },
    FreeGroup {
        generators: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub element: String,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub atoms: Vec<AtomConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TableEntryConfig {
    /// Increment prefix `h_1, ..., h_k`.
    pub prefix: Vec<String>,
    /// Conditional stop probability at time `k`.
    pub stop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WeightedRuleConfig {
    pub weight: String,
    pub rule: RuleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    Constant {
        k: usize,
    },
    /// First increment in `target`, capped at `cap`.
    MinHit {
        target: Vec<String>,
        cap: usize,
    },
    /// First increment in `target`; its series is truncated at `depth`.
    Hitting {
        target: Vec<String>,
        depth: usize,
    },
    Table {
        bound: usize,
        default: String,
        #[serde(default)]
        entries: Vec<TableEntryConfig>,
    },
    Composed {
        first: Box<RuleConfig>,
        second: Box<RuleConfig>,
    },
    Mixture {
        components: Vec<WeightedRuleConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// Output `t mu + (1-t) mu_tau` instead of `mu_tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    /// Output the law of `x_{tau_n}` by direct enumeration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InfiniteWordConfig {
    #[serde(default)]
    pub prefix: Vec<String>,
    /// Empty period: only `prefix` is known.
    #[serde(default)]
    pub period: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceConfig {
    /// `step^n` for `n` in `from..=to`.
    Ray {
        step: String,
        from: usize,
        to: usize,
    },
    /// Prefixes of an infinite word with lengths in `from..=to`.
    Prefixes {
        word: InfiniteWordConfig,
        from: usize,
        to: usize,
    },
    Elements {
        elements: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum KernelModeConfig {
    /// Closed forms on free semigroups.
    Free,
    /// Truncated series for probe/point pairs.
    Truncated,
    /// Rows along a boundary sequence with stabilization verdicts.
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub mode: KernelModeConfig,
    #[serde(default)]
    pub horizon: usize,
    pub probes: Vec<String>,
    #[serde(default)]
    pub points: Vec<String>,
    /// Infinite target for closed-form Martin kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<InfiniteWordConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceConfig>,
    /// Use the transformed measure of `[rule]` instead of `mu`.
    #[serde(default)]
    pub transformed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FnEntryConfig {
    pub element: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FnConfig {
    Constant {
        value: String,
    },
    /// `f(letter^n) = base^n`, 0 on other words.
    IndicatorScaled {
        letter: String,
        base: String,
    },
    /// Minimal harmonic function of `mu` attached to an infinite word.
    UG {
        #[serde(default)]
        prefix: Vec<String>,
        period: Vec<String>,
    },
    Table {
        entries: Vec<FnEntryConfig>,
        default: String,
    },
    LatticeExponential {
        base: Vec<String>,
    },
    Affine {
        coeffs: Vec<String>,
        constant: String,
    },
    Perturbed {
        base: Box<FnConfig>,
        at: String,
        delta: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowConfig {
    /// Word-metric ball (L1 ball on lattices).
    Ball {
        radius: usize,
    },
    /// `letter^0, ..., letter^max`.
    Powers {
        letter: String,
        max: usize,
    },
    Prefixes {
        word: InfiniteWordConfig,
        length: usize,
    },
    Elements {
        elements: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum UnderConfig {
    #[default]
    Mu,
    Transformed,
    MuTauT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectConfig {
    Harmonic,
    NotHarmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub function: FnConfig,
    pub window: WindowConfig,
    #[serde(default)]
    pub under: UnderConfig,
    /// Required for `under = "mu-tau-t"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<ExpectConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LiftConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StopConfig {
    /// First `k >= 1` with `x_k` in the span of the given coordinate axes.
    Subgroup { axes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub num_samples: u64,
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
    /// Overrides `[rule]` as the stopping criterion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopConfig>,
    /// Compare against the exact (or truncated) transform of `[rule]`.
    #[serde(default)]
    pub compare: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_step_cap() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub label: String,
    pub group: GroupConfig,
    pub measure: MeasureConfig,
    pub function: FnConfig,
    pub window: WindowConfig,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Random bounded rules checked against the pushforward.
    #[serde(default)]
    pub random_rules: usize,
    #[serde(default)]
    pub max_bound: usize,
    /// Weights `a_1, ..., a_k` of `theta = sum a_i mu^{*i}`.
    #[serde(default)]
    pub weights: Vec<String>,
}

/// Parameters of the packaged reproductions; each variant names a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "pipeline", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioConfig {
    CounterexampleSemigroup {
        function: FnConfig,
        window: WindowConfig,
        expected_deficit: String,
        expected_witness: String,
        expected_pf: String,
        expected_f: String,
    },
    CounterexampleZ3 {
        num_samples: u64,
        step_cap: u64,
        axes: Vec<usize>,
        max_abort_fraction: f64,
        horizon: usize,
        probes: Vec<String>,
        direction: String,
        mu_range: RangeConfig,
        tau_probes: Vec<String>,
        tau_range: RangeConfig,
        tau_window: u64,
        min_separation: f64,
    },
    FreeBoundary {
        word: InfiniteWordConfig,
        probes: Vec<String>,
        range: RangeConfig,
    },
    LemmaZplus {
        word: InfiniteWordConfig,
        t_values: Vec<String>,
        constant_k: usize,
        random_rules: usize,
        random_t: String,
        max_bound: usize,
        length: usize,
        terminals: usize,
        interior_end: usize,
    },
    LiftInvariance {
        cases: Vec<CaseConfig>,
    },
    ConvexConvolutions {
        cases: Vec<CaseConfig>,
    },
}
