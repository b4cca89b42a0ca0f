//! Built-in run configurations, embedded from `scenarios/*.toml`.

pub const FIXTURES: [(&str, &str); 8] = [
    (
        "counterexample-semigroup",
        include_str!("../scenarios/counterexample-semigroup.toml"),
    ),
    (
        "counterexample-z3",
        include_str!("../scenarios/counterexample-z3.toml"),
    ),
    (
        "free-boundary",
        include_str!("../scenarios/free-boundary.toml"),
    ),
    ("lemma-zplus", include_str!("../scenarios/lemma-zplus.toml")),
    (
        "lift-invariance",
        include_str!("../scenarios/lift-invariance.toml"),
    ),
    (
        "convex-convolutions",
        include_str!("../scenarios/convex-convolutions.toml"),
    ),
    (
        "example-2-1-constant",
        include_str!("../scenarios/example-2-1-constant.toml"),
    ),
    (
        "intro-example-1",
        include_str!("../scenarios/intro-example-1.toml"),
    ),
];

pub fn get(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}
