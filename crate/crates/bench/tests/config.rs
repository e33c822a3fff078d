use pfseries_bench::config::{Method, RuleChoice};
use pfseries_bench::ExperimentConfig;

#[test]
fn defaults_survive_a_toml_round_trip() {
    let cfg = ExperimentConfig::default();
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
}

#[test]
fn empty_file_gives_defaults() {
    assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
}

#[test]
fn every_section_parses() {
    let text = r#"
[problem]
map = "standard_map"
case = "standard_f0"
alpha = 0.9
k_param = 2.4

[series]
n_terms = 30
reference_tol = 1e-7

[quad]
rule = "gauss"
n_per_dim = 64

[galerkin]
basis = "indicator"
cells_per_dim = 16
ulam = "monte_carlo"
ulam_samples = 5000

[net]
n_hidden = 16
init = "random2d"
seed = 3

[train]
optimizer = "adam"
max_iters = 100
continuation_alphas = [0.1, 0.5, 0.9]

[train.adam]
step = 0.01

[sweep]
method = "rvpinns"
ns = [8, 16]

[quad_study]
q_points = [11, 21]

[check]
skip_training = true

[output]
dir = "elsewhere"
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.dim(), 2);
    assert_eq!(cfg.sweep.method, Method::Rvpinns);
    assert_eq!(cfg.quad.rule, RuleChoice::Gauss);
    assert_eq!(cfg.train.adam.step, 0.01);
}

#[test]
fn inconsistent_choices_are_rejected() {
    for text in [
        "[galerkin]\nbasis = \"hat\"\n[problem]\nmap = \"circle_boundary\"\ncase = \"circle_f0\"\n",
        "[galerkin]\nulam = \"exact\"\n[problem]\nmap = \"standard_map\"\ncase = \"standard_f0\"\n",
        "[train]\ncontinuation_alphas = [0.3, 0.1]\n",
        "[quad]\nrule = \"graded\"\n[problem]\nmap = \"circle_boundary\"\ncase = \"circle_f0\"\n",
    ] {
        let bad = ExperimentConfig::from_toml_str(text).and_then(|c| c.validate());
        assert!(bad.is_err(), "{text}");
    }
}
