//! Per-command configuration: a JSON document, overridden field by field by flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};
use treealign::graph_align::{Algorithm, DEFAULT_NODE_BUDGET};
use treealign::likelihood::{BetaRule, EventSpec};
use treealign::tree_core::CanonicalTree;
use treealign::tree_matching::RateModel;

pub const SEED_ENV: &str = "TREEALIGN_SEED";

pub trait Validate {
    /// Empty iff the configuration is usable.
    fn violations(&self) -> Vec<String>;
}

/// Merges `flags` over the optional config file, takes the seed from
/// `env_seed` when neither sets one, then deserializes and validates.
pub fn resolve<C: DeserializeOwned + Validate>(
    file: Option<&Path>,
    flags: Value,
    env_seed: Option<&str>,
) -> Result<C, Vec<String>> {
    let mut doc = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| vec![format!("cannot read {}: {e}", p.display())])?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(vec!["config file must hold a JSON object".into()]),
                Err(e) => return Err(vec![format!("config file is not valid JSON: {e}")]),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(m) = flags {
        for (k, v) in m {
            if !v.is_null() {
                doc.insert(k, v);
            }
        }
    }
    if doc.get("seed").is_none_or(Value::is_null) {
        if let Some(s) = env_seed {
            match s.trim().parse::<u64>() {
                Ok(seed) => {
                    doc.insert("seed".into(), seed.into());
                }
                Err(_) => return Err(vec![format!("{SEED_ENV} is not an unsigned integer: {s:?}")]),
            }
        }
    }
    let cfg: C = serde_json::from_value(Value::Object(doc)).map_err(|e| vec![e.to_string()])?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(v)
    }
}

fn check_lambda(lambda: f64, out: &mut Vec<String>) {
    if !(lambda > 0.0 && lambda.is_finite()) {
        out.push(format!("lambda must be positive, got {lambda}"));
    }
}

// Tree and graph models admit s = 1; the likelihood ratio does not.
fn check_s(s: f64, allow_one: bool, out: &mut Vec<String>) {
    if allow_one && !(0.0..=1.0).contains(&s) {
        out.push(format!("s out of [0,1]: {s}"));
    } else if !allow_one && !(0.0..1.0).contains(&s) {
        out.push(format!("s out of [0,1): {s}"));
    }
}

fn check_seed(seed: Option<u64>, out: &mut Vec<String>) {
    if seed.is_none() {
        out.push(format!("missing seed (set \"seed\" or {SEED_ENV})"));
    }
}

fn check_min(name: &str, value: usize, min: usize, out: &mut Vec<String>) {
    if value < min {
        out.push(format!("{name} must be at least {min}, got {value}"));
    }
}

/// Accepts `[2,3,4]`, `"2..5"` (inclusive) or `"2,3,5"`.
fn depths<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u32>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<u32>),
        One(u32),
        Text(String),
    }
    match Raw::deserialize(de)? {
        Raw::List(v) => Ok(v),
        Raw::One(d) => Ok(vec![d]),
        Raw::Text(s) => parse_depths(&s).map_err(serde::de::Error::custom),
    }
}

pub fn parse_depths(s: &str) -> Result<Vec<u32>, String> {
    let bad = || format!("bad depth list {s:?}; use a..b or a,b,c");
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub max_n: usize,
    #[serde(default)]
    pub depth: Option<u32>,
}

impl Validate for EnumerateConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_min("max_n", self.max_n, 1, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtterConfig {
    #[serde(default = "default_otter_n")]
    pub max_n: usize,
}

fn default_otter_n() -> usize {
    200
}

impl Validate for OtterConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_min("max_n", self.max_n, 50, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    #[serde(default = "default_model")]
    pub model: RateModel,
    pub lambda: f64,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default)]
    pub delta: u32,
    pub d_min: u32,
    pub d_max: u32,
    #[serde(default = "default_gamma_trials")]
    pub trials: usize,
    pub seed: Option<u64>,
}

fn default_model() -> RateModel {
    RateModel::Null
}

fn one() -> f64 {
    1.0
}

fn default_gamma_trials() -> usize {
    200
}

impl Validate for GammaConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, true, &mut v);
        if self.d_min == 0 || self.d_min > self.d_max {
            v.push(format!("need 1 ≤ d_min ≤ d_max, got {}..{}", self.d_min, self.d_max));
        }
        if self.model == RateModel::Shifted && (self.delta == 0 || self.delta > self.d_min) {
            v.push(format!("shifted model needs 1 ≤ delta ≤ d_min, got {}", self.delta));
        }
        check_min("trials", self.trials, 30, &mut v);
        check_seed(self.seed, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlCurveConfig {
    pub lambda: f64,
    pub s: Vec<f64>,
    #[serde(deserialize_with = "depths")]
    pub d: Vec<u32>,
    #[serde(default = "default_kl_trials")]
    pub trials: usize,
    pub seed: Option<u64>,
}

fn default_kl_trials() -> usize {
    20_000
}

impl Validate for KlCurveConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        if self.s.is_empty() {
            v.push("s list is empty".into());
        }
        for &s in &self.s {
            check_s(s, false, &mut v);
        }
        if self.d.is_empty() || self.d.contains(&0) {
            v.push("d must list depths ≥ 1".into());
        }
        check_min("trials", self.trials, 1000, &mut v);
        check_seed(self.seed, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicConfig {
    pub lambda: f64,
    pub s: f64,
    pub d: u32,
    #[serde(default = "default_moments")]
    pub m: Vec<u32>,
    #[serde(default = "default_cyclic_trials")]
    pub trials: usize,
    /// Terms of the A_{d,n} series summed for the analytic value.
    #[serde(default = "default_series_terms")]
    pub series_terms: usize,
    pub seed: Option<u64>,
}

fn default_moments() -> Vec<u32> {
    vec![2, 3]
}

fn default_cyclic_trials() -> usize {
    200_000
}

fn default_series_terms() -> usize {
    400
}

impl Validate for CyclicConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, false, &mut v);
        if self.d == 0 {
            v.push("d must be at least 1".into());
        }
        if self.m.is_empty() || self.m.iter().any(|&m| m < 2) {
            v.push("m must list moments ≥ 2".into());
        }
        check_min("trials", self.trials, 1000, &mut v);
        check_min("series_terms", self.series_terms, 1, &mut v);
        check_seed(self.seed, &mut v);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EigenCheck {
    Orthogonality,
    Decomposition,
    Mixed,
    Covariance,
    GaussianKl,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigencheckConfig {
    pub lambda: f64,
    #[serde(default = "half")]
    pub s: f64,
    pub d: u32,
    /// Largest index size |α| kept in the basis.
    pub k: u64,
    #[serde(default = "default_checks")]
    pub checks: Vec<EigenCheck>,
    /// Smallest GW probability kept in the orthogonality support (d ≥ 2).
    #[serde(default = "default_support_cut")]
    pub support_cut: f64,
    /// Largest degree in the orthogonality support at d = 1.
    #[serde(default = "default_ell_max")]
    pub ell_max: u32,
    /// Decomposition pairs range over all trees with at most this many nodes.
    #[serde(default = "default_pair_size")]
    pub pair_size: usize,
    #[serde(default = "default_indices")]
    pub indices: Vec<CanonicalTree>,
    #[serde(default = "default_mixed_cut")]
    pub mixed_cut: f64,
    #[serde(default = "default_cov_trials")]
    pub trials: usize,
    pub seed: Option<u64>,
}

fn half() -> f64 {
    0.5
}

fn default_checks() -> Vec<EigenCheck> {
    vec![EigenCheck::Orthogonality, EigenCheck::Decomposition, EigenCheck::GaussianKl]
}

fn default_support_cut() -> f64 {
    1e-14
}

fn default_ell_max() -> u32 {
    200
}

fn default_pair_size() -> usize {
    7
}

fn default_indices() -> Vec<CanonicalTree> {
    vec![CanonicalTree::star(1); 3]
}

fn default_mixed_cut() -> f64 {
    1e-18
}

fn default_cov_trials() -> usize {
    20_000
}

impl Validate for EigencheckConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, false, &mut v);
        if self.d == 0 {
            v.push("d must be at least 1".into());
        }
        if self.k == 0 {
            v.push("k must be at least 1".into());
        }
        if !(self.support_cut > 0.0 && self.mixed_cut > 0.0) {
            v.push("support cuts must be positive".into());
        }
        if self.checks.contains(&EigenCheck::Mixed) && self.indices.iter().any(|a| a.depth() > self.d) {
            v.push(format!("mixed-moment indices must have depth ≤ {}", self.d));
        }
        if self.checks.contains(&EigenCheck::Covariance) {
            check_min("trials", self.trials, 2, &mut v);
            check_seed(self.seed, &mut v);
        }
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrTestConfig {
    pub lambda: f64,
    pub s: f64,
    pub d: u32,
    #[serde(default = "default_lr_trials")]
    pub trials: usize,
    #[serde(default = "default_beta")]
    pub beta: BetaRule,
    pub seed: Option<u64>,
}

fn default_lr_trials() -> usize {
    500
}

fn default_beta() -> BetaRule {
    BetaRule::C2Pow1_16
}

impl Validate for LrTestConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, false, &mut v);
        if self.d == 0 {
            v.push("d must be at least 1".into());
        }
        if let BetaRule::Explicit(b) = self.beta {
            if !(b > 0.0) {
                v.push(format!("beta must be positive, got {b}"));
            }
        }
        check_min("trials", self.trials, 1, &mut v);
        check_seed(self.seed, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZstatConfig {
    pub lambda: f64,
    pub s: f64,
    #[serde(default = "default_z_trials")]
    pub trials: usize,
    /// Defaults to {(ℓ,ℓ′): ℓ ≥ min_degree, ℓ′ ≥ min_degree} at depth 1.
    #[serde(default)]
    pub event: Option<EventSpec>,
    #[serde(default = "default_min_degree")]
    pub min_degree: u32,
    #[serde(default = "default_moment4_mu")]
    pub moment4_mu: f64,
    #[serde(default = "default_moment4_draws")]
    pub moment4_draws: usize,
    pub seed: Option<u64>,
}

fn default_z_trials() -> usize {
    100_000
}

fn default_min_degree() -> u32 {
    3
}

fn default_moment4_mu() -> f64 {
    2.5
}

fn default_moment4_draws() -> usize {
    1_000_000
}

impl Validate for ZstatConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, false, &mut v);
        if matches!(self.event, Some(EventSpec::Threshold { .. })) {
            v.push("Z_S needs a pairs or product event".into());
        }
        if !(self.moment4_mu >= 0.0 && self.moment4_mu.is_finite()) {
            v.push(format!("moment4_mu must be non-negative, got {}", self.moment4_mu));
        }
        check_min("trials", self.trials, 2, &mut v);
        check_min("moment4_draws", self.moment4_draws, 2, &mut v);
        check_seed(self.seed, &mut v);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignConfig {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub n: Vec<usize>,
    pub lambda: f64,
    pub s: f64,
    pub d: u32,
    pub gamma: f64,
    #[serde(default = "default_reps")]
    pub reps: u32,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
    /// Directory receiving one alignment CSV per run.
    #[serde(default)]
    pub pairs_dir: Option<String>,
    /// Path of the JSON run summary.
    #[serde(default)]
    pub summary: Option<String>,
    pub seed: Option<u64>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Ntma
}

fn default_reps() -> u32 {
    1
}

fn default_budget() -> usize {
    DEFAULT_NODE_BUDGET
}

impl Validate for AlignConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        check_lambda(self.lambda, &mut v);
        check_s(self.s, true, &mut v);
        if !(self.gamma > 1.0) {
            v.push(format!("gamma must exceed 1, got {}", self.gamma));
        }
        let min_d = if self.algorithm == Algorithm::Ntma { 2 } else { 1 };
        if self.d < min_d {
            v.push(format!("d must be at least {min_d} for this algorithm, got {}", self.d));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            v.push("n must list graph sizes ≥ 1".into());
        }
        if self.reps == 0 {
            v.push("reps must be at least 1".into());
        }
        check_seed(self.seed, &mut v);
        v
    }
}
