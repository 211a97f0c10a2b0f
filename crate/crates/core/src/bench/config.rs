//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! task = "l0dl"            # or "lie"
//! seeds = [0, 1, 2]
//! max_outer = 500
//! tol = 1e-4
//! output_dir = "results"
//!
//! [l0dl]
//! n = 16
//! m = 32
//! p = 200
//! sparsity = 3
//! noise_sigma = 0.01
//! lambda = 0.1
//!
//! [[solver]]
//! name = "PALM"
//! kind = "palm"
//!
//! [[solver]]
//! name = "TECU-2-6"
//! kind = "tecu"
//! x = { rule = "prox_linear" }
//! y = { rule = "embedded", operator = "admm", c = 0.4, eta = 1.0 }
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BCU_DEFAULT_BETA, IPALM_DEFAULT_BETA};
use crate::engine::{Diagnostics, RunOptions};
use crate::error::{Result, TecuError};
use crate::operators::{AdmmDictionaryOperator, IlluminationOperator, PithOperator, ProxGradientOperator};
use crate::problem::Block;
use crate::tasks::SynthSpec;
use crate::update::{EmbeddedOperator, EmbeddedRule, UpdateRule, DEFAULT_K_MAX, DEFAULT_SAFETY};

use super::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    L0dl,
    Lie,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::L0dl => "l0dl",
            TaskKind::Lie => "lie",
        }
    }
}

fn default_max_outer() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-4
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_true() -> bool {
    true
}
fn default_slack() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub task: TaskKind,
    pub seeds: Vec<u64>,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub phi_monitoring: bool,
    #[serde(default = "default_slack")]
    pub descent_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlSection {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub sparsity: usize,
    pub noise_sigma: f64,
    pub lambda: f64,
}

impl Default for DlSection {
    fn default() -> Self {
        let s = SynthSpec::default();
        DlSection {
            n: s.n,
            m: s.m,
            p: s.p,
            sparsity: s.sparsity,
            noise_sigma: s.noise_sigma,
            lambda: 0.1,
        }
    }
}

impl DlSection {
    pub fn synth_spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            n: self.n,
            m: self.m,
            p: self.p,
            sparsity: self.sparsity,
            noise_sigma: self.noise_sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LieSection {
    /// PGM/PPM input; a synthetic image is generated per seed when absent.
    pub image: Option<PathBuf>,
    /// Side length of the synthetic image.
    pub size: usize,
    pub alpha: f64,
}

impl Default for LieSection {
    fn default() -> Self {
        LieSection {
            image: None,
            size: 32,
            alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Tecu,
    Palm,
    Ipalm,
    Bcu,
    Inv,
}

/// Per-block rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    Proximal {
        zeta: f64,
    },
    ProxLinear {
        safety: Option<f64>,
    },
    Embedded {
        /// `admm`, `pith`, `illumination` or `prox_gradient`.
        operator: String,
        c: f64,
        eta: f64,
        k_max: Option<usize>,
        check_every: Option<usize>,
        fallback_safety: Option<f64>,
        /// Illumination filter radius.
        radius: Option<i64>,
        /// Fixed ADMM penalty.
        rho: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: String,
    pub kind: SolverKind,
    pub beta: Option<f64>,
    pub safety: Option<f64>,
    /// INV proximal weight.
    pub eta: Option<f64>,
    pub x: Option<RuleSpec>,
    pub y: Option<RuleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub l0dl: Option<DlSection>,
    #[serde(default)]
    pub lie: Option<LieSection>,
    #[serde(default)]
    pub solver: Vec<SolverSpec>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| TecuError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TecuError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        TecuError::Config(msg) => TecuError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn cfg_err(msg: impl Into<String>) -> TecuError {
    TecuError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let exp = &self.experiment;
        if self.solver.is_empty() {
            return Err(cfg_err("at least one [[solver]] entry is required"));
        }
        if exp.seeds.is_empty() {
            return Err(cfg_err("experiment.seeds must not be empty"));
        }
        let mut seen = HashSet::new();
        for s in &exp.seeds {
            if !seen.insert(*s) {
                return Err(cfg_err(format!("experiment.seeds: duplicate seed {s}")));
            }
        }
        if exp.max_outer == 0 {
            return Err(cfg_err("experiment.max_outer must be at least 1"));
        }
        if !(exp.tol > 0.0) {
            return Err(cfg_err(format!("experiment.tol must be positive, got {}", exp.tol)));
        }
        if !(exp.descent_slack >= 0.0) {
            return Err(cfg_err("experiment.descent_slack must be non-negative"));
        }
        match exp.task {
            TaskKind::L0dl => {
                let d = self.dl();
                d.synth_spec(0).validate().map_err(|e| cfg_err(format!("[l0dl]: {e}")))?;
                if !(d.lambda > 0.0) {
                    return Err(cfg_err("[l0dl].lambda must be positive"));
                }
            }
            TaskKind::Lie => {
                let l = self.lie();
                if !(l.alpha >= 0.0) {
                    return Err(cfg_err("[lie].alpha must be non-negative"));
                }
                if l.image.is_none() && l.size < 2 {
                    return Err(cfg_err("[lie].size must be at least 2"));
                }
            }
        }
        let mut names = HashSet::new();
        for (i, s) in self.solver.iter().enumerate() {
            let ctx = format!("solver[{i}] '{}'", s.name);
            if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(cfg_err(format!("{ctx}: name must be non-empty and use [A-Za-z0-9._-]")));
            }
            if !names.insert(s.name.as_str()) {
                return Err(cfg_err(format!("{ctx}: duplicate solver name")));
            }
            s.check(exp.task).map_err(|e| cfg_err(format!("{ctx}: {e}")))?;
        }
        Ok(())
    }

    pub fn dl(&self) -> DlSection {
        self.l0dl.unwrap_or_default()
    }

    pub fn lie(&self) -> LieSection {
        self.lie.clone().unwrap_or_default()
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_outer: self.experiment.max_outer,
            stop_tol: self.experiment.tol,
            diagnostics: Diagnostics {
                phi_monitoring: self.experiment.phi_monitoring,
                descent_slack: self.experiment.descent_slack,
            },
            record_iterates: false,
        }
    }
}

const OPERATORS: [&str; 4] = ["admm", "pith", "illumination", "prox_gradient"];

fn operator_allowed(op: &str, task: TaskKind, block: Block) -> bool {
    matches!(
        (op, task, block),
        ("admm", TaskKind::L0dl, Block::Y)
            | ("pith", TaskKind::L0dl, Block::X)
            | ("illumination", TaskKind::Lie, Block::X)
            | ("prox_gradient", _, _)
    )
}

impl SolverSpec {
    /// Structural checks that need no data.
    fn check(&self, task: TaskKind) -> Result<()> {
        match self.kind {
            SolverKind::Tecu => {
                let (x, y) = match (&self.x, &self.y) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return Err(cfg_err("kind = \"tecu\" needs both x and y rules")),
                };
                if self.beta.is_some() || self.eta.is_some() {
                    return Err(cfg_err("beta/eta apply to baselines only; set them inside the rules"));
                }
                for (rule, block) in [(x, Block::X), (y, Block::Y)] {
                    if let RuleSpec::Embedded { operator, .. } = rule {
                        if !OPERATORS.contains(&operator.as_str()) {
                            return Err(cfg_err(format!("unknown operator '{operator}'")));
                        }
                        if !operator_allowed(operator, task, block) {
                            return Err(cfg_err(format!(
                                "operator '{operator}' does not apply to block {} of task {}",
                                block.name(),
                                task.name()
                            )));
                        }
                    }
                }
                Ok(())
            }
            kind => {
                if self.x.is_some() || self.y.is_some() {
                    return Err(cfg_err("per-block rules apply to kind = \"tecu\" only"));
                }
                if kind == SolverKind::Inv && task != TaskKind::L0dl {
                    return Err(cfg_err("INV applies to the l0dl task only"));
                }
                self.baseline().expect("non-tecu kind").validate()
            }
        }
    }

    /// Baseline parameters, or `None` for TECU.
    pub fn baseline(&self) -> Option<Baseline> {
        let safety = self.safety.unwrap_or(DEFAULT_SAFETY);
        Some(match self.kind {
            SolverKind::Tecu => return None,
            SolverKind::Palm => Baseline::Palm { safety },
            SolverKind::Ipalm => Baseline::Ipalm {
                beta: self.beta.unwrap_or(IPALM_DEFAULT_BETA),
                safety,
            },
            SolverKind::Bcu => Baseline::Bcu {
                beta: self.beta.unwrap_or(BCU_DEFAULT_BETA),
                safety,
            },
            SolverKind::Inv => Baseline::Inv {
                eta: self.eta.unwrap_or(1.0),
                safety,
            },
        })
    }
}

fn build_operator(name: &str, block: Block, task: &Task, radius: Option<i64>, rho: Option<f64>) -> Result<Box<dyn EmbeddedOperator>> {
    let op: Box<dyn EmbeddedOperator> = match (name, task, block) {
        ("admm", Task::Dl(p), Block::Y) => {
            let op = AdmmDictionaryOperator::new(p.data_arc());
            Box::new(match rho {
                Some(r) => op.with_rho(r),
                None => op,
            })
        }
        ("pith", Task::Dl(p), Block::X) => Box::new(PithOperator::new(p.data_arc(), p.lambda())),
        ("illumination", Task::Lie(p), Block::X) => {
            let r = radius.unwrap_or(2);
            if r < 0 {
                return Err(cfg_err(format!("illumination radius must be non-negative, got {r}")));
            }
            Box::new(IlluminationOperator::new(p.observed_arc(), r))
        }
        ("prox_gradient", _, _) => Box::new(ProxGradientOperator::default()),
        _ => {
            return Err(cfg_err(format!(
                "operator '{name}' does not apply to block {} of this task",
                block.name()
            )))
        }
    };
    Ok(op)
}

/// Materializes a rule against a concrete task.
pub fn build_rule(spec: &RuleSpec, block: Block, task: &Task) -> Result<UpdateRule> {
    let rule = match spec {
        RuleSpec::Proximal { zeta } => UpdateRule::Proximal { zeta: *zeta },
        RuleSpec::ProxLinear { safety } => UpdateRule::ProxLinear {
            safety: safety.unwrap_or(DEFAULT_SAFETY),
        },
        RuleSpec::Embedded {
            operator,
            c,
            eta,
            k_max,
            check_every,
            fallback_safety,
            radius,
            rho,
        } => {
            let op = build_operator(operator, block, task, *radius, *rho)?;
            let mut rule = EmbeddedRule::new(op, *c, *eta)
                .with_k_max(k_max.unwrap_or(DEFAULT_K_MAX))
                .with_check_every(check_every.unwrap_or(1));
            if let Some(fs) = fallback_safety {
                rule.fallback_safety = *fs;
            }
            UpdateRule::Embedded(rule)
        }
    };
    rule.validate()?;
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
task = "l0dl"
seeds = [1]

[[solver]]
name = "PALM"
kind = "palm"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.max_outer, 500);
        assert_eq!(cfg.dl(), DlSection::default());
        assert_eq!(cfg.solver[0].baseline(), Some(Baseline::palm()));
    }

    #[test]
    fn empty_solver_list_is_config_error() {
        let text = "[experiment]\ntask = \"l0dl\"\nseeds = [1]\n";
        assert!(matches!(parse_config(text), Err(TecuError::Config(_))));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[experiment]\ntask = \"l0dl\"\nseeds = [1,\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = MINIMAL.replace("kind = \"palm\"", "kind = \"palm\"\nbogus = 1");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn duplicate_seeds_rejected() {
        assert!(parse_config(&MINIMAL.replace("[1]", "[1, 1]")).is_err());
    }

    #[test]
    fn misplaced_operator_rejected() {
        let text = format!(
            "{MINIMAL}\n[[solver]]\nname = \"bad\"\nkind = \"tecu\"\nx = {{ rule = \"embedded\", operator = \"admm\", c = 0.4, eta = 1.0 }}\ny = {{ rule = \"prox_linear\" }}\n"
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("admm"), "{err}");
    }
}
