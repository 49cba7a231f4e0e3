//! Simulation config files and lower-bound family specs.

use std::path::{Path, PathBuf};

use banditlab::environments::{
    eps_uniform_instance, flower_instance, multitask_instance, two_policy_instance, LossMatrix,
    LossSource, LowerBoundInstance,
};
use banditlab::harness::{Accounting, ExperimentConfig, LearnerKind, Source};
use banditlab::learners::DEFAULT_PROJECTION_TOL;
use banditlab::policy_sets::load_policy_set;
use banditlab::sampling::rng_from_seed;
use banditlab::{Error, PolicySet, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Flower,
    Eps,
    Twopolicy,
    Multitask,
}

/// Parameters of a lower-bound family; only the ones the family uses are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: Option<FamilyName>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub v: Option<usize>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub q: Option<usize>,
    pub theta1: Option<Vec<f64>>,
    pub theta2: Option<Vec<f64>>,
}

fn need<T: Clone>(value: &Option<T>, flag: &str, family: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidConfig(format!("family {family} needs --{flag}")))
}

impl FamilySpec {
    pub fn build(&self, horizon: u64) -> Result<LowerBoundInstance> {
        let name = self
            .name
            .ok_or_else(|| Error::InvalidConfig("missing family name".into()))?;
        match name {
            FamilyName::Flower => flower_instance(
                need(&self.n, "n", "flower")?,
                need(&self.m, "m", "flower")?,
                need(&self.v, "v", "flower")?,
                horizon,
            ),
            FamilyName::Eps => eps_uniform_instance(
                need(&self.k, "k", "eps")?,
                need(&self.eps, "eps", "eps")?,
                horizon,
            ),
            FamilyName::Twopolicy => two_policy_instance(
                &need(&self.theta1, "theta1", "twopolicy")?,
                &need(&self.theta2, "theta2", "twopolicy")?,
                horizon,
            ),
            FamilyName::Multitask => multitask_instance(
                need(&self.m, "m", "multitask")?,
                need(&self.q, "q", "multitask")?,
                horizon,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PoliciesSpec {
    /// Path to a policy file, relative to the config file.
    Path(PathBuf),
    Inline(PolicySet),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Bernoulli(Vec<f64>),
    Adversarial(Vec<Vec<f64>>),
    /// A `T x K` matrix of U[0, 1] losses drawn once from `seed`.
    UniformAdversarial {
        seed: u64,
    },
    Family(FamilySpec),
}

/// Contents of a `simulate --config` file. Every field may be overridden by a flag.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    pub learner: Option<LearnerKind>,
    pub policies: Option<PoliciesSpec>,
    pub source: SourceSpec,
    #[serde(rename = "T")]
    pub horizon: Option<u64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub record_trace_every: Option<u64>,
    pub accounting: Option<Accounting>,
    /// Relative duality-gap tolerance of the OSMD projection.
    pub tol: Option<f64>,
}

impl SimulationFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub learner: Option<LearnerKind>,
    pub policies: Option<PathBuf>,
    pub horizon: Option<u64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Merges a config file with flag overrides; flags win.
pub fn experiment_config(
    file: SimulationFile,
    base_dir: &Path,
    flags: &Overrides,
) -> Result<ExperimentConfig> {
    let missing = |what: &str| Error::InvalidConfig(format!("{what} is required (config or flag)"));
    let learner = flags
        .learner
        .or(file.learner)
        .ok_or_else(|| missing("learner"))?;
    let horizon = flags.horizon.or(file.horizon).ok_or_else(|| missing("T"))?;
    let reps = flags.reps.or(file.reps).ok_or_else(|| missing("reps"))?;
    let seed = flags.seed.or(file.seed).unwrap_or(0);

    let policies = match (&flags.policies, file.policies) {
        (Some(path), _) => Some(load_policy_set(path)?),
        (None, Some(PoliciesSpec::Path(p))) => Some(load_policy_set(base_dir.join(p))?),
        (None, Some(PoliciesSpec::Inline(set))) => Some(set),
        (None, None) => None,
    };

    let mut cfg = match file.source {
        SourceSpec::Family(spec) => {
            if policies.is_some() {
                return Err(Error::InvalidConfig(
                    "family sources define their own policy set; drop `policies`".into(),
                ));
            }
            ExperimentConfig::for_instance(learner, spec.build(horizon)?, reps, seed)
        }
        fixed => {
            let set = policies.ok_or_else(|| missing("policies"))?;
            let source = match fixed {
                SourceSpec::Bernoulli(mu) => LossSource::bernoulli(mu)?,
                SourceSpec::Adversarial(rows) => LossSource::Adversarial(LossMatrix::new(rows)?),
                SourceSpec::UniformAdversarial { seed } => {
                    let horizon = usize::try_from(horizon)
                        .map_err(|_| Error::InvalidConfig(format!("T = {horizon} is too large")))?;
                    LossSource::Adversarial(LossMatrix::uniform(
                        horizon,
                        set.k(),
                        &mut rng_from_seed(seed),
                    ))
                }
                SourceSpec::Family(_) => unreachable!(),
            };
            ExperimentConfig::new(learner, set, source, horizon, reps, seed)
        }
    };
    if let Some(every) = file.record_trace_every {
        cfg.record_trace_every = every;
    }
    if let Some(acc) = file.accounting {
        cfg.accounting = acc;
    }
    cfg.projection_tol = flags.tol.or(file.tol).unwrap_or(DEFAULT_PROJECTION_TOL);
    cfg.validate()?;
    Ok(cfg)
}

pub fn is_family(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.source, Source::Family(_))
}
