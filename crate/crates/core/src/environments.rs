//! Loss sources and the Bernoulli environment families behind the lower bounds.
//!
//! Each family perturbs the all-½ environment by a gap `Δ` on arms tied to
//! one policy, tuned with `c = 8 log(4/3)`. Constructors enforce the horizon
//! threshold that keeps `Δ ≤ ¼`; below it the floor is not guaranteed.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::divergences::{bernoulli_kl, hellinger_sq};
use crate::policy_sets::{
    make_eps_uniform, make_flower, make_multitask, make_two_policy, multitask_choices,
};
use crate::{Error, PolicySet, Result};

/// `c = 8 log(4/3)`, the constant in `d(½, ½ - Δ) ≤ c Δ²` for `Δ ≤ ¼`.
pub fn kl_gap_constant() -> f64 {
    8.0 * (4.0f64 / 3.0).ln()
}

/// Row-major `T × K` loss matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LossMatrix {
    k: usize,
    values: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || k == 0 {
            return Err(Error::InvalidShape("loss matrix must be non-empty".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::OutOfRange(format!("loss {v} outside [0, 1]")));
            }
            values.extend(row);
        }
        Ok(LossMatrix { k, values })
    }

    /// Losses drawn i.i.d. uniform on `[0, 1]`, once.
    pub fn uniform<R: Rng + ?Sized>(horizon: usize, k: usize, rng: &mut R) -> Self {
        LossMatrix {
            k,
            values: (0..horizon * k).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.k..(t + 1) * self.k]
    }
}

impl TryFrom<Vec<Vec<f64>>> for LossMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        LossMatrix::new(rows)
    }
}

impl From<LossMatrix> for Vec<Vec<f64>> {
    fn from(m: LossMatrix) -> Self {
        m.values.chunks_exact(m.k).map(<[f64]>::to_vec).collect()
    }
}

/// Where losses come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSource {
    /// A fixed sequence `ℓ_1, …, ℓ_T`.
    Adversarial(LossMatrix),
    /// `ℓ_t(j) ~ Bernoulli(μ(j))`, independently across rounds and arms.
    Bernoulli(Vec<f64>),
}

impl LossSource {
    pub fn bernoulli(means: Vec<f64>) -> Result<Self> {
        if let Some(v) = means.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!("mean {v} outside [0, 1]")));
        }
        Ok(LossSource::Bernoulli(means))
    }

    pub fn k(&self) -> usize {
        match self {
            LossSource::Adversarial(m) => m.k(),
            LossSource::Bernoulli(mu) => mu.len(),
        }
    }

    /// Longest horizon this source can serve.
    pub fn max_horizon(&self) -> Option<usize> {
        match self {
            LossSource::Adversarial(m) => Some(m.horizon()),
            LossSource::Bernoulli(_) => None,
        }
    }

    /// Expected losses at round `t` (0-based).
    pub fn expected_row(&self, t: usize) -> Result<&[f64]> {
        match self {
            LossSource::Adversarial(m) => {
                if t >= m.horizon() {
                    return Err(Error::IndexOutOfRange(format!(
                        "round {t} beyond horizon {}",
                        m.horizon()
                    )));
                }
                Ok(m.row(t))
            }
            LossSource::Bernoulli(mu) => Ok(mu),
        }
    }
}

/// Loss of `arm` at round `t`: the matrix entry, or a Bernoulli draw.
pub fn sample_loss(src: &LossSource, t: usize, arm: usize, rng: &mut dyn RngCore) -> Result<f64> {
    let row = src.expected_row(t)?;
    let &p = row
        .get(arm)
        .ok_or_else(|| Error::IndexOutOfRange(format!("arm {arm} of {}", row.len())))?;
    Ok(match src {
        LossSource::Adversarial(_) => p,
        LossSource::Bernoulli(_) => bernoulli_draw(p, rng),
    })
}

pub(crate) fn bernoulli_draw(p: f64, rng: &mut dyn RngCore) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// `ℓ_t(θ_i) = Σ_j θ_i(j) ℓ_t(j)`, with means for Bernoulli sources.
pub fn expected_policy_loss(src: &LossSource, t: usize, set: &PolicySet, i: usize) -> Result<f64> {
    if i >= set.n() {
        return Err(Error::IndexOutOfRange(format!("policy {i} of {}", set.n())));
    }
    let row = src.expected_row(t)?;
    if row.len() != set.k() {
        return Err(Error::LengthMismatch {
            expected: set.k(),
            got: row.len(),
        });
    }
    Ok(dot(set.row(i), row))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_θ N(θ) Σ_j θ(j) d(μ(j), μ'(j))`: the KL divergence between the history
/// distributions induced by two Bernoulli environments, given the expected
/// selection counts under the first.
pub fn lemma1_kl(set: &PolicySet, counts: &[f64], mu: &[f64], mu_prime: &[f64]) -> Result<f64> {
    if counts.len() != set.n() {
        return Err(Error::LengthMismatch {
            expected: set.n(),
            got: counts.len(),
        });
    }
    for v in [mu, mu_prime] {
        if v.len() != set.k() {
            return Err(Error::LengthMismatch {
                expected: set.k(),
                got: v.len(),
            });
        }
    }
    if let Some(c) = counts.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::OutOfRange(format!(
            "selection count {c} is negative"
        )));
    }
    let per_arm = mu
        .iter()
        .zip(mu_prime)
        .map(|(&a, &b)| bernoulli_kl(a, b))
        .collect::<Result<Vec<f64>>>()?;
    let mut total = 0.0;
    for (row, &count) in set.rows().zip(counts) {
        if count == 0.0 {
            continue;
        }
        for (&p, &d) in row.iter().zip(&per_arm) {
            if p > 0.0 && d > 0.0 {
                total += count * p * d;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Flower,
    EpsUniform,
    TwoPolicy,
    MultiTask,
}

/// A family of Bernoulli environments with its gap, horizon threshold and regret floor.
///
/// `envs[i]` is the environment in which policy `i` is optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundInstance {
    pub family: Family,
    pub policy_set: PolicySet,
    pub envs: Vec<Vec<f64>>,
    pub delta: f64,
    pub t_min: f64,
    pub floor: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
}

impl LowerBoundInstance {
    /// The all-½ reference environment.
    pub fn baseline_env(&self) -> Vec<f64> {
        vec![0.5; self.policy_set.k()]
    }

    /// Loss-gap of policy `other` relative to the optimal policy of `envs[env]`.
    pub fn suboptimality_gap(&self, env: usize, other: usize) -> f64 {
        let mu = &self.envs[env];
        dot(self.policy_set.row(other), mu) - dot(self.policy_set.row(env), mu)
    }

    pub fn sources(&self) -> Vec<LossSource> {
        self.envs
            .iter()
            .cloned()
            .map(LossSource::Bernoulli)
            .collect()
    }
}

fn check_horizon(horizon: u64, t_min: f64) -> Result<()> {
    if (horizon as f64) < t_min {
        return Err(Error::HorizonTooShort { horizon, t_min });
    }
    Ok(())
}

/// Flower family: in `μ_θ` the private arms of `θ` have mean `½ - Δ`.
pub fn flower_instance(n: usize, m: usize, v: usize, horizon: u64) -> Result<LowerBoundInstance> {
    if m <= v {
        return Err(Error::InvalidShape(format!(
            "flower lower bound needs M > V (got M={m}, V={v})"
        )));
    }
    let policy_set = make_flower(n, m, v)?;
    let (nf, mf, petal) = (n as f64, m as f64, (m - v) as f64);
    let c = kl_gap_constant();
    let t_min = nf * mf / (4.0 * (4.0f64 / 3.0).ln() * petal);
    check_horizon(horizon, t_min)?;
    let t = horizon as f64;
    let delta = 0.25 * (2.0 * mf * nf / (c * petal * t)).sqrt();
    let envs = (0..n)
        .map(|i| {
            let mut mu = vec![0.5; policy_set.k()];
            mu[v + i * (m - v)..v + (i + 1) * (m - v)].fill(0.5 - delta);
            mu
        })
        .collect();
    Ok(LowerBoundInstance {
        family: Family::Flower,
        policy_set,
        envs,
        delta,
        t_min,
        floor: (nf * petal * t / mf).sqrt() / 18.0,
        horizon,
    })
}

/// Epsilon-uniform family: in `μ_θ` the arm associated with `θ` has mean `½ - Δ`.
pub fn eps_uniform_instance(k: usize, eps: f64, horizon: u64) -> Result<LowerBoundInstance> {
    if eps == 0.0 {
        return Err(Error::InvalidShape(
            "eps = 0 makes every policy identical".into(),
        ));
    }
    let policy_set = make_eps_uniform(k, eps)?;
    let kf = k as f64;
    let t_min = kf / (4.0 * (4.0f64 / 3.0).ln());
    check_horizon(horizon, t_min)?;
    let t = horizon as f64;
    let delta = 0.25 * (2.0 * kf / (kl_gap_constant() * t)).sqrt();
    let envs = (0..k)
        .map(|i| {
            let mut mu = vec![0.5; k];
            mu[i] = 0.5 - delta;
            mu
        })
        .collect();
    Ok(LowerBoundInstance {
        family: Family::EpsUniform,
        policy_set,
        envs,
        delta,
        t_min,
        floor: eps * (kf * t).sqrt() / 18.0,
        horizon,
    })
}

/// Two-policy family: `μ_1(j) = ½ - Δ z(j)`, `μ_2(j) = ½ + Δ z(j)` with
/// `z = (√θ1 - √θ2)/(√θ1 + √θ2)`.
pub fn two_policy_instance(
    theta1: &[f64],
    theta2: &[f64],
    horizon: u64,
) -> Result<LowerBoundInstance> {
    let policy_set = make_two_policy(theta1, theta2)?;
    let (t1, t2) = (policy_set.row(0), policy_set.row(1));
    let h2 = hellinger_sq(t1, t2)?;
    if !(h2 > 0.0) {
        return Err(Error::ZeroHellinger);
    }
    let t_min = 1.0 / (8.0 * (4.0f64 / 3.0).ln() * h2);
    check_horizon(horizon, t_min)?;
    let t = horizon as f64;
    let delta = 1.0 / (4.0 * (kl_gap_constant() * h2 * t).sqrt());
    let z: Vec<f64> = t1
        .iter()
        .zip(t2)
        .map(|(a, b)| (a.sqrt() - b.sqrt()) / (a.sqrt() + b.sqrt()))
        .collect();
    let envs = vec![
        z.iter().map(|z| 0.5 - delta * z).collect(),
        z.iter().map(|z| 0.5 + delta * z).collect(),
    ];
    Ok(LowerBoundInstance {
        family: Family::TwoPolicy,
        policy_set,
        envs,
        delta,
        t_min,
        floor: (h2 * t).sqrt() / 13.0,
        horizon,
    })
}

/// Multi-task family: in `μ_θ` every arm in the support of `θ` has mean `½ - Δ`.
pub fn multitask_instance(m: usize, q: usize, horizon: u64) -> Result<LowerBoundInstance> {
    let policy_set = make_multitask(m, q)?;
    let kf = policy_set.k() as f64;
    let t_min = kf / (4.0 * (4.0f64 / 3.0).ln());
    check_horizon(horizon, t_min)?;
    let t = horizon as f64;
    let delta = 0.25 * (2.0 * kf / (kl_gap_constant() * t)).sqrt();
    let envs = (0..policy_set.n())
        .map(|i| {
            let mut mu = vec![0.5; policy_set.k()];
            for (section, choice) in multitask_choices(i, m, q).into_iter().enumerate() {
                mu[section * q + choice] = 0.5 - delta;
            }
            mu
        })
        .collect();
    Ok(LowerBoundInstance {
        family: Family::MultiTask,
        policy_set,
        envs,
        delta,
        t_min,
        floor: (kf * t).sqrt() / 18.0,
        horizon,
    })
}
