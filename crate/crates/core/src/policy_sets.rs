//! Policy sets: `N` fixed probability vectors over `K` arms.
//!
//! Arms and policies are 0-indexed throughout. The generators build the
//! structured families used by the lower-bound constructions; every generator
//! output passes [`PolicySet::validate`] unchanged.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Row sums within this distance of 1 are renormalized, anything further is rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of policies [`make_multitask`] will enumerate.
pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// A validated policy set, stored row-major (`probs[i * k + j]` is `θ_i(j)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    k: usize,
    n: usize,
    probs: Vec<f64>,
}

impl PolicySet {
    /// Checks nonnegativity, row sums and arm coverage.
    ///
    /// Rows whose sum is off by at most [`ROW_SUM_TOLERANCE`] are divided by
    /// their sum; larger deviations are errors. Rows already exact up to
    /// summation rounding are kept bit-for-bit, so a save/load round trip is lossless.
    pub fn validate(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 {
            return Err(Error::Empty);
        }
        let mut probs = Vec::with_capacity(n * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSumOutOfTolerance { row: i, sum });
            }
            if (sum - 1.0).abs() <= k as f64 * f64::EPSILON {
                probs.extend_from_slice(row);
            } else {
                probs.extend(row.iter().map(|v| v / sum));
            }
        }
        let set = PolicySet { k, n, probs };
        if let Some(arm) = (0..k).find(|&j| set.column(j).all(|v| v <= 0.0)) {
            return Err(Error::UncoveredArm { arm });
        }
        Ok(set)
    }

    /// Number of arms.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of policies.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.probs.chunks_exact(self.k)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Per-arm maximum over policies, `s(j)`.
    pub fn column_max(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| self.column(j).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Per-arm minimum over policies, `q(j)`.
    pub fn column_min(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| self.column(j).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// The mixture `Σ_i w_i θ_i`.
    pub fn mix(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.mix_into(weights, &mut out);
        out
    }

    pub fn mix_into(&self, weights: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (row, &w) in self.rows().zip(weights) {
            if w != 0.0 {
                for (o, &p) in out.iter_mut().zip(row) {
                    *o += w * p;
                }
            }
        }
    }

    /// Indices of the arms in the support of policy `i`.
    pub fn support(&self, i: usize) -> Vec<usize> {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Writes the JSON file format, reals with 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        write!(s, "{{\"K\": {}, \"policies\": [", self.k).unwrap();
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push('[');
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                write!(s, "{v:.16e}").unwrap();
            }
            s.push(']');
        }
        s.push_str("]}\n");
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: PolicySetFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_policy_set()
    }
}

#[derive(Serialize, Deserialize)]
struct PolicySetFile {
    #[serde(rename = "K")]
    k: usize,
    policies: Vec<Vec<f64>>,
}

impl PolicySetFile {
    fn into_policy_set(self) -> Result<PolicySet> {
        if let Some(bad) = self.policies.iter().find(|r| r.len() != self.k) {
            return Err(Error::Parse(format!(
                "policy has {} entries but K = {}",
                bad.len(),
                self.k
            )));
        }
        PolicySet::validate(&self.policies)
    }
}

impl Serialize for PolicySet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolicySetFile {
            k: self.k,
            policies: self.to_rows(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolicySet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        PolicySetFile::deserialize(deserializer)?
            .into_policy_set()
            .map_err(serde::de::Error::custom)
    }
}

pub fn load_policy_set(path: impl AsRef<Path>) -> Result<PolicySet> {
    let text = std::fs::read_to_string(path)?;
    PolicySet::from_json_str(&text)
}

pub fn save_policy_set(set: &PolicySet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, set.to_json_string())?;
    Ok(())
}

/// A permutation of the policy indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyOrdering(Vec<usize>);

impl PolicyOrdering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidShape(format!(
                    "{perm:?} is not a permutation"
                )));
            }
        }
        Ok(PolicyOrdering(perm))
    }

    pub fn identity(n: usize) -> Self {
        PolicyOrdering((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn make_two_policy(theta1: &[f64], theta2: &[f64]) -> Result<PolicySet> {
    if theta1.len() != theta2.len() {
        return Err(Error::LengthMismatch {
            expected: theta1.len(),
            got: theta2.len(),
        });
    }
    PolicySet::validate(&[theta1.to_vec(), theta2.to_vec()])
}

/// Radially symmetric uniform policies.
///
/// Arms `0..v` form the common core; policy `i` additionally owns the private
/// block `v + i(m-v) .. v + (i+1)(m-v)`. Every policy is uniform on its `m` arms,
/// so `K = v + n(m - v)`.
pub fn make_flower(n: usize, m: usize, v: usize) -> Result<PolicySet> {
    if n < 2 || m == 0 || v > m {
        return Err(Error::InvalidShape(format!(
            "flower needs n >= 2 and 0 <= v <= m, m >= 1 (got n={n}, m={m}, v={v})"
        )));
    }
    let petal = m - v;
    let k = v + n * petal;
    let mass = 1.0 / m as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; k];
            row[..v].fill(mass);
            row[v + i * petal..v + (i + 1) * petal].fill(mass);
            row
        })
        .collect();
    PolicySet::validate(&rows)
}

/// All `M+1` uniform policies on `M` out of `K = M+1` arms; policy `i` omits arm `i`.
pub fn make_all_uniform_minus_one(m: usize) -> Result<PolicySet> {
    if m < 1 {
        return Err(Error::InvalidShape("M must be at least 1".into()));
    }
    let k = m + 1;
    let mass = 1.0 / m as f64;
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 0.0 } else { mass }).collect())
        .collect();
    PolicySet::validate(&rows)
}

/// `θ_i(j) = (1-eps)/K + eps·[j = i]`, one policy per arm.
pub fn make_eps_uniform(k: usize, eps: f64) -> Result<PolicySet> {
    if k < 2 {
        return Err(Error::InvalidShape(format!(
            "eps-uniform needs K >= 2, got {k}"
        )));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let base = (1.0 - eps) / k as f64;
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { base + eps } else { base })
                .collect()
        })
        .collect();
    PolicySet::validate(&rows)
}

pub fn make_multitask(m: usize, q: usize) -> Result<PolicySet> {
    make_multitask_with_cap(m, q, DEFAULT_POLICY_CAP)
}

/// Multi-task structure: `K = qM` arms in `M` sections of `q`; one policy per
/// choice of an arm in every section, uniform with mass `1/M` on its choices.
///
/// Policies are enumerated lexicographically in the per-section choices, section 0
/// most significant; arm `c` of section `s` has index `s·q + c`.
pub fn make_multitask_with_cap(m: usize, q: usize, cap: usize) -> Result<PolicySet> {
    if m < 1 || q < 2 {
        return Err(Error::InvalidShape(format!(
            "multi-task needs M >= 1 and q >= 2 (got M={m}, q={q})"
        )));
    }
    let n = multitask_size(m, q)
        .filter(|&n| n <= cap as u128)
        .ok_or(Error::SizeLimit {
            requested: multitask_size(m, q).unwrap_or(u128::MAX),
            cap,
        })? as usize;
    let k = q * m;
    let mass = 1.0 / m as f64;
    let mut rows = Vec::with_capacity(n);
    for idx in 0..n {
        let mut row = vec![0.0; k];
        for (section, choice) in multitask_choices(idx, m, q).into_iter().enumerate() {
            row[section * q + choice] = mass;
        }
        rows.push(row);
    }
    PolicySet::validate(&rows)
}

fn multitask_size(m: usize, q: usize) -> Option<u128> {
    (q as u128).checked_pow(u32::try_from(m).ok()?)
}

/// Per-section arm choices of multi-task policy `idx`.
pub fn multitask_choices(mut idx: usize, m: usize, q: usize) -> Vec<usize> {
    let mut choices = vec![0; m];
    for c in choices.iter_mut().rev() {
        *c = idx % q;
        idx /= q;
    }
    choices
}
