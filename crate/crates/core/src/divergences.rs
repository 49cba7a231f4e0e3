//! Similarity indices of a policy set and the divergences they are built from.
//!
//! Infinite KL values are returned as `f64::INFINITY`, never as errors.

use serde::{Deserialize, Serialize};

use crate::hull::{minimize_over_hull_with_cost, Control, EntropicProximal};
use crate::{Error, PolicyOrdering, PolicySet, Result};

pub const DEFAULT_SOLVER_TOL: f64 = 1e-9;
pub const BLAHUT_ARIMOTO_MAX_ITER: usize = 100_000;
/// Blahut–Arimoto iterations before switching to the Newton refinement.
const BLAHUT_ARIMOTO_WARMUP: usize = 500;

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

/// `S(Θ) = Σ_j max_θ θ(j)`.
pub fn s_index(set: &PolicySet) -> f64 {
    set.column_max().iter().sum()
}

/// `S*(Θ) = Σ_j (max_θ θ(j) - min_θ θ(j))`.
pub fn s_star_index(set: &PolicySet) -> f64 {
    set.column_max()
        .iter()
        .zip(set.column_min())
        .map(|(hi, lo)| hi - lo)
        .sum()
}

/// Set-level total variation: the upper variations of each policy against the
/// running per-arm maximum of the policies before it.
///
/// The value does not depend on the ordering (it always equals `S(Θ) - 1`);
/// the ordering is an explicit argument so that this can be checked.
pub fn tv_set_index(set: &PolicySet, ordering: &PolicyOrdering) -> Result<f64> {
    if ordering.len() != set.n() {
        return Err(Error::LengthMismatch {
            expected: set.n(),
            got: ordering.len(),
        });
    }
    let perm = ordering.as_slice();
    let mut running = set.row(perm[0]).to_vec();
    let mut total = 0.0;
    for &i in &perm[1..] {
        for (r, &p) in running.iter_mut().zip(set.row(i)) {
            if p > *r {
                total += p - *r;
                *r = p;
            }
        }
    }
    Ok(total)
}

/// `D_TV(p, q) = ½ Σ |p - q|`.
pub fn pairwise_tv(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Squared Hellinger distance `½ Σ (√p - √q)²`.
pub fn hellinger_sq(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(0.5
        * p.iter()
            .zip(q)
            .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
            .sum::<f64>())
}

/// `D(p, q) = Σ_{p(j) > 0} p(j) log(p(j)/q(j))`, `+∞` when `q` misses mass of `p`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    Ok(kl_unchecked(p, q))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total
}

/// KL divergence between Bernoulli distributions with means `a` and `b`.
pub fn bernoulli_kl(a: f64, b: f64) -> Result<f64> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!(
                "Bernoulli mean {v} outside [0, 1]"
            )));
        }
    }
    let term = |x: f64, y: f64| -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    Ok(term(a, b) + term(1.0 - a, 1.0 - b))
}

/// `D(Θ‖τ) = max_θ D(θ, τ)`.
pub fn d_radius(set: &PolicySet, tau: &[f64]) -> Result<f64> {
    if tau.len() != set.k() {
        return Err(Error::LengthMismatch {
            expected: set.k(),
            got: tau.len(),
        });
    }
    Ok(set
        .rows()
        .map(|row| kl_unchecked(row, tau))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Result of the KL-width computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DStar {
    /// `D(Θ‖τ*)`, the certified upper estimate.
    pub value: f64,
    /// Minimizing distribution; a mixture of the policies.
    pub tau: Vec<f64>,
    /// Mixture weights over the policies with `Θᵀ weights = tau`.
    pub weights: Vec<f64>,
    /// Weighted average of `D(θ, τ*)`, a lower bound on the true width.
    pub lower: f64,
    pub iterations: usize,
}

impl DStar {
    pub fn gap(&self) -> f64 {
        self.value - self.lower
    }
}

/// KL width `D*(Θ) = min_τ max_θ D(θ, τ)`.
///
/// This is the capacity of the channel whose rows are the policies, computed by
/// Blahut–Arimoto on a weight vector over the policies. Every iterate gives a
/// bracket: the weighted average divergence to the mixture is below the width,
/// the maximum divergence is above it. Iteration stops when the bracket is
/// narrower than `tol`. Blahut–Arimoto is sublinear when optimal weights sit on
/// the boundary, so after a short warm-up the same problem is finished by the
/// face-Newton hull solver.
pub fn d_star(set: &PolicySet, tol: f64) -> Result<DStar> {
    d_star_with_limit(set, tol, BLAHUT_ARIMOTO_MAX_ITER)
}

/// Bracket `(upper, lower, tau)` of the width at the given weights.
fn width_bracket(set: &PolicySet, weights: &[f64], divs: &mut [f64]) -> (f64, f64, Vec<f64>) {
    let tau = set.mix(weights);
    for (d, row) in divs.iter_mut().zip(set.rows()) {
        *d = kl_unchecked(row, &tau);
    }
    let upper = divs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower: f64 = weights.iter().zip(divs.iter()).map(|(w, d)| w * d).sum();
    (upper, lower, tau)
}

/// `max_iter` caps the Blahut–Arimoto warm-up and the Newton refinement separately.
pub fn d_star_with_limit(set: &PolicySet, tol: f64, max_iter: usize) -> Result<DStar> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = set.n();
    let mut weights = vec![1.0 / n as f64; n];
    let mut divs = vec![0.0; n];
    let warmup = max_iter.min(BLAHUT_ARIMOTO_WARMUP);
    for iteration in 0..warmup {
        let (upper, lower, tau) = width_bracket(set, &weights, &mut divs);
        if upper - lower <= tol {
            return Ok(DStar {
                value: upper,
                tau,
                weights,
                lower,
                iterations: iteration,
            });
        }
        let mut z = 0.0;
        for (w, d) in weights.iter_mut().zip(&divs) {
            *w *= (d - upper).exp();
            z += *w;
        }
        weights.iter_mut().for_each(|w| *w /= z);
    }

    // Mutual information I(w) = H(Θᵀw) - Σ_i w_i H(θ_i). Minimizing -I over the
    // simplex has Frank–Wolfe gap max_i D_i - Σ_i w_i D_i, the same bracket.
    let row_entropy: Vec<f64> = set
        .rows()
        .map(|r| {
            -r.iter()
                .filter(|&&p| p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>()
        })
        .collect();
    let entropy = EntropicProximal {
        linear: vec![0.0; set.k()],
    };
    let sol = minimize_over_hull_with_cost(
        set,
        &entropy,
        Some(&row_entropy),
        &weights,
        max_iter,
        |_, gap, _| {
            if gap <= 0.5 * tol {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    );
    let (upper, lower, tau) = width_bracket(set, &sol.weights, &mut divs);
    if upper - lower <= tol {
        return Ok(DStar {
            value: upper,
            tau,
            weights: sol.weights,
            lower,
            iterations: warmup + sol.iterations,
        });
    }
    Err(Error::NoConvergence {
        what: "KL width",
        iterations: warmup + sol.iterations,
        gap: upper - lower,
    })
}

/// Average divergence of the policies to their uniform mixture (information radius
/// at uniform weights).
pub fn jsd_uniform(set: &PolicySet) -> f64 {
    let n = set.n();
    let mixture = set.mix(&vec![1.0 / n as f64; n]);
    set.rows().map(|r| kl_unchecked(r, &mixture)).sum::<f64>() / n as f64
}

/// Minimizer of `Σ_θ D_TV(θ, τ)` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSumTv {
    pub value: f64,
    pub tau: Vec<f64>,
}

/// Solves `min_τ Σ_θ D_TV(θ, τ)` exactly.
///
/// The objective is a sum over arms of convex piecewise-linear functions of
/// `τ(j)` coupled only through `Σ τ = 1`. Starting from `τ = 0`, the unit of mass
/// is poured into the linear pieces in increasing order of slope, which is the
/// LP optimum for a separable convex allocation.
pub fn min_sum_tv(set: &PolicySet) -> MinSumTv {
    let n = set.n();
    let half_n = n as f64 / 2.0;
    // (slope, arm, length)
    let mut pieces: Vec<(f64, usize, f64)> = Vec::with_capacity(n * set.k());
    for j in 0..set.k() {
        let mut vals: Vec<f64> = set.column(j).collect();
        vals.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for (below, &v) in vals.iter().enumerate() {
            if v > prev {
                pieces.push((below as f64 - half_n, j, v - prev));
                prev = v;
            }
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut tau = vec![0.0; set.k()];
    let mut remaining = 1.0;
    for (_, j, len) in pieces {
        if remaining <= 0.0 {
            break;
        }
        let take = len.min(remaining);
        tau[j] += take;
        remaining -= take;
    }
    // S(Θ) >= 1 guarantees the pieces hold a full unit; this only absorbs rounding.
    if remaining > 0.0 {
        let z: f64 = tau.iter().sum();
        tau.iter_mut().for_each(|t| *t /= z);
    }
    let value = sum_tv(set, &tau);
    MinSumTv { value, tau }
}

/// `Σ_θ D_TV(θ, τ)`.
pub fn sum_tv(set: &PolicySet, tau: &[f64]) -> f64 {
    set.rows()
        .map(|r| 0.5 * r.iter().zip(tau).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum()
}

/// Every index of a policy set in one place; the JSON form of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub s: f64,
    pub s_star: f64,
    pub tv_set: f64,
    pub d_star: f64,
    pub d_star_lower: f64,
    pub tau_star: Vec<f64>,
    pub min_sum_tv: f64,
    pub pairwise_tv: Vec<Vec<f64>>,
    pub pairwise_h2: Vec<Vec<f64>>,
    pub log_n: f64,
    pub k: usize,
    pub n: usize,
}

pub fn similarity_report(set: &PolicySet) -> Result<SimilarityReport> {
    similarity_report_with_tol(set, DEFAULT_SOLVER_TOL)
}

pub fn similarity_report_with_tol(set: &PolicySet, tol: f64) -> Result<SimilarityReport> {
    let width = d_star(set, tol)?;
    let n = set.n();
    let mut pairwise_tv_m = vec![vec![0.0; n]; n];
    let mut pairwise_h2 = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let tv = pairwise_tv(set.row(a), set.row(b))?;
            let h2 = hellinger_sq(set.row(a), set.row(b))?;
            pairwise_tv_m[a][b] = tv;
            pairwise_tv_m[b][a] = tv;
            pairwise_h2[a][b] = h2;
            pairwise_h2[b][a] = h2;
        }
    }
    Ok(SimilarityReport {
        s: s_index(set),
        s_star: s_star_index(set),
        tv_set: tv_set_index(set, &PolicyOrdering::identity(n))?,
        d_star: width.value,
        d_star_lower: width.lower,
        tau_star: width.tau,
        min_sum_tv: min_sum_tv(set).value,
        pairwise_tv: pairwise_tv_m,
        pairwise_h2,
        log_n: (n as f64).ln(),
        k: set.k(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy_sets::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn s_index_examples() {
        let single = PolicySet::validate(&[vec![0.3, 0.7]]).unwrap();
        assert_eq!(s_index(&single), 1.0);
        assert!(close(s_index(&make_flower(4, 5, 3).unwrap()), 2.2, 1e-12));
        assert!(close(
            s_index(&make_eps_uniform(4, 0.5).unwrap()),
            2.5,
            1e-12
        ));
    }

    #[test]
    fn s_star_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 3]).unwrap();
        assert_eq!(s_star_index(&same), 0.0);
        let two = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        assert!(close(s_star_index(&two), 1.4, 1e-12));
        assert!(close(
            s_star_index(&two),
            2.0 * pairwise_tv(two.row(0), two.row(1)).unwrap(),
            1e-12
        ));
        for m in 1..6 {
            let set = make_all_uniform_minus_one(m).unwrap();
            let expected = (m as f64 + 1.0) / m as f64;
            assert!(close(s_star_index(&set), expected, 1e-12));
            assert!(close(s_index(&set), expected, 1e-12));
        }
    }

    #[test]
    fn tv_set_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 3]).unwrap();
        assert_eq!(
            tv_set_index(&same, &PolicyOrdering::new(vec![2, 0, 1]).unwrap()).unwrap(),
            0.0
        );
        let two = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        let tv = pairwise_tv(two.row(0), two.row(1)).unwrap();
        for perm in [vec![0, 1], vec![1, 0]] {
            let v = tv_set_index(&two, &PolicyOrdering::new(perm).unwrap()).unwrap();
            assert!(close(v, tv, 1e-12));
        }
        let flower = make_flower(4, 5, 3).unwrap();
        for perm in [vec![0, 1, 2, 3], vec![3, 1, 0, 2], vec![2, 3, 1, 0]] {
            let v = tv_set_index(&flower, &PolicyOrdering::new(perm).unwrap()).unwrap();
            assert!(close(v, 1.2, 1e-12));
        }
        assert!(tv_set_index(&flower, &PolicyOrdering::identity(3)).is_err());
    }

    #[test]
    fn pairwise_examples() {
        let p = [0.9, 0.1];
        let q = [0.2, 0.8];
        assert_eq!(pairwise_tv(&p, &p).unwrap(), 0.0);
        assert_eq!(pairwise_tv(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(close(pairwise_tv(&p, &q).unwrap(), 0.7, 1e-12));
        assert!(pairwise_tv(&p, &[1.0]).is_err());

        assert_eq!(hellinger_sq(&p, &p).unwrap(), 0.0);
        assert!(close(
            hellinger_sq(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            1.0,
            1e-15
        ));
        let h2 = hellinger_sq(&p, &q).unwrap();
        let direct = 0.5
            * ((0.9f64.sqrt() - 0.2f64.sqrt()).powi(2) + (0.1f64.sqrt() - 0.8f64.sqrt()).powi(2));
        assert!(close(h2, direct, 1e-15));
        assert!((0.5 * 0.7 * 0.7..=0.7).contains(&h2));
        assert!(hellinger_sq(&p, &[1.0]).is_err());
    }

    #[test]
    fn kl_examples() {
        let p = [0.3, 0.7];
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        assert!(close(kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), LN2, 1e-15));
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl(&p, &[1.0]).is_err());
    }

    #[test]
    fn bernoulli_kl_examples() {
        for x in [0.0, 0.2, 0.5, 1.0] {
            assert_eq!(bernoulli_kl(x, x).unwrap(), 0.0);
        }
        let c = 8.0 * (4.0f64 / 3.0).ln();
        for delta in [0.01, 0.1, 0.2, 0.25] {
            let d = bernoulli_kl(0.5, 0.5 - delta).unwrap();
            assert!(close(d, -0.5 * (1.0 - 4.0 * delta * delta).ln(), 1e-14));
            assert!(d <= c * delta * delta + 1e-15);
        }
        // at Δ = 1/4 the quadratic bound is tight
        assert!(close(bernoulli_kl(0.5, 0.25).unwrap(), c / 16.0, 1e-15));
        assert_eq!(bernoulli_kl(0.5, 0.0).unwrap(), f64::INFINITY);
        assert!(bernoulli_kl(1.2, 0.5).is_err());
    }

    #[test]
    fn d_radius_examples() {
        let single = PolicySet::validate(&[vec![0.3, 0.7]]).unwrap();
        assert_eq!(d_radius(&single, &[0.3, 0.7]).unwrap(), 0.0);
        let k = 5;
        let eps = 0.4;
        let set = make_eps_uniform(k, eps).unwrap();
        let tau = vec![1.0 / k as f64; k];
        let kf = k as f64;
        let display = (kf - 1.0) / kf * (1.0 - eps) * (1.0 - eps).ln()
            + (1.0 + eps * (kf - 1.0)) / kf * (1.0 + eps * (kf - 1.0)).ln();
        assert!(close(d_radius(&set, &tau).unwrap(), display, 1e-14));
        let flower = make_flower(3, 2, 1).unwrap();
        let mut tau = vec![0.25; 4];
        tau[3] = 0.0;
        tau[0] = 0.5;
        assert_eq!(d_radius(&flower, &tau).unwrap(), f64::INFINITY);
        assert!(d_radius(&flower, &[1.0]).is_err());
    }

    #[test]
    fn d_star_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 3]).unwrap();
        let r = d_star(&same, 1e-9).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(close(r.tau[0], 0.3, 1e-15));

        let disjoint = make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let r = d_star(&disjoint, 1e-9).unwrap();
        assert!(close(r.value, LN2, 1e-9));

        for (n, m, v) in [(4, 5, 3), (3, 4, 1), (5, 2, 0)] {
            let set = make_flower(n, m, v).unwrap();
            let r = d_star(&set, 1e-9).unwrap();
            let expected = (m - v) as f64 / m as f64 * (n as f64).ln();
            assert!(
                close(r.value, expected, 1e-8),
                "{n} {m} {v}: {} vs {expected}",
                r.value
            );
            assert!(r.gap() <= 1e-9);
        }
        assert!(d_star(&disjoint, 0.0).is_err());
    }

    #[test]
    fn d_star_iteration_cap() {
        let set = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        assert!(matches!(
            d_star_with_limit(&set, 1e-12, 0),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn jsd_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 3]).unwrap();
        assert!(jsd_uniform(&same).abs() < 1e-16);
        let flower = make_flower(4, 5, 3).unwrap();
        let j = jsd_uniform(&flower);
        assert!(close(j, 0.4 * 4f64.ln(), 1e-12));
        assert!(close(j, d_star(&flower, 1e-10).unwrap().value, 1e-9));
        let disjoint = make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(close(jsd_uniform(&disjoint), LN2, 1e-15));
    }

    #[test]
    fn min_sum_tv_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 2]).unwrap();
        let r = min_sum_tv(&same);
        assert!(r.value.abs() < 1e-15);
        assert!(close(r.tau[0], 0.3, 1e-15));

        let two = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        let r = min_sum_tv(&two);
        let tv = tv_set_index(&two, &PolicyOrdering::identity(2)).unwrap();
        assert!(r.value >= tv - 1e-12);
        // K = 2 grid oracle
        let grid = (0..=1000)
            .map(|i| {
                let p = i as f64 / 1000.0;
                sum_tv(&two, &[p, 1.0 - p])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(r.value <= grid + 1e-12);

        let flower = make_flower(4, 5, 3).unwrap();
        let r = min_sum_tv(&flower);
        assert!(r.value >= 1.2 - 1e-12);
        assert!(s_star_index(&flower) <= 2.0 * r.value + 1e-12);
        assert!(close(r.tau.iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn report_examples() {
        let r = similarity_report(&make_eps_uniform(4, 0.5).unwrap()).unwrap();
        assert!(close(r.s, 2.5, 1e-12));
        assert!(close(r.s_star, 2.0, 1e-12));
        assert!(close(r.tv_set, 1.5, 1e-12));
        assert!(close(r.d_star, 0.31278, 1e-4));

        let r = similarity_report(&make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!((r.s, r.s_star, r.tv_set), (2.0, 2.0, 1.0));
        assert!(close(r.d_star, LN2, 1e-9));
        assert_eq!(r.pairwise_tv[0][1], 1.0);

        let r = similarity_report(&make_multitask(3, 2).unwrap()).unwrap();
        assert!(close(r.s_star, 2.0, 1e-12));
        assert!(close(r.d_star, LN2, 1e-8));
        assert!(close(r.s_star * r.log_n, 6.0 * LN2, 1e-12));
        assert!(close(r.k as f64 * r.d_star, 6.0 * LN2, 1e-7));
    }
}
