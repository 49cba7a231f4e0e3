//! EXP4 over a fixed policy set, and online stochastic mirror descent (OSMD)
//! with the negative-entropy regularizer on the convex hull of the policies.

use rand::RngCore;

use crate::divergences::{s_star_index, DStar};
use crate::hull::{minimize_over_hull, residual, Control, Decomposer, EntropicProximal};
use crate::sampling::sample_index;
use crate::{Error, PolicySet, Result};

/// Default relative duality-gap tolerance of the OSMD projection.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
/// Hull certificate tolerance carried by every OSMD iterate.
pub const CERTIFICATE_TOL: f64 = 1e-9;
const PROJECTION_MAX_ITER: usize = 10_000;
/// Budget for checking whether the unconstrained update already lies in the hull.
const SHORT_CIRCUIT_MAX_ITER: usize = 25;
const DIVISION_FLOOR: f64 = 1e-300;

/// Losses of one round as seen by a learner.
pub trait RoundLosses {
    /// Loss revealed for the played arm.
    fn observe(&mut self, arm: usize, rng: &mut dyn RngCore) -> f64;
    /// Expected loss of `arm` this round; used only for bookkeeping.
    fn expected(&self, arm: usize) -> f64;
}

/// A fixed loss vector, observed exactly.
impl RoundLosses for &[f64] {
    fn observe(&mut self, arm: usize, _rng: &mut dyn RngCore) -> f64 {
        self[arm]
    }
    fn expected(&self, arm: usize) -> f64 {
        self[arm]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub policy_index: usize,
    pub arm: usize,
    pub observed_loss: f64,
    /// `ℓ_t(θ_t)` for EXP4, `⟨x_t, ℓ_t⟩` for OSMD, with expected losses.
    pub expected_loss_of_play: f64,
}

fn expected_inner(probs: &[f64], losses: &dyn RoundLosses) -> f64 {
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(j, &p)| p * losses.expected(j))
        .sum()
}

// ---------------------------------------------------------------------------
// EXP4
// ---------------------------------------------------------------------------

/// Learning rate `√(2 log N / (T S*(Θ)))`.
pub fn exp4_eta(set: &PolicySet, horizon: u64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::OutOfRange("horizon must be at least 1".into()));
    }
    let s_star = s_star_index(set);
    if s_star <= 1e-15 {
        return Err(Error::DegenerateSet);
    }
    Ok((2.0 * (set.n() as f64).ln() / (horizon as f64 * s_star)).sqrt())
}

/// `P(θ) ∝ exp(-η L(θ))`, shifted by the minimum cumulative loss.
pub fn exp4_distribution(cum_est_loss: &[f64], eta: f64) -> Vec<f64> {
    let min = cum_est_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = cum_est_loss
        .iter()
        .map(|&l| (-eta * (l - min)).exp())
        .collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Arm marginals `ψ(a) = Σ_θ P(θ) θ(a)`.
pub fn arm_marginals(set: &PolicySet, policy_probs: &[f64]) -> Vec<f64> {
    set.mix(policy_probs)
}

/// Importance-weighted policy losses `ℓ̂(θ) = θ(a) ℓ / ψ(a)` after playing `arm`.
pub fn exp4_estimates(
    set: &PolicySet,
    policy_probs: &[f64],
    arm: usize,
    loss: f64,
) -> Result<Vec<f64>> {
    let psi: f64 = set
        .rows()
        .zip(policy_probs)
        .map(|(row, p)| p * row[arm])
        .sum();
    if !(psi > 0.0) {
        return Err(Error::ZeroPsi);
    }
    Ok(set.rows().map(|row| row[arm] * loss / psi).collect())
}

/// Subtracts a common term from every policy estimate.
///
/// The EXP4 distribution is invariant under this shift; with
/// `q_term = q(a) ℓ / ψ(a)` it maps `ℓ̂` to the shifted estimates `ζ̂`.
pub fn zeta_shift(est: &[f64], q_term: f64) -> Vec<f64> {
    est.iter().map(|e| e - q_term).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp4State {
    pub cum_est_loss: Vec<f64>,
    pub eta: f64,
    pub round: u64,
}

impl Exp4State {
    pub fn new(n: usize, eta: f64) -> Self {
        Exp4State {
            cum_est_loss: vec![0.0; n],
            eta,
            round: 0,
        }
    }

    /// State with the tuned learning rate; identical policies get `η = 0`.
    pub fn tuned(set: &PolicySet, horizon: u64) -> Result<Self> {
        let eta = match exp4_eta(set, horizon) {
            Ok(eta) => eta,
            Err(Error::DegenerateSet) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(Self::new(set.n(), eta))
    }

    pub fn distribution(&self) -> Vec<f64> {
        exp4_distribution(&self.cum_est_loss, self.eta)
    }

    /// Plays one round: `θ ~ P`, `A ~ θ`, then credits every policy with its estimate.
    pub fn step(
        &mut self,
        set: &PolicySet,
        losses: &mut dyn RoundLosses,
        rng: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let probs = self.distribution();
        let policy_index = sample_index(&probs, rng);
        let row = set.row(policy_index);
        let arm = sample_index(row, rng);
        let observed_loss = losses.observe(arm, rng);
        let est = exp4_estimates(set, &probs, arm, observed_loss)?;
        #[cfg(debug_assertions)]
        check_exp4_second_moment(set, &probs, arm, observed_loss);
        for (c, e) in self.cum_est_loss.iter_mut().zip(&est) {
            *c += e;
        }
        self.round += 1;
        Ok(RoundOutcome {
            policy_index,
            arm,
            observed_loss,
            expected_loss_of_play: expected_inner(row, &*losses),
        })
    }
}

/// Realized second moment of the shifted estimates and its per-round bound:
/// `Σ_θ P(θ)(θ(a) - q(a))² ℓ²/ψ² ≤ (s(a) - q(a)) ℓ²/ψ`.
pub fn exp4_second_moment(
    set: &PolicySet,
    policy_probs: &[f64],
    arm: usize,
    loss: f64,
) -> (f64, f64) {
    let column: Vec<f64> = set.column(arm).collect();
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let psi: f64 = column.iter().zip(policy_probs).map(|(c, p)| c * p).sum();
    let moment: f64 = column
        .iter()
        .zip(policy_probs)
        .map(|(c, p)| p * (c - lo).powi(2))
        .sum::<f64>()
        * loss
        * loss
        / (psi * psi);
    (moment, (hi - lo) * loss * loss / psi)
}

#[cfg(debug_assertions)]
fn check_exp4_second_moment(set: &PolicySet, policy_probs: &[f64], arm: usize, loss: f64) {
    let (moment, bound) = exp4_second_moment(set, policy_probs, arm, loss);
    debug_assert!(
        moment <= bound * (1.0 + 1e-9) + 1e-12,
        "second moment {moment} exceeds {bound}"
    );
}

// ---------------------------------------------------------------------------
// OSMD on the hull
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct OsmdState {
    /// Current iterate `x_t`, a point of `co(Θ)`.
    pub x: Vec<f64>,
    /// Mixture weights certifying `x ∈ co(Θ)`; also the policy sampling distribution.
    pub w: Vec<f64>,
    pub eta: f64,
    pub tau_star: Vec<f64>,
    pub round: u64,
}

/// Diagnostics of one proximal update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    /// Duality gap of the returned point (0 when exact).
    pub gap: f64,
    pub iterations: usize,
    /// The unconstrained multiplicative update was already in the hull.
    pub short_circuit: bool,
}

/// OSMD learner for a fixed policy set.
#[derive(Debug, Clone)]
pub struct Osmd {
    decomposer: Decomposer,
    pub projection_tol: f64,
    pub certificate_tol: f64,
}

impl Osmd {
    pub fn new(set: &PolicySet) -> Self {
        Osmd {
            decomposer: Decomposer::new(set),
            projection_tol: DEFAULT_PROJECTION_TOL,
            certificate_tol: CERTIFICATE_TOL,
        }
    }

    pub fn set(&self) -> &PolicySet {
        self.decomposer.set()
    }

    /// Starts at `τ*` with `η = √(2 D* / (T K))`.
    pub fn init(&self, horizon: u64, width: &DStar) -> Result<OsmdState> {
        if horizon == 0 {
            return Err(Error::OutOfRange("horizon must be at least 1".into()));
        }
        let set = self.set();
        let tau = width.tau.clone();
        let w = if width.weights.len() == set.n()
            && residual(set, &width.weights, &tau) <= self.certificate_tol
        {
            width.weights.clone()
        } else {
            self.decomposer
                .decompose(&tau, 1e-6, Some(&width.weights))?
                .weights
        };
        let eta = if width.value <= 1e-15 {
            0.0
        } else {
            (2.0 * width.value / (horizon as f64 * set.k() as f64)).sqrt()
        };
        Ok(OsmdState {
            x: tau.clone(),
            w,
            eta,
            tau_star: tau,
            round: 0,
        })
    }

    /// `x_{t+1} = argmin_{x ∈ co(Θ)} η⟨x, ℓ̂⟩ + D(x, x_t)`.
    pub fn update(&self, state: &mut OsmdState, est_loss: &[f64]) -> Result<ProjectionReport> {
        let set = self.set();
        if est_loss.len() != set.k() {
            return Err(Error::LengthMismatch {
                expected: set.k(),
                got: est_loss.len(),
            });
        }
        let unchanged = ProjectionReport {
            gap: 0.0,
            iterations: 0,
            short_circuit: true,
        };
        if state.eta == 0.0 || est_loss.iter().all(|&l| l == 0.0) {
            return Ok(unchanged);
        }
        let log_y: Vec<f64> = state
            .x
            .iter()
            .zip(est_loss)
            .map(|(&x, &l)| {
                if x > 0.0 {
                    x.ln() - state.eta * l
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = log_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut y: Vec<f64> = log_y.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= z);

        if let Ok(d) = self.decomposer.decompose_with_limit(
            &y,
            self.certificate_tol,
            Some(&state.w),
            SHORT_CIRCUIT_MAX_ITER,
        ) {
            state.x = y;
            state.w = d.weights;
            return Ok(unchanged);
        }

        let linear: Vec<f64> = state
            .x
            .iter()
            .zip(est_loss)
            .map(|(&x, &l)| {
                if x > 0.0 {
                    state.eta * l - x.ln()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let tol = self.projection_tol;
        let sol = minimize_over_hull(
            set,
            &EntropicProximal { linear },
            &state.w,
            PROJECTION_MAX_ITER,
            |value, gap, _| {
                if value.is_finite() && gap <= tol * value.abs().max(1.0) {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        if !sol.stopped {
            return Err(Error::NoConvergence {
                what: "OSMD projection",
                iterations: sol.iterations,
                gap: sol.gap,
            });
        }
        state.x = sol.point;
        state.w = sol.weights;
        Ok(ProjectionReport {
            gap: sol.gap,
            iterations: sol.iterations,
            short_circuit: false,
        })
    }

    /// Plays one round: `θ ~ w`, `A ~ θ`, `ℓ̂(j) = [j = A] ℓ / x(A)`, then updates.
    pub fn step(
        &self,
        state: &mut OsmdState,
        losses: &mut dyn RoundLosses,
        rng: &mut dyn RngCore,
    ) -> Result<RoundOutcome> {
        let set = self.set();
        let policy_index = sample_index(&state.w, rng);
        let arm = sample_index(set.row(policy_index), rng);
        let observed_loss = losses.observe(arm, rng);
        let expected_loss_of_play = expected_inner(&state.x, &*losses);
        let est = osmd_estimates(&state.x, arm, observed_loss);
        self.update(state, &est)?;
        state.round += 1;
        Ok(RoundOutcome {
            policy_index,
            arm,
            observed_loss,
            expected_loss_of_play,
        })
    }
}

/// `ℓ̂(j) = [j = arm] ℓ / x(arm)`, with `x(arm)` floored at `1e-300`.
pub fn osmd_estimates(x: &[f64], arm: usize, loss: f64) -> Vec<f64> {
    let mut est = vec![0.0; x.len()];
    est[arm] = loss / x[arm].max(DIVISION_FLOOR);
    est
}

/// One-shot form of [`Osmd::init`].
pub fn osmd_init(set: &PolicySet, horizon: u64, width: &DStar) -> Result<OsmdState> {
    Osmd::new(set).init(horizon, width)
}

/// One-shot form of [`Osmd::update`] with an explicit relative gap tolerance.
pub fn osmd_update(
    state: &OsmdState,
    set: &PolicySet,
    est_loss: &[f64],
    tol: f64,
) -> Result<(OsmdState, ProjectionReport)> {
    let mut osmd = Osmd::new(set);
    osmd.projection_tol = tol;
    let mut next = state.clone();
    let report = osmd.update(&mut next, est_loss)?;
    Ok((next, report))
}

/// Objective `η⟨x, ℓ̂⟩ + D(x, x_t)` of the proximal step.
pub fn proximal_objective(x: &[f64], x_prev: &[f64], est_loss: &[f64], eta: f64) -> f64 {
    x.iter()
        .zip(x_prev)
        .zip(est_loss)
        .map(|((&a, &b), &l)| {
            let kl = if a > 0.0 { a * (a / b).ln() } else { 0.0 };
            eta * a * l + kl
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::d_star;
    use crate::policy_sets::*;
    use crate::sampling::rng_from_seed;

    #[test]
    fn eta_examples() {
        let flower = make_flower(4, 5, 3).unwrap();
        let eta = exp4_eta(&flower, 10_000).unwrap();
        assert!((eta - (2.0 * 4f64.ln() / (10_000.0 * 1.6)).sqrt()).abs() < 1e-15);
        let same = PolicySet::validate(&vec![vec![0.5, 0.5]; 3]).unwrap();
        assert!(matches!(exp4_eta(&same, 10), Err(Error::DegenerateSet)));
        let disjoint = make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let eta = exp4_eta(&disjoint, 8).unwrap();
        assert!((eta - (2.0 * 2f64.ln() / 16.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distribution_examples() {
        let s = Exp4State::new(4, 0.3);
        assert_eq!(s.distribution(), vec![0.25; 4]);
        let eta = 0.1;
        let p = exp4_distribution(&[0.0, 50.0 / eta], eta);
        assert!(p[1] < 1e-20);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(exp4_distribution(&[7.0, 7.0, 7.0], 2.0), vec![1.0 / 3.0; 3]);
        // overflow safety
        let p = exp4_distribution(&[1e308, 1e308], 10.0);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn estimates_examples() {
        let single = PolicySet::validate(&[vec![0.2, 0.8]]).unwrap();
        let est = exp4_estimates(&single, &[1.0], 1, 0.7).unwrap();
        assert!((est[0] - 0.7).abs() < 1e-15);

        let disjoint = make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let est = exp4_estimates(&disjoint, &[0.5, 0.5], 0, 1.0).unwrap();
        assert_eq!(est, vec![2.0, 0.0]);
        assert!(matches!(
            exp4_estimates(&disjoint, &[1.0, 0.0], 1, 1.0),
            Err(Error::ZeroPsi)
        ));
    }

    #[test]
    fn zeta_shift_invariance() {
        let est = [0.3, 1.7, 0.0, 2.2];
        assert_eq!(zeta_shift(&est, 0.0), est.to_vec());
        let a = exp4_distribution(&est, 0.8);
        let b = exp4_distribution(&zeta_shift(&est, 0.9), 0.8);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn exp4_step_is_reproducible() {
        let set = make_flower(4, 5, 3).unwrap();
        let losses: Vec<f64> = (0..set.k()).map(|j| j as f64 / 11.0).collect();
        let run = |seed| {
            let mut state = Exp4State::tuned(&set, 100).unwrap();
            let mut rng = rng_from_seed(seed);
            let outcomes: Vec<RoundOutcome> = (0..100)
                .map(|_| state.step(&set, &mut losses.as_slice(), &mut rng).unwrap())
                .collect();
            (state, outcomes)
        };
        let (a, oa) = run(5);
        let (b, ob) = run(5);
        assert_eq!(a, b);
        assert_eq!(oa, ob);
        assert_eq!(a.round, 100);
        for o in oa {
            assert!(set.row(o.policy_index)[o.arm] > 0.0);
        }
    }

    #[test]
    fn osmd_init_examples() {
        let same = PolicySet::validate(&vec![vec![0.3, 0.7]; 2]).unwrap();
        let s = osmd_init(&same, 100, &d_star(&same, 1e-9).unwrap()).unwrap();
        assert_eq!(s.eta, 0.0);
        assert!((s.x[0] - 0.3).abs() < 1e-15);

        let flower = make_flower(4, 5, 3).unwrap();
        let s = osmd_init(&flower, 10_000, &d_star(&flower, 1e-9).unwrap()).unwrap();
        let expected = (2.0 * 0.4 * 4f64.ln() / (10_000.0 * 11.0)).sqrt();
        assert!((s.eta - expected).abs() < 1e-9);
        assert!(residual(&flower, &s.w, &s.x) <= 1e-9);

        let disjoint = make_two_policy(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let s = osmd_init(&disjoint, 10, &d_star(&disjoint, 1e-9).unwrap()).unwrap();
        for v in s.x.iter().chain(&s.w) {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn update_examples() {
        let set = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        let state = OsmdState {
            x: vec![0.55, 0.45],
            w: vec![0.5, 0.5],
            eta: 0.1,
            tau_star: vec![0.55, 0.45],
            round: 0,
        };
        let (same, report) = osmd_update(&state, &set, &[0.0, 0.0], 1e-10).unwrap();
        assert_eq!(same, state);
        assert_eq!(report.gap, 0.0);

        let single = PolicySet::validate(&[vec![0.4, 0.6]]).unwrap();
        let s1 = OsmdState {
            x: vec![0.4, 0.6],
            w: vec![1.0],
            eta: 0.5,
            tau_star: vec![0.4, 0.6],
            round: 0,
        };
        let (next, _) = osmd_update(&s1, &single, &[3.0, 0.0], 1e-10).unwrap();
        assert_eq!(next.x, vec![0.4, 0.6]);
    }

    #[test]
    fn update_projects_onto_hull() {
        // the multiplicative update leaves the hull; the result must sit on it
        let set = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        let state = OsmdState {
            x: vec![0.85, 0.15],
            w: vec![1.0 - 0.05 / 0.7, 0.05 / 0.7],
            eta: 1.0,
            tau_star: vec![0.55, 0.45],
            round: 0,
        };
        let (next, report) = osmd_update(&state, &set, &[0.0, 5.0], 1e-12).unwrap();
        assert!(!report.short_circuit);
        assert!((next.x[0] - 0.9).abs() < 1e-9);
        assert!(residual(&set, &next.w, &next.x) < 1e-12);
    }

    #[test]
    fn update_keeps_zero_coordinates_at_zero() {
        let a = 0.011869887723826512;
        let set = PolicySet::validate(&[
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![a, 0.0, a, 0.0, 1.0 - 2.0 * a],
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let x = set.row(1).to_vec();
        let state = OsmdState {
            x: x.clone(),
            w: vec![0.0, 1.0, 0.0],
            eta: 1.0,
            tau_star: x.clone(),
            round: 0,
        };
        let est = osmd_estimates(&x, 4, 0.5);
        let (next, report) = osmd_update(&state, &set, &est, 1e-10).unwrap();
        assert_eq!(next.x, x);
        assert_eq!(report.gap, 0.0);
    }

    #[test]
    fn update_with_duplicate_policies_converges() {
        let a = 0.4727651825472752;
        let set = PolicySet::validate(&[
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 1.0],
            vec![a, 0.0, 0.0, 1.0 - a, 0.0],
        ])
        .unwrap();
        let w = vec![
            0.0,
            0.0,
            0.6304364166802479,
            0.3630187097545411,
            0.0065448735652110235,
        ];
        let x = set.mix(&w);
        for arm in 0..set.k() {
            let state = OsmdState {
                x: x.clone(),
                w: w.clone(),
                eta: 0.27314203738692416,
                tau_star: x.clone(),
                round: 0,
            };
            let est = osmd_estimates(&x, arm, 0.6200300355567598);
            let (next, report) = osmd_update(&state, &set, &est, 1e-10).unwrap();
            assert!(report.gap <= 1e-10, "arm {arm}: gap {}", report.gap);
            assert!(next.x.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn update_converges_when_a_sole_cover_nearly_vanishes() {
        type Case = (Vec<Vec<f64>>, Vec<f64>, usize, f64, f64);
        let cases: [Case; 3] = [
            (
                vec![
                    vec![
                        0.5980265005209103,
                        0.17133449352768143,
                        0.0,
                        0.0,
                        0.23063900595140838,
                    ],
                    vec![
                        0.12340521912580253,
                        0.0,
                        0.42077162006581414,
                        0.45582316080838337,
                        0.0,
                    ],
                    vec![0.0, 1.0, 0.0, 0.0, 0.0],
                    vec![
                        0.10290594037060548,
                        0.2297697671733869,
                        0.0,
                        0.313716805925859,
                        0.3536074865301486,
                    ],
                ],
                vec![
                    0.2871090073317752,
                    0.055453386011657266,
                    0.33469117006590177,
                    0.3227464365906658,
                ],
                2,
                0.8772715864910059,
                1.0248330827739922,
            ),
            (
                vec![
                    vec![
                        0.4507969422959445,
                        0.11534995171333964,
                        0.19690365418854605,
                        0.23694945180216972,
                        0.0,
                    ],
                    vec![
                        0.30016110938183693,
                        0.0,
                        0.14714927792528346,
                        0.5526896126928795,
                        0.0,
                    ],
                    vec![0.0, 0.0, 0.0, 0.3223158773141554, 0.6776841226858444],
                ],
                vec![
                    0.033411476855740814,
                    0.7987499063786571,
                    0.16783861676560213,
                ],
                4,
                0.5697689755164332,
                1.893359595906107,
            ),
            (
                vec![
                    vec![0.8526443280109518, 0.0, 0.14735567198904817, 0.0, 0.0],
                    vec![0.0, 0.0, 0.0, 0.3868437759259352, 0.6131562240740648],
                    vec![0.0, 0.0, 0.0, 1.0, 0.0],
                    vec![
                        0.27735781354559386,
                        0.27445838283991497,
                        0.13235120132042202,
                        0.3158326022940691,
                        0.0,
                    ],
                ],
                vec![
                    0.033631593347747596,
                    0.41687521668435074,
                    0.5494931899679016,
                    0.0,
                ],
                2,
                0.6879065330646441,
                1.7847972593990018,
            ),
        ];
        for (rows, w, arm, loss, eta) in cases {
            let set = PolicySet::validate(&rows).unwrap();
            let x = set.mix(&w);
            let state = OsmdState {
                x: x.clone(),
                w,
                eta,
                tau_star: x.clone(),
                round: 0,
            };
            let est = osmd_estimates(&x, arm, loss);
            let (next, report) = osmd_update(&state, &set, &est, 1e-10).unwrap();
            assert!(report.gap <= 1e-10);
            assert!(residual(&set, &next.w, &next.x) <= 1e-12);
            let stay = proximal_objective(&x, &x, &est, eta);
            assert!(proximal_objective(&next.x, &x, &est, eta) <= stay);
        }
    }
}
