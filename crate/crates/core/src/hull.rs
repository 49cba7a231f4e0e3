//! Optimization over the convex hull of a policy set.
//!
//! Points of `co(Θ)` are handled through mixture weights `w` on the simplex over
//! policies, `x = Θᵀw`. Objectives are separable in `x`, which covers both the
//! least-squares decomposition problem and the KL proximal step of OSMD.
//!
//! The solver alternates two moves on the weights:
//! - a Newton step restricted to the current support of `w` (the face), with the
//!   sum-to-one constraint handled through its KKT system;
//! - a pairwise Frank–Wolfe step that moves mass from the worst active policy to
//!   the best policy overall, with an exact line search.
//!
//! If these stall, a log-barrier interior-point method takes over; it keeps
//! every weight positive, which matters for objectives whose gradient is `-∞`
//! at zero.
//!
//! The Frank–Wolfe gap `⟨w, ∇⟩ - min_i ∇_i` bounds the suboptimality and is the
//! stopping certificate.

use nalgebra::{DMatrix, DVector};

use crate::{Error, PolicySet, Result};

pub const DEFAULT_DECOMPOSE_TOL: f64 = 1e-9;
pub const DECOMPOSE_MAX_ITER: usize = 100_000;
/// Active-set iterations before switching to the barrier method.
const ACTIVE_SET_BUDGET: usize = 500;
const BARRIER_STAGES: usize = 40;

/// An objective `Σ_j φ_j(x_j)`.
pub trait SeparableObjective {
    fn phi(&self, j: usize, x: f64) -> f64;
    fn dphi(&self, j: usize, x: f64) -> f64;
    fn d2phi(&self, j: usize, x: f64) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(j, &v)| self.phi(j, v)).sum()
    }
}

/// `½‖x - target‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares<'a> {
    pub target: &'a [f64],
}

impl SeparableObjective for LeastSquares<'_> {
    fn phi(&self, j: usize, x: f64) -> f64 {
        0.5 * (x - self.target[j]).powi(2)
    }
    fn dphi(&self, j: usize, x: f64) -> f64 {
        x - self.target[j]
    }
    fn d2phi(&self, _j: usize, _x: f64) -> f64 {
        1.0
    }
}

/// `Σ_j x_j log x_j + linear_j x_j`, with `0 log 0 = 0`.
///
/// With `linear_j = η ℓ̂(j) - log x_t(j)` this is `η⟨x, ℓ̂⟩ + D(x, x_t)` on the simplex.
/// `linear_j = +∞` forces `x_j = 0`.
#[derive(Debug, Clone)]
pub struct EntropicProximal {
    pub linear: Vec<f64>,
}

impl SeparableObjective for EntropicProximal {
    fn phi(&self, j: usize, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x * (x.ln() + self.linear[j])
        }
    }
    fn dphi(&self, j: usize, x: f64) -> f64 {
        if self.linear[j] == f64::INFINITY {
            // Coordinate fixed at zero: any mass there costs infinity.
            f64::INFINITY
        } else if x <= 0.0 {
            f64::NEG_INFINITY
        } else {
            x.ln() + 1.0 + self.linear[j]
        }
    }
    fn d2phi(&self, _j: usize, x: f64) -> f64 {
        1.0 / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSolution {
    pub weights: Vec<f64>,
    pub point: Vec<f64>,
    pub value: f64,
    /// Frank–Wolfe duality gap at `weights`.
    pub gap: f64,
    pub iterations: usize,
    /// True when the stopping rule fired before the iteration cap.
    pub stopped: bool,
}

enum Move {
    Taken,
    None,
    /// Taking the step would drop this policy and empty a coordinate.
    Stranded(usize),
}

struct Workspace<'a, O> {
    set: &'a PolicySet,
    obj: &'a O,
    weight_cost: Option<&'a [f64]>,
    w: Vec<f64>,
    x: Vec<f64>,
    gx: Vec<f64>,
    gw: Vec<f64>,
}

impl<'a, O: SeparableObjective> Workspace<'a, O> {
    fn refresh(&mut self) {
        self.set.mix_into(&self.w, &mut self.x);
        for (j, (g, &v)) in self.gx.iter_mut().zip(&self.x).enumerate() {
            *g = self.obj.dphi(j, v);
        }
        for (gw, row) in self.gw.iter_mut().zip(self.set.rows()) {
            *gw = row
                .iter()
                .zip(&self.gx)
                .filter(|(&p, _)| p > 0.0)
                .map(|(p, g)| p * g)
                .sum();
        }
        if let Some(c) = self.weight_cost {
            self.gw.iter_mut().zip(c).for_each(|(g, c)| *g += c);
        }
    }

    fn total(&self, x: &[f64], w: &[f64]) -> f64 {
        let linear = self
            .weight_cost
            .map_or(0.0, |c| w.iter().zip(c).map(|(w, c)| w * c).sum());
        self.obj.value(x) + linear
    }

    fn gap(&self) -> f64 {
        let min = self.gw.iter().copied().fold(f64::INFINITY, f64::min);
        let avg: f64 = self
            .w
            .iter()
            .zip(&self.gw)
            .filter(|(&w, _)| w > 0.0)
            .map(|(w, g)| w * g)
            .sum();
        (avg - min).max(0.0)
    }

    fn normalize(&mut self) {
        self.w.iter_mut().for_each(|w| *w = w.max(0.0));
        let z: f64 = self.w.iter().sum();
        self.w.iter_mut().for_each(|w| *w /= z);
    }

    /// Log-barrier interior-point fallback: minimizes `F(w) - μ Σ log w_i` for a
    /// decreasing sequence of `μ`, keeping every admissible weight positive. At a
    /// barrier minimizer the Frank–Wolfe gap is at most `m μ`.
    ///
    /// Returns the number of Newton steps taken and whether `stop` fired.
    fn barrier<F>(&mut self, budget: usize, stop: &mut F) -> (usize, bool)
    where
        F: FnMut(f64, f64, &[f64]) -> Control,
    {
        let k = self.x.len();
        let allowed: Vec<usize> = (0..self.w.len())
            .filter(|&i| {
                self.set
                    .row(i)
                    .iter()
                    .enumerate()
                    .all(|(j, &p)| p == 0.0 || self.obj.dphi(j, p) < f64::INFINITY)
            })
            .collect();
        let m = allowed.len();
        if m < 2 {
            return (0, false);
        }
        let mut start = vec![0.0; self.w.len()];
        for &i in &allowed {
            start[i] = 0.5 * self.w[i] + 0.5 / m as f64;
        }
        self.w = start;
        self.normalize();
        self.refresh();

        let barrier_value = |ws: &Self, x: &[f64], w: &[f64], mu: f64| -> f64 {
            ws.total(x, w) - mu * allowed.iter().map(|&i| w[i].ln()).sum::<f64>()
        };
        let mut mu = (self.gap() / m as f64).clamp(1e-300, 1.0);
        let mut steps = 0;
        let mut trial_w = self.w.clone();
        let mut trial_x = vec![0.0; k];
        for _ in 0..BARRIER_STAGES {
            loop {
                if steps >= budget {
                    return (steps, false);
                }
                let curv: Vec<f64> = (0..k)
                    .map(|j| {
                        if self.x[j] > 0.0 {
                            self.obj.d2phi(j, self.x[j])
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
                let mut rhs = DVector::<f64>::zeros(m + 1);
                for (a, &ia) in allowed.iter().enumerate() {
                    let ra = self.set.row(ia);
                    for (b, &ib) in allowed.iter().enumerate().skip(a) {
                        let rb = self.set.row(ib);
                        let h: f64 = (0..k).map(|j| curv[j] * ra[j] * rb[j]).sum();
                        kkt[(a, b)] = h;
                        kkt[(b, a)] = h;
                    }
                    kkt[(a, a)] += mu / (self.w[ia] * self.w[ia]);
                    kkt[(a, m)] = 1.0;
                    kkt[(m, a)] = 1.0;
                    rhs[a] = -(self.gw[ia] - mu / self.w[ia]);
                }
                let Some(sol) = kkt.lu().solve(&rhs) else {
                    break;
                };
                let dir: Vec<f64> = (0..m).map(|a| sol[a]).collect();
                let decrement: f64 = (0..m).map(|a| rhs[a] * dir[a]).sum();
                if !(decrement.is_finite() && decrement > 1e-3 * mu) {
                    break;
                }
                let mut step = 1.0f64;
                for (a, &i) in allowed.iter().enumerate() {
                    if dir[a] < 0.0 {
                        step = step.min(-0.99 * self.w[i] / dir[a]);
                    }
                }
                let b0 = barrier_value(self, &self.x, &self.w, mu);
                let mut accepted = false;
                for _ in 0..60 {
                    for (a, &i) in allowed.iter().enumerate() {
                        trial_w[i] = self.w[i] + step * dir[a];
                    }
                    self.set.mix_into(&trial_w, &mut trial_x);
                    if barrier_value(self, &trial_x, &trial_w, mu) <= b0 - 1e-4 * step * decrement {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
                steps += 1;
                self.w.copy_from_slice(&trial_w);
                self.normalize();
                self.refresh();
            }
            if stop(self.total(&self.x, &self.w), self.gap(), &self.x) == Control::Stop {
                return (steps, true);
            }
            mu *= 0.1;
            if mu < 1e-300 {
                break;
            }
        }
        (steps, false)
    }

    /// Whether dropping policy `b` would empty a coordinate whose gradient is
    /// `-∞` at zero, given the weights `after` the move.
    fn strands(&self, b: usize, after: impl Fn(usize) -> f64) -> bool {
        let row_b = self.set.row(b);
        (0..self.x.len()).any(|j| {
            row_b[j] > 0.0
                && self.obj.dphi(j, 0.0) == f64::NEG_INFINITY
                && (0..self.w.len()).all(|i| i == b || self.set.row(i)[j] == 0.0 || after(i) <= 0.0)
        })
    }

    /// Newton step on the face spanned by the active policies. A policy that
    /// blocks the step but cannot be dropped only goes halfway to zero.
    fn face_newton(&mut self) -> bool {
        let active: Vec<usize> = (0..self.w.len()).filter(|&i| self.w[i] > 0.0).collect();
        let m = active.len();
        if m < 2 {
            return false;
        }
        let k = self.x.len();
        let curv: Vec<f64> = (0..k)
            .map(|j| {
                if self.x[j] > 0.0 {
                    self.obj.d2phi(j, self.x[j])
                } else {
                    0.0
                }
            })
            .collect();
        let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        let mut scale: f64 = 0.0;
        for (a, &ia) in active.iter().enumerate() {
            let ra = self.set.row(ia);
            for (b, &ib) in active.iter().enumerate().skip(a) {
                let rb = self.set.row(ib);
                let h: f64 = (0..k).map(|j| curv[j] * ra[j] * rb[j]).sum();
                kkt[(a, b)] = h;
                kkt[(b, a)] = h;
            }
            scale = scale.max(kkt[(a, a)]);
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = -self.gw[ia];
        }
        let ridge = 1e-12 * scale.max(1e-300);
        for a in 0..m {
            kkt[(a, a)] += ridge;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return false;
        };
        let dir: Vec<f64> = (0..m).map(|a| sol[a]).collect();
        if dir.iter().any(|d| !d.is_finite()) {
            return false;
        }
        let slope: f64 = active.iter().zip(&dir).map(|(&i, d)| self.gw[i] * d).sum();
        if !(slope < 0.0) {
            return false;
        }
        let mut max_step = 1.0f64;
        let mut blocking = None;
        for (a, &i) in active.iter().enumerate() {
            if dir[a] < 0.0 {
                let lim = -self.w[i] / dir[a];
                if lim < max_step {
                    max_step = lim;
                    blocking = Some(i);
                }
            }
        }
        if let Some(b) = blocking {
            let after = |i: usize| {
                active
                    .iter()
                    .position(|&a| a == i)
                    .map_or(self.w[i], |a| self.w[i] + max_step * dir[a])
            };
            if self.strands(b, after) {
                max_step *= 0.5;
                blocking = None;
            }
        }
        let mut dx = vec![0.0; k];
        for (a, &i) in active.iter().enumerate() {
            for (d, &p) in dx.iter_mut().zip(self.set.row(i)) {
                *d += dir[a] * p;
            }
        }
        let f0 = self.total(&self.x, &self.w);
        let mut step = max_step;
        let mut trial = vec![0.0; k];
        let mut trial_w = self.w.clone();
        for _ in 0..40 {
            for j in 0..k {
                trial[j] = (self.x[j] + step * dx[j]).max(0.0);
            }
            for (a, &i) in active.iter().enumerate() {
                trial_w[i] = self.w[i] + step * dir[a];
            }
            let f1 = self.total(&trial, &trial_w);
            if f1 <= f0 + 1e-4 * step * slope {
                for (a, &i) in active.iter().enumerate() {
                    self.w[i] += step * dir[a];
                }
                if step == max_step {
                    if let Some(i) = blocking {
                        self.w[i] = 0.0;
                    }
                }
                self.normalize();
                self.refresh();
                return true;
            }
            step *= 0.5;
        }
        false
    }

    /// Pairwise Frank–Wolfe step with exact line search. When the away policy
    /// cannot be dropped it is only halved, and the next one is tried.
    fn pairwise(&mut self) -> bool {
        let mut skip = Vec::new();
        loop {
            match self.pairwise_skipping(&skip) {
                Move::Stranded(v) => skip.push(v),
                Move::Taken => return true,
                Move::None => return !skip.is_empty(),
            }
        }
    }

    fn pairwise_skipping(&mut self, skip: &[usize]) -> Move {
        let mut s = 0;
        for i in 1..self.gw.len() {
            if self.gw[i] < self.gw[s] {
                s = i;
            }
        }
        if self.gw[s] == f64::NEG_INFINITY {
            // Several vertices can reach an empty coordinate; rank them by the
            // gradient taken at a tiny positive floor instead.
            let floored: Vec<f64> = (0..self.x.len())
                .map(|j| self.obj.dphi(j, self.x[j].max(f64::MIN_POSITIVE)))
                .collect();
            let key = |i: usize| -> f64 {
                let g: f64 = self
                    .set
                    .row(i)
                    .iter()
                    .zip(&floored)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(p, g)| p * g)
                    .sum();
                g + self.weight_cost.map_or(0.0, |c| c[i])
            };
            let mut best = key(s);
            for i in s + 1..self.gw.len() {
                if self.gw[i] == f64::NEG_INFINITY {
                    let k = key(i);
                    if k < best {
                        best = k;
                        s = i;
                    }
                }
            }
        }
        // Away policy: the largest share `w_i (∇_i - ∇_s)` of the gap.
        let share = |i: usize| self.w[i] * (self.gw[i] - self.gw[s]);
        let mut v = None;
        for i in 0..self.w.len() {
            if self.w[i] > 0.0 && !skip.contains(&i) && v.is_none_or(|b: usize| share(i) > share(b))
            {
                v = Some(i);
            }
        }
        let Some(v) = v else { return Move::None };
        if v == s || !(self.gw[v] > self.gw[s]) {
            return Move::None;
        }
        let rs = self.set.row(s);
        let rv = self.set.row(v);
        let moved: Vec<(usize, f64)> = rs
            .iter()
            .zip(rv)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(j, (a, b))| (j, a - b))
            .collect();
        let x = &self.x;
        let obj = self.obj;
        let shift = self.weight_cost.map_or(0.0, |c| c[s] - c[v]);
        let deriv = |g: f64| -> f64 {
            shift
                + moved
                    .iter()
                    .map(|&(j, d)| obj.dphi(j, (x[j] + g * d).max(0.0)) * d)
                    .sum::<f64>()
        };
        let curv = |g: f64| -> f64 {
            moved
                .iter()
                .map(|&(j, d)| obj.d2phi(j, (x[j] + g * d).max(0.0)) * d * d)
                .sum()
        };
        let gmax = self.w[v];
        let step = if deriv(gmax) <= 0.0 {
            gmax
        } else {
            let (mut lo, mut hi) = (0.0, gmax);
            let mut g = 0.5 * gmax;
            for _ in 0..100 {
                let d = deriv(g);
                if d == 0.0 {
                    break;
                }
                if d < 0.0 {
                    lo = g;
                } else {
                    hi = g;
                }
                let newton = g - d / curv(g);
                g = if newton.is_finite() && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo <= 1e-17 * gmax.max(1e-300) {
                    break;
                }
            }
            g
        };
        let mut step = step;
        let mut stranded = false;
        if step >= gmax {
            let ws = self.w[s];
            let after = |i: usize| {
                if i == s {
                    ws + gmax
                } else if i == v {
                    0.0
                } else {
                    self.w[i]
                }
            };
            if self.strands(v, after) {
                step = 0.5 * gmax;
                stranded = true;
            }
        }
        if !(step > 0.0) {
            return Move::None;
        }
        self.w[s] += step;
        if step >= gmax {
            self.w[v] = 0.0;
        } else {
            self.w[v] -= step;
        }
        self.normalize();
        self.refresh();
        if stranded {
            Move::Stranded(v)
        } else {
            Move::Taken
        }
    }
}

/// Minimizes a separable objective over `co(Θ)` starting from weights `w0`.
///
/// `stop(value, gap, point)` is consulted before every iteration. Ties in the
/// vertex search go to the lowest policy index, so the result is a deterministic
/// function of the inputs.
pub fn minimize_over_hull<O, F>(
    set: &PolicySet,
    obj: &O,
    w0: &[f64],
    max_iter: usize,
    stop: F,
) -> HullSolution
where
    O: SeparableObjective,
    F: FnMut(f64, f64, &[f64]) -> Control,
{
    minimize_over_hull_with_cost(set, obj, None, w0, max_iter, stop)
}

/// Minimizes `Σ_j φ_j(x_j) + ⟨w, weight_cost⟩`: a separable objective in the
/// point plus a linear cost on the mixture weights themselves.
pub fn minimize_over_hull_with_cost<O, F>(
    set: &PolicySet,
    obj: &O,
    weight_cost: Option<&[f64]>,
    w0: &[f64],
    max_iter: usize,
    mut stop: F,
) -> HullSolution
where
    O: SeparableObjective,
    F: FnMut(f64, f64, &[f64]) -> Control,
{
    let mut ws = Workspace {
        set,
        obj,
        weight_cost,
        w: w0.to_vec(),
        x: vec![0.0; set.k()],
        gx: vec![0.0; set.k()],
        gw: vec![0.0; set.n()],
    };
    ws.normalize();
    ws.refresh();
    let mut iterations = 0;
    let mut stopped = false;
    while iterations < max_iter {
        let value = ws.total(&ws.x, &ws.w);
        if stop(value, ws.gap(), &ws.x) == Control::Stop {
            stopped = true;
            break;
        }
        iterations += 1;
        let newton = ws.face_newton();
        let fw = ws.pairwise();
        if (!newton && !fw) || iterations >= ACTIVE_SET_BUDGET {
            stopped = stop(ws.total(&ws.x, &ws.w), ws.gap(), &ws.x) == Control::Stop;
            if !stopped {
                let (steps, done) = ws.barrier(max_iter - iterations, &mut stop);
                iterations += steps;
                stopped = done;
            }
            break;
        }
    }
    let value = ws.total(&ws.x, &ws.w);
    let gap = ws.gap();
    if !stopped && iterations >= max_iter {
        stopped = stop(value, gap, &ws.x) == Control::Stop;
    }
    HullSolution {
        weights: ws.w,
        point: ws.x,
        value,
        gap,
        iterations,
        stopped,
    }
}

/// Maximum absolute deviation between `Θᵀw` and `x`.
pub fn residual(set: &PolicySet, weights: &[f64], x: &[f64]) -> f64 {
    set.mix(weights)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Mixture weights of a point of the hull.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub residual: f64,
}

/// Decomposes points into mixtures of a fixed policy set.
///
/// Caches the pseudo-inverse of `[Θᵀ; 1ᵀ]`. When the minimum-norm affine
/// solution is already nonnegative it is the answer; otherwise the
/// least-squares problem over the simplex is solved by [`minimize_over_hull`].
#[derive(Debug, Clone)]
pub struct Decomposer {
    set: PolicySet,
    pinv: DMatrix<f64>,
}

impl Decomposer {
    pub fn new(set: &PolicySet) -> Self {
        let (k, n) = (set.k(), set.n());
        let a = DMatrix::from_fn(k + 1, n, |j, i| if j < k { set.row(i)[j] } else { 1.0 });
        let pinv = a
            .pseudo_inverse(1e-12)
            .unwrap_or_else(|_| DMatrix::zeros(n, k + 1));
        Decomposer {
            set: set.clone(),
            pinv,
        }
    }

    pub fn set(&self) -> &PolicySet {
        &self.set
    }

    /// Full decomposition with the default iteration cap.
    pub fn decompose(&self, x: &[f64], tol: f64, warm: Option<&[f64]>) -> Result<Decomposition> {
        self.decompose_with_limit(x, tol, warm, DECOMPOSE_MAX_ITER)
    }

    pub fn decompose_with_limit(
        &self,
        x: &[f64],
        tol: f64,
        warm: Option<&[f64]>,
        max_iter: usize,
    ) -> Result<Decomposition> {
        let (k, n) = (self.set.k(), self.set.n());
        if x.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: x.len(),
            });
        }
        let rhs = DVector::from_fn(k + 1, |j, _| if j < k { x[j] } else { 1.0 });
        let affine = &self.pinv * rhs;
        let mut start: Vec<f64> = affine.iter().map(|w| w.max(0.0)).collect();
        let z: f64 = start.iter().sum();
        if z > 0.0 && z.is_finite() {
            start.iter_mut().for_each(|w| *w /= z);
            let r = residual(&self.set, &start, x);
            if r <= tol {
                return Ok(Decomposition {
                    weights: start,
                    residual: r,
                });
            }
        } else {
            start = vec![1.0 / n as f64; n];
        }
        if let Some(w) = warm.filter(|w| w.len() == n) {
            if residual(&self.set, w, x) < residual(&self.set, &start, x) {
                start = w.to_vec();
            }
        }
        // ‖r‖∞ ≤ tol implies ½‖r‖² ≤ ½ K tol², so a lower bound above that
        // certifies infeasibility.
        let infeasible_level = 0.5 * k as f64 * tol * tol;
        let mut infeasible = false;
        let sol = minimize_over_hull(
            &self.set,
            &LeastSquares { target: x },
            &start,
            max_iter,
            |value, gap, point| {
                let r = point
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if r <= tol {
                    Control::Stop
                } else if value - gap > infeasible_level {
                    infeasible = true;
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        let r = residual(&self.set, &sol.weights, x);
        if infeasible || r > tol {
            return Err(Error::DecompositionInfeasible { residual: r });
        }
        Ok(Decomposition {
            weights: sol.weights,
            residual: r,
        })
    }
}

/// Finds `w` on the simplex with `‖Θᵀw - x‖∞ ≤ tol`.
pub fn mixture_decompose(set: &PolicySet, x: &[f64], tol: f64) -> Result<Vec<f64>> {
    Decomposer::new(set)
        .decompose(x, tol, None)
        .map(|d| d.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy_sets::*;

    #[test]
    fn vertex_is_feasible() {
        let set = make_flower(4, 5, 3).unwrap();
        for i in 0..set.n() {
            let w = mixture_decompose(&set, set.row(i), 1e-9).unwrap();
            assert!(residual(&set, &w, set.row(i)) <= 1e-9);
        }
        // duplicated rows: any split is acceptable
        let dup = PolicySet::validate(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let w = mixture_decompose(&dup, &[0.5, 0.5], 1e-9).unwrap();
        assert!(residual(&dup, &w, &[0.5, 0.5]) <= 1e-9);
        assert!(w[2].abs() < 1e-9);
    }

    #[test]
    fn uniform_point_of_eps_uniform() {
        let set = make_eps_uniform(5, 0.3).unwrap();
        let w = mixture_decompose(&set, &[0.2; 5], 1e-9).unwrap();
        for v in w {
            assert!((v - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_hull_is_infeasible() {
        let set = make_eps_uniform(4, 0.6).unwrap();
        assert!(set.rows().flatten().all(|&p| p >= 0.1));
        assert!(matches!(
            mixture_decompose(&set, &[1.0, 0.0, 0.0, 0.0], 1e-9),
            Err(Error::DecompositionInfeasible { .. })
        ));
        assert!(mixture_decompose(&set, &[1.0, 0.0], 1e-9).is_err());
    }

    #[test]
    fn redundant_policies() {
        // more policies than arms: the affine solution is not unique
        let set = make_multitask(3, 2).unwrap();
        let w_true: Vec<f64> = (0..8).map(|i| (i + 1) as f64 / 36.0).collect();
        let x = set.mix(&w_true);
        let w = mixture_decompose(&set, &x, 1e-9).unwrap();
        assert!(residual(&set, &w, &x) <= 1e-9);
        assert!(w.iter().all(|&v| v >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_projection_of_outside_point() {
        let set = make_two_policy(&[0.9, 0.1], &[0.2, 0.8]).unwrap();
        let target = [1.0, 0.0];
        let sol = minimize_over_hull(
            &set,
            &LeastSquares { target: &target },
            &[0.5, 0.5],
            100,
            |_, gap, _| {
                if gap <= 1e-14 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert!(sol.stopped);
        assert!((sol.weights[0] - 1.0).abs() < 1e-12);
    }
}
