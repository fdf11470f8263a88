//! Log-barrier interior-point solver for the small smooth convex programs
//! produced by the FP and SCA steps.
//!
//! Problems have the form: maximize a concave `f(x)` subject to concave
//! `g_i(x) ≥ 0`. Functions are sums of a few term shapes whose gradients and
//! Hessians are cheap: concave quadratics with rank-one curvature,
//! `w·log2(1 + q(x))` with `q` a concave quadratic, and `−c·x_i^e` with
//! `e < 0`.
//!
//! Constraints marked [`ConstraintKind::Relaxable`] may be violated at the
//! starting point; a phase-I program then searches for a strictly feasible
//! point or certifies that none exists.

use super::newton::{BlockLowRank, HessianSink};
use crate::error::ConvexError;
use crate::scalar::Real;

/// Negative-semidefinite curvature of a concave quadratic.
#[derive(Clone, Debug, PartialEq)]
pub enum Curvature<T> {
    /// `−weight · (dirᵀ x[offset..offset+dir.len()])²`
    RankOne { offset: usize, dir: Vec<T>, weight: T },
    /// `−weight · ‖x[offset..offset+len]‖²`
    Identity { offset: usize, len: usize, weight: T },
}

/// `constant + Σ c_i x_i + Σ curvature terms`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Quadratic<T> {
    pub constant: T,
    pub linear: Vec<(usize, T)>,
    pub curvature: Vec<Curvature<T>>,
}

impl<T: Real> Quadratic<T> {
    pub fn constant(value: T) -> Self {
        Self {
            constant: value,
            linear: Vec::new(),
            curvature: Vec::new(),
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        let mut v = self.constant;
        for &(i, c) in &self.linear {
            v = v + c * x[i];
        }
        for term in &self.curvature {
            v = v - match term {
                Curvature::RankOne { offset, dir, weight } => {
                    let p: T = dir.iter().zip(&x[*offset..]).map(|(d, xi)| *d * *xi).sum();
                    *weight * p * p
                }
                Curvature::Identity { offset, len, weight } => {
                    *weight * x[*offset..offset + len].iter().map(|xi| *xi * *xi).sum::<T>()
                }
            };
        }
        v
    }

    pub fn add_gradient(&self, x: &[T], scale: T, out: &mut [T]) {
        for &(i, c) in &self.linear {
            out[i] = out[i] + scale * c;
        }
        let two = T::of(2.0);
        for term in &self.curvature {
            match term {
                Curvature::RankOne { offset, dir, weight } => {
                    let p: T = dir.iter().zip(&x[*offset..]).map(|(d, xi)| *d * *xi).sum();
                    let s = scale * two * *weight * p;
                    for (o, d) in out[*offset..].iter_mut().zip(dir) {
                        *o = *o - s * *d;
                    }
                }
                Curvature::Identity { offset, len, weight } => {
                    let s = scale * two * *weight;
                    for i in *offset..offset + len {
                        out[i] = out[i] - s * x[i];
                    }
                }
            }
        }
    }

    /// Adds `scale · (−∇²q)`.
    pub fn add_neg_hessian(&self, scale: T, h: &mut impl HessianSink<T>) {
        let two = T::of(2.0);
        for term in &self.curvature {
            match term {
                Curvature::RankOne { offset, dir, weight } => h.add_outer(*offset, dir, scale * two * *weight),
                Curvature::Identity { offset, len, weight } => {
                    for i in *offset..offset + len {
                        h.add_diag(i, scale * two * *weight);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term<T> {
    Quadratic(Quadratic<T>),
    /// `weight · log2(1 + inner(x))`, `weight ≥ 0`.
    Log2OnePlus { weight: T, inner: Quadratic<T> },
    /// `−coeff · x[index]^exponent`, `coeff ≥ 0`, `exponent < 0`.
    NegPower { index: usize, coeff: T, exponent: T },
}

/// Sum of concave terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Concave<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Real> Concave<T> {
    pub fn new(terms: Vec<Term<T>>) -> Self {
        Self { terms }
    }

    pub fn quadratic(q: Quadratic<T>) -> Self {
        Self::new(vec![Term::Quadratic(q)])
    }

    /// The affine function `x[index]`.
    pub fn variable(index: usize) -> Self {
        Self::quadratic(Quadratic {
            constant: T::zero(),
            linear: vec![(index, T::one())],
            curvature: Vec::new(),
        })
    }

    /// Value, or `None` outside the function's domain.
    pub fn value(&self, x: &[T]) -> Option<T> {
        let mut v = T::zero();
        for term in &self.terms {
            v = v + match term {
                Term::Quadratic(q) => q.value(x),
                Term::Log2OnePlus { weight, inner } => {
                    let q = inner.value(x);
                    if !(q > -T::one()) {
                        return None;
                    }
                    *weight * q.ln_1p() / T::LN_2()
                }
                Term::NegPower { index, coeff, exponent } => {
                    if !(x[*index] > T::zero()) {
                        return None;
                    }
                    -*coeff * x[*index].powf(*exponent)
                }
            };
        }
        v.is_finite().then_some(v)
    }

    /// Adds `scale · ∇f(x)` into `out`. `x` must be in the domain.
    pub fn add_gradient(&self, x: &[T], scale: T, out: &mut [T]) {
        for term in &self.terms {
            match term {
                Term::Quadratic(q) => q.add_gradient(x, scale, out),
                Term::Log2OnePlus { weight, inner } => {
                    let c = *weight / (T::LN_2() * (T::one() + inner.value(x)));
                    inner.add_gradient(x, scale * c, out);
                }
                Term::NegPower { index, coeff, exponent } => {
                    let i = *index;
                    out[i] = out[i] - scale * *coeff * *exponent * x[i].powf(*exponent - T::one());
                }
            }
        }
    }

    /// Adds `scale · (−∇²f(x))`, which is positive semidefinite.
    pub fn add_neg_hessian(&self, x: &[T], scale: T, h: &mut impl HessianSink<T>, scratch: &mut Vec<T>) {
        for term in &self.terms {
            match term {
                Term::Quadratic(q) => q.add_neg_hessian(scale, h),
                Term::Log2OnePlus { weight, inner } => {
                    let one_plus = T::one() + inner.value(x);
                    let c = *weight / T::LN_2();
                    inner.add_neg_hessian(scale * c / one_plus, h);
                    scratch.clear();
                    scratch.resize(x.len(), T::zero());
                    inner.add_gradient(x, T::one(), scratch);
                    h.add_outer(0, scratch, scale * c / (one_plus * one_plus));
                }
                Term::NegPower { index, coeff, exponent } => {
                    let i = *index;
                    let e = *exponent;
                    h.add_diag(i, scale * *coeff * e * (e - T::one()) * x[i].powf(e - T::of(2.0)));
                }
            }
        }
    }

    fn push_linear(&mut self, index: usize, coeff: T) {
        self.terms.push(Term::Quadratic(Quadratic {
            constant: T::zero(),
            linear: vec![(index, coeff)],
            curvature: Vec::new(),
        }));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Must hold strictly at the starting point.
    Hard,
    /// May be violated at the start; phase I restores it.
    Relaxable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    /// Feasible where `function(x) ≥ 0`.
    pub function: Concave<T>,
    pub kind: ConstraintKind,
}

impl<T: Real> Constraint<T> {
    pub fn hard(function: Concave<T>) -> Self {
        Self {
            function,
            kind: ConstraintKind::Hard,
        }
    }

    pub fn relaxable(function: Concave<T>) -> Self {
        Self {
            function,
            kind: ConstraintKind::Relaxable,
        }
    }
}

/// Maximize `objective` subject to every constraint `≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexProblem<T> {
    pub dim: usize,
    pub objective: Concave<T>,
    pub constraints: Vec<Constraint<T>>,
    /// Sizes of contiguous variable blocks. Curvature confined to one block
    /// is factored blockwise and everything else is treated as low-rank
    /// coupling. Empty means a single dense block.
    pub blocks: Vec<usize>,
}

impl<T: Real> ConvexProblem<T> {
    pub fn new(dim: usize, objective: Concave<T>, constraints: Vec<Constraint<T>>) -> Self {
        Self {
            dim,
            objective,
            constraints,
            blocks: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierOptions<T> {
    /// Stop when the duality-gap bound `m/t` is below `tol · max(1, |f|)`.
    pub tol: T,
    /// Centering stops when half the squared Newton decrement is below this.
    pub inner_tol: T,
    pub t0: T,
    pub mu: T,
    pub max_newton_iterations: usize,
    /// Armijo sufficient-increase fraction.
    pub armijo: T,
    /// Backtracking shrink factor.
    pub backtrack: T,
}

impl<T: Real> Default for BarrierOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-9),
            inner_tol: T::of(1e-10),
            t0: T::one(),
            mu: T::of(20.0),
            max_newton_iterations: 2000,
            armijo: T::of(1e-4),
            backtrack: T::of(0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Newton budget exhausted; the point is strictly feasible but the gap
    /// bound was not met.
    IterationLimit,
    /// Phase I proved the relaxable constraints cannot all hold. The point is
    /// the best phase-I iterate.
    Infeasible { margin: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// Bound on `f* − f(x)` from the barrier parameter.
    pub gap: T,
    pub newton_iterations: usize,
    pub status: SolveStatus,
}

impl<T: Real> Solution<T> {
    pub fn require_optimal(self) -> Result<Self, ConvexError> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::IterationLimit => Err(ConvexError::NotConverged {
                iterations: self.newton_iterations,
                gap: self.gap.as_f64(),
            }),
            SolveStatus::Infeasible { margin } => Err(ConvexError::Infeasible { margin }),
        }
    }
}

/// Solves `problem` from `x0` and reports infeasibility and non-convergence
/// as errors.
pub fn convex_subproblem_solve<T: Real>(problem: &ConvexProblem<T>, x0: &[T], tol: T) -> Result<Solution<T>, ConvexError> {
    let options = BarrierOptions {
        tol,
        ..BarrierOptions::default()
    };
    solve(problem, x0, &options)?.require_optimal()
}

/// Solves `problem` from `x0`. Hard constraints must hold strictly at `x0`.
/// Errors are reserved for a bad start and numerical breakdown; an empty
/// feasible set or an exhausted Newton budget is reported in the status.
pub fn solve<T: Real>(problem: &ConvexProblem<T>, x0: &[T], options: &BarrierOptions<T>) -> Result<Solution<T>, ConvexError> {
    assert_eq!(x0.len(), problem.dim, "starting point has wrong dimension");
    let values: Vec<Option<T>> = problem.constraints.iter().map(|c| c.function.value(x0)).collect();
    let mut min_relaxed: Option<T> = None;
    for (c, v) in problem.constraints.iter().zip(&values) {
        match (c.kind, v) {
            (ConstraintKind::Hard, Some(v)) if *v > T::zero() => {}
            (ConstraintKind::Hard, _) => return Err(ConvexError::BadStart),
            (ConstraintKind::Relaxable, None) => return Err(ConvexError::BadStart),
            (ConstraintKind::Relaxable, Some(v)) => {
                min_relaxed = Some(min_relaxed.map_or(*v, |m: T| m.min(*v)));
            }
        }
    }
    if problem.objective.value(x0).is_none() {
        return Err(ConvexError::BadStart);
    }

    let mut newton_used = 0;
    let mut start = x0.to_vec();
    if let Some(m) = min_relaxed.filter(|m| !(*m > T::zero())) {
        let phase1 = phase_one(problem, x0, m, options)?;
        newton_used += phase1.newton_iterations;
        if let SolveStatus::Infeasible { .. } = phase1.status {
            return Ok(Solution {
                objective: problem.objective.value(&phase1.x).unwrap_or(T::nan()),
                newton_iterations: newton_used,
                ..phase1
            });
        }
        start = phase1.x;
    }

    let budget = options.max_newton_iterations.saturating_sub(newton_used);
    let run = barrier(problem, start, options, budget, |_, _, _| Stop::Continue)?;
    Ok(Solution {
        objective: problem.objective.value(&run.x).expect("iterate stays in domain"),
        x: run.x,
        gap: run.gap,
        newton_iterations: newton_used + run.newton_iterations,
        status: if run.converged {
            SolveStatus::Optimal
        } else {
            SolveStatus::IterationLimit
        },
    })
}

fn phase_one<T: Real>(problem: &ConvexProblem<T>, x0: &[T], min_relaxed: T, options: &BarrierOptions<T>) -> Result<Solution<T>, ConvexError> {
    let n = problem.dim;
    let mut constraints = problem.constraints.clone();
    for c in &mut constraints {
        if c.kind == ConstraintKind::Relaxable {
            c.function.push_linear(n, -T::one());
        }
        c.kind = ConstraintKind::Hard;
    }
    let mut blocks = problem.blocks.clone();
    if !blocks.is_empty() {
        blocks.push(1);
    }
    let aux = ConvexProblem {
        dim: n + 1,
        objective: Concave::variable(n),
        constraints,
        blocks,
    };
    let mut start = x0.to_vec();
    start.push(min_relaxed - T::of(0.5) * min_relaxed.abs().max(T::of(1e-3)));
    let run = barrier(&aux, start, options, options.max_newton_iterations, |x, gap, centered| {
        let s = x[n];
        if s > T::zero() {
            Stop::Feasible
        } else if centered && s + gap < T::zero() {
            Stop::Certified
        } else {
            Stop::Continue
        }
    })?;
    let s = run.x[n];
    let mut x = run.x;
    x.truncate(n);
    let status = if s > T::zero() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible { margin: s.as_f64() }
    };
    Ok(Solution {
        x,
        objective: s,
        gap: run.gap,
        newton_iterations: run.newton_iterations,
        status,
    })
}

enum Stop {
    Continue,
    Feasible,
    Certified,
}

struct BarrierRun<T> {
    x: Vec<T>,
    gap: T,
    newton_iterations: usize,
    converged: bool,
}

/// `t·f(x) + Σ ln g_i(x)`, or `None` outside the strict interior.
fn barrier_value<T: Real>(p: &ConvexProblem<T>, x: &[T], t: T) -> Option<T> {
    let mut v = t * p.objective.value(x)?;
    for c in &p.constraints {
        let g = c.function.value(x)?;
        if !(g > T::zero()) {
            return None;
        }
        v = v + g.ln();
    }
    v.is_finite().then_some(v)
}

fn barrier<T: Real>(
    p: &ConvexProblem<T>,
    mut x: Vec<T>,
    o: &BarrierOptions<T>,
    max_newton: usize,
    mut check: impl FnMut(&[T], T, bool) -> Stop,
) -> Result<BarrierRun<T>, ConvexError> {
    let n = p.dim;
    let m = T::of_usize(p.constraints.len().max(1));
    let mut t = o.t0;
    let mut newton = 0;
    let mut grad = vec![T::zero(); n];
    let mut gbuf = vec![T::zero(); n];
    let mut scratch = Vec::new();
    let mut h = BlockLowRank::new(n, &p.blocks);
    let half = T::of(0.5);

    loop {
        // Centering at the current t.
        let mut phi = barrier_value(p, &x, t).ok_or(ConvexError::BadStart)?;
        loop {
            if newton >= max_newton {
                return Ok(BarrierRun {
                    x,
                    gap: m / t,
                    newton_iterations: newton,
                    converged: false,
                });
            }
            newton += 1;

            h.clear();
            grad.iter_mut().for_each(|g| *g = T::zero());
            p.objective.add_gradient(&x, t, &mut grad);
            p.objective.add_neg_hessian(&x, t, &mut h, &mut scratch);
            for c in &p.constraints {
                let g = c.function.value(&x).expect("iterate stays in domain");
                gbuf.iter_mut().for_each(|v| *v = T::zero());
                c.function.add_gradient(&x, T::one(), &mut gbuf);
                let inv = T::one() / g;
                for (gr, gb) in grad.iter_mut().zip(&gbuf) {
                    *gr = *gr + *gb * inv;
                }
                c.function.add_neg_hessian(&x, inv, &mut h, &mut scratch);
                h.add_outer(0, &gbuf, inv * inv);
            }
            let step = h.solve(&grad).ok_or(ConvexError::Singular)?;
            let decrement: T = grad.iter().zip(&step).map(|(g, s)| *g * *s).sum();
            if !decrement.is_finite() {
                return Err(ConvexError::Singular);
            }
            if decrement * half <= o.inner_tol {
                break;
            }

            let mut s = T::one();
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<T> = x.iter().zip(&step).map(|(xi, d)| *xi + s * *d).collect();
                if let Some(v) = barrier_value(p, &trial, t) {
                    if decrement < T::of(0.2) || v >= phi + o.armijo * s * decrement {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                s = s * o.backtrack;
            }
            let Some((trial, v)) = accepted else {
                // No progress possible at this precision.
                break;
            };
            let stalled = v <= phi;
            x = trial;
            phi = v;
            match check(&x, m / t, false) {
                Stop::Continue => {}
                Stop::Feasible | Stop::Certified => {
                    return Ok(BarrierRun {
                        x,
                        gap: m / t,
                        newton_iterations: newton,
                        converged: true,
                    })
                }
            }
            if stalled && decrement < T::of(0.2) {
                break;
            }
        }

        let gap = m / t;
        match check(&x, gap, true) {
            Stop::Continue => {}
            Stop::Feasible | Stop::Certified => {
                return Ok(BarrierRun {
                    x,
                    gap,
                    newton_iterations: newton,
                    converged: true,
                })
            }
        }
        let f = p.objective.value(&x).expect("iterate stays in domain");
        if gap <= o.tol * f.abs().max(T::one()) {
            return Ok(BarrierRun {
                x,
                gap,
                newton_iterations: newton,
                converged: true,
            });
        }
        t = t * o.mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn ball(offset: usize, len: usize) -> Constraint<f64> {
        Constraint::hard(Concave::quadratic(Quadratic {
            constant: 1.0,
            linear: vec![],
            curvature: vec![Curvature::Identity { offset, len, weight: 1.0 }],
        }))
    }

    fn linear(coeffs: &[(usize, f64)], constant: f64) -> Concave<f64> {
        Concave::quadratic(Quadratic {
            constant,
            linear: coeffs.to_vec(),
            curvature: vec![],
        })
    }

    #[test]
    fn linear_objective_on_ball() {
        let c = [3.0, -4.0, 12.0];
        let p = ConvexProblem {
            dim: 3,
            objective: linear(&[(0, c[0]), (1, c[1]), (2, c[2])], 0.0),
            constraints: vec![ball(0, 3)],
            blocks: vec![],
        };
        let sol = convex_subproblem_solve(&p, &[0.0; 3], 1e-10).unwrap();
        for (x, ci) in sol.x.iter().zip(c) {
            assert!((x - ci / 13.0).abs() < 1e-6, "{:?}", sol.x);
        }
        assert!((sol.objective - 13.0).abs() < 1e-8);
    }

    #[test]
    fn toy_qp_matches_kkt_solution() {
        // max −(x−2)² − (y−1)² s.t. x + y ≤ 2. KKT: x = 1.5, y = 0.5.
        let objective = Concave::quadratic(Quadratic {
            constant: -5.0,
            linear: vec![(0, 4.0), (1, 2.0)],
            curvature: vec![
                Curvature::RankOne { offset: 0, dir: vec![1.0], weight: 1.0 },
                Curvature::RankOne { offset: 1, dir: vec![1.0], weight: 1.0 },
            ],
        });
        let p = ConvexProblem {
            dim: 2,
            objective,
            constraints: vec![Constraint::hard(linear(&[(0, -1.0), (1, -1.0)], 2.0))],
            blocks: vec![],
        };
        let sol = convex_subproblem_solve(&p, &[0.0, 0.0], 1e-12).unwrap();
        assert!((sol.x[0] - 1.5).abs() < 1e-6);
        assert!((sol.x[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empty_feasible_set_is_certified() {
        // x ≥ 2 inside the unit ball.
        let p = ConvexProblem {
            dim: 1,
            objective: Concave::variable(0),
            constraints: vec![ball(0, 1), Constraint::relaxable(linear(&[(0, 1.0)], -2.0))],
            blocks: vec![],
        };
        let sol = solve(&p, &[0.0], &BarrierOptions::default()).unwrap();
        assert!(matches!(sol.status, SolveStatus::Infeasible { margin } if margin < 0.0));
        assert!(matches!(
            convex_subproblem_solve(&p, &[0.0], 1e-9),
            Err(ConvexError::Infeasible { .. })
        ));
    }

    #[test]
    fn phase_one_recovers_a_feasible_start() {
        // x ≥ 0.5 inside the unit ball, maximize −x: optimum at the floor.
        let p = ConvexProblem {
            dim: 1,
            objective: linear(&[(0, -1.0)], 0.0),
            constraints: vec![ball(0, 1), Constraint::relaxable(linear(&[(0, 1.0)], -0.5))],
            blocks: vec![],
        };
        let sol = convex_subproblem_solve(&p, &[-0.5], 1e-10).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn hard_violation_is_a_bad_start() {
        let p = ConvexProblem {
            dim: 1,
            objective: Concave::variable(0),
            constraints: vec![ball(0, 1)],
            blocks: vec![],
        };
        assert_eq!(solve(&p, &[2.0], &BarrierOptions::default()), Err(ConvexError::BadStart));
    }

    #[test]
    fn negative_power_and_log_terms() {
        // max −x^{-1} + log2(1 + y) s.t. x + y ≤ 3, x, y ≥ 0.
        let objective = Concave::new(vec![
            Term::NegPower { index: 0, coeff: 1.0, exponent: -1.0 },
            Term::Log2OnePlus { weight: 1.0, inner: Quadratic { constant: 0.0, linear: vec![(1, 1.0)], curvature: vec![] } },
        ]);
        let p = ConvexProblem {
            dim: 2,
            objective,
            constraints: vec![
                Constraint::hard(linear(&[(0, -1.0), (1, -1.0)], 3.0)),
                Constraint::hard(Concave::variable(0)),
                Constraint::hard(Concave::variable(1)),
            ],
            blocks: vec![],
        };
        let sol = convex_subproblem_solve(&p, &[1.0, 1.0], 1e-12).unwrap();
        // Stationarity: 1/x² = 1/((1+y) ln 2) with x + y = 3.
        let (x, y) = (sol.x[0], sol.x[1]);
        assert!((x + y - 3.0).abs() < 1e-8);
        assert!((1.0 / (x * x) - 1.0 / ((1.0 + y) * std::f64::consts::LN_2)).abs() < 1e-6);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let f = Concave::new(vec![
            Term::Log2OnePlus {
                weight: 1.7,
                inner: Quadratic {
                    constant: 2.0,
                    linear: vec![(0, 0.3), (2, -0.4)],
                    curvature: vec![
                        Curvature::RankOne { offset: 1, dir: vec![0.5, -1.0], weight: 0.7 },
                        Curvature::Identity { offset: 0, len: 2, weight: 0.2 },
                    ],
                },
            },
            Term::NegPower { index: 2, coeff: 0.9, exponent: -1.0 / 3.0 },
        ]);
        let x = [0.3f64, -0.2, 0.8];
        let mut g = vec![0.0f64; 3];
        f.add_gradient(&x, 1.0, &mut g);
        let mut h = DenseMatrix::zeros(3);
        f.add_neg_hessian(&x, 1.0, &mut h, &mut Vec::new());
        let eps = 1e-5;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (f.value(&xp).unwrap() - f.value(&xm).unwrap()) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8, "grad {i}: {fd} vs {}", g[i]);
            let mut gp = vec![0.0f64; 3];
            let mut gm = vec![0.0; 3];
            f.add_gradient(&xp, 1.0, &mut gp);
            f.add_gradient(&xm, 1.0, &mut gm);
            for j in 0..3 {
                let fd = -(gp[j] - gm[j]) / (2.0 * eps);
                assert!((fd - h.get(j, i)).abs() < 1e-6, "hess {j},{i}");
            }
        }
    }
}
