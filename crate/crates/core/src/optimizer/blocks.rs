//! Convex programs for one block update.
//!
//! Gains are normalized by the noise amplitude, so the noise term is 1.
//! A beam block optimizes one collection of beamformers (one vector per
//! slot) with every cross gain written as `a_kl = u_klᴴ x_slot`, where the
//! slot is `l` for transmit-side beams and `k` for receive-side beams.
//! Receive-side gains come out conjugated, which changes neither `|a_kl|`
//! nor the anchored forms below since anchors use the same representation.

use num_complex::Complex;

use super::convex::{solve, BarrierOptions, Concave, Constraint, ConvexProblem, Curvature, Quadratic, SolveStatus, Term};
use crate::error::ConvexError;
use crate::linalg::{cdot, cnorm, CVector};
use crate::scalar::Real;

/// Slack left between a boundary iterate and the start of the next solve.
const INTERIOR_SHRINK: f64 = 1e-7;

pub(crate) struct BlockResult<T> {
    pub status: SolveStatus,
    /// FP coefficients the surrogate was built with.
    pub coefficients: Vec<T>,
    /// Epigraph variable at the returned point.
    pub floor: T,
}

/// Real embedding `[Re; Im]` of `u` such that `Re{uᴴx} = re·z` and
/// `Im{uᴴx} = im·z`.
fn embed<T: Real>(u: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
    let n = u.len();
    let mut re = Vec::with_capacity(2 * n);
    let mut im = Vec::with_capacity(2 * n);
    re.extend(u.iter().map(|c| c.re));
    re.extend(u.iter().map(|c| c.im));
    im.extend(u.iter().map(|c| -c.im));
    im.extend(u.iter().map(|c| c.re));
    (re, im)
}

/// Linear coefficients of `Re{c · uᴴx}` on the embedded slot.
fn rotated_linear<T: Real>(u: &[Complex<T>], c: Complex<T>, scale: T, offset: usize) -> Vec<(usize, T)> {
    let (re, im) = embed(u);
    re.iter()
        .zip(&im)
        .enumerate()
        .map(|(i, (a, b))| (offset + i, scale * (c.re * *a - c.im * *b)))
        .collect()
}

/// Curvature `−weight |uᴴx|²` on the embedded slot.
fn modulus_curvature<T: Real>(u: &[Complex<T>], weight: T, offset: usize) -> [Curvature<T>; 2] {
    let (re, im) = embed(u);
    [
        Curvature::RankOne { offset, dir: re, weight },
        Curvature::RankOne { offset, dir: im, weight },
    ]
}

fn shrink_into_ball<T: Real>(x: &[Complex<T>]) -> CVector<T> {
    let n = cnorm(x);
    let cap = T::one() - T::of(INTERIOR_SHRINK);
    if n > cap {
        x.iter().map(|c| c * (cap / n)).collect()
    } else {
        x.to_vec()
    }
}

pub(crate) struct BeamBlock<'a, T> {
    /// `coeffs[k][l] = u_kl`.
    pub coeffs: &'a [Vec<CVector<T>>],
    /// Transmit-side block: gain `a_kl` depends on slot `l`.
    pub transmit_side: bool,
    pub powers: &'a [T],
    /// `B / D_k`.
    pub rate_scale: &'a [T],
    pub threshold: T,
    pub enforce_floor: bool,
    pub anchor: &'a [CVector<T>],
}

impl<T: Real> BeamBlock<'_, T> {
    fn slot(&self, k: usize, l: usize) -> usize {
        if self.transmit_side {
            l
        } else {
            k
        }
    }

    fn gain(&self, k: usize, l: usize, x: &[CVector<T>]) -> Complex<T> {
        cdot(&self.coeffs[k][l], &x[self.slot(k, l)])
    }

    /// Solves the block; the new beams are written into `out`.
    pub fn solve(&self, options: &BarrierOptions<T>, out: &mut Vec<CVector<T>>) -> Result<BlockResult<T>, ConvexError> {
        let k_users = self.powers.len();
        let mut offsets = Vec::with_capacity(k_users);
        let mut dim = 0;
        for x in self.anchor {
            offsets.push(dim);
            dim += 2 * x.len();
        }
        let tau = dim;
        let two = T::of(2.0);

        let mut constraints = Vec::new();
        let mut coefficients = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let a0 = self.gain(k, k, self.anchor);
            let interference0: T = (0..k_users)
                .filter(|&l| l != k)
                .map(|l| self.gain(k, l, self.anchor).norm_sqr() * self.powers[l])
                .sum::<T>()
                + T::one();
            let sqrt_p = self.powers[k].sqrt();
            let alpha = sqrt_p * a0.norm() / interference0;
            coefficients.push(alpha);
            let phase = if a0.norm() > T::zero() {
                a0.conj() / a0.norm()
            } else {
                Complex::new(T::one(), T::zero())
            };

            let own = &self.coeffs[k][k];
            let own_offset = offsets[self.slot(k, k)];
            let mut surrogate = Quadratic {
                constant: -alpha * alpha,
                linear: rotated_linear(own, phase, two * alpha * sqrt_p, own_offset),
                curvature: Vec::new(),
            };
            let floor_scale = T::one() / (self.threshold * interference0);
            let mut floor = Quadratic {
                constant: -(self.powers[k] * a0.norm_sqr() + self.threshold) * floor_scale,
                linear: rotated_linear(own, a0.conj(), two * self.powers[k] * floor_scale, own_offset),
                curvature: Vec::new(),
            };
            for l in (0..k_users).filter(|&l| l != k) {
                let u = &self.coeffs[k][l];
                let off = offsets[self.slot(k, l)];
                surrogate
                    .curvature
                    .extend(modulus_curvature(u, alpha * alpha * self.powers[l], off));
                floor
                    .curvature
                    .extend(modulus_curvature(u, self.powers[l] / interference0, off));
            }
            constraints.push(Constraint::hard(Concave::new(vec![
                Term::Log2OnePlus {
                    weight: self.rate_scale[k],
                    inner: surrogate,
                },
                Term::Quadratic(Quadratic {
                    constant: T::zero(),
                    linear: vec![(tau, -T::one())],
                    curvature: Vec::new(),
                }),
            ])));
            if self.enforce_floor {
                constraints.push(Constraint::relaxable(Concave::quadratic(floor)));
            }
        }
        for (x, &off) in self.anchor.iter().zip(&offsets) {
            constraints.push(Constraint::hard(Concave::quadratic(Quadratic {
                constant: T::one(),
                linear: Vec::new(),
                curvature: vec![Curvature::Identity {
                    offset: off,
                    len: 2 * x.len(),
                    weight: T::one(),
                }],
            })));
        }

        let mut start = Vec::with_capacity(dim + 1);
        for x in self.anchor {
            let x = shrink_into_ball(x);
            start.extend(x.iter().map(|c| c.re));
            start.extend(x.iter().map(|c| c.im));
        }
        start.push(T::zero());
        let min_rate = constraints
            .iter()
            .step_by(if self.enforce_floor { 2 } else { 1 })
            .take(k_users)
            .map(|c| c.function.value(&start).unwrap_or(T::neg_infinity()))
            .fold(T::infinity(), T::min);
        if !min_rate.is_finite() {
            return Err(ConvexError::BadStart);
        }
        start[tau] = min_rate - T::of(0.5) * min_rate.abs().max(T::of(1e-3));
        // Keeps phase I bounded: without it the barrier grows without limit
        // as τ → −∞. Inactive at the optimum, which lies above the start.
        let tau_floor = start[tau] - T::of(10.0) * start[tau].abs().max(T::of(1e-3));
        constraints.push(Constraint::hard(Concave::quadratic(Quadratic {
            constant: -tau_floor,
            linear: vec![(tau, T::one())],
            curvature: Vec::new(),
        })));

        let mut blocks: Vec<usize> = self.anchor.iter().map(|x| 2 * x.len()).collect();
        blocks.push(1);
        let problem = ConvexProblem {
            dim: dim + 1,
            objective: Concave::variable(tau),
            constraints,
            blocks,
        };
        let sol = solve(&problem, &start, options)?;
        out.clear();
        for (x, &off) in self.anchor.iter().zip(&offsets) {
            let n = x.len();
            out.push(
                (0..n)
                    .map(|i| Complex::new(sol.x[off + i], sol.x[off + n + i]))
                    .collect(),
            );
        }
        Ok(BlockResult {
            status: sol.status,
            coefficients,
            floor: sol.x[tau],
        })
    }
}

pub(crate) struct PowerBlock<'a, T> {
    /// `|a_kl|²`, noise-normalized.
    pub gains: &'a [Vec<T>],
    /// `B / D_dl,k`.
    pub rate_scale: &'a [T],
    /// `μ D_ul,k ς^{1/3}`.
    pub kappa: &'a [T],
    pub budget: T,
    pub threshold: T,
    pub enforce_floor: bool,
    pub downlink: &'a [T],
    pub compute: &'a [T],
}

pub(crate) struct PowerResult<T> {
    pub status: SolveStatus,
    pub downlink: Vec<T>,
    pub compute: Vec<T>,
    pub coefficients: Vec<T>,
    pub floor: T,
}

impl<T: Real> PowerBlock<'_, T> {
    /// Variables: `p_k = √P_dl,k` at `0..K`, `P_comp,k` at `K..2K`, `γ` at `2K`.
    pub fn solve(&self, options: &BarrierOptions<T>) -> Result<PowerResult<T>, ConvexError> {
        let k_users = self.downlink.len();
        let gamma = 2 * k_users;
        let two = T::of(2.0);
        let p0: Vec<T> = self.downlink.iter().map(|p| p.sqrt()).collect();

        let mut constraints = Vec::new();
        let mut coefficients = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let interference0: T = (0..k_users)
                .filter(|&l| l != k)
                .map(|l| self.gains[k][l] * self.downlink[l])
                .sum::<T>()
                + T::one();
            let amp = self.gains[k][k].sqrt();
            let beta = p0[k] * amp / interference0;
            coefficients.push(beta);
            let mut surrogate = Quadratic {
                constant: -beta * beta,
                linear: vec![(k, two * beta * amp)],
                curvature: Vec::new(),
            };
            let floor_scale = T::one() / (self.threshold * interference0);
            let mut floor = Quadratic {
                constant: -(self.gains[k][k] * self.downlink[k] + self.threshold) * floor_scale,
                linear: vec![(k, two * self.gains[k][k] * p0[k] * floor_scale)],
                curvature: Vec::new(),
            };
            for l in (0..k_users).filter(|&l| l != k) {
                surrogate.curvature.push(Curvature::RankOne {
                    offset: l,
                    dir: vec![T::one()],
                    weight: beta * beta * self.gains[k][l],
                });
                floor.curvature.push(Curvature::RankOne {
                    offset: l,
                    dir: vec![T::one()],
                    weight: self.gains[k][l] / interference0,
                });
            }
            constraints.push(Constraint::hard(Concave::new(vec![
                Term::Log2OnePlus {
                    weight: self.rate_scale[k],
                    inner: surrogate,
                },
                Term::Quadratic(Quadratic {
                    constant: T::zero(),
                    linear: vec![(gamma, -T::one())],
                    curvature: Vec::new(),
                }),
            ])));
            if self.enforce_floor {
                constraints.push(Constraint::relaxable(Concave::quadratic(floor)));
            }
        }
        let rate_constraints: Vec<usize> = (0..k_users)
            .map(|k| if self.enforce_floor { 2 * k } else { k })
            .collect();
        constraints.push(Constraint::hard(Concave::quadratic(Quadratic {
            constant: self.budget,
            linear: (k_users..2 * k_users).map(|i| (i, -T::one())).collect(),
            curvature: vec![Curvature::Identity {
                offset: 0,
                len: k_users,
                weight: T::one(),
            }],
        })));
        for i in 0..=gamma {
            constraints.push(Constraint::hard(Concave::variable(i)));
        }

        let used: T = self.downlink.iter().chain(self.compute).copied().sum();
        let f = (self.budget * (T::one() - T::of(INTERIOR_SHRINK)) / used).min(T::one());
        let mut start: Vec<T> = p0.iter().map(|p| *p * f.sqrt()).collect();
        start.extend(self.compute.iter().map(|c| *c * f));
        start.push(T::zero());
        let min_rate = rate_constraints
            .iter()
            .map(|&i| constraints[i].function.value(&start).unwrap_or(T::neg_infinity()))
            .fold(T::infinity(), T::min);
        if !(min_rate > T::zero() && min_rate.is_finite()) {
            return Err(ConvexError::BadStart);
        }
        start[gamma] = min_rate * T::of(0.5);

        let mut objective = Concave::new(
            self.kappa
                .iter()
                .enumerate()
                .map(|(k, kappa)| Term::NegPower {
                    index: k_users + k,
                    coeff: *kappa,
                    exponent: -T::one() / T::of(3.0),
                })
                .collect(),
        );
        objective.terms.push(Term::NegPower {
            index: gamma,
            coeff: T::one(),
            exponent: -T::one(),
        });
        let problem = ConvexProblem {
            dim: gamma + 1,
            objective,
            constraints,
            blocks: vec![1; gamma + 1],
        };
        let sol = solve(&problem, &start, options)?;
        Ok(PowerResult {
            status: sol.status,
            downlink: sol.x[..k_users].iter().map(|p| *p * *p).collect(),
            compute: sol.x[k_users..2 * k_users].to_vec(),
            coefficients,
            floor: sol.x[gamma],
        })
    }
}
