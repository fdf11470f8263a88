use super::blocks::{BeamBlock, PowerBlock};
use super::convex::{BarrierOptions, SolveStatus};
use super::{FpState, SolverOptions};
use crate::channel::WaypointChannels;
use crate::error::{ConvexError, InfeasibilityReason, OptimizerError};
use crate::linalg::{normalized, CMatrix, CVector};
use crate::link::{compute_latency, rate, CrossGains, PowerAllocation, TransmissionLatency};
use crate::scalar::Real;
use crate::scenario::{ScenarioConfig, Waypoint};

/// Everything needed to design one waypoint, detached from the scenario.
#[derive(Clone, Debug)]
pub struct WaypointProblem<T> {
    pub waypoint_id: u32,
    pub turbine_ids: Vec<u32>,
    /// H_k, N×M.
    pub uplink: Vec<CMatrix<T>>,
    /// G_k, M×N.
    pub downlink: Vec<CMatrix<T>>,
    /// P_k.
    pub uplink_tx_power: Vec<T>,
    pub uplink_payload_bits: Vec<T>,
    pub downlink_payload_bits: Vec<T>,
    pub bandwidth: T,
    pub noise_power: T,
    pub sinr_threshold: T,
    /// P_j.
    pub power_budget: T,
    pub compute_intensity: T,
    pub processor_coefficient: T,
    /// Starting FBS-side beams, one N-vector per turbine.
    pub init_fbs: Vec<CVector<T>>,
    /// Starting turbine-side beams, one M-vector per turbine.
    pub init_turbine: Vec<CVector<T>>,
}

impl<T: Real> WaypointProblem<T> {
    /// Problem for `waypoint`, starting from matched filters on the LoS
    /// steering vectors.
    pub fn from_channels(config: &ScenarioConfig, waypoint: &Waypoint, channels: &WaypointChannels<T>) -> Self {
        let turbines = config.assigned(waypoint);
        let unit = |v: &CVector<T>| normalized(v).unwrap_or_else(|| v.clone());
        Self {
            waypoint_id: waypoint.id,
            turbine_ids: channels.turbine_ids.clone(),
            uplink: channels.uplink.iter().map(|c| c.entries.clone()).collect(),
            downlink: channels.downlink.iter().map(|c| c.entries.clone()).collect(),
            uplink_tx_power: turbines.iter().map(|t| T::of(t.uplink_tx_power)).collect(),
            uplink_payload_bits: turbines.iter().map(|t| T::of(t.uplink_payload_bits)).collect(),
            downlink_payload_bits: turbines.iter().map(|t| T::of(t.downlink_payload_bits)).collect(),
            bandwidth: T::of(config.bandwidth),
            noise_power: T::of(config.noise_power),
            sinr_threshold: T::of(config.sinr_threshold),
            power_budget: T::of(waypoint.power_budget),
            compute_intensity: T::of(config.compute_intensity),
            processor_coefficient: T::of(config.processor_coefficient),
            init_fbs: channels.uplink.iter().map(|c| unit(&c.row_steering)).collect(),
            init_turbine: channels.uplink.iter().map(|c| unit(&c.col_steering)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.turbine_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turbine_ids.is_empty()
    }

    fn sigma(&self) -> T {
        self.noise_power.sqrt()
    }

    fn rate_scale(&self, payload: &[T]) -> Vec<T> {
        payload.iter().map(|d| self.bandwidth / *d).collect()
    }

    fn kappa(&self) -> Vec<T> {
        let s = self.processor_coefficient.cbrt();
        self.uplink_payload_bits
            .iter()
            .map(|d| self.compute_intensity * *d * s)
            .collect()
    }

    /// Turbines that cannot reach the SINR floor even alone at full power,
    /// by the bound `SINR ≤ P ‖H‖_F² / σ²`.
    fn single_user_violations(&self, channels: &[CMatrix<T>], powers: &[T]) -> Vec<u32> {
        channels
            .iter()
            .zip(powers)
            .zip(&self.turbine_ids)
            .filter(|((h, p), _)| {
                let f = h.frobenius_norm();
                **p * f * f / self.noise_power < self.sinr_threshold
            })
            .map(|(_, id)| *id)
            .collect()
    }

    fn transmission(&self, sinrs: &[T], payload: &[T]) -> TransmissionLatency<T> {
        let mut worst = TransmissionLatency {
            seconds: T::zero(),
            bottleneck: self.turbine_ids[0],
        };
        for ((s, d), id) in sinrs.iter().zip(payload).zip(&self.turbine_ids) {
            let r = rate(*s);
            let t = if r > T::zero() {
                *d / (self.bandwidth * r)
            } else {
                T::infinity()
            };
            if t > worst.seconds || (t == worst.seconds && *id < worst.bottleneck) {
                worst = TransmissionLatency { seconds: t, bottleneck: *id };
            }
        }
        worst
    }

    fn violation(&self, sinrs: &[T]) -> T {
        sinrs
            .iter()
            .map(|s| ((self.sinr_threshold - *s) / self.sinr_threshold).max(T::zero()))
            .fold(T::zero(), T::max)
    }

    fn violating(&self, sinrs: &[T]) -> Vec<u32> {
        sinrs
            .iter()
            .zip(&self.turbine_ids)
            .filter(|(s, _)| !sinr_ok(**s, self.sinr_threshold))
            .map(|(_, id)| *id)
            .collect()
    }
}

fn sinr_ok<T: Real>(sinr: T, threshold: T) -> bool {
    sinr >= threshold * (T::one() - T::of(1e-9))
}

/// Which blocks an AO run updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub fbs_beams: bool,
    pub turbine_beams: bool,
    /// Downlink only.
    pub power: bool,
    /// Impose the SINR floor; when false the design only minimizes latency.
    pub enforce_floor: bool,
}

impl BlockPlan {
    pub const FULL: BlockPlan = BlockPlan {
        fbs_beams: true,
        turbine_beams: true,
        power: true,
        enforce_floor: true,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct UplinkDesign<T> {
    pub fbs: Vec<CVector<T>>,
    pub turbine: Vec<CVector<T>>,
    pub sinr: Vec<T>,
    pub latency: TransmissionLatency<T>,
    pub state: FpState<T>,
    /// Every SINR meets the floor.
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DownlinkDesign<T> {
    pub fbs: Vec<CVector<T>>,
    pub turbine: Vec<CVector<T>>,
    pub allocation: PowerAllocation<T>,
    pub sinr: Vec<T>,
    pub transmission: TransmissionLatency<T>,
    pub compute: T,
    pub state: FpState<T>,
    pub feasible: bool,
}

impl<T: Real> DownlinkDesign<T> {
    pub fn objective(&self) -> T {
        self.compute + self.transmission.seconds
    }
}

/// Objective/violation pair with the AO accept rule.
#[derive(Clone, Copy)]
struct Score<T> {
    objective: T,
    violation: T,
}

impl<T: Real> Score<T> {
    fn feasible(&self) -> bool {
        self.violation <= T::zero()
    }

    fn improves_on(&self, old: &Score<T>) -> bool {
        match (old.feasible(), self.feasible()) {
            (_, false) => !old.feasible() && self.violation < old.violation,
            (false, true) => true,
            (true, true) => self.objective <= old.objective,
        }
    }
}

fn relative_change<T: Real>(old: T, new: T) -> T {
    (old - new).abs() / old.abs().max(T::min_positive_value())
}

/// Shared AO driver. `round` runs one sweep of block updates and returns
/// the score afterwards.
fn run_ao<T: Real>(
    options: &SolverOptions,
    state: &mut FpState<T>,
    initial: Score<T>,
    mut round: impl FnMut(&mut FpState<T>) -> Score<T>,
) -> Score<T> {
    let mut score = initial;
    state.objective_trace.push(score.objective);
    state.violation_trace.push(score.violation);
    for _ in 0..options.max_outer_iterations {
        let before = score;
        score = round(state);
        state.iterations += 1;
        state.objective_trace.push(score.objective);
        state.violation_trace.push(score.violation);
        if before.feasible() && score.feasible() {
            if relative_change(before.objective, score.objective) < T::of(options.convergence_tol) {
                state.converged = true;
                break;
            }
        } else if !score.feasible() && score.violation >= before.violation {
            break;
        }
    }
    score
}

fn record_status<T: Real>(state: &mut FpState<T>, status: &SolveStatus) {
    if *status == SolveStatus::IterationLimit {
        state.unconverged_subproblems += 1;
    }
}

fn subproblem_error(waypoint: u32, e: ConvexError) -> OptimizerError {
    OptimizerError::Subproblem { waypoint, source: e }
}

/// Uplink beams at one waypoint: minimize `max_k D_k / (B R_k)` subject to
/// the SINR floor and unit-norm beams.
pub fn design_uplink<T: Real>(
    problem: &WaypointProblem<T>,
    plan: BlockPlan,
    options: &SolverOptions,
) -> Result<UplinkDesign<T>, OptimizerError> {
    if problem.is_empty() {
        return Err(OptimizerError::EmptyWaypoint {
            waypoint: problem.waypoint_id,
        });
    }
    if plan.enforce_floor {
        let bad = problem.single_user_violations(&problem.uplink, &problem.uplink_tx_power);
        if !bad.is_empty() {
            return Err(OptimizerError::Infeasible {
                waypoint: problem.waypoint_id,
                turbines: bad,
                reason: InfeasibilityReason::SingleUserBound,
            });
        }
    }
    let k_users = problem.len();
    let sigma = problem.sigma();
    let powers = &problem.uplink_tx_power;
    let rate_scale = problem.rate_scale(&problem.uplink_payload_bits);
    let barrier: BarrierOptions<T> = options.barrier();

    let score_of = |w: &[CVector<T>], v: &[CVector<T>]| {
        let sinrs = CrossGains::uplink(&problem.uplink, w, v).sinrs(powers, problem.noise_power);
        Score {
            objective: problem.transmission(&sinrs, &problem.uplink_payload_bits).seconds,
            violation: if plan.enforce_floor { problem.violation(&sinrs) } else { T::zero() },
        }
    };

    let mut w = problem.init_fbs.clone();
    let mut v = problem.init_turbine.clone();
    let mut state = FpState::default();
    if plan.turbine_beams {
        state.block_order.push("uplink_turbine_beams");
    }
    if plan.fbs_beams {
        state.block_order.push("uplink_fbs_beams");
    }
    let initial = score_of(&w, &v);
    let mut error = None;
    let mut current = initial;
    let mut candidate = Vec::new();

    let final_score = run_ao(options, &mut state, initial, |state| {
        if plan.turbine_beams && error.is_none() {
            // u_kl = H_lᴴ w_k / σ on slot l.
            let coeffs: Vec<Vec<CVector<T>>> = (0..k_users)
                .map(|k| {
                    problem
                        .uplink
                        .iter()
                        .map(|h| scale(h.adjoint_mul_vec(&w[k]), sigma))
                        .collect()
                })
                .collect();
            let block = BeamBlock {
                coeffs: &coeffs,
                transmit_side: true,
                powers,
                rate_scale: &rate_scale,
                threshold: problem.sinr_threshold,
                enforce_floor: plan.enforce_floor,
                anchor: &v,
            };
            match block.solve(&barrier, &mut candidate) {
                Ok(res) => {
                    record_status(state, &res.status);
                    let s = score_of(&w, &candidate);
                    if s.improves_on(&current) {
                        std::mem::swap(&mut v, &mut candidate);
                        current = s;
                        state.alpha = res.coefficients;
                        state.tau = Some(res.floor);
                    } else {
                        state.rejected_updates += 1;
                    }
                }
                Err(e) => error = Some(e),
            }
        }
        if plan.fbs_beams && error.is_none() {
            // u_kl = H_l v_l / σ on slot k.
            let hv: Vec<CVector<T>> = problem
                .uplink
                .iter()
                .zip(&v)
                .map(|(h, v)| scale(h.mul_vec(v), sigma))
                .collect();
            let coeffs: Vec<Vec<CVector<T>>> = (0..k_users).map(|_| hv.clone()).collect();
            let block = BeamBlock {
                coeffs: &coeffs,
                transmit_side: false,
                powers,
                rate_scale: &rate_scale,
                threshold: problem.sinr_threshold,
                enforce_floor: plan.enforce_floor,
                anchor: &w,
            };
            match block.solve(&barrier, &mut candidate) {
                Ok(res) => {
                    record_status(state, &res.status);
                    let s = score_of(&candidate, &v);
                    if s.improves_on(&current) {
                        std::mem::swap(&mut w, &mut candidate);
                        current = s;
                        state.alpha = res.coefficients;
                        state.tau = Some(res.floor);
                    } else {
                        state.rejected_updates += 1;
                    }
                }
                Err(e) => error = Some(e),
            }
        }
        current
    });
    if let Some(e) = error {
        return Err(subproblem_error(problem.waypoint_id, e));
    }

    let sinr = CrossGains::uplink(&problem.uplink, &w, &v).sinrs(powers, problem.noise_power);
    let feasible = final_score.violation <= T::zero() && problem.violating(&sinr).is_empty();
    if plan.enforce_floor && !feasible {
        return Err(OptimizerError::Infeasible {
            waypoint: problem.waypoint_id,
            turbines: problem.violating(&sinr),
            reason: InfeasibilityReason::NoFeasiblePoint,
        });
    }
    Ok(UplinkDesign {
        latency: problem.transmission(&sinr, &problem.uplink_payload_bits),
        feasible: problem.violating(&sinr).is_empty(),
        fbs: w,
        turbine: v,
        sinr,
        state,
    })
}

fn scale<T: Real>(v: CVector<T>, sigma: T) -> CVector<T> {
    v.into_iter().map(|c| c / sigma).collect()
}

/// Downlink beams and the per-turbine split of P_j between transmission and
/// computation: minimize `Σ_k T_comp,k + max_k D_k / (B R_k)`.
///
/// `fixed_power` pins the split (the power block is skipped); otherwise the
/// design starts from the equal split.
pub fn design_downlink<T: Real>(
    problem: &WaypointProblem<T>,
    plan: BlockPlan,
    fixed_power: Option<PowerAllocation<T>>,
    options: &SolverOptions,
) -> Result<DownlinkDesign<T>, OptimizerError> {
    let optimize_power = plan.power && fixed_power.is_none();
    let alloc =
        fixed_power.unwrap_or_else(|| PowerAllocation::equal_split(problem.len(), problem.power_budget));
    // The downlink starts from the conjugate of the uplink initialization:
    // FBS transmits along its receive direction, turbines receive along
    // their transmit direction.
    let start = (problem.init_fbs.clone(), problem.init_turbine.clone(), alloc);
    downlink_ao(problem, plan, start, optimize_power, options)
}

/// Downlink design continued from `previous`, typically obtained at a
/// smaller budget. The previous split stays admissible, so the result is
/// never worse than `previous` evaluated under `problem`.
pub fn design_downlink_from<T: Real>(
    problem: &WaypointProblem<T>,
    plan: BlockPlan,
    previous: &DownlinkDesign<T>,
    options: &SolverOptions,
) -> Result<DownlinkDesign<T>, OptimizerError> {
    let start = (previous.fbs.clone(), previous.turbine.clone(), previous.allocation.clone());
    downlink_ao(problem, plan, start, plan.power, options)
}

type DownlinkStart<T> = (Vec<CVector<T>>, Vec<CVector<T>>, PowerAllocation<T>);

fn downlink_ao<T: Real>(
    problem: &WaypointProblem<T>,
    plan: BlockPlan,
    (mut w, mut v, mut alloc): DownlinkStart<T>,
    optimize_power: bool,
    options: &SolverOptions,
) -> Result<DownlinkDesign<T>, OptimizerError> {
    if problem.is_empty() {
        return Err(OptimizerError::EmptyWaypoint {
            waypoint: problem.waypoint_id,
        });
    }
    let k_users = problem.len();
    if plan.enforce_floor {
        let budget = vec![problem.power_budget; k_users];
        let bad = problem.single_user_violations(&problem.downlink, &budget);
        if !bad.is_empty() {
            return Err(OptimizerError::Infeasible {
                waypoint: problem.waypoint_id,
                turbines: bad,
                reason: InfeasibilityReason::SingleUserBound,
            });
        }
    }
    let sigma = problem.sigma();
    let rate_scale = problem.rate_scale(&problem.downlink_payload_bits);
    let kappa = problem.kappa();
    let barrier: BarrierOptions<T> = options.barrier();

    let compute_of = |alloc: &PowerAllocation<T>| -> T {
        alloc
            .compute
            .iter()
            .zip(&kappa)
            .map(|(c, kap)| *kap * c.powf(-T::one() / T::of(3.0)))
            .sum()
    };
    let score_of = |w: &[CVector<T>], v: &[CVector<T>], alloc: &PowerAllocation<T>| {
        let sinrs = CrossGains::downlink(&problem.downlink, w, v).sinrs(&alloc.downlink, problem.noise_power);
        Score {
            objective: compute_of(alloc) + problem.transmission(&sinrs, &problem.downlink_payload_bits).seconds,
            violation: if plan.enforce_floor { problem.violation(&sinrs) } else { T::zero() },
        }
    };

    let mut state = FpState::default();
    if plan.fbs_beams {
        state.block_order.push("downlink_fbs_beams");
    }
    if plan.turbine_beams {
        state.block_order.push("downlink_turbine_beams");
    }
    if optimize_power {
        state.block_order.push("power");
    }
    let initial = score_of(&w, &v, &alloc);
    let mut current = initial;
    let mut error = None;
    let mut candidate = Vec::new();

    let final_score = run_ao(options, &mut state, initial, |state| {
        if plan.fbs_beams && error.is_none() {
            // u_kl = G_kᴴ v_k / σ on slot l.
            let coeffs: Vec<Vec<CVector<T>>> = problem
                .downlink
                .iter()
                .zip(&v)
                .map(|(g, vk)| vec![scale(g.adjoint_mul_vec(vk), sigma); k_users])
                .collect();
            let block = BeamBlock {
                coeffs: &coeffs,
                transmit_side: true,
                powers: &alloc.downlink,
                rate_scale: &rate_scale,
                threshold: problem.sinr_threshold,
                enforce_floor: plan.enforce_floor,
                anchor: &w,
            };
            match block.solve(&barrier, &mut candidate) {
                Ok(res) => {
                    record_status(state, &res.status);
                    let s = score_of(&candidate, &v, &alloc);
                    if s.improves_on(&current) {
                        std::mem::swap(&mut w, &mut candidate);
                        current = s;
                        state.beta = res.coefficients;
                        state.gamma = Some(res.floor);
                    } else {
                        state.rejected_updates += 1;
                    }
                }
                Err(e) => error = Some(e),
            }
        }
        if plan.turbine_beams && error.is_none() {
            // u_kl = G_k w_l / σ on slot k.
            let coeffs: Vec<Vec<CVector<T>>> = problem
                .downlink
                .iter()
                .map(|g| w.iter().map(|wl| scale(g.mul_vec(wl), sigma)).collect())
                .collect();
            let block = BeamBlock {
                coeffs: &coeffs,
                transmit_side: false,
                powers: &alloc.downlink,
                rate_scale: &rate_scale,
                threshold: problem.sinr_threshold,
                enforce_floor: plan.enforce_floor,
                anchor: &v,
            };
            match block.solve(&barrier, &mut candidate) {
                Ok(res) => {
                    record_status(state, &res.status);
                    let s = score_of(&w, &candidate, &alloc);
                    if s.improves_on(&current) {
                        std::mem::swap(&mut v, &mut candidate);
                        current = s;
                        state.beta = res.coefficients;
                        state.gamma = Some(res.floor);
                    } else {
                        state.rejected_updates += 1;
                    }
                }
                Err(e) => error = Some(e),
            }
        }
        if optimize_power && error.is_none() {
            let gains = CrossGains::downlink(&problem.downlink, &w, &v);
            let norm = problem.noise_power;
            let g: Vec<Vec<T>> = (0..k_users)
                .map(|k| (0..k_users).map(|l| gains.get(k, l).norm_sqr() / norm).collect())
                .collect();
            let block = PowerBlock {
                gains: &g,
                rate_scale: &rate_scale,
                kappa: &kappa,
                budget: problem.power_budget,
                threshold: problem.sinr_threshold,
                enforce_floor: plan.enforce_floor,
                downlink: &alloc.downlink,
                compute: &alloc.compute,
            };
            match block.solve(&barrier) {
                Ok(res) => {
                    record_status(state, &res.status);
                    let next = PowerAllocation {
                        downlink: res.downlink,
                        compute: res.compute,
                    };
                    let s = score_of(&w, &v, &next);
                    if next.validate(problem.power_budget).is_ok() && s.improves_on(&current) {
                        alloc = next;
                        current = s;
                        state.beta = res.coefficients;
                        state.gamma = Some(res.floor);
                    } else {
                        state.rejected_updates += 1;
                    }
                }
                Err(e) => error = Some(e),
            }
        }
        current
    });
    if let Some(e) = error {
        return Err(subproblem_error(problem.waypoint_id, e));
    }

    let sinr = CrossGains::downlink(&problem.downlink, &w, &v).sinrs(&alloc.downlink, problem.noise_power);
    let feasible = final_score.violation <= T::zero() && problem.violating(&sinr).is_empty();
    if plan.enforce_floor && !feasible {
        return Err(OptimizerError::Infeasible {
            waypoint: problem.waypoint_id,
            turbines: problem.violating(&sinr),
            reason: InfeasibilityReason::NoFeasiblePoint,
        });
    }
    let compute = compute_latency(
        &problem.turbine_ids,
        &alloc.compute,
        problem.compute_intensity,
        problem.processor_coefficient,
        &problem.uplink_payload_bits,
    )?;
    Ok(DownlinkDesign {
        transmission: problem.transmission(&sinr, &problem.downlink_payload_bits),
        feasible: problem.violating(&sinr).is_empty(),
        compute,
        fbs: w,
        turbine: v,
        allocation: alloc,
        sinr,
        state,
    })
}

/// Proposed uplink design for `waypoint` of `config`.
pub fn solve_uplink_waypoint<T: Real>(
    config: &ScenarioConfig,
    waypoint: &Waypoint,
    channels: &WaypointChannels<T>,
    options: &SolverOptions,
) -> Result<UplinkDesign<T>, OptimizerError> {
    design_uplink(&WaypointProblem::from_channels(config, waypoint, channels), BlockPlan::FULL, options)
}

/// Proposed downlink beams and power split for `waypoint` of `config`.
pub fn solve_downlink_waypoint<T: Real>(
    config: &ScenarioConfig,
    waypoint: &Waypoint,
    channels: &WaypointChannels<T>,
    options: &SolverOptions,
) -> Result<DownlinkDesign<T>, OptimizerError> {
    design_downlink(
        &WaypointProblem::from_channels(config, waypoint, channels),
        BlockPlan::FULL,
        None,
        options,
    )
}
