//! Forward link model: SINR, rate, transmission and compute latency, and the
//! end-to-end latency breakdown.

use num_complex::Complex;
use serde::Serialize;

use crate::error::LinkError;
use crate::linalg::{cdot, cnorm, CMatrix, CVector};
use crate::scalar::Real;

/// Beamformers at one waypoint, one vector per assigned turbine.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamformerSet<T> {
    /// w_ul,k (N entries each).
    pub fbs_uplink: Vec<CVector<T>>,
    /// v_ul,k (M entries each).
    pub turbine_uplink: Vec<CVector<T>>,
    /// w_dl,k.
    pub fbs_downlink: Vec<CVector<T>>,
    /// v_dl,k.
    pub turbine_downlink: Vec<CVector<T>>,
}

impl<T: Real> BeamformerSet<T> {
    /// Largest beamformer 2-norm across all four collections.
    pub fn max_norm(&self) -> T {
        [&self.fbs_uplink, &self.turbine_uplink, &self.fbs_downlink, &self.turbine_downlink]
            .into_iter()
            .flatten()
            .map(|v| cnorm(v))
            .fold(T::zero(), T::max)
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let all = [&self.fbs_uplink, &self.turbine_uplink, &self.fbs_downlink, &self.turbine_downlink];
        for (index, v) in all.into_iter().flatten().enumerate() {
            let norm = cnorm(v);
            if !(norm <= T::one() + T::of(1e-9)) {
                return Err(LinkError::BeamNorm {
                    index,
                    norm: norm.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Per-turbine split of the FBS budget P_j at one waypoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerAllocation<T> {
    /// P_dl,k in watts.
    pub downlink: Vec<T>,
    /// P_comp,k in watts.
    pub compute: Vec<T>,
}

impl<T: Real> PowerAllocation<T> {
    pub fn new(downlink: Vec<T>, compute: Vec<T>, budget: T) -> Result<Self, LinkError> {
        let alloc = Self { downlink, compute };
        alloc.validate(budget)?;
        Ok(alloc)
    }

    /// `P_j / (2K)` for every entry.
    pub fn equal_split(k: usize, budget: T) -> Self {
        let share = budget / T::of_usize(2 * k);
        Self {
            downlink: vec![share; k],
            compute: vec![share; k],
        }
    }

    pub fn total(&self) -> T {
        self.downlink.iter().chain(&self.compute).copied().sum()
    }

    pub fn validate(&self, budget: T) -> Result<(), LinkError> {
        if self.downlink.len() != self.compute.len() {
            return Err(LinkError::Length {
                expected: self.downlink.len(),
                found: self.compute.len(),
            });
        }
        for (index, p) in self.downlink.iter().chain(&self.compute).enumerate() {
            if !(*p > T::zero()) {
                return Err(LinkError::NonPositivePower { index });
            }
        }
        let used = self.total();
        if used > budget * (T::one() + T::of(1e-9)) {
            return Err(LinkError::OverBudget {
                used: used.as_f64(),
                budget: budget.as_f64(),
            });
        }
        Ok(())
    }
}

/// Effective scalar gains `a[k][l]` of a K-user link: the response seen by
/// receiver k to transmitter l's stream.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossGains<T> {
    k: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CrossGains<T> {
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(k * k);
        for r in 0..k {
            for l in 0..k {
                data.push(f(r, l));
            }
        }
        Self { k, data }
    }

    /// Uplink: `a[k][l] = w_kᴴ H_l v_l`.
    pub fn uplink<C: AsRef<CMatrix<T>>>(h: &[C], w: &[CVector<T>], v: &[CVector<T>]) -> Self {
        let hv: Vec<CVector<T>> = h.iter().zip(v).map(|(h, v)| h.as_ref().mul_vec(v)).collect();
        Self::from_fn(h.len(), |k, l| cdot(&w[k], &hv[l]))
    }

    /// Downlink: `a[k][l] = v_kᴴ G_k w_l`.
    pub fn downlink<C: AsRef<CMatrix<T>>>(g: &[C], w: &[CVector<T>], v: &[CVector<T>]) -> Self {
        let gv: Vec<CVector<T>> = g.iter().zip(v).map(|(g, v)| g.as_ref().adjoint_mul_vec(v)).collect();
        Self::from_fn(g.len(), |k, l| cdot(&gv[k], &w[l]))
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex<T> {
        self.data[k * self.k + l]
    }

    /// Interference-plus-noise seen by receiver k.
    pub fn interference(&self, k: usize, powers: &[T], noise: T) -> T {
        (0..self.k)
            .filter(|&l| l != k)
            .map(|l| self.get(k, l).norm_sqr() * powers[l])
            .sum::<T>()
            + noise
    }

    pub fn sinr(&self, k: usize, powers: &[T], noise: T) -> T {
        self.get(k, k).norm_sqr() * powers[k] / self.interference(k, powers, noise)
    }

    pub fn sinrs(&self, powers: &[T], noise: T) -> Vec<T> {
        (0..self.k).map(|k| self.sinr(k, powers, noise)).collect()
    }
}

/// Uplink SINR of turbine k: `|w_kᴴH_kv_k|²P_k / (Σ_{l≠k}|w_kᴴH_lv_l|²P_l + σ²)`.
pub fn sinr_uplink<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    let mut signal = T::zero();
    let mut interference = noise;
    for (l, (h, v)) in channels.iter().zip(turbine).enumerate() {
        let g = cdot(&fbs[k], &h.as_ref().mul_vec(v)).norm_sqr() * powers[l];
        if l == k {
            signal = g;
        } else {
            interference = interference + g;
        }
    }
    signal / interference
}

/// Downlink SINR of turbine k: `|v_kᴴG_kw_k|²P_k / (Σ_{l≠k}|v_kᴴG_kw_l|²P_l + σ²)`.
pub fn sinr_downlink<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    let gv = channels[k].as_ref().adjoint_mul_vec(&turbine[k]);
    let mut signal = T::zero();
    let mut interference = noise;
    for (l, w) in fbs.iter().enumerate() {
        let g = cdot(&gv, w).norm_sqr() * powers[l];
        if l == k {
            signal = g;
        } else {
            interference = interference + g;
        }
    }
    signal / interference
}

/// Spectral efficiency `log2(1 + SINR)`.
pub fn rate<T: Real>(sinr: T) -> T {
    sinr.ln_1p() / T::LN_2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransmissionLatency<T> {
    pub seconds: T,
    /// Lowest turbine id attaining the maximum.
    pub bottleneck: u32,
}

/// `max_k D_k / (B R_k)` over the turbines at a waypoint.
pub fn transmission_latency<T: Real>(
    turbine_ids: &[u32],
    rates: &[T],
    payload_bits: &[T],
    bandwidth: T,
) -> Result<TransmissionLatency<T>, LinkError> {
    let mut best: Option<TransmissionLatency<T>> = None;
    for ((&id, &r), &d) in turbine_ids.iter().zip(rates).zip(payload_bits) {
        if !(r > T::zero()) {
            return Err(LinkError::ZeroRate { turbine: id });
        }
        let t = d / (bandwidth * r);
        let better = match best {
            None => true,
            Some(b) => t > b.seconds || (t == b.seconds && id < b.bottleneck),
        };
        if better {
            best = Some(TransmissionLatency { seconds: t, bottleneck: id });
        }
    }
    best.ok_or(LinkError::Length { expected: 1, found: 0 })
}

/// Compute delay of one task: `μ D ς^{1/3} P^{-1/3}`.
pub fn task_compute_latency<T: Real>(compute_power: T, intensity: T, coefficient: T, payload_bits: T) -> T {
    intensity * payload_bits * (coefficient / compute_power).cbrt()
}

/// T_j^comp: sum of per-turbine compute delays.
pub fn compute_latency<T: Real>(
    turbine_ids: &[u32],
    compute_power: &[T],
    intensity: T,
    coefficient: T,
    payload_bits: &[T],
) -> Result<T, LinkError> {
    let mut total = T::zero();
    for ((&id, &p), &d) in turbine_ids.iter().zip(compute_power).zip(payload_bits) {
        if !(p > T::zero()) {
            return Err(LinkError::ZeroComputePower { turbine: id });
        }
        total = total + task_compute_latency(p, intensity, coefficient, d);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaypointLatency<T> {
    pub waypoint_id: u32,
    pub connect: T,
    pub uplink: T,
    pub compute: T,
    pub downlink: T,
}

impl<T: Real> WaypointLatency<T> {
    /// Uplink + compute + downlink.
    pub fn service(&self) -> T {
        self.uplink + self.compute + self.downlink
    }

    pub fn total(&self) -> T {
        self.connect + self.service()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyBreakdown<T> {
    pub flight: T,
    pub per_waypoint: Vec<WaypointLatency<T>>,
    pub total: T,
}

pub fn total_latency<T: Real>(flight: T, per_waypoint: Vec<WaypointLatency<T>>) -> LatencyBreakdown<T> {
    let total = flight + per_waypoint.iter().map(WaypointLatency::total).sum::<T>();
    LatencyBreakdown {
        flight,
        per_waypoint,
        total,
    }
}

impl<T: Real> LatencyBreakdown<T> {
    pub fn component_sums(&self) -> WaypointLatency<T> {
        let sum = |f: fn(&WaypointLatency<T>) -> T| self.per_waypoint.iter().map(f).sum::<T>();
        WaypointLatency {
            waypoint_id: 0,
            connect: sum(|w| w.connect),
            uplink: sum(|w| w.uplink),
            compute: sum(|w| w.compute),
            downlink: sum(|w| w.downlink),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("breakdown serializes")
    }

    /// One row per waypoint plus a total row, after header and units rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["row", "waypoint_id", "flight", "connect", "uplink", "compute", "downlink", "total"])
            .unwrap();
        w.write_record(["", "", "s", "s", "s", "s", "s", "s"]).unwrap();
        let f = |x: T| x.as_f64().to_string();
        for wp in &self.per_waypoint {
            w.write_record([
                "waypoint".to_string(),
                wp.waypoint_id.to_string(),
                String::new(),
                f(wp.connect),
                f(wp.uplink),
                f(wp.compute),
                f(wp.downlink),
                f(wp.total()),
            ])
            .unwrap();
        }
        let s = self.component_sums();
        w.write_record([
            "total".to_string(),
            String::new(),
            f(self.flight),
            f(s.connect),
            f(s.uplink),
            f(s.compute),
            f(s.downlink),
            f(self.total),
        ])
        .unwrap();
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(1.0f64), 1.0);
        assert_eq!(rate(0.0f64), 0.0);
        assert!((rate(3.0f64) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let h = vec![CMatrix::from_fn(2, 2, |r, k| c(1.0 + r as f64, k as f64))];
        let w = vec![vec![c(1.0, 0.0), c(0.0, 0.0)]];
        let v = w.clone();
        assert_eq!(sinr_uplink(0, &h, &w, &v, &[0.0], 1.0), 0.0);
    }

    #[test]
    fn orthogonal_users_see_no_interference() {
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let h = vec![CMatrix::outer(&e0, &e0).scaled(2.0), CMatrix::outer(&e1, &e1).scaled(3.0)];
        let w = vec![e0.clone(), e1.clone()];
        let v = w.clone();
        let p = [1.0, 1.0];
        assert!((sinr_uplink(0, &h, &w, &v, &p, 0.5) - 8.0).abs() < 1e-12);
        assert!((sinr_uplink(1, &h, &w, &v, &p, 0.5) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn downlink_sinr_scaling() {
        let g = vec![
            CMatrix::from_fn(2, 3, |r, k| c(r as f64 + 0.3, k as f64 - 1.0)),
            CMatrix::from_fn(2, 3, |r, k| c(k as f64, 0.2 * r as f64 + 0.1)),
        ];
        let w = vec![vec![c(0.5, 0.1), c(0.2, -0.3), c(0.1, 0.0)], vec![c(0.1, 0.4), c(-0.2, 0.3), c(0.6, 0.1)]];
        let v = vec![vec![c(0.7, 0.0), c(0.0, 0.7)], vec![c(0.3, 0.3), c(0.5, -0.1)]];
        let one = sinr_downlink(0, &g, &w[..1], &v[..1], &[1.0], 0.1);
        let two = sinr_downlink(0, &g, &w[..1], &v[..1], &[2.0], 0.1);
        assert!((two / one - 2.0).abs() < 1e-12);
        let a = sinr_downlink(0, &g, &w, &v, &[1.0, 1.0], 0.1);
        let b = sinr_downlink(0, &g, &w, &v, &[2.0, 2.0], 0.1);
        assert!(b > a && b < 2.0 * a);
        let gains = CrossGains::downlink(&g, &w, &v);
        assert!((gains.sinr(0, &[1.0, 1.0], 0.1) - a).abs() < 1e-12 * a);
    }

    #[test]
    fn transmission_latency_examples() {
        let t = transmission_latency(&[1], &[1.0], &[1.0], 1.0).unwrap();
        assert_eq!(t.seconds, 1.0);
        let t = transmission_latency(&[4, 2], &[0.5, 0.2], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!((t.seconds, t.bottleneck), (5.0, 2));
        let t2 = transmission_latency(&[4, 2], &[0.5, 0.2], &[1.0, 1.0], 2.0).unwrap();
        assert_eq!(t2.seconds, 2.5);
        let tie = transmission_latency(&[7, 3], &[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(tie.bottleneck, 3);
        assert_eq!(
            transmission_latency(&[1, 9], &[1.0, 0.0], &[1.0, 1.0], 1.0),
            Err(LinkError::ZeroRate { turbine: 9 })
        );
    }

    #[test]
    fn compute_latency_examples() {
        let t: f64 = compute_latency(&[1], &[0.8], 1.0, 0.8, &[1.0]).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        let a: f64 = compute_latency(&[1], &[0.3], 1.0, 0.8, &[1.0]).unwrap();
        let b: f64 = compute_latency(&[1], &[2.4], 1.0, 0.8, &[1.0]).unwrap();
        assert!((b / a - 0.5).abs() < 1e-14);
        let both: f64 = compute_latency(&[1, 2], &[0.3, 2.4], 1.0, 0.8, &[1.0, 1.0]).unwrap();
        assert!((both - a - b).abs() < 1e-15);
        assert!(compute_latency(&[1], &[0.0], 1.0, 0.8, &[1.0]).is_err());
    }

    #[test]
    fn total_is_sum_of_parts() {
        assert_eq!(total_latency(0.0f64, vec![]).total, 0.0);
        assert_eq!(total_latency(12.5f64, vec![]).total, 12.5);
        let parts = vec![
            WaypointLatency { waypoint_id: 1, connect: 0.01, uplink: 0.2, compute: 3.0, downlink: 0.1 },
            WaypointLatency { waypoint_id: 2, connect: 0.02, uplink: 0.3, compute: 2.0, downlink: 0.4 },
        ];
        let b = total_latency(100.0f64, parts);
        assert!((b.total - 106.03).abs() < 1e-12);
        let csv = b.to_csv();
        assert_eq!(csv.lines().count(), 2 + 2 + 1);
    }

    #[test]
    fn power_allocation_checks() {
        let eq = PowerAllocation::equal_split(5, 10.0f64);
        assert!(eq.downlink.iter().chain(&eq.compute).all(|p| (*p - 1.0).abs() < 1e-15));
        assert!((eq.total() - 10.0).abs() < 1e-12);
        assert!(PowerAllocation::new(vec![6.0], vec![5.0], 10.0).is_err());
        assert!(PowerAllocation::new(vec![0.0], vec![5.0], 10.0).is_err());
    }
}
