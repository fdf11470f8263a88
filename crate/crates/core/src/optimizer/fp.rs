//! Quadratic-transform coefficients, the surrogate SINR, and the first-order
//! Taylor form of the SINR floor, evaluated on the unnormalized link model.

use crate::linalg::{cdot, CMatrix, CVector};
use crate::link::CrossGains;
use crate::scalar::Real;

/// FP coefficient `√P_k |a_kk| / (Σ_{l≠k} |a_kl|² P_l + σ²)` for a gain matrix.
pub fn fp_coefficient<T: Real>(gains: &CrossGains<T>, k: usize, powers: &[T], noise: T) -> T {
    powers[k].sqrt() * gains.get(k, k).norm() / gains.interference(k, powers, noise)
}

/// `2 c √P_k |a_kk| − c² (Σ_{l≠k} |a_kl|² P_l + σ²)`.
pub fn fp_surrogate<T: Real>(gains: &CrossGains<T>, k: usize, coefficient: T, powers: &[T], noise: T) -> T {
    let two = T::of(2.0);
    two * coefficient * powers[k].sqrt() * gains.get(k, k).norm()
        - coefficient * coefficient * gains.interference(k, powers, noise)
}

/// α_k for the uplink.
pub fn alpha_update<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    fp_coefficient(&CrossGains::uplink(channels, fbs, turbine), k, powers, noise)
}

/// β_k for the downlink.
pub fn beta_update<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    fp_coefficient(&CrossGains::downlink(channels, fbs, turbine), k, powers, noise)
}

/// Uplink surrogate SINR at coefficient `alpha`.
pub fn surrogate_sinr<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    alpha: T,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    fp_surrogate(&CrossGains::uplink(channels, fbs, turbine), k, alpha, powers, noise)
}

/// Downlink surrogate SINR at coefficient `beta`.
pub fn surrogate_sinr_downlink<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    beta: T,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
) -> T {
    fp_surrogate(&CrossGains::downlink(channels, fbs, turbine), k, beta, powers, noise)
}

/// SINR floor for turbine k, linearized in its own uplink beam `v_k` around
/// `anchor`:
/// `P_k (|hᴴv₀|² + Re{(2Gv₀)ᴴ(v − v₀)}) ≥ SINR_th (Σ_{l≠k} |w_kᴴH_lv_l|² P_l + σ²)`
/// with `h = H_kᴴ w_k` and `G = h hᴴ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorConstraint<T> {
    pub anchor: CVector<T>,
    /// `H_kᴴ w_k`.
    pub effective: CVector<T>,
    /// `|hᴴ v₀|²`.
    pub anchor_gain: T,
    /// `2 G v₀`, the gradient of `|hᴴv|²` at the anchor.
    pub gradient_at_anchor: CVector<T>,
    pub power: T,
    pub threshold: T,
    /// Right-hand side `SINR_th (interference + σ²)` at the other turbines' beams.
    pub rhs: T,
}

impl<T: Real> TaylorConstraint<T> {
    /// Linearized left-hand side at `v`.
    pub fn linearized_lhs(&self, v: &[num_complex::Complex<T>]) -> T {
        let delta: CVector<T> = v.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        self.power * (self.anchor_gain + cdot(&self.gradient_at_anchor, &delta).re)
    }

    /// Exact left-hand side `P_k |hᴴv|²`.
    pub fn true_lhs(&self, v: &[num_complex::Complex<T>]) -> T {
        self.power * cdot(&self.effective, v).norm_sqr()
    }

    pub fn is_satisfied(&self, v: &[num_complex::Complex<T>]) -> bool {
        self.linearized_lhs(v) >= self.rhs
    }
}

/// Builds turbine k's linearized uplink SINR floor. `turbine[k]` is the
/// expansion point; the other entries of `turbine` set the interference.
pub fn taylor_sinr_constraint<T: Real, C: AsRef<CMatrix<T>>>(
    k: usize,
    channels: &[C],
    fbs: &[CVector<T>],
    turbine: &[CVector<T>],
    powers: &[T],
    noise: T,
    threshold: T,
) -> TaylorConstraint<T> {
    let effective = channels[k].as_ref().adjoint_mul_vec(&fbs[k]);
    let anchor = turbine[k].clone();
    let inner = cdot(&effective, &anchor);
    let two = T::of(2.0);
    let gradient_at_anchor = effective.iter().map(|h| h * inner * two).collect();
    let gains = CrossGains::uplink(channels, fbs, turbine);
    TaylorConstraint {
        anchor,
        effective,
        anchor_gain: inner.norm_sqr(),
        gradient_at_anchor,
        power: powers[k],
        threshold,
        rhs: threshold * gains.interference(k, powers, noise),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn alpha_without_interference() {
        let h = vec![CMatrix::from_fn(1, 1, |_, _| Complex::new(3.0, 4.0))];
        let one = vec![vec![Complex::new(1.0, 0.0)]];
        let a: f64 = alpha_update(0, &h, &one, &one, &[1.0], 0.5);
        assert!((a - 5.0 / 0.5).abs() < 1e-12);
        let zero = vec![vec![Complex::new(0.0, 0.0)]];
        assert_eq!(alpha_update(0, &h, &zero, &one, &[1.0], 0.5), 0.0);
        assert_eq!(surrogate_sinr(0, 0.0, &h, &one, &one, &[1.0], 0.5), 0.0);
    }

    #[test]
    fn taylor_anchor_is_exact() {
        let h = vec![CMatrix::from_fn(2, 2, |r, c| Complex::new(r as f64 + 0.5, c as f64 - 0.2))];
        let w = vec![vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]];
        let v = vec![vec![Complex::new(0.3, 0.4), Complex::new(-0.5, 0.1)]];
        let t = taylor_sinr_constraint(0, &h, &w, &v, &[2.0], 0.1, 0.5);
        assert!((t.linearized_lhs(&v[0]) - t.true_lhs(&v[0])).abs() < 1e-14);
        assert!((t.rhs - 0.05).abs() < 1e-15);
    }
}
