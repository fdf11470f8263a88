//! Link budget, URA steering vectors and Rician channel matrices.

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::ChannelError;
use crate::linalg::{CMatrix, CVector};
use crate::rng::{link_stream, substream_rng, Substream};
use crate::scalar::Real;
use crate::scenario::{ArrayGeometry, Position3D, ScenarioConfig, Turbine, Waypoint};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavelength(frequency: f64) -> f64 {
    SPEED_OF_LIGHT / frequency
}

/// Direction from a transmitter toward a receiver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngleSet<T> {
    /// φ in (−π, π].
    pub azimuth: T,
    /// θ in [−π/2, π/2].
    pub elevation: T,
}

pub fn angles_between<T: Real>(tx: &Position3D, rx: &Position3D) -> Result<AngleSet<T>, ChannelError> {
    let (dx, dy, dz) = (rx.x - tx.x, rx.y - tx.y, rx.z - tx.z);
    if dx == 0.0 && dy == 0.0 && dz == 0.0 {
        return Err(ChannelError::CoincidentPositions);
    }
    let mut azimuth = dy.atan2(dx);
    if azimuth == -std::f64::consts::PI {
        azimuth = std::f64::consts::PI;
    }
    Ok(AngleSet {
        azimuth: T::of(azimuth),
        elevation: T::of(dz.atan2(dx.hypot(dy))),
    })
}

/// Per-element phase terms of a URA. Element `(mx, my)` (zero-based) sits
/// at flat index `mx * ny + my`.
pub fn ura_zeta<T: Real>(geometry: &ArrayGeometry, angles: &AngleSet<T>) -> Vec<T> {
    let c = angles.elevation.cos();
    let (u, v) = (c * angles.azimuth.cos(), c * angles.azimuth.sin());
    let mut out = Vec::with_capacity(geometry.elements());
    for mx in 0..geometry.nx {
        for my in 0..geometry.ny {
            out.push(T::of_usize(mx) * u + T::of_usize(my) * v);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteeringVector<T> {
    pub entries: CVector<T>,
    pub geometry: ArrayGeometry,
}

pub fn steering<T: Real>(geometry: &ArrayGeometry, zeta: &[T]) -> Result<SteeringVector<T>, ChannelError> {
    if zeta.len() != geometry.elements() {
        return Err(ChannelError::ZetaLength {
            expected: geometry.elements(),
            found: zeta.len(),
        });
    }
    let k = T::TAU() * T::of(geometry.spacing_over_wavelength);
    Ok(SteeringVector {
        entries: zeta.iter().map(|z| Complex::from_polar(T::one(), k * *z)).collect(),
        geometry: *geometry,
    })
}

/// Array response toward `rx` as seen from an array at `tx`.
pub fn steering_toward<T: Real>(
    geometry: &ArrayGeometry,
    tx: &Position3D,
    rx: &Position3D,
) -> Result<SteeringVector<T>, ChannelError> {
    let angles = angles_between::<T>(tx, rx)?;
    steering(geometry, &ura_zeta(geometry, &angles))
}

/// Free-space path loss `20 log10(4π d f / c)` in dB.
pub fn free_space_path_loss_db<T: Real>(distance: T, frequency: T) -> Result<T, ChannelError> {
    if !(distance > T::zero() && frequency > T::zero()) {
        return Err(ChannelError::NonPositiveInput {
            distance: distance.as_f64(),
            frequency: frequency.as_f64(),
        });
    }
    let arg = T::of(4.0) * T::PI() * distance * frequency / T::of(SPEED_OF_LIGHT);
    Ok(T::of(20.0) * arg.log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathLoss<T> {
    pub fspl_db: T,
    pub rain_db: T,
    pub gas_db: T,
    pub rx_gain_db: T,
    /// Field-amplitude factor applied to the channel matrix.
    pub total_amplitude: T,
}

impl<T: Real> PathLoss<T> {
    pub fn new(fspl_db: T, rain_db: T, gas_db: T, rx_gain_db: T) -> Self {
        let total_db = fspl_db + rain_db + gas_db - rx_gain_db;
        Self {
            fspl_db,
            rain_db,
            gas_db,
            rx_gain_db,
            total_amplitude: T::of(10.0).powf(-total_db / T::of(20.0)),
        }
    }

    pub fn total_db(&self) -> T {
        self.fspl_db + self.rain_db + self.gas_db - self.rx_gain_db
    }

    /// Link budget between two points under the scenario's attenuation terms.
    pub fn between(config: &ScenarioConfig, a: &Position3D, b: &Position3D) -> Result<Self, ChannelError> {
        let fspl = free_space_path_loss_db(T::of(a.distance(b)), T::of(config.carrier_frequency))?;
        Ok(Self::new(
            fspl,
            T::of(config.rain_attenuation_db),
            T::of(config.gas_attenuation_db),
            T::of(config.rx_gain_db),
        ))
    }
}

/// One direction of a turbine-FBS link: `H_k` (N×M, FBS rows) for uplink,
/// `G_k` (M×N, turbine rows) for downlink.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelMatrix<T> {
    pub entries: CMatrix<T>,
    pub path_loss: PathLoss<T>,
    pub rician_factor: T,
    pub seed: u64,
    /// Substream id of the NLoS draw.
    pub stream: u64,
    /// LoS component is `path_loss · √(ε/(ε+1)) · row_steering · col_steeringᴴ`.
    pub row_steering: CVector<T>,
    pub col_steering: CVector<T>,
}

impl<T> AsRef<CMatrix<T>> for ChannelMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        &self.entries
    }
}

/// How the downlink NLoS term relates to the uplink one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlosDraw {
    /// Independent standard complex Gaussian draws per direction.
    Independent,
    /// `Ḡ = H̄ᴴ`, for reciprocity checks.
    Reciprocal,
}

fn cn01<T: Real>(rng: &mut impl rand::Rng, rows: usize, cols: usize) -> CMatrix<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::of(re * s), T::of(im * s))
    })
}

fn rician<T: Real>(
    amplitude: T,
    epsilon: T,
    rows: &[Complex<T>],
    cols: &[Complex<T>],
    nlos: &CMatrix<T>,
) -> CMatrix<T> {
    let los_w = (epsilon / (epsilon + T::one())).sqrt();
    let nlos_w = (T::one() / (epsilon + T::one())).sqrt();
    CMatrix::outer(rows, cols)
        .scaled(los_w)
        .add_scaled(nlos, nlos_w)
        .scaled(amplitude)
}

/// Uplink and downlink channels between `turbine` and the FBS at `waypoint`.
pub fn build_channel_pair<T: Real>(
    turbine: &Turbine,
    waypoint: &Waypoint,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>), ChannelError> {
    build_channel_pair_with(turbine, waypoint, config, seed, NlosDraw::Independent)
}

pub fn build_channel_pair_with<T: Real>(
    turbine: &Turbine,
    waypoint: &Waypoint,
    config: &ScenarioConfig,
    seed: u64,
    draw: NlosDraw,
) -> Result<(ChannelMatrix<T>, ChannelMatrix<T>), ChannelError> {
    let a_k = steering_toward::<T>(&turbine.panel, &turbine.position, &waypoint.position)?.entries;
    let a_bs = steering_toward::<T>(&config.fbs_panel, &waypoint.position, &turbine.position)?.entries;
    let path_loss = PathLoss::<T>::between(config, &turbine.position, &waypoint.position)?;
    let eps = T::of(config.rician_factor);
    let (n, m) = (a_bs.len(), a_k.len());

    let ul_stream = link_stream(turbine.id, waypoint.id, false);
    let dl_stream = link_stream(turbine.id, waypoint.id, true);
    let h_bar = cn01::<T>(&mut substream_rng(seed, Substream::Channel, ul_stream), n, m);
    let g_bar = match draw {
        NlosDraw::Independent => cn01::<T>(&mut substream_rng(seed, Substream::Channel, dl_stream), m, n),
        NlosDraw::Reciprocal => h_bar.adjoint(),
    };

    let amp = path_loss.total_amplitude;
    let uplink = ChannelMatrix {
        entries: rician(amp, eps, &a_bs, &a_k, &h_bar),
        path_loss,
        rician_factor: eps,
        seed,
        stream: ul_stream,
        row_steering: a_bs.clone(),
        col_steering: a_k.clone(),
    };
    let downlink = ChannelMatrix {
        entries: rician(amp, eps, &a_k, &a_bs, &g_bar),
        path_loss,
        rician_factor: eps,
        seed,
        stream: dl_stream,
        row_steering: a_k,
        col_steering: a_bs,
    };
    Ok((uplink, downlink))
}

/// All channels at one waypoint, indexed like `turbine_ids`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaypointChannels<T> {
    pub waypoint_id: u32,
    pub turbine_ids: Vec<u32>,
    pub uplink: Vec<ChannelMatrix<T>>,
    pub downlink: Vec<ChannelMatrix<T>>,
}

impl<T: Real> WaypointChannels<T> {
    pub fn build(config: &ScenarioConfig, waypoint: &Waypoint, seed: u64) -> Result<Self, ChannelError> {
        let mut uplink = Vec::new();
        let mut downlink = Vec::new();
        let turbines = config.assigned(waypoint);
        for t in &turbines {
            let (h, g) = build_channel_pair(t, waypoint, config, seed)?;
            uplink.push(h);
            downlink.push(g);
        }
        Ok(Self {
            waypoint_id: waypoint.id,
            turbine_ids: turbines.iter().map(|t| t.id).collect(),
            uplink,
            downlink,
        })
    }

    pub fn len(&self) -> usize {
        self.turbine_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turbine_ids.is_empty()
    }

    pub fn uplink_matrices(&self) -> Vec<&CMatrix<T>> {
        self.uplink.iter().map(|c| &c.entries).collect()
    }

    pub fn downlink_matrices(&self) -> Vec<&CMatrix<T>> {
        self.downlink.iter().map(|c| &c.entries).collect()
    }

    /// Self-describing JSON dump: dimensions, seeds, path-loss breakdown and
    /// entries as `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channels serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::desk_scenario;

    #[test]
    fn angles_examples() {
        let up = angles_between::<f64>(&Position3D::new(0.0, 0.0, 0.0), &Position3D::new(0.0, 0.0, 1000.0)).unwrap();
        assert!((up.elevation - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let east = angles_between::<f64>(&Position3D::new(0.0, 0.0, 190.0), &Position3D::new(1000.0, 0.0, 190.0)).unwrap();
        assert_eq!((east.azimuth, east.elevation), (0.0, 0.0));
        let slant =
            angles_between::<f64>(&Position3D::new(0.0, 0.0, 190.0), &Position3D::new(1860.0, 0.0, 1000.0)).unwrap();
        assert!((slant.elevation - 0.4107).abs() < 1e-4);
        let west = angles_between::<f64>(&Position3D::new(0.0, 0.0, 0.0), &Position3D::new(-1.0, -0.0, 0.0)).unwrap();
        assert_eq!(west.azimuth, std::f64::consts::PI);
        assert_eq!(
            angles_between::<f64>(&Position3D::new(1.0, 2.0, 3.0), &Position3D::new(1.0, 2.0, 3.0)),
            Err(ChannelError::CoincidentPositions)
        );
    }

    #[test]
    fn zeta_examples() {
        let g = ArrayGeometry::new(2, 2);
        let z = ura_zeta(&g, &AngleSet { azimuth: 0.0, elevation: 0.0 });
        assert_eq!(z, vec![0.0, 0.0, 1.0, 1.0]);
        let z = ura_zeta(&ArrayGeometry::new(4, 4), &AngleSet { azimuth: 0.3, elevation: std::f64::consts::FRAC_PI_2 });
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(ura_zeta(&ArrayGeometry::new(1, 1), &AngleSet { azimuth: 1.0, elevation: 0.2 }), vec![0.0]);
    }

    #[test]
    fn steering_examples() {
        let g = ArrayGeometry::new(1, 1);
        let s = steering(&g, &[1.0f64]).unwrap();
        assert!((s.entries[0] - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        let s = steering(&ArrayGeometry::new(2, 2), &[0.0f64; 4]).unwrap();
        assert!(s.entries.iter().all(|e| *e == Complex::new(1.0, 0.0)));
        assert!(steering(&g, &[0.0f64, 1.0]).is_err());
    }

    #[test]
    fn fspl_examples() {
        let f = 3.85e9;
        let unit = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f);
        assert!(free_space_path_loss_db(unit, f).unwrap().abs() < 1e-12);
        let a = free_space_path_loss_db(1000.0, f).unwrap();
        let b = free_space_path_loss_db(2000.0, f).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(free_space_path_loss_db(0.0, f).is_err());
        assert!(free_space_path_loss_db(1.0, -1.0).is_err());
    }

    #[test]
    fn path_loss_amplitude() {
        let p = PathLoss::new(100.0f64, 0.026, 0.02, 1.761);
        assert!((p.total_amplitude - 10f64.powf(-(100.0 + 0.026 + 0.02 - 1.761) / 20.0)).abs() < 1e-20);
    }

    #[test]
    fn channel_pair_is_deterministic_with_expected_shapes() {
        let c = desk_scenario(3);
        let w = &c.waypoints[0];
        let t = c.turbine(w.assigned_turbines[0]).unwrap();
        let (h, g) = build_channel_pair::<f64>(t, w, &c, 11).unwrap();
        let (h2, _) = build_channel_pair::<f64>(t, w, &c, 11).unwrap();
        let (h3, _) = build_channel_pair::<f64>(t, w, &c, 12).unwrap();
        assert_eq!((h.entries.rows(), h.entries.cols()), (16, 9));
        assert_eq!((g.entries.rows(), g.entries.cols()), (9, 16));
        assert_eq!(h, h2);
        assert_ne!(h.entries, h3.entries);
        assert!(h.entries.is_finite() && g.entries.is_finite());
    }

    #[test]
    fn f32_channels_track_f64() {
        let c = desk_scenario(3);
        let w = &c.waypoints[0];
        let t = c.turbine(w.assigned_turbines[0]).unwrap();
        let (h64, _) = build_channel_pair::<f64>(t, w, &c, 5).unwrap();
        let (h32, _) = build_channel_pair::<f32>(t, w, &c, 5).unwrap();
        let scale = h64.path_loss.total_amplitude;
        for (a, b) in h64.entries.as_slice().iter().zip(h32.entries.as_slice()) {
            assert!(((a.re - b.re as f64) / scale).abs() < 1e-4);
            assert!(((a.im - b.im as f64) / scale).abs() < 1e-4);
        }
    }
}
