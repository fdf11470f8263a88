//! Connection-establishment time for the 4-step RAP and the 2-step EDT.
//!
//! Each message costs airtime plus one-way propagation plus processing at
//! the receiving node, and devices at a waypoint are admitted one at a time.

use serde::Serialize;

use crate::channel::SPEED_OF_LIGHT;
use crate::scalar::Real;
use crate::scenario::{AccessProcedure, ScenarioConfig, Waypoint};

impl AccessProcedure {
    pub fn message_count(self) -> usize {
        match self {
            AccessProcedure::FourStepRap => 4,
            AccessProcedure::TwoStepEdt => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AccessTiming<T> {
    pub procedure: AccessProcedure,
    pub per_message_airtime: T,
    pub propagation_delay: T,
    pub processing_delay_per_node: T,
}

impl<T: Real> AccessTiming<T> {
    pub fn per_device(&self) -> T {
        T::of_usize(self.procedure.message_count())
            * (self.per_message_airtime + self.propagation_delay + self.processing_delay_per_node)
    }
}

/// Total admission time for `n_devices` identical devices.
pub fn connection_time<T: Real>(timing: &AccessTiming<T>, n_devices: usize) -> T {
    assert!(n_devices >= 1, "connection_time needs at least one device");
    T::of_usize(n_devices) * timing.per_device()
}

/// T_j^connect: sequential admission of every turbine assigned to
/// `waypoint`, each with its own slant-range propagation delay.
pub fn waypoint_connection_time<T: Real>(
    config: &ScenarioConfig,
    waypoint: &Waypoint,
    procedure: AccessProcedure,
) -> T {
    config
        .assigned(waypoint)
        .iter()
        .map(|t| {
            AccessTiming {
                procedure,
                per_message_airtime: T::of(config.access_airtime),
                propagation_delay: T::of(t.position.distance(&waypoint.position) / SPEED_OF_LIGHT),
                processing_delay_per_node: T::of(config.access_processing_delay),
            }
            .per_device()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timing(procedure: AccessProcedure) -> AccessTiming<f64> {
        AccessTiming {
            procedure,
            per_message_airtime: 1e-3,
            propagation_delay: 7e-6,
            processing_delay_per_node: 0.5e-3,
        }
    }

    #[test]
    fn edt_single_device() {
        let t = connection_time(&timing(AccessProcedure::TwoStepEdt), 1);
        assert!((t - 3.014e-3).abs() < 1e-15);
    }

    #[test]
    fn edt_is_half_of_rap() {
        let edt = connection_time(&timing(AccessProcedure::TwoStepEdt), 3);
        let rap = connection_time(&timing(AccessProcedure::FourStepRap), 3);
        assert_eq!(2.0 * edt, rap);
    }

    #[test]
    fn linear_in_devices() {
        let one = connection_time(&timing(AccessProcedure::FourStepRap), 1);
        let ten = connection_time(&timing(AccessProcedure::FourStepRap), 10);
        assert!((ten - 10.0 * one).abs() < 1e-15);
    }
}
