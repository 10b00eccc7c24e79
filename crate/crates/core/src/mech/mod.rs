//! One-degree-of-freedom electromechanics of the switch beam.
//!
//! Displacement `x` is measured from rest towards the electrode; contact
//! happens at `x = g0`, where only the dielectric separates the plates.
//! Under voltage control the electrostatic force grows as `1/(g_eff - x)^2`
//! and the static equilibrium folds at `x = g_eff/3` (pull-in). Under charge
//! control the force is `q^2/(2·ε0·A)`, independent of position, so the
//! equilibrium never folds and only the contact stop limits it.

mod transient;

use std::io::{self, Write};

use serde::Serialize;

use crate::device::{pullin_voltage, DeviceGeometry, DeviceParams, EPS0};
use crate::error::{Error, Result};
use crate::roots::brent;

pub use transient::{
    transient, Drive, DynamicsParams, TransientEvent, TransientSample, TransientTrace,
};

/// Instantaneous mechanical state of one beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamState {
    pub x: f64,
    pub v: f64,
    pub latched: bool,
}

impl BeamState {
    pub const REST: BeamState = BeamState {
        x: 0.0,
        v: 0.0,
        latched: false,
    };

    pub fn contact(g0: f64) -> BeamState {
        BeamState {
            x: g0,
            v: 0.0,
            latched: true,
        }
    }
}

/// `C(x) = ε0·A/(g_eff - x)` for `0 ≤ x ≤ g0`.
pub fn capacitance_at(geom: &DeviceGeometry, x: f64) -> Result<f64> {
    if !(0.0..=geom.air_gap).contains(&x) {
        return Err(Error::DisplacementOutOfRange {
            x,
            g0: geom.air_gap,
        });
    }
    Ok(capacitance_unchecked(geom, x))
}

#[inline]
pub(crate) fn capacitance_unchecked(geom: &DeviceGeometry, x: f64) -> f64 {
    let a = geom.electrode_length * geom.beam_width;
    let g_eff = geom.air_gap + geom.dielectric_gap();
    EPS0 * a / (g_eff - x)
}

/// Capacitance of a beam state; a latched beam sits exactly at `c_on`.
pub fn state_capacitance(params: &DeviceParams, state: &BeamState) -> f64 {
    if state.latched {
        params.c_on
    } else {
        capacitance_unchecked(&params.geometry, state.x)
    }
}

/// Electrostatic force at fixed voltage, `ε0·A·V²/(2·(g_eff - x)²)`.
pub fn force_voltage_controlled(geom: &DeviceGeometry, x: f64, v: f64) -> f64 {
    let a = geom.electrode_length * geom.beam_width;
    let gap = geom.air_gap + geom.dielectric_gap() - x;
    EPS0 * a * v * v / (2.0 * gap * gap)
}

/// Electrostatic force at fixed plate charge, `q²/(2·ε0·A)`.
pub fn force_charge_controlled(geom: &DeviceGeometry, q: f64) -> f64 {
    let a = geom.electrode_length * geom.beam_width;
    q * q / (2.0 * EPS0 * a)
}

/// Electrical co-energy `½·C(x)·V²`; the voltage-controlled force is its
/// derivative in `x`.
pub fn coenergy_voltage(geom: &DeviceGeometry, x: f64, v: f64) -> f64 {
    0.5 * capacitance_unchecked(geom, x) * v * v
}

/// Stored energy `q²·(g_eff - x)/(2·ε0·A)`; the charge-controlled force is
/// minus its derivative in `x`.
pub fn stored_energy_charge(geom: &DeviceGeometry, x: f64, q: f64) -> f64 {
    let a = geom.electrode_length * geom.beam_width;
    let g_eff = geom.air_gap + geom.dielectric_gap();
    q * q * (g_eff - x) / (2.0 * EPS0 * a)
}

/// Stable voltage-controlled equilibrium, or the contact state when `|v|`
/// is at or beyond pull-in.
pub fn static_equilibrium_voltage(geom: &DeviceGeometry, k: f64, v: f64) -> Result<BeamState> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "voltage must be finite, got {v}"
        )));
    }
    if v.abs() >= pullin_voltage(geom, k) {
        return Ok(BeamState::contact(geom.air_gap));
    }
    if v == 0.0 {
        return Ok(BeamState::REST);
    }
    let g_eff = geom.air_gap + geom.dielectric_gap();
    // k·x - F(x) is negative at rest and non-negative at g_eff/3 below the fold.
    let x = brent(
        |x| k * x - force_voltage_controlled(geom, x, v),
        0.0,
        g_eff / 3.0,
        g_eff * 1e-15,
        500,
    )?;
    Ok(BeamState {
        x,
        v: 0.0,
        latched: false,
    })
}

/// Charge-controlled equilibrium, clamped at contact.
pub fn static_equilibrium_charge(geom: &DeviceGeometry, k: f64, q: f64) -> BeamState {
    let a = geom.electrode_length * geom.beam_width;
    let x_free = q * q / (2.0 * EPS0 * a * k);
    if x_free >= geom.air_gap {
        BeamState::contact(geom.air_gap)
    } else {
        BeamState {
            x: x_free,
            v: 0.0,
            latched: false,
        }
    }
}

/// Quasi-static update of a voltage-controlled beam that remembers whether
/// it was in contact: a latched beam stays down until `|v| ≤ V_PO`, a free
/// beam snaps down once `|v| ≥ V_PI`.
pub fn settle_voltage(params: &DeviceParams, prior: &BeamState, v: f64) -> Result<BeamState> {
    if prior.latched && v.abs() > params.pull_out {
        return Ok(BeamState::contact(params.geometry.air_gap));
    }
    static_equilibrium_voltage(&params.geometry, params.spring_k, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Up,
    Down,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Up => "up",
            Branch::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvSample {
    pub voltage: f64,
    pub capacitance: f64,
    pub branch: Branch,
    pub x: f64,
    pub latched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCurve {
    pub samples: Vec<CvSample>,
}

impl CvCurve {
    /// Voltage of the first sample that is latched, on the up branch.
    pub fn latch_voltage(&self) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.branch == Branch::Up && s.latched)
            .map(|s| s.voltage)
    }

    /// Voltage of the first down-branch sample that is released after
    /// having been latched.
    pub fn release_voltage(&self) -> Option<f64> {
        let mut was_latched = false;
        for s in &self.samples {
            if s.branch == Branch::Up {
                was_latched = s.latched;
                continue;
            }
            if was_latched && !s.latched {
                return Some(s.voltage);
            }
            was_latched = s.latched;
        }
        None
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "v_V,c_F,branch")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.9e},{:.9e},{}",
                s.voltage,
                s.capacitance,
                s.branch.as_str()
            )?;
        }
        Ok(())
    }
}

/// Quasi-static C-V sweep with latched-state memory. `Both` runs
/// `v_start → v_end` then back to `v_start`.
pub fn cv_sweep(
    params: &DeviceParams,
    v_start: f64,
    v_end: f64,
    n_points: usize,
    direction: SweepDirection,
) -> Result<CvCurve> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "cv sweep needs at least 2 points, got {n_points}"
        )));
    }
    let step = (v_end - v_start) / (n_points - 1) as f64;
    let forward = (0..n_points).map(|i| v_start + step * i as f64);
    let backward = (0..n_points).rev().map(|i| v_start + step * i as f64);

    let legs: Vec<(Branch, Vec<f64>)> = match direction {
        SweepDirection::Up => vec![(Branch::Up, forward.collect())],
        // a lone down sweep walks from v_start to v_end
        SweepDirection::Down => vec![(Branch::Down, forward.collect())],
        SweepDirection::Both => vec![
            (Branch::Up, forward.collect()),
            (Branch::Down, backward.collect()),
        ],
    };

    let mut state = BeamState::REST;
    let mut samples = Vec::with_capacity(2 * n_points);
    for (branch, voltages) in legs {
        for v in voltages {
            state = settle_voltage(params, &state, v)?;
            samples.push(CvSample {
                voltage: v,
                capacitance: state_capacitance(params, &state),
                branch,
                x: state.x,
                latched: state.latched,
            });
        }
    }
    Ok(CvCurve { samples })
}
