//! Transient beam dynamics: `m·x'' + b·x' + k·x = F(x, drive)` with a
//! perfectly inelastic contact stop at `x = g0`.
//!
//! Integration uses an adaptive Dormand-Prince 5(4) pair. Contact and
//! release instants are localized by bisection to 1e-3 of the step.
//!
//! Near contact the voltage-driven force is evaluated at a separation no
//! smaller than the calibrated contact gap `d_c`, so that a latched beam
//! releases exactly when `|V| ≤ V_PO` and stays released afterwards.

use std::io::{self, Write};

use serde::Serialize;

use super::{capacitance_unchecked, BeamState};
use crate::device::{DeviceParams, MaterialProps, EPS0};
use crate::error::{Error, Result};

/// Mass, damping and integrator controls. None of these are published for
/// the reference devices; [`DynamicsParams::for_device`] provides defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsParams {
    pub effective_mass: f64,
    pub damping: f64,
    pub dt_max: f64,
    pub solver_tol: f64,
}

impl DynamicsParams {
    /// Fundamental-mode effective mass `0.4·ρ·L·W·t` and damping from a
    /// mechanical quality factor, `b = ω0·m/Q`.
    pub fn for_device(
        params: &DeviceParams,
        material: &MaterialProps,
        quality_factor: f64,
        dt_max: f64,
    ) -> Result<Self> {
        material.validate()?;
        if !(quality_factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quality factor must be positive, got {quality_factor}"
            )));
        }
        let g = &params.geometry;
        let mass = 0.4 * material.density * g.beam_length * g.beam_width * g.beam_thickness;
        let omega0 = (params.spring_k / mass).sqrt();
        let dyn_params = DynamicsParams {
            effective_mass: mass,
            damping: omega0 * mass / quality_factor,
            dt_max,
            solver_tol: 1e-9,
        };
        dyn_params.validate()?;
        Ok(dyn_params)
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.effective_mass,
            self.damping,
            self.dt_max,
            self.solver_tol,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive || self.solver_tol > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "dynamics parameters must be positive with solver_tol <= 1e-6: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn natural_frequency(&self, k: f64) -> f64 {
        (k / self.effective_mass).sqrt()
    }
}

/// Time-dependent electrical drive of the beam.
#[derive(Clone, Copy)]
pub enum Drive<'a> {
    Voltage(&'a dyn Fn(f64) -> f64),
    Charge(&'a dyn Fn(f64) -> f64),
}

impl Drive<'_> {
    /// Electrostatic force at displacement `x` and time `t`.
    pub fn force(&self, params: &DeviceParams, x: f64, t: f64) -> f64 {
        let area = params.overlap_area;
        match self {
            Drive::Voltage(v) => {
                let v = v(t);
                let gap = (params.effective_gap - x).max(params.contact_gap);
                EPS0 * area * v * v / (2.0 * gap * gap)
            }
            Drive::Charge(q) => {
                let q = q(t);
                q * q / (2.0 * EPS0 * area)
            }
        }
    }

    /// A latched beam releases once the force at contact no longer exceeds
    /// the spring force of the fully deflected beam.
    fn releases(&self, params: &DeviceParams, t: f64) -> bool {
        let g0 = params.geometry.air_gap;
        self.force(params, g0, t) <= params.spring_k * g0
    }
}

impl std::fmt::Debug for Drive<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Drive::Voltage(_) => f.write_str("Drive::Voltage(..)"),
            Drive::Charge(_) => f.write_str("Drive::Charge(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub c: f64,
    pub latched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TransientEvent {
    Contact(f64),
    Release(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientTrace {
    pub samples: Vec<TransientSample>,
    pub events: Vec<TransientEvent>,
}

impl TransientTrace {
    pub fn pull_in_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            TransientEvent::Contact(t) => Some(*t),
            _ => None,
        })
    }

    pub fn release_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            TransientEvent::Release(t) => Some(*t),
            _ => None,
        })
    }

    pub fn final_state(&self) -> BeamState {
        let s = self.samples.last().expect("trace has an initial sample");
        BeamState {
            x: s.x,
            v: s.v,
            latched: s.latched,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_s,x_m,v_mps,c_F,latched")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.9e},{:.9e},{:.9e},{:.9e},{}",
                s.t, s.x, s.v, s.c, s.latched as u8
            )?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

struct Rhs<'a> {
    params: &'a DeviceParams,
    dynamics: &'a DynamicsParams,
    drive: Drive<'a>,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &State) -> State {
        let k = self.params.spring_k;
        let d = self.dynamics;
        let f = self.drive.force(self.params, y[0], t);
        [y[1], (f - d.damping * y[1] - k * y[0]) / d.effective_mass]
    }

    /// One Dormand-Prince step; returns the 5th-order solution and the
    /// embedded error estimate.
    fn step(&self, t: f64, y: &State, h: f64) -> (State, State) {
        let add = |y: &State, terms: &[(f64, &State)]| -> State {
            let mut out = *y;
            for (c, k) in terms {
                out[0] += h * c * k[0];
                out[1] += h * c * k[1];
            }
            out
        };
        let k1 = self.eval(t, y);
        let k2 = self.eval(t + C2 * h, &add(y, &[(A21, &k1)]));
        let k3 = self.eval(t + C3 * h, &add(y, &[(A31, &k1), (A32, &k2)]));
        let k4 = self.eval(t + C4 * h, &add(y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = self.eval(
            t + C5 * h,
            &add(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = self.eval(
            t + h,
            &add(
                y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y5 = add(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.eval(t + h, &y5);
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        (y5, err)
    }
}

/// Integrates the beam from `initial` over `[0, t_end]`.
pub fn transient(
    params: &DeviceParams,
    dynamics: &DynamicsParams,
    drive: Drive<'_>,
    initial: BeamState,
    t_end: f64,
) -> Result<TransientTrace> {
    dynamics.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let g0 = params.geometry.air_gap;
    if initial.x > g0 || (initial.latched && initial.x != g0) {
        return Err(Error::DisplacementOutOfRange { x: initial.x, g0 });
    }

    let rhs = Rhs {
        params,
        dynamics,
        drive,
    };
    let omega0 = dynamics.natural_frequency(params.spring_k);
    let tol = dynamics.solver_tol;
    let scale = [tol * g0, tol * g0 * omega0];
    let h_min = dynamics.dt_max * 1e-12;

    let sample = |t: f64, y: &State, latched: bool| TransientSample {
        t,
        x: y[0],
        v: y[1],
        c: if latched {
            params.c_on
        } else {
            capacitance_unchecked(&params.geometry, y[0])
        },
        latched,
    };

    let mut t = 0.0;
    let mut y: State = [initial.x, initial.v];
    let mut latched = initial.latched;
    let mut samples = vec![sample(t, &y, latched)];
    let mut events = Vec::new();
    let mut h = dynamics.dt_max.min(0.05 / omega0);

    while t < t_end {
        if latched {
            let h_l = dynamics.dt_max.min(t_end - t);
            if drive.releases(params, t + h_l) {
                let (mut lo, mut hi) = (0.0, h_l);
                while hi - lo > 1e-3 * h_l {
                    let mid = 0.5 * (lo + hi);
                    if drive.releases(params, t + mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                t += hi;
                latched = false;
                y = [g0, 0.0];
                events.push(TransientEvent::Release(t));
            } else {
                t += h_l;
            }
            samples.push(sample(t, &y, latched));
            continue;
        }

        h = h.min(dynamics.dt_max).min(t_end - t);
        let (y1, err) = rhs.step(t, &y, h);
        let err_norm = err
            .iter()
            .zip(y1.iter().zip(scale.iter()))
            .map(|(e, (yi, s))| (e / (s + tol * yi.abs())).abs())
            .fold(0.0_f64, f64::max);
        if !err_norm.is_finite() || err_norm > 1.0 {
            let factor = if err_norm.is_finite() {
                (0.9 * err_norm.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= factor;
            if h < h_min {
                return Err(Error::StepUnderflow { t, dt: h });
            }
            continue;
        }

        if y1[0] >= g0 {
            // contact inside the step
            let (mut lo, mut hi) = (0.0, h);
            let mut y_lo = y;
            while hi - lo > 1e-3 * h {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = rhs.step(t, &y, mid);
                if ym[0] >= g0 {
                    hi = mid;
                } else {
                    lo = mid;
                    y_lo = ym;
                }
            }
            if lo > 0.0 {
                samples.push(sample(t + lo, &y_lo, false));
            }
            t += hi;
            y = [g0, 0.0];
            latched = true;
            events.push(TransientEvent::Contact(t));
            samples.push(sample(t, &y, true));
            continue;
        }

        t += h;
        y = y1;
        samples.push(sample(t, &y, false));
        let grow = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= grow;
    }

    Ok(TransientTrace { samples, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Preset;

    fn setup() -> (DeviceParams, DynamicsParams) {
        let d = Preset::Large.params();
        let dynamics =
            DynamicsParams::for_device(&d, &MaterialProps::default(), 2.0, 1e-8).unwrap();
        (d, dynamics)
    }

    #[test]
    fn zero_drive_stays_at_rest() {
        let (d, dynamics) = setup();
        let zero = |_t: f64| 0.0;
        let trace = transient(&d, &dynamics, Drive::Voltage(&zero), BeamState::REST, 1e-6).unwrap();
        assert!(trace.samples.iter().all(|s| s.x == 0.0 && s.v == 0.0));
        assert!(trace.events.is_empty());
    }

    #[test]
    fn overdrive_latches() {
        let (d, dynamics) = setup();
        let step = |_t: f64| 1.2 * 9.6;
        let trace = transient(&d, &dynamics, Drive::Voltage(&step), BeamState::REST, 2e-6).unwrap();
        let t_pi = trace.pull_in_time().expect("pulls in");
        assert!(t_pi > 0.0 && t_pi < 2e-6);
        assert!(trace.final_state().latched);
        assert!(trace
            .samples
            .iter()
            .filter(|s| s.t >= t_pi)
            .all(|s| s.latched && s.x == d.geometry.air_gap));
    }

    #[test]
    fn underdrive_does_not_latch() {
        let (d, dynamics) = setup();
        let step = |_t: f64| 5.0;
        let trace = transient(&d, &dynamics, Drive::Voltage(&step), BeamState::REST, 2e-6).unwrap();
        assert!(trace.pull_in_time().is_none());
        let x_eq = super::super::static_equilibrium_voltage(&d.geometry, d.spring_k, 5.0)
            .unwrap()
            .x;
        let last = trace.final_state();
        assert!((last.x - x_eq).abs() / x_eq < 1e-3);
    }

    #[test]
    fn release_and_ring_down() {
        let (d, dynamics) = setup();
        let pulse = |t: f64| if t < 1e-6 { 11.52 } else { 0.0 };
        let trace =
            transient(&d, &dynamics, Drive::Voltage(&pulse), BeamState::REST, 4e-6).unwrap();
        assert!(trace.pull_in_time().unwrap() < 1e-6);
        let t_rel = trace.release_time().unwrap();
        assert!((t_rel - 1e-6).abs() <= 1e-11, "release at {t_rel}");
        let last = trace.final_state();
        assert!(!last.latched);
        assert!(last.x.abs() < 1e-3 * d.geometry.air_gap, "x = {}", last.x);
    }

    #[test]
    fn charge_drive_below_clamp_settles() {
        let (d, dynamics) = setup();
        let q = 0.5 * d.clamp_charge();
        let drive = move |_t: f64| q;
        let trace = transient(&d, &dynamics, Drive::Charge(&drive), BeamState::REST, 2e-6).unwrap();
        let x_eq = super::super::static_equilibrium_charge(&d.geometry, d.spring_k, q).x;
        assert!((trace.final_state().x - x_eq).abs() / x_eq < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (d, dynamics) = setup();
        let zero = |_t: f64| 0.0;
        assert!(transient(&d, &dynamics, Drive::Voltage(&zero), BeamState::REST, 0.0).is_err());
        let mut bad = dynamics;
        bad.solver_tol = 1e-3;
        assert!(transient(&d, &bad, Drive::Voltage(&zero), BeamState::REST, 1e-6).is_err());
    }

    #[test]
    fn csv_columns() {
        let (d, dynamics) = setup();
        let zero = |_t: f64| 0.0;
        let trace = transient(&d, &dynamics, Drive::Voltage(&zero), BeamState::REST, 1e-7).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_s,x_m,v_mps,c_F,latched\n"));
    }
}
