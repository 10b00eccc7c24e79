//! Closed-form characterization of a clamped-clamped NEMS capacitive switch.
//!
//! The beam and the bottom electrode form a parallel-plate capacitor whose
//! gap is a stack of air (`g0`) and a thin dielectric (`td`, `eps_d`). The
//! stack reduces to an equivalent all-air gap `g_eff = g0 + td/eps_d`. When
//! the beam is released the capacitance is `C_off = ε0·A/g_eff`; when it is
//! pulled into contact only the dielectric remains and `C_on = ε0·eps_d·A/td`.
//!
//! The spring constant is calibrated from a measured pull-in voltage, and the
//! release behaviour from a measured pull-out voltage through an effective
//! contact separation `d_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.8541878128e-12;

/// Geometry and dielectric of one capacitive switch, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub beam_length: f64,
    pub beam_width: f64,
    pub beam_thickness: f64,
    pub electrode_length: f64,
    pub air_gap: f64,
    pub dielectric_thickness: f64,
    pub dielectric_constant: f64,
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("beam_length", self.beam_length),
            ("beam_width", self.beam_width),
            ("beam_thickness", self.beam_thickness),
            ("electrode_length", self.electrode_length),
            ("air_gap", self.air_gap),
            ("dielectric_thickness", self.dielectric_thickness),
        ];
        for (name, value) in lengths {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be strictly positive, got {value:e}"
                )));
            }
        }
        if !(self.dielectric_constant.is_finite() && self.dielectric_constant > 1.0) {
            return Err(Error::InvalidGeometry(format!(
                "dielectric_constant must exceed 1, got {}",
                self.dielectric_constant
            )));
        }
        if self.electrode_length > self.beam_length {
            return Err(Error::InvalidGeometry(format!(
                "electrode_length {:e} exceeds beam_length {:e}",
                self.electrode_length, self.beam_length
            )));
        }
        Ok(())
    }

    /// Equivalent air thickness of the dielectric layer, `td/eps_d`.
    pub fn dielectric_gap(&self) -> f64 {
        self.dielectric_thickness / self.dielectric_constant
    }
}

/// Material constants, only needed for the beam-formula spring constant and
/// the transient mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    pub youngs_modulus: f64,
    pub density: f64,
}

impl Default for MaterialProps {
    /// Polysilicon-like values. These are assumptions, not measured data.
    fn default() -> Self {
        MaterialProps {
            youngs_modulus: 160e9,
            density: 2330.0,
        }
    }
}

impl MaterialProps {
    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.density > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "E = {:e} Pa and rho = {:e} kg/m^3 must be strictly positive",
                self.youngs_modulus, self.density
            )));
        }
        Ok(())
    }
}

/// Derived electrical and mechanical constants of a calibrated device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub geometry: DeviceGeometry,
    pub overlap_area: f64,
    pub effective_gap: f64,
    pub spring_k: f64,
    pub pull_in: f64,
    pub pull_out: f64,
    pub contact_gap: f64,
    pub c_on: f64,
    pub c_off: f64,
    pub max_gain: f64,
}

impl DeviceParams {
    /// Calibrates spring constant and contact gap from measured pull-in and
    /// pull-out voltages.
    pub fn calibrate(geom: DeviceGeometry, v_pi: f64, v_po: f64) -> Result<Self> {
        geom.validate()?;
        if !(v_pi.is_finite() && v_pi > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "pull-in voltage must be positive, got {v_pi}"
            )));
        }
        if !(v_po > 0.0 && v_po < v_pi) {
            return Err(Error::InvalidCalibration(format!(
                "pull-out voltage must satisfy 0 < V_PO < V_PI, got {v_po} / {v_pi}"
            )));
        }
        let (area, effective_gap) = derive_geometry_constants(&geom)?;
        let spring_k = spring_from_pullin(&geom, v_pi);
        let contact_gap = contact_gap_from_pullout(&geom, spring_k, v_po)?;
        let c_on = c_on(&geom);
        let c_off = c_off(&geom);
        Ok(DeviceParams {
            geometry: geom,
            overlap_area: area,
            effective_gap,
            spring_k,
            pull_in: v_pi,
            pull_out: v_po,
            contact_gap,
            c_on,
            c_off,
            max_gain: c_on / c_off,
        })
    }

    /// Clamp charge of the charge-controlled equilibrium: the plate charge
    /// at which the electrostatic force equals the spring force at contact.
    pub fn clamp_charge(&self) -> f64 {
        (2.0 * EPS0 * self.overlap_area * self.spring_k * self.geometry.air_gap).sqrt()
    }
}

/// Overlap area `A = Le·W` and effective gap `g_eff = g0 + td/eps_d`.
pub fn derive_geometry_constants(geom: &DeviceGeometry) -> Result<(f64, f64)> {
    geom.validate()?;
    Ok((overlap_area(geom), effective_gap(geom)))
}

#[inline]
pub(crate) fn overlap_area(geom: &DeviceGeometry) -> f64 {
    geom.electrode_length * geom.beam_width
}

#[inline]
pub(crate) fn effective_gap(geom: &DeviceGeometry) -> f64 {
    geom.air_gap + geom.dielectric_gap()
}

/// Capacitance with the beam in contact (dielectric-only gap).
pub fn c_on(geom: &DeviceGeometry) -> f64 {
    EPS0 * geom.dielectric_constant * overlap_area(geom) / geom.dielectric_thickness
}

/// Capacitance with the beam at rest.
pub fn c_off(geom: &DeviceGeometry) -> f64 {
    EPS0 * overlap_area(geom) / effective_gap(geom)
}

pub fn max_gain(geom: &DeviceGeometry) -> f64 {
    c_on(geom) / c_off(geom)
}

/// Spring constant that places the voltage-controlled fold at `v_pi`.
pub fn spring_from_pullin(geom: &DeviceGeometry, v_pi: f64) -> f64 {
    let g = effective_gap(geom);
    27.0 * EPS0 * overlap_area(geom) * v_pi * v_pi / (8.0 * g * g * g)
}

pub fn pullin_voltage(geom: &DeviceGeometry, k: f64) -> f64 {
    let g = effective_gap(geom);
    (8.0 * k * g * g * g / (27.0 * EPS0 * overlap_area(geom))).sqrt()
}

/// Fixed-fixed beam stiffness under a uniform load, `32·E·W·t³/L³`.
pub fn spring_from_beam(geom: &DeviceGeometry, material: &MaterialProps) -> f64 {
    let t = geom.beam_thickness;
    let l = geom.beam_length;
    32.0 * material.youngs_modulus * geom.beam_width * t * t * t / (l * l * l)
}

/// Contact separation at which the electrostatic force at `v_po` balances
/// the spring force of a fully deflected beam, `k·g0`.
pub fn contact_gap_from_pullout(geom: &DeviceGeometry, k: f64, v_po: f64) -> Result<f64> {
    let d_c = v_po * (EPS0 * overlap_area(geom) / (2.0 * k * geom.air_gap)).sqrt();
    let floor = geom.dielectric_gap();
    if !(d_c >= floor) {
        return Err(Error::CalibrationInfeasible {
            contact_gap: d_c,
            dielectric_gap: floor,
        });
    }
    Ok(d_c)
}

/// Inverse of [`contact_gap_from_pullout`].
pub fn pullout_voltage(geom: &DeviceGeometry, k: f64, d_c: f64) -> f64 {
    d_c * (2.0 * k * geom.air_gap / (EPS0 * overlap_area(geom))).sqrt()
}

/// Published reference values for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableValues {
    pub v_pi: f64,
    pub v_po: f64,
    pub c_on_ff: f64,
    pub c_off_ff: f64,
    pub gain: f64,
}

/// The three device variants of the reference design table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// High-voltage, high-gain device used for the amplifier experiments.
    Large,
    LvHighGain,
    LvLowGain,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Large, Preset::LvHighGain, Preset::LvLowGain];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Large => "large",
            Preset::LvHighGain => "lv-high-gain",
            Preset::LvLowGain => "lv-low-gain",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn geometry(self) -> DeviceGeometry {
        match self {
            Preset::Large => DeviceGeometry {
                beam_length: 8.5e-6,
                beam_width: 1.6e-6,
                beam_thickness: 100e-9,
                electrode_length: 7.9e-6,
                air_gap: 135e-9,
                dielectric_thickness: 27e-9,
                dielectric_constant: 7.6,
            },
            Preset::LvHighGain | Preset::LvLowGain => DeviceGeometry {
                beam_length: 5e-6,
                beam_width: 1e-6,
                beam_thickness: 75e-9,
                electrode_length: 4e-6,
                air_gap: 50e-9,
                dielectric_thickness: if self == Preset::LvHighGain {
                    10e-9
                } else {
                    20e-9
                },
                dielectric_constant: 7.6,
            },
        }
    }

    pub fn table(self) -> TableValues {
        match self {
            Preset::Large => TableValues {
                v_pi: 9.6,
                v_po: 6.2,
                c_on_ff: 31.5,
                c_off_ff: 0.8,
                gain: 39.0,
            },
            Preset::LvHighGain => TableValues {
                v_pi: 3.8,
                v_po: 2.4,
                c_on_ff: 26.9,
                c_off_ff: 0.7,
                gain: 39.0,
            },
            Preset::LvLowGain => TableValues {
                v_pi: 4.0,
                v_po: 2.7,
                c_on_ff: 13.5,
                c_off_ff: 0.7,
                gain: 20.0,
            },
        }
    }

    pub fn params(self) -> DeviceParams {
        let t = self.table();
        DeviceParams::calibrate(self.geometry(), t.v_pi, t.v_po)
            .expect("preset calibration is feasible")
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One computed-vs-published comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableCheck {
    pub quantity: &'static str,
    pub computed: f64,
    pub published: f64,
    /// Relative error of the raw computed value.
    pub raw_rel_err: f64,
    /// Relative error after rounding the computed value to the published precision.
    pub rounded_rel_err: f64,
    pub pass: bool,
}

/// Rounds `value` to `decimals` places, the way the published table does.
pub fn round_to(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale).round() / scale
}

/// Compares derived capacitances and gain against the published table. The
/// table prints capacitances with one decimal (fF) and gain as an integer,
/// so the computed value is rounded to the same precision before the
/// relative tolerance is applied.
pub fn compare_with_table(preset: Preset, tolerance: f64) -> Vec<TableCheck> {
    let geom = preset.geometry();
    let table = preset.table();
    let rows = [
        ("c_on_fF", c_on(&geom) * 1e15, table.c_on_ff, 1),
        ("c_off_fF", c_off(&geom) * 1e15, table.c_off_ff, 1),
        ("max_gain", max_gain(&geom), table.gain, 0),
    ];
    rows.into_iter()
        .map(|(quantity, computed, published, decimals)| {
            let raw_rel_err = (computed - published).abs() / published;
            let rounded_rel_err = (round_to(computed, decimals) - published).abs() / published;
            TableCheck {
                quantity,
                computed,
                published,
                raw_rel_err,
                rounded_rel_err,
                pass: rounded_rel_err <= tolerance,
            }
        })
        .collect()
}
