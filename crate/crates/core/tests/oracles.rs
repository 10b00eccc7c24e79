//! Independent cross-checks: brute-force scans, finite differences and a
//! fixed-step reference integrator written from scratch here.

use nemsamp_core::device::{pullin_voltage, Preset, EPS0};
use nemsamp_core::mech::{
    coenergy_voltage, force_charge_controlled, force_voltage_controlled, static_equilibrium_charge,
    stored_energy_charge, transient, Drive,
};
use nemsamp_core::{BeamState, DeviceParams, DynamicsParams, MaterialProps};

/// Voltage that holds the beam in equilibrium at `x`.
fn holding_voltage(d: &DeviceParams, x: f64) -> f64 {
    let g = d.effective_gap;
    (2.0 * d.spring_k * x * (g - x) * (g - x) / (EPS0 * d.overlap_area)).sqrt()
}

#[test]
fn fold_scan_matches_pull_in() {
    for preset in Preset::ALL {
        let d = preset.params();
        let n = 1_000_000;
        let (mut best_x, mut best_v) = (0.0, 0.0);
        for i in 0..n {
            let x = d.effective_gap * i as f64 / n as f64;
            let v = holding_voltage(&d, x);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        let v_pi = pullin_voltage(&d.geometry, d.spring_k);
        assert!(
            (best_v - v_pi).abs() / v_pi < 1e-9,
            "{preset}: {best_v} vs {v_pi}"
        );
        assert!((best_x - d.effective_gap / 3.0).abs() / d.effective_gap < 1e-5);
        assert!((v_pi - preset.table().v_pi).abs() / preset.table().v_pi < 1e-9);
    }
}

#[test]
fn forces_are_energy_gradients() {
    let d = Preset::Large.params();
    let g = &d.geometry;
    for &x in &[0.0, 10e-9, 40e-9, 90e-9] {
        let h = 1e-13;
        let v = 7.0;
        let fd = (coenergy_voltage(g, x + h, v) - coenergy_voltage(g, x - h, v)) / (2.0 * h);
        let f = force_voltage_controlled(g, x, v);
        assert!((fd - f).abs() / f < 1e-6, "x={x}: {fd} vs {f}");

        let q = 1e-14;
        let fd =
            -(stored_energy_charge(g, x + h, q) - stored_energy_charge(g, x - h, q)) / (2.0 * h);
        let f = force_charge_controlled(g, q);
        assert!((fd - f).abs() / f < 1e-6, "x={x}: {fd} vs {f}");
    }
}

#[test]
fn charge_equilibrium_balances_spring() {
    let d = Preset::Large.params();
    for &q in &[1e-16, 1e-15, 5e-15, 1.5e-14] {
        let s = static_equilibrium_charge(&d.geometry, d.spring_k, q);
        let expected = q * q / (2.0 * EPS0 * d.overlap_area * d.spring_k);
        assert!((s.x - expected).abs() <= 1e-12 * expected + 1e-24);
        assert!(!s.latched);
    }
    let beyond = static_equilibrium_charge(&d.geometry, d.spring_k, 1.05 * d.clamp_charge());
    assert!(beyond.latched && beyond.x == d.geometry.air_gap);
}

fn dynamics() -> (DeviceParams, DynamicsParams) {
    let d = Preset::Large.params();
    let dy = DynamicsParams::for_device(&d, &MaterialProps::default(), 2.0, 1e-8).unwrap();
    (d, dy)
}

/// Classical RK4 on the same equation of motion, fixed step, contact found
/// by linear interpolation of the crossing step.
fn rk4_pull_in_time(
    d: &DeviceParams,
    dy: &DynamicsParams,
    v: f64,
    h: f64,
    t_end: f64,
) -> Option<f64> {
    let accel = |x: f64, vel: f64| {
        let gap = (d.effective_gap - x).max(d.contact_gap);
        let fe = EPS0 * d.overlap_area * v * v / (2.0 * gap * gap);
        (fe - d.spring_k * x - dy.damping * vel) / dy.effective_mass
    };
    let g0 = d.geometry.air_gap;
    let (mut t, mut x, mut u) = (0.0, 0.0, 0.0);
    while t < t_end {
        let (k1x, k1v) = (u, accel(x, u));
        let (k2x, k2v) = (
            u + 0.5 * h * k1v,
            accel(x + 0.5 * h * k1x, u + 0.5 * h * k1v),
        );
        let (k3x, k3v) = (
            u + 0.5 * h * k2v,
            accel(x + 0.5 * h * k2x, u + 0.5 * h * k2v),
        );
        let (k4x, k4v) = (u + h * k3v, accel(x + h * k3x, u + h * k3v));
        let nx = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        let nu = u + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if nx >= g0 {
            return Some(t + h * (g0 - x) / (nx - x));
        }
        t += h;
        x = nx;
        u = nu;
    }
    None
}

#[test]
fn transient_matches_reference_integrator() {
    let (d, dy) = dynamics();
    for overdrive in [1.1, 1.3, 1.6] {
        let v = overdrive * d.pull_in;
        let drive = move |_t: f64| v;
        let trace = transient(&d, &dy, Drive::Voltage(&drive), BeamState::REST, 5e-6).unwrap();
        let ours = trace.pull_in_time().expect("pulls in");
        let reference = rk4_pull_in_time(&d, &dy, v, 1e-10, 5e-6).expect("reference pulls in");
        assert!(
            (ours - reference).abs() / reference < 0.01,
            "overdrive {overdrive}: {ours:e} vs {reference:e}"
        );
    }
}

#[test]
fn pull_in_time_decreases_with_overdrive() {
    let (d, dy) = dynamics();
    let mut last = f64::INFINITY;
    for overdrive in [1.05, 1.1, 1.2, 1.4, 1.8, 2.5] {
        let v = overdrive * d.pull_in;
        let drive = move |_t: f64| v;
        let t = transient(&d, &dy, Drive::Voltage(&drive), BeamState::REST, 1e-5)
            .unwrap()
            .pull_in_time()
            .expect("finite pull-in time under overdrive");
        assert!(t.is_finite() && t > 0.0);
        assert!(t < last, "overdrive {overdrive}: {t:e} !< {last:e}");
        last = t;
    }
}

#[test]
fn free_ring_down_loses_energy() {
    let (d, dy) = dynamics();
    let zero = |_t: f64| 0.0;
    let start = BeamState {
        x: 0.5 * d.geometry.air_gap,
        v: 0.0,
        latched: false,
    };
    let trace = transient(&d, &dy, Drive::Voltage(&zero), start, 2e-6).unwrap();
    let energy = |x: f64, v: f64| 0.5 * dy.effective_mass * v * v + 0.5 * d.spring_k * x * x;
    let e0 = energy(start.x, 0.0);
    let mut prev = e0;
    for s in &trace.samples {
        let e = energy(s.x, s.v);
        assert!(
            e <= prev * (1.0 + 1e-6) + 1e-30,
            "energy rose at t={:e}",
            s.t
        );
        prev = e;
    }
    assert!(prev < 0.01 * e0);
}
