use criterion::{black_box, criterion_group, criterion_main, Criterion};

use nemsamp_core::amp::{build_amp, AmpConfig};
use nemsamp_core::mech::{cv_sweep, transient, Drive, SweepDirection};
use nemsamp_core::{BeamState, DeviceParams, DynamicsParams, MaterialProps, Preset};

fn device(c: &mut Criterion) {
    let geom = Preset::Large.geometry();
    c.bench_function("calibrate", |b| {
        b.iter(|| DeviceParams::calibrate(black_box(geom), 9.6, 6.2).unwrap())
    });
    let d = Preset::Large.params();
    c.bench_function("cv_sweep_1001", |b| {
        b.iter(|| cv_sweep(&d, 0.0, 12.0, 1001, SweepDirection::Both).unwrap())
    });
    let dy = DynamicsParams::for_device(&d, &MaterialProps::default(), 2.0, 1e-8).unwrap();
    let step = |_t: f64| 11.52;
    c.bench_function("transient_step_5us", |b| {
        b.iter(|| transient(&d, &dy, Drive::Voltage(&step), BeamState::REST, 5e-6).unwrap())
    });
}

fn amplifier(c: &mut Criterion) {
    let amp = build_amp(AmpConfig::basic("large", Preset::Large.params())).unwrap();
    c.bench_function("run_dc_10_periods", |b| {
        b.iter(|| amp.run_dc(black_box(10e-3), 10).unwrap())
    });
    c.bench_function("run_sine_100_periods", |b| {
        b.iter(|| amp.run_sine(10e-3, 10e3, 100).unwrap())
    });
    let amplitudes: Vec<f64> = (0..50)
        .map(|i| 1e-3 * 175f64.powf(i as f64 / 49.0))
        .collect();
    c.bench_function("gain_sweep_50", |b| {
        b.iter(|| amp.gain_sweep(&amplitudes, 10, 0).unwrap())
    });
    let wide = build_amp(AmpConfig::modified("large", Preset::Large.params(), 10)).unwrap();
    c.bench_function("modified_m10_run_dc", |b| {
        b.iter(|| wide.run_dc(black_box(10e-3), 10).unwrap())
    });
}

criterion_group!(benches, device, amplifier);
criterion_main!(benches);
