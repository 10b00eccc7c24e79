//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nemsamp_core::amp::{
    build_amp, charge_control_gain, parasitic_study, power_estimate, AmpConfig,
};
use nemsamp_core::device::{compare_with_table, EPS0};
use nemsamp_core::mech::{cv_sweep, static_equilibrium_voltage, transient, Drive, SweepDirection};
use nemsamp_core::{BeamState, DeviceParams, DynamicsParams, MaterialProps, Preset};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let r = f();
    let elapsed = start.elapsed();
    let note = format!(
        " [{:.3} s, limit {} s]",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    match r {
        Ok(d) if elapsed <= limit => Ok(d + &note),
        Ok(d) => Err(d + &note + " too slow"),
        Err(d) => Err(d + &note),
    }
}

fn large_basic() -> AmpConfig {
    AmpConfig::basic("large", Preset::Large.params())
}

fn table_reproduction() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for preset in Preset::ALL {
            for c in compare_with_table(preset, 0.02) {
                ok &= c.pass;
                parts.push(format!(
                    "{preset}.{}={:.4} (raw {:.1}%)",
                    c.quantity,
                    c.computed,
                    100.0 * c.raw_rel_err
                ));
            }
        }
        check(ok, parts.join(", "))
    })
}

fn dc_gain() -> Outcome {
    timed(Duration::from_secs(5), || {
        let amp = build_amp(large_basic()).map_err(|e| e.to_string())?;
        let r = amp.run_dc(10e-3, 10).map_err(|e| e.to_string())?;
        let err = (r.vout - 389.9e-3).abs() / 389.9e-3;
        check(
            err <= 0.005 && r.conservation_violations == 0,
            format!(
                "vout = {:.2} mV, gain = {:.3}, error {:.3}%",
                r.vout * 1e3,
                r.gain.unwrap_or(f64::NAN),
                100.0 * err
            ),
        )
    })
}

fn power() -> Outcome {
    let p = power_estimate(10.0, 31.5e-15, 100e3, 10.0).map_err(|e| e.to_string())?;
    let rel = (p - 6.3e-6).abs() / 6.3e-6;
    check(rel < 1e-12, format!("P = {p:.6e} W"))
}

fn nonlinearity() -> Outcome {
    timed(Duration::from_secs(30), || {
        let amp = build_amp(large_basic()).map_err(|e| e.to_string())?;
        let amplitudes: Vec<f64> = (0..50)
            .map(|i| 1e-3 * 175f64.powf(i as f64 / 49.0))
            .collect();
        let report = amp
            .gain_sweep(&amplitudes, 10, 0)
            .map_err(|e| e.to_string())?;
        let first = report.entries.first().unwrap();
        let last = report.entries.last().unwrap();
        let drop = 1.0 - last.gain / first.gain;
        // oracle evaluated here, independently of the report's own column
        let d = Preset::Large.params();
        let worst = report
            .entries
            .iter()
            .map(|e| {
                (e.gain - charge_control_gain(&d, e.vin)).abs() / charge_control_gain(&d, e.vin)
            })
            .fold(0.0, f64::max);
        let all_released = report.entries.iter().all(|e| e.released);
        check(
            (0.06..=0.09).contains(&drop) && worst < 1e-3 && all_released,
            format!(
                "gain {:.3} @ 1 mV -> {:.3} @ 175 mV, drop {:.2}%, worst oracle deviation {:.2e}",
                first.gain,
                last.gain,
                100.0 * drop,
                worst
            ),
        )
    })
}

fn hysteresis() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in Preset::ALL {
        let d = preset.params();
        let t = preset.table();
        let curve = cv_sweep(&d, 0.0, 1.25 * t.v_pi, 4001, SweepDirection::Both)
            .map_err(|e| e.to_string())?;
        let up = curve.latch_voltage().unwrap_or(f64::NAN);
        let down = curve.release_voltage().unwrap_or(f64::NAN);
        let e_up = (up - t.v_pi).abs() / t.v_pi;
        let e_down = (down - t.v_po).abs() / t.v_po;
        let fold = static_equilibrium_voltage(&d.geometry, d.spring_k, t.v_pi * (1.0 - 1e-9))
            .map_err(|e| e.to_string())?;
        let e_fold = (fold.x - d.effective_gap / 3.0).abs() / (d.effective_gap / 3.0);
        ok &= e_up <= 0.01 && e_down <= 0.01 && e_fold <= 0.005 && !fold.latched;
        parts.push(format!(
            "{preset}: up {up:.3} V, down {down:.3} V, fold x/(g/3) - 1 = {:.1e}",
            fold.x / (d.effective_gap / 3.0) - 1.0
        ));
    }
    check(ok, parts.join("; "))
}

fn conservation() -> Outcome {
    let amp = build_amp(large_basic()).map_err(|e| e.to_string())?;
    let r = amp.run_sine(10e-3, 10e3, 100).map_err(|e| e.to_string())?;
    let checks = r.simulation.conservation_checks();
    let violations = r.simulation.conservation_violations();
    check(
        checks > 0 && violations == 0,
        format!(
            "{checks} island checks, {violations} violations, worst relative error {:.2e}",
            r.simulation.worst_conservation_error()
        ),
    )
}

fn bias_invariance() -> Outcome {
    let mut outs = Vec::new();
    for v_dc in [10.0, 10.5, 11.0] {
        let amp = build_amp(AmpConfig {
            v_dc,
            ..large_basic()
        })
        .map_err(|e| e.to_string())?;
        outs.push(amp.run_dc(10e-3, 10).map_err(|e| e.to_string())?.vout);
    }
    let spread = outs.iter().cloned().fold(f64::MIN, f64::max)
        - outs.iter().cloned().fold(f64::MAX, f64::min);
    check(
        spread <= 1e-9 * outs[0].abs(),
        format!("vout = {:.12} V, spread {spread:.2e} V", outs[0]),
    )
}

fn parasitics() -> Outcome {
    let d = Preset::Large.params();
    let base = AmpConfig::modified("large", d, 10);
    let mut ok = true;
    let mut parts = Vec::new();
    for c in [0.5e-15, 1e-15, 5e-15] {
        let study = parasitic_study(&base, c, c, &[1, 10], None).map_err(|e| e.to_string())?;
        let (g1, g10) = (study.rows[0].gain, study.rows[1].gain);
        ok &= g10 > g1;
        parts.push(format!("C={:.1} fF: m=1 {g1:.2}, m=10 {g10:.2}", c * 1e15));
    }
    let study =
        parasitic_study(&base, 1e-15, 1e-15, &[10], Some((10, 0.15))).map_err(|e| e.to_string())?;
    let cal = study.calibration.expect("calibration requested");
    let target = 0.85 * cal.ideal_gain;
    // charge-sharing balance on the hold island
    let m = 10.0;
    let closed = (2.0 * m * d.c_on + cal.c_island) / (2.0 * m * d.c_off + cal.c_island);
    ok &= (cal.gain - target).abs() / target < 1e-3 && (closed - cal.gain).abs() / cal.gain < 5e-3;
    parts.push(format!(
        "calibrated C_GB = C_GC = {:.3} fF (island C_p = {:.3} fF): gain {:.2} vs ideal {:.2}, closed form {:.2}",
        cal.c_switch * 1e15,
        cal.c_island * 1e15,
        cal.gain,
        cal.ideal_gain,
        closed
    ));
    check(ok, parts.join("; "))
}

fn rk4_pull_in(d: &DeviceParams, dy: &DynamicsParams, v: f64, h: f64) -> Option<f64> {
    let accel = |x: f64, u: f64| {
        let gap = (d.effective_gap - x).max(d.contact_gap);
        (EPS0 * d.overlap_area * v * v / (2.0 * gap * gap) - d.spring_k * x - dy.damping * u)
            / dy.effective_mass
    };
    let g0 = d.geometry.air_gap;
    let (mut t, mut x, mut u) = (0.0, 0.0, 0.0);
    while t < 1e-5 {
        let (a1, b1) = (u, accel(x, u));
        let (a2, b2) = (u + 0.5 * h * b1, accel(x + 0.5 * h * a1, u + 0.5 * h * b1));
        let (a3, b3) = (u + 0.5 * h * b2, accel(x + 0.5 * h * a2, u + 0.5 * h * b2));
        let (a4, b4) = (u + h * b3, accel(x + h * a3, u + h * b3));
        let nx = x + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if nx >= g0 {
            return Some(t + h * (g0 - x) / (nx - x));
        }
        u += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        x = nx;
        t += h;
    }
    None
}

fn transient_properties() -> Outcome {
    let d = Preset::Large.params();
    let dy = DynamicsParams::for_device(&d, &MaterialProps::default(), 2.0, 1e-8)
        .map_err(|e| e.to_string())?;
    let mut times = Vec::new();
    let mut worst_ref = 0.0f64;
    for overdrive in [1.05, 1.1, 1.2, 1.4, 1.8] {
        let v = overdrive * d.pull_in;
        let drive = move |_t: f64| v;
        let trace = transient(&d, &dy, Drive::Voltage(&drive), BeamState::REST, 1e-5)
            .map_err(|e| e.to_string())?;
        let t = trace
            .pull_in_time()
            .ok_or(format!("no pull-in at {overdrive}x V_PI"))?;
        let reference =
            rk4_pull_in(&d, &dy, v, dy.dt_max / 100.0).ok_or("reference did not pull in")?;
        worst_ref = worst_ref.max((t - reference).abs() / reference);
        times.push(t);
    }
    let monotone = times.windows(2).all(|w| w[1] < w[0]);
    check(
        monotone && worst_ref < 0.01 && times.iter().all(|t| t.is_finite()),
        format!(
            "pull-in times {} us, reference deviation {:.2e}",
            times
                .iter()
                .map(|t| format!("{:.3}", t * 1e6))
                .collect::<Vec<_>>()
                .join(" > "),
            worst_ref
        ),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_nemsamp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("nemsamp-acceptance-{}", std::process::id()));
    fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
    let scenario = "device.preset = large\namp.vdc_V = 10\namp.fclk_hz = 100e3\n\
                    stimulus.kind = sine\nstimulus.amplitude_V = 10e-3\nstimulus.freq_hz = 10e3\n\
                    run.n_periods = 20\nrun.islands = true\n";
    fs::write(tmp.join("s.txt"), scenario).map_err(|e| e.to_string())?;
    let commands = [
        "device-report",
        "cv-sweep",
        "transient",
        "amplify",
        "gain-sweep",
        "power",
    ];
    let mut compared = 0;
    let result = (|| {
        for cmd in commands {
            for run in ["a", "b"] {
                let dir = format!("{run}/{cmd}");
                run_cli(
                    &[
                        cmd,
                        "--config",
                        "s.txt",
                        "--out-dir",
                        &dir,
                        "--jobs",
                        if run == "a" { "1" } else { "4" },
                    ],
                    &tmp,
                )?;
            }
            let dir_a = tmp.join("a").join(cmd);
            for entry in fs::read_dir(&dir_a).map_err(|e| e.to_string())? {
                let name = entry.map_err(|e| e.to_string())?.file_name();
                let a = fs::read(dir_a.join(&name)).map_err(|e| e.to_string())?;
                let b = fs::read(tmp.join("b").join(cmd).join(&name)).map_err(|e| e.to_string())?;
                if a != b {
                    return Err(format!(
                        "{cmd}/{} differs between runs",
                        name.to_string_lossy()
                    ));
                }
                compared += 1;
            }
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&tmp);
    result?;
    check(
        compared == 11,
        format!("{compared} output files byte-identical across two runs"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("table reproduction", table_reproduction),
        ("dc gain", dc_gain),
        ("power", power),
        ("nonlinearity trend", nonlinearity),
        ("c-v hysteresis", hysteresis),
        ("charge conservation", conservation),
        ("bias invariance", bias_invariance),
        ("parasitic direction", parasitics),
        ("transient properties", transient_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL - {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
