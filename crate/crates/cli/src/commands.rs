use serde::Serialize;
use serde_json::{json, Value as Json};

use nemsamp_core::amp::{build_amp, Stimulus};
use nemsamp_core::device::{compare_with_table, TableCheck};
use nemsamp_core::mech::{cv_sweep, transient, Drive, SweepDirection};
use nemsamp_core::{BeamState, DynamicsParams, MaterialProps};

use crate::error::CliError;
use crate::output::Outputs;
use crate::scenario::Scenario;

/// Published-table tolerance used by `device-report`.
pub const TABLE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps; 0 picks the default.
    pub jobs: usize,
    pub format: Format,
}

/// Result of a command: files to write plus the summary shown on stdout.
#[derive(Debug)]
pub struct Report {
    pub outputs: Outputs,
    pub summary: Json,
}

impl Report {
    fn new(summary: Json) -> Self {
        let mut outputs = Outputs::default();
        outputs.add("summary.json", to_json_bytes(&summary));
        Report { outputs, summary }
    }

    /// Stdout rendering of the summary.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
            }
            Format::Csv => {
                let mut out = String::from("key,value\n");
                if let Json::Object(map) = &self.summary {
                    for (k, v) in map {
                        let v = match v {
                            Json::String(s) => s.clone(),
                            other => other.to_string(),
                        };
                        out.push_str(&format!("{k},{v}\n"));
                    }
                }
                out
            }
        }
    }
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

#[derive(Debug, Serialize)]
struct TableRow {
    quantity: &'static str,
    computed: f64,
    published: f64,
    raw_rel_err: f64,
    rounded_rel_err: f64,
    pass: bool,
}

impl From<TableCheck> for TableRow {
    fn from(c: TableCheck) -> Self {
        TableRow {
            quantity: c.quantity,
            computed: c.computed,
            published: c.published,
            raw_rel_err: c.raw_rel_err,
            rounded_rel_err: c.rounded_rel_err,
            pass: c.pass,
        }
    }
}

pub fn device_report(scenario: &Scenario) -> Result<Report, CliError> {
    let d = scenario.device()?;
    let mut summary = json!({
        "device": scenario.device_name(),
        "A_m2": d.overlap_area,
        "g_eff_m": d.effective_gap,
        "k_N_per_m": d.spring_k,
        "V_PI_V": d.pull_in,
        "V_PO_V": d.pull_out,
        "d_c_m": d.contact_gap,
        "C_on_F": d.c_on,
        "C_off_F": d.c_off,
        "max_gain": d.max_gain,
    });
    if let Some(preset) = scenario.preset() {
        let checks = compare_with_table(preset, TABLE_TOLERANCE);
        let pass = checks.iter().all(|c| c.pass);
        let rows: Vec<TableRow> = checks.into_iter().map(TableRow::from).collect();
        summary["table_tolerance"] = json!(TABLE_TOLERANCE);
        summary["table_check"] = json!(rows);
        summary["table_pass"] = json!(pass);
    }
    Ok(Report::new(summary))
}

pub fn cv(scenario: &Scenario) -> Result<Report, CliError> {
    let d = scenario.device()?;
    let (v_start, v_end, n) = scenario.cv_settings(&d);
    let curve = cv_sweep(&d, v_start, v_end, n, SweepDirection::Both)?;
    let mut report = Report::new(json!({
        "device": scenario.device_name(),
        "points": curve.samples.len(),
        "latch_V": curve.latch_voltage(),
        "release_V": curve.release_voltage(),
        "V_PI_V": d.pull_in,
        "V_PO_V": d.pull_out,
    }));
    report
        .outputs
        .add("cv.csv", csv_bytes(|w| curve.write_csv(w)));
    Ok(report)
}

pub fn transient_cmd(scenario: &Scenario) -> Result<Report, CliError> {
    let d = scenario.device()?;
    let s = scenario.transient_settings(&d);
    let dynamics = DynamicsParams::for_device(&d, &MaterialProps::default(), s.q_factor, s.dt_max)?;
    let drive = move |t: f64| match s.pulse {
        Some(width) if t >= width => 0.0,
        _ => s.drive,
    };
    let trace = transient(
        &d,
        &dynamics,
        Drive::Voltage(&drive),
        BeamState::REST,
        s.t_end,
    )?;
    let last = trace.final_state();
    let mut report = Report::new(json!({
        "device": scenario.device_name(),
        "drive_V": s.drive,
        "pulse_s": s.pulse,
        "t_end_s": s.t_end,
        "effective_mass_kg": dynamics.effective_mass,
        "damping_Ns_per_m": dynamics.damping,
        "pull_in_time_s": trace.pull_in_time(),
        "release_time_s": trace.release_time(),
        "final_x_m": last.x,
        "final_latched": last.latched,
    }));
    report
        .outputs
        .add("transient.csv", csv_bytes(|w| trace.write_csv(w)));
    Ok(report)
}

pub fn amplify(scenario: &Scenario) -> Result<Report, CliError> {
    let amp = build_amp(scenario.amp_config()?)?;
    let n_periods = scenario.n_periods();
    let stimulus = scenario.stimulus()?;
    let (network, sim, gain_dc) = match stimulus {
        Stimulus::Dc(vin) => {
            let r = amp.run_dc(vin, n_periods)?;
            let (network, sim) = amp.simulate(stimulus, n_periods)?;
            (network, sim, r.gain)
        }
        Stimulus::Sine { amplitude, freq } => {
            let r = amp.run_sine(amplitude, freq, n_periods)?;
            let gain = if amplitude != 0.0 {
                amp.run_dc(amplitude, 3)?.gain
            } else {
                None
            };
            (r.network, r.simulation, gain)
        }
    };
    let mut report = Report::new(serde_json::to_value(amp.summary(gain_dc)).expect("serializes"));
    report.outputs.add(
        "waveforms.csv",
        csv_bytes(|w| sim.write_waveform_csv(&network, w)),
    );
    if scenario.islands_csv() {
        report
            .outputs
            .add("islands.csv", csv_bytes(|w| sim.write_island_csv(w)));
    }
    Ok(report)
}

pub fn gain_sweep(scenario: &Scenario, options: RunOptions) -> Result<Report, CliError> {
    let amp = build_amp(scenario.amp_config()?)?;
    let sweep = amp.gain_sweep(&scenario.amplitudes(), scenario.n_periods(), options.jobs)?;
    let gain_dc = sweep.entries.first().map(|e| e.gain);
    let mut report = Report::new(serde_json::to_value(amp.summary(gain_dc)).expect("serializes"));
    report
        .outputs
        .add("gain_sweep.csv", csv_bytes(|w| sweep.write_csv(w)));
    Ok(report)
}

pub fn power(scenario: &Scenario) -> Result<Report, CliError> {
    let amp = build_amp(scenario.amp_config()?)?;
    Ok(Report::new(
        serde_json::to_value(amp.summary(None)).expect("serializes"),
    ))
}
