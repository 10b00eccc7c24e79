//! Discrete-time parametric amplifier built from NEMS capacitive switches.
//!
//! Two banks of `m` capacitive switches hang from nodes `A` and `B`. In the
//! sample phase `A` is driven to `V_DC + vin` and `B` to `vin - V_DC`, both
//! beyond pull-in, so every beam latches and stores `C_on·(vin ± V_DC)`. In
//! the hold phase `A` and `B` are shorted and left floating: the `V_DC`
//! charges cancel, the island holds `2·m·C_on·vin`, the beams release and the
//! same charge now sits on `C_off`, amplifying `vin` by roughly `C_on/C_off`.

use rayon::prelude::*;
use serde::Serialize;

use crate::device::{DeviceParams, EPS0};
use crate::error::{Error, Result};
use crate::mech::static_equilibrium_charge;
use crate::roots::brent;
use crate::scnet::{
    apply_parasitics, build_network, simulate, ClockPhase, ClockSchedule, DriveTerminal,
    ElementKind, Network, NetworkDescription, Phase, PhaseSolution, Simulation, SwitchParams,
    Waveform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// One capacitive switch per node, clock on the switch gates.
    Basic,
    /// `m` capacitive switches in parallel per node.
    Modified,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Basic => "basic",
            Topology::Modified => "modified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parasitics {
    pub c_gb: f64,
    pub c_gc: f64,
}

impl Default for Parasitics {
    fn default() -> Self {
        Parasitics {
            c_gb: 1e-15,
            c_gc: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmpConfig {
    pub device_name: String,
    pub device: DeviceParams,
    pub topology: Topology,
    pub m: usize,
    pub v_dc: f64,
    pub schedule: ClockSchedule,
    pub parasitics: Option<Parasitics>,
    pub drive_terminal: DriveTerminal,
    pub switch: SwitchParams,
    /// Clock swing applied to the ohmic switches.
    pub v_clk: f64,
}

impl AmpConfig {
    /// Basic topology at 10 V bias and 100 kHz clock.
    pub fn basic(device_name: &str, device: DeviceParams) -> Self {
        AmpConfig {
            device_name: device_name.to_string(),
            device,
            topology: Topology::Basic,
            m: 1,
            v_dc: 10.0,
            schedule: ClockSchedule::default(),
            parasitics: None,
            drive_terminal: DriveTerminal::Gate,
            switch: SwitchParams::default(),
            v_clk: 5.0,
        }
    }

    /// Parallel-device topology with body-driven switches.
    pub fn modified(device_name: &str, device: DeviceParams, m: usize) -> Self {
        AmpConfig {
            topology: Topology::Modified,
            m,
            drive_terminal: DriveTerminal::Body,
            ..AmpConfig::basic(device_name, device)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_dc > self.device.pull_in) {
            return Err(Error::InvalidConfig(format!(
                "V_DC = {} V must exceed the pull-in voltage {} V",
                self.v_dc, self.device.pull_in
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.topology == Topology::Basic && self.m != 1 {
            return Err(Error::InvalidConfig(format!(
                "basic topology uses one device per node, got m = {}",
                self.m
            )));
        }
        if let Some(p) = self.parasitics {
            if !(p.c_gb >= 0.0 && p.c_gc >= 0.0) {
                return Err(Error::InvalidConfig(
                    "parasitic capacitances must be non-negative".into(),
                ));
            }
        }
        if !(self.v_clk.abs() > self.switch.pull_in) {
            return Err(Error::InvalidConfig(format!(
                "clock swing {} V does not reach the switch pull-in {} V",
                self.v_clk, self.switch.pull_in
            )));
        }
        self.schedule
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Input signal applied differentially around `±V_DC`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Stimulus {
    Dc(f64),
    Sine { amplitude: f64, freq: f64 },
}

impl Stimulus {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Stimulus::Dc(v) => v,
            Stimulus::Sine { amplitude, freq } => {
                amplitude * (std::f64::consts::TAU * freq * t).sin()
            }
        }
    }

    fn around(&self, offset: f64) -> Waveform {
        match *self {
            Stimulus::Dc(v) => Waveform::Dc(offset + v),
            Stimulus::Sine { amplitude, freq } => Waveform::Sine {
                offset,
                amplitude,
                freq,
                phase: 0.0,
            },
        }
    }
}

/// A built amplifier: validated config plus the network for a zero input.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplifier {
    pub config: AmpConfig,
    pub network: Network,
}

pub const NODE_A: &str = "A";
pub const NODE_B: &str = "B";

fn describe(config: &AmpConfig, stimulus: Stimulus) -> NetworkDescription {
    let mut desc = NetworkDescription::new("0")
        .node(NODE_A)
        .node(NODE_B)
        .node("inp")
        .node("inn")
        .node("clk")
        .node("clkb")
        .source("VINP", "inp", stimulus.around(config.v_dc))
        .source("VINN", "inn", stimulus.around(-config.v_dc))
        .source(
            "VCLK",
            "clk",
            Waveform::Clock {
                phase: ClockPhase::Clk,
                high: config.v_clk,
                low: 0.0,
            },
        )
        .source(
            "VCLKB",
            "clkb",
            Waveform::Clock {
                phase: ClockPhase::ClkB,
                high: config.v_clk,
                low: 0.0,
            },
        );
    for (node, bank) in [(NODE_A, "CA"), (NODE_B, "CB")] {
        for i in 0..config.m {
            let name = if config.m == 1 {
                bank.to_string()
            } else {
                format!("{bank}{}", i + 1)
            };
            desc = desc.nems_cap(&name, config.device, node, "0");
        }
    }
    desc.switch("S1", "inp", NODE_A, "clk", "0", config.switch)
        .switch("S2", "inn", NODE_B, "clk", "0", config.switch)
        .switch("S3", NODE_A, NODE_B, "clkb", "0", config.switch)
}

fn network_for(config: &AmpConfig, stimulus: Stimulus) -> Result<Network> {
    let net = build_network(&describe(config, stimulus))?;
    let needs_rewire = config.parasitics.is_some() || config.drive_terminal != DriveTerminal::Gate;
    if !needs_rewire {
        return Ok(net);
    }
    let p = config.parasitics.unwrap_or(Parasitics {
        c_gb: 0.0,
        c_gc: 0.0,
    });
    apply_parasitics(&net, p.c_gb, p.c_gc, config.drive_terminal)
}

/// Validates the configuration and builds the amplifier network.
pub fn build_amp(config: AmpConfig) -> Result<Amplifier> {
    config.validate()?;
    let network = network_for(&config, Stimulus::Dc(0.0))?;
    Ok(Amplifier { config, network })
}

/// Hold-phase reading of one clock period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodSample {
    pub period: usize,
    /// Instant the sampling switches opened.
    pub t_sample: f64,
    pub vin_sampled: f64,
    /// Time of the hold reading (start of the last hold segment).
    pub t_hold: f64,
    pub v_a: f64,
    pub v_b: f64,
    /// Mean beam displacement of the A/B devices during hold.
    pub x_hold: f64,
    pub latched_in_sample: bool,
    pub released_in_hold: bool,
}

impl PeriodSample {
    pub fn vout(&self) -> f64 {
        0.5 * (self.v_a + self.v_b)
    }

    /// Differential output `v_A - (-v_B)`.
    pub fn differential(&self) -> f64 {
        self.v_a + self.v_b
    }
}

impl Amplifier {
    pub fn schedule(&self) -> &ClockSchedule {
        &self.config.schedule
    }

    fn nems_indices(network: &Network) -> Vec<usize> {
        network
            .elements()
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.kind, ElementKind::NemsCap { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn simulate(&self, stimulus: Stimulus, n_periods: usize) -> Result<(Network, Simulation)> {
        if n_periods == 0 {
            return Err(Error::InvalidConfig("n_periods must be at least 1".into()));
        }
        let network = network_for(&self.config, stimulus)?;
        let t_end = n_periods as f64 * self.schedule().period();
        let sim = simulate(&network, self.schedule(), t_end)?;
        Ok((network, sim))
    }

    /// Extracts one sample/hold pair per clock period.
    pub fn period_samples(
        &self,
        network: &Network,
        sim: &Simulation,
        stimulus: Stimulus,
    ) -> Vec<PeriodSample> {
        let period = self.schedule().period();
        let s1 = network.element("S1").expect("amplifier has S1");
        let a = network.node(NODE_A).expect("node A").0;
        let b = network.node(NODE_B).expect("node B").0;
        let nems = Self::nems_indices(network);
        let n_periods = (sim.solutions.last().map_or(0.0, |s| s.segment.t_end) / period + 1e-9)
            .floor() as usize;

        let mut out = Vec::with_capacity(n_periods);
        for p in 0..n_periods {
            let start = p as f64 * period;
            let mid = start + 0.5 * period;
            let end = start + period;
            let in_period = |s: &&PhaseSolution| {
                s.segment.t_start >= start - 1e-9 * period
                    && s.segment.t_start < end - 1e-9 * period
            };
            let sample_seg = sim
                .solutions
                .iter()
                .filter(in_period)
                .rfind(|s| s.conducting[s1] && s.segment.t_start < mid);
            let hold_seg = sim
                .solutions
                .iter()
                .filter(in_period)
                .rfind(|s| s.segment.phase == Phase::Hold);
            let (Some(sample_seg), Some(hold_seg)) = (sample_seg, hold_seg) else {
                continue;
            };
            let beams = |s: &PhaseSolution| {
                nems.iter()
                    .map(|&i| s.state.beams[i].expect("nems beam"))
                    .collect::<Vec<_>>()
            };
            let sample_beams = beams(sample_seg);
            let hold_beams = beams(hold_seg);
            let t_sample = sample_seg.segment.t_end;
            out.push(PeriodSample {
                period: p,
                t_sample,
                vin_sampled: stimulus.value(t_sample),
                t_hold: hold_seg.segment.t_start,
                v_a: hold_seg.voltage(a),
                v_b: hold_seg.voltage(b),
                x_hold: hold_beams.iter().map(|b| b.x).sum::<f64>() / hold_beams.len() as f64,
                latched_in_sample: sample_beams.iter().all(|b| b.latched),
                released_in_hold: hold_beams.iter().all(|b| !b.latched),
            });
        }
        out
    }

    /// Hold output for a zero input: the clock-feedthrough pedestal. Zero
    /// for networks without parasitics.
    pub fn offset(&self, n_periods: usize) -> Result<f64> {
        if self.config.parasitics.is_none() {
            return Ok(0.0);
        }
        let stimulus = Stimulus::Dc(0.0);
        let (net, sim) = self.simulate(stimulus, n_periods)?;
        let samples = self.period_samples(&net, &sim, stimulus);
        Ok(samples.last().map_or(0.0, |s| s.vout()))
    }

    fn measure_dc(&self, vin: f64, n_periods: usize, offset: f64) -> Result<DcResult> {
        let stimulus = Stimulus::Dc(vin);
        let (net, sim) = self.simulate(stimulus, n_periods)?;
        let samples = self.period_samples(&net, &sim, stimulus);
        let last = *samples
            .last()
            .ok_or_else(|| Error::InvalidConfig("simulation produced no complete period".into()))?;
        let steady = samples.len() < 2 || {
            let prev = samples[samples.len() - 2];
            (prev.vout() - last.vout()).abs() <= 1e-9 * last.vout().abs().max(1e-12)
        };
        let vout = last.vout();
        Ok(DcResult {
            vin,
            vout,
            gain: if vin != 0.0 {
                Some((vout - offset) / vin)
            } else {
                None
            },
            offset,
            x_hold: last.x_hold,
            latched_in_sample: last.latched_in_sample,
            released_in_hold: last.released_in_hold,
            steady,
            conservation_violations: sim.conservation_violations(),
        })
    }

    /// Steady-state hold output for a DC input. Fails when the beams do not
    /// release in hold (input beyond the charge-control clamp) or do not
    /// latch in sample.
    pub fn run_dc(&self, vin: f64, n_periods: usize) -> Result<DcResult> {
        let offset = self.offset(n_periods)?;
        let r = self.measure_dc(vin, n_periods, offset)?;
        if !r.released_in_hold {
            return Err(Error::NoRelease { vin });
        }
        if !r.latched_in_sample {
            return Err(Error::NoLatch { vin });
        }
        Ok(r)
    }

    /// Sinusoidal input; one sample per clock period.
    pub fn run_sine(&self, amplitude: f64, f_in: f64, n_periods: usize) -> Result<SineResult> {
        let f_clk = self.schedule().f_clk;
        if !(f_in > 0.0 && f_in < 0.5 * f_clk) {
            return Err(Error::InvalidConfig(format!(
                "input frequency {f_in} Hz must lie in (0, f_clk/2 = {} Hz)",
                0.5 * f_clk
            )));
        }
        let range = self.dynamic_range();
        if amplitude.abs() > range.vin_max {
            return Err(Error::InvalidConfig(format!(
                "amplitude {amplitude} V exceeds the dynamic range {} V",
                range.vin_max
            )));
        }
        let offset = self.offset(n_periods.min(3))?;
        let stimulus = Stimulus::Sine {
            amplitude,
            freq: f_in,
        };
        let (network, sim) = self.simulate(stimulus, n_periods)?;
        let samples = self.period_samples(&network, &sim, stimulus);
        Ok(SineResult {
            amplitude,
            f_in,
            offset,
            samples,
            network,
            simulation: sim,
        })
    }

    /// Admissible input range: the beams must latch at `V_DC - |vin|`,
    /// release below pull-out, and stay below the charge-control clamp.
    pub fn dynamic_range(&self) -> DynamicRange {
        let d = &self.config.device;
        let sampling = self.config.v_dc - d.pull_in;
        let clamp = d.clamp_charge() / d.c_on;
        let bounds = [
            (RangeLimit::Sampling, sampling),
            (RangeLimit::PullOut, d.pull_out),
            (RangeLimit::Clamp, clamp),
        ];
        let (limit, vin_max) = bounds
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three bounds");
        DynamicRange {
            vin_min: 0.0,
            vin_max: vin_max.max(0.0),
            limit,
            sampling_bound: sampling,
            pull_out_bound: d.pull_out,
            clamp_bound: clamp,
        }
    }

    /// DC gain at each amplitude, simulated in parallel on `jobs` workers
    /// (0 = rayon default). Entries beyond the clamp are flagged, not
    /// dropped.
    pub fn gain_sweep(
        &self,
        amplitudes: &[f64],
        n_periods: usize,
        jobs: usize,
    ) -> Result<GainReport> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidConfig(
                "gain sweep needs at least one amplitude".into(),
            ));
        }
        if amplitudes.iter().any(|a| !(*a > 0.0)) || amplitudes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "gain sweep amplitudes must be positive and strictly ascending".into(),
            ));
        }
        let offset = self.offset(n_periods)?;
        let run = || -> Result<Vec<DcResult>> {
            amplitudes
                .par_iter()
                .map(|&vin| self.measure_dc(vin, n_periods, offset))
                .collect()
        };
        let results = if jobs == 0 {
            run()?
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
                .install(run)?
        };
        let ideal = self.config.parasitics.is_none();
        let entries = results
            .into_iter()
            .map(|r| GainEntry {
                vin: r.vin,
                vout: r.vout,
                gain: r.gain.expect("amplitudes are non-zero"),
                x: r.x_hold,
                released: r.released_in_hold,
                latched_in_sample: r.latched_in_sample,
                oracle_gain: ideal.then(|| charge_control_gain(&self.config.device, r.vin)),
            })
            .collect();
        Ok(GainReport { entries })
    }

    pub fn power(&self) -> f64 {
        power_formula(
            self.config.m as f64,
            self.config.device.c_on,
            self.config.schedule.f_clk,
            self.config.v_dc,
        )
    }

    pub fn summary(&self, gain_dc: Option<f64>) -> AmpSummary {
        AmpSummary {
            device: self.config.device_name.clone(),
            topology: self.config.topology.as_str().to_string(),
            m: self.config.m,
            vdc_v: self.config.v_dc,
            fclk_hz: self.config.schedule.f_clk,
            gain_dc,
            vin_max_v: self.dynamic_range().vin_max,
            power_w: self.power(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcResult {
    pub vin: f64,
    pub vout: f64,
    /// `(vout - offset)/vin`; `None` for a zero input.
    pub gain: Option<f64>,
    pub offset: f64,
    pub x_hold: f64,
    pub latched_in_sample: bool,
    pub released_in_hold: bool,
    /// Last two periods agree.
    pub steady: bool,
    pub conservation_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineResult {
    pub amplitude: f64,
    pub f_in: f64,
    pub offset: f64,
    pub samples: Vec<PeriodSample>,
    pub network: Network,
    pub simulation: Simulation,
}

impl SineResult {
    /// Hold value over sampled input, for samples whose input is at least
    /// `min_fraction` of the amplitude.
    pub fn per_sample_gains(&self, min_fraction: f64) -> Vec<(usize, f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.vin_sampled.abs() >= min_fraction * self.amplitude.abs())
            .filter(|s| s.vin_sampled != 0.0)
            .map(|s| {
                (
                    s.period,
                    s.vin_sampled,
                    (s.vout() - self.offset) / s.vin_sampled,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeLimit {
    Sampling,
    PullOut,
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicRange {
    pub vin_min: f64,
    pub vin_max: f64,
    pub limit: RangeLimit,
    pub sampling_bound: f64,
    pub pull_out_bound: f64,
    pub clamp_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEntry {
    pub vin: f64,
    pub vout: f64,
    pub gain: f64,
    pub x: f64,
    pub released: bool,
    pub latched_in_sample: bool,
    /// Closed-form charge-control gain, for networks without parasitics.
    pub oracle_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub entries: Vec<GainEntry>,
}

impl GainReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vin_V,vout_V,gain,x_m,released")?;
        for e in &self.entries {
            writeln!(
                w,
                "{:.9e},{:.9e},{:.9e},{:.9e},{}",
                e.vin, e.vout, e.gain, e.x, e.released as u8
            )?;
        }
        Ok(())
    }

    /// Largest relative disagreement between simulation and the closed-form
    /// gain over released entries.
    pub fn max_oracle_deviation(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.released)
            .map(|e| e.oracle_gain.map(|g| (e.gain - g).abs() / g))
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
    }
}

/// Gain of an ideal hold phase: each beam carries `q = C_on·vin`, settles at
/// the charge-controlled displacement `x(q)`, and the output is
/// `q/C(x) = vin·(C_on/C_off)·(1 - x/g_eff)`.
pub fn charge_control_gain(device: &DeviceParams, vin: f64) -> f64 {
    let q = device.c_on * vin;
    let x = static_equilibrium_charge(&device.geometry, device.spring_k, q).x;
    device.c_on * device.effective_gap / (EPS0 * device.overlap_area)
        * (1.0 - x / device.effective_gap)
}

fn power_formula(m: f64, c_a: f64, f_clk: f64, v_dc: f64) -> f64 {
    2.0 * m * c_a * f_clk * v_dc * v_dc
}

/// Dynamic power `2·m·C_A·f_CLK·V_DC²`.
pub fn power_estimate(m: f64, c_a: f64, f_clk: f64, v_dc: f64) -> Result<f64> {
    if ![m, c_a, f_clk, v_dc]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "power inputs must be positive: m={m}, C_A={c_a:e}, f={f_clk}, V_DC={v_dc}"
        )));
    }
    Ok(power_formula(m, c_a, f_clk, v_dc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmpSummary {
    pub device: String,
    pub topology: String,
    pub m: usize,
    #[serde(rename = "vdc_V")]
    pub vdc_v: f64,
    pub fclk_hz: f64,
    pub gain_dc: Option<f64>,
    #[serde(rename = "vin_max_V")]
    pub vin_max_v: f64,
    #[serde(rename = "power_W")]
    pub power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParasiticRow {
    pub m: usize,
    pub gain: f64,
}

/// Parasitic value that reproduces a target gain drop. This is a fit, not a
/// prediction: switch parasitics are not published for the reference design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParasiticCalibration {
    pub m: usize,
    pub target_drop: f64,
    /// Common value of `C_GB` and `C_GC`.
    pub c_switch: f64,
    /// Resulting parasitic capacitance on the hold island.
    pub c_island: f64,
    pub ideal_gain: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParasiticStudy {
    pub c_gb: f64,
    pub c_gc: f64,
    pub rows: Vec<ParasiticRow>,
    pub calibration: Option<ParasiticCalibration>,
}

const STUDY_VIN: f64 = 10e-3;
const STUDY_PERIODS: usize = 3;

fn gain_with(base: &AmpConfig, m: usize, parasitics: Option<Parasitics>) -> Result<f64> {
    let mut cfg = base.clone();
    cfg.topology = if m == 1 && base.topology == Topology::Basic {
        Topology::Basic
    } else {
        Topology::Modified
    };
    cfg.m = m;
    cfg.parasitics = parasitics;
    let amp = build_amp(cfg)?;
    let r = amp.run_dc(STUDY_VIN, STUDY_PERIODS)?;
    Ok(r.gain.expect("non-zero input"))
}

/// Gain versus device count at fixed switch parasitics, plus (when
/// `calibrate_m` is given) the common switch parasitic that lowers the gain
/// at that device count by `target_drop` relative to the parasitic-free
/// gain.
pub fn parasitic_study(
    base: &AmpConfig,
    c_gb: f64,
    c_gc: f64,
    m_values: &[usize],
    calibrate: Option<(usize, f64)>,
) -> Result<ParasiticStudy> {
    let parasitics = Parasitics { c_gb, c_gc };
    let rows = m_values
        .par_iter()
        .map(|&m| {
            Ok(ParasiticRow {
                m,
                gain: gain_with(base, m, Some(parasitics))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let calibration = match calibrate {
        None => None,
        Some((m, target_drop)) => {
            let ideal = gain_with(base, m, None)?;
            let target = ideal * (1.0 - target_drop);
            let residual = |c: f64| {
                gain_with(base, m, Some(Parasitics { c_gb: c, c_gc: c }))
                    .map(|g| g - target)
                    .unwrap_or(f64::NAN)
            };
            let c = brent(residual, 0.0, 1e-12, 1e-21, 200)?;
            let gain = gain_with(base, m, Some(Parasitics { c_gb: c, c_gc: c }))?;
            Some(ParasiticCalibration {
                m,
                target_drop,
                c_switch: c,
                // half of C_GC lands on each channel terminal; A and B each
                // touch two switch terminals
                c_island: 2.0 * c,
                ideal_gain: ideal,
                gain,
            })
        }
    };

    Ok(ParasiticStudy {
        c_gb,
        c_gc,
        rows,
        calibration,
    })
}
