//! Line-based scenario files.
//!
//! ```text
//! # comment
//! device.preset = "large"
//! amp.vdc_V = 10
//! amp.fclk_hz = 100e3
//! stimulus.kind = dc
//! stimulus.amplitude_V = 10e-3
//! ```
//!
//! Values are numbers, booleans, bare or quoted words, or `[a, b, ...]`
//! lists of numbers. Key names carry their unit; values are plain numbers
//! in that unit. The scenario keeps the values exactly as written (in human
//! units) so that [`Scenario::to_text`] re-parses to an identical value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use nemsamp_core::amp::{AmpConfig, Parasitics, Stimulus, Topology};
use nemsamp_core::scnet::{ClockSchedule, DriveTerminal};
use nemsamp_core::{DeviceGeometry, DeviceParams, Preset};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:?}"),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => format!("\"{s}\""),
            Value::List(xs) => {
                let items: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
                format!("[{}]", items.join(", "))
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Text(_) => "word",
            Value::List(_) => "list",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    PositiveNum,
    Count,
    Bool,
    Text,
    List,
}

/// Every accepted key with the type of its value.
const KEYS: &[(&str, Kind)] = &[
    ("device.preset", Kind::Text),
    ("device.L_um", Kind::PositiveNum),
    ("device.W_um", Kind::PositiveNum),
    ("device.t_nm", Kind::PositiveNum),
    ("device.Le_um", Kind::PositiveNum),
    ("device.g0_nm", Kind::PositiveNum),
    ("device.td_nm", Kind::PositiveNum),
    ("device.eps_d", Kind::PositiveNum),
    ("device.vpi_V", Kind::PositiveNum),
    ("device.vpo_V", Kind::PositiveNum),
    ("amp.topology", Kind::Text),
    ("amp.m", Kind::Count),
    ("amp.vdc_V", Kind::PositiveNum),
    ("amp.fclk_hz", Kind::PositiveNum),
    ("amp.nonoverlap_frac", Kind::Num),
    ("amp.cgb_fF", Kind::Num),
    ("amp.cgc_fF", Kind::Num),
    ("amp.drive_terminal", Kind::Text),
    ("stimulus.kind", Kind::Text),
    ("stimulus.amplitude_V", Kind::Num),
    ("stimulus.freq_hz", Kind::PositiveNum),
    ("stimulus.amplitudes_V", Kind::List),
    ("run.n_periods", Kind::Count),
    ("run.out_dir", Kind::Text),
    ("run.deterministic", Kind::Bool),
    ("run.islands", Kind::Bool),
    ("cv.v_start_V", Kind::Num),
    ("cv.v_end_V", Kind::Num),
    ("cv.n_points", Kind::Count),
    ("transient.drive_V", Kind::Num),
    ("transient.pulse_s", Kind::PositiveNum),
    ("transient.t_end_s", Kind::PositiveNum),
    ("transient.q_factor", Kind::PositiveNum),
    ("transient.dt_max_s", Kind::PositiveNum),
];

const CUSTOM_DEVICE_KEYS: [&str; 9] = [
    "L_um", "W_um", "t_nm", "Le_um", "g0_nm", "td_nm", "eps_d", "vpi_V", "vpo_V",
];

/// A parsed, validated scenario. Entries are keyed by `section.key`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    entries: BTreeMap<String, Value>,
}

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(s: &str) -> Option<f64> {
    let x: f64 = s.parse().ok()?;
    x.is_finite().then_some(x)
}

fn parse_value(raw: &str, line: usize) -> Result<Value, CliError> {
    let syntax = |msg: String| CliError::Syntax { line, message: msg };
    if let Some(inner) = raw.strip_prefix('"') {
        let text = inner
            .strip_suffix('"')
            .ok_or_else(|| syntax(format!("unterminated string {raw}")))?;
        if text.contains('"') {
            return Err(syntax(format!("stray quote in {raw}")));
        }
        return Ok(Value::Text(text.to_string()));
    }
    if let Some(inner) = raw.strip_prefix('[') {
        let body = inner
            .strip_suffix(']')
            .ok_or_else(|| syntax(format!("unterminated list {raw}")))?;
        if body.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return body
            .split(',')
            .map(|item| {
                parse_number(item.trim())
                    .ok_or_else(|| syntax(format!("list item `{}` is not a number", item.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Value::List);
    }
    match raw {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Some(x) = parse_number(raw) {
        return Ok(Value::Num(x));
    }
    let starts_numeric = raw
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
    if starts_numeric {
        // "10V", "1e-3s": units belong in the key, not the value
        return Err(CliError::UnitViolation {
            line: Some(line),
            key: None,
            message: format!("`{raw}` is not a plain number; units go in the key name"),
        });
    }
    if raw.is_empty() || raw.chars().any(char::is_whitespace) {
        return Err(syntax(format!("malformed value `{raw}`")));
    }
    Ok(Value::Text(raw.to_string()))
}

fn check_kind(key: &str, kind: Kind, value: &Value, line: usize) -> Result<(), CliError> {
    let mismatch = || CliError::Syntax {
        line,
        message: format!(
            "`{key}` expects a {}, got a {}",
            kind_name(kind),
            value.kind()
        ),
    };
    match (kind, value) {
        (Kind::Num, Value::Num(_)) => Ok(()),
        (Kind::PositiveNum, Value::Num(x)) => {
            if *x > 0.0 {
                Ok(())
            } else {
                Err(CliError::UnitViolation {
                    line: Some(line),
                    key: Some(key.to_string()),
                    message: format!("`{key}` must be strictly positive, got {x}"),
                })
            }
        }
        (Kind::Count, Value::Num(x)) => {
            if *x >= 1.0 && x.fract() == 0.0 && *x < 1e9 {
                Ok(())
            } else {
                Err(CliError::UnitViolation {
                    line: Some(line),
                    key: Some(key.to_string()),
                    message: format!("`{key}` must be a positive integer, got {x}"),
                })
            }
        }
        (Kind::Bool, Value::Bool(_))
        | (Kind::Text, Value::Text(_))
        | (Kind::List, Value::List(_)) => Ok(()),
        _ => Err(mismatch()),
    }
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Num | Kind::PositiveNum => "number",
        Kind::Count => "positive integer",
        Kind::Bool => "boolean",
        Kind::Text => "word",
        Kind::List => "list",
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario = parse_unchecked(text)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Parses scenario text, checking syntax, keys and value types but not the
/// cross-key constraints of [`Scenario::validate`].
pub fn parse_unchecked(text: &str) -> Result<Scenario, CliError> {
    let mut entries = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw_line).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Syntax {
            line,
            message: format!("expected `section.key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if !key.contains('.') {
            return Err(CliError::Syntax {
                line,
                message: format!("key `{key}` has no section"),
            });
        }
        let kind = kind_of(key).ok_or_else(|| CliError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        let value = parse_value(value.trim(), line)?;
        check_kind(key, kind, &value, line)?;
        if entries.insert(key.to_string(), value).is_some() {
            return Err(CliError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(Scenario { entries })
}

fn constraint(message: impl Into<String>) -> CliError {
    CliError::Constraint {
        message: message.into(),
    }
}

impl Scenario {
    /// Scenario that only selects a preset device.
    pub fn for_preset(preset: Preset) -> Scenario {
        let mut s = Scenario::default();
        s.set("device.preset", Value::Text(preset.name().to_string()));
        s
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    /// Sets a key, bypassing validation; call [`Scenario::validate`] after.
    pub fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), value);
    }

    /// Replaces the device section with a preset.
    pub fn use_preset(&mut self, preset: Preset) {
        self.entries.retain(|k, _| !k.starts_with("device."));
        self.set("device.preset", Value::Text(preset.name().to_string()));
    }

    fn num(&self, key: &str) -> Option<f64> {
        match self.entries.get(key) {
            Some(Value::Num(x)) => Some(*x),
            _ => None,
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        match self.entries.get(key) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    fn flag(&self, key: &str) -> Option<bool> {
        match self.entries.get(key) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    /// Serializes back to scenario text, one key per line, sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {}", v.render());
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.entries.keys().any(|k| k.starts_with("device.")) {
            return Err(CliError::Syntax {
                line: 0,
                message: "missing device section".into(),
            });
        }
        self.device()?;
        if self.entries.keys().any(|k| k.starts_with("amp.")) {
            self.amp_config()?;
        }
        self.stimulus()?;
        if let Some(f) = self.num("amp.nonoverlap_frac") {
            if !(0.0..0.5).contains(&f) {
                return Err(constraint(format!(
                    "amp.nonoverlap_frac must lie in [0, 0.5), got {f}"
                )));
            }
        }
        for key in ["amp.cgb_fF", "amp.cgc_fF"] {
            if let Some(c) = self.num(key) {
                if c < 0.0 {
                    return Err(CliError::UnitViolation {
                        line: None,
                        key: Some(key.into()),
                        message: format!("`{key}` must be non-negative, got {c}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn device_name(&self) -> String {
        self.text("device.preset").unwrap_or("custom").to_string()
    }

    pub fn preset(&self) -> Option<Preset> {
        self.text("device.preset").and_then(Preset::from_name)
    }

    pub fn device(&self) -> Result<DeviceParams, CliError> {
        let custom: Vec<&str> = CUSTOM_DEVICE_KEYS
            .iter()
            .copied()
            .filter(|k| self.entries.contains_key(&format!("device.{k}")))
            .collect();
        if let Some(name) = self.text("device.preset") {
            let preset = Preset::from_name(name).ok_or_else(|| {
                constraint(format!(
                    "unknown preset `{name}` (expected one of large, lv-high-gain, lv-low-gain)"
                ))
            })?;
            if !custom.is_empty() {
                return Err(constraint(format!(
                    "device.preset cannot be combined with custom keys ({})",
                    custom.join(", ")
                )));
            }
            return Ok(preset.params());
        }
        let missing: Vec<&str> = CUSTOM_DEVICE_KEYS
            .iter()
            .copied()
            .filter(|k| !custom.contains(k))
            .collect();
        if !missing.is_empty() {
            return Err(constraint(format!(
                "custom device is missing {}",
                missing.join(", ")
            )));
        }
        let n = |k: &str| self.num(&format!("device.{k}")).expect("checked above");
        let geom = DeviceGeometry {
            beam_length: n("L_um") * 1e-6,
            beam_width: n("W_um") * 1e-6,
            beam_thickness: n("t_nm") * 1e-9,
            electrode_length: n("Le_um") * 1e-6,
            air_gap: n("g0_nm") * 1e-9,
            dielectric_thickness: n("td_nm") * 1e-9,
            dielectric_constant: n("eps_d"),
        };
        DeviceParams::calibrate(geom, n("vpi_V"), n("vpo_V")).map_err(|e| constraint(e.to_string()))
    }

    pub fn schedule(&self) -> ClockSchedule {
        let d = ClockSchedule::default();
        ClockSchedule {
            f_clk: self.num("amp.fclk_hz").unwrap_or(d.f_clk),
            non_overlap: self.num("amp.nonoverlap_frac").unwrap_or(d.non_overlap),
        }
    }

    pub fn amp_config(&self) -> Result<AmpConfig, CliError> {
        let device = self.device()?;
        let name = self.device_name();
        let topology = match self.text("amp.topology").unwrap_or("basic") {
            "basic" => Topology::Basic,
            "modified" => Topology::Modified,
            other => {
                return Err(constraint(format!(
                    "amp.topology must be basic or modified, got `{other}`"
                )))
            }
        };
        let m = self.num("amp.m").map_or(1, |m| m as usize);
        let mut cfg = match topology {
            Topology::Basic => AmpConfig::basic(&name, device),
            Topology::Modified => AmpConfig::modified(&name, device, m),
        };
        cfg.m = m;
        if let Some(t) = self.text("amp.drive_terminal") {
            cfg.drive_terminal = match t {
                "gate" => DriveTerminal::Gate,
                "body" => DriveTerminal::Body,
                other => {
                    return Err(constraint(format!(
                        "amp.drive_terminal must be gate or body, got `{other}`"
                    )))
                }
            };
        }
        if let Some(v) = self.num("amp.vdc_V") {
            cfg.v_dc = v;
        }
        cfg.schedule = self.schedule();
        let cgb = self.num("amp.cgb_fF");
        let cgc = self.num("amp.cgc_fF");
        if cgb.is_some() || cgc.is_some() {
            cfg.parasitics = Some(Parasitics {
                c_gb: cgb.unwrap_or(0.0) * 1e-15,
                c_gc: cgc.unwrap_or(0.0) * 1e-15,
            });
        }
        cfg.validate().map_err(|e| constraint(e.to_string()))?;
        Ok(cfg)
    }

    /// The configured input, or a 10 mV DC input if none is given.
    pub fn stimulus(&self) -> Result<Stimulus, CliError> {
        let amplitude = self.num("stimulus.amplitude_V").unwrap_or(10e-3);
        match self.text("stimulus.kind").unwrap_or("dc") {
            "dc" => Ok(Stimulus::Dc(amplitude)),
            "sine" => {
                let freq = self
                    .num("stimulus.freq_hz")
                    .ok_or_else(|| constraint("sine stimulus needs stimulus.freq_hz"))?;
                Ok(Stimulus::Sine { amplitude, freq })
            }
            other => Err(constraint(format!(
                "stimulus.kind must be dc or sine, got `{other}`"
            ))),
        }
    }

    /// Sweep amplitudes; defaults to 50 log-spaced points from 1 mV to 175 mV.
    pub fn amplitudes(&self) -> Vec<f64> {
        match self.entries.get("stimulus.amplitudes_V") {
            Some(Value::List(xs)) => xs.clone(),
            _ => default_amplitudes(),
        }
    }

    pub fn n_periods(&self) -> usize {
        self.num("run.n_periods").map_or(10, |n| n as usize)
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.text("run.out_dir").unwrap_or("out"))
    }

    pub fn islands_csv(&self) -> bool {
        self.flag("run.islands").unwrap_or(false)
    }

    pub fn cv_settings(&self, device: &DeviceParams) -> (f64, f64, usize) {
        (
            self.num("cv.v_start_V").unwrap_or(0.0),
            self.num("cv.v_end_V").unwrap_or(1.25 * device.pull_in),
            self.num("cv.n_points").map_or(501, |n| n as usize),
        )
    }

    pub fn transient_settings(&self, device: &DeviceParams) -> TransientSettings {
        TransientSettings {
            drive: self
                .num("transient.drive_V")
                .unwrap_or(1.2 * device.pull_in),
            pulse: self.num("transient.pulse_s"),
            t_end: self.num("transient.t_end_s").unwrap_or(5e-6),
            q_factor: self.num("transient.q_factor").unwrap_or(2.0),
            dt_max: self.num("transient.dt_max_s").unwrap_or(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientSettings {
    pub drive: f64,
    /// Drive switches off after this long, if set.
    pub pulse: Option<f64>,
    pub t_end: f64,
    pub q_factor: f64,
    pub dt_max: f64,
}

pub fn default_amplitudes() -> Vec<f64> {
    (0..50)
        .map(|i| 1e-3 * 175f64.powf(i as f64 / 49.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_setup() {
        let s = parse_scenario(
            "device.preset = \"large\"\namp.vdc_V = 10 # bias\namp.fclk_hz = 100e3\n",
        )
        .unwrap();
        let cfg = s.amp_config().unwrap();
        assert_eq!(cfg.v_dc, 10.0);
        assert_eq!(cfg.schedule.f_clk, 100e3);
        assert_eq!(cfg.topology, Topology::Basic);
    }

    #[test]
    fn empty_file() {
        let err = parse_scenario("").unwrap_err();
        assert!(matches!(err, CliError::Syntax { .. }));
        assert!(err.to_string().contains("missing device section"));
    }

    #[test]
    fn unknown_key_has_line() {
        let err = parse_scenario("device.preset = large\namp.vdc = 10\n").unwrap_err();
        assert_eq!(
            err,
            CliError::UnknownKey {
                line: 2,
                key: "amp.vdc".into()
            }
        );
    }

    #[test]
    fn zero_dielectric_is_unit_violation() {
        let text = "device.L_um = 5\ndevice.W_um = 1\ndevice.t_nm = 75\ndevice.Le_um = 4\n\
                    device.g0_nm = 50\ndevice.td_nm = 0\ndevice.eps_d = 7.6\ndevice.vpi_V = 3.8\ndevice.vpo_V = 2.4\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(
            matches!(err, CliError::UnitViolation { line: Some(6), .. }),
            "{err:?}"
        );
    }

    #[test]
    fn units_in_value_rejected() {
        let err = parse_scenario("device.preset = large\namp.vdc_V = 10V\n").unwrap_err();
        assert!(matches!(err, CliError::UnitViolation { line: Some(2), .. }));
    }

    #[test]
    fn low_bias_is_constraint_violation() {
        let err = parse_scenario("device.preset = large\namp.vdc_V = 5\n").unwrap_err();
        assert!(matches!(err, CliError::Constraint { .. }), "{err:?}");
    }

    #[test]
    fn bad_preset_and_syntax() {
        assert!(matches!(
            parse_scenario("device.preset = huge\n").unwrap_err(),
            CliError::Constraint { .. }
        ));
        assert!(matches!(
            parse_scenario("device.preset large\n").unwrap_err(),
            CliError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_scenario("device.preset = large\ndevice.preset = large\n").unwrap_err(),
            CliError::Syntax { line: 2, .. }
        ));
    }

    #[test]
    fn lists_and_round_trip() {
        let text = "device.preset = lv-high-gain\nstimulus.amplitudes_V = [1e-3, 2.5e-3, 0.01]\n\
                    run.deterministic = true\nrun.out_dir = \"out dir\"\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.amplitudes(), vec![1e-3, 2.5e-3, 0.01]);
        assert_eq!(parse_scenario(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn custom_device_matches_table() {
        let text = "device.L_um = 5\ndevice.W_um = 1\ndevice.t_nm = 75\ndevice.Le_um = 4\n\
                    device.g0_nm = 50\ndevice.td_nm = 10\ndevice.eps_d = 7.6\ndevice.vpi_V = 3.8\ndevice.vpo_V = 2.4\n";
        let d = parse_scenario(text).unwrap().device().unwrap();
        assert!((d.c_on * 1e15 - 26.9).abs() < 0.05);
    }
}
