use serde::Serialize;

/// Behavioral NEM relay: conducts once `|V_GB|` exceeds pull-in, stops once
/// it falls below pull-out, each transition taking `t_sw` to complete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchParams {
    pub pull_in: f64,
    pub pull_out: f64,
    pub r_on: f64,
    pub t_sw: f64,
}

impl Default for SwitchParams {
    /// Thresholds of the low-voltage high-gain capacitive device, 1 kΩ on
    /// resistance and a 100 ns mechanical delay.
    fn default() -> Self {
        SwitchParams {
            pull_in: 3.8,
            pull_out: 2.4,
            r_on: 1e3,
            t_sw: 100e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PendingTransition {
    pub to: bool,
    pub at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OhmicSwitchState {
    pub conducting: bool,
    pub last_transition_time: f64,
    pub pending: Option<PendingTransition>,
}

impl Default for OhmicSwitchState {
    fn default() -> Self {
        OhmicSwitchState {
            conducting: false,
            last_transition_time: 0.0,
            pending: None,
        }
    }
}

impl OhmicSwitchState {
    /// Time of the next scheduled transition, if any.
    pub fn next_due(&self) -> Option<f64> {
        self.pending.map(|p| p.at)
    }

    /// Completes a pending transition due within `tol` of `t`, so a
    /// transition that lands on a clock edge is not lost to rounding.
    pub fn complete_due(&self, t: f64, tol: f64) -> OhmicSwitchState {
        let mut s = *self;
        if let Some(p) = s.pending {
            if p.at <= t + tol {
                apply_due(&mut s, p.at.max(t));
            }
        }
        s
    }
}

fn apply_due(state: &mut OhmicSwitchState, t: f64) {
    if let Some(p) = state.pending {
        if t >= p.at {
            state.conducting = p.to;
            state.last_transition_time = p.at;
            state.pending = None;
        }
    }
}

/// Advances the switch to time `t` under gate-body voltage `v_gb`. Time must
/// be non-decreasing across calls.
pub fn step_switch(
    params: &SwitchParams,
    state: &OhmicSwitchState,
    v_gb: f64,
    t: f64,
) -> OhmicSwitchState {
    let mut s = *state;
    apply_due(&mut s, t);

    let target = s.pending.map_or(s.conducting, |p| p.to);
    let wants_on = if target {
        v_gb.abs() >= params.pull_out
    } else {
        v_gb.abs() > params.pull_in
    };
    if wants_on != target {
        if wants_on == s.conducting {
            s.pending = None;
        } else {
            s.pending = Some(PendingTransition {
                to: wants_on,
                at: t + params.t_sw,
            });
        }
    }
    apply_due(&mut s, t);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bias_is_open() {
        let p = SwitchParams::default();
        let s = step_switch(&p, &OhmicSwitchState::default(), 0.0, 0.0);
        assert!(!s.conducting && s.pending.is_none());
    }

    #[test]
    fn ramp_turns_on_after_delay() {
        let p = SwitchParams::default();
        let mut s = OhmicSwitchState::default();
        let mut t = 0.0;
        let mut turned_on = None;
        let mut crossed = None;
        while t < 2e-6 {
            let v = 5.0 * t / 1e-6;
            if crossed.is_none() && v > p.pull_in {
                crossed = Some(t);
            }
            s = step_switch(&p, &s, v, t);
            if s.conducting && turned_on.is_none() {
                turned_on = Some(t);
            }
            t += 1e-9;
        }
        let delay = turned_on.unwrap() - crossed.unwrap();
        assert!((delay - p.t_sw).abs() < 2e-9, "delay {delay}");
        assert!((s.last_transition_time - crossed.unwrap() - p.t_sw).abs() < 1e-12);
    }

    #[test]
    fn falls_below_pullout_turns_off() {
        let p = SwitchParams::default();
        let on = OhmicSwitchState {
            conducting: true,
            ..Default::default()
        };
        // inside the hysteresis window: stays on
        let s = step_switch(&p, &on, 3.0, 1.0);
        assert!(s.conducting && s.pending.is_none());
        let s = step_switch(&p, &on, 1.0, 1.0);
        assert!(s.conducting);
        let s = step_switch(&p, &s, 1.0, 1.0 + p.t_sw);
        assert!(!s.conducting);
    }

    #[test]
    fn glitch_cancels_pending() {
        let p = SwitchParams::default();
        let s = step_switch(&p, &OhmicSwitchState::default(), 5.0, 0.0);
        assert!(s.pending.is_some());
        let s = step_switch(&p, &s, 0.0, 50e-9);
        assert!(s.pending.is_none() && !s.conducting);
    }

    #[test]
    fn negative_bias_conducts() {
        let p = SwitchParams {
            t_sw: 0.0,
            ..Default::default()
        };
        let s = step_switch(&p, &OhmicSwitchState::default(), -5.0, 0.0);
        assert!(s.conducting);
    }
}
