use std::io::{self, Write};

use serde::Serialize;

use super::network::{ElementKind, Network, NodeId};
use super::solve::{solve_phase, NetState, PhaseSolution, Segment};
use super::switch::{step_switch, OhmicSwitchState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClockPhase {
    /// High during the sample phase.
    Clk,
    /// High during the hold phase.
    ClkB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sample,
    Hold,
    NonOverlap,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Sample => "sample",
            Phase::Hold => "hold",
            Phase::NonOverlap => "nonoverlap",
        }
    }
}

/// Two-phase non-overlapping clock. Within each period `T`, `CLK` is high
/// on `[0, T/2 - δ)` and `CLKB` on `[T/2, T - δ)`, with `δ = non_overlap·T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockSchedule {
    pub f_clk: f64,
    pub non_overlap: f64,
}

impl Default for ClockSchedule {
    fn default() -> Self {
        ClockSchedule {
            f_clk: 100e3,
            non_overlap: 0.01,
        }
    }
}

impl ClockSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_clk.is_finite() && self.f_clk > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "clock frequency must be positive, got {}",
                self.f_clk
            )));
        }
        if !(0.0..0.5).contains(&self.non_overlap) {
            return Err(Error::InvalidArgument(format!(
                "non-overlap fraction must be in [0, 0.5), got {}",
                self.non_overlap
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_clk
    }

    fn eps(&self) -> f64 {
        1e-9 * self.period()
    }

    /// Position inside the period; instants within `eps` before an edge
    /// count as already past it, so clocks read right-continuous.
    fn phase_time(&self, t: f64) -> f64 {
        let period = self.period();
        let tau = t - (t / period).floor() * period;
        if period - tau < self.eps() {
            0.0
        } else {
            tau
        }
    }

    pub fn is_high(&self, phase: ClockPhase, t: f64) -> bool {
        let period = self.period();
        let tau = self.phase_time(t) + self.eps();
        let delta = self.non_overlap * period;
        match phase {
            ClockPhase::Clk => tau < 0.5 * period - delta,
            ClockPhase::ClkB => tau >= 0.5 * period && tau < period - delta,
        }
    }

    pub fn phase_at(&self, t: f64) -> Phase {
        if self.is_high(ClockPhase::Clk, t) {
            Phase::Sample
        } else if self.is_high(ClockPhase::ClkB, t) {
            Phase::Hold
        } else {
            Phase::NonOverlap
        }
    }

    /// All clock edges in `[0, t_end)`, ascending and de-duplicated.
    pub fn edges(&self, t_end: f64) -> Vec<f64> {
        let period = self.period();
        let delta = self.non_overlap * period;
        let offsets = [0.0, 0.5 * period - delta, 0.5 * period, period - delta];
        let mut edges = Vec::new();
        let mut n = 0u64;
        loop {
            let base = n as f64 * period;
            if base >= t_end {
                break;
            }
            for off in offsets {
                let t = base + off;
                if t < t_end && edges.last().is_none_or(|&last| t - last > self.eps()) {
                    edges.push(t);
                }
            }
            n += 1;
        }
        edges
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SimWarning {
    /// `R_on·C_island` exceeds 1% of the segment: the ideal-short assumption
    /// does not hold.
    Settling {
        switch: String,
        t: f64,
        tau: f64,
        duration: f64,
    },
    /// A released beam re-latched while floating.
    LatchViolation { element: String, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub schedule: ClockSchedule,
    pub solutions: Vec<PhaseSolution>,
    pub warnings: Vec<SimWarning>,
}

impl Simulation {
    pub fn conservation_checks(&self) -> usize {
        self.solutions.iter().map(|s| s.conservation.len()).sum()
    }

    pub fn conservation_violations(&self) -> usize {
        self.solutions
            .iter()
            .flat_map(|s| s.conservation.iter())
            .filter(|c| c.violated())
            .count()
    }

    pub fn worst_conservation_error(&self) -> f64 {
        self.solutions
            .iter()
            .flat_map(|s| s.conservation.iter())
            .map(|c| c.relative_error())
            .fold(0.0, f64::max)
    }

    /// Zero-order-hold waveform of every non-ground node: one row per
    /// segment start plus a closing row at the end time.
    pub fn write_waveform_csv<W: Write>(&self, network: &Network, mut w: W) -> io::Result<()> {
        let names = &network.node_names()[1..];
        write!(w, "t_s,phase")?;
        for name in names {
            write!(w, ",v{name}_V")?;
        }
        writeln!(w)?;
        let row = |w: &mut W, t: f64, sol: &PhaseSolution| -> io::Result<()> {
            write!(w, "{t:.9e},{}", sol.segment.phase.as_str())?;
            for v in &sol.state.node_voltages[1..] {
                write!(w, ",{v:.9e}")?;
            }
            writeln!(w)
        };
        for sol in &self.solutions {
            row(&mut w, sol.segment.t_start, sol)?;
        }
        if let Some(last) = self.solutions.last() {
            row(&mut w, last.segment.t_end, last)?;
        }
        Ok(())
    }

    pub fn write_island_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_s,island_id,q_C,v_V")?;
        for sol in &self.solutions {
            for island in &sol.islands {
                writeln!(
                    w,
                    "{:.9e},{},{:.9e},{:.9e}",
                    sol.segment.t_start, island.id, island.charge, island.voltage
                )?;
            }
        }
        Ok(())
    }
}

/// Runs the network from the all-zero state over `[0, t_end]`.
pub fn simulate(network: &Network, schedule: &ClockSchedule, t_end: f64) -> Result<Simulation> {
    simulate_from(network, schedule, t_end, NetState::initial(network))
}

pub fn simulate_from(
    network: &Network,
    schedule: &ClockSchedule,
    t_end: f64,
    initial: NetState,
) -> Result<Simulation> {
    schedule.validate()?;
    let period = schedule.period();
    if !(t_end.is_finite() && t_end >= period * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "simulation span {t_end:e} s is shorter than one clock period ({period:e} s)"
        )));
    }
    let eps = 1e-9 * period;
    let edges = schedule.edges(t_end);
    let elements = network.elements();
    let switches: Vec<usize> = elements
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.kind, ElementKind::OhmicSwitch { .. }))
        .map(|(i, _)| i)
        .collect();
    let mut switch_states = vec![OhmicSwitchState::default(); elements.len()];

    let control = |node: NodeId, t: f64| network.driven_value(node, t, schedule).unwrap_or(0.0);

    let mut prior = initial;
    let mut solutions = Vec::new();
    let mut warnings = Vec::new();
    let mut next_edge = 0;
    let mut t = 0.0;
    while t < t_end - eps {
        for &idx in &switches {
            let ElementKind::OhmicSwitch { gate, body, params } = &elements[idx].kind else {
                unreachable!()
            };
            let v_gb = control(*gate, t) - control(*body, t);
            let settled = switch_states[idx].complete_due(t, eps);
            switch_states[idx] = step_switch(params, &settled, v_gb, t);
        }

        while next_edge < edges.len() && edges[next_edge] <= t + eps {
            next_edge += 1;
        }
        let mut t_next = t_end;
        if let Some(&e) = edges.get(next_edge) {
            t_next = t_next.min(e);
        }
        for &idx in &switches {
            if let Some(due) = switch_states[idx].next_due() {
                if due > t + eps {
                    t_next = t_next.min(due);
                }
            }
        }

        let conducting: Vec<bool> = (0..elements.len())
            .map(|i| switch_states[i].conducting)
            .collect();
        let segment = Segment {
            index: solutions.len(),
            phase: schedule.phase_at(t),
            t_start: t,
            t_end: t_next,
        };
        let sol = solve_phase(network, &conducting, segment, schedule, &prior).map_err(|e| {
            Error::InPhase {
                phase: segment.index,
                source: Box::new(e),
            }
        })?;

        let duration = t_next - t;
        for &idx in &switches {
            if !conducting[idx] {
                continue;
            }
            let ElementKind::OhmicSwitch { params, .. } = &elements[idx].kind else {
                unreachable!()
            };
            let island = sol
                .islands
                .iter()
                .find(|i| i.nodes.contains(&elements[idx].a.0))
                .expect("every node has an island");
            let tau = params.r_on * island.capacitance;
            if tau > 0.01 * duration {
                warnings.push(SimWarning::Settling {
                    switch: elements[idx].name.clone(),
                    t,
                    tau,
                    duration,
                });
            }
        }
        for &idx in &sol.latch_violations {
            warnings.push(SimWarning::LatchViolation {
                element: elements[idx].name.clone(),
                t,
            });
        }

        prior = sol.state.clone();
        solutions.push(sol);
        t = t_next;
    }

    Ok(Simulation {
        schedule: *schedule,
        solutions,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_levels() {
        let s = ClockSchedule::default();
        let t = s.period();
        assert!(s.is_high(ClockPhase::Clk, 0.0));
        assert!(!s.is_high(ClockPhase::ClkB, 0.0));
        assert!(!s.is_high(ClockPhase::Clk, 0.495 * t));
        assert_eq!(s.phase_at(0.495 * t), Phase::NonOverlap);
        assert!(s.is_high(ClockPhase::ClkB, 0.5 * t));
        assert_eq!(s.phase_at(0.995 * t), Phase::NonOverlap);
        assert!(s.is_high(ClockPhase::Clk, 3.0 * t));
    }

    #[test]
    fn edges_per_period() {
        let s = ClockSchedule::default();
        let e = s.edges(2.0 * s.period());
        assert_eq!(e.len(), 8);
        let no_gap = ClockSchedule {
            non_overlap: 0.0,
            ..s
        };
        assert_eq!(no_gap.edges(no_gap.period()).len(), 2);
    }

    #[test]
    fn rejects_bad_schedule() {
        assert!(ClockSchedule {
            f_clk: 0.0,
            non_overlap: 0.0
        }
        .validate()
        .is_err());
        assert!(ClockSchedule {
            f_clk: 1.0,
            non_overlap: 0.5
        }
        .validate()
        .is_err());
    }
}
