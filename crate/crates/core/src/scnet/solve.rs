use serde::Serialize;

use super::islands::islands;
use super::network::{ElementKind, Network};
use super::sim::{ClockSchedule, Phase};
use crate::error::{Error, Result};
use crate::mech::{settle_voltage, state_capacitance, static_equilibrium_charge, BeamState};

/// Electrical and mechanical state carried from one segment to the next.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetState {
    pub node_voltages: Vec<f64>,
    /// Signed charge on the plate facing terminal `a` of each capacitor;
    /// zero for other elements.
    pub charges: Vec<f64>,
    /// Beam state of each NEMS capacitor; `None` for other elements.
    pub beams: Vec<Option<BeamState>>,
}

impl NetState {
    /// All nodes at 0 V, capacitors uncharged, beams at rest.
    pub fn initial(network: &Network) -> Self {
        NetState {
            node_voltages: vec![0.0; network.node_count()],
            charges: vec![0.0; network.elements().len()],
            beams: network
                .elements()
                .iter()
                .map(|e| match e.kind {
                    ElementKind::NemsCap { .. } => Some(BeamState::REST),
                    _ => None,
                })
                .collect(),
        }
    }
}

/// Where a segment sits in the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub index: usize,
    pub phase: Phase,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IslandReport {
    pub id: usize,
    pub nodes: Vec<usize>,
    pub pinned: bool,
    pub voltage: f64,
    /// Sum of plate charges facing the island.
    pub charge: f64,
    /// Capacitance from the island to everything outside it.
    pub capacitance: f64,
}

/// Charge of one floating island before and after a transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationCheck {
    pub island: usize,
    pub before: f64,
    pub after: f64,
    /// Charge scale the error is measured against.
    pub reference: f64,
}

impl ConservationCheck {
    pub const REL_TOL: f64 = 1e-15;

    pub fn relative_error(&self) -> f64 {
        if self.reference == 0.0 {
            return if self.after == self.before {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.after - self.before).abs() / self.reference
    }

    pub fn violated(&self) -> bool {
        self.relative_error() > Self::REL_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSolution {
    pub segment: Segment,
    pub state: NetState,
    pub conducting: Vec<bool>,
    pub islands: Vec<IslandReport>,
    pub conservation: Vec<ConservationCheck>,
    pub iterations: usize,
    /// NEMS capacitors that were released before this segment and latched
    /// during it while charge-controlled.
    pub latch_violations: Vec<usize>,
}

impl PhaseSolution {
    pub fn voltage(&self, node: usize) -> f64 {
        self.state.node_voltages[node]
    }
}

/// Solves one segment with a fixed switch configuration.
///
/// Pinned islands take their source voltage. Floating islands keep the
/// charge they held in `prior`; their voltages and the beams of the NEMS
/// capacitors touching them are found by a fixed-point loop: solve the
/// charge balance with the current capacitances, move every beam to its
/// charge-controlled equilibrium, recompute capacitances, repeat.
pub fn solve_phase(
    network: &Network,
    conducting: &[bool],
    segment: Segment,
    schedule: &ClockSchedule,
    prior: &NetState,
) -> Result<PhaseSolution> {
    let elements = network.elements();
    let isl = islands(network, conducting);
    let n_islands = isl.len();

    // pinned voltages
    let mut island_v = vec![0.0; n_islands];
    for (i, pins) in isl.pins.iter().enumerate() {
        let mut value: Option<f64> = None;
        for pin in pins {
            let v = match pin {
                None => 0.0,
                Some(idx) => match &elements[*idx].kind {
                    ElementKind::Source { waveform } => {
                        waveform.segment_value(segment.t_start, segment.t_end, schedule)
                    }
                    _ => unreachable!(),
                },
            };
            match value {
                None => value = Some(v),
                Some(prev) if (prev - v).abs() > 1e-12 * prev.abs().max(v.abs()).max(1.0) => {
                    return Err(Error::SourceConflict {
                        island: i,
                        a: prev,
                        b: v,
                    });
                }
                _ => {}
            }
        }
        if let Some(v) = value {
            island_v[i] = v;
        }
    }

    // charge carried into each island
    let mut q_before = vec![0.0; n_islands];
    let mut q_scale = vec![0.0f64; n_islands];
    for (idx, el) in elements.iter().enumerate() {
        if !el.is_capacitor() {
            continue;
        }
        let (ia, ib) = (isl.island_of[el.a.0], isl.island_of[el.b.0]);
        let q = prior.charges[idx];
        q_before[ia] += q;
        q_before[ib] -= q;
        q_scale[ia] = q_scale[ia].max(q.abs());
        q_scale[ib] = q_scale[ib].max(q.abs());
    }

    let floating: Vec<usize> = isl.floating().collect();
    let mut slot = vec![usize::MAX; n_islands];
    for (s, &i) in floating.iter().enumerate() {
        slot[i] = s;
    }
    let prior_island_v: Vec<f64> = isl
        .members
        .iter()
        .map(|m| prior.node_voltages[m[0]])
        .collect();

    // voltage-controlled beams settle once against their pinned terminals
    let mut beams = prior.beams.clone();
    let mut charge_controlled = Vec::new();
    for (idx, el) in elements.iter().enumerate() {
        let ElementKind::NemsCap { device } = &el.kind else {
            continue;
        };
        let (ia, ib) = (isl.island_of[el.a.0], isl.island_of[el.b.0]);
        if isl.is_pinned(ia) && isl.is_pinned(ib) {
            let prior_beam = prior.beams[idx].expect("nems cap has a beam");
            beams[idx] = Some(settle_voltage(
                device,
                &prior_beam,
                island_v[ia] - island_v[ib],
            )?);
        } else {
            charge_controlled.push(idx);
        }
    }

    let capacitances = |beams: &[Option<BeamState>]| -> Vec<f64> {
        elements
            .iter()
            .enumerate()
            .map(|(idx, el)| match &el.kind {
                ElementKind::NemsCap { device } => {
                    state_capacitance(device, beams[idx].as_ref().expect("nems cap has a beam"))
                }
                ElementKind::LinearCap { capacitance } => *capacitance,
                _ => 0.0,
            })
            .collect()
    };

    let solve_floating = |caps: &[f64], island_v: &mut [f64]| -> Result<()> {
        if floating.is_empty() {
            return Ok(());
        }
        let n = floating.len();
        let mut m = vec![vec![0.0; n]; n];
        let mut rhs: Vec<f64> = floating.iter().map(|&i| q_before[i]).collect();
        for (idx, el) in elements.iter().enumerate() {
            if !el.is_capacitor() {
                continue;
            }
            let c = caps[idx];
            let (ia, ib) = (isl.island_of[el.a.0], isl.island_of[el.b.0]);
            if ia == ib {
                continue;
            }
            for (this, other) in [(ia, ib), (ib, ia)] {
                let s = slot[this];
                if s == usize::MAX {
                    continue;
                }
                m[s][s] += c;
                if slot[other] == usize::MAX {
                    rhs[s] += c * island_v[other];
                } else {
                    m[s][slot[other]] -= c;
                }
            }
        }
        for (s, &i) in floating.iter().enumerate() {
            if m[s].iter().all(|&x| x == 0.0) {
                // no capacitance: the island keeps whatever voltage it had
                m[s][s] = 1.0;
                rhs[s] = prior_island_v[i];
            }
        }
        let v = solve_dense(m, rhs)?;
        for (s, &i) in floating.iter().enumerate() {
            island_v[i] = v[s];
        }
        Ok(())
    };

    let element_voltage = |idx: usize, island_v: &[f64]| -> f64 {
        let el = &elements[idx];
        island_v[isl.island_of[el.a.0]] - island_v[isl.island_of[el.b.0]]
    };

    let mut caps = capacitances(&beams);
    solve_floating(&caps, &mut island_v)?;
    let mut iterations = 0;
    if !charge_controlled.is_empty() {
        let mut damping = false;
        let mut last_delta = f64::INFINITY;
        let mut converged = false;
        while iterations < network.max_iterations {
            iterations += 1;
            for &idx in &charge_controlled {
                let ElementKind::NemsCap { device } = &elements[idx].kind else {
                    unreachable!()
                };
                let q = caps[idx] * element_voltage(idx, &island_v);
                let old = beams[idx].expect("nems cap has a beam");
                let mut new = static_equilibrium_charge(&device.geometry, device.spring_k, q);
                if damping && !old.latched && !new.latched {
                    new.x = 0.5 * (old.x + new.x);
                }
                beams[idx] = Some(new);
            }
            let previous = island_v.clone();
            caps = capacitances(&beams);
            solve_floating(&caps, &mut island_v)?;
            let delta = floating
                .iter()
                .map(|&i| (island_v[i] - previous[i]).abs())
                .fold(0.0, f64::max);
            let v_scale = island_v.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if delta <= network.solver_tol * v_scale || delta == 0.0 {
                converged = true;
                break;
            }
            if delta >= last_delta {
                damping = true;
            }
            last_delta = delta;
        }
        if !converged {
            let worst = floating
                .iter()
                .copied()
                .max_by(|a, b| island_v[*a].abs().total_cmp(&island_v[*b].abs()))
                .unwrap_or(0);
            return Err(Error::IslandNoConvergence {
                island: worst,
                residual: last_delta,
                iterations,
            });
        }
    }

    let mut charges = vec![0.0; elements.len()];
    for (idx, el) in elements.iter().enumerate() {
        if el.is_capacitor() {
            charges[idx] = caps[idx] * element_voltage(idx, &island_v);
        }
    }

    let mut q_after = vec![0.0; n_islands];
    let mut c_island = vec![0.0; n_islands];
    for (idx, el) in elements.iter().enumerate() {
        if !el.is_capacitor() {
            continue;
        }
        let (ia, ib) = (isl.island_of[el.a.0], isl.island_of[el.b.0]);
        q_after[ia] += charges[idx];
        q_after[ib] -= charges[idx];
        q_scale[ia] = q_scale[ia].max(charges[idx].abs());
        q_scale[ib] = q_scale[ib].max(charges[idx].abs());
        if ia != ib {
            c_island[ia] += caps[idx];
            c_island[ib] += caps[idx];
        }
    }

    let conservation = floating
        .iter()
        .map(|&i| ConservationCheck {
            island: i,
            before: q_before[i],
            after: q_after[i],
            reference: q_before[i].abs().max(q_scale[i]),
        })
        .collect();

    let latch_violations = charge_controlled
        .iter()
        .copied()
        .filter(|&idx| {
            let was = prior.beams[idx].is_some_and(|b| b.latched);
            let now = beams[idx].is_some_and(|b| b.latched);
            !was && now
        })
        .collect();

    let node_voltages = isl.island_of.iter().map(|&i| island_v[i]).collect();
    let island_reports = (0..n_islands)
        .map(|i| IslandReport {
            id: i,
            nodes: isl.members[i].clone(),
            pinned: isl.is_pinned(i),
            voltage: island_v[i],
            charge: q_after[i],
            capacitance: c_island[i],
        })
        .collect();

    Ok(PhaseSolution {
        segment,
        state: NetState {
            node_voltages,
            charges,
            beams,
        },
        conducting: conducting.to_vec(),
        islands: island_reports,
        conservation,
        iterations,
        latch_violations,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 || !m[pivot][col].is_finite() {
            return Err(Error::SingularIsland);
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scnet::{build_network, NetworkDescription, SwitchParams, Waveform};

    #[test]
    fn dense_solver() {
        let x = solve_dense(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_dense(vec![vec![0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn charge_sharing_identity() {
        // two equal caps charged to different voltages, then shorted
        let c = 2e-15;
        let desc = NetworkDescription::new("0")
            .node("a")
            .node("b")
            .node("clk")
            .source("vclk", "clk", Waveform::Dc(5.0))
            .linear_cap("c1", c, "a", "0")
            .linear_cap("c2", c, "b", "0")
            .switch("s", "a", "b", "clk", "0", SwitchParams::default());
        let net = build_network(&desc).unwrap();
        let mut prior = NetState::initial(&net);
        let (q1, q2) = (3e-15, -1e-15);
        prior.charges[net.element("c1").unwrap()] = q1;
        prior.charges[net.element("c2").unwrap()] = q2;
        let mut conducting = vec![false; net.elements().len()];
        conducting[net.element("s").unwrap()] = true;
        let seg = Segment {
            index: 0,
            phase: Phase::Hold,
            t_start: 0.0,
            t_end: 1e-6,
        };
        let sol = solve_phase(&net, &conducting, seg, &ClockSchedule::default(), &prior).unwrap();
        let v = (q1 + q2) / (2.0 * c);
        assert!((sol.voltage(1) - v).abs() < 1e-15);
        assert_eq!(sol.voltage(1), sol.voltage(2));
        assert!(sol.conservation.iter().all(|c| !c.violated()));
    }

    #[test]
    fn conflicting_sources() {
        let desc = NetworkDescription::new("0")
            .node("a")
            .node("b")
            .node("clk")
            .source("va", "a", Waveform::Dc(1.0))
            .source("vb", "b", Waveform::Dc(2.0))
            .source("vclk", "clk", Waveform::Dc(5.0))
            .switch("s", "a", "b", "clk", "0", SwitchParams::default());
        let net = build_network(&desc).unwrap();
        let mut conducting = vec![false; net.elements().len()];
        conducting[net.element("s").unwrap()] = true;
        let seg = Segment {
            index: 0,
            phase: Phase::Sample,
            t_start: 0.0,
            t_end: 1e-6,
        };
        let err = solve_phase(
            &net,
            &conducting,
            seg,
            &ClockSchedule::default(),
            &NetState::initial(&net),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SourceConflict { .. }));
    }
}
