use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::Serialize;

use super::sim::{ClockPhase, ClockSchedule};
use super::switch::SwitchParams;
use crate::device::DeviceParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);
}

/// Voltage of an ideal source, relative to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Waveform {
    Dc(f64),
    Sine {
        offset: f64,
        amplitude: f64,
        freq: f64,
        phase: f64,
    },
    Clock {
        phase: ClockPhase,
        high: f64,
        low: f64,
    },
}

impl Waveform {
    /// Instantaneous value; clocks are right-continuous at their edges.
    pub fn value(&self, t: f64, schedule: &ClockSchedule) -> f64 {
        match *self {
            Waveform::Dc(v) => v,
            Waveform::Sine {
                offset,
                amplitude,
                freq,
                phase,
            } => offset + amplitude * (TAU * freq * t + phase).sin(),
            Waveform::Clock { phase, high, low } => {
                if schedule.is_high(phase, t) {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// Value seen by the network during `[t0, t1)`. Continuous waveforms are
    /// taken at the end of the segment, the instant a sampling switch opens;
    /// clocks are constant inside a segment and taken at its midpoint.
    pub fn segment_value(&self, t0: f64, t1: f64, schedule: &ClockSchedule) -> f64 {
        match self {
            Waveform::Clock { .. } => self.value(0.5 * (t0 + t1), schedule),
            _ => self.value(t1, schedule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ElementKind {
    NemsCap {
        device: DeviceParams,
    },
    LinearCap {
        capacitance: f64,
    },
    /// Channel between `a` and `b`, controlled by `V(gate) - V(body)`.
    OhmicSwitch {
        gate: NodeId,
        body: NodeId,
        params: SwitchParams,
    },
    /// Pins node `a` to the waveform; `b` is always ground.
    Source {
        waveform: Waveform,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub a: NodeId,
    pub b: NodeId,
}

impl Element {
    pub fn is_capacitor(&self) -> bool {
        matches!(
            self.kind,
            ElementKind::NemsCap { .. } | ElementKind::LinearCap { .. }
        )
    }
}

/// A validated switched-capacitor network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    nodes: Vec<String>,
    elements: Vec<Element>,
    /// Relative tolerance of the self-consistent capacitor loop.
    pub solver_tol: f64,
    pub max_iterations: usize,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name).map(NodeId)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    pub fn count(&self, pred: impl Fn(&ElementKind) -> bool) -> usize {
        self.elements.iter().filter(|e| pred(&e.kind)).count()
    }

    /// Source element driving `node`, if any.
    pub fn source_at(&self, node: NodeId) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| matches!(e.kind, ElementKind::Source { .. }) && e.a == node)
    }

    /// Value of a node that is pinned regardless of switch state (ground or
    /// a source node).
    pub fn driven_value(&self, node: NodeId, t: f64, schedule: &ClockSchedule) -> Option<f64> {
        if node == NodeId::GROUND {
            return Some(0.0);
        }
        self.source_at(node).map(|e| match &e.kind {
            ElementKind::Source { waveform } => waveform.value(t, schedule),
            _ => unreachable!(),
        })
    }
}

/// Element description referring to nodes by name.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementSpecKind {
    NemsCap {
        device: DeviceParams,
        a: String,
        b: String,
    },
    LinearCap {
        capacitance: f64,
        a: String,
        b: String,
    },
    OhmicSwitch {
        a: String,
        b: String,
        gate: String,
        body: String,
        params: SwitchParams,
    },
    Source {
        node: String,
        waveform: Waveform,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub name: String,
    pub kind: ElementSpecKind,
}

/// Unvalidated network description. Nodes are numbered in declaration
/// order, after ground.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkDescription {
    pub ground: Option<String>,
    pub nodes: Vec<String>,
    pub elements: Vec<ElementSpec>,
}

impl NetworkDescription {
    pub fn new(ground: &str) -> Self {
        NetworkDescription {
            ground: Some(ground.to_string()),
            ..Default::default()
        }
    }

    pub fn node(mut self, name: &str) -> Self {
        self.nodes.push(name.to_string());
        self
    }

    pub fn element(mut self, name: &str, kind: ElementSpecKind) -> Self {
        self.elements.push(ElementSpec {
            name: name.to_string(),
            kind,
        });
        self
    }

    pub fn nems_cap(self, name: &str, device: DeviceParams, a: &str, b: &str) -> Self {
        self.element(
            name,
            ElementSpecKind::NemsCap {
                device,
                a: a.into(),
                b: b.into(),
            },
        )
    }

    pub fn linear_cap(self, name: &str, capacitance: f64, a: &str, b: &str) -> Self {
        self.element(
            name,
            ElementSpecKind::LinearCap {
                capacitance,
                a: a.into(),
                b: b.into(),
            },
        )
    }

    pub fn switch(
        self,
        name: &str,
        a: &str,
        b: &str,
        gate: &str,
        body: &str,
        params: SwitchParams,
    ) -> Self {
        self.element(
            name,
            ElementSpecKind::OhmicSwitch {
                a: a.into(),
                b: b.into(),
                gate: gate.into(),
                body: body.into(),
                params,
            },
        )
    }

    pub fn source(self, name: &str, node: &str, waveform: Waveform) -> Self {
        self.element(
            name,
            ElementSpecKind::Source {
                node: node.into(),
                waveform,
            },
        )
    }
}

/// Validates a description and resolves node names.
pub fn build_network(desc: &NetworkDescription) -> Result<Network> {
    let ground = desc.ground.as_deref().ok_or(Error::NoGround)?;
    let mut nodes = vec![ground.to_string()];
    let mut index = HashMap::from([(ground.to_string(), 0usize)]);
    for name in &desc.nodes {
        if index.contains_key(name) {
            return Err(Error::InvalidArgument(format!("duplicate node `{name}`")));
        }
        index.insert(name.clone(), nodes.len());
        nodes.push(name.clone());
    }
    let resolve = |name: &str| {
        index
            .get(name)
            .map(|&i| NodeId(i))
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    };

    let mut seen = HashMap::new();
    let mut elements = Vec::with_capacity(desc.elements.len());
    for spec in &desc.elements {
        if seen.insert(spec.name.clone(), ()).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate element `{}`",
                spec.name
            )));
        }
        let (kind, a, b) = match &spec.kind {
            ElementSpecKind::NemsCap { device, a, b } => (
                ElementKind::NemsCap { device: *device },
                resolve(a)?,
                resolve(b)?,
            ),
            ElementSpecKind::LinearCap { capacitance, a, b } => {
                if !(capacitance.is_finite() && *capacitance > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "capacitor `{}` must be positive, got {capacitance:e}",
                        spec.name
                    )));
                }
                (
                    ElementKind::LinearCap {
                        capacitance: *capacitance,
                    },
                    resolve(a)?,
                    resolve(b)?,
                )
            }
            ElementSpecKind::OhmicSwitch {
                a,
                b,
                gate,
                body,
                params,
            } => (
                ElementKind::OhmicSwitch {
                    gate: resolve(gate)?,
                    body: resolve(body)?,
                    params: *params,
                },
                resolve(a)?,
                resolve(b)?,
            ),
            ElementSpecKind::Source { node, waveform } => {
                let n = resolve(node)?;
                if n == NodeId::GROUND {
                    return Err(Error::InvalidArgument(format!(
                        "source `{}` drives ground",
                        spec.name
                    )));
                }
                (
                    ElementKind::Source {
                        waveform: *waveform,
                    },
                    n,
                    NodeId::GROUND,
                )
            }
        };
        if a == b {
            return Err(Error::DanglingElement(spec.name.clone()));
        }
        elements.push(Element {
            name: spec.name.clone(),
            kind,
            a,
            b,
        });
    }

    let network = Network {
        nodes,
        elements,
        solver_tol: 1e-12,
        max_iterations: 10_000,
    };

    for el in &network.elements {
        if let ElementKind::Source { .. } = el.kind {
            let drivers = network
                .elements
                .iter()
                .filter(|e| matches!(e.kind, ElementKind::Source { .. }) && e.a == el.a)
                .count();
            if drivers > 1 {
                return Err(Error::InvalidArgument(format!(
                    "node `{}` driven by more than one source",
                    network.nodes[el.a.0]
                )));
            }
        }
        if let ElementKind::OhmicSwitch { gate, body, .. } = el.kind {
            for n in [gate, body] {
                if n != NodeId::GROUND && network.source_at(n).is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "switch `{}` control node `{}` is not driven",
                        el.name, network.nodes[n.0]
                    )));
                }
            }
        }
    }
    Ok(network)
}

/// Which terminal of the ohmic switches receives the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTerminal {
    Gate,
    Body,
}

impl DriveTerminal {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveTerminal::Gate => "gate",
            DriveTerminal::Body => "body",
        }
    }
}

/// Adds gate-body (`c_gb`) and gate-channel (`c_gc`) parasitics to every
/// ohmic switch. The gate-channel capacitance is split equally between the
/// two channel terminals.
///
/// With `Body` drive the clock is moved from the gate to the body and the
/// gate is tied to the former body node, so the gate-channel parasitics load
/// the signal nodes against a static node instead of the clock.
pub fn apply_parasitics(
    network: &Network,
    c_gb: f64,
    c_gc: f64,
    drive: DriveTerminal,
) -> Result<Network> {
    if !(c_gb >= 0.0 && c_gc >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "parasitic capacitances must be non-negative, got {c_gb:e} / {c_gc:e}"
        )));
    }
    let mut out = network.clone();
    let mut extra = Vec::new();
    for el in out.elements.iter_mut() {
        let ElementKind::OhmicSwitch { gate, body, .. } = &mut el.kind else {
            continue;
        };
        if drive == DriveTerminal::Body {
            std::mem::swap(gate, body);
        }
        let (g, b) = (*gate, *body);
        let mut add = |suffix: &str, c: f64, x: NodeId, y: NodeId| {
            if c > 0.0 && x != y {
                extra.push(Element {
                    name: format!("{}.{suffix}", el.name),
                    kind: ElementKind::LinearCap { capacitance: c },
                    a: x,
                    b: y,
                });
            }
        };
        add("cgb", c_gb, g, b);
        add("cgc_a", 0.5 * c_gc, el.a, g);
        add("cgc_b", 0.5 * c_gc, el.b, g);
    }
    out.elements.extend(extra);
    Ok(out)
}
