//! Lumped thermal network built over the pack tree.
//!
//! Every simulated cell is a node. Closed groups own an air node cooled by
//! their own fan, and the root of the tree owns the container node, which
//! exchanges heat with a fixed-temperature environment through a passive
//! leak and the air-conditioning sink. Convective links take their
//! coefficient from the fan serving them, so fan commands change the
//! network every step.

use serde::{Deserialize, Serialize};

use crate::ancillary::fan_convection;
use crate::pack_topology::{GroupKind, Unit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoolingMode {
    /// Outside air is blown through the container.
    DirectAir,
    /// A heat pump moves heat to the environment.
    Chiller,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    /// Ambient temperature (K).
    pub temperature: f64,
    pub mode: CoolingMode,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            temperature: crate::celsius(15.0),
            mode: CoolingMode::DirectAir,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParameter {
                name: "environment.temperature".into(),
                reason: format!("must be positive, got {}", self.temperature),
            });
        }
        Ok(())
    }
}

/// Coefficients of the network. Conduction coefficients are order-of-
/// magnitude estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    /// Conduction between adjacent cells of a block (W/(m^2 K)).
    pub cell_cell_h: f64,
    /// Conduction from the first and last cell of a block to its wall (W/(m^2 K)).
    pub cell_wall_h: f64,
    /// Heat capacity of a closed group's air and structure, per cell (J/K).
    pub group_capacity_per_cell: f64,
    /// Heat capacity of the container air and structure, per cell (J/K).
    pub container_capacity_per_cell: f64,
    /// Outer surface of a closed group's enclosure, per cell (m^2).
    pub enclosure_area_per_cell: f64,
    /// Passive conductance of the container shell to the environment, per cell (W/K).
    pub leak_per_cell: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            cell_cell_h: 30.0,
            cell_wall_h: 60.0,
            group_capacity_per_cell: 300.0,
            container_capacity_per_cell: 100.0,
            enclosure_area_per_cell: 0.002,
            leak_per_cell: 0.02,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("cell_cell_h", self.cell_cell_h, false),
            ("cell_wall_h", self.cell_wall_h, false),
            ("group_capacity_per_cell", self.group_capacity_per_cell, true),
            ("container_capacity_per_cell", self.container_capacity_per_cell, true),
            ("enclosure_area_per_cell", self.enclosure_area_per_cell, false),
            ("leak_per_cell", self.leak_per_cell, false),
        ];
        for (name, v, strict) in checks {
            let ok = if strict { v > 0.0 } else { v >= 0.0 } && v.is_finite();
            if !ok {
                return Err(Error::InvalidParameter {
                    name: format!("thermal.{name}"),
                    reason: format!("got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Simulated cell with its depth-first index.
    Cell(usize),
    /// Air of a closed group.
    GroupAir(String),
    Container,
    /// Fixed-temperature boundary.
    Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalNode {
    pub id: usize,
    pub kind: NodeKind,
    pub temperature: f64,
    /// J/K; infinite for the environment.
    pub heat_capacity: f64,
    /// Heat injected during the current step (W).
    pub generated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Fixed(f64),
    /// Convective coefficient of the given fan.
    Fan(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub area: f64,
    pub coefficient: Coefficient,
}

/// A fan and the part of the tree behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanSite {
    /// Air node the fan circulates.
    pub node: usize,
    /// Represented cells served, used to size the fan.
    pub cells_served: usize,
    /// Cell nodes behind the fan, for hot-spot detection.
    pub cell_nodes: Vec<usize>,
    /// Air speed applied this step (m/s).
    pub speed: f64,
    #[serde(skip)]
    h: f64,
}

impl FanSite {
    pub fn convection(&self) -> f64 {
        self.h
    }
}

/// Energy accounting of one exchange step (J).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatLedger {
    pub generated: f64,
    /// Heat lost through the passive container shell.
    pub leaked: f64,
    /// Heat removed by the air-conditioning sink.
    pub removed: f64,
    /// Change of stored thermal energy.
    pub stored: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalNetwork {
    pub nodes: Vec<ThermalNode>,
    pub links: Vec<Link>,
    pub fans: Vec<FanSite>,
    /// Node of every simulated cell, in depth-first cell order.
    pub cell_nodes: Vec<usize>,
    /// Node receiving the contact heat of every group, in pre-order.
    pub group_heat_nodes: Vec<usize>,
    pub container: usize,
    pub environment: usize,
    /// Heat extracted from the container node this step (W).
    pub sink: f64,
}

struct Builder<'a> {
    net: ThermalNetwork,
    params: &'a ThermalParams,
    cell_area: f64,
    cell_capacity: f64,
}

impl<'a> Builder<'a> {
    fn add_node(&mut self, kind: NodeKind, capacity: f64, t: f64) -> usize {
        let id = self.net.nodes.len();
        self.net.nodes.push(ThermalNode {
            id,
            kind,
            temperature: t,
            heat_capacity: capacity,
            generated: 0.0,
        });
        id
    }

    fn link(&mut self, a: usize, b: usize, area: f64, coefficient: Coefficient) -> usize {
        self.net.links.push(Link { a, b, area, coefficient });
        self.net.links.len() - 1
    }

    /// Visits `unit` whose cooling air is `air` with fan `fan`; returns the
    /// cell nodes created underneath.
    fn visit(&mut self, unit: &Unit, air: usize, fan: usize, t0: f64) -> Vec<usize> {
        match unit {
            Unit::Cell(c) => {
                let n = self.add_node(NodeKind::Cell(c.index), self.cell_capacity, t0);
                self.net.cell_nodes.push(n);
                self.link(n, air, self.cell_area, Coefficient::Fan(fan));
                vec![n]
            }
            Unit::Scaled(s) => {
                let k = (s.series * s.parallel) as f64;
                let n = self.add_node(NodeKind::Cell(s.inner.index), self.cell_capacity * k, t0);
                self.net.cell_nodes.push(n);
                self.link(n, air, self.cell_area * k, Coefficient::Fan(fan));
                vec![n]
            }
            Unit::Group(g) => {
                let group_slot = self.net.group_heat_nodes.len();
                self.net.group_heat_nodes.push(air);
                let (own_air, own_fan) = if g.closed {
                    let cells = unit.represented_cells();
                    let node = self.add_node(
                        NodeKind::GroupAir(g.label.clone()),
                        self.params.group_capacity_per_cell * cells as f64,
                        t0,
                    );
                    let area = self.params.enclosure_area_per_cell * cells as f64;
                    self.link(node, air, area, Coefficient::Fan(fan));
                    self.net.fans.push(FanSite {
                        node,
                        cells_served: cells,
                        cell_nodes: Vec::new(),
                        speed: 0.0,
                        h: fan_convection(0.0).unwrap_or(0.0),
                    });
                    self.net.group_heat_nodes[group_slot] = node;
                    (node, self.net.fans.len() - 1)
                } else {
                    (air, fan)
                };
                let mut cells = Vec::new();
                let mut direct = Vec::new();
                for child in &g.children {
                    let sub = self.visit(child, own_air, own_fan, t0);
                    if matches!(child, Unit::Cell(_) | Unit::Scaled(_)) {
                        direct.push(sub[0]);
                    }
                    cells.extend(sub);
                }
                if g.kind == GroupKind::Parallel && direct.len() == g.children.len() {
                    for w in direct.windows(2) {
                        self.link(w[0], w[1], self.cell_area, Coefficient::Fixed(self.params.cell_cell_h));
                    }
                    let ends = [direct[0], direct[direct.len() - 1]];
                    for e in ends {
                        self.link(e, own_air, self.cell_area, Coefficient::Fixed(self.params.cell_wall_h));
                    }
                }
                if g.closed {
                    self.net.fans[own_fan].cell_nodes = cells.clone();
                }
                cells
            }
        }
    }
}

impl ThermalNetwork {
    /// Coupled network for the whole tree, all nodes starting at `t0`.
    pub fn coupled(root: &Unit, params: &ThermalParams, cell_area: f64, cell_capacity: f64, t0: f64, env: &Environment) -> Result<Self> {
        params.validate()?;
        env.validate()?;
        let total = root.represented_cells();
        let mut b = Builder {
            net: ThermalNetwork {
                nodes: Vec::new(),
                links: Vec::new(),
                fans: Vec::new(),
                cell_nodes: Vec::new(),
                group_heat_nodes: Vec::new(),
                container: 0,
                environment: 0,
                sink: 0.0,
            },
            params,
            cell_area,
            cell_capacity,
        };
        let container = b.add_node(NodeKind::Container, params.container_capacity_per_cell * total as f64, t0);
        let environment = b.add_node(NodeKind::Environment, f64::INFINITY, env.temperature);
        b.net.container = container;
        b.net.environment = environment;
        b.net.fans.push(FanSite {
            node: container,
            cells_served: total,
            cell_nodes: Vec::new(),
            speed: 0.0,
            h: fan_convection(0.0)?,
        });
        b.link(container, environment, total as f64, Coefficient::Fixed(params.leak_per_cell));
        let cells = b.visit(root, container, 0, t0);
        b.net.fans[0].cell_nodes = cells;
        Ok(b.net)
    }

    /// Each cell cooled by still air at ambient temperature, no coupling.
    pub fn individual(root: &Unit, cell_area: f64, cell_capacity: f64, t0: f64, env: &Environment) -> Result<Self> {
        env.validate()?;
        let mut net = ThermalNetwork {
            nodes: Vec::new(),
            links: Vec::new(),
            fans: Vec::new(),
            cell_nodes: Vec::new(),
            group_heat_nodes: Vec::new(),
            container: 0,
            environment: 0,
            sink: 0.0,
        };
        net.nodes.push(ThermalNode {
            id: 0,
            kind: NodeKind::Environment,
            temperature: env.temperature,
            heat_capacity: f64::INFINITY,
            generated: 0.0,
        });
        let h0 = fan_convection(0.0)?;
        let mut cells = Vec::new();
        root.for_each_cell_unit(&mut |c| cells.push(c.index));
        let mut counts = Vec::new();
        collect_counts(root, &mut counts);
        for (idx, k) in cells.into_iter().zip(counts) {
            let id = net.nodes.len();
            net.nodes.push(ThermalNode {
                id,
                kind: NodeKind::Cell(idx),
                temperature: t0,
                heat_capacity: cell_capacity * k as f64,
                generated: 0.0,
            });
            net.cell_nodes.push(id);
            net.links.push(Link {
                a: id,
                b: 0,
                area: cell_area * k as f64,
                coefficient: Coefficient::Fixed(h0),
            });
        }
        let mut groups = 0;
        root.for_each_group(&mut |_| groups += 1);
        net.group_heat_nodes = vec![0; groups];
        Ok(net)
    }

    pub fn has_container(&self) -> bool {
        matches!(self.nodes[self.container].kind, NodeKind::Container)
    }

    /// Sets the air speed of a fan and its convective coefficient.
    pub fn set_fan_speed(&mut self, fan: usize, speed: f64) -> Result<()> {
        let h = fan_convection(speed)?;
        let site = &mut self.fans[fan];
        site.speed = speed;
        site.h = h;
        Ok(())
    }

    /// Recomputes cached coefficients after deserialisation.
    pub fn relink(&mut self) -> Result<()> {
        for f in self.fans.iter_mut() {
            f.h = fan_convection(f.speed)?;
        }
        Ok(())
    }

    pub fn conductance(&self, link: &Link) -> f64 {
        let h = match link.coefficient {
            Coefficient::Fixed(h) => h,
            Coefficient::Fan(f) => self.fans[f].h,
        };
        h * link.area
    }

    pub fn cell_temperature(&self, k: usize) -> f64 {
        self.nodes[self.cell_nodes[k]].temperature
    }

    pub fn max_cell_temperature(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&n| self.nodes[n].temperature).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn clear_generation(&mut self) {
        for n in self.nodes.iter_mut() {
            n.generated = 0.0;
        }
        self.sink = 0.0;
    }

    /// Largest step the explicit update accepts.
    pub fn stability_bound(&self) -> f64 {
        let mut sum = vec![0.0; self.nodes.len()];
        for l in &self.links {
            let g = self.conductance(l);
            sum[l.a] += g;
            sum[l.b] += g;
        }
        self.nodes
            .iter()
            .zip(&sum)
            .filter(|(n, s)| n.heat_capacity.is_finite() && **s > 0.0)
            .map(|(n, s)| 0.1 * n.heat_capacity / s)
            .fold(f64::INFINITY, f64::min)
    }

    fn thermal_energy(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.heat_capacity.is_finite())
            .map(|n| n.heat_capacity * n.temperature)
            .sum()
    }

    /// One explicit step over a frozen snapshot of temperatures.
    pub fn exchange_step(&mut self, dt: f64) -> Result<HeatLedger> {
        let bound = self.stability_bound();
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::ThermalStability { dt, bound });
        }
        let before = self.thermal_energy();
        let mut flow = vec![0.0; self.nodes.len()];
        let mut leaked = 0.0;
        let env = self.environment;
        for l in &self.links {
            let q = self.conductance(l) * (self.nodes[l.a].temperature - self.nodes[l.b].temperature);
            flow[l.a] -= q;
            flow[l.b] += q;
            if l.b == env {
                leaked += q * dt;
            } else if l.a == env {
                leaked -= q * dt;
            }
        }
        let mut generated = 0.0;
        let sink = self.sink;
        let container = self.container;
        let has_container = self.has_container();
        for (i, n) in self.nodes.iter_mut().enumerate() {
            if !n.heat_capacity.is_finite() {
                continue;
            }
            generated += n.generated * dt;
            let mut q = n.generated + flow[i];
            if has_container && i == container {
                q -= sink;
            }
            n.temperature += q * dt / n.heat_capacity;
        }
        let removed = if has_container { sink * dt } else { 0.0 };
        Ok(HeatLedger {
            generated,
            leaked,
            removed,
            stored: self.thermal_energy() - before,
        })
    }

    /// Advances by `dt`, splitting into equal sub-steps that respect the
    /// stability bound. Generation and sink are held over the interval.
    pub fn advance(&mut self, dt: f64) -> Result<HeatLedger> {
        let bound = self.stability_bound();
        let n = if dt <= bound { 1 } else { (dt / bound).ceil() as usize };
        let h = dt / n as f64;
        let mut total = HeatLedger::default();
        for _ in 0..n {
            let l = self.exchange_step(h)?;
            total.generated += l.generated;
            total.leaked += l.leaked;
            total.removed += l.removed;
            total.stored += l.stored;
        }
        Ok(total)
    }
}

fn collect_counts(u: &Unit, out: &mut Vec<usize>) {
    match u {
        Unit::Cell(_) => out.push(1),
        Unit::Scaled(s) => out.push(s.series * s.parallel),
        Unit::Group(g) => g.children.iter().for_each(|c| collect_counts(c, out)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_model::{Cell, CellParams};
    use crate::pack_topology::{PiGains, TopologySpec};

    fn tree(spec: &TopologySpec) -> Unit {
        spec.build(&PiGains::default(), &mut |_| Cell::with_shipped_tables(CellParams::default(), 298.15))
            .unwrap()
    }

    fn module_net() -> ThermalNetwork {
        let u = tree(&TopologySpec::module(3, 4, 0.0, 0.0));
        ThermalNetwork::coupled(&u, &ThermalParams::default(), 0.05, 370.0, 300.0, &Environment::default()).unwrap()
    }

    #[test]
    fn equilibrium_is_preserved() {
        let mut net = module_net();
        for n in net.nodes.iter_mut() {
            n.temperature = 290.0;
        }
        net.advance(50.0).unwrap();
        assert!(net.nodes.iter().all(|n| n.temperature == 290.0));
    }

    #[test]
    fn links_and_structure() {
        let net = module_net();
        assert_eq!(net.cell_nodes.len(), 12);
        // container fan and one module fan
        assert_eq!(net.fans.len(), 2);
        assert_eq!(net.fans[1].cell_nodes.len(), 12);
        // 3 adjacency links per 4-cell block
        let adjacency = net.links.iter().filter(|l| l.coefficient == Coefficient::Fixed(30.0)).count();
        assert_eq!(adjacency, 9);
    }

    #[test]
    fn energy_balance_with_generation_and_sink() {
        let mut net = module_net();
        net.set_fan_speed(1, 8.0).unwrap();
        for (k, &n) in net.cell_nodes.clone().iter().enumerate() {
            net.nodes[n].generated = 0.3 + 0.05 * k as f64;
        }
        let c = net.container;
        net.nodes[c].generated = 2.0;
        net.sink = 1.5;
        let mut l = HeatLedger::default();
        for _ in 0..100 {
            let s = net.advance(10.0).unwrap();
            l.generated += s.generated;
            l.leaked += s.leaked;
            l.removed += s.removed;
            l.stored += s.stored;
        }
        let residual = l.generated - l.stored - l.leaked - l.removed;
        assert!(residual.abs() <= 1e-6 * l.generated, "{residual}");
    }

    #[test]
    fn two_node_closed_system_conserves_energy() {
        let mut net = ThermalNetwork {
            nodes: vec![
                ThermalNode { id: 0, kind: NodeKind::Cell(0), temperature: 310.0, heat_capacity: 370.0, generated: 0.0 },
                ThermalNode { id: 1, kind: NodeKind::Cell(1), temperature: 290.0, heat_capacity: 500.0, generated: 0.0 },
            ],
            links: vec![Link { a: 0, b: 1, area: 0.05, coefficient: Coefficient::Fixed(30.0) }],
            fans: Vec::new(),
            cell_nodes: vec![0, 1],
            group_heat_nodes: Vec::new(),
            container: 0,
            environment: 0,
            sink: 0.0,
        };
        let e0 = net.thermal_energy();
        net.advance(3600.0).unwrap();
        assert!(((net.thermal_energy() - e0) / e0).abs() < 1e-9);
        assert!(net.nodes[0].temperature > net.nodes[1].temperature);
    }

    #[test]
    fn maximum_principle_without_generation() {
        let mut net = module_net();
        for (k, n) in net.nodes.iter_mut().enumerate() {
            if n.heat_capacity.is_finite() {
                n.temperature = 285.0 + (k % 7) as f64 * 3.0;
            }
        }
        net.nodes[net.environment].temperature = 290.0;
        let lo = net.nodes.iter().map(|n| n.temperature).fold(f64::INFINITY, f64::min);
        let hi = net.nodes.iter().map(|n| n.temperature).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            net.advance(20.0).unwrap();
            for n in &net.nodes {
                assert!(n.temperature >= lo - 1e-12 && n.temperature <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn mirrored_block_gives_mirrored_profile() {
        let u = tree(&TopologySpec::block(5, 0.0));
        let mut net = ThermalNetwork::coupled(&u, &ThermalParams::default(), 0.05, 370.0, 300.0, &Environment::default()).unwrap();
        let gen = [0.9, 0.2, 0.5, 0.2, 0.9];
        for _ in 0..50 {
            for (k, g) in gen.iter().enumerate() {
                let n = net.cell_nodes[k];
                net.nodes[n].generated = *g;
            }
            net.advance(30.0).unwrap();
        }
        for k in 0..2 {
            let a = net.cell_temperature(k);
            let b = net.cell_temperature(4 - k);
            assert!((a - b).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mut net = module_net();
        let bound = net.stability_bound();
        assert!(matches!(net.exchange_step(bound * 2.0), Err(Error::ThermalStability { .. })));
        assert!(net.exchange_step(bound).is_ok());
    }
}
