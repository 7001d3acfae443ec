//! Series/parallel trees of cells with contact resistances.
//!
//! Units follow the same three-phase step as a single cell: `prepare`,
//! any number of `trial` evaluations at candidate currents, then `commit`.
//! A trial of a parallel group runs its current-split controller, so a trial
//! at the root resolves the electrical state of the whole tree.

pub mod parallel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell_model::{Cell, StepReport};
use crate::{Error, Result};
pub use parallel::{PiGains, PiState};

/// Voltage and small-signal slope of a unit at a trial current.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trial {
    pub current: f64,
    pub voltage: f64,
    /// `dV/dI` (Ohm), negative for a passive unit.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Series,
    Parallel,
}

/// One simulated cell and its position in the pack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellUnit {
    pub cell: Cell,
    /// Depth-first index of the cell within the pack.
    pub index: usize,
    #[serde(skip)]
    trial: Option<(f64, f64)>,
    #[serde(skip)]
    pub last: Option<StepReport>,
    pub current: f64,
    pub voltage: f64,
}

/// A single simulated cell standing in for `series x parallel` identical
/// cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledUnit {
    pub inner: CellUnit,
    pub series: usize,
    pub parallel: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Group {
    pub kind: GroupKind,
    pub label: String,
    pub children: Vec<Unit>,
    /// Contact resistance in front of each child (Ohm).
    pub contact_r: Vec<f64>,
    pub pi: Option<PiState>,
    /// Whether the group is enclosed and cooled by its own fan.
    pub closed: bool,
    /// Committed child currents of the last step.
    pub split: Vec<f64>,
    shares: Vec<f64>,
    model_cells: usize,
    dt: f64,
    #[serde(skip)]
    trial: Option<(Trial, Vec<f64>, Vec<f64>)>,
    pub current: f64,
    pub voltage: f64,
    /// Contact loss of the last committed step (W).
    pub contact_loss: f64,
    /// Worst relative path-voltage disagreement of the last committed step.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Unit {
    Cell(CellUnit),
    Scaled(ScaledUnit),
    Group(Group),
}

/// Aggregated outcome of committing one step over a subtree. Powers are in
/// W and already multiplied out for scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommitTotals {
    pub cell_ohmic: f64,
    pub cell_reaction: f64,
    pub cell_heat: f64,
    pub stored: f64,
    pub contact: f64,
    /// Sum over represented cells of `|I|` (A).
    pub abs_current: f64,
    pub sei_mol: f64,
    pub lam_mol: f64,
    pub end_of_life: bool,
}

impl CommitTotals {
    fn add(&mut self, o: &CommitTotals) {
        self.cell_ohmic += o.cell_ohmic;
        self.cell_reaction += o.cell_reaction;
        self.cell_heat += o.cell_heat;
        self.stored += o.stored;
        self.contact += o.contact;
        self.abs_current += o.abs_current;
        self.sei_mol += o.sei_mol;
        self.lam_mol += o.lam_mol;
        self.end_of_life |= o.end_of_life;
    }

    fn scaled(&self, k: f64) -> CommitTotals {
        CommitTotals {
            cell_ohmic: self.cell_ohmic * k,
            cell_reaction: self.cell_reaction * k,
            cell_heat: self.cell_heat * k,
            stored: self.stored * k,
            contact: self.contact * k,
            abs_current: self.abs_current * k,
            sei_mol: self.sei_mol * k,
            lam_mol: self.lam_mol * k,
            end_of_life: self.end_of_life,
        }
    }
}

/// Groups whose children hold at least this many simulated cells each are
/// stepped on the thread pool.
const PARALLEL_GRAIN: usize = 48;

pub(crate) fn map_children<T, F>(children: &mut [Unit], par: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Unit, usize) -> T + Sync + Send,
{
    let heavy = children.len() > 1 && children.iter().all(|c| c.model_cells() >= PARALLEL_GRAIN);
    if par && heavy {
        children.par_iter_mut().enumerate().map(|(j, c)| f(c, j)).collect()
    } else {
        children.iter_mut().enumerate().map(|(j, c)| f(c, j)).collect()
    }
}

impl CellUnit {
    pub fn new(cell: Cell, index: usize) -> Self {
        Self {
            cell,
            index,
            trial: None,
            last: None,
            current: 0.0,
            voltage: f64::NAN,
        }
    }

    fn trial(&mut self, current: f64) -> Result<Trial> {
        let v = self.cell.voltage_at(current)?.voltage;
        let h = 1e-3 * current.abs().max(1.0);
        let slope = match self.cell.voltage_at(current + h) {
            Ok(b) => (b.voltage - v) / h,
            Err(_) => (v - self.cell.voltage_at(current - h)?.voltage) / h,
        };
        self.trial = Some((current, v));
        Ok(Trial { current, voltage: v, slope })
    }

    fn commit(&mut self, current: f64) -> Result<CommitTotals> {
        let r = self.cell.commit(current)?;
        self.current = current;
        self.voltage = r.breakdown.voltage;
        self.last = Some(r);
        self.trial = None;
        Ok(CommitTotals {
            cell_ohmic: r.ohmic_loss,
            cell_reaction: r.reaction_loss,
            cell_heat: r.heat,
            stored: r.stored_power,
            contact: 0.0,
            abs_current: current.abs(),
            sei_mol: r.sei_consumed,
            lam_mol: r.lam_isolated,
            end_of_life: r.end_of_life,
        })
    }
}

impl Unit {
    /// Number of cells actually simulated in the subtree.
    pub fn model_cells(&self) -> usize {
        match self {
            Unit::Cell(_) | Unit::Scaled(_) => 1,
            Unit::Group(g) => g.model_cells,
        }
    }

    /// Number of physical cells the subtree stands for.
    pub fn represented_cells(&self) -> usize {
        match self {
            Unit::Cell(_) => 1,
            Unit::Scaled(s) => s.series * s.parallel,
            Unit::Group(g) => g.children.iter().map(Unit::represented_cells).sum(),
        }
    }

    /// Nominal capacity (Ah) of the subtree as seen from its terminals.
    pub fn nominal_capacity(&self) -> f64 {
        match self {
            Unit::Cell(c) => c.cell.params.nominal_capacity,
            Unit::Scaled(s) => s.inner.cell.params.nominal_capacity * s.parallel as f64,
            Unit::Group(g) => {
                let caps = g.children.iter().map(Unit::nominal_capacity);
                match g.kind {
                    GroupKind::Series => caps.fold(f64::INFINITY, f64::min),
                    GroupKind::Parallel => caps.sum(),
                }
            }
        }
    }

    pub fn prepare(&mut self, dt: f64, par: bool) -> Result<()> {
        match self {
            Unit::Cell(c) => {
                c.trial = None;
                c.cell.prepare(dt)
            }
            Unit::Scaled(s) => {
                s.inner.trial = None;
                s.inner.cell.prepare(dt)
            }
            Unit::Group(g) => {
                g.trial = None;
                g.dt = dt;
                let r = map_children(&mut g.children, par, |c, _| c.prepare(dt, par));
                r.into_iter().collect()
            }
        }
    }

    /// Terminal voltage and slope if `current` flows during the prepared
    /// step.
    pub fn trial(&mut self, current: f64, par: bool) -> Result<Trial> {
        match self {
            Unit::Cell(c) => c.trial(current),
            Unit::Scaled(s) => {
                let np = s.parallel as f64;
                let ns = s.series as f64;
                let t = s.inner.trial(current / np)?;
                Ok(Trial {
                    current,
                    voltage: t.voltage * ns,
                    slope: t.slope * ns / np,
                })
            }
            Unit::Group(g) => g.trial(current, par),
        }
    }

    pub fn commit(&mut self, current: f64, par: bool) -> Result<CommitTotals> {
        match self {
            Unit::Cell(c) => c.commit(current),
            Unit::Scaled(s) => {
                let t = s.inner.commit(current / s.parallel as f64)?;
                Ok(t.scaled((s.series * s.parallel) as f64))
            }
            Unit::Group(g) => g.commit(current, par),
        }
    }

    /// Terminal voltage after the last committed step.
    pub fn terminal_voltage(&self) -> f64 {
        match self {
            Unit::Cell(c) => c.voltage,
            Unit::Scaled(s) => s.inner.voltage * s.series as f64,
            Unit::Group(g) => g.voltage,
        }
    }

    /// Current after the last committed step.
    pub fn current(&self) -> f64 {
        match self {
            Unit::Cell(c) => c.current,
            Unit::Scaled(s) => s.inner.current * s.parallel as f64,
            Unit::Group(g) => g.current,
        }
    }

    /// Lowest and highest cell voltage at the latest trial.
    pub fn trial_cell_voltage_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        self.for_each_cell_unit(&mut |c| {
            if let Some((_, v)) = c.trial {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        });
        (lo, hi)
    }

    pub fn for_each_cell_unit(&self, f: &mut dyn FnMut(&CellUnit)) {
        match self {
            Unit::Cell(c) => f(c),
            Unit::Scaled(s) => f(&s.inner),
            Unit::Group(g) => g.children.iter().for_each(|c| c.for_each_cell_unit(f)),
        }
    }

    pub fn for_each_cell_unit_mut(&mut self, f: &mut dyn FnMut(&mut CellUnit)) {
        match self {
            Unit::Cell(c) => f(c),
            Unit::Scaled(s) => f(&mut s.inner),
            Unit::Group(g) => g.children.iter_mut().for_each(|c| c.for_each_cell_unit_mut(f)),
        }
    }

    pub fn for_each_group(&self, f: &mut dyn FnMut(&Group)) {
        if let Unit::Group(g) = self {
            f(g);
            g.children.iter().for_each(|c| c.for_each_group(f));
        }
    }

    pub fn cells(&self) -> Vec<&Cell> {
        let mut out = Vec::new();
        collect_cells(self, &mut out);
        out
    }

    pub fn set_degradation(&mut self, on: bool) {
        self.for_each_cell_unit_mut(&mut |c| c.cell.degradation_enabled = on);
    }

    /// Worst path-voltage residual over all parallel groups at the last
    /// commit.
    pub fn worst_split_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.for_each_group(&mut |g| {
            if g.kind == GroupKind::Parallel {
                worst = worst.max(g.residual);
            }
        });
        worst
    }

    /// Contact loss of the last committed step summed over the tree (W).
    pub fn total_contact_loss(&self) -> f64 {
        let mut s = 0.0;
        self.for_each_group(&mut |g| s += g.contact_loss);
        s
    }
}

fn collect_cells<'a>(u: &'a Unit, out: &mut Vec<&'a Cell>) {
    match u {
        Unit::Cell(c) => out.push(&c.cell),
        Unit::Scaled(s) => out.push(&s.inner.cell),
        Unit::Group(g) => g.children.iter().for_each(|c| collect_cells(c, out)),
    }
}

impl Group {
    pub fn new(kind: GroupKind, label: String, children: Vec<Unit>, contact_r: Vec<f64>, closed: bool, gains: &PiGains) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::Topology(format!("group {label} has no children")));
        }
        if kind == GroupKind::Parallel && children.len() < 2 {
            return Err(Error::Topology(format!("parallel group {label} needs at least two children")));
        }
        if contact_r.len() != children.len() {
            return Err(Error::Topology(format!("group {label}: one contact resistance per child required")));
        }
        if let Some(r) = contact_r.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Topology(format!("group {label}: invalid contact resistance {r}")));
        }
        gains.validate()?;
        let n = children.len();
        let model_cells = children.iter().map(Unit::model_cells).sum();
        let pi = (kind == GroupKind::Parallel).then(|| PiState::new(n, gains));
        Ok(Self {
            kind,
            label,
            children,
            contact_r,
            pi,
            closed,
            split: vec![0.0; n],
            shares: vec![1.0 / n as f64; n],
            model_cells,
            dt: 0.0,
            trial: None,
            current: 0.0,
            voltage: f64::NAN,
            contact_loss: 0.0,
            residual: 0.0,
        })
    }

    fn trial(&mut self, current: f64, par: bool) -> Result<Trial> {
        match self.kind {
            GroupKind::Series => {
                let results = map_children(&mut self.children, par, |c, _| c.trial(current, par));
                let mut voltage = 0.0;
                let mut slope = 0.0;
                for (t, r) in results.into_iter().zip(&self.contact_r) {
                    let t = t?;
                    voltage += t.voltage - r * current;
                    slope += t.slope - r;
                }
                let t = Trial { current, voltage, slope };
                self.trial = Some((t, Vec::new(), Vec::new()));
                Ok(t)
            }
            GroupKind::Parallel => {
                let pi = self.pi.as_ref().expect("parallel group has a controller");
                let sol = parallel::solve_split(&mut self.children, &self.contact_r, pi, current, &self.split, &self.shares, par)?;
                let t = Trial {
                    current,
                    voltage: sol.voltage,
                    slope: sol.slope,
                };
                let mean = sol.paths.iter().sum::<f64>() / sol.paths.len() as f64;
                let dev: Vec<f64> = sol.paths.iter().map(|p| p - mean).collect();
                let slopes: Vec<f64> = sol.trials.iter().map(|t| t.slope).collect();
                self.shares = parallel::conductance_shares(&slopes);
                self.residual = sol.residual;
                self.trial = Some((t, sol.currents, dev));
                Ok(t)
            }
        }
    }

    fn commit(&mut self, current: f64, par: bool) -> Result<CommitTotals> {
        let fresh = matches!(&self.trial, Some((t, _, _)) if t.current == current);
        if !fresh {
            self.trial(current, par)?;
        }
        let (t, currents, dev) = self.trial.take().expect("trial just evaluated");
        let mut totals = CommitTotals::default();
        match self.kind {
            GroupKind::Series => {
                let results = map_children(&mut self.children, par, |c, _| c.commit(current, par));
                for r in results {
                    totals.add(&r?);
                }
                self.contact_loss = self.contact_r.iter().map(|r| r * current * current).sum();
            }
            GroupKind::Parallel => {
                let results = map_children(&mut self.children, par, |c, j| c.commit(currents[j], par));
                for r in results {
                    totals.add(&r?);
                }
                self.contact_loss = parallel::ladder_loss(&currents, &self.contact_r);
                if let Some(pi) = self.pi.as_mut() {
                    for (acc, e) in pi.integral_error.iter_mut().zip(&dev) {
                        *acc += e * self.dt;
                    }
                }
                self.split = currents;
            }
        }
        totals.contact += self.contact_loss;
        self.current = current;
        self.voltage = t.voltage;
        Ok(totals)
    }
}

/// Declarative description of a pack tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Cell,
    /// One simulated cell scaled up to `series x parallel` cells.
    Scaled { series: usize, parallel: usize },
    Series {
        count: usize,
        contact_r: f64,
        #[serde(default)]
        closed: bool,
        child: Box<TopologySpec>,
    },
    Parallel {
        count: usize,
        contact_r: f64,
        #[serde(default)]
        closed: bool,
        child: Box<TopologySpec>,
    },
}

/// Contact resistance between cells in a block and blocks in a module.
pub const CONTACT_R_CELL: f64 = 7.5e-6;
/// Contact resistance between modules in a rack and racks on the DC bus.
pub const CONTACT_R_MODULE: f64 = 2.5e-4;

impl TopologySpec {
    pub fn block(parallel: usize, contact_r: f64) -> Self {
        TopologySpec::Parallel {
            count: parallel,
            contact_r,
            closed: false,
            child: Box::new(TopologySpec::Cell),
        }
    }

    /// `series x parallel` module with its own fan.
    pub fn module(series: usize, parallel: usize, contact_cell: f64, contact_block: f64) -> Self {
        TopologySpec::Series {
            count: series,
            contact_r: contact_block,
            closed: true,
            child: Box::new(Self::block(parallel, contact_cell)),
        }
    }

    pub fn rack(modules: usize, module: TopologySpec, contact_module: f64) -> Self {
        TopologySpec::Series {
            count: modules,
            contact_r: contact_module,
            closed: false,
            child: Box::new(module),
        }
    }

    /// 9 parallel racks of 15 series 20s7p modules.
    pub fn default_container() -> Self {
        let module = Self::module(20, 7, CONTACT_R_CELL, CONTACT_R_CELL);
        TopologySpec::Parallel {
            count: 9,
            contact_r: CONTACT_R_MODULE,
            closed: false,
            child: Box::new(Self::rack(15, module, CONTACT_R_MODULE)),
        }
    }

    /// Multiplies every contact resistance by `k`.
    pub fn scale_contacts(&self, k: f64) -> Self {
        match self {
            TopologySpec::Series { count, contact_r, closed, child } => TopologySpec::Series {
                count: *count,
                contact_r: contact_r * k,
                closed: *closed,
                child: Box::new(child.scale_contacts(k)),
            },
            TopologySpec::Parallel { count, contact_r, closed, child } => TopologySpec::Parallel {
                count: *count,
                contact_r: contact_r * k,
                closed: *closed,
                child: Box::new(child.scale_contacts(k)),
            },
            other => other.clone(),
        }
    }

    /// Number of simulated cells.
    pub fn model_cells(&self) -> usize {
        match self {
            TopologySpec::Cell | TopologySpec::Scaled { .. } => 1,
            TopologySpec::Series { count, child, .. } | TopologySpec::Parallel { count, child, .. } => count * child.model_cells(),
        }
    }

    /// Number of physical cells represented.
    pub fn represented_cells(&self) -> usize {
        match self {
            TopologySpec::Cell => 1,
            TopologySpec::Scaled { series, parallel } => series * parallel,
            TopologySpec::Series { count, child, .. } | TopologySpec::Parallel { count, child, .. } => {
                count * child.represented_cells()
            }
        }
    }

    /// Cells connected in parallel from the terminals' point of view.
    pub fn parallel_cells(&self) -> usize {
        match self {
            TopologySpec::Cell => 1,
            TopologySpec::Scaled { parallel, .. } => *parallel,
            TopologySpec::Series { child, .. } => child.parallel_cells(),
            TopologySpec::Parallel { count, child, .. } => count * child.parallel_cells(),
        }
    }

    /// Cells connected in series from the terminals' point of view.
    pub fn series_cells(&self) -> usize {
        match self {
            TopologySpec::Cell => 1,
            TopologySpec::Scaled { series, .. } => *series,
            TopologySpec::Series { count, child, .. } => count * child.series_cells(),
            TopologySpec::Parallel { child, .. } => child.series_cells(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TopologySpec::Cell => Ok(()),
            TopologySpec::Scaled { series, parallel } => {
                if *series == 0 || *parallel == 0 {
                    return Err(Error::Topology("scaled unit needs positive counts".into()));
                }
                Ok(())
            }
            TopologySpec::Series { count, contact_r, child, .. } => {
                if *count == 0 {
                    return Err(Error::Topology("series group needs at least one child".into()));
                }
                if !(*contact_r >= 0.0) {
                    return Err(Error::Topology(format!("negative contact resistance {contact_r}")));
                }
                child.validate()
            }
            TopologySpec::Parallel { count, contact_r, child, .. } => {
                if *count < 2 {
                    return Err(Error::Topology("parallel group needs at least two children".into()));
                }
                if !(*contact_r >= 0.0) {
                    return Err(Error::Topology(format!("negative contact resistance {contact_r}")));
                }
                child.validate()
            }
        }
    }

    /// Builds the unit tree; `make_cell` receives the depth-first cell index.
    pub fn build(&self, gains: &PiGains, make_cell: &mut dyn FnMut(usize) -> Result<Cell>) -> Result<Unit> {
        self.validate()?;
        let mut next = 0;
        build_rec(self, "root".to_string(), gains, make_cell, &mut next)
    }
}

fn build_rec(
    spec: &TopologySpec,
    label: String,
    gains: &PiGains,
    make_cell: &mut dyn FnMut(usize) -> Result<Cell>,
    next: &mut usize,
) -> Result<Unit> {
    match spec {
        TopologySpec::Cell => {
            let idx = *next;
            *next += 1;
            Ok(Unit::Cell(CellUnit::new(make_cell(idx)?, idx)))
        }
        TopologySpec::Scaled { series, parallel } => {
            let idx = *next;
            *next += 1;
            Ok(Unit::Scaled(ScaledUnit {
                inner: CellUnit::new(make_cell(idx)?, idx),
                series: *series,
                parallel: *parallel,
            }))
        }
        TopologySpec::Series { count, contact_r, closed, child } | TopologySpec::Parallel { count, contact_r, closed, child } => {
            let kind = if matches!(spec, TopologySpec::Series { .. }) {
                GroupKind::Series
            } else {
                GroupKind::Parallel
            };
            let children = (0..*count)
                .map(|k| build_rec(child, format!("{label}.{k}"), gains, make_cell, next))
                .collect::<Result<Vec<_>>>()?;
            Ok(Unit::Group(Group::new(kind, label, children, vec![*contact_r; *count], *closed, gains)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_model::CellParams;

    fn cell(_: usize) -> Result<Cell> {
        let mut c = Cell::with_shipped_tables(CellParams::default(), 298.15)?;
        c.degradation_enabled = false;
        Ok(c)
    }

    fn step(u: &mut Unit, i: f64) -> CommitTotals {
        u.prepare(2.0, false).unwrap();
        u.trial(i, false).unwrap();
        u.commit(i, false).unwrap()
    }

    #[test]
    fn identical_parallel_children_share_equally() {
        let mut u = TopologySpec::block(2, 0.0).build(&PiGains::default(), &mut cell).unwrap();
        step(&mut u, 32.0);
        if let Unit::Group(g) = &u {
            assert!((g.split[0] - 16.0).abs() < 1e-9 && (g.split[1] - 16.0).abs() < 1e-9);
            assert_eq!(g.split.iter().sum::<f64>(), 32.0);
        }
    }

    #[test]
    fn single_child_series_passes_voltage_through() {
        let spec = TopologySpec::Series {
            count: 1,
            contact_r: 0.0,
            closed: false,
            child: Box::new(TopologySpec::Cell),
        };
        let mut u = spec.build(&PiGains::default(), &mut cell).unwrap();
        let mut lone = cell(0).unwrap();
        step(&mut u, 16.0);
        let r = lone.step(16.0, 2.0).unwrap();
        assert_eq!(u.terminal_voltage(), r.breakdown.voltage);
    }

    #[test]
    fn series_chain_voltage_and_contact_loss() {
        let spec = TopologySpec::Series {
            count: 4,
            contact_r: 2.5e-4,
            closed: false,
            child: Box::new(TopologySpec::Cell),
        };
        let mut u = spec.build(&PiGains::default(), &mut cell).unwrap();
        let mut lone = cell(0).unwrap();
        let t = step(&mut u, 16.0);
        let r = lone.step(16.0, 2.0).unwrap();
        let expected_v = 4.0 * r.breakdown.voltage - 4.0 * 2.5e-4 * 16.0;
        assert!((u.terminal_voltage() - expected_v).abs() < 1e-12);
        assert!((t.contact * 2.0 - 4.0 * 16.0 * 16.0 * 2.5e-4 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_topologies_are_rejected() {
        assert!(TopologySpec::block(1, 0.0).build(&PiGains::default(), &mut cell).is_err());
        assert!(TopologySpec::block(3, -1.0).build(&PiGains::default(), &mut cell).is_err());
        assert_eq!(TopologySpec::default_container().represented_cells(), 18_900);
        assert_eq!(TopologySpec::default_container().series_cells(), 300);
        assert_eq!(TopologySpec::default_container().parallel_cells(), 63);
    }
}
