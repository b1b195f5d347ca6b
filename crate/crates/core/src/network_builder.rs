//! Conversion of the element-based [`Network`] into a per-unit bus-branch
//! model for one fault case.
//!
//! Per-unit bases: `S_base = options.s_base_mva` everywhere and
//! `V_base = vn_kv` of each bus. A three-winding transformer adds one
//! auxiliary star node whose voltage base is its rated HV voltage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScError};
use crate::grid_model::{
    validate, BusId, ConverterSource, ExternalGrid, Line, Network, SwitchTarget, Transformer2W,
    Transformer3W,
};
use crate::linalg::{AdmittanceBuilder, AdmittanceMatrix, SolverStrategy};
use crate::union_find::UnionFind;
use crate::units::{CurrentKa, ImpedanceOhm, ImpedancePu};

/// Temperature coefficient of conductor resistance used for the minimum case.
pub const LINE_TEMP_COEFF_PER_K: f64 = 0.004;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Max,
    Min,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Max => "max",
            Case::Min => "min",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultBuses {
    #[default]
    All,
    Explicit(Vec<BusId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultStudyOptions {
    pub case: Case,
    pub lv_tolerance_percent: u8,
    pub fault_buses: FaultBuses,
    pub consider_converters: bool,
    pub s_base_mva: f64,
    #[serde(default)]
    pub solver: SolverStrategy,
}

impl Default for FaultStudyOptions {
    fn default() -> Self {
        FaultStudyOptions {
            case: Case::Max,
            lv_tolerance_percent: 10,
            fault_buses: FaultBuses::All,
            consider_converters: true,
            s_base_mva: 1.0,
            solver: SolverStrategy::Auto,
        }
    }
}

impl FaultStudyOptions {
    pub fn new(case: Case) -> Self {
        FaultStudyOptions {
            case,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !matches!(self.lv_tolerance_percent, 6 | 10) {
            return Err(ScError::InvalidOption(format!(
                "lv_tolerance_percent must be 6 or 10, got {}",
                self.lv_tolerance_percent
            )));
        }
        if !(self.s_base_mva > 0.0 && self.s_base_mva.is_finite()) {
            return Err(ScError::InvalidOption(format!(
                "s_base_mva must be positive, got {}",
                self.s_base_mva
            )));
        }
        Ok(())
    }
}

/// Voltage correction factor c for a voltage level, tolerance band and case.
pub fn voltage_correction_factor(vn_kv: f64, tolerance_percent: u8, case: Case) -> Result<f64> {
    if !(vn_kv > 0.0) {
        return Err(ScError::InvalidData(format!("vn_kv must be positive, got {vn_kv}")));
    }
    let (c_min, c_max) = if vn_kv <= 1.0 {
        match tolerance_percent {
            6 => (0.95, 1.05),
            10 => (0.95, 1.10),
            other => {
                return Err(ScError::InvalidOption(format!(
                    "low-voltage tolerance must be 6 or 10 %, got {other}"
                )))
            }
        }
    } else {
        (1.00, 1.10)
    };
    Ok(match case {
        Case::Max => c_max,
        Case::Min => c_min,
    })
}

/// Internal impedance of an external grid in ohm, `|Z| = c·U²/S''` split by
/// the case's R/X ratio.
pub fn external_grid_impedance(
    eg: &ExternalGrid,
    vn_kv: f64,
    case: Case,
    c: f64,
) -> Result<ImpedanceOhm> {
    let (s_sc, rx) = match case {
        Case::Max => (eg.s_sc_max_mva, eg.rx_max),
        Case::Min => (eg.s_sc_min_mva, eg.rx_min),
    };
    if !(s_sc > 0.0) {
        return Err(ScError::InvalidData(format!(
            "short-circuit power must be positive, got {s_sc} MVA"
        )));
    }
    let z = c * vn_kv * vn_kv / s_sc;
    let x = z / (1.0 + rx * rx).sqrt();
    Ok(ImpedanceOhm::new(rx * x, x))
}

pub fn line_impedance(line: &Line, case: Case) -> ImpedanceOhm {
    let r20 = line.r_ohm_per_km * line.length_km;
    let x = line.x_ohm_per_km * line.length_km;
    let r = match case {
        Case::Max => r20,
        Case::Min => (1.0 + LINE_TEMP_COEFF_PER_K * (line.endtemp_degc - 20.0)) * r20,
    };
    ImpedanceOhm::new(r, x)
}

/// Impedance correction factor K_T for a transformer with per-unit reactance
/// `x_t` on its own rating, given c_max at its low-voltage side.
pub fn transformer_correction(x_t: f64, c_max_lv: f64) -> f64 {
    0.95 * c_max_lv / (1.0 + 0.6 * x_t)
}

/// Uncorrected `r + jx` from short-circuit voltage and its resistive part (%).
pub fn rated_impedance(vk_percent: f64, vkr_percent: f64) -> Complex64 {
    let r = vkr_percent / 100.0;
    let x = (vk_percent * vk_percent - vkr_percent * vkr_percent).sqrt() / 100.0;
    Complex64::new(r, x)
}

/// Corrected short-circuit impedance of a two-winding transformer, per unit
/// on its own rated base.
pub fn transformer_impedance(t: &Transformer2W, c_max_lv: f64) -> ImpedancePu {
    corrected(t.vk_percent, t.vkr_percent, c_max_lv)
}

fn corrected(vk: f64, vkr: f64, c_max_lv: f64) -> ImpedancePu {
    let z = rated_impedance(vk, vkr);
    ImpedancePu(z * transformer_correction(z.im, c_max_lv))
}

/// Star branches from the three pairwise impedances (all on one base).
pub fn star_equivalent(z_hm: Complex64, z_ml: Complex64, z_hl: Complex64) -> [Complex64; 3] {
    [
        (z_hm + z_hl - z_ml) / 2.0,
        (z_hm + z_ml - z_hl) / 2.0,
        (z_hl + z_ml - z_hm) / 2.0,
    ]
}

/// c_max at the lower-voltage side of each winding pair `(hm, ml, hl)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrection {
    pub hm: f64,
    pub ml: f64,
    pub hl: f64,
}

/// Three-winding transformer reduced to a star, per unit on `s_base_mva` and
/// the rated HV voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarImpedances {
    /// Corrected pairwise impedances `(hm, ml, hl)` on the study base.
    pub pairwise: [ImpedancePu; 3],
    /// Star branches `(hv, mv, lv)`; individual branches may be negative.
    pub branches: [ImpedancePu; 3],
}

pub fn three_winding_star(t: &Transformer3W, c_max: PairCorrection, s_base_mva: f64) -> StarImpedances {
    let pair = |vk: f64, vkr: f64, c: f64, sn_a: f64, sn_b: f64| {
        corrected(vk, vkr, c).0 * (s_base_mva / sn_a.min(sn_b))
    };
    let z_hm = pair(t.vk_hm_percent, t.vkr_hm_percent, c_max.hm, t.sn_hv_mva, t.sn_mv_mva);
    let z_ml = pair(t.vk_ml_percent, t.vkr_ml_percent, c_max.ml, t.sn_mv_mva, t.sn_lv_mva);
    let z_hl = pair(t.vk_hl_percent, t.vkr_hl_percent, c_max.hl, t.sn_hv_mva, t.sn_lv_mva);
    let [h, m, l] = star_equivalent(z_hm, z_ml, z_hl);
    StarImpedances {
        pairwise: [ImpedancePu(z_hm), ImpedancePu(z_ml), ImpedancePu(z_hl)],
        branches: [ImpedancePu(h), ImpedancePu(m), ImpedancePu(l)],
    }
}

/// Inductive current injected by a full-converter unit.
pub fn converter_current(cs: &ConverterSource, vn_kv: f64) -> CurrentKa {
    let i_rated = cs.sn_mva / (SQRT_3 * vn_kv);
    CurrentKa::new(0.0, -cs.k * i_rated)
}

/// Electrical nodes after switch fusion and the elements that still conduct.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchFusion {
    /// In-service bus → electrical node. Out-of-service buses are absent.
    pub node_of_bus: BTreeMap<BusId, usize>,
    /// Buses of each node, ascending. Nodes are numbered by their smallest bus id.
    pub nodes: Vec<Vec<BusId>>,
    pub lines: Vec<usize>,
    pub transformers2w: Vec<usize>,
    /// Index plus which terminals (hv, mv, lv) are still connected.
    pub transformers3w: Vec<(usize, [bool; 3])>,
    pub external_grids: Vec<usize>,
    pub converter_sources: Vec<usize>,
}

pub fn fuse_switches(network: &Network) -> SwitchFusion {
    let mut live: Vec<BusId> = network
        .buses
        .iter()
        .filter(|b| b.in_service)
        .map(|b| b.id)
        .collect();
    live.sort_unstable();
    live.dedup();
    let slot: BTreeMap<BusId, usize> = live.iter().enumerate().map(|(i, &b)| (b, i)).collect();

    let mut uf = UnionFind::new(live.len());
    let mut open_terminals = BTreeSet::new();
    for sw in &network.switches {
        match sw.other {
            SwitchTarget::Bus(other) => {
                if let (true, Some(&a), Some(&b)) = (sw.closed, slot.get(&sw.bus), slot.get(&other)) {
                    uf.union(a, b);
                }
            }
            target if !sw.closed => {
                open_terminals.insert((target, sw.bus));
            }
            _ => {}
        }
    }
    let (labels, count) = uf.labels();
    let mut nodes = vec![Vec::new(); count];
    let mut node_of_bus = BTreeMap::new();
    for (i, &bus) in live.iter().enumerate() {
        nodes[labels[i]].push(bus);
        node_of_bus.insert(bus, labels[i]);
    }

    let up = |bus: BusId, target: SwitchTarget| {
        slot.contains_key(&bus) && !open_terminals.contains(&(target, bus))
    };

    SwitchFusion {
        lines: (0..network.lines.len())
            .filter(|&i| {
                let l = &network.lines[i];
                let t = SwitchTarget::Line(i);
                l.in_service && up(l.from_bus, t) && up(l.to_bus, t)
            })
            .collect(),
        transformers2w: (0..network.transformers2w.len())
            .filter(|&i| {
                let tr = &network.transformers2w[i];
                let t = SwitchTarget::Transformer2w(i);
                tr.in_service && up(tr.hv_bus, t) && up(tr.lv_bus, t)
            })
            .collect(),
        transformers3w: (0..network.transformers3w.len())
            .filter_map(|i| {
                let tr = &network.transformers3w[i];
                let t = SwitchTarget::Transformer3w(i);
                let terminals = [up(tr.hv_bus, t), up(tr.mv_bus, t), up(tr.lv_bus, t)];
                (tr.in_service && terminals.iter().filter(|&&c| c).count() >= 2)
                    .then_some((i, terminals))
            })
            .collect(),
        external_grids: (0..network.external_grids.len())
            .filter(|&i| {
                let e = &network.external_grids[i];
                e.in_service && up(e.bus, SwitchTarget::ExternalGrid(i))
            })
            .collect(),
        converter_sources: (0..network.converter_sources.len())
            .filter(|&i| {
                let c = &network.converter_sources[i];
                c.in_service && up(c.bus, SwitchTarget::ConverterSource(i))
            })
            .collect(),
        node_of_bus,
        nodes,
    }
}

/// Per-unit bus-branch model of one fault case.
#[derive(Debug, Clone)]
pub struct BusBranchModel {
    /// Energized bus → matrix row. Fused buses share a row.
    pub bus_index: BTreeMap<BusId, usize>,
    pub y_matrix: AdmittanceMatrix,
    /// Equivalent source voltage per row, per unit of `vn/√3` (equals c).
    pub u_q: Vec<f64>,
    /// Converter injection per row, per unit of the row's current base.
    pub i_kc: Vec<Complex64>,
    pub i_base_ka: Vec<f64>,
    pub c_per_bus: Vec<f64>,
    pub vbase_kv: Vec<f64>,
    /// Smallest bus id of the island each row belongs to (star rows use the
    /// island of their transformer).
    pub island_of_row: Vec<BusId>,
    /// Rows `bus_rows..dim` are auxiliary three-winding star nodes.
    pub bus_rows: usize,
    /// Buses that are out of service or sit in an island without a voltage source.
    pub not_energized: BTreeSet<BusId>,
}

impl BusBranchModel {
    pub fn dim(&self) -> usize {
        self.y_matrix.dim()
    }
}

enum Branch {
    Line(usize),
    Trafo2w(usize),
    Star(usize, usize),
}

struct Stamp {
    from: usize,
    to: usize,
    z: Complex64,
    tap: f64,
    element: Branch,
}

pub fn build_bbm(network: &Network, options: &FaultStudyOptions) -> Result<BusBranchModel> {
    options.check()?;
    let violations = validate(network);
    if !violations.is_empty() {
        return Err(ScError::Validation(violations));
    }
    let buses = network.bus_map();
    if let FaultBuses::Explicit(ids) = &options.fault_buses {
        if let Some(&missing) = ids.iter().find(|id| !buses.contains_key(id)) {
            return Err(ScError::UnknownFaultBus(missing));
        }
    }

    let fusion = fuse_switches(network);
    let n_nodes = fusion.nodes.len();
    let node_vn: Vec<f64> = fusion.nodes.iter().map(|b| buses[&b[0]].vn_kv).collect();
    let node = |bus: BusId| fusion.node_of_bus[&bus];

    // Islands over fused nodes; each 3W transformer gets one extra slot for its star point.
    let n_star = fusion.transformers3w.len();
    let mut islands = UnionFind::new(n_nodes + n_star);
    for &i in &fusion.lines {
        let l = &network.lines[i];
        islands.union(node(l.from_bus), node(l.to_bus));
    }
    for &i in &fusion.transformers2w {
        let t = &network.transformers2w[i];
        islands.union(node(t.hv_bus), node(t.lv_bus));
    }
    for (s, &(i, conn)) in fusion.transformers3w.iter().enumerate() {
        let t = &network.transformers3w[i];
        for (bus, up) in [(t.hv_bus, conn[0]), (t.mv_bus, conn[1]), (t.lv_bus, conn[2])] {
            if up {
                islands.union(n_nodes + s, node(bus));
            }
        }
    }
    let (island, n_islands) = islands.labels();
    let mut has_voltage_source = vec![false; n_islands];
    let mut has_current_source = vec![false; n_islands];
    for &i in &fusion.external_grids {
        has_voltage_source[island[node(network.external_grids[i].bus)]] = true;
    }
    for &i in &fusion.converter_sources {
        has_current_source[island[node(network.converter_sources[i].bus)]] = true;
    }

    let fault_set: Vec<BusId> = match &options.fault_buses {
        FaultBuses::All => network.buses.iter().map(|b| b.id).collect(),
        FaultBuses::Explicit(ids) => ids.clone(),
    };
    for &bus in &fault_set {
        if let Some(&n) = fusion.node_of_bus.get(&bus) {
            let isl = island[n];
            if !has_voltage_source[isl] && has_current_source[isl] {
                return Err(ScError::UnsolvableIsland { bus });
            }
        }
    }

    // Matrix rows: energized nodes in node order, then star points.
    let mut row_of_node = vec![usize::MAX; n_nodes];
    let mut island_min_bus: Vec<Option<BusId>> = vec![None; n_islands];
    let mut vbase_kv = Vec::new();
    for n in 0..n_nodes {
        let isl = island[n];
        let first = fusion.nodes[n][0];
        island_min_bus[isl] = Some(island_min_bus[isl].map_or(first, |b| b.min(first)));
        if has_voltage_source[isl] {
            row_of_node[n] = vbase_kv.len();
            vbase_kv.push(node_vn[n]);
        }
    }
    let bus_rows = vbase_kv.len();
    let mut star_row = vec![usize::MAX; n_star];
    for (s, &(i, _)) in fusion.transformers3w.iter().enumerate() {
        if has_voltage_source[island[n_nodes + s]] {
            star_row[s] = vbase_kv.len();
            vbase_kv.push(network.transformers3w[i].vn_hv_kv);
        }
    }
    let dim = vbase_kv.len();
    let row = |bus: BusId| row_of_node[node(bus)];
    let s_base = options.s_base_mva;

    let mut island_of_row = vec![BusId(0); dim];
    for n in 0..n_nodes {
        if row_of_node[n] != usize::MAX {
            island_of_row[row_of_node[n]] = island_min_bus[island[n]].expect("island has a bus");
        }
    }
    for s in 0..n_star {
        if star_row[s] != usize::MAX {
            island_of_row[star_row[s]] =
                island_min_bus[island[n_nodes + s]].expect("island has a bus");
        }
    }

    let c_of = |vn: f64| voltage_correction_factor(vn, options.lv_tolerance_percent, options.case);
    let c_max_of = |vn: f64| voltage_correction_factor(vn, options.lv_tolerance_percent, Case::Max);
    let mut c_per_bus = Vec::with_capacity(dim);
    for &vn in &vbase_kv {
        c_per_bus.push(c_of(vn)?);
    }
    let i_base_ka: Vec<f64> = vbase_kv.iter().map(|&v| s_base / (SQRT_3 * v)).collect();
    let z_base = |vbase: f64| vbase * vbase / s_base;

    let mut y = AdmittanceBuilder::new(dim);
    for &i in &fusion.external_grids {
        let eg = &network.external_grids[i];
        let r = row(eg.bus);
        if r == usize::MAX {
            continue;
        }
        let vn = vbase_kv[r];
        let z = external_grid_impedance(eg, vn, options.case, c_per_bus[r])?.0 / z_base(vn);
        if z.norm() == 0.0 {
            return Err(ScError::SingularStamp {
                element: format!("external_grids[{i}]"),
            });
        }
        y.add_shunt(r, ONE / z);
    }

    let mut stamps = Vec::new();
    for &i in &fusion.lines {
        let l = &network.lines[i];
        let (from, to) = (row(l.from_bus), row(l.to_bus));
        if from == usize::MAX {
            continue;
        }
        let z = line_impedance(l, options.case).0 / z_base(vbase_kv[to]);
        stamps.push(Stamp { from, to, z, tap: 1.0, element: Branch::Line(i) });
    }
    for &i in &fusion.transformers2w {
        let t = &network.transformers2w[i];
        let (from, to) = (row(t.hv_bus), row(t.lv_bus));
        if from == usize::MAX {
            continue;
        }
        let (vb_hv, vb_lv) = (vbase_kv[from], vbase_kv[to]);
        let z_rated = transformer_impedance(t, c_max_of(vb_lv)?).0;
        let z = z_rated * (t.vn_lv_kv * t.vn_lv_kv / t.sn_mva) / z_base(vb_lv);
        let tap = (t.vn_hv_kv / t.vn_lv_kv) * (vb_lv / vb_hv);
        stamps.push(Stamp { from, to, z, tap, element: Branch::Trafo2w(i) });
    }
    for (s, &(i, conn)) in fusion.transformers3w.iter().enumerate() {
        let star = star_row[s];
        if star == usize::MAX {
            continue;
        }
        let t = &network.transformers3w[i];
        let vn_of = |bus: BusId| buses[&bus].vn_kv;
        let c_max = PairCorrection {
            hm: c_max_of(vn_of(t.mv_bus).min(vn_of(t.hv_bus)))?,
            ml: c_max_of(vn_of(t.lv_bus).min(vn_of(t.mv_bus)))?,
            hl: c_max_of(vn_of(t.lv_bus).min(vn_of(t.hv_bus)))?,
        };
        let star_z = three_winding_star(t, c_max, s_base);
        let windings = [(t.hv_bus, t.vn_hv_kv), (t.mv_bus, t.vn_mv_kv), (t.lv_bus, t.vn_lv_kv)];
        for (w, &(bus, vn_rated)) in windings.iter().enumerate() {
            if !conn[w] {
                continue;
            }
            let from = row(bus);
            stamps.push(Stamp {
                from,
                to: star,
                z: star_z.branches[w].0,
                tap: vn_rated / vbase_kv[from],
                element: Branch::Star(i, w),
            });
        }
    }
    for st in &stamps {
        if st.from == st.to {
            // both terminals fused into one node
            continue;
        }
        if st.z.norm() == 0.0 || !st.z.is_finite() {
            let element = match st.element {
                Branch::Line(i) => format!("lines[{i}]"),
                Branch::Trafo2w(i) => format!("transformers2w[{i}]"),
                Branch::Star(i, w) => format!("transformers3w[{i}].{}", ["hv", "mv", "lv"][w]),
            };
            return Err(ScError::SingularStamp { element });
        }
        y.add_branch(st.from, st.to, ONE / st.z, st.tap);
    }

    let mut i_kc = vec![Complex64::new(0.0, 0.0); dim];
    if options.consider_converters {
        for &i in &fusion.converter_sources {
            let cs = &network.converter_sources[i];
            let r = row(cs.bus);
            if r == usize::MAX {
                continue;
            }
            i_kc[r] += converter_current(cs, vbase_kv[r]).0 / i_base_ka[r];
        }
    }

    let mut bus_index = BTreeMap::new();
    let mut not_energized = BTreeSet::new();
    for bus in &network.buses {
        match fusion.node_of_bus.get(&bus.id).map(|&n| row_of_node[n]) {
            Some(r) if r != usize::MAX => {
                bus_index.insert(bus.id, r);
            }
            _ => {
                not_energized.insert(bus.id);
            }
        }
    }

    Ok(BusBranchModel {
        bus_index,
        y_matrix: y.build(),
        u_q: c_per_bus.clone(),
        i_kc,
        i_base_ka,
        c_per_bus,
        vbase_kv,
        island_of_row,
        bus_rows,
        not_energized,
    })
}
