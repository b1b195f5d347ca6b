//! Element-based grid description.
//!
//! Elements carry nameplate data only; every electrical quantity (per-unit
//! impedances, correction factors, admittance stamps) is derived later by
//! [`crate::network_builder`]. Buses are identified by user-assigned
//! [`BusId`]s, all other elements by their position in their collection.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u64);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn in_service_default() -> bool {
    true
}

/// Conductor end temperature assumed when a line does not state one.
pub const DEFAULT_LINE_ENDTEMP_DEGC: f64 = 80.0;

fn endtemp_default() -> f64 {
    DEFAULT_LINE_ENDTEMP_DEGC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    #[serde(default)]
    pub name: String,
    pub vn_kv: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalGrid {
    pub bus: BusId,
    pub s_sc_max_mva: f64,
    pub s_sc_min_mva: f64,
    pub rx_max: f64,
    pub rx_min: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub length_km: f64,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    #[serde(default = "endtemp_default")]
    pub endtemp_degc: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transformer2W {
    pub hv_bus: BusId,
    pub lv_bus: BusId,
    pub sn_mva: f64,
    pub vn_hv_kv: f64,
    pub vn_lv_kv: f64,
    pub vk_percent: f64,
    pub vkr_percent: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transformer3W {
    pub hv_bus: BusId,
    pub mv_bus: BusId,
    pub lv_bus: BusId,
    pub sn_hv_mva: f64,
    pub sn_mv_mva: f64,
    pub sn_lv_mva: f64,
    pub vn_hv_kv: f64,
    pub vn_mv_kv: f64,
    pub vn_lv_kv: f64,
    pub vk_hm_percent: f64,
    pub vk_ml_percent: f64,
    pub vk_hl_percent: f64,
    pub vkr_hm_percent: f64,
    pub vkr_ml_percent: f64,
    pub vkr_hl_percent: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

/// Full-converter unit (PV, type-4 wind) feeding a constant inductive current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSource {
    pub bus: BusId,
    pub sn_mva: f64,
    pub k: f64,
    #[serde(default = "in_service_default")]
    pub in_service: bool,
}

/// What the far side of a switch attaches to.
///
/// `Bus` makes a bus-bus switch; every other variant is a bus-element switch
/// on the element's terminal at `Switch::bus`, addressed by collection index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchTarget {
    Bus(BusId),
    Line(usize),
    Transformer2w(usize),
    Transformer3w(usize),
    ExternalGrid(usize),
    ConverterSource(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchKind {
    BusBus,
    BusElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Switch {
    pub bus: BusId,
    pub other: SwitchTarget,
    pub closed: bool,
}

impl Switch {
    pub fn kind(&self) -> SwitchKind {
        match self.other {
            SwitchTarget::Bus(_) => SwitchKind::BusBus,
            _ => SwitchKind::BusElement,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub external_grids: Vec<ExternalGrid>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub transformers2w: Vec<Transformer2W>,
    #[serde(default)]
    pub transformers3w: Vec<Transformer3W>,
    #[serde(default)]
    pub converter_sources: Vec<ConverterSource>,
    #[serde(default)]
    pub switches: Vec<Switch>,
}

impl Network {
    pub fn new(name: impl Into<String>) -> Self {
        Network {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_map(&self) -> HashMap<BusId, &Bus> {
        self.buses.iter().map(|b| (b.id, b)).collect()
    }

    pub fn add_bus(&mut self, id: u64, name: impl Into<String>, vn_kv: f64) -> BusId {
        let id = BusId(id);
        self.buses.push(Bus {
            id,
            name: name.into(),
            vn_kv,
            in_service: true,
        });
        id
    }

    pub fn add_external_grid(&mut self, bus: BusId, s_sc_max_mva: f64, s_sc_min_mva: f64, rx: f64) {
        self.external_grids.push(ExternalGrid {
            bus,
            s_sc_max_mva,
            s_sc_min_mva,
            rx_max: rx,
            rx_min: rx,
            in_service: true,
        });
    }

    pub fn add_line(
        &mut self,
        from_bus: BusId,
        to_bus: BusId,
        length_km: f64,
        r_ohm_per_km: f64,
        x_ohm_per_km: f64,
    ) -> usize {
        self.lines.push(Line {
            from_bus,
            to_bus,
            length_km,
            r_ohm_per_km,
            x_ohm_per_km,
            endtemp_degc: DEFAULT_LINE_ENDTEMP_DEGC,
            in_service: true,
        });
        self.lines.len() - 1
    }

    pub fn add_converter(&mut self, bus: BusId, sn_mva: f64, k: f64) {
        self.converter_sources.push(ConverterSource {
            bus,
            sn_mva,
            k,
            in_service: true,
        });
    }
}

/// One broken invariant: which element, which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub element: String,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(element: impl Into<String>, field: &str, rule: &str) -> Self {
        Violation {
            element: element.into(),
            field: field.to_string(),
            rule: rule.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: violates `{}`", self.element, self.field, self.rule)
    }
}

struct Checker<'a> {
    buses: HashMap<BusId, &'a Bus>,
    out: Vec<Violation>,
}

impl Checker<'_> {
    // NaN fails every check because rules are stated positively.
    fn require(&mut self, ok: bool, element: &str, field: &str, rule: &str) {
        if !ok {
            self.out.push(Violation::new(element, field, rule));
        }
    }

    fn bus_ref(&mut self, id: BusId, element: &str, field: &str) -> Option<&Bus> {
        match self.buses.get(&id) {
            Some(bus) => Some(*bus),
            None => {
                self.out
                    .push(Violation::new(element, field, "references an existing bus"));
                None
            }
        }
    }
}

/// Check every element invariant. An empty list means the network can be
/// handed to the builder.
pub fn validate(network: &Network) -> Vec<Violation> {
    let mut ck = Checker {
        buses: HashMap::new(),
        out: Vec::new(),
    };

    let mut seen = HashSet::new();
    for (i, bus) in network.buses.iter().enumerate() {
        let el = format!("buses[{i}]");
        ck.require(seen.insert(bus.id), &el, "id", "ids unique");
        ck.require(bus.vn_kv > 0.0 && bus.vn_kv.is_finite(), &el, "vn_kv", "vn_kv > 0");
        ck.buses.entry(bus.id).or_insert(bus);
    }

    for (i, eg) in network.external_grids.iter().enumerate() {
        let el = format!("external_grids[{i}]");
        ck.bus_ref(eg.bus, &el, "bus");
        ck.require(eg.s_sc_min_mva > 0.0, &el, "s_sc_min_mva", "s_sc_min_mva > 0");
        ck.require(
            eg.s_sc_max_mva >= eg.s_sc_min_mva && eg.s_sc_max_mva.is_finite(),
            &el,
            "s_sc_max_mva",
            "s_sc_max_mva >= s_sc_min_mva",
        );
        ck.require(eg.rx_max >= 0.0 && eg.rx_max.is_finite(), &el, "rx_max", "rx_max >= 0");
        ck.require(eg.rx_min >= 0.0 && eg.rx_min.is_finite(), &el, "rx_min", "rx_min >= 0");
    }

    for (i, line) in network.lines.iter().enumerate() {
        let el = format!("lines[{i}]");
        let from = ck.bus_ref(line.from_bus, &el, "from_bus").map(|b| b.vn_kv);
        let to = ck.bus_ref(line.to_bus, &el, "to_bus").map(|b| b.vn_kv);
        ck.require(line.from_bus != line.to_bus, &el, "to_bus", "from_bus != to_bus");
        ck.require(
            line.length_km > 0.0 && line.length_km.is_finite(),
            &el,
            "length_km",
            "length_km > 0",
        );
        ck.require(line.r_ohm_per_km >= 0.0, &el, "r_ohm_per_km", "r_ohm_per_km >= 0");
        ck.require(line.x_ohm_per_km >= 0.0, &el, "x_ohm_per_km", "x_ohm_per_km >= 0");
        if line.r_ohm_per_km >= 0.0 && line.x_ohm_per_km >= 0.0 {
            ck.require(
                line.r_ohm_per_km > 0.0 || line.x_ohm_per_km > 0.0,
                &el,
                "x_ohm_per_km",
                "r_ohm_per_km and x_ohm_per_km not both zero",
            );
        }
        ck.require(line.endtemp_degc >= 20.0, &el, "endtemp_degc", "endtemp_degc >= 20");
        if let (Some(a), Some(b)) = (from, to) {
            ck.require(a == b, &el, "to_bus", "from_bus.vn_kv == to_bus.vn_kv");
        }
    }

    for (i, t) in network.transformers2w.iter().enumerate() {
        let el = format!("transformers2w[{i}]");
        ck.bus_ref(t.hv_bus, &el, "hv_bus");
        ck.bus_ref(t.lv_bus, &el, "lv_bus");
        ck.require(t.hv_bus != t.lv_bus, &el, "lv_bus", "hv_bus != lv_bus");
        ck.require(t.sn_mva > 0.0 && t.sn_mva.is_finite(), &el, "sn_mva", "sn_mva > 0");
        ck.require(t.vn_hv_kv > 0.0, &el, "vn_hv_kv", "vn_hv_kv > 0");
        ck.require(t.vn_lv_kv > 0.0, &el, "vn_lv_kv", "vn_lv_kv > 0");
        check_vk(&mut ck, &el, ("vk_percent", t.vk_percent), ("vkr_percent", t.vkr_percent));
    }

    for (i, t) in network.transformers3w.iter().enumerate() {
        let el = format!("transformers3w[{i}]");
        ck.bus_ref(t.hv_bus, &el, "hv_bus");
        ck.bus_ref(t.mv_bus, &el, "mv_bus");
        ck.bus_ref(t.lv_bus, &el, "lv_bus");
        let distinct = t.hv_bus != t.mv_bus && t.mv_bus != t.lv_bus && t.hv_bus != t.lv_bus;
        ck.require(distinct, &el, "lv_bus", "hv_bus, mv_bus and lv_bus distinct");
        for (field, sn) in [
            ("sn_hv_mva", t.sn_hv_mva),
            ("sn_mv_mva", t.sn_mv_mva),
            ("sn_lv_mva", t.sn_lv_mva),
        ] {
            ck.require(sn > 0.0 && sn.is_finite(), &el, field, "sn > 0");
        }
        for (field, vn) in [
            ("vn_hv_kv", t.vn_hv_kv),
            ("vn_mv_kv", t.vn_mv_kv),
            ("vn_lv_kv", t.vn_lv_kv),
        ] {
            ck.require(vn > 0.0, &el, field, "vn > 0");
        }
        check_vk(&mut ck, &el, ("vk_hm_percent", t.vk_hm_percent), ("vkr_hm_percent", t.vkr_hm_percent));
        check_vk(&mut ck, &el, ("vk_ml_percent", t.vk_ml_percent), ("vkr_ml_percent", t.vkr_ml_percent));
        check_vk(&mut ck, &el, ("vk_hl_percent", t.vk_hl_percent), ("vkr_hl_percent", t.vkr_hl_percent));
    }

    for (i, cs) in network.converter_sources.iter().enumerate() {
        let el = format!("converter_sources[{i}]");
        ck.bus_ref(cs.bus, &el, "bus");
        ck.require(cs.sn_mva > 0.0 && cs.sn_mva.is_finite(), &el, "sn_mva", "sn_mva > 0");
        ck.require(cs.k >= 0.0 && cs.k.is_finite(), &el, "k", "k >= 0");
    }

    for (i, sw) in network.switches.iter().enumerate() {
        let el = format!("switches[{i}]");
        let bus_vn = ck.bus_ref(sw.bus, &el, "bus").map(|b| b.vn_kv);
        let attached = match sw.other {
            SwitchTarget::Bus(other) => {
                if let (Some(a), Some(b)) = (bus_vn, ck.bus_ref(other, &el, "other").map(|b| b.vn_kv)) {
                    ck.require(a == b, &el, "other", "bus-bus switch connects equal vn_kv");
                }
                continue;
            }
            SwitchTarget::Line(idx) => network
                .lines
                .get(idx)
                .map(|l| l.from_bus == sw.bus || l.to_bus == sw.bus),
            SwitchTarget::Transformer2w(idx) => network
                .transformers2w
                .get(idx)
                .map(|t| t.hv_bus == sw.bus || t.lv_bus == sw.bus),
            SwitchTarget::Transformer3w(idx) => network
                .transformers3w
                .get(idx)
                .map(|t| t.hv_bus == sw.bus || t.mv_bus == sw.bus || t.lv_bus == sw.bus),
            SwitchTarget::ExternalGrid(idx) => network.external_grids.get(idx).map(|e| e.bus == sw.bus),
            SwitchTarget::ConverterSource(idx) => {
                network.converter_sources.get(idx).map(|c| c.bus == sw.bus)
            }
        };
        match attached {
            None => ck.out.push(Violation::new(&el, "other", "references an existing element")),
            Some(ok) => ck.require(ok, &el, "other", "element is connected to bus"),
        }
    }

    let has_source = network.external_grids.iter().any(|eg| {
        eg.in_service && ck.buses.get(&eg.bus).is_some_and(|b| b.in_service)
    });
    ck.require(
        has_source,
        "network",
        "external_grids",
        "at least one in-service external grid",
    );

    ck.out
}

fn check_vk(ck: &mut Checker<'_>, el: &str, vk: (&str, f64), vkr: (&str, f64)) {
    let (vk_field, vk) = vk;
    let (vkr_field, vkr) = vkr;
    ck.require(vkr >= 0.0, el, vkr_field, "vkr >= 0");
    ck.require(vkr < vk, el, vkr_field, "vkr < vk");
    ck.require(vk <= 100.0, el, vk_field, "vk <= 100");
}
