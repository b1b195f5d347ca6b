//! Dense reference solution in physical units.
//!
//! Y is assembled in siemens with voltages in kV and currents in kA, every
//! transformer as an ideal ratio plus its series impedance. Z is the full
//! Gauss-Jordan inverse, and the converter share is the explicit row sum
//! `Σ_m Z_jm·I_m / Z_jj`. Nothing from the library's builder or solver is used.

use std::collections::BTreeMap;

use num_complex::Complex64;
use sccalc::{BusId, Case, FaultStudyOptions, Network, SwitchTarget};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub bus: BusId,
    pub energized: bool,
    pub source_ka: f64,
    pub converter_ka: f64,
    pub total_ka: f64,
}

pub fn c_factor(vn_kv: f64, lv_tolerance: u8, case: Case) -> f64 {
    match (vn_kv > 1.0, lv_tolerance, case) {
        (true, _, Case::Max) => 1.10,
        (true, _, Case::Min) => 1.00,
        (false, 6, Case::Max) => 1.05,
        (false, 10, Case::Max) => 1.10,
        (false, _, Case::Min) => 0.95,
        (false, t, _) => panic!("tolerance {t}"),
    }
}

pub fn k_t(vk: f64, vkr: f64, c_max: f64) -> C {
    let x = (vk.powi(2) - vkr.powi(2)).sqrt() / 100.0;
    C::new(vkr / 100.0, x) * (0.95 * c_max / (1.0 + 0.6 * x))
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(mut a: Vec<Vec<C>>) -> Vec<Vec<C>> {
    let n = a.len();
    let mut inv: Vec<Vec<C>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { C::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .expect("non-empty");
        assert!(a[p][col].norm() > 0.0, "oracle matrix singular at column {col}");
        a.swap(col, p);
        inv.swap(col, p);
        let piv = a[col][col];
        for j in 0..n {
            a[col][j] /= piv;
            inv[col][j] /= piv;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != ZERO {
                    for j in 0..n {
                        let (ac, ic) = (a[col][j], inv[col][j]);
                        a[i][j] -= f * ac;
                        inv[i][j] -= f * ic;
                    }
                }
            }
        }
    }
    inv
}

/// Fault currents at every bus of `net`, ascending bus id.
pub fn oracle(net: &Network, opt: &FaultStudyOptions) -> Vec<OracleRow> {
    let live: BTreeMap<BusId, f64> = net
        .buses
        .iter()
        .filter(|b| b.in_service)
        .map(|b| (b.id, b.vn_kv))
        .collect();
    let all_vn: BTreeMap<BusId, f64> = net.buses.iter().map(|b| (b.id, b.vn_kv)).collect();
    let ids: Vec<BusId> = live.keys().copied().collect();
    let pos = |b: BusId| ids.binary_search(&b).ok();

    // Closed couplers: relabel until stable.
    let mut node: Vec<usize> = (0..ids.len()).collect();
    loop {
        let mut changed = false;
        for sw in &net.switches {
            if let (SwitchTarget::Bus(o), true) = (sw.other, sw.closed) {
                if let (Some(a), Some(b)) = (pos(sw.bus), pos(o)) {
                    let (x, y) = (node[a], node[b]);
                    if x != y {
                        let keep = x.min(y);
                        for v in node.iter_mut() {
                            if *v == x || *v == y {
                                *v = keep;
                            }
                        }
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let open = |target: SwitchTarget, bus: BusId| {
        net.switches.iter().any(|s| !s.closed && s.other == target && s.bus == bus)
    };
    let attached = |target: SwitchTarget, bus: BusId| pos(bus).is_some() && !open(target, bus);

    let n_star = net.transformers3w.len();
    let m = ids.len() + n_star;
    let mut y = vec![vec![ZERO; m]; m];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut series = |y: &mut Vec<Vec<C>>, a: usize, b: usize, z: C, ra: f64, rb: f64| {
        // ideal ratios ra at terminal a and rb at terminal b onto a common side
        if a == b {
            return;
        }
        let adm = C::new(1.0, 0.0) / z;
        y[a][a] += adm * ra * ra;
        y[b][b] += adm * rb * rb;
        y[a][b] -= adm * ra * rb;
        y[b][a] -= adm * ra * rb;
        edges.push((a, b));
    };
    let nd = |b: BusId| node[pos(b).expect("live bus")];
    let cmax = |vn: f64| c_factor(vn, opt.lv_tolerance_percent, Case::Max);

    let mut sources = vec![false; m];
    for (i, eg) in net.external_grids.iter().enumerate() {
        if !eg.in_service || !attached(SwitchTarget::ExternalGrid(i), eg.bus) {
            continue;
        }
        let vn = live[&eg.bus];
        let (s, rx) = match opt.case {
            Case::Max => (eg.s_sc_max_mva, eg.rx_max),
            Case::Min => (eg.s_sc_min_mva, eg.rx_min),
        };
        let zabs = c_factor(vn, opt.lv_tolerance_percent, opt.case) * vn * vn / s;
        let x = zabs / (1.0 + rx * rx).sqrt();
        let k = nd(eg.bus);
        y[k][k] += C::new(1.0, 0.0) / C::new(rx * x, x);
        sources[k] = true;
    }
    for (i, l) in net.lines.iter().enumerate() {
        let t = SwitchTarget::Line(i);
        if !l.in_service || !attached(t, l.from_bus) || !attached(t, l.to_bus) {
            continue;
        }
        let r20 = l.r_ohm_per_km * l.length_km;
        let r = match opt.case {
            Case::Max => r20,
            Case::Min => r20 * (1.0 + 0.004 * (l.endtemp_degc - 20.0)),
        };
        let z = C::new(r, l.x_ohm_per_km * l.length_km);
        series(&mut y, nd(l.from_bus), nd(l.to_bus), z, 1.0, 1.0);
    }
    for (i, t) in net.transformers2w.iter().enumerate() {
        let tg = SwitchTarget::Transformer2w(i);
        if !t.in_service || !attached(tg, t.hv_bus) || !attached(tg, t.lv_bus) {
            continue;
        }
        let z_lv = k_t(t.vk_percent, t.vkr_percent, cmax(live[&t.lv_bus])) * (t.vn_lv_kv.powi(2) / t.sn_mva);
        let ratio = t.vn_hv_kv / t.vn_lv_kv;
        series(&mut y, nd(t.hv_bus), nd(t.lv_bus), z_lv, 1.0 / ratio, 1.0);
    }
    for (i, t) in net.transformers3w.iter().enumerate() {
        let tg = SwitchTarget::Transformer3w(i);
        let up = [attached(tg, t.hv_bus), attached(tg, t.mv_bus), attached(tg, t.lv_bus)];
        if !t.in_service || up.iter().filter(|&&u| u).count() < 2 {
            continue;
        }
        let vn_of = |b: BusId| all_vn[&b];
        let (vh, vm, vl) = (vn_of(t.hv_bus), vn_of(t.mv_bus), vn_of(t.lv_bus));
        let hv2 = t.vn_hv_kv.powi(2);
        let z_hm = k_t(t.vk_hm_percent, t.vkr_hm_percent, cmax(vh.min(vm))) * (hv2 / t.sn_hv_mva.min(t.sn_mv_mva));
        let z_ml = k_t(t.vk_ml_percent, t.vkr_ml_percent, cmax(vm.min(vl))) * (hv2 / t.sn_mv_mva.min(t.sn_lv_mva));
        let z_hl = k_t(t.vk_hl_percent, t.vkr_hl_percent, cmax(vh.min(vl))) * (hv2 / t.sn_hv_mva.min(t.sn_lv_mva));
        let arms = [
            (t.hv_bus, t.vn_hv_kv, (z_hm + z_hl - z_ml) * 0.5),
            (t.mv_bus, t.vn_mv_kv, (z_hm + z_ml - z_hl) * 0.5),
            (t.lv_bus, t.vn_lv_kv, (z_hl + z_ml - z_hm) * 0.5),
        ];
        let star = ids.len() + i;
        for (w, &(bus, vn_rated, z)) in arms.iter().enumerate() {
            if up[w] {
                series(&mut y, nd(bus), star, z, t.vn_hv_kv / vn_rated, 1.0);
            }
        }
    }

    let mut inj = vec![ZERO; m];
    if opt.consider_converters {
        for (i, cs) in net.converter_sources.iter().enumerate() {
            if !cs.in_service || !attached(SwitchTarget::ConverterSource(i), cs.bus) {
                continue;
            }
            let vn = live[&cs.bus];
            inj[nd(cs.bus)] += C::new(0.0, -cs.k * cs.sn_mva / (3f64.sqrt() * vn));
        }
    }

    // Energized: connected to a node with an external grid.
    let mut energized = sources.clone();
    loop {
        let mut changed = false;
        for &(a, b) in &edges {
            if energized[a] != energized[b] {
                energized[a] = true;
                energized[b] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let keep: Vec<usize> = (0..m).filter(|&k| energized[k]).collect();
    let sub: Vec<Vec<C>> = keep.iter().map(|&i| keep.iter().map(|&j| y[i][j]).collect()).collect();
    let z = invert(sub);
    let local = |k: usize| keep.binary_search(&k).ok();

    net.buses
        .iter()
        .map(|b| b.id)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|bus| {
            let dead = OracleRow { bus, energized: false, source_ka: 0.0, converter_ka: 0.0, total_ka: 0.0 };
            let Some(p) = pos(bus) else { return dead };
            let Some(j) = local(node[p]) else { return dead };
            let vn = live[&bus];
            let c = c_factor(vn, opt.lv_tolerance_percent, opt.case);
            let zjj = z[j][j];
            let i1 = C::new(c * vn / 3f64.sqrt(), 0.0) / zjj;
            let mut row_sum = ZERO;
            for (mi, &k) in keep.iter().enumerate() {
                row_sum += z[j][mi] * inj[k];
            }
            let i2 = row_sum / zjj;
            OracleRow {
                bus,
                energized: true,
                source_ka: i1.norm(),
                converter_ka: i2.norm(),
                total_ka: i1.norm() + i2.norm(),
            }
        })
        .collect()
}
