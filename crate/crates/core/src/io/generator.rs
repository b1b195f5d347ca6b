//! Synthetic radially operated MV grids.
//!
//! Layout: bus 0 is the 110 kV connection point with the external grid,
//! bus 1 the 20 kV substation busbar behind one HV/MV transformer, and every
//! feeder is a chain of cable sections starting at the busbar. The first
//! section of every feeder has the same length, the remaining ones are drawn
//! from the seed, as are converter ratings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid_model::{BusId, ExternalGrid, Line, Network, Transformer2W};

pub const HV_KV: f64 = 110.0;
pub const MV_KV: f64 = 20.0;
pub const FEEDER_HEAD_KM: f64 = 0.5;
const SECTION_KM: (f64, f64) = (0.2, 1.2);
const CONVERTER_MVA: (f64, f64) = (0.3, 2.0);

// NA2XS2Y 1x185 RM/25 12/20 kV
const CABLE_R_OHM_PER_KM: f64 = 0.161;
const CABLE_X_OHM_PER_KM: f64 = 0.117;
const CABLE_ENDTEMP_DEGC: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadialGridSpec {
    pub feeders: usize,
    pub buses_per_feeder: usize,
    /// Put a converter on every n-th feeder bus (counted across feeders).
    pub dg_every: Option<usize>,
    pub seed: u64,
}

pub fn generate_radial_grid(spec: RadialGridSpec) -> Network {
    let RadialGridSpec { feeders, buses_per_feeder, dg_every, seed } = spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(format!(
        "radial-{feeders}x{buses_per_feeder}-dg{}-seed{seed}",
        dg_every.map_or_else(|| "none".to_string(), |n| n.to_string())
    ));

    let hv = net.add_bus(0, "HV connection", HV_KV);
    let busbar = net.add_bus(1, "MV busbar", MV_KV);
    net.external_grids.push(ExternalGrid {
        bus: hv,
        s_sc_max_mva: 3000.0,
        s_sc_min_mva: 2000.0,
        rx_max: 0.1,
        rx_min: 0.1,
        in_service: true,
    });
    net.transformers2w.push(Transformer2W {
        hv_bus: hv,
        lv_bus: busbar,
        sn_mva: 40.0,
        vn_hv_kv: HV_KV,
        vn_lv_kv: MV_KV,
        vk_percent: 12.0,
        vkr_percent: 0.4,
        in_service: true,
    });

    let mut next_id = 2u64;
    let mut counter = 0usize;
    for f in 0..feeders {
        let mut upstream = busbar;
        for s in 0..buses_per_feeder {
            let bus = net.add_bus(next_id, format!("F{}-{}", f + 1, s + 1), MV_KV);
            next_id += 1;
            let length_km = if s == 0 {
                FEEDER_HEAD_KM
            } else {
                rng.gen_range(SECTION_KM.0..SECTION_KM.1)
            };
            net.lines.push(Line {
                from_bus: upstream,
                to_bus: bus,
                length_km,
                r_ohm_per_km: CABLE_R_OHM_PER_KM,
                x_ohm_per_km: CABLE_X_OHM_PER_KM,
                endtemp_degc: CABLE_ENDTEMP_DEGC,
                in_service: true,
            });
            counter += 1;
            if dg_every.is_some_and(|n| n > 0 && counter % n == 0) {
                let sn = rng.gen_range(CONVERTER_MVA.0..CONVERTER_MVA.1);
                net.add_converter(bus, sn, 1.0);
            }
            upstream = bus;
        }
    }
    net
}

/// First bus of each feeder.
pub fn feeder_heads(spec: &RadialGridSpec) -> Vec<BusId> {
    (0..spec.feeders)
        .map(|f| BusId(2 + (f * spec.buses_per_feeder) as u64))
        .collect()
}
