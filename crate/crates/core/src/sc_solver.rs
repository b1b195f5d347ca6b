//! Initial symmetrical short-circuit currents at all fault buses at once.
//!
//! With `Z = Y⁻¹`, a fault at bus j draws `I''_kI,j = U_Q,j / Z_jj` from the
//! equivalent voltage source. Converter units, modelled as ideal current
//! sources `I_kC`, add `I''_kII,j = (Σ_m Z_jm·I_kC,m) / Z_jj`; the row sums for
//! every j come out of a single solve `Y·u = I_kC`. Only the diagonal of `Z`
//! is ever formed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScError};
use crate::grid_model::{BusId, Network};
use crate::linalg::{AdmittanceMatrix, Factorization, LinalgError, SolverStrategy};
use crate::network_builder::{build_bbm, BusBranchModel, Case, FaultBuses, FaultStudyOptions};

/// Below this |Z_jj| (per unit) the fault sits on an ideal node and no finite
/// current is reported.
pub const DEGENERATE_IMPEDANCE_PU: f64 = 1e-12;

fn singular(err: LinalgError, island_of_row: Option<&[BusId]>) -> ScError {
    let LinalgError::Singular { row } = err;
    let island = island_of_row
        .and_then(|v| v.get(row))
        .map_or_else(|| format!("row {row}"), |b| format!("bus {b}"));
    ScError::SingularMatrix { row, island }
}

/// Diagonal of `Y⁻¹`.
pub fn impedance_matrix_diag(y: &AdmittanceMatrix, strategy: SolverStrategy) -> Result<Vec<Complex64>> {
    let f = Factorization::new(y, strategy).map_err(|e| singular(e, None))?;
    let rows: Vec<usize> = (0..y.dim()).collect();
    Ok(f.inverse_diag(&rows))
}

pub fn voltage_source_currents(z_diag: &[Complex64], u_q: &[f64]) -> Vec<Complex64> {
    z_diag.iter().zip(u_q).map(|(&z, &u)| u / z).collect()
}

/// Converter share of the fault current for faults at every row of `y`.
pub fn converter_contribution(
    y: &AdmittanceMatrix,
    z_diag: &[Complex64],
    i_kc: &[Complex64],
    strategy: SolverStrategy,
) -> Result<Vec<Complex64>> {
    if i_kc.iter().all(|i| i.norm() == 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); z_diag.len()]);
    }
    let f = Factorization::new(y, strategy).map_err(|e| singular(e, None))?;
    let u = f.solve(i_kc);
    Ok(u.iter().zip(z_diag).map(|(&u, &z)| u / z).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentCurrents {
    pub ikss_source_ka: f64,
    pub ikss_converter_ka: f64,
    pub ikss_ka: f64,
}

/// Magnitudes in kA; the total is the sum of the component magnitudes.
pub fn total_current(
    i_k1: &[Complex64],
    i_k2: &[Complex64],
    i_base_ka: &[f64],
) -> Vec<ComponentCurrents> {
    i_k1.iter()
        .zip(i_k2)
        .zip(i_base_ka)
        .map(|((a, b), &base)| {
            let source = a.norm() * base;
            let converter = b.norm() * base;
            ComponentCurrents {
                ikss_source_ka: source,
                ikss_converter_ka: converter,
                ikss_ka: source + converter,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusStatus {
    Energized,
    NotEnergized,
    /// |Z_jj| below [`DEGENERATE_IMPEDANCE_PU`].
    DegenerateImpedance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusResult {
    pub bus: BusId,
    pub name: String,
    pub vn_kv: f64,
    pub status: BusStatus,
    pub c: Option<f64>,
    pub currents: Option<ComponentCurrents>,
}

impl BusResult {
    pub fn energized(&self) -> bool {
        self.status != BusStatus::NotEnergized
    }

    pub fn ikss_ka(&self) -> Option<f64> {
        self.currents.map(|c| c.ikss_ka)
    }

    pub fn ikss_source_ka(&self) -> Option<f64> {
        self.currents.map(|c| c.ikss_source_ka)
    }

    pub fn ikss_converter_ka(&self) -> Option<f64> {
        self.currents.map(|c| c.ikss_converter_ka)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortCircuitResult {
    pub case: Case,
    pub options: FaultStudyOptions,
    /// Ascending bus id.
    pub rows: Vec<BusResult>,
}

impl ShortCircuitResult {
    pub fn bus(&self, id: BusId) -> Option<&BusResult> {
        self.rows
            .binary_search_by_key(&id, |r| r.bus)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn ikss_ka(&self, id: BusId) -> Option<f64> {
        self.bus(id).and_then(BusResult::ikss_ka)
    }
}

/// Run one fault study: build the bus-branch model, then evaluate every
/// requested fault bus against a single factorization of Y.
pub fn calc_sc(network: &Network, options: &FaultStudyOptions) -> Result<ShortCircuitResult> {
    let bbm = build_bbm(network, options)?;
    solve_bbm(network, &bbm, options)
}

pub fn solve_bbm(
    network: &Network,
    bbm: &BusBranchModel,
    options: &FaultStudyOptions,
) -> Result<ShortCircuitResult> {
    let mut fault_ids: Vec<BusId> = match &options.fault_buses {
        FaultBuses::All => network.buses.iter().map(|b| b.id).collect(),
        FaultBuses::Explicit(ids) => ids.clone(),
    };
    fault_ids.sort_unstable();
    fault_ids.dedup();

    let mut rows: Vec<usize> = fault_ids
        .iter()
        .filter_map(|id| bbm.bus_index.get(id).copied())
        .collect();
    rows.sort_unstable();
    rows.dedup();

    let mut by_row = vec![None; bbm.dim()];
    if !rows.is_empty() {
        let f = Factorization::new(&bbm.y_matrix, options.solver)
            .map_err(|e| singular(e, Some(&bbm.island_of_row)))?;
        let z_diag = f.inverse_diag(&rows);
        let u_q: Vec<f64> = rows.iter().map(|&r| bbm.u_q[r]).collect();
        let i_k1 = voltage_source_currents(&z_diag, &u_q);
        let i_k2: Vec<Complex64> = if bbm.i_kc.iter().any(|i| i.norm() > 0.0) {
            let u = f.solve(&bbm.i_kc);
            rows.iter().zip(&z_diag).map(|(&r, &z)| u[r] / z).collect()
        } else {
            vec![Complex64::new(0.0, 0.0); rows.len()]
        };
        let bases: Vec<f64> = rows.iter().map(|&r| bbm.i_base_ka[r]).collect();
        let currents = total_current(&i_k1, &i_k2, &bases);
        for (k, &r) in rows.iter().enumerate() {
            by_row[r] = Some(if z_diag[k].norm() < DEGENERATE_IMPEDANCE_PU {
                None
            } else {
                Some(currents[k])
            });
        }
    }

    let buses = network.bus_map();
    let rows = fault_ids
        .iter()
        .map(|id| {
            let bus = buses[id];
            let (status, c, currents) = match bbm.bus_index.get(id) {
                None => (BusStatus::NotEnergized, None, None),
                Some(&r) => match by_row[r].expect("row evaluated") {
                    Some(cur) => (BusStatus::Energized, Some(bbm.c_per_bus[r]), Some(cur)),
                    None => (BusStatus::DegenerateImpedance, Some(bbm.c_per_bus[r]), None),
                },
            };
            BusResult {
                bus: *id,
                name: bus.name.clone(),
                vn_kv: bus.vn_kv,
                status,
                c,
                currents,
            }
        })
        .collect();

    Ok(ShortCircuitResult {
        case: options.case,
        options: options.clone(),
        rows,
    })
}
