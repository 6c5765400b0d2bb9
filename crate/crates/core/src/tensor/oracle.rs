//! Reference evaluation of a tensor network by explicit nested summation.
//!
//! Used only to cross-check the contraction engine in tests; it shares no
//! code with [`crate::network::TensorNetwork::evaluate`].

use super::{increment_index, DenseTensor};
use crate::error::{Result, TnError};

/// Default cap on `Π dims · Π ranks` accepted by [`brute_force_tn_eval`].
pub const DEFAULT_ORACLE_CAP: u128 = 50_000_000;

/// Evaluates the network whose core `k` has `p` modes, mode `k` being the
/// dangling leg and mode `j ≠ k` the bond shared with core `j`. Every
/// output entry is the full sum over all bond indices of the product of
/// core entries.
pub fn brute_force_tn_eval(cores: &[DenseTensor], cap: u128) -> Result<DenseTensor> {
    let p = cores.len();
    if p == 0 {
        return Err(TnError::InconsistentNetwork("no cores".into()));
    }
    for (k, c) in cores.iter().enumerate() {
        if c.order() != p {
            return Err(TnError::InconsistentNetwork(format!(
                "core {k} has order {} but the network has {p} cores",
                c.order()
            )));
        }
    }
    let dims: Vec<usize> = (0..p).map(|k| cores[k].dims()[k]).collect();
    let mut bonds = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let r = cores[i].dims()[j];
            if cores[j].dims()[i] != r {
                return Err(TnError::InconsistentNetwork(format!(
                    "bond ({i}, {j}) has size {r} on core {i} but {} on core {j}",
                    cores[j].dims()[i]
                )));
            }
            bonds.push((i, j, r));
        }
    }
    let bond_sizes: Vec<usize> = bonds.iter().map(|b| b.2).collect();
    let work = dims
        .iter()
        .chain(&bond_sizes)
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if work > cap {
        return Err(TnError::OracleTooLarge { work, cap });
    }

    let n_bond_configs: usize = bond_sizes.iter().product();
    let mut core_index = vec![vec![0usize; p]; p];
    DenseTensor::from_fn(dims.clone(), |out| {
        let mut total = 0.0;
        let mut bond_idx = vec![0usize; bonds.len()];
        for _ in 0..n_bond_configs {
            for k in 0..p {
                core_index[k][k] = out[k];
            }
            for (b, &(i, j, _)) in bonds.iter().enumerate() {
                core_index[i][j] = bond_idx[b];
                core_index[j][i] = bond_idx[b];
            }
            let mut prod = 1.0;
            for k in 0..p {
                prod *= cores[k].get(&core_index[k]);
            }
            total += prod;
            increment_index(&mut bond_idx, &bond_sizes);
        }
        total
    })
}
