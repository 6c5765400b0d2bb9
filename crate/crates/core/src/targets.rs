//! Random benchmark targets over `7 × 7 × 7 × 7 × 7`: TT, TR, Tucker and a
//! "triangle" network whose fifth node hangs off the middle of a chain.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, TnError};
use crate::network::{RankMatrix, TensorNetwork};
use crate::tensor::DenseTensor;

pub const TARGET_DIMS: [usize; 5] = [7; 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    /// Chain with ranks 2, 3, 6, 5.
    Tt,
    /// Cycle with ranks 2, 3, 4, 5 and 5 closing it.
    Tr,
    /// Internal node joined to the leaves with ranks 2, 3, 4, 3, 2.
    Tucker,
    /// Chain 0-1-2-3 with ranks 5, 2, 5, plus node 4 joined to 1 and 2
    /// with rank 2 each.
    Triangle,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [TargetKind::Tt, TargetKind::Tr, TargetKind::Tucker, TargetKind::Triangle];

    pub fn as_str(&self) -> &'static str {
        match self {
            TargetKind::Tt => "tt",
            TargetKind::Tr => "tr",
            TargetKind::Tucker => "tucker",
            TargetKind::Triangle => "triangle",
        }
    }

    /// Rank matrix and dangling dims (the Tucker core is an extra internal
    /// node with dim 1).
    pub fn structure(&self) -> (RankMatrix, Vec<usize>) {
        let edges: &[(usize, usize, usize)] = match self {
            TargetKind::Tt => &[(0, 1, 2), (1, 2, 3), (2, 3, 6), (3, 4, 5)],
            TargetKind::Tr => &[(0, 1, 2), (1, 2, 3), (2, 3, 4), (3, 4, 5), (0, 4, 5)],
            TargetKind::Tucker => &[(0, 5, 2), (1, 5, 3), (2, 5, 4), (3, 5, 3), (4, 5, 2)],
            TargetKind::Triangle => &[(0, 1, 5), (1, 2, 2), (2, 3, 5), (1, 4, 2), (2, 4, 2)],
        };
        let mut dims = TARGET_DIMS.to_vec();
        if *self == TargetKind::Tucker {
            dims.push(1);
        }
        let ranks = RankMatrix::from_edges(dims.len(), edges).expect("static structure is valid");
        (ranks, dims)
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetKind {
    type Err = TnError;

    fn from_str(s: &str) -> Result<Self> {
        TargetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TnError::InvalidConfig(format!("unknown target '{s}'")))
    }
}

/// Network with the given structure and i.i.d. standard normal cores.
pub fn gaussian_network(ranks: RankMatrix, dims: Vec<usize>, seed: u64) -> Result<TensorNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = (0..dims.len())
        .map(|k| {
            let shape = ranks.core_dims(k, &dims);
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            DenseTensor::new(shape, data)
        })
        .collect::<Result<Vec<_>>>()?;
    TensorNetwork::new(ranks, dims, cores)
}

/// A random target of the given kind: the generating network and its full
/// tensor (internal modes squeezed out, so always `7^5`).
pub fn random_target(kind: TargetKind, seed: u64) -> Result<(TensorNetwork, DenseTensor)> {
    let (ranks, dims) = kind.structure();
    let net = gaussian_network(ranks, dims, seed)?;
    let t = net.evaluate().into_reshape(TARGET_DIMS.to_vec())?;
    Ok((net, t))
}

/// A random TT network with arbitrary dims and chain ranks.
pub fn random_tt(dims: &[usize], chain_ranks: &[usize], seed: u64) -> Result<TensorNetwork> {
    if chain_ranks.len() + 1 != dims.len() {
        return Err(TnError::InvalidConfig(format!(
            "{} chain ranks for {} modes",
            chain_ranks.len(),
            dims.len()
        )));
    }
    let edges: Vec<_> = chain_ranks.iter().enumerate().map(|(i, &r)| (i, i + 1, r)).collect();
    gaussian_network(RankMatrix::from_edges(dims.len(), &edges)?, dims.to_vec(), seed)
}
