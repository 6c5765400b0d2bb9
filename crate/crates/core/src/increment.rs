//! Rank increments with weight transfer.
//!
//! Growing edge `(i, j)` appends one slice to mode `j` of core `i` and one
//! to mode `i` of core `j`. With zero slices the network represents exactly
//! the same tensor: the extra bond index only ever multiplies a zero. Small
//! random slices break the symmetry so that the next optimization can use
//! the new capacity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TnError};
use crate::network::TensorNetwork;
use crate::seed::derive_seed;
use crate::tensor::{uniform_sym, DenseTensor};

/// How the appended slice is filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceInit {
    Zeros,
    /// I.i.d. uniform on `[-half_width, half_width]`.
    UniformNoise { half_width: f64 },
}

impl SliceInit {
    pub const DEFAULT_NOISE: f64 = 1e-3;

    pub fn noise(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(TnError::InvalidConfig(format!(
                "slice noise half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self::UniformNoise { half_width })
    }

    pub fn half_width(&self) -> f64 {
        match self {
            SliceInit::Zeros => 0.0,
            SliceInit::UniformNoise { half_width } => *half_width,
        }
    }
}

impl Default for SliceInit {
    fn default() -> Self {
        SliceInit::UniformNoise {
            half_width: Self::DEFAULT_NOISE,
        }
    }
}

/// Grows `mode` of `core` by one; the new slice is the last index of that
/// mode. `dangling_mode` is the core's own output leg, which may not grow.
pub fn add_slice(
    core: &DenseTensor,
    mode: usize,
    dangling_mode: usize,
    init: SliceInit,
    seed: u64,
) -> Result<DenseTensor> {
    if mode >= core.order() {
        return Err(TnError::InvalidMode {
            mode,
            reason: format!("core has order {}", core.order()),
        });
    }
    if mode == dangling_mode {
        return Err(TnError::InvalidMode {
            mode,
            reason: "cannot grow the dangling mode".into(),
        });
    }
    let dims = core.dims();
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let block = dims[mode] * inner;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(outer * (block + inner));
    for o in 0..outer {
        data.extend_from_slice(&core.data()[o * block..(o + 1) * block]);
        for _ in 0..inner {
            data.push(match init {
                SliceInit::Zeros => 0.0,
                SliceInit::UniformNoise { half_width } => uniform_sym(&mut rng, half_width),
            });
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[mode] += 1;
    DenseTensor::new(new_dims, data)
}

/// `R_ij ← R_ij + 1` with both adjacent cores padded by [`add_slice`]. The
/// returned network remembers `(min(i,j), max(i,j))` as its last increment.
pub fn increment_edge(
    net: &TensorNetwork,
    i: usize,
    j: usize,
    init: SliceInit,
    seed: u64,
) -> Result<TensorNetwork> {
    if i == j {
        return Err(TnError::SelfEdge(i));
    }
    let p = net.node_count();
    if i >= p || j >= p {
        return Err(TnError::InconsistentNetwork(format!(
            "edge ({i}, {j}) out of range for {p} nodes"
        )));
    }
    let (i, j) = (i.min(j), i.max(j));
    let (mut ranks, dims, mut cores) = net.clone().into_parts();
    cores[i] = add_slice(&cores[i], j, i, init, derive_seed(seed, &[0]))?;
    cores[j] = add_slice(&cores[j], i, j, init, derive_seed(seed, &[1]))?;
    ranks.set(i, j, ranks.get(i, j) + 1);
    let mut next = TensorNetwork::new(ranks, dims, cores)?;
    next.set_last_increment(Some((i, j)));
    Ok(next)
}

/// Number of parameters added by growing `(i, j)`:
/// `dᵢ Π_{k∉{i,j}} R_ik + dⱼ Π_{k∉{i,j}} R_jk`.
pub fn increment_cost(net: &TensorNetwork, i: usize, j: usize) -> usize {
    let side = |a: usize, b: usize| {
        net.dims()[a]
            * (0..net.node_count())
                .filter(|&k| k != a && k != b)
                .map(|k| net.rank(a, k))
                .product::<usize>()
    };
    side(i, j) + side(j, i)
}
