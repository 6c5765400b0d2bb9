//! Tensor-network model: a symmetric rank matrix plus one core per node.
//!
//! Core `k` always has one mode per node. Mode `k` is the dangling leg of
//! size `dims[k]`; mode `j ≠ k` is the bond to node `j` of size
//! `R[k][j]`. A bond of size 1 is the same as no edge, and a node with
//! `dims[k] == 1` is an internal node.

pub mod contraction;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use contraction::{contract_labeled, ContractionOrder, Label};

use crate::error::{Result, TnError};
use crate::tensor::DenseTensor;

/// Symmetric matrix of edge sizes; the diagonal is unused and fixed to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMatrix {
    n: usize,
    r: Vec<usize>,
}

impl RankMatrix {
    /// All edges of size 1 (no edges).
    pub fn ones(n: usize) -> Self {
        Self { n, r: vec![1; n * n] }
    }

    /// Builds a rank matrix from `(i, j, rank)` triples; unspecified pairs are 1.
    pub fn from_edges(n: usize, edges: &[(usize, usize, usize)]) -> Result<Self> {
        let mut m = Self::ones(n);
        for &(i, j, r) in edges {
            if i == j {
                return Err(TnError::SelfEdge(i));
            }
            if i >= n || j >= n {
                return Err(TnError::InconsistentNetwork(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if r == 0 {
                return Err(TnError::InconsistentNetwork(format!("edge ({i}, {j}) has rank 0")));
            }
            m.set(i, j, r);
        }
        Ok(m)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        if i == j {
            1
        } else {
            self.r[i * self.n + j]
        }
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, rank: usize) {
        self.r[i * self.n + j] = rank;
        self.r[j * self.n + i] = rank;
    }

    /// Appends `extra` nodes with no edges.
    pub(crate) fn grown(&self, extra: usize) -> Self {
        let n = self.n + extra;
        let mut m = Self::ones(n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m.r[i * n + j] = self.get(i, j);
                }
            }
        }
        m
    }

    /// `(i, j, R_ij)` for `i < j` in lexicographic order, optionally
    /// including size-1 (absent) edges.
    pub fn edges(&self, include_unit: bool) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let r = self.get(i, j);
                if include_unit || r > 1 {
                    out.push((i, j, r));
                }
            }
        }
        out
    }

    /// Mode sizes of core `k` given the dangling dims.
    pub fn core_dims(&self, k: usize, dims: &[usize]) -> Vec<usize> {
        (0..self.n)
            .map(|j| if j == k { dims[k] } else { self.get(k, j) })
            .collect()
    }
}

/// A tensor network: structure (rank matrix, dangling dims) and cores.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorNetwork {
    ranks: RankMatrix,
    dims: Vec<usize>,
    cores: Vec<DenseTensor>,
    last_increment: Option<(usize, usize)>,
}

impl TensorNetwork {
    pub fn new(ranks: RankMatrix, dims: Vec<usize>, cores: Vec<DenseTensor>) -> Result<Self> {
        let n = ranks.node_count();
        if dims.len() != n || cores.len() != n {
            return Err(TnError::InconsistentNetwork(format!(
                "{n} nodes but {} dangling dims and {} cores",
                dims.len(),
                cores.len()
            )));
        }
        if n == 0 {
            return Err(TnError::InvalidShape {
                dims,
                reason: "a network needs at least one node".into(),
            });
        }
        for (k, core) in cores.iter().enumerate() {
            let expected = ranks.core_dims(k, &dims);
            if core.dims() != expected.as_slice() {
                return Err(TnError::InconsistentNetwork(format!(
                    "core {k} has dims {:?}, structure requires {expected:?}",
                    core.dims()
                )));
            }
        }
        Ok(Self {
            ranks,
            dims,
            cores,
            last_increment: None,
        })
    }

    /// Random cores with i.i.d. entries uniform in `[-scale, scale]`.
    pub fn random(ranks: RankMatrix, dims: Vec<usize>, seed: u64, scale: f64) -> Result<Self> {
        if dims.len() != ranks.node_count() {
            return Err(TnError::InconsistentNetwork(format!(
                "{} dangling dims for {} nodes",
                dims.len(),
                ranks.node_count()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cores = (0..dims.len())
            .map(|k| DenseTensor::random_uniform(ranks.core_dims(k, &dims), scale, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ranks, dims, cores)
    }

    /// Rank-one network: all edges of size 1, core `k` a random
    /// `dims[k]`-vector with entries uniform in `[-scale, scale]`.
    pub fn rank_one(dims: &[usize], seed: u64, scale: f64) -> Result<Self> {
        if dims.is_empty() {
            return Err(TnError::InvalidShape {
                dims: Vec::new(),
                reason: "empty dims".into(),
            });
        }
        Self::random(RankMatrix::ones(dims.len()), dims.to_vec(), seed, scale)
    }

    pub fn node_count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ranks(&self) -> &RankMatrix {
        &self.ranks
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.ranks.get(i, j)
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &DenseTensor {
        &self.cores[k]
    }

    /// The edge grown by the most recent `increment_edge`, cleared by any
    /// other modification.
    pub fn last_increment(&self) -> Option<(usize, usize)> {
        self.last_increment
    }

    pub(crate) fn set_last_increment(&mut self, edge: Option<(usize, usize)>) {
        self.last_increment = edge;
    }

    pub(crate) fn into_parts(self) -> (RankMatrix, Vec<usize>, Vec<DenseTensor>) {
        (self.ranks, self.dims, self.cores)
    }

    /// Replaces core `k` (same dims); clears the increment marker.
    pub fn with_core(&self, k: usize, core: DenseTensor) -> Result<Self> {
        let mut next = self.clone();
        next.replace_core(k, core)?;
        next.last_increment = None;
        Ok(next)
    }

    pub(crate) fn replace_core(&mut self, k: usize, core: DenseTensor) -> Result<()> {
        if core.dims() != self.cores[k].dims() {
            return Err(TnError::InconsistentNetwork(format!(
                "replacement core {k} has dims {:?}, expected {:?}",
                core.dims(),
                self.cores[k].dims()
            )));
        }
        self.cores[k] = core;
        Ok(())
    }

    /// `Σᵢ dᵢ · Πⱼ≠ᵢ R_ij`.
    pub fn param_count(&self) -> usize {
        (0..self.node_count())
            .map(|i| {
                self.dims[i]
                    * (0..self.node_count())
                        .filter(|&j| j != i)
                        .map(|j| self.ranks.get(i, j))
                        .product::<usize>()
            })
            .sum()
    }

    pub fn edge_list(&self, include_unit: bool) -> Vec<(usize, usize, usize)> {
        self.ranks.edges(include_unit)
    }

    /// Super-unit edges as `(i, j)` pairs.
    pub fn edge_support(&self) -> Vec<(usize, usize)> {
        self.edge_list(false).into_iter().map(|(i, j, _)| (i, j)).collect()
    }

    fn labels(&self, k: usize) -> Vec<Label> {
        (0..self.node_count())
            .map(|j| if j == k { Label::Dangling(k) } else { Label::bond(k, j) })
            .collect()
    }

    /// The represented tensor, of shape `dims` (singleton dims retained).
    pub fn evaluate(&self) -> DenseTensor {
        self.evaluate_with(ContractionOrder::GreedyMinSize)
    }

    pub fn evaluate_with(&self, order: ContractionOrder) -> DenseTensor {
        let items = (0..self.node_count())
            .map(|k| (self.cores[k].clone(), self.labels(k)))
            .collect();
        let output: Vec<Label> = (0..self.node_count()).map(Label::Dangling).collect();
        contract_labeled(items, &output, order).expect("network invariants guarantee a valid contraction")
    }

    /// Contraction of every core except `k`, as a matrix with one row per
    /// multi-index over the other dangling modes (ascending, row-major) and
    /// one column per multi-index over core `k`'s bond modes (ascending,
    /// row-major). With this layout `W₍ₖ₎ = G₍ₖ₎ · Eᵀ`.
    pub fn environment(&self, k: usize) -> DenseTensor {
        let p = self.node_count();
        let items = (0..p)
            .filter(|&m| m != k)
            .map(|m| (self.cores[m].clone(), self.labels(m)))
            .collect();
        let output: Vec<Label> = (0..p)
            .filter(|&m| m != k)
            .map(Label::Dangling)
            .chain((0..p).filter(|&m| m != k).map(|m| Label::bond(k, m)))
            .collect();
        let env = contract_labeled(items, &output, ContractionOrder::GreedyMinSize)
            .expect("network invariants guarantee a valid contraction");
        let rows: usize = (0..p).filter(|&m| m != k).map(|m| self.dims[m]).product();
        let cols: usize = (0..p).filter(|&m| m != k).map(|m| self.ranks.get(k, m)).product();
        env.into_reshape(vec![rows, cols]).expect("environment size")
    }
}

/// Inserts size-1 modes so that they sit at `positions` of the result.
pub fn augment_singletons(t: &DenseTensor, positions: &[usize]) -> Result<DenseTensor> {
    let total = t.order() + positions.len();
    let mut is_new = vec![false; total];
    for &p in positions {
        if p >= total || is_new[p] {
            return Err(TnError::InvalidMode {
                mode: p,
                reason: format!("invalid singleton position for result order {total}"),
            });
        }
        is_new[p] = true;
    }
    let mut old = t.dims().iter();
    let dims = is_new
        .iter()
        .map(|&n| if n { 1 } else { *old.next().expect("count checked") })
        .collect();
    t.reshape(dims)
}

/// Removes the size-1 modes at `positions`.
pub fn remove_singletons(t: &DenseTensor, positions: &[usize]) -> Result<DenseTensor> {
    for &p in positions {
        if p >= t.order() || t.dims()[p] != 1 {
            return Err(TnError::InvalidMode {
                mode: p,
                reason: "not a singleton mode".into(),
            });
        }
    }
    let dims = t
        .dims()
        .iter()
        .enumerate()
        .filter(|(m, _)| !positions.contains(m))
        .map(|(_, &d)| d)
        .collect();
    t.reshape(dims)
}

/// Dims with every size-1 mode dropped.
pub fn squeeze_dims(dims: &[usize]) -> Vec<usize> {
    dims.iter().copied().filter(|&d| d > 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::oracle::{brute_force_tn_eval, DEFAULT_ORACLE_CAP};
    use crate::tensor::{mode_n_product, DenseTensor};

    #[test]
    fn rank_one_init_shapes_and_params() {
        let net = TensorNetwork::rank_one(&[7, 7, 7, 7, 7], 3, 0.5).unwrap();
        assert_eq!(net.node_count(), 5);
        assert_eq!(net.param_count(), 35);
        for k in 0..5 {
            let mut shape = vec![1; 5];
            shape[k] = 7;
            assert_eq!(net.core(k).dims(), shape.as_slice());
            assert!(net.core(k).data().iter().all(|v| v.abs() <= 0.5));
        }
        assert_eq!(net, TensorNetwork::rank_one(&[7, 7, 7, 7, 7], 3, 0.5).unwrap());
        assert_ne!(net, TensorNetwork::rank_one(&[7, 7, 7, 7, 7], 4, 0.5).unwrap());
        assert!(TensorNetwork::rank_one(&[], 0, 1.0).is_err());
    }

    #[test]
    fn rank_one_evaluation_is_outer_product() {
        let net = TensorNetwork::rank_one(&[2, 3, 2], 1, 1.0).unwrap();
        let w = net.evaluate();
        let v: Vec<&[f64]> = net.cores().iter().map(|c| c.data()).collect();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    let expected = v[0][i] * v[1][j] * v[2][k];
                    assert!((w.get(&[i, j, k]) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn param_count_examples() {
        let tt = RankMatrix::from_edges(5, &[(0, 1, 2), (1, 2, 3), (2, 3, 6), (3, 4, 5)]).unwrap();
        let net = TensorNetwork::random(tt, vec![7; 5], 0, 1.0).unwrap();
        assert_eq!(net.param_count(), 427);
        assert_eq!(net.param_count(), net.cores().iter().map(|c| c.len()).sum::<usize>());

        let tr = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 2), (2, 3, 2), (0, 3, 2)]).unwrap();
        let net = TensorNetwork::random(tr, vec![3; 4], 0, 1.0).unwrap();
        assert_eq!(net.param_count(), 48);
    }

    #[test]
    fn edge_list_order_and_flag() {
        let m = RankMatrix::from_edges(3, &[(0, 2, 4)]).unwrap();
        let all: Vec<(usize, usize)> = m.edges(true).iter().map(|e| (e.0, e.1)).collect();
        assert_eq!(all, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(m.edges(false), vec![(0, 2, 4)]);
    }

    #[test]
    fn tt_matches_matrix_chain() {
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 2)]).unwrap();
        let net = TensorNetwork::random(ranks, vec![3, 2, 3, 2], 11, 1.0).unwrap();
        let w = net.evaluate();
        // Slice matrices: G0[i] 1x2, G1[i] 2x3, G2[i] 3x2, G3[i] 2x1.
        let g = net.cores();
        for i0 in 0..3 {
            for i1 in 0..2 {
                for i2 in 0..3 {
                    for i3 in 0..2 {
                        let mut total = 0.0;
                        for a in 0..2 {
                            for b in 0..3 {
                                for c in 0..2 {
                                    total += g[0].get(&[i0, a, 0, 0])
                                        * g[1].get(&[a, i1, b, 0])
                                        * g[2].get(&[0, b, i2, c])
                                        * g[3].get(&[0, 0, c, i3]);
                                }
                            }
                        }
                        assert!((w.get(&[i0, i1, i2, i3]) - total).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn tucker_emulation_matches_mode_products() {
        // Node 0 is the internal Tucker core (dangling dim 1), nodes 1..3 the factors.
        let (d, r) = ([4usize, 3, 5], [2usize, 3, 2]);
        let ranks = RankMatrix::from_edges(4, &[(0, 1, r[0]), (0, 2, r[1]), (0, 3, r[2])]).unwrap();
        let net = TensorNetwork::random(ranks, vec![1, d[0], d[1], d[2]], 5, 1.0).unwrap();
        let w = remove_singletons(&net.evaluate(), &[0]).unwrap();

        let core = net.core(0).reshape(r.to_vec()).unwrap();
        let mut t = core;
        for m in 0..3 {
            // Factor core dims: mode 0 = r[m], own mode = d[m], rest 1.
            let factor = net.core(m + 1).reshape(vec![r[m], d[m]]).unwrap();
            let u = factor.permute(&[1, 0]).unwrap();
            t = mode_n_product(&t, &u, m).unwrap();
        }
        assert!(w.max_abs_diff(&t).unwrap() < 1e-12);
    }

    #[test]
    fn unit_edge_equals_disconnected_outer_product() {
        let with_edge = RankMatrix::from_edges(3, &[(0, 1, 1), (1, 2, 2)]).unwrap();
        let net = TensorNetwork::random(with_edge, vec![2, 3, 2], 8, 1.0).unwrap();
        let a = net.core(0).reshape(vec![2]).unwrap();
        let bc = TensorNetwork::new(
            RankMatrix::from_edges(2, &[(0, 1, 2)]).unwrap(),
            vec![3, 2],
            vec![
                net.core(1).reshape(vec![3, 2]).unwrap(),
                net.core(2).reshape(vec![2, 2]).unwrap(),
            ],
        )
        .unwrap()
        .evaluate();
        let outer = crate::tensor::contract_pair(&a, &bc, &crate::tensor::ModePairing::empty()).unwrap();
        assert!(net.evaluate().max_abs_diff(&outer).unwrap() <= 1e-13);
    }

    #[test]
    fn evaluation_independent_of_order_and_matches_oracle() {
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (0, 2, 3), (1, 3, 2), (2, 3, 2), (0, 3, 2)]).unwrap();
        let net = TensorNetwork::random(ranks, vec![2, 3, 2, 3], 21, 1.0).unwrap();
        let greedy = net.evaluate();
        let seq = net.evaluate_with(ContractionOrder::Sequential);
        assert!(greedy.max_abs_diff(&seq).unwrap() <= 1e-12);
        let oracle = brute_force_tn_eval(net.cores(), DEFAULT_ORACLE_CAP).unwrap();
        assert!(greedy.max_abs_diff(&oracle).unwrap() <= 1e-12);
    }

    #[test]
    fn environment_reproduces_matricized_evaluation() {
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 2), (0, 3, 2)]).unwrap();
        let net = TensorNetwork::random(ranks, vec![2, 3, 2, 3], 2, 1.0).unwrap();
        let w = net.evaluate();
        for k in 0..4 {
            let env = net.environment(k);
            let g = crate::tensor::matricize(net.core(k), &[k]).unwrap();
            let (rows, b) = (g.dims()[0], g.dims()[1]);
            let n = env.dims()[0];
            assert_eq!(env.dims()[1], b);
            let wk = crate::linalg::matmul_nt(rows, b, n, g.data(), env.data());
            let expected = crate::tensor::matricize(&w, &[k]).unwrap();
            for (x, y) in wk.iter().zip(expected.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singleton_augmentation_round_trip() {
        let t = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let a = augment_singletons(&t, &[0]).unwrap();
        assert_eq!(a.dims(), &[1, 2, 3]);
        assert_eq!(a.data(), t.data());
        assert_eq!(remove_singletons(&a, &[0]).unwrap(), t);
        let b = augment_singletons(&t, &[1, 3]).unwrap();
        assert_eq!(b.dims(), &[2, 1, 3, 1]);
        assert!(augment_singletons(&t, &[5]).is_err());
        assert!(remove_singletons(&t, &[0]).is_err());
    }

    #[test]
    fn inconsistent_cores_rejected() {
        let ranks = RankMatrix::from_edges(2, &[(0, 1, 2)]).unwrap();
        let bad = vec![DenseTensor::zeros(vec![3, 2]).unwrap(), DenseTensor::zeros(vec![3, 3]).unwrap()];
        assert!(TensorNetwork::new(ranks, vec![3, 3], bad).is_err());
        assert!(matches!(RankMatrix::from_edges(2, &[(1, 1, 2)]), Err(TnError::SelfEdge(1))));
    }
}
