//! Node splitting by truncated SVD of core matricizations.

use crate::error::Result;
use crate::linalg::thin_svd;
use crate::network::{RankMatrix, TensorNetwork};
use crate::tensor::{matricize, DenseTensor};

/// Bipartitions are enumerated exhaustively up to this many super-unit modes.
pub const MAX_EXHAUSTIVE_MODES: usize = 6;

/// One accepted split: core `node` kept the modes in `kept_modes` and a new
/// internal core `new_node` took the others, joined by a bond of size `rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvent {
    pub node: usize,
    pub new_node: usize,
    /// Modes of the original core (by node index) that stayed on `node`.
    pub kept_modes: Vec<usize>,
    /// Modes (bonds) that moved to `new_node`.
    pub moved_modes: Vec<usize>,
    pub rank: usize,
    pub params_before: usize,
    pub params_after: usize,
    /// `sqrt(Σ discarded σ²)`, the Frobenius error of the core reconstruction.
    pub discarded: f64,
}

#[derive(Debug, Clone)]
struct SplitPlan {
    kept: Vec<usize>,
    moved: Vec<usize>,
    rank: usize,
    saving: usize,
    u: Vec<f64>,
    dvt: Vec<f64>,
    discarded: f64,
}

/// Candidate bipartitions `(kept, moved)` of a core's super-unit modes. The
/// kept side always contains the anchor: the dangling mode if it is larger
/// than 1, else the smallest super-unit mode.
fn bipartitions(core_dims: &[usize], k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let modes: Vec<usize> = (0..core_dims.len()).filter(|&m| core_dims[m] > 1).collect();
    if modes.len() < 2 {
        return Vec::new();
    }
    let anchor = if core_dims[k] > 1 { k } else { modes[0] };
    let others: Vec<usize> = modes.iter().copied().filter(|&m| m != anchor).collect();
    let mut out = Vec::new();
    if modes.len() <= MAX_EXHAUSTIVE_MODES {
        // Every subset of `others` except the full one joins the anchor.
        for mask in 0u32..(1 << others.len()) - 1 {
            let mut kept = vec![anchor];
            let mut moved = Vec::new();
            for (b, &m) in others.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    kept.push(m);
                } else {
                    moved.push(m);
                }
            }
            kept.sort_unstable();
            out.push((kept, moved));
        }
    } else {
        out.push((vec![anchor], others.clone()));
        for &m in &others {
            let mut kept: Vec<usize> = modes.iter().copied().filter(|&x| x != m).collect();
            kept.sort_unstable();
            out.push((kept, vec![m]));
        }
    }
    out
}

fn plan_for_core(core: &DenseTensor, k: usize, epsilon: f64) -> Result<Option<SplitPlan>> {
    let dims = core.dims();
    let mut best: Option<SplitPlan> = None;
    for (kept, moved) in bipartitions(dims, k) {
        let m_a: usize = kept.iter().map(|&m| dims[m]).product();
        let m_b: usize = moved.iter().map(|&m| dims[m]).product();
        let mat = matricize(core, &kept)?;
        let (u, s, vt) = thin_svd(m_a, m_b, mat.data());
        let q = s.len();
        let rank = s.iter().filter(|&&x| x >= epsilon).count().max(1);
        let after = rank * (m_a + m_b);
        let before = m_a * m_b;
        if after >= before {
            continue;
        }
        let saving = before - after;
        if best.as_ref().is_some_and(|b| b.saving >= saving) {
            continue;
        }
        let mut u_r = Vec::with_capacity(m_a * rank);
        for row in 0..m_a {
            u_r.extend_from_slice(&u[row * q..row * q + rank]);
        }
        let mut dvt = Vec::with_capacity(rank * m_b);
        for (r, sigma) in s.iter().enumerate().take(rank) {
            dvt.extend(vt[r * m_b..(r + 1) * m_b].iter().map(|v| sigma * v));
        }
        let discarded = s[rank..].iter().map(|x| x * x).sum::<f64>().sqrt();
        best = Some(SplitPlan {
            kept,
            moved,
            rank,
            saving,
            u: u_r,
            dvt,
            discarded,
        });
    }
    Ok(best)
}

/// Appends a size-1 mode at the end of `t`.
fn append_unit_mode(t: &DenseTensor) -> Result<DenseTensor> {
    let mut dims = t.dims().to_vec();
    dims.push(1);
    t.reshape(dims)
}

fn apply_plan(net: &TensorNetwork, k: usize, plan: SplitPlan) -> Result<(TensorNetwork, SplitEvent)> {
    let p = net.node_count();
    let q = p;
    let params_before = net.param_count();
    let old_dims = net.core(k).dims().to_vec();
    let mut ranks: RankMatrix = net.ranks().grown(1);
    let mut dims = net.dims().to_vec();
    dims.push(1);

    let mut cores = Vec::with_capacity(p + 1);
    for m in 0..p {
        if m == k {
            // Rows of U run over the kept modes in ascending order, which is
            // also their order inside the core; the new bond is last.
            let mut d: Vec<usize> = (0..p)
                .map(|x| if plan.kept.contains(&x) { old_dims[x] } else { 1 })
                .collect();
            d.push(plan.rank);
            cores.push(DenseTensor::new(d, plan.u.clone())?);
        } else if plan.moved.contains(&m) {
            // The bond to k now leads to q: move mode k to the last position.
            let grown = append_unit_mode(net.core(m))?;
            let mut axes: Vec<usize> = (0..=p).collect();
            axes.swap(k, q);
            cores.push(grown.permute(&axes)?);
        } else {
            cores.push(append_unit_mode(net.core(m))?);
        }
    }

    // New core: mode k carries the split bond, moved modes keep their sizes.
    let mut positions = vec![k];
    positions.extend(&plan.moved);
    let mut raw_dims = vec![plan.rank];
    raw_dims.extend(plan.moved.iter().map(|&m| old_dims[m]));
    let raw = DenseTensor::new(raw_dims, plan.dvt)?;
    let mut axes: Vec<usize> = (0..positions.len()).collect();
    axes.sort_by_key(|&a| positions[a]);
    let ordered = raw.permute(&axes)?;
    let new_dims: Vec<usize> = (0..=p)
        .map(|x| {
            if x == k {
                plan.rank
            } else if plan.moved.contains(&x) {
                old_dims[x]
            } else {
                1
            }
        })
        .collect();
    cores.push(ordered.into_reshape(new_dims)?);

    for &m in &plan.moved {
        ranks.set(q, m, net.rank(k, m));
        ranks.set(k, m, 1);
    }
    ranks.set(k, q, plan.rank);
    let next = TensorNetwork::new(ranks, dims, cores)?;
    let event = SplitEvent {
        node: k,
        new_node: q,
        kept_modes: plan.kept,
        moved_modes: plan.moved,
        rank: plan.rank,
        params_before,
        params_after: next.param_count(),
        discarded: plan.discarded,
    };
    Ok((next, event))
}

/// Splits every core that admits a parameter-reducing truncated SVD of one
/// of its matricizations (singular values below `epsilon` are dropped).
/// At most one split per original core; cores are processed in order of
/// decreasing saving, each split appending one internal node.
pub fn split_nodes(net: &TensorNetwork, epsilon: f64) -> Result<(TensorNetwork, Vec<SplitEvent>)> {
    let p = net.node_count();
    let mut order = Vec::new();
    for k in 0..p {
        if let Some(plan) = plan_for_core(net.core(k), k, epsilon)? {
            order.push((plan.saving, k));
        }
    }
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut current = net.clone();
    let mut events = Vec::new();
    for (_, k) in order {
        // Earlier splits only relabel the modes of core k, so the plan is
        // recomputed on the current network.
        if let Some(plan) = plan_for_core(current.core(k), k, epsilon)? {
            let (next, event) = apply_plan(&current, k, plan)?;
            current = next;
            events.push(event);
        }
    }
    current.set_last_increment(None);
    Ok((current, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bipartition_counts() {
        // Dangling 3 plus three bonds: 2^3 - 1 = 7 bipartitions.
        assert_eq!(bipartitions(&[3, 2, 2, 2], 0).len(), 7);
        // Internal node: anchor is the smallest bond mode.
        let parts = bipartitions(&[2, 1, 3], 1);
        assert_eq!(parts, vec![(vec![0], vec![2])]);
        assert!(bipartitions(&[3, 1, 1], 0).is_empty());
        // Seven super-unit modes: anchor-vs-rest plus six single modes.
        assert_eq!(bipartitions(&[2; 7], 0).len(), 7);
    }

    #[test]
    fn random_full_rank_core_is_not_split() {
        let ranks = RankMatrix::from_edges(3, &[(0, 1, 3), (0, 2, 3), (1, 2, 2)]).unwrap();
        let net = TensorNetwork::random(ranks, vec![4, 3, 3], 1, 1.0).unwrap();
        let (out, events) = split_nodes(&net, 1e-5).unwrap();
        assert!(events.is_empty());
        assert_eq!(out, net);
    }

    #[test]
    fn low_rank_core_splits_and_preserves_evaluation() {
        // Core 0 has dangling 4 and bonds of size 4 to nodes 1, 2, 3, built
        // as a rank-2 product between (dangling, bond 1) and (bonds 2, 3).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseTensor::random_uniform(vec![16, 2], 1.0, &mut rng).unwrap();
        let b = DenseTensor::random_uniform(vec![2, 16], 1.0, &mut rng).unwrap();
        let prod = crate::linalg::matmul(16, 2, 16, a.data(), b.data());
        let core0 = DenseTensor::new(vec![4, 4, 4, 4], prod).unwrap();
        let ranks = RankMatrix::from_edges(4, &[(0, 1, 4), (0, 2, 4), (0, 3, 4)]).unwrap();
        let base = TensorNetwork::random(ranks, vec![4, 2, 2, 2], 5, 1.0).unwrap();
        let net = base.with_core(0, core0).unwrap();
        let (out, events) = split_nodes(&net, 1e-5).unwrap();
        let ev = events.iter().find(|e| e.node == 0).expect("core 0 splits");
        assert_eq!(ev.rank, 2);
        assert_eq!(ev.kept_modes, vec![0, 1]);
        assert_eq!(ev.moved_modes, vec![2, 3]);
        assert!(ev.params_after < ev.params_before);
        assert_eq!(out.rank(0, 4), 2);
        assert_eq!(out.rank(4, 2), 4);
        assert_eq!(out.rank(0, 2), 1);
        let before = net.evaluate();
        let after = out.evaluate().reshape(before.dims().to_vec()).unwrap();
        let diff = crate::tensor::frobenius(&after.sub(&before).unwrap());
        assert!(diff <= 1e-10 * crate::tensor::frobenius(&before).max(1.0), "{diff}");
    }
}
