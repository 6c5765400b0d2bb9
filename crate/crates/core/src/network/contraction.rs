//! Contraction of a labelled collection of tensors by repeated pairwise
//! contraction.

use crate::error::{Result, TnError};
use crate::tensor::{contract_pair, DenseTensor, ModePairing};

/// Name of a tensor leg. Legs sharing a label are summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Dangling(usize),
    Bond(usize, usize),
}

impl Label {
    pub fn bond(i: usize, j: usize) -> Self {
        if i < j {
            Label::Bond(i, j)
        } else {
            Label::Bond(j, i)
        }
    }
}

/// Order in which pairs of tensors are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContractionOrder {
    /// At each step merge the pair with the smallest result, ties going to
    /// the smallest (position, position) pair.
    #[default]
    GreedyMinSize,
    /// Always merge the last two tensors (right-to-left chain).
    Sequential,
}

struct Item {
    tensor: DenseTensor,
    labels: Vec<Label>,
}

impl Item {
    fn size_of(&self, label: Label) -> Option<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|m| self.tensor.dims()[m])
    }
}

/// Contracts all tensors; every label appearing on two tensors is summed,
/// labels appearing once must be listed in `output`, which fixes the result's
/// mode order. Size-1 legs are dropped before contracting and reinserted in
/// the output.
pub fn contract_labeled(
    tensors: Vec<(DenseTensor, Vec<Label>)>,
    output: &[Label],
    order: ContractionOrder,
) -> Result<DenseTensor> {
    let mut output_dims = vec![0usize; output.len()];
    let mut items = Vec::with_capacity(tensors.len());
    for (tensor, labels) in tensors {
        if labels.len() != tensor.order() {
            return Err(TnError::ContractionShape(format!(
                "{} labels for an order-{} tensor",
                labels.len(),
                tensor.order()
            )));
        }
        for (m, l) in labels.iter().enumerate() {
            if let Some(pos) = output.iter().position(|o| o == l) {
                output_dims[pos] = tensor.dims()[m];
            }
        }
        let keep: Vec<usize> = (0..labels.len()).filter(|&m| tensor.dims()[m] > 1).collect();
        let dims = keep.iter().map(|&m| tensor.dims()[m]).collect();
        let labels = keep.iter().map(|&m| labels[m]).collect();
        items.push(Item {
            tensor: tensor.into_reshape(dims)?,
            labels,
        });
    }
    if let Some(pos) = output_dims.iter().position(|&d| d == 0) {
        return Err(TnError::ContractionShape(format!(
            "output label {:?} does not appear on any tensor",
            output[pos]
        )));
    }

    while items.len() > 1 {
        let (a, b) = match order {
            ContractionOrder::Sequential => (items.len() - 2, items.len() - 1),
            ContractionOrder::GreedyMinSize => pick_pair(&items),
        };
        let right = items.remove(b);
        let left = &items[a];
        let pairs: Vec<(usize, usize)> = left
            .labels
            .iter()
            .enumerate()
            .filter_map(|(ma, l)| right.labels.iter().position(|r| r == l).map(|mb| (ma, mb)))
            .collect();
        let tensor = contract_pair(&left.tensor, &right.tensor, &ModePairing::new(pairs.clone()))?;
        let labels = left
            .labels
            .iter()
            .enumerate()
            .filter(|(m, _)| !pairs.iter().any(|p| p.0 == *m))
            .map(|(_, &l)| l)
            .chain(
                right
                    .labels
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| !pairs.iter().any(|p| p.1 == *m))
                    .map(|(_, &l)| l),
            )
            .collect();
        items[a] = Item { tensor, labels };
    }

    let result = items.pop().unwrap_or(Item {
        tensor: DenseTensor::scalar(1.0),
        labels: Vec::new(),
    });
    let squeezed_out: Vec<Label> = output
        .iter()
        .zip(&output_dims)
        .filter(|(_, &d)| d > 1)
        .map(|(&l, _)| l)
        .collect();
    if squeezed_out.len() != result.labels.len() {
        return Err(TnError::ContractionShape(format!(
            "open legs {:?} do not match requested output {:?}",
            result.labels, output
        )));
    }
    let mut perm = Vec::with_capacity(squeezed_out.len());
    for l in &squeezed_out {
        let m = result.labels.iter().position(|r| r == l).ok_or_else(|| {
            TnError::ContractionShape(format!("output label {l:?} was contracted away"))
        })?;
        perm.push(m);
    }
    result.tensor.permute(&perm)?.into_reshape(output_dims)
}

fn pick_pair(items: &[Item]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_size = u128::MAX;
    for a in 0..items.len() {
        for b in a + 1..items.len() {
            let mut size: u128 = 1;
            for (m, &l) in items[a].labels.iter().enumerate() {
                if items[b].size_of(l).is_none() {
                    size *= items[a].tensor.dims()[m] as u128;
                }
            }
            for (m, &l) in items[b].labels.iter().enumerate() {
                if items[a].size_of(l).is_none() {
                    size *= items[b].tensor.dims()[m] as u128;
                }
            }
            if size < best_size {
                best_size = size;
                best = (a, b);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_matrices() {
        let a = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseTensor::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = contract_labeled(
            vec![
                (a, vec![Label::Dangling(0), Label::bond(0, 1)]),
                (b, vec![Label::bond(0, 1), Label::Dangling(1)]),
            ],
            &[Label::Dangling(1), Label::Dangling(0)],
            ContractionOrder::GreedyMinSize,
        )
        .unwrap();
        // (A·B)ᵀ with A·B = [[2,1],[4,3]]
        assert_eq!(out.data(), &[2.0, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn empty_network_is_unit_scalar() {
        let out = contract_labeled(Vec::new(), &[], ContractionOrder::GreedyMinSize).unwrap();
        assert_eq!(out.data(), &[1.0]);
    }

    #[test]
    fn dangling_unlisted_label_is_an_error() {
        let a = DenseTensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        assert!(contract_labeled(vec![(a, vec![Label::Dangling(0)])], &[], ContractionOrder::Sequential).is_err());
    }
}
