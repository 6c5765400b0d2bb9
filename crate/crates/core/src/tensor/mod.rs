//! Dense row-major tensors and the pairwise algebra everything else is
//! built on: contraction, matricization, mode-n products and norms.

pub mod oracle;

use rand::Rng;

use crate::error::{Result, TnError};
use crate::linalg;

/// A dense multidimensional array of `f64` stored row-major (last index
/// varies fastest). An order-0 tensor (`dims == []`) holds one scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let expected = dims.iter().product::<usize>();
        if expected != data.len() {
            return Err(TnError::LengthMismatch {
                dims,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let n = dims.iter().product();
        Ok(Self {
            dims,
            data: vec![0.0; n],
        })
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_dims(&dims)?;
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..n {
            data.push(f(&idx));
            increment_index(&mut idx, &dims);
        }
        Ok(Self { dims, data })
    }

    /// I.i.d. entries uniform in `[-scale, scale]`.
    pub fn random_uniform<R: Rng + ?Sized>(dims: Vec<usize>, scale: f64, rng: &mut R) -> Result<Self> {
        check_dims(&dims)?;
        let n: usize = dims.iter().product();
        let data = (0..n).map(|_| uniform_sym(rng, scale)).collect();
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.dims)
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut off = 0;
        for (i, (&ix, &d)) in index.iter().zip(&self.dims).enumerate() {
            debug_assert!(ix < d, "index {ix} out of range on mode {i}");
            off = off * d + ix;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Same data, new dims (product must match).
    pub fn reshape(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data.clone())
    }

    pub fn into_reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data)
    }

    /// Reorders modes: mode `m` of the result is mode `axes[m]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let p = self.order();
        if axes.len() != p {
            return Err(TnError::InvalidMode {
                mode: axes.len(),
                reason: format!("permutation of length {} for order {p}", axes.len()),
            });
        }
        let mut seen = vec![false; p];
        for &a in axes {
            if a >= p || seen[a] {
                return Err(TnError::InvalidMode {
                    mode: a,
                    reason: "not a permutation".into(),
                });
            }
            seen[a] = true;
        }
        if axes.iter().enumerate().all(|(i, &a)| i == a) {
            return Ok(self.clone());
        }
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let src_strides = self.strides();
        let strides: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
        let data = gather_strided(&self.data, &dims, &strides);
        Ok(Self { dims, data })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(TnError::ContractionShape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(TnError::InvalidShape {
            dims: dims.to_vec(),
            reason: format!("mode {pos} has size 0"),
        });
    }
    Ok(())
}

pub(crate) fn uniform_sym<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        rng.random_range(-scale..=scale)
    }
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        strides[m] = strides[m + 1] * dims[m + 1];
    }
    strides
}

/// Advances a row-major multi-index; wraps to all zeros after the last one.
pub(crate) fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for m in (0..dims.len()).rev() {
        idx[m] += 1;
        if idx[m] < dims[m] {
            return;
        }
        idx[m] = 0;
    }
}

/// Copies `src` read through `strides` into a fresh row-major buffer of `dims`.
fn gather_strided(src: &[f64], dims: &[usize], strides: &[usize]) -> Vec<f64> {
    let n: usize = dims.iter().product();
    let mut out = Vec::with_capacity(n);
    if dims.is_empty() {
        out.push(src[0]);
        return out;
    }
    let last = dims.len() - 1;
    let inner = dims[last];
    let inner_stride = strides[last];
    let outer_dims = &dims[..last];
    let mut idx = vec![0usize; last];
    let outer: usize = outer_dims.iter().product();
    for _ in 0..outer {
        let base: usize = idx.iter().zip(strides).map(|(i, s)| i * s).sum();
        for t in 0..inner {
            out.push(src[base + t * inner_stride]);
        }
        increment_index(&mut idx, outer_dims);
    }
    out
}

/// Pairs of (mode of A, mode of B) contracted against each other.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModePairing(pub Vec<(usize, usize)>);

impl ModePairing {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self(pairs)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    fn validate(&self, a: &DenseTensor, b: &DenseTensor) -> Result<()> {
        let mut used_a = vec![false; a.order()];
        let mut used_b = vec![false; b.order()];
        for &(ma, mb) in &self.0 {
            if ma >= a.order() || mb >= b.order() {
                return Err(TnError::ContractionShape(format!(
                    "pair ({ma}, {mb}) out of range for orders {} and {}",
                    a.order(),
                    b.order()
                )));
            }
            if used_a[ma] || used_b[mb] {
                return Err(TnError::ContractionShape(format!(
                    "mode paired twice in ({ma}, {mb})"
                )));
            }
            used_a[ma] = true;
            used_b[mb] = true;
            if a.dims[ma] != b.dims[mb] {
                return Err(TnError::ContractionShape(format!(
                    "mode {ma} of size {} paired with mode {mb} of size {}",
                    a.dims[ma], b.dims[mb]
                )));
            }
        }
        Ok(())
    }
}

/// Contracts the paired modes of `a` and `b`. The result carries the
/// unpaired modes of `a` (in order) followed by those of `b`. An empty
/// pairing gives the outer product.
pub fn contract_pair(a: &DenseTensor, b: &DenseTensor, pairing: &ModePairing) -> Result<DenseTensor> {
    pairing.validate(a, b)?;
    let paired_a: Vec<usize> = pairing.0.iter().map(|p| p.0).collect();
    let paired_b: Vec<usize> = pairing.0.iter().map(|p| p.1).collect();
    let free_a: Vec<usize> = (0..a.order()).filter(|m| !paired_a.contains(m)).collect();
    let free_b: Vec<usize> = (0..b.order()).filter(|m| !paired_b.contains(m)).collect();

    let perm_a: Vec<usize> = free_a.iter().chain(&paired_a).copied().collect();
    let perm_b: Vec<usize> = paired_b.iter().chain(&free_b).copied().collect();
    let a_p = a.permute(&perm_a)?;
    let b_p = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&x| a.dims[x]).product();
    let k: usize = paired_a.iter().map(|&x| a.dims[x]).product();
    let n: usize = free_b.iter().map(|&x| b.dims[x]).product();
    let data = linalg::matmul(m, k, n, &a_p.data, &b_p.data);
    let dims = free_a
        .iter()
        .map(|&x| a.dims[x])
        .chain(free_b.iter().map(|&x| b.dims[x]))
        .collect();
    DenseTensor::new(dims, data)
}

/// Reshapes `t` into a matrix whose rows run over `row_modes` (row-major in
/// the given order) and whose columns run over the remaining modes in
/// ascending order (row-major).
pub fn matricize(t: &DenseTensor, row_modes: &[usize]) -> Result<DenseTensor> {
    let col_modes = bipartition_complement(t.order(), row_modes)?;
    let rows: usize = row_modes.iter().map(|&m| t.dims[m]).product();
    let cols: usize = col_modes.iter().map(|&m| t.dims[m]).product();
    let perm: Vec<usize> = row_modes.iter().chain(&col_modes).copied().collect();
    let p = t.permute(&perm)?;
    DenseTensor::new(vec![rows, cols], p.data)
}

/// Inverse of [`matricize`]: folds a matrix back into a tensor of `dims`.
pub fn fold(matrix: &DenseTensor, dims: &[usize], row_modes: &[usize]) -> Result<DenseTensor> {
    let col_modes = bipartition_complement(dims.len(), row_modes)?;
    let perm: Vec<usize> = row_modes.iter().chain(&col_modes).copied().collect();
    let permuted_dims: Vec<usize> = perm.iter().map(|&m| dims[m]).collect();
    let permuted = matrix.reshape(permuted_dims)?;
    let mut inverse = vec![0usize; perm.len()];
    for (pos, &m) in perm.iter().enumerate() {
        inverse[m] = pos;
    }
    permuted.permute(&inverse)
}

fn bipartition_complement(order: usize, row_modes: &[usize]) -> Result<Vec<usize>> {
    let invalid = || TnError::InvalidBipartition {
        modes: row_modes.to_vec(),
        order,
    };
    if row_modes.is_empty() || row_modes.len() >= order {
        return Err(invalid());
    }
    let mut seen = vec![false; order];
    for &m in row_modes {
        if m >= order || seen[m] {
            return Err(invalid());
        }
        seen[m] = true;
    }
    Ok((0..order).filter(|&m| !seen[m]).collect())
}

/// `t ×ₙ m`: contracts mode `n` of `t` with the columns of matrix `m`; the
/// result keeps `t`'s mode order with mode `n` resized to `rows(m)`.
pub fn mode_n_product(t: &DenseTensor, m: &DenseTensor, n: usize) -> Result<DenseTensor> {
    if m.order() != 2 {
        return Err(TnError::ContractionShape(format!(
            "mode product needs a matrix, got order {}",
            m.order()
        )));
    }
    if n >= t.order() {
        return Err(TnError::InvalidMode {
            mode: n,
            reason: format!("tensor has order {}", t.order()),
        });
    }
    if m.dims[1] != t.dims[n] {
        return Err(TnError::ContractionShape(format!(
            "matrix has {} columns but mode {n} has size {}",
            m.dims[1], t.dims[n]
        )));
    }
    // Result modes: t without n, then rows(m); move the last mode back to n.
    let c = contract_pair(t, m, &ModePairing::new(vec![(n, 1)]))?;
    let p = t.order();
    let mut perm: Vec<usize> = (0..p - 1).collect();
    perm.insert(n, p - 1);
    c.permute(&perm)
}

pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.check_same_dims(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn frobenius(t: &DenseTensor) -> f64 {
    t.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}
