//! Dense order-r tensors in row-major layout (last index fastest).
//!
//! Axes are 0-based internally. [`IndexSubset`] and [`Partition`] print
//! 1-based, and their `from_one_based` constructors are the only place the
//! conversion happens.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest order accepted by [`enumerate_partitions`] unless a cap is given.
pub const DEFAULT_PARTITION_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<TensorRepr> for DenseTensor {
    type Error = Error;

    fn try_from(repr: TensorRepr) -> Result<Self> {
        DenseTensor::new(repr.shape, repr.data)
    }
}

impl From<DenseTensor> for TensorRepr {
    fn from(t: DenseTensor) -> Self {
        TensorRepr {
            shape: t.shape,
            data: t.data,
        }
    }
}

/// Calls `f(index, flat)` for every multi-index of `shape` in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize], usize)) {
    let total: usize = shape.iter().product();
    if total == 0 {
        return;
    }
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(&idx, flat);
        for axis in (0..shape.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < shape[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for axis in (0..shape.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * shape[axis + 1];
    }
    strides
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "shape {shape:?} has a zero extent"
            )));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    /// Builds a matrix from equal-length rows.
    pub fn matrix(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(vec![rows.len(), cols], data)
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut t = Self::zeros(vec![d, d])?;
        for i in 0..d {
            t.data[i * d + i] = 1.0;
        }
        Ok(t)
    }

    /// `v_1 ⊗ … ⊗ v_r`.
    pub fn outer(vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Empty("outer product needs at least one vector"));
        }
        let shape: Vec<usize> = vectors.iter().map(Vec::len).collect();
        let mut t = Self::zeros(shape.clone())?;
        for_each_index(&shape, |idx, flat| {
            t.data[flat] = idx
                .iter()
                .zip(vectors)
                .map(|(&i, v)| v[i])
                .product();
        });
        Ok(t)
    }

    /// Order-`order` tensor with `diag[i]` at position `(i, …, i)`.
    pub fn diagonal(order: usize, diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut t = Self::zeros(vec![d; order])?;
        let step: usize = row_major_strides(&t.shape).iter().sum();
        for (i, &v) in diag.iter().enumerate() {
            t.data[i * step] = v;
        }
        Ok(t)
    }

    /// The basis tensor `e_{i_1} ⊗ … ⊗ e_{i_r}`.
    pub fn basis(shape: Vec<usize>, index: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let flat = t.flat_index(index)?;
        t.data[flat] = 1.0;
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::Dimension(format!(
                "index of length {} for order {}",
                index.len(),
                self.order()
            )));
        }
        let mut flat = 0;
        for (axis, (&i, &d)) in index.iter().zip(&self.shape).enumerate() {
            if i >= d {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    order: axis,
                });
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(index)?])
    }

    /// Value of an order-0 tensor (or the first entry otherwise).
    pub fn scalar_value(&self) -> f64 {
        self.data[0]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &DenseTensor, c: f64) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "cannot add shape {:?} to {:?}",
                other.shape, self.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    /// Contracts a single axis against `x`, removing that axis.
    pub fn contract_axis(&self, axis: usize, x: &[f64]) -> Result<Self> {
        if axis >= self.order() {
            return Err(Error::IndexOutOfRange {
                index: axis,
                order: self.order(),
            });
        }
        let d = self.shape[axis];
        if x.len() != d {
            return Err(Error::Dimension(format!(
                "axis {axis} has extent {d}, vector has length {}",
                x.len()
            )));
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (j, &xj) in x.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                let src = &self.data[(o * d + j) * inner..(o * d + j + 1) * inner];
                for (a, &b) in dst.iter_mut().zip(src) {
                    *a += xj * b;
                }
            }
        }
        let mut shape = self.shape.clone();
        shape.remove(axis);
        Ok(Self { shape, data: out })
    }

    /// Contracts the axes in `subset` against `xs` (one vector per member, in
    /// increasing member order). Residual axes keep their relative order.
    pub fn contract_subset(&self, subset: &IndexSubset, xs: &[&[f64]]) -> Result<Self> {
        if subset.order() != self.order() {
            return Err(Error::InvalidSubset(format!(
                "subset of order {} used on a tensor of order {}",
                subset.order(),
                self.order()
            )));
        }
        if xs.len() != subset.len() {
            return Err(Error::Dimension(format!(
                "{} vectors supplied for a subset of size {}",
                xs.len(),
                subset.len()
            )));
        }
        for (&axis, x) in subset.members().iter().zip(xs) {
            if x.len() != self.shape[axis] {
                return Err(Error::Dimension(format!(
                    "axis {} has extent {}, vector has length {}",
                    axis + 1,
                    self.shape[axis],
                    x.len()
                )));
            }
        }
        let mut out = self.clone();
        // Descending order keeps the positions of the remaining members valid.
        for (&axis, x) in subset.members().iter().zip(xs).rev() {
            out = out.contract_axis(axis, x)?;
        }
        Ok(out)
    }

    /// `A(x_1, …, x_r)`.
    pub fn eval_multilinear(&self, xs: &[&[f64]]) -> Result<f64> {
        if xs.len() != self.order() {
            return Err(Error::Dimension(format!(
                "{} vectors supplied for a tensor of order {}",
                xs.len(),
                self.order()
            )));
        }
        for (axis, (x, &d)) in xs.iter().zip(&self.shape).enumerate() {
            if x.len() != d {
                return Err(Error::Dimension(format!(
                    "axis {} has extent {d}, vector has length {}",
                    axis + 1,
                    x.len()
                )));
            }
        }
        let Some((last, rest)) = xs.split_last() else {
            return Ok(self.data[0]);
        };
        // Contract the trailing axis repeatedly, compacting into the front of
        // one buffer: slot `o` only ever reads slots `o·d..o·d + d`.
        let d_last = last.len();
        let mut buf: Vec<f64> = self
            .data
            .chunks_exact(d_last)
            .map(|row| row.iter().zip(*last).map(|(a, b)| a * b).sum())
            .collect();
        let mut len = buf.len();
        for x in rest.iter().rev() {
            let d = x.len();
            len /= d;
            for o in 0..len {
                let mut acc = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    acc += buf[o * d + j] * xj;
                }
                buf[o] = acc;
            }
        }
        Ok(buf[0])
    }

    /// Moves entries so that flat position `Σ_t idx_t · coeffs[t]` of the
    /// output holds input entry `idx`.
    fn scatter(&self, coeffs: &[usize], out_shape: Vec<usize>) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for_each_index(&self.shape, |idx, flat| {
            let dst: usize = idx.iter().zip(coeffs).map(|(i, c)| i * c).sum();
            out[dst] = self.data[flat];
        });
        Self {
            shape: out_shape,
            data: out,
        }
    }

    /// The re-indexed tensor `A^P`: axis `j` fuses the axes of block `j`,
    /// encoded row-major over the block's members.
    pub fn reshape_partition(&self, partition: &Partition) -> Result<Self> {
        if partition.order() != self.order() {
            return Err(Error::InvalidPartition(format!(
                "partition of order {} used on a tensor of order {}",
                partition.order(),
                self.order()
            )));
        }
        let out_shape: Vec<usize> = partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&t| self.shape[t]).product())
            .collect();
        let block_strides = row_major_strides(&out_shape);
        let mut coeffs = vec![0usize; self.order()];
        for (j, block) in partition.blocks().iter().enumerate() {
            let mut within = 1;
            for &t in block.iter().rev() {
                coeffs[t] = within * block_strides[j];
                within *= self.shape[t];
            }
        }
        Ok(self.scatter(&coeffs, out_shape))
    }

    /// Output axis `k` is input axis `perm[k]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self> {
        let r = self.order();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{r}"
            )));
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let out_strides = row_major_strides(&out_shape);
        let mut coeffs = vec![0usize; r];
        for (k, &p) in perm.iter().enumerate() {
            coeffs[p] = out_strides[k];
        }
        Ok(self.scatter(&coeffs, out_shape))
    }

    /// Largest entrywise deviation from invariance under axis permutations.
    /// Returns `None` unless all extents agree.
    pub fn symmetry_defect(&self) -> Option<f64> {
        let d = *self.shape.first()?;
        if self.shape.iter().any(|&e| e != d) {
            return None;
        }
        let mut worst: f64 = 0.0;
        for perm in permutations(self.order()) {
            let p = self.permute_axes(&perm).expect("valid permutation");
            for (a, b) in self.data.iter().zip(&p.data) {
                worst = worst.max((a - b).abs());
            }
        }
        Some(worst)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.order() <= 1 || self.symmetry_defect().is_some_and(|e| e <= tol)
    }

    /// Average over all axis permutations. Requires equal extents.
    pub fn symmetrize(&self) -> Result<Self> {
        if self.shape.iter().any(|&e| e != self.shape[0]) {
            return Err(Error::Dimension(format!(
                "cannot symmetrize shape {:?}",
                self.shape
            )));
        }
        let perms = permutations(self.order());
        let mut acc = Self::zeros(self.shape.clone())?;
        for perm in &perms {
            acc.add_scaled(&self.permute_axes(perm)?, 1.0)?;
        }
        Ok(acc.scaled(1.0 / perms.len() as f64))
    }
}

/// Stacks equal-shape tensors along a new trailing axis.
pub fn stack_tensors(tensors: &[DenseTensor]) -> Result<DenseTensor> {
    let first = tensors.first().ok_or(Error::Empty("no tensors to stack"))?;
    if let Some(bad) = tensors.iter().find(|t| t.shape != first.shape) {
        return Err(Error::Dimension(format!(
            "cannot stack shape {:?} with {:?}",
            bad.shape, first.shape
        )));
    }
    let n = tensors.len();
    let mut data = vec![0.0; first.len() * n];
    for (k, t) in tensors.iter().enumerate() {
        for (i, &v) in t.data.iter().enumerate() {
            data[i * n + k] = v;
        }
    }
    let mut shape = first.shape.clone();
    shape.push(n);
    DenseTensor::new(shape, data)
}

/// All permutations of `0..r` in lexicographic order.
pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..r).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..r).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..r).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// A sorted, duplicate-free subset of the axes `0..order`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSubset {
    order: usize,
    members: Vec<usize>,
}

impl IndexSubset {
    pub fn new(order: usize, members: Vec<usize>) -> Result<Self> {
        if let Some(&m) = members.iter().find(|&&m| m >= order) {
            return Err(Error::IndexOutOfRange { index: m, order });
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(format!(
                "members {members:?} are not strictly increasing"
            )));
        }
        Ok(Self { order, members })
    }

    pub fn from_one_based(order: usize, members: &[usize]) -> Result<Self> {
        if members.contains(&0) {
            return Err(Error::InvalidSubset("1-based members cannot be 0".into()));
        }
        Self::new(order, members.iter().map(|m| m - 1).collect())
    }

    pub fn empty(order: usize) -> Self {
        Self {
            order,
            members: Vec::new(),
        }
    }

    pub fn full(order: usize) -> Self {
        Self {
            order,
            members: (0..order).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.members.binary_search(&axis).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self {
            order: self.order,
            members: (0..self.order).filter(|&a| !self.contains(a)).collect(),
        }
    }

    pub fn without(&self, axis: usize) -> Self {
        Self {
            order: self.order,
            members: self.members.iter().copied().filter(|&a| a != axis).collect(),
        }
    }

    /// Every subset of `0..order` with exactly `size` members, in
    /// lexicographic order.
    pub fn all_of_size(order: usize, size: usize) -> Vec<Self> {
        let mut out = Vec::new();
        if size > order {
            return out;
        }
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(Self {
                order,
                members: combo.clone(),
            });
            let Some(i) = (0..size).rev().find(|&i| combo[i] < order - size + i) else {
                break;
            };
            combo[i] += 1;
            for j in i + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
        out
    }
}

impl fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_block(f, &self.members)
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, members: &[usize]) -> fmt::Result {
    f.write_str("{")?;
    for (i, m) in members.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{}", m + 1)?;
    }
    f.write_str("}")
}

/// A set partition of the axes `0..order`, kept in canonical form: blocks
/// sorted by smallest element, members sorted within each block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    order: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(order: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; order];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &m in block.iter() {
                if m >= order {
                    return Err(Error::IndexOutOfRange { index: m, order });
                }
                if std::mem::replace(&mut seen[m], true) {
                    return Err(Error::InvalidPartition(format!(
                        "index {} appears twice",
                        m + 1
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "index {} is not covered",
                missing + 1
            )));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { order, blocks })
    }

    pub fn from_one_based(order: usize, blocks: &[&[usize]]) -> Result<Self> {
        let mut converted = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.contains(&0) {
                return Err(Error::InvalidPartition("1-based members cannot be 0".into()));
            }
            converted.push(b.iter().map(|m| m - 1).collect());
        }
        Self::new(order, converted)
    }

    pub fn singletons(order: usize) -> Self {
        Self {
            order,
            blocks: (0..order).map(|t| vec![t]).collect(),
        }
    }

    pub fn single_block(order: usize) -> Self {
        Self {
            order,
            blocks: vec![(0..order).collect()],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks `|P|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_block(f, b)?;
        }
        f.write_str("}")
    }
}

/// All set partitions of `0..r`, canonical and distinct (Bell(r) of them).
pub fn enumerate_partitions(r: usize) -> Result<Vec<Partition>> {
    enumerate_partitions_with_cap(r, DEFAULT_PARTITION_CAP)
}

pub fn enumerate_partitions_with_cap(r: usize, cap: usize) -> Result<Vec<Partition>> {
    if r == 0 {
        return Err(Error::InvalidArgument("partitions need r >= 1".into()));
    }
    if r > cap {
        return Err(Error::PartitionCap { r, cap });
    }
    // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[..i]).
    let mut out = Vec::new();
    let mut labels = vec![0usize; r];
    let mut maxes = vec![0usize; r];
    loop {
        let blocks_n = maxes[r - 1] + 1;
        let mut blocks = vec![Vec::new(); blocks_n];
        for (t, &l) in labels.iter().enumerate() {
            blocks[l].push(t);
        }
        out.push(Partition { order: r, blocks });

        let Some(i) = (1..r).rev().find(|&i| labels[i] <= maxes[i - 1]) else {
            break;
        };
        labels[i] += 1;
        maxes[i] = maxes[i - 1].max(labels[i]);
        for j in i + 1..r {
            labels[j] = 0;
            maxes[j] = maxes[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_eval(a: &DenseTensor, xs: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for_each_index(a.shape(), |idx, flat| {
            let w: f64 = idx.iter().zip(xs).map(|(&i, x)| x[i]).product();
            total += a.data()[flat] * w;
        });
        total
    }

    fn refs(xs: &[Vec<f64>]) -> Vec<&[f64]> {
        xs.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn eval_identity_off_diagonal() {
        let a = DenseTensor::identity(2).unwrap();
        assert_eq!(a.eval_multilinear(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap(), 0.0);
    }

    #[test]
    fn eval_rank_one_all_ones() {
        let ones = vec![1.0, 1.0];
        let a = DenseTensor::outer(&[ones.clone(), ones.clone(), ones.clone()]).unwrap();
        assert_eq!(a.eval_multilinear(&[&ones, &ones, &ones]).unwrap(), 8.0);
    }

    #[test]
    fn eval_matches_triple_loop() {
        let data = vec![0.3, -1.2, 0.7, 2.1, -0.4, 0.9, 1.5, -0.8];
        let a = DenseTensor::new(vec![2, 2, 2], data.clone()).unwrap();
        let xs = [vec![0.2, -0.5], vec![1.1, 0.4], vec![-0.7, 0.6]];
        let mut expected = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expected += data[i * 4 + j * 2 + k] * xs[0][i] * xs[1][j] * xs[2][k];
                }
            }
        }
        let got = a.eval_multilinear(&refs(&xs)).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn eval_rejects_bad_dims() {
        let a = DenseTensor::identity(2).unwrap();
        assert!(matches!(
            a.eval_multilinear(&[&[1.0, 0.0], &[1.0]]),
            Err(Error::Dimension(_))
        ));
        assert!(a.eval_multilinear(&[&[1.0, 0.0]]).is_err());
    }

    #[test]
    fn contract_empty_subset_is_identity() {
        let a = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let c = a.contract_subset(&IndexSubset::empty(2), &[]).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn contract_full_subset_is_scalar() {
        let a = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let xs = [vec![0.5, -1.0], vec![1.0, 2.0, 3.0]];
        let c = a.contract_subset(&IndexSubset::full(2), &refs(&xs)).unwrap();
        assert_eq!(c.order(), 0);
        assert_eq!(c.scalar_value(), a.eval_multilinear(&refs(&xs)).unwrap());
    }

    #[test]
    fn contract_middle_axis_of_rank_one() {
        let u = vec![1.0, 2.0];
        let v = vec![3.0, -1.0, 0.5];
        let w = vec![-2.0, 4.0];
        let a = DenseTensor::outer(&[u.clone(), v.clone(), w.clone()]).unwrap();
        let x2 = [0.25, 1.0, -2.0];
        let sub = IndexSubset::from_one_based(3, &[2]).unwrap();
        let c = a.contract_subset(&sub, &[&x2]).unwrap();
        let vx: f64 = v.iter().zip(&x2).map(|(a, b)| a * b).sum();
        let expected = DenseTensor::outer(&[u, w]).unwrap().scaled(vx);
        assert_eq!(c.shape(), &[2, 2]);
        for (a, b) in c.data().iter().zip(expected.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn contract_rejects_out_of_range_and_bad_vectors() {
        assert!(matches!(
            IndexSubset::new(2, vec![2]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(IndexSubset::new(3, vec![1, 1]).is_err());
        let a = DenseTensor::identity(2).unwrap();
        let sub = IndexSubset::new(2, vec![0]).unwrap();
        assert!(a.contract_subset(&sub, &[&[1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn contract_all_but_one_matches_nested_loops() {
        let a = DenseTensor::new(vec![2, 3, 2], (0..12).map(|i| (i as f64).sin()).collect())
            .unwrap();
        let x = [0.3, -0.9];
        let z = [1.7, 0.2];
        let sub = IndexSubset::new(3, vec![0, 2]).unwrap();
        let c = a.contract_subset(&sub, &[&x, &z]).unwrap();
        for j in 0..3 {
            let mut expected = 0.0;
            for i in 0..2 {
                for k in 0..2 {
                    expected += a.get(&[i, j, k]).unwrap() * x[i] * z[k];
                }
            }
            assert!((c.data()[j] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(DenseTensor::identity(2).unwrap().frobenius_norm(), 2f64.sqrt());
        assert_eq!(DenseTensor::zeros(vec![3, 1, 2]).unwrap().frobenius_norm(), 0.0);
        let a = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        // 1 + 4 + 9 + ... + 64 = 204
        assert_eq!(a.frobenius_norm(), 204f64.sqrt());
    }

    #[test]
    fn reshape_one_two_three() {
        let a = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let p = Partition::from_one_based(3, &[&[1], &[2, 3]]).unwrap();
        let b = a.reshape_partition(&p).unwrap();
        assert_eq!(b.shape(), &[2, 4]);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for i3 in 0..2 {
                    assert_eq!(
                        b.get(&[i1, i2 * 2 + i3]).unwrap(),
                        a.get(&[i1, i2, i3]).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn reshape_non_contiguous_block() {
        let a = DenseTensor::new(vec![2, 3, 4], (0..24).map(f64::from).collect()).unwrap();
        let p = Partition::from_one_based(3, &[&[1, 3], &[2]]).unwrap();
        let b = a.reshape_partition(&p).unwrap();
        assert_eq!(b.shape(), &[8, 3]);
        for i1 in 0..2 {
            for i2 in 0..3 {
                for i3 in 0..4 {
                    assert_eq!(
                        b.get(&[i1 * 4 + i3, i2]).unwrap(),
                        a.get(&[i1, i2, i3]).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn reshape_trivial_partitions() {
        let a = DenseTensor::new(vec![2, 3, 2], (0..12).map(|i| i as f64 - 4.5).collect())
            .unwrap();
        assert_eq!(a.reshape_partition(&Partition::singletons(3)).unwrap(), a);
        let flat = a.reshape_partition(&Partition::single_block(3)).unwrap();
        assert_eq!(flat.shape(), &[12]);
        assert_eq!(flat.frobenius_norm(), a.frobenius_norm());
        assert!(a.reshape_partition(&Partition::singletons(2)).is_err());
    }

    #[test]
    fn stack_examples() {
        let e1 = DenseTensor::vector(vec![1.0, 0.0]).unwrap();
        let e2 = DenseTensor::vector(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            stack_tensors(&[e1.clone(), e2]).unwrap(),
            DenseTensor::identity(2).unwrap()
        );
        let single = stack_tensors(std::slice::from_ref(&e1)).unwrap();
        assert_eq!(single.shape(), &[2, 1]);
        assert_eq!(single.data(), e1.data());

        let a = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseTensor::new(vec![2, 2], vec![-1.0, 0.5, 0.0, 2.0]).unwrap();
        let s = stack_tensors(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.frobenius_norm_sq(), a.frobenius_norm_sq() + b.frobenius_norm_sq());
        assert_eq!(s.get(&[1, 0, 1]).unwrap(), b.get(&[1, 0]).unwrap());
    }

    #[test]
    fn stack_errors() {
        assert!(matches!(stack_tensors(&[]), Err(Error::Empty(_))));
        let a = DenseTensor::identity(2).unwrap();
        let b = DenseTensor::identity(3).unwrap();
        assert!(matches!(stack_tensors(&[a, b]), Err(Error::Dimension(_))));
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52, 203];
        for (r, &b) in (1..=6).zip(&bell) {
            let parts = enumerate_partitions(r).unwrap();
            assert_eq!(parts.len(), b, "r = {r}");
            let unique: std::collections::HashSet<_> = parts.iter().cloned().collect();
            assert_eq!(unique.len(), b);
            for p in &parts {
                let canon = Partition::new(r, p.blocks().to_vec()).unwrap();
                assert_eq!(&canon, p);
            }
        }
        assert_eq!(enumerate_partitions(1).unwrap()[0].to_string(), "{{1}}");
    }

    #[test]
    fn partition_cap() {
        assert!(matches!(
            enumerate_partitions(9),
            Err(Error::PartitionCap { r: 9, cap: 8 })
        ));
        assert!(enumerate_partitions_with_cap(9, 9).is_ok());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0], vec![1]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 1], vec![1]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 1], vec![]]).is_err());
        let p = Partition::new(3, vec![vec![2, 1], vec![0]]).unwrap();
        assert_eq!(p.to_string(), "{{1},{2,3}}");
    }

    #[test]
    fn subsets_of_size() {
        let subs = IndexSubset::all_of_size(4, 2);
        assert_eq!(subs.len(), 6);
        assert_eq!(subs[0].members(), &[0, 1]);
        assert_eq!(subs[5].members(), &[2, 3]);
        assert_eq!(IndexSubset::all_of_size(3, 0).len(), 1);
        assert_eq!(subs[1].complement().members(), &[1, 3]);
    }

    #[test]
    fn symmetrize_gives_symmetric() {
        let a = DenseTensor::new(vec![2, 2, 2], (0..8).map(|i| (i as f64).cos()).collect())
            .unwrap();
        assert!(!a.is_symmetric(1e-12));
        let s = a.symmetrize().unwrap();
        assert!(s.is_symmetric(1e-12));
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn json_shape_validation() {
        let bad: std::result::Result<DenseTensor, _> =
            serde_json::from_str(r#"{"shape":[2,2],"data":[1,2,3]}"#);
        assert!(bad.is_err());
        let scalar: DenseTensor = serde_json::from_str(r#"{"shape":[],"data":[2.5]}"#).unwrap();
        assert_eq!(scalar.order(), 0);
    }

    fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
        prop::collection::vec(1usize..4, 1..4).prop_flat_map(|shape| {
            let len: usize = shape.iter().product();
            prop::collection::vec(-10.0f64..10.0, len)
                .prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn contraction_composes(a in tensor_strategy(), mask in 0u32..16, seed in any::<u64>()) {
            let r = a.order();
            let members: Vec<usize> = (0..r).filter(|t| mask & (1 << t) != 0).collect();
            let sub = IndexSubset::new(r, members).unwrap();
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5 };
            let xs: Vec<Vec<f64>> = a.shape().iter().map(|&d| (0..d).map(|_| next()).collect()).collect();
            let active: Vec<&[f64]> = sub.members().iter().map(|&t| xs[t].as_slice()).collect();
            let rest: Vec<&[f64]> = sub.complement().members().iter().map(|&t| xs[t].as_slice()).collect();
            let residual = a.contract_subset(&sub, &active).unwrap();
            let composed = residual.eval_multilinear(&rest).unwrap();
            let direct = naive_eval(&a, &xs);
            prop_assert!((composed - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }

        #[test]
        fn reshape_preserves_entries(a in tensor_strategy(), pick in 0usize..52) {
            let parts = enumerate_partitions(a.order()).unwrap();
            let p = &parts[pick % parts.len()];
            let b = a.reshape_partition(p).unwrap();
            let mut x: Vec<f64> = a.data().to_vec();
            let mut y: Vec<f64> = b.data().to_vec();
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            prop_assert_eq!(&x, &y);
            // same multiset summed in the same order
            let fx: f64 = x.iter().map(|v| v * v).sum();
            let fy: f64 = y.iter().map(|v| v * v).sum();
            prop_assert_eq!(fx, fy);
        }

        #[test]
        fn json_round_trip_is_bit_faithful(a in tensor_strategy()) {
            let text = serde_json::to_string(&a).unwrap();
            let back: DenseTensor = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(
                a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(a.shape(), back.shape());
        }
    }
}
