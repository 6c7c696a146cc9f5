//! Dense real/complex tensors, vectors and matrices.
//!
//! Entries are stored row-major with the last index fastest. Real-field
//! values use the same complex buffer with every imaginary part exactly zero,
//! so downstream code has a single arithmetic path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{re, zero, Field, Scalar, C};

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Advance a row-major multi-index in place. Returns false after the last one.
#[inline]
pub(crate) fn next_index(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

fn check_field<T: Scalar>(data: &[C<T>], field: Field) -> Result<()> {
    if field == Field::Real && data.iter().any(|z| z.im != T::zero()) {
        return Err(Error::Format(
            "real-field data has a nonzero imaginary part".into(),
        ));
    }
    Ok(())
}

/// A vector over ℝ or ℂ.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T: Scalar> {
    data: Vec<C<T>>,
    field: Field,
}

impl<T: Scalar> Vector<T> {
    pub fn new(data: Vec<C<T>>, field: Field) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Shape("vector dimension must be positive".into()));
        }
        check_field(&data, field)?;
        Ok(Self { data, field })
    }

    pub fn real(values: &[T]) -> Self {
        assert!(!values.is_empty(), "vector dimension must be positive");
        Self {
            data: values.iter().map(|&x| re(x)).collect(),
            field: Field::Real,
        }
    }

    pub fn complex(values: Vec<C<T>>) -> Self {
        assert!(!values.is_empty(), "vector dimension must be positive");
        Self {
            data: values,
            field: Field::Complex,
        }
    }

    /// Standard basis vector `e_i` in dimension `dim`.
    pub fn basis(dim: usize, i: usize, field: Field) -> Self {
        let mut data = vec![zero(); dim];
        data[i] = C::new(T::one(), T::zero());
        Self { data, field }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    /// Retag as complex (entries unchanged).
    pub fn into_complex(mut self) -> Self {
        self.field = Field::Complex;
        self
    }

    pub fn norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        let field = if s.im == T::zero() {
            self.field
        } else {
            Field::Complex
        };
        Self {
            data: self.data.iter().map(|&z| z * s).collect(),
            field,
        }
    }
}

/// Euclidean norm of a complex slice.
pub(crate) fn norm2<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        Self::new(rows, cols, values.iter().map(|&x| re(x)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![zero(); n * n];
        for i in 0..n {
            data[i * n + i] = re(T::one());
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::identity(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = re(v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C<T> {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C<T>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Self::new(self.rows, other.cols, data)
    }

    /// Reorder rows and columns: output (r, c) = input (row_perm[r], col_perm[c]).
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &r in row_perm {
            for &c in col_perm {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }
}

/// Dense multi-index array over ℝ or ℂ.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<C<T>>,
    field: Field,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<C<T>>, field: Field) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs at least one mode and positive dimensions"
            )));
        }
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!(
                "{} entries for shape {shape:?} (expected {n})",
                data.len()
            )));
        }
        check_field(&data, field)?;
        Ok(Self { shape, data, field })
    }

    pub fn from_real(shape: Vec<usize>, values: &[T]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&x| re(x)).collect(), Field::Real)
    }

    pub fn zeros(shape: Vec<usize>, field: Field) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![zero(); n], field).expect("valid zero tensor shape")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
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

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C<T>> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> C<T> {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C<T>) {
        if v.im != T::zero() {
            self.field = Field::Complex;
        }
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Promote the field tag to complex without touching the entries.
    pub fn into_complex(mut self) -> Self {
        self.field = Field::Complex;
        self
    }

    /// Drop the imaginary parts' tag if they are all exactly zero.
    pub fn narrowed(mut self) -> Self {
        if self.data.iter().all(|z| z.im == T::zero()) {
            self.field = Field::Real;
        }
        self
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| z * s).collect(),
            field: self.field,
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            field: self.field.join(other.field),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self
            .sub(other)?
            .data
            .iter()
            .fold(T::zero(), |m, z| m.max(z.norm())))
    }

    /// Reorder modes: output mode k is input mode `perm[k]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let m = self.order();
        let mut seen = vec![false; m];
        if perm.len() != m
            || perm
                .iter()
                .any(|&p| p >= m || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Modes(format!(
                "{perm:?} is not a permutation of 0..{m}"
            )));
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides = strides(&self.shape);
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0; m];
        loop {
            let off: usize = idx
                .iter()
                .zip(perm)
                .map(|(&i, &p)| i * src_strides[p])
                .sum();
            data.push(self.data[off]);
            if !next_index(&mut idx, &new_shape) {
                break;
            }
        }
        Ok(Self {
            shape: new_shape,
            data,
            field: self.field,
        })
    }

    /// Maximum deviation from invariance under any mode permutation.
    /// Returns an error for unequal mode dimensions.
    pub fn symmetry_defect(&self) -> Result<T> {
        if self.shape.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::UnequalDims(self.shape.clone()));
        }
        let m = self.order();
        let mut worst = T::zero();
        // adjacent transpositions generate the symmetric group
        for k in 0..m.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.swap(k, k + 1);
            worst = worst.max(self.max_abs_diff(&self.permute_modes(&perm)?)?);
        }
        Ok(worst)
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
            field: self.field,
        }
    }

    /// Hermitian inner product ⟨self, other⟩ = Σ conj(self)·other.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * b))
    }
}

/// Rank-one tensor `f_1 ⊗ ... ⊗ f_m`.
pub fn outer_product<T: Scalar>(factors: &[Vector<T>]) -> Result<Tensor<T>> {
    let first = factors.first().ok_or(Error::EmptyFactors)?;
    if factors.iter().any(|f| f.field != first.field) {
        return Err(Error::MixedFields);
    }
    let slices: Vec<&[C<T>]> = factors.iter().map(|f| f.as_slice()).collect();
    let shape: Vec<usize> = slices.iter().map(|s| s.len()).collect();
    let data = outer_slices(&slices);
    Tensor::new(shape, data, first.field)
}

/// Outer product of raw slices, row-major, built mode by mode.
pub(crate) fn outer_slices<T: Scalar>(factors: &[&[C<T>]]) -> Vec<C<T>> {
    let mut acc = vec![re(T::one())];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for &a in &acc {
            next.extend(f.iter().map(|&b| a * b));
        }
        acc = next;
    }
    acc
}

pub fn frobenius_norm<T: Scalar>(t: &Tensor<T>) -> T {
    t.frobenius_norm()
}

/// ‖f_1 ⊗ ... ⊗ f_m‖_F computed as the product of factor norms.
pub fn rank_one_frobenius<T: Scalar>(factors: &[Vector<T>]) -> T {
    factors
        .iter()
        .map(Vector::norm)
        .fold(T::one(), |a, b| a * b)
}

fn validate_row_modes(m: usize, row_modes: &[usize]) -> Result<Vec<usize>> {
    if row_modes.is_empty() || row_modes.len() >= m {
        return Err(Error::Modes(format!(
            "row modes {row_modes:?} must be a nonempty strict subset of 0..{m}"
        )));
    }
    let mut seen = vec![false; m];
    for &r in row_modes {
        if r >= m {
            return Err(Error::Modes(format!("mode {r} out of range for order {m}")));
        }
        if std::mem::replace(&mut seen[r], true) {
            return Err(Error::Modes(format!("mode {r} repeated")));
        }
    }
    Ok((0..m).filter(|k| !seen[*k]).collect())
}

/// Flatten `t` into a matrix whose rows enumerate `row_modes` (in the given
/// order) and whose columns enumerate the remaining modes ascending.
/// Modes are zero-based.
pub fn matricize<T: Scalar>(t: &Tensor<T>, row_modes: &[usize]) -> Result<Matrix<T>> {
    let col_modes = validate_row_modes(t.order(), row_modes)?;
    let perm: Vec<usize> = row_modes.iter().chain(&col_modes).copied().collect();
    let rows = row_modes.iter().map(|&k| t.shape[k]).product();
    let cols = col_modes.iter().map(|&k| t.shape[k]).product();
    let permuted = t.permute_modes(&perm)?;
    Matrix::new(rows, cols, permuted.data)
}

/// Inverse of [`matricize`] for a known original shape.
pub fn tensorize<T: Scalar>(
    m: &Matrix<T>,
    shape: &[usize],
    row_modes: &[usize],
    field: Field,
) -> Result<Tensor<T>> {
    let col_modes = validate_row_modes(shape.len(), row_modes)?;
    let perm: Vec<usize> = row_modes.iter().chain(&col_modes).copied().collect();
    let perm_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let t = Tensor::new(perm_shape, m.data.clone(), field)?;
    let mut inverse = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inverse[p] = k;
    }
    t.permute_modes(&inverse)
}

/// Average of `t` over all mode permutations.
pub fn symmetrize<T: Scalar>(t: &Tensor<T>) -> Result<Tensor<T>> {
    if t.shape.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::UnequalDims(t.shape.clone()));
    }
    let perms = permutations(t.order());
    let mut acc = vec![zero(); t.len()];
    for p in &perms {
        for (a, b) in acc.iter_mut().zip(t.permute_modes(p)?.data) {
            *a += b;
        }
    }
    let n = T::from_usize(perms.len()).expect("permutation count fits");
    Tensor::new(
        t.shape.clone(),
        acc.into_iter().map(|z| z / n).collect(),
        t.field,
    )
}

/// On-disk canonical tensor representation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorFile {
    pub shape: Vec<usize>,
    pub field: Field,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn to_file(&self) -> TensorFile {
        TensorFile {
            shape: self.shape.clone(),
            field: self.field,
            re: self.data.iter().map(|z| z.re.as_f64()).collect(),
            im: self
                .field
                .is_complex()
                .then(|| self.data.iter().map(|z| z.im.as_f64()).collect()),
        }
    }

    pub fn from_file(file: &TensorFile) -> Result<Self> {
        let n: usize = file.shape.iter().product();
        if file.re.len() != n {
            return Err(Error::Format(format!(
                "`re` has {} entries, shape {:?} needs {n}",
                file.re.len(),
                file.shape
            )));
        }
        let im = match &file.im {
            Some(im) if im.len() != n => {
                return Err(Error::Format(format!(
                    "`im` has {} entries, shape {:?} needs {n}",
                    im.len(),
                    file.shape
                )))
            }
            Some(im) => im.clone(),
            None => vec![0.0; n],
        };
        if file.field == Field::Real && im.iter().any(|&x| x != 0.0) {
            return Err(Error::Format(
                "field is real but `im` has nonzero entries".into(),
            ));
        }
        let data = file
            .re
            .iter()
            .zip(&im)
            .map(|(&r, &i)| C::new(T::lit(r), T::lit(i)))
            .collect();
        Tensor::new(file.shape.clone(), data, file.field).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("tensor serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TensorFile = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(&file)
    }
}
