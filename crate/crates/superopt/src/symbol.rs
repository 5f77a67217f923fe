//! Matrix functions on the unit circle represented by finite Fourier
//! expansions, plus their grid-sampled form.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SuperoptError};
use crate::fft;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

/// Block sizes of the four-block symbol. `m1 x n1` is the corrected block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub m1: usize,
    pub m2: usize,
    pub n1: usize,
    pub n2: usize,
}

impl BlockPartition {
    pub fn new(m1: usize, m2: usize, n1: usize, n2: usize) -> Result<Self> {
        if m1 == 0 || n1 == 0 {
            return Err(SuperoptError::InvalidPartition(
                "empty corrected block (m1 and n1 must be >= 1)".into(),
            ));
        }
        Ok(Self { m1, m2, n1, n2 })
    }

    /// Plain Nehari partition: the whole symbol is the corrected block.
    pub fn nehari(m: usize, n: usize) -> Result<Self> {
        Self::new(m, 0, n, 0)
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn transpose(&self) -> Self {
        Self { m1: self.n1, m2: self.n2, n1: self.m1, n2: self.m2 }
    }

    /// Partition of the level-reduced symbol (corrected block shrinks by one).
    pub fn reduced(&self) -> Result<Self> {
        Self::new(self.m1 - 1, self.m2, self.n1 - 1, self.n2)
    }
}

/// Which frequencies `riesz_project` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszPart {
    /// k >= 0
    Analytic,
    /// k < 0
    Antianalytic,
}

/// Matrix function given by finitely many Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSymbol {
    partition: BlockPartition,
    coeffs: BTreeMap<i64, CMat>,
}

impl MatrixSymbol {
    pub fn new(partition: BlockPartition, coeffs: BTreeMap<i64, CMat>) -> Result<Self> {
        let (m, n) = (partition.m(), partition.n());
        for (k, c) in &coeffs {
            if c.nrows() != m || c.ncols() != n {
                return Err(SuperoptError::ShapeMismatch(format!(
                    "coefficient at k={k} has shape {}x{}, expected {m}x{n}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        Ok(Self { partition, coeffs })
    }

    pub fn zero(partition: BlockPartition) -> Self {
        Self { partition, coeffs: BTreeMap::new() }
    }

    /// Scalar (1x1) symbol from a list of `(frequency, value)` pairs.
    pub fn scalar(coeffs: &[(i64, C64)]) -> Self {
        let p = BlockPartition::nehari(1, 1).unwrap();
        let mut map = BTreeMap::new();
        for &(k, v) in coeffs {
            let e = map
                .entry(k)
                .or_insert_with(|| CMat::zeros(1, 1));
            e[(0, 0)] += v;
        }
        Self { partition: p, coeffs: map }
    }

    pub fn constant(partition: BlockPartition, value: CMat) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, value);
        Self::new(partition, coeffs)
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    pub fn with_partition(&self, partition: BlockPartition) -> Result<Self> {
        Self::new(partition, self.coeffs.clone())
    }

    pub fn nrows(&self) -> usize {
        self.partition.m()
    }

    pub fn ncols(&self) -> usize {
        self.partition.n()
    }

    /// Truncation degree: max |k| over stored nonzero coefficients.
    pub fn nsym(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, c)| c.iter().any(|x| x.norm() > 0.0))
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, k: i64) -> CMat {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.nrows(), self.ncols()))
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CMat> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.iter().all(|x| x.norm() == 0.0))
    }

    /// Largest coefficient magnitude.
    pub fn coeff_max(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|c| c.iter())
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    /// Drop coefficients whose matrices are below `tol` in max-norm.
    pub fn truncated(&self, tol: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c.iter().any(|x| x.norm() > tol))
            .map(|(k, c)| (*k, c.clone()))
            .collect();
        Self { partition: self.partition, coeffs }
    }

    /// Default grid size: 4*(nsym+1) rounded up to a power of two.
    pub fn default_grid(&self) -> usize {
        (4 * (self.nsym() + 1)).next_power_of_two()
    }

    pub fn eval(&self, z: C64) -> CMat {
        let mut acc = CMat::zeros(self.nrows(), self.ncols());
        for (k, c) in &self.coeffs {
            acc += c * z.powi(*k as i32);
        }
        acc
    }

    pub fn sample_on_grid(&self, grid_size: usize) -> Result<GridFn> {
        let nsym = self.nsym();
        let need = 2 * nsym + 2;
        if grid_size == 0 {
            return Err(SuperoptError::Aliasing { grid: grid_size, nsym, need });
        }
        // evaluation is exact on any grid: compute on a fine enough multiple
        // of the requested grid and keep every stride-th node
        let mut stride = 1usize;
        while stride * grid_size < need {
            stride *= 2;
        }
        let g = stride * grid_size;
        let (m, n) = (self.nrows(), self.ncols());
        let mut values = vec![CMat::zeros(m, n); grid_size];
        for i in 0..m {
            for j in 0..n {
                let mut bins = vec![C64::new(0.0, 0.0); g];
                for (k, c) in &self.coeffs {
                    if let Some(b) = fft::frequency_bin(*k, g) {
                        bins[b] += c[(i, j)];
                    }
                }
                let samples = fft::bins_to_samples(&bins);
                for (l, s) in samples.into_iter().step_by(stride).enumerate() {
                    values[l][(i, j)] = s;
                }
            }
        }
        Ok(GridFn { values })
    }

    /// Recover a symbol from grid samples (all representable frequencies kept).
    pub fn from_grid(grid: &GridFn, partition: BlockPartition) -> Result<Self> {
        let g = grid.len();
        let (m, n) = (partition.m(), partition.n());
        if grid.values.iter().any(|v| v.nrows() != m || v.ncols() != n) {
            return Err(SuperoptError::ShapeMismatch(
                "grid samples do not match partition shape".into(),
            ));
        }
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for i in 0..m {
            for j in 0..n {
                let samples: Vec<C64> = grid.values.iter().map(|v| v[(i, j)]).collect();
                let bins = fft::samples_to_bins(&samples);
                for (idx, c) in bins.into_iter().enumerate() {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let k = fft::bin_frequency(idx, g);
                    coeffs
                        .entry(k)
                        .or_insert_with(|| CMat::zeros(m, n))[(i, j)] = c;
                }
            }
        }
        Self::new(partition, coeffs)
    }

    pub fn riesz_project(&self, part: RieszPart) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| match part {
                RieszPart::Analytic => **k >= 0,
                RieszPart::Antianalytic => **k < 0,
            })
            .map(|(k, c)| (*k, c.clone()))
            .collect();
        Self { partition: self.partition, coeffs }
    }

    /// L2-normalized energy in negative frequencies (analyticity defect).
    pub fn antianalytic_energy(&self) -> f64 {
        let neg: f64 = self
            .coeffs
            .iter()
            .filter(|(k, _)| **k < 0)
            .map(|(_, c)| c.iter().map(|x| x.norm_sqr()).sum::<f64>())
            .sum();
        neg.sqrt()
    }

    pub fn linf_norm(&self, grid_size: usize) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let grid = self.sample_on_grid(grid_size)?;
        Ok(grid.linf_norm())
    }

    /// Per-node j-th singular value, its sup, and the flatness (max-min).
    pub fn sj_profile(&self, j: usize, grid_size: usize) -> Result<(Vec<f64>, f64, f64)> {
        let limit = self.nrows().min(self.ncols());
        if j >= limit {
            return Err(SuperoptError::SingularIndexOutOfRange { j, limit });
        }
        let grid = self.sample_on_grid(grid_size)?;
        let profile = grid.sj_profile(j);
        let max = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = profile.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok((profile, max, max - min))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(SuperoptError::ShapeMismatch("add: incompatible shapes".into()));
        }
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            coeffs
                .entry(*k)
                .and_modify(|e| *e += c)
                .or_insert_with(|| c.clone());
        }
        Ok(Self { partition: self.partition, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (*k, c * s)).collect();
        Self { partition: self.partition, coeffs }
    }

    /// Coefficient-level convolution product; partitions of the result are
    /// `(rows of self, cols of other)` with a Nehari split by default.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.ncols() != other.nrows() {
            return Err(SuperoptError::ShapeMismatch("multiply: inner dims differ".into()));
        }
        let partition = BlockPartition::nehari(self.nrows(), other.ncols())?;
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (ka, a) in &self.coeffs {
            for (kb, b) in &other.coeffs {
                let k = ka + kb;
                let prod = a * b;
                coeffs
                    .entry(k)
                    .and_modify(|e| *e += &prod)
                    .or_insert(prod);
            }
        }
        Ok(Self { partition, coeffs })
    }

    /// Adjoint on the circle: `(Phi^*)(zeta) = Phi(zeta)^*`, i.e. coefficient
    /// `k` maps to the conjugate transpose of coefficient `-k`.
    pub fn adjoint(&self) -> Self {
        let partition = self.partition.transpose();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (-*k, c.adjoint()))
            .collect();
        Self { partition, coeffs }
    }

    pub fn transpose(&self) -> Self {
        let partition = self.partition.transpose();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (*k, c.transpose()))
            .collect();
        Self { partition, coeffs }
    }

    /// Pointwise complex conjugate: coefficient `k` maps to conj of `-k`.
    pub fn conj(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (-*k, c.map(|x| x.conj())))
            .collect();
        Self { partition: self.partition, coeffs }
    }

    /// Extract a sub-block as a symbol with Nehari partition.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        if row0 + rows > self.nrows() || col0 + cols > self.ncols() {
            return Err(SuperoptError::ShapeMismatch("block out of range".into()));
        }
        let partition = BlockPartition::nehari(rows.max(1), cols.max(1))?;
        if rows == 0 || cols == 0 {
            return Ok(Self::zero(partition));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (*k, c.view((row0, col0), (rows, cols)).into_owned()))
            .collect();
        Self::new(partition, coeffs)
    }

    pub fn block11(&self) -> Self {
        let p = self.partition;
        self.block(0, 0, p.m1, p.n1).expect("block11 in range")
    }

    /// Embed an m1 x n1 correction as `diag(Q, 0)` of the full size.
    pub fn embed_correction(&self, q: &Self) -> Result<Self> {
        let p = self.partition;
        if q.nrows() != p.m1 || q.ncols() != p.n1 {
            return Err(SuperoptError::ShapeMismatch(format!(
                "correction has shape {}x{}, expected {}x{}",
                q.nrows(),
                q.ncols(),
                p.m1,
                p.n1
            )));
        }
        let (m, n) = (p.m(), p.n());
        let coeffs = q
            .coeffs
            .iter()
            .map(|(k, c)| {
                let mut full = CMat::zeros(m, n);
                full.view_mut((0, 0), (p.m1, p.n1)).copy_from(c);
                (*k, full)
            })
            .collect();
        Self::new(p, coeffs)
    }

    /// Error symbol `Phi - diag(Q, 0)`.
    pub fn error_symbol(&self, q: &Self) -> Result<Self> {
        self.sub(&self.embed_correction(q)?)
    }
}

/// Uniformly sampled matrix function on the circle.
#[derive(Debug, Clone)]
pub struct GridFn {
    pub values: Vec<CMat>,
}

impl GridFn {
    pub fn new(values: Vec<CMat>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> Vec<C64> {
        fft::grid_nodes(self.len())
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn nrows(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values[0].ncols()
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self { values: self.values.iter().map(f).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.map(|v| v.adjoint())
    }

    pub fn transpose(&self) -> Self {
        self.map(|v| v.transpose())
    }

    pub fn linf_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| spectral_norm(v))
            .fold(0.0, f64::max)
    }

    /// Max entrywise magnitude over the grid.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    pub fn sj_profile(&self, j: usize) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| {
                let s = sorted_singular_values(v);
                s.get(j).copied().unwrap_or(0.0)
            })
            .collect()
    }

    /// Max over nodes of `||V(z)^* V(z) - I||` (unitarity residual).
    pub fn unitary_residual(&self) -> f64 {
        let n = self.ncols();
        let eye = CMat::identity(n, n);
        self.values
            .iter()
            .map(|v| spectral_norm(&(v.adjoint() * v - &eye)))
            .fold(0.0, f64::max)
    }

    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|v| v.view((row0, col0), (rows, cols)).into_owned())
                .collect(),
        }
    }
}

/// Spectral norm (largest singular value) of a dense complex matrix.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    sorted_singular_values(a).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order. The complex SVD in nalgebra fails to
/// converge on some well-conditioned inputs, so this goes through the
/// Hermitian eigenproblem of the smaller Gram matrix instead.
pub fn sorted_singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let mut s: Vec<f64> = nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Scalar function on the circle: a 1x1 symbol with optional structure tags.
#[derive(Debug, Clone)]
pub struct ScalarSymbol {
    sym: MatrixSymbol,
}

impl ScalarSymbol {
    pub fn new(sym: MatrixSymbol) -> Result<Self> {
        if sym.nrows() != 1 || sym.ncols() != 1 {
            return Err(SuperoptError::ShapeMismatch("scalar symbol must be 1x1".into()));
        }
        Ok(Self { sym })
    }

    pub fn one() -> Self {
        Self { sym: MatrixSymbol::scalar(&[(0, C64::new(1.0, 0.0))]) }
    }

    pub fn from_coeffs(coeffs: &[(i64, C64)]) -> Self {
        Self { sym: MatrixSymbol::scalar(coeffs) }
    }

    pub fn symbol(&self) -> &MatrixSymbol {
        &self.sym
    }

    pub fn coeff(&self, k: i64) -> C64 {
        self.sym.coeff(k)[(0, 0)]
    }

    pub fn samples(&self, grid_size: usize) -> Result<Vec<C64>> {
        Ok(self
            .sym
            .sample_on_grid(grid_size)?
            .values
            .iter()
            .map(|v| v[(0, 0)])
            .collect())
    }

    pub fn from_samples(samples: &[C64]) -> Self {
        let bins = fft::samples_to_bins(samples);
        let g = samples.len();
        let coeffs: Vec<(i64, C64)> = bins
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(idx, c)| (fft::bin_frequency(idx, g), c))
            .collect();
        Self::from_coeffs(&coeffs)
    }

    /// Max over the grid of | |u| - 1 |.
    pub fn unimodularity_defect(&self, grid_size: usize) -> Result<f64> {
        Ok(self
            .samples(grid_size)?
            .iter()
            .map(|x| (x.norm() - 1.0).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_unimodular(&self, grid_size: usize, tol: f64) -> Result<bool> {
        Ok(self.unimodularity_defect(grid_size)? <= tol)
    }

    pub fn is_inner(&self, grid_size: usize, tol: f64) -> Result<bool> {
        Ok(self.is_unimodular(grid_size, tol)?
            && self.sym.antianalytic_energy() <= 1e-10 * self.sym.coeff_max().max(1.0))
    }
}

/// Column function with a designated upper/lower split.
#[derive(Debug, Clone)]
pub struct ColumnSymbol {
    sym: MatrixSymbol,
    upper: usize,
}

impl ColumnSymbol {
    pub fn new(sym: MatrixSymbol, upper: usize) -> Result<Self> {
        if sym.ncols() != 1 {
            return Err(SuperoptError::ShapeMismatch("column symbol must have one column".into()));
        }
        if upper > sym.nrows() {
            return Err(SuperoptError::ShapeMismatch("upper split exceeds height".into()));
        }
        Ok(Self { sym, upper })
    }

    pub fn symbol(&self) -> &MatrixSymbol {
        &self.sym
    }

    pub fn height(&self) -> usize {
        self.sym.nrows()
    }

    pub fn upper_len(&self) -> usize {
        self.upper
    }

    /// Upper block (the H^2 components).
    pub fn upper(&self) -> MatrixSymbol {
        self.sym.block(0, 0, self.upper, 1).expect("upper block in range")
    }

    /// Lower block (the L^2 components); empty height yields a zero 1x1.
    pub fn lower(&self) -> Option<MatrixSymbol> {
        let lower = self.height() - self.upper;
        if lower == 0 {
            None
        } else {
            Some(self.sym.block(self.upper, 0, lower, 1).expect("lower block in range"))
        }
    }

    /// Entry `i` as a scalar symbol.
    pub fn entry(&self, i: usize) -> ScalarSymbol {
        ScalarSymbol::new(self.sym.block(i, 0, 1, 1).expect("entry in range")).unwrap()
    }

    /// Pointwise Euclidean norms ||c(zeta_l)||.
    pub fn pointwise_norms(&self, grid_size: usize) -> Result<Vec<f64>> {
        let grid = self.sym.sample_on_grid(grid_size)?;
        Ok(grid
            .values
            .iter()
            .map(|v| v.column(0).norm())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zbar() -> MatrixSymbol {
        MatrixSymbol::scalar(&[(-1, C64::new(1.0, 0.0))])
    }

    fn diag_example() -> MatrixSymbol {
        // diag(zbar, 0.5 zbar)
        let p = BlockPartition::nehari(2, 2).unwrap();
        let mut c = CMat::zeros(2, 2);
        c[(0, 0)] = C64::new(1.0, 0.0);
        c[(1, 1)] = C64::new(0.5, 0.0);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(-1, c);
        MatrixSymbol::new(p, coeffs).unwrap()
    }

    #[test]
    fn sample_zbar_grid8() {
        let s = zbar().sample_on_grid(8).unwrap();
        let nodes = s.nodes();
        for (l, v) in s.values.iter().enumerate() {
            let expect = nodes[l].conj();
            assert!((v[(0, 0)] - expect).norm() < 1e-12, "node {l}");
        }
    }

    #[test]
    fn sample_zero_symbol() {
        let p = BlockPartition::nehari(2, 3).unwrap();
        let s = MatrixSymbol::zero(p).sample_on_grid(8).unwrap();
        assert!(s.max_abs() == 0.0);
    }

    #[test]
    fn sample_diag_example_grid16() {
        let s = diag_example().sample_on_grid(16).unwrap();
        let nodes = s.nodes();
        for (l, v) in s.values.iter().enumerate() {
            assert!((v[(0, 0)] - nodes[l].conj()).norm() < 1e-12);
            assert!((v[(1, 1)] - 0.5 * nodes[l].conj()).norm() < 1e-12);
            assert!(v[(0, 1)].norm() < 1e-14 && v[(1, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn small_grid_evaluation_exact() {
        // grids coarser than the bandwidth are evaluated without aliasing
        let s = diag_example();
        let grid = s.sample_on_grid(3).unwrap();
        for (l, v) in grid.values.iter().enumerate() {
            let z = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / 3.0);
            assert!((v[(0, 0)] - z.conj()).norm() < 1e-12);
            assert!((v[(1, 1)] - 0.5 * z.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_roundtrip_identity() {
        let s = diag_example();
        let grid = s.sample_on_grid(16).unwrap();
        let back = MatrixSymbol::from_grid(&grid, s.partition()).unwrap();
        let diff = s.sub(&back).unwrap();
        assert!(diff.coeff_max() < 1e-10);
    }

    #[test]
    fn riesz_projections() {
        // P+(zbar) = 0
        assert!(zbar().riesz_project(RieszPart::Analytic).is_zero());
        // P-(2 + z + 3 zbar^2) = 3 zbar^2
        let s = MatrixSymbol::scalar(&[
            (0, C64::new(2.0, 0.0)),
            (1, C64::new(1.0, 0.0)),
            (-2, C64::new(3.0, 0.0)),
        ]);
        let neg = s.riesz_project(RieszPart::Antianalytic);
        assert!((neg.coeff(-2)[(0, 0)] - C64::new(3.0, 0.0)).norm() < 1e-15);
        assert_eq!(neg.nsym(), 2);
        assert!(neg.coeff(0)[(0, 0)].norm() == 0.0);
        // P+ + P- = id
        let sum = s
            .riesz_project(RieszPart::Analytic)
            .add(&s.riesz_project(RieszPart::Antianalytic))
            .unwrap();
        assert!(sum.sub(&s).unwrap().coeff_max() < 1e-15);
    }

    #[test]
    fn linf_norms() {
        assert!((diag_example().linf_norm(16).unwrap() - 1.0).abs() < 1e-12);
        let p = BlockPartition::nehari(2, 2).unwrap();
        let mut c = CMat::zeros(2, 2);
        c[(0, 0)] = C64::new(3.0, 0.0);
        c[(1, 1)] = C64::new(4.0, 0.0);
        let s = MatrixSymbol::constant(p, c).unwrap();
        assert!((s.linf_norm(8).unwrap() - 4.0).abs() < 1e-12);
        // [[zbar, 0], [0, 0.3]]
        let mut c0 = CMat::zeros(2, 2);
        c0[(1, 1)] = C64::new(0.3, 0.0);
        let mut cm1 = CMat::zeros(2, 2);
        cm1[(0, 0)] = C64::new(1.0, 0.0);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, c0);
        coeffs.insert(-1, cm1);
        let s = MatrixSymbol::new(p, coeffs).unwrap();
        assert!((s.linf_norm(16).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sj_profile_diag() {
        let (profile, sup, flat) = diag_example().sj_profile(1, 64).unwrap();
        assert!((sup - 0.5).abs() < 1e-12);
        assert!(flat < 1e-12);
        assert!(profile.iter().all(|x| (x - 0.5).abs() < 1e-12));
    }

    #[test]
    fn sj_profile_derived_closed_form() {
        // [[zbar + 0.1 z, 0], [0, 0]], j = 0: profile |1 + 0.1 e^{2 i theta}|
        let p = BlockPartition::nehari(2, 2).unwrap();
        let mut cm1 = CMat::zeros(2, 2);
        cm1[(0, 0)] = C64::new(1.0, 0.0);
        let mut c1 = CMat::zeros(2, 2);
        c1[(0, 0)] = C64::new(0.1, 0.0);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(-1, cm1);
        coeffs.insert(1, c1);
        let s = MatrixSymbol::new(p, coeffs).unwrap();
        let (profile, sup, _) = s.sj_profile(0, 512).unwrap();
        for (l, v) in profile.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * l as f64 / 512.0;
            let expect = (C64::new(1.0, 0.0)
                + C64::new(0.1, 0.0) * C64::from_polar(1.0, 2.0 * theta))
            .norm();
            assert!((v - expect).abs() < 1e-10, "node {l}");
        }
        assert!((sup - 1.1).abs() < 1e-9);
    }

    #[test]
    fn sj_out_of_range() {
        assert!(diag_example().sj_profile(2, 16).is_err());
    }

    #[test]
    fn algebra_ops() {
        // (z I2) * (zbar I2) = I2
        let p = BlockPartition::nehari(2, 2).unwrap();
        let zi = MatrixSymbol::new(p, {
            let mut m = BTreeMap::new();
            m.insert(1, CMat::identity(2, 2));
            m
        })
        .unwrap();
        let zbi = MatrixSymbol::new(p, {
            let mut m = BTreeMap::new();
            m.insert(-1, CMat::identity(2, 2));
            m
        })
        .unwrap();
        let prod = zi.multiply(&zbi).unwrap();
        assert!((prod.coeff(0) - CMat::identity(2, 2)).norm() < 1e-15);
        assert_eq!(prod.truncated(1e-14).nsym(), 0);

        // adjoint of zbar = z
        let adj = zbar().adjoint();
        assert!((adj.coeff(1)[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);

        // transpose of [[zbar, 0], [z^2, 0]]
        let mut cm1 = CMat::zeros(2, 2);
        cm1[(0, 0)] = C64::new(1.0, 0.0);
        let mut c2 = CMat::zeros(2, 2);
        c2[(1, 0)] = C64::new(1.0, 0.0);
        let s = MatrixSymbol::new(p, {
            let mut m = BTreeMap::new();
            m.insert(-1, cm1);
            m.insert(2, c2);
            m
        })
        .unwrap();
        let t = s.transpose();
        assert!((t.coeff(-1)[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((t.coeff(2)[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(t.coeff(2)[(1, 0)].norm() == 0.0);
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = MatrixSymbol::zero(BlockPartition::nehari(2, 2).unwrap());
        let b = MatrixSymbol::zero(BlockPartition::nehari(3, 2).unwrap());
        assert!(a.add(&b).is_err());
        assert!(a.multiply(&b).is_err());
    }

    #[test]
    fn riesz_parts_l2_orthogonal() {
        let s = MatrixSymbol::scalar(&[
            (-3, C64::new(0.3, 0.1)),
            (-1, C64::new(1.0, -2.0)),
            (0, C64::new(0.5, 0.0)),
            (2, C64::new(0.0, 1.5)),
            (3, C64::new(-0.7, 0.2)),
        ]);
        let g = 16;
        let plus = ScalarSymbol::new(s.riesz_project(RieszPart::Analytic)).unwrap();
        let minus = ScalarSymbol::new(s.riesz_project(RieszPart::Antianalytic)).unwrap();
        let a = plus.samples(g).unwrap();
        let b = minus.samples(g).unwrap();
        let inner: C64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x * y.conj())
            .sum::<C64>()
            / C64::new(g as f64, 0.0);
        assert!(inner.norm() <= 1e-10);
    }
}
