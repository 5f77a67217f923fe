//! Finite truncations of the four-block, Hankel, and Toeplitz operators,
//! with norms, singular values, maximizing vectors, winding numbers and
//! kernel dimensions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SuperoptError};
use crate::symbol::{BlockPartition, CMat, ColumnSymbol, MatrixSymbol, ScalarSymbol, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    FourBlock,
    Hankel,
    Toeplitz,
}

/// One basis element: frequency and vector component.
pub type BasisElem = (i64, usize);

/// Indexed Fourier bases of the truncated input and output spaces.
#[derive(Debug, Clone)]
pub struct BasisMap {
    pub input: Vec<BasisElem>,
    pub output: Vec<BasisElem>,
}

impl BasisMap {
    /// Input basis for the given kind.
    ///
    /// Four-block: `z^k e_j`, analytic window `0..=n_in` for the first `n1`
    /// components and symmetric window `-n_in..=n_in` for the L^2 components.
    /// Output window is widened by the symbol degree so every image is
    /// represented exactly.
    pub fn build(
        partition: BlockPartition,
        kind: OperatorKind,
        n_in: usize,
        nsym: usize,
    ) -> Self {
        let (m, n) = (partition.m(), partition.n());
        let n_out = (n_in + nsym) as i64;
        let mut input = Vec::new();
        let mut output = Vec::new();
        match kind {
            OperatorKind::FourBlock => {
                for j in 0..n {
                    let lo = if j < partition.n1 { 0 } else { -(n_in as i64) };
                    for k in lo..=(n_in as i64) {
                        input.push((k, j));
                    }
                }
                for i in 0..m {
                    let hi = if i < partition.m1 { -1 } else { n_out };
                    for k in -n_out..=hi {
                        output.push((k, i));
                    }
                }
            }
            OperatorKind::Hankel => {
                for j in 0..n {
                    for k in 0..=(n_in as i64) {
                        input.push((k, j));
                    }
                }
                for i in 0..m {
                    for k in -n_out..=-1 {
                        output.push((k, i));
                    }
                }
            }
            OperatorKind::Toeplitz => {
                // Output extends to n_in + nsym so the restriction of T_u to
                // degree <= n_in polynomials is represented exactly; otherwise
                // clipped top frequencies produce spurious kernel vectors.
                for j in 0..n {
                    for k in 0..=(n_in as i64) {
                        input.push((k, j));
                    }
                }
                for i in 0..m {
                    for k in 0..=n_out {
                        output.push((k, i));
                    }
                }
            }
        }
        Self { input, output }
    }
}

/// Dense matrix of a compression of multiply-then-project.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub matrix: CMat,
    pub basis: BasisMap,
    pub kind: OperatorKind,
    pub partition: BlockPartition,
    pub n_in: usize,
}

/// Maximizing pair of a truncated operator.
#[derive(Debug, Clone)]
pub struct MaximizingPair {
    /// Largest singular value.
    pub t: f64,
    /// Right singular vector as a column symbol (input side).
    pub f: ColumnSymbol,
    /// `Gamma f / t` as a column symbol (output side).
    pub g: ColumnSymbol,
    /// Gap `s_0 - s_1` relative to `s_0`.
    pub relative_gap: f64,
}

pub fn build_operator(
    sym: &MatrixSymbol,
    kind: OperatorKind,
    n_in: usize,
) -> TruncatedOperator {
    let partition = sym.partition();
    let nsym = sym.nsym();
    let basis = BasisMap::build(partition, kind, n_in, nsym);
    let mut matrix = CMat::zeros(basis.output.len(), basis.input.len());
    // Entry ((l,i),(k,j)) = coeff_{i,j}(l - k).
    for (col, &(k, j)) in basis.input.iter().enumerate() {
        for (row, &(l, i)) in basis.output.iter().enumerate() {
            let d = l - k;
            if d.unsigned_abs() as usize > nsym {
                continue;
            }
            let c = sym.coeff(d)[(i, j)];
            if c.norm() != 0.0 {
                matrix[(row, col)] = c;
            }
        }
    }
    TruncatedOperator { matrix, basis, kind, partition, n_in }
}

impl TruncatedOperator {
    pub fn operator_norm(&self) -> f64 {
        crate::symbol::spectral_norm(&self.matrix)
    }

    pub fn singular_values(&self, count: usize) -> Vec<f64> {
        let mut s = crate::symbol::sorted_singular_values(&self.matrix);
        s.resize(count.max(s.len()), 0.0);
        s.truncate(count);
        s
    }

    /// Input-space column symbol from a coefficient vector.
    fn input_symbol(&self, x: &DVector<C64>) -> ColumnSymbol {
        let n = self.partition.n();
        let mut coeffs = std::collections::BTreeMap::new();
        for (idx, &(k, j)) in self.basis.input.iter().enumerate() {
            if x[idx].norm() == 0.0 {
                continue;
            }
            let e = coeffs
                .entry(k)
                .or_insert_with(|| CMat::zeros(n, 1));
            e[(j, 0)] = x[idx];
        }
        let p = BlockPartition::nehari(n, 1).unwrap();
        let upper = match self.kind {
            OperatorKind::FourBlock => self.partition.n1,
            _ => n,
        };
        ColumnSymbol::new(MatrixSymbol::new(p, coeffs).unwrap(), upper).unwrap()
    }

    fn output_symbol(&self, y: &DVector<C64>) -> ColumnSymbol {
        let m = self.partition.m();
        let mut coeffs = std::collections::BTreeMap::new();
        for (idx, &(k, i)) in self.basis.output.iter().enumerate() {
            if y[idx].norm() == 0.0 {
                continue;
            }
            let e = coeffs
                .entry(k)
                .or_insert_with(|| CMat::zeros(m, 1));
            e[(i, 0)] = y[idx];
        }
        let p = BlockPartition::nehari(m, 1).unwrap();
        let upper = match self.kind {
            OperatorKind::FourBlock => self.partition.m1,
            _ => m,
        };
        ColumnSymbol::new(MatrixSymbol::new(p, coeffs).unwrap(), upper).unwrap()
    }

    /// Top singular triple mapped back to column symbols. `seed` drives the
    /// tie-break when the top singular value is degenerate: seed 0 picks the
    /// vector with lexicographically maximal absolute coefficient sequence,
    /// a nonzero seed picks a random unit combination inside the top cluster.
    pub fn norm_and_maximizing_vector(&self, seed: u64) -> Result<MaximizingPair> {
        // Right singular vectors via the Gram matrix: nalgebra's complex SVD
        // can fail to converge, the Hermitian eigensolver does not.
        let gram = self.matrix.adjoint() * &self.matrix;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let sing: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
        let mut order: Vec<usize> = (0..sing.len()).collect();
        order.sort_by(|&a, &b| sing[b].total_cmp(&sing[a]));
        let s0 = sing[order[0]];
        if s0 <= 1e-12 {
            return Err(SuperoptError::ZeroOperator);
        }
        let cluster: Vec<usize> = order
            .iter()
            .cloned()
            .filter(|&i| sing[i] >= s0 * (1.0 - 1e-9))
            .collect();
        let s1 = order
            .get(cluster.len().max(1))
            .map(|&i| sing[i])
            .or_else(|| order.get(1).map(|&i| sing[i]))
            .unwrap_or(0.0);

        let pick = |idx: usize| -> DVector<C64> { eig.eigenvectors.column(idx).into_owned() };
        let mut f_vec = if cluster.len() == 1 {
            pick(cluster[0])
        } else if seed == 0 {
            // Deterministic: lexicographically maximal |coeff| sequence.
            let mut best = pick(cluster[0]);
            for &idx in &cluster[1..] {
                let cand = pick(idx);
                if lex_greater(&cand, &best) {
                    best = cand;
                }
            }
            best
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = DVector::<C64>::zeros(self.matrix.ncols());
            for &idx in &cluster {
                let w = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                acc += pick(idx) * w;
            }
            let norm = acc.norm();
            acc / C64::new(norm, 0.0)
        };
        normalize_phase(&mut f_vec);
        // f has unit norm; g = Gamma f / t.
        let mut g_vec = &self.matrix * &f_vec;
        let t = g_vec.norm();
        g_vec /= C64::new(t, 0.0);
        Ok(MaximizingPair {
            t,
            f: self.input_symbol(&f_vec),
            g: self.output_symbol(&g_vec),
            relative_gap: (s0 - s1) / s0,
        })
    }
}

/// Rescale so the largest-magnitude coefficient is real positive, with unit
/// Euclidean norm.
fn normalize_phase(x: &mut DVector<C64>) {
    let norm = x.norm();
    if norm == 0.0 {
        return;
    }
    let mut best = 0usize;
    for i in 0..x.len() {
        if x[i].norm() > x[best].norm() + 1e-14 {
            best = i;
        }
    }
    let phase = x[best] / C64::new(x[best].norm(), 0.0);
    let scale = phase.conj() / C64::new(norm, 0.0);
    *x *= scale;
}

fn lex_greater(a: &DVector<C64>, b: &DVector<C64>) -> bool {
    for i in 0..a.len() {
        let (x, y) = (a[i].norm(), b[i].norm());
        if (x - y).abs() > 1e-12 {
            return x > y;
        }
    }
    false
}

/// Winding number of a unimodular grid-sampled function: total argument
/// increment over the circle divided by 2*pi, rounded to nearest integer.
/// Also returns the rounding residual.
pub fn winding_number_of_samples(samples: &[C64]) -> Result<(i64, f64)> {
    let g = samples.len();
    let mut total = 0.0f64;
    for l in 0..g {
        let a = samples[l];
        let b = samples[(l + 1) % g];
        let inc = (b / a).arg();
        if inc.abs() >= std::f64::consts::PI * (1.0 - 1e-9) {
            return Err(SuperoptError::InsufficientGrid { jump: inc.abs() });
        }
        total += inc;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    Ok((w.round() as i64, (w - w.round()).abs()))
}

pub fn winding_number(u: &ScalarSymbol, grid_size: usize) -> Result<i64> {
    let samples = u.samples(grid_size)?;
    let defect = samples
        .iter()
        .map(|x| (x.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if defect > 1e-6 {
        return Err(SuperoptError::Input(format!(
            "winding_number requires a unimodular symbol (defect {defect:.3e})"
        )));
    }
    Ok(winding_number_of_samples(&samples)?.0)
}

/// Numerical kernel dimension of the truncated Toeplitz operator of `u`,
/// cross-checked against the winding-number index.
pub fn toeplitz_kernel_dim(u: &ScalarSymbol, n_in: usize, rank_tol: f64) -> Result<usize> {
    let grid = ((2 * (u.symbol().nsym() + n_in) + 2).next_power_of_two()).max(256);
    let wind = winding_number(u, grid)?;
    let winding_dim = (-wind).max(0) as usize;
    let op = build_operator(u.symbol(), OperatorKind::Toeplitz, n_in);
    let s = crate::symbol::sorted_singular_values(&op.matrix);
    let smax = s.first().copied().unwrap_or(0.0);
    let kernel_dim = s.iter().filter(|&&x| x < rank_tol * smax.max(1.0)).count();
    if kernel_dim != winding_dim {
        return Err(SuperoptError::IndexMismatch { kernel_dim, winding_dim });
    }
    Ok(kernel_dim)
}

/// Certified lower bound for the essential norm of the four-block operator:
/// max of the sup-norms of the bottom row block and right column block.
pub fn essential_norm_lower_bound(sym: &MatrixSymbol) -> Result<f64> {
    let p = sym.partition();
    let grid = sym.default_grid().max(64);
    let mut lb: f64 = 0.0;
    if p.m2 > 0 {
        let bottom = sym.block(p.m1, 0, p.m2, p.n())?;
        lb = lb.max(bottom.linf_norm(grid)?);
    }
    if p.n2 > 0 {
        let right = sym.block(0, p.n1, p.m(), p.n2)?;
        lb = lb.max(right.linf_norm(grid)?);
    }
    Ok(lb)
}

/// Compression of multiplication by a Hermitian grid weight to the same
/// truncated input space as `gamma`. Used by the weight diagnostics.
pub fn weight_compression(
    weight_coeffs: &MatrixSymbol,
    gamma: &TruncatedOperator,
) -> CMat {
    let basis = &gamma.basis.input;
    let nsym = weight_coeffs.nsym() as i64;
    let mut m = CMat::zeros(basis.len(), basis.len());
    for (col, &(k, j)) in basis.iter().enumerate() {
        for (row, &(l, i)) in basis.iter().enumerate() {
            let d = l - k;
            if d.abs() > nsym {
                continue;
            }
            m[(row, col)] = weight_coeffs.coeff(d)[(i, j)];
        }
    }
    // Hermitian symmetrization guards against FFT noise.
    let mh = m.adjoint();
    (m + mh) * C64::new(0.5, 0.0)
}

/// A deterministic random polynomial symbol, for tests and the acceptance
/// suite.
pub fn random_symbol(
    partition: BlockPartition,
    degree: usize,
    seed: u64,
) -> MatrixSymbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (partition.m(), partition.n());
    let mut coeffs = std::collections::BTreeMap::new();
    for k in -(degree as i64)..=(degree as i64) {
        let mat = DMatrix::from_fn(m, n, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        coeffs.insert(k, mat);
    }
    MatrixSymbol::new(partition, coeffs).unwrap()
}
