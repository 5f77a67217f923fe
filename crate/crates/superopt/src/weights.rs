//! Weight diagnostics: admissible matrix weights, maximizing subspaces,
//! index-sum invariance, singular-value inequalities, and constancy of the
//! singular-value profiles of the error.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Result, SuperoptError};
use crate::operators::{build_operator, weight_compression, OperatorKind, TruncatedOperator};
use crate::solver::SuperoptimalResult;
use crate::symbol::{BlockPartition, CMat, GridFn, MatrixSymbol, C64};

/// Grid samples of a nonnegative self-adjoint matrix function on the circle.
#[derive(Debug, Clone)]
pub struct MatrixWeight {
    values: Vec<CMat>,
}

/// Eigenvalue-wise clipping mode: `Raise` maps t to max(t, a); `Zero` maps
/// t below a to 0 and keeps it otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipMode {
    Raise,
    Zero,
}

impl MatrixWeight {
    pub fn new(values: Vec<CMat>) -> Result<Self> {
        for v in &values {
            if v.nrows() != v.ncols() {
                return Err(SuperoptError::ShapeMismatch(
                    "weight samples must be square".into(),
                ));
            }
            let herm = (v - v.adjoint()).norm();
            if herm > 1e-10 * v.norm().max(1.0) {
                return Err(SuperoptError::Input(format!(
                    "weight sample not Hermitian (residual {herm:.3e})"
                )));
            }
            let eig = SymmetricEigen::new(v.clone());
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -1e-10 * v.norm().max(1.0) {
                return Err(SuperoptError::NegativeDensity { min });
            }
        }
        Ok(Self { values })
    }

    /// The weight E*E of an error function given on the grid.
    pub fn from_error(err: &GridFn) -> Self {
        Self {
            values: err.values().iter().map(|e| e.adjoint() * e).collect(),
        }
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.nrows())
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .iter()
            .map(|v| {
                SymmetricEigen::new(v.clone())
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral calculus: apply the scalar clipping eigenvalue-wise at every
    /// node.
    pub fn clip(&self, a: f64, mode: ClipMode) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| {
                let eig = SymmetricEigen::new(v.clone());
                let n = v.nrows();
                let mut out = CMat::zeros(n, n);
                for i in 0..n {
                    let lam = eig.eigenvalues[i];
                    let clipped = match mode {
                        ClipMode::Raise => lam.max(a),
                        ClipMode::Zero => {
                            if lam >= a {
                                lam
                            } else {
                                0.0
                            }
                        }
                    };
                    let col = eig.eigenvectors.column(i);
                    out += (col * col.adjoint()) * C64::new(clipped, 0.0);
                }
                out
            })
            .collect();
        Self { values }
    }

    /// Fourier representation with the given (square) partition.
    pub fn to_symbol(&self, partition: BlockPartition) -> Result<MatrixSymbol> {
        MatrixSymbol::from_grid(&GridFn::new(self.values.clone()), partition)
    }
}

/// Compression of `w - Gamma* Gamma` to the truncated input space.
fn defect_matrix(w: &MatrixWeight, gamma: &TruncatedOperator) -> Result<CMat> {
    let p = gamma.partition;
    let wp = BlockPartition::new(p.n1, p.n2, p.n1, p.n2)?;
    if w.dim() != p.n() {
        return Err(SuperoptError::ShapeMismatch(format!(
            "weight dimension {} does not match operator input dimension {}",
            w.dim(),
            p.n()
        )));
    }
    let wsym = w.to_symbol(wp)?;
    let m_w = weight_compression(&wsym, gamma);
    let gtg = gamma.matrix.adjoint() * &gamma.matrix;
    Ok(m_w - gtg)
}

/// Whether `||Gamma f||^2 <= (w f, f)` holds on the truncation, together with
/// the minimal eigenvalue of the defect.
pub fn is_admissible(
    w: &MatrixWeight,
    gamma: &TruncatedOperator,
    tol: f64,
) -> Result<(bool, f64)> {
    let defect = defect_matrix(w, gamma)?;
    let eig = SymmetricEigen::new(defect);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((min >= -tol, min))
}

/// Numerical nullspace dimension of `w - Gamma* Gamma` on the truncation,
/// with the relative separation of the spectrum around the cut.
pub fn maximizing_subspace_dim(
    w: &MatrixWeight,
    gamma: &TruncatedOperator,
    rank_tol: f64,
) -> Result<(usize, f64)> {
    let defect = defect_matrix(w, gamma)?;
    let eig = SymmetricEigen::new(defect);
    let mut lams: Vec<f64> = eig.eigenvalues.iter().map(|l| l.abs()).collect();
    lams.sort_by(f64::total_cmp);
    let lmax = lams.last().copied().unwrap_or(0.0).max(1e-300);
    let cut = rank_tol * lmax;
    let dim = lams.iter().filter(|&&l| l <= cut).count();
    // separation: ratio of the first retained eigenvalue to the cut
    let sep = if dim < lams.len() {
        lams[dim] / cut
    } else {
        f64::INFINITY
    };
    Ok((dim, sep))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexSumEntry {
    /// Threshold on the singular-value scale.
    pub a: f64,
    /// Sum of indices over levels with t_j >= a.
    pub index_sum: usize,
    /// Maximizing-subspace dimension of the clipped weight.
    pub subspace_dim: usize,
    /// Dimension recomputed with a widened truncation window.
    pub subspace_dim_wide: usize,
    pub stable: bool,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexSumReport {
    pub entries: Vec<IndexSumEntry>,
    pub passed: bool,
}

/// Theorem-style index-sum identity: for each distinct superoptimal value a,
/// the sum of the indices of the levels with t_j >= a must equal the
/// maximizing-subspace dimension of the weight clipped (eigenvalue-wise,
/// raising) at a^2. The dimension is accepted only when stable under growing
/// the truncation window.
pub fn check_index_sums(result: &SuperoptimalResult, rank_tol: f64) -> Result<IndexSumReport> {
    let sym = &result.level_symbols[0];
    let q = result.q_solved();
    let err = sym.error_symbol(&q)?.sample_on_grid(result.grid_size)?;
    let weight = MatrixWeight::from_error(&err);
    let n_in = result.level_n_in[0];

    // distinct nonzero thresholds, descending
    let mut thresholds: Vec<f64> = Vec::new();
    for &t in &result.t_values {
        if t <= 1e-9 * result.t_values[0].max(1e-300) {
            continue;
        }
        if !thresholds.iter().any(|&a| (a - t).abs() <= 1e-6 * a) {
            thresholds.push(t);
        }
    }

    let gamma = build_operator(sym, OperatorKind::FourBlock, n_in);
    let gamma_wide = build_operator(sym, OperatorKind::FourBlock, n_in + 8);
    let mut entries = Vec::new();
    for &a in &thresholds {
        let index_sum: usize = result
            .steps
            .iter()
            .filter(|s| s.t >= a * (1.0 - 1e-6))
            .map(|s| s.index)
            .sum();
        let clipped = weight.clip(a * a, ClipMode::Raise);
        let (dim, _) = maximizing_subspace_dim(&clipped, &gamma, rank_tol)?;
        let (dim_wide, _) = maximizing_subspace_dim(&clipped, &gamma_wide, rank_tol)?;
        let stable = dim == dim_wide;
        let matched = stable && dim == index_sum;
        entries.push(IndexSumEntry {
            a,
            index_sum,
            subspace_dim: dim,
            subspace_dim_wide: dim_wide,
            stable,
            matched,
        });
    }
    let passed = entries.iter().all(|e| e.matched);
    Ok(IndexSumReport { entries, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularIneqEntry {
    pub level: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// "t_le_s" for t'_j <= s_j(Gamma); "interlace" for
    /// s_j(Gamma_next) <= s_{j+k}(Gamma).
    pub kind: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularIneqReport {
    pub entries: Vec<SingularIneqEntry>,
    pub passed: bool,
}

/// Singular-value inequalities across the recursion: the superoptimal values
/// never exceed the corresponding singular values of the operator, and each
/// reduction interlaces with an offset given by the level index.
pub fn check_singular_inequalities(
    result: &SuperoptimalResult,
    tol: f64,
) -> Result<SingularIneqReport> {
    let mut entries = Vec::new();
    let gammas: Vec<TruncatedOperator> = result
        .level_symbols
        .iter()
        .zip(&result.level_n_in)
        .map(|(s, &n)| build_operator(s, OperatorKind::FourBlock, n))
        .collect();

    let d = result.t_values.len();
    let s_top = gammas[0].singular_values(d);
    for (j, (&t, &s)) in result.t_values.iter().zip(&s_top).enumerate() {
        entries.push(SingularIneqEntry {
            level: 0,
            j,
            lhs: t,
            rhs: s,
            holds: t <= s + tol,
            kind: "t_le_s",
        });
    }

    let count = 8usize;
    for l in 0..gammas.len().saturating_sub(1) {
        let k = result.steps[l].index;
        let s_next = gammas[l + 1].singular_values(count);
        let s_here = gammas[l].singular_values(count + k);
        for (j, &sn) in s_next.iter().enumerate() {
            let rhs = s_here[j + k];
            entries.push(SingularIneqEntry {
                level: l,
                j,
                lhs: sn,
                rhs,
                holds: sn <= rhs + tol,
                kind: "interlace",
            });
        }
    }
    let passed = entries.iter().all(|e| e.holds);
    Ok(SingularIneqReport { entries, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyEntry {
    pub j: usize,
    pub sup: f64,
    pub flatness: f64,
    pub target: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyReport {
    pub entries: Vec<ConstancyEntry>,
    pub passed: bool,
}

/// Constancy of the singular-value profiles s_j((Phi - Q)(zeta)) on the
/// circle: each profile must be flat within `tol` and sit at t_j.
pub fn check_constancy(result: &SuperoptimalResult, tol: f64) -> Result<ConstancyReport> {
    let sym = &result.level_symbols[0];
    let q = result.q_solved();
    let err = sym.error_symbol(&q)?;
    let grid = result
        .grid_size
        .max((4 * (err.nsym() + 1)).next_power_of_two())
        .max(512);
    let scale = result.t_values.first().copied().unwrap_or(1.0).max(1e-300);
    let mut entries = Vec::new();
    for (j, &t) in result.t_values.iter().enumerate() {
        let (_, sup, flat) = err.sj_profile(j, grid)?;
        let holds = flat <= tol * scale.max(1.0) && (sup - t).abs() <= tol.max(1e-6) * scale;
        entries.push(ConstancyEntry {
            j,
            sup,
            flatness: flat,
            target: t,
            holds,
        });
    }
    let passed = entries.iter().all(|e| e.holds);
    Ok(ConstancyReport { entries, passed })
}
