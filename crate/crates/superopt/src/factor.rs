//! Scalar outer factorization, finite Blaschke products, greatest common
//! inner divisors of polynomial columns, and thematic completion of
//! pointwise-unitary columns.

use crate::error::{Result, SuperoptError};
use crate::fft;
use crate::symbol::{CMat, GridFn, MatrixSymbol, ScalarSymbol, C64};

/// Analytic completion on the circle: given real samples of a function r,
/// return samples of the analytic function with real part r and imaginary
/// part its harmonic conjugate (zero mean).
pub fn analytic_completion(real_samples: &[f64]) -> Vec<C64> {
    let g = real_samples.len();
    let samples: Vec<C64> = real_samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut bins = fft::samples_to_bins(&samples);
    for (idx, b) in bins.iter_mut().enumerate() {
        let k = fft::bin_frequency(idx, g);
        if k > 0 {
            *b *= 2.0;
        } else if k < 0 {
            *b = C64::new(0.0, 0.0);
        }
    }
    fft::bins_to_samples(&bins)
}

/// Outer factor of a nonnegative density: samples of h with |h|^2 = rho and
/// h(0) > 0, via h = exp(1/2 * A[log(rho + eps)]). `eps <= 0` selects the
/// default regularization 1e-14 * max(rho).
pub fn outer_factor(rho: &[f64], eps: f64) -> Result<Vec<C64>> {
    let max = rho.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(SuperoptError::ZeroColumn);
    }
    let min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * max {
        return Err(SuperoptError::NegativeDensity { min });
    }
    let eps = if eps > 0.0 { eps } else { 1e-14 * max };
    let logs: Vec<f64> = rho.iter().map(|&r| (r.max(0.0) + eps).ln()).collect();
    let analytic = analytic_completion(&logs);
    Ok(analytic
        .iter()
        .map(|a| (a * C64::new(0.5, 0.0)).exp())
        .collect())
}

/// Finite Blaschke product  z^power * prod (z - a_i)/(1 - conj(a_i) z),
/// all |a_i| < 1.
#[derive(Debug, Clone, Default)]
pub struct BlaschkeProduct {
    pub power: usize,
    pub zeros: Vec<C64>,
}

impl BlaschkeProduct {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.power == 0 && self.zeros.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.power + self.zeros.len()
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut out = z.powu(self.power as u32);
        for a in &self.zeros {
            out *= (z - a) / (C64::new(1.0, 0.0) - a.conj() * z);
        }
        out
    }

    pub fn samples(&self, grid_size: usize) -> Vec<C64> {
        fft::grid_nodes(grid_size)
            .iter()
            .map(|&z| self.eval(z))
            .collect()
    }
}

/// Outer polynomial spectral factor of a nonnegative trigonometric polynomial
/// L(z) = sum_{|k| <= D} c_k z^k with c_{-k} = conj(c_k), given by its
/// nonnegative-frequency coefficients `c[0..=D]`. Returns the ascending
/// coefficients of an outer polynomial h with |h|^2 = L on the circle. Roots
/// come in (a, 1/conj(a)) pairs and |z - a| = |1 - conj(a) z| holds exactly
/// for |z| = 1, so the identity stays accurate even when L nearly vanishes on
/// the circle, where the log-integral construction loses digits.
pub fn trig_spectral_factor(c: &[C64]) -> Result<Vec<C64>> {
    if c.is_empty() {
        return Err(SuperoptError::ZeroColumn);
    }
    let scale = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(SuperoptError::ZeroColumn);
    }
    // strip a negligible high-frequency tail; the total mass dropped bounds
    // the perturbation of L on the circle
    let mut d = c.len() - 1;
    let mut dropped = 0.0f64;
    while d > 0 && dropped + 2.0 * c[d].norm() <= 1e-11 * scale {
        dropped += 2.0 * c[d].norm();
        d -= 1;
    }
    if d == 0 {
        return Ok(vec![C64::new(c[0].re.max(0.0).sqrt(), 0.0)]);
    }
    // p(z) = z^D L(z), a polynomial of degree 2D
    let mut p = vec![C64::new(0.0, 0.0); 2 * d + 1];
    for k in 0..=d {
        p[d + k] = c[k];
        p[d - k] = c[k].conj();
    }
    let mut roots = polynomial_roots(&p);
    if roots.len() != 2 * d || roots.iter().any(|a| !a.norm().is_finite()) {
        return Err(SuperoptError::Input(
            "spectral factorization: root finding failed".into(),
        ));
    }
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let inside = &roots[..d];
    let mut h = vec![C64::new(1.0, 0.0)];
    let mut prod_mod = 1.0f64;
    for a in inside {
        prod_mod *= a.norm();
        let mut next = vec![C64::new(0.0, 0.0); h.len() + 1];
        for (i, &hi) in h.iter().enumerate() {
            next[i] += hi;
            next[i + 1] -= hi * a.conj();
        }
        h = next;
    }
    if prod_mod <= 0.0 {
        return Err(SuperoptError::Input(
            "spectral factorization: zero at the origin survived stripping".into(),
        ));
    }
    let gamma = (c[d].norm() / prod_mod).sqrt();
    for hi in &mut h {
        *hi *= gamma;
    }
    Ok(h)
}

/// Roots of a polynomial with ascending coefficients, by Durand-Kerner.
/// Leading and trailing zero coefficients must be stripped by the caller.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: C64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in (0..=deg).rev() {
            acc = acc * z + monic[k];
        }
        acc
    };
    // Seeds on a non-symmetric spiral scaled to the geometric-mean root
    // radius, so badly scaled leading coefficients stay tractable.
    let radius = monic[0].norm().powf(1.0 / deg as f64).clamp(0.1, 10.0);
    let seed = C64::new(0.4, 0.9) / C64::new(0.4, 0.9).norm();
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| {
            seed.powu(k as u32 + 1)
                * (radius * (1.0 + 0.1 * ((k as f64 * 0.7).sin())))
        })
        .collect();
    for _ in 0..(600 + 40 * deg) {
        let mut shift = 0.0f64;
        for i in 0..deg {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 || !denom.norm().is_finite() {
                // collision or runaway: nudge back toward the seed circle
                roots[i] = roots[i] * 0.5 + seed.powu(i as u32 + 1) * (0.5 * radius)
                    + C64::new(1e-8, 1e-8);
                continue;
            }
            let d = eval(roots[i]) / denom;
            if !d.norm().is_finite() {
                roots[i] = seed.powu(i as u32 + 1) * radius * 1.05;
                continue;
            }
            roots[i] -= d;
            shift = shift.max(d.norm());
        }
        if shift < 1e-14 {
            break;
        }
    }
    roots
}

fn poly_coeffs(s: &ScalarSymbol) -> Result<Vec<C64>> {
    let sym = s.symbol();
    if let Some((&kmin, _)) = sym.coeffs().iter().next() {
        if kmin < 0 {
            return Err(SuperoptError::Input(format!(
                "expected an analytic polynomial, found frequency {kmin}"
            )));
        }
    }
    let deg = sym.coeffs().keys().next_back().copied().unwrap_or(0);
    let mut c = vec![C64::new(0.0, 0.0); deg as usize + 1];
    for (&k, m) in sym.coeffs() {
        c[k as usize] = m[(0, 0)];
    }
    Ok(c)
}

/// Inner part of an analytic polynomial: the power of z dividing it together
/// with its roots strictly inside the disk (roots on the circle are outer).
pub fn inner_part(s: &ScalarSymbol) -> Result<BlaschkeProduct> {
    inner_part_of_coeffs(&poly_coeffs(s)?)
}

fn inner_part_of_coeffs(coeffs: &[C64]) -> Result<BlaschkeProduct> {
    let scale = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(SuperoptError::ZeroColumn);
    }
    let mut c: Vec<C64> = coeffs.to_vec();
    let mut power = 0usize;
    while c.first().is_some_and(|x| x.norm() <= 1e-13 * scale) {
        c.remove(0);
        power += 1;
    }
    let roots = polynomial_roots(&c);
    let zeros: Vec<C64> = roots
        .into_iter()
        .filter(|a| a.norm() < 1.0 - 1e-9)
        .collect();
    Ok(BlaschkeProduct { power, zeros })
}

/// Greatest common inner divisor of a family of analytic polynomials, with
/// root clustering tolerance `tol`. Entries that vanish identically are
/// skipped; if all vanish the input is rejected.
pub fn gcd_inner_divisor(entries: &[ScalarSymbol], tol: f64) -> Result<BlaschkeProduct> {
    let mut parts = Vec::new();
    for e in entries {
        let c = poly_coeffs(e)?;
        if c.iter().map(|x| x.norm()).fold(0.0, f64::max) == 0.0 {
            continue;
        }
        parts.push(inner_part_of_coeffs(&c)?);
    }
    if parts.is_empty() {
        return Err(SuperoptError::AllEntriesZero);
    }
    let power = parts.iter().map(|p| p.power).min().unwrap();
    // Intersect root multisets greedily against the first entry.
    let mut zeros: Vec<C64> = parts[0].zeros.clone();
    for p in &parts[1..] {
        let mut pool = p.zeros.clone();
        zeros.retain(|a| {
            if let Some(pos) = pool
                .iter()
                .position(|b| (a - b).norm() < tol)
            {
                pool.swap_remove(pos);
                true
            } else {
                false
            }
        });
        if zeros.is_empty() && power == 0 {
            break;
        }
    }
    Ok(BlaschkeProduct { power, zeros })
}

/// Thematic completion of an analytic polynomial column v with pointwise
/// unit norm: an analytic, co-outer V_c with [v, conj(V_c)] unitary a.e.
/// Returns V_c as a polynomial matrix symbol (n x (n-1)).
pub fn thematic_complete(v: &MatrixSymbol, grid_size: usize) -> Result<MatrixSymbol> {
    let n = v.nrows();
    if v.ncols() != 1 {
        return Err(SuperoptError::ShapeMismatch(format!(
            "thematic completion expects a column, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    if v.antianalytic_energy() > 1e-10 {
        return Err(SuperoptError::NotAnalytic {
            level: 0,
            energy: v.antianalytic_energy(),
        });
    }
    let vc = match n {
        1 => MatrixSymbol::new(
            crate::symbol::BlockPartition::nehari(1, 1).unwrap(),
            std::collections::BTreeMap::new(),
        )
        .unwrap(),
        2 => {
            // closed form: v = (a, b)^t  ->  V_c = (-b, a)^t
            let mut coeffs = std::collections::BTreeMap::new();
            for (&k, m) in v.coeffs() {
                let mut c = CMat::zeros(2, 1);
                c[(0, 0)] = -m[(1, 0)];
                c[(1, 0)] = m[(0, 0)];
                coeffs.insert(k, c);
            }
            MatrixSymbol::new(
                crate::symbol::BlockPartition::nehari(2, 1).unwrap(),
                coeffs,
            )
            .unwrap()
        }
        _ => thematic_complete_iterative(v, grid_size)?,
    };
    verify_thematic(v, &vc, grid_size)?;
    Ok(vc)
}

/// Completion for n >= 3 by the syzygy construction: find an analytic
/// polynomial basis Y of the module { y : v^t y = 0 }, then orthonormalize
/// its columns pointwise with an outer factor, V_c = Y R^{-1} where
/// Y* Y = R* R is a matrix spectral factorization.
fn thematic_complete_iterative(v: &MatrixSymbol, grid_size: usize) -> Result<MatrixSymbol> {
    let n = v.nrows();
    let y = syzygy_basis(v)?;
    let gy = y.sample_on_grid(grid_size.max(4 * (v.nsym() + y.nsym() + 1)).next_power_of_two())?;
    let g = gy.len();
    // G = Y* Y pointwise, positive definite on the circle for a minimal basis
    let gvals: Vec<CMat> = gy.values().iter().map(|m| m.adjoint() * m).collect();
    let r = wilson_spectral_factor(&gvals)?;
    let mut vc_vals = Vec::with_capacity(g);
    for (ym, rm) in gy.values().iter().zip(&r) {
        let rinv = rm.clone().try_inverse().ok_or_else(|| {
            SuperoptError::Input("singular spectral factor in thematic completion".into())
        })?;
        vc_vals.push(ym * rinv);
    }
    let gf = GridFn::new(vc_vals);
    let p = crate::symbol::BlockPartition::nehari(n, n - 1).unwrap();
    let sym = MatrixSymbol::from_grid(&gf, p)?;
    let energy = sym.antianalytic_energy();
    if energy > 1e-9 {
        return Err(SuperoptError::NotAnalytic { level: 0, energy });
    }
    Ok(sym
        .riesz_project(crate::symbol::RieszPart::Analytic)
        .truncated(1e-13))
}

/// Minimal polynomial basis of the syzygy module { y in C[z]^n : v^t y = 0 }
/// of an analytic polynomial column v. Found degree by degree: at each degree
/// bound D the nullspace of the convolution constraint is intersected with
/// the complement of the shifts of already-found generators.
fn syzygy_basis(v: &MatrixSymbol) -> Result<MatrixSymbol> {
    let n = v.nrows();
    let d = v.nsym();
    let vc: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..=d as i64)
                .map(|k| v.coeff(k)[(i, 0)])
                .collect()
        })
        .collect();
    let mut found: Vec<(usize, Vec<C64>)> = Vec::new(); // (degree, coeffs stacked by component)
    let max_d = n * d + n + 1;
    for cap in 0..=max_d {
        if found.len() == n - 1 {
            break;
        }
        let unknowns = n * (cap + 1);
        let rows_out = cap + d + 1;
        // constraint matrix: sum_i v_i(z) y_i(z) = 0
        let mut a = CMat::zeros(rows_out, unknowns);
        for j in 0..n {
            for t in 0..=cap {
                for (s, &c) in vc[j].iter().enumerate() {
                    a[(t + s, j * (cap + 1) + t)] += c;
                }
            }
        }
        // shifts of found generators, embedded at degree cap
        let mut shift_cols: Vec<nalgebra::DVector<C64>> = Vec::new();
        for (deg, coeffs) in &found {
            for s in 0..=(cap - deg) {
                let mut col = nalgebra::DVector::<C64>::zeros(unknowns);
                for j in 0..n {
                    for t in 0..=*deg {
                        col[j * (cap + 1) + t + s] = coeffs[j * (deg + 1) + t];
                    }
                }
                shift_cols.push(col);
            }
        }
        // nullspace of A via the eigenvectors of A* A with tiny eigenvalues
        // (the thin SVD would miss the cokernel of a wide system)
        let gram = a.adjoint() * &a;
        let eig = nalgebra::linalg::SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut null_vecs: Vec<nalgebra::DVector<C64>> = Vec::new();
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] <= 1e-16 * lmax.max(1.0) {
                null_vecs.push(eig.eigenvectors.column(i).into_owned());
            }
        }
        // orthogonalize new null vectors against the shift space
        let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
        for sc in &shift_cols {
            let mut x = sc.clone();
            for b in &basis {
                let pr = b.dotc(&x);
                x -= b * pr;
            }
            let nn = x.norm();
            if nn > 1e-10 {
                basis.push(x / C64::new(nn, 0.0));
            }
        }
        for nv in null_vecs {
            if found.len() == n - 1 {
                break;
            }
            let mut x = nv;
            for b in &basis {
                let pr = b.dotc(&x);
                x -= b * pr;
            }
            let nn = x.norm();
            if nn > 1e-8 {
                let x = x / C64::new(nn, 0.0);
                basis.push(x.clone());
                let coeffs: Vec<C64> = x.iter().cloned().collect();
                found.push((cap, coeffs));
            }
        }
    }
    if found.len() != n - 1 {
        return Err(SuperoptError::Input(
            "syzygy basis incomplete; the column may not be co-outer".into(),
        ));
    }
    let mut coeffs: std::collections::BTreeMap<i64, CMat> = std::collections::BTreeMap::new();
    for (col, (deg, c)) in found.iter().enumerate() {
        for j in 0..n {
            for t in 0..=*deg {
                let val = c[j * (deg + 1) + t];
                if val.norm() > 0.0 {
                    coeffs
                        .entry(t as i64)
                        .or_insert_with(|| CMat::zeros(n, n - 1))[(j, col)] = val;
                }
            }
        }
    }
    MatrixSymbol::new(
        crate::symbol::BlockPartition::nehari(n, n - 1).unwrap(),
        coeffs,
    )
}

/// Wilson iteration for the matrix spectral factorization G = R* R with R
/// analytic and invertible (outer), G Hermitian positive definite samples.
fn wilson_spectral_factor(gvals: &[CMat]) -> Result<Vec<CMat>> {
    let g = gvals.len();
    let k = gvals[0].nrows();
    // initial factor from the mean
    let mut mean = CMat::zeros(k, k);
    for m in gvals {
        mean += m;
    }
    mean /= C64::new(g as f64, 0.0);
    let chol = nalgebra::linalg::Cholesky::new(mean)
        .ok_or_else(|| SuperoptError::Input("spectral factorization: mean not positive definite".into()))?;
    let mut r: Vec<CMat> = vec![chol.l().adjoint(); g];
    let scale = gvals.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        residual = r
            .iter()
            .zip(gvals)
            .map(|(rm, gm)| (rm.adjoint() * rm - gm).norm())
            .fold(0.0, f64::max);
        if residual <= 1e-13 * scale.max(1.0) {
            return Ok(r);
        }
        // Psi = R^{-*} G R^{-1}; T = I/2 + plus_half(Psi); R <- T R
        let mut psi = Vec::with_capacity(g);
        for (rm, gm) in r.iter().zip(gvals) {
            let rinv = rm.clone().try_inverse().ok_or_else(|| {
                SuperoptError::Input("spectral factorization: singular iterate".into())
            })?;
            psi.push(rinv.adjoint() * gm * &rinv);
        }
        let t = plus_half_grid(&psi);
        for (rm, tm) in r.iter_mut().zip(&t) {
            let half = CMat::identity(k, k) * C64::new(0.5, 0.0);
            *rm = (tm + half) * rm.clone();
        }
    }
    Err(SuperoptError::CompletionNotAnalytic {
        residual,
        iterations: 100,
    })
}

/// Analytic half of Hermitian-valued samples: keep positive-frequency bins
/// and half of the constant term, entrywise.
fn plus_half_grid(vals: &[CMat]) -> Vec<CMat> {
    let g = vals.len();
    let (rows, cols) = (vals[0].nrows(), vals[0].ncols());
    let mut out = vec![CMat::zeros(rows, cols); g];
    for i in 0..rows {
        for j in 0..cols {
            let samples: Vec<C64> = vals.iter().map(|m| m[(i, j)]).collect();
            let mut bins = fft::samples_to_bins(&samples);
            for (idx, b) in bins.iter_mut().enumerate() {
                let k = fft::bin_frequency(idx, g);
                if k < 0 {
                    *b = C64::new(0.0, 0.0);
                } else if k == 0 {
                    *b *= 0.5;
                }
            }
            let back = fft::bins_to_samples(&bins);
            for (l, x) in back.into_iter().enumerate() {
                out[l][(i, j)] = x;
            }
        }
    }
    out
}

fn verify_thematic(v: &MatrixSymbol, vc: &MatrixSymbol, grid_size: usize) -> Result<()> {
    let n = v.nrows();
    let gv = v.sample_on_grid(grid_size)?;
    let gc = vc.sample_on_grid(grid_size)?;
    let mut worst = 0.0f64;
    for (a, b) in gv.values().iter().zip(gc.values()) {
        let mut u = CMat::zeros(n, n);
        u.set_column(0, &a.column(0).into_owned());
        for j in 0..n - 1 {
            u.set_column(j + 1, &b.column(j).map(|x| x.conj()));
        }
        let res = (&u.adjoint() * &u - CMat::identity(n, n)).norm();
        worst = worst.max(res);
    }
    if worst > 1e-8 {
        return Err(SuperoptError::NotIsometric(worst));
    }
    Ok(())
}

/// Complete pointwise-orthonormal columns to pointwise-unitary matrices on
/// the grid, phase-aligned node to node so the completion varies smoothly.
pub fn unitary_grid_completion(cols: &GridFn) -> Result<GridFn> {
    let n = cols.nrows();
    let k = cols.ncols();
    let mut out = Vec::with_capacity(cols.len());
    let mut prev: Option<CMat> = None;
    for val in cols.values() {
        let iso = (val.adjoint() * val - CMat::identity(k, k)).norm();
        if iso > 1e-8 {
            return Err(SuperoptError::NotIsometric(iso));
        }
        let mut u = CMat::zeros(n, n);
        for j in 0..k {
            u.set_column(j, &val.column(j).into_owned());
        }
        // candidate directions: previous completion if available, else the
        // standard basis.
        let mut filled = k;
        let mut candidates: Vec<nalgebra::DVector<C64>> = Vec::new();
        if let Some(p) = &prev {
            for j in k..n {
                candidates.push(p.column(j).into_owned());
            }
        }
        for j in 0..n {
            let mut e = nalgebra::DVector::<C64>::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            candidates.push(e);
        }
        for cand in candidates {
            if filled == n {
                break;
            }
            let mut c = cand.clone();
            for j in 0..filled {
                let col = u.column(j).into_owned();
                let pr = col.dotc(&c);
                c -= col * pr;
            }
            let nn = c.norm();
            if nn > 1e-6 {
                c /= C64::new(nn, 0.0);
                u.set_column(filled, &c);
                filled += 1;
            }
        }
        if filled != n {
            return Err(SuperoptError::Input(
                "failed to complete orthonormal system".into(),
            ));
        }
        // align phases of the new columns with the previous node
        if let Some(p) = &prev {
            for j in k..n {
                let overlap = p.column(j).dotc(&u.column(j).into_owned());
                if overlap.norm() > 1e-12 {
                    let phase = overlap.conj() / C64::new(overlap.norm(), 0.0);
                    let col = u.column(j) * phase;
                    u.set_column(j, &col.into_owned());
                }
            }
        }
        prev = Some(u.clone());
        out.push(u);
    }
    Ok(GridFn::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::BlockPartition;
    use std::collections::BTreeMap;

    #[test]
    fn outer_of_constant() {
        let rho = vec![4.0; 64];
        let h = outer_factor(&rho, 0.0).unwrap();
        for x in h {
            assert!((x - C64::new(2.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn outer_of_two_plus_z() {
        let g = 256;
        let nodes = fft::grid_nodes(g);
        let rho: Vec<f64> = nodes
            .iter()
            .map(|z| (C64::new(2.0, 0.0) + z).norm_sqr())
            .collect();
        let h = outer_factor(&rho, 0.0).unwrap();
        for (x, z) in h.iter().zip(&nodes) {
            assert!((x - (C64::new(2.0, 0.0) + z)).norm() < 1e-8);
        }
    }

    #[test]
    fn outer_of_one_plus_two_z() {
        // |1 + 2z| = |2 + z| on the circle, so the outer part is 2 + z.
        let g = 512;
        let nodes = fft::grid_nodes(g);
        let rho: Vec<f64> = nodes
            .iter()
            .map(|z| (C64::new(1.0, 0.0) + z * 2.0).norm_sqr())
            .collect();
        let h = outer_factor(&rho, 0.0).unwrap();
        for (x, z) in h.iter().zip(&nodes) {
            assert!((x - (C64::new(2.0, 0.0) + z)).norm() < 1e-6);
        }
    }

    #[test]
    fn negative_density_rejected() {
        let rho = vec![1.0, -0.5, 1.0, 1.0];
        assert!(matches!(
            outer_factor(&rho, 0.0),
            Err(SuperoptError::NegativeDensity { .. })
        ));
    }

    #[test]
    fn durand_kerner_roots() {
        // (z - 0.3)(z - 0.7i)(z - 2)
        let r1 = C64::new(0.3, 0.0);
        let r2 = C64::new(0.0, 0.7);
        let r3 = C64::new(2.0, 0.0);
        // coefficients of (z-r1)(z-r2)(z-r3), ascending
        let c0 = -r1 * r2 * r3;
        let c1 = r1 * r2 + r1 * r3 + r2 * r3;
        let c2 = -(r1 + r2 + r3);
        let roots = polynomial_roots(&[c0, c1, c2, C64::new(1.0, 0.0)]);
        for target in [r1, r2, r3] {
            assert!(
                roots.iter().any(|r| (r - target).norm() < 1e-8),
                "missing {target}"
            );
        }
    }

    #[test]
    fn inner_part_examples() {
        // 1 + 2z: one zero at -1/2 inside the disk
        let s = ScalarSymbol::from_coeffs(&[(0, C64::new(1.0, 0.0)), (1, C64::new(2.0, 0.0))]);
        let b = inner_part(&s).unwrap();
        assert_eq!(b.power, 0);
        assert_eq!(b.zeros.len(), 1);
        assert!((b.zeros[0] - C64::new(-0.5, 0.0)).norm() < 1e-10);
        // 2 + z is outer: trivial inner part
        let s2 = ScalarSymbol::from_coeffs(&[(0, C64::new(2.0, 0.0)), (1, C64::new(1.0, 0.0))]);
        assert!(inner_part(&s2).unwrap().is_trivial());
        // z^2 (z - 1): power 2, circle root excluded
        let s3 = ScalarSymbol::from_coeffs(&[
            (2, C64::new(0.0, 0.0)),
            (2, C64::new(-1.0, 0.0)),
            (3, C64::new(1.0, 0.0)),
        ]);
        let b3 = inner_part(&s3).unwrap();
        assert_eq!(b3.power, 2);
        assert!(b3.zeros.is_empty());
    }

    #[test]
    fn blaschke_unimodular_on_circle() {
        let b = BlaschkeProduct { power: 1, zeros: vec![C64::new(0.3, 0.4)] };
        for z in fft::grid_nodes(64) {
            assert!((b.eval(z).norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(b.degree(), 2);
    }

    #[test]
    fn gcd_of_polynomial_entries() {
        // z(z - 0.5)(z - 2) and z^2 (z - 0.5): gcd is z (z - 0.5)/(1 - 0.5 z)
        let a = C64::new(0.5, 0.0);
        let e1 = ScalarSymbol::from_coeffs(&[
            (1, a * 2.0),              // z * (0.5*2)
            (2, C64::new(-2.5, 0.0)),  // z(z^2 - 2.5z + 1) coefficients
            (3, C64::new(1.0, 0.0)),
        ]);
        let e2 = ScalarSymbol::from_coeffs(&[(2, -a), (3, C64::new(1.0, 0.0))]);
        let g = gcd_inner_divisor(&[e1, e2], 1e-6).unwrap();
        assert_eq!(g.power, 1);
        assert_eq!(g.zeros.len(), 1);
        assert!((g.zeros[0] - a).norm() < 1e-7);
    }

    #[test]
    fn gcd_trivial_when_coprime() {
        let e1 = ScalarSymbol::from_coeffs(&[(0, C64::new(1.0, 0.0))]);
        let e2 = ScalarSymbol::from_coeffs(&[(1, C64::new(1.0, 0.0))]);
        assert!(gcd_inner_divisor(&[e1, e2], 1e-6).unwrap().is_trivial());
    }

    #[test]
    fn gcd_all_zero_rejected() {
        let z = ScalarSymbol::from_coeffs(&[]);
        assert!(matches!(
            gcd_inner_divisor(&[z.clone(), z], 1e-6),
            Err(SuperoptError::AllEntriesZero)
        ));
    }

    fn column2(entries: [&[(i64, C64)]; 2]) -> MatrixSymbol {
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (row, list) in entries.iter().enumerate() {
            for &(k, v) in *list {
                coeffs
                    .entry(k)
                    .or_insert_with(|| CMat::zeros(2, 1))[(row, 0)] = v;
            }
        }
        MatrixSymbol::new(BlockPartition::nehari(2, 1).unwrap(), coeffs).unwrap()
    }

    #[test]
    fn thematic_closed_form_two() {
        // v = (1, z)/sqrt(2)
        let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let v = column2([&[(0, s)], &[(1, s)]]);
        let vc = thematic_complete(&v, 128).unwrap();
        assert!((vc.coeff(1)[(0, 0)] + s).norm() < 1e-12);
        assert!((vc.coeff(0)[(1, 0)] - s).norm() < 1e-12);
    }

    #[test]
    fn thematic_constant_three() {
        // constant column e1 in C^3
        let mut c = CMat::zeros(3, 1);
        c[(0, 0)] = C64::new(1.0, 0.0);
        let v = MatrixSymbol::constant(BlockPartition::nehari(3, 1).unwrap(), c).unwrap();
        let vc = thematic_complete(&v, 64).unwrap();
        assert_eq!(vc.nrows(), 3);
        assert_eq!(vc.ncols(), 2);
    }

    #[test]
    fn thematic_varying_three() {
        // v = (1, z, z^2)/sqrt(3)
        let s = C64::new(1.0 / 3f64.sqrt(), 0.0);
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (row, k) in [(0usize, 0i64), (1, 1), (2, 2)] {
            coeffs.entry(k).or_insert_with(|| CMat::zeros(3, 1))[(row, 0)] = s;
        }
        let v =
            MatrixSymbol::new(BlockPartition::nehari(3, 1).unwrap(), coeffs).unwrap();
        let vc = thematic_complete(&v, 256).unwrap();
        // analyticity of the completion
        assert!(vc.antianalytic_energy() < 1e-10);
    }

    #[test]
    fn unitary_completion_smooth() {
        let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let v = column2([&[(0, s)], &[(1, s)]]);
        let grid = v.sample_on_grid(128).unwrap();
        let u = unitary_grid_completion(&grid).unwrap();
        assert!(u.unitary_residual() < 1e-10);
        // smoothness: adjacent nodes close
        let vals = u.values();
        for w in vals.windows(2) {
            assert!((&w[1] - &w[0]).norm() < 0.2);
        }
    }

    #[test]
    fn non_isometric_rejected() {
        let v = column2([&[(0, C64::new(2.0, 0.0))], &[]]);
        let grid = v.sample_on_grid(32).unwrap();
        assert!(matches!(
            unitary_grid_completion(&grid),
            Err(SuperoptError::NotIsometric(_))
        ));
    }
}
