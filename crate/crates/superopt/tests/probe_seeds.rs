
extern crate openblas_src;
use std::collections::BTreeMap;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use superopt::operators::{build_operator, random_symbol, OperatorKind};
use superopt::symbol::{BlockPartition, CMat, MatrixSymbol, C64};

const Q_DEG: usize = 4;
const NQ_VARS: usize = 2 * 2 * (Q_DEG + 1) * 2; // re/im of every coefficient

fn q_var(i: usize, j: usize, k: usize, imag: bool) -> usize {
    (((k * 2 + j) * 2 + i) * 2) + imag as usize
}

type H4 = [[C64; 4]; 4];

/// Hermitian [[0, D], [D*, 0]] from an arbitrary 2x2 block D.
fn hermitian_from_block(d: &[[C64; 2]; 2]) -> H4 {
    let mut h = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            h[i][2 + j] = d[i][j];
            h[2 + j][i] = d[i][j].conj();
        }
    }
    h
}

fn hermitian_scaled_identity(c: f64) -> H4 {
    let mut h = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        h[i][i] = C64::new(c, 0.0);
    }
    h
}

/// Scaled upper-triangle vectorization of the real embedding
/// [[Re H, -Im H], [Im H, Re H]], matching Clarabel's PSD triangle cone.
fn svec_embedding(h: &H4) -> Vec<f64> {
    let mut r = [[0.0f64; 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = h[i][j].re;
            r[i + 4][j + 4] = h[i][j].re;
            r[i][j + 4] = -h[i][j].im;
            r[i + 4][j] = h[i][j].im;
        }
    }
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(36);
    for j in 0..8 {
        for i in 0..=j {
            out.push(if i == j { r[i][j] } else { r[i][j] * s2 });
        }
    }
    out
}

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }
    /// Adds -svec(g) into column `col` at `row0` (constraints are encoded as
    /// s = b - A x).
    fn push_hermitian(&mut self, row0: usize, col: usize, g: &H4) {
        for (r, v) in svec_embedding(g).into_iter().enumerate() {
            if v != 0.0 {
                self.rows.push(row0 + r);
                self.cols.push(col);
                self.vals.push(-v);
            }
        }
    }
    fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }
}

fn grid_nodes(g: usize) -> Vec<C64> {
    (0..g)
        .map(|l| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / g as f64))
        .collect()
}

fn phi_block(sym: &MatrixSymbol, z: C64) -> [[C64; 2]; 2] {
    let m = sym.eval(z);
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Per-node Hermitian coefficient of each Q variable inside
/// [[.., E], [E*, ..]] with E = Phi - Q.
fn q_var_coefficients(z: C64) -> Vec<H4> {
    let mut out = Vec::with_capacity(NQ_VARS);
    for k in 0..=Q_DEG {
        for j in 0..2 {
            for i in 0..2 {
                for imag in [false, true] {
                    let w = if imag {
                        C64::new(0.0, 1.0)
                    } else {
                        C64::new(1.0, 0.0)
                    };
                    let mut d = [[C64::new(0.0, 0.0); 2]; 2];
                    d[i][j] = -w * z.powu(k as u32);
                    let idx = q_var(i, j, k, imag);
                    if out.len() <= idx {
                        out.resize(idx + 1, hermitian_scaled_identity(0.0));
                    }
                    out[idx] = hermitian_from_block(&d);
                }
            }
        }
    }
    out
}

fn run_sdp(
    n_vars: usize,
    objective: Vec<f64>,
    t: Triplets,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
) -> Vec<f64> {
    let a = CscMatrix::new_from_triplets(b.len(), n_vars, t.rows, t.cols, t.vals);
    let p = CscMatrix::new_from_triplets(n_vars, n_vars, vec![], vec![], vec![]);
    let settings = DefaultSettings {
        verbose: false,
        ..DefaultSettings::default()
    };
    let mut solver =
        DefaultSolver::new(&p, &objective, &a, &b, &cones, settings).expect("SDP setup failed");
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "SDP did not solve: {:?}",
        solver.solution.status
    );
    solver.solution.x.clone()
}

/// Stage 1: minimize the sup over the grid of the spectral norm of
/// Phi - Q with Q analytic of degree <= Q_DEG. Convex; the optimum is the
/// restricted s0^inf. Returns (t0, q coefficients).
fn oracle_stage1(sym: &MatrixSymbol, grid: usize) -> (f64, Vec<f64>) {
    let nodes = grid_nodes(grid);
    let n_vars = NQ_VARS + 1;
    let t_var = NQ_VARS;
    let mut trip = Triplets::new();
    let mut b = Vec::with_capacity(grid * 36);
    let mut cones = Vec::with_capacity(grid);
    for (l, &z) in nodes.iter().enumerate() {
        let row0 = l * 36;
        b.extend(svec_embedding(&hermitian_from_block(&phi_block(sym, z))));
        trip.push_hermitian(row0, t_var, &hermitian_scaled_identity(1.0));
        for (v, g) in q_var_coefficients(z).iter().enumerate() {
            trip.push_hermitian(row0, v, g);
        }
        cones.push(SupportedConeT::PSDTriangleConeT(8));
    }
    let mut obj = vec![0.0; n_vars];
    obj[t_var] = 1.0;
    let x = run_sdp(n_vars, obj, trip, b, cones);
    (x[t_var], x[..NQ_VARS].to_vec())
}

/// Stage 2: among corrections with spectral norm <= t0 + delta everywhere,
/// minimize the sup of the nuclear norm (s0 + s1 for 2x2). At the
/// superoptimal error both profiles are constant, so the excess over t0 is
/// the second superoptimal value.
fn oracle_stage2(sym: &MatrixSymbol, grid: usize, t0: f64) -> (f64, Vec<f64>) {
    let delta = 1e-6 + 1e-6 * t0;
    let nodes = grid_nodes(grid);
    // vars: q (NQ_VARS), then per node Y,Z Hermitian 2x2 (8 reals), then r
    let y_base = NQ_VARS;
    let r_var = NQ_VARS + 8 * grid;
    let n_vars = r_var + 1;
    let mut trip = Triplets::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();

    // trace rows first: r - (tr Y + tr Z)/2 >= 0
    for l in 0..grid {
        let yb = y_base + 8 * l;
        trip.push(l, r_var, -1.0);
        for off in [0, 1, 4, 5] {
            trip.push(l, yb + off, 0.5);
        }
        b.push(0.0);
    }
    cones.push(SupportedConeT::NonnegativeConeT(grid));

    let mut row = grid;
    for (l, &z) in nodes.iter().enumerate() {
        // spectral cap: [[(t0+delta) I, E], [E*, (t0+delta) I]] >= 0
        let mut h = hermitian_from_block(&phi_block(sym, z));
        let cap = hermitian_scaled_identity(t0 + delta);
        for i in 0..4 {
            h[i][i] = h[i][i] + cap[i][i];
        }
        b.extend(svec_embedding(&h));
        for (v, g) in q_var_coefficients(z).iter().enumerate() {
            trip.push_hermitian(row, v, g);
        }
        cones.push(SupportedConeT::PSDTriangleConeT(8));
        row += 36;

        // nuclear certificate: [[Y, E], [E*, Z]] >= 0
        b.extend(svec_embedding(&hermitian_from_block(&phi_block(sym, z))));
        for (v, g) in q_var_coefficients(z).iter().enumerate() {
            trip.push_hermitian(row, v, g);
        }
        let yb = y_base + 8 * l;
        // Y occupies the top-left 2x2, Z the bottom-right, in the order
        // (diag0, diag1, re off, im off)
        for (off, (i, j, re)) in [
            (0usize, (0usize, 0usize, true)),
            (1, (1, 1, true)),
            (2, (0, 1, true)),
            (3, (0, 1, false)),
        ] {
            for shift in [0usize, 2] {
                let mut g = [[C64::new(0.0, 0.0); 4]; 4];
                let w = if re {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 1.0)
                };
                g[i + shift][j + shift] = w;
                if i != j {
                    g[j + shift][i + shift] = w.conj();
                }
                let var = yb + off + if shift == 0 { 0 } else { 4 };
                trip.push_hermitian(row, var, &g);
            }
        }
        cones.push(SupportedConeT::PSDTriangleConeT(8));
        row += 36;
    }

    let mut obj = vec![0.0; n_vars];
    obj[r_var] = 1.0;
    let x = run_sdp(n_vars, obj, trip, b, cones);
    (x[r_var] - t0, x[..NQ_VARS].to_vec())
}

fn q_symbol_from_vars(x: &[f64]) -> MatrixSymbol {
    let p = BlockPartition::nehari(2, 2).unwrap();
    let mut coeffs = BTreeMap::new();
    for k in 0..=Q_DEG {
        let mat = CMat::from_fn(2, 2, |i, j| {
            C64::new(x[q_var(i, j, k, false)], x[q_var(i, j, k, true)])
        });
        coeffs.insert(k as i64, mat);
    }
    MatrixSymbol::new(p, coeffs).unwrap()
}

/// Fine-grid suprema of the two singular value profiles of Phi - Q.
fn profile_sups(sym: &MatrixSymbol, q: &MatrixSymbol, grid: usize) -> (f64, f64) {
    let err = sym.error_symbol(q).unwrap();
    let (_, s0, _) = err.sj_profile(0, grid).unwrap();
    let (_, s1, _) = err.sj_profile(1, grid).unwrap();
    (s0, s1)
}




#[test]
fn probe_all_seeds() {
    let p = BlockPartition::nehari(2, 2).unwrap();
    for seed in 101u64..=140 {
        let sym = random_symbol(p, 2, seed);
        match superopt::solver::solve(&sym, &superopt::solver::SolverConfig::default()) {
            Ok(res) => {
                let err = sym.error_symbol(&res.q).unwrap();
                let (_, s0, f0) = err.sj_profile(0, 1024).unwrap();
                let (_, s1, f1) = err.sj_profile(1, 1024).unwrap();
                let excess = |deg: i64| {
                    let coeffs: BTreeMap<i64, CMat> = res
                        .q
                        .coeffs()
                        .iter()
                        .filter(|(&k, _)| k <= deg)
                        .map(|(&k, m)| (k, m.clone()))
                        .collect();
                    let qt = MatrixSymbol::new(p, coeffs).unwrap();
                    let (ts0, ts1) = profile_sups(&sym, &qt, 1024);
                    ts0 + ts1 - res.t_values[0] - res.t_values[1]
                };
                println!(
                    "seed {seed}: t=({:.6},{:.6}) flat=({f0:.1e},{f1:.1e}) sup=({:.6},{:.6}) exc16={:.2e} exc32={:.2e}",
                    res.t_values[0], res.t_values[1], s0, s1, excess(16), excess(32)
                );
            }
            Err(e) => println!("seed {seed}: ERR {e}"),
        }
    }
}
