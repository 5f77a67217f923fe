//! Input parsing, report assembly, and serialization for the batch front
//! door. The report JSON is deterministic for a fixed config and seed; the
//! `timings` field is the only part expected to vary between runs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SuperoptError};
use crate::operators;
use crate::solver::{self, SolverConfig, SuperoptimalResult, TransposeMode};
use crate::symbol::{BlockPartition, CMat, MatrixSymbol, C64};
use crate::weights::{self, ConstancyReport, IndexSumReport, SingularIneqReport};

pub const SCHEMA: &str = "superopt-report/1";

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PartitionInput {
    pub m1: usize,
    pub m2: usize,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CoeffInput {
    pub k: i64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SymbolInput {
    pub partition: PartitionInput,
    pub coeffs: Vec<CoeffInput>,
}

/// Parse-only validation: returns the list of violations, empty when valid.
pub fn validate_input(input: &SymbolInput) -> Vec<String> {
    let mut violations = Vec::new();
    let p = &input.partition;
    if p.m1 == 0 || p.n1 == 0 {
        violations.push("empty corrected block: m1 and n1 must be at least 1".to_string());
    }
    let (m, n) = (p.m1 + p.m2, p.n1 + p.n2);
    let mut seen = std::collections::BTreeSet::new();
    for c in &input.coeffs {
        if !seen.insert(c.k) {
            violations.push(format!("duplicate k: {}", c.k));
        }
        for (name, part) in [("re", &c.re), ("im", &c.im)] {
            if part.len() != m || part.iter().any(|row| row.len() != n) {
                violations.push(format!(
                    "coefficient k={} field {name} has wrong shape, expected {m}x{n}",
                    c.k
                ));
            }
        }
    }
    violations
}

pub fn symbol_from_input(input: &SymbolInput) -> Result<MatrixSymbol> {
    let violations = validate_input(input);
    if let Some(v) = violations.first() {
        return Err(SuperoptError::Input(v.clone()));
    }
    let p = &input.partition;
    let partition = BlockPartition::new(p.m1, p.m2, p.n1, p.n2)?;
    let (m, n) = (partition.m(), partition.n());
    let mut coeffs = std::collections::BTreeMap::new();
    for c in &input.coeffs {
        let mat = CMat::from_fn(m, n, |i, j| C64::new(c.re[i][j], c.im[i][j]));
        coeffs.insert(c.k, mat);
    }
    MatrixSymbol::new(partition, coeffs)
}

pub fn symbol_to_input(sym: &MatrixSymbol) -> SymbolInput {
    let p = sym.partition();
    let coeffs = sym
        .coeffs()
        .iter()
        .map(|(&k, m)| CoeffInput {
            k,
            re: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
                .collect(),
        })
        .collect();
    SymbolInput {
        partition: PartitionInput {
            m1: p.m1,
            m2: p.m2,
            n1: p.n1,
            n2: p.n2,
        },
        coeffs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChecksEnabled {
    pub constancy: bool,
    pub index_sums: bool,
    pub inequalities: bool,
}

impl ChecksEnabled {
    pub fn all() -> Self {
        Self {
            constancy: true,
            index_sums: true,
            inequalities: true,
        }
    }
    pub fn none() -> Self {
        Self {
            constancy: false,
            index_sums: false,
            inequalities: false,
        }
    }
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "all" => Ok(Self::all()),
            "none" => Ok(Self::none()),
            list => {
                let mut c = Self::none();
                for item in list.split(',') {
                    match item.trim() {
                        "constancy" => c.constancy = true,
                        "index_sums" => c.index_sums = true,
                        "inequalities" => c.inequalities = true,
                        other => {
                            return Err(SuperoptError::Input(format!(
                                "unknown check: {other}"
                            )))
                        }
                    }
                }
                Ok(c)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub transpose: TransposeMode,
    pub checks: ChecksEnabled,
    pub rank_tol: f64,
    pub eq_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            transpose: TransposeMode::Auto,
            checks: ChecksEnabled::all(),
            rank_tol: 1e-7,
            eq_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub checked: bool,
    pub passed: bool,
    pub essential_lower_bound: f64,
    pub min_nonzero_t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Norms {
    pub operator_norm: f64,
    pub essential_lower_bound: f64,
    pub symbol_linf: f64,
    pub error_linf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub reconstruction: f64,
    pub max_level_gap: f64,
    pub level_gaps: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexEntry {
    pub level: usize,
    pub t: f64,
    pub k: usize,
    pub winding: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NuEntry {
    /// Distinct superoptimal value (cluster representative).
    pub t: f64,
    /// Sum of indices over the cluster.
    pub nu: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constancy: Option<ConstancyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_sums: Option<IndexSumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<SingularIneqReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub solve_ms: f64,
    pub diagnostics_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub grid_size: usize,
    pub n_in: usize,
    pub seed: u64,
    pub transposed: bool,
    pub t_seq: Vec<f64>,
    /// sup of every singular-value profile of the error, beyond the corrected
    /// range; the first entries coincide with t_seq.
    pub extended_t: Vec<f64>,
    pub indices: Vec<IndexEntry>,
    pub nu: Vec<NuEntry>,
    pub q: SymbolInput,
    pub norms: Norms,
    pub hypothesis_check: HypothesisCheck,
    pub residuals: Residuals,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

pub fn build_report(
    sym: &MatrixSymbol,
    cfg: &RunConfig,
) -> Result<(Report, SuperoptimalResult)> {
    let start = std::time::Instant::now();
    let result = solver::solve_with_transpose(sym, &cfg.solver, cfg.transpose)?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;

    let sym_solved = &result.level_symbols[0];
    let q_solved = result.q_solved();
    let err = sym_solved.error_symbol(&q_solved)?;
    let err_grid = err.sample_on_grid(result.grid_size)?;

    // extended singular-value suprema of the error
    let p = sym_solved.partition();
    let s_count = p.m().min(p.n());
    let mut extended_t = Vec::with_capacity(s_count);
    for j in 0..s_count {
        let profile = err_grid.sj_profile(j);
        extended_t.push(profile.iter().cloned().fold(0.0, f64::max));
    }

    let rec = solver::reconstruct_error(&result);
    let reconstruction = rec.sub(&err_grid).max_abs();

    let indices: Vec<IndexEntry> = result
        .steps
        .iter()
        .map(|s| IndexEntry {
            level: s.level,
            t: s.t,
            k: s.index,
            winding: s.winding,
        })
        .collect();
    // cluster equal superoptimal values
    let mut nu: Vec<NuEntry> = Vec::new();
    for s in &result.steps {
        match nu
            .iter_mut()
            .find(|e| (e.t - s.t).abs() <= 1e-6 * e.t.max(1e-300))
        {
            Some(e) => e.nu += s.index,
            None => nu.push(NuEntry {
                t: s.t,
                nu: s.index,
            }),
        }
    }

    let min_nonzero_t = result
        .t_values
        .iter()
        .cloned()
        .filter(|&t| t > 1e-9 * result.t_values.first().copied().unwrap_or(1.0))
        .fold(f64::INFINITY, f64::min);
    let hypothesis_check = HypothesisCheck {
        checked: cfg.solver.check_hypothesis,
        passed: !min_nonzero_t.is_finite() || result.essential_lb < min_nonzero_t,
        essential_lower_bound: result.essential_lb,
        min_nonzero_t: if min_nonzero_t.is_finite() {
            min_nonzero_t
        } else {
            0.0
        },
    };

    let norms = Norms {
        operator_norm: result.t_values.first().copied().unwrap_or(0.0),
        essential_lower_bound: result.essential_lb,
        symbol_linf: sym.linf_norm(result.grid_size)?,
        error_linf: err_grid.linf_norm(),
    };

    let residuals = Residuals {
        reconstruction,
        max_level_gap: result.gaps.iter().cloned().fold(0.0, f64::max),
        level_gaps: result.gaps.clone(),
    };

    let diag_start = std::time::Instant::now();
    let diagnostics = Diagnostics {
        constancy: if cfg.checks.constancy {
            Some(weights::check_constancy(&result, 1e-5)?)
        } else {
            None
        },
        index_sums: if cfg.checks.index_sums {
            Some(weights::check_index_sums(&result, cfg.rank_tol)?)
        } else {
            None
        },
        inequalities: if cfg.checks.inequalities {
            Some(weights::check_singular_inequalities(&result, cfg.eq_tol)?)
        } else {
            None
        },
    };
    let diagnostics_ms = diag_start.elapsed().as_secs_f64() * 1e3;

    let report = Report {
        schema: SCHEMA,
        grid_size: result.grid_size,
        n_in: result.n_in,
        seed: cfg.solver.seed,
        transposed: result.transposed,
        t_seq: result.t_values.clone(),
        extended_t,
        indices,
        nu,
        q: symbol_to_input(&result.q),
        norms,
        hypothesis_check,
        residuals,
        diagnostics,
        timings: Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            solve_ms,
            diagnostics_ms,
        },
    };
    Ok((report, result))
}

/// Serializer writing every float with 17 significant digits so reports are
/// reproducible bit-for-bit.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json(report: &Report) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    report
        .serialize(&mut ser)
        .map_err(|e| SuperoptError::Input(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| SuperoptError::Input(format!("non-utf8 report: {e}")))
}

/// Plot-ready CSV: header `theta,s_0,...`; one row per grid node.
pub fn to_csv(sym: &MatrixSymbol, result: &SuperoptimalResult) -> Result<String> {
    let sym_solved = &result.level_symbols[0];
    let q_solved = result.q_solved();
    let err = sym_solved.error_symbol(&q_solved)?;
    let g = result.grid_size;
    let err_grid = err.sample_on_grid(g)?;
    let levels = result.t_values.len();
    let profiles: Vec<Vec<f64>> = (0..levels).map(|j| err_grid.sj_profile(j)).collect();
    let mut out = String::new();
    out.push_str("theta");
    for j in 0..levels {
        out.push_str(&format!(",s_{j}"));
    }
    out.push('\n');
    for l in 0..g {
        let theta = 2.0 * std::f64::consts::PI * l as f64 / g as f64;
        out.push_str(&format!("{theta:.16e}"));
        for p in &profiles {
            out.push_str(&format!(",{:.16e}", p[l]));
        }
        out.push('\n');
    }
    let _ = sym;
    Ok(out)
}

/// Exit-code mapping: 1 = parse/validation, 2 = hypothesis, 3 = numerical.
pub fn exit_code_for(err: &SuperoptError) -> i32 {
    match err {
        SuperoptError::Input(_)
        | SuperoptError::InvalidPartition(_)
        | SuperoptError::ShapeMismatch(_) => 1,
        SuperoptError::EssentialNormHypothesis { .. } => 2,
        _ => 3,
    }
}

pub use operators::random_symbol;
