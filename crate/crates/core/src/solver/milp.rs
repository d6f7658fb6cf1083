//! Big-M mixed-integer formulation written as CPLEX LP text.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{BinaryDataset, SolverConfig, ThresholdGrid};
use crate::error::{Error, Result};
use crate::metrics::weighted_net_benefit;
use crate::solver::rounding::counts_at_intercepts;

const FEASIBILITY_TOLERANCE: f64 = 1e-9;
const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    /// Separation margin between scores and intercepts for negatives.
    /// Defaults to 0.5 when every feature is integer-valued.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpVariable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// The exported model. Variables are laid out as `φ_{i,j}` (threshold
/// major), then `α_k`, `λ_k`, `T_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpExport {
    pub variables: Vec<LpVariable>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
    pub big_m: Vec<f64>,
    pub gamma: f64,
    pub c0: f64,
    pub positive_rows: usize,
    pub negative_rows: usize,
    pub indicator_rows: usize,
    pub monotonicity_rows: usize,
    n: usize,
    p: usize,
    m: usize,
}

impl MilpExport {
    fn phi(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    fn alpha(&self, k: usize) -> usize {
        (self.m + 1) * self.n + k
    }

    fn lambda(&self, k: usize) -> usize {
        (self.m + 1) * self.n + self.p + k
    }

    fn intercept(&self, i: usize) -> usize {
        (self.m + 1) * self.n + 2 * self.p + i
    }

    /// Closed-form variable count `(M+1)·N + 2P + (M+1)`.
    pub fn expected_variables(n: usize, p: usize, m: usize) -> usize {
        (m + 1) * n + 2 * p + (m + 1)
    }

    /// Renders the model in the CPLEX LP file dialect.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ risk score net benefit model: N={} P={} M={}", self.n, self.p, self.m);
        out.push_str("Minimize\n obj:");
        self.write_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            self.write_terms(&mut out, &row.terms);
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {sense} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Integer) {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
        for (title, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
            out.push_str(title);
            out.push('\n');
            let names: Vec<&str> = self
                .variables
                .iter()
                .filter(|v| v.kind == kind)
                .map(|v| v.name.as_str())
                .collect();
            for chunk in names.chunks(TERMS_PER_LINE) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", self.variables[0].name);
            return;
        }
        for (idx, &(var, coef)) in terms.iter().enumerate() {
            if idx > 0 && idx % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            let sign = if coef < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {} {}", coef.abs(), self.variables[var].name);
        }
    }
}

/// Builds the formulation: one `φ_{i,j}` per threshold and sample linked to
/// the rule `x_j·λ ≥ T_i` by big-M rows, indicators `α_k` for nonzero
/// coefficients, and nondecreasing intercepts.
pub fn milp_export(
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    config: &SolverConfig,
    options: &MilpOptions,
) -> Result<MilpExport> {
    config.validate(data.p())?;
    let gamma = match options.gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => return Err(Error::InvalidConfig(format!("gamma = {g} must be positive"))),
        None if data.is_integer_valued() => 0.5,
        None => {
            return Err(Error::InvalidConfig(
                "gamma is required for non-integer features".into(),
            ))
        }
    };
    let (n, p, m) = (data.n(), data.p(), grid.m());
    let cap = config
        .lambda_bounds
        .iter()
        .map(|&(lo, hi)| lo.abs().max(hi.abs()))
        .max()
        .unwrap_or(0) as f64;
    let t_max = config.t_max as f64;
    let big_m: Vec<f64> = data
        .rows()
        .map(|x| gamma + x.iter().map(|v| v.abs()).sum::<f64>() * cap + t_max)
        .collect();

    let mut variables = Vec::with_capacity(MilpExport::expected_variables(n, p, m));
    for i in 0..=m {
        for j in 1..=n {
            variables.push(LpVariable {
                name: format!("phi_{i}_{j}"),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            });
        }
    }
    for k in 1..=p {
        variables.push(LpVariable {
            name: format!("alpha_{k}"),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
    }
    for (k, &(lo, hi)) in config.lambda_bounds.iter().enumerate() {
        variables.push(LpVariable {
            name: format!("lambda_{}", k + 1),
            kind: VarKind::Integer,
            lower: lo as f64,
            upper: hi as f64,
        });
    }
    for i in 0..=m {
        variables.push(LpVariable {
            name: format!("T_{i}"),
            kind: VarKind::Integer,
            lower: -t_max,
            upper: t_max,
        });
    }
    let mut export = MilpExport {
        variables,
        objective: Vec::new(),
        rows: Vec::new(),
        big_m,
        gamma,
        c0: config.c0,
        positive_rows: 0,
        negative_rows: 0,
        indicator_rows: 0,
        monotonicity_rows: 0,
        n,
        p,
        m,
    };

    let nf = n as f64;
    let labels = data.labels();
    for i in 0..=m {
        let w = grid.weights()[i];
        let odds = grid.odds(i);
        for (j, &y) in labels.iter().enumerate() {
            let coef = if y == 1 { -w / nf } else { w * odds / nf };
            if coef != 0.0 {
                export.objective.push((export.phi(i, j), coef));
            }
        }
    }
    if config.c0 != 0.0 {
        for k in 0..p {
            export.objective.push((export.alpha(k), config.c0));
        }
    }

    let mut rows = Vec::new();
    for i in 0..=m {
        for (j, x) in data.rows().enumerate() {
            let h = export.big_m[j];
            let mut terms: Vec<(usize, f64)> = x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(k, &v)| (export.lambda(k), v))
                .collect();
            if labels[j] == 1 {
                // H_j(1 − φ_ij) ≥ T_i − x_j·λ
                terms.push((export.intercept(i), -1.0));
                terms.push((export.phi(i, j), -h));
                rows.push(LpRow {
                    name: format!("pos_{i}_{}", j + 1),
                    terms,
                    sense: Sense::Ge,
                    rhs: -h,
                });
                export.positive_rows += 1;
            } else {
                // H_j φ_ij ≥ γ + x_j·λ − T_i
                for t in &mut terms {
                    t.1 = -t.1;
                }
                terms.push((export.intercept(i), 1.0));
                terms.push((export.phi(i, j), h));
                rows.push(LpRow {
                    name: format!("neg_{i}_{}", j + 1),
                    terms,
                    sense: Sense::Ge,
                    rhs: gamma,
                });
                export.negative_rows += 1;
            }
        }
    }
    for (k, &(lo, hi)) in config.lambda_bounds.iter().enumerate() {
        rows.push(LpRow {
            name: format!("ind_hi_{}", k + 1),
            terms: vec![(export.lambda(k), 1.0), (export.alpha(k), -(hi as f64))],
            sense: Sense::Le,
            rhs: 0.0,
        });
        rows.push(LpRow {
            name: format!("ind_lo_{}", k + 1),
            terms: vec![(export.lambda(k), 1.0), (export.alpha(k), -(lo as f64))],
            sense: Sense::Ge,
            rhs: 0.0,
        });
        export.indicator_rows += 2;
    }
    for i in 0..m {
        rows.push(LpRow {
            name: format!("mono_{i}"),
            terms: vec![(export.intercept(i), 1.0), (export.intercept(i + 1), -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        export.monotonicity_rows += 1;
    }
    export.rows = rows;
    Ok(export)
}

/// Result of checking an external solution against the exported model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheck {
    pub lp_objective: f64,
    pub weighted_objective: f64,
    pub feasible: bool,
    pub agrees: bool,
}

/// Sets `φ_{i,j} = 1[x_j·λ ≥ T_i]` and `α_k = 1[λ_k ≠ 0]`, then evaluates
/// the LP objective, checks every row and bound, and compares with the
/// training objective.
pub fn verify_solution(
    export: &MilpExport,
    data: &BinaryDataset,
    grid: &ThresholdGrid,
    coefficients: &[i64],
    intercepts: &[i64],
) -> Result<SolutionCheck> {
    if data.n() != export.n || data.p() != export.p || grid.m() != export.m {
        return Err(Error::DimensionMismatch {
            what: "dataset/grid vs. exported model",
            expected: export.n,
            found: data.n(),
        });
    }
    if coefficients.len() != export.p || intercepts.len() != export.m + 1 {
        return Err(Error::DimensionMismatch {
            what: "solution vector",
            expected: export.p + export.m + 1,
            found: coefficients.len() + intercepts.len(),
        });
    }
    let scores = data.integer_scores(coefficients);
    let mut values = vec![0.0; export.variables.len()];
    for i in 0..=export.m {
        for (j, &s) in scores.iter().enumerate() {
            values[export.phi(i, j)] = f64::from(u8::from(s >= intercepts[i] as f64));
        }
    }
    for (k, &l) in coefficients.iter().enumerate() {
        values[export.alpha(k)] = f64::from(u8::from(l != 0));
        values[export.lambda(k)] = l as f64;
    }
    for (i, &t) in intercepts.iter().enumerate() {
        values[export.intercept(i)] = t as f64;
    }

    let lp_objective: f64 = export.objective.iter().map(|&(v, c)| c * values[v]).sum();
    let rows_ok = export.rows.iter().all(|row| {
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
        match row.sense {
            Sense::Le => lhs <= row.rhs + FEASIBILITY_TOLERANCE,
            Sense::Ge => lhs >= row.rhs - FEASIBILITY_TOLERANCE,
        }
    });
    let bounds_ok = export
        .variables
        .iter()
        .zip(&values)
        .all(|(var, &v)| v >= var.lower && v <= var.upper);

    let thresholds: Vec<f64> = intercepts.iter().map(|&t| t as f64).collect();
    let (tp, fp) = counts_at_intercepts(&scores, data.labels(), &thresholds);
    let nnz = coefficients.iter().filter(|&&l| l != 0).count();
    let weighted_objective =
        -weighted_net_benefit(&tp, &fp, data.n() as u64, grid, grid.weights()) + export.c0 * nnz as f64;
    Ok(SolutionCheck {
        lp_objective,
        weighted_objective,
        feasible: rows_ok && bounds_ok,
        agrees: (lp_objective - weighted_objective).abs() <= 1e-9,
    })
}
