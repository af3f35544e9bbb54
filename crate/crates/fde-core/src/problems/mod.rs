//! Problem-definition files (.fde), the expression language, and the
//! registry of built-in example problems.
//!
//! The file format is line-oriented `key = value`, UTF-8, with `#`
//! starting a comment:
//!
//! ```text
//! order = 3
//! interval = 1
//! rhs = exp(-t)*u^(3/2)*v
//! phi = t/2
//! bc_family = third_a
//! bc = 1, 1, e
//! exact = exp(t)          # optional
//! lipschitz = 2.0, 2.0    # optional
//! ```

pub mod expr;

use crate::kernels::{build_green_kernel, BcFamily, BoundaryConditions};
use crate::solver::{BvpProblem, SolverError};
use expr::{eval_expr, parse_expr, used_variables, Expr, ExprError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr {
        line: usize,
        #[source]
        source: ExprError,
    },
    #[error("missing required key '{key}'")]
    MissingKey { key: &'static str },
    #[error("unknown boundary-condition family '{tag}'")]
    UnsupportedFamily { tag: String },
    #[error("family {family} is for order {expected}, problem declares order {got}")]
    OrderMismatch {
        family: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("unknown built-in problem '{name}'")]
    UnknownProblem { name: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parsed, serializable form of a problem definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub order: usize,
    pub interval_length: f64,
    pub rhs: Expr,
    pub phi: Expr,
    pub bc_family: BcFamily,
    pub bc_values: Vec<Expr>,
    pub exact: Option<Expr>,
    pub lipschitz: Option<(f64, f64)>,
}

/// Split on top-level commas, respecting parentheses.
fn split_list(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

/// Parse problem-definition text into a [`ProblemSpec`].
pub fn parse_problem_spec(text: &str) -> Result<ProblemSpec, ProblemError> {
    let mut order = None;
    let mut interval = None;
    let mut rhs = None;
    let mut phi = None;
    let mut bc_family = None;
    let mut bc_values = None;
    let mut exact = None;
    let mut lipschitz = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ProblemError::Parse {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let parse_err = |message: String| ProblemError::Parse { line, message };
        let expr_err = |source: ExprError| ProblemError::Expr { line, source };
        match key {
            "order" => {
                order = Some(value.parse::<usize>().map_err(|_| {
                    parse_err(format!("order must be an integer, got '{value}'"))
                })?);
            }
            "interval" => {
                interval = Some(value.parse::<f64>().map_err(|_| {
                    parse_err(format!("interval must be a number, got '{value}'"))
                })?);
            }
            "rhs" => rhs = Some(parse_expr(value).map_err(expr_err)?),
            "phi" => {
                let expr = parse_expr(value).map_err(expr_err)?;
                let (_, uses_u, uses_v) = used_variables(&expr);
                if uses_u || uses_v {
                    return Err(parse_err("phi may only reference t".into()));
                }
                phi = Some(expr);
            }
            "bc_family" => {
                bc_family = Some(BcFamily::from_tag(value).ok_or_else(|| {
                    ProblemError::UnsupportedFamily {
                        tag: value.to_string(),
                    }
                })?);
            }
            "bc" => {
                let mut values = Vec::new();
                for part in split_list(value) {
                    let expr = parse_expr(part).map_err(expr_err)?;
                    if used_variables(&expr) != (false, false, false) {
                        return Err(parse_err("bc values must be constant expressions".into()));
                    }
                    values.push(expr);
                }
                bc_values = Some(values);
            }
            "exact" => {
                let expr = parse_expr(value).map_err(expr_err)?;
                let (_, uses_u, uses_v) = used_variables(&expr);
                if uses_u || uses_v {
                    return Err(parse_err("exact may only reference t".into()));
                }
                exact = Some(expr);
            }
            "lipschitz" => {
                let parts = split_list(value);
                if parts.len() != 2 {
                    return Err(parse_err("lipschitz takes two numbers".into()));
                }
                let l1 = parts[0]
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad Lipschitz constant '{}'", parts[0])))?;
                let l2 = parts[1]
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad Lipschitz constant '{}'", parts[1])))?;
                lipschitz = Some((l1, l2));
            }
            _ => {
                return Err(parse_err(format!("unknown key '{key}'")));
            }
        }
    }

    Ok(ProblemSpec {
        order: order.ok_or(ProblemError::MissingKey { key: "order" })?,
        interval_length: interval.ok_or(ProblemError::MissingKey { key: "interval" })?,
        rhs: rhs.ok_or(ProblemError::MissingKey { key: "rhs" })?,
        phi: phi.ok_or(ProblemError::MissingKey { key: "phi" })?,
        bc_family: bc_family.ok_or(ProblemError::MissingKey { key: "bc_family" })?,
        bc_values: bc_values.ok_or(ProblemError::MissingKey { key: "bc" })?,
        exact,
        lipschitz,
    })
}

impl ProblemSpec {
    /// Canonical text form; `parse_problem_spec` of the output reproduces a
    /// structurally equal spec.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("order = {}\n", self.order));
        out.push_str(&format!("interval = {}\n", self.interval_length));
        out.push_str(&format!("rhs = {}\n", self.rhs));
        out.push_str(&format!("phi = {}\n", self.phi));
        out.push_str(&format!("bc_family = {}\n", self.bc_family.tag()));
        let bc: Vec<String> = self.bc_values.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("bc = {}\n", bc.join(", ")));
        if let Some(exact) = &self.exact {
            out.push_str(&format!("exact = {exact}\n"));
        }
        if let Some((l1, l2)) = self.lipschitz {
            out.push_str(&format!("lipschitz = {l1}, {l2}\n"));
        }
        out
    }

    /// Construct the runnable problem, validating family/order consistency,
    /// the kernel interval, boundary-value count and the deviation range.
    pub fn build(&self, name: Option<String>) -> Result<BvpProblem, ProblemError> {
        if self.bc_family.equation_order() != self.order {
            return Err(ProblemError::OrderMismatch {
                family: self.bc_family.tag().to_string(),
                expected: self.bc_family.equation_order(),
                got: self.order,
            });
        }
        build_green_kernel(self.order, self.bc_family, self.interval_length)?;
        let mut values = Vec::new();
        for expr in &self.bc_values {
            let v = eval_expr(expr, 0.0, None, None).map_err(|source| ProblemError::Expr {
                line: 0,
                source,
            })?;
            values.push(v);
        }
        let bc = BoundaryConditions::new(self.bc_family, values)?;
        let rhs_expr = self.rhs.clone();
        let phi_expr = self.phi.clone();
        let mut problem = BvpProblem::new(
            bc,
            self.interval_length,
            move |t, u, v| eval_expr(&rhs_expr, t, Some(u), Some(v)).unwrap_or(f64::NAN),
            move |t| eval_expr(&phi_expr, t, None, None).unwrap_or(f64::NAN),
        )?;
        if let Some(exact) = &self.exact {
            let exact_expr = exact.clone();
            problem = problem
                .with_exact(move |t| eval_expr(&exact_expr, t, None, None).unwrap_or(f64::NAN));
        }
        if let Some((l1, l2)) = self.lipschitz {
            problem = problem.with_lipschitz(l1, l2);
        }
        if let Some(name) = name {
            problem = problem.with_name(name);
        }
        Ok(problem)
    }
}

/// Parse problem text and build the runnable problem.
pub fn load_problem(text: &str) -> Result<BvpProblem, ProblemError> {
    parse_problem_spec(text)?.build(None)
}

/// Load a problem from a .fde file.
pub fn load_problem_file(path: &str) -> Result<BvpProblem, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_string(),
        source,
    })?;
    let stem = std::path::Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());
    parse_problem_spec(&text)?.build(stem)
}

/// Built-in problems, embedded from the bundled .fde files.
const BUILTINS: [(&str, &str); 10] = [
    ("ex4_1", include_str!("../../problems/ex4_1.fde")),
    ("ex4_2", include_str!("../../problems/ex4_2.fde")),
    ("ex4_3", include_str!("../../problems/ex4_3.fde")),
    ("ex4_4", include_str!("../../problems/ex4_4.fde")),
    ("ex4_5", include_str!("../../problems/ex4_5.fde")),
    ("ex4_6", include_str!("../../problems/ex4_6.fde")),
    ("ex5_1", include_str!("../../problems/ex5_1.fde")),
    ("ex5_2", include_str!("../../problems/ex5_2.fde")),
    ("ex7_1", include_str!("../../problems/ex7_1.fde")),
    ("ex7_2", include_str!("../../problems/ex7_2.fde")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(name, _)| *name).collect()
}

/// Raw .fde text of a built-in problem.
pub fn builtin_text(name: &str) -> Result<&'static str, ProblemError> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| ProblemError::UnknownProblem {
            name: name.to_string(),
        })
}

/// Parsed spec of a built-in problem.
pub fn builtin_spec(name: &str) -> Result<ProblemSpec, ProblemError> {
    parse_problem_spec(builtin_text(name)?)
}

/// The built-in problem, ready to solve.
pub fn builtin(name: &str) -> Result<BvpProblem, ProblemError> {
    builtin_spec(name)?.build(Some(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::solve_dense;
    use std::f64::consts::E;

    #[test]
    fn builtin_ex4_1_loads() {
        let p = builtin("ex4_1").unwrap();
        assert_eq!(p.order, 3);
        assert_eq!(p.bc.family, BcFamily::ThirdA);
        assert!((p.exact(1.0).unwrap() - E).abs() < 1e-15);
        assert!((p.rhs(0.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.deviation(0.8), 0.4);
    }

    #[test]
    fn builtin_exact_values() {
        assert!((builtin("ex4_2").unwrap().exact(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(builtin("ex5_2").unwrap().exact(0.0).unwrap(), 0.0);
        let p = builtin("ex7_2").unwrap();
        assert_eq!(p.bc.values, vec![0.0, 0.0, 0.0, 1.0, 6.0]);
    }

    #[test]
    fn builtin_ex7_1_deviation() {
        let p = builtin("ex7_1").unwrap();
        assert_eq!(p.order, 5);
        assert_eq!(p.deviation(1.0), 0.25);
    }

    #[test]
    fn unknown_builtin_rejected() {
        assert!(matches!(
            builtin("ex9_9"),
            Err(ProblemError::UnknownProblem { .. })
        ));
    }

    #[test]
    fn phi_leaving_interval_rejected() {
        let text = "order = 3\ninterval = 1\nrhs = u\nphi = 2*t\nbc_family = third_a\nbc = 0, 0, 0\n";
        let err = load_problem(text).unwrap_err();
        assert!(matches!(
            err,
            ProblemError::Solver(SolverError::PhiOutOfRange { .. })
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "order = 3\nnonsense\n";
        match load_problem(text) {
            Err(ProblemError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected result: {other:?}"),
        }
        let text = "order = 3\nrhs = 2*^3\n";
        match load_problem(text) {
            Err(ProblemError::Expr { line: 2, .. }) => {}
            other => panic!("unexpected result: {other:?}"),
        }
    }

    #[test]
    fn family_order_consistency_enforced() {
        let text =
            "order = 4\ninterval = 1\nrhs = u\nphi = t\nbc_family = third_a\nbc = 0, 0, 0\n";
        assert!(matches!(
            load_problem(text),
            Err(ProblemError::OrderMismatch { .. })
        ));
    }

    #[test]
    fn round_trip_all_builtins() {
        for name in builtin_names() {
            let spec = builtin_spec(name).unwrap();
            let reparsed = parse_problem_spec(&spec.serialize()).unwrap();
            assert_eq!(spec, reparsed, "round trip of {name}");
        }
    }

    /// Central difference weights for the m-th derivative of accuracy k,
    /// used only to validate the registry against its exact solutions.
    fn central_weights(m: usize, width: i64) -> (Vec<i64>, Vec<f64>) {
        let offsets: Vec<i64> = (-width..=width).collect();
        let n = offsets.len();
        let mut matrix = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for (p, row) in matrix.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (offsets[j] as f64).powi(p as i32);
            }
            if p == m {
                rhs[p] = (1..=m).product::<usize>() as f64;
            }
        }
        (offsets.clone(), solve_dense(&matrix, &rhs).unwrap())
    }

    /// Every builtin's exact solution satisfies its own equation: the m-th
    /// derivative of `exact` matches f(t, u, u(phi)) at 50 interior points.
    #[test]
    fn builtin_exact_solutions_satisfy_their_odes() {
        for name in builtin_names() {
            let p = builtin(name).unwrap();
            let m = p.order;
            let h = 0.05;
            let (offsets, weights) = central_weights(m, 5);
            let mut worst = 0.0f64;
            for i in 0..50 {
                let t = 0.3 + 0.4 * i as f64 / 49.0;
                let du: f64 = offsets
                    .iter()
                    .zip(&weights)
                    .map(|(&o, &w)| w * p.exact(t + o as f64 * h).unwrap())
                    .sum::<f64>()
                    / h.powi(m as i32);
                let u = p.exact(t).unwrap();
                let v = p.exact(p.deviation(t)).unwrap();
                worst = worst.max((du - p.rhs(t, u, v)).abs());
            }
            assert!(worst <= 1e-6, "{name}: residual {worst:e}");
        }
    }

    #[test]
    fn serialize_then_build_gives_same_solver_behavior() {
        let spec = builtin_spec("ex4_3").unwrap();
        let rebuilt = parse_problem_spec(&spec.serialize())
            .unwrap()
            .build(None)
            .unwrap();
        let original = spec.build(None).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert_eq!(original.rhs(t, 1.3, 0.7), rebuilt.rhs(t, 1.3, 0.7));
            assert_eq!(original.deviation(t), rebuilt.deviation(t));
        }
        assert_eq!(original.lipschitz, Some((0.25, 0.25)));
    }

    #[test]
    fn list_splitting_respects_parentheses() {
        assert_eq!(split_list("1, pow(2, 3), 4"), vec!["1", "pow(2, 3)", "4"]);
    }
}
