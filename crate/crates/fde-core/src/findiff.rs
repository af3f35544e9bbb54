//! Finite-difference stencils D^(m)_k for grid-function derivatives,
//! generated by solving the moment system on canonical offset sets:
//! m+k-1 centered nodes in the interior, m+k one-sided nodes at boundaries.

use crate::poly::solve_dense;
use crate::quadrature::GridFunction;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FindiffError {
    #[error("stencil derivative order must be >= 1 and accuracy order in {{2, 4}} (got m = {m}, k = {k})")]
    InvalidOrder { m: usize, k: usize },
    #[error("grid with {nodes} nodes too small for a {needed}-node stencil")]
    GridTooSmall { nodes: usize, needed: usize },
    #[error("stencil at node {node} reaches offset {offset} outside 0..={max}")]
    IndexOutOfRange { node: usize, offset: i64, max: usize },
}

/// Where the stencil sits relative to the grid. Boundary variants carry the
/// distance of the target node from that end; the node window stays pinned
/// to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    LeftBoundary(usize),
    Interior,
    RightBoundary(usize),
}

/// Difference approximation of the m-th derivative with accuracy O(h^k).
/// Weights are unscaled; application divides by h^m.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub derivative_order: usize,
    pub accuracy_order: usize,
    pub offsets: Vec<i64>,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Number of grid nodes the stencil touches.
    pub fn node_count(&self) -> usize {
        self.offsets.len()
    }
}

/// Build the canonical stencil for (m, k) at the given position. Weights
/// solve the Vandermonde moment system sum w_j o_j^p = delta(p, m) m!.
pub fn make_stencil(m: usize, k: usize, position: Position) -> Result<Stencil, FindiffError> {
    if m < 1 || !(k == 2 || k == 4) {
        return Err(FindiffError::InvalidOrder { m, k });
    }
    let offsets: Vec<i64> = match position {
        Position::Interior => {
            let count = m + k - 1;
            if count % 2 == 1 {
                let w = (count / 2) as i64;
                (-w..=w).collect()
            } else {
                // Even node count: symmetric set excluding the center.
                let w = (count / 2) as i64;
                (-w..=w).filter(|&o| o != 0).collect()
            }
        }
        Position::LeftBoundary(offset) => {
            (0..m + k).map(|j| j as i64 - offset as i64).collect()
        }
        Position::RightBoundary(offset) => (0..m + k)
            .map(|j| j as i64 + offset as i64 - (m + k - 1) as i64)
            .collect(),
    };
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
    let weights =
        solve_dense(&matrix, &rhs).expect("moment system on distinct offsets is nonsingular");
    Ok(Stencil {
        derivative_order: m,
        accuracy_order: k,
        offsets,
        weights,
    })
}

/// Canonical stencil for the m-th derivative at a specific grid node:
/// centered where it fits, one-sided next to the boundaries.
pub fn stencil_at_node(
    m: usize,
    k: usize,
    node: usize,
    last_node: usize,
) -> Result<Stencil, FindiffError> {
    if last_node + 1 < m + k {
        return Err(FindiffError::GridTooSmall {
            nodes: last_node + 1,
            needed: m + k,
        });
    }
    let interior = make_stencil(m, k, Position::Interior)?;
    let lo = *interior.offsets.first().unwrap();
    let hi = *interior.offsets.last().unwrap();
    if node as i64 + lo >= 0 && node as i64 + hi <= last_node as i64 {
        return Ok(interior);
    }
    if (node as i64) + lo < 0 {
        make_stencil(m, k, Position::LeftBoundary(node))
    } else {
        make_stencil(m, k, Position::RightBoundary(last_node - node))
    }
}

/// Apply a stencil to a grid function at a node: sum w_j psi(node + o_j) / h^m.
pub fn apply_stencil(
    stencil: &Stencil,
    psi: &GridFunction,
    node_index: usize,
) -> Result<f64, FindiffError> {
    let last = psi.grid.n;
    let mut sum = 0.0;
    for (&offset, &weight) in stencil.offsets.iter().zip(&stencil.weights) {
        let idx = node_index as i64 + offset;
        if idx < 0 || idx > last as i64 {
            return Err(FindiffError::IndexOutOfRange {
                node: node_index,
                offset,
                max: last,
            });
        }
        sum += weight * psi.values[idx as usize];
    }
    Ok(sum / psi.grid.h.powi(stencil.derivative_order as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::UniformGrid;

    #[test]
    fn left_boundary_first_derivative() {
        // (-3 psi_1 + 4 psi_2 - psi_3) / (2h)
        let st = make_stencil(1, 2, Position::LeftBoundary(0)).unwrap();
        assert_eq!(st.offsets, vec![0, 1, 2]);
        let expected = [-1.5, 2.0, -0.5];
        for (w, e) in st.weights.iter().zip(expected) {
            assert!((w - e).abs() < 1e-13);
        }
    }

    #[test]
    fn interior_central_difference() {
        let st = make_stencil(1, 2, Position::Interior).unwrap();
        assert_eq!(st.offsets, vec![-1, 1]);
        assert!((st.weights[0] - -0.5).abs() < 1e-14);
        assert!((st.weights[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_zero() {
        for (m, k) in [(1, 2), (2, 2), (3, 2), (4, 2), (1, 4), (2, 4), (3, 4)] {
            for pos in [
                Position::Interior,
                Position::LeftBoundary(0),
                Position::LeftBoundary(1),
                Position::RightBoundary(0),
            ] {
                let st = make_stencil(m, k, pos).unwrap();
                let sum: f64 = st.weights.iter().sum();
                assert!(sum.abs() < 1e-10, "m={m} k={k} {pos:?}: sum {sum:e}");
            }
        }
    }

    /// Stencils reproduce exact derivatives of monomials t^j, j < m + k.
    #[test]
    fn moment_exactness() {
        let grid = UniformGrid::new(10, 1.0).unwrap();
        for (m, k) in [(1, 2), (2, 2), (3, 2), (4, 2), (1, 4), (2, 4)] {
            for j in 0..m + k {
                for node in 0..=grid.n {
                    let st = stencil_at_node(m, k, node, grid.n).unwrap();
                    let psi = GridFunction::from_fn(grid, |t| t.powi(j as i32));
                    let got = apply_stencil(&st, &psi, node).unwrap();
                    let t = grid.node(node);
                    let exact = if j >= m {
                        ((j - m + 1)..=j).product::<usize>() as f64 * t.powi((j - m) as i32)
                    } else {
                        0.0
                    };
                    assert!(
                        (got - exact).abs() < 1e-9 * (1.0 + exact.abs()),
                        "m={m} k={k} j={j} node={node}: got {got}, exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn second_derivative_exact_on_quadratic() {
        let grid = UniformGrid::new(13, 1.0).unwrap();
        let psi = GridFunction::from_fn(grid, |t| t * t);
        let st = make_stencil(2, 2, Position::Interior).unwrap();
        let got = apply_stencil(&st, &psi, 6).unwrap();
        assert!((got - 2.0).abs() < 1e-11);
    }

    #[test]
    fn one_sided_second_derivative_exact_on_cubic() {
        let grid = UniformGrid::new(10, 1.0).unwrap();
        let psi = GridFunction::from_fn(grid, |t| t * t * t);
        let st = make_stencil(2, 2, Position::RightBoundary(0)).unwrap();
        let got = apply_stencil(&st, &psi, grid.n).unwrap();
        assert!((got - 6.0).abs() < 1e-10);
    }

    #[test]
    fn left_derivative_of_exp() {
        let grid = UniformGrid::new(100, 1.0).unwrap();
        let psi = GridFunction::from_fn(grid, f64::exp);
        let st = make_stencil(1, 2, Position::LeftBoundary(0)).unwrap();
        let got = apply_stencil(&st, &psi, 0).unwrap();
        assert!((got - 1.0).abs() < 1e-3);
    }

    #[test]
    fn interior_on_constant_is_zero() {
        let grid = UniformGrid::new(8, 1.0).unwrap();
        let psi = GridFunction::from_fn(grid, |_| 4.2);
        let st = make_stencil(1, 2, Position::Interior).unwrap();
        assert_eq!(apply_stencil(&st, &psi, 4).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_application_rejected() {
        let grid = UniformGrid::new(8, 1.0).unwrap();
        let psi = GridFunction::from_fn(grid, |t| t);
        let st = make_stencil(1, 2, Position::Interior).unwrap();
        assert!(matches!(
            apply_stencil(&st, &psi, 0),
            Err(FindiffError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn grid_too_small_detected() {
        assert!(matches!(
            stencil_at_node(4, 4, 0, 5),
            Err(FindiffError::GridTooSmall { .. })
        ));
    }

    /// Observed convergence rate of D^(m)_k on sin matches k.
    #[test]
    fn order_of_accuracy_sweep() {
        for (m, k) in [(1, 2), (2, 2), (1, 4), (2, 4)] {
            let mut errors = Vec::new();
            let ns = [32usize, 64, 128, 256];
            for &n in &ns {
                let grid = UniformGrid::new(n, 1.0).unwrap();
                let psi = GridFunction::from_fn(grid, f64::sin);
                let mut max_err = 0.0f64;
                for node in 0..=n {
                    let st = stencil_at_node(m, k, node, n).unwrap();
                    let got = apply_stencil(&st, &psi, node).unwrap();
                    let t = grid.node(node);
                    let exact = match m % 4 {
                        1 => t.cos(),
                        2 => -t.sin(),
                        3 => -t.cos(),
                        _ => t.sin(),
                    };
                    max_err = max_err.max((got - exact).abs());
                }
                errors.push(max_err);
            }
            let rate = (errors[0] / errors[errors.len() - 1]).log2()
                / ((ns[ns.len() - 1] / ns[0]) as f64).log2();
            assert!(
                (rate - k as f64).abs() <= 0.2,
                "m={m} k={k}: observed rate {rate:.3}"
            );
        }
    }
}
