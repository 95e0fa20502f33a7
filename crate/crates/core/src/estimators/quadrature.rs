//! Gauss-Hermite quadrature against the standard normal density.

use nalgebra::{DMatrix, SVector};

use crate::error::{Error, Result};

/// Tensor-product rule: `m^d` points `xi_l` with weights `w_l`, exact for
/// every polynomial of degree at most `2m - 1` in each coordinate under `N(0, I_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraturePointSet {
    pub dim: usize,
    /// Row-major, `points[l * dim + j]` is coordinate `j` of point `l`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadraturePointSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, l: usize) -> &[f64] {
        &self.points[l * self.dim..(l + 1) * self.dim]
    }

    pub fn point_vector<const N: usize>(&self, l: usize) -> SVector<f64, N> {
        assert_eq!(self.dim, N, "rule dimension does not match state dimension");
        SVector::<f64, N>::from_column_slice(self.point(l))
    }
}

/// Univariate nodes and weights for `N(0, 1)` by the Golub-Welsch method:
/// nodes are eigenvalues of the Jacobi matrix of the probabilists' Hermite
/// recurrence (off-diagonal `sqrt(k)`), weights the squared first
/// eigenvector components.
fn univariate(m: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // symmetrize about zero; the rule is exactly symmetric
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m {
        let mirror = m - 1 - k;
        nodes[k] = 0.5 * (pairs[k].0 - pairs[mirror].0);
        weights[k] = 0.5 * (pairs[k].1 + pairs[mirror].1);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// Tensor-product Gauss-Hermite rule with `m` points per dimension in `d` dimensions.
pub fn gauss_hermite_rule(m: usize, d: usize) -> Result<QuadraturePointSet> {
    if m != 3 && m != 5 {
        return Err(Error::UnsupportedOrder(m));
    }
    if d == 0 {
        return Err(Error::config("quadrature dimension must be positive"));
    }
    let (nodes, node_weights) = univariate(m);
    let count = m.pow(d as u32);
    let mut points = Vec::with_capacity(count * d);
    let mut weights = Vec::with_capacity(count);
    for l in 0..count {
        let mut rem = l;
        let mut w = 1.0;
        let start = points.len();
        points.resize(start + d, 0.0);
        // last coordinate varies fastest
        for j in (0..d).rev() {
            let idx = rem % m;
            rem /= m;
            points[start + j] = nodes[idx];
            w *= node_weights[idx];
        }
        weights.push(w);
    }
    Ok(QuadraturePointSet {
        dim: d,
        points,
        weights,
    })
}
