//! Gauss-Legendre nodal machinery on the reference cell [-1, 1]: quadrature
//! nodes and weights, Lagrange differentiation matrices, and edge
//! extrapolation operators.
//!
//! Nodes are mirror-symmetric by construction (`x[i] == -x[n-1-i]` bitwise)
//! and edge extrapolation accumulates mirrored pairs, so that extrapolating a
//! constant to the left and right edges yields bit-identical values. The
//! solver relies on this to keep constant states exact fixed points.

/// Gauss-Legendre nodes (ascending) and weights for `n` points on [-1, 1].
///
/// Roots of the Legendre polynomial P_n found by Newton iteration from the
/// Chebyshev estimate, then mirrored so symmetry holds bitwise.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one quadrature node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // i = 0 is the largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        if n % 2 == 1 && i == n / 2 {
            nodes[i] = 0.0;
            weights[i] = w;
        } else {
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at `x` via the three-term
/// recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Barycentric weights of the Lagrange basis on `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut lambda = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                lambda[j] *= nodes[j] - nodes[k];
            }
        }
        lambda[j] = 1.0 / lambda[j];
    }
    lambda
}

/// First-derivative matrix `D[i*n+j] = l_j'(x_i)` (row-major).
///
/// The diagonal uses the negative-sum trick; consumers that need exact
/// cancellation on constant data apply the matrix in difference form,
/// `sum_j D_ij (v_j - v_i)`.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lambda = barycentric_weights(nodes);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (lambda[j] / lambda[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Values of all Lagrange basis functions at an off-node point `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    let lambda = barycentric_weights(nodes);
    let n = nodes.len();
    let mut terms = vec![0.0; n];
    let mut denom = 0.0;
    for j in 0..n {
        debug_assert!(x != nodes[j], "lagrange_values expects an off-node point");
        terms[j] = lambda[j] / (x - nodes[j]);
        denom += terms[j];
    }
    terms.iter_mut().for_each(|t| *t /= denom);
    terms
}

/// Extrapolation of nodal values to the right edge (+1), accumulated over
/// mirrored node pairs.
pub fn extrapolate_right(values: &[f64], lift_right: &[f64]) -> f64 {
    let n = values.len();
    let mut acc = 0.0;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        acc += lift_right[i] * values[i] + lift_right[j] * values[j];
    }
    if n % 2 == 1 {
        acc += lift_right[n / 2] * values[n / 2];
    }
    acc
}

/// Extrapolation of nodal values to the left edge (-1). Uses the mirror
/// identity `l_i(-1) = l_{n-1-i}(+1)` and the same pair order as
/// [`extrapolate_right`], so constants extrapolate to bit-identical values on
/// both edges.
pub fn extrapolate_left(values: &[f64], lift_right: &[f64]) -> f64 {
    let n = values.len();
    let mut acc = 0.0;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        acc += lift_right[j] * values[i] + lift_right[i] * values[j];
    }
    if n % 2 == 1 {
        acc += lift_right[n / 2] * values[n / 2];
    }
    acc
}

/// Second-derivative operator for a nodal polynomial on a cell of width `h`:
/// the reference Lagrange differentiation matrix applied twice, scaled by
/// (2/h) per application.
///
/// Applied in difference form (`sum_{j != i} M_ij (v_j - v_i)`, valid because
/// the true matrix annihilates constants), so constant lines yield exact
/// zeros instead of roundoff noise — the smoothness criterion's denominator
/// floor then applies deterministically.
#[derive(Debug, Clone)]
pub struct SecondDerivative {
    n: usize,
    matrix: Vec<f64>,
}

impl SecondDerivative {
    pub fn new(nodes_per_dim: usize, cell_width: f64) -> Self {
        assert!(cell_width > 0.0, "cell width must be positive");
        let (nodes, _) = gauss_legendre(nodes_per_dim);
        let d = differentiation_matrix(&nodes);
        let n = nodes_per_dim;
        let scale = (2.0 / cell_width) * (2.0 / cell_width);
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += d[i * n + k] * d[k * n + j];
                }
                d2[i * n + j] = scale * acc;
            }
        }
        Self { n, matrix: d2 }
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.n
    }

    /// Second derivative of the interpolant of `line` (one grid line of nodal
    /// values) at every node of that line.
    pub fn apply_line(&self, line: &[f64]) -> Vec<f64> {
        debug_assert_eq!(line.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let vi = line[i];
            let mut acc = 0.0;
            for j in 0..self.n {
                if j != i {
                    acc += self.matrix[i * self.n + j] * (line[j] - vi);
                }
            }
            out[i] = acc;
        }
        out
    }
}
