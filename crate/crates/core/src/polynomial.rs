//! Per-cell nodal solution polynomials: the task outcome payload.

use thiserror::Error;

/// Shape of a cell polynomial: polynomial order, spatial dimension and
/// number of conserved unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyShape {
    pub order: usize,
    pub dim: usize,
    pub unknowns: usize,
}

impl PolyShape {
    /// Shape of a compressible-Euler cell: 3 unknowns in 1D (rho, rho*u,
    /// rho*E), 4 in 2D (adds the second momentum component).
    pub fn euler(order: usize, dim: usize) -> Self {
        assert!(order >= 2, "polynomial order must be at least 2");
        assert!(dim == 1 || dim == 2, "only 1D and 2D are supported");
        Self { order, dim, unknowns: if dim == 1 { 3 } else { 4 } }
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.order + 1
    }

    /// Total number of nodes per cell, (p+1)^dim.
    pub fn nodes(&self) -> usize {
        self.nodes_per_dim().pow(self.dim as u32)
    }

    pub fn coefficient_count(&self) -> usize {
        self.unknowns * self.nodes()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("payload shapes differ: {left:?} vs {right:?}")]
pub struct ShapeMismatch {
    pub left: PolyShape,
    pub right: PolyShape,
}

/// Nodal solution polynomial of one mesh cell.
///
/// Coefficients are the solution values at the tensor-product Gauss-Legendre
/// nodes of the reference cell, stored unknown-major: all nodes of unknown 0,
/// then all nodes of unknown 1, and so on. In 2D the node index is
/// `iy * (p+1) + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolynomial {
    shape: PolyShape,
    coefficients: Vec<f64>,
}

impl CellPolynomial {
    pub fn zeros(shape: PolyShape) -> Self {
        Self { shape, coefficients: vec![0.0; shape.coefficient_count()] }
    }

    pub fn from_coefficients(shape: PolyShape, coefficients: Vec<f64>) -> Self {
        assert_eq!(
            coefficients.len(),
            shape.coefficient_count(),
            "coefficient count must match the shape"
        );
        Self { shape, coefficients }
    }

    pub fn shape(&self) -> PolyShape {
        self.shape
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// Nodal values of one unknown.
    pub fn unknown(&self, u: usize) -> &[f64] {
        let n = self.shape.nodes();
        &self.coefficients[u * n..(u + 1) * n]
    }

    pub fn unknown_mut(&mut self, u: usize) -> &mut [f64] {
        let n = self.shape.nodes();
        &mut self.coefficients[u * n..(u + 1) * n]
    }

    /// Value of unknown `u` at node `node`.
    pub fn value(&self, u: usize, node: usize) -> f64 {
        self.coefficients[u * self.shape.nodes() + node]
    }

    pub fn set_value(&mut self, u: usize, node: usize, v: f64) {
        self.coefficients[u * self.shape.nodes() + node] = v;
    }

    pub fn same_shape(&self, other: &Self) -> Result<(), ShapeMismatch> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(ShapeMismatch { left: self.shape, right: other.shape })
        }
    }

    /// True if every coefficient is finite.
    pub fn all_finite(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_finite())
    }
}
