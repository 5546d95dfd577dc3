//! Matrix-valued coefficients `F(x)` for the weighted forms.

use crate::mesh::Point;
use crate::poly::Poly;
use std::fmt;
use std::sync::Arc;

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone)]
enum Kind {
    Constant(Mat3),
    Polynomial(Box<[[Poly; 3]; 3]>),
    Function(Arc<dyn Fn(Point) -> Mat3 + Send + Sync>),
}

/// `x ↦ F(x)` together with the declared lower bound `μ` on `det F`.
#[derive(Clone)]
pub struct MatrixCoefficient {
    kind: Kind,
    pub mu: f64,
}

impl fmt::Debug for MatrixCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Constant(m) => write!(f, "MatrixCoefficient::Constant({m:?}, mu={})", self.mu),
            Kind::Polynomial(p) => write!(f, "MatrixCoefficient::Polynomial({p:?}, mu={})", self.mu),
            Kind::Function(_) => write!(f, "MatrixCoefficient::Function(<fn>, mu={})", self.mu),
        }
    }
}

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl MatrixCoefficient {
    /// A constant coefficient; `μ` defaults to its determinant.
    pub fn constant(m: Mat3) -> MatrixCoefficient {
        MatrixCoefficient { mu: det(&m), kind: Kind::Constant(m) }
    }

    pub fn identity() -> MatrixCoefficient {
        Self::scaled_identity(1.0)
    }

    pub fn scaled_identity(s: f64) -> MatrixCoefficient {
        Self::constant([[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]])
    }

    pub fn diagonal(d: [f64; 3]) -> MatrixCoefficient {
        Self::constant([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn polynomial(p: [[Poly; 3]; 3], mu: f64) -> MatrixCoefficient {
        MatrixCoefficient { kind: Kind::Polynomial(Box::new(p)), mu }
    }

    /// A general coefficient; quadrature cannot be exact for it.
    pub fn function(f: impl Fn(Point) -> Mat3 + Send + Sync + 'static, mu: f64) -> MatrixCoefficient {
        MatrixCoefficient { kind: Kind::Function(Arc::new(f)), mu }
    }

    pub fn with_mu(mut self, mu: f64) -> MatrixCoefficient {
        self.mu = mu;
        self
    }

    pub fn eval(&self, x: Point) -> Mat3 {
        match &self.kind {
            Kind::Constant(m) => *m,
            Kind::Polynomial(p) => {
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = p[i][j].eval(x);
                    }
                }
                m
            }
            Kind::Function(f) => f(x),
        }
    }

    pub fn det_at(&self, x: Point) -> f64 {
        det(&self.eval(x))
    }

    /// Polynomial degree, or `None` for a general function.
    pub fn degree(&self) -> Option<usize> {
        match &self.kind {
            Kind::Constant(_) => Some(0),
            Kind::Polynomial(p) => Some(p.iter().flatten().map(|q| q.degree() as usize).max().unwrap_or(0)),
            Kind::Function(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }
}

/// Largest singular value of a 3x3 matrix.
pub fn spectral_norm(m: &Mat3) -> f64 {
    let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    a.singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_and_determinants() {
        assert_eq!(MatrixCoefficient::identity().degree(), Some(0));
        let f = MatrixCoefficient::diagonal([2.0, 1.0, 1.0]);
        assert_eq!(f.mu, 2.0);
        assert_eq!(spectral_norm(&f.eval([0.0; 3])), 2.0);
        let x = Poly::var(0).scale(0.5) + Poly::constant(1.0);
        let one = Poly::constant(1.0);
        let p = [
            [x, Poly::zero(), Poly::zero()],
            [Poly::zero(), one.clone(), Poly::zero()],
            [Poly::zero(), Poly::zero(), one],
        ];
        let f = MatrixCoefficient::polynomial(p, 1.0);
        assert_eq!(f.degree(), Some(1));
        assert_eq!(f.det_at([1.0, 0.0, 0.0]), 1.5);
        assert_eq!(
            MatrixCoefficient::function(|_| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1.0).degree(),
            None
        );
    }
}
