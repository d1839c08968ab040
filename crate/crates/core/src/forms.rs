//! Affine and quadratic functions of the price pair `r = (R_WP, R_LS)`.

use crate::equilibrium::IncentivePair;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine2 {
    pub lin: [f64; 2],
    pub constant: f64,
}

impl Affine2 {
    pub fn new(lin: [f64; 2], constant: f64) -> Self {
        Self { lin, constant }
    }

    pub fn eval(&self, r: [f64; 2]) -> f64 {
        self.lin[0] * r[0] + self.lin[1] * r[1] + self.constant
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new([k * self.lin[0], k * self.lin[1]], k * self.constant)
    }

    /// The coordinate `R_WP` (`idx = 0`) or `R_LS` (`idx = 1`).
    pub fn coordinate(idx: usize) -> Self {
        let mut lin = [0.0; 2];
        lin[idx] = 1.0;
        Self::new(lin, 0.0)
    }
}

/// `½ rᵀ H r + gᵀ r + c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadratic2 {
    pub hess: [[f64; 2]; 2],
    pub grad: [f64; 2],
    pub constant: f64,
}

impl Quadratic2 {
    pub fn linear(f: Affine2) -> Self {
        Self {
            hess: [[0.0; 2]; 2],
            grad: f.lin,
            constant: f.constant,
        }
    }

    /// Product of two affine functions.
    pub fn product(f: Affine2, g: Affine2) -> Self {
        let mut hess = [[0.0; 2]; 2];
        for (i, row) in hess.iter_mut().enumerate() {
            for (j, h) in row.iter_mut().enumerate() {
                *h = f.lin[i] * g.lin[j] + g.lin[i] * f.lin[j];
            }
        }
        Self {
            hess,
            grad: [
                f.lin[0] * g.constant + g.lin[0] * f.constant,
                f.lin[1] * g.constant + g.lin[1] * f.constant,
            ],
            constant: f.constant * g.constant,
        }
    }

    pub fn eval(&self, r: [f64; 2]) -> f64 {
        let h = &self.hess;
        0.5 * (h[0][0] * r[0] * r[0] + 2.0 * h[0][1] * r[0] * r[1] + h[1][1] * r[1] * r[1])
            + self.grad[0] * r[0]
            + self.grad[1] * r[1]
            + self.constant
    }

    pub fn eval_at(&self, p: IncentivePair) -> f64 {
        self.eval([p.r_wp, p.r_ls])
    }

    pub fn gradient(&self, r: [f64; 2]) -> [f64; 2] {
        let h = &self.hess;
        [
            h[0][0] * r[0] + h[0][1] * r[1] + self.grad[0],
            h[1][0] * r[0] + h[1][1] * r[1] + self.grad[1],
        ]
    }

    pub fn add_scaled(&mut self, other: &Quadratic2, k: f64) {
        for i in 0..2 {
            for j in 0..2 {
                self.hess[i][j] += k * other.hess[i][j];
            }
            self.grad[i] += k * other.grad[i];
        }
        self.constant += k * other.constant;
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = Quadratic2::default();
        out.add_scaled(self, k);
        out
    }

    pub fn det(&self) -> f64 {
        self.hess[0][0] * self.hess[1][1] - self.hess[0][1] * self.hess[1][0]
    }

    /// Eigenvalues of the Hessian, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let h = &self.hess;
        let mean = 0.5 * (h[0][0] + h[1][1]);
        let diff = 0.5 * (h[0][0] - h[1][1]);
        let rad = (diff * diff + h[0][1] * h[1][0]).max(0.0).sqrt();
        [mean - rad, mean + rad]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_pointwise() {
        let f = Affine2::new([2.0, -1.0], 3.0);
        let g = Affine2::new([0.5, 4.0], -2.0);
        let q = Quadratic2::product(f, g);
        for r in [[0.0, 0.0], [1.0, 2.0], [-3.5, 7.25]] {
            assert!((q.eval(r) - f.eval(r) * g.eval(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let q = Quadratic2 {
            hess: [[3.0, 0.0], [0.0, -1.0]],
            ..Default::default()
        };
        assert_eq!(q.eigenvalues(), [-1.0, 3.0]);
    }
}
