//! Two-variable convex quadratic minimization over a polyhedron by
//! enumerating every possible active set.
//!
//! With two variables an optimum has at most two active constraints, so it
//! is the unconstrained stationary point, a stationary point along one
//! constraint line, or a vertex. A singular Hessian adds its stationary
//! line to the list of lines that vertices are formed from.

use crate::forms::Quadratic2;

/// `coef · r ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Lin {
    pub coef: [f64; 2],
    pub rhs: f64,
}

impl Lin {
    pub fn violation(&self, r: [f64; 2]) -> f64 {
        self.coef[0] * r[0] + self.coef[1] * r[1] - self.rhs
    }

    fn tolerance(&self, r: [f64; 2]) -> f64 {
        1e-14 * (1.0 + self.rhs.abs() + (self.coef[0] * r[0]).abs() + (self.coef[1] * r[1]).abs())
    }

    pub fn holds(&self, r: [f64; 2]) -> bool {
        self.violation(r) <= self.tolerance(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum QpOutcome {
    Optimal { point: [f64; 2], value: f64 },
    Infeasible,
    Unbounded,
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn intersect(l1: &Lin, l2: &Lin) -> Option<[f64; 2]> {
    let det = l1.coef[0] * l2.coef[1] - l1.coef[1] * l2.coef[0];
    if det.abs() <= 1e-12 * norm(l1.coef) * norm(l2.coef) {
        return None;
    }
    Some([
        (l1.rhs * l2.coef[1] - l1.coef[1] * l2.rhs) / det,
        (l1.coef[0] * l2.rhs - l1.rhs * l2.coef[0]) / det,
    ])
}

fn curvature(q: &Quadratic2, d: [f64; 2]) -> f64 {
    let h = &q.hess;
    d[0] * (h[0][0] * d[0] + h[0][1] * d[1]) + d[1] * (h[1][0] * d[0] + h[1][1] * d[1])
}

/// Minimizes `q` over `{r : coef_i · r ≤ rhs_i ∀i}`. `q` must be convex.
pub(crate) fn minimize(q: &Quadratic2, cons: &[Lin]) -> QpOutcome {
    let h = &q.hess;
    let h_scale = h[0][0].abs().max(h[1][1].abs()).max(h[0][1].abs());
    let flat_tol = 1e-12 * h_scale.max(1e-300);
    let mut candidates: Vec<[f64; 2]> = Vec::new();
    let mut lines: Vec<Lin> = cons.to_vec();

    // Unconstrained stationary point(s).
    let [lo, hi] = q.eigenvalues();
    if h_scale > 0.0 {
        if lo > 1e-10 * hi {
            let det = q.det();
            let g = q.grad;
            candidates.push([
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
            ]);
        } else {
            // Rank one: H = hi v vᵀ. Stationary iff g ∥ v.
            let v = if (h[0][0] - hi).abs() + h[0][1].abs() > (h[1][1] - hi).abs() + h[1][0].abs() {
                [-(h[0][1]), h[0][0] - hi]
            } else {
                [h[1][1] - hi, -(h[1][0])]
            };
            let nv = norm(v);
            if nv > 0.0 {
                let v = [v[0] / nv, v[1] / nv];
                let gv = dot(q.grad, v);
                let perp = [q.grad[0] - gv * v[0], q.grad[1] - gv * v[1]];
                if norm(perp) <= 1e-10 * (1.0 + norm(q.grad)) {
                    let line = Lin {
                        coef: v,
                        rhs: -gv / hi,
                    };
                    candidates.push([v[0] * line.rhs, v[1] * line.rhs]);
                    lines.push(line);
                }
            }
        }
    }

    // Stationary points along each constraint line.
    for c in cons {
        let nc = norm(c.coef);
        if nc == 0.0 {
            continue;
        }
        let p0 = [c.coef[0] * c.rhs / (nc * nc), c.coef[1] * c.rhs / (nc * nc)];
        let d = [-c.coef[1] / nc, c.coef[0] / nc];
        let kappa = curvature(q, d);
        if kappa > flat_tol {
            let s = -dot(q.gradient(p0), d) / kappa;
            candidates.push([p0[0] + s * d[0], p0[1] + s * d[1]]);
        }
    }

    // Vertices.
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if let Some(p) = intersect(&lines[i], &lines[j]) {
                candidates.push(p);
            }
        }
    }

    let mut best: Option<([f64; 2], f64)> = None;
    for p in candidates {
        if !(p[0].is_finite() && p[1].is_finite()) || !cons.iter().all(|c| c.holds(p)) {
            continue;
        }
        let v = q.eval(p);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((p, v));
        }
    }
    let Some((point, value)) = best else {
        return QpOutcome::Infeasible;
    };

    // Recession directions along which a flat objective still decreases.
    let grad = q.gradient(point);
    let g_scale = 1e-12 * (1.0 + norm(grad));
    for c in cons {
        let nc = norm(c.coef);
        if nc == 0.0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let d = [-sign * c.coef[1] / nc, sign * c.coef[0] / nc];
            let recedes = cons.iter().all(|o| dot(o.coef, d) <= 1e-12 * norm(o.coef));
            if recedes && curvature(q, d) <= flat_tol && dot(grad, d) < -g_scale {
                return QpOutcome::Unbounded;
            }
        }
    }
    QpOutcome::Optimal { point, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Affine2;

    fn bowl(cx: f64, cy: f64) -> Quadratic2 {
        // (x − cx)² + (y − cy)²
        let mut q =
            Quadratic2::product(Affine2::new([1.0, 0.0], -cx), Affine2::new([1.0, 0.0], -cx));
        q.add_scaled(
            &Quadratic2::product(Affine2::new([0.0, 1.0], -cy), Affine2::new([0.0, 1.0], -cy)),
            1.0,
        );
        q
    }

    fn floors(fx: f64, fy: f64) -> Vec<Lin> {
        vec![
            Lin {
                coef: [-1.0, 0.0],
                rhs: -fx,
            },
            Lin {
                coef: [0.0, -1.0],
                rhs: -fy,
            },
        ]
    }

    fn optimal(o: QpOutcome) -> ([f64; 2], f64) {
        match o {
            QpOutcome::Optimal { point, value } => (point, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn interior_minimum() {
        let (p, v) = optimal(minimize(&bowl(5.0, 7.0), &floors(1.0, 1.0)));
        assert!((p[0] - 5.0).abs() < 1e-12 && (p[1] - 7.0).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn vertex_when_gradient_points_outside() {
        let (p, _) = optimal(minimize(&bowl(-3.0, -2.0), &floors(1.0, 2.0)));
        assert_eq!(p, [1.0, 2.0]);
    }

    #[test]
    fn edge_minimum() {
        let (p, _) = optimal(minimize(&bowl(-3.0, 6.0), &floors(1.0, 2.0)));
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_polyhedron() {
        let mut cons = floors(1.0, 1.0);
        cons.push(Lin {
            coef: [1.0, 1.0],
            rhs: 1.0,
        });
        assert_eq!(minimize(&bowl(0.0, 0.0), &cons), QpOutcome::Infeasible);
    }

    #[test]
    fn rank_one_hessian() {
        // (x + y − 10)², minimizers form a line crossing the feasible region.
        let f = Affine2::new([1.0, 1.0], -10.0);
        let q = Quadratic2::product(f, f);
        let (p, v) = optimal(minimize(&q, &floors(2.0, 3.0)));
        assert!(v.abs() < 1e-9, "{p:?} {v}");
    }

    #[test]
    fn linear_objective_unbounded() {
        let q = Quadratic2::linear(Affine2::new([-1.0, 0.0], 0.0));
        assert_eq!(minimize(&q, &floors(0.0, 0.0)), QpOutcome::Unbounded);
        let q = Quadratic2::linear(Affine2::new([1.0, 2.0], 0.0));
        let (p, _) = optimal(minimize(&q, &floors(1.0, 1.5)));
        assert_eq!(p, [1.0, 1.5]);
    }
}
