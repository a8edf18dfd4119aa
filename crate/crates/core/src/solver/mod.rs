//! P1 finite elements for `min ∫ F(Du)` with Dirichlet data on a structured
//! 2-D grid.

mod problem;
mod solve;
mod stress;

pub use problem::{BoundaryData, Circle, Domain, GridProblem, Method, SolverOptions, Triangle};
pub use solve::{assemble_energy, energy, solve, GridSolution, HESSIAN_CAP};
pub use stress::{stress_field, StressField};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BoundaryExpr;
    use crate::integrand::make_power;
    use crate::linalg::Vec2;
    use approx::assert_relative_eq;

    fn problem(expr: &str, p: f64, n: usize) -> GridProblem {
        GridProblem::new(
            Domain::unit_square(),
            n,
            BoundaryData::Expression(BoundaryExpr::parse(expr).unwrap()),
            make_power(p).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let pr = problem("0", 2.0, 9);
        assert_eq!(energy(&pr, &vec![0.0; 81]).unwrap(), 0.0);
        let pr = problem("x", 2.0, 9);
        let u: Vec<f64> = (0..81).map(|a| pr.coords(a).x).collect();
        assert_relative_eq!(energy(&pr, &u).unwrap(), 0.5, epsilon = 1e-12);
        let pr = problem("x + y", 3.0, 9);
        let u: Vec<f64> = (0..81).map(|a| pr.coords(a).x + pr.coords(a).y).collect();
        assert_relative_eq!(energy(&pr, &u).unwrap(), 2f64.sqrt().powi(3) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        let pr = problem("sin(3*x) * y", 3.0, 9);
        let mut u = pr.initial_guess();
        for (i, x) in u.iter_mut().enumerate() {
            *x += 0.1 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
        }
        let (_, g) = assemble_energy(&pr, &u).unwrap();
        for &a in pr.free_nodes().iter().step_by(5) {
            let h = 1e-6;
            let mut up = u.clone();
            up[a] += h;
            let mut dn = u.clone();
            dn[a] -= h;
            let fd = (energy(&pr, &up).unwrap() - energy(&pr, &dn).unwrap()) / (2.0 * h);
            assert_relative_eq!(g[a], fd, max_relative = 1e-5, epsilon = 1e-10);
        }
    }

    #[test]
    fn affine_data_is_reproduced() {
        let pr = problem("2*x - 0.5*y + 1", 3.0, 9);
        let mut guess_off = pr.clone();
        guess_off.options.tol_rel = 1e-12;
        let sol = solve(&guess_off).unwrap();
        assert!(sol.converged);
        for a in 0..81 {
            let x = pr.coords(a);
            assert!((sol.u[a] - (2.0 * x.x - 0.5 * x.y + 1.0)).abs() < 1e-8);
        }
        let sf = stress_field(&sol);
        for m in sf.dv.iter() {
            assert!(m.norm() < 1e-7);
        }
        let v0 = sol.v[0];
        assert!(sol.v.iter().all(|v| (v - v0).norm() < 1e-8));
    }

    #[test]
    fn harmonic_stress_derivative() {
        let pr = problem("x^2 - y^2", 2.0, 17);
        let sol = solve(&pr).unwrap();
        assert!(sol.converged);
        let sf = stress_field(&sol);
        let a = 8 * 17 + 8;
        let dv = sf.dv_nodal[a].unwrap();
        assert_relative_eq!(dv.norm_squared(), 8.0, epsilon = 1e-8);
        assert!(sf.divergence <= sol.tolerance * 1.0001);
        let mid = sol.du.iter().zip(&pr.triangles).find(|(_, t)| (t.barycenter - Vec2::new(0.5, 0.5)).norm() < 0.05);
        assert!(mid.is_some());
    }

    #[test]
    fn corner_patches_are_fitted() {
        let pr = problem("x^2 - y^2", 2.0, 9);
        let sol = solve(&pr).unwrap();
        let sf = stress_field(&sol);
        assert!(sf.dv_nodal[0].is_some());
        assert!(sf.dv_nodal[80].is_some());
    }
}
