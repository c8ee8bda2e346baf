//! The discretised integro-differential equation and its Newton solver.
//!
//! For `y⁽ᵏ⁾ + l·y + ∫₀¹ g(t, s) y⁽ⁿ⁾(s) y⁽ᵐ⁾(s) ds = f` with `y ≃ Yᵀ B`, the
//! derivative coefficients are `Y⁽ʲ⁾ = Jʲ Y − Σ_{i=1..j} Jⁱ Y₀⁽ʲ⁻ⁱ⁾` and the
//! equation becomes the quadratic system
//!
//! ```text
//! R(Y) = Y⁽ᵏ⁾ + Ṽᵀ Y + G C̃[Y⁽ⁿ⁾] L Y⁽ᵐ⁾ − F = 0.
//! ```
//!
//! Because `C̃[u] L w` is symmetric in `u` and `w`, the Jacobian is
//! `Jᵏ + Ṽᵀ + G C̃[Y⁽ⁿ⁾] L Jᵐ + G C̃[Y⁽ᵐ⁾] L Jⁿ`.

use nalgebra::{DMatrix, DVector};

use crate::basis::BasisConfig;
use crate::expr::Expr;
use crate::operators::{
    build_j, build_l, build_p, min_pivot, OpMatrix, OpRole, TripleProductTensor,
};
use crate::projection::{
    project_function, project_initial_conditions, project_kernel, CoeffVector,
};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Equation data: orders, data functions and initial values `y(0)..y⁽ᵏ⁻¹⁾(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    k: usize,
    n: usize,
    m: usize,
    l: Expr,
    g: Expr,
    f: Expr,
    y0: Vec<f64>,
}

impl ProblemSpec {
    /// Checks `n ≤ m < k`, `y0.len() == k`, and that `l`, `f` do not use `s`.
    pub fn new(
        k: usize,
        n: usize,
        m: usize,
        l: Expr,
        g: Expr,
        f: Expr,
        y0: Vec<f64>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidProblem(
                "equation order k must be at least 1".into(),
            ));
        }
        if !(n <= m && m < k) {
            return Err(Error::InvalidProblem(format!(
                "derivative orders must satisfy n <= m < k, got n = {n}, m = {m}, k = {k}"
            )));
        }
        if y0.len() != k {
            return Err(Error::InvalidProblem(format!(
                "expected {k} initial values, got {}",
                y0.len()
            )));
        }
        if let Some(v) = y0.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "initial value {v} is not finite"
            )));
        }
        for (name, e) in [("l", &l), ("f", &f)] {
            if e.uses_s() {
                return Err(Error::InvalidProblem(format!(
                    "{name}(t) must not reference the integration variable s"
                )));
            }
        }
        Ok(Self {
            k,
            n,
            m,
            l,
            g,
            f,
            y0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> &Expr {
        &self.l
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// Projection of the constant `y(0)`.
    IcConstant,
    /// Projection of `Σ_{i<k} y⁽ⁱ⁾(0) tⁱ/i!`, the solution of `y⁽ᵏ⁾ = 0` with
    /// the given initial values. Its `k`-th derivative coefficients vanish.
    IcTaylor,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Target for `‖R‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_guess: InitialGuess,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            initial_guess: InitialGuess::IcTaylor,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub y: CoeffVector,
    /// Newton steps taken.
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// `‖R‖∞` at the initial guess and after every step.
    pub residual_history: Vec<f64>,
}

/// Maximum number of step halvings per Newton iteration.
const MAX_HALVINGS: usize = 10;

/// `Y⁽ⁿ⁾ = Jⁿ Y − Σ_{l=1..n} Jˡ Y₀⁽ⁿ⁻ˡ⁾`. `y0[i]` holds `Y₀⁽ⁱ⁾`; at least
/// `order` of them are needed.
pub fn derivative_coeffs(
    y: &CoeffVector,
    order: usize,
    y0: &[CoeffVector],
    j: &OpMatrix,
) -> Result<CoeffVector> {
    if y0.len() < order {
        return Err(Error::MissingInitialConditions {
            order,
            got: y0.len(),
        });
    }
    for v in std::iter::once(y).chain(&y0[..order]) {
        if v.len() != j.dim() {
            return Err(Error::DimensionMismatch {
                expected: j.dim(),
                got: v.len(),
            });
        }
    }
    let powers = matrix_powers(j.matrix(), order);
    let mut out = &powers[order] * y.values();
    for l in 1..=order {
        out -= &powers[l] * y0[order - l].values();
    }
    CoeffVector::new(out, *y.cfg())
}

/// `[I, A, A², …, A^max]`.
fn matrix_powers(a: &DMatrix<f64>, max: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(DMatrix::identity(a.nrows(), a.ncols()));
    for p in 1..=max {
        out.push(a * &out[p - 1]);
    }
    out
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// All operators and projected data for one problem at one `(r, q)`.
/// Evaluating the residual or Jacobian does not mutate it.
#[derive(Debug, Clone)]
pub struct Discretization {
    cfg: BasisConfig,
    k: usize,
    n: usize,
    m: usize,
    f: CoeffVector,
    g: OpMatrix,
    vtilde: OpMatrix,
    l: OpMatrix,
    j: OpMatrix,
    j_powers: Vec<DMatrix<f64>>,
    p_t: DMatrix<f64>,
    y0: Vec<CoeffVector>,
    /// `Σ_{i=1..j} Jⁱ Y₀⁽ʲ⁻ⁱ⁾` for `j = 0..=k`.
    ic_offsets: Vec<DVector<f64>>,
    tensor: TripleProductTensor,
}

impl Discretization {
    pub fn new(problem: &ProblemSpec, cfg: &BasisConfig, quad: &GaussLegendre) -> Result<Self> {
        let f = project_function(|t| Ok(problem.f.eval(t, None)?), cfg, quad)?;
        let g = project_kernel(|t, s| Ok(problem.g.eval(t, Some(s))?), cfg, quad)?.into_op_matrix();
        let tensor = TripleProductTensor::new(cfg.r());
        let vtilde = if problem.l.is_zero() {
            DMatrix::zeros(cfg.dim(), cfg.dim())
        } else {
            let v = project_function(|t| Ok(problem.l.eval(t, None)?), cfg, quad)?;
            tensor.coeff_matrix(v.values(), cfg)
        };
        let j = build_j(cfg)?;
        let j_powers = matrix_powers(j.matrix(), problem.k);
        let y0 = project_initial_conditions(&problem.y0, cfg);
        let ic_offsets = (0..=problem.k)
            .map(|order| {
                (1..=order).fold(DVector::zeros(cfg.dim()), |acc, l| {
                    acc + &j_powers[l] * y0[order - l].values()
                })
            })
            .collect();
        Ok(Self {
            cfg: *cfg,
            k: problem.k,
            n: problem.n,
            m: problem.m,
            f,
            g,
            vtilde: OpMatrix::new(OpRole::Vtilde, *cfg, vtilde)?,
            l: build_l(cfg),
            j,
            j_powers,
            p_t: build_p(cfg).into_matrix().transpose(),
            y0,
            ic_offsets,
            tensor,
        })
    }

    pub fn cfg(&self) -> &BasisConfig {
        &self.cfg
    }

    /// Projected right-hand side `F`.
    pub fn rhs(&self) -> &CoeffVector {
        &self.f
    }

    pub fn kernel(&self) -> &OpMatrix {
        &self.g
    }

    pub fn vtilde(&self) -> &OpMatrix {
        &self.vtilde
    }

    pub fn product_integral_matrix(&self) -> &OpMatrix {
        &self.l
    }

    pub fn derivative_transform(&self) -> &OpMatrix {
        &self.j
    }

    pub fn initial_vectors(&self) -> &[CoeffVector] {
        &self.y0
    }

    pub fn tensor(&self) -> &TripleProductTensor {
        &self.tensor
    }

    fn check_len(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// `Y⁽ʲ⁾` for `j ≤ k` using the cached powers of `J`.
    pub fn derivative(&self, y: &DVector<f64>, order: usize) -> DVector<f64> {
        assert!(
            order <= self.k,
            "derivative order {order} exceeds k = {}",
            self.k
        );
        &self.j_powers[order] * y - &self.ic_offsets[order]
    }

    /// `R(Y)`; a zero of this map is the discrete solution.
    pub fn residual(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(y)?;
        let yk = self.derivative(y, self.k);
        let yn = self.derivative(y, self.n);
        let ym = self.derivative(y, self.m);
        let integral = self.g.matrix() * self.tensor.product_integral(&yn, &ym, &self.cfg);
        Ok(yk + self.vtilde.matrix().tr_mul(y) + integral - self.f.values())
    }

    /// Analytic Jacobian `∂R/∂Y`.
    pub fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(y)?;
        let yn = self.derivative(y, self.n);
        let ym = self.derivative(y, self.m);
        let l_diag = self.l.matrix().diagonal();
        let ct_l = |u: &DVector<f64>| {
            let mut c = self.tensor.coeff_matrix(u, &self.cfg);
            for (col, d) in l_diag.iter().enumerate() {
                c.column_mut(col).scale_mut(*d);
            }
            c
        };
        let bilinear = ct_l(&yn) * &self.j_powers[self.m] + ct_l(&ym) * &self.j_powers[self.n];
        Ok(&self.j_powers[self.k] + self.vtilde.matrix().transpose() + self.g.matrix() * bilinear)
    }

    pub fn initial_vector(&self, guess: &InitialGuess) -> Result<DVector<f64>> {
        match guess {
            InitialGuess::Zero => Ok(DVector::zeros(self.cfg.dim())),
            InitialGuess::IcConstant => Ok(self.y0[0].values().clone()),
            // Horner in Pᵀ: Y₀⁽⁰⁾ + Pᵀ(Y₀⁽¹⁾ + Pᵀ(Y₀⁽²⁾ + …))
            InitialGuess::IcTaylor => Ok(self
                .y0
                .iter()
                .rev()
                .fold(DVector::zeros(self.cfg.dim()), |acc, y0| {
                    &self.p_t * acc + y0.values()
                })),
            InitialGuess::Custom(v) => {
                let v = DVector::from_column_slice(v);
                self.check_len(&v)?;
                Ok(v)
            }
        }
    }

    /// Damped Newton iteration on `R(Y) = 0`.
    ///
    /// Each step tries the full Newton update and halves it (up to ten
    /// times) until `‖R‖∞` decreases. If no halving helps, iteration stops
    /// and the report carries `converged = false`.
    pub fn newton_solve(&self, options: &SolveOptions) -> Result<SolveReport> {
        options.validate()?;
        let mut y = self.initial_vector(&options.initial_guess)?;
        let mut r = self.residual(&y)?;
        let mut norm = inf_norm(&r);
        let mut history = vec![norm];
        let mut iterations = 0;

        while norm > options.tol && iterations < options.max_iter {
            iterations += 1;
            let jac = self.jacobian(&y)?;
            let lu = jac.lu();
            if min_pivot(lu.u().diagonal().iter()) == 0.0 {
                return Err(Error::SingularJacobian {
                    iteration: iterations,
                });
            }
            let step = lu
                .solve(&r)
                .filter(|s| s.iter().all(|v| v.is_finite()))
                .ok_or(Error::SingularJacobian {
                    iteration: iterations,
                })?;

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial = &y - lambda * &step;
                let tr = self.residual(&trial)?;
                let tn = inf_norm(&tr);
                if tn < norm {
                    accepted = Some((trial, tr, tn));
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((ny, nr, nn)) => {
                    y = ny;
                    r = nr;
                    norm = nn;
                    history.push(norm);
                }
                None => break,
            }
        }

        Ok(SolveReport {
            y: CoeffVector::new(y, self.cfg)?,
            iterations,
            final_residual: norm,
            converged: norm <= options.tol,
            residual_history: history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_p;
    use approx::assert_abs_diff_eq;

    fn cfg(r: usize, q: usize) -> BasisConfig {
        BasisConfig::new(r, q).unwrap()
    }

    fn expr(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn project(src: &str, c: &BasisConfig) -> CoeffVector {
        let e = expr(src);
        project_function(|t| Ok(e.eval(t, None)?), c, &GaussLegendre::default()).unwrap()
    }

    #[test]
    fn problem_validation() {
        let ok =
            |k, n, m, y0: Vec<f64>| ProblemSpec::new(k, n, m, expr("0"), expr("0"), expr("1"), y0);
        assert!(ok(2, 0, 1, vec![0.0, 0.0]).is_ok());
        assert!(ok(2, 1, 0, vec![0.0, 0.0]).is_err());
        assert!(ok(2, 0, 2, vec![0.0, 0.0]).is_err());
        assert!(ok(2, 0, 1, vec![0.0]).is_err());
        assert!(ok(0, 0, 0, vec![]).is_err());
        assert!(ok(1, 0, 0, vec![f64::NAN]).is_err());
        let bad_f = ProblemSpec::new(1, 0, 0, expr("0"), expr("s"), expr("s*t"), vec![0.0]);
        assert!(matches!(bad_f, Err(Error::InvalidProblem(msg)) if msg.contains("f(t)")));
        let bad_l = ProblemSpec::new(1, 0, 0, expr("s"), expr("s"), expr("t"), vec![0.0]);
        assert!(bad_l.is_err());
    }

    #[test]
    fn derivative_order_zero_is_identity() {
        let c = cfg(3, 4);
        let j = build_j(&c).unwrap();
        let y = project("exp(t)", &c);
        assert_eq!(derivative_coeffs(&y, 0, &[], &j).unwrap(), y);
    }

    #[test]
    fn derivative_of_t_squared() {
        let c = cfg(3, 4);
        let j = build_j(&c).unwrap();
        let y = project("t^2", &c);
        let y0 = project_initial_conditions(&[0.0], &c);
        let d = derivative_coeffs(&y, 1, &y0, &j).unwrap();
        assert_abs_diff_eq!(
            d.values().clone(),
            project("2*t", &c).into_values(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn derivative_of_t_recovers_one() {
        let c = cfg(3, 4);
        let j = build_j(&c).unwrap();
        let d = derivative_coeffs(&project("t", &c), 1, &[CoeffVector::zeros(c)], &j).unwrap();
        assert_abs_diff_eq!(
            d.values().clone(),
            CoeffVector::constant(1.0, c).into_values(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn derivative_needs_initial_vectors() {
        let c = cfg(2, 2);
        let j = build_j(&c).unwrap();
        let err = derivative_coeffs(&CoeffVector::zeros(c), 2, &[CoeffVector::zeros(c)], &j);
        assert!(matches!(
            err,
            Err(Error::MissingInitialConditions { order: 2, got: 1 })
        ));
    }

    #[test]
    fn derivative_then_integrate_round_trips() {
        // Pᵀ Y⁽¹⁾ + Y₀ = Y for any Y
        let c = cfg(4, 3);
        let j = build_j(&c).unwrap();
        let p = build_p(&c);
        let y = CoeffVector::new(DVector::from_fn(12, |i, _| (1.3 * i as f64).sin()), c).unwrap();
        let y0 = vec![CoeffVector::constant(0.7, c)];
        let d = derivative_coeffs(&y, 1, &y0, &j).unwrap();
        let back = p.matrix().tr_mul(d.values()) + y0[0].values();
        assert_abs_diff_eq!(back, y.values().clone(), epsilon = 1e-12);
    }

    fn linear_problem() -> ProblemSpec {
        ProblemSpec::new(1, 0, 0, expr("0"), expr("0"), expr("1"), vec![0.0]).unwrap()
    }

    #[test]
    fn zero_kernel_gives_linear_system() {
        let c = cfg(3, 4);
        let d = Discretization::new(&linear_problem(), &c, &GaussLegendre::default()).unwrap();
        assert!(d.vtilde().matrix().iter().all(|v| *v == 0.0));
        let y = DVector::from_fn(12, |i, _| i as f64 * 0.1);
        let expect = d.derivative(&y, 1) - d.rhs().values();
        assert_abs_diff_eq!(d.residual(&y).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn linear_case_solves_in_one_step() {
        let c = cfg(3, 4);
        let d = Discretization::new(&linear_problem(), &c, &GaussLegendre::default()).unwrap();
        let report = d.newton_solve(&SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_abs_diff_eq!(
            report.y.values().clone(),
            project("t", &c).into_values(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn potential_term_enters_through_vtilde() {
        // y = t² solves y′ + 2y = 2t + 2t²
        let c = cfg(3, 4);
        let p = ProblemSpec::new(
            1,
            0,
            0,
            expr("2"),
            expr("0"),
            expr("2*t + 2*t^2"),
            vec![0.0],
        )
        .unwrap();
        let d = Discretization::new(&p, &c, &GaussLegendre::default()).unwrap();
        let report = d.newton_solve(&SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert_abs_diff_eq!(
            report.y.values().clone(),
            project("t^2", &c).into_values(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = cfg(3, 2);
        let p = ProblemSpec::new(
            2,
            0,
            1,
            expr("1 + t"),
            expr("exp(-s*t)"),
            expr("sin(t)"),
            vec![0.5, -0.25],
        )
        .unwrap();
        let d = Discretization::new(&p, &c, &GaussLegendre::default()).unwrap();
        let y = DVector::from_fn(6, |i, _| 0.3 * (i as f64 + 1.0).cos());
        let jac = d.jacobian(&y).unwrap();
        let h = 1e-6;
        for col in 0..6 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[col] += h;
            ym[col] -= h;
            let fd = (d.residual(&yp).unwrap() - d.residual(&ym).unwrap()) / (2.0 * h);
            for row in 0..6 {
                let a = jac[(row, col)];
                assert!(
                    (a - fd[row]).abs() <= 1e-5 * a.abs().max(1.0),
                    "({row},{col}) {a} vs {}",
                    fd[row]
                );
            }
        }
    }

    #[test]
    fn custom_initial_guess_length_checked() {
        let c = cfg(2, 2);
        let d = Discretization::new(&linear_problem(), &c, &GaussLegendre::default()).unwrap();
        let opts = SolveOptions {
            initial_guess: InitialGuess::Custom(vec![0.0; 3]),
            ..SolveOptions::default()
        };
        assert!(matches!(
            d.newton_solve(&opts),
            Err(Error::DimensionMismatch { .. })
        ));
        let opts = SolveOptions {
            tol: 0.0,
            ..SolveOptions::default()
        };
        assert!(d.newton_solve(&opts).is_err());
        let opts = SolveOptions {
            max_iter: 0,
            ..SolveOptions::default()
        };
        assert!(d.newton_solve(&opts).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let c = cfg(3, 4);
        let p = ProblemSpec::new(
            1,
            0,
            0,
            expr("0"),
            expr("-s*t"),
            expr("6*t^2 - t/2"),
            vec![0.0],
        )
        .unwrap();
        let d = Discretization::new(&p, &c, &GaussLegendre::default()).unwrap();
        let opts = SolveOptions {
            tol: 1e-14,
            max_iter: 1,
            initial_guess: InitialGuess::Zero,
        };
        let report = d.newton_solve(&opts).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(!report.converged);
        assert!(report.final_residual > opts.tol);
        assert_eq!(report.residual_history.len(), 2);
    }
}
