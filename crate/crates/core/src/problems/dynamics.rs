use nalgebra::{DMatrix, DVector};

/// Continuous-time dynamics `x' = f(x, u)` with analytic Jacobians.
pub trait Dynamics {
    fn nx(&self) -> usize;
    fn nu(&self) -> usize;
    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// `(df/dx, df/du)`.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

/// One explicit RK4 step with its sensitivities.
#[derive(Debug, Clone)]
pub struct Rk4Step {
    pub next: DVector<f64>,
    pub d_x: DMatrix<f64>,
    pub d_u: DMatrix<f64>,
    /// Derivative with respect to the step length.
    pub d_h: DVector<f64>,
}

/// Classical RK4 with the control held constant over the step.
pub fn rk4_step<D: Dynamics + ?Sized>(dynamics: &D, x: &DVector<f64>, u: &DVector<f64>, h: f64) -> Rk4Step {
    let nx = dynamics.nx();
    let nu = dynamics.nu();
    let eye = DMatrix::<f64>::identity(nx, nx);

    let k1 = dynamics.rhs(x, u);
    let (a1, b1) = dynamics.jacobians(x, u);
    let k1_x = a1;
    let k1_u = b1;
    let k1_h = DVector::<f64>::zeros(nx);

    let x2 = x + &k1 * (0.5 * h);
    let k2 = dynamics.rhs(&x2, u);
    let (a2, b2) = dynamics.jacobians(&x2, u);
    let k2_x = &a2 * (&eye + &k1_x * (0.5 * h));
    let k2_u = &a2 * &k1_u * (0.5 * h) + b2;
    let k2_h = &a2 * (&k1 * 0.5 + &k1_h * (0.5 * h));

    let x3 = x + &k2 * (0.5 * h);
    let k3 = dynamics.rhs(&x3, u);
    let (a3, b3) = dynamics.jacobians(&x3, u);
    let k3_x = &a3 * (&eye + &k2_x * (0.5 * h));
    let k3_u = &a3 * &k2_u * (0.5 * h) + b3;
    let k3_h = &a3 * (&k2 * 0.5 + &k2_h * (0.5 * h));

    let x4 = x + &k3 * h;
    let k4 = dynamics.rhs(&x4, u);
    let (a4, b4) = dynamics.jacobians(&x4, u);
    let k4_x = &a4 * (&eye + &k3_x * h);
    let k4_u = &a4 * &k3_u * h + b4;
    let k4_h = &a4 * (&k3 + &k3_h * h);

    let incr = (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) / 6.0;
    let next = x + &incr * h;
    let d_x = &eye + (&k1_x + &k2_x * 2.0 + &k3_x * 2.0 + &k4_x) * (h / 6.0);
    let d_u = (&k1_u + &k2_u * 2.0 + &k3_u * 2.0 + &k4_u) * (h / 6.0);
    let d_h = &incr + (&k1_h + &k2_h * 2.0 + &k3_h * 2.0 + &k4_h) * (h / 6.0);
    debug_assert_eq!(d_u.shape(), (nx, nu));

    Rk4Step { next, d_x, d_u, d_h }
}

/// RK4 step without sensitivities.
pub fn rk4_next<D: Dynamics + ?Sized>(dynamics: &D, x: &DVector<f64>, u: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = dynamics.rhs(x, u);
    let k2 = dynamics.rhs(&(x + &k1 * (0.5 * h)), u);
    let k3 = dynamics.rhs(&(x + &k2 * (0.5 * h)), u);
    let k4 = dynamics.rhs(&(x + &k3 * h), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// `p'' = u` in `dim` dimensions; state is `(p, v)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MultiIntegrator {
    pub dim: usize,
}

impl Dynamics for MultiIntegrator {
    fn nx(&self) -> usize {
        2 * self.dim
    }

    fn nu(&self) -> usize {
        self.dim
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut dx = DVector::zeros(2 * self.dim);
        for i in 0..self.dim {
            dx[i] = x[self.dim + i];
            dx[self.dim + i] = u[i];
        }
        dx
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut a = DMatrix::zeros(2 * d, 2 * d);
        let mut b = DMatrix::zeros(2 * d, d);
        for i in 0..d {
            a[(i, d + i)] = 1.0;
            b[(d + i, i)] = 1.0;
        }
        (a, b)
    }
}
