//! Classical four-stage Runge-Kutta over flat state buffers, shared by the
//! characteristic integrator and the classical reference solver.

use crate::error::Result;

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// One RK4 step from `(t, y)` of size `dt`.
pub fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut k1 = vec![0.0; y.len()];
    sys.eval(t, y, &mut k1)?;
    rk4_step_from(sys, t, y, dt, &k1)
}

/// RK4 step reusing an already evaluated first stage `k1 = f(t, y)`.
pub fn rk4_step_from<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], dt: f64, k1: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    debug_assert_eq!(sys.dim(), n);
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let half = 0.5 * dt;

    for i in 0..n {
        tmp[i] = y[i] + half * k1[i];
    }
    sys.eval(t + half, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + half * k2[i];
    }
    sys.eval(t + half, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    sys.eval(t + dt, &tmp, &mut k4)?;

    let sixth = dt / 6.0;
    Ok((0..n)
        .map(|i| y[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
        .collect())
}
