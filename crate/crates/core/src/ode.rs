//! Thin wrapper over the Dormand–Prince 5(4) integrator.

use ode_solvers::{DVector, Dopri5, System};

use crate::error::{Error, Result};

/// Integrates `system` from `t0` to `t1` and returns the state at `t1`.
pub(crate) fn integrate<S: System<f64, DVector<f64>>>(
    system: S,
    t0: f64,
    t1: f64,
    y0: DVector<f64>,
    rtol: f64,
    atol: f64,
) -> Result<DVector<f64>> {
    if t1 == t0 {
        return Ok(y0);
    }
    // Dense output of this integrator mis-evaluates the end point; the
    // sparse mode records the accepted steps, the last one landing on t1.
    let mut solver = Dopri5::new(system, t0, t1, t1 - t0, y0, rtol, atol);
    solver.set_output(ode_solvers::OutputType::Sparse);
    solver.integrate().map_err(|e| Error::Integrator {
        t: t0,
        reason: e.to_string(),
    })?;
    match (solver.x_out().last(), solver.y_out().last()) {
        (Some(&t), Some(y)) if (t - t1).abs() <= 1e-9 * t1.abs().max(1.0) => Ok(y.clone()),
        _ => Err(Error::Integrator {
            t: t0,
            reason: format!("no output at t = {t1}"),
        }),
    }
}
