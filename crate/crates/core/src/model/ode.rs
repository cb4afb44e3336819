use super::{check_inputs, generator, ArrayConfig, PumpProfile};
use crate::linalg::RealMatrix;
use crate::Result;

/// Default RK4 step, mm.
pub const RK4_STEP: f64 = 1e-3;

/// Classical fourth-order Runge-Kutta integration of `dS/dz = Q S` from
/// `S(0) = I`, with the step shrunk so it divides `z` evenly.
pub fn propagator_rk4(
    cfg: &ArrayConfig,
    pump: &PumpProfile,
    z: f64,
    step: f64,
) -> Result<RealMatrix> {
    check_inputs(cfg, pump, z)?;
    let q = generator(cfg, pump)?;
    let dim = 2 * cfg.n;
    let mut s = RealMatrix::identity(dim, dim);
    let steps = (z / step).ceil() as usize;
    if steps == 0 {
        return Ok(s);
    }
    let h = z / steps as f64;
    for _ in 0..steps {
        let k1 = &q * &s;
        let k2 = &q * (&s + &k1 * (h / 2.0));
        let k3 = &q * (&s + &k2 * (h / 2.0));
        let k4 = &q * (&s + &k3 * h);
        s += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    }
    Ok(s)
}
