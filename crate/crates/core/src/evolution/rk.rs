//! Adaptive Dormand–Prince 5(4) integrator for matrix-valued ODEs.

use nalgebra::DMatrix;

use crate::{FluxError, Result, C64};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus embedded fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

fn comb(y: &DMatrix<C64>, h: f64, terms: &[(f64, &DMatrix<C64>)]) -> DMatrix<C64> {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.zip_apply(k, |o, v| *o += v * (c * h));
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` with step control on the
/// mixed error `|err| / (atol + rtol·max(|y|, |y_new|))`, steps capped at `h_max`.
pub fn dopri5<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: DMatrix<C64>,
    h_max: f64,
    rtol: f64,
    atol: f64,
) -> Result<(DMatrix<C64>, RkStats)>
where
    F: Fn(f64, &DMatrix<C64>) -> DMatrix<C64>,
{
    let mut stats = RkStats::default();
    let mut t = t0;
    let mut y = y0;
    if t1 <= t0 {
        return Ok((y, stats));
    }
    let mut h = (h_max.min(t1 - t0)) * 0.1;
    let mut k1 = f(t, &y);
    while t < t1 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(FluxError::numerical("adaptive integrator exceeded its step budget"));
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &comb(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = comb(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);
        let zero = DMatrix::<C64>::zeros(y.nrows(), y.ncols());
        let err = comb(&zero, h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let mut norm = 0.0f64;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
            let scale = atol + rtol * a.norm().max(b.norm());
            norm = norm.max(e.norm() / scale);
        }
        if !norm.is_finite() {
            return Err(FluxError::numerical("adaptive integrator produced non-finite values"));
        }
        if norm <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(h_max);
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(FluxError::numerical(format!("adaptive step underflow at t = {t}")));
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let y0 = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let rate = C64::new(-0.3, 2.0);
        let (y, stats) = dopri5(|_, y| y * rate, 0.0, 3.0, y0, 0.5, 1e-12, 1e-12).unwrap();
        let exact = (rate * 3.0).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-10);
        assert!(stats.accepted > 0);
    }
}
