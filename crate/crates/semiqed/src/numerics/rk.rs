//! Adaptive Dormand-Prince 5(4) integration for complex vector states.
//!
//! The state is a flat `Array1<Complex64>`; matrix systems are flattened by
//! the callers. Step-size control follows the standard embedded-error PI-free
//! scheme with the step clipped so that requested output times are hit
//! exactly.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::{C64, CVec};

/// Butcher tableau coefficients of Dormand-Prince 5(4).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// 5th-order weights minus 4th-order weights (error estimator).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integration statistics reported alongside solutions.
#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

/// Integrate `dy/dt = f(t, y)` from `t0` through every time in `t_out`
/// (strictly increasing, `t_out[0] > t0` or equal), returning the state at
/// each requested time.
///
/// `rtol`/`atol` control the embedded error test per component.
pub fn integrate_adaptive<F>(
    mut f: F,
    t0: f64,
    y0: &CVec,
    t_out: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<(Vec<CVec>, SolverStats)>
where
    F: FnMut(f64, &CVec) -> CVec,
{
    assert!(rtol > 0.0 && atol > 0.0, "tolerances must be positive");
    assert!(!t_out.is_empty(), "need at least one output time");
    let forward = *t_out.last().unwrap() >= t0;
    for w in t_out.windows(2) {
        assert!(
            (forward && w[1] > w[0]) || (!forward && w[1] < w[0]),
            "output times must be strictly monotone"
        );
    }

    let mut stats = SolverStats::default();
    let mut outputs = Vec::with_capacity(t_out.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    stats.rhs_evaluations += 1;

    let span = (*t_out.last().unwrap() - t0).abs().max(f64::MIN_POSITIVE);
    let dir = if forward { 1.0 } else { -1.0 };
    let mut h = (0.01 * span).min(span) * dir;
    let h_min = span * 1e-14;

    let mut out_idx = 0;
    // Emit any output times equal to t0.
    while out_idx < t_out.len() && (t_out[out_idx] - t0).abs() <= span * 1e-15 {
        outputs.push(y.clone());
        out_idx += 1;
    }

    let mut ks: [CVec; 7] = [
        k1.clone(),
        Array1::zeros(y.len()),
        Array1::zeros(y.len()),
        Array1::zeros(y.len()),
        Array1::zeros(y.len()),
        Array1::zeros(y.len()),
        Array1::zeros(y.len()),
    ];

    while out_idx < t_out.len() {
        let t_target = t_out[out_idx];
        let mut h_step = h;
        let mut clipped = false;
        if (t + h_step - t_target) * dir > 0.0 {
            h_step = t_target - t;
            clipped = true;
        }
        if h_step.abs() < h_min {
            return Err(Error::Solver(format!(
                "step size underflow at t = {t:.6e} (|h| = {:.3e})",
                h_step.abs()
            )));
        }

        ks[0] = k1.clone();
        for stage in 0..6 {
            let mut y_stage = y.clone();
            for (j, k) in ks.iter().take(stage + 1).enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    y_stage.scaled_add(C64::new(h_step * a, 0.0), k);
                }
            }
            ks[stage + 1] = f(t + C[stage] * h_step, &y_stage);
            stats.rhs_evaluations += 1;
        }

        // 5th-order solution: stage 6 already evaluates f at it (FSAL).
        let mut y5 = y.clone();
        for (j, k) in ks.iter().take(6).enumerate() {
            let a = A[5][j];
            if a != 0.0 {
                y5.scaled_add(C64::new(h_step * a, 0.0), k);
            }
        }

        // Embedded error estimate.
        let mut err_norm_sq = 0.0;
        let n = y.len();
        for i in 0..n {
            let mut e = C64::new(0.0, 0.0);
            for (j, k) in ks.iter().enumerate() {
                if E[j] != 0.0 {
                    e += k[i] * C64::new(h_step * E[j], 0.0);
                }
            }
            let scale = atol + rtol * y[i].norm().max(y5[i].norm());
            let r = e.norm() / scale;
            err_norm_sq += r * r;
        }
        let err = (err_norm_sq / n as f64).sqrt();

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };

        if err <= 1.0 {
            t += h_step;
            y = y5;
            k1 = ks[6].clone();
            stats.accepted_steps += 1;
            if clipped || (t - t_target).abs() <= span * 1e-14 {
                outputs.push(y.clone());
                out_idx += 1;
                while out_idx < t_out.len()
                    && (t_out[out_idx] - t).abs() <= span * 1e-15
                {
                    outputs.push(y.clone());
                    out_idx += 1;
                }
            }
            // A clipped step says nothing about the natural step size; keep
            // the controller's step in that case.
            if !clipped {
                h = h_step * factor;
            }
        } else {
            stats.rejected_steps += 1;
            h = h_step * factor;
        }
    }

    Ok((outputs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn exponential_decay() {
        let y0 = array![C64::new(1.0, 0.0)];
        let (ys, stats) = integrate_adaptive(
            |_, y| y.mapv(|v| -v),
            0.0,
            &y0,
            &[0.5, 1.0, 2.0],
            1e-10,
            1e-12,
        )
        .unwrap();
        assert_abs_diff_eq!(ys[0][0].re, (-0.5f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(ys[1][0].re, (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(ys[2][0].re, (-2.0f64).exp(), epsilon = 1e-9);
        assert!(stats.accepted_steps > 0);
    }

    #[test]
    fn complex_rotation_is_unitary() {
        // dy/dt = -i y, y(t) = e^{-it}.
        let y0 = array![C64::new(1.0, 0.0)];
        let t = 3.0;
        let (ys, _) = integrate_adaptive(
            |_, y| y.mapv(|v| -C64::i() * v),
            0.0,
            &y0,
            &[t],
            1e-11,
            1e-13,
        )
        .unwrap();
        let expect = C64::new(t.cos(), -t.sin());
        assert!((ys[0][0] - expect).norm() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let y0 = array![C64::new(1.0, 0.0)];
        let (ys, _) = integrate_adaptive(|_, y| y.clone(), 0.0, &y0, &[-1.0], 1e-10, 1e-12)
            .unwrap();
        assert_abs_diff_eq!(ys[0][0].re, (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // dy/dt = cos(t), y(T) = sin(T).
        let y0 = array![C64::new(0.0, 0.0)];
        let (ys, _) = integrate_adaptive(
            |t, _| array![C64::new(t.cos(), 0.0)],
            0.0,
            &y0,
            &[1.7],
            1e-11,
            1e-13,
        )
        .unwrap();
        assert_abs_diff_eq!(ys[0][0].re, 1.7f64.sin(), epsilon = 1e-10);
    }
}
