//! Minimum-energy reconstruction `(P_Ω Φ_sp*)† y` by CGLS.

use crate::acquisition::MeasurementSet;
use crate::coherence::SamplingPlan;
use crate::error::Result;
use crate::transforms::{norm2, Operators, C64};

use super::{check_inputs, data_residual, Method, RecoveryResult, SolverConfig, TraceRow};

/// CGLS relative stopping threshold on `‖A* r‖ / ‖A* y‖`.
const CGLS_TOL: f64 = 1e-12;

/// Minimum-norm least-squares solution of `P_Ω Φ_sp* x = y`.
///
/// CGLS started from zero stays in the row space of `P_Ω Φ_sp*`, so its limit
/// is the pseudo-inverse solution. `A* A = Φ_sp diag(c) Φ_sp*` has one
/// eigenvalue per distinct multiplicity `c`, so it converges in a handful of
/// iterations; repeated rows are handled without special casing.
pub fn solve_me(
    ops: &Operators,
    y: &MeasurementSet,
    plan: &SamplingPlan,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_inputs(y, plan)?;
    let dims = ops.dims;
    let n = dims.n_hs();
    let pos: Vec<usize> = y.omega.iter().map(|&l| dims.storage_of_flat(l)).collect();

    // A = P_Ω Φ* with Φ* applied in the sensing domain; x lives in volume order.
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut w = x.to_vec();
        ops.measure(&mut w);
        pos.iter().map(|&q| w[q]).collect()
    };
    let apply_adj = |r: &[C64]| -> Vec<C64> {
        let mut w = vec![C64::default(); n];
        for (&q, &v) in pos.iter().zip(r) {
            w[q] += v;
        }
        ops.unmeasure(&mut w);
        w
    };

    let mut x = vec![C64::default(); n];
    let mut r = y.y.clone();
    let mut g = apply_adj(&r);
    let g0 = norm2(&g);
    let mut p = g.clone();
    let mut gamma = g0 * g0;
    let mut converged = g0 == 0.0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let q = apply(&p);
        let alpha = gamma / q.iter().map(|v| v.norm_sqr()).sum::<f64>();
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        g = apply_adj(&r);
        let gn = norm2(&g);
        trace.push(TraceRow {
            iteration: iterations,
            objective: norm2(&x),
            residual: norm2(&r),
            gap: gn / g0,
        });
        if gn <= CGLS_TOL * g0 {
            converged = true;
            break;
        }
        let gamma_new = gn * gn;
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi = gi + beta * *pi);
    }

    let mut w = x.clone();
    ops.measure(&mut w);
    let residual = data_residual(dims, &y.y, &y.omega, &plan.weights, &w);
    let mut s = x;
    ops.analyze(&mut s);
    Ok(RecoveryResult::finish(
        ops,
        Method::MinEnergy,
        s,
        residual,
        None,
        iterations,
        converged,
        trace,
    ))
}
