//! Equality-constrained box-bounded minimization: an augmented-Lagrangian
//! outer loop around a projected quasi-Newton inner solver. Search directions
//! come from truncated conjugate gradients on the true merit Hessian,
//! preconditioned by its Gauss-Newton part, so subproblem conditioning does
//! not degrade as the penalty grows and constraint curvature weighted by
//! large multipliers cannot stall the descent.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::transcription::{Eval, GradMode, Transcription};
use super::{OcpError, SolveTolerances};

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 20;
const CG_MAX: usize = 40;
const CG_TOL: f64 = 0.05;
const MU_INIT: f64 = 10.0;
const MU_GROWTH: f64 = 10.0;
const MU_MAX: f64 = 1e8;

pub(crate) struct AlOutcome {
    pub z: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub grad_mode: GradMode,
}

fn infnorm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(z: &mut [f64], lb: &[f64], ub: &[f64]) {
    for i in 0..z.len() {
        z[i] = z[i].clamp(lb[i], ub[i]);
    }
}

/// Pick the derivative path: dual-number Jacobians, checked once against
/// central differences at the starting point; fall back if they disagree.
fn pick_grad_mode(t: &Transcription, z: &[f64]) -> Result<GradMode, OcpError> {
    let dual = t.eval_mode(z, true, GradMode::Dual)?;
    let fd = t.eval_mode(z, true, GradMode::FiniteDiff)?;
    let (dj, fj) = (
        dual.node_jac.as_ref().unwrap(),
        fd.node_jac.as_ref().unwrap(),
    );
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for (a, b) in dj.iter().zip(fj) {
        for (x, y) in a.iter().zip(b.iter()) {
            worst = worst.max((x - y).abs());
            scale = scale.max(x.abs());
        }
    }
    Ok(if worst / scale <= 1e-4 {
        GradMode::Dual
    } else {
        GradMode::FiniteDiff
    })
}

struct Merit<'a> {
    t: &'a Transcription,
    lambda: &'a [f64],
    mu: f64,
    mode: GradMode,
}

impl Merit<'_> {
    fn value(&self, ev: &Eval) -> f64 {
        let mut m = ev.cost;
        for (ci, li) in ev.c.iter().zip(self.lambda) {
            m += li * ci + 0.5 * self.mu * ci * ci;
        }
        m
    }

    fn value_at(&self, z: &[f64]) -> Result<f64, OcpError> {
        Ok(self.value(&self.t.eval_mode(z, false, self.mode)?))
    }

    /// Merit gradient from an evaluation that carries node Jacobians.
    fn grad_from(&self, z: &[f64], ev: &Eval) -> Vec<f64> {
        let y: Vec<f64> = ev
            .c
            .iter()
            .zip(self.lambda)
            .map(|(ci, li)| li + self.mu * ci)
            .collect();
        let mut g = self.t.cost_grad(z);
        let jt = self.t.jac_tvec(z, ev, &y);
        for i in 0..g.len() {
            g[i] += jt[i];
        }
        g
    }
}

/// Components free to move: not pressed against an active bound.
fn free_mask(z: &[f64], g: &[f64], lb: &[f64], ub: &[f64]) -> Vec<bool> {
    let eps = 1e-10;
    (0..z.len())
        .map(|i| {
            let at_lo = z[i] <= lb[i] + eps && g[i] > 0.0;
            let at_hi = z[i] >= ub[i] - eps && g[i] < 0.0;
            !(at_lo || at_hi)
        })
        .collect()
}

/// Sup-norm of the projected gradient, the box-aware stationarity measure.
fn projected_gradient_norm(z: &[f64], g: &[f64], lb: &[f64], ub: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..z.len() {
        let step = (z[i] - g[i]).clamp(lb[i], ub[i]) - z[i];
        worst = worst.max(step.abs());
    }
    worst
}

/// How the inner minimization ended. Both `Gtol` and `Stall` mean the
/// subproblem is solved as far as floating point allows; `MaxIters` means it
/// was merely truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerExit {
    Gtol,
    Stall,
    MaxIters,
}

/// Truncated preconditioned CG direction for the free block: solves
/// H d ≈ -g where H is the true merit Hessian applied through `hv` and the
/// preconditioner is the Cholesky factor of its Gauss-Newton part. Stops on
/// relative residual reduction, iteration cap, or nonpositive curvature; the
/// result is a descent direction whenever g is nonzero on the free block.
fn cg_direction(
    g_free: &DVector<f64>,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    dmax: f64,
    mut hv: impl FnMut(&DVector<f64>) -> Result<DVector<f64>, OcpError>,
) -> Result<(DVector<f64>, usize, bool), OcpError> {
    let m = g_free.len();
    let mut d = DVector::zeros(m);
    let mut r = g_free.clone();
    let mut y_pc = chol.solve(&r);
    let mut rz = r.dot(&y_pc);
    if !rz.is_finite() || rz <= 0.0 {
        return Ok((-y_pc, 0, false));
    }
    let rz0 = rz;
    let mut p = -y_pc.clone();
    let mut steps = 0;
    let mut negcurv = false;
    for _ in 0..CG_MAX {
        let hp = hv(&p)?;
        let php = p.dot(&hp);
        if !php.is_finite() || php <= 1e-12 * dmax * p.norm_squared() {
            // Nonpositive curvature: keep what CG accumulated, or fall back
            // to the preconditioned gradient on the first pass.
            negcurv = true;
            if d.norm() == 0.0 {
                d = -y_pc;
            }
            break;
        }
        steps += 1;
        let alpha = rz / php;
        d.axpy(alpha, &p, 1.0);
        r.axpy(alpha, &hp, 1.0);
        y_pc = chol.solve(&r);
        let rz_new = r.dot(&y_pc);
        if !rz_new.is_finite() || rz_new <= CG_TOL * CG_TOL * rz0 {
            break;
        }
        let beta = rz_new / rz;
        p = beta * p - &y_pc;
        rz = rz_new;
    }
    Ok((d, steps, negcurv))
}

/// Projected Newton-CG descent on the merit function. Bound-active
/// components are frozen each iteration; on the free block a truncated CG
/// solve of the true Newton system supplies the step, preconditioned by the
/// Gauss-Newton Hessian so the easy (small-multiplier) case costs a single
/// CG iteration.
fn newton_minimize(
    merit: &Merit,
    z0: Vec<f64>,
    max_iters: usize,
    gtol: f64,
) -> Result<(Vec<f64>, f64, InnerExit), OcpError> {
    let (lb, ub) = merit.t.bounds();
    let dim = z0.len();
    let mut z = z0;
    project(&mut z, lb, ub);
    let mut ev = merit.t.eval_mode(&z, true, merit.mode)?;
    let mut fval = merit.value(&ev);
    let mut g = merit.grad_from(&z, &ev);
    let mut pg = projected_gradient_norm(&z, &g, lb, ub);
    let mut flat = 0usize;
    let mut exit = InnerExit::MaxIters;
    for _ in 0..max_iters {
        if pg <= gtol {
            exit = InnerExit::Gtol;
            break;
        }
        // Decreases at rounding level mean the subproblem is solved as far
        // as floating point allows.
        if flat >= 3 {
            exit = InnerExit::Stall;
            break;
        }
        let hm = merit.t.merit_hessian(&z, &ev, merit.mu);
        let free = free_mask(&z, &g, lb, ub);
        let idx: Vec<usize> = (0..dim).filter(|&i| free[i]).collect();
        let m = idx.len();
        if m == 0 {
            exit = InnerExit::Stall;
            break;
        }
        let mut hf = DMatrix::zeros(m, m);
        for (r, &a) in idx.iter().enumerate() {
            for (c, &b) in idx.iter().enumerate() {
                hf[(r, c)] = hm[(a, b)];
            }
        }
        let dmax = (0..m)
            .fold(0.0f64, |mx, r| mx.max(hf[(r, r)].abs()))
            .max(1e-300);
        // The Gauss-Newton block is positive semidefinite; jitter only as
        // far as the factorization demands.
        let mut jitter = 1e-10;
        let chol = loop {
            let mut hs = hf.clone();
            for r in 0..m {
                hs[(r, r)] += jitter * dmax;
            }
            if let Some(c) = Cholesky::new(hs) {
                break c;
            }
            jitter *= 100.0;
            if jitter > 1.0 {
                // Scaled identity as a last resort; dmax > 0 so this factors.
                break Cholesky::new(DMatrix::identity(m, m) * dmax)
                    .expect("identity factorization");
            }
        };
        // Multipliers frozen for the Hessian-vector products; the dropped
        // dependence of y on z is exactly the Gauss-Newton term already in hm.
        let y: Vec<f64> = ev
            .c
            .iter()
            .zip(merit.lambda)
            .map(|(ci, li)| li + merit.mu * ci)
            .collect();
        let jt0 = merit.t.jac_tvec(&z, &ev, &y);
        let znorm = infnorm(&z);
        let hv = |p: &DVector<f64>| -> Result<DVector<f64>, OcpError> {
            let mut p_full = DVector::zeros(dim);
            for (r, &a) in idx.iter().enumerate() {
                p_full[a] = p[r];
            }
            let mut out = &hm * &p_full;
            let pn = infnorm(p_full.as_slice());
            if pn > 0.0 {
                let eps = f64::EPSILON.sqrt() * (1.0 + znorm) / pn;
                let zp: Vec<f64> = z.iter().zip(p_full.iter()).map(|(a, b)| a + eps * b).collect();
                let evp = merit.t.eval_mode(&zp, true, merit.mode)?;
                let jtp = merit.t.jac_tvec(&zp, &evp, &y);
                for (r, o) in out.iter_mut().enumerate() {
                    *o += (jtp[r] - jt0[r]) / eps;
                }
            }
            Ok(DVector::from_iterator(m, idx.iter().map(|&a| out[a])))
        };
        let g_free = DVector::from_iterator(m, idx.iter().map(|&a| g[a]));
        let (df, cg_steps, negcurv) = cg_direction(&g_free, &chol, dmax, hv)?;
        // Directions longer than the trust length overshoot any quadratic
        // model; clip so backtracking starts from a step of sane scale.
        let trust = 10.0 * (1.0 + znorm);
        let clip = |dir: DVector<f64>| -> DVector<f64> {
            let dn = infnorm(dir.as_slice());
            if dn > trust {
                dir * (trust / dn)
            } else {
                dir
            }
        };
        let mut accepted = None;
        let mut used_fallback = 0;
        let mut used_alpha = 0.0;
        for fallback in 0..2 {
            let dir = if fallback == 0 {
                clip(df.clone())
            } else {
                // CG direction failed the line search; retry along the
                // preconditioned gradient, which the merit model cannot fool.
                clip(-chol.solve(&g_free))
            };
            let mut d = vec![0.0; dim];
            for (r, &a) in idx.iter().enumerate() {
                d[a] = dir[r];
            }
            if !dot(&d, &g).is_finite() || dot(&d, &g) >= 0.0 {
                continue;
            }
            // Projected backtracking line search.
            let mut alpha = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let mut zc = z.clone();
                for i in 0..dim {
                    zc[i] = (zc[i] + alpha * d[i]).clamp(lb[i], ub[i]);
                }
                let step: Vec<f64> = zc.iter().zip(&z).map(|(a, b)| a - b).collect();
                if infnorm(&step) == 0.0 {
                    break;
                }
                let fc = merit.value_at(&zc)?;
                if fc.is_finite() && fc <= fval + ARMIJO_C1 * dot(&g, &step) {
                    accepted = Some((zc, fc));
                    used_fallback = fallback;
                    used_alpha = alpha;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        if std::env::var("OCP_TRACE_INNER").is_ok() {
            eprintln!(
                "  inner: f {fval:.9e} pg {pg:.3e} free {m} cg {cg_steps} negcurv {negcurv} fb {used_fallback} alpha {used_alpha:.2e} ok {}",
                accepted.is_some()
            );
        }
        let Some((z_new, f_new)) = accepted else {
            exit = InnerExit::Stall;
            break;
        };
        if fval - f_new <= 1e-14 * fval.abs().max(1.0) {
            flat += 1;
        } else {
            flat = 0;
        }
        z = z_new;
        fval = f_new;
        ev = merit.t.eval_mode(&z, true, merit.mode)?;
        g = merit.grad_from(&z, &ev);
        pg = projected_gradient_norm(&z, &g, lb, ub);
    }
    if pg <= gtol {
        exit = InnerExit::Gtol;
    }
    Ok((z, pg, exit))
}

/// Run the augmented-Lagrangian loop from the transcription's initial guess.
///
/// Multipliers move only when the violation clears the gate `eta`; otherwise
/// the penalty tightens. The inner stationarity target `omega` tracks the
/// penalty so subproblems are never solved more exactly than the current
/// multiplier estimates deserve.
pub(crate) fn solve_al(t: &Transcription, tol: &SolveTolerances) -> Result<AlOutcome, OcpError> {
    let mut z = t.initial_guess();
    let grad_mode = pick_grad_mode(t, &z)?;
    let mut lambda = vec![0.0; t.n_eq()];
    let mut mu = MU_INIT;
    let mut eta = mu.powf(-0.1);
    let mut omega = 1.0 / mu;
    let gtol_floor = tol.feasibility * 1e-2;
    let mut converged = false;
    let mut prev_cost = f64::INFINITY;
    let mut outer = 0;
    let mut truncated_streak = 0usize;
    for it in 0..tol.max_outer {
        outer = it + 1;
        let merit = Merit {
            t,
            lambda: &lambda,
            mu,
            mode: grad_mode,
        };
        let gtol = omega.max(gtol_floor);
        let z_prev = z.clone();
        let (z_new, pg, exit) = newton_minimize(&merit, z, tol.max_inner, gtol)?;
        z = z_new;
        let moved = z
            .iter()
            .zip(&z_prev)
            .any(|(a, b)| (a - b).abs() > 1e-14 * (1.0 + b.abs()));
        let ev = t.eval_mode(&z, false, grad_mode)?;
        let viol = infnorm(&ev.c);
        if std::env::var("OCP_TRACE").is_ok() {
            eprintln!(
                "outer {it}: viol {viol:.3e} cost {:.9e} mu {mu:.1e} pg {pg:.3e} gtol {gtol:.1e} exit {exit:?}",
                ev.cost
            );
        }
        let cost_settled =
            (ev.cost - prev_cost).abs() <= tol.cost_rel * prev_cost.abs().max(1.0);
        if viol <= tol.feasibility && cost_settled {
            converged = true;
            break;
        }
        prev_cost = ev.cost;
        // Consecutive truncated or frozen subproblems mean the inner cannot
        // make progress at this conditioning; further outers only burn time.
        truncated_streak = if exit == InnerExit::MaxIters || !moved {
            truncated_streak + 1
        } else {
            0
        };
        if truncated_streak >= 4 {
            break;
        }
        if viol <= eta.max(tol.feasibility) {
            for (li, ci) in lambda.iter_mut().zip(&ev.c) {
                *li += mu * ci;
            }
            eta = (eta * mu.powf(-0.9)).max(tol.feasibility);
            omega = (omega / mu).max(gtol_floor);
        } else {
            mu = (mu * MU_GROWTH).min(MU_MAX);
            eta = mu.powf(-0.1);
            omega = 1.0 / mu;
        }
    }
    Ok(AlOutcome {
        z,
        converged,
        outer_iterations: outer,
        grad_mode,
    })
}
