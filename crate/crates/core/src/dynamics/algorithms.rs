//! Generic rigid-body recursions: recursive Newton-Euler inverse dynamics and
//! the articulated-body forward dynamics, both scalar-generic so forward-mode
//! duals can differentiate through them.

use super::real::Real;
use super::spatial::{Inertia, M3, M6, SpatialV, V3, Xform};
use super::{DynError, JointKind, KinematicChain, Link};

/// Joint-dependent child←parent transform and motion subspace at position q.
fn joint_model<R: Real>(link: &Link, q: R) -> (Xform<R>, SpatialV<R>) {
    let r_o = M3::from_f64(link.joint.origin_rot);
    let t_o = V3::from_f64(link.joint.origin_trans);
    let axis = V3::from_f64(link.joint.axis);
    match link.joint.kind {
        JointKind::Revolute => {
            let r_j = M3::rotation(axis, q);
            let e = r_o.mul_mat(&r_j).transpose();
            (
                Xform { e, r: t_o },
                SpatialV { ang: axis, lin: V3::zero() },
            )
        }
        JointKind::Prismatic => {
            let e = r_o.transpose();
            let r = t_o.add(r_o.mul_vec(axis.scale(q)));
            (
                Xform { e, r },
                SpatialV { ang: V3::zero(), lin: axis },
            )
        }
        JointKind::Fixed => (
            Xform { e: r_o.transpose(), r: t_o },
            SpatialV::zero(),
        ),
    }
}

fn link_inertia<R: Real>(link: &Link) -> Inertia<R> {
    Inertia::from_com(
        R::from_f64(link.mass),
        V3::from_f64(link.com),
        M3::from_f64(link.inertia_com),
    )
}

/// Base "acceleration" encoding gravity: a0 = -g lifts gravity into the
/// recursion without per-link force terms.
fn gravity_accel<R: Real>(gravity: [f64; 3]) -> SpatialV<R> {
    SpatialV {
        ang: V3::zero(),
        lin: V3::from_f64(gravity).neg(),
    }
}

/// Recursive Newton-Euler: torques realizing q̈ at (q, q̇).
///
/// `gravity` overrides the chain's field so the mass-matrix construction can
/// zero it out.
pub(super) fn rnea<R: Real>(
    chain: &KinematicChain,
    q: &[R],
    qd: &[R],
    qdd: &[R],
    gravity: [f64; 3],
) -> Vec<R> {
    let nl = chain.links.len();
    let mut xf: Vec<Xform<R>> = Vec::with_capacity(nl);
    let mut s: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut v: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut a: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut f: Vec<SpatialV<R>> = Vec::with_capacity(nl);

    let a0 = gravity_accel::<R>(gravity);
    for (i, link) in chain.links.iter().enumerate() {
        let dof = chain.dof_index[i];
        let qi = dof.map_or(R::zero(), |d| q[d]);
        let (x, si) = joint_model(link, qi);
        let (v_p, a_p) = match link.parent {
            Some(p) => (v[p], a[p]),
            None => (SpatialV::zero(), a0),
        };
        let mut vi = x.apply_motion(v_p);
        let mut ai = x.apply_motion(a_p);
        if let Some(d) = dof {
            let vj = si.scale(qd[d]);
            vi = vi.add(vj);
            ai = ai.add(si.scale(qdd[d])).add(vi.cross_motion(vj));
        }
        let inertia = link_inertia::<R>(link);
        let fi = inertia.apply(ai).add(vi.cross_force(inertia.apply(vi)));
        xf.push(x);
        s.push(si);
        v.push(vi);
        a.push(ai);
        f.push(fi);
    }

    let mut tau = vec![R::zero(); chain.nq];
    for i in (0..nl).rev() {
        if let Some(d) = chain.dof_index[i] {
            tau[d] = s[i].dot(f[i]);
        }
        if let Some(p) = chain.links[i].parent {
            let back = xf[i].inv_apply_force(f[i]);
            f[p] = f[p].add(back);
        }
    }
    tau
}

/// Articulated-body forward dynamics: q̈ from (q, q̇, τ).
pub(super) fn aba<R: Real>(
    chain: &KinematicChain,
    q: &[R],
    qd: &[R],
    tau: &[R],
) -> Result<Vec<R>, DynError> {
    let nl = chain.links.len();
    let mut xf: Vec<Xform<R>> = Vec::with_capacity(nl);
    let mut s: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut v: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut c: Vec<SpatialV<R>> = Vec::with_capacity(nl);
    let mut ia: Vec<M6<R>> = Vec::with_capacity(nl);
    let mut pa: Vec<SpatialV<R>> = Vec::with_capacity(nl);

    for (i, link) in chain.links.iter().enumerate() {
        let dof = chain.dof_index[i];
        let qi = dof.map_or(R::zero(), |d| q[d]);
        let (x, si) = joint_model(link, qi);
        let v_p = match link.parent {
            Some(p) => v[p],
            None => SpatialV::zero(),
        };
        let mut vi = x.apply_motion(v_p);
        let mut ci = SpatialV::zero();
        if let Some(d) = dof {
            let vj = si.scale(qd[d]);
            vi = vi.add(vj);
            ci = vi.cross_motion(vj);
        }
        let inertia = link_inertia::<R>(link);
        xf.push(x);
        s.push(si);
        v.push(vi);
        c.push(ci);
        ia.push(inertia.to_m6());
        pa.push(vi.cross_force(inertia.apply(vi)));
    }

    let mut u_vec = vec![SpatialV::zero(); nl];
    let mut d_inv = vec![R::zero(); nl];
    let mut u_sca = vec![R::zero(); nl];

    for i in (0..nl).rev() {
        let link = &chain.links[i];
        if let Some(d) = chain.dof_index[i] {
            let u = ia[i].mul_vec(s[i]);
            let dd = s[i].dot(u);
            if dd.re().abs() <= 1e-12 {
                return Err(DynError::SingularInertia { joint: link.name.clone() });
            }
            u_vec[i] = u;
            d_inv[i] = R::one() / dd;
            u_sca[i] = tau[d] - s[i].dot(pa[i]);
            if let Some(p) = link.parent {
                let ia_star = ia[i].sub_outer(u, dd);
                let pa_star = pa[i]
                    .add(ia_star.mul_vec(c[i]))
                    .add(u.scale(u_sca[i] * d_inv[i]));
                let x6 = xf[i].motion_matrix();
                ia[p].add_assign(&ia_star.congruence(&x6));
                pa[p] = pa[p].add(xf[i].inv_apply_force(pa_star));
            }
        } else if let Some(p) = link.parent {
            let pa_star = pa[i].add(ia[i].mul_vec(c[i]));
            let x6 = xf[i].motion_matrix();
            let ia_i = ia[i];
            ia[p].add_assign(&ia_i.congruence(&x6));
            pa[p] = pa[p].add(xf[i].inv_apply_force(pa_star));
        }
    }

    let a0 = gravity_accel::<R>(chain.gravity);
    let mut a: Vec<SpatialV<R>> = vec![SpatialV::zero(); nl];
    let mut qdd = vec![R::zero(); chain.nq];
    for i in 0..nl {
        let a_p = match chain.links[i].parent {
            Some(p) => a[p],
            None => a0,
        };
        let a_prime = xf[i].apply_motion(a_p).add(c[i]);
        a[i] = if let Some(d) = chain.dof_index[i] {
            let qdd_i = (u_sca[i] - u_vec[i].dot(a_prime)) * d_inv[i];
            qdd[d] = qdd_i;
            a_prime.add(s[i].scale(qdd_i))
        } else {
            a_prime
        };
    }
    Ok(qdd)
}

/// Kinetic energy from the link velocity pass: ½ Σ vᵀ I v.
pub(super) fn kinetic_energy(chain: &KinematicChain, q: &[f64], qd: &[f64]) -> f64 {
    let nl = chain.links.len();
    let mut v: Vec<SpatialV<f64>> = Vec::with_capacity(nl);
    let mut ke = 0.0;
    for (i, link) in chain.links.iter().enumerate() {
        let dof = chain.dof_index[i];
        let qi = dof.map_or(0.0, |d| q[d]);
        let (x, si) = joint_model::<f64>(link, qi);
        let v_p = match link.parent {
            Some(p) => v[p],
            None => SpatialV::zero(),
        };
        let mut vi = x.apply_motion(v_p);
        if let Some(d) = dof {
            vi = vi.add(si.scale(qd[d]));
        }
        let inertia = link_inertia::<f64>(link);
        ke += vi.dot(inertia.apply(vi)) / 2.0;
        v.push(vi);
    }
    ke
}
