//! Spatial-vector (6-D) algebra for rigid-body recursions, generic over the
//! scalar so dual numbers flow through unchanged.
//!
//! Conventions: motion vectors stack angular over linear, [ω; v]. A transform
//! holds (E, r) with E the rotation taking parent coordinates to child
//! coordinates and r the child origin expressed in parent coordinates, i.e.
//! the Plücker matrix [[E, 0], [-E·r̂, E]].

use super::real::Real;

#[derive(Clone, Copy, Debug)]
pub struct V3<R>(pub [R; 3]);

impl<R: Real> V3<R> {
    pub fn zero() -> Self {
        Self([R::zero(); 3])
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self([R::from_f64(v[0]), R::from_f64(v[1]), R::from_f64(v[2])])
    }

    pub fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }

    pub fn scale(self, s: R) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn dot(self, o: Self) -> R {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct M3<R>(pub [[R; 3]; 3]);

impl<R: Real> M3<R> {
    pub fn zero() -> Self {
        Self([[R::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = R::one();
        }
        m
    }

    pub fn from_f64(v: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = R::from_f64(v[i][j]);
            }
        }
        m
    }

    pub fn skew(v: V3<R>) -> Self {
        let [x, y, z] = v.0;
        let o = R::zero();
        Self([[o, -z, y], [z, o, -x], [-y, x, o]])
    }

    /// Rodrigues rotation about a unit axis.
    pub fn rotation(axis: V3<R>, angle: R) -> Self {
        let s = angle.sin();
        let c = angle.cos();
        let k = Self::skew(axis);
        let k2 = k.mul_mat(&k);
        let mut m = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += k.0[i][j] * s + k2.0[i][j] * (R::one() - c);
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: R) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] * s;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: V3<R>) -> V3<R> {
        let mut out = V3::zero();
        for i in 0..3 {
            out.0[i] = self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2];
        }
        out
    }

    pub fn tr_mul_vec(&self, v: V3<R>) -> V3<R> {
        let mut out = V3::zero();
        for i in 0..3 {
            out.0[i] = self.0[0][i] * v.0[0] + self.0[1][i] * v.0[1] + self.0[2][i] * v.0[2];
        }
        out
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = R::zero();
                for k in 0..3 {
                    acc += self.0[i][k] * o.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }
}

/// Spatial motion or force vector; interpretation depends on the operation.
#[derive(Clone, Copy, Debug)]
pub struct SpatialV<R> {
    pub ang: V3<R>,
    pub lin: V3<R>,
}

impl<R: Real> SpatialV<R> {
    pub fn zero() -> Self {
        Self { ang: V3::zero(), lin: V3::zero() }
    }

    pub fn add(self, o: Self) -> Self {
        Self { ang: self.ang.add(o.ang), lin: self.lin.add(o.lin) }
    }

    pub fn scale(self, s: R) -> Self {
        Self { ang: self.ang.scale(s), lin: self.lin.scale(s) }
    }

    pub fn dot(self, o: Self) -> R {
        self.ang.dot(o.ang) + self.lin.dot(o.lin)
    }

    /// Motion-cross: self × other, both motion vectors.
    pub fn cross_motion(self, o: Self) -> Self {
        Self {
            ang: self.ang.cross(o.ang),
            lin: self.ang.cross(o.lin).add(self.lin.cross(o.ang)),
        }
    }

    /// Force-cross: self ×* other, self motion, other force.
    pub fn cross_force(self, o: Self) -> Self {
        Self {
            ang: self.ang.cross(o.ang).add(self.lin.cross(o.lin)),
            lin: self.ang.cross(o.lin),
        }
    }
}

/// Plücker coordinate transform, child ← parent.
#[derive(Clone, Copy, Debug)]
pub struct Xform<R> {
    pub e: M3<R>,
    pub r: V3<R>,
}

impl<R: Real> Xform<R> {
    pub fn identity() -> Self {
        Self { e: M3::identity(), r: V3::zero() }
    }

    /// Motion vector from parent coordinates into child coordinates.
    pub fn apply_motion(&self, v: SpatialV<R>) -> SpatialV<R> {
        SpatialV {
            ang: self.e.mul_vec(v.ang),
            lin: self.e.mul_vec(v.lin.sub(self.r.cross(v.ang))),
        }
    }

    /// Force vector from child coordinates back into parent coordinates.
    pub fn inv_apply_force(&self, f: SpatialV<R>) -> SpatialV<R> {
        let lin = self.e.tr_mul_vec(f.lin);
        SpatialV {
            ang: self.e.tr_mul_vec(f.ang).add(self.r.cross(lin)),
            lin,
        }
    }

    /// 6×6 motion-transform matrix, for articulated-inertia propagation.
    pub fn motion_matrix(&self) -> M6<R> {
        let mut m = M6::zero();
        let bl = M3::skew(self.r.neg());
        let bl = self.e.mul_mat(&bl);
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.e.0[i][j];
                m.0[i + 3][j + 3] = self.e.0[i][j];
                m.0[i + 3][j] = bl.0[i][j];
            }
        }
        m
    }
}

/// Rigid-body spatial inertia about the frame origin, stored compactly as
/// (mass, first moment h = m·c, rotational inertia about the origin).
#[derive(Clone, Copy, Debug)]
pub struct Inertia<R> {
    pub mass: R,
    pub h: V3<R>,
    pub i_o: M3<R>,
}

impl<R: Real> Inertia<R> {
    /// From mass, COM offset, and rotational inertia about the COM.
    pub fn from_com(mass: R, com: V3<R>, i_com: M3<R>) -> Self {
        // Parallel axis: I_O = I_C - m·ĉ·ĉ.
        let ch = M3::skew(com);
        let shift = ch.mul_mat(&ch).scale(-mass);
        Self { mass, h: com.scale(mass), i_o: i_com.add(&shift) }
    }

    /// Momentum map: motion vector in, force vector (momentum rate) out.
    pub fn apply(&self, v: SpatialV<R>) -> SpatialV<R> {
        SpatialV {
            ang: self.i_o.mul_vec(v.ang).add(self.h.cross(v.lin)),
            lin: v.lin.scale(self.mass).sub(self.h.cross(v.ang)),
        }
    }

    pub fn to_m6(&self) -> M6<R> {
        let mut m = M6::zero();
        let hx = M3::skew(self.h);
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.i_o.0[i][j];
                m.0[i][j + 3] = hx.0[i][j];
                m.0[i + 3][j] = -hx.0[i][j];
            }
            m.0[i + 3][i + 3] = self.mass;
        }
        m
    }
}

/// Dense 6×6 matrix; only what the articulated-body recursion needs.
#[derive(Clone, Copy, Debug)]
pub struct M6<R>(pub [[R; 6]; 6]);

impl<R: Real> M6<R> {
    pub fn zero() -> Self {
        Self([[R::zero(); 6]; 6])
    }

    pub fn add_assign(&mut self, o: &Self) {
        for i in 0..6 {
            for j in 0..6 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..6 {
            for j in 0..6 {
                m.0[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        m
    }

    pub fn mul_vec(&self, v: SpatialV<R>) -> SpatialV<R> {
        let x = [v.ang.0[0], v.ang.0[1], v.ang.0[2], v.lin.0[0], v.lin.0[1], v.lin.0[2]];
        let mut y = [R::zero(); 6];
        for i in 0..6 {
            let mut acc = R::zero();
            for j in 0..6 {
                acc += self.0[i][j] * x[j];
            }
            y[i] = acc;
        }
        SpatialV {
            ang: V3([y[0], y[1], y[2]]),
            lin: V3([y[3], y[4], y[5]]),
        }
    }

    /// Rank-one update self - u·uᵀ/d.
    pub fn sub_outer(&self, u: SpatialV<R>, d: R) -> Self {
        let x = [u.ang.0[0], u.ang.0[1], u.ang.0[2], u.lin.0[0], u.lin.0[1], u.lin.0[2]];
        let mut m = *self;
        for i in 0..6 {
            for j in 0..6 {
                m.0[i][j] -= x[i] * x[j] / d;
            }
        }
        m
    }

    /// Congruence transform Xᵀ·self·X.
    pub fn congruence(&self, x: &M6<R>) -> Self {
        let mut ax = Self::zero();
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = R::zero();
                for k in 0..6 {
                    acc += self.0[i][k] * x.0[k][j];
                }
                ax.0[i][j] = acc;
            }
        }
        let mut out = Self::zero();
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = R::zero();
                for k in 0..6 {
                    acc += x.0[k][i] * ax.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Vf = V3<f64>;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn rotation_is_orthonormal() {
        let ax = Vf::from_f64([0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        let r = M3::rotation(ax, 0.83);
        let rtr = r.transpose().mul_mat(&r);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(close(rtr.0[i][j], want));
            }
        }
        // Axis is invariant.
        let ra = r.mul_vec(ax);
        for k in 0..3 {
            assert!(close(ra.0[k], ax.0[k]));
        }
    }

    #[test]
    fn transform_round_trips_force() {
        let e = M3::rotation(Vf::from_f64([1.0, 0.0, 0.0]), 0.4);
        let x = Xform { e, r: Vf::from_f64([0.2, -0.1, 0.5]) };
        // Motion/force duality: (X v) · f_child = v · (X^{-*} f_child) for all v.
        let v = SpatialV { ang: Vf::from_f64([0.3, 1.0, -2.0]), lin: Vf::from_f64([0.5, 0.1, 0.9]) };
        let f = SpatialV { ang: Vf::from_f64([-1.0, 0.2, 0.7]), lin: Vf::from_f64([2.0, -0.3, 0.4]) };
        let lhs = x.apply_motion(v).dot(f);
        let rhs = v.dot(x.inv_apply_force(f));
        assert!(close(lhs, rhs));
    }

    #[test]
    fn motion_matrix_matches_apply() {
        let e = M3::rotation(Vf::from_f64([0.0, 0.0, 1.0]), -1.1);
        let x = Xform { e, r: Vf::from_f64([1.0, 2.0, 3.0]) };
        let v = SpatialV { ang: Vf::from_f64([0.3, -0.4, 0.5]), lin: Vf::from_f64([1.0, 0.0, -1.0]) };
        let a = x.apply_motion(v);
        let b = x.motion_matrix().mul_vec(v);
        for k in 0..3 {
            assert!(close(a.ang.0[k], b.ang.0[k]));
            assert!(close(a.lin.0[k], b.lin.0[k]));
        }
    }

    #[test]
    fn inertia_kinetic_energy_matches_point_mass() {
        // Point mass m at c, body rotating at ω about origin: KE = m|ω × c|²/2.
        let m = 2.0;
        let c = Vf::from_f64([0.5, 0.0, 0.0]);
        let inertia = Inertia::from_com(m, c, M3::zero());
        let w = Vf::from_f64([0.0, 0.0, 3.0]);
        let v = SpatialV { ang: w, lin: Vf::zero() };
        let ke = v.dot(inertia.apply(v)) / 2.0;
        let speed = w.cross(c);
        assert!(close(ke, m * speed.dot(speed) / 2.0));
    }
}
