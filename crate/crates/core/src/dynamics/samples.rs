//! Ready-made chains for tests, demos, and randomized cross-checks.

use rand::Rng;

use super::{FrameRef, Joint, JointKind, JointLimits, KinematicChain, Link, IDENTITY3};

/// Point-mass pendulum rotating about -y, so q = 0 is horizontal along +x and
/// q̈ = -(g/l)·cos q under gravity -z.
pub fn pendulum(mass: f64, length: f64) -> KinematicChain {
    let link = Link {
        name: "bob".into(),
        parent: None,
        joint: Joint::revolute([0.0, -1.0, 0.0], [0.0; 3]),
        mass,
        com: [length, 0.0, 0.0],
        inertia_com: [[0.0; 3]; 3],
    };
    KinematicChain::new(
        "pendulum",
        [0.0, 0.0, -9.81],
        vec![link],
        FrameRef {
            link: 0,
            rotation: IDENTITY3,
            translation: [length, 0.0, 0.0],
        },
    )
    .unwrap()
}

/// Two revolute joints about +z in the x-y plane, point masses at the link
/// tips, gravity -y (in-plane).
pub fn two_link_planar(l1: f64, l2: f64, m1: f64, m2: f64) -> KinematicChain {
    let links = vec![
        Link {
            name: "upper".into(),
            parent: None,
            joint: Joint::revolute([0.0, 0.0, 1.0], [0.0; 3]),
            mass: m1,
            com: [l1, 0.0, 0.0],
            inertia_com: [[0.0; 3]; 3],
        },
        Link {
            name: "lower".into(),
            parent: Some(0),
            joint: Joint::revolute([0.0, 0.0, 1.0], [l1, 0.0, 0.0]),
            mass: m2,
            com: [l2, 0.0, 0.0],
            inertia_com: [[0.0; 3]; 3],
        },
    ];
    KinematicChain::new(
        "two_link_planar",
        [0.0, -9.81, 0.0],
        links,
        FrameRef {
            link: 1,
            rotation: IDENTITY3,
            translation: [l2, 0.0, 0.0],
        },
    )
    .unwrap()
}

/// Serial arm in the x-z plane (revolute about +y), links along +x, gravity -z.
/// Link masses are distributed as slender rods plus a point mass at each tip.
pub fn planar_arm_xz(lengths: &[f64], masses: &[f64]) -> KinematicChain {
    assert_eq!(lengths.len(), masses.len());
    let mut links = Vec::new();
    for (i, (&l, &m)) in lengths.iter().zip(masses).enumerate() {
        // Slender rod about its center: I_yy = I_zz = m l²/12 at the COM.
        let iz = m * l * l / 12.0;
        links.push(Link {
            name: format!("seg{i}"),
            parent: if i == 0 { None } else { Some(i - 1) },
            joint: Joint {
                kind: JointKind::Revolute,
                axis: [0.0, 1.0, 0.0],
                origin_rot: IDENTITY3,
                origin_trans: if i == 0 { [0.0; 3] } else { [lengths[i - 1], 0.0, 0.0] },
                limits: JointLimits {
                    q: (-std::f64::consts::PI, std::f64::consts::PI),
                    qd: 6.0,
                    tau: 80.0,
                },
                actuated: true,
            },
            mass: m,
            com: [l / 2.0, 0.0, 0.0],
            inertia_com: [[0.0, 0.0, 0.0], [0.0, iz, 0.0], [0.0, 0.0, iz]],
        });
    }
    let n = links.len();
    KinematicChain::new(
        "planar_arm_xz",
        [0.0, 0.0, -9.81],
        links,
        FrameRef {
            link: n - 1,
            rotation: IDENTITY3,
            translation: [lengths[n - 1], 0.0, 0.0],
        },
    )
    .unwrap()
}

fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.2 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Random serial chain with `dof` moving joints (revolute-biased, occasional
/// interleaved fixed links), well-conditioned inertias, gravity -z.
pub fn random_chain<R: Rng>(rng: &mut R, dof: usize) -> KinematicChain {
    assert!(dof >= 1);
    let mut links = Vec::new();
    for d in 0..dof {
        let parent = if links.is_empty() { None } else { Some(links.len() - 1) };
        let kind = if rng.random_range(0.0..1.0) < 0.75 {
            JointKind::Revolute
        } else {
            JointKind::Prismatic
        };
        let rot_axis = random_unit(rng);
        let rot_angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let origin_rot = super::rotation_about(&rot_axis, rot_angle);
        let mut origin_rot_arr = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                origin_rot_arr[r][c] = origin_rot[(r, c)];
            }
        }
        let a: Vec<f64> = (0..9).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut inertia = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += a[k * 3 + r] * a[k * 3 + c];
                }
                inertia[r][c] = 0.05 * acc + if r == c { 0.01 } else { 0.0 };
            }
        }
        links.push(Link {
            name: format!("j{d}"),
            parent,
            joint: Joint {
                kind,
                axis: random_unit(rng),
                origin_rot: origin_rot_arr,
                origin_trans: [
                    rng.random_range(-0.6..0.6),
                    rng.random_range(-0.6..0.6),
                    rng.random_range(-0.6..0.6),
                ],
                limits: JointLimits {
                    q: (-std::f64::consts::PI, std::f64::consts::PI),
                    ..JointLimits::default()
                },
                actuated: true,
            },
            mass: rng.random_range(0.1..2.0),
            com: [
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            ],
            inertia_com: inertia,
        });
        if rng.random_range(0.0..1.0) < 0.2 {
            links.push(Link {
                name: format!("f{d}"),
                parent: Some(links.len() - 1),
                joint: Joint::fixed(
                    IDENTITY3,
                    [rng.random_range(-0.3..0.3), 0.0, rng.random_range(-0.3..0.3)],
                ),
                mass: rng.random_range(0.0..0.5),
                com: [rng.random_range(-0.2..0.2), 0.0, 0.0],
                inertia_com: [
                    [0.02, 0.0, 0.0],
                    [0.0, 0.02, 0.0],
                    [0.0, 0.0, 0.02],
                ],
            });
        }
    }
    let n = links.len();
    KinematicChain::new(
        "random_chain",
        [0.0, 0.0, -9.81],
        links,
        FrameRef {
            link: n - 1,
            rotation: IDENTITY3,
            translation: [0.2, 0.1, 0.0],
        },
    )
    .unwrap()
}
