//! Impulse solver for revolute joints and box-versus-ground contact.
//!
//! One step: gravity and motor impulses update velocities, then 8 velocity
//! iterations alternate a sequential-impulse pass over the ground contacts
//! with an exact block solve of all joint rows, then positions are integrated
//! (semi-implicit Euler) and a position pass removes the remaining joint
//! drift and ground penetration.
//!
//! Joints are solved as one block because skeletons are small trees whose
//! limbs are routinely driven into their angle limits at full torque; plain
//! Gauss-Seidel leaves centimeter-scale joint gaps in that regime.

use std::cell::RefCell;

use super::world::{CornerImpulse, RevoluteJoint, RigidBody, SolverSettings, WorldState};
use crate::math::{cross_sv, Rot, Vec2};

/// Position iterations stop once every joint gap is below this.
const JOINT_POSITION_STOP: f64 = 1e-6;
/// Rotation per step above which the centripetal term stops growing.
const CENTRIPETAL_CAP: f64 = 0.5;
/// Pivots below this mark redundant rows, which get a zero impulse.
const TINY_PIVOT: f64 = 1e-12;

/// One scalar constraint between two bodies: `J v` is its velocity.
#[derive(Clone, Copy, Debug)]
struct Row {
    a: usize,
    b: usize,
    lin_a: Vec2,
    ang_a: f64,
    lin_b: Vec2,
    ang_b: f64,
}

impl Row {
    fn point(a: usize, b: usize, r_a: Vec2, r_b: Vec2) -> [Row; 2] {
        [
            Row { a, b, lin_a: Vec2::new(-1.0, 0.0), ang_a: r_a.y, lin_b: Vec2::new(1.0, 0.0), ang_b: -r_b.y },
            Row { a, b, lin_a: Vec2::new(0.0, -1.0), ang_a: -r_a.x, lin_b: Vec2::new(0.0, 1.0), ang_b: r_b.x },
        ]
    }

    fn angle(a: usize, b: usize) -> Row {
        Row { a, b, lin_a: Vec2::ZERO, ang_a: -1.0, lin_b: Vec2::ZERO, ang_b: 1.0 }
    }

    fn velocity(&self, bodies: &[RigidBody]) -> f64 {
        let (a, b) = (&bodies[self.a], &bodies[self.b]);
        self.lin_a.dot(a.linear_velocity)
            + self.ang_a * a.angular_velocity
            + self.lin_b.dot(b.linear_velocity)
            + self.ang_b * b.angular_velocity
    }

    fn apply_impulse(&self, bodies: &mut [RigidBody], lambda: f64) {
        let a = &mut bodies[self.a];
        a.linear_velocity += self.lin_a * (lambda * a.inv_mass);
        a.angular_velocity += self.ang_a * lambda * a.inv_inertia;
        let b = &mut bodies[self.b];
        b.linear_velocity += self.lin_b * (lambda * b.inv_mass);
        b.angular_velocity += self.ang_b * lambda * b.inv_inertia;
    }

    fn displace(&self, bodies: &mut [RigidBody], lambda: f64) {
        let a = &mut bodies[self.a];
        a.position += self.lin_a * (lambda * a.inv_mass);
        a.angle += self.ang_a * lambda * a.inv_inertia;
        let b = &mut bodies[self.b];
        b.position += self.lin_b * (lambda * b.inv_mass);
        b.angle += self.ang_b * lambda * b.inv_inertia;
    }

    /// Entry of `J M^-1 J^T` between two rows.
    fn coupling(&self, other: &Row, bodies: &[RigidBody]) -> f64 {
        let term = |i: usize, lin: Vec2, ang: f64, j: usize, olin: Vec2, oang: f64| {
            if i == j {
                let body = &bodies[i];
                body.inv_mass * lin.dot(olin) + body.inv_inertia * ang * oang
            } else {
                0.0
            }
        };
        term(self.a, self.lin_a, self.ang_a, other.a, other.lin_a, other.ang_a)
            + term(self.a, self.lin_a, self.ang_a, other.b, other.lin_b, other.ang_b)
            + term(self.b, self.lin_b, self.ang_b, other.a, other.lin_a, other.ang_a)
            + term(self.b, self.lin_b, self.ang_b, other.b, other.lin_b, other.ang_b)
    }
}

/// LU factorization with partial pivoting of a small dense matrix.
///
/// Columns whose pivot is negligible belong to redundant rows; they are
/// zeroed out of the factors and their unknowns solve to zero.
#[derive(Default)]
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    inv_diag: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(&mut self, n: usize, entry: impl Fn(usize, usize) -> f64) {
        self.n = n;
        self.lu.clear();
        self.lu.extend((0..n * n).map(|k| entry(k / n, k % n)));
        self.perm.clear();
        self.perm.extend(0..n);
        self.inv_diag.clear();
        let a = &mut self.lu;
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if a[row * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = row;
                }
            }
            if a[pivot * n + col].abs() < TINY_PIVOT {
                for row in col + 1..n {
                    a[row * n + col] = 0.0;
                }
                self.inv_diag.push(0.0);
                continue;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                self.perm.swap(pivot, col);
            }
            let inv = 1.0 / a[col * n + col];
            self.inv_diag.push(inv);
            for row in col + 1..n {
                let f = a[row * n + col] * inv;
                a[row * n + col] = f;
                if f != 0.0 {
                    for k in col + 1..n {
                        a[row * n + k] -= f * a[col * n + k];
                    }
                }
            }
        }
    }

    /// Writes the solution of `A x = rhs` into `x`.
    fn solve(&self, rhs: &[f64], x: &mut [f64]) {
        let n = self.n;
        for row in 0..n {
            let lower = &self.lu[row * n..row * n + row];
            let s: f64 = lower.iter().zip(&x[..row]).map(|(l, xk)| l * xk).sum();
            x[row] = rhs[self.perm[row]] - s;
        }
        for row in (0..n).rev() {
            let upper = &self.lu[row * n + row + 1..(row + 1) * n];
            let s: f64 = upper.iter().zip(&x[row + 1..n]).map(|(u, xk)| u * xk).sum();
            x[row] = (x[row] - s) * self.inv_diag[row];
        }
    }
}

/// The joint rows of a skeleton, factored for repeated solves.
///
/// Rows are laid out three per joint: `3j`, `3j + 1` for the anchor point of
/// joint `j`, `3j + 2` for its angle. Point rows are always active; the
/// angle rows of limited joints come and go, so the point block `P` is
/// factored once and limits enter through the Schur complement
/// `S = D - C P^-1 C^T`, whose active sub-block is all a solve needs.
#[derive(Default)]
struct JointSystem {
    rows: Vec<Row>,
    /// Joints that have angle limits.
    limited: Vec<usize>,
    /// `J M^-1 J^T` over all rows.
    full: Vec<f64>,
    point: DenseLu,
    /// Row `l`: couplings of limit `l` with every point row (`C`).
    coupling: Vec<f64>,
    /// Row `l`: `P^-1` applied to row `l` of `C`.
    response: Vec<f64>,
    schur: Vec<f64>,
    // scratch
    rhs_point: Vec<f64>,
    base: Vec<f64>,
    chosen: Vec<usize>,
    small: DenseLu,
    small_rhs: Vec<f64>,
    small_x: Vec<f64>,
}

fn point_row(i: usize) -> usize {
    3 * (i / 2) + i % 2
}

impl JointSystem {
    fn build(&mut self, bodies: &[RigidBody], joints: &[RevoluteJoint], rots: &[Rot]) {
        self.rows.clear();
        self.limited.clear();
        for (j, joint) in joints.iter().enumerate() {
            let r_a = rots[joint.body_a].apply(joint.anchor_a);
            let r_b = rots[joint.body_b].apply(joint.anchor_b);
            self.rows.extend(Row::point(joint.body_a, joint.body_b, r_a, r_b));
            self.rows.push(Row::angle(joint.body_a, joint.body_b));
            if joint.angle_limits.is_some() {
                self.limited.push(j);
            }
        }
        // Full J M^-1 J^T; rows on disjoint bodies do not couple.
        let total = self.rows.len();
        self.full.clear();
        self.full.resize(total * total, 0.0);
        for i in 0..total {
            for j in i..total {
                let (ri, rj) = (&self.rows[i], &self.rows[j]);
                if ri.a == rj.a || ri.a == rj.b || ri.b == rj.a || ri.b == rj.b {
                    let k = ri.coupling(rj, bodies);
                    self.full[i * total + j] = k;
                    self.full[j * total + i] = k;
                }
            }
        }
        let full = &self.full;
        let n = 2 * joints.len();
        self.point.factor(n, |i, j| full[point_row(i) * total + point_row(j)]);

        let m = self.limited.len();
        self.coupling.clear();
        for &j in &self.limited {
            self.coupling.extend((0..n).map(|i| full[(3 * j + 2) * total + point_row(i)]));
        }
        self.response.clear();
        self.response.resize(m * n, 0.0);
        for l in 0..m {
            self.point.solve(&self.coupling[l * n..(l + 1) * n], &mut self.response[l * n..(l + 1) * n]);
        }
        self.schur.clear();
        for (l, &jl) in self.limited.iter().enumerate() {
            for (k, &jk) in self.limited.iter().enumerate() {
                let direct = full[(3 * jl + 2) * total + 3 * jk + 2];
                let through: f64 = self.coupling[l * n..(l + 1) * n]
                    .iter()
                    .zip(&self.response[k * n..(k + 1) * n])
                    .map(|(c, w)| c * w)
                    .sum();
                self.schur.push(direct - through);
            }
        }
    }

    /// Impulses (three per joint) driving every point row and the limit rows
    /// of joints in `active` to their targets `rhs`; other limits get zero.
    fn solve(&mut self, rhs: &[f64], active: u64, out: &mut Vec<f64>) {
        let joints = self.rows.len() / 3;
        let n = 2 * joints;
        self.rhs_point.clear();
        self.rhs_point.extend((0..n).map(|i| -rhs[point_row(i)]));
        self.base.clear();
        self.base.resize(n, 0.0);
        self.point.solve(&self.rhs_point, &mut self.base);

        self.chosen.clear();
        self.chosen.extend((0..self.limited.len()).filter(|&l| active & (1 << self.limited[l]) != 0));
        let k = self.chosen.len();
        self.small_x.clear();
        self.small_x.resize(k, 0.0);
        if k > 0 {
            let (chosen, schur, m) = (&self.chosen, &self.schur, self.limited.len());
            self.small.factor(k, |a, b| schur[chosen[a] * m + chosen[b]]);
            self.small_rhs.clear();
            for &l in chosen {
                let j = self.limited[l];
                let through: f64 = (0..n).map(|i| self.coupling[l * n + i] * self.base[i]).sum();
                self.small_rhs.push(-rhs[3 * j + 2] - through);
            }
            self.small.solve(&self.small_rhs, &mut self.small_x);
        }

        out.clear();
        out.resize(3 * joints, 0.0);
        for i in 0..n {
            let mut x = self.base[i];
            for (c, &l) in self.chosen.iter().enumerate() {
                x -= self.response[l * n + i] * self.small_x[c];
            }
            out[point_row(i)] = x;
        }
        for (c, &l) in self.chosen.iter().enumerate() {
            out[3 * self.limited[l] + 2] = self.small_x[c];
        }
    }
}

struct JointFrame {
    r_a: Vec2,
    r_b: Vec2,
    /// Anchor separation at the start of the step.
    gap: Vec2,
    /// +1 when the lower bound is the nearer one, -1 for the upper, 0 without limits.
    side: f64,
    /// Distance to the nearer bound, positive inside the range.
    limit_gap: f64,
}

/// The nearer bound of `angle`: its side (+1 lower, -1 upper) and distance.
fn nearer_limit(limits: Option<[f64; 2]>, angle: f64) -> (f64, f64) {
    match limits {
        None => (0.0, f64::INFINITY),
        Some([lower, upper]) if angle - lower <= upper - angle => (1.0, angle - lower),
        Some([_, upper]) => (-1.0, upper - angle),
    }
}

struct ContactRow {
    body: usize,
    corner: usize,
    r: Vec2,
    separation: f64,
    normal_mass: f64,
    tangent_mass: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
}

fn local_corners(half: Vec2) -> [Vec2; 4] {
    [
        Vec2::new(-half.x, -half.y),
        Vec2::new(half.x, -half.y),
        Vec2::new(half.x, half.y),
        Vec2::new(-half.x, half.y),
    ]
}

/// Displacement of the anchor `r` when its body turns by `theta`, to second
/// order. The centripetal part is capped: the block solve linearizes about
/// the current pose, and the fixed-point iteration only contracts while that
/// term's slope stays below one.
fn anchor_drift(r: Vec2, theta: f64) -> Vec2 {
    let capped = theta.clamp(-CENTRIPETAL_CAP, CENTRIPETAL_CAP);
    cross_sv(theta, r) - r * (0.5 * capped * capped)
}

/// Buffers reused from step to step.
#[derive(Default)]
struct Scratch {
    rots: Vec<Rot>,
    frames: Vec<JointFrame>,
    contacts: Vec<ContactRow>,
    system: JointSystem,
    rhs: Vec<f64>,
    impulses: Vec<f64>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

fn update_rotations(bodies: &[RigidBody], rots: &mut Vec<Rot>) {
    rots.clear();
    rots.extend(bodies.iter().map(|b| Rot::new(b.angle)));
}

/// One exact solve of every joint row against the current velocities.
///
/// Point rows target the anchor gap at the end of the step, centripetal
/// motion included, rather than the instantaneous relative velocity:
/// projecting onto the tangent alone drains kinetic energy from every swing.
/// Limit rows form an active set; a limit may only push its joint back into
/// range.
fn solve_joint_velocities(
    bodies: &mut [RigidBody],
    joints: &mut [RevoluteJoint],
    dt: f64,
    s: &mut Scratch,
) {
    let inv_dt = 1.0 / dt;
    let Scratch { frames, system, rhs, impulses, .. } = s;
    let limit_velocity = |rows: &[Row], bodies: &[RigidBody], j: usize| {
        let f = &frames[j];
        rows[3 * j + 2].velocity(bodies) + f.side * f.limit_gap.max(0.0) * inv_dt
    };

    let mut in_set: u64 = 0;
    for (j, joint) in joints.iter().enumerate() {
        let side = frames[j].side;
        if side != 0.0
            && (joint.limit_impulse * side > 0.0
                || limit_velocity(&system.rows, bodies, j) * side < 0.0)
        {
            in_set |= 1 << j;
        }
    }

    for _ in 0..=2 * joints.len() {
        rhs.clear();
        for (j, f) in frames.iter().enumerate() {
            let (a, b) = (&bodies[joints[j].body_a], &bodies[joints[j].body_b]);
            let drift_b = b.linear_velocity * dt + anchor_drift(f.r_b, b.angular_velocity * dt);
            let drift_a = a.linear_velocity * dt + anchor_drift(f.r_a, a.angular_velocity * dt);
            let predicted = (f.gap + drift_b - drift_a) * inv_dt;
            rhs.extend([predicted.x, predicted.y, limit_velocity(&system.rows, bodies, j)]);
        }
        system.solve(rhs, in_set, impulses);

        // A limit that would have to pull is released and the block re-solved.
        let mut released = false;
        for (j, joint) in joints.iter_mut().enumerate() {
            if in_set & (1 << j) != 0 && (joint.limit_impulse + impulses[3 * j + 2]) * frames[j].side < 0.0 {
                system.rows[3 * j + 2].apply_impulse(bodies, -joint.limit_impulse);
                joint.limit_impulse = 0.0;
                in_set &= !(1 << j);
                released = true;
            }
        }
        if released {
            continue;
        }

        for (j, joint) in joints.iter_mut().enumerate() {
            let rows = &system.rows[3 * j..3 * j + 3];
            let lambda = &impulses[3 * j..3 * j + 3];
            rows[0].apply_impulse(bodies, lambda[0]);
            rows[1].apply_impulse(bodies, lambda[1]);
            joint.impulse += Vec2::new(lambda[0], lambda[1]);
            if in_set & (1 << j) != 0 {
                rows[2].apply_impulse(bodies, lambda[2]);
                joint.limit_impulse += lambda[2];
            }
        }

        // A limit the solve pushed its joint through joins the set.
        let mut grew = false;
        for j in 0..joints.len() {
            let side = frames[j].side;
            if side != 0.0
                && in_set & (1 << j) == 0
                && limit_velocity(&system.rows, bodies, j) * side < -1e-9
            {
                in_set |= 1 << j;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
}

pub(crate) fn advance(world: &mut WorldState, dt: f64) {
    SCRATCH.with(|scratch| advance_with(world, dt, &mut scratch.borrow_mut()));
}

fn advance_with(world: &mut WorldState, dt: f64, s: &mut Scratch) {
    let inv_dt = 1.0 / dt;
    let settings = world.settings.clone();
    let gravity = world.gravity;
    let ground_top = world.ground_height();
    let WorldState { bodies, joints, contacts, .. } = world;
    assert!(joints.len() <= 64, "the joint solver supports at most 64 joints");

    for body in bodies.iter_mut() {
        body.linear_velocity += gravity * dt;
    }
    for joint in joints.iter() {
        let tau = joint.applied_torque() * dt;
        Row::angle(joint.body_a, joint.body_b).apply_impulse(bodies, tau);
    }

    // Joint frames, warm started from last step's accumulated impulses.
    update_rotations(bodies, &mut s.rots);
    if !joints.is_empty() {
        s.system.build(bodies, joints, &s.rots);
    }
    s.frames.clear();
    for (j, joint) in joints.iter_mut().enumerate() {
        let (a, b) = (&bodies[joint.body_a], &bodies[joint.body_b]);
        let r_a = s.rots[joint.body_a].apply(joint.anchor_a);
        let r_b = s.rots[joint.body_b].apply(joint.anchor_b);
        let (side, limit_gap) = nearer_limit(joint.angle_limits, b.angle - a.angle);
        if joint.limit_impulse * side <= 0.0 {
            joint.limit_impulse = 0.0;
        }
        s.frames.push(JointFrame {
            r_a,
            r_b,
            gap: b.position + r_b - a.position - r_a,
            side,
            limit_gap,
        });
        let rows = &s.system.rows[3 * j..3 * j + 3];
        rows[0].apply_impulse(bodies, joint.impulse.x);
        rows[1].apply_impulse(bodies, joint.impulse.y);
        rows[2].apply_impulse(bodies, joint.limit_impulse);
    }

    // Ground contacts: one row per box corner within the speculative band.
    s.contacts.clear();
    for (index, body) in bodies.iter_mut().enumerate() {
        let rot = s.rots[index];
        for (corner, local) in local_corners(body.half_extents).into_iter().enumerate() {
            let r = rot.apply(local);
            let separation = body.position.y + r.y - ground_top;
            // widen the band by how far the corner will fall this step
            let approach = -(body.linear_velocity + cross_sv(body.angular_velocity, r)).y * dt;
            if separation >= settings.speculative_distance + approach.max(0.0) {
                continue;
            }
            let cached = contacts[index][corner];
            let p = Vec2::new(cached.tangent, cached.normal);
            body.linear_velocity += p * body.inv_mass;
            body.angular_velocity += body.inv_inertia * r.cross(p);
            s.contacts.push(ContactRow {
                body: index,
                corner,
                r,
                separation,
                normal_mass: 1.0 / (body.inv_mass + body.inv_inertia * r.x * r.x),
                tangent_mass: 1.0 / (body.inv_mass + body.inv_inertia * r.y * r.y),
                normal_impulse: cached.normal,
                tangent_impulse: cached.tangent,
            });
        }
    }

    for _ in 0..settings.velocity_iterations {
        for row in s.contacts.iter_mut() {
            let body = &mut bodies[row.body];

            let vp = body.linear_velocity + cross_sv(body.angular_velocity, row.r);
            let max_friction = settings.friction * row.normal_impulse;
            let lambda = -row.tangent_mass * vp.x;
            let total = (row.tangent_impulse + lambda).clamp(-max_friction, max_friction);
            let applied = total - row.tangent_impulse;
            row.tangent_impulse = total;
            let p = Vec2::new(applied, 0.0);
            body.linear_velocity += p * body.inv_mass;
            body.angular_velocity += body.inv_inertia * row.r.cross(p);

            let vp = body.linear_velocity + cross_sv(body.angular_velocity, row.r);
            let bias = row.separation.max(0.0) * inv_dt;
            let lambda = -row.normal_mass * (vp.y + bias);
            let total = (row.normal_impulse + lambda).max(0.0);
            let applied = total - row.normal_impulse;
            row.normal_impulse = total;
            let p = Vec2::new(0.0, applied);
            body.linear_velocity += p * body.inv_mass;
            body.angular_velocity += body.inv_inertia * row.r.cross(p);
        }
        if !joints.is_empty() {
            solve_joint_velocities(bodies, joints, dt, s);
        }
    }

    for cache in contacts.iter_mut() {
        *cache = [CornerImpulse::default(); 4];
    }
    for row in &s.contacts {
        contacts[row.body][row.corner] = CornerImpulse {
            normal: row.normal_impulse,
            tangent: row.tangent_impulse,
        };
    }

    for body in bodies.iter_mut() {
        let translation = body.linear_velocity * dt;
        let distance = translation.length();
        if distance > settings.max_translation {
            body.linear_velocity = body.linear_velocity * (settings.max_translation / distance);
        }
        let rotation = body.angular_velocity * dt;
        if rotation.abs() > settings.max_rotation {
            body.angular_velocity *= settings.max_rotation / rotation.abs();
        }
        body.position += body.linear_velocity * dt;
        body.angle += body.angular_velocity * dt;
    }

    solve_positions(bodies, joints, &settings, ground_top, s);
}

/// Ground pushes run before the joint block so each pass ends joint-consistent.
/// The joint block is factored once per pass (quasi-Newton): its Jacobians
/// barely move between iterations.
fn solve_positions(
    bodies: &mut [RigidBody],
    joints: &[RevoluteJoint],
    settings: &SolverSettings,
    ground_top: f64,
    s: &mut Scratch,
) {
    update_rotations(bodies, &mut s.rots);
    for iteration in 0..settings.position_iterations {
        let mut min_separation = 0.0_f64;
        for (body, rot) in bodies.iter_mut().zip(s.rots.iter_mut()) {
            let mut pushed = false;
            for local in local_corners(body.half_extents) {
                let r = rot.apply(local);
                let separation = body.position.y + r.y - ground_top;
                min_separation = min_separation.min(separation);
                let c = (settings.baumgarte * (separation + settings.linear_slop))
                    .clamp(-settings.max_linear_correction, 0.0);
                if c < 0.0 {
                    let k = body.inv_mass + body.inv_inertia * r.x * r.x;
                    let impulse = -c / k;
                    body.position.y += body.inv_mass * impulse;
                    body.angle += body.inv_inertia * r.x * impulse;
                    pushed = true;
                }
            }
            if pushed {
                *rot = Rot::new(body.angle);
            }
        }

        let mut max_gap = 0.0_f64;
        if !joints.is_empty() {
            if iteration == 0 {
                s.system.build(bodies, joints, &s.rots);
            }
            s.rhs.clear();
            let mut overshooting: u64 = 0;
            for (j, joint) in joints.iter().enumerate() {
                let (a, b) = (&bodies[joint.body_a], &bodies[joint.body_b]);
                let gap = b.position + s.rots[joint.body_b].apply(joint.anchor_b)
                    - a.position
                    - s.rots[joint.body_a].apply(joint.anchor_a);
                max_gap = max_gap.max(gap.length());
                let angle = b.angle - a.angle;
                let overshoot = match joint.angle_limits {
                    Some([lower, _]) if angle < lower => {
                        (angle - lower).max(-settings.max_angular_correction)
                    }
                    Some([_, upper]) if angle > upper => {
                        (angle - upper).min(settings.max_angular_correction)
                    }
                    _ => 0.0,
                };
                s.rhs.extend([gap.x, gap.y, overshoot]);
                if overshoot != 0.0 {
                    overshooting |= 1 << j;
                }
            }
            if max_gap <= JOINT_POSITION_STOP
                && overshooting == 0
                && min_separation >= -3.0 * settings.linear_slop
            {
                break;
            }
            s.system.solve(&s.rhs, overshooting, &mut s.impulses);
            for (row, &lambda) in s.system.rows.iter().zip(&s.impulses) {
                if lambda != 0.0 {
                    row.displace(bodies, lambda);
                }
            }
            update_rotations(bodies, &mut s.rots);
        } else if min_separation >= -3.0 * settings.linear_slop {
            break;
        }
    }
}
