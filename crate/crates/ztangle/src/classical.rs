//! The quasi-classical layer: two-point Lagrangians, three-leg stationarity,
//! the classical star-triangle relation, discrete Laplace systems, the
//! closure relation, and classical invariance of the action under flips.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flips::{self, FlipError, FlipRequest};
use crate::surface::{derive_spin_graph, Coord3, SpinGraph, Surface, SurfaceError, WeightKind};

pub type ClassicalField = BTreeMap<Coord3, f64>;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("three-leg solution at infinity (vanishing denominator)")]
    AtInfinity,
    #[error("coincident spin values make a Lagrangian pole")]
    Pole,
    #[error("zero rapidity difference on an edge")]
    ZeroCoupling,
    #[error("field does not cover vertex {0:?}")]
    MissingValue(Coord3),
    #[error("boundary assignment incomplete: {0}")]
    Boundary(String),
    #[error("graph has no interior vertices")]
    NoInterior,
    #[error("new vertex {0:?} has {1} resolvable legs, expected 2 or 3")]
    Unpropagatable(Coord3, usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Flip(#[from] FlipError),
}

/// Two-point Lagrangian; the barred weight's Lagrangian is L at -alpha.
pub fn lagrangian(alpha: f64, x: f64, y: f64) -> Result<f64, ClassicalError> {
    if alpha == 0.0 {
        return Err(ClassicalError::ZeroCoupling);
    }
    if x == y {
        return Err(ClassicalError::Pole);
    }
    Ok(alpha * (x - y).abs().ln() - 0.5 * alpha * alpha.abs().ln())
}

/// Stationary point of L_a(x1,.) - L_{a+b}(x2,.) + L_b(x3,.).
pub fn three_leg_solve(
    x1: f64,
    x2: f64,
    x3: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, ClassicalError> {
    let d = -alpha * x1 + (alpha + beta) * x2 - beta * x3;
    let scale = x1.abs().max(x2.abs()).max(x3.abs()).max(1.0)
        * alpha.abs().max(beta.abs()).max(1.0);
    if d.abs() <= 1e-12 * scale {
        return Err(ClassicalError::AtInfinity);
    }
    let x0 = (alpha * x2 * x3 - (alpha + beta) * x1 * x3 + beta * x1 * x2) / d;
    if x0 == x1 || x0 == x2 || x0 == x3 {
        return Err(ClassicalError::Pole);
    }
    Ok(x0)
}

/// |LHS - RHS| of the classical star-triangle relation with the center
/// evaluated at its stationary value.
pub fn check_classical_str(
    x1: f64,
    x2: f64,
    x3: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, ClassicalError> {
    let x0 = three_leg_solve(x1, x2, x3, alpha, beta)?;
    let lhs = lagrangian(alpha, x1, x0)? - lagrangian(alpha + beta, x2, x0)?
        + lagrangian(beta, x3, x0)?;
    let rhs = -lagrangian(alpha, x2, x3)? + lagrangian(alpha + beta, x1, x3)?
        - lagrangian(beta, x1, x2)?;
    Ok((lhs - rhs).abs())
}

/// Signed edge coefficient: +a across a plain edge, -a across a barred one.
fn edge_coeff(kind: WeightKind, rho_a: f64, rho_b: f64) -> f64 {
    let a = rho_a - rho_b;
    match kind {
        WeightKind::Plain => a,
        WeightKind::Barred => -a,
    }
}

/// Action functional: sum of the edge Lagrangians over the spin graph.
pub fn action_value(g: &SpinGraph, field: &ClassicalField) -> Result<f64, ClassicalError> {
    let mut total = 0.0;
    for e in &g.edges {
        let xi = *field.get(&e.x_first).ok_or(ClassicalError::MissingValue(e.x_first))?;
        let xj = *field.get(&e.x_second).ok_or(ClassicalError::MissingValue(e.x_second))?;
        total += lagrangian(edge_coeff(e.kind, e.rho_a, e.rho_b), xi, xj)?;
    }
    Ok(total)
}

/// Legs incident to `v`: (coefficient, other endpoint).
fn legs(g: &SpinGraph, v: Coord3) -> Vec<(f64, Coord3)> {
    let mut out = Vec::new();
    for e in &g.edges {
        let c = edge_coeff(e.kind, e.rho_a, e.rho_b);
        if e.x_first == v {
            out.push((c, e.x_second));
        } else if e.x_second == v {
            out.push((c, e.x_first));
        }
    }
    out
}

/// The discrete Laplace system restricted to `vertices`: per-vertex
/// stationarity residuals and the analytic Jacobian (entries are sums of
/// +-coefficient / (x_i - x_j)^2).
pub fn laplace_system(
    g: &SpinGraph,
    field: &ClassicalField,
    vertices: &[Coord3],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = vertices.len();
    let res: Vec<f64> = vertices
        .iter()
        .map(|&v| stationarity_residual(g, field, v))
        .collect();
    let mut jac = vec![vec![0.0; n]; n];
    for (row, &v) in vertices.iter().enumerate() {
        for (c, u) in legs(g, v) {
            let d = field[&v] - field[&u];
            jac[row][row] += -c / (d * d);
            if let Some(col) = vertices.iter().position(|&w| w == u) {
                jac[row][col] += c / (d * d);
            }
        }
    }
    (res, jac)
}

fn stationarity_residual(g: &SpinGraph, field: &ClassicalField, v: Coord3) -> f64 {
    legs(g, v)
        .iter()
        .map(|&(c, u)| c / (field[&v] - field[&u]))
        .sum()
}

/// A vertex whose leg coefficients cancel per neighbour is stationary for
/// every value (a flat direction of the action).
fn is_flat(g: &SpinGraph, v: Coord3) -> bool {
    let mut per_endpoint: BTreeMap<Coord3, f64> = BTreeMap::new();
    for (c, u) in legs(g, v) {
        *per_endpoint.entry(u).or_insert(0.0) += c;
    }
    per_endpoint.values().all(|c| c.abs() < 1e-14)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceInit {
    NeighborMean,
    Explicit,
}

#[derive(Clone, Debug)]
pub struct LaplaceReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_sup: f64,
    pub field: ClassicalField,
    pub action: f64,
    /// interior vertices on which the action does not depend
    pub flat_vertices: Vec<Coord3>,
}

pub const LAPLACE_TOL: f64 = 1e-10;
pub const LAPLACE_MAX_ITERS: usize = 100;

/// Dense Gaussian elimination with partial pivoting; None when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Newton iteration on the discrete Laplace system (the stationarity of the
/// action at every interior vertex), with damping and a deterministic
/// midpoint restart for iterates that run away.
pub fn solve_laplace(
    g: &SpinGraph,
    boundary: &ClassicalField,
    init: Option<&ClassicalField>,
) -> Result<LaplaceReport, ClassicalError> {
    let expected = g.boundary();
    let got: BTreeSet<Coord3> = boundary.keys().copied().collect();
    if expected != got {
        return Err(ClassicalError::Boundary(format!(
            "expected {expected:?}, got {got:?}"
        )));
    }
    if g.interior.is_empty() {
        return Err(ClassicalError::NoInterior);
    }
    let mut flat_vertices = Vec::new();
    let mut active: Vec<Coord3> = Vec::new();
    for &v in &g.interior {
        if is_flat(g, v) {
            flat_vertices.push(v);
        } else {
            active.push(v);
        }
    }

    let mut field: ClassicalField = boundary.clone();
    match init {
        Some(f) => {
            for &v in &g.interior {
                field.insert(v, *f.get(&v).ok_or(ClassicalError::MissingValue(v))?);
            }
        }
        None => {
            // neighbour mean of already-valued endpoints, nudged off any
            // collision with a neighbour value
            for (idx, &v) in g.interior.iter().enumerate() {
                let vals: Vec<f64> = legs(g, v)
                    .iter()
                    .filter_map(|(_, u)| field.get(u).copied())
                    .collect();
                let mut x = if vals.is_empty() {
                    0.37 * (idx + 1) as f64
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                while vals.iter().any(|&u| (x - u).abs() < 1e-9) {
                    x += 0.37;
                }
                field.insert(v, x);
            }
        }
    }

    let sup = |f: &ClassicalField| -> f64 {
        active
            .iter()
            .map(|&v| stationarity_residual(g, f, v).abs())
            .fold(0.0, f64::max)
    };
    let norm2 = |f: &ClassicalField| -> f64 {
        active
            .iter()
            .map(|&v| stationarity_residual(g, f, v).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let trace = std::env::var("ZTANGLE_LAPLACE_TRACE").is_ok();
    let mut iterations = 0;
    // alternate a Gauss-Seidel sweep (each vertex jumps to the nearest exact
    // real root of its own one-dimensional stationarity equation, which
    // cannot chase the pseudo-root at infinity) with a damped Newton step
    // (quadratic once the sweep has brought the iterate into its basin)
    let mut gs_turn = true;
    let mut gs_moved = true;
    while iterations < LAPLACE_MAX_ITERS {
        let res: Vec<f64> = active
            .iter()
            .map(|&v| stationarity_residual(g, &field, v))
            .collect();
        if res.iter().all(|r| r.abs() < LAPLACE_TOL) {
            break;
        }
        iterations += 1;
        if trace {
            eprintln!("iter {iterations}: sup={}", sup(&field));
        }
        if gs_turn {
            gs_turn = false;
            gs_moved = false;
            for &v in &active {
                if stationarity_residual(g, &field, v).abs() > LAPLACE_TOL
                    || field[&v].abs() > 1e6
                {
                    gs_moved |= solve_vertex_1d(g, &mut field, v);
                }
            }
            continue;
        }
        gs_turn = true;
        let (_, jac) = laplace_system(g, &field, &active);
        let mut moved = false;
        if let Some(dx) = solve_dense(jac, res.iter().map(|r| -r).collect()) {
            let cur = norm2(&field);
            let mut t = 1.0;
            while t > 1e-8 {
                let mut trial = field.clone();
                for (k, &v) in active.iter().enumerate() {
                    *trial.get_mut(&v).unwrap() += t * dx[k];
                }
                let ok = active.iter().all(|&v| {
                    trial[&v].abs() < 1e6
                        && legs(g, v).iter().all(|(_, u)| trial[&v] != trial[u])
                });
                if ok && norm2(&trial) < cur {
                    field = trial;
                    moved = true;
                    break;
                }
                t /= 2.0;
            }
        }
        if !moved && !gs_moved {
            break;
        }
    }

    let residual_sup = sup(&field);
    // a tiny residual is necessary but not sufficient: an iterate parked far
    // out in a tail where the equation decays also looks quiet, so confirm
    // each constrained vertex actually sits on a real root of its equation
    let mut genuine = true;
    for &v in &active {
        let constrained = legs(g, v)
            .iter()
            .any(|(c, u)| c.abs() > 1e-15 && field[u] != field[&v]);
        if !constrained {
            continue;
        }
        let x = field[&v];
        let near = vertex_roots(g, &field, v)
            .into_iter()
            .any(|root| (root - x).abs() <= 1e-6 * (1.0 + x.abs()));
        if !near {
            genuine = false;
            break;
        }
    }
    let action = action_value(g, &field).unwrap_or(f64::NAN);
    Ok(LaplaceReport {
        converged: residual_sup < LAPLACE_TOL && genuine,
        iterations,
        residual_sup,
        field,
        action,
        flat_vertices,
    })
}

/// All real roots of one vertex's stationarity equation (a sum of simple
/// poles), bracketed between consecutive pole locations and in the tails,
/// then bisected down to machine precision.
fn vertex_roots(g: &SpinGraph, field: &ClassicalField, v: Coord3) -> Vec<f64> {
    // aggregate per distinct neighbour value so each pole is simple
    let mut poles: Vec<(f64, f64)> = Vec::new();
    for (c, u) in legs(g, v) {
        let x = field[&u];
        match poles.iter_mut().find(|(p, _)| *p == x) {
            Some((_, acc)) => *acc += c,
            None => poles.push((x, c)),
        }
    }
    poles.retain(|(_, c)| c.abs() > 1e-15);
    if poles.is_empty() {
        return Vec::new();
    }
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = |x: f64| -> f64 { poles.iter().map(|&(u, c)| c / (x - u)).sum() };
    let bisect = |mut a: f64, mut b: f64, ra: f64| -> f64 {
        // sign(r(a)) = sign(ra) differs from sign at b
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if r(m).signum() == ra.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut roots = Vec::new();
    // between consecutive poles, sampling interior points to catch root pairs
    for w in poles.windows(2) {
        let eps = 1e-10 * (w[1].0 - w[0].0);
        let (a, b) = (w[0].0 + eps, w[1].0 - eps);
        if a >= b {
            continue;
        }
        let mut prev_x = a;
        let mut prev_r = r(a);
        for k in 1..=16 {
            let x = a + (b - a) * k as f64 / 16.0;
            let rx = r(x);
            if rx.signum() != prev_r.signum() {
                roots.push(bisect(prev_x, x, prev_r));
            }
            prev_x = x;
            prev_r = rx;
        }
    }
    // tails: expand outward until the sign settles or flips
    let tail_eps = 1e-10 * (1.0 + poles.last().unwrap().0.abs() + poles[0].0.abs());
    for (inner, dir) in [
        (poles[0].0 - tail_eps, -1.0),
        (poles.last().unwrap().0 + tail_eps, 1.0),
    ] {
        let ri = r(inner);
        let mut step = tail_eps.max(1.0);
        for _ in 0..60 {
            let x = inner + dir * step;
            let rx = r(x);
            // once the sum is pure cancellation noise no root is resolvable
            let mag: f64 = poles.iter().map(|&(u, c)| (c / (x - u)).abs()).sum();
            if rx.abs() <= 1e-12 * mag {
                break;
            }
            if rx.signum() != ri.signum() {
                let root = if dir < 0.0 {
                    bisect(x, inner, r(x))
                } else {
                    bisect(inner, x, ri)
                };
                roots.push(root);
                break;
            }
            step *= 4.0;
        }
    }
    roots
}

/// Move `v` to the real root of its own stationarity equation nearest to its
/// current value; true when a root exists.
fn solve_vertex_1d(g: &SpinGraph, field: &mut ClassicalField, v: Coord3) -> bool {
    let cur = field[&v];
    let mut best: Option<f64> = None;
    let mut best_d = f64::INFINITY;
    // nearest root wins; near-ties go to the leftmost root so the pick is
    // stable against the last ulp of the bisection
    for root in vertex_roots(g, field, v) {
        let d = (root - cur).abs();
        if d + 1e-9 * (1.0 + d) < best_d {
            best = Some(root);
            best_d = d;
        }
    }
    match best {
        Some(x) => {
            field.insert(v, x);
            true
        }
        None => false,
    }
}

/// The closure relation around a cube corner: the three directional
/// Lagrangian differences sum to zero once the corner value solves its
/// stationarity equation. Inputs are the three face values.
pub fn check_closure(
    x13: f64,
    x23: f64,
    x12: f64,
    p: f64,
    q: f64,
    r: f64,
) -> Result<f64, ClassicalError> {
    let x = three_leg_solve(x13, x23, x12, r - q, q - p)?;
    let di = -lagrangian(p - r, x13, x12)? - lagrangian(p - r, x23, x)?;
    let dj = lagrangian(q - r, x23, x12)? + lagrangian(q - r, x13, x)?;
    let dk = lagrangian(p - q, x23, x13)? + lagrangian(p - q, x, x12)?;
    Ok((di + dj + dk).abs())
}

/// Stationary value of a vertex with exactly two or three legs, in closed
/// form (used to propagate a solved field across a flip).
fn propagate_value(lgs: &[(f64, f64)]) -> Result<f64, ClassicalError> {
    match lgs {
        [(c1, u1), (c2, u2)] => {
            let den = c1 + c2;
            if den.abs() < 1e-14 {
                return Err(ClassicalError::AtInfinity);
            }
            Ok((c1 * u2 + c2 * u1) / den)
        }
        [(c1, u1), (c2, u2), (c3, u3)] => {
            let cs = [*c1, *c2, *c3];
            let xs = [*u1, *u2, *u3];
            let num: f64 = (0..3).map(|e| cs[e] * xs[(e + 1) % 3] * xs[(e + 2) % 3]).sum();
            let den: f64 = (0..3).map(|e| cs[e] * (xs[(e + 1) % 3] + xs[(e + 2) % 3])).sum();
            if den.abs() < 1e-12 * xs.iter().fold(1.0f64, |m, x| m.max(x.abs())) {
                return Err(ClassicalError::AtInfinity);
            }
            Ok(num / den)
        }
        _ => unreachable!("propagate_value takes 2 or 3 legs"),
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalZReport {
    pub action0: f64,
    pub action: f64,
    pub delta: f64,
    /// spread of the deformed action over probe values of the flat spins
    pub flat_spread: Option<f64>,
    pub laplace: LaplaceReport,
}

/// Solve the base surface, push the field through the script, and compare
/// the two action values. Flip-created vertices are valued constructively:
/// stationary ones by the closed-form leg solve; flat ones by probes, over
/// which the action must not vary.
pub fn check_classical_zinvariance(
    s0: &Surface,
    script: &[FlipRequest],
    boundary: &ClassicalField,
) -> Result<ClassicalZReport, ClassicalError> {
    let g0 = derive_spin_graph(s0)?;
    let laplace = solve_laplace(&g0, boundary, None)?;
    let action0 = laplace.action;

    // walk the script once to collect per-step surfaces
    let mut surfaces = vec![s0.clone()];
    let mut cur = s0.clone();
    for req in script {
        let (next, _) = flips::apply_flip(&cur, req.flip, req.direction, req.anchor, req.r_value)?;
        surfaces.push(next.clone());
        cur = next;
    }

    let mut actions = Vec::new();
    let mut any_flat = false;
    for probe_offset in [-1.0, 0.0, 1.0] {
        let mut field = laplace.field.clone();
        let mut prev_graph = g0.clone();
        for s in &surfaces[1..] {
            let g = derive_spin_graph(s)?;
            let new_vertices: Vec<Coord3> = g
                .black_vertices
                .difference(&prev_graph.black_vertices)
                .copied()
                .collect();
            // new vertices become stationarity-determined once all their
            // leg endpoints are valued; when a co-created pair blocks on
            // each other (the enveloping flat direction of a 1<->5 flip),
            // probe the lex-largest one and determine the rest from it
            let mut pending: Vec<Coord3> = new_vertices.clone();
            while !pending.is_empty() {
                let before = pending.len();
                pending.retain(|&v| {
                    let lgs: Option<Vec<(f64, f64)>> = legs(&g, v)
                        .iter()
                        .map(|&(c, u)| field.get(&u).map(|&x| (c, x)))
                        .collect();
                    match lgs {
                        Some(l) if (2..=3).contains(&l.len()) => {
                            if let Ok(x) = propagate_value(&l) {
                                field.insert(v, x);
                                false
                            } else {
                                true
                            }
                        }
                        _ => true,
                    }
                });
                if pending.len() == before {
                    let v = *pending.iter().max().unwrap();
                    let lg = legs(&g, v);
                    if lg.len() > 3 {
                        return Err(ClassicalError::Unpropagatable(v, lg.len()));
                    }
                    any_flat = true;
                    let nb: Vec<f64> =
                        lg.iter().filter_map(|(_, u)| field.get(u).copied()).collect();
                    let mean = nb.iter().sum::<f64>() / nb.len().max(1) as f64;
                    let mut x = mean + probe_offset;
                    while nb.iter().any(|&u| (x - u).abs() < 1e-9) {
                        x += 0.193;
                    }
                    field.insert(v, x);
                    pending.retain(|&w| w != v);
                }
            }
            prev_graph = g;
        }
        actions.push(action_value(&prev_graph, &field)?);
        if !any_flat {
            break;
        }
    }

    let mid = actions[actions.len() / 2];
    let spread = if any_flat {
        let max = actions.iter().fold(f64::MIN, |m, &a| m.max(a));
        let min = actions.iter().fold(f64::MAX, |m, &a| m.min(a));
        Some(max - min)
    } else {
        None
    };
    Ok(ClassicalZReport {
        action0,
        action: mid,
        delta: (mid - action0).abs(),
        flat_spread: spread,
        laplace,
    })
}
