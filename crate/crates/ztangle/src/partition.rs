//! Exact partition sums on spin graphs and the end-to-end invariance check:
//! the brute-force oracle that the flip ledger is measured against.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::flips::{self, FactorLedger, FlipError, FlipRequest};
use crate::models::{Domain, Model, ModelError, Spin};
use crate::quad::{self, QuadError, Singularity};
use crate::surface::{derive_spin_graph, Coord3, SpinGraph, Surface, SurfaceError};

pub type BoundaryAssignment = BTreeMap<Coord3, Spin>;

pub const DISCRETE_INTERIOR_CAP: usize = 16;
pub const CONTINUOUS_INTERIOR_CAP: usize = 2;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("boundary assignment incomplete or mismatched: {0}")]
    Boundary(String),
    #[error("interior size {0} exceeds the cap {1}")]
    CapExceeded(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Flip(#[from] FlipError),
    #[error("spin value has the wrong domain for the model")]
    DomainMismatch,
}

/// Worker pool sized by ZTANGLE_THREADS when set; results do not depend on
/// the thread count (chunked tree reduction).
fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Ok(v) = std::env::var("ZTANGLE_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                b = b.num_threads(n.max(1));
            }
        }
        b.build().expect("worker pool")
    })
}

/// Pairwise (tree) summation: same result for any chunking of the terms.
fn tree_sum(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        n => tree_sum(&xs[..n / 2]) + tree_sum(&xs[n / 2..]),
    }
}

fn edge_product(
    g: &SpinGraph,
    model: Model,
    value: &dyn Fn(Coord3) -> Spin,
) -> Result<Complex64, ModelError> {
    let mut prod = Complex64::new(1.0, 0.0);
    for e in &g.edges {
        prod *= model.weight(e.kind.into(), e.rho_a, e.rho_b, value(e.x_first), value(e.x_second))?;
    }
    Ok(prod)
}

fn check_boundary(g: &SpinGraph, boundary: &BoundaryAssignment) -> Result<(), PartitionError> {
    let expected = g.boundary();
    let got: std::collections::BTreeSet<_> = boundary.keys().copied().collect();
    if expected != got {
        let missing: Vec<_> = expected.difference(&got).collect();
        let extra: Vec<_> = got.difference(&expected).collect();
        return Err(PartitionError::Boundary(format!(
            "missing {missing:?}, extraneous {extra:?}"
        )));
    }
    Ok(())
}

/// Z = sum over interior spin assignments of the product of all edge weights
/// times the single-spin weights of the interior vertices.
pub fn partition_function(
    g: &SpinGraph,
    model: Model,
    boundary: &BoundaryAssignment,
) -> Result<Complex64, PartitionError> {
    check_boundary(g, boundary)?;
    let interior: Vec<Coord3> = g.interior.iter().copied().collect();
    match model.domain() {
        Domain::Discrete(n) => {
            if interior.len() > DISCRETE_INTERIOR_CAP {
                return Err(PartitionError::CapExceeded(interior.len(), DISCRETE_INTERIOR_CAP));
            }
            for v in boundary.values() {
                if !matches!(v, Spin::D(_)) {
                    return Err(PartitionError::DomainMismatch);
                }
            }
            let total: u64 = (n as u64).pow(interior.len() as u32);
            let term = |idx: u64| -> Result<Complex64, ModelError> {
                let mut assign: BTreeMap<Coord3, u32> = BTreeMap::new();
                let mut rest = idx;
                for &v in &interior {
                    assign.insert(v, (rest % n as u64) as u32);
                    rest /= n as u64;
                }
                let value = |v: Coord3| -> Spin {
                    boundary.get(&v).copied().unwrap_or_else(|| Spin::D(assign[&v]))
                };
                let mut t = edge_product(g, model, &value)?;
                for &v in &interior {
                    t *= model.s_weight(Spin::D(assign[&v]));
                }
                Ok(t)
            };
            use rayon::prelude::*;
            let terms: Result<Vec<Complex64>, ModelError> =
                pool().install(|| (0..total).into_par_iter().map(term).collect());
            Ok(tree_sum(&terms?))
        }
        Domain::Continuous => {
            if interior.len() > CONTINUOUS_INTERIOR_CAP {
                return Err(PartitionError::CapExceeded(interior.len(), CONTINUOUS_INTERIOR_CAP));
            }
            for v in boundary.values() {
                if !matches!(v, Spin::C(_)) {
                    return Err(PartitionError::DomainMismatch);
                }
            }
            let v = integrate_interior(g, model, boundary, &interior, &BTreeMap::new(), 1e-8)?;
            Ok(Complex64::new(v, 0.0))
        }
    }
}

/// Nested quadrature over the remaining interior vertices, innermost first.
/// Each level splits out the integrable singularities the integrand has at
/// the current values of the vertex's neighbours.
fn integrate_interior(
    g: &SpinGraph,
    model: Model,
    boundary: &BoundaryAssignment,
    remaining: &[Coord3],
    fixed: &BTreeMap<Coord3, f64>,
    tol: f64,
) -> Result<f64, PartitionError> {
    let Some((&v0, rest)) = remaining.split_first() else {
        let value = |v: Coord3| -> Spin {
            boundary
                .get(&v)
                .copied()
                .unwrap_or_else(|| Spin::C(fixed[&v]))
        };
        return Ok(edge_product(g, model, &value)?.re);
    };
    let resolve = |v: Coord3| -> Option<f64> {
        boundary
            .get(&v)
            .map(|s| match s {
                Spin::C(x) => *x,
                Spin::D(_) => unreachable!("continuous boundary"),
            })
            .or_else(|| fixed.get(&v).copied())
    };
    // edges incident to v0 whose other endpoint already has a value give
    // the singular points of this level's integrand
    let mut sing_data: Vec<(f64, f64, usize)> = Vec::new(); // (point, gamma, edge idx)
    for (idx, e) in g.edges.iter().enumerate() {
        let other = if e.x_first == v0 {
            e.x_second
        } else if e.x_second == v0 {
            e.x_first
        } else {
            continue;
        };
        if let Some(x) = resolve(other) {
            let gamma = model
                .singular_gamma(e.kind.into(), e.rho_a, e.rho_b)
                .unwrap_or(0.0);
            if gamma > 0.0 {
                sing_data.push((x, gamma, idx));
            }
        }
    }
    let eval = |x: f64, skip: Option<usize>| -> f64 {
        let mut fx = fixed.clone();
        fx.insert(v0, x);
        if rest.is_empty() {
            let mut prod = model.s_weight(Spin::C(x)).re;
            for (idx, e) in g.edges.iter().enumerate() {
                if Some(idx) == skip {
                    continue;
                }
                let val = |v: Coord3| Spin::C(resolve_in(v, boundary, &fx));
                prod *= model
                    .weight(e.kind.into(), e.rho_a, e.rho_b, val(e.x_first), val(e.x_second))
                    .map(|c| c.re)
                    .unwrap_or(0.0);
            }
            prod
        } else {
            // inner integral; the skipped factor trick is not needed because
            // deeper levels re-derive their own singularities
            let inner = integrate_interior(g, model, boundary, rest, &fx, tol).unwrap_or(0.0);
            let mut prod = model.s_weight(Spin::C(x)).re * inner;
            if let Some(idx) = skip {
                // divide the singular factor back out for the reduced form
                let e = &g.edges[idx];
                let val = |v: Coord3| Spin::C(resolve_in(v, boundary, &fx));
                if let Ok(w) = model.weight(e.kind.into(), e.rho_a, e.rho_b, val(e.x_first), val(e.x_second)) {
                    if w.re != 0.0 {
                        prod /= w.re;
                    }
                }
            }
            prod
        }
    };
    let full = |x: f64| eval(x, None);
    let mut sing: Vec<Singularity> = sing_data
        .iter()
        .map(|&(point, gamma, idx)| Singularity {
            point,
            gamma,
            reduced: Box::new(move |x: f64| eval(x, Some(idx))),
        })
        .collect();
    let (val, _err) = quad::integrate_line(&full, &mut sing, tol)?;
    Ok(val)
}

fn resolve_in(v: Coord3, boundary: &BoundaryAssignment, fixed: &BTreeMap<Coord3, f64>) -> f64 {
    match boundary.get(&v) {
        Some(Spin::C(x)) => *x,
        Some(Spin::D(_)) => unreachable!("continuous boundary"),
        None => fixed[&v],
    }
}

#[derive(Clone, Debug)]
pub struct ZReport {
    pub z0: Complex64,
    pub z: Complex64,
    pub ledger_value: Complex64,
    pub residual: f64,
    pub ledger: FactorLedger,
}

/// Run the script, evaluate both partition functions by brute force, and
/// compare Z(sigma) against ledger * Z(sigma0).
pub fn check_z_invariance(
    s0: &Surface,
    script: &[FlipRequest],
    model: Model,
    boundary: &BoundaryAssignment,
) -> Result<ZReport, PartitionError> {
    let (s1, ledger) = flips::run_script(s0, script)?;
    let g0 = derive_spin_graph(s0)?;
    let g1 = derive_spin_graph(&s1)?;
    let z0 = partition_function(&g0, model, boundary)?;
    let z = partition_function(&g1, model, boundary)?;
    let phi = flips::evaluate_ledger(&ledger, model)?;
    let residual = (z - phi * z0).norm() / z.norm().max(f64::MIN_POSITIVE);
    Ok(ZReport { z0, z, ledger_value: phi, residual, ledger })
}
