//! Command-line front end: JSON I/O and machine-readable verification
//! reports. Exit codes: 0 pass/success, 1 verification failure, 2 usage
//! error, 3 schema error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ztangle::classical::{self, ClassicalField};
use ztangle::flips::{self, FlipKind, FlipRequest};
use ztangle::models::{Domain, Model, Spin};
use ztangle::partition::{self, BoundaryAssignment};
use ztangle::relations::{self, SpinProbe, StrForm};
use ztangle::report::{self, complex_json, CliError, Report};
use ztangle::surface::{build_flat_surface, derive_spin_graph, validate_surface, Coord3};

#[derive(Parser)]
#[command(name = "ztangle", version, about = "Edge-interaction lattice models on square surfaces in Z^3")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    First,
    Second,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a flat width x height surface of ij-squares and write it to a file
    SurfaceNew {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// comma-separated p-line rapidities, one per row
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// comma-separated q-line rapidities, one per column
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a surface file against all structural invariants
    SurfaceValidate { file: PathBuf },
    /// Apply a flip script to a surface and write the deformed surface
    FlipApply {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Brute-force partition function with a fixed boundary
    Partition {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        boundary: PathBuf,
    },
    /// Verify Z-invariance: Z(sigma) = ledger * Z(sigma0) for a flip script
    Zinv {
        #[arg(long)]
        surface0: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Verify the star-triangle relation at one rapidity triple
    VerifyStr {
        #[arg(long)]
        model: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = FormArg::Both)]
        form: FormArg,
        /// default 1e-12 for discrete models, 1e-6 for continuous
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Verify the two inversion relations at one rapidity pair
    VerifyInversion {
        #[arg(long)]
        model: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Verify the boundary star-triangle-type identity over all boundary triples
    VerifyStr0 {
        #[arg(long, default_value = "ising")]
        model: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
    },
    /// Solve the discrete Laplace system on a surface's spin graph
    ClassicalSolve {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        /// write the solved field as {"[i,j,k]": value}
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify the classical star-triangle relation at one instance
    ClassicalVerifyStr {
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        #[arg(long)]
        x3: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Verify the closure relation around one cube corner
    ClassicalClosure {
        #[arg(long)]
        x13: f64,
        #[arg(long)]
        x23: f64,
        #[arg(long)]
        x12: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Verify classical action invariance under a flip script
    ClassicalZinv {
        #[arg(long)]
        surface0: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Build the worked deformation example end to end and report its r-loops
    Demo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Failed => eprintln!("verification failed"),
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Schema(m) => eprintln!("schema error: {m}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse_model(name: &str) -> Result<Model, CliError> {
    Model::from_name(name)
        .ok_or_else(|| CliError::Usage(format!("unknown model {name:?} (ising, fishingnet)")))
}

fn load_script(path: &PathBuf) -> Result<Vec<FlipRequest>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn load_coord_map(path: &PathBuf) -> Result<BTreeMap<Coord3, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let raw: BTreeMap<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        out.insert(report::parse_coord_key(&k)?, v);
    }
    Ok(out)
}

/// Boundary spins for a model: integers are reduced into 0..N for discrete
/// models; continuous models take real values.
fn load_boundary(path: &PathBuf, model: Model) -> Result<BoundaryAssignment, CliError> {
    let mut out = BTreeMap::new();
    for (c, v) in load_coord_map(path)? {
        let spin = match model.domain() {
            Domain::Discrete(n) => {
                let i = v
                    .as_i64()
                    .ok_or_else(|| CliError::Schema(format!("boundary value {v} not an integer")))?;
                Spin::D(i.rem_euclid(n as i64) as u32)
            }
            Domain::Continuous => Spin::C(
                v.as_f64()
                    .ok_or_else(|| CliError::Schema(format!("boundary value {v} not a number")))?,
            ),
        };
        out.insert(c, spin);
    }
    Ok(out)
}

fn load_field(path: &PathBuf) -> Result<ClassicalField, CliError> {
    let mut out = BTreeMap::new();
    for (c, v) in load_coord_map(path)? {
        let x = v
            .as_f64()
            .ok_or_else(|| CliError::Schema(format!("field value {v} not a number")))?;
        out.insert(c, x);
    }
    Ok(out)
}

fn field_json(field: &ClassicalField) -> Value {
    let map: BTreeMap<String, f64> = field
        .iter()
        .map(|(c, &x)| (format!("[{},{},{}]", c.0, c.1, c.2), x))
        .collect();
    json!(map)
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::SurfaceNew { width, height, p, q, output } => {
            let s = build_flat_surface(width, height, &p, &q).map_err(fail)?;
            report::save_surface(&output, &s)?;
            Report::new(
                "surface-new",
                true,
                None,
                json!({"squares": s.squares.len(), "output": output.display().to_string()}),
            )
            .print();
            Ok(())
        }
        Cmd::SurfaceValidate { file } => {
            let s = report::load_surface(&file)?;
            let rep = validate_surface(&s);
            let loops: Vec<Value> = rep
                .loops
                .iter()
                .map(|l| json!({"id": l.id, "label": l.label(), "squares": l.squares.len()}))
                .collect();
            let pass = rep.ok;
            Report::new(
                "surface-validate",
                pass,
                None,
                json!({"violations": rep.violations, "loops": loops}),
            )
            .print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::FlipApply { surface, script, output } => {
            let s = report::load_surface(&surface)?;
            let script = load_script(&script)?;
            let (s1, ledger) = flips::run_script(&s, &script).map_err(fail)?;
            report::save_surface(&output, &s1)?;
            Report::new(
                "flip-apply",
                true,
                None,
                json!({
                    "steps": ledger.len(),
                    "ledger": ledger,
                    "output": output.display().to_string(),
                }),
            )
            .print();
            Ok(())
        }
        Cmd::Partition { surface, model, boundary } => {
            let model = parse_model(&model)?;
            let s = report::load_surface(&surface)?;
            let b = load_boundary(&boundary, model)?;
            let g = derive_spin_graph(&s).map_err(fail)?;
            let z = partition::partition_function(&g, model, &b).map_err(fail)?;
            Report::new(
                "partition",
                true,
                None,
                json!({"z": complex_json(z), "interior_spins": g.interior.len()}),
            )
            .print();
            Ok(())
        }
        Cmd::Zinv { surface0, script, model, boundary, tol } => {
            let model = parse_model(&model)?;
            let s0 = report::load_surface(&surface0)?;
            let script = load_script(&script)?;
            let b = load_boundary(&boundary, model)?;
            let rep = partition::check_z_invariance(&s0, &script, model, &b).map_err(fail)?;
            let pass = rep.residual < tol;
            Report::new(
                "zinv",
                pass,
                Some(tol),
                json!({
                    "z0": complex_json(rep.z0),
                    "z": complex_json(rep.z),
                    "ledger_value": complex_json(rep.ledger_value),
                    "residual": rep.residual,
                    "steps": rep.ledger.len(),
                }),
            )
            .print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::VerifyStr { model, p, q, r, form, tol } => {
            let model = parse_model(&model)?;
            let tol = tol.unwrap_or(match model.domain() {
                Domain::Discrete(_) => 1e-12,
                Domain::Continuous => 1e-6,
            });
            let probe = match model.domain() {
                Domain::Discrete(_) => SpinProbe::Exhaustive,
                Domain::Continuous => SpinProbe::Samples(vec![
                    (0.0, 1.0, 3.0),
                    (0.5, 2.0, -1.0),
                    (-2.0, 0.3, 1.7),
                ]),
            };
            let forms: &[StrForm] = match form {
                FormArg::First => &[StrForm::First],
                FormArg::Second => &[StrForm::Second],
                FormArg::Both => &[StrForm::First, StrForm::Second],
            };
            let mut details = Vec::new();
            let mut pass = true;
            for &f in forms {
                let rep = relations::check_str(model, p, q, r, f, &probe).map_err(fail)?;
                pass &= rep.max_rel_residual < tol && rep.r_spread < tol;
                details.push(json!({
                    "form": format!("{f:?}").to_lowercase(),
                    "max_rel_residual": rep.max_rel_residual,
                    "extracted_r": complex_json(rep.extracted_r),
                    "r_spread": rep.r_spread,
                    "configs_checked": rep.configs_checked,
                }));
            }
            Report::new("verify-str", pass, Some(tol), json!({"forms": details})).print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::VerifyInversion { model, p, q, tol } => {
            let model = parse_model(&model)?;
            let rep = relations::check_inversions(model, p, q).map_err(fail)?;
            let mut pass = rep.relation1_residual < tol;
            let mut details = json!({"relation1_residual": rep.relation1_residual});
            match rep.relation2_offdiag {
                Some(off) => {
                    pass &= off < tol;
                    details["relation2_offdiag"] = json!(off);
                    details["f_pair"] = complex_json(rep.f_pair.expect("with relation 2"));
                    details["f_pair_spread"] = json!(rep.f_pair_spread.expect("with relation 2"));
                }
                None => {
                    details["relation2"] = json!("distributional (not a plain function identity)");
                }
            }
            Report::new("verify-inversion", pass, Some(tol), details).print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::VerifyStr0 { model, p, q, r, tol } => {
            let model = parse_model(&model)?;
            let n = match model.domain() {
                Domain::Discrete(n) => n,
                Domain::Continuous => {
                    return Err(CliError::Usage("verify-str0 needs a discrete model".into()))
                }
            };
            let mut worst = 0.0f64;
            for x1 in 0..n {
                for x3 in 0..n {
                    for x4 in 0..n {
                        let res =
                            relations::check_str0(model, p, q, r, (x1, x3, x4)).map_err(fail)?;
                        worst = worst.max(res);
                    }
                }
            }
            let pass = worst < tol;
            Report::new(
                "verify-str0",
                pass,
                Some(tol),
                json!({"max_rel_residual": worst, "boundary_triples": n * n * n}),
            )
            .print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::ClassicalSolve { surface, boundary, output } => {
            let s = report::load_surface(&surface)?;
            let b = load_field(&boundary)?;
            let g = derive_spin_graph(&s).map_err(fail)?;
            let rep = classical::solve_laplace(&g, &b, None).map_err(fail)?;
            if let Some(path) = &output {
                let text = serde_json::to_string_pretty(&field_json(&rep.field))
                    .expect("field serializes");
                std::fs::write(path, text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            }
            let pass = rep.converged;
            Report::new(
                "classical-solve",
                pass,
                Some(classical::LAPLACE_TOL),
                json!({
                    "converged": rep.converged,
                    "iterations": rep.iterations,
                    "residual_sup": rep.residual_sup,
                    "action": rep.action,
                    "flat_vertices": rep.flat_vertices.len(),
                    "field": field_json(&rep.field),
                }),
            )
            .print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::ClassicalVerifyStr { x1, x2, x3, alpha, beta, tol } => {
            let res = classical::check_classical_str(x1, x2, x3, alpha, beta).map_err(fail)?;
            let x0 = classical::three_leg_solve(x1, x2, x3, alpha, beta).map_err(fail)?;
            let pass = res < tol;
            Report::new(
                "classical-verify-str",
                pass,
                Some(tol),
                json!({"residual": res, "center": x0}),
            )
            .print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::ClassicalClosure { x13, x23, x12, p, q, r, tol } => {
            let res = classical::check_closure(x13, x23, x12, p, q, r).map_err(fail)?;
            let pass = res < tol;
            Report::new("classical-closure", pass, Some(tol), json!({"residual": res})).print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::ClassicalZinv { surface0, script, boundary, tol } => {
            let s0 = report::load_surface(&surface0)?;
            let script = load_script(&script)?;
            let b = load_field(&boundary)?;
            let rep = classical::check_classical_zinvariance(&s0, &script, &b).map_err(fail)?;
            let mut pass = rep.delta < tol && rep.laplace.converged;
            let mut details = json!({
                "action0": rep.action0,
                "action": rep.action,
                "delta": rep.delta,
                "laplace_converged": rep.laplace.converged,
            });
            if let Some(spread) = rep.flat_spread {
                pass &= spread < tol;
                details["flat_spread"] = json!(spread);
            }
            Report::new("classical-zinv", pass, Some(tol), details).print();
            if pass { Ok(()) } else { Err(CliError::Failed) }
        }
        Cmd::Demo => demo(),
    }
}

/// The worked example: an 11x5 flat patch deformed by two 3x3 bumps (the
/// second carrying an inverted flip on its top face) and one lone downward
/// flip, reproducing the loop-label multiset {r0-, r0+, r0+, r1+, r1-}.
fn demo() -> Result<(), CliError> {
    let p: Vec<f64> = (0..5).map(|j| 1.1 + 0.13 * j as f64).collect();
    let q: Vec<f64> = (0..11).map(|i| 0.3 + 0.05 * i as f64).collect();
    let s0 = build_flat_surface(11, 5, &p, &q).map_err(fail)?;

    // flip family selected by anchor parity (each catalog entry comes in an
    // even/odd pair)
    let even = |c: Coord3| (c.0 + c.1 + c.2).rem_euclid(2) == 0;
    let f15 = |c: Coord3, r: f64| FlipRequest {
        flip: if even(c) { FlipKind::F15A } else { FlipKind::F15B },
        direction: flips::Direction::Forward,
        anchor: c,
        r_value: Some(r),
    };
    let f24e = |c: Coord3| FlipRequest {
        flip: if even(c) { FlipKind::F24_1 } else { FlipKind::F24_2 },
        direction: flips::Direction::Forward,
        anchor: c,
        r_value: None,
    };
    let f24s = |c: Coord3| FlipRequest {
        flip: if even(c) { FlipKind::F24_3 } else { FlipKind::F24_4 },
        direction: flips::Direction::Forward,
        anchor: c,
        r_value: None,
    };
    let f33 = |c: Coord3| FlipRequest {
        flip: if even(c) { FlipKind::F33_1 } else { FlipKind::F33_2 },
        direction: flips::Direction::Forward,
        anchor: c,
        r_value: None,
    };
    let f15neg = |c: Coord3, r: f64| FlipRequest {
        flip: if even(c) { FlipKind::F15C } else { FlipKind::F15D },
        direction: flips::Direction::Forward,
        anchor: c,
        r_value: Some(r),
    };

    // one 3x3 bump: seed the top-left cell, extend the top row east, then
    // grow each lower row (a cell with lifted north and west neighbours
    // takes the 3-to-3 flip)
    let bump = |x0: i64, r: f64| -> Vec<FlipRequest> {
        let mut script = vec![f15(Coord3(x0, 3, 0), r)];
        for i in x0 + 1..x0 + 3 {
            script.push(f24e(Coord3(i, 3, 0)));
        }
        for j in [2, 1] {
            script.push(f24s(Coord3(x0, j, 0)));
            for i in x0 + 1..x0 + 3 {
                script.push(f33(Coord3(i, j, 0)));
            }
        }
        script
    };

    let mut script = bump(1, 0.55);
    script.push(f15(Coord3(2, 2, 1), 0.72)); // second storey on bump A
    script.extend(bump(5, 0.61));
    script.push(f15neg(Coord3(6, 2, 1), 0.66)); // pit in the top of bump B
    script.push(f15neg(Coord3(9, 2, 0), 0.48)); // lone downward flip

    let (s1, ledger) = flips::run_script(&s0, &script).map_err(fail)?;
    let rep = validate_surface(&s1);
    if !rep.ok {
        return Err(CliError::Usage(format!(
            "demo surface failed validation: {}",
            rep.violations.join("; ")
        )));
    }
    let mut labels: Vec<String> = rep.loops.iter().map(|l| l.label()).collect();
    labels.sort();
    let mut expected =
        vec!["r0-".to_string(), "r0+".to_string(), "r0+".to_string(), "r1+".to_string(), "r1-".to_string()];
    expected.sort();
    let phi = flips::evaluate_ledger(&ledger, Model::Ising).map_err(fail)?;
    let pass = labels == expected;
    Report::new(
        "demo",
        pass,
        None,
        json!({
            "squares_before": s0.squares.len(),
            "squares_after": s1.squares.len(),
            "steps": ledger.len(),
            "loop_labels": labels,
            "expected_labels": expected,
            "ledger_value_ising": complex_json(phi),
        }),
    )
    .print();
    if pass { Ok(()) } else { Err(CliError::Failed) }
}
