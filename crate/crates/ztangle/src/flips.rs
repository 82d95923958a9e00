//! The cubic-flip catalog: local rewrites exchanging m elementary squares
//! for 6-m squares of the same unit cube, together with the exact
//! multiplicative factors each rewrite contributes to the partition function.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{Domain, Model};
use crate::relations::{self, RelationError};
use crate::surface::{validate_surface, Coord3, Square, SquareType, Surface, EI, EJ, EK};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum FlipKind {
    F15A,
    F15B,
    F15C,
    F15D,
    F24_1,
    F24_2,
    F24_3,
    F24_4,
    F24_5,
    F24_6,
    F24_7,
    F24_8,
    F33_1,
    F33_2,
    F33_3,
    F33_4,
}

pub const ALL_KINDS: [FlipKind; 16] = [
    FlipKind::F15A,
    FlipKind::F15B,
    FlipKind::F15C,
    FlipKind::F15D,
    FlipKind::F24_1,
    FlipKind::F24_2,
    FlipKind::F24_3,
    FlipKind::F24_4,
    FlipKind::F24_5,
    FlipKind::F24_6,
    FlipKind::F24_7,
    FlipKind::F24_8,
    FlipKind::F33_1,
    FlipKind::F33_2,
    FlipKind::F33_3,
    FlipKind::F33_4,
];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl FlipKind {
    /// Whether the flip raises squares (+e_k); false means it digs (-e_k).
    pub fn positive(self) -> bool {
        use FlipKind::*;
        matches!(self, F15A | F15B | F24_1 | F24_2 | F24_3 | F24_4 | F33_1 | F33_2)
    }

    /// Required parity of the anchored horizontal square: true means the
    /// anchor corner is a black vertex.
    pub fn even(self) -> bool {
        use FlipKind::*;
        matches!(
            self,
            F15A | F15C | F24_1 | F24_3 | F24_5 | F24_7 | F33_1 | F33_3
        )
    }

    pub fn adds_loop(self) -> bool {
        use FlipKind::*;
        matches!(self, F15A | F15B | F15C | F15D)
    }
}

/// Forward-direction square exchange at `anchor` (the anchor of the
/// horizontal square being moved). Returns (removed, added).
pub fn template(kind: FlipKind, n: Coord3) -> (Vec<Square>, Vec<Square>) {
    use FlipKind::*;
    use SquareType::*;
    let sq = Square::new;
    let m = n.offset((0, 0, -1));
    match kind {
        F15A | F15B => (
            vec![sq(Ij, n)],
            vec![
                sq(Ij, n.offset(EK)),
                sq(Ik, n),
                sq(Jk, n.offset(EI)),
                sq(Ki, n.offset(EJ)),
                sq(Kj, n),
            ],
        ),
        F15C | F15D => (
            vec![sq(Ij, n)],
            vec![
                sq(Ij, m),
                sq(Ki, m),
                sq(Kj, m.offset(EI)),
                sq(Ik, m.offset(EJ)),
                sq(Jk, m),
            ],
        ),
        // stretch east: the loop edge south of the square moves past it
        F24_1 | F24_2 => (
            vec![sq(Ij, n), sq(Jk, n)],
            vec![
                sq(Ij, n.offset(EK)),
                sq(Ik, n),
                sq(Jk, n.offset(EI)),
                sq(Ki, n.offset(EJ)),
            ],
        ),
        // stretch south
        F24_3 | F24_4 => (
            vec![sq(Ij, n), sq(Ik, n.offset(EJ))],
            vec![
                sq(Ij, n.offset(EK)),
                sq(Ik, n),
                sq(Jk, n.offset(EI)),
                sq(Kj, n),
            ],
        ),
        // dig west
        F24_5 | F24_6 => (
            vec![sq(Ij, n), sq(Jk, m.offset(EI))],
            vec![sq(Ij, m), sq(Ki, m), sq(Jk, m), sq(Ik, m.offset(EJ))],
        ),
        // dig north
        F24_7 | F24_8 => (
            vec![sq(Ij, n), sq(Ik, m)],
            vec![
                sq(Ij, m),
                sq(Jk, m),
                sq(Ik, m.offset(EJ)),
                sq(Kj, m.offset(EI)),
            ],
        ),
        F33_1 | F33_2 => (
            vec![sq(Ij, n), sq(Jk, n), sq(Ik, n.offset(EJ))],
            vec![sq(Ij, n.offset(EK)), sq(Ik, n), sq(Jk, n.offset(EI))],
        ),
        F33_3 | F33_4 => (
            vec![sq(Ij, n), sq(Ik, m), sq(Jk, m.offset(EI))],
            vec![sq(Ij, m), sq(Jk, m), sq(Ik, m.offset(EJ))],
        ),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind")]
pub enum FactorToken {
    /// Spin-independent star-triangle factor at the given rapidity triple.
    R { rho: [f64; 3], exponent: i8 },
    /// f_{pq} f_{qp} from the second inversion relation.
    FPair { rho: [f64; 2], exponent: i8 },
    /// Sum of the single-spin weight over the spin domain.
    SumS { exponent: i8 },
    /// S(x)^{-1} at a fixed vertex.
    SInv { vertex: Coord3, exponent: i8 },
    /// Kronecker delta of two equal fixed spins (unity when discrete).
    Delta { exponent: i8 },
}

impl FactorToken {
    fn flip_exponent(&mut self) {
        match self {
            FactorToken::R { exponent, .. }
            | FactorToken::FPair { exponent, .. }
            | FactorToken::SumS { exponent }
            | FactorToken::SInv { exponent, .. }
            | FactorToken::Delta { exponent } => *exponent = -*exponent,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub flip: FlipKind,
    pub direction: Direction,
    pub anchor: Coord3,
    pub tokens: Vec<FactorToken>,
}

pub type FactorLedger = Vec<LedgerEntry>;

#[derive(Debug, Error)]
pub enum FlipError {
    #[error("pattern mismatch at {0:?}: {1}")]
    PatternMismatch(Coord3, String),
    #[error("anchor {0:?} has the wrong parity for {1:?}")]
    ParityMismatch(Coord3, FlipKind),
    #[error("flip result violates admissibility: {0}")]
    Inadmissible(String),
    #[error("flip anchor {0:?} does not touch a known r-loop")]
    UnknownLoop(Coord3),
    #[error("F15 forward flip needs an r_value for the new loop")]
    MissingRValue,
    #[error("rapidity line value missing for {0}")]
    MissingLine(String),
    #[error("invalid surface before flip: {0}")]
    BadSurface(String),
    #[error("step {0}: {1}")]
    Script(usize, Box<FlipError>),
    #[error("ledger contains a domain-wide spin sum, divergent for a continuous model")]
    DivergentSum,
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// Forward-direction factor tokens for one flip; the inverse negates the
/// exponents. (p, q) are the open-line values crossing the anchored square,
/// r the loop value.
fn forward_tokens(kind: FlipKind, anchor: Coord3, p: f64, q: f64, r: f64) -> Vec<FactorToken> {
    use FlipKind::*;
    let rr = |rho: [f64; 3]| FactorToken::R { rho, exponent: 1 };
    match kind {
        F15A | F15C => vec![rr([p, r, q]), FactorToken::SumS { exponent: 1 }],
        F15B | F15D => {
            // the fixed spin of the contracted delta/S factors sits on the
            // black corner of the anchored square
            let corners = Square::new(SquareType::Ij, anchor).corners();
            let vertex = *corners.iter().find(|c| c.is_black()).expect("odd anchor");
            vec![
                rr([r, p, q]),
                FactorToken::FPair { rho: [q, r], exponent: 1 },
                FactorToken::SInv { vertex, exponent: 1 },
                FactorToken::Delta { exponent: 1 },
            ]
        }
        F24_1 | F24_3 | F24_5 | F24_7 => vec![rr([p, r, q])],
        F24_2 | F24_6 => vec![rr([p, q, r])],
        F24_4 | F24_8 => vec![rr([r, p, q])],
        F33_1 | F33_3 => vec![rr([p, r, q])],
        F33_2 | F33_4 => vec![FactorToken::R { rho: [p, r, q], exponent: -1 }],
    }
}

/// Apply one flip; returns the rewritten surface and its factor tokens.
pub fn apply_flip(
    s: &Surface,
    kind: FlipKind,
    direction: Direction,
    anchor: Coord3,
    r_value: Option<f64>,
) -> Result<(Surface, Vec<FactorToken>), FlipError> {
    if anchor.is_black() != kind.even() {
        return Err(FlipError::ParityMismatch(anchor, kind));
    }
    let pre = validate_surface(s);
    if !pre.ok {
        return Err(FlipError::BadSurface(pre.violations.join("; ")));
    }

    let (mut removed, mut added) = template(kind, anchor);
    if direction == Direction::Inverse {
        std::mem::swap(&mut removed, &mut added);
    }
    for sq in &removed {
        if !s.squares.contains(sq) {
            return Err(FlipError::PatternMismatch(
                anchor,
                format!("expected square {:?} at {:?}", sq.ty, sq.anchor),
            ));
        }
    }
    for sq in &added {
        if s.squares.contains(sq) {
            return Err(FlipError::PatternMismatch(
                anchor,
                format!("square {:?} at {:?} already present", sq.ty, sq.anchor),
            ));
        }
    }

    // open-line values across the anchored horizontal square
    let p = *s
        .p_values
        .get(&anchor.1)
        .ok_or_else(|| FlipError::MissingLine(format!("p[{}]", anchor.1)))?;
    let q = *s
        .q_values
        .get(&anchor.0)
        .ok_or_else(|| FlipError::MissingLine(format!("q[{}]", anchor.0)))?;

    // loop value: from the loop an existing wall square of the pattern
    // belongs to, or — for a loop-creating flip — from the caller
    let touched_wall = removed.iter().find(|sq| sq.ty.is_wall());
    let (r, old_loop_of_new): (f64, Option<usize>) = match touched_wall {
        Some(wall) => {
            let lp = pre
                .loops
                .iter()
                .find(|l| l.squares.contains(wall))
                .ok_or(FlipError::UnknownLoop(anchor))?;
            let rv = *s
                .r_values
                .get(&lp.id)
                .ok_or(FlipError::UnknownLoop(anchor))?;
            (rv, Some(lp.id))
        }
        None => (r_value.ok_or(FlipError::MissingRValue)?, None),
    };

    let mut squares = s.squares.clone();
    for sq in &removed {
        squares.remove(sq);
    }
    for sq in &added {
        squares.insert(*sq);
    }
    let mut out = Surface {
        squares,
        p_values: s.p_values.clone(),
        q_values: s.q_values.clone(),
        r_values: BTreeMap::new(),
    };

    // carry loop rapidities across the re-trace: a post-flip loop inherits
    // the value of the pre-flip loop it shares a wall square with; a loop
    // with no ancestor is the one this flip created
    let post = validate_surface(&out);
    for lp in &post.loops {
        let ancestor = pre
            .loops
            .iter()
            .find(|old| old.squares.iter().any(|sq| lp.squares.contains(sq)));
        let rv = match ancestor {
            Some(old) => *s.r_values.get(&old.id).ok_or(FlipError::UnknownLoop(anchor))?,
            None if old_loop_of_new.is_none() => r,
            None => return Err(FlipError::UnknownLoop(anchor)),
        };
        out.r_values.insert(lp.id, rv);
    }
    let post = validate_surface(&out);
    if !post.ok {
        return Err(FlipError::Inadmissible(post.violations.join("; ")));
    }

    let mut tokens = forward_tokens(kind, anchor, p, q, r);
    if direction == Direction::Inverse {
        for t in &mut tokens {
            t.flip_exponent();
        }
    }
    Ok((out, tokens))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlipRequest {
    pub flip: FlipKind,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    pub anchor: Coord3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_value: Option<f64>,
}

fn default_direction() -> Direction {
    Direction::Forward
}

/// Apply a script strictly in order; the first inapplicable step aborts.
pub fn run_script(s: &Surface, script: &[FlipRequest]) -> Result<(Surface, FactorLedger), FlipError> {
    let mut cur = s.clone();
    let mut ledger = FactorLedger::new();
    for (idx, req) in script.iter().enumerate() {
        let (next, tokens) = apply_flip(&cur, req.flip, req.direction, req.anchor, req.r_value)
            .map_err(|e| FlipError::Script(idx, Box::new(e)))?;
        ledger.push(LedgerEntry {
            flip: req.flip,
            direction: req.direction,
            anchor: req.anchor,
            tokens,
        });
        cur = next;
    }
    Ok((cur, ledger))
}

/// Numerical value of the ledger product for a discrete model.
pub fn evaluate_ledger(ledger: &FactorLedger, model: Model) -> Result<Complex64, FlipError> {
    let n = match model.domain() {
        Domain::Discrete(n) => n,
        Domain::Continuous => {
            if ledger
                .iter()
                .any(|e| e.tokens.iter().any(|t| matches!(t, FactorToken::SumS { .. })))
            {
                return Err(FlipError::DivergentSum);
            }
            0
        }
    };
    let mut prod = Complex64::new(1.0, 0.0);
    for entry in ledger {
        for token in &entry.tokens {
            let (base, exponent) = match *token {
                FactorToken::R { rho, exponent } => {
                    (relations::extract_r(model, rho[0], rho[1], rho[2])?, exponent)
                }
                FactorToken::FPair { rho, exponent } => {
                    (relations::f_pair(model, rho[0], rho[1])?, exponent)
                }
                FactorToken::SumS { exponent } => {
                    (Complex64::new(n as f64, 0.0), exponent)
                }
                // S == 1 for both bundled models
                FactorToken::SInv { exponent, .. } => (Complex64::new(1.0, 0.0), exponent),
                FactorToken::Delta { exponent } => (Complex64::new(1.0, 0.0), exponent),
            };
            prod *= if exponent >= 0 { base } else { base.inv() };
        }
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_flat_surface;

    fn base() -> Surface {
        let p: Vec<f64> = (0..3).map(|j| 1.1 + 0.13 * j as f64).collect();
        let q: Vec<f64> = (0..3).map(|i| 0.3 + 0.07 * i as f64).collect();
        build_flat_surface(3, 3, &p, &q).unwrap()
    }

    #[test]
    fn f15a_adds_five_squares_and_a_loop() {
        let s = base();
        let (out, tokens) =
            apply_flip(&s, FlipKind::F15A, Direction::Forward, Coord3(1, 1, 0), Some(0.55))
                .unwrap();
        assert_eq!(out.squares.len(), s.squares.len() + 4);
        let rep = validate_surface(&out);
        assert!(rep.ok, "{:?}", rep.violations);
        assert_eq!(rep.loops.len(), 1);
        assert_eq!(rep.loops[0].label(), "r0+");
        assert_eq!(out.r_values.len(), 1);
        assert!(matches!(tokens[0], FactorToken::R { exponent: 1, .. }));
        assert!(matches!(tokens[1], FactorToken::SumS { exponent: 1 }));
    }

    #[test]
    fn f15c_loop_is_negative() {
        let s = base();
        let (out, _) =
            apply_flip(&s, FlipKind::F15C, Direction::Forward, Coord3(1, 1, 0), Some(0.55))
                .unwrap();
        let rep = validate_surface(&out);
        assert!(rep.ok);
        assert_eq!(rep.loops[0].label(), "r0-");
    }

    #[test]
    fn parity_enforced() {
        let s = base();
        assert!(matches!(
            apply_flip(&s, FlipKind::F15A, Direction::Forward, Coord3(2, 1, 0), Some(0.55)),
            Err(FlipError::ParityMismatch(..))
        ));
        assert!(matches!(
            apply_flip(&s, FlipKind::F15B, Direction::Forward, Coord3(1, 1, 0), Some(0.55)),
            Err(FlipError::ParityMismatch(..))
        ));
    }

    #[test]
    fn forward_inverse_is_identity() {
        let s = base();
        let (mid, t1) =
            apply_flip(&s, FlipKind::F15A, Direction::Forward, Coord3(1, 1, 0), Some(0.55))
                .unwrap();
        let (back, t2) =
            apply_flip(&mid, FlipKind::F15A, Direction::Inverse, Coord3(1, 1, 0), None).unwrap();
        assert_eq!(back.squares, s.squares);
        let ledger = vec![
            LedgerEntry { flip: FlipKind::F15A, direction: Direction::Forward, anchor: Coord3(1, 1, 0), tokens: t1 },
            LedgerEntry { flip: FlipKind::F15A, direction: Direction::Inverse, anchor: Coord3(1, 1, 0), tokens: t2 },
        ];
        let v = evaluate_ledger(&ledger, Model::Ising).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn f24_stretches_loop() {
        let s = base();
        let (mid, _) =
            apply_flip(&s, FlipKind::F15A, Direction::Forward, Coord3(1, 1, 0), Some(0.55))
                .unwrap();
        // stretch the loop east across the odd square at (2,1,0)
        let (out, tokens) =
            apply_flip(&mid, FlipKind::F24_2, Direction::Forward, Coord3(2, 1, 0), None).unwrap();
        let rep = validate_surface(&out);
        assert!(rep.ok, "{:?}", rep.violations);
        assert_eq!(rep.loops.len(), 1);
        assert_eq!(rep.loops[0].squares.len(), 6);
        assert_eq!(out.r_values.len(), 1);
        assert!((out.r_values.values().next().unwrap() - 0.55).abs() < 1e-15);
        assert_eq!(tokens.len(), 1);
    }

    #[test]
    fn pattern_mismatch_reported() {
        let s = base();
        // F24 needs an existing wall square; the flat patch has none
        assert!(matches!(
            apply_flip(&s, FlipKind::F24_1, Direction::Forward, Coord3(1, 1, 0), None),
            Err(FlipError::PatternMismatch(..))
        ));
    }

    #[test]
    fn script_aborts_with_step_index() {
        let s = base();
        let script = vec![
            FlipRequest {
                flip: FlipKind::F15A,
                direction: Direction::Forward,
                anchor: Coord3(1, 1, 0),
                r_value: Some(0.55),
            },
            FlipRequest {
                flip: FlipKind::F24_1,
                direction: Direction::Forward,
                anchor: Coord3(0, 0, 0),
                r_value: None,
            },
        ];
        match run_script(&s, &script) {
            Err(FlipError::Script(1, inner)) => {
                assert!(matches!(*inner, FlipError::PatternMismatch(..)))
            }
            other => panic!("expected script abort, got {other:?}"),
        }
    }

    #[test]
    fn empty_script_is_identity() {
        let s = base();
        let (out, ledger) = run_script(&s, &[]).unwrap();
        assert_eq!(out.squares, s.squares);
        assert!(ledger.is_empty());
        assert!((evaluate_ledger(&ledger, Model::Ising).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sums_diverges_for_continuous() {
        let ledger = vec![LedgerEntry {
            flip: FlipKind::F15A,
            direction: Direction::Forward,
            anchor: Coord3(1, 1, 0),
            tokens: vec![FactorToken::SumS { exponent: 1 }],
        }];
        assert!(matches!(
            evaluate_ledger(&ledger, Model::FishingNet),
            Err(FlipError::DivergentSum)
        ));
    }

    #[test]
    fn script_json_round_trip() {
        let json = r#"[{"flip":"F15A","anchor":[1,1,0],"r_value":0.55},{"flip":"F33_2","anchor":[2,1,0]}]"#;
        let script: Vec<FlipRequest> = serde_json::from_str(json).unwrap();
        assert_eq!(script.len(), 2);
        assert_eq!(script[0].flip, FlipKind::F15A);
        assert_eq!(script[1].direction, Direction::Forward);
        assert_eq!(script[1].anchor, Coord3(2, 1, 0));
        let back = serde_json::to_string(&script).unwrap();
        let again: Vec<FlipRequest> = serde_json::from_str(&back).unwrap();
        assert_eq!(again[0].anchor, script[0].anchor);
    }
}
