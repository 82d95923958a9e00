//! Spin-model weight families. Two plugins ship: a discrete Z2 family (the
//! critical Z-invariant Ising coupling) and a continuous one on the real line
//! with power-law weights ("fishing-net"). Both expose plain and barred
//! Boltzmann weights, a vertex weight S (identically 1 here), and domain
//! metadata used by the verifiers.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kind {
    Plain,
    Barred,
}

impl From<crate::surface::WeightKind> for Kind {
    fn from(k: crate::surface::WeightKind) -> Kind {
        match k {
            crate::surface::WeightKind::Plain => Kind::Plain,
            crate::surface::WeightKind::Barred => Kind::Barred,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Domain {
    /// Spins take values 0..n.
    Discrete(u32),
    /// Spins range over the real line.
    Continuous,
}

/// A spin value in either domain.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Spin {
    D(u32),
    C(f64),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("singular angle: cos(theta) ~ 0 at theta = {0}")]
    SingularAngle(f64),
    #[error("coincident spins: weight diverges at x = y")]
    Pole,
    #[error("rapidity difference {0} outside the validity range")]
    OutOfRange(f64),
    #[error("spin domain mismatch")]
    DomainMismatch,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Model {
    Ising,
    FishingNet,
}

impl Model {
    pub fn from_name(name: &str) -> Option<Model> {
        match name {
            "ising" => Some(Model::Ising),
            "fishingnet" => Some(Model::FishingNet),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Ising => "ising",
            Model::FishingNet => "fishingnet",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Model::Ising => Domain::Discrete(2),
            Model::FishingNet => Domain::Continuous,
        }
    }

    /// Crossing parameter eta: barred weights evaluate the plain family at
    /// eta - alpha.
    pub fn crossing_eta(self) -> f64 {
        match self {
            Model::Ising => PI / 2.0,
            Model::FishingNet => PI,
        }
    }

    /// Vertex weight S(x); identically 1 for both shipped plugins.
    pub fn s_weight(self, _x: Spin) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    pub fn validity(self, rho_a: f64, rho_b: f64) -> bool {
        let a = rho_a - rho_b;
        match self {
            Model::Ising => (a.cos()).abs() > 1e-12 && ((PI / 2.0 - a).cos()).abs() > 1e-12,
            Model::FishingNet => a > 0.0 && a < PI,
        }
    }

    pub fn weight(self, kind: Kind, rho_a: f64, rho_b: f64, x: Spin, y: Spin) -> Result<Complex64, ModelError> {
        let a = rho_a - rho_b;
        match (self, x, y) {
            (Model::Ising, Spin::D(x), Spin::D(y)) => ising_weight(kind, a, spin_pm(x), spin_pm(y)),
            (Model::FishingNet, Spin::C(x), Spin::C(y)) => {
                fishingnet_weight(kind, a, x, y).map(|w| Complex64::new(w, 0.0))
            }
            _ => Err(ModelError::DomainMismatch),
        }
    }

    /// For continuous models: gamma such that the weight behaves like
    /// |x - y|^{-gamma} near coincidence. Quadrature uses this to split out
    /// the integrable singularities.
    pub fn singular_gamma(self, kind: Kind, rho_a: f64, rho_b: f64) -> Option<f64> {
        match self {
            Model::Ising => None,
            Model::FishingNet => {
                let a = match kind {
                    Kind::Plain => rho_a - rho_b,
                    Kind::Barred => PI - (rho_a - rho_b),
                };
                Some(a / PI)
            }
        }
    }
}

/// Map a Z2 spin value 0/1 to +1/-1.
pub fn spin_pm(v: u32) -> i32 {
    1 - 2 * (v as i32 % 2)
}

/// Coupling J(theta) = 1/2 ln((1+sin)/cos) on the principal branch.
///
/// The argument of the log is computed as a real number first: when it is
/// negative the imaginary part must be +pi/2 exactly. Going through complex
/// arithmetic can produce a -0.0 imaginary part and silently land on the
/// -i pi branch, which corrupts every f-pair downstream.
fn coupling(theta: f64) -> Result<Complex64, ModelError> {
    let c = theta.cos();
    if c.abs() < 1e-12 {
        return Err(ModelError::SingularAngle(theta));
    }
    let u = (1.0 + theta.sin()) / c;
    let re = 0.5 * u.abs().ln();
    let im = if u < 0.0 { 0.5 * PI } else { 0.0 };
    Ok(Complex64::new(re, im))
}

/// Plain/barred Z2 weight exp(J(theta) x y) with sinh(2J) = tan(theta);
/// barred evaluates at the crossed angle pi/2 - a.
pub fn ising_weight(kind: Kind, a: f64, x: i32, y: i32) -> Result<Complex64, ModelError> {
    let theta = match kind {
        Kind::Plain => a,
        Kind::Barred => PI / 2.0 - a,
    };
    let j = coupling(theta)?;
    Ok((j * (x * y) as f64).exp())
}

/// Continuous weight |x-y|^{-alpha/pi}; barred uses the crossed exponent.
pub fn fishingnet_weight(kind: Kind, alpha: f64, x: f64, y: f64) -> Result<f64, ModelError> {
    let a = match kind {
        Kind::Plain => alpha,
        Kind::Barred => PI - alpha,
    };
    let d = (x - y).abs();
    if d == 0.0 {
        return if a > 0.0 { Err(ModelError::Pole) } else { Ok(1.0) };
    }
    Ok(d.powf(-a / PI))
}

/// The closed-form star-triangle factor for the continuous model:
/// sqrt(pi) Gamma(a/2pi) Gamma((pi-a-b)/2pi) Gamma(b/2pi)
///   / [Gamma((pi-a)/2pi) Gamma((a+b)/2pi) Gamma((pi-b)/2pi)].
pub fn fishingnet_r(alpha: f64, beta: f64) -> Result<f64, ModelError> {
    if alpha <= 0.0 || beta <= 0.0 || alpha + beta >= PI - 1e-12 {
        return Err(ModelError::OutOfRange(alpha + beta));
    }
    use statrs::function::gamma::ln_gamma;
    let g = |x: f64| ln_gamma(x / (2.0 * PI));
    let log = 0.5 * PI.ln() + g(alpha) + g(PI - alpha - beta) + g(beta)
        - g(PI - alpha)
        - g(alpha + beta)
        - g(PI - beta);
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ising_weight_at_pi_over_4() {
        // sinh(2J) = tan(pi/4) = 1 so J = 1/2 ln(1+sqrt(2))
        let w = ising_weight(Kind::Plain, PI / 4.0, 1, 1).unwrap();
        let expected = (1.0 + 2.0_f64.sqrt()).sqrt();
        assert!((w.re - expected).abs() < 1e-14, "{w}");
        assert!(w.im.abs() < 1e-15);
        // frozen prototype value
        assert!((w.re - 1.5537739740300371).abs() < 1e-12);
    }

    #[test]
    fn ising_weight_at_zero_angle() {
        for (x, y) in [(1, 1), (1, -1), (-1, -1)] {
            let w = ising_weight(Kind::Plain, 1e-300, x, y).unwrap();
            assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn ising_inversion_one() {
        for k in 0..20 {
            let a = 0.05 + 0.07 * k as f64; // covers angles past pi/2
            for (x, y) in [(1, 1), (1, -1)] {
                let w1 = ising_weight(Kind::Plain, a, x, y).unwrap();
                let w2 = ising_weight(Kind::Plain, -a, x, y).unwrap();
                assert!((w1 * w2 - Complex64::new(1.0, 0.0)).norm() < 1e-14, "a={a}");
            }
        }
    }

    #[test]
    fn ising_coupling_is_odd() {
        for a in [0.3, 0.9, 1.4] {
            let ja = coupling(a).unwrap();
            let jm = coupling(-a).unwrap();
            assert!((ja + jm).norm() < 1e-14);
        }
    }

    #[test]
    fn ising_sinh_identity() {
        for a in [0.2, 0.7, 1.3] {
            let j = coupling(a).unwrap();
            assert!(((2.0 * j).sinh().re - a.tan()).abs() < 1e-12);
        }
    }

    #[test]
    fn ising_principal_branch_past_pi_over_2() {
        // for theta in (pi/2, pi) the log argument is negative; the branch
        // must be +i pi, never -i pi
        let j = coupling(2.0).unwrap();
        assert!((j.im - 0.5 * PI).abs() < 1e-15, "{j}");
    }

    #[test]
    fn ising_barred_positive_in_range() {
        let w = ising_weight(Kind::Barred, 0.7, 1, -1).unwrap();
        assert!(w.im.abs() < 1e-15 && w.re > 0.0);
    }

    #[test]
    fn fishingnet_weight_examples() {
        assert!((fishingnet_weight(Kind::Plain, 0.0, 0.3, 5.1).unwrap() - 1.0).abs() < 1e-15);
        let w = fishingnet_weight(Kind::Plain, PI / 2.0, 2.0, 0.0).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-14);
        // crossing: barred alpha = plain (pi - alpha)
        let a = 1.234;
        let b1 = fishingnet_weight(Kind::Barred, a, 0.4, 2.2).unwrap();
        let b2 = fishingnet_weight(Kind::Plain, PI - a, 0.4, 2.2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn fishingnet_inversion_one() {
        for a in [0.3, 1.1, 2.5] {
            let w1 = fishingnet_weight(Kind::Plain, a, 1.7, -0.4).unwrap();
            let w2 = fishingnet_weight(Kind::Plain, -a, 1.7, -0.4).unwrap();
            assert!((w1 * w2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fishingnet_pole() {
        assert!(matches!(fishingnet_weight(Kind::Plain, 1.0, 2.0, 2.0), Err(ModelError::Pole)));
    }

    #[test]
    fn fishingnet_r_value() {
        // sqrt(pi) Gamma(1/6)^3 / Gamma(1/3)^3, frozen from an independent
        // gamma-function oracle
        let r = fishingnet_r(PI / 3.0, PI / 3.0).unwrap();
        assert!((r - 15.899748752569051).abs() < 1e-10, "{r}");
        // symmetry
        let r1 = fishingnet_r(0.9, 1.7).unwrap();
        let r2 = fishingnet_r(1.7, 0.9).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn fishingnet_r_domain() {
        assert!(fishingnet_r(PI / 2.0, PI / 2.0).is_err());
        assert!(fishingnet_r(-0.1, 0.2).is_err());
    }

    #[test]
    fn singular_angle_rejected() {
        assert!(matches!(
            ising_weight(Kind::Plain, PI / 2.0, 1, 1),
            Err(ModelError::SingularAngle(_))
        ));
    }
}
