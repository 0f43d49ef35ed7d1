//! Closed-form objects for the harmonic potential `V(q) = ½ m ω² q²`.
//!
//! Both schemes reduce, for this potential, to a constant 2×2 matrix acting on
//! the phase state `(p, q)`. Every formula here is written in terms of the
//! dimensionless product `s = ωh`; `s²` and `s⁴` are evaluated once per call and
//! shared by all matrix entries so that determinants stay within a few ulp of 1.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Upper end of the Simpson stability window, `2√2`.
pub const STABILITY_LIMIT: f64 = 2.0 * SQRT_2;

/// `|1 - s²/8|` at or below this value is treated as the singular elimination.
const SINGULAR_DENOMINATOR: f64 = 4.0 * f64::EPSILON;

/// Slack on the unit root modulus before a scheme is declared unstable.
const ROOT_MODULUS_SLACK: f64 = 1e-12;

/// Tolerance on `|det - 1|` accepted by [`conserved_quadratic_form`].
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-12;

/// Momentum–position pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub p: f64,
    pub q: f64,
}

impl PhaseState {
    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}

/// Mass, angular frequency and time step of one harmonic oscillator run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorConfig {
    mass: f64,
    omega: f64,
    step: f64,
    s: f64,
    s2: f64,
}

impl OscillatorConfig {
    pub fn new(mass: f64, omega: f64, step: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be finite and > 0, got {mass}")));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "angular frequency must be finite and >= 0, got {omega}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidConfig(format!("time step must be finite and > 0, got {step}")));
        }
        let s = omega * step;
        Ok(Self {
            mass,
            omega,
            step,
            s,
            s2: s * s,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Dimensionless product `ωh`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// `(ωh)²`, the quantity every scheme formula is written in.
    pub fn s_squared(&self) -> f64 {
        self.s2
    }

    /// Stiffness `m ω²` of the harmonic potential.
    pub fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    /// `1 - s²/8`, the denominator of the closed-form midpoint elimination.
    ///
    /// Fails with [`Error::SingularElimination`] when it vanishes.
    pub fn elimination_denominator(&self) -> Result<f64> {
        let den = 1.0 - self.s2 / 8.0;
        if den.abs() <= SINGULAR_DENOMINATOR {
            Err(Error::SingularElimination { s: self.s })
        } else {
            Ok(den)
        }
    }

    /// Whether `ωh` lies in the Simpson stability window. `ω = 0` is admitted.
    pub fn in_stability_window(&self) -> bool {
        self.s2 < 8.0
    }
}

/// Real 2×2 matrix acting on `(p, q)ᵗ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Propagator {
    pub const IDENTITY: Self = Self {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn apply(&self, y: PhaseState) -> PhaseState {
        PhaseState {
            p: self.a11 * y.p + self.a12 * y.q,
            q: self.a21 * y.p + self.a22 * y.q,
        }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Propagator) -> Propagator {
        Propagator {
            a11: self.a11 * rhs.a11 + self.a12 * rhs.a21,
            a12: self.a11 * rhs.a12 + self.a12 * rhs.a22,
            a21: self.a21 * rhs.a11 + self.a22 * rhs.a21,
            a22: self.a21 * rhs.a12 + self.a22 * rhs.a22,
        }
    }
}

/// Propagation matrix of the midpoint (Newmark) scheme.
///
/// `Φ = 1/(1+s²/4) · [[1-s²/4, -mω²h], [h/m, 1-s²/4]]`, symplectic and
/// unconditionally stable.
pub fn newmark_propagator(cfg: &OscillatorConfig) -> Propagator {
    let quarter = cfg.s2 / 4.0;
    let den = 1.0 + quarter;
    let diag = (1.0 - quarter) / den;
    Propagator {
        a11: diag,
        a12: -cfg.stiffness() * cfg.step / den,
        a21: cfg.step / cfg.mass / den,
        a22: diag,
    }
}

/// Simpson propagation matrix together with its stability-window flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpsonPropagator {
    pub matrix: Propagator,
    /// Set when `ωh ≥ 2√2`; the matrix is still returned for analysis.
    pub outside_window: bool,
}

/// Propagation matrix `Φ₃` of the symplectic Simpson scheme.
pub fn simpson_propagator(cfg: &OscillatorConfig) -> Result<SimpsonPropagator> {
    cfg.elimination_denominator()?;
    let s2 = cfg.s2;
    let s4 = s2 * s2;
    let den = 1.0 + s2 / 24.0;
    let diag = (1.0 - 11.0 / 24.0 * s2 + s4 / 48.0) / den;
    let matrix = Propagator {
        a11: diag,
        a12: -cfg.stiffness() * cfg.step * (1.0 - s2 / 12.0) * (1.0 - s2 / 24.0) / den,
        a21: cfg.step / cfg.mass * (1.0 - s2 / 8.0) / den,
        a22: diag,
    };
    Ok(SimpsonPropagator {
        matrix,
        outside_window: !cfg.in_stability_window(),
    })
}

/// Exact Hamiltonian flow over time `t`.
pub fn exact_flow(cfg: &OscillatorConfig, state: PhaseState, t: f64) -> PhaseState {
    let m = cfg.mass;
    let omega = cfg.omega;
    if omega == 0.0 {
        return PhaseState {
            p: state.p,
            q: state.q + state.p * t / m,
        };
    }
    let (sin, cos) = (omega * t).sin_cos();
    PhaseState {
        p: state.p * cos - m * omega * state.q * sin,
        q: state.q * cos + state.p / (m * omega) * sin,
    }
}

/// Physical energy `p²/(2m) + mω²q²/2`, conserved exactly by the Newmark scheme.
pub fn energy_exact(cfg: &OscillatorConfig, state: PhaseState) -> f64 {
    state.p * state.p / (2.0 * cfg.mass) + 0.5 * cfg.stiffness() * state.q * state.q
}

/// Coefficient `mω²(1-s²/12)(1-s²/24)/(1-s²/8)` multiplying `q²/2` in the
/// Simpson discrete energy.
pub fn discrete_energy_stiffness(cfg: &OscillatorConfig) -> Result<f64> {
    let den = cfg.elimination_denominator()?;
    let s2 = cfg.s2;
    Ok(cfg.stiffness() * (1.0 - s2 / 12.0) * (1.0 - s2 / 24.0) / den)
}

/// Discrete energy conserved exactly by the Simpson scheme.
pub fn energy_discrete_simpson(cfg: &OscillatorConfig, state: PhaseState) -> Result<f64> {
    let k = discrete_energy_stiffness(cfg)?;
    Ok(state.p * state.p / (2.0 * cfg.mass) + 0.5 * k * state.q * state.q)
}

/// Roots of the characteristic polynomial `a r² + b r + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharacteristicRoots {
    /// Conjugate pair `re ± i·im`.
    Complex { re: f64, im: f64 },
    Real(f64, f64),
}

/// Coefficients `(a, b, c)` of the characteristic polynomial of the three-point
/// Simpson recurrence. `c = a` by the symmetry of the recurrence in
/// `q_{j+1} ↔ q_{j-1}`.
pub fn characteristic_coefficients(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let a = 1.0 + s2 / 24.0;
    let b = -(48.0 - 22.0 * s2 + s2 * s2) / 24.0;
    (a, b, a)
}

/// Factorized discriminant `(s²/576)(s²-24)(s²-12)(s²-8)`.
pub fn factored_discriminant(s: f64) -> f64 {
    let s2 = s * s;
    s2 / 576.0 * (s2 - 24.0) * (s2 - 12.0) * (s2 - 8.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub s: f64,
    pub stable: bool,
    /// Factorized form; free of the cancellation in `b² - 4ac` near `s = 0`.
    pub discriminant: f64,
    pub roots: CharacteristicRoots,
    /// Largest modulus among the characteristic roots.
    pub root_modulus: f64,
    /// `s² < 8`: the midpoint elimination is well posed with positive denominator.
    pub in_window: bool,
}

impl StabilityVerdict {
    /// Characteristic-root analysis of the Simpson recurrence at `s = ωh`.
    ///
    /// Stable means: complex conjugate roots (`Δ < 0`), modulus at most one,
    /// and `s² < 8`. The last condition matters for `12 < s² < 24`, where the
    /// roots are back on the unit circle but the internal node elimination has
    /// already changed sign.
    pub fn at(s: f64) -> Self {
        let (a, b, _) = characteristic_coefficients(s);
        let discriminant = factored_discriminant(s);
        let (roots, root_modulus) = if discriminant < 0.0 {
            let re = -b / (2.0 * a);
            let im = (-discriminant).sqrt() / (2.0 * a);
            (CharacteristicRoots::Complex { re, im }, re.hypot(im))
        } else {
            let sq = discriminant.sqrt();
            let r1 = (-b + sq) / (2.0 * a);
            let r2 = (-b - sq) / (2.0 * a);
            (CharacteristicRoots::Real(r1, r2), r1.abs().max(r2.abs()))
        };
        let in_window = s * s < 8.0;
        let stable = discriminant < 0.0 && root_modulus <= 1.0 + ROOT_MODULUS_SLACK && in_window;
        Self {
            s,
            stable,
            discriminant,
            roots,
            root_modulus,
            in_window,
        }
    }
}

pub fn stability_analysis(cfg: &OscillatorConfig) -> StabilityVerdict {
    StabilityVerdict::at(cfg.s)
}

/// Coefficients of `Q(p, q) = ½ξp² + ηpq + ½ζq²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub xi: f64,
    pub eta: f64,
    pub zeta: f64,
    /// All coefficients vanish: every quadratic form is conserved.
    pub degenerate: bool,
}

impl QuadraticForm {
    pub fn evaluate(&self, y: PhaseState) -> f64 {
        0.5 * self.xi * y.p * y.p + self.eta * y.p * y.q + 0.5 * self.zeta * y.q * y.q
    }
}

/// Quadratic form conserved by a symplectic propagator with equal diagonal
/// entries, normalized so that `ξ = γ` (the lower-left entry).
pub fn conserved_quadratic_form(prop: &Propagator) -> Result<QuadraticForm> {
    let det = prop.det();
    if !((det - 1.0).abs() <= SYMPLECTIC_TOLERANCE) {
        return Err(Error::NotSymplectic { det });
    }
    let (alpha, delta) = (prop.a11, prop.a22);
    let scale = alpha.abs().max(delta.abs()).max(1.0);
    if !((alpha - delta).abs() <= 8.0 * f64::EPSILON * scale) {
        return Err(Error::UnequalDiagonal { alpha, delta });
    }
    let (beta, gamma) = (prop.a12, prop.a21);
    Ok(QuadraticForm {
        xi: gamma,
        eta: 0.0,
        zeta: -beta,
        degenerate: beta == 0.0 && gamma == 0.0,
    })
}
