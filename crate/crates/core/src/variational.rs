//! Discrete Lagrangian machinery.
//!
//! One time step of length `h` carries a quadratic interpolant through the
//! nodal values `(q_l, q_m, q_r)` at `θ = 0, ½, 1`. The kinetic term is built
//! from the Gear endpoint derivatives and the centered midpoint derivative, and
//! the action over the step is approximated with Simpson's rule. The midpoint
//! value `q_m` is an internal degree of freedom: stationarity of the action in
//! `q_m` fixes it as a function of the endpoints. For the harmonic potential this
//! elimination is explicit and yields the reduced Lagrangian behind the
//! three-point scheme; for other potentials it is done numerically.

use crate::error::{Error, Result};
use crate::oscillator::{OscillatorConfig, PhaseState};

/// Values of the three quadratic Lagrange basis functions at one `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValues {
    pub phi0: f64,
    pub phi_half: f64,
    pub phi1: f64,
}

impl BasisValues {
    pub fn sum(&self) -> f64 {
        self.phi0 + self.phi_half + self.phi1
    }
}

pub fn basis_eval(theta: f64) -> Result<BasisValues> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(theta));
    }
    Ok(BasisValues {
        phi0: (1.0 - theta) * (1.0 - 2.0 * theta),
        phi_half: 4.0 * theta * (1.0 - theta),
        phi1: theta * (2.0 * theta - 1.0),
    })
}

/// Quadratic interpolant over one step of length `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticElement {
    q_l: f64,
    q_m: f64,
    q_r: f64,
    h: f64,
}

impl QuadraticElement {
    pub fn new(q_l: f64, q_m: f64, q_r: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidConfig(format!("step length must be > 0, got {h}")));
        }
        Ok(Self { q_l, q_m, q_r, h })
    }

    pub fn nodes(&self) -> (f64, f64, f64) {
        (self.q_l, self.q_m, self.q_r)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn interpolate(&self, theta: f64) -> Result<f64> {
        interpolate(self, theta)
    }

    pub fn gear_derivatives(&self) -> GearDerivatives {
        gear_derivatives(self)
    }
}

pub fn interpolate(elem: &QuadraticElement, theta: f64) -> Result<f64> {
    let b = basis_eval(theta)?;
    Ok(elem.q_l * b.phi0 + elem.q_m * b.phi_half + elem.q_r * b.phi1)
}

/// Time derivatives of the interpolant at the left node, midpoint and right node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GearDerivatives {
    pub g_l: f64,
    pub g_m: f64,
    pub g_r: f64,
}

pub fn gear_derivatives(elem: &QuadraticElement) -> GearDerivatives {
    let QuadraticElement { q_l, q_m, q_r, h } = *elem;
    GearDerivatives {
        g_l: (-3.0 * q_l + 4.0 * q_m - q_r) / h,
        g_m: (q_r - q_l) / h,
        g_r: (q_l - 4.0 * q_m + 3.0 * q_r) / h,
    }
}

/// Simpson's rule on `[0, 1]`: `(f(0) + 4 f(½) + f(1)) / 6`. Exact through cubics.
pub fn simpson_quadrature<F: Fn(f64) -> f64>(f: F) -> f64 {
    (f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0
}

/// Potential energy `V(q)`.
///
/// Implementations must be reentrant; they are called from concurrent solves.
pub trait Potential {
    fn value(&self, q: f64) -> f64;

    /// `dV/dq`.
    fn derivative(&self, q: f64) -> f64;

    /// `d²V/dq²`, if known in closed form. The Newton elimination falls back
    /// to a central difference of [`Potential::derivative`] otherwise.
    fn second_derivative(&self, _q: f64) -> Option<f64> {
        None
    }
}

/// `V ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeParticle;

impl Potential for FreeParticle {
    fn value(&self, _q: f64) -> f64 {
        0.0
    }

    fn derivative(&self, _q: f64) -> f64 {
        0.0
    }

    fn second_derivative(&self, _q: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// `V(q) = ½ k q²` with stiffness `k = m ω²`.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    pub stiffness: f64,
}

impl Harmonic {
    pub fn from_config(cfg: &OscillatorConfig) -> Self {
        Self {
            stiffness: cfg.stiffness(),
        }
    }
}

impl Potential for Harmonic {
    fn value(&self, q: f64) -> f64 {
        0.5 * self.stiffness * q * q
    }

    fn derivative(&self, q: f64) -> f64 {
        self.stiffness * q
    }

    fn second_derivative(&self, _q: f64) -> Option<f64> {
        Some(self.stiffness)
    }
}

/// `V(q) = k q⁴ / 4`.
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    pub k: f64,
}

impl Potential for Quartic {
    fn value(&self, q: f64) -> f64 {
        0.25 * self.k * q.powi(4)
    }

    fn derivative(&self, q: f64) -> f64 {
        self.k * q.powi(3)
    }

    fn second_derivative(&self, q: f64) -> Option<f64> {
        Some(3.0 * self.k * q * q)
    }
}

fn second_derivative_or_fd<V: Potential + ?Sized>(v: &V, q: f64) -> f64 {
    v.second_derivative(q).unwrap_or_else(|| {
        let eps = f64::EPSILON.cbrt() * q.abs().max(1.0);
        (v.derivative(q + eps) - v.derivative(q - eps)) / (2.0 * eps)
    })
}

/// Value of a discrete Lagrangian (an action over one step).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiscreteLagrangianValue(pub f64);

impl DiscreteLagrangianValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Affine interpolation with midpoint quadrature:
/// `(mh/2)((q_r - q_l)/h)² - h V((q_l + q_r)/2)`.
pub fn discrete_lagrangian_midpoint<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    q_l: f64,
    q_r: f64,
) -> DiscreteLagrangianValue {
    let (m, h) = (cfg.mass(), cfg.step());
    let v = (q_r - q_l) / h;
    DiscreteLagrangianValue(0.5 * m * h * v * v - h * potential.value(0.5 * (q_l + q_r)))
}

/// Quadratic interpolation with Simpson quadrature:
/// `(mh/12)(g_l² + 4g_m² + g_r²) - (h/6)(V(q_l) + 4V(q_m) + V(q_r))`.
pub fn discrete_lagrangian_simpson<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    q_l: f64,
    q_m: f64,
    q_r: f64,
) -> DiscreteLagrangianValue {
    let (m, h) = (cfg.mass(), cfg.step());
    let g = gear_derivatives(&QuadraticElement { q_l, q_m, q_r, h });
    let kinetic = m * h / 12.0 * (g.g_l * g.g_l + 4.0 * g.g_m * g.g_m + g.g_r * g.g_r);
    let potential =
        h / 6.0 * (potential.value(q_l) + 4.0 * potential.value(q_m) + potential.value(q_r));
    DiscreteLagrangianValue(kinetic - potential)
}

/// Partial derivatives `(∂/∂q_l, ∂/∂q_m, ∂/∂q_r)` of the Simpson discrete Lagrangian.
pub fn simpson_lagrangian_gradient<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    q_l: f64,
    q_m: f64,
    q_r: f64,
) -> [f64; 3] {
    let (m, h) = (cfg.mass(), cfg.step());
    let g = gear_derivatives(&QuadraticElement { q_l, q_m, q_r, h });
    [
        m / 6.0 * (-3.0 * g.g_l - 4.0 * g.g_m + g.g_r) - h / 6.0 * potential.derivative(q_l),
        2.0 * m / 3.0 * (g.g_l - g.g_r) - 2.0 * h / 3.0 * potential.derivative(q_m),
        m / 6.0 * (-g.g_l + 4.0 * g.g_m + 3.0 * g.g_r) - h / 6.0 * potential.derivative(q_r),
    ]
}

/// Closed-form midpoint value for the harmonic potential:
/// `q_m = (q_l + q_r) / (2 (1 - s²/8))`.
pub fn internal_node_harmonic(cfg: &OscillatorConfig, q_l: f64, q_r: f64) -> Result<f64> {
    let den = cfg.elimination_denominator()?;
    Ok(0.5 * (q_l + q_r) / den)
}

/// Stationarity condition in the midpoint node,
/// `m (4/h²)(q_l - 2q_m + q_r) + V'(q_m)`.
///
/// Equals `∂L_h/∂q_m` divided by `-2h/3`.
pub fn internal_node_residual<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    q_l: f64,
    q_m: f64,
    q_r: f64,
) -> f64 {
    let (m, h) = (cfg.mass(), cfg.step());
    m * (4.0 / (h * h)) * (q_l - 2.0 * q_m + q_r) + potential.derivative(q_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Starting iterate; the linear midpoint `(q_l + q_r)/2` when `None`.
    pub guess: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            guess: None,
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution {
    pub q_m: f64,
    /// Number of Newton updates applied.
    pub iterations: usize,
    pub residual: f64,
}

/// Eliminates the midpoint node numerically for an arbitrary potential.
///
/// Converged when `|residual| ≤ tol · (1 + 4m/h² · max(|q_l|, |q_r|))`.
pub fn internal_node_newton<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    q_l: f64,
    q_r: f64,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    let (m, h) = (cfg.mass(), cfg.step());
    let curvature = 4.0 * m / (h * h);
    let threshold = opts.tol * (1.0 + curvature * q_l.abs().max(q_r.abs()));
    let mut q_m = opts.guess.unwrap_or(0.5 * (q_l + q_r));
    let mut residual = internal_node_residual(cfg, potential, q_l, q_m, q_r);
    for iterations in 0..=opts.max_iter {
        if residual.abs() <= threshold {
            return Ok(NewtonSolution {
                q_m,
                iterations,
                residual,
            });
        }
        if iterations == opts.max_iter {
            break;
        }
        let jacobian = -2.0 * curvature + second_derivative_or_fd(potential, q_m);
        if jacobian == 0.0 || !jacobian.is_finite() {
            return Err(Error::SingularJacobian { at: q_m });
        }
        q_m -= residual / jacobian;
        residual = internal_node_residual(cfg, potential, q_l, q_m, q_r);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last: q_m,
        residual,
    })
}

/// Simpson discrete Lagrangian with the harmonic midpoint eliminated.
pub fn reduced_lagrangian(cfg: &OscillatorConfig, q_l: f64, q_r: f64) -> Result<DiscreteLagrangianValue> {
    let den = cfg.elimination_denominator()?;
    let (m, h, s2) = (cfg.mass(), cfg.step(), cfg.s_squared());
    let v = (q_r - q_l) / h;
    let kinetic = 0.5 * m * h * v * v;
    let potential = 0.5 * h * cfg.stiffness()
        * ((22.0 - s2) / 48.0 * (q_l * q_l + q_r * q_r) + q_l * q_r / 12.0);
    Ok(DiscreteLagrangianValue((kinetic - potential) / den))
}

/// Left-hand side of the three-point Simpson recurrence.
///
/// Proportional to the discrete Euler–Lagrange residual of the reduced
/// Lagrangian: `D₂L(q_prev, q_cur) + D₁L(q_cur, q_next) = -mh/(1 - s²/8) · (this)`.
pub fn discrete_el_residual_threepoint(cfg: &OscillatorConfig, q_prev: f64, q_cur: f64, q_next: f64) -> f64 {
    let h = cfg.step();
    let w2 = cfg.omega() * cfg.omega();
    (q_next - 2.0 * q_cur + q_prev) / (h * h) + w2 / 24.0 * (q_next + 22.0 * q_cur + q_prev)
        - w2 * w2 * h * h / 24.0 * q_cur
}

/// Right-end momentum `∂L_h^r/∂q_r` of the reduced Lagrangian.
pub fn momentum_simpson(cfg: &OscillatorConfig, q_l: f64, q_r: f64) -> Result<f64> {
    let den = cfg.elimination_denominator()?;
    let (m, h, w) = (cfg.mass(), cfg.step(), cfg.omega());
    let w2 = w * w;
    Ok(m * (q_r - q_l) / h - h * (m * w2 / 6.0) * (q_l + 2.0 * q_r) / den
        + h * h * h * (m * w2 * w2 / 48.0) * q_r / den)
}

/// One step of the Simpson variational scheme for an arbitrary potential,
/// in position–momentum form.
///
/// Experimental: solves `p_j + ∂L/∂q_l(q_j, q_{j+1}) = 0` for `q_{j+1}` by a
/// secant iteration, re-eliminating the midpoint node with Newton at every
/// trial point, then sets `p_{j+1} = ∂L/∂q_r(q_j, q_{j+1})`. Both partials of
/// the reduced Lagrangian equal those of `L_h` at the eliminated midpoint
/// because `∂L_h/∂q_m` vanishes there. Only consistency is claimed; neither
/// symplecticity nor the order of the harmonic case is guaranteed.
pub fn generic_simpson_step<V: Potential + ?Sized>(
    cfg: &OscillatorConfig,
    potential: &V,
    state: PhaseState,
    opts: &NewtonOptions,
) -> Result<PhaseState> {
    let (m, h) = (cfg.mass(), cfg.step());
    let inner = NewtonOptions { guess: None, ..*opts };
    let q_j = state.q;

    let eval = |q_next: f64| -> Result<(f64, f64)> {
        let mid = internal_node_newton(cfg, potential, q_j, q_next, &inner)?;
        let [d_left, _, d_right] = simpson_lagrangian_gradient(cfg, potential, q_j, mid.q_m, q_next);
        Ok((state.p + d_left, d_right))
    };

    let mut x0 = q_j + h * state.p / m;
    let mut x1 = x0 + 1e-3 * h * (1.0 + x0.abs());
    let (mut f0, _) = eval(x0)?;
    let (mut f1, mut p1) = eval(x1)?;
    for _ in 0..opts.max_iter {
        let scale = 1.0 + state.p.abs() + m / h * q_j.abs().max(x1.abs());
        if f1.abs() <= opts.tol * scale {
            return Ok(PhaseState::new(p1, x1));
        }
        let slope = (f1 - f0) / (x1 - x0);
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::SingularJacobian { at: x1 });
        }
        let x2 = x1 - f1 / slope;
        (x0, f0) = (x1, f1);
        x1 = x2;
        (f1, p1) = eval(x1)?;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last: x1,
        residual: f1,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn cfg(m: f64, omega: f64, h: f64) -> OscillatorConfig {
        OscillatorConfig::new(m, omega, h).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn basis_nodal_values() {
        let b = basis_eval(0.0).unwrap();
        assert_eq!((b.phi0, b.phi_half, b.phi1), (1.0, 0.0, 0.0));
        let b = basis_eval(0.5).unwrap();
        assert_eq!((b.phi0, b.phi_half, b.phi1), (0.0, 1.0, 0.0));
        let b = basis_eval(1.0).unwrap();
        assert_eq!((b.phi0, b.phi_half, b.phi1), (0.0, 0.0, 1.0));
        let b = basis_eval(0.25).unwrap();
        assert_eq!((b.phi0, b.phi_half, b.phi1), (0.375, 0.75, -0.125));
    }

    #[test]
    fn basis_domain() {
        assert_eq!(basis_eval(-0.1), Err(Error::Domain(-0.1)));
        assert_eq!(basis_eval(1.5), Err(Error::Domain(1.5)));
        assert!(basis_eval(f64::NAN).is_err());
    }

    #[test]
    fn interpolation_reproduces_low_degree() {
        let c = QuadraticElement::new(2.5, 2.5, 2.5, 0.1).unwrap();
        for theta in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!(close(c.interpolate(theta).unwrap(), 2.5, 4.0 * f64::EPSILON));
        }
        let lin = QuadraticElement::new(0.0, 0.5, 1.0, 1.0).unwrap();
        for theta in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!(close(lin.interpolate(theta).unwrap(), theta, 4.0 * f64::EPSILON));
        }
        let quad = QuadraticElement::new(0.0, 0.25, 1.0, 1.0).unwrap();
        assert_eq!(quad.interpolate(0.25).unwrap(), 0.0625);
        assert_eq!(quad.interpolate(0.75).unwrap(), 0.5625);
        assert!(quad.interpolate(1.01).is_err());
    }

    #[test]
    fn gear_examples() {
        let g = QuadraticElement::new(3.0, 3.0, 3.0, 0.2).unwrap().gear_derivatives();
        assert_eq!((g.g_l, g.g_m, g.g_r), (0.0, 0.0, 0.0));
        let g = QuadraticElement::new(0.0, 0.5, 1.0, 1.0).unwrap().gear_derivatives();
        assert_eq!((g.g_l, g.g_m, g.g_r), (1.0, 1.0, 1.0));
        let g = QuadraticElement::new(0.0, 0.25, 1.0, 1.0).unwrap().gear_derivatives();
        assert_eq!((g.g_l, g.g_m, g.g_r), (0.0, 1.0, 2.0));
        assert!(QuadraticElement::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(QuadraticElement::new(0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn simpson_rule_examples() {
        assert_eq!(simpson_quadrature(|_| 1.0), 1.0);
        assert_eq!(simpson_quadrature(|t| t.powi(3)), 0.25);
        let quartic = simpson_quadrature(|t| t.powi(4));
        assert!((quartic - 5.0 / 24.0).abs() < 1e-16);
        assert!((quartic - 0.2 - 1.0 / 120.0).abs() < 1e-16);
    }

    #[test]
    fn midpoint_lagrangian_examples() {
        let c = cfg(1.0, 1.0, 0.1);
        let harmonic = Harmonic::from_config(&c);
        assert_eq!(discrete_lagrangian_midpoint(&c, &harmonic, 0.0, 0.0).value(), 0.0);
        let unit = cfg(1.0, 0.0, 1.0);
        assert_eq!(discrete_lagrangian_midpoint(&unit, &FreeParticle, 0.0, 1.0).value(), 0.5);
        let l = discrete_lagrangian_midpoint(&c, &harmonic, 0.0, 0.1).value();
        assert!((l - (0.05 - 0.1 * (0.5 * 0.05 * 0.05))).abs() < 1e-16);
    }

    #[test]
    fn simpson_lagrangian_examples() {
        let unit = cfg(1.0, 0.0, 1.0);
        assert_eq!(discrete_lagrangian_simpson(&unit, &FreeParticle, 4.0, 4.0, 4.0).value(), 0.0);
        assert_eq!(discrete_lagrangian_simpson(&unit, &FreeParticle, 0.0, 0.5, 1.0).value(), 0.5);
    }

    #[test]
    fn harmonic_midpoint_examples() {
        let c = cfg(1.0, 0.0, 0.3);
        assert_eq!(internal_node_harmonic(&c, 1.0, 3.0).unwrap(), 2.0);
        let c = cfg(1.0, 2.0, 1.0);
        assert!(close(internal_node_harmonic(&c, 1.0, 1.0).unwrap(), 2.0, 1e-15));
        let r = internal_node_residual(&c, &Harmonic::from_config(&c), 1.0, 2.0, 1.0);
        assert!(r.abs() < 1e-13);
        let sing = cfg(1.0, 8f64.sqrt(), 1.0);
        assert!(matches!(
            internal_node_harmonic(&sing, 1.0, 1.0),
            Err(Error::SingularElimination { .. })
        ));
        assert!(reduced_lagrangian(&sing, 1.0, 1.0).is_err());
        assert!(momentum_simpson(&sing, 1.0, 1.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let c = cfg(1.0, 0.0, 0.1);
        assert_eq!(internal_node_residual(&c, &FreeParticle, 0.2, 0.45, 0.7), 0.0);
        let c = cfg(1.0, 0.0, 0.1);
        assert_eq!(internal_node_residual(&c, &Quartic { k: 1.0 }, 1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn newton_harmonic_and_free() {
        let c = cfg(1.0, 2.0, 1.0);
        let sol = internal_node_newton(
            &c,
            &Harmonic::from_config(&c),
            1.0,
            1.0,
            &NewtonOptions {
                guess: Some(1.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((sol.q_m - 2.0).abs() < 1e-12);

        let c = cfg(1.0, 0.0, 0.1);
        let sol = internal_node_newton(&c, &FreeParticle, 0.3, 1.1, &NewtonOptions {
            guess: Some(5.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(sol.iterations, 1);
        assert!((sol.q_m - 0.7).abs() < 1e-14);
    }

    struct NoCurvature(Quartic);

    impl Potential for NoCurvature {
        fn value(&self, q: f64) -> f64 {
            self.0.value(q)
        }
        fn derivative(&self, q: f64) -> f64 {
            self.0.derivative(q)
        }
    }

    fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        let mut f_lo = f(lo);
        assert!(f_lo * f(hi) <= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm < 0.0) == (f_lo < 0.0) {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn newton_quartic_against_bisection() {
        let c = cfg(1.0, 0.0, 0.05);
        let v = Quartic { k: 1.0 };
        let (q_l, q_r) = (0.8, 1.3);
        let oracle = bisect(|x| internal_node_residual(&c, &v, q_l, x, q_r), -5.0, 5.0);
        let sol = internal_node_newton(&c, &v, q_l, q_r, &NewtonOptions::default()).unwrap();
        assert!((sol.q_m - oracle).abs() < 1e-12, "{} vs {}", sol.q_m, oracle);
        let mid = 0.5 * (q_l + q_r);
        assert!((sol.q_m - mid).abs() < 0.05 * 0.05, "not O(h²) from midpoint");

        // finite-difference Jacobian fallback converges to the same root
        let fd = internal_node_newton(&c, &NoCurvature(v), q_l, q_r, &NewtonOptions::default()).unwrap();
        assert!((fd.q_m - oracle).abs() < 1e-12);
    }

    #[test]
    fn newton_reports_non_convergence() {
        let c = cfg(1.0, 0.0, 0.05);
        let err = internal_node_newton(&c, &Quartic { k: 1.0 }, 0.8, 1.3, &NewtonOptions {
            guess: Some(40.0),
            tol: 1e-12,
            max_iter: 1,
        })
        .unwrap_err();
        match err {
            Error::NoConvergence {
                iterations,
                last,
                residual,
            } => {
                assert_eq!(iterations, 1);
                assert!(last.is_finite() && residual.abs() > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn newton_reports_singular_jacobian() {
        struct Flat;
        impl Potential for Flat {
            fn value(&self, _q: f64) -> f64 {
                0.0
            }
            fn derivative(&self, _q: f64) -> f64 {
                1.0
            }
            fn second_derivative(&self, _q: f64) -> Option<f64> {
                Some(32.0)
            }
        }
        // -8m/h² + 32 = 0 at h = 0.5
        let c = cfg(1.0, 0.0, 0.5);
        assert!(matches!(
            internal_node_newton(&c, &Flat, 0.0, 0.0, &NewtonOptions::default()),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn reduced_lagrangian_vanishes_at_origin_and_matches_midpoint_limit() {
        let c = cfg(1.0, 2.0, 0.1);
        assert_eq!(reduced_lagrangian(&c, 0.0, 0.0).unwrap().value(), 0.0);
        // smooth data q = sin(ωt) on [t, t + h]; both approximate the exact action to O(h³)
        let mut diffs = Vec::new();
        for h in [1e-3, 1e-4] {
            let c = cfg(1.0, 2.0, h);
            let (q_l, q_r) = ((2.0f64 * 0.3).sin(), (2.0 * (0.3 + h)).sin());
            let lr = reduced_lagrangian(&c, q_l, q_r).unwrap().value();
            let lm = discrete_lagrangian_midpoint(&c, &Harmonic::from_config(&c), q_l, q_r).value();
            diffs.push((lr - lm).abs());
            assert!((lr - lm).abs() < 10.0 * h * h * h);
        }
        assert!(diffs[1] < diffs[0] * 1e-2);
    }

    #[test]
    fn momentum_free_particle() {
        let c = cfg(2.0, 0.0, 0.1);
        assert!(close(momentum_simpson(&c, 1.0, 1.3).unwrap(), 6.0, 1e-14));
    }

    #[test]
    fn three_point_examples() {
        let c = cfg(1.0, 3.0, 0.2);
        assert_eq!(discrete_el_residual_threepoint(&c, 0.0, 0.0, 0.0), 0.0);
        let value = discrete_el_residual_threepoint(&c, 1.5, 1.5, 1.5);
        let expected = 9.0 * 1.5 - 81.0 * 0.04 / 24.0 * 1.5;
        assert!(close(value, expected, 1e-14));
    }

    #[test]
    fn generic_step_matches_harmonic_closed_form() {
        let c = cfg(1.0, std::f64::consts::TAU, 0.05);
        let phi = crate::oscillator::simpson_propagator(&c).unwrap().matrix;
        let y0 = PhaseState::new(std::f64::consts::TAU, 0.0);
        let y1 = generic_simpson_step(&c, &Harmonic::from_config(&c), y0, &NewtonOptions::default()).unwrap();
        let exact = phi.apply(y0);
        assert!(close(y1.p, exact.p, 1e-10) && close(y1.q, exact.q, 1e-10), "{y1:?} vs {exact:?}");
    }

    #[test]
    fn generic_step_quartic_is_consistent() {
        // reference: tiny-step run of the same scheme; error must shrink with h
        let v = Quartic { k: 1.0 };
        let y0 = PhaseState::new(0.0, 1.0);
        let run = |n: usize| {
            let c = cfg(1.0, 0.0, 1.0 / n as f64);
            (0..n).fold(y0, |y, _| generic_simpson_step(&c, &v, y, &NewtonOptions::default()).unwrap())
        };
        let fine = run(2048);
        let e10 = (run(10).q - fine.q).abs();
        let e20 = (run(20).q - fine.q).abs();
        assert!(e20 < e10 && e10 < 1e-2, "{e10} {e20}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn partition_of_unity(theta in 0.0f64..=1.0) {
            let b = basis_eval(theta).unwrap();
            prop_assert!((b.sum() - 1.0).abs() <= 4.0 * f64::EPSILON);
        }

        #[test]
        fn gear_midpoint_is_average(q_l in -10.0f64..10.0, q_m in -10.0f64..10.0, q_r in -10.0f64..10.0, h in 1e-3f64..1.0) {
            let g = QuadraticElement::new(q_l, q_m, q_r, h).unwrap().gear_derivatives();
            // ulp measured at the size of the intermediate sums `4|q|/h`
            let scale = 8.0 * q_l.abs().max(q_m.abs()).max(q_r.abs()) / h;
            prop_assert!((g.g_m - 0.5 * (g.g_l + g.g_r)).abs() <= 4.0 * f64::EPSILON * scale);
            prop_assert_eq!(g.g_m, (q_r - q_l) / h);
        }

        #[test]
        fn newton_matches_closed_form(q_l in -5.0f64..5.0, q_r in -5.0f64..5.0, s in 0.01f64..2.8, h in 0.01f64..1.0) {
            let c = cfg(1.0, s / h, h);
            let closed = internal_node_harmonic(&c, q_l, q_r).unwrap();
            let newton = internal_node_newton(&c, &Harmonic::from_config(&c), q_l, q_r, &NewtonOptions::default()).unwrap();
            prop_assert!((newton.q_m - closed).abs() <= 1e-12 * closed.abs().max(1.0));
        }
    }
}
