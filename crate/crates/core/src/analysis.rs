//! Convergence, conservation and symplecticity experiments.
//!
//! The reference benchmark is one period of `q(t) = sin ωt`, `p(t) = mω cos ωt`
//! with `m = 1` and `ω = 2π`, so the period is exactly one time unit.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oscillator::{
    energy_discrete_simpson, energy_exact, exact_flow, newmark_propagator, simpson_propagator,
    OscillatorConfig, PhaseState, Propagator,
};
use crate::variational::discrete_el_residual_threepoint;

/// Absolute error at or below which a quantity is considered conserved to round-off.
pub const ROUND_OFF_THRESHOLD: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Newmark,
    Simpson,
    /// Samples of the exact flow; used as a reference and for plotting.
    Exact,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Newmark => "newmark",
            Scheme::Simpson => "simpson",
            Scheme::Exact => "exact",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "newmark" => Ok(Scheme::Newmark),
            "simpson" => Ok(Scheme::Simpson),
            "exact" => Ok(Scheme::Exact),
            other => Err(format!("unknown scheme '{other}' (expected newmark, simpson or exact)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mass: f64,
    pub omega: f64,
    pub period_count: f64,
    pub mesh_counts: Vec<usize>,
    pub scheme: Scheme,
    pub initial_state: PhaseState,
}

impl ExperimentSpec {
    /// `m = 1`, `ω = 2π`, one period, meshes `{10, 20, 40}`, `y₀ = (2π, 0)`.
    pub fn benchmark(scheme: Scheme) -> Self {
        Self {
            mass: 1.0,
            omega: TAU,
            period_count: 1.0,
            mesh_counts: vec![10, 20, 40],
            scheme,
            initial_state: PhaseState::new(TAU, 0.0),
        }
    }

    /// Total simulated time, `period_count · 2π/ω`.
    pub fn duration(&self) -> f64 {
        self.period_count * TAU / self.omega
    }

    pub fn config(&self, n: usize) -> Result<OscillatorConfig> {
        OscillatorConfig::new(self.mass, self.omega, self.duration() / n as f64)
    }

    /// Checks that do not involve the mesh list.
    fn validate_physics(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidExperiment(msg));
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad(format!("angular frequency must be > 0 to define a period, got {}", self.omega));
        }
        if !(self.period_count.is_finite() && self.period_count > 0.0) {
            return bad(format!("period count must be > 0, got {}", self.period_count));
        }
        if !self.initial_state.is_finite() {
            return bad("initial state must be finite".into());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_physics()?;
        let bad = |msg: String| Err(Error::InvalidExperiment(msg));
        if self.mesh_counts.is_empty() {
            return bad("at least one mesh count is required".into());
        }
        if self.mesh_counts.iter().any(|&n| n < 2) {
            return bad("every mesh count must be >= 2".into());
        }
        if self.mesh_counts.windows(2).any(|w| w[0] >= w[1]) {
            return bad("mesh counts must be strictly increasing".into());
        }
        for &n in &self.mesh_counts {
            let cfg = self.config(n)?;
            if self.scheme == Scheme::Simpson && !cfg.in_stability_window() {
                return Err(Error::OutsideStabilityWindow { s: cfg.s() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub config: OscillatorConfig,
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// Physical energy `p²/(2m) + mω²q²/2` at each node.
    pub energies_exact: Vec<f64>,
    /// Simpson discrete energy at each node, whatever scheme produced the states.
    pub energies_discrete: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn scheme_propagator(scheme: Scheme, cfg: &OscillatorConfig) -> Result<Option<Propagator>> {
    match scheme {
        Scheme::Newmark => Ok(Some(newmark_propagator(cfg))),
        Scheme::Simpson => {
            let phi = simpson_propagator(cfg)?;
            if phi.outside_window {
                return Err(Error::OutsideStabilityWindow { s: cfg.s() });
            }
            Ok(Some(phi.matrix))
        }
        Scheme::Exact => Ok(None),
    }
}

/// Runs `n` steps of `h = T/n` from the initial state and records both energies.
pub fn run_trajectory(spec: &ExperimentSpec, n: usize) -> Result<TrajectoryRecord> {
    if n < 1 {
        return Err(Error::InvalidExperiment("step count must be >= 1".into()));
    }
    spec.validate_physics()?;
    let cfg = spec.config(n)?;
    let propagator = scheme_propagator(spec.scheme, &cfg)?;
    let h = cfg.step();

    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut energies_exact = Vec::with_capacity(n + 1);
    let mut energies_discrete = Vec::with_capacity(n + 1);
    let mut y = spec.initial_state;
    for j in 0..=n {
        let t = j as f64 * h;
        if j > 0 {
            y = match propagator {
                Some(phi) => phi.apply(y),
                None => exact_flow(&cfg, spec.initial_state, t),
            };
        }
        times.push(t);
        states.push(y);
        energies_exact.push(energy_exact(&cfg, y));
        energies_discrete.push(energy_discrete_simpson(&cfg, y)?);
    }
    Ok(TrajectoryRecord {
        config: cfg,
        times,
        states,
        energies_exact,
        energies_discrete,
    })
}

/// Max-norm errors of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxNormErrors {
    pub momentum: f64,
    pub state: f64,
    /// `max_j |H(y_j) - H(y_0)|`.
    pub energy_exact: f64,
    /// `max_j |H_d(y_j) - H_d(y_0)|`.
    pub energy_discrete: f64,
}

impl MaxNormErrors {
    pub fn get(&self, quantity: Quantity) -> f64 {
        match quantity {
            Quantity::Momentum => self.momentum,
            Quantity::State => self.state,
            Quantity::EnergyH => self.energy_exact,
            Quantity::EnergyHd => self.energy_discrete,
        }
    }
}

pub fn max_norm_errors(record: &TrajectoryRecord, spec: &ExperimentSpec) -> MaxNormErrors {
    let y0 = spec.initial_state;
    let h0 = record.energies_exact.first().copied().unwrap_or(0.0);
    let hd0 = record.energies_discrete.first().copied().unwrap_or(0.0);
    let mut e = MaxNormErrors {
        momentum: 0.0,
        state: 0.0,
        energy_exact: 0.0,
        energy_discrete: 0.0,
    };
    for (j, (&t, y)) in record.times.iter().zip(&record.states).enumerate() {
        let reference = exact_flow(&record.config, y0, t);
        e.momentum = e.momentum.max((y.p - reference.p).abs());
        e.state = e.state.max((y.q - reference.q).abs());
        e.energy_exact = e.energy_exact.max((record.energies_exact[j] - h0).abs());
        e.energy_discrete = e.energy_discrete.max((record.energies_discrete[j] - hd0).abs());
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Momentum,
    State,
    EnergyH,
    EnergyHd,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::Momentum,
        Quantity::State,
        Quantity::EnergyH,
        Quantity::EnergyHd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Momentum => "momentum",
            Quantity::State => "state",
            Quantity::EnergyH => "energy_H",
            Quantity::EnergyHd => "energy_Hd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Errors decay like `N^-k`.
    Order(u32),
    /// Every error is at round-off level.
    ExactConservation,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Order(k) => write!(f, "order-{k}"),
            Verdict::ExactConservation => f.write_str("exact-conservation"),
            Verdict::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Pairwise orders `ln(e_i/e_{i+1}) / ln(N_{i+1}/N_i)`; `log2(e_N/e_2N)` for doubling.
    pub orders: Vec<f64>,
    pub verdict: Verdict,
}

/// Estimates convergence orders from `(N, error)` pairs sorted by increasing `N`.
///
/// Round-off rows are classified as exact conservation rather than ordered;
/// mixed, non-positive or non-decreasing data give an indeterminate verdict.
pub fn estimate_orders(errors_by_mesh: &[(usize, f64)]) -> OrderEstimate {
    let indeterminate = |orders| OrderEstimate {
        orders,
        verdict: Verdict::Indeterminate,
    };
    if errors_by_mesh.is_empty() || errors_by_mesh.iter().any(|&(_, e)| !e.is_finite() || e < 0.0) {
        return indeterminate(Vec::new());
    }
    if errors_by_mesh.iter().all(|&(_, e)| e <= ROUND_OFF_THRESHOLD) {
        return OrderEstimate {
            orders: Vec::new(),
            verdict: Verdict::ExactConservation,
        };
    }
    if errors_by_mesh.iter().any(|&(_, e)| e <= ROUND_OFF_THRESHOLD) {
        return indeterminate(Vec::new());
    }
    let orders: Vec<f64> = errors_by_mesh
        .windows(2)
        .map(|w| {
            let ((n0, e0), (n1, e1)) = (w[0], w[1]);
            (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
        })
        .collect();
    if orders.is_empty() || orders.iter().any(|o| !o.is_finite() || *o <= 0.0) {
        return indeterminate(orders);
    }
    let first = orders[0].round();
    if orders.iter().any(|o| o.round() != first) {
        return indeterminate(orders);
    }
    OrderEstimate {
        orders,
        verdict: Verdict::Order(first as u32),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityConvergence {
    pub quantity: Quantity,
    pub errors: Vec<f64>,
    pub estimate: OrderEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    pub mesh_counts: Vec<usize>,
    pub per_mesh: Vec<MaxNormErrors>,
    pub quantities: Vec<QuantityConvergence>,
}

impl ConvergenceReport {
    pub fn quantity(&self, quantity: Quantity) -> &QuantityConvergence {
        self.quantities
            .iter()
            .find(|q| q.quantity == quantity)
            .expect("every quantity is reported")
    }
}

/// Runs every mesh of `spec` and tabulates errors and orders.
///
/// Meshes run on separate threads; the report is assembled in mesh order.
pub fn convergence_study(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let per_mesh = std::thread::scope(|scope| {
        let handles: Vec<_> = spec
            .mesh_counts
            .iter()
            .map(|&n| scope.spawn(move || run_trajectory(spec, n).map(|r| max_norm_errors(&r, spec))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mesh run panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let quantities = Quantity::ALL
        .iter()
        .map(|&quantity| {
            let errors: Vec<f64> = per_mesh.iter().map(|e| e.get(quantity)).collect();
            let pairs: Vec<(usize, f64)> = spec.mesh_counts.iter().copied().zip(errors.iter().copied()).collect();
            QuantityConvergence {
                quantity,
                estimate: estimate_orders(&pairs),
                errors,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        scheme: spec.scheme,
        mesh_counts: spec.mesh_counts.clone(),
        per_mesh,
        quantities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSample {
    pub h: f64,
    pub residual: f64,
    /// Excluded from the fit because the residual is at round-off level.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationFit {
    pub samples: Vec<TruncationSample>,
    /// Least-squares `(exponent, prefactor)` of `|residual| ≈ prefactor · h^exponent`;
    /// `None` when fewer than two samples survive.
    pub fit: Option<(f64, f64)>,
}

/// Truncation error of the three-point Simpson recurrence on exact samples
/// `q(t) = sin ωt` around `t`, fitted as a power law in `h`.
///
/// Expected law: `ω⁶ h⁴ q(t) / 1440`.
pub fn truncation_error_probe(omega: f64, t: f64, steps: &[f64]) -> Result<TruncationFit> {
    let exact = |x: f64| (omega * x).sin();
    let mut samples = Vec::with_capacity(steps.len());
    for &h in steps {
        let cfg = OscillatorConfig::new(1.0, omega, h)?;
        let (q_prev, q_cur, q_next) = (exact(t - h), exact(t), exact(t + h));
        let residual = discrete_el_residual_threepoint(&cfg, q_prev, q_cur, q_next);
        let w2 = omega * omega;
        let scale = (q_prev.abs() + 2.0 * q_cur.abs() + q_next.abs()) / (h * h)
            + w2 / 24.0 * (q_prev.abs() + 22.0 * q_cur.abs() + q_next.abs());
        samples.push(TruncationSample {
            h,
            residual,
            excluded: residual.abs() < 1e3 * f64::EPSILON * scale || residual == 0.0,
        });
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| !s.excluded)
        .map(|s| (s.h.ln(), s.residual.abs().ln()))
        .collect();
    Ok(TruncationFit {
        fit: least_squares_line(&points).map(|(slope, intercept)| (slope, intercept.exp())),
        samples,
    })
}

fn least_squares_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, mean_y - slope * mean_x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticityReport {
    pub scheme: Scheme,
    pub points: usize,
    pub max_deviation: f64,
    /// `s` at which the largest `|det - 1|` occurred.
    pub worst_s: f64,
}

/// `|det Φ - 1|` over a grid of `s = ωh` values (unit mass and frequency).
pub fn symplecticity_audit(scheme: Scheme, s_grid: &[f64]) -> Result<SymplecticityReport> {
    let mut report = SymplecticityReport {
        scheme,
        points: s_grid.len(),
        max_deviation: 0.0,
        worst_s: f64::NAN,
    };
    for &s in s_grid {
        let det = if s == 0.0 {
            Propagator::IDENTITY.det()
        } else {
            let cfg = OscillatorConfig::new(1.0, 1.0, s)?;
            match scheme {
                Scheme::Newmark => newmark_propagator(&cfg).det(),
                Scheme::Simpson => simpson_propagator(&cfg)?.matrix.det(),
                Scheme::Exact => 1.0,
            }
        };
        let dev = (det - 1.0).abs();
        if dev > report.max_deviation || report.worst_s.is_nan() {
            report.max_deviation = report.max_deviation.max(dev);
            report.worst_s = s;
        }
    }
    Ok(report)
}
