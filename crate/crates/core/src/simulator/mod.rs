//! Reduced one-dimensional runs with mass and energy ledgers.
//!
//! Planar geometry: a periodic interval `[0, L)` in which phase A is the slab `[s, s + w]`.
//! In one dimension a solenoidal field is spatially constant, so the slab translates rigidly
//! with `v_A(t)` and its density stays uniform. Phase B fills the complement on a grid that
//! translates with the slab. Both interfaces are flat, carry the interface mass, and move with
//! `ds/dt = v_A`. The slab pressure is linear between the two interface values set by the
//! normal stress balance.
//!
//! Spherical geometry: phase A is the ball `r < R`. The only bounded solenoidal radial field is
//! zero, so the ball is at rest with constant density and pressure `pi_A = pi_0 H - T_B`, and
//! phase B lives in the shell `R < r < R_out` between two walls.

pub mod classical;
pub mod ledger;
pub mod radial;
pub mod scheme;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub use classical::ClassicalSolver;
pub use ledger::{Ledger, LedgerEntry};
pub use radial::Symmetry;
pub use scheme::Grid;

use crate::report::Case;
use crate::tensors::{MaterialParams, Model, Phase};
use scheme::Operator;

/// Default CFL number.
pub const DEFAULT_CFL: f64 = 0.4;
/// Default tolerance for the classical comparison.
pub const DEFAULT_CLASSICAL_TOL: f64 = 1e-10;
/// Fraction of the initial stable step used when `dt` is derived from the CFL number, leaving
/// room for wave speeds to grow during the run.
pub const CFL_HEADROOM: f64 = 0.9;
/// Minimum number of phase B cells.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("CFL violation at t={time}: dt={dt} exceeds the stable limit {limit}")]
    Cfl { time: f64, dt: f64, limit: f64 },
    #[error("non-positive density in phase {phase:?}, cell {cell}, at t={time}")]
    NegativeDensity { phase: Phase, cell: usize, time: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ledger error: {0}")]
    Ledger(String),
    #[error("io error: {0}")]
    Io(String),
}

impl SimError {
    /// Aborts raised while stepping, as opposed to setup errors.
    pub fn is_runtime(&self) -> bool {
        matches!(self, SimError::Cfl { .. } | SimError::NegativeDensity { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    /// Periodic interval of length `length`; phase A is `[position, position + width]`.
    Planar { length: f64, width: f64, position: f64 },
    /// Ball of radius `radius` inside a wall at `outer`.
    Spherical { radius: f64, outer: f64 },
}

impl Geometry {
    pub fn symmetry(&self) -> Symmetry {
        match self {
            Geometry::Planar { .. } => Symmetry::Planar,
            Geometry::Spherical { .. } => Symmetry::Spherical,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        match *self {
            Geometry::Planar { length, width, position } => {
                if !(length.is_finite() && position.is_finite() && width > 0.0 && width < length) {
                    return Err(SimError::Config(format!("planar geometry needs 0 < width < length, got width={width}, length={length}")));
                }
            }
            Geometry::Spherical { radius, outer } => {
                if !(radius > 0.0 && outer > radius && outer.is_finite()) {
                    return Err(SimError::Config(format!("spherical geometry needs 0 < radius < outer, got radius={radius}, outer={outer}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Flux form of the mass and momentum equations.
    #[default]
    Conservative,
    /// Non-conservative form with explicit source terms.
    Primitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Limiter {
    #[default]
    Minmod,
    /// Central slopes; second order at smooth extrema.
    None,
}

/// Initial data for phase B (and the slab velocity in the planar case).
/// Positions are given as fractions `xi` of the phase B reference interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Equilibrium,
    /// `rho_B (1 + amplitude exp(-((xi - center) / width)^2))`, at rest.
    DensityPulse { amplitude: f64, center: f64, width: f64 },
    /// `v_B = amplitude sin(pi xi)`, uniform density.
    VelocityMode { amplitude: f64 },
    /// Planar only: `v_A = velocity` and `v_B = velocity cos(2 pi xi)`.
    Piston { velocity: f64 },
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_classical_tol() -> f64 {
    DEFAULT_CLASSICAL_TOL
}

fn one() -> f64 {
    1.0
}

/// Checks evaluated at the end of a run; absent tolerances disable a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default)]
    pub mass_tol: Option<f64>,
    /// Bound on the energy residual relative to the kinetic energy scale.
    #[serde(default)]
    pub energy_tol: Option<f64>,
    #[serde(default)]
    pub interface_tol: Option<f64>,
    #[serde(default)]
    pub compare_classical: bool,
    #[serde(default = "default_classical_tol")]
    pub classical_tol: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self { mass_tol: None, energy_tol: None, interface_tol: None, compare_classical: false, classical_tol: DEFAULT_CLASSICAL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub model: Model,
    pub geometry: Geometry,
    pub cells: usize,
    /// Fixed step; derived from `cfl` at the initial state when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    pub params: MaterialParams,
    #[serde(default = "one")]
    pub rho_a: f64,
    #[serde(default = "one")]
    pub rho_b: f64,
    pub initial: Initial,
    /// Snapshot cadence in steps; 0 writes only the first and last state.
    #[serde(default)]
    pub output_every: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub limiter: Limiter,
    #[serde(default)]
    pub checks: Checks,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let c: Self = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.geometry.validate()?;
        if self.cells < MIN_CELLS {
            return Err(SimError::Config(format!("cells must be >= {MIN_CELLS}, got {}", self.cells)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SimError::Config(format!("cfl must be in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(SimError::Config(format!("dt must be positive, got {dt}")));
            }
        }
        match (self.t_end, self.steps) {
            (None, None) => return Err(SimError::Config("one of t_end or steps is required".into())),
            (Some(_), Some(_)) => return Err(SimError::Config("give t_end or steps, not both".into())),
            (Some(t), None) if !(t > 0.0 && t.is_finite()) => return Err(SimError::Config(format!("t_end must be positive, got {t}"))),
            _ => {}
        }
        if !(self.rho_a > 0.0 && self.rho_b > 0.0) {
            return Err(SimError::Config("rho_a and rho_b must be positive".into()));
        }
        match self.initial {
            Initial::DensityPulse { amplitude, width, .. } if amplitude <= -1.0 || width <= 0.0 => {
                Err(SimError::Config("density pulse needs amplitude > -1 and width > 0".into()))
            }
            Initial::Piston { .. } if self.geometry.symmetry() == Symmetry::Spherical => {
                Err(SimError::Config("the piston preset needs planar geometry".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Cell data of one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    /// Cell centers (x or r).
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub vel: Vec<f64>,
    pub pressure: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceState {
    /// Slab position `s` (planar) or `R` (spherical).
    pub position: f64,
    pub v_s_normal: f64,
    pub rho_0: f64,
    pub pi_0: f64,
    /// Total interface area: two unit cross-sections (planar) or `4 pi R^2`.
    pub area: f64,
}

/// Evolved unknowns: phase B density and momentum per cell, slab mass and momentum, and slab
/// position. In the spherical case the last three are constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rho_b: Vec<f64>,
    pub mom_b: Vec<f64>,
    pub mass_a: f64,
    pub momentum_a: f64,
    pub position: f64,
}

impl SimState {
    /// Largest componentwise difference.
    pub fn max_difference(&self, other: &SimState) -> f64 {
        let cells = self.rho_b.iter().zip(&other.rho_b).chain(self.mom_b.iter().zip(&other.mom_b));
        let scalars = [(self.mass_a, other.mass_a), (self.momentum_a, other.momentum_a), (self.position, other.position)];
        cells.map(|(a, b)| (a - b).abs()).chain(scalars.iter().map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
    }
}

struct Derivative {
    drho: Vec<f64>,
    dmom: Vec<f64>,
    dmass_a: f64,
    dmomentum_a: f64,
    dposition: f64,
}

/// Discretization of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub model: Model,
    pub geometry: Geometry,
    pub params: MaterialParams,
    pub cells: usize,
    pub mode: Mode,
    pub limiter: Limiter,
    pub cfl: f64,
}

impl Solver {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self { model: c.model, geometry: c.geometry, params: c.params, cells: c.cells, mode: c.mode, limiter: c.limiter, cfl: c.cfl }
    }

    pub fn grid(&self, s: &SimState) -> Grid {
        let n = self.cells;
        match self.geometry {
            Geometry::Planar { length, width, .. } => Grid { sym: Symmetry::Planar, n, left: s.position + width, dx: (length - width) / n as f64 },
            Geometry::Spherical { radius, outer } => Grid { sym: Symmetry::Spherical, n, left: radius, dx: (outer - radius) / n as f64 },
        }
    }

    fn operator(&self, s: &SimState) -> Operator<'_> {
        Operator { grid: self.grid(s), model: self.model, params: &self.params, limiter: self.limiter }
    }

    pub fn volume_a(&self) -> f64 {
        match self.geometry {
            Geometry::Planar { width, .. } => width,
            Geometry::Spherical { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }

    pub fn interface_area(&self) -> f64 {
        match self.geometry {
            Geometry::Planar { .. } => 2.0,
            Geometry::Spherical { radius, .. } => 4.0 * PI * radius * radius,
        }
    }

    /// Mean curvature of the interface with the normal pointing out of phase A.
    pub fn curvature(&self) -> f64 {
        match self.geometry {
            Geometry::Planar { .. } => 0.0,
            Geometry::Spherical { radius, .. } => -2.0 / radius,
        }
    }

    pub fn velocity_a(&self, s: &SimState) -> f64 {
        match self.geometry {
            Geometry::Planar { .. } => s.momentum_a / s.mass_a,
            Geometry::Spherical { .. } => 0.0,
        }
    }

    pub fn density_a(&self, s: &SimState) -> f64 {
        s.mass_a / self.volume_a()
    }

    pub fn initial_state(&self, rho_a: f64, rho_b: f64, initial: Initial) -> SimState {
        let n = self.cells;
        let xi = |i: usize| (i as f64 + 0.5) / n as f64;
        let mut rho = vec![rho_b; n];
        let mut vel = vec![0.0; n];
        let mut v_a = 0.0;
        match initial {
            Initial::Equilibrium => {}
            Initial::DensityPulse { amplitude, center, width } => {
                for (i, r) in rho.iter_mut().enumerate() {
                    *r = rho_b * (1.0 + amplitude * (-((xi(i) - center) / width).powi(2)).exp());
                }
            }
            Initial::VelocityMode { amplitude } => {
                for (i, v) in vel.iter_mut().enumerate() {
                    *v = amplitude * (PI * xi(i)).sin();
                }
            }
            Initial::Piston { velocity } => {
                v_a = velocity;
                for (i, v) in vel.iter_mut().enumerate() {
                    *v = velocity * (2.0 * PI * xi(i)).cos();
                }
            }
        }
        let mass_a = rho_a * self.volume_a();
        let position = match self.geometry {
            Geometry::Planar { position, .. } => position,
            Geometry::Spherical { radius, .. } => radius,
        };
        SimState { t: 0.0, mom_b: rho.iter().zip(&vel).map(|(r, v)| r * v).collect(), rho_b: rho, mass_a, momentum_a: mass_a * v_a, position }
    }

    /// Largest step allowed by the acoustic and viscous CFL conditions.
    pub fn dt_limit(&self, s: &SimState) -> f64 {
        let mesh = self.velocity_a(s);
        self.operator(s).dt_limit(&s.rho_b, &s.mom_b, mesh, self.cfl)
    }

    fn derivative(&self, s: &SimState) -> Derivative {
        let v_a = self.velocity_a(s);
        let r = self.operator(s).rates(&s.rho_b, &s.mom_b, v_a, v_a, self.mode);
        let (dmass_a, dmomentum_a, dposition) = match self.geometry {
            Geometry::Planar { .. } => {
                // first face touches the slab's right side, last face its left side
                let jump = r.sigma_first - r.sigma_last;
                (-self.params.exchange() * v_a * jump, jump, v_a)
            }
            Geometry::Spherical { .. } => (0.0, 0.0, 0.0),
        };
        Derivative { drho: r.drho, dmom: r.dmom, dmass_a, dmomentum_a, dposition }
    }

    fn validate_state(&self, s: &SimState) -> Result<(), SimError> {
        if let Some(cell) = s.rho_b.iter().zip(&s.mom_b).position(|(r, m)| !(*r > 0.0 && r.is_finite() && m.is_finite())) {
            return Err(SimError::NegativeDensity { phase: Phase::B, cell, time: s.t });
        }
        if !(s.mass_a > 0.0 && s.momentum_a.is_finite() && s.position.is_finite()) {
            return Err(SimError::NegativeDensity { phase: Phase::A, cell: 0, time: s.t });
        }
        Ok(())
    }

    /// One SSP-RK2 step of size `dt`.
    pub fn step(&self, s: &SimState, dt: f64) -> Result<SimState, SimError> {
        self.validate_state(s)?;
        let limit = self.dt_limit(s);
        if !(dt <= limit * (1.0 + 1e-9)) {
            return Err(SimError::Cfl { time: s.t, dt, limit });
        }
        let euler = |from: &SimState| -> SimState {
            let k = self.derivative(from);
            SimState {
                t: from.t + dt,
                rho_b: from.rho_b.iter().zip(&k.drho).map(|(q, d)| q + dt * d).collect(),
                mom_b: from.mom_b.iter().zip(&k.dmom).map(|(q, d)| q + dt * d).collect(),
                mass_a: from.mass_a + dt * k.dmass_a,
                momentum_a: from.momentum_a + dt * k.dmomentum_a,
                position: from.position + dt * k.dposition,
            }
        };
        let one = euler(s);
        self.validate_state(&one)?;
        let two = euler(&one);
        let mix = |a: f64, b: f64| 0.5 * a + 0.5 * b;
        let next = SimState {
            t: s.t + dt,
            rho_b: s.rho_b.iter().zip(&two.rho_b).map(|(a, b)| mix(*a, *b)).collect(),
            mom_b: s.mom_b.iter().zip(&two.mom_b).map(|(a, b)| mix(*a, *b)).collect(),
            mass_a: mix(s.mass_a, two.mass_a),
            momentum_a: mix(s.momentum_a, two.momentum_a),
            position: mix(s.position, two.position),
        };
        self.validate_state(&next)?;
        Ok(next)
    }

    /// Normal stresses carried by the first and last phase B faces.
    fn boundary_stress(&self, s: &SimState) -> (f64, f64) {
        let v_a = self.velocity_a(s);
        let d = self.operator(s).discretize(&s.rho_b, &s.mom_b, v_a, v_a);
        (d.sigma[0], d.sigma[self.cells])
    }

    /// All ledger integrals at the state's time, using the solver's cell and face operators.
    pub fn ledger_entry(&self, s: &SimState) -> LedgerEntry {
        let grid = self.grid(s);
        let op = self.operator(s);
        let v_a = self.velocity_a(s);
        let d = op.discretize(&s.rho_b, &s.mom_b, v_a, v_a);
        let c = self.params.exchange();
        let visc = radial::Viscosity { mu: self.params.mu_b, lambda: self.params.lambda_b };
        let (mut mass_b, mut ke_b, mut diss, mut work_b, mut src_b) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.cells {
            let vol = grid.volume(i);
            let (rho, u) = (s.rho_b[i], d.u[i]);
            mass_b += rho * vol;
            ke_b += 0.5 * rho * u * u * vol;
            if self.model == Model::Viscous {
                diss += (visc.mu * radial::strain_norm_sq(grid.sym, grid.center(i), u, d.dudr[i]) + visc.lambda * d.div[i].powi(2)) * vol;
            }
            work_b += d.div[i] * d.pi[i] * vol;
            src_b += 0.5 * c * d.div_tv[i] * u * u * vol;
        }
        let m = grid.measure();
        // the slab translates rigidly and the shell interface is at rest: div_Gamma v_S = 0
        let src_a = match self.geometry {
            Geometry::Planar { .. } => 0.5 * c * v_a.powi(3) * (d.sigma[0] - d.sigma[self.cells]),
            Geometry::Spherical { .. } => 0.0,
        };
        LedgerEntry {
            t: s.t,
            mass_a: s.mass_a,
            mass_b: mass_b * m,
            surf_mass: self.params.rho_0 * self.interface_area(),
            ke_a: 0.5 * s.mass_a * v_a * v_a,
            ke_b: ke_b * m,
            dissipation: diss * m,
            work_b: work_b * m,
            work_surf: 0.0,
            src_a,
            src_b: src_b * m,
        }
    }

    /// Phase A as a single uniform cell; the pressure is the mean of its linear profile.
    pub fn phase_a(&self, s: &SimState) -> PhaseState {
        let (sig_first, sig_last) = self.boundary_stress(s);
        match self.geometry {
            Geometry::Planar { width, .. } => PhaseState {
                grid: vec![s.position + 0.5 * width],
                rho: vec![self.density_a(s)],
                vel: vec![self.velocity_a(s)],
                pressure: vec![-0.5 * (sig_first + sig_last)],
            },
            Geometry::Spherical { .. } => PhaseState {
                grid: vec![0.0],
                rho: vec![self.density_a(s)],
                vel: vec![0.0],
                pressure: vec![self.params.pi_0 * self.curvature() - sig_first],
            },
        }
    }

    /// Pressure of phase A at its interfaces: `(left, right)` for the slab; both equal for
    /// the ball.
    pub fn interface_pressure_a(&self, s: &SimState) -> (f64, f64) {
        let (sig_first, sig_last) = self.boundary_stress(s);
        match self.geometry {
            Geometry::Planar { .. } => (-sig_last, -sig_first),
            Geometry::Spherical { .. } => {
                let p = self.params.pi_0 * self.curvature() - sig_first;
                (p, p)
            }
        }
    }

    pub fn phase_b(&self, s: &SimState) -> PhaseState {
        let grid = self.grid(s);
        PhaseState {
            grid: (0..self.cells).map(|i| grid.center(i)).collect(),
            rho: s.rho_b.clone(),
            vel: s.rho_b.iter().zip(&s.mom_b).map(|(r, m)| m / r).collect(),
            pressure: s.rho_b.iter().map(|r| self.params.eos_pressure(*r)).collect(),
        }
    }

    pub fn interface(&self, s: &SimState) -> InterfaceState {
        InterfaceState {
            position: s.position,
            v_s_normal: self.velocity_a(s),
            rho_0: self.params.rho_0,
            pi_0: self.params.pi_0,
            area: self.interface_area(),
        }
    }

    /// `max |pi_0 H + T_A - T_B|` over the interfaces, with `T` the normal stress on each side
    /// (`T_A = -pi_A` since phase A has no strain in either reduction).
    pub fn interface_residual(&self, s: &SimState) -> f64 {
        let (sig_first, sig_last) = self.boundary_stress(s);
        let (left, right) = self.interface_pressure_a(s);
        let h = self.curvature();
        let pi_0 = self.params.pi_0;
        match self.geometry {
            Geometry::Planar { .. } => (pi_0 * h - left - sig_last).abs().max((pi_0 * h - right - sig_first).abs()),
            Geometry::Spherical { .. } => (pi_0 * h - left - sig_first).abs(),
        }
    }
}

#[derive(Debug, Serialize)]
struct SnapshotRow {
    t: f64,
    cell: usize,
    x_or_r: f64,
    rho: f64,
    vel: f64,
    pressure: f64,
    phase: &'static str,
}

/// Write both phases of `s` as snapshot rows.
pub fn write_snapshot<W: Write>(solver: &Solver, s: &SimState, w: &mut csv::Writer<W>) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(e.to_string());
    for (tag, p) in [("A", solver.phase_a(s)), ("B", solver.phase_b(s))] {
        for i in 0..p.grid.len() {
            w.serialize(SnapshotRow { t: s.t, cell: i, x_or_r: p.grid[i], rho: p.rho[i], vel: p.vel[i], pressure: p.pressure[i], phase: tag }).map_err(io)?;
        }
    }
    Ok(())
}

/// End-of-run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub model: Model,
    pub geometry: Symmetry,
    pub mode: Mode,
    pub cells: usize,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub mass_residual: f64,
    pub energy_residual: f64,
    pub energy_relative: f64,
    pub energy_scale: f64,
    pub max_interface_residual: f64,
    pub classical_max_diff: Option<f64>,
    pub cases: Vec<Case>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }
}

/// A configured run: solver, state, ledger and optional classical twin.
pub struct Simulation {
    pub config: ScenarioConfig,
    pub solver: Solver,
    pub state: SimState,
    pub ledger: Ledger,
    pub dt: f64,
    pub steps: usize,
    pub steps_taken: usize,
    pub max_interface_residual: f64,
    classical: Option<(ClassicalSolver, SimState)>,
    classical_max_diff: f64,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let solver = Solver::from_config(&config);
        let state = solver.initial_state(config.rho_a, config.rho_b, config.initial);
        solver.validate_state(&state)?;
        let base = config.dt.unwrap_or_else(|| CFL_HEADROOM * solver.dt_limit(&state));
        let (dt, steps) = match (config.steps, config.t_end) {
            (Some(n), _) => (base, n),
            (None, Some(t)) => {
                let n = ((t / base) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                (t / n as f64, n)
            }
            (None, None) => return Err(SimError::Config("one of t_end or steps is required".into())),
        };
        let mut ledger = Ledger::new();
        ledger.push(solver.ledger_entry(&state))?;
        let classical = config
            .checks
            .compare_classical
            .then(|| (ClassicalSolver::new(config.model, &config.geometry, &config.params, config.cells, config.limiter), state.clone()));
        let max_interface_residual = solver.interface_residual(&state);
        Ok(Self { config, solver, state, ledger, dt, steps, steps_taken: 0, max_interface_residual, classical, classical_max_diff: 0.0 })
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        let next = self.solver.step(&self.state, self.dt)?;
        self.ledger.push(self.solver.ledger_entry(&next))?;
        self.max_interface_residual = self.max_interface_residual.max(self.solver.interface_residual(&next));
        if let Some((solver, state)) = &mut self.classical {
            *state = solver.step(state, self.dt);
            self.classical_max_diff = self.classical_max_diff.max(next.max_difference(state));
        }
        self.state = next;
        self.steps_taken += 1;
        Ok(())
    }

    /// Run all remaining steps.
    pub fn run(&mut self) -> Result<(), SimError> {
        while self.steps_taken < self.steps {
            self.step()?;
        }
        Ok(())
    }

    /// Run all remaining steps, writing snapshots at the configured cadence.
    pub fn run_with_snapshots<W: Write>(&mut self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        write_snapshot(&self.solver, &self.state, &mut w)?;
        let every = self.config.output_every;
        while self.steps_taken < self.steps {
            self.step()?;
            if self.steps_taken == self.steps || (every > 0 && self.steps_taken % every == 0) {
                write_snapshot(&self.solver, &self.state, &mut w)?;
            }
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }

    pub fn classical_max_diff(&self) -> Option<f64> {
        self.classical.as_ref().map(|_| self.classical_max_diff)
    }

    /// Residuals and configured checks; every tolerance is multiplied by `tol_scale`.
    pub fn summary(&self, tol_scale: f64) -> Result<RunSummary, SimError> {
        let entries = self.ledger.entries();
        let (t0, t1) = (entries[0].t, entries[entries.len() - 1].t);
        let mu_zero = self.config.model == Model::Inviscid;
        let mass_residual = self.ledger.check_mass_law(t0, t1)?;
        let energy_residual = self.ledger.check_energy_law(t0, t1, mu_zero)?;
        let energy_relative = self.ledger.relative_energy_residual(mu_zero)?;
        let checks = &self.config.checks;
        let mut cases = Vec::new();
        if let Some(tol) = checks.mass_tol {
            cases.push(Case::at_most("mass_law", mass_residual, tol * tol_scale));
        }
        if let Some(tol) = checks.energy_tol {
            cases.push(Case::at_most("energy_law", energy_relative, tol * tol_scale));
        }
        if let Some(tol) = checks.interface_tol {
            cases.push(Case::at_most("interface_balance", self.max_interface_residual, tol * tol_scale));
        }
        if let Some(diff) = self.classical_max_diff() {
            cases.push(Case::at_most("classical_max_diff", diff, checks.classical_tol * tol_scale));
        }
        Ok(RunSummary {
            scenario: self.config.name.clone(),
            model: self.config.model,
            geometry: self.config.geometry.symmetry(),
            mode: self.config.mode,
            cells: self.config.cells,
            steps: self.steps_taken,
            dt: self.dt,
            t_end: self.state.t,
            mass_residual,
            energy_residual,
            energy_relative,
            energy_scale: self.ledger.energy_scale(),
            max_interface_residual: self.max_interface_residual,
            classical_max_diff: self.classical_max_diff(),
            cases,
        })
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["equilibrium_planar", "shell_acoustic", "shell_viscous", "planar_piston"];

/// Built-in scenarios.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let shell = Geometry::Spherical { radius: 1.0, outer: 2.0 };
    let slab = Geometry::Planar { length: 1.0, width: 0.3, position: 0.2 };
    let base = |model, geometry, cells, initial| ScenarioConfig {
        name: name.to_string(),
        model,
        geometry,
        cells,
        dt: None,
        cfl: DEFAULT_CFL,
        t_end: None,
        steps: None,
        params: MaterialParams { rho_0: 0.5, pi_0: 1.0, ..Default::default() },
        rho_a: 1.0,
        rho_b: 1.0,
        initial,
        output_every: 0,
        mode: Mode::Conservative,
        limiter: Limiter::Minmod,
        checks: Checks::default(),
    };
    let c = match name {
        "equilibrium_planar" => ScenarioConfig {
            dt: Some(1e-3),
            steps: Some(10),
            checks: Checks { mass_tol: Some(1e-12), energy_tol: Some(1e-12), interface_tol: Some(1e-12), ..Default::default() },
            ..base(Model::Inviscid, slab, 100, Initial::Equilibrium)
        },
        "shell_acoustic" => ScenarioConfig {
            dt: Some(1e-3),
            steps: Some(1000),
            output_every: 100,
            checks: Checks { mass_tol: Some(1e-8), ..Default::default() },
            ..base(Model::Inviscid, shell, 200, Initial::DensityPulse { amplitude: 0.05, center: 0.5, width: 0.1 })
        },
        "shell_viscous" => ScenarioConfig {
            dt: Some(1e-4),
            steps: Some(1000),
            limiter: Limiter::None,
            params: MaterialParams { mu_a: 5e-3, mu_b: 5e-3, lambda_b: 2e-3, rho_0: 0.5, pi_0: 1.0, ..Default::default() },
            output_every: 100,
            checks: Checks { mass_tol: Some(1e-8), energy_tol: Some(1e-5), ..Default::default() },
            ..base(Model::Viscous, shell, 500, Initial::VelocityMode { amplitude: 0.05 })
        },
        "planar_piston" => ScenarioConfig {
            steps: Some(100),
            params: MaterialParams { rho_0: 0.0, pi_0: 1.0, ..Default::default() },
            output_every: 10,
            checks: Checks { mass_tol: Some(1e-12), compare_classical: true, ..Default::default() },
            ..base(Model::Inviscid, slab, 200, Initial::Piston { velocity: 0.1 })
        },
        _ => return None,
    };
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn viscous_params(rho_0: f64) -> MaterialParams {
        MaterialParams { mu_a: 0.01, mu_b: 0.02, lambda_b: 0.01, rho_0, pi_0: 1.0, ..Default::default() }
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn equilibrium_is_fixed_point_in_all_configurations() {
        for model in [Model::Inviscid, Model::Viscous] {
            for geometry in [Geometry::Planar { length: 1.0, width: 0.3, position: 0.2 }, Geometry::Spherical { radius: 1.0, outer: 2.0 }] {
                for mode in [Mode::Conservative, Mode::Primitive] {
                    let solver = Solver { model, geometry, params: viscous_params(0.3), cells: 40, mode, limiter: Limiter::Minmod, cfl: 0.4 };
                    let s0 = solver.initial_state(1.2, 0.9, Initial::Equilibrium);
                    let mut s = s0.clone();
                    for _ in 0..5 {
                        let next = solver.step(&s, 1e-3).unwrap();
                        assert!(next.max_difference(&s) < 1e-12);
                        s = next;
                    }
                    let e = solver.ledger_entry(&s);
                    assert_eq!((e.dissipation, e.work_b, e.work_surf, e.src_a, e.src_b), (0.0, 0.0, 0.0, 0.0, 0.0));
                    assert!(solver.interface_residual(&s) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shell_kinetic_energy_of_uniform_velocity() {
        let solver = Solver {
            model: Model::Inviscid,
            geometry: Geometry::Spherical { radius: 1.0, outer: 2.0 },
            params: viscous_params(0.0),
            cells: 30,
            mode: Mode::Conservative,
            limiter: Limiter::Minmod,
            cfl: 0.4,
        };
        let mut s = solver.initial_state(1.0, 1.0, Initial::Equilibrium);
        s.mom_b = vec![1.0; 30];
        let e = solver.ledger_entry(&s);
        assert!((e.ke_b - 14.0 * PI / 3.0).abs() < 1e-12);
        assert!((e.mass_b - 28.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ledger_matches_refined_quadrature_of_cell_data() {
        // two-point Gauss per cell of the cell-wise data, with r^2 weights computed separately
        let solver = Solver {
            model: Model::Viscous,
            geometry: Geometry::Spherical { radius: 1.0, outer: 2.0 },
            params: viscous_params(0.2),
            cells: 64,
            mode: Mode::Conservative,
            limiter: Limiter::Minmod,
            cfl: 0.4,
        };
        let s = solver.initial_state(1.0, 1.0, Initial::VelocityMode { amplitude: 0.3 });
        let e = solver.ledger_entry(&s);
        let g = solver.grid(&s);
        let nodes = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let (mut mass, mut ke) = (0.0, 0.0);
        for i in 0..64 {
            let u = s.mom_b[i] / s.rho_b[i];
            for x in nodes {
                let r = g.face(i) + x * g.dx;
                let w = 0.5 * g.dx * 4.0 * PI * r * r;
                mass += s.rho_b[i] * w;
                ke += 0.5 * s.rho_b[i] * u * u * w;
            }
        }
        assert!((mass - e.mass_b).abs() < 1e-6 * mass);
        assert!((ke - e.ke_b).abs() < 1e-6 * ke);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let solver = Solver::from_config(&preset("shell_acoustic").unwrap());
        let s = solver.initial_state(1.0, 1.0, Initial::Equilibrium);
        let err = solver.step(&s, 1.0).unwrap_err();
        assert!(matches!(err, SimError::Cfl { dt, limit, .. } if dt == 1.0 && limit < 0.01));
        assert!(err.is_runtime());
    }

    #[test]
    fn negative_density_is_reported_with_cell() {
        let solver = Solver::from_config(&preset("shell_acoustic").unwrap());
        let mut s = solver.initial_state(1.0, 1.0, Initial::Equilibrium);
        s.rho_b[7] = -0.1;
        let err = solver.step(&s, 1e-4).unwrap_err();
        assert!(matches!(err, SimError::NegativeDensity { phase: Phase::B, cell: 7, .. }));
    }

    #[test]
    fn config_errors_name_the_problem() {
        let text = r#"{"model":"inviscid","geometry":{"kind":"spherical","radius":1,"outer":2},"cells":10,"steps":1,
            "params":{"mu_A":0,"mu_B":0,"lambda_B":0,"rho_0":0.1},"initial":{"preset":"equilibrium"}}"#;
        let err = ScenarioConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("pi_0"), "{err}");
        let unknown = text.replace("\"cells\":10", "\"cells\":10,\"bogus\":1");
        assert!(ScenarioConfig::from_json(&unknown).unwrap_err().to_string().contains("bogus"));
        let ok = text.replace("\"rho_0\":0.1", "\"rho_0\":0.1,\"pi_0\":1");
        let c = ScenarioConfig::from_json(&ok).unwrap();
        assert_eq!(c.cfl, DEFAULT_CFL);
        let piston = ok.replace("\"preset\":\"equilibrium\"", "\"preset\":\"piston\",\"velocity\":0.1");
        assert!(ScenarioConfig::from_json(&piston).is_err());
    }

    #[test]
    fn planar_exchange_conserves_total_mass() {
        let mut c = preset("planar_piston").unwrap();
        c.params = viscous_params(0.4);
        c.model = Model::Viscous;
        c.checks.compare_classical = false;
        let mut sim = Simulation::new(c).unwrap();
        sim.run().unwrap();
        let first = sim.ledger.entries()[0];
        let last = *sim.ledger.entries().last().unwrap();
        assert!(last.mass_a != first.mass_a, "exchange should move mass");
        assert!(sim.summary(1.0).unwrap().mass_residual < 1e-13);
        assert!(sim.max_interface_residual < 1e-12);
    }

    #[test]
    fn zero_interface_density_matches_classical_path() {
        for model in [Model::Inviscid, Model::Viscous] {
            let mut c = preset("planar_piston").unwrap();
            c.model = model;
            c.params = viscous_params(0.0);
            let mut sim = Simulation::new(c).unwrap();
            sim.run().unwrap();
            let diff = sim.classical_max_diff().unwrap();
            assert!(diff < 1e-10, "{model:?}: {diff}");
        }
    }

    #[test]
    fn snapshots_have_both_phases() {
        let mut c = preset("equilibrium_planar").unwrap();
        c.steps = Some(2);
        c.output_every = 1;
        let mut sim = Simulation::new(c).unwrap();
        let mut buf = Vec::new();
        sim.run_with_snapshots(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,cell,x_or_r,rho,vel,pressure,phase\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 101);
    }
}
