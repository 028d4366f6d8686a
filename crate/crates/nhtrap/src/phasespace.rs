//! Phase-space grids, symbols, Poisson brackets and Hamilton flow.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;

use crate::dual::Dual;
use crate::error::{Error, Result};

pub const DEFAULT_N_CAP: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub h: f64,
    pub xi_max: f64,
}

impl PhaseGrid {
    pub fn len(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.len() / self.n_x as f64
    }

    pub fn dxi(&self) -> f64 {
        self.h * 2.0 * PI / self.len()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    /// Momentum at column `i`; columns run over `k = i - n_x/2`.
    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - (self.n_x / 2) as f64) * self.dxi()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.x(j)).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.xi(i)).collect()
    }

    /// Largest representable momentum `hπ/Δx`.
    pub fn xi_nyquist(&self) -> f64 {
        self.h * PI / self.dx()
    }

    pub fn admissible(&self) -> bool {
        self.n_x.is_power_of_two()
            && self.dx() > 0.0
            && self.h > 0.0
            && self.h <= 1.0
            && self.xi_nyquist() >= self.xi_max
    }
}

pub fn make_grid(h: f64, x_min: f64, x_max: f64, xi_max: f64, min_points: usize) -> Result<PhaseGrid> {
    make_grid_capped(h, x_min, x_max, xi_max, min_points, DEFAULT_N_CAP)
}

/// Smallest power-of-two grid with at least `min_points` nodes covering `|ξ| <= xi_max`.
pub fn make_grid_capped(
    h: f64,
    x_min: f64,
    x_max: f64,
    xi_max: f64,
    min_points: usize,
    n_cap: usize,
) -> Result<PhaseGrid> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("h = {h} not in (0, 1]")));
    }
    if !(x_min < x_max) {
        return Err(Error::InvalidParameter(format!("x_min = {x_min} >= x_max = {x_max}")));
    }
    if !(xi_max > 0.0) {
        return Err(Error::InvalidParameter(format!("xi_max = {xi_max} must be positive")));
    }
    let len = x_max - x_min;
    let mut n: usize = 1;
    while n < min_points || h * PI * n as f64 / len < xi_max {
        if n > n_cap {
            break;
        }
        n *= 2;
    }
    if n > n_cap {
        let needed = (xi_max * len / (h * PI)).ceil().max(min_points as f64);
        return Err(Error::GridCapExceeded { needed: needed as usize, cap: n_cap });
    }
    Ok(PhaseGrid { x_min, x_max, n_x: n, h, xi_max })
}

/// A symbol given in closed form; derivatives come from the dual parts.
pub trait ClosedForm: Send + Sync {
    fn eval(&self, x: Dual, xi: Dual) -> Dual;
}

impl<F> ClosedForm for F
where
    F: Fn(Dual, Dual) -> Dual + Send + Sync,
{
    fn eval(&self, x: Dual, xi: Dual) -> Dual {
        self(x, xi)
    }
}

pub type Symbol = Arc<dyn ClosedForm>;

pub fn symbol(f: impl Fn(Dual, Dual) -> Dual + Send + Sync + 'static) -> Symbol {
    Arc::new(f)
}

pub fn value(s: &dyn ClosedForm, x: f64, xi: f64) -> f64 {
    s.eval(Dual::constant(x), Dual::constant(xi)).v
}

/// Value with `∂_x` and `∂_ξ`.
pub fn gradient(s: &dyn ClosedForm, x: f64, xi: f64) -> (f64, f64, f64) {
    let dx = s.eval(Dual::var(x), Dual::constant(xi));
    let dxi = s.eval(Dual::constant(x), Dual::var(xi));
    (dx.v, dx.d, dxi.d)
}

/// Derivative of `s` along the Hamilton field of `p`.
pub fn hamilton_derivative(p: &dyn ClosedForm, s: &dyn ClosedForm, x: f64, xi: f64) -> Dual {
    let (_, px, pxi) = gradient(p, x, xi);
    s.eval(Dual::new(x, pxi), Dual::new(xi, -px))
}

/// `{a, b} = ∂_ξa ∂_xb − ∂_xa ∂_ξb` at a point.
pub fn poisson_bracket_at(a: &dyn ClosedForm, b: &dyn ClosedForm, x: f64, xi: f64) -> f64 {
    let (_, ax, axi) = gradient(a, x, xi);
    let (_, bx, bxi) = gradient(b, x, xi);
    axi * bx - ax * bxi
}

#[derive(Clone)]
pub struct SymbolField {
    pub grid: PhaseGrid,
    pub label: String,
    /// Indexed by (x node, ξ column).
    pub values: Array2<f64>,
    pub closed_form: Option<Symbol>,
    /// Whether the symbol is expected to vanish near the momentum cutoff.
    pub compact_in_xi: bool,
}

impl fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolField")
            .field("label", &self.label)
            .field("grid", &self.grid)
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

impl SymbolField {
    pub fn from_closed_form(grid: PhaseGrid, label: impl Into<String>, s: Symbol) -> Result<Self> {
        let n = grid.n_x;
        let xs = grid.xs();
        let xis = grid.xis();
        let values = Array2::from_shape_fn((n, n), |(j, i)| value(s.as_ref(), xs[j], xis[i]));
        Self::checked(grid, label.into(), values, Some(s))
    }

    pub fn from_values(grid: PhaseGrid, label: impl Into<String>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n_x, grid.n_x) {
            return Err(Error::Dimension { expected: grid.n_x, got: values.nrows() });
        }
        Self::checked(grid, label.into(), values, None)
    }

    fn checked(grid: PhaseGrid, label: String, values: Array2<f64>, closed_form: Option<Symbol>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(label));
        }
        Ok(SymbolField { grid, label, values, closed_form, compact_in_xi: true })
    }

    /// Marks a symbol (such as a polynomial in ξ) that is not cut off in momentum.
    pub fn unbounded_in_xi(mut self) -> Self {
        self.compact_in_xi = false;
        self
    }

    /// Value at an arbitrary point: closed form if present, else bilinear interpolation.
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match &self.closed_form {
            Some(s) => value(s.as_ref(), x, xi),
            None => self.interpolate(x, xi),
        }
    }

    fn interpolate(&self, x: f64, xi: f64) -> f64 {
        let g = &self.grid;
        let n = g.n_x;
        let u = (x - g.x_min) / g.dx();
        let j0 = u.floor();
        let fx = u - j0;
        let j0 = (j0 as i64).rem_euclid(n as i64) as usize;
        let j1 = (j0 + 1) % n;
        let w = xi / g.dxi() + (n / 2) as f64;
        let w = w.clamp(0.0, (n - 1) as f64);
        let i0 = (w.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        let fy = w - i0 as f64;
        let v = &self.values;
        (1.0 - fx) * ((1.0 - fy) * v[[j0, i0]] + fy * v[[j0, i1]])
            + fx * ((1.0 - fy) * v[[j1, i0]] + fy * v[[j1, i1]])
    }
}

fn fd_derivatives(f: &SymbolField) -> (Array2<f64>, Array2<f64>) {
    let n = f.grid.n_x;
    let v = &f.values;
    let deriv = |get: &dyn Fn(usize) -> f64, k: usize, step: f64| -> f64 {
        if k == 0 {
            (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * step)
        } else if k == n - 1 {
            (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * step)
        } else {
            (get(k + 1) - get(k - 1)) / (2.0 * step)
        }
    };
    let (dx, dxi) = (f.grid.dx(), f.grid.dxi());
    let ddx = Array2::from_shape_fn((n, n), |(j, i)| deriv(&|k| v[[k, i]], j, dx));
    let ddxi = Array2::from_shape_fn((n, n), |(j, i)| deriv(&|k| v[[j, k]], i, dxi));
    (ddx, ddxi)
}

/// `{a, b}` on the grid, exact when both operands have closed forms and by
/// second-order finite differences otherwise.
pub fn poisson_bracket(a: &SymbolField, b: &SymbolField) -> Result<SymbolField> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let g = a.grid;
    let n = g.n_x;
    let label = format!("{{{}, {}}}", a.label, b.label);
    let values = match (&a.closed_form, &b.closed_form) {
        (Some(sa), Some(sb)) => {
            let xs = g.xs();
            let xis = g.xis();
            Array2::from_shape_fn((n, n), |(j, i)| poisson_bracket_at(sa.as_ref(), sb.as_ref(), xs[j], xis[i]))
        }
        _ => {
            if n < 3 {
                return Err(Error::GridTooCoarse("finite differences need 3 nodes".into()));
            }
            let (ax, axi) = fd_derivatives(a);
            let (bx, bxi) = fd_derivatives(b);
            &axi * &bx - &ax * &bxi
        }
    };
    SymbolField::from_values(g, label, values)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Elapsed flow time, strictly increasing from 0.
    pub times: Vec<f64>,
    /// +1 forward, -1 backward.
    pub direction: f64,
    pub points: Vec<(f64, f64)>,
    pub energy_drift: f64,
    /// The trajectory left the bounding box before `t_final`.
    pub escaped: bool,
}

impl Trajectory {
    pub fn end(&self) -> (f64, f64) {
        *self.points.last().expect("trajectory has a start point")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub dt: f64,
    /// Integration stops once `|x|` or `|ξ|` exceeds this.
    pub bound: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { dt: 1e-3, bound: 10.0 }
    }
}

fn rk4_step(p: &dyn ClosedForm, (x, xi): (f64, f64), dt: f64) -> (f64, f64) {
    let f = |x: f64, xi: f64| {
        let (_, px, pxi) = gradient(p, x, xi);
        (pxi, -px)
    };
    let k1 = f(x, xi);
    let k2 = f(x + 0.5 * dt * k1.0, xi + 0.5 * dt * k1.1);
    let k3 = f(x + 0.5 * dt * k2.0, xi + 0.5 * dt * k2.1);
    let k4 = f(x + dt * k3.0, xi + dt * k3.1);
    (
        x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        xi + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Classical fourth-order Runge–Kutta integration of `(ẋ, ξ̇) = (∂_ξp, −∂_xp)`.
pub fn hamilton_flow(p: &SymbolField, start: (f64, f64), t_final: f64, opts: FlowOptions) -> Result<Trajectory> {
    let s = p.closed_form.as_ref().ok_or_else(|| Error::MissingClosedForm(p.label.clone()))?;
    integrate(s.as_ref(), start, t_final, opts)
}

pub fn integrate(p: &dyn ClosedForm, start: (f64, f64), t_final: f64, opts: FlowOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {} must be positive", opts.dt)));
    }
    let direction = if t_final < 0.0 { -1.0 } else { 1.0 };
    let total = t_final.abs();
    let steps = (total / opts.dt).ceil() as usize;
    let e0 = value(p, start.0, start.1);
    let mut times = vec![0.0];
    let mut points = vec![start];
    let mut drift: f64 = 0.0;
    let mut cur = start;
    let mut escaped = false;
    for k in 0..steps {
        let t0 = k as f64 * opts.dt;
        let h = (total - t0).min(opts.dt);
        cur = rk4_step(p, cur, direction * h);
        times.push(if k + 1 == steps { total } else { t0 + h });
        points.push(cur);
        drift = drift.max((value(p, cur.0, cur.1) - e0).abs());
        if cur.0.abs() > opts.bound || cur.1.abs() > opts.bound {
            escaped = true;
            break;
        }
    }
    Ok(Trajectory { times, direction, points, energy_drift: drift, escaped })
}

#[derive(Clone, Debug)]
pub struct TrappedMask {
    pub grid: PhaseGrid,
    pub forward: Array2<bool>,
    pub backward: Array2<bool>,
    pub trapped: Array2<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct TrapOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Energy window `|p| <= delta`.
    pub delta: f64,
}

impl Default for TrapOptions {
    fn default() -> Self {
        TrapOptions { t_max: 6.0, dt: 1e-2, delta: 1.0 }
    }
}

fn stays_out(p: &dyn ClosedForm, absorb: &(dyn Fn(f64, f64) -> bool + Sync), start: (f64, f64), dir: f64, opts: &TrapOptions) -> bool {
    let steps = (opts.t_max / opts.dt).ceil() as usize;
    let mut cur = start;
    if absorb(cur.0, cur.1) {
        return false;
    }
    for k in 0..steps {
        let h = (opts.t_max - k as f64 * opts.dt).min(opts.dt);
        cur = rk4_step(p, cur, dir * h);
        if absorb(cur.0, cur.1) || !cur.0.is_finite() || !cur.1.is_finite() {
            return false;
        }
    }
    true
}

/// Nodes whose forward (backward) trajectories avoid `absorb` up to `t_max`.
pub fn trapped_sets(
    p: &SymbolField,
    absorb: &(dyn Fn(f64, f64) -> bool + Sync),
    opts: TrapOptions,
) -> Result<TrappedMask> {
    let s = p.closed_form.as_ref().ok_or_else(|| Error::MissingClosedForm(p.label.clone()))?;
    if !(opts.t_max > 0.0) || !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter("t_max and dt must be positive".into()));
    }
    let g = p.grid;
    let n = g.n_x;
    let mut forward = Array2::from_elem((n, n), false);
    let mut backward = Array2::from_elem((n, n), false);
    for j in 0..n {
        for i in 0..n {
            let pt = (g.x(j), g.xi(i));
            if value(s.as_ref(), pt.0, pt.1).abs() > opts.delta {
                continue;
            }
            forward[[j, i]] = stays_out(s.as_ref(), absorb, pt, 1.0, &opts);
            backward[[j, i]] = stays_out(s.as_ref(), absorb, pt, -1.0, &opts);
        }
    }
    let trapped = ndarray::Zip::from(&forward).and(&backward).map_collect(|&f, &b| f && b);
    Ok(TrappedMask { grid: g, forward, backward, trapped })
}

impl TrappedMask {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,xi,forward,backward,trapped")?;
        let n = self.grid.n_x;
        for j in 0..n {
            for i in 0..n {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    self.grid.x(j),
                    self.grid.xi(i),
                    self.forward[[j, i]] as u8,
                    self.backward[[j, i]] as u8,
                    self.trapped[[j, i]] as u8
                )?;
            }
        }
        Ok(())
    }

    pub fn trapped_points(&self) -> Vec<(f64, f64)> {
        let n = self.grid.n_x;
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if self.trapped[[j, i]] {
                    out.push((self.grid.x(j), self.grid.xi(i)));
                }
            }
        }
        out
    }
}
