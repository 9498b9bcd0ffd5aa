//! Adaptive Dormand–Prince 5(4) integration with dense output and event location.
//!
//! The integrator is generic over the state dimension and knows nothing about
//! the profile equation. Right-hand sides may refuse to evaluate a state by
//! returning [`SingularState`]; a trial step that hits such a state is rejected
//! and retried with a smaller step, and the error only propagates once the step
//! size has collapsed.

use thiserror::Error;

/// Raised by a right-hand side that cannot be evaluated at the given state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("singular state: {reason}")]
pub struct SingularState {
    pub reason: &'static str,
}

impl SingularState {
    pub const fn new(reason: &'static str) -> Self {
        Self { reason }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    BudgetExceeded { max_steps: usize, t: f64 },
    #[error("step size collapsed to {h:e} at t = {t}; problem looks stiff")]
    StiffnessSuspected { t: f64, h: f64 },
    #[error("singular state at t = {t}: {reason}")]
    SingularState { t: f64, reason: &'static str },
    #[error("invalid integrator configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

impl Direction {
    fn matches(self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Either => rising || falling,
        }
    }
}

type StateFn<'a, const D: usize, T> = Box<dyn Fn(f64, &[f64; D]) -> T + Send + Sync + 'a>;

/// Zero-crossing function of the state, checked after every accepted step.
pub struct Event<'a, const D: usize> {
    pub name: &'static str,
    pub direction: Direction,
    pub terminal: bool,
    g: StateFn<'a, D, f64>,
}

impl<'a, const D: usize> Event<'a, D> {
    pub fn new(
        name: &'static str,
        direction: Direction,
        terminal: bool,
        g: impl Fn(f64, &[f64; D]) -> f64 + Send + Sync + 'a,
    ) -> Self {
        Self {
            name,
            direction,
            terminal,
            g: Box::new(g),
        }
    }

    pub fn eval(&self, t: f64, y: &[f64; D]) -> f64 {
        (self.g)(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Interpolated samples recorded inside every accepted step, in addition to
    /// the step endpoints.
    pub dense_samples: usize,
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 200_000,
            initial_step: None,
            dense_samples: 0,
            event_tol: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(IntegrateError::Config("rel_tol must be positive"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(IntegrateError::Config("abs_tol must be positive"));
        }
        if self.max_steps == 0 {
            return Err(IntegrateError::Config("max_steps must be at least 1"));
        }
        if !(self.max_step > 0.0) {
            return Err(IntegrateError::Config("max_step must be positive"));
        }
        if !(self.event_tol > 0.0) {
            return Err(IntegrateError::Config("event_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<const D: usize> {
    pub event: usize,
    pub name: &'static str,
    pub t: f64,
    pub state: [f64; D],
    /// |g| at the reported location.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    Event(usize),
    Predicate,
}

#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub hits: Vec<EventHit<D>>,
    pub termination: Termination,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const D: usize> Trajectory<D> {
    pub fn last(&self) -> (f64, [f64; D]) {
        let i = self.t.len() - 1;
        (self.t[i], self.y[i])
    }

    pub fn terminal_hit(&self) -> Option<&EventHit<D>> {
        match self.termination {
            Termination::Event(i) => self.hits.iter().rev().find(|h| h.event == i),
            _ => None,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer & Wanner, dopri5 `contd5`).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const SINGULAR_SHRINK: f64 = 0.25;
const MIN_RELATIVE_STEP: f64 = 1e-14;

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const D: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn eval(&self, t: f64) -> [f64; D] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; D];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.r;
            *o = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

pub struct Integrator<'a, const D: usize> {
    config: IntegratorConfig,
    weights: [f64; D],
    events: Vec<Event<'a, D>>,
    stop_when: Option<StateFn<'a, D, bool>>,
}

impl<'a, const D: usize> Integrator<'a, D> {
    pub fn new(config: IntegratorConfig) -> Self {
        Self {
            config,
            weights: [1.0; D],
            events: Vec::new(),
            stop_when: None,
        }
    }

    /// Per-component multipliers applied to `abs_tol`.
    pub fn weights(mut self, weights: [f64; D]) -> Self {
        self.weights = weights;
        self
    }

    pub fn event(mut self, event: Event<'a, D>) -> Self {
        self.events.push(event);
        self
    }

    /// Stop after the first accepted step whose end state satisfies `pred`.
    pub fn stop_when(mut self, pred: impl Fn(f64, &[f64; D]) -> bool + Send + Sync + 'a) -> Self {
        self.stop_when = Some(Box::new(pred));
        self
    }

    fn scale(&self, y0: &[f64; D], y1: &[f64; D], i: usize) -> f64 {
        self.config.abs_tol * self.weights[i] + self.config.rel_tol * y0[i].abs().max(y1[i].abs())
    }

    fn initial_step<F>(&self, rhs: &F, t0: f64, y0: &[f64; D], f0: &[f64; D], span: f64) -> f64
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D], SingularState>,
    {
        let n = D as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..D {
            let sk = self.scale(y0, y0, i);
            dnf += (f0[i] / sk).powi(2);
            dny += (y0[i] / sk).powi(2);
        }
        dnf = (dnf / n).sqrt();
        dny = (dny / n).sqrt();
        let hmax = self.config.max_step.min(span);
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            0.01 * dny / dnf
        };
        h = h.min(hmax);
        let mut y1 = [0.0; D];
        for i in 0..D {
            y1[i] = y0[i] + h * f0[i];
        }
        let Ok(f1) = rhs(t0 + h, &y1) else {
            return h * 0.1;
        };
        let mut der2 = 0.0;
        for i in 0..D {
            let sk = self.scale(y0, y0, i);
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max(dnf);
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(hmax)
    }

    /// Integrate forward from `t0` towards `t_end` (which may be infinite).
    pub fn integrate<F>(
        &self,
        rhs: F,
        t0: f64,
        y0: [f64; D],
        t_end: f64,
    ) -> Result<Trajectory<D>, IntegrateError>
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D], SingularState>,
    {
        self.config.validate()?;
        if !(t_end > t0) {
            return Err(IntegrateError::Config("t_end must exceed t0"));
        }
        let cfg = &self.config;
        let mut traj = Trajectory {
            t: vec![t0],
            y: vec![y0],
            hits: Vec::new(),
            termination: Termination::ReachedEnd,
            accepted: 0,
            rejected: 0,
        };
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y).map_err(|s| IntegrateError::SingularState {
            t,
            reason: s.reason,
        })?;
        let mut g_prev: Vec<f64> = self.events.iter().map(|e| e.eval(t, &y)).collect();
        let mut h = match cfg.initial_step {
            Some(h) => h.min(cfg.max_step),
            None => self.initial_step(&rhs, t, &y, &k1, t_end - t0),
        };
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;
        let mut last_singular: Option<SingularState> = None;
        let expo1 = 0.2 - PI_BETA * 0.75;

        loop {
            if traj.accepted + traj.rejected >= cfg.max_steps {
                return Err(IntegrateError::BudgetExceeded {
                    max_steps: cfg.max_steps,
                    t,
                });
            }
            h = h.min(cfg.max_step);
            let remaining = t_end - t;
            let mut last_step = false;
            if h >= remaining {
                h = remaining;
                last_step = true;
            }
            if h < MIN_RELATIVE_STEP * t.abs().max(1.0) {
                return Err(match last_singular {
                    Some(s) => IntegrateError::SingularState { t, reason: s.reason },
                    None => IntegrateError::StiffnessSuspected { t, h },
                });
            }

            let stages = self.stages(&rhs, t, &y, &k1, h);
            let (y_new, k, err) = match stages {
                Ok(v) => v,
                Err(s) => {
                    last_singular = Some(s);
                    traj.rejected += 1;
                    last_rejected = true;
                    h *= SINGULAR_SHRINK;
                    continue;
                }
            };
            if !err.is_finite() {
                traj.rejected += 1;
                last_rejected = true;
                h *= SINGULAR_SHRINK;
                continue;
            }

            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                // accepted
                last_singular = None;
                let mut fac = fac11 / facold.powf(PI_BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                facold = err.max(1e-4);
                last_rejected = false;
                traj.accepted += 1;

                let dense = dense_step(t, h, &y, &y_new, &k);
                let t_new = if last_step { t_end } else { t + h };

                // events
                let g_new: Vec<f64> = self.events.iter().map(|e| e.eval(t_new, &y_new)).collect();
                let mut first: Option<(usize, f64, [f64; D], f64)> = None;
                let mut step_hits = Vec::new();
                for (i, ev) in self.events.iter().enumerate() {
                    if !ev.direction.matches(g_prev[i], g_new[i]) {
                        continue;
                    }
                    let (te, ye, res) = self.locate(ev, &dense, t, t_new, g_prev[i], g_new[i]);
                    step_hits.push((i, te, ye, res));
                    if ev.terminal && first.is_none_or(|f| te < f.1) {
                        first = Some((i, te, ye, res));
                    }
                }
                let cutoff = first.map(|f| f.1).unwrap_or(t_new);
                step_hits.sort_by(|a, b| a.1.total_cmp(&b.1));
                for (i, te, ye, res) in step_hits {
                    if te <= cutoff {
                        traj.hits.push(EventHit {
                            event: i,
                            name: self.events[i].name,
                            t: te,
                            state: ye,
                            residual: res,
                        });
                    }
                }

                for j in 1..=cfg.dense_samples {
                    let ts = t + h * j as f64 / (cfg.dense_samples + 1) as f64;
                    if ts >= cutoff {
                        break;
                    }
                    traj.t.push(ts);
                    traj.y.push(dense.eval(ts));
                }

                if let Some((i, te, ye, _)) = first {
                    traj.t.push(te);
                    traj.y.push(ye);
                    traj.termination = Termination::Event(i);
                    return Ok(traj);
                }

                traj.t.push(t_new);
                traj.y.push(y_new);
                t = t_new;
                y = y_new;
                k1 = k[6];
                g_prev = g_new;

                if last_step {
                    traj.termination = Termination::ReachedEnd;
                    return Ok(traj);
                }
                if let Some(pred) = &self.stop_when {
                    if pred(t, &y) {
                        traj.termination = Termination::Predicate;
                        return Ok(traj);
                    }
                }
                h = h_new;
            } else {
                traj.rejected += 1;
                last_rejected = true;
                h /= (1.0 / FAC_MIN).min(fac11 / SAFETY);
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn stages<F>(
        &self,
        rhs: &F,
        t: f64,
        y: &[f64; D],
        k1: &[f64; D],
        h: f64,
    ) -> Result<([f64; D], [[f64; D]; 7], f64), SingularState>
    where
        F: Fn(f64, &[f64; D]) -> Result<[f64; D], SingularState>,
    {
        let (y_new, k) = rk_step(rhs, t, y, k1, h)?;
        let mut err = 0.0;
        #[allow(clippy::needless_range_loop)]
        for i in 0..D {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sk = self.scale(y, &y_new, i);
            err += (e / sk).powi(2);
        }
        Ok((y_new, k, (err / D as f64).sqrt()))
    }

    fn locate(
        &self,
        ev: &Event<'a, D>,
        dense: &DenseStep<D>,
        t0: f64,
        t1: f64,
        g0: f64,
        g1: f64,
    ) -> (f64, [f64; D], f64) {
        let tol = self.config.event_tol;
        let (mut lo, mut hi) = (t0, t1);
        let (mut glo, mut ghi) = (g0, g1);
        let mut best = if g1.abs() <= g0.abs() { (t1, g1) } else { (t0, g0) };
        for _ in 0..200 {
            if hi - lo <= tol && best.1.abs() <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = ev.eval(mid, &dense.eval(mid));
            if gm.abs() < best.1.abs() {
                best = (mid, gm);
            }
            if gm == 0.0 {
                break;
            }
            if (gm < 0.0) == (glo < 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        let _ = ghi;
        // Report the first point at or past the crossing so the sign matches
        // the triggered direction.
        let t_hit = if best.1 == 0.0 { best.0 } else { hi };
        let y_hit = if t_hit == t1 { dense.eval(t1) } else { dense.eval(t_hit) };
        let g_hit = ev.eval(t_hit, &y_hit);
        (t_hit, y_hit, g_hit.abs())
    }
}

/// One Dormand–Prince step of size `h`; returns the fifth-order solution and
/// all seven stage derivatives (the last one evaluated at the new state).
#[allow(clippy::type_complexity)]
pub fn rk_step<F, const D: usize>(
    rhs: &F,
    t: f64,
    y: &[f64; D],
    k1: &[f64; D],
    h: f64,
) -> Result<([f64; D], [[f64; D]; 7]), SingularState>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D], SingularState>,
{
    let mut k = [[0.0; D]; 7];
    k[0] = *k1;
    let mut yt = [0.0; D];

    for i in 0..D {
        yt[i] = y[i] + h * A21 * k[0][i];
    }
    k[1] = rhs(t + C2 * h, &yt)?;
    for i in 0..D {
        yt[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    k[2] = rhs(t + C3 * h, &yt)?;
    for i in 0..D {
        yt[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    k[3] = rhs(t + C4 * h, &yt)?;
    for i in 0..D {
        yt[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    k[4] = rhs(t + C5 * h, &yt)?;
    for i in 0..D {
        yt[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    k[5] = rhs(t + h, &yt)?;
    let mut y_new = [0.0; D];
    for i in 0..D {
        y_new[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    k[6] = rhs(t + h, &y_new)?;
    Ok((y_new, k))
}

/// Advance from `t0` to `t1` in `steps` equal Dormand–Prince steps.
///
/// The result is a smooth function of `t1`, which makes it suitable for
/// finite differencing of a numerically computed solution.
pub fn fixed_steps<F, const D: usize>(
    rhs: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    steps: usize,
) -> Result<[f64; D], SingularState>
where
    F: Fn(f64, &[f64; D]) -> Result<[f64; D], SingularState>,
{
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = rhs(t, &y)?;
        y = rk_step(&rhs, t, &y, &k1, h)?.0;
    }
    Ok(y)
}

fn dense_step<const D: usize>(
    t: f64,
    h: f64,
    y: &[f64; D],
    y_new: &[f64; D],
    k: &[[f64; D]; 7],
) -> DenseStep<D> {
    let mut r = [[0.0; D]; 5];
    for i in 0..D {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        r[0][i] = y[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k[6][i] - bspl;
        r[4][i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                + D7 * k[6][i]);
    }
    DenseStep { t0: t, h, r }
}
