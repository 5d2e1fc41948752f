//! Time domains, state spaces, bounded Lipschitz functionals, trajectory
//! simulation and the additive statistic integrated along a path.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{flow_state, ModelSpec};
use crate::numeric;
use crate::subordination::SubordinatorSpec;

/// Whether time runs over the non-negative integers (counting measure) or
/// the non-negative reals (Lebesgue measure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeDomain {
    Discrete,
    Continuous,
}

/// The geometry of the state space, which also fixes the metric: |x - y| on
/// intervals, arc length on circles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpaceTag {
    Interval { lo: f64, hi: f64 },
    Circle { circumference: f64 },
}

impl SpaceTag {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            SpaceTag::Interval { lo, hi } => x >= lo && x <= hi,
            SpaceTag::Circle { .. } => x.is_finite(),
        }
    }

    /// Canonical representative: identity on intervals, reduction to
    /// `[0, circumference)` on circles.
    pub fn canonicalize(&self, x: f64) -> f64 {
        match *self {
            SpaceTag::Interval { .. } => x,
            SpaceTag::Circle { circumference } => {
                let r = x.rem_euclid(circumference);
                if r == circumference {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    /// The metric of the space.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            SpaceTag::Interval { .. } => (x - y).abs(),
            SpaceTag::Circle { circumference } => {
                let d = (self.canonicalize(x) - self.canonicalize(y)).abs();
                d.min(circumference - d)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            SpaceTag::Interval { lo, hi } => hi - lo,
            SpaceTag::Circle { circumference } => 0.5 * circumference,
        }
    }
}

/// A point of a state space together with its geometry tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub value: f64,
    pub space: SpaceTag,
}

impl State {
    pub fn new(value: f64, space: SpaceTag) -> Result<Self> {
        if !space.contains(value) {
            return Err(Error::Domain(format!(
                "state {value} outside space {space:?}"
            )));
        }
        Ok(State {
            value: space.canonicalize(value),
            space,
        })
    }
}

/// Named bounded Lipschitz functionals with hard-coded exact Lipschitz and
/// sup-norm constants. Arbitrary user closures are deliberately not
/// accepted: their Lipschitz constant would be unverifiable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Functional {
    /// f(x) = x on an interval.
    Identity,
    /// f(x) = c.
    Constant(f64),
    /// f(theta) = cos(theta) on the circle.
    CosineCircle,
    /// f(theta) = min(arc distance to [0], clip) on the circle.
    ClippedArcDistance { clip: f64 },
}

impl Functional {
    pub fn eval(&self, x: f64, space: &SpaceTag) -> f64 {
        match *self {
            Functional::Identity => x,
            Functional::Constant(c) => c,
            Functional::CosineCircle => x.cos(),
            Functional::ClippedArcDistance { clip } => space.distance(x, 0.0).min(clip),
        }
    }

    pub fn lip(&self) -> f64 {
        match *self {
            Functional::Constant(_) => 0.0,
            _ => 1.0,
        }
    }

    pub fn sup_norm(&self, space: &SpaceTag) -> f64 {
        match *self {
            Functional::Identity => match *space {
                SpaceTag::Interval { lo, hi } => lo.abs().max(hi.abs()),
                SpaceTag::Circle { .. } => f64::INFINITY,
            },
            Functional::Constant(c) => c.abs(),
            Functional::CosineCircle => 1.0,
            Functional::ClippedArcDistance { clip } => clip.min(space.diameter()),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Functional::Identity => "identity".into(),
            Functional::Constant(c) => format!("const:{c}"),
            Functional::CosineCircle => "cos".into(),
            Functional::ClippedArcDistance { clip } => format!("clipped:{clip}"),
        }
    }
}

/// How to evaluate the path between recorded sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interp {
    /// Piecewise constant between recorded times (exact for subordinated
    /// chains and for discrete-time chains).
    Stepwise,
    /// The deterministic flow: the state at any time s is the closed-form
    /// solution started from `x0`.
    FlowExact { x0: f64, alpha: f64 },
}

/// A simulated path: strictly increasing times starting at 0 and the states
/// observed at those times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub space: SpaceTag,
    pub domain: TimeDomain,
    pub interp: Interp,
    pub model_id: String,
    pub seed: u64,
}

impl Trajectory {
    /// CSV export with columns (time, state), reals at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,state\n");
        for (t, x) in self.times.iter().zip(self.states.iter()) {
            out.push_str(&format!("{t:.16e},{x:.16e}\n"));
        }
        out
    }
}

fn ar1_step<R: Rng>(x: f64, rng: &mut R) -> f64 {
    0.5 * x + if rng.gen_bool(0.5) { 0.5 } else { 0.0 }
}

fn torus_step<R: Rng>(x: f64, space: &SpaceTag, rng: &mut R) -> f64 {
    let step = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    space.canonicalize(x + step)
}

/// Simulate a path of `model` started at `x0` over `[0, horizon]`.
///
/// Deterministic in `(model, x0, horizon, seed)`. Discrete-time models
/// record states at times 0, 1, ..., horizon; continuous-time subordinated
/// models record states at the subordinator jump times plus the endpoints.
pub fn simulate_path(model: &ModelSpec, x0: State, horizon: f64, seed: u64) -> Result<Trajectory> {
    let space = model.space();
    if x0.space != space {
        return Err(Error::Domain(format!(
            "start state space {:?} does not match model space {:?}",
            x0.space, space
        )));
    }
    if !space.contains(x0.value) {
        return Err(Error::Domain(format!("x0 = {} outside state space", x0.value)));
    }
    if horizon < 0.0 || !horizon.is_finite() {
        return Err(Error::Argument(format!("horizon must be >= 0, got {horizon}")));
    }
    let domain = model.time_domain();
    if domain == TimeDomain::Discrete && horizon.fract() != 0.0 {
        return Err(Error::Argument(format!(
            "discrete-time model requires integer horizon, got {horizon}"
        )));
    }
    let x0v = space.canonicalize(x0.value);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![0.0];
    let mut states = vec![x0v];
    let mut interp = Interp::Stepwise;

    match model {
        ModelSpec::Flow { alpha } => {
            interp = Interp::FlowExact { x0: x0v, alpha: *alpha };
            let mut t = 1.0;
            while t < horizon {
                times.push(t);
                states.push(flow_state(x0v, t, *alpha)?);
                t += 1.0;
            }
            if horizon > 0.0 {
                times.push(horizon);
                states.push(flow_state(x0v, horizon, *alpha)?);
            }
        }
        ModelSpec::Ar1Binary => {
            let n = horizon as u64;
            let mut x = x0v;
            for k in 1..=n {
                x = ar1_step(x, &mut rng);
                times.push(k as f64);
                states.push(x);
            }
        }
        ModelSpec::TorusWalk => {
            let n = horizon as u64;
            let mut x = x0v;
            for k in 1..=n {
                x = torus_step(x, &space, &mut rng);
                times.push(k as f64);
                states.push(x);
            }
        }
        ModelSpec::Subordinated { base, sub } => match sub {
            SubordinatorSpec::DiscreteIid { step_law } => {
                let n = horizon as u64;
                let mut elapsed = 0.0; // base-clock time for flow bases
                let mut x = x0v;
                for k in 1..=n {
                    let jump = step_law.sample(&mut rng);
                    match base.as_ref() {
                        ModelSpec::Flow { alpha } => {
                            elapsed += jump;
                            x = flow_state(x0v, elapsed, *alpha)?;
                        }
                        ModelSpec::Ar1Binary => {
                            for _ in 0..(jump as u64) {
                                x = ar1_step(x, &mut rng);
                            }
                        }
                        ModelSpec::TorusWalk => {
                            for _ in 0..(jump as u64) {
                                x = torus_step(x, &space, &mut rng);
                            }
                        }
                        ModelSpec::Subordinated { .. } => {
                            return Err(Error::Unsupported(
                                "nested subordination is not supported".into(),
                            ))
                        }
                    }
                    times.push(k as f64);
                    states.push(x);
                }
            }
            SubordinatorSpec::PoissonProcess { lambda } => {
                // Continuous time: piecewise constant between Poisson arrivals.
                let exp = rand_distr::Exp::new(*lambda)
                    .map_err(|e| Error::Argument(format!("bad Poisson rate: {e}")))?;
                let mut clock = 0.0;
                let mut jumps: u64 = 0;
                let mut x = x0v;
                loop {
                    clock += rng.sample(exp);
                    if clock >= horizon {
                        break;
                    }
                    jumps += 1;
                    match base.as_ref() {
                        ModelSpec::Flow { alpha } => {
                            x = flow_state(x0v, jumps as f64, *alpha)?;
                        }
                        ModelSpec::Ar1Binary => x = ar1_step(x, &mut rng),
                        ModelSpec::TorusWalk => x = torus_step(x, &space, &mut rng),
                        ModelSpec::Subordinated { .. } => {
                            return Err(Error::Unsupported(
                                "nested subordination is not supported".into(),
                            ))
                        }
                    }
                    times.push(clock);
                    states.push(x);
                }
                if horizon > 0.0 {
                    times.push(horizon);
                    states.push(x);
                }
            }
            SubordinatorSpec::BernsteinDescribed { .. } => {
                return Err(Error::Unsupported(
                    "Bernstein-described subordinators support rate analysis only, not sampling"
                        .into(),
                ))
            }
        },
    }

    Ok(Trajectory {
        times,
        states,
        space,
        domain,
        interp,
        model_id: model.id(),
        seed,
    })
}

/// The additive statistic S_{t-1}: the sum of f(X_s) over s = 0..t-1 in
/// discrete time, the integral of f(X_s) over [0, t) in continuous time.
pub fn time_average_statistic(
    traj: &Trajectory,
    f: &Functional,
    t: f64,
    domain: TimeDomain,
) -> Result<f64> {
    if domain != traj.domain {
        return Err(Error::Argument(
            "time domain does not match the trajectory".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::Argument("t must be non-negative".into()));
    }
    match domain {
        TimeDomain::Discrete => {
            if t.fract() != 0.0 {
                return Err(Error::Argument("discrete statistic requires integer t".into()));
            }
            let n = t as usize;
            if n > traj.states.len() {
                return Err(Error::Argument(format!(
                    "trajectory of length {} does not cover [0, {t})",
                    traj.states.len()
                )));
            }
            Ok(traj.states[..n]
                .iter()
                .map(|&x| f.eval(x, &traj.space))
                .sum())
        }
        TimeDomain::Continuous => {
            let last = *traj.times.last().unwrap_or(&0.0);
            if t > last && t > 0.0 {
                return Err(Error::Argument(format!(
                    "trajectory covers [0, {last}], not [0, {t})"
                )));
            }
            match traj.interp {
                Interp::FlowExact { x0, alpha } => {
                    let g = |s: f64| f.eval(flow_state(x0, s, alpha).unwrap(), &traj.space);
                    Ok(numeric::adaptive_simpson(&g, 0.0, t, 1e-12))
                }
                Interp::Stepwise => {
                    let mut acc = 0.0;
                    for i in 0..traj.times.len() {
                        let start = traj.times[i];
                        if start >= t {
                            break;
                        }
                        let end = if i + 1 < traj.times.len() {
                            traj.times[i + 1].min(t)
                        } else {
                            t
                        };
                        if end > start {
                            acc += f.eval(traj.states[i], &traj.space) * (end - start);
                        }
                    }
                    Ok(acc)
                }
            }
        }
    }
}
