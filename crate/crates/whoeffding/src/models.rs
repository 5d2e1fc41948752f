//! The three example Markov models (deterministic flow, binary AR(1),
//! +/-1 random walk on the torus), their exact t-step laws, invariant
//! measures, and exact Wasserstein decay quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Functional, SpaceTag, State, TimeDomain};
use crate::measures::{w1, w1_vs_uniform, DiscreteMeasure, UniformMeasure};
use crate::numeric;
use crate::subordination::{subordinator_law, SubordinatorSpec};

/// Largest t for which the AR(1) exact law (2^t atoms) is materialized.
pub const AR1_LAW_CAP: u32 = 24;

/// Largest t for which the torus exact law (t+1 atoms) is materialized.
pub const TORUS_LAW_CAP: u32 = 30;

/// One of the example Markov models, or a subordinated wrapper around one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// dX_t = -sign(X_t)|X_t|^alpha dt on [-1, 1], alpha in [1, 2).
    Flow { alpha: f64 },
    /// X_{t+1} = X_t / 2 + xi, xi uniform on {0, 1/2}, on [0, 1].
    Ar1Binary,
    /// Y_{t+1} = Y_t +/- 1 (mod 2 pi), arc-length metric.
    TorusWalk,
    /// The base model run on the random clock of `sub`.
    Subordinated {
        base: Box<ModelSpec>,
        sub: SubordinatorSpec,
    },
}

impl ModelSpec {
    pub fn space(&self) -> SpaceTag {
        match self {
            ModelSpec::Flow { .. } => SpaceTag::Interval { lo: -1.0, hi: 1.0 },
            ModelSpec::Ar1Binary => SpaceTag::Interval { lo: 0.0, hi: 1.0 },
            ModelSpec::TorusWalk => SpaceTag::Circle {
                circumference: 2.0 * std::f64::consts::PI,
            },
            ModelSpec::Subordinated { base, .. } => base.space(),
        }
    }

    pub fn time_domain(&self) -> TimeDomain {
        match self {
            ModelSpec::Flow { .. } => TimeDomain::Continuous,
            ModelSpec::Ar1Binary | ModelSpec::TorusWalk => TimeDomain::Discrete,
            ModelSpec::Subordinated { sub, .. } => match sub {
                // The subordinated chain is indexed by the clock of the
                // subordinator, not of the base.
                SubordinatorSpec::DiscreteIid { .. } => TimeDomain::Discrete,
                SubordinatorSpec::PoissonProcess { .. } => TimeDomain::Continuous,
                SubordinatorSpec::BernsteinDescribed { .. } => TimeDomain::Continuous,
            },
        }
    }

    pub fn id(&self) -> String {
        match self {
            ModelSpec::Flow { alpha } => format!("flow(alpha={alpha})"),
            ModelSpec::Ar1Binary => "ar1".into(),
            ModelSpec::TorusWalk => "torus".into(),
            ModelSpec::Subordinated { base, sub } => format!("{}+{}", base.id(), sub.id()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Flow { alpha } => {
                if !(*alpha >= 1.0 && *alpha < 2.0) {
                    return Err(Error::Argument(format!(
                        "flow exponent must lie in [1, 2), got {alpha}"
                    )));
                }
            }
            ModelSpec::Ar1Binary | ModelSpec::TorusWalk => {}
            ModelSpec::Subordinated { base, sub } => {
                if matches!(base.as_ref(), ModelSpec::Subordinated { .. }) {
                    return Err(Error::Unsupported(
                        "nested subordination is not supported".into(),
                    ));
                }
                base.validate()?;
                sub.validate()?;
                if base.time_domain() == TimeDomain::Discrete {
                    // A discrete-time base can only be run on an
                    // integer-valued clock.
                    match sub {
                        SubordinatorSpec::DiscreteIid { .. }
                        | SubordinatorSpec::PoissonProcess { .. } => {}
                        SubordinatorSpec::BernsteinDescribed { .. } => {
                            return Err(Error::Unsupported(
                                "Bernstein-described subordinators support rate analysis only"
                                    .into(),
                            ))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn invariant_measure(&self) -> InvariantMeasure {
        match self {
            ModelSpec::Flow { .. } => InvariantMeasure::DiracAtZero,
            ModelSpec::Ar1Binary => InvariantMeasure::UniformInterval01,
            ModelSpec::TorusWalk => InvariantMeasure::UniformCircle,
            // The base invariant measure is also invariant for the
            // subordinate process.
            ModelSpec::Subordinated { base, .. } => base.invariant_measure(),
        }
    }
}

/// Descriptor of a model's invariant probability measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantMeasure {
    DiracAtZero,
    UniformInterval01,
    UniformCircle,
}

impl InvariantMeasure {
    pub fn space(&self) -> SpaceTag {
        match self {
            InvariantMeasure::DiracAtZero => SpaceTag::Interval { lo: -1.0, hi: 1.0 },
            InvariantMeasure::UniformInterval01 => SpaceTag::Interval { lo: 0.0, hi: 1.0 },
            InvariantMeasure::UniformCircle => SpaceTag::Circle {
                circumference: 2.0 * std::f64::consts::PI,
            },
        }
    }

    /// pi(f): closed form where available, adaptive quadrature (absolute
    /// tolerance 1e-10) otherwise.
    pub fn mean_of(&self, f: &Functional) -> f64 {
        let space = self.space();
        match self {
            InvariantMeasure::DiracAtZero => f.eval(0.0, &space),
            InvariantMeasure::UniformInterval01 => match f {
                Functional::Identity => 0.5,
                Functional::Constant(c) => *c,
                _ => numeric::adaptive_simpson(&|x| f.eval(x, &space), 0.0, 1.0, 1e-10),
            },
            InvariantMeasure::UniformCircle => match f {
                Functional::Constant(c) => *c,
                Functional::CosineCircle => 0.0,
                _ => {
                    let c = 2.0 * std::f64::consts::PI;
                    numeric::adaptive_simpson(&|x| f.eval(x, &space), 0.0, c, 1e-10) / c
                }
            },
        }
    }
}

/// Closed-form state of the deterministic flow at time `t` started from `x`.
pub fn flow_state(x: f64, t: f64, alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0 && alpha < 2.0) {
        return Err(Error::Argument(format!(
            "flow exponent must lie in [1, 2), got {alpha}"
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("flow state {x} outside [-1, 1]")));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Argument(format!("time must be >= 0, got {t}")));
    }
    if alpha == 1.0 {
        Ok(x * (-t).exp())
    } else {
        let a = alpha - 1.0;
        Ok(x / (a * x.abs().powf(a) * t + 1.0).powf(1.0 / a))
    }
}

/// Exact t-step law of the binary AR(1) chain: uniform on the 2^t points
/// (x + j) / 2^t, j = 0 .. 2^t - 1.
pub fn ar1_t_step_law(x: f64, t: u32) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("ar1 state {x} outside [0, 1]")));
    }
    if t > AR1_LAW_CAP {
        return Err(Error::Argument(format!(
            "exact ar1 law capped at t = {AR1_LAW_CAP} (2^t atoms); use sampling for t = {t}"
        )));
    }
    let n = 1u64 << t;
    let scale = 1.0 / n as f64;
    let atoms: Vec<f64> = (0..n).map(|j| (x + j as f64) * scale).collect();
    DiscreteMeasure::new(
        SpaceTag::Interval { lo: 0.0, hi: 1.0 },
        atoms,
        vec![scale; n as usize],
    )
}

/// Exact t-step law of the torus walk: binomial weights on the t+1 points
/// x + (2k - t) mod 2 pi.
pub fn torus_t_step_law(x: f64, t: u32) -> Result<DiscreteMeasure> {
    if t > TORUS_LAW_CAP {
        return Err(Error::Argument(format!(
            "exact torus law capped at t = {TORUS_LAW_CAP}; use sampling for t = {t}"
        )));
    }
    let space = SpaceTag::Circle {
        circumference: 2.0 * std::f64::consts::PI,
    };
    let ln2 = std::f64::consts::LN_2;
    let atoms: Vec<f64> = (0..=t).map(|k| x + (2.0 * k as f64 - t as f64)).collect();
    let weights: Vec<f64> = (0..=t)
        .map(|k| (numeric::ln_choose(t as u64, k as u64) - t as f64 * ln2).exp())
        .collect();
    DiscreteMeasure::new(space, atoms, weights)
}

/// Exact law of the model at time `t` started from `x`, where atom counts
/// permit. Subordinated models mix the base laws over the subordinator law.
pub fn t_step_law(model: &ModelSpec, x: State, t: f64) -> Result<DiscreteMeasure> {
    model.validate()?;
    if x.space != model.space() {
        return Err(Error::Domain(format!(
            "state space {:?} does not match model space {:?}",
            x.space,
            model.space()
        )));
    }
    if model.time_domain() == TimeDomain::Discrete && t.fract() != 0.0 {
        return Err(Error::Argument(format!(
            "discrete-time model requires integer t, got {t}"
        )));
    }
    match model {
        ModelSpec::Flow { alpha } => {
            DiscreteMeasure::dirac(model.space(), flow_state(x.value, t, *alpha)?)
        }
        ModelSpec::Ar1Binary => ar1_t_step_law(x.value, t as u32),
        ModelSpec::TorusWalk => torus_t_step_law(x.value, t as u32),
        ModelSpec::Subordinated { base, sub } => {
            let clock = subordinator_law(sub, t)?;
            let components: Vec<(f64, DiscreteMeasure)> = clock
                .atoms()
                .iter()
                .zip(clock.weights().iter())
                .map(|(&s, &w)| Ok((w, t_step_law(base, x, s)?)))
                .collect::<Result<_>>()?;
            DiscreteMeasure::mixture(&components)
        }
    }
}

/// One-step transition law P(x, .) of a discrete-time model.
pub fn one_step_law(model: &ModelSpec, x: State) -> Result<DiscreteMeasure> {
    if model.time_domain() != TimeDomain::Discrete {
        return Err(Error::Unsupported(format!(
            "one-step law needs a discrete-time model, {} is continuous",
            model.id()
        )));
    }
    t_step_law(model, x, 1.0)
}

/// Exact W1 distance between the t-step law started at `x` and the model's
/// invariant measure.
pub fn exact_w_to_invariant(model: &ModelSpec, x: State, t: f64) -> Result<f64> {
    let law = t_step_law(model, x, t)?;
    match model.invariant_measure() {
        InvariantMeasure::DiracAtZero => Ok(law.mean_of(f64::abs)),
        InvariantMeasure::UniformInterval01 => w1_vs_uniform(&law, &UniformMeasure::interval01()),
        InvariantMeasure::UniformCircle => w1_vs_uniform(&law, &UniformMeasure::circle()),
    }
}

/// Exact W1 between the one-step laws from `x` and `y`.
pub fn one_step_contraction(model: &ModelSpec, x: State, y: State) -> Result<f64> {
    w1(&one_step_law(model, x)?, &one_step_law(model, y)?)
}

/// Exact W1 between the t-step laws from `x` and `y` (discrete-time models
/// within the exact-law caps).
pub fn t_step_contraction(model: &ModelSpec, x: State, y: State, t: f64) -> Result<f64> {
    w1(&t_step_law(model, x, t)?, &t_step_law(model, y, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::w1_oracle_lp;
    use std::f64::consts::PI;

    fn ar1_state(x: f64) -> State {
        State::new(x, ModelSpec::Ar1Binary.space()).unwrap()
    }

    fn torus_state(x: f64) -> State {
        State::new(x, ModelSpec::TorusWalk.space()).unwrap()
    }

    #[test]
    fn flow_state_closed_forms() {
        assert_eq!(flow_state(1.0, 0.0, 1.3).unwrap(), 1.0);
        assert!((flow_state(1.0, 1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((flow_state(1.0, 2.0, 1.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(flow_state(1.0, 1.0, 2.0).is_err());
        assert!(flow_state(1.0, 1.0, 0.9).is_err());
        assert!(flow_state(1.5, 1.0, 1.0).is_err());
        assert!(flow_state(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn flow_state_sign_and_contraction() {
        for &alpha in &[1.0, 1.2, 1.5, 1.9] {
            for &x in &[-1.0, -0.3, 0.0, 0.4, 1.0] {
                for &t in &[0.1, 1.0, 7.5] {
                    let y = flow_state(x, t, alpha).unwrap();
                    assert!(y.abs() <= x.abs() + 1e-15);
                    assert!(y * x >= 0.0);
                }
            }
        }
        assert_eq!(flow_state(0.0, 3.0, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn flow_state_matches_runge_kutta() {
        // Fine RK4 on dx/dt = -sign(x)|x|^alpha.
        let alpha = 1.5;
        let rhs = |x: f64| -x.signum() * x.abs().powf(alpha);
        let mut x = 1.0;
        let h = 1e-4;
        let steps = 20_000;
        for _ in 0..steps {
            let k1 = rhs(x);
            let k2 = rhs(x + 0.5 * h * k1);
            let k3 = rhs(x + 0.5 * h * k2);
            let k4 = rhs(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let exact = flow_state(1.0, h * steps as f64, alpha).unwrap();
        assert!((x - exact).abs() < 1e-10, "rk4 {x} vs closed form {exact}");
    }

    #[test]
    fn ar1_law_small_cases() {
        let l0 = ar1_t_step_law(0.3, 0).unwrap();
        assert_eq!(l0.atoms(), &[0.3]);

        let l1 = ar1_t_step_law(0.0, 1).unwrap();
        assert_eq!(l1.atoms(), &[0.0, 0.5]);
        assert_eq!(l1.weights(), &[0.5, 0.5]);

        let l2 = ar1_t_step_law(1.0, 2).unwrap();
        assert_eq!(l2.atoms(), &[0.25, 0.5, 0.75, 1.0]);
        for &w in l2.weights() {
            assert!((w - 0.25).abs() < 1e-15);
        }

        assert!(ar1_t_step_law(0.0, AR1_LAW_CAP + 1).is_err());
        assert!(ar1_t_step_law(1.5, 1).is_err());
    }

    #[test]
    fn torus_law_small_cases() {
        let space = ModelSpec::TorusWalk.space();
        let l0 = torus_t_step_law(1.2, 0).unwrap();
        assert_eq!(l0.atoms(), &[1.2]);

        let l1 = torus_t_step_law(0.0, 1).unwrap();
        assert_eq!(l1.len(), 2);
        assert!(l1.atoms().iter().any(|&a| space.distance(a, 1.0) < 1e-12));
        assert!(l1.atoms().iter().any(|&a| space.distance(a, -1.0) < 1e-12));
        assert_eq!(l1.weights(), &[0.5, 0.5]);

        let l2 = torus_t_step_law(0.0, 2).unwrap();
        assert_eq!(l2.len(), 3);
        let w_at = |p: f64| -> f64 {
            l2.atoms()
                .iter()
                .zip(l2.weights())
                .find(|(&a, _)| space.distance(a, p) < 1e-12)
                .map(|(_, &w)| w)
                .unwrap()
        };
        assert!((w_at(0.0) - 0.5).abs() < 1e-15);
        assert!((w_at(2.0) - 0.25).abs() < 1e-15);
        assert!((w_at(-2.0) - 0.25).abs() < 1e-15);

        assert!(torus_t_step_law(0.0, TORUS_LAW_CAP + 1).is_err());
    }

    #[test]
    fn distance_to_invariant_examples() {
        let flow = ModelSpec::Flow { alpha: 1.0 };
        let x1 = State::new(1.0, flow.space()).unwrap();
        let d = exact_w_to_invariant(&flow, x1, 1.0).unwrap();
        assert!((d - (-1.0f64).exp()).abs() < 1e-15);

        let d = exact_w_to_invariant(&ModelSpec::Ar1Binary, ar1_state(0.0), 1.0).unwrap();
        assert!((d - 0.25).abs() < 1e-12);

        let d = exact_w_to_invariant(&ModelSpec::TorusWalk, torus_state(0.0), 0.0).unwrap();
        assert!((d - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn ar1_contraction_is_exactly_geometric() {
        let m = ModelSpec::Ar1Binary;
        let d = one_step_contraction(&m, ar1_state(0.0), ar1_state(1.0)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert_eq!(
            one_step_contraction(&m, ar1_state(0.3), ar1_state(0.3)).unwrap(),
            0.0
        );
        for t in 0..=10 {
            for &(x, y) in &[(0.0, 1.0), (0.125, 0.875), (0.2, 0.7)] {
                let w = t_step_contraction(&m, ar1_state(x), ar1_state(y), t as f64).unwrap();
                let expect = (y - x).abs() / (1u64 << t) as f64;
                assert!((w - expect).abs() < 1e-9, "t={t} got {w} want {expect}");
            }
        }
    }

    #[test]
    fn torus_one_step_laws_are_rotations_of_each_other() {
        // The one-step laws from x and y are rotations by x - y of one
        // another, so for small separations the exact distance equals
        // d(x, y), not d(x, y) / 2.
        let m = ModelSpec::TorusWalk;
        let d = one_step_contraction(&m, torus_state(0.0), torus_state(0.2)).unwrap();
        assert!((d - 0.2).abs() < 1e-12, "got {d}");
        let oracle = w1_oracle_lp(
            &one_step_law(&m, torus_state(0.0)).unwrap(),
            &one_step_law(&m, torus_state(0.2)).unwrap(),
        )
        .unwrap();
        assert!((d - oracle).abs() < 1e-9);
        // Multi-step laws keep the full separation too while no wrap-around
        // interference occurs.
        for t in 1..=6 {
            let w = t_step_contraction(&m, torus_state(0.0), torus_state(0.2), t as f64).unwrap();
            assert!((w - 0.2).abs() < 1e-9, "t={t} got {w}");
        }
    }

    #[test]
    fn monotone_decay_to_invariant() {
        let mut prev = f64::INFINITY;
        for t in 0..=20 {
            let d = exact_w_to_invariant(&ModelSpec::Ar1Binary, ar1_state(0.0), t as f64).unwrap();
            assert!(d <= prev + 1e-12, "ar1 distance rose at t={t}");
            prev = d;
        }
        let mut prev = f64::INFINITY;
        for t in 0..=20 {
            let d = exact_w_to_invariant(&ModelSpec::TorusWalk, torus_state(0.0), t as f64).unwrap();
            assert!(d <= prev + 1e-12, "torus distance rose at t={t}");
            prev = d;
        }
        let mut prev = f64::INFINITY;
        let flow = ModelSpec::Flow { alpha: 1.5 };
        let x1 = State::new(1.0, flow.space()).unwrap();
        for t in 0..=20 {
            let d = exact_w_to_invariant(&flow, x1, t as f64).unwrap();
            assert!(d <= prev + 1e-15);
            prev = d;
        }
    }

    #[test]
    fn ar1_atoms_stay_dyadic() {
        // Started from a dyadic rational, every exact t-step atom is a
        // dyadic rational: mass never reaches the irrationals.
        for &x in &[0.0, 0.5, 0.75, 1.0] {
            for t in 0..=6u32 {
                let law = ar1_t_step_law(x, t).unwrap();
                for &a in law.atoms() {
                    let scaled = a * (1u64 << (t + 2)) as f64;
                    assert!(
                        (scaled - scaled.round()).abs() < 1e-9,
                        "non-dyadic atom {a} at t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn ar1_invariance_pushes_grids_to_finer_grids() {
        // One step maps the centered N-grid uniform law to the centered
        // 2N-grid uniform law, whose distance to Lebesgue halves: 1/(8N).
        let n = 64;
        let space = ModelSpec::Ar1Binary.space();
        let atoms: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
        let mu = DiscreteMeasure::new(space, atoms, vec![1.0 / n as f64; n]).unwrap();
        let half = mu.pushforward(space, |a| 0.5 * a).unwrap();
        let shifted = mu.pushforward(space, |a| 0.5 * a + 0.5).unwrap();
        let pushed = DiscreteMeasure::mixture(&[(0.5, half), (0.5, shifted)]).unwrap();
        let d = w1_vs_uniform(&pushed, &UniformMeasure::interval01()).unwrap();
        assert!((d - 1.0 / (8.0 * n as f64)).abs() < 1e-12);
    }

    #[test]
    fn flow_invariant_point_is_fixed() {
        for &alpha in &[1.0, 1.5] {
            for &t in &[0.0, 1.0, 100.0] {
                assert_eq!(flow_state(0.0, t, alpha).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn validate_rejects_bad_specs() {
        assert!(ModelSpec::Flow { alpha: 0.5 }.validate().is_err());
        assert!(ModelSpec::Flow { alpha: 1.99 }.validate().is_ok());
        let nested = ModelSpec::Subordinated {
            base: Box::new(ModelSpec::Subordinated {
                base: Box::new(ModelSpec::Ar1Binary),
                sub: SubordinatorSpec::PoissonProcess { lambda: 1.0 },
            }),
            sub: SubordinatorSpec::PoissonProcess { lambda: 1.0 },
        };
        assert!(nested.validate().is_err());
    }

    #[test]
    fn discrete_models_reject_fractional_times() {
        assert!(t_step_law(&ModelSpec::Ar1Binary, ar1_state(0.0), 1.5).is_err());
        assert!(one_step_law(&ModelSpec::Flow { alpha: 1.0 }, {
            let m = ModelSpec::Flow { alpha: 1.0 };
            State::new(0.5, m.space()).unwrap()
        })
        .is_err());
    }
}
