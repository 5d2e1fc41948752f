//! Exact L1-Wasserstein distances between finitely supported measures on an
//! interval or a circle, distances to the uniform (Lebesgue) invariant
//! measures, and a transport-LP oracle for cross-checking the fast paths.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::SpaceTag;

/// Atom locations within this distance of each other are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Largest support size accepted by the LP oracle.
pub const ORACLE_CAP: usize = 64;

/// A finitely supported probability measure on an interval or circle.
///
/// Atoms are sorted, canonicalized (circle atoms reduced to
/// `[0, circumference)`), duplicates merged by weight addition, and weights
/// normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    space: SpaceTag,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(space: SpaceTag, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Argument(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::Argument("measure needs at least one atom".into()));
        }
        let mut total = 0.0;
        for &w in &weights {
            if !(w >= 0.0) {
                return Err(Error::Argument(format!("negative weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms
            .iter()
            .zip(weights.iter())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| {
                let a = space.canonicalize(a);
                if !space.contains(a) {
                    return Err(Error::Domain(format!("atom {a} outside {space:?}")));
                }
                Ok((a, w / total))
            })
            .collect::<Result<_>>()?;
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if (a - last.0).abs() <= MERGE_TOL => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        Ok(DiscreteMeasure {
            space,
            atoms: merged.iter().map(|p| p.0).collect(),
            weights: merged.iter().map(|p| p.1).collect(),
        })
    }

    pub fn dirac(space: SpaceTag, x: f64) -> Result<Self> {
        Self::new(space, vec![x], vec![1.0])
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Expectation of `g` under the measure.
    pub fn mean_of<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.atoms
            .iter()
            .zip(self.weights.iter())
            .map(|(&a, &w)| w * g(a))
            .sum()
    }

    /// Inverse-CDF sampling.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (&a, &w) in self.atoms.iter().zip(self.weights.iter()) {
            acc += w;
            if u < acc {
                return a;
            }
        }
        *self.atoms.last().unwrap()
    }

    /// Push the measure through a map `phi` (atom images are re-canonicalized
    /// and merged).
    pub fn pushforward<F: Fn(f64) -> f64>(&self, space: SpaceTag, phi: F) -> Result<Self> {
        Self::new(
            space,
            self.atoms.iter().map(|&a| phi(a)).collect(),
            self.weights.clone(),
        )
    }

    /// Mixture sum of weighted measures on a common space.
    pub fn mixture(components: &[(f64, DiscreteMeasure)]) -> Result<Self> {
        let space = components
            .first()
            .ok_or_else(|| Error::Argument("empty mixture".into()))?
            .1
            .space;
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (w, m) in components {
            if m.space != space {
                return Err(Error::Argument("mixture components on different spaces".into()));
            }
            atoms.extend_from_slice(&m.atoms);
            weights.extend(m.weights.iter().map(|&q| q * w));
        }
        Self::new(space, atoms, weights)
    }
}

/// Normalized Lebesgue measure on its space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformMeasure {
    pub space: SpaceTag,
}

impl UniformMeasure {
    pub fn interval01() -> Self {
        UniformMeasure {
            space: SpaceTag::Interval { lo: 0.0, hi: 1.0 },
        }
    }

    pub fn circle() -> Self {
        UniformMeasure {
            space: SpaceTag::Circle {
                circumference: 2.0 * std::f64::consts::PI,
            },
        }
    }
}

fn require_matching_intervals(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    match (mu.space, nu.space) {
        (SpaceTag::Interval { .. }, SpaceTag::Interval { .. }) if mu.space == nu.space => Ok(()),
        _ => Err(Error::Argument(format!(
            "w1_line needs matching interval spaces, got {:?} and {:?}",
            mu.space, nu.space
        ))),
    }
}

/// W1 on an interval via the CDF-difference integral.
pub fn w1_line(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    require_matching_intervals(mu, nu)?;
    // Sweep the merged event list, integrating |F_mu - F_nu| between events.
    let mut events: Vec<(f64, f64, f64)> = mu
        .atoms
        .iter()
        .zip(mu.weights.iter())
        .map(|(&a, &w)| (a, w, 0.0))
        .chain(nu.atoms.iter().zip(nu.weights.iter()).map(|(&a, &w)| (a, 0.0, w)))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut dist = 0.0;
    let mut diff = 0.0f64;
    let mut prev = events[0].0;
    for (pos, wm, wn) in events {
        dist += diff.abs() * (pos - prev);
        diff += wm - wn;
        prev = pos;
    }
    Ok(dist)
}

fn require_matching_circles(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    match (mu.space, nu.space) {
        (SpaceTag::Circle { circumference: c }, SpaceTag::Circle { .. }) if mu.space == nu.space => {
            Ok(c)
        }
        _ => Err(Error::Argument(format!(
            "w1_circle needs matching circle spaces, got {:?} and {:?}",
            mu.space, nu.space
        ))),
    }
}

/// Exact W1 on the circle.
///
/// With G = F_mu - F_nu (CDFs from angle 0), the distance is
/// min over c of the integral of |G - c|; the minimizing cut level c* is a
/// weighted median of the piecewise-constant levels of G weighted by arc
/// length.
pub fn w1_circle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let c = require_matching_circles(mu, nu)?;
    let mut events: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .zip(mu.weights.iter())
        .map(|(&a, &w)| (a, w))
        .chain(nu.atoms.iter().zip(nu.weights.iter()).map(|(&a, &w)| (a, -w)))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Piecewise-constant levels of G and the arc lengths they occupy.
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(events.len() + 1);
    let first = events[0].0;
    let mut g = 0.0;
    for i in 0..events.len() {
        g += events[i].1;
        let next = if i + 1 < events.len() { events[i + 1].0 } else { first + c };
        let len = next - events[i].0;
        if len > 0.0 {
            levels.push((g, len));
        }
    }
    // The wrap-around arc through angle 0 is covered by the final segment,
    // which runs from the last event to first + c at level 0 (total-mass
    // cancellation).
    let cut = weighted_median(&mut levels.clone());
    Ok(levels.iter().map(|&(l, len)| (l - cut).abs() * len).sum())
}

/// Weighted median of (value, weight) pairs; minimizes sum w |v - c|.
fn weighted_median(pairs: &mut [(f64, f64)]) -> f64 {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(v, w) in pairs.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    pairs.last().unwrap().0
}

/// Integral of |g| over [p, q] where g is linear with endpoint values gp, gq.
fn integral_abs_linear(p: f64, q: f64, gp: f64, gq: f64) -> f64 {
    let len = q - p;
    if len <= 0.0 {
        return 0.0;
    }
    if gp * gq >= 0.0 {
        0.5 * (gp.abs() + gq.abs()) * len
    } else {
        // Sign change: split at the root.
        len * (gp * gp + gq * gq) / (2.0 * (gp.abs() + gq.abs()))
    }
}

/// Exact W1 between a discrete measure and the uniform measure on the same
/// space: piecewise-linear CDF integration on intervals, the weighted-median
/// cut on circles.
pub fn w1_vs_uniform(mu: &DiscreteMeasure, uniform: &UniformMeasure) -> Result<f64> {
    if mu.space != uniform.space {
        return Err(Error::Argument(format!(
            "measure space {:?} does not match uniform space {:?}",
            mu.space, uniform.space
        )));
    }
    match uniform.space {
        SpaceTag::Interval { lo, hi } => {
            let len = hi - lo;
            let mut dist = 0.0;
            let mut fmu = 0.0;
            let mut prev = lo;
            let funif = |u: f64| (u - lo) / len;
            for (&a, &w) in mu.atoms.iter().zip(mu.weights.iter()) {
                dist += integral_abs_linear(prev, a, fmu - funif(prev), fmu - funif(a));
                fmu += w;
                prev = a;
            }
            dist += integral_abs_linear(prev, hi, fmu - funif(prev), fmu - funif(hi));
            Ok(dist)
        }
        SpaceTag::Circle { circumference: c } => {
            // G(theta) = F_mu(theta) - theta / c: linear of slope -1/c between
            // atoms, jumping up by the weight at each atom. The optimal cut
            // level solves Leb{G > cut} = c/2.
            let n = mu.atoms.len();
            // Segments: (start, end, g_start, g_end).
            let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(n + 1);
            let mut fmu = 0.0;
            let mut prev = 0.0;
            for (&a, &w) in mu.atoms.iter().zip(mu.weights.iter()) {
                if a > prev {
                    segs.push((prev, a, fmu - prev / c, fmu - a / c));
                }
                fmu += w;
                prev = a;
            }
            if c > prev {
                segs.push((prev, c, fmu - prev / c, fmu - c / c));
            }
            let measure_above = |cut: f64| -> f64 {
                segs.iter()
                    .map(|&(s, e, gs, ge)| {
                        // g decreases linearly from gs to ge on [s, e].
                        if cut >= gs {
                            0.0
                        } else if cut <= ge {
                            e - s
                        } else {
                            (e - s) * (gs - cut) / (gs - ge)
                        }
                    })
                    .sum()
            };
            let lo_cut = segs.iter().map(|s| s.3).fold(f64::INFINITY, f64::min);
            let hi_cut = segs.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
            // measure_above is non-increasing in the cut.
            let cut = crate::numeric::bisect_increasing(
                &|cu: f64| -measure_above(cu),
                -0.5 * c,
                lo_cut,
                hi_cut,
                1e-14,
            );
            Ok(segs
                .iter()
                .map(|&(s, e, gs, ge)| integral_abs_linear(s, e, gs - cut, ge - cut))
                .sum())
        }
    }
}

/// Exact transport LP solved by successive shortest path augmentation;
/// reference oracle for `w1_line` / `w1_circle`. Capped at 64 atoms per side.
pub fn w1_oracle_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.space != nu.space {
        return Err(Error::Argument("oracle needs matching spaces".into()));
    }
    if mu.len() > ORACLE_CAP || nu.len() > ORACLE_CAP {
        return Err(Error::Argument(format!(
            "oracle cap is {ORACLE_CAP} atoms per side ({} x {} given)",
            mu.len(),
            nu.len()
        )));
    }
    let space = mu.space;
    let n = mu.len();
    let m = nu.len();
    let cost: Vec<Vec<f64>> = mu
        .atoms
        .iter()
        .map(|&a| nu.atoms.iter().map(|&b| space.distance(a, b)).collect())
        .collect();
    let mut supply: Vec<f64> = mu.weights.to_vec();
    let mut demand: Vec<f64> = nu.weights.to_vec();
    let mut flow = vec![vec![0.0f64; m]; n];
    let mut total_cost = 0.0;
    let eps = 1e-15;
    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= eps {
            break;
        }
        // Bellman-Ford over sources (with remaining supply) to sinks, allowing
        // reverse arcs j -> i where flow is positive.
        let mut dist_i = vec![f64::INFINITY; n];
        let mut dist_j = vec![f64::INFINITY; m];
        let mut pred_j: Vec<Option<usize>> = vec![None; m];
        let mut pred_i: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            if supply[i] > eps {
                dist_i[i] = 0.0;
            }
        }
        for _ in 0..(n + m) {
            let mut changed = false;
            for i in 0..n {
                if dist_i[i].is_finite() {
                    for j in 0..m {
                        let nd = dist_i[i] + cost[i][j];
                        if nd < dist_j[j] - 1e-15 {
                            dist_j[j] = nd;
                            pred_j[j] = Some(i);
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..m {
                if dist_j[j].is_finite() {
                    for i in 0..n {
                        if flow[i][j] > eps {
                            let nd = dist_j[j] - cost[i][j];
                            if nd < dist_i[i] - 1e-15 {
                                dist_i[i] = nd;
                                pred_i[i] = Some(j);
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Cheapest reachable sink with remaining demand.
        let mut best: Option<usize> = None;
        for j in 0..m {
            if demand[j] > eps && dist_j[j].is_finite() {
                if best.map_or(true, |b| dist_j[j] < dist_j[b]) {
                    best = Some(j);
                }
            }
        }
        let Some(sink) = best else {
            break; // numerical residue only
        };
        // Trace the augmenting path back and find the bottleneck.
        let mut path: Vec<(usize, usize, bool)> = Vec::new(); // (i, j, forward)
        let mut j = sink;
        loop {
            let i = pred_j[j].expect("reachable sink must have a predecessor");
            path.push((i, j, true));
            match pred_i[i] {
                None => break,
                Some(pj) => {
                    path.push((i, pj, false));
                    j = pj;
                }
            }
        }
        let source = path.last().map(|&(i, _, _)| i).unwrap();
        let mut delta = supply[source].min(demand[sink]);
        for &(i, j, forward) in &path {
            if !forward {
                delta = delta.min(flow[i][j]);
            }
        }
        if delta <= eps {
            break;
        }
        for &(i, j, forward) in &path {
            if forward {
                flow[i][j] += delta;
                total_cost += delta * cost[i][j];
            } else {
                flow[i][j] -= delta;
                total_cost -= delta * cost[i][j];
            }
        }
        supply[source] -= delta;
        demand[sink] -= delta;
    }
    Ok(total_cost)
}

/// Dispatch on the space geometry: `w1_line` on intervals, `w1_circle` on
/// circles.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    match mu.space {
        SpaceTag::Interval { .. } => w1_line(mu, nu),
        SpaceTag::Circle { .. } => w1_circle(mu, nu),
    }
}
