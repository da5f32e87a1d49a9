//! Six-compartment stochastic epidemic simulator.
//!
//! The population is split into susceptible (S), undocumented infected (I),
//! active confirmed (A), confirmed recovered (R), confirmed deaths (D) and
//! unconfirmed removed (Ru). One step covers one day: expected flows come
//! from the hazard function, realized flows are floored Gaussian draws
//! clamped at zero and capped so no compartment goes negative.
//!
//! Counts are stored as f64 constrained to integer values, so the
//! conservation identity S+I+A+R+D+Ru = P holds exactly day by day.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// The eight-dimensional parameter vector of the epidemic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Base infection rate (1/day).
    pub alpha0: f64,
    /// Infection-rate coefficient (1/day).
    pub alpha: f64,
    /// Infection-rate exponent (dimensionless).
    pub n: f64,
    /// Recovery rate (1/day).
    pub beta: f64,
    /// Positive-test rate (1/day).
    pub gamma: f64,
    /// Fatality rate (1/day).
    pub delta: f64,
    /// Testing-protocol effectiveness (dimensionless).
    pub eta: f64,
    /// Initial unobserved-infected fraction (dimensionless).
    pub kappa: f64,
}

/// Canonical parameter names, in vector order.
pub const PARAM_NAMES: [&str; 8] = [
    "alpha0", "alpha", "n", "beta", "gamma", "delta", "eta", "kappa",
];

impl ModelParams {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.alpha0,
            self.alpha,
            self.n,
            self.beta,
            self.gamma,
            self.delta,
            self.eta,
            self.kappa,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            alpha0: v[0],
            alpha: v[1],
            n: v[2],
            beta: v[3],
            gamma: v[4],
            delta: v[5],
            eta: v[6],
            kappa: v[7],
        }
    }

    /// All-zero rates; useful as the fixpoint case in tests.
    pub fn zeros() -> Self {
        Self::from_array([0.0; 8])
    }
}

/// Sub-population counts at one day, person units, integer-valued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
    pub a: f64,
    pub r: f64,
    pub d: f64,
    pub ru: f64,
}

impl EpidemicState {
    pub fn total(&self) -> f64 {
        self.s + self.i + self.a + self.r + self.d + self.ru
    }
}

/// Expected daily flows, fixed order:
/// `(s_to_i, i_to_a, a_to_r, a_to_d, i_to_ru)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardVector(pub [f64; 5]);

/// Spread of the Gaussian approximation used for daily transition draws.
///
/// `VarianceSqrtH` uses variance sqrt(h), i.e. std = h^(1/4); `VarianceH`
/// is the conventional Poisson-matching variance h. The first is the
/// default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianSpread {
    #[default]
    VarianceSqrtH,
    VarianceH,
}

impl GaussianSpread {
    #[inline]
    fn std_dev(self, h: f64) -> f64 {
        match self {
            GaussianSpread::VarianceSqrtH => h.sqrt().sqrt(),
            GaussianSpread::VarianceH => h.sqrt(),
        }
    }
}

/// A simulated state sequence; day 0 is the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<EpidemicState>,
}

impl Trajectory {
    pub fn days(&self) -> usize {
        self.states.len()
    }

    /// Observable projection as a flat `[3 * days]` array, laid out as
    /// all A values, then all R, then all D.
    pub fn observed_flat(&self) -> Vec<f64> {
        let days = self.days();
        let mut out = vec![0.0; 3 * days];
        for (t, st) in self.states.iter().enumerate() {
            out[t] = st.a;
            out[days + t] = st.r;
            out[2 * days + t] = st.d;
        }
        out
    }

    /// Observable projection as per-observable rows `[A, R, D]`.
    pub fn observed_view(&self) -> [Vec<f64>; 3] {
        [
            self.states.iter().map(|s| s.a).collect(),
            self.states.iter().map(|s| s.r).collect(),
            self.states.iter().map(|s| s.d).collect(),
        ]
    }
}

/// Build the day-0 state from observed (A0, R0, D0) counts.
///
/// Ru starts at 0, I at floor(kappa * A0), and S takes the remainder so
/// the conservation identity holds by construction.
pub fn init_state(
    obs_day0: (f64, f64, f64),
    kappa: f64,
    population: f64,
) -> Result<EpidemicState> {
    let (a0, r0, d0) = obs_day0;
    let i0 = (kappa * a0).floor();
    let s = population - (a0 + r0 + d0 + i0);
    if s <= 0.0 {
        return Err(Error::NonPositiveSusceptible { s });
    }
    Ok(EpidemicState {
        s,
        i: i0,
        a: a0,
        r: r0,
        d: d0,
        ru: 0.0,
    })
}

/// Total infection rate g = alpha0 + alpha / (1 + (A+R+D)^n).
///
/// `powf` already gives 0^0 = 1 and 0^n = 0 for n > 0, which keeps g
/// total on the prior support.
#[inline]
pub fn infection_rate(params: &ModelParams, a: f64, r: f64, d: f64) -> f64 {
    params.alpha0 + params.alpha / (1.0 + (a + r + d).powf(params.n))
}

/// Expected daily flows given the current state.
#[inline]
pub fn hazard(params: &ModelParams, state: &EpidemicState, population: f64) -> HazardVector {
    let g = infection_rate(params, state.a, state.r, state.d);
    HazardVector([
        g * state.s * state.i / population,
        params.gamma * state.i,
        params.beta * state.a,
        params.delta * state.a,
        params.beta * params.eta * state.i,
    ])
}

/// Floored Gaussian transition draw, *without* the clamp at zero.
///
/// Exposed so the distribution of the raw draw can be checked; everything
/// in the simulator goes through [`sample_transitions`], which clamps.
#[inline]
pub fn floored_gaussian_count(h: f64, spread: GaussianSpread, rng: &mut SimRng) -> f64 {
    if h <= 0.0 {
        // Degenerate Normal(0, 0); consumes no randomness.
        return 0.0;
    }
    (h + spread.std_dev(h) * rng.next_normal()).floor()
}

/// Integer transition counts for one day: floor of Normal(h, spread),
/// clamped at zero.
#[inline]
pub fn sample_transitions(
    h: &HazardVector,
    spread: GaussianSpread,
    rng: &mut SimRng,
) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (c, &hi) in out.iter_mut().zip(h.0.iter()) {
        *c = floored_gaussian_count(hi, spread, rng).max(0.0);
    }
    out
}

/// Advance the state by one day.
///
/// Flows are applied in hazard order (S->I, I->A, A->R, A->D, I->Ru),
/// each capped at the current source compartment, so no count goes
/// negative and the population total is preserved exactly.
pub fn step(
    state: &EpidemicState,
    params: &ModelParams,
    population: f64,
    spread: GaussianSpread,
    rng: &mut SimRng,
) -> EpidemicState {
    let h = hazard(params, state, population);
    let c = sample_transitions(&h, spread, rng);
    apply_transitions(state, &c)
}

/// Apply already-sampled transition counts with source caps.
pub fn apply_transitions(state: &EpidemicState, counts: &[f64; 5]) -> EpidemicState {
    let mut st = *state;
    let f0 = counts[0].min(st.s);
    st.s -= f0;
    st.i += f0;
    let f1 = counts[1].min(st.i);
    st.i -= f1;
    st.a += f1;
    let f2 = counts[2].min(st.a);
    st.a -= f2;
    st.r += f2;
    let f3 = counts[3].min(st.a);
    st.a -= f3;
    st.d += f3;
    let f4 = counts[4].min(st.i);
    st.i -= f4;
    st.ru += f4;
    st
}

/// Simulate `days` days; the returned trajectory starts with `init`.
pub fn simulate(
    params: &ModelParams,
    init: &EpidemicState,
    days: usize,
    population: f64,
    spread: GaussianSpread,
    rng: &mut SimRng,
) -> Trajectory {
    assert!(days >= 1, "days must be >= 1");
    let mut states = Vec::with_capacity(days);
    states.push(*init);
    let mut current = *init;
    for _ in 1..days {
        current = step(&current, params, population, spread, rng);
        states.push(current);
    }
    Trajectory { states }
}

/// Simulate one sample and accumulate the squared Euclidean distance of
/// its observables against `obs_flat` (layout as [`Trajectory::observed_flat`])
/// without materializing the trajectory. Returns the distance.
pub fn simulate_distance(
    params: &ModelParams,
    init: &EpidemicState,
    days: usize,
    population: f64,
    spread: GaussianSpread,
    rng: &mut SimRng,
    obs_flat: &[f64],
) -> f64 {
    debug_assert_eq!(obs_flat.len(), 3 * days);
    let mut current = *init;
    let mut sq = 0.0;
    for t in 0..days {
        if t > 0 {
            current = step(&current, params, population, spread, rng);
        }
        let da = current.a - obs_flat[t];
        let dr = current.r - obs_flat[days + t];
        let dd = current.d - obs_flat[2 * days + t];
        sq += da * da + dr * dr + dd * dd;
    }
    sq.sqrt()
}

/// Simulate a batch of parameter vectors; row `b` uses the substream for
/// flattened index `base_index + b`, so output is invariant to how the
/// batch is partitioned.
pub fn simulate_batch(
    params_batch: &[ModelParams],
    init: &EpidemicState,
    days: usize,
    population: f64,
    spread: GaussianSpread,
    seed: u64,
    base_index: u64,
) -> Vec<Vec<f64>> {
    params_batch
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let mut rng = SimRng::substream(seed, crate::rng::DOMAIN_INFER, base_index + b as u64);
            simulate(p, init, days, population, spread, &mut rng).observed_flat()
        })
        .collect()
}
