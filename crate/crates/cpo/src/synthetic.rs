//! GARCH-with-jumps return generator with user-specified break times.
//!
//! Conditional mean: AR(1) plus a jump at each specified break time, the
//! jump being a Bernoulli direction times a gamma magnitude. Conditional
//! variance follows a GJR-GARCH(1,1): a short-term squared-innovation term,
//! a persistence term, and a leverage term active after negative
//! innovations:
//!
//! ```text
//! x_t     = phi * x_{t-1} + J_t * 1[t in breaks] + e_t
//! e_t     = sigma_t * eps_t,   eps_t ~ Student-t(nu) / sqrt(nu / (nu - 2))
//! sigma_t^2 = omega + alpha * e_{t-1}^2 + beta * sigma_{t-1}^2
//!             + gamma * e_{t-1}^2 * 1[e_{t-1} < 0]
//! ```
//!
//! Innovations are standardized to unit variance so `omega` keeps its
//! variance interpretation. Jumps draw from a dedicated random stream, so a
//! spec with no break times produces the exact same innovation path as one
//! with them.

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StudentT};
use serde::{Deserialize, Serialize};

use crate::changepoint::BreakSet;
use crate::ingest::ReturnSeries;
use crate::par;
use crate::{Error, Result};

/// Simulation parameters. `alpha + beta + gamma/2 < 1` keeps the variance
/// stationary; `student_dof > 2` is required for standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub length: usize,
    #[serde(default)]
    pub break_times: Vec<usize>,
    pub ar_coeff: f64,
    /// Probability that a jump is upward.
    pub jump_prob_direction: f64,
    pub jump_shape: f64,
    /// Gamma scale of the jump magnitude; zero disables jumps.
    pub jump_scale: f64,
    pub garch_omega: f64,
    pub garch_alpha: f64,
    pub garch_beta: f64,
    pub leverage_gamma: f64,
    pub student_dof: f64,
    pub seed: u64,
}

impl SimSpec {
    // Negated comparisons are deliberate: they also reject NaN parameters.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.length < 2 {
            return bad(format!("length must be at least 2, got {}", self.length));
        }
        for pair in self.break_times.windows(2) {
            if pair[1] <= pair[0] {
                return bad(format!("break times not increasing at {}", pair[1]));
            }
        }
        if let (Some(&first), Some(&last)) = (self.break_times.first(), self.break_times.last()) {
            if first < 1 || last > self.length - 1 {
                return bad(format!("break times outside [1, {}]", self.length - 1));
            }
        }
        if !(self.ar_coeff.abs() < 1.0) {
            return bad(format!("|ar_coeff| must be < 1, got {}", self.ar_coeff));
        }
        if !(0.0..=1.0).contains(&self.jump_prob_direction) {
            return bad(format!("jump_prob_direction outside [0,1]: {}", self.jump_prob_direction));
        }
        if !(self.jump_shape > 0.0) || self.jump_scale < 0.0 {
            return bad("jump_shape must be positive and jump_scale non-negative".into());
        }
        if !(self.garch_omega > 0.0) {
            return bad(format!("garch_omega must be positive, got {}", self.garch_omega));
        }
        if self.garch_alpha < 0.0 || self.garch_beta < 0.0 || self.leverage_gamma < 0.0 {
            return bad("garch_alpha, garch_beta, leverage_gamma must be non-negative".into());
        }
        if self.garch_alpha + self.garch_beta + self.leverage_gamma / 2.0 >= 1.0 {
            return bad("alpha + beta + gamma/2 must be < 1".into());
        }
        if !(self.student_dof > 2.0) {
            return bad(format!("student_dof must exceed 2, got {}", self.student_dof));
        }
        Ok(())
    }

    /// Unconditional innovation variance `omega / (1 - alpha - beta - gamma/2)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.garch_omega / (1.0 - self.garch_alpha - self.garch_beta - self.leverage_gamma / 2.0)
    }
}

impl Default for SimSpec {
    fn default() -> Self {
        let omega = 1e-4f64;
        Self {
            length: 1000,
            break_times: Vec::new(),
            ar_coeff: 0.8,
            jump_prob_direction: 0.5,
            jump_shape: 2.0,
            jump_scale: 5.0 * omega.sqrt(),
            garch_omega: omega,
            garch_alpha: 0.08,
            garch_beta: 0.85,
            leverage_gamma: 0.1,
            student_dof: 8.0,
            seed: 0,
        }
    }
}

/// Simulated series with its ground-truth break set and variance path.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub returns: ReturnSeries,
    pub true_breaks: BreakSet,
    pub sigma2: Vec<f64>,
}

fn sim_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}

fn simulate_streams(spec: &SimSpec, asset_id: &str, stream_base: u64) -> Result<SimOutput> {
    spec.validate()?;
    let n = spec.length;
    let nu = spec.student_dof;
    let standardize = (nu / (nu - 2.0)).sqrt();
    let student = StudentT::new(nu).expect("validated dof");

    let mut innovation_rng = ChaCha12Rng::seed_from_u64(spec.seed);
    innovation_rng.set_stream(stream_base);
    let mut jump_rng = ChaCha12Rng::seed_from_u64(spec.seed);
    jump_rng.set_stream(stream_base + 1);

    let jump_dist = (spec.jump_scale > 0.0)
        .then(|| Gamma::new(spec.jump_shape, spec.jump_scale).expect("validated jump params"));

    let mut values = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut prev_x = 0.0;
    let mut prev_e = 0.0;
    let mut prev_s2 = spec.unconditional_variance();
    let mut break_iter = spec.break_times.iter().copied().peekable();

    for t in 0..n {
        let s2 = if t == 0 {
            prev_s2
        } else {
            spec.garch_omega
                + spec.garch_alpha * prev_e * prev_e
                + spec.garch_beta * prev_s2
                + if prev_e < 0.0 { spec.leverage_gamma * prev_e * prev_e } else { 0.0 }
        };
        let eps: f64 = student.sample(&mut innovation_rng) / standardize;
        let e = s2.sqrt() * eps;

        let mut mu = spec.ar_coeff * prev_x;
        if break_iter.peek() == Some(&t) {
            break_iter.next();
            let up = jump_rng.random::<f64>() < spec.jump_prob_direction;
            let magnitude = jump_dist.as_ref().map_or(0.0, |g| g.sample(&mut jump_rng));
            mu += if up { magnitude } else { -magnitude };
        }

        let x = mu + e;
        values.push(x);
        sigma2.push(s2);
        prev_x = x;
        prev_e = e;
        prev_s2 = s2;
    }

    let returns = ReturnSeries::new(asset_id, sim_dates(n), values)?;
    let true_breaks = BreakSet::new(asset_id, spec.break_times.clone(), n)?;
    Ok(SimOutput { returns, true_breaks, sigma2 })
}

/// Simulates one series. Deterministic given the spec (seed included).
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    simulate_streams(spec, "sim", 0)
}

/// Simulates a collection of assets whose break sets are the union of one
/// shared set and a per-asset idiosyncratic set. Innovation streams are
/// independent across assets; dependence enters only through the shared
/// break times.
pub fn simulate_cluster(
    shared_breaks: &[usize],
    idiosyncratic: &[Vec<usize>],
    base_spec: &SimSpec,
) -> Result<Vec<SimOutput>> {
    let specs: Vec<(String, SimSpec)> = idiosyncratic
        .iter()
        .enumerate()
        .map(|(i, own)| {
            let mut merged: Vec<usize> = shared_breaks.iter().chain(own).copied().collect();
            merged.sort_unstable();
            merged.dedup();
            let spec = SimSpec { break_times: merged, ..base_spec.clone() };
            (format!("asset_{}", i + 1), spec)
        })
        .collect();
    for (_, spec) in &specs {
        spec.validate()?;
    }
    par::map_indexed(specs.len(), |i| {
        let (id, spec) = &specs[i];
        simulate_streams(spec, id, 2 * i as u64)
    })
    .into_iter()
    .collect()
}

/// CSV rows `(t, return, sigma2, is_break)`.
pub fn sim_to_csv(out: &SimOutput) -> String {
    use std::fmt::Write as _;
    let mut csv = String::from("t,return,sigma2,is_break\n");
    let breaks: std::collections::HashSet<usize> = out.true_breaks.indices.iter().copied().collect();
    for (t, (x, s2)) in out.returns.values.iter().zip(&out.sigma2).enumerate() {
        writeln!(csv, "{t},{x},{s2},{}", u8::from(breaks.contains(&t))).unwrap();
    }
    csv
}
