//! Sampled detection events.
//!
//! Every record draws from its own ChaCha8 stream, seeded from the run seed
//! and the record index, so ensembles are identical regardless of how the
//! work is scheduled across threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::ArrivalDistribution;
use crate::error::{invalid, Error, Result};
use crate::operator::{QuantumModel, RateTracker};

/// Points of the coarse scan that sets the thinning majorant.
const MAJORANT_SCAN: usize = 400;
/// Safety factor applied to the scanned maximum of λ.
pub const MAJORANT_SAFETY: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Detected(f64),
    Escaped,
}

/// One sampled run: the detector fired at a time, or never did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub outcome: Outcome,
    /// Seed of the record's own random stream.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnsemble {
    pub records: Vec<EventRecord>,
    pub n: usize,
    pub detected_fraction: f64,
}

impl EventEnsemble {
    fn from_records(records: Vec<EventRecord>) -> Self {
        let n = records.len();
        let detected = records
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Detected(_)))
            .count();
        Self {
            records,
            n,
            detected_fraction: if n == 0 { 0.0 } else { detected as f64 / n as f64 },
        }
    }

    /// Detection times in ascending order.
    pub fn detected_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| match r.outcome {
                Outcome::Detected(t) => Some(t),
                Outcome::Escaped => None,
            })
            .collect();
        times.sort_by(f64::total_cmp);
        times
    }

    /// `seed,outcome,time` rows; escaped records leave `time` empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "seed,outcome,time")?;
        for r in &self.records {
            match r.outcome {
                Outcome::Detected(t) => writeln!(out, "{},detected,{:.11e}", r.seed, t)?,
                Outcome::Escaped => writeln!(out, "{},escaped,", r.seed)?,
            }
        }
        Ok(())
    }
}

/// Seed of record `index` in a run seeded with `seed` (SplitMix64 mix).
pub fn record_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF sampling from a tabulated distribution.
///
/// u ~ U(0,1); u ≥ P(∞) means the particle escapes, otherwise the event
/// time solves P(t) = u.
pub fn sample_events(dist: &ArrivalDistribution, n: usize, seed: u64) -> Result<EventEnsemble> {
    dist.validate()?;
    let indices: Vec<u64> = (0..n as u64).collect();
    let records = crate::parallel::map(&indices, |&i| {
        let s = record_seed(seed, i);
        let u: f64 = ChaCha8Rng::seed_from_u64(s).random();
        let outcome = match dist.quantile(u) {
            Some(t) => Outcome::Detected(t),
            None => Outcome::Escaped,
        };
        EventRecord { outcome, seed: s }
    });
    Ok(EventEnsemble::from_records(records))
}

/// Upper bound on λ over [0, t_max]: the maximum of a uniform scan times
/// [`MAJORANT_SAFETY`]. The scan stops early once the state is exhausted.
pub fn rate_majorant(model: &QuantumModel, t_max: f64) -> Result<f64> {
    let mut tracker = RateTracker::new(model);
    let mut sup: f64 = 0.0;
    for k in 0..=MAJORANT_SCAN {
        tracker.advance_to(t_max * k as f64 / MAJORANT_SCAN as f64)?;
        match tracker.rate() {
            Ok(rate) => sup = sup.max(rate),
            Err(Error::StateExhausted { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(MAJORANT_SAFETY * sup)
}

#[derive(PartialEq)]
struct Candidate {
    time: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap pops the earliest candidate first
        other.time.total_cmp(&self.time).then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Thinning (Ogata) sampling of the first detection from λ(t).
///
/// Candidate times of a homogeneous process with the majorant rate are
/// accepted with probability λ(t)/λ_max. All records share one forward
/// propagation of the damped state: pending candidates are processed in
/// global time order from a heap, while each record keeps its own random
/// stream. A record with no accepted candidate before `t_max` escapes.
pub fn sample_events_thinning(model: &QuantumModel, n: usize, seed: u64, t_max: f64) -> Result<EventEnsemble> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    let majorant = rate_majorant(model, t_max)?;
    let seeds: Vec<u64> = (0..n as u64).map(|i| record_seed(seed, i)).collect();
    let mut outcomes = vec![Outcome::Escaped; n];
    if majorant == 0.0 {
        return Ok(EventEnsemble::from_records(
            seeds
                .into_iter()
                .map(|s| EventRecord {
                    outcome: Outcome::Escaped,
                    seed: s,
                })
                .collect(),
        ));
    }
    let mut rngs: Vec<ChaCha8Rng> = seeds.iter().map(|&s| ChaCha8Rng::seed_from_u64(s)).collect();
    let exponential = |rng: &mut ChaCha8Rng| -> f64 {
        let u: f64 = rng.random();
        -(1.0 - u).ln() / majorant
    };
    let mut heap = BinaryHeap::with_capacity(n);
    for (index, rng) in rngs.iter_mut().enumerate() {
        let time = exponential(rng);
        if time < t_max {
            heap.push(Candidate { time, index });
        }
    }
    let mut tracker = RateTracker::new(model);
    while let Some(Candidate { time, index }) = heap.pop() {
        tracker.advance_to(time)?;
        let rate = match tracker.rate() {
            Ok(rate) => rate,
            // survival below 1e-12: nothing left to detect from here on
            Err(Error::StateExhausted { .. }) => break,
            Err(e) => return Err(e),
        };
        if rate > majorant {
            return Err(Error::MajorantViolated {
                t: time,
                rate,
                majorant,
            });
        }
        let rng = &mut rngs[index];
        let u: f64 = rng.random();
        if u * majorant < rate {
            outcomes[index] = Outcome::Detected(time);
        } else {
            let next = time + exponential(rng);
            if next < t_max {
                heap.push(Candidate { time: next, index });
            }
        }
    }
    let records = outcomes
        .into_iter()
        .zip(seeds)
        .map(|(outcome, seed)| EventRecord { outcome, seed })
        .collect();
    Ok(EventEnsemble::from_records(records))
}

/// c(α) = √(-ln(α/2)/2), the asymptotic Kolmogorov quantile.
fn ks_coefficient(level: f64) -> f64 {
    (-(0.5 * level).ln() / 2.0).sqrt()
}

/// Asymptotic critical value of the one-sample KS statistic.
pub fn ks_critical(n: usize, level: f64) -> f64 {
    ks_coefficient(level) / (n as f64).sqrt()
}

/// Asymptotic critical value of the two-sample KS statistic.
pub fn ks_critical_two_sample(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(level) * ((n + m) / (n * m)).sqrt()
}

/// sup |F_n - F| for ascending `sorted` samples.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// sup |F_a - F_b| for two ascending samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One binomial standard deviation √(p(1-p)/n).
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
