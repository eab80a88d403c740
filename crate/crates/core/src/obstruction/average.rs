use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::kahan::NeumaierSum;
use crate::maps::IntervalMap;

const FIXED_POINT_TOL: f64 = 1e-15;
const FIXED_POINT_ITERS: usize = 5000;
const EMPIRICAL_STARTS: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub enum Witness {
    Dirac0,
    Periodic { word: Vec<usize>, points: Vec<f64> },
    Empirical { start: f64, length: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxAverage {
    pub value: f64,
    pub witness: Witness,
    pub dirac0: f64,
    /// Best periodic Birkhoff average and its word.
    pub periodic_best: Option<(Vec<usize>, f64)>,
    pub empirical_best: Option<f64>,
    pub words_tried: usize,
    pub words_skipped: Vec<Vec<usize>>,
}

/// Lyndon words (aperiodic necklace representatives) of length `1..=n`
/// over `k` symbols, in lexicographic order.
pub fn lyndon_words(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || n == 0 {
        return out;
    }
    let mut w = vec![0usize];
    loop {
        out.push(w.clone());
        let m = w.len();
        while w.len() < n {
            let c = w[w.len() - m];
            w.push(c);
        }
        while w.last() == Some(&(k - 1)) {
            w.pop();
        }
        match w.last_mut() {
            Some(l) => *l += 1,
            None => break,
        }
    }
    out
}

/// Periodic orbit with itinerary `word`: `x_i` lies in branch `word[i]` and
/// `T(x_i) = x_{i+1}`, indices mod the period. Found as the fixed point of
/// the composed inverse branches.
pub fn periodic_orbit(map: &IntervalMap, word: &[usize]) -> Result<Vec<f64>> {
    let pull_back = |x0: f64| -> Result<Vec<f64>> {
        let mut pts = vec![0.0; word.len()];
        let mut y = x0;
        for i in (0..word.len()).rev() {
            y = map.inverse_branch(word[i], y)?;
            pts[i] = y;
        }
        Ok(pts)
    };
    let mut x = 0.5;
    for _ in 0..FIXED_POINT_ITERS {
        let pts = pull_back(x)?;
        let next = pts[0];
        if (next - x).abs() <= FIXED_POINT_TOL * next.abs().max(1e-300) || next == x {
            return Ok(pts);
        }
        x = next;
    }
    Err(crate::error::Error::RootFinding(format!(
        "fixed point of word {word:?} did not converge"
    )))
}

/// Lower estimate of `m(f, T)`: the best of `f(0)`, periodic averages up to
/// `max_period`, and long empirical averages totalling `orbit_budget` iterates.
pub fn estimate_max_average(
    map: &IntervalMap,
    f: &(dyn Fn(f64) -> f64 + Sync),
    max_period: usize,
    orbit_budget: usize,
    seed: u64,
) -> MaxAverage {
    let dirac0 = f(0.0);
    let has_neutral = map.speed().is_ok();
    let words: Vec<Vec<usize>> = lyndon_words(map.branch_count(), max_period)
        .into_iter()
        // the all-neutral word is the fixed point 0 itself
        .filter(|w| !(has_neutral && w.iter().all(|&s| s == 0)))
        .collect();
    let results: Vec<(Vec<usize>, Result<Vec<f64>>)> =
        words.par_iter().map(|w| (w.clone(), periodic_orbit(map, w))).collect();
    let mut periodic_best: Option<(Vec<usize>, f64, Vec<f64>)> = None;
    let mut skipped = Vec::new();
    for (w, r) in results {
        match r {
            Ok(pts) => {
                let avg = pts.iter().map(|&x| f(x)).collect::<NeumaierSum>().sum() / pts.len() as f64;
                if periodic_best.as_ref().map_or(true, |b| avg > b.1) {
                    periodic_best = Some((w, avg, pts));
                }
            }
            Err(_) => skipped.push(w),
        }
    }
    let mut empirical_best: Option<(f64, f64)> = None;
    let len = orbit_budget / EMPIRICAL_STARTS;
    if len > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts: Vec<f64> = (0..EMPIRICAL_STARTS).map(|_| rng.gen::<f64>()).collect();
        let avgs: Vec<(f64, f64)> = starts
            .par_iter()
            .map(|&x0| {
                let mut acc = NeumaierSum::new();
                let mut x = x0;
                for _ in 0..len {
                    acc += f(x);
                    x = map.eval(x);
                }
                (x0, acc.sum() / len as f64)
            })
            .collect();
        for (x0, a) in avgs {
            if empirical_best.map_or(true, |b| a > b.1) {
                empirical_best = Some((x0, a));
            }
        }
    }
    let mut value = dirac0;
    let mut witness = Witness::Dirac0;
    if let Some((w, a, pts)) = &periodic_best {
        if *a > value {
            value = *a;
            witness = Witness::Periodic { word: w.clone(), points: pts.clone() };
        }
    }
    if let Some((x0, a)) = empirical_best {
        if a > value {
            value = a;
            witness = Witness::Empirical { start: x0, length: len };
        }
    }
    MaxAverage {
        value,
        witness,
        dirac0,
        periodic_best: periodic_best.map(|(w, a, _)| (w, a)),
        empirical_best: empirical_best.map(|b| b.1),
        words_tried: words.len(),
        words_skipped: skipped,
    }
}
