//! Capacity maximization at a fixed mean photon number.
//!
//! Free variables are the squeezing `r` of the resource state, the two
//! transmissivities and Charlie's phase; the gain is set by its closed form
//! and the signal power by the photon-number budget. The search is a fixed
//! grid followed by coordinate descent, so results are reproducible.

use std::fmt::Write as _;

use nalgebra::Matrix6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    baseline_capacities, capacity_from_snr, check_nbar, optimal_gain_m, snrs_unchecked, to_mat6,
    Baselines, CapacityResult, DecodingConfig,
};
use crate::error::{Error, Result};
use crate::protocols::{Party, ProtocolId};

/// Excess over a baseline that counts as exceeding it.
pub const CROSSING_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Grid points per dimension.
    pub grid_points: usize,
    /// Final step of the coordinate descent, relative to each range.
    pub min_step: f64,
    /// Smallest squeezing considered.
    pub r_min: f64,
    /// Number of grid optima refined.
    pub starts: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points: 33,
            min_step: 1e-6,
            r_min: 1e-6,
            starts: 4,
        }
    }
}

/// Which decoders the optimizer may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderSpace {
    Full,
    /// Mode C ignored: `t1 = 1`, `g = 0`.
    CharlieIgnored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Coherent,
    Squeezed,
}

impl Baseline {
    pub fn value(self, b: &Baselines) -> f64 {
        match self {
            Baseline::Coherent => b.coherent,
            Baseline::Squeezed => b.squeezed,
        }
    }
}

struct Problem {
    protocol: ProtocolId,
    nbar: f64,
    space: DecoderSpace,
    r_max: f64,
    settings: OptimizerSettings,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    r: f64,
    t1: f64,
    t2: f64,
    flip: bool,
}

struct Evaluated {
    value: f64,
    snr_x: f64,
    snr_p: f64,
    config: DecodingConfig,
}

fn photon_number_a(m: &Matrix6<f64>) -> f64 {
    let a = Party::A.index();
    (m[(2 * a, 2 * a)] + m[(2 * a + 1, 2 * a + 1)]) / 4.0 - 0.5
}

impl Problem {
    fn state(&self, r: f64) -> Matrix6<f64> {
        to_mat6(&self.protocol.state(r).expect("r is kept positive"))
    }

    fn evaluate_in(&self, m: &Matrix6<f64>, p: Point) -> Option<Evaluated> {
        let power = self.nbar - photon_number_a(m);
        if power < 0.0 {
            return None;
        }
        let (t1, g, flip) = match self.space {
            DecoderSpace::Full => (p.t1, optimal_gain_m(m, p.t1, p.t2, p.flip), p.flip),
            DecoderSpace::CharlieIgnored => (1.0, 0.0, false),
        };
        let config = DecodingConfig {
            t1,
            t2: p.t2,
            g,
            signal_power: power,
            charlie_phase_flip: flip,
        };
        let (snr_x, snr_p) = snrs_unchecked(m, &config);
        Some(Evaluated {
            value: capacity_from_snr(snr_x, snr_p),
            snr_x,
            snr_p,
            config,
        })
    }

    fn value(&self, p: Point) -> f64 {
        self.evaluate_in(&self.state(p.r), p)
            .map_or(f64::NEG_INFINITY, |e| e.value)
    }

    fn grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.settings.grid_points.max(2);
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    fn t1_values(&self) -> Vec<f64> {
        match self.space {
            DecoderSpace::Full => self.grid(0.0, 1.0),
            DecoderSpace::CharlieIgnored => vec![1.0],
        }
    }

    fn flips(&self) -> &'static [bool] {
        match self.space {
            DecoderSpace::Full => &[false, true],
            DecoderSpace::CharlieIgnored => &[false],
        }
    }

    /// Grid optima, best first, with grid coordinates for de-duplication.
    fn scan(&self) -> Vec<(f64, [usize; 3], Point)> {
        let rs = self.grid(self.settings.r_min, self.r_max);
        let t1s = self.t1_values();
        let t2s = self.grid(0.0, 1.0);
        let mut found = Vec::new();
        for (ir, &r) in rs.iter().enumerate() {
            let m = self.state(r);
            for &flip in self.flips() {
                for (i1, &t1) in t1s.iter().enumerate() {
                    for (i2, &t2) in t2s.iter().enumerate() {
                        let p = Point { r, t1, t2, flip };
                        if let Some(e) = self.evaluate_in(&m, p) {
                            found.push((e.value, [ir, i1, i2], p));
                        }
                    }
                }
            }
        }
        // stable: ties keep scan order
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        found
    }

    fn starts(&self) -> Vec<Point> {
        let mut chosen: Vec<([usize; 3], Point)> = Vec::new();
        for (_, idx, p) in self.scan() {
            let near = chosen.iter().any(|(cidx, cp)| {
                cp.flip == p.flip && cidx.iter().zip(&idx).all(|(a, b)| a.abs_diff(*b) <= 2)
            });
            if !near {
                chosen.push((idx, p));
            }
            if chosen.len() >= self.settings.starts {
                break;
            }
        }
        chosen.into_iter().map(|(_, p)| p).collect()
    }

    fn refine(&self, start: Point) -> (Point, f64) {
        let lower = [self.settings.r_min, 0.0, 0.0];
        let upper = [self.r_max, 1.0, 1.0];
        let active: &[usize] = match self.space {
            DecoderSpace::Full => &[0, 1, 2],
            DecoderSpace::CharlieIgnored => &[0, 2],
        };
        let spacing = 1.0 / (self.settings.grid_points.max(2) - 1) as f64;
        let mut z = [start.r, start.t1, start.t2];
        let mut step: [f64; 3] = std::array::from_fn(|i| (upper[i] - lower[i]) * spacing);
        let at = |z: &[f64; 3]| Point {
            r: z[0],
            t1: z[1],
            t2: z[2],
            flip: start.flip,
        };
        let mut best = self.value(at(&z));
        for _ in 0..10_000 {
            let mut improved = false;
            for &i in active {
                for dir in [1.0, -1.0] {
                    let mut cand = z;
                    cand[i] = (z[i] + dir * step[i]).clamp(lower[i], upper[i]);
                    if cand[i] == z[i] {
                        continue;
                    }
                    let v = self.value(at(&cand));
                    if v > best {
                        best = v;
                        z = cand;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                let done = active
                    .iter()
                    .all(|&i| step[i] <= self.settings.min_step * (upper[i] - lower[i]));
                if done {
                    break;
                }
                for s in &mut step {
                    *s *= 0.5;
                }
            }
        }
        (at(&z), best)
    }

    /// The `r → 0⁺` limit, where every protocol state tends to vacuum. With
    /// uncorrelated vacuum noise the balanced UBS2 is optimal and the gain
    /// vanishes; the value still goes through the chain.
    fn vacuum_limit(&self) -> CapacityResult {
        let m = Matrix6::identity();
        let p = Point {
            r: 0.0,
            t1: 1.0,
            t2: std::f64::consts::FRAC_1_SQRT_2,
            flip: false,
        };
        let e = self.evaluate_in(&m, p).expect("vacuum fits any budget");
        CapacityResult {
            capacity: e.value,
            snr_x: e.snr_x,
            snr_p: e.snr_p,
            config: e.config,
            nbar: e.config.signal_power,
            squeezing: None,
            protocol: Some(self.protocol),
        }
    }

    fn solve(&self) -> Result<CapacityResult> {
        let mut best: Option<(Point, f64)> = None;
        for start in self.starts() {
            let (p, v) = self.refine(start);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((p, v));
            }
        }
        let (p, _) = best.ok_or_else(|| {
            Error::InvalidGrid("no feasible point in the optimization grid".into())
        })?;
        let m = self.state(p.r);
        let e = self.evaluate_in(&m, p).expect("refined point is feasible");
        Ok(CapacityResult {
            capacity: e.value,
            snr_x: e.snr_x,
            snr_p: e.snr_p,
            config: e.config,
            nbar: photon_number_a(&m) + e.config.signal_power,
            squeezing: Some(p.r),
            protocol: Some(self.protocol),
        })
    }
}

/// Largest `r` whose mode-A photon number fits within `nbar`.
fn feasible_r_max(protocol: ProtocolId, nbar: f64) -> f64 {
    let n_a = |r: f64| photon_number_a(&to_mat6(&protocol.state(r).expect("r > 0")));
    let mut hi = 1.0;
    while n_a(hi) < nbar && hi < 64.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid > 0.0 && n_a(mid) <= nbar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn optimize_capacity(protocol: ProtocolId, nbar: f64) -> Result<CapacityResult> {
    optimize_capacity_with(
        protocol,
        nbar,
        DecoderSpace::Full,
        &OptimizerSettings::default(),
    )
}

/// Maximum capacity over `(r, t1, t2, g, phase)` at mean photon number
/// `nbar`. The `r → 0⁺` limit (a vacuum resource, `squeezing = None`) is
/// one of the candidates, so below a threshold the result is exactly the
/// supremum `ln(1 + nbar)` rather than a value at the smallest grid `r`.
pub fn optimize_capacity_with(
    protocol: ProtocolId,
    nbar: f64,
    space: DecoderSpace,
    settings: &OptimizerSettings,
) -> Result<CapacityResult> {
    check_nbar(nbar)?;
    let problem = Problem {
        protocol,
        nbar,
        space,
        r_max: feasible_r_max(protocol, nbar),
        settings: *settings,
    };
    let limit = problem.vacuum_limit();
    if problem.r_max <= settings.r_min {
        return Ok(limit);
    }
    let best = problem.solve()?;
    // below a threshold the supremum is the r → 0⁺ limit itself
    Ok(if limit.capacity >= best.capacity {
        limit
    } else {
        best
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nbar: f64,
    pub result: CapacityResult,
    pub baselines: Baselines,
}

/// One optimization per grid point, in grid order.
pub fn capacity_sweep(protocol: ProtocolId, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty photon-number grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(
            "photon-number grid must be ascending".into(),
        ));
    }
    grid.par_iter()
        .map(|&nbar| {
            Ok(SweepRow {
                nbar,
                result: optimize_capacity(protocol, nbar)?,
                baselines: baseline_capacities(nbar)?,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "nbar,capacity,c_coh,c_sq,r_opt,t1_opt,t2_opt,g_opt,p_opt,charlie_phase_flip";

/// CSV with one row per sweep point; `r_opt` is empty when the optimum is
/// the `r → 0⁺` limit.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let c = &row.result.config;
        let r = row
            .result
            .squeezing
            .map(|r| r.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.nbar,
            row.result.capacity,
            row.baselines.coherent,
            row.baselines.squeezed,
            r,
            c.t1,
            c.t2,
            c.g,
            c.signal_power,
            c.charlie_phase_flip
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Estimated threshold photon number.
    pub nbar: f64,
    /// Bracket `[below, above]` around the threshold.
    pub bracket: (f64, f64),
    /// Every optimum evaluated during the search, in evaluation order.
    pub trace: Vec<CapacityResult>,
}

/// Smallest photon number in `[lo, hi]` where the optimized capacity
/// exceeds `baseline` by more than [`CROSSING_EPS`], to within `1e-4`.
/// `None` when the capacity never exceeds the baseline on the scan.
pub fn find_crossing(
    protocol: ProtocolId,
    baseline: Baseline,
    lo: f64,
    hi: f64,
) -> Result<Option<Crossing>> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidGrid(format!(
            "bad crossing range [{lo}, {hi}]"
        )));
    }
    let excess = |nbar: f64| -> Result<(f64, CapacityResult)> {
        let res = optimize_capacity(protocol, nbar)?;
        let base = baseline.value(&baseline_capacities(nbar)?);
        Ok((res.capacity - base, res))
    };
    const SCAN: usize = 21;
    let points: Vec<f64> = (0..SCAN)
        .map(|k| lo + (hi - lo) * k as f64 / (SCAN - 1) as f64)
        .collect();
    let scanned = points
        .par_iter()
        .map(|&n| excess(n))
        .collect::<Result<Vec<_>>>()?;
    let mut trace: Vec<CapacityResult> = scanned.iter().map(|(_, r)| r.clone()).collect();
    let Some(first) = scanned.iter().position(|(e, _)| *e > CROSSING_EPS) else {
        return Ok(None);
    };
    if first == 0 {
        return Ok(Some(Crossing {
            nbar: lo,
            bracket: (lo, lo),
            trace,
        }));
    }
    let (mut below, mut above) = (points[first - 1], points[first]);
    while above - below > 1e-4 {
        let mid = 0.5 * (below + above);
        let (e, res) = excess(mid)?;
        trace.push(res);
        if e > CROSSING_EPS {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(Some(Crossing {
        nbar: 0.5 * (below + above),
        bracket: (below, above),
        trace,
    }))
}
