//! Certified flow partitions.
//!
//! On a segment `[u, v]` every eigenvalue branch stays inside the interval
//! `[(λ(u) + λ(v))/2 ± L·(v − u)/2]`, where `L` bounds the branch's speed.
//! For sampled families the sorted eigenvalues are Lipschitz with the
//! operator-norm slope of the interpolant (Weyl), so branches are paired by
//! sorted index. A window radius `a` is certified when `±a` keeps a margin
//! from all such intervals.

use serde::{Deserialize, Serialize};

use super::{Family, ModeFamily, SampledFamily};
use crate::error::{Result, SpecError};
use crate::family::CurveFamily;

/// Minimum certified distance between `±a_k` and the spectrum.
pub const MARGIN_MIN: f64 = 1e-6;

/// Default cap on the number of segments.
pub const MAX_SEGMENTS: usize = 1 << 20;

/// Segments at most this long may fall back to a window above the whole
/// spectrum envelope.
const ABOVE_WINDOW_LEN: f64 = 1.0 / 64.0;

/// Partition `0 = t_0 < … < t_n = 1` with radii `a_k` valid on `[t_{k−1}, t_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPartition {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    /// Certified distance from `±a_k` to the spectrum on segment `k`.
    pub margins: Vec<f64>,
}

impl FlowPartition {
    pub fn segments(&self) -> usize {
        self.radii.len()
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.radii.len();
        if n == 0 || self.times.len() != n + 1 || self.margins.len() != n {
            return Err(SpecError::InvalidPartition("inconsistent lengths".into()));
        }
        if self.times[0] != 0.0 || self.times[n] != 1.0 {
            return Err(SpecError::InvalidPartition(
                "times must run from 0 to 1".into(),
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpecError::InvalidPartition(
                "times must increase strictly".into(),
            ));
        }
        if self.radii.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(SpecError::InvalidPartition("radii must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowRule {
    /// Midpoint of the widest admissible spectral gap.
    LargestGap,
    /// Midpoint of the admissible gap closest to zero.
    SmallestRadius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOptions {
    pub margin_min: f64,
    pub max_segments: usize,
    /// Extra break points forced into the partition.
    pub initial_breaks: Vec<f64>,
    pub window_rule: WindowRule,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            margin_min: MARGIN_MIN,
            max_segments: MAX_SEGMENTS,
            initial_breaks: Vec::new(),
            window_rule: WindowRule::LargestGap,
        }
    }
}

fn sampled_values(f: &SampledFamily, t: f64, out: &mut Vec<f64>) {
    out.extend_from_slice(f.at(t).eigenvalues());
}

fn curve_values(f: &CurveFamily, t: f64, out: &mut Vec<f64>) {
    out.extend(f.curves().iter().map(|c| c.eval(t)));
}

/// Branch values at `t`, in a fixed branch order.
fn branch_values(family: &Family, t: f64) -> Vec<f64> {
    let mut out = Vec::new();
    match family {
        Family::Sampled(s) => sampled_values(s, t, &mut out),
        Family::Curves(c) => curve_values(c, t, &mut out),
        Family::Modes(m) => {
            for mode in m.modes() {
                match &mode.family {
                    ModeFamily::Sampled(s) => sampled_values(s, t, &mut out),
                    ModeFamily::Curves(c) => curve_values(c, t, &mut out),
                }
            }
        }
    }
    out
}

fn sampled_speeds(f: &SampledFamily, u: f64, v: f64, out: &mut Vec<f64>) {
    out.extend(std::iter::repeat_n(f.slope_on(u, v), f.dim()));
}

fn curve_speeds(f: &CurveFamily, u: f64, v: f64, out: &mut Vec<f64>) {
    out.extend(f.curves().iter().map(|c| c.lipschitz_on(u, v)));
}

/// Speed bound of each branch on `[u, v]`, same order as [`branch_values`].
fn branch_speeds(family: &Family, u: f64, v: f64) -> Vec<f64> {
    let mut out = Vec::new();
    match family {
        Family::Sampled(s) => sampled_speeds(s, u, v, &mut out),
        Family::Curves(c) => curve_speeds(c, u, v, &mut out),
        Family::Modes(m) => {
            for mode in m.modes() {
                match &mode.family {
                    ModeFamily::Sampled(s) => sampled_speeds(s, u, v, &mut out),
                    ModeFamily::Curves(c) => curve_speeds(c, u, v, &mut out),
                }
            }
        }
    }
    out
}

fn envelope_from(vu: &[f64], vv: &[f64], speeds: &[f64], h: f64) -> Vec<(f64, f64)> {
    vu.iter()
        .zip(vv)
        .zip(speeds)
        .map(|((&a, &b), &l)| {
            let mid = 0.5 * (a + b);
            // rounding slack on top of the Lipschitz half-width
            let half = 0.5 * l * h + 4.0 * f64::EPSILON * (a.abs() + b.abs());
            (mid - half, mid + half)
        })
        .collect()
}

/// Intervals containing every eigenvalue branch on `[u, v]`.
pub fn envelope(family: &Family, u: f64, v: f64) -> Vec<(f64, f64)> {
    envelope_from(
        &branch_values(family, u),
        &branch_values(family, v),
        &branch_speeds(family, u, v),
        v - u,
    )
}

/// `|λ|` images of the intervals, merged and sorted.
fn folded(env: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = env
        .iter()
        .map(|&(lo, hi)| {
            if lo >= 0.0 {
                (lo, hi)
            } else if hi <= 0.0 {
                (-hi, -lo)
            } else {
                (0.0, (-lo).max(hi))
            }
        })
        .collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Distance from `a` to the folded envelope.
fn clearance(merged: &[(f64, f64)], a: f64) -> f64 {
    merged
        .iter()
        .map(|&(lo, hi)| {
            if a < lo {
                lo - a
            } else if a > hi {
                a - hi
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Picks `(a, margin)` for one segment, or `None` if it must be split.
fn choose_window(env: &[(f64, f64)], h: f64, opts: &PartitionOptions) -> Option<(f64, f64)> {
    let merged = folded(env);
    let mut gaps = Vec::new();
    let mut prev = 0.0;
    for &(lo, hi) in &merged {
        if lo > prev {
            gaps.push((prev, lo));
        }
        prev = prev.max(hi);
    }
    let admissible = gaps
        .into_iter()
        .filter(|(lo, hi)| 0.5 * (hi - lo) >= opts.margin_min);
    let pick = match opts.window_rule {
        WindowRule::SmallestRadius => admissible.min_by(|a, b| a.0.total_cmp(&b.0)),
        WindowRule::LargestGap => admissible.fold(None, |best: Option<(f64, f64)>, g| match best {
            Some(b) if (b.1 - b.0) >= (g.1 - g.0) => Some(b),
            _ => Some(g),
        }),
    };
    if let Some((lo, hi)) = pick {
        let a = 0.5 * (lo + hi);
        return Some((a, clearance(&merged, a)));
    }
    if h <= ABOVE_WINDOW_LEN {
        let top = merged.last().map_or(0.0, |x| x.1);
        let a = top + 0.5 * top.max(1.0);
        return Some((a, clearance(&merged, a)));
    }
    None
}

/// Default partition with [`PartitionOptions::default`].
pub fn build_flow_partition(family: &Family) -> Result<FlowPartition> {
    build_flow_partition_with(family, &PartitionOptions::default())
}

/// Adaptive bisection until every segment admits a certified window.
pub fn build_flow_partition_with(
    family: &Family,
    opts: &PartitionOptions,
) -> Result<FlowPartition> {
    if !(opts.margin_min > 0.0) {
        return Err(SpecError::invalid("margin_min must be positive"));
    }
    let mut breaks = vec![0.0, 1.0];
    for &b in &opts.initial_breaks {
        if !(b > 0.0 && b < 1.0) {
            return Err(SpecError::invalid(format!(
                "initial break {b} outside (0, 1)"
            )));
        }
        breaks.push(b);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut times = vec![0.0];
    let mut radii = Vec::new();
    let mut margins = Vec::new();
    // right-to-left stack so segments are accepted in time order
    let mut stack: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let vals: Vec<Vec<f64>> = breaks.iter().map(|&t| branch_values(family, t)).collect();
    for k in (0..breaks.len() - 1).rev() {
        stack.push((
            breaks[k],
            breaks[k + 1],
            vals[k].clone(),
            vals[k + 1].clone(),
        ));
    }
    while let Some((u, v, vu, vv)) = stack.pop() {
        if radii.len() + stack.len() + 1 > opts.max_segments {
            return Err(SpecError::PartitionFailure(format!(
                "no certified window after {} segments",
                opts.max_segments
            )));
        }
        let env = envelope_from(&vu, &vv, &branch_speeds(family, u, v), v - u);
        match choose_window(&env, v - u, opts) {
            Some((a, margin)) if margin >= opts.margin_min => {
                times.push(v);
                radii.push(a);
                margins.push(margin);
            }
            _ => {
                let m = 0.5 * (u + v);
                if !(m > u && m < v) {
                    return Err(SpecError::PartitionFailure(format!(
                        "segment [{u}, {v}] cannot be split further"
                    )));
                }
                let vm = branch_values(family, m);
                stack.push((m, v, vm.clone(), vv));
                stack.push((u, m, vu, vm));
            }
        }
    }
    Ok(FlowPartition {
        times,
        radii,
        margins,
    })
}

/// Re-derives the envelope on every segment and checks `±a_k` clears it by
/// `margin_min`.
pub fn verify_partition(family: &Family, partition: &FlowPartition, margin_min: f64) -> Result<()> {
    partition.check_shape()?;
    for k in 0..partition.segments() {
        let (u, v) = (partition.times[k], partition.times[k + 1]);
        let merged = folded(&envelope(family, u, v));
        let c = clearance(&merged, partition.radii[k]);
        if c < margin_min * (1.0 - 1e-9) {
            return Err(SpecError::InvalidPartition(format!(
                "window a = {} on [{u}, {v}] is within {c} of the spectrum",
                partition.radii[k]
            )));
        }
    }
    Ok(())
}
