//! Grid estimates of the modulus of continuity.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::function::TargetFunction;

/// `a, a + step, ...` up to `b` (inclusive within rounding).
pub fn uniform_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && a <= b) {
        return Err(Error::Domain {
            value: step,
            reason: "grid needs a finite window a <= b and a positive step",
        });
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

/// `count` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { b } else { a + i as f64 * step })
                .collect()
        }
    }
}

/// Largest `max - min` over every run of `span + 1` consecutive samples.
fn sliding_range(values: &[f64], span: usize) -> f64 {
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (j, &v) in values.iter().enumerate() {
        while hi.back().is_some_and(|&i| values[i] <= v) {
            hi.pop_back();
        }
        hi.push_back(j);
        while lo.back().is_some_and(|&i| values[i] >= v) {
            lo.pop_back();
        }
        lo.push_back(j);
        let start = j.saturating_sub(span);
        while hi.front().is_some_and(|&i| i < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&i| i < start) {
            lo.pop_front();
        }
        best = best.max(values[hi[0]] - values[lo[0]]);
    }
    best
}

/// `max |v_i - v_j|` over samples on a uniform grid with `|i - j| step <= theta`.
pub fn modulus_from_samples(values: &[f64], step: f64, theta: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain {
            value: 0.0,
            reason: "modulus estimate needs a nonempty grid",
        });
    }
    if !(step > 0.0 && theta >= step) {
        return Err(Error::Domain {
            value: theta,
            reason: "theta must be at least the grid step",
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            value: *v,
            reason: "modulus estimate needs finite samples",
        });
    }
    let span = (theta / step + 1e-9).floor() as usize;
    Ok(sliding_range(values, span))
}

/// Grid estimate of `omega(f, theta)` restricted to `window`.
///
/// A lower bound for the true modulus on the window, nondecreasing in `theta`.
pub fn estimate_modulus(f: &TargetFunction, theta: f64, window: (f64, f64), step: f64) -> Result<f64> {
    if step > theta {
        return Err(Error::Domain {
            value: theta,
            reason: "theta must be at least the grid step",
        });
    }
    let grid = uniform_grid(window.0, window.1, step)?;
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    modulus_from_samples(&values, step, theta)
}
