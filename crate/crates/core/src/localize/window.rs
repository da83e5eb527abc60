use serde::{Deserialize, Serialize};

use super::LocalizeError;
use crate::domain::TemporalInterval;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_seconds: f64,
    pub stride_seconds: f64,
    pub segments_per_window: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { window_seconds: 40.0, stride_seconds: 20.0, segments_per_window: 16 }
    }
}

impl WindowConfig {
    pub fn new(window_seconds: f64, stride_seconds: f64, segments_per_window: usize) -> Result<Self, LocalizeError> {
        let cfg = Self { window_seconds, stride_seconds, segments_per_window };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LocalizeError> {
        let ok = self.window_seconds.is_finite()
            && self.window_seconds > 0.0
            && self.stride_seconds.is_finite()
            && self.stride_seconds > 0.0
            && self.stride_seconds <= self.window_seconds
            && self.segments_per_window >= 1;
        if ok {
            Ok(())
        } else {
            Err(LocalizeError::Config(format!(
                "need 0 < stride <= window and segments >= 1, got window={} stride={} segments={}",
                self.window_seconds, self.stride_seconds, self.segments_per_window
            )))
        }
    }
}

/// Overlapping fixed-length windows over `[0, duration]`.
///
/// Regular windows start at multiples of the stride. When they stop short of
/// the clip end, one more window is anchored to end exactly at `duration`.
/// A clip shorter than one window gets a single `[0, duration]` window.
pub fn make_windows(duration: f64, cfg: &WindowConfig) -> Vec<TemporalInterval> {
    let w = cfg.window_seconds;
    if duration <= w + EPS {
        return vec![TemporalInterval::new(0.0, duration.max(0.0)).expect("non-negative span")];
    }
    let mut windows = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * cfg.stride_seconds;
        if start + w > duration + EPS {
            break;
        }
        let end = if (start + w - duration).abs() <= EPS { duration } else { start + w };
        windows.push(TemporalInterval::new(start, end).expect("ordered window"));
        k += 1;
    }
    let last_end = windows.last().map_or(0.0, |l| l.end());
    if last_end < duration {
        let tail = TemporalInterval::new(duration - w, duration).expect("ordered window");
        if windows.last().is_none_or(|l| (l.start() - tail.start()).abs() > EPS) {
            windows.push(tail);
        }
    }
    windows
}
