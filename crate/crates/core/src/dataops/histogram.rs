//! Lifetime histograms with a separate bucket for censored shots.

use serde::{Deserialize, Serialize};

use crate::dataops::decay::LifetimeSample;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// `count` equal bins from zero to `max` (the longest window when absent).
    Linear {
        count: usize,
        max: Option<f64>,
    },
    Edges(Vec<f64>),
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Linear { count: 20, max: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeHistogram {
    /// `counts.len() + 1` bin edges, s.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub censored: usize,
    pub total: usize,
    /// Decays beyond the last edge; zero with default binning.
    pub overflow: usize,
}

impl LifetimeHistogram {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.total as f64
    }

    /// Binomial standard error of the censored fraction.
    pub fn censored_stderr(&self) -> f64 {
        let p = self.censored_fraction();
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

pub fn lifetime_histogram(samples: &[LifetimeSample], binning: &Binning) -> Result<LifetimeHistogram> {
    if samples.is_empty() {
        return Err(Error::Precondition("histogram needs at least one sample".into()));
    }
    let edges = match binning {
        Binning::Linear { count, max } => {
            if *count == 0 {
                return Err(Error::Precondition("histogram needs at least one bin".into()));
            }
            let top = max.unwrap_or_else(|| samples.iter().map(|s| s.duration).fold(0.0, f64::max));
            let top = if top > 0.0 { top } else { 1.0 };
            (0..=*count).map(|i| top * i as f64 / *count as f64).collect()
        }
        Binning::Edges(e) => {
            if e.len() < 2 || !e.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::Precondition("bin edges must be increasing, at least two".into()));
            }
            e.clone()
        }
    };
    let mut counts = vec![0; edges.len() - 1];
    let (mut censored, mut overflow) = (0, 0);
    for s in samples {
        if s.censored {
            censored += 1;
            continue;
        }
        let last = edges.len() - 1;
        if s.duration < edges[0] || s.duration > edges[last] {
            overflow += 1;
            continue;
        }
        // right-closed last bin
        let k = edges.partition_point(|e| *e <= s.duration).clamp(1, last) - 1;
        counts[k] += 1;
    }
    Ok(LifetimeHistogram {
        edges,
        counts,
        censored,
        total: samples.len(),
        overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(d: f64, c: bool) -> LifetimeSample {
        LifetimeSample {
            duration: d,
            censored: c,
        }
    }

    #[test]
    fn all_censored() {
        let h = lifetime_histogram(&[s(10.0, true), s(10.0, true)], &Binning::default()).unwrap();
        assert_eq!(h.censored_fraction(), 1.0);
        assert_eq!(h.counts.iter().sum::<usize>(), 0);
    }

    #[test]
    fn counts_add_up() {
        let v: Vec<_> = (0..=100).map(|i| s(i as f64, i % 7 == 0)).collect();
        let h = lifetime_histogram(
            &v,
            &Binning::Linear {
                count: 10,
                max: Some(100.0),
            },
        )
        .unwrap();
        assert_eq!(h.counts.iter().sum::<usize>() + h.censored + h.overflow, h.total);
        assert_eq!(h.overflow, 0);
        assert_eq!(h.counts[0], 10 - 2);
    }

    #[test]
    fn empty_rejected() {
        assert!(lifetime_histogram(&[], &Binning::default()).is_err());
    }
}
