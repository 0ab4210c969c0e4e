//! Multiple-comparison corrections.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjust {
    /// Holm step-down, family-wise error control.
    Holm,
    /// Benjamini-Hochberg step-up, false-discovery-rate control.
    Bh,
    None,
}

impl fmt::Display for Adjust {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adjust::Holm => "holm",
            Adjust::Bh => "bh",
            Adjust::None => "none",
        })
    }
}

impl FromStr for Adjust {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holm" => Ok(Adjust::Holm),
            "bh" => Ok(Adjust::Bh),
            "none" => Ok(Adjust::None),
            other => Err(Error::usage(format!("unknown adjustment {other:?}"))),
        }
    }
}

/// Adjust `p` for multiple comparisons, preserving input order. NaN entries
/// stay NaN and do not count toward the number of comparisons.
pub fn p_adjust(p: &[f64], method: Adjust) -> Vec<f64> {
    let mut out = p.to_vec();
    let mut idx: Vec<usize> = (0..p.len()).filter(|&i| !p[i].is_nan()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let m = idx.len() as f64;
    match method {
        Adjust::None => {}
        Adjust::Holm => {
            let mut running = 0.0f64;
            for (rank, &i) in idx.iter().enumerate() {
                running = running.max(((m - rank as f64) * p[i]).min(1.0));
                out[i] = running;
            }
        }
        Adjust::Bh => {
            let mut running = 1.0f64;
            for (rank, &i) in idx.iter().enumerate().rev() {
                running = running.min((m / (rank as f64 + 1.0) * p[i]).min(1.0));
                out[i] = running;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn hand_fixtures() {
        let p = [0.01, 0.02, 0.03];
        assert!(close(&p_adjust(&p, Adjust::Holm), &[0.03, 0.04, 0.04]));
        assert!(close(&p_adjust(&p, Adjust::Bh), &[0.03, 0.03, 0.03]));
        assert_eq!(p_adjust(&[0.2], Adjust::Holm), vec![0.2]);
        assert_eq!(p_adjust(&[0.2], Adjust::Bh), vec![0.2]);
    }

    #[test]
    fn order_is_restored() {
        let p = [0.03, 0.01, 0.5, 0.02];
        // Holm sorted: .01*4=.04, .02*3=.06, .03*2=.06, .5*1 -> .5
        assert!(close(&p_adjust(&p, Adjust::Holm), &[0.06, 0.04, 0.5, 0.06]));
        // BH sorted: .5*4/4=.5, .03*4/3=.04, .02*4/2=.04, .01*4=.04
        assert!(close(&p_adjust(&p, Adjust::Bh), &[0.04, 0.04, 0.5, 0.04]));
    }

    #[test]
    fn caps_at_one_and_skips_nan() {
        let p = [0.6, f64::NAN, 0.9];
        let h = p_adjust(&p, Adjust::Holm);
        assert_eq!(h[0], 1.0);
        assert!(h[1].is_nan());
        assert_eq!(h[2], 1.0);
        let b = p_adjust(&[0.01, f64::NAN], Adjust::Bh);
        assert_eq!(b[0], 0.01);
    }
}
