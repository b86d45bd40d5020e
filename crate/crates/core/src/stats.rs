//! Statistics of resonance catalogues: band membership, Weyl-type counts in
//! windows of `Im z`, and concentration of the first band around `<D>`.

use crate::error::{Error, Result};
use crate::inversion::linear_fit;
use crate::resonances::{BandLabel, Resonance};
use serde::{Deserialize, Serialize};

/// Default `|Im z|` below which band membership is not tested.
pub const DEFAULT_C0: f64 = 5.0;

/// Non-empty windows needed before a power law is fitted.
pub const MIN_FIT_POINTS: usize = 5;

/// Band interval `[gamma_minus, gamma_plus]` of band `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub k: usize,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

impl From<&crate::birkhoff::BandEdges> for BandInterval {
    fn from(e: &crate::birkhoff::BandEdges) -> Self {
        BandInterval { k: e.k, gamma_minus: e.gamma_minus, gamma_plus: e.gamma_plus }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    /// Inside exactly one widened band.
    Assigned { k: usize },
    /// Inside several widened bands (overlapping intervals).
    Ambiguous { bands: Vec<usize> },
    /// Outside every widened band although `|Im z| > c0`.
    Violation,
    /// `|Im z| <= c0`: exempt from the test.
    Exempt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipEntry {
    pub re: f64,
    pub im: f64,
    #[serde(flatten)]
    pub membership: Membership,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandTestReport {
    pub eps: f64,
    pub c0: f64,
    pub entries: Vec<MembershipEntry>,
    /// Assigned entries per band, indexed like the input intervals.
    pub counts: Vec<usize>,
    pub assigned: usize,
    pub ambiguous: usize,
    pub violations: usize,
    pub exempt: usize,
}

impl BandTestReport {
    pub fn total(&self) -> usize {
        self.entries.len()
    }

    /// Entries that were not assigned to a single band.
    pub fn flagged(&self) -> usize {
        self.ambiguous + self.violations + self.exempt
    }
}

/// Assigns each resonance with `|Im z| > c0` to the bands
/// `[gamma_minus - eps, gamma_plus + eps]` containing `Re z`.
pub fn band_membership(resonances: &[Resonance], bands: &[BandInterval], eps: f64, c0: f64) -> Result<BandTestReport> {
    if !(eps >= 0.0) || !(c0 >= 0.0) {
        return Err(Error::Input("eps and c0 must be non-negative".into()));
    }
    if bands.iter().any(|b| !(b.gamma_minus <= b.gamma_plus)) {
        return Err(Error::Input("band interval with gamma_minus > gamma_plus".into()));
    }
    let mut report = BandTestReport {
        eps,
        c0,
        entries: Vec::with_capacity(resonances.len()),
        counts: vec![0; bands.len()],
        assigned: 0,
        ambiguous: 0,
        violations: 0,
        exempt: 0,
    };
    for r in resonances {
        let membership = if r.im.abs() <= c0 {
            report.exempt += 1;
            Membership::Exempt
        } else {
            let hits: Vec<usize> = (0..bands.len())
                .filter(|&i| r.re >= bands[i].gamma_minus - eps && r.re <= bands[i].gamma_plus + eps)
                .collect();
            match hits.as_slice() {
                [] => {
                    report.violations += 1;
                    Membership::Violation
                }
                [i] => {
                    report.counts[*i] += 1;
                    report.assigned += 1;
                    Membership::Assigned { k: bands[*i].k }
                }
                _ => {
                    report.ambiguous += 1;
                    Membership::Ambiguous { bands: hits.iter().map(|&i| bands[i].k).collect() }
                }
            }
        };
        report.entries.push(MembershipEntry { re: r.re, im: r.im, membership });
    }
    Ok(report)
}

/// Copy of `resonances` where entries assigned to a single band carry its label.
pub fn label_bands(resonances: &[Resonance], bands: &[BandInterval], eps: f64, c0: f64) -> Result<Vec<Resonance>> {
    let report = band_membership(resonances, bands, eps, c0)?;
    Ok(resonances
        .iter()
        .zip(&report.entries)
        .map(|(r, e)| match e.membership {
            Membership::Assigned { k } => Resonance { band: BandLabel::Band(k), ..*r },
            _ => *r,
        })
        .collect())
}

/// `#{z in band k : b <= Im z < b + b^eps_exp}`.
///
/// Windows are half-open so that consecutive windows tile an interval.
pub fn weyl_count(resonances: &[Resonance], k: usize, b: f64, eps_exp: f64) -> usize {
    let top = b + b.powf(eps_exp);
    resonances
        .iter()
        .filter(|r| r.band == BandLabel::Band(k) && r.im >= b && r.im < top)
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub k: usize,
    pub eps_exp: f64,
    pub b: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fit `log N = log A + s log b` over the non-empty windows (omitted
    /// with fewer than [`MIN_FIT_POINTS`] of them).
    pub slope: Option<f64>,
    pub prefactor: Option<f64>,
    pub slope_error: f64,
    /// Smallest `c` with `b^(1+eps)/c <= N(b) <= c b^(1+eps)` on the ladder
    /// (infinite when a window is empty).
    pub constant: f64,
}

/// Weyl counts on a ladder of `b` values, with a power-law fit.
pub fn weyl_ladder(resonances: &[Resonance], k: usize, b_values: &[f64], eps_exp: f64) -> Result<WeylFit> {
    if b_values.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Input("window positions must be positive".into()));
    }
    let counts: Vec<usize> = b_values.iter().map(|&b| weyl_count(resonances, k, b, eps_exp)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = b_values
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c > 0)
        .map(|(b, c)| (b.ln(), (*c as f64).ln()))
        .unzip();
    let (slope, prefactor, slope_error) = if xs.len() >= MIN_FIT_POINTS {
        let (s, i, e) = linear_fit(&xs, &ys);
        (Some(s), Some(i.exp()), e)
    } else {
        (None, None, 0.0)
    };
    let constant = b_values.iter().zip(&counts).fold(1.0f64, |c, (b, n)| {
        let ratio = *n as f64 / b.powf(1.0 + eps_exp);
        c.max(ratio).max(1.0 / ratio)
    });
    Ok(WeylFit { k, eps_exp, b: b_values.to_vec(), counts, slope, prefactor, slope_error, constant })
}

/// `n` points from `b_min` to `b_max` in geometric progression.
pub fn geometric_ladder(b_min: f64, b_max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![b_min];
    }
    let ratio = (b_max / b_min).ln() / (n - 1) as f64;
    (0..n).map(|i| b_min * (ratio * i as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub b: f64,
    pub count: usize,
    /// Mean of `|Re z - <D>|` over first-band entries with `|Im z| < b`.
    pub statistic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d_mean: f64,
    pub points: Vec<ConcentrationPoint>,
    /// The statistic never increases along the ladder.
    pub nonincreasing: bool,
}

/// Concentration of the band-0 entries around `<D>` on a ladder of `b`.
pub fn concentration(resonances: &[Resonance], d_mean: f64, b_values: &[f64]) -> ConcentrationReport {
    let band0: Vec<&Resonance> = resonances.iter().filter(|r| r.band == BandLabel::Band(0)).collect();
    let points: Vec<ConcentrationPoint> = b_values
        .iter()
        .map(|&b| {
            let inside: Vec<f64> =
                band0.iter().filter(|r| r.im.abs() < b).map(|r| (r.re - d_mean).abs()).collect();
            let statistic = (!inside.is_empty()).then(|| inside.iter().sum::<f64>() / inside.len() as f64);
            ConcentrationPoint { b, count: inside.len(), statistic }
        })
        .collect();
    let stats: Vec<f64> = points.iter().filter_map(|p| p.statistic).collect();
    let nonincreasing = stats.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    ConcentrationReport { d_mean, points, nonincreasing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonances::Provenance;

    fn res(re: f64, im: f64, k: usize) -> Resonance {
        Resonance { re, im, band: BandLabel::Band(k), provenance: Provenance::Analytic }
    }

    #[test]
    fn membership_partitions_the_catalogue() {
        let bands = [
            BandInterval { k: 0, gamma_minus: -0.6, gamma_plus: -0.4 },
            BandInterval { k: 1, gamma_minus: -1.6, gamma_plus: -1.4 },
        ];
        let list = [res(-0.5, 10.0, 0), res(-1.0, 10.0, 0), res(-1.5, 2.0, 1), res(-1.45, 8.0, 1)];
        let r = band_membership(&list, &bands, 0.01, 5.0).unwrap();
        assert_eq!(r.assigned, 2);
        assert_eq!(r.violations, 1);
        assert_eq!(r.exempt, 1);
        assert_eq!(r.counts, vec![1, 1]);
        assert_eq!(r.assigned + r.flagged(), r.total());
        let wide = band_membership(&list, &bands, 0.6, 5.0).unwrap();
        assert_eq!(wide.ambiguous, 1);
    }

    #[test]
    fn window_counts_tile() {
        let list: Vec<Resonance> = (0..400).map(|i| res(-0.5, 0.37 * i as f64, 0)).collect();
        let direct = list.iter().filter(|r| r.im >= 12.0 && r.im < 24.0).count();
        let tiled: usize = (12..24).map(|b| weyl_count(&list, 0, b as f64, 0.0)).sum();
        assert_eq!(direct, tiled);
    }
}
