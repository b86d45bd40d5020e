//! Exact resonances of constant-curvature surfaces from their Laplace
//! spectrum, and synthetic spectra obeying Weyl's law.

use crate::error::{Error, Result};
use crate::hyperbolic::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    File,
    Synthetic,
}

/// Eigenvalues of the hyperbolic Laplacian on a compact surface of given area.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceSpectrum {
    area: f64,
    eigenvalues: Vec<f64>,
    source: SpectrumSource,
}

impl LaplaceSpectrum {
    /// Validates: positive area, sorted non-negative eigenvalues starting with 0.
    pub fn new(area: f64, eigenvalues: Vec<f64>, source: SpectrumSource) -> Result<Self> {
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::Spectrum(format!("area must be positive, got {area}")));
        }
        if eigenvalues.first() != Some(&0.0) {
            return Err(Error::Spectrum("the first eigenvalue must be 0".into()));
        }
        if eigenvalues.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(Error::Spectrum("eigenvalues must be finite and non-negative".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Spectrum("eigenvalues must be sorted".into()));
        }
        Ok(LaplaceSpectrum { area, eigenvalues, source })
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    /// `#{l : mu_l < mu}`.
    pub fn count_below(&self, mu: f64) -> usize {
        self.eigenvalues.partition_point(|m| *m < mu)
    }
}

/// Eigenvalues `mu_l = l / a` with `a = area / 4 pi`, so that
/// `#{mu_l < mu} = ceil(a mu)`; entries after the first are moved by
/// `jitter * U(-1/2, 1/2) / a` and re-sorted.
pub fn synthetic_weyl_spectrum(area: f64, mu_max: f64, jitter: f64, seed: u64) -> Result<LaplaceSpectrum> {
    if !(area > 0.0) || !(mu_max > 0.0) {
        return Err(Error::Spectrum("area and mu_max must be positive".into()));
    }
    if !(0.0..=1.0).contains(&jitter) {
        return Err(Error::Spectrum(format!("jitter must lie in [0, 1], got {jitter}")));
    }
    let a = area / (4.0 * PI);
    let n = (a * mu_max).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eigs: Vec<f64> = (0..=n)
        .map(|l| {
            let base = l as f64 / a;
            if l == 0 || jitter == 0.0 {
                base
            } else {
                (base + jitter * (rng.random::<f64>() - 0.5) / a).max(0.0)
            }
        })
        .collect();
    eigs.sort_by(f64::total_cmp);
    LaplaceSpectrum::new(area, eigs, SpectrumSource::Synthetic)
}

/// Band label of a resonance: band index, the finitely many exceptional
/// values, or none (values not attached to a band).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BandLabel {
    Band(usize),
    Exceptional,
    Unassigned,
}

impl Serialize for BandLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BandLabel::Band(k) => s.serialize_u64(*k as u64),
            BandLabel::Exceptional => s.serialize_str("exceptional"),
            BandLabel::Unassigned => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for BandLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(u64),
            Text(String),
            Null(()),
        }
        match Option::<Raw>::deserialize(d)? {
            None | Some(Raw::Null(())) => Ok(BandLabel::Unassigned),
            Some(Raw::Index(k)) => Ok(BandLabel::Band(k as usize)),
            Some(Raw::Text(t)) if t == "exceptional" => Ok(BandLabel::Exceptional),
            Some(Raw::Text(t)) => Err(serde::de::Error::custom(format!("unknown band label {t:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Inverted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub re: f64,
    pub im: f64,
    pub band: BandLabel,
    pub provenance: Provenance,
}

impl Resonance {
    pub fn z(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn conj(&self) -> Self {
        Resonance { im: -self.im + 0.0, ..*self }
    }
}

pub type ResonanceList = Vec<Resonance>;

/// Resonances `-1/2 - k +- i sqrt(mu_l - 1/4)` for `k <= k_max` and every
/// eigenvalue (two real values `-1/2 - k +- sqrt(1/4 - mu_l)` when `mu_l < 1/4`,
/// labelled exceptional), followed by `z_n = -n` for `1 <= n <= n_max`.
pub fn resonances_from_laplacian(spec: &LaplaceSpectrum, k_max: usize, n_max: usize) -> ResonanceList {
    let mut out = Vec::with_capacity(2 * (k_max + 1) * spec.eigenvalues.len() + n_max);
    for k in 0..=k_max {
        let re = -0.5 - k as f64;
        for &mu in &spec.eigenvalues {
            if mu >= 0.25 {
                let im = (mu - 0.25).sqrt();
                let band = BandLabel::Band(k);
                out.push(Resonance { re, im, band, provenance: Provenance::Analytic });
                out.push(Resonance { re, im: -im + 0.0, band, provenance: Provenance::Analytic });
            } else {
                let r = (0.25 - mu).sqrt();
                for x in [re + r, re - r] {
                    out.push(Resonance { re: x, im: 0.0, band: BandLabel::Exceptional, provenance: Provenance::Analytic });
                }
            }
        }
    }
    for n in 1..=n_max {
        out.push(Resonance {
            re: -(n as f64),
            im: 0.0,
            band: BandLabel::Unassigned,
            provenance: Provenance::Analytic,
        });
    }
    out
}

/// True when every entry has its conjugate in the list (matched one to one
/// within `tol`).
pub fn is_conjugation_closed(list: &[Resonance], tol: f64) -> bool {
    let mut used = vec![false; list.len()];
    for (i, r) in list.iter().enumerate() {
        if used[i] {
            continue;
        }
        if r.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..list.len()).find(|&j| {
            !used[j] && j != i && (list[j].re - r.re).abs() <= tol && (list[j].im + r.im).abs() <= tol
        });
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(eigs: Vec<f64>) -> LaplaceSpectrum {
        LaplaceSpectrum::new(4.0 * PI, eigs, SpectrumSource::File).unwrap()
    }

    #[test]
    fn zero_eigenvalue_gives_zero_and_minus_one() {
        let r = resonances_from_laplacian(&spec(vec![0.0]), 0, 0);
        let re: Vec<f64> = r.iter().map(|x| x.re).collect();
        assert_eq!(re, vec![0.0, -1.0]);
        assert!(r.iter().all(|x| x.band == BandLabel::Exceptional && x.im == 0.0));
    }

    #[test]
    fn quarter_is_a_double_root() {
        let r = resonances_from_laplacian(&spec(vec![0.0, 0.25]), 2, 0);
        let at: Vec<&Resonance> = r.iter().filter(|x| x.band == BandLabel::Band(2)).collect();
        assert_eq!(at.len(), 2);
        assert!(at.iter().all(|x| x.re == -2.5 && x.im == 0.0));
    }

    #[test]
    fn mu_two_band_one() {
        let r = resonances_from_laplacian(&spec(vec![0.0, 2.0]), 1, 0);
        let hit: Vec<&Resonance> = r.iter().filter(|x| x.band == BandLabel::Band(1)).collect();
        assert_eq!(hit.len(), 2);
        for x in hit {
            assert_eq!(x.re, -1.5);
            assert_abs_diff_eq!(x.im.abs(), 7f64.sqrt() / 2.0, epsilon = 1e-15);
        }
        assert!(is_conjugation_closed(&r, 0.0));
    }

    #[test]
    fn integer_resonances_are_listed_separately() {
        let r = resonances_from_laplacian(&spec(vec![0.0]), 0, 3);
        let tail: Vec<f64> = r.iter().filter(|x| x.band == BandLabel::Unassigned).map(|x| x.re).collect();
        assert_eq!(tail, vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn invalid_spectra_are_rejected() {
        assert!(LaplaceSpectrum::new(1.0, vec![0.5], SpectrumSource::File).is_err());
        assert!(LaplaceSpectrum::new(1.0, vec![0.0, 2.0, 1.0], SpectrumSource::File).is_err());
        assert!(LaplaceSpectrum::new(0.0, vec![0.0], SpectrumSource::File).is_err());
    }

    #[test]
    fn staircase_counts() {
        let s = synthetic_weyl_spectrum(4.0 * PI, 400.0, 0.0, 1).unwrap();
        assert_eq!(s.count_below(400.0), 400);
        assert_eq!(s.count_below(10.5), 11);
        let j = synthetic_weyl_spectrum(4.0 * PI, 400.0, 0.5, 1).unwrap();
        let n = j.count_below(400.0) as i64;
        assert!((n - 400).abs() <= 1);
        assert_eq!(j, synthetic_weyl_spectrum(4.0 * PI, 400.0, 0.5, 1).unwrap());
    }

    #[test]
    fn band_label_json() {
        let r = Resonance { re: -0.5, im: 1.0, band: BandLabel::Band(0), provenance: Provenance::Analytic };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"re":-0.5,"im":1.0,"band":0,"provenance":"analytic"}"#);
        for label in [BandLabel::Band(3), BandLabel::Exceptional, BandLabel::Unassigned] {
            let x = Resonance { band: label, ..r };
            let back: Resonance = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
            assert_eq!(back, x);
        }
    }
}
