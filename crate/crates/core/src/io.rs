//! File formats: band-edge tables, Laplace spectra, resonance lists,
//! correlation series and orbit dumps.

use crate::birkhoff::BandEdges;
use crate::correlation::CorrelationSeries;
use crate::error::{Error, Result};
use crate::resonances::{LaplaceSpectrum, Resonance, SpectrumSource};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    k: usize,
    gamma_minus: f64,
    gamma_plus: f64,
    #[serde(rename = "T")]
    horizon: f64,
    n_orbits: usize,
    extrapolation_error: f64,
    converged: bool,
}

pub fn write_band_edges<W: Write>(out: W, edges: &[BandEdges]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in edges {
        w.serialize(EdgeRow {
            k: e.k,
            gamma_minus: e.gamma_minus,
            gamma_plus: e.gamma_plus,
            horizon: e.horizon,
            n_orbits: e.n_orbits,
            extrapolation_error: e.extrapolation_error,
            converged: e.converged,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Band intervals `(k, gamma_minus, gamma_plus)` from a band-edge table.
pub fn read_band_edges(path: &Path) -> Result<Vec<crate::stats::BandInterval>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<EdgeRow>() {
        let row = row?;
        out.push(crate::stats::BandInterval { k: row.k, gamma_minus: row.gamma_minus, gamma_plus: row.gamma_plus });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SpectrumRow {
    index: usize,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumMeta {
    area: f64,
}

/// Writes `index,mu` rows and the area sidecar.
pub fn write_spectrum(path: &Path, spec: &LaplaceSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (index, mu) in spec.eigenvalues().iter().enumerate() {
        w.serialize(SpectrumRow { index, mu: *mu })?;
    }
    w.flush()?;
    write_json(&sidecar_path(path), &SpectrumMeta { area: spec.area() })
}

/// Reads a spectrum; the area comes from `area` or else from the sidecar.
pub fn read_spectrum(path: &Path, area: Option<f64>) -> Result<LaplaceSpectrum> {
    let mut r = csv::Reader::from_path(path)?;
    let mut mus = Vec::new();
    for row in r.deserialize::<SpectrumRow>() {
        mus.push(row?.mu);
    }
    let area = match area {
        Some(a) => a,
        None => {
            let meta = sidecar_path(path);
            let value: serde_json::Value = read_json(&meta).map_err(|_| {
                Error::Spectrum(format!("no area given and no readable sidecar {}", meta.display()))
            })?;
            value
                .get("area")
                .and_then(|a| a.as_f64())
                .ok_or_else(|| Error::Spectrum(format!("sidecar {} lacks a numeric area", meta.display())))?
        }
    };
    LaplaceSpectrum::new(area, mus, SpectrumSource::File)
}

pub fn write_resonances(path: &Path, list: &[Resonance]) -> Result<()> {
    write_json(path, &list)
}

pub fn read_resonances(path: &Path) -> Result<Vec<Resonance>> {
    read_json(path)
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    t: f64,
    #[serde(rename = "C")]
    c: f64,
    stderr: f64,
}

pub fn write_series<W: Write>(out: W, series: &CorrelationSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (m, (c, e)) in series.values.iter().zip(&series.stderr).enumerate() {
        w.serialize(SeriesRow { t: m as f64 * series.dt, c: *c, stderr: *e })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,C,stderr` table with uniformly spaced times starting at 0.
pub fn read_series(path: &Path) -> Result<CorrelationSeries> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<SeriesRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.len() < 2 {
        return Err(Error::Input("a series needs at least two rows".into()));
    }
    let dt = rows[1].t - rows[0].t;
    if rows[0].t != 0.0 || !(dt > 0.0) {
        return Err(Error::Input("series times must start at 0 and increase".into()));
    }
    for (m, row) in rows.iter().enumerate() {
        if (row.t - m as f64 * dt).abs() > 1e-9 * (1.0 + row.t.abs()) {
            return Err(Error::Input(format!("row {m}: times are not uniformly spaced")));
        }
    }
    Ok(CorrelationSeries {
        dt,
        values: rows.iter().map(|r| r.c).collect(),
        stderr: rows.iter().map(|r| r.stderr).collect(),
        n_samples: 0,
        u: String::new(),
        v: String::new(),
    })
}

/// One line of an orbit dump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub u: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

pub fn write_orbit<W: Write>(out: W, rows: &[OrbitRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of any serialisable record type as CSV with a header.
pub fn write_table<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip() {
        let dir = std::env::temp_dir().join(format!("rb-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.csv");
        let s = CorrelationSeries {
            dt: 0.05,
            values: vec![1.0, 0.5, -0.25],
            stderr: vec![0.0, 0.01, 0.02],
            n_samples: 0,
            u: String::new(),
            v: String::new(),
        };
        write_series(File::create(&path).unwrap(), &s).unwrap();
        assert_eq!(read_series(&path).unwrap(), s);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn spectrum_round_trip() {
        let dir = std::env::temp_dir().join(format!("rb-io-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mu.csv");
        let spec = crate::resonances::synthetic_weyl_spectrum(8.0, 30.0, 0.3, 4).unwrap();
        write_spectrum(&path, &spec).unwrap();
        let back = read_spectrum(&path, None).unwrap();
        assert_eq!(back.eigenvalues(), spec.eigenvalues());
        assert_eq!(back.area(), 8.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
