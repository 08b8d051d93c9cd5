//! CSV writers for traces, sequences, scans and study results.

use std::io::Write;

use crate::error::{Error, Result};
use crate::evolution::MeanNumbers;
use crate::lindblad::LindbladSample;
use crate::montecarlo::MonteCarloReport;
use crate::optimizer::RobustnessCurve;
use crate::semiclassical::ClassicalSample;

fn write_rows<W: Write, const N: usize>(
    w: W,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Columns t, photons, phonons, osc_photons, noise_photons, osc_phonons,
/// noise_phonons.
pub fn write_trace<W: Write>(w: W, times: &[f64], values: &[MeanNumbers]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::invalid("trace", "time and value counts differ"));
    }
    write_rows(
        w,
        ["t", "photons", "phonons", "osc_photons", "noise_photons", "osc_phonons", "noise_phonons"],
        times.iter().zip(values).map(|(&t, m)| {
            [t, m.photons, m.phonons, m.osc_photons, m.noise_photons, m.osc_phonons, m.noise_phonons].map(num)
        }),
    )
}

/// Columns N, index, phase; one row per segment of each sequence.
pub fn write_sequences<W: Write>(w: W, sequences: &[Vec<f64>]) -> Result<()> {
    write_rows(
        w,
        ["N", "index", "phase"],
        sequences.iter().flat_map(|s| {
            s.iter()
                .enumerate()
                .map(move |(k, &p)| [s.len().to_string(), (k + 1).to_string(), num(p)])
        }),
    )
}

/// Columns deviation, phonons.
pub fn write_scan<W: Write>(w: W, curve: &RobustnessCurve) -> Result<()> {
    write_rows(
        w,
        ["deviation", "phonons"],
        curve.deviations.iter().zip(&curve.phonons).map(|(&a, &n)| [num(a), num(n)]),
    )
}

/// Columns rel_std, mode, mean, std.
pub fn write_montecarlo<W: Write>(w: W, reports: &[MonteCarloReport]) -> Result<()> {
    write_rows(
        w,
        ["rel_std", "mode", "mean", "std"],
        reports
            .iter()
            .map(|r| [r.level_percent.to_string(), r.mode.name().to_string(), num(r.mean), num(r.std)]),
    )
}

/// Columns t, Jx, Jy, Jz, photons, phonons, trace, leakage.
pub fn write_lindblad<W: Write>(w: W, samples: &[LindbladSample]) -> Result<()> {
    write_rows(
        w,
        ["t", "Jx", "Jy", "Jz", "photons", "phonons", "trace", "leakage"],
        samples
            .iter()
            .map(|s| [s.t, s.jx, s.jy, s.jz, s.photons, s.phonons, s.trace, s.leakage].map(num)),
    )
}

/// Columns t, phase, intensity (|α|²/n_p), beta_re, beta_im.
pub fn write_classical<W: Write>(w: W, samples: &[ClassicalSample]) -> Result<()> {
    write_rows(
        w,
        ["t", "phase", "intensity", "beta_re", "beta_im"],
        samples
            .iter()
            .map(|s| [s.t, s.phase, s.intensity, s.beta_re, s.beta_im].map(num)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rows() {
        let mut buf = Vec::new();
        write_sequences(&mut buf, &[vec![0.0, 1.5, 0.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "N,index,phase");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "3,2,1.5e0");
    }

    #[test]
    fn trace_roundtrip() {
        let m = MeanNumbers {
            photons: 0.1,
            phonons: 2.0,
            osc_photons: 0.05,
            noise_photons: 0.05,
            osc_phonons: 1.5,
            noise_phonons: 0.5,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &[0.25], &[m]).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap().len(), 7);
        let row = r.records().next().unwrap().unwrap();
        let vals: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(vals, vec![0.25, 0.1, 2.0, 0.05, 0.05, 1.5, 0.5]);
        assert!(write_trace(Vec::new(), &[0.0, 1.0], &[m]).is_err());
    }
}
