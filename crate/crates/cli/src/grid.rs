//! Parsing of time values, ranges and phase choices given on the command
//! line. Times accept a `tau` suffix resolved against the swap time.

use std::f64::consts::TAU;

use optomech::optimizer::{lossless_phases, optimal_phase, optimize_sequence};
use optomech::DerivedParams;

/// `12tau`, `0.5 tau`, `tau` or a plain number in units of 1/ωm.
pub fn parse_time(text: &str, tau0: f64) -> Result<f64, String> {
    let t = text.trim();
    let (num, unit) = match t.strip_suffix("tau") {
        Some(rest) => (rest.trim(), tau0),
        None => (t, 1.0),
    };
    let value = if num.is_empty() {
        1.0
    } else {
        num.parse::<f64>().map_err(|_| format!("cannot read time `{text}`"))?
    };
    if !value.is_finite() {
        return Err(format!("time `{text}` is not finite"));
    }
    Ok(value * unit)
}

/// `start:end:step`, inclusive of `end` when it lies on the grid, or a
/// single value.
pub fn parse_range(text: &str, tau0: f64) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_time(single, tau0)?]),
        [a, b, s] => {
            let (start, end, step) = (parse_time(a, tau0)?, parse_time(b, tau0)?, parse_time(s, tau0)?);
            if !(step > 0.0) {
                return Err(format!("range `{text}`: step must be positive"));
            }
            if end < start {
                return Err(format!("range `{text}`: end precedes start"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            if count > 10_000_000 {
                return Err(format!("range `{text}` has too many points"));
            }
            // snap round-off so that grids through zero contain 0 exactly
            Ok((0..=count)
                .map(|k| start + k as f64 * step)
                .map(|x| if x.abs() < 1e-9 * step { 0.0 } else { x })
                .collect())
        }
        _ => Err(format!("range `{text}`: expected start:end:step")),
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("cannot read list entry `{s}`")))
        .collect()
}

/// Segment phases for an N-segment run. `optimal` uses the closed form for
/// N = 3 and the numerical optimum otherwise; `lossless` the Γ = 0 phases;
/// a single number a constant phase; a list of N numbers is taken as is.
pub fn resolve_phases(text: &str, n: usize, d: &DerivedParams) -> Result<Vec<f64>, optomech::Error> {
    let bad = |reason: String| optomech::Error::Config(format!("--phase: {reason}"));
    match text.trim() {
        "optimal" if n == 3 => Ok(vec![0.0, optimal_phase(d.loss_asymmetry)?.rem_euclid(TAU), 0.0]),
        "optimal" => optimize_sequence(n, d),
        "lossless" => lossless_phases(n),
        "constant" => Ok(vec![0.0; n]),
        list => {
            let values: Vec<f64> = parse_list(list).map_err(bad)?;
            match values.len() {
                1 => Ok(vec![values[0]; n]),
                k if k == n => Ok(values),
                k => Err(bad(format!("{k} phases given for N = {n}"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times() {
        assert_eq!(parse_time("12tau", 2.0).unwrap(), 24.0);
        assert_eq!(parse_time("tau", 2.0).unwrap(), 2.0);
        assert_eq!(parse_time("0.5 tau", 2.0).unwrap(), 1.0);
        assert_eq!(parse_time("3", 2.0).unwrap(), 3.0);
        assert!(parse_time("x", 2.0).is_err());
    }

    #[test]
    fn ranges() {
        let g = parse_range("0:1tau:0.25tau", 4.0).unwrap();
        assert_eq!(g, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let g = parse_range("-0.3:0.3:0.01", 1.0).unwrap();
        assert_eq!(g.len(), 61);
        assert!((g[60] - 0.3).abs() < 1e-12);
        assert!(g.contains(&0.0));
        assert_eq!(parse_range("2", 1.0).unwrap(), vec![2.0]);
        assert!(parse_range("1:0:0.1", 1.0).is_err());
        assert!(parse_range("0:1:0", 1.0).is_err());
        assert!(parse_range("0:1", 1.0).is_err());
    }

    #[test]
    fn phases() {
        let d = optomech::derive(&optomech::SystemParams::preset("fig3").unwrap()).unwrap();
        assert_eq!(resolve_phases("0", 3, &d).unwrap(), vec![0.0; 3]);
        assert_eq!(resolve_phases("0,1,0", 3, &d).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(resolve_phases("0,1", 3, &d).is_err());
        let opt = resolve_phases("optimal", 3, &d).unwrap();
        assert!((opt[1] - optimal_phase(d.loss_asymmetry).unwrap()).abs() < 1e-15);
        assert_eq!(resolve_phases("lossless", 5, &d).unwrap().len(), 5);
    }
}
