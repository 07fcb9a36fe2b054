//! Decay-rate fits of energy traces and their comparison with the spectral
//! abscissa.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::dynamics::EnergyTrace;
use crate::eigensolve::{spectral_abscissa, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::grid_operators::ConfigTag;

/// Fewest usable samples a fit window may hold.
pub const MIN_FIT_SAMPLES: usize = 10;

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;

/// Least-squares line through `(t, ln E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope `s` of `ln E`; the amplitude rate is `s / 2`.
    pub slope: f64,
    /// RMS of the `ln E` residuals.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Fits `ln E` over the last `window_fraction` of usable samples.
pub fn fit_decay_rate(trace: &EnergyTrace, window_fraction: f64) -> Result<DecayFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(invalid(format!("window fraction must be in (0, 1], got {window_fraction}")));
    }
    let usable: Vec<usize> = trace.usable().iter().enumerate().filter(|(_, u)| **u).map(|(i, _)| i).collect();
    let take = ((usable.len() as f64) * window_fraction).round() as usize;
    if take < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            found: take,
        });
    }
    let idx = &usable[usable.len() - take..];
    let t: Vec<f64> = idx.iter().map(|&i| trace.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| trace.energies[i].ln()).collect();
    let n = t.len() as f64;
    let (tm, ym) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = t.iter().map(|ti| (ti - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - tm) * (yi - ym)).sum();
    if sxx <= 0.0 {
        return Err(invalid("fit window spans no time"));
    }
    let slope = sxy / sxx;
    let rss: f64 = t.iter().zip(&y).map(|(ti, yi)| (yi - ym - slope * (ti - tm)).powi(2)).sum();
    Ok(DecayFit {
        slope,
        residual: (rss / n).sqrt(),
        window: (t[0], t[t.len() - 1]),
        samples: idx.len(),
    })
}

/// Tolerance on an energy slope compared with `2μ`: `max(5% of |2μ|, 0.01)`.
pub fn slope_tolerance(mu: f64) -> f64 {
    (0.05 * (2.0 * mu).abs()).max(0.01)
}

/// Tolerance on `μ ≤ s/2`: `max(5% of |μ|, 0.01)`.
pub fn abscissa_tolerance(mu: f64) -> f64 {
    (0.05 * mu.abs()).max(0.01)
}

/// How a fitted slope relates to `2μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRelation {
    /// `|s - 2μ|` within tolerance.
    Agrees,
    /// The trace decays faster than `2μ` (it does not excite the slowest mode).
    FasterThanAbscissa,
    /// The trace decays slower than `2μ` allows.
    SlowerThanAbscissa,
}

impl fmt::Display for RateRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateRelation::Agrees => "agrees",
            RateRelation::FasterThanAbscissa => "faster",
            RateRelation::SlowerThanAbscissa => "slower",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub config: ConfigTag,
    pub mu: f64,
    pub attaining_eigenvalue: Complex64,
    pub energy_slope: f64,
    /// `energy_slope / 2`.
    pub amplitude_rate: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    pub fit_tol: f64,
    pub relation: RateRelation,
    /// `μ ≤ s/2 + max(5% |μ|, 0.01)`.
    pub bound_holds: bool,
}

impl DecayReport {
    pub fn agreement(&self) -> bool {
        self.relation == RateRelation::Agrees
    }

    /// Flat `key = value` report.
    pub fn write_report<W: Write>(&self, mut w: W) -> io::Result<()> {
        let c = &self.config;
        writeln!(w, "profile = {}", c.profile)?;
        writeln!(w, "region = {}", c.region)?;
        writeln!(w, "grid = {}", c.grid_label())?;
        writeln!(w, "domain = {} x {}", c.grid.lx, c.grid.ly)?;
        writeln!(w, "mu = {:.12e}", self.mu)?;
        writeln!(w, "attaining_eigenvalue = {:.12e}{:+.12e}i", self.attaining_eigenvalue.re, self.attaining_eigenvalue.im)?;
        writeln!(w, "energy_slope = {:.12e}", self.energy_slope)?;
        writeln!(w, "amplitude_rate = {:.12e}", self.amplitude_rate)?;
        writeln!(w, "two_mu = {:.12e}", 2.0 * self.mu)?;
        writeln!(w, "fit_window = {:.6e} {:.6e}", self.fit_window.0, self.fit_window.1)?;
        writeln!(w, "fit_residual = {:.6e}", self.fit_residual)?;
        writeln!(w, "fit_tol = {:.6e}", self.fit_tol)?;
        writeln!(w, "relation = {}", self.relation)?;
        writeln!(w, "agreement = {}", self.agreement())?;
        writeln!(w, "bound_mu_le_half_slope = {}", self.bound_holds)
    }

    pub const SUMMARY_HEADER: &'static str = "profile,region,grid,mu,slope,residual,agreement";

    /// One summary CSV row (fields containing commas are quoted).
    pub fn summary_row(&self) -> String {
        let q = |s: &str| if s.contains(',') || s.contains('"') { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
        format!(
            "{},{},{},{:.12e},{:.12e},{:.6e},{}",
            q(&self.config.profile),
            q(&self.config.region),
            self.config.grid_label(),
            self.mu,
            self.energy_slope,
            self.fit_residual,
            self.agreement()
        )
    }
}

/// Packages the spectral abscissa and the fitted slope of `trace`.
pub fn compare_rates(spectrum: &Spectrum, trace: &EnergyTrace, window_fraction: f64) -> Result<DecayReport> {
    if spectrum.config != trace.config {
        return Err(invalid(format!(
            "spectrum ({}) and trace ({}) come from different configurations",
            spectrum.config, trace.config
        )));
    }
    let a = spectral_abscissa(spectrum)?;
    let fit = fit_decay_rate(trace, window_fraction)?;
    let two_mu = 2.0 * a.mu;
    let tol = slope_tolerance(a.mu);
    let relation = if (fit.slope - two_mu).abs() <= tol {
        RateRelation::Agrees
    } else if fit.slope < two_mu {
        RateRelation::FasterThanAbscissa
    } else {
        RateRelation::SlowerThanAbscissa
    };
    Ok(DecayReport {
        config: trace.config.clone(),
        mu: a.mu,
        attaining_eigenvalue: a.attaining_eigenvalue,
        energy_slope: fit.slope,
        amplitude_rate: 0.5 * fit.slope,
        fit_window: fit.window,
        fit_residual: fit.residual,
        fit_tol: tol,
        relation,
        bound_holds: a.mu <= 0.5 * fit.slope + abscissa_tolerance(a.mu),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{sample_field, DampingProfile, Region};
    use crate::dynamics::{default_dt, modal_initial_state, simulate, ModeIndex};
    use crate::eigensolve::{dense_spectrum, SolveMethod};
    use crate::grid_operators::{DampedPlateOperator, GridSpec};

    fn synthetic(f: impl Fn(f64) -> f64, n: usize) -> EnergyTrace {
        let g = GridSpec::new(1.0, 1.0, 3, 3).unwrap();
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let energies: Vec<f64> = times.iter().map(|t| f(*t)).collect();
        EnergyTrace {
            initial_energy: energies[0],
            dissipated: vec![0.0; n],
            times,
            energies,
            dt: 0.01,
            config: ConfigTag {
                grid: g,
                profile: "1".into(),
                region: "-".into(),
            },
        }
    }

    #[test]
    fn exact_exponential() {
        let tr = synthetic(|t| 7.0 * (-t).exp(), 200);
        let fit = fit_decay_rate(&tr, 0.5).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.samples, 100);
        let flat = fit_decay_rate(&synthetic(|_| 3.0, 50), 0.5).unwrap();
        assert!(flat.slope.abs() < 1e-8);
    }

    #[test]
    fn floor_and_short_traces() {
        let tr = synthetic(|t| (-400.0 * t).exp(), 200);
        // only samples above 1e-14 E0 count: t < 0.0806
        let fit = fit_decay_rate(&tr, 1.0);
        assert!(matches!(fit, Err(Error::InsufficientData { found: 9, .. })));
        assert!(fit_decay_rate(&synthetic(|_| 1.0, 15), 0.5).is_err());
        assert!(fit_decay_rate(&synthetic(|_| 1.0, 15), 0.0).is_err());
    }

    #[test]
    fn tolerances() {
        assert_eq!(slope_tolerance(-0.5), 0.05);
        assert_eq!(slope_tolerance(0.0), 0.01);
        assert_eq!(abscissa_tolerance(-0.5), 0.025);
    }

    fn full_domain(n: usize, c: f64) -> DampedPlateOperator {
        let g = GridSpec::new(1.0, 1.0, n, n).unwrap();
        let f = sample_field(&DampingProfile::Constant(c), &Region::full(&g), &g).unwrap();
        DampedPlateOperator::new(&g, &f).unwrap()
    }

    #[test]
    fn modal_rate_under_constant_damping() {
        let op = full_domain(11, 1.0);
        let spec = dense_spectrum(&op, 1800).unwrap();
        for (n, m) in [(1, 1), (3, 3), (2, 5)] {
            let s0 = modal_initial_state(op.grid(), ModeIndex::new(n, m).unwrap(), 1.0).unwrap();
            let tr = simulate(&op, &s0, default_dt(op.grid()), 6.0, 10).unwrap();
            let r = compare_rates(&spec, &tr, 0.5).unwrap();
            assert!((r.energy_slope + 1.0).abs() <= 0.02, "({n},{m}) slope {}", r.energy_slope);
            assert!(r.agreement());
            assert!(r.bound_holds);
        }
    }

    #[test]
    fn config_mismatch_is_rejected() {
        let op = full_domain(7, 1.0);
        let other = full_domain(7, 2.0);
        let spec = dense_spectrum(&other, 1800).unwrap();
        let s0 = modal_initial_state(op.grid(), ModeIndex::new(1, 1).unwrap(), 1.0).unwrap();
        let tr = simulate(&op, &s0, 1e-3, 0.5, 1).unwrap();
        assert!(compare_rates(&spec, &tr, 0.5).is_err());
        assert_eq!(spec.method, SolveMethod::Dense);
    }

    #[test]
    fn report_text_is_deterministic() {
        let op = full_domain(7, 0.0);
        let spec = dense_spectrum(&op, 1800).unwrap();
        let s0 = modal_initial_state(op.grid(), ModeIndex::new(1, 1).unwrap(), 1.0).unwrap();
        let tr = simulate(&op, &s0, 1e-3, 1.0, 10).unwrap();
        let r = compare_rates(&spec, &tr, 0.5).unwrap();
        assert!(r.energy_slope.abs() < 1e-8 && r.mu.abs() < 1e-8);
        let render = |r: &DecayReport| {
            let mut b = Vec::new();
            r.write_report(&mut b).unwrap();
            String::from_utf8(b).unwrap()
        };
        let again = compare_rates(&spec, &tr, 0.5).unwrap();
        assert_eq!(render(&r), render(&again));
        assert!(render(&r).contains("agreement = true"));
        assert!(r.summary_row().starts_with("0,\"(0, 1) x (0, 1)\",7x7,"));
    }
}
