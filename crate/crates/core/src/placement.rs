//! Damping placement study: candidate regions, their spectral abscissae and
//! optional per-mode energy evidence, ranked by `μ`.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::analysis::{compare_rates, DecayReport, DEFAULT_WINDOW_FRACTION};
use crate::damping::{sample_field, DampingProfile, Region};
use crate::dynamics::{default_dt, default_t_final, modal_initial_state, simulate, EnergyTrace, ModeIndex};
use crate::eigensolve::{compute_spectrum, spectral_abscissa, AbscissaResult, EigenMethod};
use crate::error::{invalid, Result};
use crate::grid_operators::{DampedPlateOperator, GridSpec};

/// Abscissae closer than this are ranked as ties.
const TIE_QUANTUM: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// All `width x height` placements with corners on the `stride` lattice that
/// fit in `[0, lx] x [0, ly]`, in row-major order (`x0` fastest).
pub fn enumerate_regions(lx: f64, ly: f64, width: f64, height: f64, stride: f64) -> Result<Vec<Region>> {
    let finite = [lx, ly, width, height, stride].iter().all(|v| v.is_finite());
    if !finite || width <= 0.0 || height <= 0.0 || stride <= 0.0 {
        return Err(invalid("width, height and stride must be positive and finite"));
    }
    if width > lx + 1e-12 || height > ly + 1e-12 {
        return Err(invalid(format!("a {width} x {height} region does not fit in the {lx} x {ly} domain")));
    }
    let starts = |len: f64, size: f64| {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let x0 = snap(k as f64 * stride);
            if x0 + size > len + 1e-9 {
                break;
            }
            out.push((x0, snap(x0 + size).min(len)));
            k += 1;
        }
        out
    };
    let xs = starts(lx, width);
    let ys = starts(ly, height);
    let mut regions = Vec::with_capacity(xs.len() * ys.len());
    for &(y0, y1) in &ys {
        for &(x0, x1) in &xs {
            regions.push(Region::new(x0, x1, y0, y1)?);
        }
    }
    Ok(regions)
}

/// Energy evidence requested for every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceParams {
    pub modes: Vec<ModeIndex>,
    pub amplitude: f64,
    /// Defaults to [`default_dt`].
    pub dt: Option<f64>,
    /// Defaults to [`default_t_final`] at the candidate's `μ`.
    pub t_final: Option<f64>,
    pub sample_every: usize,
    pub window_fraction: f64,
}

impl TraceParams {
    pub fn new(modes: Vec<ModeIndex>) -> Self {
        TraceParams {
            modes,
            amplitude: 1.0,
            dt: None,
            t_final: None,
            sample_every: 10,
            window_fraction: DEFAULT_WINDOW_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateStatus {
    Ok,
    /// The region contains no grid node, so the damping field vanishes.
    EmptyCoverage,
    Failed(String),
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateStatus::Ok => f.write_str("ok"),
            CandidateStatus::EmptyCoverage => f.write_str("empty-coverage"),
            CandidateStatus::Failed(_) => f.write_str("failed"),
        }
    }
}

/// Simulated evidence for one `(candidate, mode)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEvidence {
    pub mode: ModeIndex,
    pub trace: EnergyTrace,
    /// `E(T) / E0`.
    pub final_energy_ratio: f64,
    /// `None` when the trace is too short or falls under the noise floor.
    pub report: Option<DecayReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub region: Region,
    pub status: CandidateStatus,
    pub abscissa: Option<AbscissaResult>,
    pub evidence: Vec<ModeEvidence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSweep {
    pub grid: GridSpec,
    pub profile: String,
    pub candidates: Vec<Region>,
    pub results: Vec<CandidateResult>,
    /// Candidate indices, best (most negative `μ`) first; failed candidates last.
    pub ranking: Vec<usize>,
}

fn evaluate(
    grid: &GridSpec,
    profile: &DampingProfile,
    region: &Region,
    method: &EigenMethod,
    traces: Option<&TraceParams>,
) -> CandidateResult {
    let failed = |msg: String| CandidateResult {
        region: *region,
        status: CandidateStatus::Failed(msg),
        abscissa: None,
        evidence: Vec::new(),
    };
    let field = match sample_field(profile, region, grid) {
        Ok(f) => f,
        Err(e) => return failed(e.to_string()),
    };
    let status = if field.is_empty() { CandidateStatus::EmptyCoverage } else { CandidateStatus::Ok };
    let run = || -> Result<(AbscissaResult, Vec<ModeEvidence>)> {
        let op = DampedPlateOperator::new(grid, &field)?;
        let spectrum = compute_spectrum(&op, method)?;
        let abscissa = spectral_abscissa(&spectrum)?;
        let mut evidence = Vec::new();
        if let Some(p) = traces {
            let dt = p.dt.unwrap_or_else(|| default_dt(grid));
            let t_final = p.t_final.unwrap_or_else(|| default_t_final(abscissa.mu));
            for &mode in &p.modes {
                let s0 = modal_initial_state(grid, mode, p.amplitude)?;
                let trace = simulate(&op, &s0, dt, t_final, p.sample_every)?;
                let ratio = trace.energies.last().copied().unwrap_or(0.0) / trace.initial_energy;
                let report = compare_rates(&spectrum, &trace, p.window_fraction).ok();
                evidence.push(ModeEvidence {
                    mode,
                    trace,
                    final_energy_ratio: ratio,
                    report,
                });
            }
        }
        Ok((abscissa, evidence))
    };
    match run() {
        Ok((abscissa, evidence)) => CandidateResult {
            region: *region,
            status,
            abscissa: Some(abscissa),
            evidence,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn quantized(mu: f64) -> i64 {
    (mu / TIE_QUANTUM).round() as i64
}

/// Evaluates every candidate (concurrently) and ranks them by `μ`, ties
/// broken by the lexicographic order of the region corners.
pub fn sweep_placements(
    grid: &GridSpec,
    profile: &DampingProfile,
    candidates: &[Region],
    method: &EigenMethod,
    traces: Option<&TraceParams>,
) -> Result<PlacementSweep> {
    if candidates.is_empty() {
        return Err(invalid("placement sweep needs at least one candidate region"));
    }
    if let Some(p) = traces {
        for m in &p.modes {
            modal_initial_state(grid, *m, p.amplitude)?;
        }
    }
    let results: Vec<CandidateResult> = candidates
        .par_iter()
        .map(|r| evaluate(grid, profile, r, method, traces))
        .collect();
    let mut ranking: Vec<usize> = (0..results.len()).collect();
    ranking.sort_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        match (ra.abscissa, rb.abscissa) {
            (Some(x), Some(y)) => quantized(x.mu).cmp(&quantized(y.mu)).then(ra.region.lex_cmp(&rb.region)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => a.cmp(&b),
        }
        .then(a.cmp(&b))
    });
    Ok(PlacementSweep {
        grid: *grid,
        profile: profile.to_string(),
        candidates: candidates.to_vec(),
        results,
        ranking,
    })
}

impl PlacementSweep {
    /// Candidate indices ordered by `E(T)/E0` for `mode`, lowest first.
    pub fn energy_ordering(&self, mode: ModeIndex) -> Vec<usize> {
        let ratio = |i: usize| self.results[i].evidence.iter().find(|e| e.mode == mode).map(|e| e.final_energy_ratio);
        let mut idx: Vec<usize> = (0..self.results.len()).filter(|&i| ratio(i).is_some()).collect();
        idx.sort_by(|&a, &b| {
            ratio(a)
                .unwrap()
                .total_cmp(&ratio(b).unwrap())
                .then(self.results[a].region.lex_cmp(&self.results[b].region))
        });
        idx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub rank: usize,
    pub region: Region,
    pub mu: f64,
    pub status: CandidateStatus,
    /// Fitted energy slope per traced mode.
    pub slopes: Vec<(ModeIndex, Option<f64>)>,
}

/// Ranked table plus notes on failed candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
    pub notes: Vec<String>,
}

pub const SWEEP_SUMMARY_HEADER: &str = "x0,x1,y0,y1,mu,rank,status";

impl RankTable {
    /// Sweep summary CSV: ranked rows, then failed candidates with empty
    /// `mu` and `rank`.
    pub fn write_csv<W: Write>(&self, sweep: &PlacementSweep, mut w: W) -> io::Result<()> {
        writeln!(w, "{SWEEP_SUMMARY_HEADER}")?;
        for r in &self.rows {
            let g = &r.region;
            writeln!(w, "{},{},{},{},{:.12e},{},{}", g.x0, g.x1, g.y0, g.y1, r.mu, r.rank, r.status)?;
        }
        for res in sweep.results.iter().filter(|r| r.abscissa.is_none()) {
            let g = &res.region;
            writeln!(w, "{},{},{},{},,,{}", g.x0, g.x1, g.y0, g.y1, res.status)?;
        }
        Ok(())
    }
}

/// Table in ranking order; failed candidates become notes.
pub fn rank_report(sweep: &PlacementSweep) -> RankTable {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &i in &sweep.ranking {
        let r = &sweep.results[i];
        match (&r.status, r.abscissa) {
            (CandidateStatus::Failed(msg), _) => notes.push(format!("candidate {} failed: {msg}", r.region)),
            (status, Some(a)) => rows.push(RankRow {
                rank: rows.len() + 1,
                region: r.region,
                mu: a.mu,
                status: status.clone(),
                slopes: r.evidence.iter().map(|e| (e.mode, e.report.as_ref().map(|d| d.energy_slope))).collect(),
            }),
            (_, None) => notes.push(format!("candidate {} has no abscissa", r.region)),
        }
    }
    RankTable { rows, notes }
}

/// A fixed list of candidate regions with the placement expected to win.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPreset {
    pub name: &'static str,
    pub regions: Vec<Region>,
    pub expected_best: Region,
    pub expectation: &'static str,
    /// Mode whose energy ordering is compared with the expectation.
    pub mode: ModeIndex,
}

fn r(x0: f64, x1: f64, y0: f64, y1: f64) -> Region {
    Region { x0, x1, y0, y1 }
}

/// The two five-region lists on the unit square.
pub fn presets() -> Vec<PlacementPreset> {
    vec![
        PlacementPreset {
            name: "width-0.4",
            regions: vec![
                r(0.0, 0.4, 0.0, 0.4),
                r(0.3, 0.7, 0.3, 0.7),
                r(0.5, 0.9, 0.4, 0.8),
                r(0.1, 0.5, 0.5, 0.9),
                r(0.3, 0.7, 0.0, 0.4),
            ],
            expected_best: r(0.3, 0.7, 0.3, 0.7),
            expectation: "center placement decays fastest",
            mode: ModeIndex { n: 8, m: 8 },
        },
        PlacementPreset {
            name: "width-0.3",
            regions: vec![
                r(0.0, 0.3, 0.0, 0.3),
                r(0.35, 0.65, 0.35, 0.65),
                r(0.1, 0.4, 0.6, 0.9),
                r(0.7, 1.0, 0.5, 0.8),
                r(0.7, 1.0, 0.1, 0.4),
            ],
            expected_best: r(0.0, 0.3, 0.0, 0.3),
            expectation: "corner placement decays fastest",
            mode: ModeIndex { n: 8, m: 8 },
        },
    ]
}

pub fn preset(name: &str) -> Option<PlacementPreset> {
    presets().into_iter().find(|p| p.name == name)
}

/// Whether a preset's expectation shows up in a completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationCheck {
    pub expectation: String,
    pub energy_best: Option<Region>,
    pub mu_best: Option<Region>,
    pub observed: bool,
}

/// Compares the preset's expected best region with the lowest final energy
/// for the preset mode (falling back to the `μ` ranking when no traces ran).
pub fn check_expectation(p: &PlacementPreset, sweep: &PlacementSweep) -> ExpectationCheck {
    let energy_best = sweep.energy_ordering(p.mode).first().map(|&i| sweep.results[i].region);
    let mu_best = sweep
        .ranking
        .first()
        .filter(|&&i| sweep.results[i].abscissa.is_some())
        .map(|&i| sweep.results[i].region);
    let best = energy_best.or(mu_best);
    ExpectationCheck {
        expectation: p.expectation.to_string(),
        energy_best,
        mu_best,
        observed: best == Some(p.expected_best),
    }
}
