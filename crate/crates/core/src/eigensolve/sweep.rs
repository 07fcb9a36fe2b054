use num_complex::Complex64;
use rayon::prelude::*;

use super::arnoldi::{shift_invert_pairs, ArnoldiOptions, EigenPair};
use super::shifted::ShiftedSystem;
use super::{AbscissaResult, SolveMethod, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::grid_operators::{DampedPlateOperator, PlateState};
use crate::linalg::{cdot, cnorm};

type C = Complex64;

/// Which part of the imaginary axis the shift sweep covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPlan {
    /// Shifts cover every undamped frequency, so the result is the whole
    /// spectrum and eigenvalue counts are verified per cluster.
    Full,
    /// Shifts only at the lowest `n` distinct undamped frequencies.
    Lowest(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub arnoldi: ArnoldiOptions,
    pub plan: SweepPlan,
    /// Target number of undamped frequencies per shift.
    pub chunk: usize,
    /// Extra eigenvalues requested per shift beyond the chunk size.
    pub margin: usize,
    /// Retries (each doubling the margin) for clusters whose count is short.
    pub max_retries: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            arnoldi: ArnoldiOptions::default(),
            plan: SweepPlan::Full,
            chunk: 10,
            margin: 4,
            max_retries: 4,
        }
    }
}

/// Minimum distance of a shift from the imaginary axis.
const SHIFT_OFFSET: f64 = 1e-2;
/// Relative distance under which two eigenvalues are the same value.
const DEDUP_TOL: f64 = 1e-7;
/// Eigenvectors closer than this (sine of angle) to a kept one are duplicates.
const INDEPENDENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
    count: usize,
}

/// Undamped frequencies `Λ_h`, ascending.
fn frequencies(op: &DampedPlateOperator) -> Vec<f64> {
    let mut f: Vec<f64> = op.grid().mode_frequencies().into_iter().map(|(_, _, l)| l).collect();
    f.sort_by(f64::total_cmp);
    f
}

/// Groups sorted frequencies, starting a new group when the gap exceeds `gap`.
fn group(freqs: &[f64], gap: f64) -> Vec<Band> {
    let mut out: Vec<Band> = Vec::new();
    for &l in freqs {
        match out.last_mut() {
            Some(b) if l - b.hi <= gap => {
                b.hi = l;
                b.count += 1;
            }
            _ => out.push(Band { lo: l, hi: l, count: 1 }),
        }
    }
    out
}

fn solve_at(op: &DampedPlateOperator, shift: C, k: usize, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let mut s = shift;
    for attempt in 0..4 {
        match ShiftedSystem::factor(op, s) {
            Ok(sys) => return Ok(shift_invert_pairs(op, &sys, k, opts)),
            Err(Error::ShiftFailure { .. }) => {
                let d = SHIFT_OFFSET * (attempt + 1) as f64;
                s = shift + C::new(-0.37 * d, 0.61 * d);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::ShiftFailure { shift })
}

/// Collapses repeated eigenvalues while keeping genuine multiplicities:
/// values within `DEDUP_TOL` form a cluster, and inside a cluster only
/// pairs with linearly independent eigenvectors are kept.
fn dedup(mut pairs: Vec<EigenPair>) -> Vec<EigenPair> {
    pairs.sort_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im).then(a.lambda.re.total_cmp(&b.lambda.re)));
    let n = pairs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (pairs[i].lambda, pairs[j].lambda);
            let tol = DEDUP_TOL * a.norm().max(b.norm()).max(1.0);
            if b.im - a.im > tol {
                break;
            }
            if (a - b).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[rj] = ri;
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        clusters[r].push(i);
    }
    let mut keep = Vec::new();
    for mut members in clusters.into_iter().filter(|c| !c.is_empty()) {
        members.sort_by(|&a, &b| pairs[a].residual.total_cmp(&pairs[b].residual).then(a.cmp(&b)));
        let mut basis: Vec<Vec<C>> = Vec::new();
        for i in members {
            let mut w = pairs[i].vector.clone();
            for _ in 0..2 {
                for q in &basis {
                    let c = cdot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nw = cnorm(&w);
            if nw > INDEPENDENCE_TOL {
                w.iter_mut().for_each(|z| *z /= nw);
                basis.push(w);
                keep.push(i);
            }
        }
    }
    keep.sort_unstable();
    let mut out = Vec::with_capacity(keep.len());
    let mut it = keep.into_iter().peekable();
    for (i, p) in pairs.into_iter().enumerate() {
        if it.peek() == Some(&i) {
            it.next();
            out.push(p);
        }
    }
    out
}

/// Merges upper-half-plane pairs into a full conjugate-symmetric spectrum.
fn mirror(pairs: Vec<EigenPair>, real_tol: f64) -> Vec<(C, f64, bool)> {
    let mut out = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        if p.lambda.im.abs() <= real_tol {
            out.push((C::new(p.lambda.re, 0.0), p.residual, p.converged));
        } else {
            out.push((p.lambda, p.residual, p.converged));
            out.push((p.lambda.conj(), p.residual, p.converged));
        }
    }
    out
}

/// Eigenvalues located by the shift sweep of `opts.plan`.
///
/// With [`SweepPlan::Full`] every eigenvalue lies within `‖a‖_∞` of an
/// undamped frequency `±iΛ_h`, so each connected cluster of such discs holds
/// as many eigenvalues as undamped modes. Clusters that come up short are
/// re-solved with more eigenvalues per shift; `complete` reports whether all
/// clusters were verified.
pub fn sweep_spectrum(op: &DampedPlateOperator, opts: &SweepOptions) -> Result<Spectrum> {
    let n = op.grid().state_dim();
    let r = op.max_damping();
    let freqs = frequencies(op);
    let scale = 1.0 + freqs.last().copied().unwrap_or(0.0) + r;
    let slack = 1e-7 * scale;
    let real_tol = 1e-8 * scale;
    let offset = (0.5 * r).max(SHIFT_OFFSET);
    let shift_of = |b: &Band| C::new(-offset, 0.5 * (b.lo + b.hi));
    let chunk = opts.chunk.max(1);

    if let SweepPlan::Lowest(count) = opts.plan {
        if count == 0 {
            return Err(invalid("sweep needs at least one shift"));
        }
        let distinct = group(&freqs, slack);
        let results = distinct
            .par_iter()
            .take(count)
            .map(|b| solve_at(op, shift_of(b), (2 * b.count + opts.margin).min(n), &opts.arnoldi))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<EigenPair> = results.into_iter().flatten().filter(|p| p.converged && p.lambda.im >= -real_tol).collect();
        let merged = mirror(dedup(pairs), real_tol);
        return Ok(Spectrum::from_pairs(merged, SolveMethod::ShiftInvert, op.tag(), false));
    }

    let components = group(&freqs, 2.0 * r + 2.0 * slack);
    let mut chunks: Vec<Band> = Vec::new();
    {
        let mut cur: Option<Band> = None;
        for &l in &freqs {
            cur = match cur {
                Some(mut b) if b.count < chunk || l - b.hi <= slack => {
                    b.hi = l;
                    b.count += 1;
                    Some(b)
                }
                Some(b) => {
                    chunks.push(b);
                    Some(Band { lo: l, hi: l, count: 1 })
                }
                None => Some(Band { lo: l, hi: l, count: 1 }),
            };
        }
        chunks.extend(cur);
    }
    let reach = |b: &Band, lo: f64, hi: f64| b.lo <= hi && lo <= b.hi;
    let component_of = |l: C| {
        components.iter().position(|c| {
            let lo = if c.lo - r - slack <= 0.0 { -real_tol } else { c.lo - r - slack };
            lo <= l.im && l.im <= c.hi + r + slack && l.re >= -r - slack && l.re <= slack
        })
    };

    let mut extra = vec![opts.margin; chunks.len()];
    let mut results: Vec<Vec<EigenPair>> = vec![Vec::new(); chunks.len()];
    let mut todo: Vec<usize> = (0..chunks.len()).collect();
    let mut verified = false;
    let mut kept = Vec::new();
    for _ in 0..=opts.max_retries {
        let fresh = todo
            .par_iter()
            .map(|&c| {
                let b = &chunks[c];
                solve_at(op, shift_of(b), (b.count + extra[c]).min(n), &opts.arnoldi)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&c, res) in todo.iter().zip(fresh) {
            results[c] = res;
        }
        let pairs: Vec<EigenPair> = results
            .iter()
            .flatten()
            .filter(|p| p.converged && component_of(p.lambda).is_some())
            .cloned()
            .collect();
        kept = dedup(pairs);
        let mut weight = vec![0.0; components.len()];
        for p in &kept {
            let c = component_of(p.lambda).expect("filtered");
            weight[c] += if p.lambda.im.abs() <= real_tol { 0.5 } else { 1.0 };
        }
        let short: Vec<usize> = (0..components.len())
            .filter(|&c| weight[c] + 0.25 < components[c].count as f64)
            .collect();
        if short.is_empty() {
            verified = weight.iter().zip(&components).all(|(w, c)| (w - c.count as f64).abs() < 0.25);
            break;
        }
        todo = (0..chunks.len())
            .filter(|&c| short.iter().any(|&s| reach(&chunks[c], components[s].lo, components[s].hi)))
            .collect();
        for &c in &todo {
            extra[c] = (2 * extra[c]).max(2 * chunks[c].count);
        }
    }
    let merged = mirror(kept, real_tol);
    Ok(Spectrum::from_pairs(merged, SolveMethod::ShiftInvert, op.tag(), verified))
}

/// The `count` eigenvalues with the largest real part found by the sweep.
pub fn rightmost_eigenvalues(op: &DampedPlateOperator, count: usize, opts: &SweepOptions) -> Result<Spectrum> {
    if count == 0 {
        return Err(invalid("eigenvalue count must be at least 1"));
    }
    Ok(sweep_spectrum(op, opts)?.rightmost(count))
}

/// Initial state along the eigenvector attaining the spectral abscissa: the
/// real part of a suitably phased eigenvector, mapped back from energy
/// coordinates, scaled to unit energy.
pub fn abscissa_state(op: &DampedPlateOperator, abscissa: &AbscissaResult, opts: &ArnoldiOptions) -> Result<PlateState> {
    let lambda = abscissa.attaining_eigenvalue;
    let shift = lambda + C::new(1e-7 * (1.0 + lambda.norm()), 0.0);
    let pairs = solve_at(op, shift, 1, opts)?;
    let y = &pairs.first().ok_or_else(|| Error::Eigen("no eigenvector at the abscissa".into()))?.vector;
    let yy: C = y.iter().map(|z| z * z).sum();
    let phase = C::from_polar(1.0, -0.5 * yy.arg());
    let m = op.unknowns();
    let w: Vec<f64> = y[..m].iter().map(|z| (z * phase).re).collect();
    let v: Vec<f64> = y[m..].iter().map(|z| (z * phase).re).collect();
    let u = op.solve_laplacian(&w);
    let e = 0.5 * op.grid().cell_area() * (w.iter().chain(&v).map(|x| x * x).sum::<f64>());
    if !(e > 0.0) {
        return Err(Error::Eigen("abscissa eigenvector has no real part".into()));
    }
    let s = e.sqrt().recip();
    Ok(PlateState {
        displacement: u.into_iter().map(|x| x * s).collect(),
        velocity: v.into_iter().map(|x| x * s).collect(),
        time: 0.0,
    })
}
