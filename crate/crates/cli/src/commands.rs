//! The four subcommands. Each returns the lines to print on success.

use plate_spectra::analysis::DecayReport;
use plate_spectra::placement::{check_expectation, rank_report, sweep_placements, TraceParams};
use plate_spectra::{
    abscissa_state, compare_rates, compute_spectrum, default_dt, default_t_final, modal_initial_state, resolving_dt,
    sample_field, simulate, spectral_abscissa, AbscissaResult, ArnoldiOptions, DampedPlateOperator, EigenMethod,
    EnergyTrace, ModeIndex, Spectrum,
};

use crate::config::{Candidates, RunConfig};
use crate::output::OutputSet;
use crate::CliError;

fn numerical(e: plate_spectra::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn operator(cfg: &RunConfig) -> Result<DampedPlateOperator, CliError> {
    let field = sample_field(&cfg.profile, &cfg.region, &cfg.grid).map_err(|e| CliError::Config(format!("damping: {e}")))?;
    DampedPlateOperator::new(&cfg.grid, &field).map_err(numerical)
}

fn arnoldi(cfg: &RunConfig) -> ArnoldiOptions {
    match cfg.method {
        EigenMethod::ShiftInvert(s) => s.arnoldi,
        _ => ArnoldiOptions::default(),
    }
}

fn solve(cfg: &RunConfig, op: &DampedPlateOperator) -> Result<(Spectrum, AbscissaResult), CliError> {
    let spectrum = compute_spectrum(op, &cfg.method).map_err(numerical)?;
    let abscissa = spectral_abscissa(&spectrum).map_err(numerical)?;
    Ok((spectrum, abscissa))
}

fn spectrum_notes(s: &Spectrum) -> Vec<String> {
    let unconverged = s.converged.iter().filter(|c| !**c).count();
    vec![
        format!("method = {}", s.method),
        format!("eigenvalues = {}, unconverged = {unconverged}, complete = {}", s.len(), s.complete),
    ]
}

fn mode_file(prefix: &str, m: ModeIndex) -> String {
    format!("{prefix}_mode_{}_{}.csv", m.n, m.m)
}

fn dump_operators(op: &DampedPlateOperator, out: &mut OutputSet) -> Result<(), CliError> {
    let note = ["triplets: row col value (0-based, x-fastest interior ordering)".to_string()];
    out.write("laplacian.txt", &note, |w| op.laplacian().write_triplets(w))?;
    out.write("bilaplacian.txt", &note, |w| op.bilaplacian().write_triplets(w))?;
    let field = sample_field_values(op);
    out.write("damping.csv", &[], |w| {
        writeln!(w, "x,y,a")?;
        for (x, y, a) in &field {
            writeln!(w, "{x:.16e},{y:.16e},{a:.16e}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn sample_field_values(op: &DampedPlateOperator) -> Vec<(f64, f64, f64)> {
    op.grid().nodes().zip(op.damping()).map(|((x, y), a)| (x, y, *a)).collect()
}

pub fn spectrum(cfg: &RunConfig, dump: bool, out: &mut OutputSet) -> Result<Vec<String>, CliError> {
    let op = operator(cfg)?;
    if dump {
        dump_operators(&op, out)?;
    }
    let (spectrum, abscissa) = solve(cfg, &op)?;
    let shown = match cfg.k {
        Some(k) => spectrum.rightmost(k),
        None => spectrum.clone(),
    };
    let mut notes = spectrum_notes(&spectrum);
    notes.push(abscissa.to_string());
    out.write("spectrum.csv", &notes, |w| shown.write_csv(w))?;
    let line = abscissa.to_string();
    out.write("summary.txt", &[], |w| writeln!(w, "{line}"))?;
    Ok(vec![line])
}

fn write_trace(out: &mut OutputSet, name: &str, notes: &[String], trace: &EnergyTrace) -> Result<(), CliError> {
    out.write(name, notes, |w| trace.write_csv(w))?;
    Ok(())
}

pub fn energy(cfg: &RunConfig, out: &mut OutputSet) -> Result<Vec<String>, CliError> {
    if cfg.modes.is_empty() {
        return Err(CliError::Config("simulation.modes: the energy command needs at least one mode".into()));
    }
    let op = operator(cfg)?;
    let (_, abscissa) = solve(cfg, &op)?;
    let mu = abscissa.mu;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(&cfg.grid));
    let t_final = cfg.t_final.unwrap_or_else(|| default_t_final(mu));
    let mut lines = vec![abscissa.to_string()];
    for &mode in &cfg.modes {
        let s0 = modal_initial_state(&cfg.grid, mode, cfg.amplitude).map_err(numerical)?;
        let trace = simulate(&op, &s0, dt, t_final, cfg.sample_every).map_err(numerical)?;
        let notes = vec![
            format!("mode = {mode}"),
            format!("dt = {dt:e}, t_final = {t_final}"),
            format!("E0 = {:.16e}", trace.initial_energy),
            abscissa.to_string(),
        ];
        write_trace(out, &mode_file("energy", mode), &notes, &trace)?;
        let e0 = trace.initial_energy;
        out.write(&mode_file("reference", mode), &notes, |w| {
            writeln!(w, "t,E0_exp_mu_t,E0_exp_2mu_t")?;
            for t in &trace.times {
                writeln!(w, "{t:.10e},{:.16e},{:.16e}", e0 * (mu * t).exp(), e0 * (2.0 * mu * t).exp())?;
            }
            Ok(())
        })?;
        let last = trace.energies.last().copied().unwrap_or(e0);
        lines.push(format!("mode {mode}: E(T)/E0 = {:.6e} at T = {t_final}", last / e0));
    }
    Ok(lines)
}

pub fn decay(cfg: &RunConfig, out: &mut OutputSet) -> Result<Vec<String>, CliError> {
    let op = operator(cfg)?;
    let (spectrum, abscissa) = solve(cfg, &op)?;
    let t_final = cfg.t_final.unwrap_or_else(|| default_t_final(abscissa.mu));

    let s0 = abscissa_state(&op, &abscissa, &arnoldi(cfg)).map_err(numerical)?;
    let dt = cfg.dt.unwrap_or_else(|| resolving_dt(&cfg.grid, abscissa.attaining_eigenvalue));
    let trace = simulate(&op, &s0, dt, t_final, cfg.sample_every).map_err(numerical)?;
    let notes = vec![
        "initial state = abscissa eigenvector".to_string(),
        format!("dt = {dt:e}, t_final = {t_final}"),
    ];
    write_trace(out, "decay_trace.csv", &notes, &trace)?;
    let report = compare_rates(&spectrum, &trace, cfg.window_fraction).map_err(numerical)?;
    out.write("decay_report.txt", &notes, |w| report.write_report(w))?;

    let mut rows: Vec<(String, DecayReport)> = vec![("abscissa eigenvector".into(), report)];
    let mode_dt = cfg.dt.unwrap_or_else(|| default_dt(&cfg.grid));
    for &mode in &cfg.modes {
        let s0 = modal_initial_state(&cfg.grid, mode, cfg.amplitude).map_err(numerical)?;
        let trace = simulate(&op, &s0, mode_dt, t_final, cfg.sample_every).map_err(numerical)?;
        let rep = compare_rates(&spectrum, &trace, cfg.window_fraction).map_err(numerical)?;
        let notes = vec![format!("mode = {mode}"), format!("dt = {mode_dt:e}, t_final = {t_final}")];
        write_trace(out, &mode_file("decay_trace", mode), &notes, &trace)?;
        rows.push((format!("mode {mode}"), rep));
    }
    out.write("decay_summary.csv", &[], |w| {
        writeln!(w, "start,{}", DecayReport::SUMMARY_HEADER)?;
        for (start, r) in &rows {
            writeln!(w, "{start},{}", r.summary_row())?;
        }
        Ok(())
    })?;

    let mut lines = vec![abscissa.to_string()];
    for (start, r) in &rows {
        lines.push(format!(
            "{start}: slope = {:.6e}, 2mu = {:.6e}, {} (tol {:.1e}), mu <= slope/2 + tol: {}",
            r.energy_slope,
            2.0 * r.mu,
            r.relation,
            r.fit_tol,
            r.bound_holds
        ));
    }
    Ok(lines)
}

pub fn optimize(cfg: &RunConfig, out: &mut OutputSet) -> Result<Vec<String>, CliError> {
    let candidates = cfg
        .candidates
        .as_ref()
        .ok_or_else(|| CliError::Config("optimize: give a preset, a region list or width/height/stride".into()))?;
    let traces = if cfg.optimize_traces {
        if cfg.modes.is_empty() {
            return Err(CliError::Config("optimize.traces: simulation.modes is empty".into()));
        }
        let mut p = TraceParams::new(cfg.modes.clone());
        p.amplitude = cfg.amplitude;
        p.dt = cfg.dt;
        p.t_final = cfg.t_final;
        p.sample_every = cfg.sample_every;
        p.window_fraction = cfg.window_fraction;
        Some(p)
    } else if let Candidates::Preset(p) = candidates {
        Some(TraceParams {
            amplitude: cfg.amplitude,
            dt: cfg.dt,
            t_final: cfg.t_final,
            sample_every: cfg.sample_every,
            window_fraction: cfg.window_fraction,
            ..TraceParams::new(vec![p.mode])
        })
    } else {
        None
    };
    let sweep = sweep_placements(&cfg.grid, &cfg.profile, candidates.regions(), &cfg.method, traces.as_ref())
        .map_err(numerical)?;
    let table = rank_report(&sweep);
    out.write("placement.csv", &[], |w| table.write_csv(&sweep, w))?;

    for (i, res) in sweep.results.iter().enumerate() {
        for ev in &res.evidence {
            let notes = vec![format!("candidate {i} = {}", res.region), format!("mode = {}", ev.mode)];
            let name = format!("trace_c{i}_mode_{}_{}.csv", ev.mode.n, ev.mode.m);
            out.write(&name, &notes, |w| ev.trace.write_csv(w))?;
        }
    }

    let mut report = Vec::new();
    for row in &table.rows {
        let mut line = format!("{:>3}  {}  mu = {:.9e}  {}", row.rank, row.region, row.mu, row.status);
        for (mode, slope) in &row.slopes {
            match slope {
                Some(s) => line.push_str(&format!("  slope{mode} = {s:.6e}")),
                None => line.push_str(&format!("  slope{mode} = n/a")),
            }
        }
        report.push(line);
    }
    report.extend(table.notes.iter().cloned());
    if let Some(mode) = traces.as_ref().and_then(|t| t.modes.first().copied()) {
        let order: Vec<String> = sweep
            .energy_ordering(mode)
            .iter()
            .map(|&i| {
                let r = &sweep.results[i];
                let ratio = r.evidence.iter().find(|e| e.mode == mode).map_or(f64::NAN, |e| e.final_energy_ratio);
                format!("{} E(T)/E0 = {ratio:.6e}", r.region)
            })
            .collect();
        report.push(format!("energy ordering for mode {mode}: {}", order.join(" < ")));
    }
    if let Candidates::Preset(p) = candidates {
        let chk = check_expectation(p, &sweep);
        report.push(format!(
            "expectation '{}': {}",
            chk.expectation,
            if chk.observed { "observed" } else { "not observed" }
        ));
    }
    out.write("placement_report.txt", &[], |w| {
        for l in &report {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })?;
    Ok(report)
}
