//! Run configuration: TOML file plus command-line overrides, validated in
//! full before any computation starts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plate_spectra::placement::{preset, PlacementPreset};
use plate_spectra::{
    enumerate_regions, parse_profile, ArnoldiOptions, DampingProfile, EigenMethod, GridSpec, ModeIndex, Region,
    SweepOptions, SweepPlan,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub damping: DampingSection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lx: f64,
    pub ly: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { lx: 1.0, ly: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { nx: 15, ny: 15 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSection {
    #[serde(default = "default_profile")]
    pub profile: String,
    /// `[x0, x1, y0, y1]`; the whole domain when absent.
    pub region: Option<[f64; 4]>,
}

fn default_profile() -> String {
    "1".into()
}

impl Default for DampingSection {
    fn default() -> Self {
        DampingSection {
            profile: default_profile(),
            region: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    #[default]
    Auto,
    Dense,
    Arnoldi,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    #[serde(default)]
    pub method: MethodName,
    /// Eigenvalues written to the spectrum file (rightmost first); all when absent.
    pub k: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Undamped frequencies per shift in the sweep.
    #[serde(default = "default_chunk")]
    pub chunk: usize,
    /// Extra eigenvalues requested per shift.
    #[serde(default = "default_margin")]
    pub margin: usize,
    /// Restrict the sweep to the lowest `lowest` frequencies.
    pub lowest: Option<usize>,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
}

fn default_tol() -> f64 {
    ArnoldiOptions::default().tol
}
fn default_max_iter() -> usize {
    ArnoldiOptions::default().max_iter
}
fn default_seed() -> u64 {
    ArnoldiOptions::default().seed
}
fn default_chunk() -> usize {
    SweepOptions::default().chunk
}
fn default_margin() -> usize {
    SweepOptions::default().margin
}
fn default_dense_cap() -> usize {
    plate_spectra::eigensolve::DEFAULT_DENSE_CAP
}

impl Default for EigenSection {
    fn default() -> Self {
        EigenSection {
            method: MethodName::Auto,
            k: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: default_seed(),
            chunk: default_chunk(),
            margin: default_margin(),
            lowest: None,
            dense_cap: default_dense_cap(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default)]
    pub modes: Vec<[usize; 2]>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "ten")]
    pub sample_every: usize,
    #[serde(default = "half")]
    pub window_fraction: f64,
}

fn one() -> f64 {
    1.0
}
fn ten() -> usize {
    10
}
fn half() -> f64 {
    plate_spectra::analysis::DEFAULT_WINDOW_FRACTION
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            modes: Vec::new(),
            dt: None,
            t_final: None,
            amplitude: 1.0,
            sample_every: 10,
            window_fraction: half(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    /// A named five-region list (`width-0.4`, `width-0.3`).
    pub preset: Option<String>,
    /// Explicit `[x0, x1, y0, y1]` candidates.
    pub regions: Option<Vec<[f64; 4]>>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub stride: Option<f64>,
    /// Simulate `simulation.modes` for every candidate.
    #[serde(default)]
    pub traces: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub grid: Option<(usize, usize)>,
    pub method: Option<MethodName>,
    pub out: Option<PathBuf>,
}

pub enum Candidates {
    Preset(PlacementPreset),
    List(Vec<Region>),
}

impl Candidates {
    pub fn regions(&self) -> &[Region] {
        match self {
            Candidates::Preset(p) => &p.regions,
            Candidates::List(r) => r,
        }
    }
}

/// Fully resolved and validated configuration.
pub struct RunConfig {
    pub grid: GridSpec,
    pub profile_text: String,
    pub profile: DampingProfile,
    pub region: Region,
    pub method_name: MethodName,
    pub method: EigenMethod,
    pub k: Option<usize>,
    pub modes: Vec<ModeIndex>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub amplitude: f64,
    pub sample_every: usize,
    pub window_fraction: f64,
    pub candidates: Option<Candidates>,
    pub optimize_traces: bool,
    pub out_dir: PathBuf,
    /// `key = value` lines describing everything above.
    pub description: Vec<String>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn region_of(field: &str, r: [f64; 4], grid: &GridSpec) -> Result<Region, CliError> {
    let region = Region::new(r[0], r[1], r[2], r[3]).map_err(|e| bad(field, e))?;
    region.validate_in(grid).map_err(|e| bad(field, e))?;
    Ok(region)
}

pub fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got '{text}'"))?;
    let p = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("bad grid size '{s}': {e}"));
    Ok((p(a)?, p(b)?))
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(file: FileConfig, over: &Overrides) -> Result<Self, CliError> {
        let (nx, ny) = over.grid.unwrap_or((file.grid.nx, file.grid.ny));
        let grid = GridSpec::new(file.domain.lx, file.domain.ly, nx, ny).map_err(|e| bad("grid", e))?;
        let profile = parse_profile(&file.damping.profile).map_err(|e| bad("damping.profile", e))?;
        let region = match file.damping.region {
            Some(r) => region_of("damping.region", r, &grid)?,
            None => Region::full(&grid),
        };

        let e = &file.eigen;
        let method_name = over.method.unwrap_or(e.method);
        if !(e.tol > 0.0 && e.tol.is_finite()) {
            return Err(bad("eigen.tol", format!("must be positive, got {}", e.tol)));
        }
        for (name, v) in [("eigen.max_iter", e.max_iter), ("eigen.chunk", e.chunk), ("eigen.dense_cap", e.dense_cap)] {
            if v == 0 {
                return Err(bad(name, "must be at least 1"));
            }
        }
        if e.k == Some(0) {
            return Err(bad("eigen.k", "must be at least 1"));
        }
        if e.lowest == Some(0) {
            return Err(bad("eigen.lowest", "must be at least 1"));
        }
        let sweep = SweepOptions {
            arnoldi: ArnoldiOptions {
                tol: e.tol,
                max_iter: e.max_iter,
                seed: e.seed,
            },
            plan: e.lowest.map_or(SweepPlan::Full, SweepPlan::Lowest),
            chunk: e.chunk,
            margin: e.margin,
            ..SweepOptions::default()
        };
        let method = match method_name {
            MethodName::Dense => EigenMethod::Dense { cap: e.dense_cap },
            MethodName::Arnoldi => EigenMethod::ShiftInvert(sweep),
            MethodName::Auto if grid.state_dim() <= e.dense_cap => EigenMethod::Dense { cap: e.dense_cap },
            MethodName::Auto => EigenMethod::ShiftInvert(sweep),
        };
        if let EigenMethod::Dense { cap } = method {
            if grid.state_dim() > cap {
                return Err(bad(
                    "eigen.method",
                    format!("dense solve of dimension {} exceeds eigen.dense_cap = {cap}", grid.state_dim()),
                ));
            }
        }

        let s = &file.simulation;
        let modes = s
            .modes
            .iter()
            .map(|[n, m]| {
                let mode = ModeIndex::new(*n, *m).map_err(|e| bad("simulation.modes", e))?;
                plate_spectra::mode_shape(&grid, mode).map_err(|e| bad("simulation.modes", e))?;
                Ok(mode)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(bad(name, format!("must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("simulation.dt", s.dt)?;
        positive("simulation.t_final", s.t_final)?;
        if !s.amplitude.is_finite() || s.amplitude == 0.0 {
            return Err(bad("simulation.amplitude", format!("must be finite and nonzero, got {}", s.amplitude)));
        }
        if s.sample_every == 0 {
            return Err(bad("simulation.sample_every", "must be at least 1"));
        }
        if !(s.window_fraction > 0.0 && s.window_fraction <= 1.0) {
            return Err(bad("simulation.window_fraction", format!("must lie in (0, 1], got {}", s.window_fraction)));
        }

        let o = &file.optimize;
        let candidates = match (&o.preset, &o.regions, o.width.or(o.height).or(o.stride)) {
            (None, None, None) => None,
            (Some(name), None, None) => {
                let p = preset(name).ok_or_else(|| bad("optimize.preset", format!("unknown preset '{name}'")))?;
                for r in &p.regions {
                    r.validate_in(&grid).map_err(|e| bad("optimize.preset", e))?;
                }
                Some(Candidates::Preset(p))
            }
            (None, Some(list), None) => {
                if list.is_empty() {
                    return Err(bad("optimize.regions", "needs at least one region"));
                }
                let regions = list
                    .iter()
                    .map(|r| region_of("optimize.regions", *r, &grid))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(Candidates::List(regions))
            }
            (None, None, Some(_)) => {
                let need = |name: &str, v: Option<f64>| v.ok_or_else(|| bad(name, "required with a lattice of regions"));
                let w = need("optimize.width", o.width)?;
                let h = need("optimize.height", o.height)?;
                let st = need("optimize.stride", o.stride)?;
                let regions = enumerate_regions(grid.lx, grid.ly, w, h, st).map_err(|e| bad("optimize", e))?;
                Some(Candidates::List(regions))
            }
            _ => return Err(bad("optimize", "give exactly one of preset, regions or width/height/stride")),
        };

        let out_dir = over.out.clone().or(file.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));

        let mut cfg = RunConfig {
            grid,
            profile_text: file.damping.profile.clone(),
            profile,
            region,
            method_name,
            method,
            k: e.k,
            modes,
            dt: s.dt,
            t_final: s.t_final,
            amplitude: s.amplitude,
            sample_every: s.sample_every,
            window_fraction: s.window_fraction,
            candidates,
            optimize_traces: o.traces,
            out_dir,
            description: Vec::new(),
        };
        cfg.description = cfg.describe(&file.eigen);
        Ok(cfg)
    }

    fn describe(&self, e: &EigenSection) -> Vec<String> {
        let g = &self.grid;
        let mut d = vec![
            format!("domain = {} x {}", g.lx, g.ly),
            format!("grid = {}x{}", g.nx, g.ny),
            format!("profile = {}", self.profile_text),
        ];
        if self.candidates.is_none() {
            d.push(format!("region = {}", self.region));
        }
        let method = match self.method {
            EigenMethod::Dense { .. } => "dense",
            _ => "shift-invert sweep",
        };
        d.push(format!("eigen.method = {method}"));
        let mut line = format!("eigen.tol = {:e}, max_iter = {}, seed = {}, chunk = {}, margin = {}", e.tol, e.max_iter, e.seed, e.chunk, e.margin);
        if let Some(l) = e.lowest {
            let _ = write!(line, ", lowest = {l}");
        }
        d.push(line);
        d.push(format!("eigen.k = {}", self.k.map_or("all".to_string(), |k| k.to_string())));
        let modes: Vec<String> = self.modes.iter().map(|m| m.to_string()).collect();
        d.push(format!("simulation.modes = [{}]", modes.join(", ")));
        let opt = |v: Option<f64>| v.map_or("default".to_string(), |x| format!("{x}"));
        d.push(format!(
            "simulation.dt = {}, t_final = {}, amplitude = {}, sample_every = {}, window_fraction = {}",
            opt(self.dt),
            opt(self.t_final),
            self.amplitude,
            self.sample_every,
            self.window_fraction
        ));
        if let Some(c) = &self.candidates {
            match c {
                Candidates::Preset(p) => d.push(format!("optimize.preset = {}", p.name)),
                Candidates::List(r) => d.push(format!("optimize.candidates = {}", r.len())),
            }
            d.push(format!("optimize.traces = {}", self.optimize_traces));
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str, over: &Overrides) -> Result<RunConfig, CliError> {
        RunConfig::resolve(toml::from_str(text).unwrap(), over)
    }

    #[test]
    fn grid_flag() {
        assert_eq!(parse_grid("31x17"), Ok((31, 17)));
        assert_eq!(parse_grid("7X7"), Ok((7, 7)));
        assert!(parse_grid("31").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = resolve("", &Overrides::default()).unwrap();
        assert_eq!((cfg.grid.nx, cfg.grid.ny), (15, 15));
        assert!(matches!(cfg.method, EigenMethod::Dense { .. }));
        assert_eq!(cfg.region, Region::full(&cfg.grid));
        assert_eq!(cfg.out_dir, PathBuf::from("out"));

        let over = Overrides {
            grid: Some((31, 31)),
            method: None,
            out: Some("elsewhere".into()),
        };
        let cfg = resolve("[output]\ndir = \"o\"\n", &over).unwrap();
        assert!(matches!(cfg.method, EigenMethod::ShiftInvert(_)));
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert!(cfg.description.iter().any(|l| l == "grid = 31x31"));

        let forced = Overrides {
            method: Some(MethodName::Dense),
            ..over
        };
        let err = resolve("[eigen]\ndense_cap = 100\n", &forced).err().unwrap();
        assert!(err.to_string().contains("eigen.method"));
    }

    #[test]
    fn sweep_settings_reach_the_solver() {
        let text = "[eigen]\nmethod = \"arnoldi\"\ntol = 1e-9\nchunk = 4\nlowest = 6\nseed = 3\n";
        let cfg = resolve(text, &Overrides::default()).unwrap();
        let EigenMethod::ShiftInvert(s) = cfg.method else { panic!("expected a sweep") };
        assert_eq!((s.chunk, s.plan, s.arnoldi.seed), (4, SweepPlan::Lowest(6), 3));
        assert_eq!(s.arnoldi.tol, 1e-9);
    }

    #[test]
    fn candidate_sources_are_exclusive() {
        let both = "[optimize]\npreset = \"width-0.4\"\nregions = [[0.0, 0.5, 0.0, 0.5]]\n";
        assert!(resolve(both, &Overrides::default()).is_err());
        let lattice = resolve("[optimize]\nwidth = 0.4\nheight = 0.4\nstride = 0.3\n", &Overrides::default()).unwrap();
        assert_eq!(lattice.candidates.unwrap().regions().len(), 9);
        let empty = resolve("[optimize]\nregions = []\n", &Overrides::default());
        assert!(empty.is_err());
    }
}
