//! Damping fields `a(x) χ_ω(x)` sampled at the interior nodes.

mod expr;

pub use expr::{BinOp, EvalError, Expr, Func, DIVISION_FLOOR};

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::grid_operators::GridSpec;

/// Axis-aligned open rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1;
        if !ok {
            return Err(invalid(format!("region ({x0}, {x1}) x ({y0}, {y1}) is empty or not finite")));
        }
        Ok(Region { x0, x1, y0, y1 })
    }

    /// The whole domain of `grid`.
    pub fn full(grid: &GridSpec) -> Self {
        Region {
            x0: 0.0,
            x1: grid.lx,
            y0: 0.0,
            y1: grid.ly,
        }
    }

    /// Strict membership in the open rectangle.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 < x && x < self.x1 && self.y0 < y && y < self.y1
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.x0 <= other.x0 && other.x1 <= self.x1 && self.y0 <= other.y0 && other.y1 <= self.y1
    }

    pub fn validate_in(&self, grid: &GridSpec) -> Result<()> {
        let inside = 0.0 <= self.x0
            && self.x0 < self.x1
            && self.x1 <= grid.lx
            && 0.0 <= self.y0
            && self.y0 < self.y1
            && self.y1 <= grid.ly;
        if inside {
            Ok(())
        } else {
            Err(invalid(format!("region {self} is not inside the domain (0, {}) x (0, {})", grid.lx, grid.ly)))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.x1, self.y0, self.y1]
    }

    /// Lexicographic order on `(x0, x1, y0, y1)`.
    pub fn lex_cmp(&self, other: &Region) -> Ordering {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) x ({}, {})", self.x0, self.x1, self.y0, self.y1)
    }
}

/// Damping coefficient `a(x, y)` before restriction to a region.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingProfile {
    Constant(f64),
    /// `x * y`
    Product,
    /// `sin(x) * cos(y)`
    SinCos,
    Expression(Expr),
}

impl DampingProfile {
    /// Parses profile text, recognizing the named closed forms.
    pub fn parse(text: &str) -> Result<Self> {
        let e = Expr::parse(text)?;
        Ok(Self::from_expr(e))
    }

    pub fn from_expr(e: Expr) -> Self {
        use Expr::*;
        match &e {
            Num(c) => DampingProfile::Constant(*c),
            Binary(BinOp::Mul, l, r) => match (&**l, &**r) {
                (X, Y) => DampingProfile::Product,
                (Call(Func::Sin, a), Call(Func::Cos, b)) if **a == X && **b == Y => DampingProfile::SinCos,
                _ => DampingProfile::Expression(e),
            },
            _ => DampingProfile::Expression(e),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> std::result::Result<f64, EvalError> {
        match self {
            DampingProfile::Constant(c) => Ok(*c),
            DampingProfile::Product => Ok(x * y),
            DampingProfile::SinCos => Ok(x.sin() * y.cos()),
            DampingProfile::Expression(e) => e.eval(x, y),
        }
    }
}

impl fmt::Display for DampingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DampingProfile::Constant(c) => write!(f, "{c}"),
            DampingProfile::Product => f.write_str("x * y"),
            DampingProfile::SinCos => f.write_str("sin(x) * cos(y)"),
            DampingProfile::Expression(e) => write!(f, "{e}"),
        }
    }
}

/// Parses a damping profile expression.
pub fn parse_profile(text: &str) -> Result<DampingProfile> {
    DampingProfile::parse(text)
}

/// Nonnegative nodal damping values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingField {
    grid: GridSpec,
    values: Vec<f64>,
    profile: String,
    region: String,
}

impl DampingField {
    pub fn zeros(grid: &GridSpec) -> Self {
        DampingField {
            grid: *grid,
            values: vec![0.0; grid.unknowns()],
            profile: "0".into(),
            region: Region::full(grid).to_string(),
        }
    }

    /// `profile on region`, as used in output headers.
    pub fn description(&self) -> String {
        format!("{} on {}", self.profile, self.region)
    }

    pub fn profile(&self) -> &str {
        &self.profile
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> Vec<bool> {
        self.values.iter().map(|a| *a > 0.0).collect()
    }

    /// True when no node carries damping.
    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|a| *a == 0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `x,y,a`, one row per node in grid order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,a")?;
        for (k, a) in self.values.iter().enumerate() {
            let (x, y) = self.grid.node(k);
            writeln!(w, "{x:.16e},{y:.16e},{a:.16e}")?;
        }
        Ok(())
    }
}

/// Samples `profile` at the nodes strictly inside `region`; other nodes get 0.
pub fn sample_field(profile: &DampingProfile, region: &Region, grid: &GridSpec) -> Result<DampingField> {
    region.validate_in(grid)?;
    let mut values = vec![0.0; grid.unknowns()];
    for (k, (x, y)) in grid.nodes().enumerate() {
        if !region.contains(x, y) {
            continue;
        }
        let a = profile.eval(x, y).map_err(|e| Error::InvalidDamping { x, y, message: e.message })?;
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidDamping {
                x,
                y,
                message: format!("profile '{profile}' evaluates to {a}; damping must be finite and nonnegative"),
            });
        }
        values[k] = a;
    }
    Ok(DampingField {
        grid: *grid,
        values,
        profile: profile.to_string(),
        region: region.to_string(),
    })
}
