use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

const FIELD_CSV: &str = "Field CSV columns: x1,x2,re,im,abs (one row per grid node, x1 varying fastest). \
Points inside the near-boundary exclusion zone of the inclusion are written as NaN.";

#[derive(Debug, Parser)]
#[command(name = "camoscat", version, about = "Scattering by objects buried under thin rough periodic layers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective tensor and permittivity of the unit cell; writes homogenized.json.
    Homogenize(Common),
    /// Thin-layer transmission coefficients; writes coefficients.json.
    LayerCoeffs(Common),
    /// Plane-wave background of the effective problem; writes background.csv.
    #[command(after_help = FIELD_CSV)]
    Background(FieldArgs),
    /// Green's function of the effective problem for one source; writes green.csv.
    #[command(after_help = "Green CSV columns: x1,x2,re,im,abs,err where err is the quadrature error \
estimate. The source node itself is written as NaN.")]
    Green {
        #[command(flatten)]
        field: FieldArgs,
        /// Source point `X1,X2`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        source: [f64; 2],
    },
    /// Boundary integral solve for the buried inclusion; writes field.csv.
    #[command(after_help = FIELD_CSV)]
    Scatter(FieldArgs),
    /// Runs a named comparison against the finite-difference reference solver;
    /// writes verdict.json.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scenario: Scenario,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Effective background against the resolved layer and microstructure at
    /// three scales.
    XiConvergence,
    /// Boundary integral field against a finite-difference solve of the
    /// effective medium with the inclusion.
    EffectiveInclusion,
    /// Boundary integral field against a finite-difference solve of the
    /// microstructure with the inclusion.
    MultiscaleInclusion,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::XiConvergence => "xi-convergence",
            Scenario::EffectiveInclusion => "effective-inclusion",
            Scenario::MultiscaleInclusion => "multiscale-inclusion",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scene JSON.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Unit-cell grid `N1xN2` (8 to 4096 per axis; default 128x128). For
    /// `layer-coeffs` this sets the strip grid instead (default 128x32).
    #[arg(long, value_parser = parse_pair)]
    pub n_grid: Option<[usize; 2]>,
    /// Boundary nodes on the inclusion (16 to 1024; default 128).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Sommerfeld quadrature tolerance (1e-14 to 1e-2; default 1e-10).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Strip half-height in cell units (default: max f + 5).
    #[arg(long = "strip-L")]
    pub strip_l: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub common: Common,
    /// Observation grid `X1A:X1B:N1,X2A:X2B:N2` in the scene's length units.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridArg>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n: [usize; 2],
}

fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected N1xN2")?;
    let n = [parse::<usize>(a)?, parse::<usize>(b)?];
    if n.iter().any(|v| !(8..=4096).contains(v)) {
        return Err("grid sizes must lie in 8..=4096".into());
    }
    Ok(n)
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected X1,X2")?;
    Ok([parse(a)?, parse(b)?])
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let (a, b) = s.split_once(',').ok_or("expected X1A:X1B:N1,X2A:X2B:N2")?;
    let axis = |t: &str| -> Result<([f64; 2], usize), String> {
        let parts: Vec<&str> = t.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err("expected LO:HI:N per axis".into());
        };
        let n = parse::<usize>(n)?;
        if !(1..=2000).contains(&n) {
            return Err("grid axes take 1 to 2000 points".into());
        }
        Ok(([parse(lo)?, parse(hi)?], n))
    };
    let (x1, n1) = axis(a)?;
    let (x2, n2) = axis(b)?;
    Ok(GridArg { x1, x2, n: [n1, n2] })
}

fn parse<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse `{}`", s.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arguments_parse() {
        assert_eq!(parse_pair("64x128").unwrap(), [64, 128]);
        assert!(parse_pair("4x128").is_err());
        let g = parse_grid("-1:1:21,0.5:2:7").unwrap();
        assert_eq!(g, GridArg { x1: [-1.0, 1.0], x2: [0.5, 2.0], n: [21, 7] });
        assert!(parse_grid("-1:1,0:1:3").is_err());
        assert_eq!(parse_point("0.25,-3").unwrap(), [0.25, -3.0]);
    }
}
