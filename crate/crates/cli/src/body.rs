//! Body and test-function specifications given on the command line.

use anyhow::{bail, Context, Result};
use flagmeasure::counterexample::{build_lift_polytope, invariant_control, LiftConfig};
use flagmeasure::euclid::Vector;
use flagmeasure::flagmeasure::{Ball, FlagFunction, HalfCylinder, HalfSpace, SpatialSet, TestSet};
use flagmeasure::polytope::{parse_rational, Polytope, Rational};
use std::path::Path;
use std::sync::Arc;

fn numbers(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|x| parse_rational(x.trim()).with_context(|| format!("bad number {x:?}")))
        .collect()
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
        .collect()
}

fn dim(arg: Option<&str>) -> Result<usize> {
    Ok(match arg {
        None => 3,
        Some(x) => x.parse().with_context(|| format!("bad dimension {x:?}"))?,
    })
}

/// `cube[:d]`, `simplex[:d]`, `box:a,b,..`, `lift:t[,d]`, or a vertex file
/// (one vertex per line, `.toml` for a saved polytope record).
pub fn parse_body(spec: &str) -> Result<Polytope> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    match name {
        "cube" => Ok(Polytope::unit_cube(dim(arg)?)),
        "simplex" => Ok(Polytope::unit_simplex(dim(arg)?)),
        "box" => {
            let sides = numbers(arg.context("box needs side lengths, e.g. box:1,2,3")?)?;
            Ok(Polytope::cuboid(&sides)?)
        }
        "lift" => {
            let parts: Vec<&str> = arg.context("lift needs a step, e.g. lift:1/8,3")?.split(',').collect();
            let t = parse_rational(parts[0].trim())?;
            let d = dim(parts.get(1).map(|s| s.trim()))?;
            Ok(build_lift_polytope(&LiftConfig::new(d, t)?)?)
        }
        _ => read_vertex_file(Path::new(spec)),
    }
}

fn read_vertex_file(path: &Path) -> Result<Polytope> {
    let text = std::fs::read_to_string(path).with_context(|| format!("unknown body {:?} and no such file", path.display()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        return Ok(Polytope::from_toml(&text)?);
    }
    let mut pts = vec![];
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<Rational>> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|x| !x.is_empty())
            .map(|x| parse_rational(x).with_context(|| format!("line {}: bad number {x:?}", i + 1)))
            .collect();
        pts.push(row?);
    }
    let Some(d) = pts.first().map(Vec::len) else {
        bail!("{} contains no vertices", path.display());
    };
    if pts.iter().any(|p| p.len() != d) {
        bail!("{}: vertices of different lengths", path.display());
    }
    Ok(Polytope::build(&pts, d)?)
}

/// Named flag functions: `one`, `normal-last-squared`, `upper`, `first-coordinate`.
pub fn flag_function(name: &str) -> Result<Option<FlagFunction>> {
    Ok(Some(match name {
        "one" => return Ok(None),
        "normal-last-squared" => invariant_control(),
        "upper" => FlagFunction::of_normal("upper", |u| f64::from(u[u.len() - 1] > 0.0)),
        "first-coordinate" => FlagFunction::of_normal("first-coordinate", |u| u[0]),
        _ => bail!("unknown function {name:?} (one, normal-last-squared, upper, first-coordinate)"),
    }))
}

/// `ball:c1,..,cd,r`, `half-cylinder:r` or `half-space:n1,..,nd,offset`.
pub fn spatial_set(spec: &str, d: usize) -> Result<Arc<dyn SpatialSet>> {
    let (name, arg) = spec.split_once(':').context("spatial set needs parameters, e.g. ball:0,0,0,1")?;
    let v = floats(arg)?;
    match name {
        "ball" if v.len() == d + 1 => Ok(Arc::new(Ball {
            centre: Vector::from_column_slice(&v[..d]),
            radius: v[d],
        })),
        "half-cylinder" if v.len() == 1 => Ok(Arc::new(HalfCylinder { radius: v[0] })),
        "half-space" if v.len() == d + 1 => Ok(Arc::new(HalfSpace {
            normal: Vector::from_column_slice(&v[..d]),
            offset: v[d],
        })),
        _ => bail!("bad spatial set {spec:?} for d={d}"),
    }
}

pub fn test_set(function: &str, spatial: Option<&str>, d: usize) -> Result<TestSet> {
    let mut t = match spatial {
        Some(s) => TestSet::spatial(spatial_set(s, d)?),
        None => TestSet::everything(),
    };
    if let Some(f) = flag_function(function)? {
        t = t.with_flag(f);
    }
    Ok(t)
}
