//! Plain-text field dumps.
//!
//! A dump is a header line `degree n N_1..N_n L_1..L_n component_count`
//! followed by one value per line, component-major with sites in row-major
//! order. Values are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::bundle::{BundleData, BundleError, Section};
use crate::lattice::{Cochain, LatticeError, TorusGeometry};
use crate::vortex::VorticityField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DumpError {
    #[error("malformed dump: {0}")]
    Malformed(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

fn malformed(msg: impl Into<String>) -> DumpError {
    DumpError::Malformed(msg.into())
}

fn header(out: &mut String, degree: usize, geom: &TorusGeometry, components: usize) {
    write!(out, "{degree} {}", geom.dim()).unwrap();
    for n in geom.sites() {
        write!(out, " {n}").unwrap();
    }
    for l in geom.lengths() {
        write!(out, " {l:.16e}").unwrap();
    }
    writeln!(out, " {components}").unwrap();
}

fn next<'a, T: FromStr>(tokens: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<T, DumpError> {
    let tok = tokens.next().ok_or_else(|| malformed(format!("missing {what}")))?;
    tok.parse().map_err(|_| malformed(format!("cannot parse {what} from {tok:?}")))
}

struct Header {
    degree: usize,
    geom: TorusGeometry,
    components: usize,
}

fn parse_header<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<Header, DumpError> {
    let degree: usize = next(tokens, "degree")?;
    let dim: usize = next(tokens, "dimension")?;
    if !(2..=3).contains(&dim) {
        return Err(LatticeError::InvalidDimension(dim).into());
    }
    let sites = (0..dim).map(|_| next(tokens, "site count")).collect::<Result<Vec<usize>, _>>()?;
    let lengths = (0..dim).map(|_| next(tokens, "length")).collect::<Result<Vec<f64>, _>>()?;
    let components = next(tokens, "component count")?;
    Ok(Header { degree, geom: TorusGeometry::new(&sites, &lengths)?, components })
}

fn read_values<'a>(tokens: &mut impl Iterator<Item = &'a str>, count: usize) -> Result<Vec<f64>, DumpError> {
    let values = (0..count).map(|_| next(tokens, "value")).collect::<Result<Vec<f64>, _>>()?;
    if tokens.next().is_some() {
        return Err(malformed("trailing data"));
    }
    Ok(values)
}

pub fn write_cochain(c: &Cochain) -> String {
    let mut out = String::new();
    header(&mut out, c.degree(), c.geometry(), c.n_components());
    for v in c.values() {
        writeln!(out, "{v:.16e}").unwrap();
    }
    out
}

pub fn parse_cochain(text: &str) -> Result<Cochain, DumpError> {
    let mut tokens = text.split_whitespace();
    let h = parse_header(&mut tokens)?;
    if h.degree > h.geom.dim() {
        return Err(LatticeError::DegreeOutOfRange { degree: h.degree, dim: h.geom.dim() }.into());
    }
    let expected = h.geom.n_components(h.degree);
    if h.components != expected {
        return Err(malformed(format!(
            "degree {} needs {expected} components, header says {}",
            h.degree, h.components
        )));
    }
    let values = read_values(&mut tokens, expected * h.geom.n_sites())?;
    Ok(Cochain::from_values(&h.geom, h.degree, values)?)
}

/// A section as a degree-0 dump with two components, real then imaginary.
pub fn write_section(u: &Section) -> String {
    let mut out = String::new();
    header(&mut out, 0, u.geometry(), 2);
    for z in u.values() {
        writeln!(out, "{:.16e}", z.re).unwrap();
    }
    for z in u.values() {
        writeln!(out, "{:.16e}", z.im).unwrap();
    }
    out
}

pub fn parse_section(text: &str) -> Result<Section, DumpError> {
    let mut tokens = text.split_whitespace();
    let h = parse_header(&mut tokens)?;
    if h.degree != 0 || h.components != 2 {
        return Err(malformed("a section dump has degree 0 and 2 components"));
    }
    let ns = h.geom.n_sites();
    let values = read_values(&mut tokens, 2 * ns)?;
    let z = (0..ns).map(|s| Complex64::new(values[s], values[ns + s])).collect();
    Ok(Section::from_values(&h.geom, z)?)
}

/// Header `n N_1..N_n L_1..L_n count`, then one `component site winding`
/// line per nonzero plaquette.
pub fn write_vorticity(v: &VorticityField) -> String {
    let geom = v.geometry();
    let support = v.support();
    let mut out = String::new();
    write!(out, "{}", geom.dim()).unwrap();
    for n in geom.sites() {
        write!(out, " {n}").unwrap();
    }
    for l in geom.lengths() {
        write!(out, " {l:.16e}").unwrap();
    }
    writeln!(out, " {}", support.len()).unwrap();
    for (c, s, w) in support {
        writeln!(out, "{c} {s} {w}").unwrap();
    }
    out
}

pub fn parse_vorticity(text: &str) -> Result<VorticityField, DumpError> {
    let mut tokens = text.split_whitespace();
    let dim: usize = next(&mut tokens, "dimension")?;
    if !(2..=3).contains(&dim) {
        return Err(LatticeError::InvalidDimension(dim).into());
    }
    let sites = (0..dim).map(|_| next(&mut tokens, "site count")).collect::<Result<Vec<usize>, _>>()?;
    let lengths = (0..dim).map(|_| next(&mut tokens, "length")).collect::<Result<Vec<f64>, _>>()?;
    let geom = TorusGeometry::new(&sites, &lengths)?;
    let count: usize = next(&mut tokens, "entry count")?;
    let ns = geom.n_sites();
    let mut windings = vec![0i64; geom.n_cells(2)];
    for _ in 0..count {
        let c: usize = next(&mut tokens, "component")?;
        let s: usize = next(&mut tokens, "site")?;
        let w: i64 = next(&mut tokens, "winding")?;
        if c >= geom.n_components(2) || s >= ns {
            return Err(malformed(format!("plaquette ({c}, {s}) out of range")));
        }
        windings[c * ns + s] = w;
    }
    if tokens.next().is_some() {
        return Err(malformed("trailing data"));
    }
    Ok(VorticityField::from_windings(&geom, windings)?)
}

/// `chern n` followed by the `n` rows of the Chern matrix, then the dump of
/// the background edge phases.
pub fn write_bundle(b: &BundleData) -> String {
    let chern = b.chern_matrix();
    let mut out = format!("chern {}\n", chern.len());
    for row in chern {
        let row: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out.push_str(&write_cochain(b.theta0()));
    out
}

pub fn parse_bundle(text: &str) -> Result<BundleData, DumpError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| malformed("empty bundle dump"))?;
    let n: usize = first
        .strip_prefix("chern ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| malformed("bundle dump must start with `chern n`"))?;
    let mut chern = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| malformed("missing Chern row"))?;
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| malformed(format!("bad Chern entry {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        chern.push(row);
    }
    let rest: Vec<&str> = lines.collect();
    let theta0 = parse_cochain(&rest.join("\n"))?;
    Ok(BundleData::from_parts(chern, theta0)?)
}
