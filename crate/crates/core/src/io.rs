//! Text file formats: domain and phantom specs, GRID2 images, BSER boundary
//! tables and JSON-lines run metadata.
//!
//! Floating-point values are written with 17 significant digits, which is
//! enough for `str::parse` to recover the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{BoundaryTable, MeansData, WaveData};
use crate::geometry::{ConvexDomain, Point2};
use crate::grid::GridImage;
use crate::phantom::{Bump, Phantom};

/// Domain description as read from a spec file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Disc { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, a: f64, b: f64 },
    Superellipse { cx: f64, cy: f64, a: f64, b: f64, p: f64 },
}

impl DomainSpec {
    pub fn build(&self, n_nodes: usize) -> Result<ConvexDomain> {
        match *self {
            DomainSpec::Disc { cx, cy, r } => ConvexDomain::disc(Point2::new(cx, cy), r, n_nodes),
            DomainSpec::Ellipse { cx, cy, a, b } => ConvexDomain::ellipse(Point2::new(cx, cy), (a, b), n_nodes),
            DomainSpec::Superellipse { cx, cy, a, b, p } => {
                ConvexDomain::superellipse(Point2::new(cx, cy), a, b, p, n_nodes)
            }
        }
    }

    pub fn to_line(&self) -> String {
        match *self {
            DomainSpec::Disc { cx, cy, r } => format!("disc {cx} {cy} {r}"),
            DomainSpec::Ellipse { cx, cy, a, b } => format!("ellipse {cx} {cy} {a} {b}"),
            DomainSpec::Superellipse { cx, cy, a, b, p } => format!("superellipse {cx} {cy} {a} {b} {p}"),
        }
    }
}

fn fmt_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Format { path: path.to_string(), line, msg: msg.into() }
}

/// Non-empty lines with `#` comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((k + 1, l))
    })
}

fn parse_f64(tok: &str, path: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(fmt_err(path, line, format!("non-finite value {tok:?}"))),
        Err(_) => Err(fmt_err(path, line, format!("expected a number, found {tok:?}"))),
    }
}

fn parse_usize(tok: &str, path: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| fmt_err(path, line, format!("expected a count, found {tok:?}")))
}

fn parse_numbers(toks: &[&str], path: &str, line: usize) -> Result<Vec<f64>> {
    toks.iter().map(|t| parse_f64(t, path, line)).collect()
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn parse_domain_spec(text: &str, path: &str) -> Result<DomainSpec> {
    let mut found = None;
    for (line, l) in content_lines(text) {
        if found.is_some() {
            return Err(fmt_err(path, line, "more than one domain in spec"));
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let want = match toks[0] {
            "disc" => 3,
            "ellipse" => 4,
            "superellipse" => 5,
            other => return Err(fmt_err(path, line, format!("unknown domain kind {other:?}"))),
        };
        if toks.len() != want + 1 {
            return Err(fmt_err(path, line, format!("{} takes {want} numbers, found {}", toks[0], toks.len() - 1)));
        }
        let v = parse_numbers(&toks[1..], path, line)?;
        found = Some(match toks[0] {
            "disc" => DomainSpec::Disc { cx: v[0], cy: v[1], r: v[2] },
            "ellipse" => DomainSpec::Ellipse { cx: v[0], cy: v[1], a: v[2], b: v[3] },
            _ => DomainSpec::Superellipse { cx: v[0], cy: v[1], a: v[2], b: v[3], p: v[4] },
        });
    }
    found.ok_or_else(|| fmt_err(path, 0, "no domain found"))
}

pub fn read_domain_spec(path: &Path) -> Result<DomainSpec> {
    parse_domain_spec(&read_text(path)?, &path.display().to_string())
}

pub fn parse_phantom(text: &str, path: &str) -> Result<Phantom> {
    let mut bumps = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] != "bump" {
            return Err(fmt_err(path, line, format!("expected `bump cx cy rho amp`, found {:?}", toks[0])));
        }
        if toks.len() != 5 {
            return Err(fmt_err(path, line, format!("bump takes 4 numbers, found {}", toks.len() - 1)));
        }
        let v = parse_numbers(&toks[1..], path, line)?;
        if !(v[2] > 0.0) {
            return Err(fmt_err(path, line, "bump radius must be positive"));
        }
        bumps.push(Bump { center: Point2::new(v[0], v[1]), radius: v[2], amplitude: v[3] });
    }
    Ok(Phantom::new(bumps))
}

pub fn read_phantom(path: &Path) -> Result<Phantom> {
    parse_phantom(&read_text(path)?, &path.display().to_string())
}

pub fn format_phantom(p: &Phantom) -> String {
    let mut s = String::new();
    for b in &p.bumps {
        writeln!(s, "bump {:.16e} {:.16e} {:.16e} {:.16e}", b.center.x, b.center.y, b.radius, b.amplitude).unwrap();
    }
    s
}

pub fn write_phantom(p: &Phantom, path: &Path) -> Result<()> {
    Ok(fs::write(path, format_phantom(p))?)
}

fn push_row(s: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{v:.16e}").unwrap();
    }
    s.push('\n');
}

pub fn format_grid2(img: &GridImage) -> String {
    let mut s = String::with_capacity(24 * img.values.len() + 128);
    writeln!(
        s,
        "GRID2 v1 {} {} {:.16e} {:.16e} {:.16e} {:.16e}",
        img.nx, img.ny, img.origin.x, img.origin.y, img.spacing.0, img.spacing.1
    )
    .unwrap();
    for row in img.values.chunks(img.nx) {
        push_row(&mut s, row);
    }
    s
}

pub fn write_grid2(img: &GridImage, path: &Path) -> Result<()> {
    Ok(fs::write(path, format_grid2(img))?)
}

/// Reads exactly `count` numbers from one line.
fn number_line(line: Option<(usize, &str)>, count: usize, what: &str, path: &str) -> Result<Vec<f64>> {
    let (k, l) = line.ok_or_else(|| fmt_err(path, 0, format!("unexpected end of file, expected {what}")))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != count {
        return Err(fmt_err(path, k, format!("{what}: expected {count} values, found {}", toks.len())));
    }
    parse_numbers(&toks, path, k)
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(k, l)| (k + 1, l))
}

fn check_trailing<'a>(mut rest: impl Iterator<Item = (usize, &'a str)>, path: &str) -> Result<()> {
    match rest.find(|(_, l)| !l.trim().is_empty()) {
        Some((k, _)) => Err(fmt_err(path, k, "trailing data after the last row")),
        None => Ok(()),
    }
}

pub fn parse_grid2(text: &str, path: &str) -> Result<GridImage> {
    let mut lines = numbered_lines(text);
    let (k, header) = lines.next().ok_or_else(|| fmt_err(path, 1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 8 || toks[0] != "GRID2" || toks[1] != "v1" {
        return Err(fmt_err(path, k, "expected header `GRID2 v1 nx ny xmin ymin dx dy`"));
    }
    let nx = parse_usize(toks[2], path, k)?;
    let ny = parse_usize(toks[3], path, k)?;
    let h = parse_numbers(&toks[4..], path, k)?;
    if nx < 2 || ny < 2 || !(h[2] > 0.0 && h[3] > 0.0) {
        return Err(fmt_err(path, k, "need nx, ny >= 2 and positive spacing"));
    }
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        values.extend(number_line(lines.next(), nx, &format!("row {j}"), path)?);
    }
    check_trailing(lines, path)?;
    Ok(GridImage { nx, ny, origin: Point2::new(h[0], h[1]), spacing: (h[2], h[3]), values })
}

pub fn read_grid2(path: &Path) -> Result<GridImage> {
    parse_grid2(&read_text(path)?, &path.display().to_string())
}

/// Which quantity a BSER file holds; decides the meaning of its extent
/// (`R_max` for means, `T_max` for wave traces).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BserKind {
    Means,
    Wave,
}

impl BserKind {
    fn as_str(self) -> &'static str {
        match self {
            BserKind::Means => "means",
            BserKind::Wave => "wave",
        }
    }
}

pub fn format_bser(table: &BoundaryTable, kind: BserKind) -> String {
    let mut s = String::with_capacity(24 * table.values.len() + 64 * table.n_centers() + 128);
    writeln!(
        s,
        "BSER v1 {} {} {} {:.16e} {:.16e}",
        kind.as_str(),
        table.n_centers(),
        table.n_samples,
        table.step,
        table.extent()
    )
    .unwrap();
    for c in &table.centers {
        writeln!(s, "{:.16e} {:.16e}", c.x, c.y).unwrap();
    }
    for row in table.rows() {
        push_row(&mut s, row);
    }
    s
}

pub fn write_means(m: &MeansData, path: &Path) -> Result<()> {
    Ok(fs::write(path, format_bser(m, BserKind::Means))?)
}

pub fn write_wave(w: &WaveData, path: &Path) -> Result<()> {
    Ok(fs::write(path, format_bser(w, BserKind::Wave))?)
}

pub fn parse_bser(text: &str, path: &str) -> Result<(BserKind, BoundaryTable)> {
    let mut lines = numbered_lines(text);
    let (k, header) = lines.next().ok_or_else(|| fmt_err(path, 1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 7 || toks[0] != "BSER" || toks[1] != "v1" {
        return Err(fmt_err(path, k, "expected header `BSER v1 <kind> <n_centers> <n_samples> <step> <extent>`"));
    }
    let kind = match toks[2] {
        "means" => BserKind::Means,
        "wave" => BserKind::Wave,
        other => return Err(fmt_err(path, k, format!("unknown data kind {other:?}"))),
    };
    let n_centers = parse_usize(toks[3], path, k)?;
    let n_samples = parse_usize(toks[4], path, k)?;
    let step = parse_f64(toks[5], path, k)?;
    let extent = parse_f64(toks[6], path, k)?;
    if n_centers == 0 || n_samples == 0 || !(step > 0.0) {
        return Err(fmt_err(path, k, "need positive counts and step"));
    }
    if (extent - n_samples as f64 * step).abs() > 1e-9 * extent.abs() {
        return Err(fmt_err(path, k, format!("extent {extent} disagrees with n_samples * step")));
    }
    let mut centers = Vec::with_capacity(n_centers);
    for i in 0..n_centers {
        let c = number_line(lines.next(), 2, &format!("centre {i}"), path)?;
        centers.push(Point2::new(c[0], c[1]));
    }
    let mut values = Vec::with_capacity(n_centers * n_samples);
    for i in 0..n_centers {
        values.extend(number_line(lines.next(), n_samples, &format!("row {i}"), path)?);
    }
    check_trailing(lines, path)?;
    Ok((kind, BoundaryTable { centers, step, n_samples, values }))
}

pub fn read_bser(path: &Path) -> Result<(BserKind, BoundaryTable)> {
    parse_bser(&read_text(path)?, &path.display().to_string())
}

fn expect_kind(path: &Path, got: BserKind, want: BserKind) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(fmt_err(&path.display().to_string(), 1, format!("expected {} data, found {}", want.as_str(), got.as_str())))
    }
}

pub fn read_means(path: &Path) -> Result<MeansData> {
    let (kind, t) = read_bser(path)?;
    expect_kind(path, kind, BserKind::Means)?;
    Ok(MeansData(t))
}

pub fn read_wave(path: &Path) -> Result<WaveData> {
    let (kind, t) = read_bser(path)?;
    expect_kind(path, kind, BserKind::Wave)?;
    Ok(WaveData(t))
}

/// Appends one JSON record as a line to `path`.
pub fn append_json_line(path: &Path, record: &impl Serialize) -> Result<()> {
    let line = serde_json::to_string(record).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

pub fn write_json(path: &Path, record: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(record).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(fs::write(path, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_spec_lines() {
        let spec = parse_domain_spec("# unit\n\n  ellipse 0 0 1 0.8  # Figure\n", "d").unwrap();
        assert_eq!(spec, DomainSpec::Ellipse { cx: 0.0, cy: 0.0, a: 1.0, b: 0.8 });
        assert_eq!(parse_domain_spec(&spec.to_line(), "d").unwrap(), spec);
        let e = parse_domain_spec("disc 0 0\n", "d.txt").unwrap_err();
        assert!(e.to_string().starts_with("d.txt:1:"), "{e}");
        let e = parse_domain_spec("\nsquare 0 0 1\n", "d.txt").unwrap_err();
        assert!(e.to_string().starts_with("d.txt:2:"), "{e}");
        assert!(parse_domain_spec("disc 0 0 1\ndisc 0 0 2\n", "d").is_err());
    }

    #[test]
    fn phantom_lines() {
        let p = parse_phantom("bump 0.1 -0.2 0.3 1.5\n# c\nbump 0 0 0.1 -1\n", "p").unwrap();
        assert_eq!(p.bumps.len(), 2);
        assert_eq!(p.bumps[1].amplitude, -1.0);
        assert_eq!(parse_phantom(&format_phantom(&p), "p").unwrap(), p);
        let e = parse_phantom("bump 0 0 x 1\n", "p").unwrap_err();
        assert!(matches!(e, Error::Format { line: 1, .. }));
    }

    #[test]
    fn grid2_errors_carry_line_numbers() {
        let e = parse_grid2("GRID2 v1 2 2 0 0 1 1\n1 2\n3\n", "g").unwrap_err();
        assert!(matches!(e, Error::Format { line: 3, .. }), "{e}");
        let e = parse_grid2("GRID2 v1 2 2 0 0 1 1\n1 2\n3 4\n5\n", "g").unwrap_err();
        assert!(matches!(e, Error::Format { line: 4, .. }), "{e}");
        assert!(parse_grid2("GRID3 v1 2 2 0 0 1 1\n", "g").is_err());
    }

    #[test]
    fn bser_rejects_inconsistent_header() {
        let e = parse_bser("BSER v1 means 1 2 0.5 3.0\n0 0\n1 2\n", "b").unwrap_err();
        assert!(matches!(e, Error::Format { line: 1, .. }));
        let (kind, t) = parse_bser("BSER v1 wave 1 2 0.5 1.0\n0 1\n1 2\n", "b").unwrap();
        assert_eq!(kind, BserKind::Wave);
        assert_eq!(t.values, vec![1.0, 2.0]);
    }
}
