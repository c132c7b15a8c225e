//! Text field files and PGM masks.
//!
//! Field format: a header line `FMFIELD nx ny h` followed by `ny` lines of
//! `nx` whitespace-separated values, row `j = 0` first. Values are written
//! in Rust's shortest round-trip form, so parsing a written file restores
//! every bit of a finite field.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

pub const FIELD_MAGIC: &str = "FMFIELD";

pub fn write_field_to<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let g = field.grid();
    writeln!(out, "{FIELD_MAGIC} {} {} {}", g.nx(), g.ny(), g.h())?;
    for row in field.values().chunks(g.nx()) {
        let mut line = String::with_capacity(row.len() * 24);
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_field_to(field, BufWriter::new(file))
}

fn parse_error(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parses a field file. Infinite entries are accepted (unsolved distances).
pub fn read_field_from<R: BufRead>(input: R) -> Result<ScalarField> {
    let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let header = header?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&FIELD_MAGIC) {
        return Err(parse_error(1, format!("expected header starting with {FIELD_MAGIC}")));
    }
    if tokens.len() != 4 {
        return Err(parse_error(1, format!("expected `{FIELD_MAGIC} nx ny h`, found {} fields", tokens.len())));
    }
    let nx: usize = tokens[1].parse().map_err(|_| parse_error(1, format!("bad nx `{}`", tokens[1])))?;
    let ny: usize = tokens[2].parse().map_err(|_| parse_error(1, format!("bad ny `{}`", tokens[2])))?;
    let h: f64 = tokens[3].parse().map_err(|_| parse_error(1, format!("bad h `{}`", tokens[3])))?;
    let grid = Grid2D::new(nx, ny, h).map_err(|e| parse_error(1, e.to_string()))?;

    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (line_no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > ny {
            return Err(parse_error(line_no, format!("expected {ny} rows, found more")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_error(line_no, format!("non-numeric token `{tok}`")))?;
            if v.is_nan() {
                return Err(parse_error(line_no, "NaN is not a valid field value"));
            }
            values.push(v);
        }
        let found = values.len() - before;
        if found != nx {
            return Err(parse_error(line_no, format!("expected {nx} values, found {found}")));
        }
    }
    if rows != ny {
        return Err(parse_error(ny + 1, format!("expected {ny} rows, found {rows}")));
    }
    ScalarField::new_unchecked_finite(grid, values)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_field_from(BufReader::new(fs::File::open(path)?))
}

/// Binary mask from an 8-bit PGM (`P2` or `P5`): pixels above 127 are 1.
/// The first image row becomes grid row `j = 0`. Spacing is `1 / max(nx, ny)`.
pub fn parse_pgm_mask(bytes: &[u8]) -> Result<ScalarField> {
    let mut cursor = PgmCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::Format(format!("unsupported PGM magic number `{other}`"))),
    };
    let nx = cursor.number("width")?;
    let ny = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("only 8-bit PGM is supported, maxval is {maxval}")));
    }
    let grid = Grid2D::new(nx, ny, 1.0 / nx.max(ny) as f64)?;
    let n = grid.len();
    let pixels: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = cursor.pos + 1;
        let raster = bytes
            .get(start..start + n)
            .ok_or_else(|| Error::Format(format!("raster holds fewer than {n} bytes")))?;
        raster.iter().map(|&b| b as usize).collect()
    } else {
        (0..n).map(|_| cursor.number("pixel")).collect::<Result<_>>()?
    };
    let values = pixels.into_iter().map(|v| if v > 127 { 1.0 } else { 0.0 }).collect();
    ScalarField::new(grid, values)
}

pub fn read_mask_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_pgm_mask(&bytes)
}

/// Reads a target given either as a PGM image or as a field file.
pub fn read_target(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(FIELD_MAGIC.as_bytes()) {
        read_field_from(bytes.as_slice())
    } else {
        parse_pgm_mask(&bytes)
    }
}

/// Writes a binary mask as a `P5` PGM with 0/255 pixels.
pub fn write_mask_pgm(mask: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let g = mask.grid();
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let raster: Vec<u8> = mask.values().iter().map(|&v| if v >= 0.5 { 255 } else { 0 }).collect();
    out.write_all(&raster)?;
    out.flush()?;
    Ok(())
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn token(&mut self) -> Result<String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(Error::Format("truncated PGM header".into())),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Format(format!("bad PGM {what} `{tok}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_round_trip() {
        let g = Grid2D::new(3, 3, 0.25).unwrap();
        let f = ScalarField::zeros(g);
        let mut buf = Vec::new();
        write_field_to(&f, &mut buf).unwrap();
        assert!(buf.starts_with(b"FMFIELD 3 3 0.25\n"));
        assert_eq!(read_field_from(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn missing_row_is_reported() {
        let err = read_field_from("FMFIELD 2 2 0.5\n1 2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected 2 rows, found 1"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_field_from("FMFIELD 2 2 0.5\n1 2\n3 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_field_from("FMFIELD 2 2 0.5\n1 2 3\n3 4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_field_from("FIELD 2 2 0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_field_from("FMFIELD 2 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_field_from("FMFIELD 1 2 1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("nx out of range"));
    }

    #[test]
    fn infinities_survive() {
        let g = Grid2D::new(2, 2, 1.0).unwrap();
        let f = ScalarField::new_unchecked_finite(g, vec![0.0, f64::INFINITY, 1.5, -0.0]).unwrap();
        let mut buf = Vec::new();
        write_field_to(&f, &mut buf).unwrap();
        let back = read_field_from(buf.as_slice()).unwrap();
        assert_eq!(back.values()[1], f64::INFINITY);
        assert!(back.values()[3].is_sign_negative());
    }

    #[test]
    fn plain_and_raw_pgm() {
        let white = parse_pgm_mask(b"P2\n# comment\n3 2\n255\n255 255 255\n200 128 255\n").unwrap();
        assert!(white.values().iter().all(|&v| v == 1.0));
        assert_eq!(white.grid().h(), 1.0 / 3.0);

        let mut raw = b"P5\n2 2\n255\n".to_vec();
        raw.extend_from_slice(&[0, 0, 127, 10]);
        let black = parse_pgm_mask(&raw).unwrap();
        assert!(black.values().iter().all(|&v| v == 0.0));

        let mut checker = b"P5 4 3 255\n".to_vec();
        checker.extend((0..12).map(|p| if (p % 4 + p / 4) % 2 == 0 { 255u8 } else { 0 }));
        let mask = parse_pgm_mask(&checker).unwrap();
        for p in 0..12 {
            assert_eq!(mask[p], ((p % 4 + p / 4) % 2 == 0) as u8 as f64);
        }
    }

    #[test]
    fn rejects_other_formats() {
        assert!(matches!(parse_pgm_mask(b"P6\n2 2\n255\n"), Err(Error::Format(_))));
        assert!(matches!(parse_pgm_mask(b"P5\n2 2\n65535\n"), Err(Error::Format(_))));
        assert!(matches!(parse_pgm_mask(b"P5\n2 2\n255\n\x00"), Err(Error::Format(_))));
    }
}
