//! File formats: one-value-per-line CSV, PGM images and key=value reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Significant digits written for every sample.
pub const CSV_DIGITS: usize = 12;

/// Decimal text with `digits` significant digits and no trailing zeros.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..digits as i32).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(values.len() * 16);
    for v in values {
        text.push_str(&format_sig(*v, CSV_DIGITS));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Format(format!("line {}: `{line}` is not a number", i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<f64>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Columns of equal length written as `name1,name2,...` CSV with a header.
pub fn write_series(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != len) {
        return Err(Error::Dimension("series columns differ in length".into()));
    }
    let mut text = String::from("index");
    for (name, _) in columns {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for i in 0..len {
        text.push_str(&i.to_string());
        for (_, col) in columns {
            text.push(',');
            text.push_str(&format_sig(col[i], CSV_DIGITS));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Grayscale image with integer samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples in `0..=maxval`.
    pub pixels: Vec<u16>,
}

impl GrayImage {
    /// Samples scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        let m = f64::from(self.maxval);
        self.pixels.iter().map(|&p| f64::from(p) / m).collect()
    }

    /// Quantizes `[0, 1]` values, clamping anything outside.
    pub fn from_unit(width: usize, height: usize, maxval: u16, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        let m = f64::from(maxval);
        let pixels = values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * m).round() as u16)
            .collect();
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// Top-left `h x w` crop.
    pub fn crop(&self, height: usize, width: usize) -> Result<Self> {
        if height > self.height || width > self.width {
            return Err(Error::Dimension(format!(
                "cannot crop {}x{} to {height}x{width}",
                self.height, self.width
            )));
        }
        let pixels = (0..height)
            .flat_map(|i| {
                self.pixels[i * self.width..i * self.width + width]
                    .iter()
                    .copied()
            })
            .collect();
        Ok(Self {
            width,
            height,
            maxval: self.maxval,
            pixels,
        })
    }
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("PGM ended early".into()));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .map_err(|_| Error::Format("PGM header is not ASCII".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.next()?;
        tok.parse()
            .map_err(|_| Error::Format(format!("PGM {what}: `{tok}` is not a number")))
    }
}

/// Reads a P2 (ASCII) or P5 (binary) PGM. Color formats are rejected.
pub fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut tok = Tokens { data, pos: 0 };
    let magic = tok.next()?;
    let binary = match magic {
        "P5" => true,
        "P2" => false,
        "P3" | "P6" => return Err(Error::Format("color PPM images are not supported".into())),
        other => return Err(Error::Format(format!("not a PGM file (magic `{other}`)"))),
    };
    let width = tok.number("width")?;
    let height = tok.number("height")?;
    let maxval = tok.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("PGM with an empty side".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = tok.pos + 1;
        let bytes = if maxval < 256 { 1 } else { 2 };
        let raster = data
            .get(start..start + count * bytes)
            .ok_or_else(|| Error::Format("PGM raster is truncated".into()))?;
        if bytes == 1 {
            pixels.extend(raster.iter().map(|&b| u16::from(b)));
        } else {
            pixels.extend(
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]])),
            );
        }
    } else {
        for _ in 0..count {
            pixels.push(tok.number("sample")? as u16);
        }
    }
    if pixels.iter().any(|&p| usize::from(p) > maxval) {
        return Err(Error::Format("PGM sample exceeds maxval".into()));
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    parse_pgm(&fs::read(path)?)
}

/// Binary P5 encoding.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval < 256 {
        out.extend(img.pixels.iter().map(|&p| p as u8));
    } else {
        for p in &img.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
    }
    out
}

/// ASCII P2 encoding.
pub fn encode_pgm_ascii(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(img))?;
    Ok(())
}

/// Ordered `key = value` pairs grouped in `[section]` blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    pub sections: Vec<KvSection>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvSection {
    /// Empty for lines that precede any header.
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl KvSection {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            entries: Vec::new(),
        }
    }
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDocument {
            sections: vec![KvSection::default()],
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                doc.sections.push(KvSection::new(name.trim()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", i + 1)))?;
            doc.sections
                .last_mut()
                .expect("at least one section")
                .push(k.trim(), v.trim());
        }
        doc.sections
            .retain(|s| !(s.name.is_empty() && s.entries.is_empty()));
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&KvSection> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a KvSection> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if !s.name.is_empty() {
                out.push_str(&format!("[{}]\n", s.name));
            }
            for (k, v) in &s.entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}
