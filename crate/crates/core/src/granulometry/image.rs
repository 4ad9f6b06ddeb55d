//! Binary rasters, linear openings and pattern spectra.

use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Vertical,
    Horizontal,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        Ok(BinaryImage {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn area(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Lengths of maximal foreground runs along `dir`.
    pub fn runs(&self, dir: Direction) -> Vec<usize> {
        let (outer, inner) = match dir {
            Direction::Vertical => (self.width, self.height),
            Direction::Horizontal => (self.height, self.width),
        };
        let mut out = Vec::new();
        for o in 0..outer {
            let mut run = 0;
            for i in 0..inner {
                let on = match dir {
                    Direction::Vertical => self.get(o, i),
                    Direction::Horizontal => self.get(i, o),
                };
                if on {
                    run += 1;
                } else if run > 0 {
                    out.push(run);
                    run = 0;
                }
            }
            if run > 0 {
                out.push(run);
            }
        }
        out
    }

    fn line(&self, dir: Direction, o: usize) -> Vec<bool> {
        match dir {
            Direction::Vertical => (0..self.height).map(|y| self.get(o, y)).collect(),
            Direction::Horizontal => self.bits[o * self.width..(o + 1) * self.width].to_vec(),
        }
    }

    fn map_lines(&self, dir: Direction, f: impl Fn(&[bool]) -> Vec<bool>) -> BinaryImage {
        let mut out = self.clone();
        let outer = if dir == Direction::Vertical {
            self.width
        } else {
            self.height
        };
        for o in 0..outer {
            for (i, v) in f(&self.line(dir, o)).into_iter().enumerate() {
                match dir {
                    Direction::Vertical => out.set(o, i, v),
                    Direction::Horizontal => out.set(i, o, v),
                }
            }
        }
        out
    }

    /// Erosion by a segment of `len` pixels anchored at its first pixel.
    pub fn erode(&self, dir: Direction, len: usize) -> BinaryImage {
        self.map_lines(dir, |line| {
            (0..line.len())
                .map(|i| i + len <= line.len() && line[i..i + len].iter().all(|&b| b))
                .collect()
        })
    }

    /// Dilation by the same anchored segment (its reflection).
    pub fn dilate(&self, dir: Direction, len: usize) -> BinaryImage {
        self.map_lines(dir, |line| {
            (0..line.len())
                .map(|i| (i.saturating_sub(len - 1)..=i).any(|j| line[j]))
                .collect()
        })
    }

    pub fn open(&self, dir: Direction, len: usize) -> BinaryImage {
        if len <= 1 {
            return self.clone();
        }
        self.erode(dir, len).dilate(dir, len)
    }

    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.width, self.height);
        for y in 0..self.height {
            let row: Vec<&str> = (0..self.width)
                .map(|x| if self.get(x, y) { "1" } else { "0" })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_pbm(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                tokens.push((ln + 1, tok));
            }
        }
        let mut it = tokens.into_iter();
        match it.next() {
            Some((_, "P1")) => {}
            Some((ln, t)) => {
                return Err(Error::parse(ln, format!("expected P1 magic, found {t:?}")))
            }
            None => return Err(Error::parse(1, "empty PBM input")),
        }
        let mut dim = |what: &str| -> Result<usize> {
            let (ln, t) = it
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {what}")))?;
            t.parse()
                .map_err(|_| Error::parse(ln, format!("invalid {what} {t:?}")))
        };
        let (w, h) = (dim("width")?, dim("height")?);
        let mut img = BinaryImage::new(w, h)?;
        let mut idx = 0;
        for (ln, tok) in it {
            for c in tok.chars() {
                let v = match c {
                    '0' => false,
                    '1' => true,
                    _ => return Err(Error::parse(ln, format!("invalid pixel {c:?}"))),
                };
                if idx >= w * h {
                    return Err(Error::parse(ln, "more pixels than the header declares"));
                }
                img.bits[idx] = v;
                idx += 1;
            }
        }
        if idx != w * h {
            return Err(Error::parse(
                0,
                format!("expected {} pixels, found {idx}", w * h),
            ));
        }
        Ok(img)
    }
}

/// Opened areas `Omega(t)` for `t = 0..=t_max`, the structuring element at
/// scale `t` being a segment of `t + 1` pixels. An opening by a segment keeps
/// exactly the runs at least as long as the segment.
pub fn opening_area_sweep(img: &BinaryImage, dir: Direction, t_max: usize) -> Vec<u64> {
    let runs = img.runs(dir);
    (0..=t_max)
        .map(|t| runs.iter().filter(|&&r| r > t).map(|&r| r as u64).sum())
        .collect()
}

/// Sweep long enough to open the image to nothing.
pub fn full_sweep(img: &BinaryImage, dir: Direction) -> Vec<u64> {
    let longest = img.runs(dir).into_iter().max().unwrap_or(0);
    opening_area_sweep(img, dir, longest.max(1))
}

/// First and second moments of the pattern spectrum of a sweep. The jump of
/// the spectrum between scales `t` and `t + 1` is credited to size `t + 1`,
/// the pixel length of the longest segment that still fits.
pub fn pattern_spectrum_moments(omega: &[u64]) -> Result<[f64; 2]> {
    if let Some(t) = omega.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::CorruptSweep(t + 1));
    }
    let (Some(&first), Some(&last)) = (omega.first(), omega.last()) else {
        return Err(Error::invalid("empty sweep"));
    };
    if first == 0 {
        return Err(Error::Domain("pattern spectrum of an empty image".into()));
    }
    if last != 0 {
        return Err(Error::Domain(
            "sweep does not reach an empty opening".into(),
        ));
    }
    let mut m = [0.0; 2];
    for (t, w) in omega.windows(2).enumerate() {
        let jump = (w[0] - w[1]) as f64 / first as f64;
        let s = (t + 1) as f64;
        m[0] += s * jump;
        m[1] += s * s * jump;
    }
    Ok(m)
}

pub fn sweep_csv(omega: &[u64]) -> String {
    let mut s = String::from("t,omega,phi\n");
    let base = omega.first().copied().unwrap_or(0);
    for (t, &w) in omega.iter().enumerate() {
        let phi = if base > 0 {
            1.0 - w as f64 / base as f64
        } else {
            0.0
        };
        let _ = writeln!(s, "{t},{w},{phi}");
    }
    s
}
