use std::fmt::Write as _;

use num_complex::Complex64;

use super::FilterDesign;
use crate::error::{Error, Result};

/// Second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadSection {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadSection {
    pub const IDENTITY: BiquadSection = BiquadSection {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        quadratic_roots(self.a1, self.a2)
    }

    pub fn max_pole_modulus(&self) -> f64 {
        let [p, q] = self.poles();
        p.norm().max(q.norm())
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_modulus() < 1.0
    }

    /// Transfer function evaluated at `z = e^{j omega}` (omega in rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        let zi = Complex64::from_polar(1.0, -omega);
        let zi2 = zi * zi;
        (self.b0 + zi * self.b1 + zi2 * self.b2) / (1.0 + zi * self.a1 + zi2 * self.a2)
    }
}

/// Cascade of second-order sections applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    pub sections: Vec<BiquadSection>,
    pub design: Option<FilterDesign>,
}

impl BiquadCascade {
    pub fn new(sections: Vec<BiquadSection>) -> Self {
        BiquadCascade { sections, design: None }
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(BiquadSection::is_stable)
    }

    pub fn response(&self, omega: f64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    /// Magnitude response at `freq_hz` for sampling rate `fs_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, fs_hz: f64) -> f64 {
        self.response(2.0 * std::f64::consts::PI * freq_hz / fs_hz).norm()
    }

    /// Expanded direct-form coefficients `(b, a)` of the whole cascade, `a[0] = 1`.
    pub fn to_polynomials(&self) -> (Vec<f64>, Vec<f64>) {
        let mut b = vec![1.0];
        let mut a = vec![1.0];
        for s in &self.sections {
            b = poly_mul(&b, &[s.b0, s.b1, s.b2]);
            a = poly_mul(&a, &[1.0, s.a1, s.a2]);
        }
        (b, a)
    }

    /// Design header (when known) followed by one `b0 b1 b2 a1 a2` line per
    /// section at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(d) = &self.design {
            out.push_str(&d.to_text());
        }
        let _ = writeln!(out, "sections={}", self.sections.len());
        for s in &self.sections {
            let _ = writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                s.b0, s.b1, s.b2, s.a1, s.a2
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BiquadCascade> {
        let mut header = String::new();
        let mut lines = text.lines().enumerate();
        let mut n_sections = None;
        for (i, line) in lines.by_ref() {
            let t = line.trim();
            if let Some(v) = t.strip_prefix("sections=") {
                n_sections = Some(v.trim().parse::<usize>().map_err(|_| bad_line(i, t))?);
                break;
            }
            header.push_str(line);
            header.push('\n');
        }
        let n_sections = n_sections.ok_or_else(|| Error::InvalidDesign("missing sections= line".into()))?;
        let design = if header.trim().is_empty() {
            None
        } else {
            Some(FilterDesign::from_text(&header)?)
        };
        let mut sections = Vec::with_capacity(n_sections);
        for (i, line) in lines {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v = t
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad_line(i, t))?;
            let [b0, b1, b2, a1, a2] = v[..] else {
                return Err(bad_line(i, t));
            };
            sections.push(BiquadSection { b0, b1, b2, a1, a2 });
        }
        if sections.len() != n_sections {
            return Err(Error::InvalidDesign(format!(
                "expected {n_sections} sections, found {}",
                sections.len()
            )));
        }
        Ok(BiquadCascade { sections, design })
    }
}

fn bad_line(i: usize, t: &str) -> Error {
    Error::InvalidDesign(format!("line {}: {t:?}", i + 1))
}

/// Runs the cascade over `signal` in transposed direct form II, one pass,
/// with zero initial state.
pub fn apply_filter(cascade: &BiquadCascade, signal: &[f64]) -> Result<Vec<f64>> {
    let mut state = vec![[0.0f64; 2]; cascade.sections.len()];
    let mut out = Vec::with_capacity(signal.len());
    for (n, &x) in signal.iter().enumerate() {
        let mut v = x;
        for (s, z) in cascade.sections.iter().zip(state.iter_mut()) {
            let y = s.b0 * v + z[0];
            z[0] = s.b1 * v - s.a1 * y + z[1];
            z[1] = s.b2 * v - s.a2 * y;
            v = y;
        }
        if !v.is_finite() {
            return Err(Error::NonFinite { index: n });
        }
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn quadratic_roots(a1: f64, a2: f64) -> [Complex64; 2] {
    let half = Complex64::new(-a1 / 2.0, 0.0);
    let disc = (half * half - a2).sqrt();
    [half + disc, half - disc]
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let c = BiquadCascade::new(vec![BiquadSection {
            b0: 0.3,
            b1: 0.1,
            b2: -0.2,
            a1: -0.5,
            a2: 0.2,
        }]);
        assert_eq!(apply_filter(&c, &[0.0; 16]).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn identity_section_passes_impulse() {
        let c = BiquadCascade::new(vec![BiquadSection::IDENTITY]);
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        assert_eq!(apply_filter(&c, &x).unwrap(), x);
    }

    #[test]
    fn impulse_response_matches_difference_equation() {
        let s = BiquadSection {
            b0: 0.5,
            b1: 0.25,
            b2: -0.125,
            a1: -0.9,
            a2: 0.4,
        };
        let c = BiquadCascade::new(vec![s]);
        let mut x = vec![0.0; 20];
        x[0] = 1.0;
        let y = apply_filter(&c, &x).unwrap();
        // direct form I reference
        let mut r = vec![0.0; 20];
        for n in 0..20 {
            let xn = |k: usize| if n >= k { x[n - k] } else { 0.0 };
            let yn = |k: usize| if n >= k { r[n - k] } else { 0.0 };
            r[n] = s.b0 * xn(0) + s.b1 * xn(1) + s.b2 * xn(2) - s.a1 * yn(1) - s.a2 * yn(2);
        }
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn unstable_section_blows_up_with_index() {
        let c = BiquadCascade::new(vec![BiquadSection {
            b0: 1.0,
            b1: 0.0,
            b2: 0.0,
            a1: -4.0,
            a2: 0.0,
        }]);
        assert!(!c.is_stable());
        let mut x = vec![0.0; 2000];
        x[0] = 1.0;
        match apply_filter(&c, &x) {
            Err(Error::NonFinite { index }) => assert!(index > 100),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip_without_design() {
        let c = BiquadCascade::new(vec![
            BiquadSection {
                b0: 0.1,
                b1: 1.0 / 3.0,
                b2: -2e-9,
                a1: -1.2345678901234567,
                a2: 0.5,
            },
            BiquadSection::IDENTITY,
        ]);
        let back = BiquadCascade::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }
}
