//! Chebyshev type II band-pass design: analog prototype, low-pass to
//! band-pass mapping, bilinear transform with prewarped band edges, then
//! pole/zero pairing into second-order sections.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::{BiquadCascade, BiquadSection};
use crate::error::{Error, Result};

/// Extra stopband depth designed in on top of the requested attenuation.
/// An even-order prototype has its stopband ripple peak exactly at DC and
/// Nyquist after the band-pass mapping, so without headroom the requested
/// level is met only with equality.
pub const DESIGN_MARGIN_DB: f64 = 0.5;

/// Poles closer to the unit circle than this are rejected.
const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    ChebyshevII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDesign {
    pub kind: FilterKind,
    /// Order of the band-pass filter; each section contributes 2.
    pub order: usize,
    /// -3 dB band edges in Hz.
    pub passband_hz: (f64, f64),
    pub stopband_atten_db: f64,
    pub sample_rate_hz: f64,
}

impl Default for FilterDesign {
    fn default() -> Self {
        FilterDesign {
            kind: FilterKind::ChebyshevII,
            order: 4,
            passband_hz: (0.5, 8.0),
            stopband_atten_db: 30.0,
            sample_rate_hz: 64.0,
        }
    }
}

impl FilterDesign {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.passband_hz;
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(Error::InvalidDesign(format!(
                "order must be even and >= 2, got {}",
                self.order
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidDesign("sample rate must be positive".into()));
        }
        if !(lo > 0.0 && lo < hi && hi < self.sample_rate_hz / 2.0) {
            return Err(Error::InvalidDesign(format!(
                "band ({lo}, {hi}) Hz must satisfy 0 < low < high < {}",
                self.sample_rate_hz / 2.0
            )));
        }
        if !(self.stopband_atten_db.is_finite() && self.stopband_atten_db > 0.0) {
            return Err(Error::InvalidDesign("stopband attenuation must be positive".into()));
        }
        Ok(())
    }

    fn prototype_order(&self) -> usize {
        self.order / 2
    }

    fn ripple_eps(&self) -> f64 {
        let rs = self.stopband_atten_db + DESIGN_MARGIN_DB;
        1.0 / (10f64.powf(rs / 10.0) - 1.0).sqrt()
    }

    /// Stopband edge of the unit-bandwidth low-pass prototype, relative to its
    /// -3 dB frequency.
    fn prototype_stopband_edge(&self) -> f64 {
        let n = self.prototype_order() as f64;
        ((1.0 / self.ripple_eps()).acosh() / n).cosh()
    }

    fn prewarp(&self, f_hz: f64) -> f64 {
        2.0 * self.sample_rate_hz * (PI * f_hz / self.sample_rate_hz).tan()
    }

    fn unwarp(&self, omega: f64) -> f64 {
        self.sample_rate_hz / PI * (omega / (2.0 * self.sample_rate_hz)).atan()
    }

    /// Digital band centre: the image of the analog geometric centre.
    pub fn center_hz(&self) -> f64 {
        let w0 = (self.prewarp(self.passband_hz.0) * self.prewarp(self.passband_hz.1)).sqrt();
        self.unwarp(w0)
    }

    /// Frequencies in Hz below the first and above the second of which the
    /// magnitude response stays at or under `-(stopband_atten_db + margin)` dB.
    pub fn stopband_edges_hz(&self) -> (f64, f64) {
        let wl = self.prewarp(self.passband_hz.0);
        let wh = self.prewarp(self.passband_hz.1);
        let w0_sq = wl * wh;
        let span = self.prototype_stopband_edge() * (wh - wl);
        let root = (span * span + 4.0 * w0_sq).sqrt();
        (self.unwarp((root - span) / 2.0), self.unwarp((root + span) / 2.0))
    }

    /// `kind=cheby2`, `order=`, `band=lo,hi`, `atten_db=`, `fs=` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind=cheby2");
        let _ = writeln!(out, "order={}", self.order);
        let _ = writeln!(out, "band={},{}", self.passband_hz.0, self.passband_hz.1);
        let _ = writeln!(out, "atten_db={}", self.stopband_atten_db);
        let _ = writeln!(out, "fs={}", self.sample_rate_hz);
        out
    }

    pub fn from_text(text: &str) -> Result<FilterDesign> {
        let mut d = FilterDesign::default();
        for line in text.lines() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::InvalidDesign(format!("expected key=value, got {t:?}")))?;
            d.set(k.trim(), v.trim())?;
        }
        d.validate()?;
        Ok(d)
    }

    /// Sets one design parameter from its text key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidDesign(format!("bad value for {key}: {value:?}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        match key {
            "kind" if value == "cheby2" => self.kind = FilterKind::ChebyshevII,
            "order" => self.order = value.parse().map_err(|_| bad())?,
            "band" => {
                let (lo, hi) = value.split_once(',').ok_or_else(bad)?;
                self.passband_hz = (num(lo)?, num(hi)?);
            }
            "atten_db" => self.stopband_atten_db = num(value)?,
            "fs" => self.sample_rate_hz = num(value)?,
            _ => return Err(Error::InvalidDesign(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

/// Analog Chebyshev II low-pass prototype with its -3 dB point at 1 rad/s.
/// Returns (zeros, poles).
fn analog_prototype(design: &FilterDesign) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = design.prototype_order();
    let nf = n as f64;
    let eps = design.ripple_eps();
    let mu = (1.0 / eps).asinh() / nf;
    // roots are first built for a unit stopband edge, then rescaled
    let scale = design.prototype_stopband_edge();
    let mut zeros = Vec::with_capacity(n);
    let mut poles = Vec::with_capacity(n);
    for i in 0..n {
        let m = 2.0 * i as f64 - nf + 1.0;
        let theta = PI * m / (2.0 * nf);
        if m != 0.0 {
            zeros.push(Complex64::new(0.0, 1.0 / theta.sin()) * scale);
        }
        let p = -Complex64::from_polar(1.0, theta);
        let p = Complex64::new(mu.sinh() * p.re, mu.cosh() * p.im);
        poles.push(p.inv() * scale);
    }
    (zeros, poles)
}

/// Designs the band-pass cascade; sections are ordered by ascending pole radius.
pub fn design_chebyshev2(design: &FilterDesign) -> Result<BiquadCascade> {
    design.validate()?;
    let (lp_zeros, lp_poles) = analog_prototype(design);

    let wl = design.prewarp(design.passband_hz.0);
    let wh = design.prewarp(design.passband_hz.1);
    let bw = wh - wl;
    let w0_sq = wl * wh;

    let to_bandpass = |r: &Complex64| {
        let half = r * bw / 2.0;
        let disc = (half * half - w0_sq).sqrt();
        [half + disc, half - disc]
    };
    let mut bp_zeros: Vec<Complex64> = lp_zeros.iter().flat_map(to_bandpass).collect();
    bp_zeros.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), lp_poles.len() - lp_zeros.len()));
    let bp_poles: Vec<Complex64> = lp_poles.iter().flat_map(to_bandpass).collect();

    let fs2 = 2.0 * design.sample_rate_hz;
    let bilinear = |s: &Complex64| (fs2 + s) / (fs2 - s);
    let mut d_zeros: Vec<Complex64> = bp_zeros.iter().map(bilinear).collect();
    d_zeros.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), bp_poles.len() - bp_zeros.len()));
    let d_poles: Vec<Complex64> = bp_poles.iter().map(bilinear).collect();

    // sign of the overall digital gain; its magnitude is fixed below by
    // normalizing the band centre to unity
    let lp_gain = (lp_poles.iter().fold(Complex64::new(1.0, 0.0), |a, p| a * -p)
        / lp_zeros.iter().fold(Complex64::new(1.0, 0.0), |a, z| a * -z))
    .re;
    let bilinear_gain = (bp_zeros.iter().fold(Complex64::new(1.0, 0.0), |a, z| a * (fs2 - z))
        / bp_poles.iter().fold(Complex64::new(1.0, 0.0), |a, p| a * (fs2 - p)))
    .re;
    let sign = (lp_gain * bilinear_gain).signum();

    let pole_pairs = conjugate_pairs(d_poles);
    let mut zero_pairs = conjugate_pairs(d_zeros);

    let mut by_radius: Vec<[Complex64; 2]> = pole_pairs;
    by_radius.sort_by(|a, b| pair_radius(b).total_cmp(&pair_radius(a)));
    let mut paired = Vec::with_capacity(by_radius.len());
    for poles in by_radius {
        let (best, _) = zero_pairs
            .iter()
            .enumerate()
            .map(|(i, zs)| (i, (zs[0] - poles[0]).norm().min((zs[1] - poles[0]).norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("as many zero pairs as pole pairs");
        paired.push((poles, zero_pairs.swap_remove(best)));
    }
    paired.sort_by(|a, b| pair_radius(&a.0).total_cmp(&pair_radius(&b.0)));

    let omega_c = 2.0 * PI * design.center_hz() / design.sample_rate_hz;
    let mut sections = Vec::with_capacity(paired.len());
    for (idx, (poles, zeros)) in paired.iter().enumerate() {
        let modulus = pair_radius(poles);
        if modulus.is_nan() || modulus >= 1.0 - STABILITY_MARGIN {
            return Err(Error::UnstableSection { section: idx, modulus });
        }
        let mut s = BiquadSection {
            b0: 1.0,
            b1: -(zeros[0] + zeros[1]).re,
            b2: (zeros[0] * zeros[1]).re,
            a1: -(poles[0] + poles[1]).re,
            a2: (poles[0] * poles[1]).re,
        };
        let g = s.response(omega_c).norm();
        let k = if idx == 0 { sign / g } else { 1.0 / g };
        s.b0 *= k;
        s.b1 *= k;
        s.b2 *= k;
        sections.push(s);
    }
    Ok(BiquadCascade {
        sections,
        design: Some(design.clone()),
    })
}

fn pair_radius(pair: &[Complex64; 2]) -> f64 {
    pair[0].norm().max(pair[1].norm())
}

/// Groups roots into conjugate pairs; real roots are paired with each other
/// in sorted order.
fn conjugate_pairs(mut roots: Vec<Complex64>) -> Vec<[Complex64; 2]> {
    const TOL: f64 = 1e-10;
    let mut pairs = Vec::with_capacity(roots.len() / 2);
    let mut reals = Vec::new();
    while let Some(r) = roots.pop() {
        if r.im.abs() <= TOL * r.norm().max(1.0) {
            reals.push(Complex64::new(r.re, 0.0));
            continue;
        }
        let (j, _) = roots
            .iter()
            .enumerate()
            .map(|(j, c)| (j, (c - r.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("complex roots come in conjugate pairs");
        roots.swap_remove(j);
        let upper = if r.im > 0.0 { r } else { r.conj() };
        pairs.push([upper, upper.conj()]);
    }
    reals.sort_by(|a, b| a.re.total_cmp(&b.re));
    for chunk in reals.chunks(2) {
        pairs.push([chunk[0], chunk[1]]);
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::apply_filter;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn default_design_edges() {
        let d = FilterDesign::default();
        let c = design_chebyshev2(&d).unwrap();
        assert_eq!(c.sections.len(), 2);
        assert!(c.is_stable());
        let fs = d.sample_rate_hz;
        let limit = 10f64.powf(-d.stopband_atten_db / 20.0);
        assert!(c.magnitude_at(0.0, fs) < limit);
        assert!(c.magnitude_at(fs / 2.0, fs) < limit);
        let centre = c.magnitude_at((0.5f64 * 8.0).sqrt(), fs);
        assert!(db(centre).abs() < 3.0, "centre gain {} dB", db(centre));
        assert!((c.magnitude_at(d.center_hz(), fs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn passband_edges_at_minus_3db() {
        let d = FilterDesign::default();
        let c = design_chebyshev2(&d).unwrap();
        for f in [d.passband_hz.0, d.passband_hz.1] {
            let g = db(c.magnitude_at(f, d.sample_rate_hz));
            assert!((g + 10.0 * 2f64.log10()).abs() < 1e-6, "{f} Hz: {g} dB");
        }
    }

    #[test]
    fn stopband_holds_beyond_analytic_edges() {
        let d = FilterDesign::default();
        let c = design_chebyshev2(&d).unwrap();
        let (lo, hi) = d.stopband_edges_hz();
        assert!(lo < d.passband_hz.0 && hi > d.passband_hz.1 && hi < 32.0);
        let limit = 10f64.powf(-d.stopband_atten_db / 20.0);
        for i in 0..=400 {
            let f_lo = lo * i as f64 / 400.0;
            let f_hi = hi + (32.0 - hi) * i as f64 / 400.0;
            assert!(c.magnitude_at(f_lo, 64.0) <= limit, "{f_lo}");
            assert!(c.magnitude_at(f_hi, 64.0) <= limit, "{f_hi}");
        }
    }

    #[test]
    fn passband_is_monotone_below_centre() {
        let d = FilterDesign::default();
        let c = design_chebyshev2(&d).unwrap();
        let fc = d.center_hz();
        let mut prev = 0.0;
        for i in 0..=200 {
            let f = d.passband_hz.0 + (fc - d.passband_hz.0) * i as f64 / 200.0;
            let g = c.magnitude_at(f, 64.0);
            assert!(g >= prev - 1e-12);
            prev = g;
        }
    }

    #[test]
    fn sections_ordered_by_pole_radius() {
        for order in [2, 4, 6, 8] {
            let d = FilterDesign { order, ..FilterDesign::default() };
            let c = design_chebyshev2(&d).unwrap();
            let radii: Vec<f64> = c.sections.iter().map(BiquadSection::max_pole_modulus).collect();
            assert!(radii.windows(2).all(|w| w[0] <= w[1]), "{radii:?}");
        }
    }

    #[test]
    fn invalid_designs_rejected() {
        let bad = [
            FilterDesign { order: 3, ..FilterDesign::default() },
            FilterDesign { order: 0, ..FilterDesign::default() },
            FilterDesign { passband_hz: (8.0, 0.5), ..FilterDesign::default() },
            FilterDesign { passband_hz: (0.5, 40.0), ..FilterDesign::default() },
            FilterDesign { stopband_atten_db: -1.0, ..FilterDesign::default() },
        ];
        for d in bad {
            assert!(matches!(design_chebyshev2(&d), Err(Error::InvalidDesign(_))), "{d:?}");
        }
    }

    #[test]
    fn design_text_round_trip() {
        let d = FilterDesign {
            order: 6,
            passband_hz: (0.7, 3.5),
            stopband_atten_db: 40.0,
            sample_rate_hz: 128.0,
            ..FilterDesign::default()
        };
        assert_eq!(FilterDesign::from_text(&d.to_text()).unwrap(), d);
        let c = design_chebyshev2(&d).unwrap();
        let back = BiquadCascade::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(FilterDesign::from_text("kind=cheby2\nripple=3\n").is_err());
    }

    #[test]
    fn filtering_centre_tone_passes() {
        let d = FilterDesign::default();
        let c = design_chebyshev2(&d).unwrap();
        let fc = d.center_hz();
        let x: Vec<f64> = (0..4096).map(|n| (2.0 * PI * fc * n as f64 / 64.0).sin()).collect();
        let y = apply_filter(&c, &x).unwrap();
        let peak = y[2048..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.01, "{peak}");
    }
}
