//! Frequency-domain MIMO channel model on an OFDM resource grid.
//!
//! The channel is a tapped delay line with an exponentially decaying power
//! profile: per realization one i.i.d. circularly-symmetric complex Gaussian
//! gain matrix is drawn per tap, and the per-subcarrier response is the DFT
//! of the tap gains at that subcarrier's frequency. Tap powers sum to one,
//! so the average per-entry channel gain is one and the sweep axis stays a
//! pure transmit-power ratio.
//!
//! Randomness is stream-seeded: a master seed keys the generator and the
//! realization index selects an independent stream, so any trial can be
//! regenerated in isolation and bit-identically.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{CMat, Scalar};

/// OFDM resource-grid geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    n_rbs: usize,
    sc_per_rb: usize,
    scs_hz: T,
}

impl<T: Scalar> GridSpec<T> {
    /// Validates and builds a grid geometry.
    pub fn new(n_rbs: usize, sc_per_rb: usize, scs_hz: T) -> Result<Self> {
        if n_rbs == 0 || sc_per_rb == 0 {
            return Err(Error::Parameter(format!(
                "grid must have at least one resource block and subcarrier, got {n_rbs} x {sc_per_rb}"
            )));
        }
        if !(scs_hz > T::zero()) {
            return Err(Error::Parameter("subcarrier spacing must be positive".into()));
        }
        Ok(Self {
            n_rbs,
            sc_per_rb,
            scs_hz,
        })
    }

    /// 100 MHz carrier at 30 kHz subcarrier spacing: 270 resource blocks of
    /// 12 subcarriers.
    pub fn nr_100mhz() -> Self {
        Self::new(270, 12, T::from_f64(30_000.0).expect("spacing fits scalar"))
            .expect("default geometry is valid")
    }

    /// Number of resource blocks.
    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    /// Subcarriers per resource block.
    pub fn sc_per_rb(&self) -> usize {
        self.sc_per_rb
    }

    /// Subcarrier spacing in Hz.
    pub fn scs_hz(&self) -> T {
        self.scs_hz
    }

    /// Total subcarrier count.
    pub fn n_subcarriers(&self) -> usize {
        self.n_rbs * self.sc_per_rb
    }
}

/// Tapped-delay-line power-delay profile.
#[derive(Clone, Debug, PartialEq)]
pub struct TdlProfile<T> {
    delays_s: Vec<T>,
    powers: Vec<T>,
    rms_delay_spread_s: T,
}

impl<T: Scalar> TdlProfile<T> {
    /// Single tap at zero delay: a frequency-flat channel.
    pub fn single_tap() -> Self {
        Self {
            delays_s: vec![T::zero()],
            powers: vec![T::one()],
            rms_delay_spread_s: T::zero(),
        }
    }

    /// Tap delays in seconds, ascending from zero.
    pub fn delays_s(&self) -> &[T] {
        &self.delays_s
    }

    /// Tap powers, summing to one.
    pub fn powers(&self) -> &[T] {
        &self.powers
    }

    /// Target RMS delay spread recorded at construction.
    pub fn rms_delay_spread_s(&self) -> T {
        self.rms_delay_spread_s
    }

    /// Number of taps.
    pub fn n_taps(&self) -> usize {
        self.delays_s.len()
    }

    /// RMS delay spread computed from the tap data.
    pub fn realized_rms_s(&self) -> T {
        rms_of(&self.delays_s, &self.powers)
    }

    /// Checks the profile invariants: powers sum to one (1e-12 in double
    /// precision), delays ascend from zero, and the realized RMS spread is
    /// within 5% of the recorded one.
    pub fn validate(&self) -> Result<()> {
        if self.delays_s.is_empty() || self.delays_s.len() != self.powers.len() {
            return Err(Error::Parameter("profile tap lists are empty or mismatched".into()));
        }
        if self.delays_s[0] != T::zero() {
            return Err(Error::Parameter("first tap must sit at zero delay".into()));
        }
        for pair in self.delays_s.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Parameter("tap delays must be strictly ascending".into()));
            }
        }
        let sum = self.powers.iter().fold(T::zero(), |a, &p| a + p);
        let tol = T::from_f64(1e-12)
            .unwrap()
            .max(T::epsilon() * T::from_usize(16 * self.powers.len()).unwrap());
        if (sum - T::one()).abs() > tol {
            return Err(Error::Parameter(format!("tap powers sum to {sum}, expected 1")));
        }
        let realized = self.realized_rms_s();
        let target = self.rms_delay_spread_s;
        let five_pct = T::from_f64(0.05).unwrap();
        if (realized - target).abs() > five_pct * target.max(T::epsilon()) {
            return Err(Error::Parameter(format!(
                "realized RMS spread {realized} is not within 5% of recorded {target}"
            )));
        }
        Ok(())
    }
}

fn rms_of<T: Scalar>(delays: &[T], powers: &[T]) -> T {
    let mean = delays
        .iter()
        .zip(powers)
        .fold(T::zero(), |a, (&d, &p)| a + p * d);
    let second = delays
        .iter()
        .zip(powers)
        .fold(T::zero(), |a, (&d, &p)| a + p * d * d);
    (second - mean * mean).max(T::zero()).sqrt()
}

/// Exponentially decaying power-delay profile on a uniform delay grid.
///
/// Places `n_taps` taps evenly over `[0, max_delay_s]` with powers
/// proportional to `exp(-delay / scale)`, the scale solved numerically so the
/// profile's RMS delay spread matches `rms_delay_spread_s` (well within 1%).
/// A target equal to the uniform-power limit yields equal tap powers; targets
/// beyond it are infeasible on this delay grid and rejected.
pub fn exp_pdp<T: Scalar>(n_taps: usize, rms_delay_spread_s: T, max_delay_s: T) -> Result<TdlProfile<T>> {
    if n_taps < 2 {
        return Err(Error::Parameter(format!(
            "an exponential profile needs at least two taps, got {n_taps}"
        )));
    }
    if !(max_delay_s > T::zero()) {
        return Err(Error::Parameter("max delay must be positive".into()));
    }
    if !(rms_delay_spread_s > T::zero()) {
        return Err(Error::Parameter("RMS delay spread must be positive".into()));
    }
    let n_t = T::from_usize(n_taps - 1).unwrap();
    let delays: Vec<T> = (0..n_taps)
        .map(|k| max_delay_s * T::from_usize(k).unwrap() / n_t)
        .collect();

    // Tap powers for decay rate `lambda` (1/seconds), normalized to sum 1.
    let powers_for = |lambda: T| -> Vec<T> {
        let raw: Vec<T> = delays.iter().map(|&d| (-lambda * d).exp()).collect();
        let sum = raw.iter().fold(T::zero(), |a, &p| a + p);
        raw.iter().map(|&p| p / sum).collect()
    };
    let rms_for = |lambda: T| -> T { rms_of(&delays, &powers_for(lambda)) };

    // rms(lambda) decreases from the uniform-power limit at lambda = 0
    // towards 0; bracket the target and bisect.
    let rms_uniform = rms_for(T::zero());
    let rel = rms_delay_spread_s / rms_uniform;
    if rel > T::one() + T::from_f64(1e-9).unwrap() {
        return Err(Error::Parameter(format!(
            "RMS delay spread {rms_delay_spread_s} exceeds the maximum {rms_uniform} achievable on this delay grid"
        )));
    }
    let lambda = if rel >= T::one() - T::from_f64(1e-12).unwrap().max(T::epsilon()) {
        T::zero()
    } else {
        let mut hi = T::one() / max_delay_s;
        let mut doublings = 0;
        while rms_for(hi) >= rms_delay_spread_s {
            hi = hi + hi;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::Parameter(
                    "could not bracket the RMS delay spread target".into(),
                ));
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / (T::one() + T::one());
            if rms_for(mid) > rms_delay_spread_s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / (T::one() + T::one())
    };
    let powers = powers_for(lambda);
    let realized = rms_of(&delays, &powers);
    let err = ((realized - rms_delay_spread_s) / rms_delay_spread_s).abs();
    if err > T::from_f64(0.01).unwrap() {
        return Err(Error::Parameter(format!(
            "profile solver missed the RMS target by {err} (relative)"
        )));
    }
    Ok(TdlProfile {
        delays_s: delays,
        powers,
        rms_delay_spread_s,
    })
}

/// One channel realization: a complex `n_rx x n_tx` matrix per subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGrid<T> {
    spec: GridSpec<T>,
    n_rx: usize,
    n_tx: usize,
    h: Vec<CMat<T>>,
}

impl<T: Scalar> ChannelGrid<T> {
    /// Grid geometry this realization was drawn on.
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    /// Receive antenna count.
    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// Transmit antenna count.
    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Per-subcarrier channel matrices, subcarrier-major.
    pub fn matrices(&self) -> &[CMat<T>] {
        &self.h
    }

    /// Channel matrix on one subcarrier.
    pub fn at(&self, subcarrier: usize) -> &CMat<T> {
        &self.h[subcarrier]
    }

    /// Average per-entry channel gain `||H||_F^2 / (n_rx n_tx)` over the grid.
    pub fn mean_entry_gain(&self) -> T {
        let per_entry = T::from_usize(self.n_rx * self.n_tx).unwrap();
        let total = self.h.iter().fold(T::zero(), |acc, m| {
            acc + m.data().iter().fold(T::zero(), |a, z| a + z.norm_sqr())
        });
        total / (per_entry * T::from_usize(self.h.len()).unwrap())
    }
}

fn check_antennas(n_rx: usize, n_tx: usize) -> Result<()> {
    if n_rx == 0 || n_tx == 0 {
        return Err(Error::Parameter(format!(
            "antenna counts must be positive, got {n_rx} x {n_tx}"
        )));
    }
    Ok(())
}

/// Draws one channel realization.
///
/// `seed` keys the generator; `index` selects an independent stream, so
/// `(seed, index)` pairs can be regenerated bit-identically and in any order.
/// Per tap, one i.i.d. complex Gaussian gain is drawn per (rx, tx) antenna
/// pair with variance equal to the tap power; the response on subcarrier `c`
/// is `sum_k A_k exp(-j 2 pi f_c tau_k)` with `f_c = c * scs_hz`.
pub fn generate_realization<T: Scalar>(
    spec: &GridSpec<T>,
    profile: &TdlProfile<T>,
    n_rx: usize,
    n_tx: usize,
    seed: u64,
    index: u64,
) -> Result<ChannelGrid<T>> {
    check_antennas(n_rx, n_tx)?;
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    // Tap gain matrices, entries CN(0, tap power). Draws are f64 and then
    // narrowed, so the draw sequence is scalar-type independent.
    let n_taps = profile.n_taps();
    let mut taps: Vec<Vec<Complex<T>>> = Vec::with_capacity(n_taps);
    for k in 0..n_taps {
        let sigma = (profile.powers()[k].to_f64().unwrap() / 2.0).sqrt();
        let mut gains = Vec::with_capacity(n_rx * n_tx);
        for _ in 0..n_rx * n_tx {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            gains.push(Complex::new(
                T::from_f64(re * sigma).unwrap(),
                T::from_f64(im * sigma).unwrap(),
            ));
        }
        taps.push(gains);
    }

    let n_sc = spec.n_subcarriers();
    let mut h = Vec::with_capacity(n_sc);
    let mut acc = vec![Complex::new(T::zero(), T::zero()); n_rx * n_tx];
    for c in 0..n_sc {
        let f_c = T::from_usize(c).unwrap() * spec.scs_hz();
        acc.fill(Complex::new(T::zero(), T::zero()));
        for (k, gains) in taps.iter().enumerate() {
            let angle = -(T::TAU() * f_c * profile.delays_s()[k]);
            let phasor = Complex::from_polar(T::one(), angle);
            for (a, g) in acc.iter_mut().zip(gains) {
                *a += g * phasor;
            }
        }
        h.push(CMat::new(n_rx, n_tx, acc.clone()).expect("accumulator matches shape"));
    }
    Ok(ChannelGrid {
        spec: *spec,
        n_rx,
        n_tx,
        h,
    })
}

/// Deterministic channel fixtures for tests and diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// Single zero-delay tap with all-ones gains: flat over frequency.
    Flat,
    /// Two equal-power all-ones taps at 0 and 1 microsecond: strongly
    /// frequency selective with a 1 MHz fading period.
    TwoTap,
    /// Rank-one line-of-sight channel `a b^H` from fixed unit-modulus
    /// steering vectors, constant over frequency.
    LineOfSightRank1,
}

/// Builds an analytic [`ChannelGrid`] (no randomness involved).
pub fn fixture<T: Scalar>(
    kind: FixtureKind,
    spec: &GridSpec<T>,
    n_rx: usize,
    n_tx: usize,
) -> Result<ChannelGrid<T>> {
    check_antennas(n_rx, n_tx)?;
    let n_sc = spec.n_subcarriers();
    let one = Complex::new(T::one(), T::zero());
    let h = match kind {
        FixtureKind::Flat => {
            let m = CMat::new(n_rx, n_tx, vec![one; n_rx * n_tx]).unwrap();
            vec![m; n_sc]
        }
        FixtureKind::TwoTap => {
            let half = T::from_f64(0.5).unwrap();
            let amp = Complex::new(half.sqrt(), T::zero());
            let tau = T::from_f64(1e-6).unwrap();
            (0..n_sc)
                .map(|c| {
                    let f_c = T::from_usize(c).unwrap() * spec.scs_hz();
                    let phasor = Complex::from_polar(T::one(), -(T::TAU() * f_c * tau));
                    let g = amp + amp * phasor;
                    CMat::new(n_rx, n_tx, vec![g; n_rx * n_tx]).unwrap()
                })
                .collect()
        }
        FixtureKind::LineOfSightRank1 => {
            // Arbitrary but fixed steering phases: 0.3 pi per rx element,
            // 0.7 pi per tx element.
            let steer = |i: usize, step: f64| -> Complex<T> {
                Complex::from_polar(
                    T::one(),
                    T::PI() * T::from_f64(step).unwrap() * T::from_usize(i).unwrap(),
                )
            };
            let mut data = Vec::with_capacity(n_rx * n_tx);
            for r in 0..n_rx {
                let a = steer(r, 0.3);
                for t in 0..n_tx {
                    let b = steer(t, 0.7);
                    data.push(a * b.conj());
                }
            }
            let m = CMat::new(n_rx, n_tx, data).unwrap();
            vec![m; n_sc]
        }
    };
    Ok(ChannelGrid {
        spec: *spec,
        n_rx,
        n_tx,
        h,
    })
}

const GRID_MAGIC: &[u8; 8] = b"SBPGRID1";

/// Serializes a grid into the binary exchange format (all scalars widened to
/// little-endian `f64`, so an `f64` grid round-trips bit-exactly).
pub fn write_grid_bytes<T: Scalar>(grid: &ChannelGrid<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(GRID_MAGIC);
    for v in [
        grid.spec.n_rbs as u64,
        grid.spec.sc_per_rb as u64,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.spec.scs_hz.to_f64().unwrap().to_le_bytes());
    for v in [grid.n_rx as u64, grid.n_tx as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for m in &grid.h {
        for z in m.data() {
            out.extend_from_slice(&z.re.to_f64().unwrap().to_le_bytes());
            out.extend_from_slice(&z.im.to_f64().unwrap().to_le_bytes());
        }
    }
    out
}

struct ByteReader<'a> {
    bytes: &'a [u8],
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Parse("grid data truncated".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len()
    }
}

/// Parses the binary exchange format.
pub fn read_grid_bytes<T: Scalar>(bytes: &[u8]) -> Result<ChannelGrid<T>> {
    let mut r = ByteReader { bytes };
    if r.take(8)? != GRID_MAGIC {
        return Err(Error::Parse("not a channel-grid file (bad magic)".into()));
    }
    let n_rbs = r.u64()? as usize;
    let sc_per_rb = r.u64()? as usize;
    let scs_hz = r.f64()?;
    let n_rx = r.u64()? as usize;
    let n_tx = r.u64()? as usize;
    let spec = GridSpec::new(
        n_rbs,
        sc_per_rb,
        T::from_f64(scs_hz).ok_or_else(|| Error::Parse("subcarrier spacing out of range".into()))?,
    )?;
    let n_sc = spec.n_subcarriers();
    let expected = n_sc * n_rx * n_tx * 16;
    if r.remaining() != expected {
        return Err(Error::Parse(format!(
            "grid body has {} bytes, expected {expected}",
            r.remaining()
        )));
    }
    let mut h = Vec::with_capacity(n_sc);
    for _ in 0..n_sc {
        let mut data = Vec::with_capacity(n_rx * n_tx);
        for _ in 0..n_rx * n_tx {
            let re = r.f64()?;
            let im = r.f64()?;
            data.push(Complex::new(
                T::from_f64(re).unwrap(),
                T::from_f64(im).unwrap(),
            ));
        }
        h.push(CMat::new(n_rx, n_tx, data)?);
    }
    Ok(ChannelGrid {
        spec,
        n_rx,
        n_tx,
        h,
    })
}

/// Writes a grid to a file in the binary exchange format.
pub fn export_grid<T: Scalar>(grid: &ChannelGrid<T>, path: &Path) -> Result<()> {
    let bytes = write_grid_bytes(grid);
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a grid from a file in the binary exchange format.
pub fn import_grid<T: Scalar>(path: &Path) -> Result<ChannelGrid<T>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    read_grid_bytes(&bytes)
}
