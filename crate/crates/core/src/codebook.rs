//! Single-layer precoder codebooks.
//!
//! All families here are fully coherent, constant-modulus designs: every
//! weight vector has unit Frobenius norm, every component has modulus
//! `1/sqrt(n_tx)`, and the first component is real positive (the common
//! phase reference). Three families are provided:
//!
//! - `proposed`: per-port uniform phase grids with a configurable bit budget
//!   per port (`2^(M_2 + ... + M_{n_tx})` entries),
//! - `type1`: the 8TX Type-I-style construction from a DFT beam grid over a
//!   4-element panel plus a QPSK co-phase between the two port groups,
//! - `legacy`: the baseline per antenna count (QPSK relative phase for 2TX,
//!   the standardized fully-coherent 4TX table, and the 16-entry `type1`
//!   book for 8TX).
//!
//! Entry order is the signaling index (TPMI) used everywhere else in the
//! crate: position in the list is the index reported by selection.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{cabs, CVec, Scalar};

/// Largest supported total phase-bit budget for a `proposed` codebook
/// (2^20 entries); guards against accidentally huge allocations.
pub const MAX_TOTAL_PHASE_BITS: u32 = 20;

/// Codebook family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Baseline codebook for the antenna count.
    Legacy,
    /// 8TX DFT-beam plus co-phase construction.
    TypeI8Tx,
    /// Per-port phase-grid codebook.
    Proposed,
}

impl Family {
    /// Lower-case label used in the text export header and CSV scheme names.
    pub fn label(self) -> &'static str {
        match self {
            Family::Legacy => "legacy",
            Family::TypeI8Tx => "type1",
            Family::Proposed => "proposed",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "legacy" => Ok(Family::Legacy),
            "type1" => Ok(Family::TypeI8Tx),
            "proposed" => Ok(Family::Proposed),
            other => Err(Error::Parse(format!("unknown codebook family `{other}`"))),
        }
    }
}

/// Construction parameters retained by generated codebooks.
///
/// Imported codebooks carry [`Params::Opaque`]; generated ones keep enough
/// structure for the selection search to exploit (see
/// [`crate::precoding::search_codebook`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Params {
    /// No structural information (imported or table-defined entries).
    Opaque,
    /// `type1` beam-grid dimensions.
    TypeI { n1: usize, n2: usize },
    /// `proposed` per-port phase bits `M_2 ... M_{n_tx}`.
    Proposed { m_bits: Vec<u32> },
}

/// One codebook entry: a unit-norm constant-modulus weight vector plus its
/// signaling index within the codebook.
#[derive(Clone, Debug, PartialEq)]
pub struct Precoder<T> {
    weights: CVec<T>,
    index: usize,
}

impl<T: Scalar> Precoder<T> {
    /// The weight vector (length `n_tx`).
    pub fn weights(&self) -> &CVec<T> {
        &self.weights
    }

    /// Signaling index (TPMI) of this entry within its codebook.
    pub fn index(&self) -> usize {
        self.index
    }
}

/// An ordered set of single-layer precoders for one antenna count.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    n_tx: usize,
    family: Family,
    entries: Vec<Precoder<T>>,
    params: Params,
}

impl<T: Scalar> Codebook<T> {
    /// Builds a codebook from raw weight vectors, validating the invariants
    /// every family shares: each entry has `n_tx` components, unit Frobenius
    /// norm, constant modulus `1/sqrt(n_tx)` and a real positive first
    /// component (all within 1e-12).
    pub fn from_entries(n_tx: usize, family: Family, weights: Vec<CVec<T>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Parameter("codebook must have at least one entry".into()));
        }
        // 1e-12 in double precision; widened to a few ulps for narrower scalars.
        let tol = T::from_f64(1e-12)
            .expect("tolerance fits scalar")
            .max(T::epsilon() * T::from_f64(16.0).expect("small factor"));
        let unit_mod = T::one() / T::from_usize(n_tx).expect("antenna count").sqrt();
        for (i, w) in weights.iter().enumerate() {
            if w.len() != n_tx {
                return Err(Error::Dimension(format!(
                    "entry {i} has {} components, expected {n_tx}",
                    w.len()
                )));
            }
            if (w.norm() - T::one()).abs() > tol {
                return Err(Error::Parameter(format!(
                    "entry {i} is not unit norm (||w|| = {})",
                    w.norm()
                )));
            }
            for (k, z) in w.entries().iter().enumerate() {
                if (cabs(*z) - unit_mod).abs() > tol {
                    return Err(Error::Parameter(format!(
                        "entry {i} component {k} breaks constant modulus"
                    )));
                }
            }
            if w[0].im.abs() > tol || w[0].re <= T::zero() {
                return Err(Error::Parameter(format!(
                    "entry {i} first component must be real positive"
                )));
            }
        }
        let entries = weights
            .into_iter()
            .enumerate()
            .map(|(index, weights)| Precoder { weights, index })
            .collect();
        Ok(Self {
            n_tx,
            family,
            entries,
            params: Params::Opaque,
        })
    }

    /// Antenna (port) count.
    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Family tag.
    pub fn family(&self) -> Family {
        self.family
    }

    /// Retained construction parameters.
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the codebook has no entries (never for generated books).
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries in signaling order.
    pub fn entries(&self) -> &[Precoder<T>] {
        &self.entries
    }

    /// Entry with signaling index `tpmi`.
    pub fn get(&self, tpmi: usize) -> Option<&Precoder<T>> {
        self.entries.get(tpmi)
    }

    /// Signaling bits needed per selection: `ceil(log2(len))`.
    pub fn bits_per_index(&self) -> u32 {
        let n = self.entries.len();
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn check_n_tx(n_tx: usize) -> Result<()> {
    if matches!(n_tx, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "unsupported antenna count {n_tx} (expected 2, 4 or 8)"
        )))
    }
}

/// The `2^bits` unit phasors `e^(j 2 pi m / 2^bits)`, `m = 0 ...`.
fn phase_grid<T: Scalar>(bits: u32) -> Vec<Complex<T>> {
    let count = 1usize << bits;
    let count_t = T::from_usize(count).expect("grid size fits scalar");
    (0..count)
        .map(|m| {
            // Quarter-turn grid points are written exactly (not via sin/cos)
            // so that analytically tied selection metrics — e.g. phases 0 and
            // pi/2 against a target half-way between them — are exact ties in
            // floating point and resolve to the lower index.
            if (4 * m) % count == 0 {
                match 4 * m / count {
                    0 => Complex::new(T::one(), T::zero()),
                    1 => Complex::new(T::zero(), T::one()),
                    2 => Complex::new(-T::one(), T::zero()),
                    _ => Complex::new(T::zero(), -T::one()),
                }
            } else {
                let angle = T::TAU() * T::from_usize(m).expect("grid index") / count_t;
                Complex::from_polar(T::one(), angle)
            }
        })
        .collect()
}

/// Phase-grid codebook: every entry is
/// `(1/sqrt(n_tx)) * (1, e^(j 2 pi m_2 / 2^(M_2)), ..., e^(j 2 pi m_{n_tx} / 2^(M_{n_tx})))`
/// with each `m_i` running over its full grid. `m_bits` lists
/// `M_2 ... M_{n_tx}` (one value per port after the first); the entry count is
/// `2^(M_2 + ... + M_{n_tx})` and the enumeration varies `m_2` slowest and
/// `m_{n_tx}` fastest.
pub fn proposed_codebook<T: Scalar>(n_tx: usize, m_bits: &[u32]) -> Result<Codebook<T>> {
    check_n_tx(n_tx)?;
    if m_bits.len() != n_tx - 1 {
        return Err(Error::Parameter(format!(
            "m_bits must list {} per-port bit widths for {} ports, got {}",
            n_tx - 1,
            n_tx,
            m_bits.len()
        )));
    }
    let total_bits: u32 = m_bits.iter().sum();
    if total_bits > MAX_TOTAL_PHASE_BITS {
        return Err(Error::Parameter(format!(
            "total phase bits {total_bits} exceed the supported maximum {MAX_TOTAL_PHASE_BITS}"
        )));
    }
    let scale = T::one() / T::from_usize(n_tx).expect("antenna count").sqrt();
    let scale_c = Complex::new(scale, T::zero());
    let grids: Vec<Vec<Complex<T>>> = m_bits
        .iter()
        .map(|&b| phase_grid::<T>(b).iter().map(|p| p * scale_c).collect())
        .collect();
    // strides[p] = number of entries spanned by one step of port p's digit;
    // the last listed port varies fastest.
    let mut strides = vec![1usize; grids.len()];
    for p in (0..grids.len().saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * grids[p + 1].len();
    }
    let total = 1usize << total_bits;
    let mut entries = Vec::with_capacity(total);
    for tpmi in 0..total {
        let mut w = Vec::with_capacity(n_tx);
        w.push(Complex::new(scale, T::zero()));
        for p in 0..grids.len() {
            let digit = (tpmi / strides[p]) % grids[p].len();
            w.push(grids[p][digit]);
        }
        entries.push(Precoder {
            weights: CVec::new(w),
            index: tpmi,
        });
    }
    Ok(Codebook {
        n_tx,
        family: Family::Proposed,
        entries,
        params: Params::Proposed {
            m_bits: m_bits.to_vec(),
        },
    })
}

/// QPSK co-phase factors `e^(j pi n / 2)` for `n = 0..4`, written exactly.
fn cophase<T: Scalar>(n: usize) -> Complex<T> {
    let one = T::one();
    let zero = T::zero();
    match n {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, one),
        2 => Complex::new(-one, zero),
        3 => Complex::new(zero, -one),
        _ => unreachable!("co-phase index is mod 4"),
    }
}

/// 8TX Type-I-style codebook: 4-element DFT beams `v = v_h (x) v_v` over an
/// `n1 x n2` grid (with `n1 * n2 = 4`, no oversampling) applied to the first
/// port group and co-phased onto the second:
/// `w = (1 / (2 sqrt(2))) * (v^T, phi_n v^T)^T`, `phi_n = e^(j pi n / 2)`.
///
/// Enumeration order: horizontal beam index slowest, then vertical beam
/// index, then co-phase, for `4 * n1 * n2 = 16` entries.
pub fn type1_8tx_codebook<T: Scalar>(n1: usize, n2: usize) -> Result<Codebook<T>> {
    if n1 * n2 != 4 || n1 == 0 {
        return Err(Error::Parameter(format!(
            "type1 beam grid must satisfy n1 * n2 = 4, got {n1} x {n2}"
        )));
    }
    let scale = Complex::new(T::one() / T::from_usize(8).unwrap().sqrt(), T::zero());
    let beam = |len: usize, idx: usize| -> CVec<T> {
        let len_t = T::from_usize(len).expect("beam length");
        CVec::new(
            (0..len)
                .map(|k| {
                    let angle = T::TAU() * T::from_usize(idx * k).expect("beam phase") / len_t;
                    Complex::from_polar(T::one(), angle)
                })
                .collect(),
        )
    };
    let mut entries = Vec::with_capacity(16);
    for i_h in 0..n1 {
        let v_h = beam(n1, i_h);
        for i_v in 0..n2 {
            let v_v = beam(n2, i_v);
            let v = v_h.kron(&v_v);
            for n in 0..4 {
                let phi = cophase::<T>(n);
                let mut w = Vec::with_capacity(8);
                for z in v.entries() {
                    w.push(z * scale);
                }
                for z in v.entries() {
                    w.push(z * phi * scale);
                }
                entries.push(Precoder {
                    weights: CVec::new(w),
                    index: entries.len(),
                });
            }
        }
    }
    Ok(Codebook {
        n_tx: 8,
        family: Family::TypeI8Tx,
        entries,
        params: Params::TypeI { n1, n2 },
    })
}

/// TS 38.211 Table 6.3.1.5-3, TPMI 12..27: the sixteen fully-coherent
/// single-layer precoders for four antenna ports, scaled by 1/2. Components
/// are written as (re, im) in units of 1/2; local indices 0..15 correspond
/// to standard TPMI 12..27 in order.
const LEGACY_4TX_FULLY_COHERENT: [[(i8, i8); 4]; 16] = [
    [(1, 0), (1, 0), (1, 0), (1, 0)],     // TPMI 12
    [(1, 0), (1, 0), (0, 1), (0, 1)],     // TPMI 13
    [(1, 0), (1, 0), (-1, 0), (-1, 0)],   // TPMI 14
    [(1, 0), (1, 0), (0, -1), (0, -1)],   // TPMI 15
    [(1, 0), (0, 1), (1, 0), (0, 1)],     // TPMI 16
    [(1, 0), (0, 1), (0, 1), (-1, 0)],    // TPMI 17
    [(1, 0), (0, 1), (-1, 0), (0, -1)],   // TPMI 18
    [(1, 0), (0, 1), (0, -1), (1, 0)],    // TPMI 19
    [(1, 0), (-1, 0), (1, 0), (-1, 0)],   // TPMI 20
    [(1, 0), (-1, 0), (0, 1), (0, -1)],   // TPMI 21
    [(1, 0), (-1, 0), (-1, 0), (1, 0)],   // TPMI 22
    [(1, 0), (-1, 0), (0, -1), (0, 1)],   // TPMI 23
    [(1, 0), (0, -1), (1, 0), (0, -1)],   // TPMI 24
    [(1, 0), (0, -1), (0, 1), (1, 0)],    // TPMI 25
    [(1, 0), (0, -1), (-1, 0), (0, 1)],   // TPMI 26
    [(1, 0), (0, -1), (0, -1), (-1, 0)],  // TPMI 27
];

/// Baseline codebook for an antenna count:
///
/// - 2TX: QPSK relative phase, identical to `proposed(2, [2])`,
/// - 4TX: the fully-coherent single-layer subset of the standardized 4-port
///   table ([`LEGACY_4TX_FULLY_COHERENT`]),
/// - 8TX: the 16-entry [`type1_8tx_codebook`] with a 4x1 beam grid.
pub fn legacy_codebook<T: Scalar>(n_tx: usize) -> Result<Codebook<T>> {
    check_n_tx(n_tx)?;
    match n_tx {
        2 => {
            let mut cb = proposed_codebook::<T>(2, &[2])?;
            cb.family = Family::Legacy;
            Ok(cb)
        }
        4 => {
            let half = T::from_f64(0.5).unwrap();
            let weights = LEGACY_4TX_FULLY_COHERENT
                .iter()
                .map(|row| {
                    CVec::new(
                        row.iter()
                            .map(|&(re, im)| {
                                Complex::new(
                                    T::from_i8(re).unwrap() * half,
                                    T::from_i8(im).unwrap() * half,
                                )
                            })
                            .collect(),
                    )
                })
                .collect();
            let mut cb = Codebook::from_entries(4, Family::Legacy, weights)?;
            cb.params = Params::Opaque;
            Ok(cb)
        }
        8 => {
            let mut cb = type1_8tx_codebook::<T>(4, 1)?;
            cb.family = Family::Legacy;
            Ok(cb)
        }
        _ => unreachable!("validated above"),
    }
}

/// True iff every entry of `small` has an entrywise match in `big`: some
/// entry of `big` within max component distance `tol`. Codebooks over
/// different antenna counts never match.
pub fn is_superset<T: Scalar>(big: &Codebook<T>, small: &Codebook<T>, tol: T) -> bool {
    if big.n_tx != small.n_tx {
        return false;
    }
    small.entries.iter().all(|s| {
        big.entries.iter().any(|b| {
            s.weights
                .entries()
                .iter()
                .zip(b.weights.entries())
                .all(|(a, c)| cabs(a - c) <= tol)
        })
    })
}

/// Renders a codebook in the text exchange format: a header line
/// `<n_tx> <family> <count>` followed by one line per entry in signaling
/// order, each component as `re+imj` (shortest round-trip decimal, so a
/// parse of the output reproduces the weights bit-exactly).
pub fn export_text<T: Scalar>(cb: &Codebook<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", cb.n_tx, cb.family.label(), cb.len()));
    for e in &cb.entries {
        let mut first = true;
        for z in e.weights.entries() {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&fmt_complex(*z));
        }
        out.push('\n');
    }
    out
}

/// Parses the text format produced by [`export_text`]. The result carries
/// [`Params::Opaque`] (construction parameters are not part of the format).
pub fn import_text<T: Scalar>(text: &str) -> Result<Codebook<T>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty codebook text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse(format!(
            "header must be `<n_tx> <family> <count>`, got `{header}`"
        )));
    }
    let n_tx: usize = fields[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad antenna count `{}`", fields[0])))?;
    let family = Family::parse(fields[1])?;
    let count: usize = fields[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad entry count `{}`", fields[2])))?;
    let mut weights = Vec::with_capacity(count);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let comps: Result<Vec<Complex<T>>> = line
            .split_whitespace()
            .map(|tok| parse_complex::<T>(tok))
            .collect();
        let comps = comps.map_err(|e| Error::Parse(format!("entry {lineno}: {e}")))?;
        weights.push(CVec::new(comps));
    }
    if weights.len() != count {
        return Err(Error::Parse(format!(
            "header promises {count} entries, found {}",
            weights.len()
        )));
    }
    Codebook::from_entries(n_tx, family, weights)
}

/// One complex component in the `re+imj` exchange syntax.
fn fmt_complex<T: Scalar>(z: Complex<T>) -> String {
    let re = z.re.to_f64().unwrap_or(f64::NAN);
    let im = z.im.to_f64().unwrap_or(f64::NAN);
    if im.is_sign_negative() {
        format!("{re}{im}j")
    } else {
        format!("{re}+{im}j")
    }
}

fn parse_complex<T: Scalar>(tok: &str) -> Result<Complex<T>> {
    let body = tok
        .strip_suffix('j')
        .ok_or_else(|| Error::Parse(format!("component `{tok}` lacks the `j` suffix")))?;
    // Split at the sign that separates real from imaginary parts: the first
    // '+'/'-' that is neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-')
            && bytes[i - 1] != b'e'
            && bytes[i - 1] != b'E'
        {
            split = Some(i);
        }
    }
    let split = split.ok_or_else(|| Error::Parse(format!("component `{tok}` has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| Error::Parse(format!("bad real part in `{tok}`")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|_| Error::Parse(format!("bad imaginary part in `{tok}`")))?;
    Ok(Complex::new(
        T::from_f64(re).ok_or_else(|| Error::Parse(format!("real part out of range in `{tok}`")))?,
        T::from_f64(im).ok_or_else(|| Error::Parse(format!("imaginary part out of range in `{tok}`")))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Quantized fingerprint for duplicate detection well below the 1e-9
    /// distinctness tolerance.
    fn fingerprint(w: &CVec<f64>) -> Vec<(i64, i64)> {
        w.entries()
            .iter()
            .map(|z| ((z.re * 1e10).round() as i64, (z.im * 1e10).round() as i64))
            .collect()
    }

    fn assert_common_invariants(cb: &Codebook<f64>) {
        let unit_mod = 1.0 / (cb.n_tx() as f64).sqrt();
        let mut seen = HashSet::new();
        for (i, e) in cb.entries().iter().enumerate() {
            assert_eq!(e.index(), i);
            assert!((e.weights().norm() - 1.0).abs() <= 1e-12);
            for z in e.weights().entries() {
                assert!((cabs(*z) - unit_mod).abs() <= 1e-12);
            }
            assert!(e.weights()[0].re > 0.0 && e.weights()[0].im == 0.0);
            assert!(seen.insert(fingerprint(e.weights())), "duplicate entry {i}");
        }
    }

    #[test]
    fn proposed_2tx_qpsk_entries() {
        let cb = proposed_codebook::<f64>(2, &[2]).unwrap();
        assert_eq!(cb.len(), 4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, -s)],
        ];
        for (e, row) in cb.entries().iter().zip(&expect) {
            for (z, want) in e.weights().entries().iter().zip(row) {
                assert!(cabs(z - want) <= 1e-12);
            }
        }
        assert_common_invariants(&cb);
    }

    #[test]
    fn proposed_entry_counts_scale_with_total_bits() {
        assert_eq!(proposed_codebook::<f64>(2, &[3]).unwrap().len(), 8);
        assert_eq!(proposed_codebook::<f64>(4, &[3, 3, 3]).unwrap().len(), 512);
        assert_eq!(
            proposed_codebook::<f64>(8, &[2; 7]).unwrap().len(),
            1 << 14
        );
    }

    #[test]
    fn proposed_enumeration_varies_last_port_fastest() {
        let cb = proposed_codebook::<f64>(4, &[1, 1, 1]).unwrap();
        assert_eq!(cb.len(), 8);
        // Entry 1 flips only the last port's phase (m = (0, 0, 1)).
        let e1 = cb.get(1).unwrap().weights();
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (z, want) in e1.entries().iter().zip(expect) {
            assert!((z.re - want).abs() <= 1e-12 && z.im.abs() <= 1e-12);
        }
        // Entry 4 flips only the first listed port (m = (1, 0, 0)).
        let e4 = cb.get(4).unwrap().weights();
        let expect = [0.5, -0.5, 0.5, 0.5];
        for (z, want) in e4.entries().iter().zip(expect) {
            assert!((z.re - want).abs() <= 1e-12 && z.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn proposed_zero_bits_collapses_to_a_single_entry() {
        let cb = proposed_codebook::<f64>(2, &[0]).unwrap();
        assert_eq!(cb.len(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(cabs(cb.get(0).unwrap().weights()[1] - c(s, 0.0)) <= 1e-12);
    }

    #[test]
    fn proposed_parameter_validation() {
        assert!(proposed_codebook::<f64>(3, &[2, 2]).is_err());
        assert!(proposed_codebook::<f64>(4, &[2, 2]).is_err());
        assert!(proposed_codebook::<f64>(2, &[MAX_TOTAL_PHASE_BITS + 1]).is_err());
    }

    #[test]
    fn proposed_equal_bit_grids_are_closed_under_conjugation() {
        let cb = proposed_codebook::<f64>(4, &[2, 2, 2]).unwrap();
        for e in cb.entries() {
            let conj = CVec::new(e.weights().entries().iter().map(|z| z.conj()).collect());
            let found = cb.entries().iter().any(|other| {
                conj.entries()
                    .iter()
                    .zip(other.weights().entries())
                    .all(|(a, b)| cabs(a - b) <= 1e-12)
            });
            assert!(found, "conjugate of entry {} left the codebook", e.index());
        }
    }

    #[test]
    fn type1_all_zero_indices_give_the_flat_vector() {
        let cb = type1_8tx_codebook::<f64>(4, 1).unwrap();
        assert_eq!(cb.len(), 16);
        let s = 1.0 / 8.0f64.sqrt();
        for z in cb.get(0).unwrap().weights().entries() {
            assert!(cabs(z - &c(s, 0.0)) <= 1e-12);
        }
        assert_common_invariants(&cb);
    }

    #[test]
    fn type1_beam_and_cophase_example() {
        // Beam (i_h, i_v) = (1, 0) over a 4x1 grid is (1, j, -1, -j); with
        // co-phase n = 2 the second port group is negated. The entry sits at
        // index (1 * 1 + 0) * 4 + 2 = 6.
        let cb = type1_8tx_codebook::<f64>(4, 1).unwrap();
        let s = 1.0 / 8.0f64.sqrt();
        let expect = [
            c(s, 0.0),
            c(0.0, s),
            c(-s, 0.0),
            c(0.0, -s),
            c(-s, 0.0),
            c(0.0, -s),
            c(s, 0.0),
            c(0.0, s),
        ];
        let e = cb.get(6).unwrap().weights();
        for (z, want) in e.entries().iter().zip(&expect) {
            assert!(cabs(z - want) <= 1e-12);
        }
    }

    #[test]
    fn type1_port_groups_factor_through_the_cophase() {
        let cb = type1_8tx_codebook::<f64>(2, 2).unwrap();
        assert_eq!(cb.len(), 16);
        for (i, e) in cb.entries().iter().enumerate() {
            let phi = cophase::<f64>(i % 4);
            let w = e.weights();
            for k in 0..4 {
                assert!(cabs(w[k + 4] / phi - w[k]) <= 1e-12);
            }
        }
        assert_common_invariants(&cb);
    }

    #[test]
    fn type1_rejects_bad_beam_grids() {
        assert!(type1_8tx_codebook::<f64>(3, 1).is_err());
        assert!(type1_8tx_codebook::<f64>(0, 4).is_err());
    }

    #[test]
    fn legacy_2tx_matches_the_two_bit_phase_grid() {
        let legacy = legacy_codebook::<f64>(2).unwrap();
        let grid = proposed_codebook::<f64>(2, &[2]).unwrap();
        assert_eq!(legacy.family(), Family::Legacy);
        assert_eq!(legacy.len(), 4);
        for (a, b) in legacy.entries().iter().zip(grid.entries()) {
            assert_eq!(a.weights(), b.weights());
        }
    }

    #[test]
    fn legacy_4tx_table_is_structurally_sound() {
        let cb = legacy_codebook::<f64>(4).unwrap();
        assert_eq!(cb.len(), 16);
        assert_common_invariants(&cb);
        // The table follows the (1, a, b, a*b)/2 pattern with a, b ranging
        // over the QPSK alphabet in order; cross-check against that
        // independent reconstruction.
        for (i, e) in cb.entries().iter().enumerate() {
            let a = cophase::<f64>(i / 4);
            let b = cophase::<f64>(i % 4);
            let expect = [c(0.5, 0.0), a * 0.5, b * 0.5, a * b * 0.5];
            for (z, want) in e.weights().entries().iter().zip(&expect) {
                assert!(cabs(z - want) <= 1e-12, "entry {i}");
            }
        }
    }

    #[test]
    fn legacy_8tx_is_the_4x1_type1_book() {
        let legacy = legacy_codebook::<f64>(8).unwrap();
        let type1 = type1_8tx_codebook::<f64>(4, 1).unwrap();
        assert_eq!(legacy.family(), Family::Legacy);
        assert_eq!(legacy.len(), 16);
        for (a, b) in legacy.entries().iter().zip(type1.entries()) {
            assert_eq!(a.weights(), b.weights());
        }
    }

    #[test]
    fn legacy_rejects_unsupported_antenna_counts() {
        assert!(legacy_codebook::<f64>(3).is_err());
        assert!(legacy_codebook::<f64>(16).is_err());
    }

    #[test]
    fn finer_phase_grids_contain_coarser_ones() {
        let fine = proposed_codebook::<f64>(2, &[3]).unwrap();
        let coarse = proposed_codebook::<f64>(2, &[2]).unwrap();
        let legacy = legacy_codebook::<f64>(2).unwrap();
        let tol = 1e-9;
        assert!(is_superset(&fine, &coarse, tol));
        assert!(!is_superset(&coarse, &fine, tol));
        assert!(is_superset(&fine, &legacy, tol));
        assert!(is_superset(&legacy, &coarse, tol));
        assert!(is_superset(&coarse, &legacy, tol));
    }

    #[test]
    fn eight_tx_phase_grid_contains_the_legacy_beams() {
        let fine = proposed_codebook::<f64>(8, &[2; 7]).unwrap();
        let legacy = legacy_codebook::<f64>(8).unwrap();
        assert!(is_superset(&fine, &legacy, 1e-9));
    }

    #[test]
    fn superset_requires_matching_antenna_counts() {
        let two = legacy_codebook::<f64>(2).unwrap();
        let four = legacy_codebook::<f64>(4).unwrap();
        assert!(!is_superset(&four, &two, 1e-9));
    }

    #[test]
    fn census_of_the_configured_codebooks() {
        for (cb, want) in [
            (legacy_codebook::<f64>(2).unwrap(), 4),
            (legacy_codebook::<f64>(4).unwrap(), 16),
            (legacy_codebook::<f64>(8).unwrap(), 16),
            (proposed_codebook::<f64>(4, &[3, 3, 3]).unwrap(), 512),
        ] {
            assert_eq!(cb.len(), want);
            assert_common_invariants(&cb);
        }
    }

    #[test]
    fn export_header_and_roundtrip_are_bit_exact() {
        for cb in [
            legacy_codebook::<f64>(2).unwrap(),
            legacy_codebook::<f64>(4).unwrap(),
            type1_8tx_codebook::<f64>(4, 1).unwrap(),
            proposed_codebook::<f64>(2, &[3]).unwrap(),
        ] {
            let text = export_text(&cb);
            let header = text.lines().next().unwrap();
            assert_eq!(
                header,
                format!("{} {} {}", cb.n_tx(), cb.family().label(), cb.len())
            );
            let back = import_text::<f64>(&text).unwrap();
            assert_eq!(back.n_tx(), cb.n_tx());
            assert_eq!(back.family(), cb.family());
            assert_eq!(back.len(), cb.len());
            for (a, b) in back.entries().iter().zip(cb.entries()) {
                assert_eq!(a.weights(), b.weights(), "round trip must be bit-exact");
            }
        }
    }

    #[test]
    fn import_rejects_malformed_input() {
        assert!(import_text::<f64>("").is_err());
        assert!(import_text::<f64>("2 legacy\n").is_err());
        assert!(import_text::<f64>("2 nosuch 1\n0.5+0j 0.5+0j\n").is_err());
        assert!(import_text::<f64>("2 legacy 2\n0.7+0j 0.7+0j\n").is_err());
        // Non-unit norm entries fail validation.
        assert!(import_text::<f64>("2 legacy 1\n1+0j 1+0j\n").is_err());
        // Missing j suffix.
        assert!(import_text::<f64>("2 legacy 1\n0.7+0 0.7+0j\n").is_err());
    }

    #[test]
    fn complex_component_syntax_covers_signs_and_exponents() {
        let cases = [
            c(0.5, 0.25),
            c(-0.5, -0.25),
            c(1e-3, -2e-7),
            c(0.7071067811865476, -0.7071067811865475),
        ];
        for z in cases {
            let tok = fmt_complex(z);
            let back: Complex<f64> = parse_complex(&tok).unwrap();
            assert_eq!(z.re.to_bits(), back.re.to_bits(), "{tok}");
            assert_eq!(z.im.to_bits(), back.im.to_bits(), "{tok}");
        }
        // Exponent-form input parses even though the exporter never emits it.
        let z: Complex<f64> = parse_complex("1.5e-3-2.5e-4j").unwrap();
        assert_eq!(z, c(1.5e-3, -2.5e-4));
    }

    #[test]
    fn bits_per_index_is_the_signaling_width() {
        assert_eq!(legacy_codebook::<f64>(2).unwrap().bits_per_index(), 2);
        assert_eq!(legacy_codebook::<f64>(4).unwrap().bits_per_index(), 4);
        assert_eq!(proposed_codebook::<f64>(2, &[0]).unwrap().bits_per_index(), 0);
        assert_eq!(proposed_codebook::<f64>(2, &[3]).unwrap().bits_per_index(), 3);
    }

    #[test]
    fn generates_in_single_precision() {
        let cb = proposed_codebook::<f32>(2, &[2]).unwrap();
        assert_eq!(cb.len(), 4);
        let text = export_text(&cb);
        let back = import_text::<f32>(&text).unwrap();
        for (a, b) in back.entries().iter().zip(cb.entries()) {
            assert_eq!(a.weights(), b.weights());
        }
    }
}
