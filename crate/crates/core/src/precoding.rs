//! Sub-band partitioning, per-sub-band channel statistics, and precoder
//! selection.
//!
//! A frequency-selective channel is split into contiguous sub-bands; each
//! sub-band is summarized by the average of its per-subcarrier Gram matrices
//! `H^H H`, whose dominant eigenpair `(sigma, v)` gives the sub-band's
//! channel power and best beamforming direction. A precoder is then chosen
//! per *selection* band — either by exhaustive codebook search maximizing
//! `|v^H w|`, or by taking `v` itself as an unquantized bound — and evaluated
//! on every *evaluation* sub-band it covers. Selecting on the whole band
//! while evaluating per sub-band is exactly wide-band precoding, which makes
//! the wide-band scheme a special case of the sub-band machinery rather than
//! separate code.
//!
//! All selection is deterministic: exhaustive search compares squared
//! metrics with strict `>`, so ties resolve to the lowest codebook index.

use std::fmt;
use std::ops::Range;

use num_complex::Complex;

use crate::channel::{ChannelGrid, GridSpec};
use crate::codebook::{Codebook, Params};
use crate::error::{Error, Result};
use crate::numerics::{cabs, CMat, CVec, Scalar};

/// Ordered, disjoint, exhaustive split of the subcarrier axis into
/// contiguous sub-bands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubbandPartition {
    ranges: Vec<Range<usize>>,
    sbs_rbs: usize,
}

impl SubbandPartition {
    /// Subcarrier index range of each sub-band, ascending.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Sub-band size in resource blocks (the last sub-band may be smaller).
    pub fn sbs_rbs(&self) -> usize {
        self.sbs_rbs
    }

    /// Number of sub-bands.
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    /// A partition always has at least one sub-band.
    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Splits a grid into sub-bands of `sbs_rbs` resource blocks each; the last
/// sub-band keeps the remainder when the size does not divide the grid.
pub fn partition<T: Scalar>(spec: &GridSpec<T>, sbs_rbs: usize) -> Result<SubbandPartition> {
    if sbs_rbs == 0 || sbs_rbs > spec.n_rbs() {
        return Err(Error::Parameter(format!(
            "sub-band size must be between 1 and {} resource blocks, got {sbs_rbs}",
            spec.n_rbs()
        )));
    }
    let n_sc = spec.n_subcarriers();
    let step = sbs_rbs * spec.sc_per_rb();
    let ranges = (0..n_sc)
        .step_by(step)
        .map(|start| start..(start + step).min(n_sc))
        .collect();
    Ok(SubbandPartition { ranges, sbs_rbs })
}

/// Per-subcarrier Gram matrices `H^H H`, the shared input of all sub-band
/// statistics on one realization.
pub fn subcarrier_grams<T: Scalar>(grid: &ChannelGrid<T>) -> Vec<CMat<T>> {
    grid.matrices().iter().map(|h| h.gram()).collect()
}

/// Second-order summary of one sub-band: the averaged covariance and its
/// dominant eigenpair.
#[derive(Clone, Debug)]
pub struct SubbandStats<T> {
    cov: CMat<T>,
    sigma: T,
    v: CVec<T>,
}

impl<T: Scalar> SubbandStats<T> {
    /// Builds the summary from an averaged covariance matrix.
    pub fn from_cov(cov: CMat<T>) -> Result<Self> {
        let (sigma, v) = cov.dominant_eigpair()?;
        Ok(Self { cov, sigma, v })
    }

    /// Averaged covariance matrix.
    pub fn cov(&self) -> &CMat<T> {
        &self.cov
    }

    /// Dominant eigenvalue: the sub-band channel power along `v`.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Dominant eigenvector, unit norm.
    pub fn v(&self) -> &CVec<T> {
        &self.v
    }
}

fn average_gram<T: Scalar>(grams: &[CMat<T>], range: &Range<usize>) -> Result<CMat<T>> {
    if range.start >= range.end {
        return Err(Error::Parameter(format!(
            "sub-band range {}..{} is empty",
            range.start, range.end
        )));
    }
    if range.end > grams.len() {
        return Err(Error::Parameter(format!(
            "sub-band range {}..{} exceeds the {}-subcarrier grid",
            range.start,
            range.end,
            grams.len()
        )));
    }
    let n = grams[range.start].rows();
    let mut acc = CMat::zeros(n, n);
    for c in range.clone() {
        acc.add_assign(&grams[c])?;
    }
    let inv_len = T::one() / T::from_usize(range.len()).unwrap();
    Ok(acc.scale(inv_len))
}

/// Sub-band statistics from precomputed per-subcarrier Gram matrices.
pub fn stats_for<T: Scalar>(grams: &[CMat<T>], range: &Range<usize>) -> Result<SubbandStats<T>> {
    SubbandStats::from_cov(average_gram(grams, range)?)
}

/// Sub-band statistics straight from a channel realization.
pub fn subband_stats<T: Scalar>(grid: &ChannelGrid<T>, range: &Range<usize>) -> Result<SubbandStats<T>> {
    if range.end > grid.spec().n_subcarriers() {
        return Err(Error::Parameter(format!(
            "sub-band range {}..{} exceeds the {}-subcarrier grid",
            range.start,
            range.end,
            grid.spec().n_subcarriers()
        )));
    }
    if range.start >= range.end {
        return Err(Error::Parameter(format!(
            "sub-band range {}..{} is empty",
            range.start, range.end
        )));
    }
    let grams: Vec<CMat<T>> = range.clone().map(|c| grid.at(c).gram()).collect();
    stats_for(&grams, &(0..grams.len()))
}

/// Statistics for every sub-band of a partition.
pub fn partition_stats<T: Scalar>(
    grams: &[CMat<T>],
    part: &SubbandPartition,
) -> Result<Vec<SubbandStats<T>>> {
    part.ranges().iter().map(|r| stats_for(grams, r)).collect()
}

/// What a selection band settled on: a codebook index, or the unquantized
/// eigen-direction bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecoderChoice {
    /// Codebook entry, identified by its transmitted precoding matrix index.
    Tpmi(usize),
    /// The dominant eigenvector itself — the bound no codebook entry beats.
    Svd,
}

impl PrecoderChoice {
    /// Codebook index, if this is a codebook choice.
    pub fn tpmi(&self) -> Option<usize> {
        match self {
            Self::Tpmi(i) => Some(*i),
            Self::Svd => None,
        }
    }
}

impl fmt::Display for PrecoderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tpmi(i) => write!(f, "{i}"),
            Self::Svd => write!(f, "svd"),
        }
    }
}

/// How each selection band picks its precoder.
#[derive(Clone, Copy, Debug)]
pub enum SelectionRule<'a, T> {
    /// Exhaustive search over a codebook, lowest index on metric ties.
    Codebook(&'a Codebook<T>),
    /// Use the dominant eigenvector directly (the codebook-free upper bound).
    SvdBound,
}

/// Whether precoders are chosen per sub-band or once for the whole band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecodingMode {
    /// Independent selection on every sub-band.
    Subband,
    /// One selection on the whole-band average covariance, applied everywhere.
    Wideband,
}

/// Outcome of one selection: the choice, its metric on the selection band's
/// own statistics, and the concrete weight vector (needed to re-evaluate the
/// choice on finer sub-bands).
#[derive(Clone, Debug)]
pub struct Selection<T> {
    choice: PrecoderChoice,
    metric: T,
    weights: CVec<T>,
}

impl<T: Scalar> Selection<T> {
    /// The selected precoder's identity.
    pub fn choice(&self) -> PrecoderChoice {
        self.choice
    }

    /// `|v^H w|` achieved on the selection band.
    pub fn metric(&self) -> T {
        self.metric
    }

    /// The selected weight vector.
    pub fn weights(&self) -> &CVec<T> {
        &self.weights
    }
}

/// Exhaustive codebook search: the entry maximizing `|v^H w|`, ties broken
/// by lowest index.
pub fn search_codebook<T: Scalar>(
    stats: &SubbandStats<T>,
    cb: &Codebook<T>,
) -> Result<Selection<T>> {
    let v = stats.v();
    if v.len() != cb.n_tx() {
        return Err(Error::Dimension(format!(
            "eigenvector has {} entries, codebook serves {} ports",
            v.len(),
            cb.n_tx()
        )));
    }
    let (index, score) = match cb.params() {
        Params::Proposed { m_bits } => search_phase_grid(cb, m_bits, v),
        _ => search_exhaustive(cb, v),
    };
    let weights = cb.get(index).expect("search returns a valid index").weights();
    Ok(Selection {
        choice: PrecoderChoice::Tpmi(index),
        metric: score.sqrt(),
        weights: weights.clone(),
    })
}

/// Plain scan over all entries; returns `(index, |v^H w|^2)`.
fn search_exhaustive<T: Scalar>(cb: &Codebook<T>, v: &CVec<T>) -> (usize, T) {
    let mut best_index = 0;
    let mut best_score = T::neg_infinity();
    for (i, entry) in cb.entries().iter().enumerate() {
        let q = v.dot_conj(entry.weights()).expect("port counts match");
        let score = q.norm_sqr();
        if score > best_score {
            best_index = i;
            best_score = score;
        }
    }
    (best_index, best_score)
}

/// Structured scan for phase-grid codebooks.
///
/// Every entry factors per port, so the partial inner products over ports
/// 0..p are shared by whole blocks of consecutive indices. Walking the
/// indices with an odometer over the per-port digits reuses those prefixes
/// and costs roughly one complex addition per entry instead of one per
/// entry-port pair. The per-port terms are read from the stored entries and
/// the prefix additions replay the plain scan's left fold, so index and
/// score are bit-identical to [`search_exhaustive`].
fn search_phase_grid<T: Scalar>(cb: &Codebook<T>, m_bits: &[u32], v: &CVec<T>) -> (usize, T) {
    let n_ports = cb.n_tx();
    let sizes: Vec<usize> = m_bits.iter().map(|&b| 1usize << b).collect();
    // strides[p]: index step that increments port p+1's digit by one.
    let mut strides = vec![1usize; sizes.len()];
    for p in (0..sizes.len().saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * sizes[p + 1];
    }
    // terms[p][m] = conj(v_p) * w_p(m) for port p's m-th grid value; port 0
    // has a single constant component.
    let zero = Complex::new(T::zero(), T::zero());
    let first = v[0].conj() * cb.get(0).unwrap().weights()[0];
    let terms: Vec<Vec<Complex<T>>> = (0..sizes.len())
        .map(|p| {
            (0..sizes[p])
                .map(|m| {
                    let entry = cb.get(m * strides[p]).unwrap().weights();
                    v[p + 1].conj() * entry[p + 1]
                })
                .collect()
        })
        .collect();

    // prefix[p]: inner product over ports 0..=p for the current digits.
    let mut digits = vec![0usize; sizes.len()];
    let mut prefix = vec![zero; n_ports];
    prefix[0] = zero + first;
    for p in 0..sizes.len() {
        prefix[p + 1] = prefix[p] + terms[p][0];
    }
    let mut best_index = 0;
    let mut best_score = prefix[n_ports - 1].norm_sqr();
    for index in 1..cb.len() {
        // Advance the odometer, last digit fastest, and rebuild prefixes
        // from the highest changed port down.
        let mut p = sizes.len() - 1;
        loop {
            digits[p] += 1;
            if digits[p] < sizes[p] {
                break;
            }
            digits[p] = 0;
            p -= 1;
        }
        for q in p..sizes.len() {
            prefix[q + 1] = prefix[q] + terms[q][digits[q]];
        }
        let score = prefix[n_ports - 1].norm_sqr();
        if score > best_score {
            best_index = index;
            best_score = score;
        }
    }
    (best_index, best_score)
}

/// The codebook-free selection: the dominant eigenvector itself, metric
/// exactly one.
pub fn svd_assignment<T: Scalar>(stats: &SubbandStats<T>) -> Selection<T> {
    Selection {
        choice: PrecoderChoice::Svd,
        metric: T::one(),
        weights: stats.v().clone(),
    }
}

impl<T: Scalar> SelectionRule<'_, T> {
    fn select(&self, stats: &SubbandStats<T>) -> Result<Selection<T>> {
        match self {
            SelectionRule::Codebook(cb) => search_codebook(stats, cb),
            SelectionRule::SvdBound => Ok(svd_assignment(stats)),
        }
    }
}

/// Post-processing SNR of one sub-band: `p_subband * sigma * metric^2 /
/// noise_var`. Every SNR evaluation funnels through this one expression.
pub fn post_snr<T: Scalar>(sigma: T, metric: T, p_subband: T, noise_var: T) -> T {
    p_subband * sigma * (metric * metric) / noise_var
}

/// One evaluated sub-band: which precoder it got, how well it aligns, and
/// the resulting post-processing SNR.
#[derive(Clone, Debug)]
pub struct SubbandAssignment<T> {
    subband_index: usize,
    choice: PrecoderChoice,
    metric: T,
    post_snr_linear: T,
}

impl<T: Scalar> SubbandAssignment<T> {
    /// Position of the sub-band in the evaluation partition.
    pub fn subband_index(&self) -> usize {
        self.subband_index
    }

    /// The precoder applied on this sub-band.
    pub fn choice(&self) -> PrecoderChoice {
        self.choice
    }

    /// `|v^H w|` of the applied precoder against this sub-band's `v`.
    pub fn metric(&self) -> T {
        self.metric
    }

    /// Post-processing SNR (linear).
    pub fn post_snr_linear(&self) -> T {
        self.post_snr_linear
    }
}

/// Maps each evaluation sub-band to the selection band containing it.
/// Errors unless the evaluation partition refines the selection partition.
fn containment(eval: &SubbandPartition, sel: &SubbandPartition) -> Result<Vec<usize>> {
    let mut map = Vec::with_capacity(eval.len());
    let mut s = 0;
    for e in eval.ranges() {
        while s < sel.len() && sel.ranges()[s].end <= e.start {
            s += 1;
        }
        let inside = s < sel.len()
            && sel.ranges()[s].start <= e.start
            && e.end <= sel.ranges()[s].end;
        if !inside {
            return Err(Error::Dimension(format!(
                "evaluation sub-band {}..{} is not contained in any selection band",
                e.start, e.end
            )));
        }
        map.push(s);
    }
    Ok(map)
}

/// Selects precoders on one partition and evaluates them on another.
///
/// `eval_stats` must hold the statistics of `eval`'s sub-bands (see
/// [`partition_stats`]); sharing them across calls avoids recomputing the
/// eigenpairs when several rules run on the same realization. Each selection
/// band picks one precoder from its own averaged covariance; each evaluation
/// sub-band then gets that precoder's metric against its own eigenvector and
/// the post-SNR `p_total/len(eval) * sigma_l * metric^2 / noise_var`. When a
/// selection band coincides with an evaluation sub-band its statistics and
/// metric are reused, not recomputed, so per-sub-band selection reports the
/// search's own metric bits.
pub fn assign_with_selection<T: Scalar>(
    grams: &[CMat<T>],
    eval: &SubbandPartition,
    eval_stats: &[SubbandStats<T>],
    sel: &SubbandPartition,
    rule: SelectionRule<'_, T>,
    p_total: T,
    noise_var: T,
) -> Result<Vec<SubbandAssignment<T>>> {
    if !(p_total > T::zero()) || !(noise_var > T::zero()) {
        return Err(Error::Parameter(
            "total power and noise variance must be positive".into(),
        ));
    }
    if eval_stats.len() != eval.len() {
        return Err(Error::Dimension(format!(
            "{} evaluation statistics for {} sub-bands",
            eval_stats.len(),
            eval.len()
        )));
    }
    let sel_of = containment(eval, sel)?;

    // One selection per selection band. A band that coincides with an
    // evaluation sub-band reuses its statistics.
    let mut selections: Vec<Option<Selection<T>>> = vec![None; sel.len()];
    for (l, &s) in sel_of.iter().enumerate() {
        if selections[s].is_none() {
            let sel_range = &sel.ranges()[s];
            let selection = if *sel_range == eval.ranges()[l] {
                rule.select(&eval_stats[l])?
            } else {
                rule.select(&stats_for(grams, sel_range)?)?
            };
            selections[s] = Some(selection);
        }
    }

    let p_subband = p_total / T::from_usize(eval.len()).unwrap();
    let mut out = Vec::with_capacity(eval.len());
    for (l, &s) in sel_of.iter().enumerate() {
        let selection = selections[s].as_ref().expect("selection band visited");
        let stats = &eval_stats[l];
        let metric = if sel.ranges()[s] == eval.ranges()[l] {
            selection.metric()
        } else {
            cabs(stats.v().dot_conj(selection.weights())?)
        };
        out.push(SubbandAssignment {
            subband_index: l,
            choice: selection.choice(),
            metric,
            post_snr_linear: post_snr(stats.sigma(), metric, p_subband, noise_var),
        });
    }
    Ok(out)
}

/// Selects and evaluates precoders on a realization: per sub-band, or once
/// wide-band and applied to every sub-band.
pub fn assign_all<T: Scalar>(
    grid: &ChannelGrid<T>,
    part: &SubbandPartition,
    rule: SelectionRule<'_, T>,
    mode: PrecodingMode,
    p_total: T,
    noise_var: T,
) -> Result<Vec<SubbandAssignment<T>>> {
    let grams = subcarrier_grams(grid);
    let eval_stats = partition_stats(&grams, part)?;
    let sel = match mode {
        PrecodingMode::Subband => part.clone(),
        PrecodingMode::Wideband => partition(grid.spec(), grid.spec().n_rbs())?,
    };
    assign_with_selection(&grams, part, &eval_stats, &sel, rule, p_total, noise_var)
}

/// Renders assignments as diagnostic text, one line per sub-band:
/// `subband tpmi metric gamma_db`.
pub fn render_assignments<T: Scalar>(assignments: &[SubbandAssignment<T>]) -> String {
    let mut out = String::from("subband tpmi metric gamma_db\n");
    let ten = T::from_f64(10.0).unwrap();
    for a in assignments {
        let gamma_db = ten * a.post_snr_linear().log10();
        out.push_str(&format!(
            "{} {} {} {}\n",
            a.subband_index(),
            a.choice(),
            a.metric(),
            gamma_db
        ));
    }
    out
}
