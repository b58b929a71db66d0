//! Monte-Carlo BLER sweep engine, study helpers, configuration parsing and
//! CSV output.
//!
//! A sweep draws `n_tbs` independent channel realizations; on each one,
//! every configured scheme selects and evaluates its precoders (a paired
//! comparison — all schemes see the same channel), and one uniform draw per
//! (trial, SNR point) decides the transport block for *all* schemes (common
//! random numbers). Both pairings preserve the per-sub-band SNR dominance
//! orderings at the error-count level, so scheme gaps resolve with far fewer
//! trials than independent sampling would need.
//!
//! Reproducibility contract: the configuration and seed fully determine
//! every output byte. Trial `t` draws its channel from RNG stream `2t` and
//! its transport-block uniforms from stream `2t + 1`, each keyed by the
//! master seed, so any worker count yields byte-identical results.
//!
//! The SNR axis is the total transmit power over the (unit) noise variance:
//! the channel has unit average per-entry gain, and `p_total = 10^(snr/10)`
//! is split evenly across sub-bands.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{generate_realization, exp_pdp, GridSpec, TdlProfile};
use crate::codebook::{legacy_codebook, proposed_codebook, type1_8tx_codebook, Codebook};
use crate::error::{Error, Result};
use crate::linkabs::{effective_snr, tb_error_prob, McsModel};
use crate::numerics::Scalar;
use crate::precoding::{
    assign_with_selection, partition, partition_stats, subcarrier_grams, PrecoderChoice,
    PrecodingMode, SelectionRule, SubbandPartition,
};

/// Noise variance at the combiner output. Fixed at one: the sweep axis is
/// the total transmit power, and the channel has unit average gain.
const NOISE_VAR: f64 = 1.0;

/// Which codebook (or bound) a scheme searches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleSpec {
    /// Baseline codebook for the configured antenna count.
    Legacy,
    /// Per-port phase grid with the given bit widths (one per port after the
    /// first).
    Proposed(Vec<u32>),
    /// Eight-port DFT-beam codebook with an `n1 x n2` beam grid.
    Type1 { n1: usize, n2: usize },
    /// The unquantized eigen-direction bound.
    Svd,
}

impl RuleSpec {
    fn label(&self) -> String {
        match self {
            RuleSpec::Legacy => "legacy".into(),
            RuleSpec::Proposed(bits) => {
                let parts: Vec<String> = bits.iter().map(|b| b.to_string()).collect();
                format!("proposed_{}", parts.join("_"))
            }
            RuleSpec::Type1 { n1, n2 } => format!("type1_{n1}_{n2}"),
            RuleSpec::Svd => "svd".into(),
        }
    }

    fn build<T: Scalar>(&self, n_tx: usize) -> Result<Option<Codebook<T>>> {
        match self {
            RuleSpec::Legacy => legacy_codebook(n_tx).map(Some),
            RuleSpec::Proposed(bits) => proposed_codebook(n_tx, bits).map(Some),
            RuleSpec::Type1 { n1, n2 } => {
                if n_tx != 8 {
                    return Err(Error::Parameter(format!(
                        "the type1 codebook serves 8 ports, config has n_tx = {n_tx}"
                    )));
                }
                type1_8tx_codebook(*n1, *n2).map(Some)
            }
            RuleSpec::Svd => Ok(None),
        }
    }
}

/// One simulated scheme: a selection scope and a codebook rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    mode: PrecodingMode,
    rule: RuleSpec,
}

impl Scheme {
    /// Builds a scheme.
    pub fn new(mode: PrecodingMode, rule: RuleSpec) -> Self {
        Self { mode, rule }
    }

    /// Selection scope.
    pub fn mode(&self) -> PrecodingMode {
        self.mode
    }

    /// Codebook rule.
    pub fn rule(&self) -> &RuleSpec {
        &self.rule
    }

    /// Series label used in CSV output, e.g. `sb_legacy` or
    /// `wb_proposed_3_3_3`.
    pub fn label(&self) -> String {
        let prefix = match self.mode {
            PrecodingMode::Subband => "sb",
            PrecodingMode::Wideband => "wb",
        };
        format!("{prefix}_{}", self.rule.label())
    }
}

/// Full description of one simulation run.
#[derive(Clone, Debug)]
pub struct SimConfig<T> {
    spec: GridSpec<T>,
    profile: TdlProfile<T>,
    n_rx: usize,
    n_tx: usize,
    schemes: Vec<Scheme>,
    sbs_rbs: usize,
    snr_start_db: f64,
    snr_stop_db: f64,
    snr_step_db: f64,
    n_tbs: usize,
    seed: u64,
    mcs: McsModel<T>,
}

impl<T: Scalar> SimConfig<T> {
    /// Grid geometry.
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    /// Power-delay profile.
    pub fn profile(&self) -> &TdlProfile<T> {
        &self.profile
    }

    /// Receive antenna count.
    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// Transmit antenna count.
    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Configured schemes, in CSV order.
    pub fn schemes(&self) -> &[Scheme] {
        &self.schemes
    }

    /// Evaluation sub-band size in resource blocks.
    pub fn sbs_rbs(&self) -> usize {
        self.sbs_rbs
    }

    /// Transport blocks per sweep point.
    pub fn n_tbs(&self) -> usize {
        self.n_tbs
    }

    /// Master seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Overrides the master seed (CLI `--seed`).
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    /// Error model.
    pub fn mcs(&self) -> &McsModel<T> {
        &self.mcs
    }

    /// Swept SNR points in dB, ascending. Each point is canonicalized to 6
    /// significant digits so the CSV rendering round-trips exactly.
    pub fn snr_points_db(&self) -> Vec<T> {
        let n = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor()
            as usize
            + 1;
        (0..n)
            .map(|i| {
                let db = self.snr_start_db + i as f64 * self.snr_step_db;
                T::from_f64(canonical_sig6(db)).unwrap()
            })
            .collect()
    }
}

/// Parses the flat `key = value` configuration format.
///
/// Keys: `grid.n_rbs`, `grid.sc_per_rb`, `grid.scs_hz`, `profile.n_taps`,
/// `profile.rms_delay_spread_s`, `profile.max_delay_s`, `n_rx`, `n_tx`,
/// `sbs_rbs`, `snr.start_db`, `snr.stop_db`, `snr.step_db`, `n_tbs`, `seed`,
/// `mcs.spectral_eff_bits`, `mcs.shannon_gap_db`, `mcs.transition_slope`,
/// and one `scheme = <sb|wb> <legacy|svd|proposed b2 b3 ...|type1 n1 n2>`
/// line per scheme. `#` starts a comment. Unknown or repeated scalar keys
/// are errors.
pub fn parse_config<T: Scalar>(text: &str) -> Result<SimConfig<T>> {
    let mut grid_n_rbs = 270usize;
    let mut grid_sc_per_rb = 12usize;
    let mut grid_scs_hz = 30_000.0f64;
    let mut profile_n_taps = 12usize;
    let mut profile_rms_s = 300e-9f64;
    let mut profile_max_delay_s = 2e-6f64;
    let mut n_rx = 8usize;
    let mut n_tx = 2usize;
    let mut sbs_rbs = 1usize;
    let mut snr_start_db = 0.0f64;
    let mut snr_stop_db = 20.0f64;
    let mut snr_step_db = 1.0f64;
    let mut n_tbs = 1500usize;
    let mut seed = 0u64;
    let mut mcs_eff = 3.9023f64;
    let mut mcs_gap_db = 2.0f64;
    let mut mcs_slope = 5.0f64;
    let mut schemes: Vec<Scheme> = Vec::new();
    let mut seen: Vec<String> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key != "scheme" {
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!(
                    "line {}: key '{key}' given more than once",
                    lineno + 1
                )));
            }
            seen.push(key.to_string());
        }
        match key {
            "grid.n_rbs" => grid_n_rbs = parse_field(key, value)?,
            "grid.sc_per_rb" => grid_sc_per_rb = parse_field(key, value)?,
            "grid.scs_hz" => grid_scs_hz = parse_field(key, value)?,
            "profile.n_taps" => profile_n_taps = parse_field(key, value)?,
            "profile.rms_delay_spread_s" => profile_rms_s = parse_field(key, value)?,
            "profile.max_delay_s" => profile_max_delay_s = parse_field(key, value)?,
            "n_rx" => n_rx = parse_field(key, value)?,
            "n_tx" => n_tx = parse_field(key, value)?,
            "sbs_rbs" => sbs_rbs = parse_field(key, value)?,
            "snr.start_db" => snr_start_db = parse_field(key, value)?,
            "snr.stop_db" => snr_stop_db = parse_field(key, value)?,
            "snr.step_db" => snr_step_db = parse_field(key, value)?,
            "n_tbs" => n_tbs = parse_field(key, value)?,
            "seed" => seed = parse_field(key, value)?,
            "mcs.spectral_eff_bits" => mcs_eff = parse_field(key, value)?,
            "mcs.shannon_gap_db" => mcs_gap_db = parse_field(key, value)?,
            "mcs.transition_slope" => mcs_slope = parse_field(key, value)?,
            "scheme" => schemes.push(parse_scheme(value, lineno + 1)?),
            _ => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{key}'",
                    lineno + 1
                )))
            }
        }
    }

    let spec = GridSpec::new(
        grid_n_rbs,
        grid_sc_per_rb,
        T::from_f64(grid_scs_hz)
            .ok_or_else(|| Error::Config("grid.scs_hz: out of range".into()))?,
    )
    .map_err(|e| Error::Config(format!("grid: {e}")))?;
    let profile = exp_pdp(
        profile_n_taps,
        T::from_f64(profile_rms_s).unwrap(),
        T::from_f64(profile_max_delay_s).unwrap(),
    )
    .map_err(|e| Error::Config(format!("profile: {e}")))?;
    let mcs = McsModel::new(
        T::from_f64(mcs_eff).unwrap(),
        T::from_f64(mcs_gap_db).unwrap(),
        T::from_f64(mcs_slope).unwrap(),
    )
    .map_err(|e| Error::Config(format!("mcs: {e}")))?;

    if ![2, 4, 8].contains(&n_tx) {
        return Err(Error::Config(format!("n_tx: must be 2, 4 or 8, got {n_tx}")));
    }
    if n_rx == 0 {
        return Err(Error::Config("n_rx: must be at least 1".into()));
    }
    if n_tbs == 0 {
        return Err(Error::Config("n_tbs: must be at least 1".into()));
    }
    if !(snr_step_db > 0.0) {
        return Err(Error::Config(format!(
            "snr.step_db: must be positive, got {snr_step_db}"
        )));
    }
    if snr_stop_db < snr_start_db {
        return Err(Error::Config(format!(
            "snr.stop_db: {snr_stop_db} is below snr.start_db {snr_start_db}"
        )));
    }
    if sbs_rbs == 0 || sbs_rbs > grid_n_rbs {
        return Err(Error::Config(format!(
            "sbs_rbs: must be between 1 and {grid_n_rbs}, got {sbs_rbs}"
        )));
    }
    for (i, s) in schemes.iter().enumerate() {
        s.rule()
            .build::<T>(n_tx)
            .map_err(|e| Error::Config(format!("scheme '{}': {e}", s.label())))?;
        if schemes[..i].contains(s) {
            return Err(Error::Config(format!("scheme '{}' listed twice", s.label())));
        }
    }

    Ok(SimConfig {
        spec,
        profile,
        n_rx,
        n_tx,
        schemes,
        sbs_rbs,
        snr_start_db,
        snr_stop_db,
        snr_step_db,
        n_tbs,
        seed,
        mcs,
    })
}

fn parse_field<F: std::str::FromStr>(key: &str, value: &str) -> Result<F> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_scheme(value: &str, lineno: usize) -> Result<Scheme> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let bad = |msg: &str| {
        Error::Config(format!(
            "line {lineno}: scheme '{value}': {msg} (expected '<sb|wb> <legacy|svd|proposed b2 b3 ...|type1 n1 n2>')"
        ))
    };
    if tokens.len() < 2 {
        return Err(bad("too few tokens"));
    }
    let mode = match tokens[0] {
        "sb" => PrecodingMode::Subband,
        "wb" => PrecodingMode::Wideband,
        other => return Err(bad(&format!("unknown mode '{other}'"))),
    };
    let rule = match tokens[1] {
        "legacy" if tokens.len() == 2 => RuleSpec::Legacy,
        "svd" if tokens.len() == 2 => RuleSpec::Svd,
        "proposed" if tokens.len() > 2 => {
            let bits: std::result::Result<Vec<u32>, _> =
                tokens[2..].iter().map(|t| t.parse()).collect();
            RuleSpec::Proposed(bits.map_err(|_| bad("phase bits must be integers"))?)
        }
        "type1" if tokens.len() == 4 => {
            let n1 = tokens[2].parse().map_err(|_| bad("n1 must be an integer"))?;
            let n2 = tokens[3].parse().map_err(|_| bad("n2 must be an integer"))?;
            RuleSpec::Type1 { n1, n2 }
        }
        other => return Err(bad(&format!("unknown or malformed family '{other}'"))),
    };
    Ok(Scheme::new(mode, rule))
}

/// One point of a BLER curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlerPoint<T> {
    /// Swept SNR in dB.
    pub snr_db: T,
    /// Transport blocks simulated.
    pub trials: usize,
    /// Transport blocks in error.
    pub errors: usize,
    /// `errors / trials`.
    pub bler: T,
}

/// One scheme's BLER curve.
#[derive(Clone, Debug)]
pub struct SchemeSeries<T> {
    label: String,
    points: Vec<BlerPoint<T>>,
}

impl<T: Scalar> SchemeSeries<T> {
    /// CSV series label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Points in ascending SNR order.
    pub fn points(&self) -> &[BlerPoint<T>] {
        &self.points
    }
}

/// Run metadata kept out of the CSV byte contract.
#[derive(Clone, Debug)]
pub struct SweepMeta {
    /// Master seed.
    pub seed: u64,
    /// Transport blocks per point.
    pub n_tbs: usize,
    /// Wall-clock time of the sweep.
    pub wall: Duration,
}

/// Result of a sweep: one BLER series per scheme plus run metadata.
#[derive(Clone, Debug)]
pub struct SweepResult<T> {
    series: Vec<SchemeSeries<T>>,
    meta: SweepMeta,
}

impl<T: Scalar> SweepResult<T> {
    /// Series in configuration order.
    pub fn series(&self) -> &[SchemeSeries<T>] {
        &self.series
    }

    /// Series with a given label.
    pub fn series_labeled(&self, label: &str) -> Option<&SchemeSeries<T>> {
        self.series.iter().find(|s| s.label() == label)
    }

    /// Run metadata.
    pub fn meta(&self) -> &SweepMeta {
        &self.meta
    }
}

/// Runs trials 0..n, possibly across worker threads, and returns their
/// outcomes in trial order; any worker count yields the same result.
fn par_trials<R, F>(n_trials: usize, workers: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync,
{
    let workers = workers.max(1).min(n_trials.max(1));
    if workers == 1 {
        return (0..n_trials).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R>>>> = (0..n_trials).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= n_trials {
                    break;
                }
                let outcome = f(t);
                *slots[t].lock().expect("slot lock") = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("trial visited"))
        .collect()
}

struct BuiltScheme<T> {
    label: String,
    codebook: Option<Codebook<T>>,
    sel_part: SubbandPartition,
}

impl<T: Scalar> BuiltScheme<T> {
    fn rule(&self) -> SelectionRule<'_, T> {
        match &self.codebook {
            Some(cb) => SelectionRule::Codebook(cb),
            None => SelectionRule::SvdBound,
        }
    }
}

fn build_schemes<T: Scalar>(cfg: &SimConfig<T>) -> Result<Vec<BuiltScheme<T>>> {
    let eval_part = partition(cfg.spec(), cfg.sbs_rbs())?;
    cfg.schemes()
        .iter()
        .map(|s| {
            let sel_part = match s.mode() {
                PrecodingMode::Subband => eval_part.clone(),
                PrecodingMode::Wideband => partition(cfg.spec(), cfg.spec().n_rbs())?,
            };
            Ok(BuiltScheme {
                label: s.label(),
                codebook: s.rule().build(cfg.n_tx())?,
                sel_part,
            })
        })
        .collect()
}

/// Per-trial, per-scheme sub-band SNRs at unit total power, plus the
/// transport-block uniforms for each SNR point.
struct TrialBase<T> {
    base_gammas: Vec<Vec<T>>,
    draws: Vec<T>,
    mean_metrics: Vec<T>,
}

fn trial_base<T: Scalar>(
    cfg: &SimConfig<T>,
    eval_part: &SubbandPartition,
    schemes: &[BuiltScheme<T>],
    n_draws: usize,
    t: usize,
) -> Result<TrialBase<T>> {
    let grid = generate_realization(
        cfg.spec(),
        cfg.profile(),
        cfg.n_rx(),
        cfg.n_tx(),
        cfg.seed(),
        2 * t as u64,
    )?;
    let grams = subcarrier_grams(&grid);
    let eval_stats = partition_stats(&grams, eval_part)?;
    let noise = T::from_f64(NOISE_VAR).unwrap();
    let mut base_gammas = Vec::with_capacity(schemes.len());
    let mut mean_metrics = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let assignments = assign_with_selection(
            &grams,
            eval_part,
            &eval_stats,
            &scheme.sel_part,
            scheme.rule(),
            T::one(),
            noise,
        )?;
        let mut metric_sum = T::zero();
        let gammas: Vec<T> = assignments
            .iter()
            .map(|a| {
                metric_sum += a.metric();
                a.post_snr_linear()
            })
            .collect();
        mean_metrics.push(metric_sum / T::from_usize(assignments.len()).unwrap());
        base_gammas.push(gammas);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    rng.set_stream(2 * t as u64 + 1);
    let draws: Vec<T> = (0..n_draws)
        .map(|_| T::from_f64(rng.random::<f64>()).unwrap())
        .collect();
    Ok(TrialBase {
        base_gammas,
        draws,
        mean_metrics,
    })
}

fn errors_for_trial<T: Scalar>(
    base: &TrialBase<T>,
    powers: &[T],
    mcs: &McsModel<T>,
) -> Result<Vec<Vec<bool>>> {
    base.base_gammas
        .iter()
        .map(|gammas| {
            powers
                .iter()
                .zip(&base.draws)
                .map(|(&p, &u)| {
                    let scaled: Vec<T> = gammas.iter().map(|&g| g * p).collect();
                    Ok(u < tb_error_prob(effective_snr(&scaled)?, mcs))
                })
                .collect()
        })
        .collect()
}

fn tally<T: Scalar>(
    labels: Vec<String>,
    snrs: &[T],
    per_trial: &[Vec<Vec<bool>>],
    n_tbs: usize,
    seed: u64,
    started: Instant,
) -> SweepResult<T> {
    let series = labels
        .into_iter()
        .enumerate()
        .map(|(s, label)| {
            let points = snrs
                .iter()
                .enumerate()
                .map(|(j, &snr_db)| {
                    let errors = per_trial.iter().filter(|trial| trial[s][j]).count();
                    BlerPoint {
                        snr_db,
                        trials: n_tbs,
                        errors,
                        bler: T::from_usize(errors).unwrap() / T::from_usize(n_tbs).unwrap(),
                    }
                })
                .collect();
            SchemeSeries { label, points }
        })
        .collect();
    SweepResult {
        series,
        meta: SweepMeta {
            seed,
            n_tbs,
            wall: started.elapsed(),
        },
    }
}

/// Runs the configured SNR sweep with `workers` threads.
pub fn run_sweep<T: Scalar>(cfg: &SimConfig<T>, workers: usize) -> Result<SweepResult<T>> {
    if cfg.schemes().is_empty() {
        return Err(Error::Config("no schemes configured".into()));
    }
    let started = Instant::now();
    let eval_part = partition(cfg.spec(), cfg.sbs_rbs())?;
    let schemes = build_schemes(cfg)?;
    let snrs = cfg.snr_points_db();
    let ten = T::from_f64(10.0).unwrap();
    let powers: Vec<T> = snrs.iter().map(|&db| ten.powf(db / ten)).collect();
    let mcs = *cfg.mcs();

    let per_trial = par_trials(cfg.n_tbs(), workers, |t| {
        let base = trial_base(cfg, &eval_part, &schemes, snrs.len(), t)?;
        errors_for_trial(&base, &powers, &mcs)
    })?;
    let labels = schemes.iter().map(|s| s.label.clone()).collect();
    Ok(tally(labels, &snrs, &per_trial, cfg.n_tbs(), cfg.seed(), started))
}

/// Result of the sub-band-size study: one series per SBS value plus the
/// trial-averaged per-sub-band alignment metric of each.
#[derive(Clone, Debug)]
pub struct SbsStudy<T> {
    sweep: SweepResult<T>,
    mean_metrics: Vec<T>,
}

impl<T: Scalar> SbsStudy<T> {
    /// BLER series, one per SBS value, labeled `sbs_<value>`.
    pub fn sweep(&self) -> &SweepResult<T> {
        &self.sweep
    }

    /// Mean per-sub-band metric of each series, aligned with
    /// [`SbsStudy::sweep`]. Evaluation always happens on the configured
    /// (fine) partition; only the selection granularity varies, so this is
    /// the average alignment cost of coarser selection.
    pub fn mean_metrics(&self) -> &[T] {
        &self.mean_metrics
    }
}

/// Sweeps the selection sub-band size over `sbs_list` for the first
/// sub-band codebook scheme in the config.
///
/// All series share the same channel realizations and transport-block
/// draws; precoders are selected on `sbs` resource blocks but always
/// evaluated on the configured partition, so series differ only in
/// selection granularity. An `sbs` equal to the whole grid reproduces the
/// wide-band scheme bit-for-bit.
pub fn sbs_study<T: Scalar>(
    cfg: &SimConfig<T>,
    sbs_list: &[usize],
    workers: usize,
) -> Result<SbsStudy<T>> {
    if sbs_list.is_empty() {
        return Err(Error::Config("sbs list is empty".into()));
    }
    for (i, &sbs) in sbs_list.iter().enumerate() {
        if sbs == 0 || sbs > cfg.spec().n_rbs() {
            return Err(Error::Config(format!(
                "sbs {} is not between 1 and {}",
                sbs,
                cfg.spec().n_rbs()
            )));
        }
        if sbs_list[..i].contains(&sbs) {
            return Err(Error::Config(format!("sbs {sbs} listed twice")));
        }
    }
    let base_scheme = cfg
        .schemes()
        .iter()
        .find(|s| s.mode() == PrecodingMode::Subband && *s.rule() != RuleSpec::Svd)
        .ok_or_else(|| {
            Error::Config("the sbs study needs a sub-band codebook scheme".into())
        })?;
    let started = Instant::now();
    let eval_part = partition(cfg.spec(), cfg.sbs_rbs())?;
    let codebook = base_scheme.rule().build::<T>(cfg.n_tx())?;
    let width = cfg.spec().n_rbs().to_string().len();
    let schemes: Vec<BuiltScheme<T>> = sbs_list
        .iter()
        .map(|&sbs| {
            Ok(BuiltScheme {
                label: format!("sbs_{sbs:0width$}"),
                codebook: codebook.clone(),
                sel_part: partition(cfg.spec(), sbs)?,
            })
        })
        .collect::<Result<_>>()?;
    let snrs = cfg.snr_points_db();
    let ten = T::from_f64(10.0).unwrap();
    let powers: Vec<T> = snrs.iter().map(|&db| ten.powf(db / ten)).collect();
    let mcs = *cfg.mcs();

    let per_trial = par_trials(cfg.n_tbs(), workers, |t| {
        let base = trial_base(cfg, &eval_part, &schemes, snrs.len(), t)?;
        let errors = errors_for_trial(&base, &powers, &mcs)?;
        Ok((errors, base.mean_metrics))
    })?;
    let errors: Vec<Vec<Vec<bool>>> = per_trial.iter().map(|(e, _)| e.clone()).collect();
    let n_tbs_t = T::from_usize(cfg.n_tbs()).unwrap();
    let mean_metrics = (0..schemes.len())
        .map(|s| {
            per_trial
                .iter()
                .fold(T::zero(), |acc, (_, m)| acc + m[s])
                / n_tbs_t
        })
        .collect();
    let labels = schemes.iter().map(|s| s.label.clone()).collect();
    let sweep = tally(labels, &snrs, &errors, cfg.n_tbs(), cfg.seed(), started);
    Ok(SbsStudy {
        sweep,
        mean_metrics,
    })
}

/// TPMI signaling report for the first sub-band codebook scheme.
#[derive(Clone, Debug)]
pub struct TpmiReport {
    /// Sub-bands per realization.
    pub n_subbands: usize,
    /// Signaling bits per sub-band: `ceil(log2(codebook size))`.
    pub bits_per_subband: u32,
    /// Bits per realization: `n_subbands * bits_per_subband`.
    pub total_bits: usize,
    /// `(separation in sub-bands, fraction of pairs with equal TPMI)`,
    /// averaged over realizations.
    pub agreement: Vec<(usize, f64)>,
    /// Realizations inspected.
    pub n_trials: usize,
}

impl fmt::Display for TpmiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "subbands_per_realization {}", self.n_subbands)?;
        writeln!(f, "bits_per_subband {}", self.bits_per_subband)?;
        writeln!(f, "total_bits_per_realization {}", self.total_bits)?;
        writeln!(f, "realizations {}", self.n_trials)?;
        for (sep, rate) in &self.agreement {
            writeln!(f, "tpmi_agreement_at_separation_{sep} {}", fmt_sig6(*rate))?;
        }
        Ok(())
    }
}

/// Fraction of sub-band pairs at each separation whose TPMIs agree, pooled
/// over realizations.
fn agreement_rates(tpmis_per_trial: &[Vec<usize>], separations: &[usize]) -> Vec<(usize, f64)> {
    separations
        .iter()
        .map(|&sep| {
            let mut pairs = 0usize;
            let mut equal = 0usize;
            for tpmis in tpmis_per_trial {
                if sep >= tpmis.len() {
                    continue;
                }
                for l in 0..tpmis.len() - sep {
                    pairs += 1;
                    if tpmis[l] == tpmis[l + sep] {
                        equal += 1;
                    }
                }
            }
            let rate = if pairs == 0 {
                0.0
            } else {
                equal as f64 / pairs as f64
            };
            (sep, rate)
        })
        .collect()
}

/// Separations (in sub-bands) probed by [`tpmi_report`].
pub const TPMI_REPORT_SEPARATIONS: [usize; 4] = [1, 5, 10, 20];

/// Measures the TPMI signaling load and the frequency coherence of the
/// selected indices for the first sub-band codebook scheme.
pub fn tpmi_report<T: Scalar>(cfg: &SimConfig<T>, workers: usize) -> Result<TpmiReport> {
    let scheme = cfg
        .schemes()
        .iter()
        .find(|s| s.mode() == PrecodingMode::Subband && *s.rule() != RuleSpec::Svd)
        .ok_or_else(|| {
            Error::Config("the tpmi report needs a sub-band codebook scheme".into())
        })?;
    let eval_part = partition(cfg.spec(), cfg.sbs_rbs())?;
    let codebook = scheme
        .rule()
        .build::<T>(cfg.n_tx())?
        .expect("codebook scheme");
    let built = BuiltScheme {
        label: scheme.label(),
        codebook: Some(codebook),
        sel_part: eval_part.clone(),
    };
    let tpmis_per_trial: Vec<Vec<usize>> = par_trials(cfg.n_tbs(), workers, |t| {
        let grid = generate_realization(
            cfg.spec(),
            cfg.profile(),
            cfg.n_rx(),
            cfg.n_tx(),
            cfg.seed(),
            2 * t as u64,
        )?;
        let grams = subcarrier_grams(&grid);
        let eval_stats = partition_stats(&grams, &eval_part)?;
        let assignments = assign_with_selection(
            &grams,
            &eval_part,
            &eval_stats,
            &built.sel_part,
            built.rule(),
            T::one(),
            T::one(),
        )?;
        Ok(assignments
            .iter()
            .map(|a| match a.choice() {
                PrecoderChoice::Tpmi(i) => i,
                PrecoderChoice::Svd => unreachable!("codebook scheme"),
            })
            .collect())
    })?;
    let bits = built.codebook.as_ref().unwrap().bits_per_index();
    Ok(TpmiReport {
        n_subbands: eval_part.len(),
        bits_per_subband: bits,
        total_bits: eval_part.len() * bits as usize,
        agreement: agreement_rates(&tpmis_per_trial, &TPMI_REPORT_SEPARATIONS),
        n_trials: cfg.n_tbs(),
    })
}

/// Formats a value with 6 significant digits in fixed decimal notation.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Rounds a value to what its 6-significant-digit rendering parses back to,
/// so formatting it again is lossless.
pub fn canonical_sig6(x: f64) -> f64 {
    fmt_sig6(x).parse().expect("rendering is parseable")
}

/// Renders a sweep as CSV: header `scheme,snr_db,trials,errors,bler`, rows
/// sorted by (scheme, snr_db), values at 6 significant digits. Metadata is
/// deliberately excluded so identical sweeps render to identical bytes.
pub fn render_csv<T: Scalar>(result: &SweepResult<T>) -> String {
    let mut rows: Vec<(String, f64, usize, usize, f64)> = result
        .series()
        .iter()
        .flat_map(|s| {
            s.points().iter().map(|p| {
                (
                    s.label().to_string(),
                    p.snr_db.to_f64().unwrap(),
                    p.trials,
                    p.errors,
                    p.bler.to_f64().unwrap(),
                )
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).expect("finite SNR"))
    });
    let mut out = String::from("scheme,snr_db,trials,errors,bler\n");
    for (label, snr, trials, errors, bler) in rows {
        out.push_str(&format!(
            "{label},{},{trials},{errors},{}\n",
            fmt_sig6(snr),
            fmt_sig6(bler)
        ));
    }
    out
}

/// Writes [`render_csv`] output to a file.
pub fn emit_csv<T: Scalar>(result: &SweepResult<T>, path: &Path) -> Result<()> {
    let text = render_csv(result);
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One parsed CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow<T> {
    /// Series label.
    pub scheme: String,
    /// The row's BLER point.
    pub point: BlerPoint<T>,
}

/// Parses [`render_csv`] output.
pub fn parse_csv<T: Scalar>(text: &str) -> Result<Vec<CsvRow<T>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("scheme,snr_db,trials,errors,bler") => {}
        other => {
            return Err(Error::Parse(format!(
                "bad CSV header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!(
                    "CSV line {}: expected 5 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::Parse(format!("CSV line {}: bad {what}", i + 2));
            let snr_db: f64 = fields[1].parse().map_err(|_| bad("snr_db"))?;
            let trials: usize = fields[2].parse().map_err(|_| bad("trials"))?;
            let errors: usize = fields[3].parse().map_err(|_| bad("errors"))?;
            let bler: f64 = fields[4].parse().map_err(|_| bad("bler"))?;
            Ok(CsvRow {
                scheme: fields[0].to_string(),
                point: BlerPoint {
                    snr_db: T::from_f64(snr_db).unwrap(),
                    trials,
                    errors,
                    bler: T::from_f64(bler).unwrap(),
                },
            })
        })
        .collect()
}

/// SNR (dB) at which a BLER curve crosses `target`, by log-linear
/// interpolation between the bracketing points; `None` when the curve never
/// crosses. Zero-error points are floored at half an error for the
/// interpolation.
pub fn snr_at_bler<T: Scalar>(points: &[BlerPoint<T>], target: T) -> Option<T> {
    let floor = |p: &BlerPoint<T>| -> T {
        if p.errors == 0 {
            T::from_f64(0.5).unwrap() / T::from_usize(p.trials).unwrap()
        } else {
            p.bler
        }
    };
    for pair in points.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (ba, bb) = (floor(a), floor(b));
        if ba >= target && target >= bb {
            if ba == bb {
                return Some(a.snr_db);
            }
            let num = ba.log10() - target.log10();
            let den = ba.log10() - bb.log10();
            return Some(a.snr_db + (b.snr_db - a.snr_db) * num / den);
        }
    }
    None
}
