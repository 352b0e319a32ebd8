//! Simulated experiments and their scores: SIC state discrimination,
//! exclusion data for randomness, the MUB game, randomised matching, and
//! Hoeffding statistics against the relevant bounds.
//!
//! Every game accepts `n_total = 0` for exact probabilities ("infinite
//! statistics"); a positive `n_total` is split evenly over the settings and
//! sampled multinomially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, CMatrix, HermitianView};
use crate::photonic::{self, sample_counts_with, PhotonicCircuit};
use crate::povm::{self, DensityMatrix, Ket, Povm};
use crate::tomo;

/// Lowest forbidden-event rate reachable by dense-coding protocols
/// (four-dimensional real models) in the MUB game, as published.
pub const S_DC: f64 = 8.0e-3;
/// Success probability limit of projective measurements in SIC discrimination.
pub const P_SUC_PROJECTIVE: f64 = 0.2874;
/// Success probability limit of eight-outcome measurements.
pub const P_SUC_EIGHT_OUTCOME: f64 = 0.3305;

/// Published laboratory values, carried in reports for comparison only.
pub mod lab {
    pub const P_SUC: f64 = 0.3335;
    pub const S: f64 = 2.39e-3;
    pub const T: f64 = 0.9144;
    pub const R_BITS: f64 = 1.72;
}

/// Resamples used for the bootstrap standard deviation.
const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// The score beats the bound by exceeding it.
    Above,
    /// The score beats the bound by staying below it.
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub bound: f64,
    pub direction: Direction,
    pub beats: bool,
    /// Hoeffding p-value for the observed margin; 1 in exact mode or when
    /// the bound is not beaten.
    pub p_value: f64,
    pub ln_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub game: String,
    pub score: f64,
    pub settings: Vec<String>,
    /// Probabilities (exact mode) or relative frequencies, one row per setting.
    pub table: Vec<Vec<f64>>,
    pub counts: Option<Vec<Vec<u64>>>,
    pub n_total: u64,
    /// Binomial standard deviation of the score; 0 in exact mode.
    pub sigma: f64,
    /// Standard deviation over multinomial resamples of the observed table.
    pub sigma_resampled: Option<f64>,
    pub comparisons: Vec<Comparison>,
}

/// `exp(-2 N (mean - bound)^2)`, or 1 when `mean <= bound`.
pub fn hoeffding_pvalue(observed_mean: f64, bound: f64, n_total: u64) -> f64 {
    hoeffding_ln_pvalue(observed_mean, bound, n_total).exp()
}

/// Natural log of [`hoeffding_pvalue`], finite where the value underflows.
pub fn hoeffding_ln_pvalue(observed_mean: f64, bound: f64, n_total: u64) -> f64 {
    if observed_mean <= bound {
        return 0.0;
    }
    let gap = observed_mean - bound;
    -2.0 * n_total as f64 * gap * gap
}

/// Splits `n_total` as evenly as possible over `k` settings.
fn split_total(n_total: u64, k: usize) -> Vec<u64> {
    let base = n_total / k as u64;
    let extra = (n_total % k as u64) as usize;
    (0..k).map(|s| base + u64::from(s < extra)).collect()
}

fn setting_rng(seed: u64, setting: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting as u64);
    rng
}

/// Multinomial counts for each row of `probs`, `n_total` split over rows.
/// Each row draws from its own stream so rows are independent of each other.
pub fn sample_table(probs: &[Vec<f64>], n_total: u64, seed: u64) -> Result<Vec<Vec<u64>>> {
    split_total(n_total, probs.len())
        .into_iter()
        .zip(probs)
        .enumerate()
        .map(|(s, (n, p))| sample_counts_with(p, n, &mut setting_rng(seed, s)))
        .collect()
}

fn normalise_rows(counts: &[Vec<u64>]) -> Result<Vec<Vec<f64>>> {
    counts
        .iter()
        .enumerate()
        .map(|(s, r)| {
            let t: u64 = r.iter().sum();
            if t == 0 {
                return Err(Error::EmptyCounts(format!("setting {s} received no counts; raise n_total")));
            }
            Ok(r.iter().map(|&n| n as f64 / t as f64).collect())
        })
        .collect()
}

/// Exact probabilities with rounding noise outside `[0, 1]` removed.
fn clip_rows(probs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    probs.iter().map(|r| r.iter().map(|p| p.clamp(0.0, 1.0)).collect()).collect()
}

/// A game whose score is the average over settings of `sum_o w[s][o] p(o|s)`
/// with 0/1 weights.
struct LinearGame {
    name: &'static str,
    settings: Vec<String>,
    probs: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    bounds: Vec<(&'static str, f64, Direction)>,
}

impl LinearGame {
    fn score_of(&self, table: &[Vec<f64>]) -> f64 {
        let s: f64 = table
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p.iter().zip(w).map(|(p, w)| p * w).sum::<f64>())
            .sum();
        s / table.len() as f64
    }

    fn play(self, n_total: u64, seed: u64) -> Result<GameReport> {
        if n_total == 0 {
            let table = clip_rows(&self.probs);
            return self.report(table, None, seed);
        }
        let counts = sample_table(&self.probs, n_total, seed)?;
        self.report(normalise_rows(&counts)?, Some(counts), seed)
    }

    /// Scores recorded counts, one row per setting in the game's order.
    fn play_counts(self, counts: Vec<Vec<u64>>, seed: u64) -> Result<GameReport> {
        if counts.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} count rows for {} settings of the {} game",
                counts.len(),
                self.weights.len(),
                self.name
            )));
        }
        if let Some(s) = counts.iter().zip(&self.weights).position(|(c, w)| c.len() != w.len()) {
            return Err(Error::DimensionMismatch(format!(
                "setting {s} has {} outcomes, expected {}",
                counts[s].len(),
                self.weights[s].len()
            )));
        }
        self.report(normalise_rows(&counts)?, Some(counts), seed)
    }

    fn report(self, table: Vec<Vec<f64>>, counts: Option<Vec<Vec<u64>>>, seed: u64) -> Result<GameReport> {
        let k = table.len();
        let n_total: u64 = counts.iter().flatten().flatten().sum();
        let score = self.score_of(&table);
        let (sigma, sigma_resampled) = match &counts {
            None => (0.0, None),
            Some(c) => {
                let var: f64 = table
                    .iter()
                    .zip(&self.weights)
                    .zip(c)
                    .map(|((f, w), c)| {
                        let q: f64 = f.iter().zip(w).map(|(f, w)| f * w).sum();
                        q * (1.0 - q) / c.iter().sum::<u64>() as f64
                    })
                    .sum();
                let sigma = var.sqrt() / k as f64;
                (sigma, Some(self.bootstrap_sigma(&table, c, seed)?))
            }
        };
        let comparisons = self
            .bounds
            .iter()
            .map(|&(name, bound, direction)| {
                let (beats, margin_mean, margin_bound) = match direction {
                    Direction::Above => (score > bound, score, bound),
                    Direction::Below => (score < bound, 1.0 - score, 1.0 - bound),
                };
                let ln_p = if n_total == 0 {
                    0.0
                } else {
                    hoeffding_ln_pvalue(margin_mean, margin_bound, n_total)
                };
                Comparison {
                    name: name.to_string(),
                    bound,
                    direction,
                    beats,
                    p_value: ln_p.exp(),
                    ln_p_value: ln_p,
                }
            })
            .collect();
        Ok(GameReport {
            game: self.name.to_string(),
            score,
            settings: self.settings,
            table,
            counts,
            n_total,
            sigma,
            sigma_resampled,
            comparisons,
        })
    }

    fn bootstrap_sigma(&self, table: &[Vec<f64>], counts: &[Vec<u64>], seed: u64) -> Result<f64> {
        let k = table.len();
        let mut scores = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for b in 0..BOOTSTRAP_RESAMPLES {
            let resampled = table
                .iter()
                .zip(counts)
                .enumerate()
                .map(|(s, (f, c))| {
                    let mut rng = setting_rng(seed ^ 0x5eed_b007, (b + 1) * k + s);
                    sample_counts_with(f, c.iter().sum(), &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            scores.push(self.score_of(&normalise_rows(&resampled)?));
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (scores.len() - 1) as f64;
        Ok(var.sqrt())
    }
}

/// Induced measurement of the SIC interferometer at uniform visibility `v`.
pub fn sic_device(v: f64) -> Result<Povm> {
    circuit_device(&photonic::build_sic_circuit(), v)
}

/// Induced measurement of any circuit at uniform visibility `v`.
pub fn circuit_device(c: &PhotonicCircuit, v: f64) -> Result<Povm> {
    if v == 1.0 {
        photonic::induced_povm(c)
    } else {
        photonic::apply_uniform_visibility(c, v)?.povm()
    }
}

/// The four MUB interferometers at uniform visibility `v`.
pub fn mub_devices(v: f64) -> Result<Vec<Povm>> {
    (1..=4)
        .map(|y| circuit_device(&photonic::build_mub_circuit(y)?, v))
        .collect()
}

fn require_qutrit_measurement(p: &Povm, outcomes: usize) -> Result<()> {
    if p.dim() != 3 || p.outcomes() < outcomes {
        return Err(Error::DimensionMismatch(format!(
            "expected a qutrit measurement with at least {outcomes} outcomes, got {} outcomes on dim {}",
            p.outcomes(),
            p.dim()
        )));
    }
    Ok(())
}

/// SIC states `psi_a` into `p`; success when outcome `a` fires.
pub fn run_discrimination(p: &Povm, n_total: u64, seed: u64) -> Result<GameReport> {
    require_qutrit_measurement(p, 9)?;
    if p.outcomes() != 9 {
        return Err(Error::DimensionMismatch(format!("{}-outcome measurement, expected 9", p.outcomes())));
    }
    let states = povm::sic_states();
    discrimination_game(states.iter().map(|s| p.probabilities_pure(s)).collect()).play(n_total, seed)
}

/// Discrimination score of recorded counts: row `a` holds the outcomes
/// observed for input `psi_a`.
pub fn discrimination_from_counts(counts: Vec<Vec<u64>>, seed: u64) -> Result<GameReport> {
    discrimination_game(Vec::new()).play_counts(counts, seed)
}

fn discrimination_game(probs: Vec<Vec<f64>>) -> LinearGame {
    LinearGame {
        name: "discrimination",
        settings: (1..=9).map(|a| format!("psi{a}")).collect(),
        probs,
        weights: (0..9).map(|a| (0..9).map(|o| f64::from(u8::from(o == a))).collect()).collect(),
        bounds: vec![
            ("projective", P_SUC_PROJECTIVE, Direction::Above),
            ("eight_outcome", P_SUC_EIGHT_OUTCOME, Direction::Above),
        ],
    }
}

/// Exclusion-state data `table[x][a]` for the randomness analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRun {
    pub table: Vec<Vec<f64>>,
    pub counts: Option<Vec<Vec<u64>>>,
    pub n_total: u64,
}

pub fn run_exclusion(p: &Povm, n_total: u64, seed: u64) -> Result<ExclusionRun> {
    require_qutrit_measurement(p, 9)?;
    let probs: Vec<Vec<f64>> = povm::exclusion_states().iter().map(|rho| p.probabilities(rho)).collect();
    if n_total == 0 {
        return Ok(ExclusionRun {
            table: clip_rows(&probs),
            counts: None,
            n_total,
        });
    }
    let counts = sample_table(&probs, n_total, seed)?;
    Ok(ExclusionRun {
        table: normalise_rows(&counts)?,
        counts: Some(counts),
        n_total,
    })
}

/// Outcome probabilities of a basis measurement on its first three ports,
/// conditioned on detection there (light leaking elsewhere is discarded).
fn basis_probabilities(p: &Povm, psi: &Ket) -> Result<Vec<f64>> {
    let raw = p.probabilities_pure(psi);
    let kept = &raw[..3];
    let total: f64 = kept.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("no detection on the basis ports".into()));
    }
    Ok(kept.iter().map(|x| x / total).collect())
}

/// SIC states measured in four bases; `S` is the average rate of the
/// forbidden outcome given by [`povm::zero_outcome_rule`].
pub fn mub_game_score(measurements: &[Povm], n_total: u64, seed: u64) -> Result<GameReport> {
    if measurements.len() != 4 {
        return Err(Error::InvalidArgument(format!("{} bases, expected 4", measurements.len())));
    }
    for m in measurements {
        require_qutrit_measurement(m, 3)?;
    }
    let states = povm::sic_states();
    let mut probs = Vec::with_capacity(36);
    for psi in &states {
        for m in measurements {
            probs.push(basis_probabilities(m, psi)?);
        }
    }
    mub_game(probs)?.play(n_total, seed)
}

/// MUB game score of recorded counts: 36 rows ordered `x = 1..9` outer,
/// `y = 1..4` inner, three outcomes each.
pub fn mub_from_counts(counts: Vec<Vec<u64>>, seed: u64) -> Result<GameReport> {
    mub_game(Vec::new())?.play_counts(counts, seed)
}

fn mub_game(probs: Vec<Vec<f64>>) -> Result<LinearGame> {
    let mut settings = Vec::with_capacity(36);
    let mut weights = Vec::with_capacity(36);
    for x in 1..=9 {
        for y in 1..=4 {
            settings.push(format!("x{x}y{y}"));
            let z = povm::zero_outcome_rule(x, y)?;
            weights.push((0..3).map(|o| f64::from(u8::from(o == z))).collect());
        }
    }
    Ok(LinearGame {
        name: "mub",
        settings,
        probs,
        weights,
        bounds: vec![("dense_coding", S_DC, Direction::Below)],
    })
}

/// Randomised matching with the quantum strategy: Alice sends `phi_x`, Bob
/// answers 1 on `|phi_y><phi_y|` and 0 on its complement.
pub fn matching_game_score(projectors: &[Ket], n_total: u64, seed: u64) -> Result<GameReport> {
    let states: Vec<DensityMatrix> = projectors.iter().map(Ket::density).collect();
    let measurements = projectors.iter().map(binary_projective).collect::<Result<Vec<_>>>()?;
    matching_game(&states, &measurements, n_total, seed)
}

/// Matching game with the equiangular strategy, each sent state mixed with
/// white noise: `v |phi_x><phi_x| + (1 - v) I/d`.
pub fn matching_depolarized(n: usize, v: f64, n_total: u64, seed: u64) -> Result<GameReport> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    let kets = povm::equiangular_states(n)?;
    if v == 1.0 {
        return matching_game_score(&kets, n_total, seed);
    }
    let mixed = DensityMatrix::maximally_mixed(kets[0].dim());
    let states = kets
        .iter()
        .map(|k| DensityMatrix::mixture(&[(v, &k.density()), (1.0 - v, &mixed)]))
        .collect::<Result<Vec<_>>>()?;
    let measurements = kets.iter().map(binary_projective).collect::<Result<Vec<_>>>()?;
    matching_game(&states, &measurements, n_total, seed)
}

fn binary_projective(phi: &Ket) -> Result<Povm> {
    let one = phi.projector();
    let zero = HermitianView::identity(phi.dim()).add(&one.scale(-1.0));
    Povm::new(vec![zero, one])
}

/// Matching game for arbitrary states `rho_x` and binary measurements
/// `{M_0|y, M_1|y}`.
pub fn matching_game(
    states: &[DensityMatrix],
    measurements: &[Povm],
    n_total: u64,
    seed: u64,
) -> Result<GameReport> {
    let n = states.len();
    if n < 2 || measurements.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} states and {} measurements; need n >= 2 of each",
            n,
            measurements.len()
        )));
    }
    if measurements.iter().any(|m| m.outcomes() != 2 || m.dim() != states[0].dim()) {
        return Err(Error::DimensionMismatch("matching measurements must be binary on the state space".into()));
    }
    let mut probs = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            probs.push(measurements[y].probabilities(&states[x]));
        }
    }
    matching_layout(n, probs).play(n_total, seed)
}

/// Matching score of recorded counts: `n^2` rows ordered `x` outer, `y`
/// inner, with outcomes `(0, 1)`.
pub fn matching_from_counts(counts: Vec<Vec<u64>>, seed: u64) -> Result<GameReport> {
    let n = (counts.len() as f64).sqrt().round() as usize;
    if n < 2 || n * n != counts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} count rows is not n^2 for any n >= 2",
            counts.len()
        )));
    }
    matching_layout(n, Vec::new()).play_counts(counts, seed)
}

fn matching_layout(n: usize, probs: Vec<Vec<f64>>) -> LinearGame {
    let mut settings = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            settings.push(format!("x{}y{}", x + 1, y + 1));
            weights.push(if x == y { vec![0.0, 1.0] } else { vec![1.0, 0.0] });
        }
    }
    LinearGame {
        name: "matching",
        settings,
        probs,
        weights,
        bounds: vec![("classical", classical_matching_formula(n), Direction::Above)],
    }
}

/// Largest `n` for which the classical bound is found by enumeration.
pub const MATCHING_BRUTE_FORCE_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingBound {
    pub n: usize,
    pub value: f64,
    /// False when `n` is beyond the enumeration range and the closed form
    /// was returned instead.
    pub brute_force: bool,
}

fn classical_matching_formula(n: usize) -> f64 {
    1.0 - 2.0 / (n * n) as f64
}

/// Best classical score with an `(n-1)`-valued message. Every encoder
/// `f: x -> m` is enumerated; for a fixed encoder the best decoder answers
/// each `(m, y)` independently, by majority of the matching vs. non-matching
/// inputs that produce `m`.
pub fn classical_matching_bound(n: usize) -> Result<MatchingBound> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("matching needs n >= 2, got {n}")));
    }
    if n > MATCHING_BRUTE_FORCE_MAX {
        return Ok(MatchingBound {
            n,
            value: classical_matching_formula(n),
            brute_force: false,
        });
    }
    let d = n - 1;
    let mut f = vec![0usize; n];
    let mut best = 0usize;
    loop {
        let mut wins = 0;
        for m in 0..d {
            let senders: Vec<usize> = (0..n).filter(|&x| f[x] == m).collect();
            for y in 0..n {
                let matched = usize::from(senders.contains(&y));
                wins += matched.max(senders.len() - matched);
            }
        }
        best = best.max(wins);
        // Next encoder in base-d counting order.
        let mut i = 0;
        while i < n && f[i] == d - 1 {
            f[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        f[i] += 1;
    }
    Ok(MatchingBound {
        n,
        value: best as f64 / (n * n) as f64,
        brute_force: true,
    })
}

/// `(n-1)/n + (1/n^2) sum_y lambda_max(O_y)` with `O_y = rho_y - sum_{x != y} rho_x`
/// over the equiangular states.
pub fn quantum_matching_value(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("matching needs n >= 2, got {n}")));
    }
    let states = povm::equiangular_states(n)?;
    let rhos: Vec<HermitianView> = states.iter().map(Ket::projector).collect();
    let mut total = 0.0;
    for y in 0..n {
        let mut o = CMatrix::zeros(n - 1, n - 1);
        for (x, r) in rhos.iter().enumerate() {
            if x == y {
                o += r.matrix();
            } else {
                o -= r.matrix();
            }
        }
        let e = eig_hermitian(&HermitianView::symmetrized(&o))?;
        total += e.values.last().copied().unwrap_or(0.0);
    }
    let nf = n as f64;
    Ok((nf - 1.0) / nf + total / (nf * nf))
}

/// Parameters of the simulated prepare, measure, reconstruct, certify chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Uniform interferometer visibility of the SIC circuit.
    pub visibility: f64,
    pub counts_per_probe: u64,
    pub seed: u64,
    /// Outcome counts at which the reconstruction's critical visibility is computed.
    pub n_values: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            visibility: 1.0,
            counts_per_probe: 1_000_000,
            seed: 0,
            n_values: vec![3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub counts: Vec<Vec<u64>>,
    pub mle_iterations: usize,
    pub mle_converged: bool,
    /// Fidelity of the reconstruction to the ideal SIC measurement.
    pub fidelity: f64,
    /// Per-outcome fidelities of the normalised reconstructed effects to the SIC projectors.
    pub outcome_fidelities: Vec<f64>,
    /// Fidelity of the simulated device itself to the ideal SIC measurement.
    pub device_fidelity: f64,
    pub critical_visibility: Vec<(usize, f64)>,
    /// Success probability of the reconstruction on the SIC states.
    pub discrimination: f64,
    /// Success probability of the sampled data itself.
    pub discrimination_observed: f64,
}

/// Probes the SIC circuit at the configured visibility with the SIC states,
/// reconstructs the detector by maximum likelihood and certifies the result.
pub fn noisy_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    if !(0.0..=1.0).contains(&cfg.visibility) {
        return Err(Error::InvalidArgument(format!("visibility {} outside [0, 1]", cfg.visibility)));
    }
    if cfg.counts_per_probe == 0 {
        return Err(Error::EmptyCounts("counts_per_probe must be positive".into()));
    }
    let device = sic_device(cfg.visibility)?;
    let probes = tomo::ProbeSet::sic();
    let probs: Vec<Vec<f64>> = probes.states().iter().map(|s| device.probabilities(s)).collect();
    let counts = sample_table(&probs, cfg.counts_per_probe * probs.len() as u64, cfg.seed)?;
    let table = tomo::CountTable::new(counts.clone())?;
    let est = tomo::mle_detector(&table.frequencies()?, &probes, &tomo::MleOptions::default())?;
    let ideal = povm::sic_povm();
    let outcome_fidelities = est
        .povm
        .effects()
        .iter()
        .zip(ideal.effects())
        .map(|(e, f)| povm::uhlmann_fidelity(&e.scale(1.0 / e.trace()), &f.scale(1.0 / f.trace())))
        .collect::<Result<Vec<_>>>()?;
    let critical_visibility = cfg
        .n_values
        .iter()
        .map(|&n| certify::critical_visibility(&est.povm, n).map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    let observed = normalise_rows(&counts)?;
    Ok(PipelineReport {
        config: cfg.clone(),
        mle_iterations: est.trace.iterations,
        mle_converged: est.trace.converged,
        fidelity: povm::povm_fidelity(&est.povm, &ideal)?,
        outcome_fidelities,
        device_fidelity: povm::povm_fidelity(&device, &ideal)?,
        critical_visibility,
        discrimination: run_discrimination(&est.povm, 0, 0)?.score,
        discrimination_observed: (0..9).map(|a| observed[a][a]).sum::<f64>() / 9.0,
        counts,
    })
}
