//! Subcommand implementations. Each returns the resolved parameters and a
//! serialisable result; the caller wraps them in a report envelope.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sic_core::certify::{self, DistrustVector, SeesawOptions, ToleranceRegion};
use sic_core::photonic::{self, PhotonicCircuit};
use sic_core::povm::{self, DensityMatrix, Ket, Povm};
use sic_core::protocols::{self, GameReport, PipelineConfig};
use sic_core::sdp::{self, SdpProblem, SdpStatus, SolverOptions};
use sic_core::tomo::{self, CountTable, MeasurementSet, MleOptions, MleTrace, ProbeSet};
use sic_core::{io, CMatrix, Error as CoreError};

use crate::config::{parse_floats, parse_list, FileConfig};
use crate::error::{CliError, CliResult};
use crate::report::{Output, Params};
use crate::{
    CertifyCmd, CircuitCmd, CircuitKind, Command, Fig4Args, GameArgs, GameKind, PipelineArgs, PovmCmd, ProgramKind,
    SdpCmd, Table1Args, TomoArgs, TomoCmd,
};

const TABLE1_ROW1: [f64; 8] = [0.4330, 0.7931, 0.8898, 0.9269, 0.9571, 0.9714, 0.9874, 1.0];
const TABLE1_ROW3: [f64; 8] = [0.2073, 0.2874, 0.3088, 0.3171, 0.3238, 0.3270, 0.3305, 1.0 / 3.0];
const TABLE1_ROW4: [f64; 8] = [0.2169, 0.3082, 0.3231, 0.3277, 0.3313, 0.3325, 0.3333, 1.0 / 3.0];

/// Poisson standard deviations allowed around observed frequencies.
const DEFAULT_SIGMA: f64 = 3.0;

pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub tol: f64,
}

impl Ctx {
    fn f64(&self, flag: Option<f64>, key: &str, default: f64) -> CliResult<f64> {
        Ok(flag.or(self.file.f64(key)?).unwrap_or(default))
    }

    fn u64(&self, flag: Option<u64>, key: &str, default: u64) -> CliResult<u64> {
        Ok(flag.or(self.file.u64(key)?).unwrap_or(default))
    }

    fn usize(&self, flag: Option<usize>, key: &str, default: usize) -> CliResult<usize> {
        Ok(flag.or(self.file.usize(key)?).unwrap_or(default))
    }

    fn list(&self, flag: Option<&str>, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match flag {
            Some(s) => parse_list(s).map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-")))),
            None => Ok(self.file.list(key)?.unwrap_or_else(|| default.to_vec())),
        }
    }

    fn visibility(&self, flag: Option<f64>, key: &str) -> CliResult<f64> {
        let v = self.f64(flag, key, 1.0)?;
        in_range(key, v, 0.0, 1.0)?;
        Ok(v)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions::with_tol(self.tol)
    }

    fn params(&self) -> Params {
        let mut p = Params::default();
        p.set("seed", self.seed).set("tol", self.tol);
        p
    }
}

fn in_range<T: PartialOrd + std::fmt::Display>(key: &str, v: T, lo: T, hi: T) -> CliResult<()> {
    if v < lo || v > hi {
        return Err(CliError::Config(format!("{key} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Parses a JSON file holding either a bare object or a report envelope,
/// optionally descending into `field` of the payload.
fn load_json<T: DeserializeOwned>(path: &Path, field: Option<&str>) -> CliResult<T> {
    let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut v: Value = serde_json::from_str(&read_text(path)?).map_err(bad)?;
    if let Value::Object(m) = &mut v {
        if m.contains_key("command") && m.contains_key("result") {
            v = m.remove("result").expect("checked");
        }
    }
    if let (Some(f), Value::Object(m)) = (field, &mut v) {
        if let Some(inner) = m.remove(f) {
            v = inner;
        }
    }
    serde_json::from_value(v).map_err(bad)
}

fn load_counts(path: &Path) -> CliResult<CountTable> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(io::read_counts_csv(f)?)
}

fn load_povm(path: Option<&Path>) -> CliResult<Povm> {
    match path {
        Some(p) => load_json(p, Some("povm")),
        None => Ok(povm::sic_povm()),
    }
}

fn require_shape(t: &CountTable, rows: usize, cols: usize, what: &str) -> CliResult<()> {
    if t.counts.len() != rows || t.counts.iter().any(|r| r.len() != cols) {
        return Err(CliError::Input(format!(
            "{what} needs {rows} settings with {cols} outcomes, got {} settings with up to {} outcomes",
            t.counts.len(),
            t.counts.iter().map(Vec::len).max().unwrap_or(0)
        )));
    }
    Ok(())
}

fn probability_csv(table: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let clipped: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|p| p.clamp(0.0, 1.0)).collect()).collect();
    let mut buf = Vec::new();
    io::write_probability_csv(&mut buf, &clipped)?;
    Ok(buf)
}

fn counts_csv(counts: &[Vec<u64>]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_counts_csv(&mut buf, &CountTable::new(counts.to_vec())?)?;
    Ok(buf)
}

fn columns_csv(header: &[&str], rows: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_columns_csv(&mut buf, header, rows)?;
    Ok(buf)
}

/// Returns the command name and its output.
pub fn dispatch(ctx: &Ctx, cmd: Command) -> CliResult<(String, Output)> {
    match cmd {
        Command::Povm(c) => povm_cmd(ctx, c),
        Command::Circuit(c) => circuit_cmd(ctx, c),
        Command::Sdp(c) => sdp_cmd(ctx, c),
        Command::Certify(c) => certify_cmd(ctx, c),
        Command::Tomo(c) => tomo_cmd(ctx, c),
        Command::Game(a) => game_cmd(ctx, a),
        Command::Table1(a) => Ok(("table1".into(), table1(ctx, a)?)),
        Command::Fig4(a) => Ok(("fig4".into(), fig4(ctx, a)?)),
        Command::Pipeline(a) => Ok(("pipeline".into(), pipeline(ctx, a)?)),
    }
}

#[derive(Serialize)]
struct PovmResult {
    povm: Povm,
    dim: usize,
    outcomes: usize,
    completeness_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity_to_sic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unitary: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    is_unitary: Option<bool>,
}

impl PovmResult {
    fn new(p: Povm) -> CliResult<Self> {
        let fidelity_to_sic = if p.dim() == 3 && p.outcomes() == 9 {
            Some(povm::povm_fidelity(&p, &povm::sic_povm())?)
        } else {
            None
        };
        Ok(Self {
            dim: p.dim(),
            outcomes: p.outcomes(),
            completeness_error: p.completeness_error(),
            fidelity_to_sic,
            povm: p,
            unitary: None,
            is_unitary: None,
        })
    }
}

fn sic_table(p: &Povm) -> Vec<Vec<f64>> {
    povm::sic_states().iter().map(|s| p.probabilities_pure(s)).collect()
}

fn povm_cmd(ctx: &Ctx, c: PovmCmd) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    match c {
        PovmCmd::Sic { visibility } => {
            let v = ctx.visibility(visibility, "visibility")?;
            params.set("visibility", v);
            let p = povm::depolarize(&povm::sic_povm(), v)?;
            let table = probability_csv(&sic_table(&p))?;
            Ok(("povm sic".into(), Output::new(params, PovmResult::new(p)?)?.with_table("probabilities", table)))
        }
        PovmCmd::Naimark => {
            let u = povm::naimark_unitary();
            let mut r = PovmResult::new(u.induced_povm()?)?;
            r.is_unitary = Some(u.matrix.is_unitary(photonic::UNITARY_TOL));
            r.unitary = Some(u.matrix);
            Ok(("povm naimark".into(), Output::new(params, r)?))
        }
        PovmCmd::Mub { y } => {
            in_range("y", y, 1, 4)?;
            params.set("y", y);
            let p = Povm::from_basis(&povm::mub_bases()[y - 1])?;
            let mut r = PovmResult::new(p)?;
            r.unitary = Some(povm::mub_matrix(y)?);
            let table = probability_csv(&sic_table(&r.povm))?;
            Ok(("povm mub".into(), Output::new(params, r)?.with_table("probabilities", table)))
        }
    }
}

fn circuit_cmd(ctx: &Ctx, c: CircuitCmd) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    match c {
        CircuitCmd::Emit { kind, y } => {
            let circuit = match kind {
                CircuitKind::Sic => {
                    params.set("kind", "sic");
                    photonic::build_sic_circuit()
                }
                CircuitKind::Mub => {
                    let y = y.ok_or_else(|| CliError::Config("`circuit emit mub` needs --y".into()))?;
                    in_range("y", y, 1, 4)?;
                    params.set("kind", "mub").set("y", y);
                    photonic::build_mub_circuit(y)?
                }
            };
            Ok(("circuit emit".into(), Output::new(params, circuit)?))
        }
        CircuitCmd::Povm { file, visibility } => {
            let v = ctx.visibility(visibility, "visibility")?;
            params.set("file", path_string(&file)).set("visibility", v);
            let circuit: PhotonicCircuit = load_json(&file, None)?;
            circuit.validate()?;
            let mut r = PovmResult::new(protocols::circuit_device(&circuit, v)?)?;
            r.is_unitary = Some(photonic::compile_unitary(&circuit)?.is_unitary(photonic::UNITARY_TOL));
            Ok(("circuit povm".into(), Output::new(params, r)?))
        }
    }
}

fn sdp_cmd(ctx: &Ctx, c: SdpCmd) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    match c {
        SdpCmd::Dump { program, n, povm, subset } => {
            let problem = match program {
                ProgramKind::Visibility => {
                    let n = ctx.usize(n, "n", 3)?;
                    let p = load_povm(povm.as_deref())?;
                    params.set("program", "visibility").set("n", n);
                    if let Some(f) = &povm {
                        params.set("povm", path_string(f));
                    }
                    certify::visibility_problem(&p, n)?
                }
                ProgramKind::Discrimination => {
                    let subset = subset.ok_or_else(|| CliError::Config("discrimination needs --subset".into()))?;
                    let subset = parse_list(&subset).map_err(|e| CliError::Config(format!("--subset: {e}")))?;
                    params.set("program", "discrimination").set("subset", &subset);
                    let states: Vec<DensityMatrix> = povm::sic_states().iter().map(Ket::density).collect();
                    certify::discrimination_problem(&states, &subset)?
                }
            };
            Ok(("sdp dump".into(), Output::new(params, problem)?))
        }
        SdpCmd::Solve { file } => {
            params.set("file", path_string(&file));
            let problem: SdpProblem = load_json(&file, None)?;
            problem.validate()?;
            let sol = sdp::solve_with(&problem, &ctx.solver())?;
            if sol.status == SdpStatus::MaxIterations {
                return Err(CoreError::Solver {
                    context: format!(" ({})", file.display()),
                    reason: format!("tolerance not reached after {} iterations", sol.iterations),
                }
                .into());
            }
            Ok(("sdp solve".into(), Output::new(params, sol)?))
        }
    }
}

fn outcome_count(ctx: &Ctx, n: Option<usize>, max: usize) -> CliResult<usize> {
    let n = ctx.usize(n, "n", 3)?;
    in_range("n", n, 2, max)?;
    Ok(n)
}

fn certify_cmd(ctx: &Ctx, c: CertifyCmd) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    match c {
        CertifyCmd::Visibility { n, povm } => {
            let p = load_povm(povm.as_deref())?;
            let n = outcome_count(ctx, n, p.outcomes())?;
            params.set("n", n);
            if let Some(f) = &povm {
                params.set("povm", path_string(f));
            }
            let r = certify::critical_visibility_report(&p, n, &ctx.solver())?;
            Ok(("certify visibility".into(), Output::new(params, r)?))
        }
        CertifyCmd::Discriminate { n } => {
            let n = outcome_count(ctx, n, 9)?;
            params.set("n", n);
            let r = certify::discrimination_report(&povm::sic_states(), n, &ctx.solver())?;
            Ok(("certify discriminate".into(), Output::new(params, r)?))
        }
        CertifyCmd::DiscriminateDistrust { n, restarts, eps } => {
            let n = outcome_count(ctx, n, 9)?;
            let restarts = ctx.usize(restarts, "restarts", SeesawOptions::default().restarts)?;
            in_range("restarts", restarts, 1, usize::MAX)?;
            let eps = match eps {
                Some(s) => DistrustVector::new(parse_floats(&s).map_err(|e| CliError::Config(format!("--eps: {e}")))?)?,
                None => DistrustVector::measured(),
            };
            params.set("n", n).set("restarts", restarts).set("eps", &eps.eps);
            let s = SeesawOptions {
                restarts,
                seed: ctx.seed,
                ..SeesawOptions::default()
            };
            let r = certify::discrimination_distrust_report(&povm::sic_states(), &eps, n, &s, &ctx.solver())?;
            Ok(("certify discriminate-distrust".into(), Output::new(params, r)?))
        }
        CertifyCmd::Randomness {
            visibility,
            x_star,
            data,
            sigma,
        } => {
            let x_star = ctx.usize(x_star, "x_star", 1)?;
            in_range("x_star", x_star, 1, 9)?;
            params.set("x_star", x_star);
            let (table, region) = match &data {
                Some(f) => {
                    let sigma = ctx.f64(sigma, "sigma", DEFAULT_SIGMA)?;
                    in_range("sigma", sigma, 0.0, f64::MAX)?;
                    params.set("data", path_string(f)).set("sigma", sigma);
                    let t = load_counts(f)?;
                    require_shape(&t, 9, 9, "exclusion data")?;
                    let region = ToleranceRegion::poissonian(&t.counts, sigma, sigma)?;
                    (t.frequencies()?.rows, Some(region))
                }
                None => {
                    let v = ctx.visibility(visibility, "visibility")?;
                    params.set("visibility", v);
                    (certify::depolarized_exclusion_table(v)?, None)
                }
            };
            let r = certify::mdi_report(&povm::exclusion_states(), &table, x_star, region.as_ref(), &ctx.solver())?;
            Ok(("certify randomness".into(), Output::new(params, r)?))
        }
    }
}

#[derive(Serialize)]
struct Bootstrap {
    resamples: usize,
    mean: f64,
    std: f64,
}

/// Resample `i` draws from its own seed derived from the run seed.
fn bootstrap<F>(table: &CountTable, k: usize, seed: u64, stat: F) -> CliResult<Option<Bootstrap>>
where
    F: Fn(&CountTable) -> CliResult<f64> + Sync,
{
    if k == 0 {
        return Ok(None);
    }
    let values = (0..k)
        .into_par_iter()
        .map(|i| stat(&table.resample(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64 + 1))?))
        .collect::<CliResult<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / k as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k.max(2) - 1) as f64;
    Ok(Some(Bootstrap {
        resamples: k,
        mean,
        std: var.sqrt(),
    }))
}

/// Counts from a file, or simulated from `probs` with `shots` per row.
fn tomo_counts(
    ctx: &Ctx,
    args: &TomoArgs,
    params: &mut Params,
    probs: impl FnOnce(f64) -> CliResult<Vec<Vec<f64>>>,
) -> CliResult<CountTable> {
    match &args.counts {
        Some(f) => {
            params.set("counts", path_string(f));
            load_counts(f)
        }
        None => {
            let v = ctx.visibility(args.visibility, "visibility")?;
            let shots = ctx.u64(args.shots, "shots", 100_000)?;
            in_range("shots", shots, 1, u64::MAX)?;
            params.set("visibility", v).set("shots", shots);
            let probs = probs(v)?;
            let n = shots * probs.len() as u64;
            Ok(CountTable::new(protocols::sample_table(&probs, n, ctx.seed)?)?)
        }
    }
}

#[derive(Serialize)]
struct DetectorResult {
    povm: Povm,
    fidelity_to_sic: f64,
    condition: f64,
    trace: MleTrace,
    bootstrap: Option<Bootstrap>,
    counts: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct StateResult {
    target: usize,
    state: DensityMatrix,
    fidelity: f64,
    infidelity: f64,
    condition: f64,
    trace: MleTrace,
    bootstrap: Option<Bootstrap>,
    settings: Vec<String>,
    counts: Vec<Vec<u64>>,
}

fn tomo_cmd(ctx: &Ctx, c: TomoCmd) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    let opts = MleOptions::default();
    match c {
        TomoCmd::Detector(args) => {
            let probes = ProbeSet::sic();
            let table = tomo_counts(ctx, &args, &mut params, |v| {
                let device = protocols::sic_device(v)?;
                Ok(probes.states().iter().map(|s| device.probabilities(s)).collect())
            })?;
            require_shape(&table, 9, 9, "detector tomography")?;
            let k = ctx.usize(args.bootstrap, "bootstrap", 0)?;
            params.set("bootstrap", k);
            let sic = povm::sic_povm();
            let fidelity = |t: &CountTable| -> CliResult<f64> {
                let est = tomo::mle_detector(&t.frequencies()?, &probes, &opts)?;
                Ok(povm::povm_fidelity(&est.povm, &sic)?)
            };
            let est = tomo::mle_detector(&table.frequencies()?, &probes, &opts)?;
            let r = DetectorResult {
                fidelity_to_sic: povm::povm_fidelity(&est.povm, &sic)?,
                povm: est.povm,
                condition: est.condition,
                trace: est.trace,
                bootstrap: bootstrap(&table, k, ctx.seed, fidelity)?,
                counts: table.counts.clone(),
            };
            let csv = counts_csv(&table.counts)?;
            Ok(("tomo detector".into(), Output::new(params, r)?.with_table("counts", csv)))
        }
        TomoCmd::State { common, target } => {
            let target = ctx.usize(target, "target", 1)?;
            in_range("target", target, 1, 9)?;
            params.set("target", target);
            let psi = povm::sic_states()[target - 1].clone();
            let set = MeasurementSet::qutrit_default();
            let table = tomo_counts(ctx, &common, &mut params, |v| {
                let mixed = DensityMatrix::maximally_mixed(3);
                let rho = DensityMatrix::mixture(&[(v, &psi.density()), (1.0 - v, &mixed)])?;
                Ok(set.probabilities(&rho))
            })?;
            require_shape(&table, set.settings().len(), 3, "state tomography")?;
            let k = ctx.usize(common.bootstrap, "bootstrap", 0)?;
            params.set("bootstrap", k);
            let fidelity = |t: &CountTable| -> CliResult<f64> {
                let est = tomo::mle_state(&t.frequencies()?, &set, &opts)?;
                Ok(tomo::state_fidelity(&est.state, &psi)?)
            };
            let est = tomo::mle_state(&table.frequencies()?, &set, &opts)?;
            let f = tomo::state_fidelity(&est.state, &psi)?;
            let r = StateResult {
                target,
                state: est.state,
                fidelity: f,
                infidelity: 1.0 - f,
                condition: est.condition,
                trace: est.trace,
                bootstrap: bootstrap(&table, k, ctx.seed, fidelity)?,
                settings: set.labels().to_vec(),
                counts: table.counts.clone(),
            };
            let csv = counts_csv(&table.counts)?;
            Ok(("tomo state".into(), Output::new(params, r)?.with_table("counts", csv)))
        }
    }
}

#[derive(Serialize)]
struct ExclusionResult {
    table: Vec<Vec<f64>>,
    counts: Option<Vec<Vec<u64>>>,
    n_total: u64,
    randomness: certify::RandomnessReport,
}

#[derive(Serialize)]
struct MatchingResult {
    #[serde(flatten)]
    game: GameReport,
    n: usize,
    quantum_value: f64,
}

fn game_cmd(ctx: &Ctx, a: GameArgs) -> CliResult<(String, Output)> {
    let mut params = ctx.params();
    let seed = ctx.seed;
    let data = match &a.data {
        Some(f) => {
            params.set("data", path_string(f));
            Some(load_counts(f)?)
        }
        None => None,
    };
    let mut simulated = || -> CliResult<(f64, u64)> {
        let v = ctx.visibility(a.noise, "noise")?;
        let n = ctx.u64(a.counts, "counts", 0)?;
        params.set("noise", v).set("counts", n);
        Ok((v, n))
    };
    let (name, result, table) = match a.game {
        GameKind::Discrimination => {
            let r = match data {
                Some(t) => protocols::discrimination_from_counts(t.counts, seed)?,
                None => {
                    let (v, n) = simulated()?;
                    protocols::run_discrimination(&protocols::sic_device(v)?, n, seed)?
                }
            };
            let table = r.table.clone();
            ("discrimination", serde_json::to_value(r)?, table)
        }
        GameKind::Exclusion => {
            let run = match data {
                Some(t) => {
                    require_shape(&t, 9, 9, "exclusion data")?;
                    let n_total = t.totals().iter().sum();
                    protocols::ExclusionRun {
                        table: t.frequencies()?.rows,
                        counts: Some(t.counts),
                        n_total,
                    }
                }
                None => {
                    let (v, n) = simulated()?;
                    protocols::run_exclusion(&protocols::sic_device(v)?, n, seed)?
                }
            };
            let region = match &run.counts {
                Some(c) => {
                    let sigma = ctx.f64(a.sigma, "sigma", DEFAULT_SIGMA)?;
                    in_range("sigma", sigma, 0.0, f64::MAX)?;
                    params.set("sigma", sigma);
                    Some(ToleranceRegion::poissonian(c, sigma, sigma)?)
                }
                None => None,
            };
            let states = povm::exclusion_states();
            let randomness = certify::mdi_report(&states, &run.table, 1, region.as_ref(), &ctx.solver())?;
            let table = run.table.clone();
            let r = ExclusionResult {
                table: run.table,
                counts: run.counts,
                n_total: run.n_total,
                randomness,
            };
            ("exclusion", serde_json::to_value(r)?, table)
        }
        GameKind::Mub => {
            let r = match data {
                Some(t) => protocols::mub_from_counts(t.counts, seed)?,
                None => {
                    let (v, n) = simulated()?;
                    protocols::mub_game_score(&protocols::mub_devices(v)?, n, seed)?
                }
            };
            let table = r.table.clone();
            ("mub", serde_json::to_value(r)?, table)
        }
        GameKind::Matching => {
            let (r, n) = match data {
                Some(t) => {
                    let r = protocols::matching_from_counts(t.counts, seed)?;
                    let n = (r.settings.len() as f64).sqrt().round() as usize;
                    (r, n)
                }
                None => {
                    let n = ctx.usize(a.n, "n", 3)?;
                    in_range("n", n, 2, 64)?;
                    let (v, total) = simulated()?;
                    params.set("n", n);
                    (protocols::matching_depolarized(n, v, total, seed)?, n)
                }
            };
            let table = r.table.clone();
            let m = MatchingResult {
                game: r,
                n,
                quantum_value: protocols::quantum_matching_value(n)?,
            };
            ("matching", serde_json::to_value(m)?, table)
        }
    };
    params.set("game", name);
    let csv = probability_csv(&table)?;
    let out = Output {
        params,
        result,
        tables: Vec::new(),
    };
    Ok((format!("game {name}"), out.with_table("table", csv)))
}

#[derive(Serialize)]
struct Table1Cell {
    row: usize,
    n: usize,
    computed: f64,
    paper: f64,
    delta: f64,
}

/// Prefixes solver failures with the table cell they came from.
fn cell_context(e: CoreError, row: usize, n: usize) -> CoreError {
    match e {
        CoreError::Solver { context, reason } => CoreError::Solver {
            context: format!(" (row {row}, n = {n}){context}"),
            reason,
        },
        e => e,
    }
}

fn table1(ctx: &Ctx, a: Table1Args) -> CliResult<Output> {
    let rows = ctx.list(a.rows.as_deref(), "rows", &[1, 3, 4])?;
    if let Some(r) = rows.iter().find(|r| ![1, 3, 4].contains(*r)) {
        return Err(CliError::Config(format!("table row {r} is not computed; choose from 1, 3, 4")));
    }
    let ns = ctx.list(a.n.as_deref(), "n_values", &[2, 3, 4, 5, 6, 7, 8, 9])?;
    for &n in &ns {
        in_range("n", n, 2, 9)?;
    }
    let restarts = ctx.usize(a.restarts, "restarts", SeesawOptions::default().restarts)?;
    in_range("restarts", restarts, 1, usize::MAX)?;
    let mut params = ctx.params();
    params.set("rows", &rows).set("n_values", &ns).set("restarts", restarts);

    let sic = povm::sic_povm();
    let states = povm::sic_states();
    let eps = DistrustVector::measured();
    let seesaw = SeesawOptions {
        restarts,
        seed: ctx.seed,
        ..SeesawOptions::default()
    };
    let opts = ctx.solver();
    let mut cells = Vec::new();
    for &row in &rows {
        for &n in &ns {
            let (computed, paper) = match row {
                1 => (certify::critical_visibility_report(&sic, n, &opts).map(|r| r.value), TABLE1_ROW1[n - 2]),
                3 => (certify::discrimination_report(&states, n, &opts).map(|r| r.value), TABLE1_ROW3[n - 2]),
                _ => (
                    certify::discrimination_distrust_report(&states, &eps, n, &seesaw, &opts).map(|r| r.value),
                    TABLE1_ROW4[n - 2],
                ),
            };
            let computed = computed.map_err(|e| cell_context(e, row, n))?;
            cells.push(Table1Cell {
                row,
                n,
                computed,
                paper,
                delta: computed - paper,
            });
        }
    }
    let csv_rows: Vec<Vec<f64>> = cells
        .iter()
        .map(|c| vec![c.row as f64, c.n as f64, c.computed, c.paper, c.delta])
        .collect();
    let csv = columns_csv(&["row", "n", "computed", "paper", "delta"], &csv_rows)?;
    Ok(Output::new(params, cells)?.with_table("cells", csv))
}

#[derive(Serialize)]
struct CurvePoint {
    v: f64,
    bits: f64,
}

#[derive(Serialize)]
struct Fig4Result {
    x_star: usize,
    curve: Vec<CurvePoint>,
    crossing_bits: f64,
    /// Visibility where the curve crosses `crossing_bits`; absent when it does not on [0.9, 1].
    crossing_visibility: Option<f64>,
}

fn fig4(ctx: &Ctx, a: Fig4Args) -> CliResult<Output> {
    let points = ctx.usize(a.points, "points", 21)?;
    in_range("points", points, 2, 100_001)?;
    let x_star = ctx.usize(a.x_star, "x_star", 1)?;
    in_range("x_star", x_star, 1, 9)?;
    let mut params = ctx.params();
    params.set("points", points).set("x_star", x_star);
    let grid: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let curve = certify::randomness_vs_visibility_curve(&grid, x_star)?;
    let target = 3f64.log2();
    let crossing = match certify::randomness_crossing(target, 0.9, 1.0, 1e-5, x_star) {
        Ok(v) => Some(v),
        Err(CoreError::InvalidArgument(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<Vec<f64>> = curve.iter().map(|&(v, r)| vec![v, r]).collect();
    let csv = columns_csv(&["v", "bits"], &rows)?;
    let r = Fig4Result {
        x_star,
        curve: curve.into_iter().map(|(v, bits)| CurvePoint { v, bits }).collect(),
        crossing_bits: target,
        crossing_visibility: crossing,
    };
    Ok(Output::new(params, r)?.with_table("curve", csv))
}

fn pipeline(ctx: &Ctx, a: PipelineArgs) -> CliResult<Output> {
    let visibility = ctx.visibility(a.visibility, "visibility")?;
    let shots = ctx.u64(a.shots, "shots", 1_000_000)?;
    in_range("shots", shots, 1, u64::MAX)?;
    let n_values = ctx.list(a.n.as_deref(), "n_values", &[3])?;
    for &n in &n_values {
        in_range("n", n, 2, 9)?;
    }
    let mut params = ctx.params();
    params
        .set("visibility", visibility)
        .set("shots", shots)
        .set("n_values", &n_values);
    let cfg = PipelineConfig {
        visibility,
        counts_per_probe: shots,
        seed: ctx.seed,
        n_values,
    };
    let r = protocols::noisy_pipeline(&cfg)?;
    let csv = counts_csv(&r.counts)?;
    Ok(Output::new(params, r)?.with_table("counts", csv))
}
