//! Command-line front end: JSON configs in, JSON Lines metrics out.
//!
//! `collect` is the only command that touches a target for learning data;
//! `train` reads shadow files back and never simulates the target for its
//! objective. Optional test-loss diagnostics are labeled out of protocol.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::costs::{
    exact_report, global_cost_exact, hst_cost, local_cost_exact, test_loss, CostKind, CostReport, GlobalShadowCost,
    LocalCostOptions, LocalShadowCost, DEFAULT_TEST_STATES,
};
use crate::error::{validation, Error, Result};
use crate::hardness::{
    run_distinguishing_experiment, single_measurement_tv, stabilizer_constant, twirl_moments, Clever, GreedyAdaptive,
    RandomPauliMl, Strategy, TwirlMode,
};
use crate::locality::locality_profile;
use crate::operator::{Direction, K_MAX};
use crate::rng::derive_seed;
use crate::shadows::{
    read_shadow_expecting, write_shadow, InputDescription, ShadowKind, ShadowSet, TargetHandle, DEFAULT_BATCHES,
    FORMAT_VERSION,
};
use crate::sim::{
    build_trotter_heisenberg, build_trotter_tfim_layers, random_brickwork, rx_circuit, sample_haar_product,
    sample_stabilizer_product, sample_tfim_fields, BoundCircuit, Circuit, ProductState, StabilizerLabel, StateVector,
    Unitary,
};
use crate::trainer::{angle_grid, covering_search_all, minimize_observed, train_incoherent, TestOracle, TrainConfig, TrainTrace};

const INPUT_TAG: u64 = 0x1a9f;
const SHOT_TAG: u64 = 0x5407;
const FIELD_TAG: u64 = 0xf1e1;
const EXPERIMENT_TAG: u64 = 0xe8e7;
const TEST_SEED_TAG: u64 = 0x7e57;

pub const MANIFEST: &str = "manifest.json";
const BUILD: &str = concat!("incoherent ", env!("CARGO_PKG_VERSION"));

/// Exit code for a run that stopped without meeting its convergence test.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "incoherent", version, about = "Learn unitaries from classical shadows of their outputs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Record wall-clock times (outputs stop being byte-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Measure target outputs and write shadow files plus a manifest.
    Collect,
    /// Train an ansatz on previously collected shadow files.
    Train,
    /// Evaluate exact costs of a parameter vector.
    Eval,
    /// Closed-form constants and distinguishing experiments.
    Hardness,
    /// Pauli-weight tail profiles of back-propagated observables.
    Locality,
    /// Exhaustive search over an explicit parameter grid.
    NetSearch,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Collect => "collect",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Hardness => "hardness",
            Command::Locality => "locality",
            Command::NetSearch => "net-search",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let Some(path) = &cli.config else {
        return validation("--config is required");
    };
    let text = fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let ctx = |version: u32, seed: Option<u64>, out: &Option<PathBuf>| Context::new(cli, &base, version, seed, out);
    match cli.command {
        Command::Collect => {
            let c: CollectConfig = parse_config(&text)?;
            cmd_collect(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
        Command::Train => {
            let c: TrainCmdConfig = parse_config(&text)?;
            cmd_train(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
        Command::Eval => {
            let c: EvalConfig = parse_config(&text)?;
            cmd_eval(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
        Command::Hardness => {
            let c: HardnessConfig = parse_config(&text)?;
            cmd_hardness(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
        Command::Locality => {
            let c: LocalityConfig = parse_config(&text)?;
            cmd_locality(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
        Command::NetSearch => {
            let c: NetSearchConfig = parse_config(&text)?;
            cmd_net_search(&c, &ctx(c.format_version, c.seed, &c.out_dir)?)
        }
    }
}

pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
}

/// Settings shared by every command once flags and config are merged.
pub struct Context {
    pub command: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Directory relative paths in the config are resolved against.
    pub base: PathBuf,
    pub timing: bool,
}

impl Context {
    fn new(cli: &Cli, base: &Path, version: u32, seed: Option<u64>, out: &Option<PathBuf>) -> Result<Self> {
        if version != FORMAT_VERSION {
            return validation(format!("format_version {version} is not supported (expected {FORMAT_VERSION})"));
        }
        let Some(seed) = cli.seed.or(seed) else {
            return validation("missing field `seed` (set it in the config or pass --seed)");
        };
        let out_dir = match (&cli.out, out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o),
            (None, None) => return validation("missing field `out_dir` (set it in the config or pass --out)"),
        };
        fs::create_dir_all(&out_dir)?;
        Ok(Self { command: cli.command, seed, out_dir, base: base.to_path_buf(), timing: cli.timing })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    fn header(&self, config: &impl Serialize) -> Result<Value> {
        Ok(json!({
            "record": "header",
            "command": self.command.name(),
            "build": BUILD,
            "format_version": FORMAT_VERSION,
            "seed": self.seed,
            "config": to_value(config)?,
        }))
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numeric(format!("cannot serialize record: {e}")))
}

fn tagged(record: &str, v: &impl Serialize) -> Result<Value> {
    let mut value = to_value(v)?;
    match &mut value {
        Value::Object(map) => {
            map.insert("record".into(), Value::String(record.into()));
            Ok(value)
        }
        _ => Ok(json!({ "record": record, "value": value })),
    }
}

pub fn write_jsonl(path: &Path, records: &[Value]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| Error::Numeric(e.to_string()))?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn default_layers() -> usize {
    1
}

fn default_sigma() -> f64 {
    1.0
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

fn default_k_max() -> usize {
    K_MAX
}

fn default_n_test() -> usize {
    DEFAULT_TEST_STATES
}

/// The unitary being learned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Heisenberg {
        n: usize,
        dt: f64,
        #[serde(default = "default_layers")]
        layers: usize,
    },
    Tfim {
        n: usize,
        dt: f64,
        #[serde(default = "default_layers")]
        layers: usize,
        /// Explicit fields; sampled from `N(1, sigma²)` when absent.
        #[serde(default)]
        alphas: Option<Vec<f64>>,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default)]
        field_seed: u64,
    },
    Ghz {
        n: usize,
        sign: i8,
    },
    Rx {
        angle: f64,
    },
    /// A bound-circuit JSON file.
    Circuit {
        path: PathBuf,
    },
}

impl TargetSpec {
    pub fn build(&self, base: &Path) -> Result<Unitary> {
        Ok(match self {
            TargetSpec::Heisenberg { n, dt, layers } => build_trotter_heisenberg(*n, *dt, *layers)?.into(),
            TargetSpec::Tfim { n, dt, layers, alphas, sigma, field_seed } => {
                let fields = match alphas {
                    Some(a) => a.clone(),
                    None => sample_tfim_fields(*n, *sigma, derive_seed(*field_seed, FIELD_TAG, 0)),
                };
                build_trotter_tfim_layers(*n, *dt, &fields, *layers)?.into()
            }
            TargetSpec::Ghz { n, sign } => {
                crate::sim::state::check_qubits(*n)?;
                if *sign != 1 && *sign != -1 {
                    return validation(format!("ghz sign must be +1 or -1, got {sign}"));
                }
                Unitary::Ghz { n: *n, sign: *sign }
            }
            TargetSpec::Rx { angle } => rx_circuit(*angle).into(),
            TargetSpec::Circuit { path } => {
                let text = fs::read_to_string(base.join(path))?;
                let b: BoundCircuit =
                    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("target circuit: {e}")))?;
                b.into()
            }
        })
    }
}

/// The parameterized model `V(θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnsatzSpec {
    Heisenberg {
        n: usize,
        #[serde(default = "default_layers")]
        layers: usize,
    },
    Tfim {
        n: usize,
        #[serde(default = "default_layers")]
        layers: usize,
    },
    Brickwork {
        n: usize,
        depth: usize,
    },
    Rx,
    /// A circuit JSON file.
    Circuit {
        path: PathBuf,
    },
}

impl AnsatzSpec {
    pub fn build(&self, base: &Path) -> Result<Circuit> {
        Ok(match self {
            AnsatzSpec::Heisenberg { n, layers } => build_trotter_heisenberg(*n, 0.0, *layers)?.circuit,
            AnsatzSpec::Tfim { n, layers } => build_trotter_tfim_layers(*n, 0.0, &vec![0.0; *n], *layers)?.circuit,
            AnsatzSpec::Brickwork { n, depth } => random_brickwork(*n, *depth, 0)?.circuit,
            AnsatzSpec::Rx => rx_circuit(0.0).circuit,
            AnsatzSpec::Circuit { path } => {
                let text = fs::read_to_string(base.join(path))?;
                serde_json::from_str(&text).map_err(|e| Error::Validation(format!("ansatz circuit: {e}")))?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Haar,
    Stabilizer,
}

/// Training inputs: either sampled or listed explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Sampled { ensemble: Ensemble, count: usize },
    Explicit(Vec<InputDescription>),
}

impl InputSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<Vec<ProductState>> {
        let states = match self {
            InputSpec::Sampled { ensemble, count } => (0..*count as u64)
                .map(|j| {
                    let s = derive_seed(seed, INPUT_TAG, j);
                    match ensemble {
                        Ensemble::Haar => sample_haar_product(n, s),
                        Ensemble::Stabilizer => sample_stabilizer_product(n, s),
                    }
                })
                .collect(),
            InputSpec::Explicit(list) => list.iter().map(InputDescription::to_product_state).collect::<Result<Vec<_>>>()?,
        };
        if states.is_empty() {
            return validation("at least one input state is required");
        }
        if let Some(p) = states.iter().find(|p| p.num_qubits() != n) {
            return validation(format!("input has {} qubits, target acts on {n}", p.num_qubits()));
        }
        Ok(states)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub target: TargetSpec,
    pub kind: ShadowKind,
    pub inputs: InputSpec,
    pub shots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

/// Learner-visible summary of a collection run. Identifies the target only
/// by its description hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub build: String,
    pub seed: u64,
    pub kind: ShadowKind,
    pub n: usize,
    pub shots: usize,
    pub target_hash: String,
    /// Target invocations spent, always `inputs × shots`.
    pub invocations: u64,
    pub files: Vec<ManifestEntry>,
    pub config: Value,
}

fn collect_shadows(
    handle: &TargetHandle,
    kind: ShadowKind,
    inputs: &[ProductState],
    shots: usize,
    seed: u64,
) -> Result<Vec<ShadowSet>> {
    inputs
        .iter()
        .enumerate()
        .map(|(j, p)| handle.collect(kind, p, shots, derive_seed(seed, SHOT_TAG, j as u64)))
        .collect()
}

pub fn cmd_collect(c: &CollectConfig, ctx: &Context) -> Result<i32> {
    let unitary = c.target.build(&ctx.base)?;
    let n = unitary.num_qubits();
    let inputs = c.inputs.build(n, ctx.seed)?;
    let handle = TargetHandle::new(unitary);
    let shadows = collect_shadows(&handle, c.kind, &inputs, c.shots, ctx.seed)?;
    let mut files = Vec::with_capacity(shadows.len());
    for (j, s) in shadows.iter().enumerate() {
        let name = format!("shadow_{j:03}.jsonl");
        let path = ctx.out_dir.join(&name);
        write_shadow(s, &path)?;
        files.push(ManifestEntry { file: name, sha256: sha256_hex(&fs::read(&path)?) });
    }
    let mut config = to_value(&CollectConfig { seed: Some(ctx.seed), ..c.clone() })?;
    config["target"] = Value::String(handle.description_hash());
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        build: BUILD.into(),
        seed: ctx.seed,
        kind: c.kind,
        n,
        shots: c.shots,
        target_hash: handle.description_hash(),
        invocations: handle.invocations(),
        files,
        config,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(ctx.out_dir.join(MANIFEST), text)?;
    Ok(0)
}

/// Reads a manifest and its shadow files, checking digests, kinds and the
/// recorded target hash.
pub fn load_collection(dir: &Path) -> Result<(Manifest, Vec<ShadowSet>)> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Integrity(format!("unreadable manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Integrity(format!("manifest format_version {} is not supported", manifest.format_version)));
    }
    let mut shadows = Vec::with_capacity(manifest.files.len());
    for entry in &manifest.files {
        let path = dir.join(&entry.file);
        let digest = sha256_hex(&fs::read(&path)?);
        if digest != entry.sha256 {
            return Err(Error::Integrity(format!("{} does not match its manifest digest", entry.file)));
        }
        let s = read_shadow_expecting(&path, manifest.kind)?;
        if s.meta.target != manifest.target_hash {
            return Err(Error::Integrity(format!("{} was collected from a different target", entry.file)));
        }
        if s.num_qubits() != manifest.n || s.len() != manifest.shots {
            return Err(Error::Integrity(format!("{} disagrees with the manifest shape", entry.file)));
        }
        shadows.push(s);
    }
    if shadows.is_empty() {
        return Err(Error::Integrity("manifest lists no shadow files".into()));
    }
    Ok((manifest, shadows))
}

/// Out-of-protocol test loss against the true target. Used only for
/// reporting.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticConfig {
    pub target: TargetSpec,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub test_seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub shadows_dir: PathBuf,
    pub ansatz: AnsatzSpec,
    /// Optimizer settings; its `seed` is replaced by the run seed.
    #[serde(default)]
    pub optimizer: TrainConfig,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub truncate: Option<usize>,
    #[serde(default)]
    pub diagnostic: Option<DiagnosticConfig>,
}

fn shadow_inputs(shadows: &[ShadowSet]) -> Result<Vec<ProductState>> {
    shadows
        .iter()
        .map(|s| match &s.meta.input_state {
            Some(d) => d.to_product_state(),
            None => Err(Error::Integrity("shadow file does not record its input state".into())),
        })
        .collect()
}

fn trace_records(header: Value, trace: &TrainTrace, extra: Value) -> Result<Vec<Value>> {
    let mut records = vec![header];
    for it in &trace.iterations {
        records.push(tagged("iter", it)?);
    }
    let mut footer = json!({
        "record": "final",
        "initial_cost": trace.initial_cost,
        "final_params": trace.final_params,
        "converged": trace.converged,
        "stop_reason": trace.stop_reason,
    });
    if let (Value::Object(f), Value::Object(e)) = (&mut footer, extra) {
        f.extend(e);
    }
    records.push(footer);
    Ok(records)
}

pub fn cmd_train(c: &TrainCmdConfig, ctx: &Context) -> Result<i32> {
    let (manifest, shadows) = load_collection(&ctx.resolve(&c.shadows_dir))?;
    let ansatz = c.ansatz.build(&ctx.base)?;
    if ansatz.num_qubits() != manifest.n {
        return validation(format!("ansatz acts on {} qubits, shadows on {}", ansatz.num_qubits(), manifest.n));
    }
    let inputs = shadow_inputs(&shadows)?;
    let diag_target = match &c.diagnostic {
        Some(d) => {
            let u = d.target.build(&ctx.base)?;
            if u.description_hash() != manifest.target_hash {
                return validation("diagnostic target does not match the collected target hash");
            }
            Some(u)
        }
        None => None,
    };
    let oracle = match (&c.diagnostic, &diag_target) {
        (Some(d), Some(u)) => Some(TestOracle {
            target: u,
            n_test: d.n_test,
            seed: d.test_seed.unwrap_or_else(|| derive_seed(ctx.seed, TEST_SEED_TAG, 0)),
        }),
        _ => None,
    };
    let config = TrainConfig { seed: ctx.seed, timing: ctx.timing, ..c.optimizer.clone() };
    let trace = match manifest.kind {
        ShadowKind::Pauli => {
            let opts = LocalCostOptions { batches: c.batches, k_max: c.k_max, truncate: c.truncate };
            train_incoherent(&shadows, &ansatz, &inputs, opts, &config, oracle.as_ref())?
        }
        ShadowKind::Clifford => {
            let states: Vec<StateVector> = inputs.iter().map(ProductState::to_statevector).collect::<Result<_>>()?;
            let cost = GlobalShadowCost::new(&shadows, &ansatz, &states, c.batches)?;
            let f = |p: &[f64]| cost.evaluate(p).map(|r| r.value);
            minimize_observed(&f, &config, ansatz.num_params(), |_, p| match &oracle {
                Some(o) => test_loss(o.target, &ansatz, p, o.n_test, o.seed).map(Some),
                None => Ok(None),
            })?
        }
    };
    let mut header = ctx.header(&TrainCmdConfig { seed: Some(ctx.seed), optimizer: config.clone(), ..c.clone() })?;
    header["target_hash"] = Value::String(manifest.target_hash.clone());
    header["test_cost_out_of_protocol"] = Value::Bool(oracle.is_some());
    let records = trace_records(header, &trace, json!({}))?;
    write_jsonl(&ctx.out_dir.join("trace.jsonl"), &records)?;
    Ok(if trace.converged { 0 } else { EXIT_NOT_CONVERGED })
}

/// A parameter vector, inline or taken from the footer of a trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Inline(Vec<f64>),
    Trace { trace: PathBuf },
}

impl ParamsSpec {
    fn load(&self, base: &Path) -> Result<Vec<f64>> {
        match self {
            ParamsSpec::Inline(v) => Ok(v.clone()),
            ParamsSpec::Trace { trace } => {
                let text = fs::read_to_string(base.join(trace))?;
                let last = text.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
                let v: Value = serde_json::from_str(last).map_err(|e| Error::Validation(format!("trace footer: {e}")))?;
                serde_json::from_value(v["final_params"].clone())
                    .map_err(|e| Error::Validation(format!("trace footer has no final_params: {e}")))
            }
        }
    }
}

fn default_eval_inputs() -> InputSpec {
    InputSpec::Sampled { ensemble: Ensemble::Haar, count: 2 }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub target: TargetSpec,
    pub ansatz: AnsatzSpec,
    pub params: ParamsSpec,
    pub costs: Vec<CostKind>,
    #[serde(default = "default_eval_inputs")]
    pub inputs: InputSpec,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

pub fn cmd_eval(c: &EvalConfig, ctx: &Context) -> Result<i32> {
    let u = c.target.build(&ctx.base)?;
    let v = c.ansatz.build(&ctx.base)?;
    let params = c.params.load(&ctx.base)?;
    let n = v.num_qubits();
    let mut records = vec![ctx.header(&EvalConfig { seed: Some(ctx.seed), ..c.clone() })?];
    for kind in &c.costs {
        let start = Instant::now();
        let (value, terms) = match kind {
            CostKind::Hst => (hst_cost(&u, &v, &params)?, 1),
            CostKind::Global => {
                let inputs = c.inputs.build(n, ctx.seed)?;
                let states: Vec<StateVector> = inputs.iter().map(ProductState::to_statevector).collect::<Result<_>>()?;
                (global_cost_exact(&u, &v, &params, &states)?, states.len())
            }
            CostKind::Local => {
                let inputs = c.inputs.build(n, ctx.seed)?;
                (local_cost_exact(&u, &v, &params, &inputs)?, inputs.len() * n)
            }
            CostKind::Test => {
                (test_loss(&u, &v, &params, c.n_test, derive_seed(ctx.seed, TEST_SEED_TAG, 0))?, c.n_test)
            }
        };
        let mut report: CostReport = exact_report(*kind, value, terms, &params);
        report.wall_time_ms = ctx.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        records.push(tagged("cost", &report)?);
    }
    write_jsonl(&ctx.out_dir.join("eval.jsonl"), &records)?;
    Ok(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    RandomPauliMl,
    Clever,
    GreedyAdaptive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n: usize,
    pub strategy: StrategyName,
    pub budget: usize,
    pub trials: usize,
    #[serde(default)]
    pub twirl: bool,
    /// Candidate pool for the greedy strategy.
    #[serde(default)]
    pub pool: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    /// Largest `n` for exact single-shot TV records.
    pub tv_max_n: usize,
    /// Largest `n` for twirl-moment records.
    pub moments_max_n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub constants: Option<ConstantsSpec>,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
}

pub fn cmd_hardness(c: &HardnessConfig, ctx: &Context) -> Result<i32> {
    let mut records = vec![ctx.header(&HardnessConfig { seed: Some(ctx.seed), ..c.clone() })?];
    if let Some(k) = &c.constants {
        let s = stabilizer_constant();
        records.push(json!({
            "record": "stabilizer_constant",
            "value": s.value,
            "pair_sum": s.pair_sum,
            "exact": s.exact.to_string(),
        }));
        for n in 1..=k.tv_max_n {
            records.push(tagged("single_shot_tv", &single_measurement_tv(n)?)?);
        }
        for n in 1..=k.moments_max_n {
            let (m2, mabs2) = twirl_moments(n)?;
            records.push(json!({ "record": "twirl_moments", "n": n, "m2": m2, "mabs2": mabs2 }));
        }
    }
    for (i, e) in c.experiments.iter().enumerate() {
        let greedy = GreedyAdaptive { pool: e.pool.unwrap_or(GreedyAdaptive::default().pool) };
        let strategy: &dyn Strategy = match e.strategy {
            StrategyName::RandomPauliMl => &RandomPauliMl,
            StrategyName::Clever => &Clever,
            StrategyName::GreedyAdaptive => &greedy,
        };
        let twirl = if e.twirl { TwirlMode::LocalCliffordPair } else { TwirlMode::None };
        let seed = derive_seed(ctx.seed, EXPERIMENT_TAG, i as u64);
        let r = run_distinguishing_experiment(e.n, strategy, e.budget, e.trials, twirl, seed)?;
        records.push(tagged("distinguish", &r)?);
    }
    write_jsonl(&ctx.out_dir.join("hardness.jsonl"), &records)?;
    Ok(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Heisenberg,
    Tfim,
}

fn default_factor() -> StabilizerLabel {
    StabilizerLabel::Zero
}

fn default_direction() -> Direction {
    Direction::Adjoint
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalityConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub model: Model,
    pub n: usize,
    pub dts: Vec<f64>,
    pub layers: Vec<usize>,
    pub site: usize,
    /// Single-qubit state whose projector is propagated.
    #[serde(default = "default_factor")]
    pub factor: StabilizerLabel,
    /// Weight cutoffs; defaults to `1..=n`.
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

pub fn cmd_locality(c: &LocalityConfig, ctx: &Context) -> Result<i32> {
    let cutoffs = c.cutoffs.clone().unwrap_or_else(|| (1..=c.n).collect());
    let fields = sample_tfim_fields(c.n, c.sigma, derive_seed(ctx.seed, FIELD_TAG, 0));
    let mut records = vec![ctx.header(&LocalityConfig { seed: Some(ctx.seed), ..c.clone() })?];
    for &dt in &c.dts {
        for &layers in &c.layers {
            let circuit = match c.model {
                Model::Heisenberg => build_trotter_heisenberg(c.n, dt, layers)?,
                Model::Tfim => build_trotter_tfim_layers(c.n, dt, &fields, layers)?,
            };
            let profile = locality_profile(
                &circuit.circuit,
                &circuit.params,
                c.site,
                c.factor.amplitudes(),
                &cutoffs,
                c.direction,
            )?;
            for e in &profile.entries {
                records.push(json!({
                    "record": "alpha",
                    "n": c.n,
                    "dt": dt,
                    "layers": layers,
                    "site": c.site,
                    "support": profile.support.len(),
                    "k": e.k,
                    "alpha": e.alpha,
                }));
            }
        }
    }
    write_jsonl(&ctx.out_dir.join("locality.jsonl"), &records)?;
    Ok(0)
}

/// Candidate parameter vectors for exhaustive search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// `L` equally spaced angles over `[0, 2π)` for a one-parameter ansatz.
    Angles(usize),
    Candidates(Vec<Vec<f64>>),
}

fn default_search_kind() -> ShadowKind {
    ShadowKind::Clifford
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSearchConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub target: TargetSpec,
    pub ansatz: AnsatzSpec,
    pub grid: GridSpec,
    #[serde(default = "default_search_kind")]
    pub kind: ShadowKind,
    pub inputs: InputSpec,
    pub shots: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

pub fn cmd_net_search(c: &NetSearchConfig, ctx: &Context) -> Result<i32> {
    let unitary = c.target.build(&ctx.base)?;
    let ansatz = c.ansatz.build(&ctx.base)?;
    let n = unitary.num_qubits();
    if ansatz.num_qubits() != n {
        return validation(format!("ansatz acts on {} qubits, target on {n}", ansatz.num_qubits()));
    }
    let candidates = match &c.grid {
        GridSpec::Angles(l) => {
            if ansatz.num_params() != 1 {
                return validation("an angle grid needs a one-parameter ansatz");
            }
            angle_grid(*l)
        }
        GridSpec::Candidates(list) => list.clone(),
    };
    if let Some(bad) = candidates.iter().find(|p| p.len() != ansatz.num_params()) {
        return validation(format!("candidate has {} values, ansatz takes {}", bad.len(), ansatz.num_params()));
    }
    let inputs = c.inputs.build(n, ctx.seed)?;
    let handle = TargetHandle::new(unitary);
    let shadows = collect_shadows(&handle, c.kind, &inputs, c.shots, ctx.seed)?;
    let invocations = handle.invocations();
    let states: Vec<StateVector> = inputs.iter().map(ProductState::to_statevector).collect::<Result<_>>()?;
    let (best, value, values) = match c.kind {
        ShadowKind::Clifford => {
            let cost = GlobalShadowCost::new(&shadows, &ansatz, &states, c.batches)?;
            covering_search_all(&|p: &[f64]| cost.evaluate(p).map(|r| r.value), &candidates)?
        }
        ShadowKind::Pauli => {
            let opts = LocalCostOptions { batches: c.batches, ..LocalCostOptions::default() };
            let cost = LocalShadowCost::new(&shadows, &ansatz, &inputs, opts)?;
            covering_search_all(&|p: &[f64]| cost.evaluate(p).map(|r| r.value), &candidates)?
        }
    };
    let mut records = vec![ctx.header(&NetSearchConfig { seed: Some(ctx.seed), ..c.clone() })?];
    for (i, v) in values.iter().enumerate() {
        records.push(json!({ "record": "candidate", "index": i, "value": v }));
    }
    records.push(json!({
        "record": "argmin",
        "index": best,
        "params": candidates[best],
        "value": value,
        "candidates": candidates.len(),
        "invocations": invocations,
    }));
    write_jsonl(&ctx.out_dir.join("net_search.jsonl"), &records)?;
    Ok(0)
}
