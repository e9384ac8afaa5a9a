//! `barrett-leak` command line.
//!
//! Exit codes: 0 when every asserted invariant holds, 1 when one fails (the
//! counterexample is in the report), 2 for usage or configuration errors.

pub mod report;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::gadgets::{BarrettParams, GadgetError, WireGadget};
use crate::leakage::{barrier_table, min_entropy};
use crate::modring::{Modulus, ModulusError};
use crate::pipeline::{compose, MaskingMode, PipelineError, PipelineSpec, EXHAUSTIVE_PIPELINE_LIMIT};
use crate::preimage::{
    audit_support_gap, equivalence_check, profiles, tightness_witness_search, trichotomy_check, CountPath, GapAudit,
    PairScope, SecretScope, DEFAULT_SAMPLE, DEFAULT_SEED, EXHAUSTIVE_PROFILE_LIMIT,
};
use report::{Envelope, Format, Row};
use sweep::{audit_case, ConfigError, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Pairs drawn when `equiv` samples by default (q above 2^16).
pub const DEFAULT_EQUIV_PAIRS: u64 = 1 << 20;

#[derive(Debug, Parser)]
#[command(name = "barrett-leak", version, about = "Preimage and min-entropy analysis of masked Barrett wires")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModArgs {
    /// Modulus.
    #[arg(long)]
    pub q: u64,
    /// Barrett shift; the branch offset is 2^s mod q.
    #[arg(long)]
    pub s: u32,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Sample N secrets (or pairs, for `equiv`).
    #[arg(long, value_name = "N")]
    pub sample: Option<u64>,
    /// Seed for the sampler.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-secret multiplicity profiles, support gaps and min-entropy.
    Analyze {
        #[command(flatten)]
        m: ModArgs,
        /// Analyze this secret (repeatable).
        #[arg(long, conflicts_with_all = ["all_secrets", "sample"])]
        secret: Vec<u64>,
        /// Analyze every secret in Z_q.
        #[arg(long, conflicts_with = "sample")]
        all_secrets: bool,
        #[command(flatten)]
        sample: SampleArgs,
        /// Count by enumerating every mask.
        #[arg(long)]
        oracle: bool,
    },
    /// Check that no value has more than two preimages.
    Trichotomy {
        #[command(flatten)]
        m: ModArgs,
        /// Cover the whole domain (the default for small q).
        #[arg(long, conflicts_with = "sample")]
        exhaustive: bool,
        #[command(flatten)]
        sample: SampleArgs,
        /// Count by enumerating every mask.
        #[arg(long)]
        oracle: bool,
    },
    /// Compare the two-branch and hardware-faithful wire maps pointwise.
    Equiv {
        #[command(flatten)]
        m: ModArgs,
        /// Cover the whole domain (the default for small q).
        #[arg(long, conflicts_with = "sample")]
        exhaustive: bool,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// 1-bit barrier table.
    Entropy {
        /// Named parameter set; omit all flags to list both.
        #[arg(long, conflicts_with_all = ["q", "s"])]
        preset: Option<Preset>,
        #[arg(long, requires = "s")]
        q: Option<u64>,
        #[arg(long, requires = "q")]
        s: Option<u32>,
    },
    /// Find a value hit by exactly two masks.
    Witness {
        #[command(flatten)]
        m: ModArgs,
    },
    /// Two-stage pipeline under fresh or shared masking.
    Compose {
        #[command(flatten)]
        m: ModArgs,
        /// Two comma-separated stages, e.g. `identity,barrett`.
        #[arg(long, value_parser = parse_stages)]
        stages: (Stage, Stage),
        #[arg(long, value_enum)]
        mode: Mode,
        /// Run every secret in Z_q.
        #[arg(long, conflicts_with = "sample")]
        all_secrets: bool,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Audit every case of a config file.
    Sweep {
        /// JSON file with a `cases` array.
        #[arg(long)]
        config: PathBuf,
        /// Fail on support-gap formula mismatches (`published` when given bare).
        #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "published")]
        strict_formula: Option<StrictFormula>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Mlkem,
    Mldsa,
}

/// Documented Barrett constants for a standard parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetParams {
    pub name: &'static str,
    pub q: u64,
    pub s: u32,
    pub mu: u64,
    pub roller: Option<u64>,
}

impl Preset {
    pub fn params(self) -> PresetParams {
        match self {
            Preset::Mlkem => PresetParams { name: "ml-kem", q: 3329, s: 24, mu: 5039, roller: Some(767) },
            Preset::Mldsa => PresetParams { name: "ml-dsa", q: 8_380_417, s: 48, mu: 33_587_228, roller: None },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Identity,
    Barrett,
}

fn parse_stages(raw: &str) -> Result<(Stage, Stage), String> {
    let parts: Vec<&str> = raw.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((Stage::from_str(a, true)?, Stage::from_str(b, true)?)),
        _ => Err(format!("expected two comma-separated stages, got {raw:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fresh,
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrictFormula {
    Published,
    Extended,
    Both,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("--sample must be at least 1")]
    EmptySample,
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

fn params(m: &ModArgs) -> Result<BarrettParams, CliError> {
    Ok(BarrettParams::new(Modulus::new(m.q)?, m.s))
}

fn mod_row(p: &BarrettParams) -> Row {
    Row::new().with("q", p.modulus().get()).with("s", p.shift()).with("r", p.offset().val())
}

fn scope_row(row: Row, scope: &SecretScope) -> Row {
    match scope {
        SecretScope::Exhaustive => row.with("scope", "exhaustive"),
        SecretScope::Sampled { seed, n } => row.with("scope", "sampled").with("sample", *n as u64).with("seed", *seed),
        SecretScope::Explicit(v) => row.with("scope", "explicit").with("secrets", v.len() as u64),
    }
}

fn sampled(sample: &SampleArgs, q: Modulus, limit: u64) -> Result<SecretScope, CliError> {
    match sample.sample {
        Some(0) => Err(CliError::EmptySample),
        Some(n) => Ok(SecretScope::Sampled { seed: sample.seed, n: n as usize }),
        None => Ok(match SecretScope::default_for(q, limit) {
            SecretScope::Sampled { .. } => SecretScope::Sampled { seed: sample.seed, n: DEFAULT_SAMPLE },
            other => other,
        }),
    }
}

fn path_of(oracle: bool) -> CountPath {
    if oracle {
        CountPath::Oracle
    } else {
        CountPath::Auto
    }
}

fn path_label(path: CountPath) -> &'static str {
    match path {
        CountPath::Auto => "closedform",
        CountPath::Oracle => "oracle",
    }
}

fn analyze(m: &ModArgs, secret: &[u64], all: bool, sample: &SampleArgs, oracle: bool) -> Result<Envelope, CliError> {
    let p = params(m)?;
    let q = p.modulus();
    let scope = if !secret.is_empty() {
        SecretScope::Explicit(secret.to_vec())
    } else if all {
        SecretScope::Exhaustive
    } else {
        sampled(sample, q, EXHAUSTIVE_PROFILE_LIMIT)?
    };
    let path = path_of(oracle);
    let mut env = Envelope::new("analyze", scope_row(mod_row(&p), &scope).with("path", path_label(path)));
    for prof in profiles(&WireGadget::barrett(p), &scope, path) {
        let gap = audit_support_gap(&p, &prof);
        let ent = min_entropy(&prof);
        env.rows.push(
            Row::new()
                .with("q", prof.q)
                .with("s", p.shift())
                .with("secret", prof.secret)
                .with("zeros", prof.zeros)
                .with("ones", prof.ones)
                .with("twos", prof.twos)
                .with("overflow", prof.overflow)
                .with("max_count", prof.max_count)
                .with("support_size", prof.support_size)
                .with("gap_observed", gap.observed)
                .with("gap_published", gap.published)
                .with("gap_extended", gap.extended)
                .with("published_match", gap.published_match)
                .with("extended_match", gap.extended_match)
                .with("min_entropy_bits", ent.exact_min_entropy_bits)
                .with("floor_bits", ent.barrier_floor_bits)
                .with("slack_bits", ent.slack_bits),
        );
    }
    Ok(env)
}

fn trichotomy(m: &ModArgs, exhaustive: bool, sample: &SampleArgs, oracle: bool) -> Result<Envelope, CliError> {
    let p = params(m)?;
    let scope =
        if exhaustive { SecretScope::Exhaustive } else { sampled(sample, p.modulus(), EXHAUSTIVE_PROFILE_LIMIT)? };
    let path = path_of(oracle);
    let rep = trichotomy_check(&p, &scope, path);
    let mut env = Envelope::new("trichotomy", scope_row(mod_row(&p), &scope).with("path", path_label(path)));
    let cx = rep.counterexample;
    env.rows.push(
        mod_row(&p)
            .with("secrets_checked", rep.secrets_checked)
            .with("pairs_checked", rep.pairs_checked)
            .with("max_count", rep.max_count)
            .with("pass", rep.pass)
            .with("cx_secret", cx.map(|c| c.secret))
            .with("cx_value", cx.map(|c| c.value))
            .with("cx_count", cx.map(|c| c.count)),
    );
    if let Some(c) = cx {
        env.pass = false;
        env.exit_code = EXIT_FAIL;
        env.notes.push(format!("counterexample: x={} v={} count={}", c.secret, c.value, c.count));
        env.details.insert("counterexample".into(), json!(c));
    }
    Ok(env)
}

fn equiv(m: &ModArgs, exhaustive: bool, sample: &SampleArgs) -> Result<Envelope, CliError> {
    let p = params(m)?;
    let scope = match (exhaustive, sample.sample) {
        (true, _) => PairScope::Exhaustive,
        (false, Some(0)) => return Err(CliError::EmptySample),
        (false, Some(n)) => PairScope::Sampled { seed: sample.seed, n },
        (false, None) if p.modulus().get() <= EXHAUSTIVE_PROFILE_LIMIT => PairScope::Exhaustive,
        (false, None) => PairScope::Sampled { seed: sample.seed, n: DEFAULT_EQUIV_PAIRS },
    };
    let rep = equivalence_check(&p, scope)?;
    let params_row = match scope {
        PairScope::Exhaustive => mod_row(&p).with("scope", "exhaustive"),
        PairScope::Sampled { seed, n } => mod_row(&p).with("scope", "sampled").with("sample", n).with("seed", seed),
    };
    let mut env = Envelope::new("equiv", params_row);
    let mm = rep.first_mismatch;
    env.rows.push(
        mod_row(&p)
            .with("pairs_checked", rep.pairs_checked)
            .with("pass", rep.pass)
            .with("mismatch_secret", mm.map(|x| x.secret))
            .with("mismatch_mask", mm.map(|x| x.mask))
            .with("algebraic", mm.map(|x| x.algebraic))
            .with("nat", mm.map(|x| x.nat)),
    );
    if let Some(x) = mm {
        env.pass = false;
        env.exit_code = EXIT_FAIL;
        env.notes.push(format!("first mismatch: x={} m={} algebraic={} nat={}", x.secret, x.mask, x.algebraic, x.nat));
    } else {
        env.notes.push(format!("{} pairs match", rep.pairs_checked));
    }
    Ok(env)
}

fn entropy(preset: Option<Preset>, q: Option<u64>, s: Option<u32>) -> Result<Envelope, CliError> {
    let (name, p, mu, roller) = match (preset, q, s) {
        (Some(pr), _, _) => {
            let c = pr.params();
            (c.name, BarrettParams::new(Modulus::new(c.q)?, c.s), Some(c.mu), c.roller)
        }
        (None, Some(q), Some(s)) => ("custom", BarrettParams::new(Modulus::new(q)?, s), None, None),
        _ => {
            let both = [Preset::Mlkem, Preset::Mldsa];
            let mut env = Envelope::new("entropy", Row::new().with("preset", "all"));
            for pr in both {
                env.rows.extend(entropy(Some(pr), None, None)?.rows);
            }
            return Ok(env);
        }
    };
    let mut env =
        Envelope::new("entropy", Row::new().with("preset", name).with("q", p.modulus().get()).with("s", p.shift()));
    for row in barrier_table(&[p]) {
        env.rows.push(
            Row::new()
                .with("standard", name)
                .with("q", row.q)
                .with("s", row.s)
                .with("mu", mu)
                .with("roller", roller)
                .with("log2_q", row.log2_q)
                .with("floor_bits", row.floor_bits)
                .with("leakage_bound_bits", row.leakage_bound_bits),
        );
    }
    Ok(env)
}

fn witness(m: &ModArgs) -> Result<Envelope, CliError> {
    let p = params(m)?;
    let rep = tightness_witness_search(&p);
    let w = rep.witness;
    let verified = w.map(|w| {
        let q = p.modulus();
        let (x, v) = (q.reduce_u64(w.secret), q.reduce_u64(w.value));
        let g = WireGadget::barrett(p);
        w.mask_a != w.mask_b && g.eval(x, q.reduce_u64(w.mask_a)) == v && g.eval(x, q.reduce_u64(w.mask_b)) == v
    });
    let mut env = Envelope::new("witness", mod_row(&p));
    env.rows.push(
        mod_row(&p)
            .with("found", rep.found)
            .with("secret", w.map(|w| w.secret))
            .with("value", w.map(|w| w.value))
            .with("count", w.map(|w| w.count))
            .with("mask_a", w.map(|w| w.mask_a))
            .with("mask_b", w.map(|w| w.mask_b))
            .with("masks_verified", verified),
    );
    if !rep.found {
        env.notes.push("no value has two preimages (r = 0: the wire is a bijection)".into());
    }
    Ok(env)
}

fn stage_gadget(stage: Stage, p: &BarrettParams) -> WireGadget {
    match stage {
        Stage::Identity => WireGadget::identity(p.modulus()),
        Stage::Barrett => WireGadget::barrett(*p),
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Identity => "identity",
        Stage::Barrett => "barrett",
    }
}

fn compose_cmd(
    m: &ModArgs,
    stages: (Stage, Stage),
    mode: Mode,
    all: bool,
    sample: &SampleArgs,
) -> Result<Envelope, CliError> {
    let p = params(m)?;
    let scope = if all { SecretScope::Exhaustive } else { sampled(sample, p.modulus(), EXHAUSTIVE_PIPELINE_LIMIT)? };
    let masking = match mode {
        Mode::Fresh => MaskingMode::Fresh,
        Mode::Shared => MaskingMode::Shared,
    };
    let spec = PipelineSpec::new(stage_gadget(stages.0, &p), stage_gadget(stages.1, &p), masking)?;
    let rep = compose(&spec, &scope);
    let mode_label = match mode {
        Mode::Fresh => "fresh",
        Mode::Shared => "shared",
    };
    let params_row = scope_row(mod_row(&p), &scope)
        .with("stage1", stage_name(stages.0))
        .with("stage2", stage_name(stages.1))
        .with("mode", mode_label);
    let mut env = Envelope::new("compose", params_row);
    env.rows.push(
        Row::new()
            .with("q", p.modulus().get())
            .with("s", p.shift())
            .with("stage1", stage_name(stages.0))
            .with("stage2", stage_name(stages.1))
            .with("mode", mode_label)
            .with("secrets_checked", rep.secrets_checked)
            .with("k1", rep.k1)
            .with("k2", rep.k2)
            .with("wire1_max_mult", rep.wire1_max_mult)
            .with("wire2_max_mult", rep.wire2_max_mult)
            .with("pipeline_max_mult", rep.pipeline_max_mult)
            .with("bound_fresh", rep.bound_fresh)
            .with("bound_product", rep.bound_product)
            .with("fresh_bound_holds", rep.fresh_bound_holds)
            .with("product_bound_holds", rep.product_bound_holds),
    );
    if masking == MaskingMode::Fresh && !rep.fresh_bound_holds {
        env.pass = false;
        env.exit_code = EXIT_FAIL;
        env.notes.push(format!(
            "pipeline max multiplicity {} exceeds max(k1, k2) = {}",
            rep.pipeline_max_mult, rep.bound_fresh
        ));
    }
    if masking == MaskingMode::Shared && !rep.product_bound_holds {
        env.notes
            .push(format!("measured {} exceeds k1*k2 = {} (informational)", rep.pipeline_max_mult, rep.bound_product));
    }
    Ok(env)
}

fn sweep_cmd(config: &Path, strict: Option<StrictFormula>, format: Format) -> Result<Envelope, CliError> {
    let cfg = SweepConfig::load(config)?;
    let cases = cfg.resolve()?;
    let mut env = Envelope::new(
        "sweep",
        Row::new().with("config", config.display().to_string().as_str()).with("cases", cases.len() as u64).with(
            "strict_formula",
            strict.map(|s| match s {
                StrictFormula::Published => "published",
                StrictFormula::Extended => "extended",
                StrictFormula::Both => "both",
            }),
        ),
    );
    let mut mismatches = Vec::new();
    let mut hard_ok = true;
    let mut formula_ok = true;
    for case in &cases {
        let a = audit_case(case);
        let published: Vec<_> = a.published_mismatches().collect();
        let extended: Vec<_> = a.extended_mismatches().collect();
        let first = published.first().copied();
        env.rows.push(
            Row::new()
                .with("q", a.q)
                .with("s", a.s)
                .with("r", a.r)
                .with("secrets_checked", a.secrets_checked)
                .with("path", path_label(a.path))
                .with("max_count", a.max_count)
                .with("trichotomy_pass", a.trichotomy_pass)
                .with("conservation_pass", a.conservation_pass)
                .with("equivalence", a.equivalence.label())
                .with("equiv_pairs", a.equivalence_report.map(|r| r.pairs_checked))
                .with("published_mismatches", published.len() as u64)
                .with("extended_mismatches", extended.len() as u64)
                .with("first_published_mismatch_x", first.map(|g| g.secret))
                .with("first_published_mismatch_observed", first.map(|g| g.observed))
                .with("first_published_mismatch_predicted", first.map(|g| g.published)),
        );
        for (formula, list) in [("published", &published), ("extended", &extended)] {
            for g in list.iter() {
                mismatches.push(json!({
                    "formula": formula, "q": a.q, "s": a.s, "x": g.secret,
                    "observed": g.observed, "predicted": if formula == "published" { g.published } else { g.extended },
                }));
            }
        }
        if !a.hard_pass() {
            hard_ok = false;
            env.notes.push(format!(
                "q={} s={}: trichotomy={} conservation={} equivalence={}",
                a.q,
                a.s,
                a.trichotomy_pass,
                a.conservation_pass,
                a.equivalence.label()
            ));
        }
        let strict_hit = match strict {
            None => false,
            Some(StrictFormula::Published) => !published.is_empty(),
            Some(StrictFormula::Extended) => !extended.is_empty(),
            Some(StrictFormula::Both) => !published.is_empty() || !extended.is_empty(),
        };
        if strict_hit {
            formula_ok = false;
        }
        const SHOWN: usize = 5;
        for (formula, list) in [("published", &published), ("extended", &extended)] {
            if list.is_empty() {
                continue;
            }
            let predicted = |g: &GapAudit| if formula == "published" { g.published } else { g.extended };
            let shown: Vec<String> = list
                .iter()
                .take(SHOWN)
                .map(|g| format!("x={} observed={} predicted={}", g.secret, g.observed, predicted(g)))
                .collect();
            let more = list.len().saturating_sub(SHOWN);
            env.notes.push(format!(
                "q={} s={}: {} {}-formula mismatches: {}{}",
                a.q,
                a.s,
                list.len(),
                formula,
                shown.join("; "),
                if more > 0 { format!("; ... {more} more") } else { String::new() }
            ));
        }
    }
    if format == Format::Json {
        env.details.insert("mismatches".into(), json!(mismatches));
    }
    env.pass = hard_ok && formula_ok;
    env.exit_code = if env.pass { EXIT_OK } else { EXIT_FAIL };
    Ok(env)
}

fn dispatch(cli: &Cli) -> Result<Envelope, CliError> {
    match &cli.command {
        Command::Analyze { m, secret, all_secrets, sample, oracle } => {
            analyze(m, secret, *all_secrets, sample, *oracle)
        }
        Command::Trichotomy { m, exhaustive, sample, oracle } => trichotomy(m, *exhaustive, sample, *oracle),
        Command::Equiv { m, exhaustive, sample } => equiv(m, *exhaustive, sample),
        Command::Entropy { preset, q, s } => entropy(*preset, *q, *s),
        Command::Witness { m } => witness(m),
        Command::Compose { m, stages, mode, all_secrets, sample } => {
            compose_cmd(m, *stages, *mode, *all_secrets, sample)
        }
        Command::Sweep { config, strict_formula } => sweep_cmd(config, *strict_formula, cli.format),
    }
}

/// Runs one parsed invocation and returns its exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(CliError::from)
            .and_then(|pool| pool.install(|| dispatch(cli))),
        None => dispatch(cli),
    };
    match result {
        Ok(mut env) => {
            env.elapsed_ms = start.elapsed().as_millis();
            if let Err(e) = env.emit(cli.format, out, err) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            env.exit_code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            code
        }
    }
}
