//! Command-line front end.
//!
//! Exit codes: 0 success or decided, 2 input error, 3 numerical failure,
//! 4 precondition violated, 10 inconclusive, 11 certificate failed.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::applications::{weak_converse_dilution, weak_converse_distillation, DilutionVariant};
use crate::divergences::{d_max, d_max_f, d_max_f_smoothed, d_max_smoothed, d_min, hypothesis_testing, umegaki};
use crate::error::{Error, Result};
use crate::freesets::FreeSet;
use crate::io::{
    certificate_to_json, choi_from_json, choi_to_json, decomposition_to_json, matrix_to_json, num, num_text, parse_free_set,
    read_json, read_state, verdict_to_json, weak_converse_to_json, write_json,
};
use crate::monotones::{
    free_fraction, gen_free_fraction, gen_log_robustness, hyp_monotone, log_robustness, min_monotone, optimal_decomposition,
    relative_entropy_of_resource, FreeFraction, HypMonotone, Robustness,
};
use crate::opalg::DensityMatrix;
use crate::transitions::{verify_morphism, Instance, RuleChoice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_INCONCLUSIVE: i32 = 10;
pub const EXIT_CERTIFICATE: i32 = 11;

#[derive(Parser, Debug)]
#[command(name = "resmorph", version, about = "Resource monotones, transition checks and channel synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct TransitionArgs {
    /// Input state (matrix JSON).
    pub rho: PathBuf,
    /// Target state (matrix JSON).
    pub sigma: PathBuf,
    /// Input free set: full, incoherent, ppt:AxB, singleton:<state.json> or free-set JSON.
    #[arg(long)]
    pub freeset: String,
    /// Output free set; defaults to the input spec.
    #[arg(long)]
    pub freeset_out: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps2: f64,
    /// auto, thm1, cor1 (compact), cor2 (constant overlap), thm2 or prop1.
    #[arg(long, default_value = "auto")]
    pub rule: String,
    /// Guard band for finite comparisons.
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Divergence between two states: umegaki, dh, dmin, dmax, dmax_eps, dmaxF, dmaxF_eps.
    Divergence {
        name: String,
        rho: PathBuf,
        sigma: PathBuf,
        #[arg(long)]
        freeset: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Resource monotone: D, Dh, Dmin, Dmax, DmaxF, ff, gff, decomposition.
    Monotone {
        name: String,
        rho: PathBuf,
        #[arg(long)]
        freeset: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Decide a transition with the sufficient conditions.
    Decide(TransitionArgs),
    /// Decide, build the channel, write its Choi matrix and verify it.
    Synthesize {
        #[command(flatten)]
        args: TransitionArgs,
        /// Where to write the channel JSON.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify a channel as a resource morphism reaching the target.
    Verify {
        choi: PathBuf,
        rho: PathBuf,
        sigma: PathBuf,
        #[arg(long)]
        freeset: String,
        #[arg(long)]
        freeset_out: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        eps_budget: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grid of monotones and verdicts as CSV.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Maps a library error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::PreconditionViolation(_) => EXIT_PRECONDITION,
        _ => EXIT_INPUT,
    }
}

/// Parses arguments and runs; output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    writeln!(out, "{text}").map_err(|e| Error::Parse(format!("cannot write output: {e}")))
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Divergence {
            name,
            rho,
            sigma,
            freeset,
            eps,
            seed,
        } => {
            let rho = read_state(rho)?;
            let sigma = read_state(sigma)?;
            emit(out, &divergence(name, &rho, &sigma, freeset.as_deref(), *eps, *seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Monotone { name, rho, freeset, eps } => {
            let rho = read_state(rho)?;
            let free = parse_free_set(freeset, rho.dim())?;
            emit(out, &monotone(name, &rho, &free, *eps)?)?;
            Ok(EXIT_OK)
        }
        Command::Decide(args) => {
            let inst = instance(args)?;
            let verdict = inst.check(args.rule.parse::<RuleChoice>()?);
            let mut v = verdict_to_json(&verdict);
            if verdict.is_decided() {
                emit(out, &v)?;
                return Ok(EXIT_OK);
            }
            v["weak_converse"] = weak_converse_hints(&inst)?;
            emit(out, &v)?;
            Ok(EXIT_INCONCLUSIVE)
        }
        Command::Synthesize {
            args,
            out: path,
            samples,
            seed,
        } => {
            let inst = instance(args)?;
            let verdict = inst.check(args.rule.parse::<RuleChoice>()?);
            if !verdict.is_decided() {
                let mut v = json!({"verdict": verdict_to_json(&verdict)});
                v["weak_converse"] = weak_converse_hints(&inst)?;
                emit(out, &v)?;
                return Ok(EXIT_INCONCLUSIVE);
            }
            let channel = inst.synthesize(&verdict)?;
            write_json(path, &choi_to_json(&channel))?;
            let cert = inst.verify(&channel, verdict.eps_total, *samples, *seed)?;
            emit(
                out,
                &json!({
                    "verdict": verdict_to_json(&verdict),
                    "certificate": certificate_to_json(&cert),
                    "channel_path": path.display().to_string(),
                }),
            )?;
            Ok(if cert.pass() { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Verify {
            choi,
            rho,
            sigma,
            freeset,
            freeset_out,
            eps_budget,
            samples,
            seed,
        } => {
            let channel = choi_from_json(&read_json(choi)?)?;
            let rho = read_state(rho)?;
            let sigma = read_state(sigma)?;
            let f_in = parse_free_set(freeset, rho.dim())?;
            let f_out = parse_free_set(freeset_out.as_deref().unwrap_or(freeset), sigma.dim())?;
            let cert = verify_morphism(&channel, &f_in, &f_out, &rho, &sigma, *eps_budget, *samples, *seed)?;
            emit(out, &certificate_to_json(&cert))?;
            Ok(if cert.pass() { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Sweep { spec, out: path } => {
            let config = read_json(spec)?;
            let csv = crate::cli::sweep(&config)?;
            match path {
                Some(p) => std::fs::write(p, csv).map_err(|e| Error::Parse(format!("cannot write {}: {e}", p.display())))?,
                None => out.write_all(csv.as_bytes()).map_err(|e| Error::Parse(format!("cannot write output: {e}")))?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn instance(args: &TransitionArgs) -> Result<Instance> {
    let rho = read_state(&args.rho)?;
    let sigma = read_state(&args.sigma)?;
    let f_in = parse_free_set(&args.freeset, rho.dim())?;
    let f_out = parse_free_set(args.freeset_out.as_deref().unwrap_or(&args.freeset), sigma.dim())?;
    Instance::new(rho, sigma, f_in, f_out, args.eps1, args.eps2)?.with_slack(args.slack)
}

/// Weak converses that certify impossibility of the instance, if any.
fn weak_converse_hints(inst: &Instance) -> Result<Value> {
    let mut hints = serde_json::Map::new();
    if inst.eps1 == 0.0 && inst.eps2 == 0.0 {
        let distill = weak_converse_distillation(&inst.rho, &inst.free_in, &inst.sigma, &inst.free_out)?;
        if distill.impossible() {
            hints.insert("distillation".into(), weak_converse_to_json(&distill));
        }
        for (key, variant) in [("dilution_i", DilutionVariant::Generalized), ("dilution_ii", DilutionVariant::Standard)] {
            let w = weak_converse_dilution(&inst.rho, &inst.free_in, &inst.sigma, &inst.free_out, variant)?;
            if w.impossible() {
                hints.insert(key.into(), weak_converse_to_json(&w));
            }
        }
    }
    Ok(Value::Object(hints))
}

fn require_free(freeset: Option<&str>, dim: usize) -> Result<FreeSet> {
    let spec = freeset.ok_or_else(|| Error::InvalidParameter("this divergence needs --freeset".into()))?;
    parse_free_set(spec, dim)
}

fn divergence(name: &str, rho: &DensityMatrix, sigma: &DensityMatrix, freeset: Option<&str>, eps: f64, seed: u64) -> Result<Value> {
    Ok(match name {
        "umegaki" => json!({"value": num(umegaki(rho, sigma)?)}),
        "dh" => {
            let t = hypothesis_testing(rho, sigma, eps)?;
            json!({"value": num(t.value), "type_two_error": num(t.type_two_error), "test": matrix_to_json(t.test.operator())})
        }
        "dmin" => json!({"value": num(d_min(rho, sigma)?)}),
        "dmax" => json!({"value": num(d_max(rho, sigma)?)}),
        "dmax_eps" => {
            let s = d_max_smoothed(rho, sigma, eps)?;
            json!({"value": num(s.value), "witness": matrix_to_json(&s.witness)})
        }
        "dmaxF" => {
            let free = require_free(freeset, sigma.dim())?;
            let r = d_max_f(rho, sigma, &free)?;
            json!({"value": num(r.value), "certified": r.certified})
        }
        "dmaxF_eps" => {
            let free = require_free(freeset, sigma.dim())?;
            let s = d_max_f_smoothed(rho, sigma, &free, eps, seed)?;
            json!({"value": num(s.value), "witness": matrix_to_json(&s.witness)})
        }
        other => return Err(Error::Parse(format!("unknown divergence '{other}'"))),
    })
}

fn hyp_json(h: &HypMonotone) -> Value {
    json!({
        "value": num(h.value),
        "gap": num(h.gap()),
        "iterations": h.iterations,
        "M": num(h.m()),
        "P_star": matrix_to_json(h.p_star.operator()),
        "omega_star": matrix_to_json(&h.omega_star),
    })
}

fn robustness_json(r: &Robustness) -> Value {
    json!({
        "value": num(r.value),
        "lower": num(r.lower),
        "sigma_tilde": matrix_to_json(&r.sigma_tilde),
        "sigma_tilde_plus": matrix_to_json(&r.sigma_tilde_plus),
    })
}

fn fraction_json(f: &FreeFraction) -> Value {
    json!({
        "value": num(f.p),
        "mixer": f.mixer.as_ref().map(|m| matrix_to_json(m)).unwrap_or(Value::Null),
    })
}

fn monotone(name: &str, rho: &DensityMatrix, free: &FreeSet, eps: f64) -> Result<Value> {
    Ok(match name {
        "D" => {
            let r = relative_entropy_of_resource(rho, free)?;
            json!({"value": num(r.value), "gap": num(r.gap), "iterations": r.iterations, "omega": matrix_to_json(&r.omega)})
        }
        "Dh" => hyp_json(&hyp_monotone(rho, free, eps)?),
        "Dmin" => hyp_json(&min_monotone(rho, free)?),
        "Dmax" => robustness_json(&gen_log_robustness(rho, free, eps)?),
        "DmaxF" => robustness_json(&log_robustness(rho, free, eps)?),
        "ff" => fraction_json(&free_fraction(rho, free)?),
        "gff" => fraction_json(&gen_free_fraction(rho, free)?),
        "decomposition" => decomposition_to_json(&optimal_decomposition(rho, free)?),
        other => return Err(Error::Parse(format!("unknown monotone '{other}'"))),
    })
}

/// CSV columns of a sweep, in order.
pub const SWEEP_COLUMNS: [&str; 16] = [
    "index", "family", "freeset", "d", "param", "eps1", "eps2", "D", "Dh", "Dmin", "Dmax", "DmaxF", "ff", "gff", "reference",
    "decided_by",
];

fn grid_list(grid: &Value, key: &str, default: f64) -> Result<Vec<f64>> {
    match grid.get(key) {
        None => Ok(vec![default]),
        Some(Value::Array(a)) => a.iter().map(crate::io::parse_num).collect(),
        Some(other) => Err(Error::Parse(format!("grid.{key} must be an array, got {other}"))),
    }
}

/// A family member, the reference resource whose transition to it is decided, and the free set.
fn family_state(family: &str, d: usize, param: f64, seed: u64, index: usize) -> Result<(DensityMatrix, (&'static str, DensityMatrix), FreeSet)> {
    Ok(match family {
        "coherence" => {
            let plus = DensityMatrix::max_coherent(d);
            let state = plus.mix(&DensityMatrix::maximally_mixed(d), param);
            (state, ("max_coherent", plus), FreeSet::incoherent(d))
        }
        "isotropic" => (
            DensityMatrix::isotropic(d, param)?,
            ("max_entangled", DensityMatrix::max_entangled(d)),
            FreeSet::ppt(d, d)?,
        ),
        "random" => {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed.wrapping_add(index as u64));
            let state = crate::opalg::random_state(d, d, &mut rng);
            let state = state.mix(&DensityMatrix::maximally_mixed(d), param);
            (state, ("max_coherent", DensityMatrix::max_coherent(d)), FreeSet::incoherent(d))
        }
        other => return Err(Error::Parse(format!("unknown sweep family '{other}'"))),
    })
}

/// Runs a sweep config `{"family": ..., "grid": {"d": [...], "param": [...],
/// "eps1": [...], "eps2": [...]}, "seed": n}` and returns CSV text.
pub fn sweep(config: &Value) -> Result<String> {
    let family = config
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse("sweep config lacks \"family\"".into()))?;
    let seed = config.get("seed").and_then(Value::as_u64).unwrap_or(0);
    let empty = json!({});
    let grid = config.get("grid").unwrap_or(&empty);
    let dims = grid_list(grid, "d", 2.0)?;
    let params = grid_list(grid, "param", 1.0)?;
    let eps1s = grid_list(grid, "eps1", 0.0)?;
    let eps2s = grid_list(grid, "eps2", 0.0)?;
    let mut text = SWEEP_COLUMNS.join(",") + "\n";
    let mut index = 0usize;
    for &d in &dims {
        if !(d >= 1.0 && d.fract() == 0.0) {
            return Err(Error::Parse(format!("grid.d must hold positive integers, got {d}")));
        }
        let d = d as usize;
        for &param in &params {
            for &eps1 in &eps1s {
                for &eps2 in &eps2s {
                    let (state, reference, free) = family_state(family, d, param, seed, index)?;
                    let rel = relative_entropy_of_resource(&state, &free)?.value;
                    let dh = hyp_monotone(&state, &free, eps1)?.value;
                    let dmin = min_monotone(&state, &free)?.value;
                    let dmax = gen_log_robustness(&state, &free, eps2)?.value;
                    let dmaxf = log_robustness(&state, &free, eps2)?.value;
                    let ff = free_fraction(&state, &free)?.p;
                    let gff = gen_free_fraction(&state, &free)?.p;
                    let (ref_name, r) = reference;
                    let decided = Instance::new(r, state.clone(), free.clone(), free.clone(), eps1, eps2)?.auto().decided_by;
                    let row = [
                        index.to_string(),
                        family.to_string(),
                        free.name(),
                        d.to_string(),
                        num_text(param),
                        num_text(eps1),
                        num_text(eps2),
                        num_text(rel),
                        num_text(dh),
                        num_text(dmin),
                        num_text(dmax),
                        num_text(dmaxf),
                        num_text(ff),
                        num_text(gff),
                        ref_name.to_string(),
                        decided.as_str().to_string(),
                    ];
                    text += &row.join(",");
                    text.push('\n');
                    index += 1;
                }
            }
        }
    }
    Ok(text)
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
