//! The `cattree` command line.
//!
//! Exit codes: 0 success, 2 a check failed, 3 the catalytic tape was not
//! restored, 4 bad input or infeasible parameters.
//!
//! Every random choice derives from one 64-bit seed (`--seed`, falling back
//! to `CATTREE_SEED`, then 0) fed to ChaCha8, so each printed number can be
//! regenerated from the flags on the stats line.

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalytic::{CatalyticState, TapeMode};
use crate::cir::{cir_retrieve, CirScheme, CookMertzCir, MvCir, PirScheme};
use crate::error::{Error, Result};
use crate::modmath::PrimeBasis;
use crate::mv_family::{verify_family, MvFamily, VerifyMode};
use crate::one_level::InnerProductMode;
use crate::stats::StatsRecord;
use crate::tree_eval::{eval_catalytic, reduce_fanin, CatalyticOptions, TreeEvalInstance, ValueSlotMode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 2;
pub const EXIT_NOT_RESTORED: u8 = 3;
pub const EXIT_BAD_INPUT: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "cattree", version, about = "Catalytic tree evaluation with matching-vector families")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance.
    Gen(GenArgs),
    /// Evaluate an instance by brute force or catalytically.
    Solve(SolveArgs),
    /// Check the matching-vector axioms of a family.
    #[command(alias = "mv-check")]
    Mvcheck(MvcheckArgs),
    /// Check retrieval correctness of a CIR scheme over every index pair.
    #[command(alias = "cir-check")]
    Cirtest(CirtestArgs),
    /// Run the multi-server PIR: correctness for every index, then privacy.
    #[command(alias = "pir-demo")]
    Pirdemo(PirdemoArgs),
}

#[derive(Debug, clap::Args)]
pub struct SeedArg {
    #[arg(long, env = "CATTREE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(long)]
    pub h: usize,
    #[arg(long)]
    pub ell: u32,
    #[arg(long, default_value_t = 2)]
    pub fanin: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output file; the instance goes to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMode {
    Brute,
    Catalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValueSlotArg {
    /// Keep the value coordinates catalytic and run twice.
    Copy,
    /// Borrow the value coordinates as free space and run once.
    Free,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Instance file; without it one is generated from `--h/--ell/--fanin/--seed`.
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolveMode::Catalytic)]
    pub mode: SolveMode,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub ell: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub fanin: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value = "3,5")]
    pub primes: String,
    /// zeros | max | alternating | random[:SEED] | file:PATH (default random:<seed>).
    #[arg(long)]
    pub tape: Option<String>,
    #[arg(long, value_enum, default_value_t = ValueSlotArg::Copy)]
    pub value_slot: ValueSlotArg,
    /// Cache `<y, v_s>` per shift instead of recomputing.
    #[arg(long)]
    pub table: bool,
    /// Also evaluate by brute force and fail on disagreement.
    #[arg(long)]
    pub verify: bool,
    /// Append the stats line to this file.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct MvcheckArgs {
    #[arg(long)]
    pub ell: u32,
    #[arg(long, default_value = "3,5")]
    pub primes: String,
    /// Check this many random pairs instead of all of them.
    #[arg(long)]
    pub samples: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Mv,
    Cm,
}

#[derive(Debug, clap::Args)]
pub struct CirtestArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub ell: u32,
    /// Basis for the matching-vector scheme.
    #[arg(long, default_value = "3,5")]
    pub primes: String,
    /// Random masks per pair, on top of the zero and all-max masks.
    #[arg(long, default_value_t = 10)]
    pub masks: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, clap::Args)]
pub struct PirdemoArgs {
    #[arg(long, default_value = "3")]
    pub primes: String,
    /// Field prime with `m | q - 1`; the smallest one when omitted.
    #[arg(long)]
    pub q: Option<u64>,
    /// Family parameter: the family indexes at least `2^ell` records.
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

pub fn parse_primes(s: &str) -> Result<PrimeBasis> {
    let primes = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| Error::InvalidBasis(format!("bad prime {p:?}"))))
        .collect::<Result<Vec<_>>>()?;
    PrimeBasis::new(&primes)
}

/// What a command concluded, besides its printed report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

pub fn exit_code(result: &Result<Verdict>) -> u8 {
    match result {
        Ok(Verdict::Pass) => EXIT_OK,
        Ok(Verdict::Fail) => EXIT_CHECK_FAILED,
        Err(Error::RestorationFailed(_)) => EXIT_NOT_RESTORED,
        Err(_) => EXIT_BAD_INPUT,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Verdict> {
    match cli.command {
        Command::Gen(args) => cmd_gen(&args, out),
        Command::Solve(args) => cmd_solve(&args, out).map(|(verdict, _)| verdict),
        Command::Mvcheck(args) => cmd_mvcheck(&args, out),
        Command::Cirtest(args) => cmd_cirtest(&args, out),
        Command::Pirdemo(args) => cmd_pirdemo(&args, out),
    }
}

/// Entry point for the binary.
pub fn main_entry() -> ExitCode {
    // clap would exit with 2 on bad flags, which means "check failed" here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK });
        }
    };
    let stdout = io::stdout();
    let result = run(cli, &mut stdout.lock());
    if let Err(e) = &result {
        eprintln!("cattree: {e}");
    }
    ExitCode::from(exit_code(&result))
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<Verdict> {
    let inst = TreeEvalInstance::generate(args.h, args.ell, args.fanin, args.seed.seed)?;
    let text = inst.serialize();
    let r = args.fanin as u128;
    let size = r.pow(args.h as u32) * u128::from(args.ell) * (1u128 << (r * u128::from(args.ell)));
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            writeln!(out, "wrote {} ({} bytes); n = r^h * ell * 2^(r ell) = {size}", path.display(), text.len())?;
        }
        None => {
            out.write_all(text.as_bytes())?;
            eprintln!("n = r^h * ell * 2^(r ell) = {size}");
        }
    }
    Ok(Verdict::Pass)
}

fn load_instance(args: &SolveArgs) -> Result<(TreeEvalInstance, String)> {
    match (&args.instance, args.h, args.ell) {
        (Some(path), _, _) => {
            let inst = TreeEvalInstance::read(BufReader::new(File::open(path)?))?;
            Ok((inst, path.display().to_string().replace(' ', "_")))
        }
        (None, Some(h), Some(ell)) => {
            let inst = TreeEvalInstance::generate(h, ell, args.fanin, args.seed.seed)?;
            Ok((inst, format!("gen:h{h}:l{ell}:r{}:s{}", args.fanin, args.seed.seed)))
        }
        _ => Err(Error::Infeasible("give an instance file or both --h and --ell".into())),
    }
}

/// Evaluates and prints `value=0x..` plus one stats line.
pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(Verdict, StatsRecord)> {
    let (inst, id) = load_instance(args)?;
    let tape = match &args.tape {
        Some(s) => s.parse::<TapeMode>()?,
        None => TapeMode::Random(args.seed.seed),
    };
    let record = match args.mode {
        SolveMode::Brute => {
            let started = std::time::Instant::now();
            let value = inst.eval_bruteforce()?;
            StatsRecord {
                instance_id: id,
                h: inst.h,
                ell: inst.ell,
                t: 0,
                m: 0,
                d: 0,
                tape: "none".into(),
                oracle_calls: 0,
                peak_free_bits: 0,
                catalytic_bits: 0,
                wall_time_ms: started.elapsed().as_millis() as u64,
                restored: true,
                value,
            }
        }
        SolveMode::Catalytic => {
            let basis = parse_primes(&args.primes)?;
            let binary = if inst.fanin > 2 { reduce_fanin(&inst)? } else { inst.clone() };
            let family = MvFamily::for_ell(binary.ell, &basis)?;
            let mut state = CatalyticState::new(basis.clone(), family.dim(), &tape)?;
            let opts = CatalyticOptions {
                inner_products: if args.table { InnerProductMode::Table } else { InnerProductMode::Streaming },
                value_slot: match args.value_slot {
                    ValueSlotArg::Copy => ValueSlotMode::CatalyticCopy,
                    ValueSlotArg::Free => ValueSlotMode::FreeSpace,
                },
            };
            let outcome = eval_catalytic(&binary, &family, &mut state, opts)?;
            StatsRecord {
                instance_id: id,
                h: binary.h,
                ell: binary.ell,
                t: basis.t(),
                m: basis.modulus(),
                d: family.dim(),
                tape: tape.to_string(),
                oracle_calls: outcome.oracle_calls,
                peak_free_bits: outcome.peak_free_bits,
                catalytic_bits: state.catalytic_bits(),
                wall_time_ms: outcome.wall_time_ms,
                restored: outcome.restore.passed(),
                value: outcome.value,
            }
        }
    };
    writeln!(out, "value={:#x}", record.value)?;
    writeln!(out, "{record}")?;
    if let Some(path) = &args.stats {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{record}")?;
    }
    let mut verdict = Verdict::Pass;
    if args.verify {
        let want = inst.eval_bruteforce()?;
        if want != record.value {
            writeln!(out, "verify FAILED: brute force gives {want:#x}")?;
            verdict = Verdict::Fail;
        } else {
            writeln!(out, "verify ok")?;
        }
    }
    Ok((verdict, record))
}

pub fn cmd_mvcheck(args: &MvcheckArgs, out: &mut dyn Write) -> Result<Verdict> {
    let basis = parse_primes(&args.primes)?;
    let family = MvFamily::for_ell(args.ell, &basis)?;
    let mode = match args.samples {
        Some(samples) => VerifyMode::Sampled { samples, seed: args.seed.seed },
        None => VerifyMode::Exhaustive,
    };
    writeln!(out, "{}", family.params())?;
    let report = verify_family(&family, mode);
    writeln!(out, "mvcheck: {report}")?;
    Ok(if report.passed() { Verdict::Pass } else { Verdict::Fail })
}

fn cir_grid<S: CirScheme>(scheme: &S, masks: usize, seed: u64, out: &mut dyn Write) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = scheme.ring();
    let n = scheme.db_side();
    let db: Vec<Vec<u64>> = (0..n * n).map(|_| ring.random(&mut rng)).collect();
    let mut pairs = vec![(ring.zero(), ring.zero()), (ring.filled(ring.modulus - 1), ring.filled(ring.modulus - 1))];
    pairs.extend((0..masks).map(|_| (ring.random(&mut rng), ring.random(&mut rng))));
    let mut checked = 0u64;
    for a in 0..n {
        for b in 0..n {
            for (x, y) in &pairs {
                let got = cir_retrieve(scheme, &db, a, b, x, y)?;
                checked += 1;
                if got != db[(a * n + b) as usize] {
                    writeln!(out, "cirtest: FAIL at a={a} b={b} after {checked} retrievals")?;
                    return Ok(Verdict::Fail);
                }
            }
        }
    }
    writeln!(
        out,
        "cirtest: pass ({checked} retrievals, {} servers, {n}x{n} records, state {} bits)",
        scheme.servers(),
        scheme.state_bits()
    )?;
    Ok(Verdict::Pass)
}

pub fn cmd_cirtest(args: &CirtestArgs, out: &mut dyn Write) -> Result<Verdict> {
    match args.scheme {
        SchemeArg::Mv => {
            let scheme = MvCir::for_ell(args.ell, &parse_primes(&args.primes)?)?;
            writeln!(out, "scheme mv: {}", scheme.family().params())?;
            cir_grid(&scheme, args.masks, args.seed.seed, out)
        }
        SchemeArg::Cm => {
            let scheme = CookMertzCir::new(args.ell)?;
            let (q, s, omega) = scheme.field();
            writeln!(out, "scheme cm: ell={} q={q} s={s} omega={omega}", args.ell)?;
            cir_grid(&scheme, args.masks, args.seed.seed, out)
        }
    }
}

pub fn cmd_pirdemo(args: &PirdemoArgs, out: &mut dyn Write) -> Result<Verdict> {
    let basis = parse_primes(&args.primes)?;
    let family = MvFamily::for_ell(args.ell, &basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.seed);
    let size = family.size();
    let q_hint = args.q;
    // the database lives in Z_q, so build once to learn q, then fill it
    let probe = PirScheme::new(family.clone(), q_hint, vec![0; size as usize])?;
    let q = probe.field().q;
    let db: Vec<u64> = (0..size).map(|_| rng.random_range(0..q)).collect();
    let scheme = PirScheme::new(family, Some(q), db.clone())?;
    writeln!(
        out,
        "pir: N={size} m={} q={q} generators={:?} servers={}",
        basis.modulus(),
        scheme.field().generators,
        scheme.servers()
    )?;
    let mut verdict = Verdict::Pass;
    for i in 0..size {
        for _ in 0..args.trials {
            let r = scheme.random_mask(&mut rng);
            let got = scheme.retrieve(i, &r)?;
            if got != db[i as usize] {
                writeln!(out, "correctness FAILED at index {i}: got {got}, want {}", db[i as usize])?;
                verdict = Verdict::Fail;
            }
        }
    }
    if verdict == Verdict::Pass {
        writeln!(out, "correctness ok: {} retrievals", size * args.trials as u64)?;
    }
    let privacy = scheme.privacy_check()?;
    writeln!(out, "{privacy}")?;
    if !privacy.passed() {
        verdict = Verdict::Fail;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<Verdict>, String) {
        let cli = Cli::try_parse_from(std::iter::once("cattree").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = run(cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn primes_parse() {
        assert_eq!(parse_primes("3, 5").unwrap().modulus(), 15);
        assert!(parse_primes("3,x").is_err());
        assert!(parse_primes("4").is_err());
    }

    #[test]
    fn aliases() {
        for name in ["cir-check", "cirtest"] {
            assert!(Cli::try_parse_from(["cattree", name, "--scheme", "cm", "--ell", "1"]).is_ok());
        }
        assert!(Cli::try_parse_from(["cattree", "pir-demo"]).is_ok());
    }

    #[test]
    fn solve_generated_both_modes() {
        let (r, text) = run_args(&["solve", "--h", "2", "--ell", "1", "--seed", "3", "--primes", "3", "--verify"]);
        assert_eq!(r.unwrap(), Verdict::Pass, "{text}");
        assert!(text.contains("verify ok"));
        let (r, _) = run_args(&["solve", "--h", "2", "--ell", "1", "--seed", "3", "--mode", "brute"]);
        assert_eq!(r.unwrap(), Verdict::Pass);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Verdict::Pass)), 0);
        assert_eq!(exit_code(&Ok(Verdict::Fail)), 2);
        let report = crate::catalytic::RestoreReport { checked: vec![], first_mismatch: None };
        assert_eq!(exit_code(&Err(Error::RestorationFailed(report))), 3);
        assert_eq!(exit_code(&Err(Error::Infeasible("x".into()))), 4);
        let (r, _) = run_args(&["solve", "--mode", "brute"]);
        assert_eq!(exit_code(&r), 4);
    }
}
