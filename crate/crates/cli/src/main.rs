//! `losr`: command-line front end of the inflation certifier.
//!
//! Exit codes: 0 feasible or valid, 2 certified infeasible, 1 error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use losr_core::behavior::Event;
use losr_core::constraints::shared_bit::check_shared_bit_not_lo;
use losr_core::constraints::{compile, ConstraintSystem, DEFAULT_MAX_VARIABLES};
use losr_core::inequalities::{bkp_score, ghz_inequality_slack, i_bell_conditioned, i_same};
use losr_core::inflation::{all_members, enumerate_inflations, raw_wiring_count, DEFAULT_MAX_WIRINGS};
use losr_core::io::{behavior_from_json, behavior_to_json, CertificateFile, LoadedBehavior, NumberMode};
use losr_core::lp::sweep::{sweep_noise, unit_interval, GhzInequalityFamily, GhzLpFamily, NoiseFamily};
use losr_core::lp::{solve_feasibility, verify, SolveOptions, Verdict};
use losr_core::network::{canonical_scenario, Scenario};
use losr_core::quantum::{fidelity_of, ghz_behavior, ghz_parties, svetlichny_lhvm_behavior, w_behavior};
use losr_core::{Behavior, QSqrt2, Scalar};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "losr", version, about = "Inflation-LP certification of genuine multipartite nonlocality")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap on raw inflation wirings.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_WIRINGS as u64)]
    max_wirings: u64,
    /// Cap on LP variables (inflated behavior entries).
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_VARIABLES)]
    max_vars: usize,
    /// Reserved; the pipeline is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// List the isomorphism classes of order-K inflations of the N-party network.
    Inflations {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        order: usize,
    },
    /// Write a behavior produced by a quantum or classical model.
    Oracle {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Visibility p of the noisy GHZ state, as a decimal or `num/den`.
        #[arg(long, default_value = "1")]
        noise: String,
        /// Number of chained-Bell settings for the W family.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide the order-K inflation test for a behavior.
    Certify {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        order: usize,
        /// Round a float behavior to rationals and prove the verdict exactly.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        cert_out: Option<PathBuf>,
    },
    /// Check a certificate against a behavior in exact arithmetic.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        order: usize,
    },
    /// Bisect the noise parameter for the critical visibility.
    Sweep {
        #[arg(long, value_enum, default_value = "ghz")]
        family: SweepFamily,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 2e-3)]
        tol: f64,
    },
    /// Evaluate a closed-form score on a behavior.
    Eval {
        #[arg(long, value_enum)]
        inequality: Inequality,
        #[arg(long)]
        behavior: PathBuf,
        /// Chained-Bell parameter.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Worked examples.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Refute an n-party shared random bit with the ring inflation.
    SharedBit {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Ghz,
    W,
    Lhvm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFamily {
    /// Noisy GHZ against the inflation LP.
    Ghz,
    /// Noisy GHZ against the closed-form inequality only.
    GhzInequality,
}

#[derive(Clone, Copy, ValueEnum)]
enum Inequality {
    Ghz,
    Bkp,
    Same,
    Bell,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Float,
    Rational,
    Quadratic,
}

impl From<Mode> for NumberMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Float => NumberMode::Float,
            Mode::Rational => NumberMode::Rational,
            Mode::Quadratic => NumberMode::Quadratic,
        }
    }
}

/// Exact value of a decimal (`0.83`) or fraction (`5/6`) literal.
fn parse_exact(s: &str) -> anyhow::Result<BigRational> {
    let s = s.trim();
    if s.contains('/') {
        return BigRational::from_str(s).map_err(|e| anyhow!("invalid fraction `{s}`: {e}"));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        bail!("invalid number `{s}`");
    }
    let digits = format!("{int}{frac}");
    let num = num_bigint::BigInt::from_str(if digits.is_empty() { "0" } else { &digits })?;
    let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
    let v = BigRational::new(num, den);
    Ok(if neg { -v } else { v })
}

fn read_behavior(path: &Path) -> anyhow::Result<LoadedBehavior> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    behavior_from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable report"));
}

fn scenario_for(parties: &[losr_core::network::PartySpec]) -> anyhow::Result<Scenario> {
    Ok(canonical_scenario(parties.len(), parties.to_vec())?)
}

fn build_system<T: Scalar>(p: &Behavior<T>, order: usize, g: &Global) -> anyhow::Result<ConstraintSystem<T>> {
    let scenario = scenario_for(p.parties())?;
    let classes = enumerate_inflations(&scenario, order, g.max_wirings as u128)?;
    Ok(compile(&scenario, p, &all_members(&classes), g.max_vars)?)
}

fn cmd_inflations(n: usize, order: usize, g: &Global) -> anyhow::Result<u8> {
    let scenario = canonical_scenario(n, ghz_parties(n))?;
    let classes = enumerate_inflations(&scenario, order, g.max_wirings as u128)?;
    let list: Vec<Value> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "class": i + 1,
                "multiplicity": c.multiplicity,
                "raw_wirings": c.raw_count,
                "blocks": c.members.len(),
                "representative": c.representative.wiring_label(),
            })
        })
        .collect();
    print_json(&json!({
        "n": n,
        "order": order,
        "raw_wirings": raw_wiring_count(&scenario, order).to_string(),
        "classes": list,
    }));
    Ok(EXIT_OK)
}

fn cmd_oracle(family: Family, n: usize, noise: &str, m: usize, mode: Option<Mode>, out: Option<&Path>) -> anyhow::Result<u8> {
    let text = match family {
        Family::Ghz => {
            let p = parse_exact(noise)?;
            let b: Behavior<QSqrt2> = ghz_behavior(n, QSqrt2::from_rational(p))?;
            behavior_to_json(&b, mode.map(Into::into).unwrap_or(NumberMode::Quadratic))?
        }
        Family::W => match w_behavior::<QSqrt2>(m) {
            Ok(b) => behavior_to_json(&b, mode.map(Into::into).unwrap_or(NumberMode::Quadratic))?,
            // angles outside the quadratic field
            Err(losr_core::Error::Unsupported(_)) => {
                if matches!(mode, Some(Mode::Rational | Mode::Quadratic)) {
                    bail!("the W behavior for m = {m} is not exactly representable; use --mode float");
                }
                behavior_to_json(&w_behavior::<f64>(m)?, NumberMode::Float)?
            }
            Err(e) => return Err(e.into()),
        },
        Family::Lhvm => {
            let b: Behavior<BigRational> = svetlichny_lhvm_behavior()?;
            behavior_to_json(&b, mode.map(Into::into).unwrap_or(NumberMode::Rational))?
        }
    };
    write_output(out, &text)?;
    Ok(EXIT_OK)
}

fn certify_system<T: Scalar>(sys: &ConstraintSystem<T>, cert_out: Option<&Path>) -> anyhow::Result<u8> {
    let out = solve_feasibility(sys, SolveOptions::default())?;
    let mut report = json!({
        "verdict": out.verdict,
        "objective": out.objective,
        "exact_objective": out.exact_objective.as_ref().map(|v| v.to_string()),
        "verified": out.verified,
        "near_boundary": out.near_boundary,
        "note": out.note,
        "stats": out.stats,
    });
    if let Some(cert) = &out.certificate {
        let exact = sys.map_scalar(|v| v.to_exact());
        let file = CertificateFile::new(&exact, cert.clone())?;
        report["certificate_value"] = json!(file.value.to_string());
        report["certificate_value_approx"] = json!(file.value.to_f64());
        if let Some(path) = cert_out {
            fs::write(path, file.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    print_json(&report);
    match out.verdict {
        Verdict::Feasible => Ok(EXIT_OK),
        Verdict::Infeasible if out.verified => Ok(EXIT_INFEASIBLE),
        Verdict::Infeasible => {
            eprintln!("infeasible in floating point, but no certificate could be verified exactly");
            Ok(EXIT_ERROR)
        }
    }
}

fn cmd_certify(path: &Path, order: usize, exact: bool, cert_out: Option<&Path>, g: &Global) -> anyhow::Result<u8> {
    let loaded = read_behavior(path)?;
    match (&loaded, exact) {
        (LoadedBehavior::Float(b), false) => certify_system(&build_system(b, order, g)?, cert_out),
        _ => certify_system(&build_system(&loaded.to_exact()?, order, g)?, cert_out),
    }
}

fn cmd_verify(cert: &Path, behavior: &Path, order: usize, g: &Global) -> anyhow::Result<u8> {
    let text = fs::read_to_string(cert).with_context(|| format!("reading {}", cert.display()))?;
    let file = CertificateFile::from_json(&text).with_context(|| format!("parsing {}", cert.display()))?;
    let p = read_behavior(behavior)?.to_exact()?;
    if file.parties != p.parties() {
        bail!("certificate was issued for different parties");
    }
    if file.order != order {
        bail!("certificate was issued for order {}, not {order}", file.order);
    }
    let sys = build_system(&p, order, g)?;
    let v = verify(&sys, &file.certificate)?;
    print_json(&json!({
        "valid": v.valid,
        "value": v.value.to_string(),
        "value_approx": v.value.to_f64(),
        "reason": v.reason,
    }));
    Ok(if v.valid { EXIT_OK } else { EXIT_ERROR })
}

fn cmd_sweep(family: SweepFamily, n: usize, order: usize, tol: f64, g: &Global) -> anyhow::Result<u8> {
    let mut fam: Box<dyn NoiseFamily> = match family {
        SweepFamily::Ghz => Box::new(GhzLpFamily::new(
            n,
            order,
            g.max_wirings as u128,
            g.max_vars,
            SolveOptions::default(),
        )?),
        SweepFamily::GhzInequality => Box::new(GhzInequalityFamily { n }),
    };
    let (lo, hi) = unit_interval();
    let r = sweep_noise(fam.as_mut(), lo, hi, tol)?;
    let fid = |p: f64| fidelity_of(n, &p);
    print_json(&json!({
        "n": n,
        "order": order,
        "tol": tol,
        "lower": r.lower,
        "upper": r.upper,
        "lower_exact": r.lower_exact,
        "upper_exact": r.upper_exact,
        "fidelity_lower": fid(r.lower)?,
        "fidelity_upper": fid(r.upper)?,
        "certificate_verified": r.certificate_verified,
        "steps": r.steps,
    }));
    Ok(EXIT_OK)
}

fn eval_on<T: Scalar + serde::Serialize>(b: &Behavior<T>, which: Inequality, m: Option<usize>) -> anyhow::Result<Value> {
    let n = b.n_parties();
    Ok(match which {
        Inequality::Ghz => serde_json::to_value(ghz_inequality_slack(b, n)?)?,
        Inequality::Bell => json!({ "i_bell": i_bell_conditioned(b, n)? }),
        Inequality::Same => json!({ "i_same": i_same(b, n)? }),
        Inequality::Bkp => {
            let m = m.ok_or_else(|| anyhow!("--m is required for the chained-Bell score"))?;
            // the third party, if any, conditions on output 0 at input 1
            let given = (n >= 3).then_some(Event::Output { party: 2, input: 1, output: 0 });
            json!({ "m": m, "score": bkp_score(b, m, given.as_ref())? })
        }
    })
}

fn cmd_eval(which: Inequality, path: &Path, m: Option<usize>) -> anyhow::Result<u8> {
    let v = match read_behavior(path)? {
        LoadedBehavior::Float(b) => eval_on(&b, which, m)?,
        LoadedBehavior::Exact(b) => eval_on(&b, which, m)?,
    };
    print_json(&v);
    Ok(EXIT_OK)
}

fn cmd_shared_bit(n: usize) -> anyhow::Result<u8> {
    let r = check_shared_bit_not_lo(n)?;
    print_json(&serde_json::to_value(&r)?);
    Ok(if r.verdict == Verdict::Infeasible && r.certificate_verified {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Inflations { n, order } => cmd_inflations(n, order, g),
        Command::Oracle { family, n, ref noise, m, mode, ref out } => cmd_oracle(family, n, noise, m, mode, out.as_deref()),
        Command::Certify { ref behavior, order, exact, ref cert_out } => cmd_certify(behavior, order, exact, cert_out.as_deref(), g),
        Command::Verify { ref cert, ref behavior, order } => cmd_verify(cert, behavior, order, g),
        Command::Sweep { family, n, order, tol } => cmd_sweep(family, n, order, tol, g),
        Command::Eval { inequality, ref behavior, m } => cmd_eval(inequality, behavior, m),
        Command::Demo { demo: Demo::SharedBit { n } } => cmd_shared_bit(n),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use losr_core::scalar::ratio;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_exact("0.83").unwrap(), ratio(83, 100));
        assert_eq!(parse_exact("1").unwrap(), ratio(1, 1));
        assert_eq!(parse_exact("5/6").unwrap(), ratio(5, 6));
        assert_eq!(parse_exact(".5").unwrap(), ratio(1, 2));
        assert!(parse_exact("1e-3").is_err());
        assert!(parse_exact(".").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
