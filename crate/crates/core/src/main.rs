use clap::{Args, Parser, Subcommand};
use infpdo::calculus::{
    change_quantization_terms, composition_terms, transpose_terms, verify_composition,
    verify_quantization_change, verify_transpose,
};
use infpdo::harness::fixtures::{self, resolve_symbol};
use infpdo::harness::report::fmt;
use infpdo::harness::{self, ExperimentConfig, SequenceSpec};
use infpdo::mollify::{partition_check, DyadicPartition};
use infpdo::numeric::{linspace, linspace_step};
use infpdo::quantize::{hermite_testfn, kernel_from_symbol, op_tau_apply, Grid, GridFunction};
use infpdo::symbols::seminorm::{gamma_seminorm, ClassParams, ScanBudget};
use infpdo::symbols::{Expr, FormalSeries, SymbolFile, SymbolFn};
use infpdo::ultrapoly::{
    choose_parameters, lower_bound_check, strip_check, LowerTarget, Mode, Target, Ultrapolynomial,
};
use infpdo::weights::{WeightSequence, DEFAULT_HORIZON};
use infpdo::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infpdo",
    version,
    about = "Weight sequences, symbol classes and quantizations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weight sequences and associated functions.
    #[command(subcommand)]
    Weights(WeightsCmd),
    /// Ultrapolynomials.
    #[command(subcommand)]
    Ultrapoly(UltrapolyCmd),
    /// Gevrey cutoffs.
    #[command(subcommand)]
    Mollify(MollifyCmd),
    /// Symbol expressions and seminorms.
    #[command(subcommand)]
    Symbols(SymbolsCmd),
    /// tau-quantizations on a grid.
    #[command(subcommand)]
    Quantize(QuantizeCmd),
    /// Asymptotic expansions.
    #[command(subcommand)]
    Calculus(CalculusCmd),
    /// Acceptance suites and fixtures.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args, Clone)]
struct SeqArgs {
    /// Gevrey index `s` for `M_p = p!^s`.
    #[arg(long, conflicts_with = "sequence")]
    gevrey: Option<f64>,
    /// gevrey:<s>, counterexample, counterexample-base or file:<path>.
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
}

impl SeqArgs {
    fn spec(&self, default: f64) -> Result<SequenceSpec> {
        match (&self.gevrey, &self.sequence) {
            (Some(s), _) => Ok(SequenceSpec::Gevrey(*s)),
            (None, Some(t)) => SequenceSpec::parse(t),
            (None, None) => Ok(SequenceSpec::Gevrey(default)),
        }
    }

    fn build(&self, default: f64) -> Result<WeightSequence> {
        self.spec(default)?.build(self.horizon)
    }
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// Check (M.1)-(M.3) and report the fitted witnesses.
    Validate(SeqArgs),
    /// Tabulate the associated function.
    Assoc {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
    },
    /// Print a built-in sequence pair.
    Fixture {
        name: String,
        #[arg(long, default_value_t = 16)]
        horizon: usize,
    },
}

#[derive(Subcommand)]
enum UltrapolyCmd {
    /// Choose (l, q) for a strip and lower bound target.
    Build {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        strip: f64,
        #[arg(long, default_value = "0:50:0.5")]
        grid: String,
    },
    /// Tabulate `(xi, P(xi), bound)` and fit the lower bound.
    Check {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value = "0:50:0.1")]
        grid: String,
    },
}

#[derive(Subcommand)]
enum MollifyCmd {
    /// Build the dyadic partition and check telescoping and supports.
    Partition {
        /// Gevrey order of the profile and of `M_p = p!^s`.
        #[arg(long, default_value_t = 2.0)]
        gevrey: f64,
        #[arg(long = "R", default_value_t = 4.0)]
        r: f64,
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Print `(xi, psi_0..psi_N)` instead of the summary.
        #[arg(long)]
        emit_grid: bool,
    },
}

#[derive(Subcommand)]
enum SymbolsCmd {
    /// Scanned Gamma seminorm of a symbol from a file.
    Norm {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long = "K", default_value_t = 6)]
        k: usize,
        /// Gevrey index of `A_p = B_p = M_p`.
        #[arg(long, default_value_t = 1.0)]
        gevrey: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 12.0)]
        extent: f64,
        #[arg(long, default_value_t = 97)]
        points: usize,
    },
    /// Print the canonical form of an expression.
    Parse {
        expr: String,
        /// Differentiate in these variables first, e.g. `x,xi`.
        #[arg(long, value_delimiter = ',')]
        diff: Vec<String>,
    },
    /// List the definitions of a symbol file in canonical form.
    List { file: PathBuf },
}

#[derive(Args)]
struct QuantArgs {
    /// `file.sym:name`, a fixture name, or an expression.
    #[arg(long)]
    symbol: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value = "256,12")]
    grid: String,
}

#[derive(Subcommand)]
enum QuantizeCmd {
    /// Apply `Op_tau(a)` to a test function; prints `(x, Re, Im)`.
    Apply {
        #[command(flatten)]
        q: QuantArgs,
        #[arg(long, default_value = "hermite:0")]
        testfn: String,
    },
    /// Compute the kernel; `--emit` writes `(x, y, Re K, Im K)`.
    Kernel {
        #[command(flatten)]
        q: QuantArgs,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Also compare truncations against operators on h_0..h_3.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value = "256,12")]
    grid: String,
}

#[derive(Subcommand)]
enum CalculusCmd {
    /// Terms of the change of quantization `tau1 -> tau`.
    ChangeQuant {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tau1: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long = "N", default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        v: VerifyArgs,
    },
    /// Terms of the composition `a(x,D) b(x,D)`.
    Compose {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "N", default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        v: VerifyArgs,
    },
    /// Terms of the transpose at `tau`.
    Transpose {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long = "N", default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        v: VerifyArgs,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run a named suite and write `<out>/<run-id>/`.
    Run {
        /// weights-suite, ultrapoly-suite, partition-suite, quantize-suite, calculus-suite or all.
        suite: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value` overrides applied after the config file.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in fixtures.
    Fixtures,
    /// Print the effective configuration and its hash.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set")]
        set: Vec<String>,
    },
}

/// `lo:hi:step`.
fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("grid `{spec}`: expected lo:hi:step")))?;
    match nums[..] {
        [lo, hi, step] if step > 0.0 && hi >= lo => Ok(linspace_step(lo, hi, step)),
        _ => Err(Error::Config(format!(
            "grid `{spec}`: expected lo:hi:step with step > 0"
        ))),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_series(s: &FormalSeries) {
    println!("j\tterm");
    for (j, t) in s.terms.iter().enumerate() {
        println!("{j}\t{t}");
    }
}

fn print_residuals(r: &[(usize, f64)]) {
    println!("N\tresidual");
    for (n, v) in r {
        println!("{n}\t{}", fmt(*v));
    }
}

fn testfns(grid: &str, n: usize) -> Result<Vec<GridFunction>> {
    let g = Grid::parse(grid)?;
    (0..n).map(|k| hermite_testfn(k, g)).collect()
}

fn load_config(config: &Option<PathBuf>, set: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for s in set {
        cfg.apply_override(s)?;
    }
    Ok(cfg)
}

fn weights(cmd: WeightsCmd) -> Result<ExitCode> {
    match cmd {
        WeightsCmd::Validate(a) => {
            let seq = a.build(1.0)?;
            let r = seq.validate();
            println!("sequence\t{}", a.spec(1.0)?);
            println!("horizon\t{}", r.horizon);
            println!("M1\t{}", r.m1.holds);
            println!("M2\t{}\tH={}\tc0={}", r.m2.holds, r.m2.h, fmt(r.m2.c0));
            println!(
                "M3\t{}\tc0={}\tblock_ratio={}",
                r.m3.holds,
                fmt(r.m3.c0),
                fmt(r.m3.block_ratio)
            );
            for w in &r.warnings {
                println!("warning\t{w}");
            }
            Ok(status(r.all_hold()))
        }
        WeightsCmd::Assoc { seq, rho } => {
            let s = seq.build(1.0)?;
            println!("rho\tM\targmax\tat_horizon");
            for r in rho {
                let a = s.associated_auto(r);
                println!(
                    "{}\t{}\t{}\t{}",
                    fmt(r),
                    fmt(a.value),
                    a.argmax,
                    a.at_horizon
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        WeightsCmd::Fixture { name, horizon } => {
            if name != "counterexample" {
                return Err(Error::Config(format!(
                    "unknown sequence fixture `{name}`; available: counterexample"
                )));
            }
            let a = WeightSequence::counterexample_base(horizon)?;
            let m = WeightSequence::counterexample(horizon)?;
            println!("p\tln_A\tln_M\tln_r");
            for p in 0..=horizon {
                let lr = if p == 0 {
                    0.0
                } else {
                    m.ln_m(p) - m.ln_m(p - 1) - (a.ln_m(p) - a.ln_m(p - 1))
                };
                println!("{p}\t{}\t{}\t{}", fmt(a.ln_m(p)), fmt(m.ln_m(p)), fmt(lr));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn ultrapoly(cmd: UltrapolyCmd) -> Result<ExitCode> {
    match cmd {
        UltrapolyCmd::Build {
            seq,
            k,
            strip,
            grid,
        } => {
            let s = seq.build(1.0)?;
            let grid = parse_range(&grid)?;
            let c = choose_parameters(&s, &Target::Beurling { k }, strip, &grid)?;
            let sr = strip_check(&c.poly, strip, &grid)?;
            println!("l\t{}", c.l);
            println!("q\t{}", c.q);
            println!("radius\t{}", c.poly.radius());
            println!("truncation\t{}", c.poly.truncation());
            println!("tail_bound\t{}", fmt(c.poly.tail_bound()));
            println!("ln_c_tilde\t{}", fmt(c.lower.ln_c_tilde));
            println!("nearest_zero\t{}", fmt(c.poly.nearest_zero()));
            println!("strip_zero_free\t{}", sr.zero_free);
            println!("strip_min_modulus\t{}", fmt(sr.min_modulus));
            Ok(status(c.lower.holds && sr.zero_free))
        }
        UltrapolyCmd::Check { seq, l, q, k, grid } => {
            let s = seq.build(1.0)?;
            let grid = parse_range(&grid)?;
            let radius = grid.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            let p = Ultrapolynomial::build(&s, Mode::Beurling { l }, q, radius)?;
            let r = lower_bound_check(&p, &LowerTarget::Beurling { k }, &grid)?;
            println!("xi\tP\tbound");
            for (x, lp, lb) in &r.rows {
                println!("{}\t{}\t{}", fmt(*x), fmt(lp.exp()), fmt(lb.exp()));
            }
            if let Some(f) = r.failure_radius {
                eprintln!("lower bound fails past xi = {f}");
            }
            Ok(status(r.holds))
        }
    }
}

fn mollify(cmd: MollifyCmd) -> Result<ExitCode> {
    let MollifyCmd::Partition {
        gevrey,
        r,
        n,
        points,
        emit_grid,
    } = cmd;
    let seq = WeightSequence::gevrey(gevrey, DEFAULT_HORIZON.max(n + 2))?;
    let part = DyadicPartition::new(&seq, gevrey, r)?;
    let (_, hi) = part.support_bounds(n + 1)?;
    let grid = linspace(0.0, 1.1 * hi, points.max(2));
    if emit_grid {
        let head: Vec<String> = (0..=n).map(|k| format!("psi_{k}")).collect();
        println!("xi\t{}", head.join("\t"));
        for &xi in &grid {
            let vals = (0..=n)
                .map(|k| part.psi(k, xi).map(fmt))
                .collect::<Result<Vec<_>>>()?;
            println!("{}\t{}", fmt(xi), vals.join("\t"));
        }
        return Ok(ExitCode::SUCCESS);
    }
    let rep = partition_check(&part, n, &grid)?;
    println!("N\t{n}");
    println!("R\t{r}");
    println!("samples\t{}", rep.samples);
    println!("telescoping_residual\t{}", fmt(rep.telescoping_residual));
    println!("support_violations\t{}", rep.support_violations);
    Ok(status(
        rep.telescoping_residual <= 1e-12 && rep.support_violations == 0,
    ))
}

fn symbols(cmd: SymbolsCmd) -> Result<ExitCode> {
    match cmd {
        SymbolsCmd::Norm {
            file,
            name,
            h,
            m,
            k,
            gevrey,
            rho,
            extent,
            points,
        } => {
            let f = SymbolFile::load(&file)?;
            let a = SymbolFn::new(f.get(&name)?.clone());
            let p = ClassParams::gevrey(gevrey, rho, h, m)?;
            p.check()?;
            let r = gamma_seminorm(
                &a,
                &p,
                ScanBudget {
                    order: k,
                    extent,
                    points,
                },
            );
            println!("value\t{}", fmt(r.value));
            println!("ln_value\t{}", fmt(r.ln_value));
            if let Some(w) = r.witness {
                println!(
                    "witness\talpha={} beta={} x={} xi={}",
                    w.alpha, w.beta, w.x, w.xi
                );
            }
            println!("budget\tK={} extent={} points={}", k, extent, points);
            println!("saturated\t{}", r.saturated);
            Ok(ExitCode::SUCCESS)
        }
        SymbolsCmd::Parse { expr, diff } => {
            let mut e = Expr::parse(&expr)?;
            for v in &diff {
                let var = infpdo::symbols::Var::from_name(v.trim())
                    .ok_or_else(|| Error::UnknownSymbol(v.clone()))?;
                e = e.diff(var);
            }
            println!("{e}");
            Ok(ExitCode::SUCCESS)
        }
        SymbolsCmd::List { file } => {
            let f = SymbolFile::load(&file)?;
            for n in f.names() {
                println!("{n}\t{}", f.get(n)?);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn quantize(cmd: QuantizeCmd) -> Result<ExitCode> {
    match cmd {
        QuantizeCmd::Apply { q, testfn } => {
            let g = Grid::parse(&q.grid)?;
            let a = SymbolFn::new(resolve_symbol(&q.symbol)?);
            let u = fixtures::testfn(&testfn, g)?;
            let v = op_tau_apply(&a, q.tau, &u)?;
            println!("x\tre\tim");
            for (x, z) in g.xs().iter().zip(&v.values) {
                println!("{}\t{}\t{}", fmt(*x), fmt(z.re), fmt(z.im));
            }
            Ok(ExitCode::SUCCESS)
        }
        QuantizeCmd::Kernel { q, emit } => {
            let g = Grid::parse(&q.grid)?;
            let a = SymbolFn::new(resolve_symbol(&q.symbol)?);
            let k = kernel_from_symbol(&a, q.tau, g)?;
            let sup = k.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            println!("grid\t{},{}", g.n(), g.l());
            println!("tau\t{}", q.tau);
            println!("sup_abs\t{}", fmt(sup));
            if let Some(path) = emit {
                std::fs::write(&path, k.to_tsv()).map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                println!("written\t{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn calculus(cmd: CalculusCmd) -> Result<ExitCode> {
    match cmd {
        CalculusCmd::ChangeQuant {
            symbol,
            tau1,
            tau,
            n,
            v,
        } => {
            let a = resolve_symbol(&symbol)?;
            print_series(&change_quantization_terms(&a, tau1, tau, n)?);
            if v.verify {
                print_residuals(&verify_quantization_change(
                    &a,
                    tau1,
                    tau,
                    n,
                    &testfns(&v.grid, 4)?,
                    None,
                )?);
            }
        }
        CalculusCmd::Compose { a, b, n, v } => {
            let (a, b) = (resolve_symbol(&a)?, resolve_symbol(&b)?);
            print_series(&composition_terms(&a, &b, n)?);
            if v.verify {
                print_residuals(&verify_composition(&a, &b, n, &testfns(&v.grid, 4)?)?);
            }
        }
        CalculusCmd::Transpose { symbol, tau, n, v } => {
            let a = resolve_symbol(&symbol)?;
            print_series(&transpose_terms(&a, tau, n)?);
            if v.verify {
                print_residuals(&verify_transpose(&a, tau, n, &testfns(&v.grid, 3)?)?);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cmd: VerifyCmd) -> Result<ExitCode> {
    match cmd {
        VerifyCmd::Run {
            suite,
            config,
            set,
            out,
        } => {
            let mut cfg = load_config(&config, &set)?;
            if let Some(s) = suite {
                cfg.suite = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let bundle = harness::run(&cfg)?;
            let dir = bundle.write(&cfg.out_dir)?;
            print!("{}", bundle.summary());
            println!("wrote\t{}", dir.display());
            Ok(status(bundle.passed()))
        }
        VerifyCmd::Fixtures => {
            println!("kind\tname\tdescription");
            for f in fixtures::fixtures() {
                println!("{}\t{}\t{}", f.kind.as_str(), f.name, f.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        VerifyCmd::Config { config, set } => {
            let cfg = load_config(&config, &set)?;
            cfg.validate()?;
            print!("{}", cfg.canonical());
            println!("# hash {}", cfg.hash());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = harness::init_threads().and_then(|_| match cli.cmd {
        Cmd::Weights(c) => weights(c),
        Cmd::Ultrapoly(c) => ultrapoly(c),
        Cmd::Mollify(c) => mollify(c),
        Cmd::Symbols(c) => symbols(c),
        Cmd::Quantize(c) => quantize(c),
        Cmd::Calculus(c) => calculus(c),
        Cmd::Verify(c) => verify(c),
    });
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
