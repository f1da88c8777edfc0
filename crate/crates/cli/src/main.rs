use campanato_core::experiment::{config::criterion_suite, criteria, report, ExperimentConfig, SUITES};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Run the numerical check suites and write CSV and summary reports.
#[derive(Parser, Debug)]
#[command(name = "campanato", version)]
struct Args {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated suite names; an empty value selects none.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    suite: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every suite in this dimension only.
    #[arg(long)]
    n: Option<usize>,
    /// Smoothness index for the s-dependent suites (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    s: Vec<f64>,
    /// Base quadrature level.
    #[arg(long)]
    level: Option<u32>,
    /// Run single criteria by number instead of whole suites (prints only).
    #[arg(long, value_delimiter = ',')]
    criterion: Vec<u32>,
    /// Print the documented default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

fn build_config(args: &Args) -> campanato_core::Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    if let Some(s) = &args.suite {
        c.suites = s.iter().filter(|x| !x.is_empty()).cloned().collect();
    }
    if let Some(o) = &args.out {
        c.out = o.clone();
    }
    if args.n.is_some() {
        c.params.n = args.n;
    }
    if !args.s.is_empty() {
        c.params.s = Some(args.s.clone());
    }
    if let Some(l) = args.level {
        c.level = l;
    }
    if !args.criterion.is_empty() {
        // Check only the hypotheses of the suites the criteria belong to.
        let mut suites: Vec<String> = Vec::new();
        for id in &args.criterion {
            let Some(s) = criterion_suite(*id) else {
                return Err(campanato_core::Error::Config(format!("no criterion {id}")));
            };
            if !suites.iter().any(|x| x == s) {
                suites.push(s.to_string());
            }
        }
        c.suites = suites;
    }
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.print_defaults {
        print!("{}", ExperimentConfig::reference());
        return ExitCode::SUCCESS;
    }
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("campanato: {e}");
            eprintln!("known suites: {}", SUITES.join(", "));
            return ExitCode::from(2);
        }
    };
    if !args.criterion.is_empty() {
        let mut ok = true;
        for &id in &args.criterion {
            let t = Instant::now();
            let o = criteria::run(id, &config);
            println!("{} ({:.1} s)", o.summary_line(), t.elapsed().as_secs_f64());
            for c in &o.checks {
                println!("    {}", report::csv_row(o.id, c));
            }
            ok &= o.pass();
        }
        return if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    }
    let start = Instant::now();
    let mut last = Instant::now();
    let result = report::run_suites_with(&config, |o| {
        println!("{} ({:.1} s)", o.summary_line(), last.elapsed().as_secs_f64());
        last = Instant::now();
    });
    match result {
        Ok(summary) => {
            println!(
                "{} suite(s), overall {} in {:.1} s; reports in {}",
                summary.suites.len(),
                if summary.pass { "pass" } else { "FAIL" },
                start.elapsed().as_secs_f64(),
                config.out.display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("campanato: {e}");
            ExitCode::from(2)
        }
    }
}
