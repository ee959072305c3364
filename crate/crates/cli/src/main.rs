//! Command-line entry point.
//!
//! ```text
//! cpnym <SUITE> [--config PATH] [--seed N] [--resolution N]
//!               [--format json|text] [--quick] [--timings]
//!
//! suites: verify-geometry | verify-killing | verify-bochner |
//!         verify-variation | stability | gap | all
//! ```
//!
//! Exit codes: 0 all selected checks pass, 1 at least one check failed,
//! 2 usage or configuration error. Thread count is controlled only by the
//! RAYON_NUM_THREADS environment variable.

use cpnym_cli::{emit_report, run_suite, Format, SuiteConfig, SuiteId};
use std::process::ExitCode;

const USAGE: &str = "usage: cpnym <SUITE> [OPTIONS]

suites:
  verify-geometry    metric, curvature tensors, volume quadrature
  verify-killing     Killing basis, covariant derivatives, isotropy split
  verify-bochner     form calculus, Bochner-Weizenboeck, curvature expansion
  verify-variation   second variation, basis sums, estimate bounds
  stability          second variation along the Killing family
  gap                threshold, Laplacian identity, inequality chain (needs n >= 2)
  all                every suite applicable to the configured dimension

options:
  --config PATH      key-value configuration file (see README)
  --seed N           RNG seed (default 7)
  --resolution N     per-axis quadrature resolution (default 64)
  --format FMT       json | text (default text)
  --quick            reduced sample counts and resolutions
  --timings          include wall times (breaks byte-for-byte reproducibility)
";

fn fail_usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("{USAGE}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        return fail_usage("missing suite");
    }
    let mut cfg = SuiteConfig::default();
    let suites = match args[0].as_str() {
        "verify-geometry" => vec![SuiteId::Geometry],
        "verify-killing" => vec![SuiteId::Killing],
        "verify-bochner" => vec![SuiteId::Bochner],
        "verify-variation" => vec![SuiteId::Variation],
        "stability" => vec![SuiteId::Stability],
        "gap" => vec![SuiteId::Gap],
        "all" => SuiteId::all(),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        other => return fail_usage(&format!("unknown suite `{other}`")),
    };
    let mut format = Format::Text;
    let mut timings = false;
    let mut i = 1;
    while i < args.len() {
        let take_value = |i: &mut usize| -> Result<String, String> {
            *i += 1;
            args.get(*i)
                .cloned()
                .ok_or_else(|| format!("flag `{}` needs a value", args[*i - 1]))
        };
        match args[i].as_str() {
            "--config" => {
                let path = match take_value(&mut i) {
                    Ok(v) => v,
                    Err(e) => return fail_usage(&e),
                };
                let text = match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => return fail_usage(&format!("cannot read `{path}`: {e}")),
                };
                if let Err(e) = cfg.apply_file(&text) {
                    return fail_usage(&e.to_string());
                }
            }
            "--seed" => match take_value(&mut i) {
                Ok(v) => match v.parse() {
                    Ok(s) => cfg.seed = s,
                    Err(e) => return fail_usage(&format!("config field `seed`: {e}")),
                },
                Err(e) => return fail_usage(&e),
            },
            "--resolution" => match take_value(&mut i) {
                Ok(v) => match v.parse() {
                    Ok(s) => cfg.resolution = s,
                    Err(e) => return fail_usage(&format!("config field `resolution`: {e}")),
                },
                Err(e) => return fail_usage(&e),
            },
            "--format" => match take_value(&mut i) {
                Ok(v) => match v.as_str() {
                    "json" => format = Format::Json,
                    "text" => format = Format::Text,
                    other => return fail_usage(&format!("unknown format `{other}`")),
                },
                Err(e) => return fail_usage(&e),
            },
            "--quick" => cfg.quick = true,
            "--timings" => timings = true,
            other => return fail_usage(&format!("unknown flag `{other}`")),
        }
        i += 1;
    }
    if let Err(e) = cfg.validate() {
        return fail_usage(&e.to_string());
    }
    // the gap analysis is only defined for n >= 2: explicit request at n = 1
    // is a configuration error, `all` simply omits it
    let explicit_gap = suites == vec![SuiteId::Gap];
    if explicit_gap && cfg.n < 2 {
        return fail_usage("config field `n`: the gap suite needs n >= 2");
    }
    cfg.suites = suites
        .into_iter()
        .filter(|s| !(matches!(s, SuiteId::Gap) && cfg.n < 2))
        .collect();
    let results = run_suite(&cfg);
    print!("{}", emit_report(&cfg, &results, format, timings));
    if results.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
