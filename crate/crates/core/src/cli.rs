//! Command-line driver. [`run`] returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::growth::{cm_weight, enumerate_trees, linear_extensions, realization_coefficient, tree_factorial, GrowthRule};
use crate::jets::{Mode, Scalar};
use crate::multiindex::{contraction_oracle, counting_map, phi_expand, realization_multi, symmetry_factor_multi, FeynmanMultiIndex};
use crate::series::{evaluate_series, expand, SdeProblem, TruncatedSeries};
use crate::tree::{merged_poset, ExoticTree};
use crate::verification::{euler_maruyama_estimate, identity_suite, init_thread_pool, mc_tolerance, McConfig, MC_BIAS_CONSTANT};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "exotic-bseries", version, about = "Exotic B-series for scalar Itô diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect and enumerate exotic trees
    #[command(subcommand)]
    Trees(TreesCmd),
    /// Inspect Feynman multi-indices
    #[command(subcommand)]
    Multi(MultiCmd),
    /// Expand E[f(u_t)] as a truncated power series
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Run the identity suite and print one JSON line per identity
    Verify {
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
    /// Compare the series with an Euler–Maruyama estimate
    Mc(McArgs),
}

#[derive(Subcommand, Debug)]
enum TreesCmd {
    /// List canonical trees up to a number of edges
    Enumerate {
        #[arg(long)]
        order: usize,
        /// fertility bounds such as `a:2,b:1,root:*`
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the combinatorial weights of one tree
    Info {
        tree: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum MultiCmd {
    /// Gradings, symmetry factor, trees and pairing counts of a multi-index
    Info {
        index: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum SeriesCmd {
    Expand {
        #[arg(long)]
        sde: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Trees)]
        method: MethodArg,
    },
    /// Expand by all three methods and fail on any mismatch
    Compare {
        #[arg(long)]
        sde: PathBuf,
        #[arg(long)]
        order: usize,
    },
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    sde: PathBuf,
    #[arg(long = "t")]
    t: f64,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Trees,
    Multi,
    Operator,
}

impl From<MethodArg> for crate::series::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Trees => crate::series::Method::Trees,
            MethodArg::Multi => crate::series::Method::Multi,
            MethodArg::Operator => crate::series::Method::Operator,
        }
    }
}

struct Failure(i32, String);

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure(EXIT_INPUT, e.to_string())
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if code == EXIT_PASS { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    init_thread_pool();
    let result = match cli.command {
        Command::Trees(TreesCmd::Enumerate { order, rule, format }) => trees_enumerate(order, rule.as_deref(), format, out),
        Command::Trees(TreesCmd::Info { tree, format }) => trees_info(&tree, format, out),
        Command::Multi(MultiCmd::Info { index, format }) => multi_info(&index, format, out),
        Command::Series(SeriesCmd::Expand { sde, order, method }) => series_expand(&sde, order, method, out),
        Command::Series(SeriesCmd::Compare { sde, order }) => series_compare(&sde, order, out),
        Command::Verify { max_order } => verify(max_order, out),
        Command::Mc(a) => mc(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    writeln!(out, "{text}").map_err(|e| Failure(EXIT_FAILURE, e.to_string()))?;
    Ok(EXIT_PASS)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn trees_enumerate(order: usize, rule: Option<&str>, format: Format, out: &mut dyn Write) -> Outcome {
    let rule: GrowthRule = match rule {
        Some(r) => r.parse().map_err(|e: crate::growth::RuleParseError| input(format!("invalid --rule `{}`", e.0)))?,
        None => GrowthRule::default(),
    };
    let levels = enumerate_trees(order, Some(&rule));
    match format {
        Format::Text => {
            let lines: Vec<&str> = levels.iter().flatten().map(|t| t.key()).collect();
            emit(out, &lines.join("\n"))
        }
        Format::Json => {
            let v = json!({
                "order": order,
                "rule": rule.to_string(),
                "levels": levels.iter().enumerate().map(|(k, l)| json!({
                    "edge_count": k,
                    "count": l.len(),
                    "trees": l.iter().map(|t| t.key()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            emit(out, &pretty(&v))
        }
    }
}

fn tree_summary(t: &ExoticTree) -> Vec<(&'static str, Value)> {
    vec![
        ("tree", json!(t.key())),
        ("exotic_order", json!(t.exotic_order())),
        ("edge_count", json!(t.edge_count())),
        ("alpha_count", json!(t.alpha_count())),
        ("beta_count", json!(t.beta_count())),
        ("symmetry", json!(t.automorphism_count().to_string())),
        ("tree_factorial", json!(tree_factorial(t).to_string())),
        ("cm_weight", json!(cm_weight(t).to_string())),
        ("realization_coefficient", json!(realization_coefficient(t).to_string())),
        ("linear_extensions", json!(linear_extensions(&merged_poset(t)).to_string())),
        ("multi_index", json!(counting_map(t).to_string())),
    ]
}

fn render(fields: Vec<(&'static str, Value)>, format: Format) -> String {
    match format {
        Format::Json => pretty(&Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())),
        Format::Text => fields
            .into_iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}: {s}"),
                Value::Array(xs) => format!("{k}: {}", xs.iter().map(|x| x.as_str().map_or(x.to_string(), str::to_string)).collect::<Vec<_>>().join(" ")),
                other => format!("{k}: {other}"),
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn trees_info(text: &str, format: Format, out: &mut dyn Write) -> Outcome {
    let t = ExoticTree::parse(text).map_err(input)?;
    emit(out, &render(tree_summary(&t), format))
}

fn multi_info(text: &str, format: Format, out: &mut dyn Write) -> Outcome {
    let g: FeynmanMultiIndex = text.parse().map_err(input)?;
    let gr = g.gradings();
    let mut fields = vec![
        ("index", json!(g.to_string())),
        ("length", json!(gr.length)),
        ("psi_legs", json!(gr.psi_legs)),
        ("tilde_legs", json!(gr.tilde_legs)),
        ("populated", json!(gr.populated)),
        ("symmetry_factor", json!(symmetry_factor_multi(&g).to_string())),
    ];
    if gr.populated {
        let guard = 6;
        let phi = phi_expand(&g, guard).map_err(input)?;
        fields.push(("phi", json!(phi.iter().map(|(t, w)| format!("{w}*{}", t.key())).collect::<Vec<_>>())));
        let pi = realization_multi(&g, guard).map_err(input)?;
        fields.push(("realization", json!(pi.iter().map(|(k, c)| format!("{c}*t^{k}")).collect::<Vec<_>>())));
        if let Ok(oracle) = contraction_oracle(&g) {
            fields.push(("pairings", json!(oracle.iter().map(|(k, c)| format!("{c}*{k}")).collect::<Vec<_>>())));
        }
    }
    emit(out, &render(fields, format))
}

fn load(path: &PathBuf) -> Result<SdeProblem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    SdeProblem::from_json(&text).map_err(input)
}

fn series_json(s: &TruncatedSeries) -> Value {
    serde_json::from_str(&s.to_json()).expect("series json parses")
}

fn series_expand(path: &PathBuf, order: usize, method: MethodArg, out: &mut dyn Write) -> Outcome {
    let p = load(path)?;
    let s = expand(&p, order, method.into()).map_err(input)?;
    emit(out, &s.to_json())
}

fn series_compare(path: &PathBuf, order: usize, out: &mut dyn Write) -> Outcome {
    let p = load(path)?;
    let methods = [MethodArg::Trees, MethodArg::Multi, MethodArg::Operator];
    let all = methods.iter().map(|&m| expand(&p, order, m.into())).collect::<Result<Vec<_>, _>>().map_err(input)?;
    for (m, s) in methods.iter().zip(&all).skip(1) {
        if let Some(k) = all[0].first_difference(s) {
            let show = |s: &TruncatedSeries| s.coeff(k).map_or("0".to_string(), Scalar::to_string);
            let v = json!({
                "order": order,
                "agree": false,
                "first_difference": k,
                "trees": show(&all[0]),
                format!("{m:?}").to_lowercase(): show(s),
            });
            emit(out, &v.to_string())?;
            return Err(Failure(EXIT_DISAGREE, format!("methods disagree at power {k}")));
        }
    }
    emit(out, &json!({"order": order, "agree": true, "series": series_json(&all[0])}).to_string())
}

fn verify(max_order: usize, out: &mut dyn Write) -> Outcome {
    let report = identity_suite(max_order);
    let lines: Vec<String> = report.iter().map(|r| r.to_json_line()).collect();
    emit(out, &lines.join("\n"))?;
    Ok(if report.iter().all(|r| r.passed()) { EXIT_PASS } else { EXIT_FAILURE })
}

fn mc(a: &McArgs, out: &mut dyn Write) -> Outcome {
    let config = McConfig::new(a.t, a.step, a.paths, a.seed).map_err(input)?;
    let p = load(&a.sde)?;
    let series = expand(&p, a.order, crate::series::Method::Trees).map_err(input)?;
    let value = evaluate_series(&series, &Scalar::Float(a.t)).to_f64();
    let float = SdeProblem { u0: Scalar::Float(p.u0.to_f64()), mode: Mode::Float, ..p };
    let est = euler_maruyama_estimate(&float, &config).map_err(input)?;
    let tol = mc_tolerance(&est, config.step);
    let diff = (value - est.mean).abs();
    let pass = diff <= tol;
    let v = json!({
        "t": a.t,
        "order": a.order,
        "series_value": value,
        "mc_mean": est.mean,
        "std_error": est.std_error,
        "paths": est.paths,
        "discarded": est.discarded,
        "step": config.step,
        "seed": config.seed,
        "bias_constant": MC_BIAS_CONSTANT,
        "difference": diff,
        "tolerance": tol,
        "status": if pass { "pass" } else { "fail" },
        "generator": est.generator,
    });
    emit(out, &pretty(&v))?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAILURE })
}
