//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::catalog::{build_model, describe, dispersion_class, CatalogModel, InarModel};
use crate::decompose::{pmf_from_decomposition, InnovationDistribution, DEFAULT_TARGET_MASS};
use crate::simulate::{simulate_replicates, write_csv, SeriesSample, SimulationConfig};
use crate::verify::{full_suite, SuiteOptions, VerificationReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "finar", version, about = "Innovation distributions of geometric-type INAR(1) models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive the innovation distribution and print its decomposition and pmf.
    Derive {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Mass the emitted pmf table must capture.
        #[arg(long, default_value_t = DEFAULT_TARGET_MASS)]
        truncation_mass: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate stationary trajectories as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Output file; with several replicates each goes to `<stem>_<replicate>.<ext>`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the verification suite; exit status 1 when any check fails.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Length of the simulated series for the empirical checks (0 skips them).
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the models and their parameter constraints.
    Catalog {
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinningArg {
    #[serde(alias = "binomial-thinning")]
    Binomial,
    #[value(alias = "nb", alias = "negative_binomial")]
    #[serde(alias = "negative-binomial", alias = "nb")]
    NegativeBinomial,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model name (see `finar catalog`).
    pub name: Option<String>,
    /// JSON model spec `{"model": .., "params": {..}, "thinning": {..}}`; flags override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, value_enum)]
    pub thinning: Option<ThinningArg>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecThinning {
    Name(ThinningArg),
    Object { kind: ThinningArg, alpha: Option<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    model: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    thinning: Option<SpecThinning>,
}

/// Parameters each model accepts.
fn accepted(name: &str) -> &'static [&'static str] {
    match name {
        "ginar" => &["theta", "alpha"],
        "nginar" => &["mu", "alpha"],
        "zmg" => &["mu", "k", "alpha"],
        "two-param" => &["r", "m", "alpha"],
        _ => &["mu", "rho", "alpha"],
    }
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<CatalogModel, String> {
        let mut params = BTreeMap::new();
        let mut thinning = None;
        let mut name = None;
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let doc: SpecDocument =
                serde_json::from_str(&text).map_err(|e| format!("invalid model spec {}: {e}", path.display()))?;
            name = Some(doc.model);
            params = doc.params;
            match doc.thinning {
                Some(SpecThinning::Name(t)) => thinning = Some(t),
                Some(SpecThinning::Object { kind, alpha }) => {
                    thinning = Some(kind);
                    if let Some(a) = alpha {
                        params.insert("alpha".into(), a);
                    }
                }
                None => {}
            }
        }
        if let Some(n) = &self.name {
            name = Some(n.clone());
        }
        let name = name.ok_or("a model name or --spec is required")?;
        let flags = [
            ("theta", self.theta),
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("rho", self.rho),
            ("k", self.k),
            ("r", self.r),
            ("m", self.m),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                params.insert(key.into(), v);
            }
        }
        if let Some(t) = self.thinning {
            thinning = Some(t);
        }
        if crate::catalog::MODEL_NAMES.contains(&name.as_str()) {
            let allowed = accepted(&name);
            if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(format!("parameter `{extra}` does not apply to model `{name}` (accepts {})", allowed.join(", ")));
            }
        }
        let nb = thinning.map(|t| t == ThinningArg::NegativeBinomial);
        CatalogModel::from_params(&name, &params, nb).map_err(|e| e.to_string())
    }
}

fn pmf_rows(d: &InnovationDistribution<f64>) -> Vec<Value> {
    d.table().iter().enumerate().map(|(m, &p)| json!({ "m": m, "p": p })).collect()
}

fn derive_document(model: &InarModel, table: &InnovationDistribution<f64>) -> Value {
    let d = model.innovation.decomposition();
    let mixture: Vec<Value> = d
        .geometric_mixture()
        .into_iter()
        .map(|(c, mu)| json!({ "weight": c, "mean": mu }))
        .collect();
    let linear = model.linear.map(|l| {
        json!({
            "a": l.a, "b": l.b, "c": l.c, "d": l.d,
            "atom": l.atom(), "s1": l.s1(), "rho": l.rho(), "theta": l.theta(),
        })
    });
    json!({
        "model": model.model,
        "method": model.method,
        "innovation_pgf": {
            "num": model.innovation_pgf.num().coeffs(),
            "den": model.innovation_pgf.den().coeffs(),
        },
        "decomposition": {
            "atoms": d.atom_poly.coeffs(),
            "terms": d.terms,
            "mixture": mixture,
        },
        "hurdle": model.hurdle,
        "linear": linear,
        "constraints": model.constraints,
        "moments": model.moments,
        "dispersion": dispersion_class(&model.moments),
        "discrepancies": model.discrepancies,
        "tabulation": table.summary(),
        "pmf": table.table(),
        "pmf_table": pmf_rows(table),
    })
}

fn derive_table(model: &InarModel, table: &InnovationDistribution<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model      {}", model.model.name());
    let _ = writeln!(out, "method     {:?}", model.method);
    let d = model.innovation.decomposition();
    let _ = writeln!(out, "atoms      {:?}", d.atom_poly.coeffs());
    for t in &d.terms {
        let _ = writeln!(out, "term       rho = {:<22} s = {}", t.rho, t.root);
    }
    if let Some(h) = &model.hurdle {
        let _ = writeln!(out, "hurdle     pi = {} p1 = {} p2 = {} w1 = {} w2 = {}", h.pi, h.p1, h.p2, h.w1, h.w2);
    }
    for c in &model.constraints {
        let flag = if c.satisfied { "ok" } else if c.required { "FAIL" } else { "note" };
        let _ = writeln!(out, "constraint {:<4} {} (margin {})", flag, c.name, c.margin);
    }
    let m = &model.moments;
    let _ = writeln!(out, "innovation mean {} variance {} dispersion {}", m.innovation_mean, m.innovation_var, m.innovation_dispersion);
    let _ = writeln!(out, "marginal   mean {} variance {} dispersion {}", m.marginal_mean, m.marginal_var, m.marginal_dispersion);
    let _ = writeln!(out, "m\tp");
    for (i, p) in table.table().iter().enumerate() {
        let _ = writeln!(out, "{i}\t{p}");
    }
    out
}

fn report_table(r: &VerificationReport) -> String {
    let mut out = String::new();
    for c in &r.checks {
        let _ = writeln!(
            out,
            "{} {}: observed {:e} expected {:e} tolerance {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.expected,
            c.tolerance
        );
    }
    let _ = writeln!(out, "overall {}", if r.overall { "PASS" } else { "FAIL" });
    out
}

fn emit(text: &str, output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn replicate_path(base: &Path, stream: u64) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{stream}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{stream}"),
    };
    base.with_file_name(name)
}

fn series_text(samples: &[SeriesSample], format: Format) -> String {
    match format {
        Format::Json => json_text(&json!(samples)),
        Format::Csv | Format::Table => {
            let mut buf = Vec::new();
            write_csv(samples, &mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("ascii csv")
        }
    }
}

/// Runs one parsed command; returns the exit status.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<u8, String> {
    match cli.command {
        Command::Derive { model, format, truncation_mass, output } => {
            let built = build_model(&model.resolve()?).map_err(|e| e.to_string())?;
            let table = if truncation_mass == DEFAULT_TARGET_MASS {
                built.innovation.clone()
            } else {
                pmf_from_decomposition(built.innovation.decomposition(), truncation_mass).map_err(|e| e.to_string())?
            };
            let text = match format {
                Format::Json => json_text(&derive_document(&built, &table)),
                Format::Csv => {
                    let mut s = String::from("m,p\n");
                    for (i, p) in table.table().iter().enumerate() {
                        let _ = writeln!(s, "{i},{p}");
                    }
                    s
                }
                Format::Table => derive_table(&built, &table),
            };
            emit(&text, output.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { model, n, seed, replicates, burn_in, format, output } => {
            if replicates == 0 {
                return Err("--replicates must be at least 1".into());
            }
            let built = build_model(&model.resolve()?).map_err(|e| e.to_string())?;
            let cfg = SimulationConfig { n, burn_in, seed };
            let samples = simulate_replicates(&built, &cfg, replicates).map_err(|e| e.to_string())?;
            match &output {
                Some(base) if samples.len() > 1 => {
                    for s in &samples {
                        emit(&series_text(std::slice::from_ref(s), format), Some(&replicate_path(base, s.stream)), stdout)?;
                    }
                }
                _ => emit(&series_text(&samples, format), output.as_deref(), stdout)?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify { model, n, seed, burn_in, grid_points, tolerance, format, output } => {
            let built = build_model(&model.resolve()?).map_err(|e| e.to_string())?;
            let sample = if n > 0 {
                let cfg = SimulationConfig { n, burn_in, seed };
                Some(crate::simulate::simulate_series(&built, &cfg, 0).map_err(|e| e.to_string())?)
            } else {
                None
            };
            let opts = SuiteOptions { grid_points, tolerance, ..SuiteOptions::default() };
            let report = full_suite(&built, sample.as_ref(), &opts);
            let text = match format {
                Format::Json => json_text(&json!(report)),
                Format::Csv => {
                    let mut s = String::from("name,passed,observed,expected,tolerance\n");
                    for c in &report.checks {
                        let _ = writeln!(s, "\"{}\",{},{},{},{}", c.name, c.passed, c.observed, c.expected, c.tolerance);
                    }
                    s
                }
                Format::Table => report_table(&report),
            };
            emit(&text, output.as_deref(), stdout)?;
            Ok(if report.overall { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Catalog { format } => {
            let rows = describe();
            let text = match format {
                Format::Json => json_text(&json!(rows
                    .iter()
                    .map(|(n, p, c)| json!({ "model": n, "params": p, "constraints": c }))
                    .collect::<Vec<_>>())),
                Format::Csv => {
                    let mut s = String::from("model,params,constraints\n");
                    for (n, p, c) in &rows {
                        let _ = writeln!(s, "{n},\"{p}\",\"{c}\"");
                    }
                    s
                }
                Format::Table => {
                    let mut s = String::new();
                    for (n, p, c) in &rows {
                        let _ = writeln!(s, "{n:<16} {p:<28} {c}");
                    }
                    s
                }
            };
            emit(&text, None, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs the command; help and version go to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, stdout, stderr),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("finar").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn derive_ginar_json() {
        let (code, out, _) = run_str(&["derive", "ginar", "--theta", "0.5", "--alpha", "0.5"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let pmf = v["pmf"].as_array().unwrap();
        assert_eq!(pmf[0].as_f64(), Some(0.75));
        assert_eq!(pmf[1].as_f64(), Some(0.125));
        assert_eq!(pmf[2].as_f64(), Some(0.0625));
        assert_eq!(v["pmf_table"][1]["m"], 1);
    }

    #[test]
    fn negative_flag_values() {
        let (code, out, err) = run_str(&["derive", "zmg", "--mu", "2", "--k", "-0.4", "--format", "csv"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("m,p\n0,"));
    }

    #[test]
    fn invalid_region_exit_two() {
        let (code, _, err) = run_str(&["derive", "nginar", "--mu", "1", "--alpha", "0.6"]);
        assert_eq!(code, 2);
        assert!(err.contains("alpha <= mu/(1+mu)"), "{err}");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_str(&["derive"]).0, 2);
        assert_eq!(run_str(&["derive", "ginar", "--theta", "0.5", "--alpha", "0.1", "--rho", "0.2"]).0, 2);
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn replicate_paths() {
        assert_eq!(replicate_path(Path::new("/tmp/run.csv"), 3), PathBuf::from("/tmp/run_3.csv"));
        assert_eq!(replicate_path(Path::new("out"), 0), PathBuf::from("out_0"));
    }
}
