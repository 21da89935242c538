//! Command-line front end: run configuration, the `run` and `mesh`
//! subcommands, and the artifact writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adapt::{adaptive_loop_with, LoopConfig, Mode, RunOutput, RunRecord};
use crate::assembly::Scheme;
use crate::estimators::Policy;
use crate::mesh::io::SvgStyle;
use crate::mesh::{Domain, Triangulation};
use crate::postprocess::{nodal_average, ptilde_all};
use crate::problem::{Benchmark, KelloggCase};
use crate::verify::{effectivity, eoc};
use crate::{Error, Result};

pub const HISTORY_HEADER: &str = "k,dof,E_k,eta_k,eta_D,eta_R,eta_NC,eta_C,eta_U,xi,EOC_E,EOC_eta,effectivity";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    pub scheme: Scheme,
    pub policy: Policy,
    pub theta: f64,
    pub mode: Mode,
    pub max_dof: usize,
    pub max_iter: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(benchmark: Benchmark) -> Self {
        let (theta, scheme, policy) = match benchmark {
            Benchmark::LShape => (0.5, Scheme::Centered, Policy::Theorem),
            Benchmark::Kellogg(KelloggCase::One) => (0.7, Scheme::Centered, Policy::Xi),
            Benchmark::Kellogg(KelloggCase::Two) => (0.94, Scheme::Centered, Policy::Xi),
            Benchmark::Layer { .. } => (0.5, Scheme::Upwind, Policy::Theorem),
        };
        Self {
            benchmark,
            scheme,
            policy,
            theta,
            mode: Mode::Adaptive,
            max_dof: 100_000,
            max_iter: 200,
            out: PathBuf::from("out"),
        }
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            scheme: self.scheme,
            policy: self.policy,
            theta: self.theta,
            mode: self.mode,
            max_dof: self.max_dof,
            max_iter: self.max_iter,
        }
    }

    /// `key=value` lines accepted by [`RunConfig::parse`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "benchmark={}", self.benchmark.id()).unwrap();
        if let Benchmark::Layer { eps, a } = self.benchmark {
            writeln!(out, "eps={eps}\na={a}").unwrap();
        }
        writeln!(out, "scheme={}", self.scheme).unwrap();
        writeln!(out, "policy={}", self.policy).unwrap();
        writeln!(out, "theta={}", self.theta).unwrap();
        writeln!(out, "mode={}", self.mode).unwrap();
        writeln!(out, "max-dof={}", self.max_dof).unwrap();
        writeln!(out, "max-iter={}", self.max_iter).unwrap();
        writeln!(out, "out={}", self.out.display()).unwrap();
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::resolve(&parse_pairs(text)?, &[])
    }

    /// Builds a config from file entries overridden by flag entries; the
    /// benchmark decides the defaults.
    pub fn resolve(file: &[(String, String)], flags: &[(String, String)]) -> Result<Self> {
        let lookup = |key: &str| {
            flags.iter().chain(file.iter()).find(|(k, _)| k == key).map(|(_, v)| v.as_str())
        };
        let benchmark: Benchmark = lookup("benchmark").unwrap_or("lshape").parse()?;
        let mut config = Self::defaults(benchmark);
        for (k, v) in file.iter().chain(flags.iter()) {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::Parse(format!("`{key}` expects a number, got `{v}`")))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>().map_err(|_| Error::Parse(format!("`{key}` expects a non-negative integer, got `{v}`")))
        };
        match key {
            "benchmark" => {
                let b: Benchmark = value.parse()?;
                if b.id() != self.benchmark.id() {
                    return Err(Error::Parse(format!("conflicting `benchmark={value}`")));
                }
            }
            "eps" | "a" => {
                let Benchmark::Layer { eps, a } = &mut self.benchmark else {
                    return Err(Error::Parse(format!("`{key}` only applies to the layer benchmark")));
                };
                let slot = if key == "eps" { eps } else { a };
                *slot = num(value)?;
            }
            "scheme" => self.scheme = value.parse()?,
            "policy" => self.policy = value.parse()?,
            "theta" => self.theta = num(value)?,
            "mode" => self.mode = value.parse()?,
            "max-dof" => self.max_dof = count(value)?,
            "max-iter" => self.max_iter = count(value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter(format!("`theta` must lie in (0, 1], got {}", self.theta)));
        }
        if let Benchmark::Layer { eps, a } = self.benchmark {
            if !(eps > 0.0) || !(a > 0.0) {
                return Err(Error::InvalidParameter(format!("layer parameters must be positive, got eps={eps}, a={a}")));
            }
        }
        if self.max_iter == 0 || self.max_dof == 0 {
            return Err(Error::InvalidParameter("`max-iter` and `max-dof` must be positive".into()));
        }
        Ok(())
    }
}

/// `key=value` per line; blank lines and `#` comments skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{l}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "mixed-afem", version, about = "Adaptive RT0 mixed finite elements for convection-diffusion-reaction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an adaptive or uniform refinement study.
    Run(RunArgs),
    /// Write an initial or uniformly refined mesh without solving.
    Mesh(MeshArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// key=value file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub benchmark: Option<String>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "max-dof")]
    pub max_dof: Option<String>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the per-iteration progress lines.
    #[arg(long)]
    pub quiet: bool,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => parse_pairs(&fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        let mut flags = Vec::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                flags.push((k.to_string(), v.clone()));
            }
        };
        push("benchmark", &self.benchmark);
        push("eps", &self.eps);
        push("a", &self.a);
        push("scheme", &self.scheme);
        push("policy", &self.policy);
        push("theta", &self.theta);
        push("mode", &self.mode);
        push("max-dof", &self.max_dof);
        push("max-iter", &self.max_iter);
        push("out", &self.out.as_ref().map(|p| p.display().to_string()));
        // a flag benchmark replaces the file's choice outright
        let file = if self.benchmark.is_some() {
            file.into_iter().filter(|(k, _)| k != "benchmark").collect()
        } else {
            file
        };
        RunConfig::resolve(&file, &flags)
    }
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// lshape, square2x2 or unit-square.
    #[arg(long, default_value = "lshape")]
    pub domain: String,
    /// Number of uniform refinement sweeps.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn num_field(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "nan".to_string(),
    }
}

/// History table with convergence rates and effectivity indices.
pub fn history_csv(records: &[RunRecord]) -> String {
    let dofs: Vec<usize> = records.iter().map(|r| r.dof).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.error.unwrap_or(f64::NAN)).collect();
    let etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    let eoc_e = eoc(&errors, &dofs);
    let eoc_eta = eoc(&etas, &dofs);
    let eff = effectivity(&etas, &errors);
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        let f = &r.families;
        let rate = |v: &[Option<f64>]| if i == 0 { None } else { v[i - 1] };
        let cells = [
            num_field(r.error),
            num_field(Some(r.eta)),
            num_field(Some(f.eta_d)),
            num_field(Some(f.eta_r)),
            num_field(Some(f.eta_nc)),
            num_field(Some(f.eta_c)),
            num_field(Some(f.eta_u)),
            num_field(Some(f.xi)),
            num_field(rate(&eoc_e)),
            num_field(rate(&eoc_eta)),
            num_field(eff[i]),
        ];
        writeln!(out, "{},{},{}", r.k, r.dof, cells.join(",")).unwrap();
    }
    out
}

/// Runs a configured study and writes its artifacts into `config.out`.
pub fn execute(config: &RunConfig, verbose: bool) -> Result<RunOutput> {
    config.validate()?;
    let setup = config.benchmark.setup()?;
    let output = adaptive_loop_with(setup.mesh, &setup.problem, Some(&setup.exact), &config.loop_config(), |it| {
        if verbose {
            let r = it.record;
            eprintln!(
                "k={:>3} dof={:>8} E={:.6e} eta={:.6e} ({:.2}s)",
                r.k,
                r.dof,
                r.error.unwrap_or(f64::NAN),
                r.eta,
                r.wall_time
            );
        }
        Ok(())
    })?;

    let out = &config.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), config.render())?;
    fs::write(out.join("history.csv"), history_csv(&output.records))?;
    fs::write(out.join("estimators.csv"), output.estimators.to_csv())?;
    fs::write(out.join("mesh_final.txt"), output.mesh.to_dump())?;
    fs::write(out.join("mesh_final.svg"), output.mesh.to_svg(Some(&output.estimators.totals()), &SvgStyle::default()))?;
    if let Benchmark::Layer { .. } = config.benchmark {
        let q = ptilde_all(&output.mesh, &setup.problem, &output.solution);
        let nodal = nodal_average(&output.mesh, &q);
        let mut csv = String::from("vertex,x,y,value\n");
        for (z, v) in nodal.iter().enumerate() {
            let p = output.mesh.vertices()[z];
            writeln!(csv, "{z},{:.16e},{:.16e},{v:.16e}", p.x, p.y).unwrap();
        }
        fs::write(out.join("ptilde_nodal.csv"), csv)?;
    }
    Ok(output)
}

pub fn write_mesh(args: &MeshArgs) -> Result<Triangulation> {
    let domain: Domain = args.domain.parse()?;
    let mut mesh = Triangulation::initial(domain);
    for _ in 0..args.refine {
        mesh = mesh.uniform_refine()?;
    }
    write_mesh_files(&mesh, &args.out)?;
    Ok(mesh)
}

fn write_mesh_files(mesh: &Triangulation, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("mesh.txt"), mesh.to_dump())?;
    fs::write(out.join("mesh.svg"), mesh.to_svg(None, &SvgStyle::default()))?;
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let config = args.to_config()?;
            let output = execute(&config, !args.quiet)?;
            let last = output.records.last().expect("at least one record");
            println!(
                "{}: {} iterations, final dof {}, eta {:.6e}, stop {:?}; artifacts in {}",
                config.benchmark,
                output.records.len(),
                last.dof,
                last.eta,
                output.stop,
                config.out.display()
            );
            Ok(())
        }
        Command::Mesh(args) => {
            let mesh = write_mesh(args)?;
            println!("{} elements written to {}", mesh.num_elements(), args.out.display());
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn benchmark_defaults() {
        let c = RunConfig::resolve(&[], &flags(&[("benchmark", "kellogg1")])).unwrap();
        assert_eq!((c.theta, c.policy), (0.7, Policy::Xi));
        let c = RunConfig::resolve(&[], &flags(&[("benchmark", "kellogg2")])).unwrap();
        assert_eq!(c.theta, 0.94);
        let c = RunConfig::resolve(&[], &flags(&[("benchmark", "layer")])).unwrap();
        assert_eq!((c.theta, c.scheme), (0.5, Scheme::Upwind));
    }

    #[test]
    fn errors_name_the_token() {
        let e = RunConfig::resolve(&[], &flags(&[("theta", "1.5")])).unwrap_err();
        assert!(e.to_string().contains("theta"));
        let e = RunConfig::resolve(&flags(&[("colour", "red")]), &[]).unwrap_err();
        assert!(e.to_string().contains("colour"));
        let e = RunConfig::resolve(&[], &flags(&[("eps", "0.1")])).unwrap_err();
        assert!(e.to_string().contains("eps"));
        let e = RunConfig::resolve(&[], &flags(&[("max-dof", "lots")])).unwrap_err();
        assert!(e.to_string().contains("lots"));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_pairs("# study\nbenchmark=layer\neps=0.001\ntheta = 0.3\n").unwrap();
        let c = RunConfig::resolve(&file, &flags(&[("theta", "0.6")])).unwrap();
        assert_eq!(c.theta, 0.6);
        assert_eq!(c.benchmark, Benchmark::Layer { eps: 0.001, a: 0.05 });
    }

    #[test]
    fn render_round_trip() {
        let mut c = RunConfig::defaults(Benchmark::Layer { eps: 1e-3, a: 0.1 });
        c.theta = 0.123456789012345;
        c.out = PathBuf::from("runs/layer");
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn history_marks_missing_values() {
        let r = RunRecord {
            k: 1,
            dof: 8,
            error: None,
            eta: 1.0,
            families: Default::default(),
            wall_time: 0.0,
        };
        let csv = history_csv(&[r]);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("1,8,nan,"));
        assert_eq!(row.split(',').count(), HISTORY_HEADER.split(',').count());
    }
}
