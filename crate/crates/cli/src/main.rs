//! `cantor-rings`: JSON front end over `cantor-core`.
//!
//! Exit codes: 0 success or Certified, 1 usage error, 2 Failed, 3 Inconclusive.

mod input;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cantor-rings", version, about = "Rational maps whose Julia sets are Cantor sets of circles")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "CANTOR_RINGS_THREADS")]
    pub threads: Option<usize>,
    /// Seed for any randomized sampling
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

/// Where the spec comes from: a preset, a file, or stdin.
#[derive(Args, Debug, Clone)]
pub struct SpecSource {
    /// Spec JSON file, `-` or absent for stdin
    pub spec: Option<String>,
    /// Named preset: fig1, fig1-mcmullen, fig4, fig5
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapsArg {
    Budget,
    Empirical,
    Auto,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Escape,
    Basin,
    Itinerary,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize parameters from the inequality budget
    Synth {
        #[arg(short = 'p', value_parser = clap::value_parser!(u8).range(0..=1))]
        p: u8,
        /// Comma-separated degrees d_1..d_n
        #[arg(short = 'd', long = "degrees")]
        degrees: String,
        /// Fraction of the largest admissible s
        #[arg(long, default_value_t = 1.0)]
        shrink: f64,
        /// Emit {spec, budget} instead of the bare spec
        #[arg(long)]
        with_budget: bool,
    },
    /// Evaluate every budget inequality for a spec
    Audit {
        #[command(flatten)]
        src: SpecSource,
    },
    /// Predict and refine the free critical points
    Critical {
        #[command(flatten)]
        src: SpecSource,
    },
    /// Certify the Cantor-circle structure
    Certify {
        #[command(flatten)]
        src: SpecSource,
        #[arg(long, value_enum, default_value_t = TrapsArg::Auto)]
        traps: TrapsArg,
        /// Inner trap radius (empirical mode)
        #[arg(long)]
        s: Option<f64>,
        /// Outer trap radius (empirical mode)
        #[arg(long)]
        outer: Option<f64>,
        /// Samples per circle
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Band itineraries of given or random points
    Itinerary {
        #[command(flatten)]
        src: SpecSource,
        /// Starting point `re,im`; repeatable
        #[arg(long = "z")]
        z: Vec<String>,
        /// Number of random starting points in the bands
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 8)]
        length: usize,
    },
    /// Radial interval of the Julia component with a given itinerary prefix
    Locate {
        #[command(flatten)]
        src: SpecSource,
        /// Comma-separated band symbols
        #[arg(long)]
        prefix: String,
        /// Ray angle in radians
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// The parabolic families
    Parabolic {
        #[command(subcommand)]
        family: ParabolicCommand,
    },
    /// Render a PPM image
    Render {
        #[command(flatten)]
        src: SpecSource,
        #[arg(long, default_value = "0,0")]
        center: String,
        #[arg(long, default_value_t = 0.15)]
        halfwidth: f64,
        /// `W` or `WxH`
        #[arg(long, default_value = "512")]
        px: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Basin)]
        mode: ModeArg,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Render even when certification does not succeed
        #[arg(long)]
        force: bool,
    },
    /// Print a preset spec
    Preset { name: String },
}

#[derive(Args, Debug, Clone)]
pub struct ParabolicActions {
    #[arg(long)]
    pub certify: bool,
    #[arg(long)]
    pub critical: bool,
    #[arg(long)]
    pub fixed_check: bool,
    /// Samples per boundary circle
    #[arg(long)]
    pub samples: Option<usize>,
    /// Angular radius of the exclusions at parabolic contact points
    #[arg(long)]
    pub exclusion: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ParabolicCommand {
    /// P_lambda with a parabolic fixed point at 0
    Plambda {
        #[arg(long, default_value_t = 3)]
        m: u32,
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// |lambda|
        #[arg(long, default_value_t = 1e-10)]
        lambda: f64,
        /// arg(lambda) in radians
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
        #[command(flatten)]
        actions: ParabolicActions,
    },
    /// P_n with a parabolic fixed point at 1
    Pn {
        #[arg(long, default_value_t = 3)]
        n: u32,
        /// |b_i| = s^i; defaults to 1/(25 n^2)
        #[arg(long)]
        s: Option<f64>,
        #[command(flatten)]
        actions: ParabolicActions,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("{}", serde_json::json!({ "error": format!("thread pool: {e}") }));
            return ExitCode::from(1);
        }
    }
    match run::run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let mut obj = serde_json::json!({ "error": e.message });
            if let Some(p) = e.path {
                obj["path"] = serde_json::Value::String(p);
            }
            eprintln!("{obj}");
            ExitCode::from(1)
        }
    }
}
