use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "rcp", version, about = "Renewal contact process experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; overrides "seed" in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Result file; a manifest is written next to it. Standard output if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn json_arg(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[derive(Default)]
struct Overrides(Map<String, Value>);

impl Overrides {
    fn set<T: Serialize>(mut self, key: &str, v: &Option<T>) -> Self {
        if let Some(v) = v {
            self.0.insert(key.into(), serde_json::to_value(v).expect("flag values serialise"));
        }
        self
    }

    fn flag(mut self, key: &str, on: bool) -> Self {
        if on {
            self.0.insert(key.into(), Value::Bool(true));
        }
        self
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival frequency of the infection started from {0}, or one trajectory.
    Simulate(SimulateArgs),
    /// Bisection for the finite-box pseudo-critical infection rate.
    LambdaC(LambdaCArgs),
    /// Renewal mass table u_k of an arithmetic law.
    Renewal(RenewalArgs),
    /// Window criterion for the atomic renewal measure and the choice of nu.
    WindowCheck(WindowCheckArgs),
    /// Percolation trials on the wedge.
    Percolate(PercolateArgs),
    /// Monte Carlo check of the closure and independence properties.
    PropertyCheck(PropertyCheckArgs),
    /// Exhaustive contour count c_n against (n-1)3^(n-2).
    Contours(ContoursArgs),
    /// Contour series S(epsilon), partial sums and tail.
    Peierls(PeierlsArgs),
}

impl Command {
    /// Subcommand flags as config keys.
    pub fn overrides(&self) -> Map<String, Value> {
        let o = Overrides::default();
        let o = match self {
            Command::Simulate(a) => o
                .set("distribution", &a.distribution)
                .set("lambda", &a.lambda)
                .set("box_half_width", &a.box_half_width)
                .set("horizon", &a.horizon)
                .set("trials", &a.trials)
                .flag("trajectory", a.trajectory),
            Command::LambdaC(a) => o
                .set("distribution", &a.distribution)
                .set("box_half_width", &a.box_half_width)
                .set("horizon", &a.horizon)
                .set("bracket", &a.bracket)
                .set("survival_threshold", &a.survival_threshold)
                .set("trials", &a.trials),
            Command::Renewal(a) => o.set("distribution", &a.distribution).set("k_max", &a.k_max),
            Command::WindowCheck(a) => o
                .set("distribution", &a.distribution)
                .set("kappa", &a.kappa)
                .set("mass_tolerance", &a.mass_tolerance)
                .set("trials", &a.trials),
            Command::Percolate(a) => a.model.apply(o).set("H", &a.height).set("trials", &a.trials),
            Command::PropertyCheck(a) => a
                .model
                .apply(o)
                .set("property", &a.property)
                .set("edges", &(!a.edges.is_empty()).then_some(&a.edges))
                .set("trials", &a.trials),
            Command::Contours(a) => o.set("n", &a.n),
            Command::Peierls(a) => o.set("epsilon", &a.epsilon).set("nmax", &a.nmax),
        };
        o.0
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Interarrival law as JSON, e.g. '{"type":"exponential","rate":1}'.
    #[arg(long, value_parser = json_arg)]
    pub distribution: Option<Value>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub box_half_width: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Emit the event log (time, vertex, event_type) of trial 0.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args)]
pub struct LambdaCArgs {
    #[arg(long, value_parser = json_arg)]
    pub distribution: Option<Value>,
    #[arg(long)]
    pub box_half_width: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    /// Initial bracket as LO,HI.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bracket: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub survival_threshold: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenewalArgs {
    #[arg(long, value_parser = json_arg)]
    pub distribution: Option<Value>,
    #[arg(long)]
    pub k_max: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WindowCheckArgs {
    #[arg(long, value_parser = json_arg)]
    pub distribution: Option<Value>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass_tolerance: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// iid, induced_arithmetic, induced_window or synthetic_regen.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bias: Option<f64>,
    /// Block size M of the arithmetic construction.
    #[arg(long)]
    pub block_size: Option<u32>,
    /// Time step d per row of the arithmetic construction.
    #[arg(long, allow_negative_numbers = true)]
    pub row_time: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = json_arg)]
    pub distribution: Option<Value>,
}

impl ModelArgs {
    fn apply(&self, o: Overrides) -> Overrides {
        o.set("model", &self.model)
            .set("p", &self.p)
            .set("bias", &self.bias)
            .set("M", &self.block_size)
            .set("d", &self.row_time)
            .set("nu", &self.nu)
            .set("lambda", &self.lambda)
            .set("distribution", &self.distribution)
    }
}

#[derive(Debug, Args)]
pub struct PercolateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Wedge height H.
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PropertyCheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// I or II.
    #[arg(long)]
    pub property: Option<String>,
    /// Edge as ne:x:y or nw:x:y; repeat for several.
    #[arg(long = "edge")]
    pub edges: Vec<String>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ContoursArgs {
    /// Contour length.
    #[arg(long)]
    pub n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PeierlsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Last term of the partial sum.
    #[arg(long)]
    pub nmax: Option<u64>,
}
