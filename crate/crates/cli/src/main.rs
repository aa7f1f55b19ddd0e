use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lfmra::analysis::{construct, report_for, sweep, CheckOptions, StepFn};
use lfmra::gf::{find_irreducible, Field, FieldRef};
use lfmra::mra::{lambdas_from_json, mask_to_coefficients, LambdaExps, MaskJson, MaskTable, SpectrumTable};
use lfmra::numeric::{float_report, turns_from_json, LambdaTurnsJson};
use lfmra::synthesis::{extract_indicator, grid_text, phi_csv, phi_grid_view, spectrum_grid_view, Indicator};
use lfmra::trees::{enumerate, tree_count, RootedTree, TreeJson, DEFAULT_ENUM_CAP};
use lfmra::Error;

#[derive(Parser)]
#[command(name = "lfmra", version, about = "Tree-generated multiresolution analyses on local fields of positive characteristic")]
struct Cli {
    /// Largest number of trees an exhaustive enumeration may produce.
    #[arg(long, global = true, env = "LOCALFIELD_MRA_CAP", default_value_t = DEFAULT_ENUM_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    cap: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Finite field utilities.
    Field {
        #[command(subcommand)]
        cmd: FieldCmd,
    },
    /// Generate, list and check rooted trees.
    Tree {
        #[command(subcommand)]
        cmd: TreeCmd,
    },
    /// Construct mask, spectrum, scaling function and coefficients for a tree.
    Build(BuildArgs),
    /// Run every criterion on a tree and write report.json.
    Verify(VerifyArgs),
    /// Verify all trees of a field, or a seeded sample of them.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Print the default modulus for GF(p^s), constant coefficient first.
    FindIrreducible {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        s: u32,
    },
}

#[derive(Args, Clone)]
struct FieldArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    s: u32,
    /// Comma-separated monic modulus, constant coefficient first.
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
}

impl FieldArgs {
    fn field(&self) -> lfmra::Result<FieldRef> {
        match &self.modulus {
            Some(m) => Field::new(self.p, self.s, m.clone()),
            None => Field::with_default_modulus(self.p, self.s),
        }
    }
}

#[derive(Subcommand)]
enum TreeCmd {
    /// A uniformly random tree.
    Random {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Every tree, one JSON object per line.
    Enumerate {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Check a tree file and print its height.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Edge exponents: {"entries": [{"i": "1,1", "j": "0,0", "exp": 1}]}.
    #[arg(long)]
    lambdas: Option<PathBuf>,
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, conflicts_with = "float_lambdas")]
    lambdas: Option<PathBuf>,
    /// Arbitrary phases {"entries": [{"i", "j", "turns"}]}, checked in
    /// floating point. Such a report never certifies.
    #[arg(long)]
    float_lambdas: Option<PathBuf>,
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = CheckOptions::default().brute_force_cap)]
    brute_force_cap: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Check N random trees instead of all of them.
    #[arg(long, requires = "seed")]
    sample: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the summary as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

enum Failure {
    Lib(Error),
    Io(String, std::io::Error),
    Parse(String, serde_json::Error),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Lib(e) => json!({"error": error_kind(e), "message": e.to_string()}),
            Failure::Io(path, e) => json!({"error": "Io", "path": path, "message": e.to_string()}),
            Failure::Parse(path, e) => json!({"error": "Json", "path": path, "message": e.to_string()}),
            Failure::Other(m) => json!({"error": "Usage", "message": m}),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Run<T> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(name.clone(), e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(name, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Run<()> {
    fs::write(path, contents).map_err(|e| Failure::Io(path.display().to_string(), e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Run<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(path, text)
}

fn load_tree(path: &Path) -> Run<RootedTree> {
    let json: TreeJson = read_json(path)?;
    Ok(RootedTree::from_json(&json)?)
}

fn load_lambdas(field: &FieldRef, path: Option<&Path>) -> Run<LambdaExps> {
    match path {
        Some(p) => Ok(lambdas_from_json(field, &read_json::<MaskJson>(p)?)?),
        None => Ok(LambdaExps::new()),
    }
}

fn make_dir(dir: &Path) -> Run<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.display().to_string(), e))
}

fn cmd_tree(cmd: TreeCmd, cap: u64) -> Run<bool> {
    match cmd {
        TreeCmd::Random { field, seed, out } => {
            let t = RootedTree::random(field.field()?, seed);
            let text = serde_json::to_string_pretty(&t.to_json()).expect("serializable");
            match out {
                Some(path) => write(&path, text + "\n")?,
                None => println!("{text}"),
            }
        }
        TreeCmd::Enumerate { field } => {
            let f = field.field()?;
            let mut n = 0u64;
            for t in enumerate(f, cap as u128)? {
                println!("{}", serde_json::to_string(&t.to_json()).expect("serializable"));
                n += 1;
            }
            eprintln!("{n} trees");
        }
        TreeCmd::Validate { file } => {
            let t = load_tree(&file)?;
            println!("{}", json!({"valid": true, "height": t.height(), "M": t.height() - 2}));
        }
    }
    Ok(true)
}

/// Reloads each artifact and compares it with what was written.
fn reload_check(field: &FieldRef, mask: &MaskTable, spec: &SpectrumTable, phi: &StepFn) -> Run<()> {
    let m2 = MaskTable::from_json(&mask.to_json(), Some(field.clone()))?;
    let s2 = SpectrumTable::from_json(&spec.to_json(), Some(field.clone()))?;
    let p2 = StepFn::from_json(&phi.to_json())?;
    if m2.nonzero() != mask.nonzero() || s2 != *spec || p2 != *phi {
        return Err(Failure::Other("an artifact did not reload to the same value".into()));
    }
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Run<bool> {
    let tree = load_tree(&args.tree)?;
    let field = tree.field().clone();
    let lambdas = load_lambdas(&field, args.lambdas.as_deref())?;
    let c = construct(&tree, &lambdas)?;
    reload_check(&field, &c.mask, &c.spectrum, &c.phi)?;
    make_dir(&args.out)?;
    let out = |name: &str| args.out.join(name);
    write_json(&out("mask.json"), &c.mask.to_json())?;
    write_json(&out("spectrum.json"), &c.spectrum.to_json())?;
    write_json(&out("phi.json"), &c.phi.to_json())?;
    write(&out("phi.csv"), phi_csv(&c.phi))?;
    write_json(&out("coeffs.json"), &mask_to_coefficients(&c.mask).to_json())?;
    let indicator = match extract_indicator(&c.phi)? {
        Indicator::Set(set) => {
            let names: Vec<String> = set.cosets.iter().map(|s| s.format(&field)).collect();
            json!({"indicator": true, "cosets": names, "measure": set.measure.to_string()})
        }
        Indicator::NotIndicator { digits, value } => {
            let d: Vec<String> = digits.iter().map(|&x| field.format(x)).collect();
            json!({"indicator": false, "digits": d, "value": value.to_string()})
        }
    };
    write_json(&out("indicator.json"), &indicator)?;
    let mut written = vec!["mask.json", "spectrum.json", "phi.json", "phi.csv", "coeffs.json", "indicator.json"];
    match (phi_grid_view(&c.phi), spectrum_grid_view(&c.spectrum)) {
        (Ok(phi), Ok(spec)) => {
            write(&out("grid.txt"), grid_text(&phi))?;
            write(&out("spectrum_grid.txt"), grid_text(&spec))?;
            written.extend(["grid.txt", "spectrum_grid.txt"]);
        }
        (Err(e), _) | (_, Err(e)) => eprintln!("{}", json!({"note": "grid views skipped", "reason": e.to_string()})),
    }
    println!(
        "{}",
        json!({"height": tree.height(), "M": c.spectrum.m(), "out": args.out.display().to_string(), "written": written})
    );
    Ok(true)
}

fn cmd_verify(args: VerifyArgs) -> Run<bool> {
    let tree = load_tree(&args.tree)?;
    let field = tree.field().clone();
    make_dir(&args.out)?;
    let path = args.out.join("report.json");
    if let Some(fl) = &args.float_lambdas {
        let turns = turns_from_json(&field, &read_json::<LambdaTurnsJson>(fl)?)?;
        let r = float_report(&tree, &turns)?;
        write_json(&path, &r)?;
        let pass = r.criteria.iter().all(|v| v.pass);
        println!("{}", json!({"numeric_pass": pass, "certified_mra": false, "report": path.display().to_string()}));
        // tolerance checks never count as a pass
        return Ok(false);
    }
    let lambdas = load_lambdas(&field, args.lambdas.as_deref())?;
    let opts = CheckOptions {
        brute_force_cap: args.brute_force_cap,
        ..CheckOptions::default()
    };
    let c = construct(&tree, &lambdas)?;
    let r = report_for(&tree, &c, &opts);
    write_json(&path, &r)?;
    for v in &r.criteria {
        let state = match (&v.skipped, v.pass) {
            (Some(_), _) => "skipped",
            (None, true) => "pass",
            (None, false) => "FAIL",
        };
        println!("{:<36} {state}", v.name);
    }
    println!("certified_mra: {}", r.certified_mra);
    Ok(r.certified_mra)
}

fn cmd_sweep(args: SweepArgs, cap: u64) -> Run<bool> {
    use rand::SeedableRng;
    let f = args.field.field()?;
    let trees: Vec<RootedTree> = match (args.sample, args.seed) {
        (Some(n), Some(seed)) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| RootedTree::random_with(f.clone(), &mut rng)).collect()
        }
        _ => enumerate(f.clone(), cap as u128)?.collect(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Other(e.to_string()))?;
    let summary = pool.install(|| sweep(&trees, &CheckOptions::default()))?;
    let total = tree_count(f.order()).map_or("overflow".to_string(), |n| n.to_string());
    println!("GF({}^{}): {} of {} trees", f.p(), f.s(), summary.trees, total);
    println!("{} trees, {} certified", summary.trees, summary.certified);
    println!("height  trees");
    for (h, n) in &summary.height_histogram {
        println!("{h:>6}  {n}");
    }
    for (i, failed) in summary.failures.iter().take(20) {
        println!("tree {i}: failed {}", failed.join(", "));
    }
    if let Some(path) = &args.json {
        let hist: BTreeMap<String, u64> = summary.height_histogram.iter().map(|(h, n)| (h.to_string(), *n)).collect();
        write_json(
            path,
            &json!({"trees": summary.trees, "certified": summary.certified, "height_histogram": hist, "failures": summary.failures}),
        )?;
    }
    Ok(summary.certified == summary.trees)
}

fn run(cli: Cli) -> Run<bool> {
    match cli.cmd {
        Cmd::Field {
            cmd: FieldCmd::FindIrreducible { p, s },
        } => {
            let m = find_irreducible(p, s)?;
            println!("{}", json!({"p": p, "s": s, "modulus": m}));
            Ok(true)
        }
        Cmd::Tree { cmd } => cmd_tree(cmd, cli.cap),
        Cmd::Build(a) => cmd_build(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Sweep(a) => cmd_sweep(a, cli.cap),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
