//! Command-line front end: evaluation, typing, type spaces, decompositions,
//! relabelings, and the randomized differential test driver.
//!
//! Exit codes, uniformly: 0 holds/pass, 1 does-not-hold, 2 input or
//! resource error, 3 property violation. Every JSON result is a single
//! document on stdout; diagnostics go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use msou::compose::bottom_up_type;
use msou::corpus::{
    self, run_context_suite, run_suite, CaseCheck, GenParams, SuiteReport,
};
use msou::decompose::{
    apply_relabeling, build_mso_formula, build_relabeling, build_root_decomposition,
    check_mso_rewrite, check_root_decomposition,
};
use msou::oracle::{direct_type, eval};
use msou::parser::parse_formula;
use msou::tree::{parse_tree, parse_valuation};
use msou::typespace::{reachable_types, tv, TypeSpace};
use msou::{Config, Error, Formula, Tree, Valuation};

#[derive(Parser)]
#[command(name = "msou", version, about = "MSO+U on finite ranked trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigOpts {
    /// Alphabet letters, comma separated.
    #[arg(long, default_value = "a,b")]
    alphabet: String,

    /// Maximal arity of trees.
    #[arg(long, default_value_t = 2)]
    rmax: usize,

    /// Node cap for subset enumeration (also env MSOU_NODE_CAP).
    #[arg(long)]
    node_cap: Option<usize>,

    /// Step budget for a single evaluation.
    #[arg(long)]
    eval_budget: Option<u64>,

    /// Cap on reachable type space sizes.
    #[arg(long)]
    max_types: Option<usize>,

    /// AST-node budget for synthesized formulas.
    #[arg(long)]
    formula_budget: Option<usize>,
}

impl ConfigOpts {
    fn build(&self) -> anyhow::Result<Config> {
        let letters: Vec<&str> = self
            .alphabet
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let mut config = Config::new(letters, self.rmax)?;
        if let Some(cap) = self.node_cap {
            config.limits.node_cap = cap;
        } else if let Ok(env_cap) = std::env::var("MSOU_NODE_CAP") {
            config.limits.node_cap = env_cap
                .parse()
                .map_err(|_| anyhow!("MSOU_NODE_CAP must be a positive integer"))?;
        }
        if let Some(budget) = self.eval_budget {
            config.limits.eval_steps = budget;
        }
        if let Some(cap) = self.max_types {
            config.limits.max_types = cap;
        }
        if let Some(budget) = self.formula_budget {
            config.limits.formula_nodes = budget;
        }
        Ok(config)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TypeMethod {
    /// Subset enumeration over the whole tree.
    Direct,
    /// Bottom-up composition over the tree structure.
    Comp,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a tree. Exit 0 when it holds, 1 when not.
    Eval {
        formula: PathBuf,
        tree: PathBuf,
        valuation: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Compute the logical type of a tree under a valuation.
    Type {
        formula: PathBuf,
        tree: PathBuf,
        valuation: Option<PathBuf>,
        /// How to compute the type.
        #[arg(long, value_enum, default_value = "direct")]
        method: TypeMethod,
        /// Run both methods and fail (exit 3) on mismatch.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Differential check: both typing methods on one input.
    CompCheck {
        formula: PathBuf,
        tree: PathBuf,
        valuation: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// The reachable type space of a formula.
    Typespace {
        formula: PathBuf,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// The root decomposition tuple set, as a JSON array of arrays.
    DecomposeRoot {
        formula: PathBuf,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Check the root decomposition equivalence on one tree.
    CheckRoot {
        formula: PathBuf,
        tree: PathBuf,
        valuation: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Build the relabeling sentences and the MSO formula over the product
    /// alphabet.
    Rewrite {
        formula: PathBuf,
        /// Also write the letter legend to this file.
        #[arg(long)]
        legend_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Relabel a tree by the sentences built from a formula.
    Relabel {
        formula: PathBuf,
        tree: PathBuf,
        /// Also write the letter legend to this file.
        #[arg(long)]
        legend_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Check the relabeling rewrite equivalence on one tree.
    CheckRewrite {
        formula: PathBuf,
        tree: PathBuf,
        valuation: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigOpts,
    },
    /// Generate random cases and run the differential property suites.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cases for the per-tree suites; the decomposition suites run a
        /// fifth of this.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 6)]
        max_nodes: usize,
        #[arg(long, default_value_t = 2)]
        max_qdepth: usize,
        /// Soft bound on generated formula size.
        #[arg(long, default_value_t = 9)]
        max_fsize: usize,
        #[command(flatten)]
        config: ConfigOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn read_formula(path: &Path) -> anyhow::Result<Formula> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading formula file {}", path.display()))?;
    Ok(parse_formula(&text)?)
}

fn read_tree(path: &Path, config: &Config) -> anyhow::Result<Tree> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tree file {}", path.display()))?;
    let tree = parse_tree(&text)?;
    tree.validate(config)?;
    Ok(tree)
}

fn read_valuation(path: Option<&PathBuf>, tree: &Tree) -> anyhow::Result<Valuation> {
    let Some(path) = path else {
        return Ok(Valuation::empty());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading valuation file {}", path.display()))?;
    let nu = parse_valuation(&text)?;
    nu.check_in(tree)?;
    Ok(nu)
}

fn emit(value: &Value) {
    println!("{value}");
}

fn legend_json(space: &TypeSpace) -> Value {
    let mut legend = serde_json::Map::new();
    for (idx, tau) in space.reachable.iter().enumerate() {
        legend.insert(format!("t{idx}"), Value::String(tau.to_string()));
    }
    Value::Object(legend)
}

fn write_legend(path: Option<&PathBuf>, legend: &Value) -> anyhow::Result<()> {
    if let Some(path) = path {
        std::fs::write(path, format!("{legend}\n"))
            .with_context(|| format!("writing legend file {}", path.display()))?;
    }
    Ok(())
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Eval {
            formula,
            tree,
            valuation,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let nu = read_valuation(valuation.as_ref(), &tree)?;
            let holds = eval(&phi, &tree, &nu, &config)?;
            emit(&json!({ "holds": holds }));
            Ok(if holds { 0 } else { 1 })
        }

        Command::Type {
            formula,
            tree,
            valuation,
            method,
            check,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let nu = read_valuation(valuation.as_ref(), &tree)?;
            if check {
                return comp_check(&phi, &tree, &nu, &config);
            }
            let tau = match method {
                TypeMethod::Direct => direct_type(&phi, &tree, &nu, &config)?,
                TypeMethod::Comp => bottom_up_type(&phi, &tree, &nu, &config)?,
            };
            let truth = tv(&phi, &tau)?;
            emit(&json!({ "type": tau.to_string(), "tv": truth }));
            Ok(if truth { 0 } else { 1 })
        }

        Command::CompCheck {
            formula,
            tree,
            valuation,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let nu = read_valuation(valuation.as_ref(), &tree)?;
            comp_check(&phi, &tree, &nu, &config)
        }

        Command::Typespace { formula, config } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let space = reachable_types(&phi, &config)?;
            let reach: Vec<String> = space.reachable.iter().map(|t| t.to_string()).collect();
            let truthy: Vec<String> = space.truthy.iter().map(|t| t.to_string()).collect();
            emit(&json!({
                "formula": phi.to_string(),
                "reachable": reach,
                "truthy": truthy,
            }));
            Ok(0)
        }

        Command::DecomposeRoot { formula, config } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let omega = build_root_decomposition(&phi, &config)?;
            let tuples: Vec<Vec<String>> = omega
                .tuples
                .iter()
                .map(|t| {
                    std::iter::once(t.root.to_string())
                        .chain(t.children.iter().map(|c| c.to_string()))
                        .collect()
                })
                .collect();
            emit(&json!(tuples));
            Ok(0)
        }

        Command::CheckRoot {
            formula,
            tree,
            valuation,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let nu = read_valuation(valuation.as_ref(), &tree)?;
            let omega = build_root_decomposition(&phi, &config)?;
            let report = check_root_decomposition(&phi, &tree, &nu, &omega, &config)?;
            let witness: Option<Vec<String>> = report.witness.as_ref().map(|t| {
                std::iter::once(t.root.to_string())
                    .chain(t.children.iter().map(|c| c.to_string()))
                    .collect()
            });
            emit(&json!({
                "lhs": report.lhs,
                "rhs": report.rhs,
                "witness": witness,
            }));
            Ok(if report.lhs == report.rhs { 0 } else { 3 })
        }

        Command::Rewrite {
            formula,
            legend_out,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let space = reachable_types(&phi, &config)?;
            let relabeling = build_relabeling(&phi, &config)?;
            let mso = build_mso_formula(&phi, &config)?;
            let mut sentences = serde_json::Map::new();
            for (letter, sentence) in &relabeling.sentences {
                sentences.insert(letter.to_string(), Value::String(sentence.to_string()));
            }
            let legend = legend_json(&space);
            write_legend(legend_out.as_ref(), &legend)?;
            emit(&json!({
                "relabeling": Value::Object(sentences),
                "legend": legend,
                "mso_formula": mso.to_string(),
            }));
            Ok(0)
        }

        Command::Relabel {
            formula,
            tree,
            legend_out,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let space = reachable_types(&phi, &config)?;
            let relabeling = build_relabeling(&phi, &config)?;
            match apply_relabeling(&relabeling, &tree, &config) {
                Ok(relabeled) => {
                    let legend = legend_json(&space);
                    write_legend(legend_out.as_ref(), &legend)?;
                    emit(&json!({
                        "tree": relabeled.to_string(),
                        "legend": legend,
                    }));
                    Ok(0)
                }
                // Built relabelings must be defined on every tree; treat a
                // uniqueness failure as a property violation.
                Err(Error::NotUnique { addr, holding }) => {
                    eprintln!("relabeling not unique at {addr}: {holding} sentences hold");
                    Ok(3)
                }
                Err(other) => Err(other.into()),
            }
        }

        Command::CheckRewrite {
            formula,
            tree,
            valuation,
            config,
        } => {
            let config = config.build()?;
            let phi = read_formula(&formula)?;
            let tree = read_tree(&tree, &config)?;
            let nu = read_valuation(valuation.as_ref(), &tree)?;
            let report = check_mso_rewrite(&phi, &tree, &nu, &config)?;
            emit(&json!({
                "lhs": report.lhs,
                "rhs": report.rhs,
                "relabeled_tree": report.relabeled.to_string(),
            }));
            Ok(if report.lhs == report.rhs { 0 } else { 3 })
        }

        Command::Fuzz {
            seed,
            cases,
            max_nodes,
            max_qdepth,
            max_fsize,
            config,
        } => {
            if max_nodes == 0 || max_fsize == 0 {
                return Err(anyhow!("--max-nodes and --max-fsize must be positive"));
            }
            let config = config.build()?;
            let params = GenParams {
                max_formula_size: max_fsize,
                max_qdepth,
                max_tree_nodes: max_nodes,
                ..GenParams::default()
            };
            let deep_cases = (cases / 5).max(usize::from(cases > 0));
            let suites: Vec<(&str, &CaseCheck, usize)> = vec![
                ("type-agreement", &corpus::type_agreement_case, cases),
                ("truth-bridge", &corpus::truth_bridge_case, cases),
                ("unbound-degeneracy", &corpus::unbound_degeneracy_case, cases),
                ("round-trip", &corpus::roundtrip_case, cases),
                ("root-decomposition", &corpus::decomposition_case, deep_cases),
                ("rewrite", &corpus::rewrite_case, deep_cases),
            ];
            let mut reports: Vec<SuiteReport> = suites
                .into_iter()
                .map(|(name, check, n)| run_suite(name, check, seed, n, &config, &params))
                .collect();
            reports.push(run_context_suite(seed, if cases == 0 { 0 } else { deep_cases }, &config, &params));

            let mut suites_json = serde_json::Map::new();
            let mut counterexamples = Vec::new();
            let mut failures = 0usize;
            for report in &reports {
                failures += report.failures.len();
                suites_json.insert(
                    report.suite.clone(),
                    json!({
                        "cases": report.cases,
                        "passed": report.passed,
                        "skipped": report.skipped,
                        "failed": report.failures.len(),
                    }),
                );
                for cex in &report.failures {
                    counterexamples.push(json!({
                        "suite": report.suite,
                        "formula": cex.formula.to_string(),
                        "tree": cex.tree.to_string(),
                        "valuation": cex.valuation.to_string(),
                        "detail": cex.detail,
                    }));
                }
            }
            emit(&json!({
                "seed": seed,
                "failures": failures,
                "suites": Value::Object(suites_json),
                "counterexamples": counterexamples,
            }));
            Ok(if failures == 0 { 0 } else { 3 })
        }
    }
}

fn comp_check(phi: &Formula, tree: &Tree, nu: &Valuation, config: &Config) -> anyhow::Result<u8> {
    let direct = direct_type(phi, tree, nu, config)?;
    let composed = bottom_up_type(phi, tree, nu, config)?;
    let agree = direct == composed;
    let truth = tv(phi, &direct)?;
    emit(&json!({
        "type": direct.to_string(),
        "tv": truth,
        "direct": direct.to_string(),
        "comp": composed.to_string(),
        "agree": agree,
    }));
    if !agree {
        return Ok(3);
    }
    Ok(if truth { 0 } else { 1 })
}
