use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};

use rasm::condition::ConstraintSet;
use rasm::graph::{TypeGraph, TypedGraph};
use rasm::instances::{birth_death, prbt};
use rasm::json::load_rule_set;
use rasm::rewrite::{Rule, Semantics};
use rasm::species::Observable;
use rasm::Q;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Dpo,
    Sqpo,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Built-in system: prbt, birthdeath or birthdeath:conditioned.
    #[arg(long, default_value = "prbt")]
    pub system: String,
    /// JSON rule-set file replacing the rules of the system.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Initial state: `empty`, a vertex count (birthdeath), or `root` (prbt).
    #[arg(long)]
    pub initial: Option<String>,
    /// Rewriting semantics; defaults to the system's own.
    #[arg(long, value_enum)]
    pub semantics: Option<SemanticsArg>,
}

/// Everything a command needs to know about the rule system.
#[derive(Debug, Clone)]
pub struct System {
    pub types: Arc<TypeGraph>,
    pub rules: Vec<(Q, Rule)>,
    pub initial: TypedGraph,
    pub constraints: Option<ConstraintSet>,
    pub semantics: Semantics,
    pub observables: Vec<Observable>,
}

impl System {
    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    pub fn require(&self, names: &[&str]) -> Result<(), CliError> {
        match names.iter().find(|n| self.observable(n).is_none()) {
            Some(n) => Err(CliError::Usage(format!("this command needs the observable `{n}`"))),
            None => Ok(()),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.name.clone()).collect()
    }

    pub fn constraint_set(&self) -> ConstraintSet {
        self.constraints.clone().unwrap_or_else(ConstraintSet::none)
    }
}

fn parse_initial(arg: &str, sys: &System, bd: bool) -> Result<TypedGraph, CliError> {
    match arg {
        "empty" => Ok(TypedGraph::empty(&sys.types)),
        "root" if !bd => Ok(prbt::make_initial_tree(&sys.types)),
        s if bd => s
            .parse::<usize>()
            .map(|n| birth_death::points(&sys.types, n))
            .map_err(|_| CliError::Usage(format!("bad --initial `{s}`: expected `empty` or a vertex count"))),
        s => Err(CliError::Usage(format!(
            "bad --initial `{s}`: expected `empty` or `root`"
        ))),
    }
}

pub fn resolve(args: &SystemArgs) -> Result<System, CliError> {
    let bd = args.system.starts_with("birthdeath");
    let mut sys = match args.system.as_str() {
        "prbt" => {
            let p = prbt::make_remy_system();
            System {
                initial: prbt::make_initial_tree(&p.types),
                types: p.types,
                rules: p.rules,
                constraints: Some(p.constraints),
                semantics: Semantics::Sqpo,
                observables: p.observables,
            }
        }
        "birthdeath" | "birthdeath:conditioned" => {
            let b = birth_death::make_birth_death(args.system.ends_with(":conditioned"));
            System {
                initial: b.state(2),
                observables: vec![Observable::new("V", birth_death::points(&b.types, 1))],
                rules: b.unit_rates(),
                types: b.types,
                constraints: None,
                semantics: Semantics::Dpo,
            }
        }
        other => return Err(CliError::Usage(format!("unknown system `{other}`"))),
    };
    if let Some(path) = &args.rules {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let rs = load_rule_set(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if *rs.types != *sys.types {
            // foreign type graph: nothing of the built-in system applies
            sys.observables.clear();
            sys.constraints = None;
            sys.initial = TypedGraph::empty(&rs.types);
            sys.types = rs.types.clone();
        }
        sys.rules = rs.rules;
        if let Some(x0) = rs.initial {
            sys.initial = x0;
        }
        if rs.constraints.is_some() {
            sys.constraints = rs.constraints;
        }
    }
    if let Some(arg) = &args.initial {
        sys.initial = parse_initial(arg, &sys, bd)?;
    }
    if let Some(s) = args.semantics {
        sys.semantics = match s {
            SemanticsArg::Dpo => Semantics::Dpo,
            SemanticsArg::Sqpo => Semantics::Sqpo,
        };
    }
    Ok(sys)
}
