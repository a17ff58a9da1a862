//! `stopgame`: solve, evaluate and certify stopping games stored as JSON.
//!
//! Exit codes: 0 success, 1 invalid input or failed operation, 2 unreadable
//! or malformed input, 3 certification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use stopgame::fuzz::{random_game, GameParams};
use stopgame::oracle::{best_response, guarantee, pure_gap, DEFAULT_GAP_BUDGET};
use stopgame::{
    game_value, gamma_mixed, parse_game, parse_strategy, Error, GameDoc, GameSpec, Player, PureAction, PureStoppingTime,
    ScenarioTree, StrategyDoc,
};

#[derive(Parser)]
#[command(name = "stopgame", version, about = "Zero-sum stopping games on finite scenario trees")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Tuning {
    /// Threshold slack of the constructed strategies.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Smear width; defaults to half the shortest period.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Value of the game and the frontier classification.
    Value {
        game: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Value, value process, frontier and both near-optimal strategies.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Expected payoff of a strategy pair.
    Evaluate {
        game: PathBuf,
        #[arg(long)]
        p1: PathBuf,
        #[arg(long)]
        p2: PathBuf,
    },
    /// Exact best pure response to a strategy.
    BestResponse {
        game: PathBuf,
        #[arg(long)]
        opponent: PathBuf,
        /// The responding player (1 or 2).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        side: u8,
    },
    /// Pure sup-inf and inf-sup over grid stopping times.
    Gap {
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAP_BUDGET)]
        budget: usize,
    },
    /// Write a transformed game.
    Transform {
        game: PathBuf,
        #[arg(long, group = "op")]
        truncate: Option<f64>,
        #[arg(long, group = "op")]
        reduce_final: bool,
        #[arg(long, group = "op")]
        reduce_cumulative: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve, then check both strategies with the best-response oracle.
    Certify {
        /// Game file; omit when fuzzing.
        game: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
        /// Certify this many seeded random games instead of a file.
        #[arg(long)]
        fuzz: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Input(String),
    Parse(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_parse() {
            Failure::Parse(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<Report, Failure>;

/// A JSON report plus its text rendering.
struct Report {
    json: Value,
    text: Vec<String>,
    /// Set when the command ran but the check it performs failed.
    failed: bool,
}

/// Twelve significant digits, shortest form.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap();
    format!("{rounded}")
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<GameSpec, Failure> {
    Ok(parse_game(&read(path)?)?)
}

fn default_delta(tree: &ScenarioTree) -> f64 {
    tree.min_period_length().map_or(0.5, |l| l / 2.0)
}

fn pure_json(tree: &ScenarioTree, s: &PureStoppingTime) -> Value {
    let stops: Vec<Value> = s
        .stop_nodes(tree)
        .into_iter()
        .map(|(ix, offset)| json!({ "node": tree.id(ix), "offset": offset }))
        .collect();
    json!({ "stops": stops })
}

fn pure_text(tree: &ScenarioTree, s: &PureStoppingTime) -> String {
    let stops = s.stop_nodes(tree);
    if stops.is_empty() {
        return "never".into();
    }
    stops
        .iter()
        .map(|&(ix, off)| if off == 0.0 { tree.id(ix).to_string() } else { format!("{}+{}", tree.id(ix), num(off)) })
        .collect::<Vec<_>>()
        .join(" ")
}

fn value_cmd(game: &GameSpec, tuning: &Tuning, full: bool) -> Outcome {
    let tree = game.tree();
    let delta = tuning.delta.unwrap_or_else(|| default_delta(tree));
    let rep = game_value(game, tuning.eps, delta)?;
    let frontier: Vec<Value> = rep
        .frontier
        .nodes()
        .map(|(ix, e)| json!({ "node": tree.id(ix), "tag": e.tag.label(), "reward": e.reward }))
        .collect();
    let never: Vec<&str> = rep.frontier.never_reached().iter().map(|&ix| tree.id(ix)).collect();
    let mut text = vec![format!("value {}", num(rep.value))];
    for (ix, e) in rep.frontier.nodes() {
        text.push(format!("frontier {} {} reward {}", tree.id(ix), e.tag.label(), num(e.reward)));
    }
    if !never.is_empty() {
        text.push(format!("never reaches frontier: {}", never.join(" ")));
    }
    let mut j = json!({ "value": rep.value, "eps": tuning.eps, "delta": delta, "frontier": frontier, "never_reached": never });
    if full {
        let values: Vec<Value> = tree
            .indices()
            .map(|ix| json!({ "node": tree.id(ix), "value": rep.values.value(ix), "continuation": rep.values.continuation(ix) }))
            .collect();
        let p1 = StrategyDoc::from_strategy(tree, &rep.player_one);
        let p2 = StrategyDoc::from_strategy(tree, &rep.player_two);
        j["value_process"] = Value::Array(values);
        j["player_one"] = serde_json::to_value(&p1).unwrap();
        j["player_two"] = serde_json::to_value(&p2).unwrap();
        for ix in tree.indices() {
            text.push(format!("V {} {}", tree.id(ix), num(rep.values.value(ix))));
        }
        text.push(format!("player 1: {}", strategy_text(&p1)));
        text.push(format!("player 2: {}", strategy_text(&p2)));
    }
    Ok(Report { json: j, text, failed: false })
}

fn strategy_text(doc: &StrategyDoc) -> String {
    if doc.nodes.is_empty() {
        return "never".into();
    }
    doc.nodes
        .iter()
        .map(|n| {
            let a = n.prob_atom.map(|p| format!(" atom {}", num(p))).unwrap_or_default();
            let s = n.prob_smear.map(|p| format!(" smear {}", num(p))).unwrap_or_default();
            let d = n.delta.map(|d| format!(" delta {}", num(d))).unwrap_or_default();
            format!("{}:{}{a}{s}{d}", n.id, format!("{:?}", n.action).to_lowercase())
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn evaluate_cmd(game: &GameSpec, p1: &Path, p2: &Path) -> Outcome {
    let phi = parse_strategy(&read(p1)?, game.tree())?;
    let psi = parse_strategy(&read(p2)?, game.tree())?;
    let v = gamma_mixed(game, &phi, &psi)?;
    Ok(Report { json: json!({ "value": v }), text: vec![format!("payoff {}", num(v))], failed: false })
}

fn best_response_cmd(game: &GameSpec, opponent: &Path, side: u8) -> Outcome {
    let tree = game.tree();
    let opp = parse_strategy(&read(opponent)?, tree)?;
    let responder = Player::from_index(side).expect("clap restricts the side");
    let br = best_response(game, &opp, responder)?;
    let actions: Vec<Value> = tree
        .indices()
        .filter_map(|ix| {
            br.actions[ix.0].map(|a| {
                let offset = match br.response.decision(ix) {
                    Some(PureAction::Stop { offset }) => Some(offset),
                    _ => None,
                };
                json!({ "node": tree.id(ix), "action": a, "offset": offset })
            })
        })
        .collect();
    let j = json!({
        "responder": side,
        "value": br.value,
        "response": pure_json(tree, &br.response),
        "actions": actions,
        "limit_action": br.uses_limit_action(),
    });
    let mut text = vec![format!("best response of player {side}: value {}", num(br.value))];
    text.push(format!("stops: {}", pure_text(tree, &br.response)));
    if br.uses_limit_action() {
        text.push("note: value is a limit; the witness stops just after an atom".into());
    }
    Ok(Report { json: j, text, failed: false })
}

fn gap_cmd(game: &GameSpec, budget: usize) -> Outcome {
    let tree = game.tree();
    let gap = pure_gap(game, budget)?;
    let exists = gap.has_pure_value(1e-12);
    let j = json!({
        "sup_inf": gap.sup_inf,
        "inf_sup": gap.inf_sup,
        "pure_value": exists,
        "maximizer": pure_json(tree, &gap.maximizer),
        "minimizer": pure_json(tree, &gap.minimizer),
        "candidates": gap.candidates,
    });
    let verdict = if exists { "pure value exists" } else { "no pure value" };
    let text = vec![
        format!("sup-inf {}, inf-sup {}, {verdict}", num(gap.sup_inf), num(gap.inf_sup)),
        format!("maximizer stops: {}", pure_text(tree, &gap.maximizer)),
        format!("minimizer stops: {}", pure_text(tree, &gap.minimizer)),
    ];
    Ok(Report { json: j, text, failed: false })
}

fn transform_cmd(game: &GameSpec, truncate: Option<f64>, reduce_final: bool, reduce_cumulative: bool, out: &Path) -> Outcome {
    let (op, constant, result) = match (truncate, reduce_final, reduce_cumulative) {
        (Some(r), false, false) => ("truncate", None, game.truncate(r)?),
        (None, true, false) => {
            let (c, g) = game.reduce_final_payoff()?;
            ("reduce-final", Some(c), g)
        }
        (None, false, true) => ("reduce-cumulative", None, game.reduce_cumulative()?),
        _ => return Err(Failure::Input("choose exactly one of --truncate, --reduce-final, --reduce-cumulative".into())),
    };
    std::fs::write(out, GameDoc::from_game(&result).to_json())
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", out.display())))?;
    let mut text = vec![format!("{op}: wrote {}", out.display())];
    if let Some(c) = constant {
        text.push(format!("constant {}", num(c)));
    }
    Ok(Report { json: json!({ "transform": op, "out": out.display().to_string(), "constant": constant }), text, failed: false })
}

struct Certificate {
    value: f64,
    player_one: f64,
    player_two: f64,
    passed: bool,
}

fn certify_game(game: &GameSpec, eps: f64, delta: Option<f64>) -> Result<Certificate, Failure> {
    let delta = delta.unwrap_or_else(|| default_delta(game.tree()));
    let rep = game_value(game, eps, delta)?;
    let player_one = guarantee(game, &rep.player_one, Player::One)?;
    let player_two = guarantee(game, &rep.player_two, Player::Two)?;
    let passed = player_one >= rep.value - eps && player_two <= rep.value + eps;
    Ok(Certificate { value: rep.value, player_one, player_two, passed })
}

fn certify_cmd(game: Option<&Path>, tuning: &Tuning, fuzz: Option<usize>, seed: u64) -> Outcome {
    match (game, fuzz) {
        (Some(path), None) => {
            let g = load_game(path)?;
            let c = certify_game(&g, tuning.eps, tuning.delta)?;
            let text = vec![
                format!("value {}", num(c.value)),
                format!("player 1 guarantees {}", num(c.player_one)),
                format!("player 2 concedes at most {}", num(c.player_two)),
                if c.passed { "certified".into() } else { format!("NOT certified within eps {}", num(tuning.eps)) },
            ];
            let j = json!({ "value": c.value, "guarantee_one": c.player_one, "guarantee_two": c.player_two, "eps": tuning.eps, "certified": c.passed });
            Ok(Report { json: j, text, failed: !c.passed })
        }
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut failures = Vec::new();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let g = random_game(&mut rng, &GameParams::default());
                let c = certify_game(&g, tuning.eps, tuning.delta)?;
                worst = worst.max(c.value - c.player_one).max(c.player_two - c.value);
                if !c.passed {
                    failures.push(i);
                }
            }
            let text = vec![
                format!("fuzz: {n} games from seed {seed}, {} failed", failures.len()),
                format!("largest guarantee shortfall {}", num(worst)),
            ];
            let j = json!({ "games": n, "seed": seed, "failed": failures, "worst_shortfall": worst, "eps": tuning.eps });
            Ok(Report { json: j, text, failed: !failures.is_empty() })
        }
        (Some(_), Some(_)) => Err(Failure::Input("give either a game file or --fuzz, not both".into())),
        (None, None) => Err(Failure::Input("certify needs a game file or --fuzz N".into())),
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Value { game, tuning } => value_cmd(&load_game(game)?, tuning, false),
        Command::Solve { game, tuning } => value_cmd(&load_game(game)?, tuning, true),
        Command::Evaluate { game, p1, p2 } => evaluate_cmd(&load_game(game)?, p1, p2),
        Command::BestResponse { game, opponent, side } => best_response_cmd(&load_game(game)?, opponent, *side),
        Command::Gap { game, budget } => gap_cmd(&load_game(game)?, *budget),
        Command::Transform { game, truncate, reduce_final, reduce_cumulative, out } => {
            transform_cmd(&load_game(game)?, *truncate, *reduce_final, *reduce_cumulative, out)
        }
        Command::Certify { game, tuning, fuzz, seed } => certify_cmd(game.as_deref(), tuning, *fuzz, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report.json).unwrap()),
                Format::Text => report.text.iter().for_each(|l| println!("{l}")),
            }
            if report.failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
    }
}
