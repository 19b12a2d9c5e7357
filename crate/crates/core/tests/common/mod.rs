#![allow(dead_code)]

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwcat_core::corpus::{generate_corpus, CorpusConfig};
use rwcat_core::tactic::TacticSeq;
use rwcat_core::{parse_statement, Arrow, ProofState, RewritingCategory, RuleSet, Statement};

pub const GENERATORS: [&str; 5] = ["add_comm", "mul_comm", "add_assoc", "mul_assoc", "eq_comm"];

pub fn library() -> RewritingCategory {
    RewritingCategory::new(RuleSet::default_rules())
}

pub fn generators() -> RewritingCategory {
    library().generated(&GENERATORS).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus(size: usize, seed: u64) -> Vec<Statement> {
    let cfg = CorpusConfig { size, ..CorpusConfig::default() };
    generate_corpus(&library(), &cfg, &mut rng(seed)).unwrap()
}

pub fn st(text: &str) -> Statement {
    parse_statement(text).unwrap()
}

/// Uniform random walk of at most `steps` generator applications.
pub fn walk(cat: &RewritingCategory, t: &Statement, steps: usize, rng: &mut dyn RngCore) -> Arrow {
    let mut cur = Arrow::identity(t);
    for _ in 0..steps {
        let options = cat.neighbors(&cur.dst, usize::MAX);
        if options.is_empty() {
            break;
        }
        let (a, dst) = options[rng.random_range(0..options.len())].clone();
        cur.steps.push(a);
        cur.dst = dst;
    }
    cur
}

/// A random run of valid tactics from `compile(t)`, with every state visited.
pub fn random_trace(cat: &RewritingCategory, t: &Statement, len: usize, rng: &mut dyn RngCore) -> (TacticSeq, Vec<ProofState>) {
    let mut state = ProofState::compile(t);
    let mut seq = Vec::new();
    let mut states = vec![state.clone()];
    for _ in 0..len {
        let menu = cat.enumerate_tactics(&state);
        if menu.is_empty() {
            break;
        }
        let (tac, next) = menu[rng.random_range(0..menu.len())].clone();
        seq.push(tac);
        state = next;
        states.push(state.clone());
    }
    (TacticSeq(seq), states)
}
