use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rwcat::config::Config;
use rwcat::lab::{gap_curve, Lab};
use rwcat_core::ensemble::{expected_success_exact, SubsetLaw};
use rwcat_core::hash::derive_seed;
use rwcat_core::sampler::{candidate_pool, select, SamplerConfig};

#[test]
fn gap_curve_examples() {
    let single = gap_curve(&[0.37], &[1], 2).unwrap();
    assert_eq!(single, vec![(1, 1, 0.0)]);
    let pair = gap_curve(&[0.2, 0.8], &[1, 2], 2).unwrap();
    assert_eq!((pair[0].0, pair[0].1), (1, 1));
    assert!((pair[0].2 - 0.6).abs() < 1e-15);
    assert_eq!(pair[1], (2, 4, 0.0));
}

#[test]
fn gaps_can_grow_before_vanishing() {
    let rates = [0.0, 0.0, 0.0, 0.01];
    let curve = gap_curve(&rates, &[1, 2, 3, 4], 2).unwrap();
    // K=2, N=4: two attempts on the anchor, two on one uniform other member.
    let hit = 1.0 - 0.99f64 * 0.99;
    let want = hit - hit / 3.0;
    assert!((curve[0].2 - 0.01).abs() < 1e-15);
    assert!((curve[1].2 - want).abs() < 1e-15, "{curve:?}");
    assert!(curve[1].2 > curve[0].2);
    assert!(curve[3].2 <= 1e-15);
    assert!((expected_success_exact(&rates, &SubsetLaw::Anchored(3), 2, 4).unwrap() - hit).abs() < 1e-15);
    assert!((expected_success_exact(&rates, &SubsetLaw::Anchored(0), 2, 4).unwrap() - hit / 3.0).abs() < 1e-15);
}

fn small_config() -> Config {
    let mut c = Config::builtin();
    c.corpus.size = 12;
    c.experiment.selections = 50;
    c.experiment.consistency_reps = 2000;
    c.experiment.audit_arrows = 5;
    c
}

#[test]
fn small_suites_pass() {
    let lab = Lab::new(small_config(), None).unwrap();
    for kind in ["monotonicity", "pass-at-k", "category-laws"] {
        let out = lab.run(kind).unwrap();
        let bad: Vec<_> = out.checks.iter().filter(|c| !c.pass).collect();
        assert!(bad.is_empty(), "{kind}: {bad:?}");
        assert!(out.contents("checks.jsonl").is_some());
        assert!(out.get("soundness").unwrap().pass);
    }
}

#[test]
fn deterministic_success_makes_every_mode_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = "thm g1 : 2 + 3 = 5\nthm g2 : 3 * 2 + 1 = 7\nthm g3 : 2 * (1 + 3) = 8\nthm g4 : 1 + 2 <= 4 + 0\n";
    std::fs::write(dir.path().join("corpus.txt"), corpus).unwrap();
    let mut cfg = small_config();
    cfg.corpus.file = "corpus.txt".into();
    let probe = Lab::new(cfg.clone(), Some(dir.path())).unwrap();

    // Every statement the suite can touch, drawn with its own streams.
    let exp = &cfg.experiment;
    let scfg = SamplerConfig { k: exp.ensemble_k, include_seed: true, ..cfg.sampler.config().unwrap() };
    let mut all = BTreeSet::new();
    for (i, t) in probe.corpus.iter().enumerate() {
        all.insert(t.canonical());
        let pool = candidate_pool(&probe.library, t, &scfg, &mut ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[10, i as u64])));
        all.extend(pool.iter().map(|(s, _)| s.canonical()));
        let online = select(&probe.library, &probe.model, t, &scfg, &mut ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[11, i as u64]))).unwrap();
        all.extend(online.statements().map(|s| s.canonical()));
    }
    assert!(all.len() > probe.corpus.len());
    let table: String = all.iter().map(|s| format!("1\t{s}\n")).collect();
    std::fs::write(dir.path().join("table.txt"), table).unwrap();
    cfg.prover.kind = "synthetic".into();
    cfg.prover.table = "table.txt".into();

    let lab = Lab::new(cfg, Some(dir.path())).unwrap();
    let out = lab.run("ensemble-eval").unwrap();
    assert!(out.passed(), "{:?}", out.checks);
    let mut rdr = csv::Reader::from_reader(out.contents("passk.csv").unwrap().as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[2].parse::<f64>().unwrap(), 1.0, "{rec:?}");
        rows += 1;
    }
    assert_eq!(rows, 3 * 4 * 2);
    let (proofs, bad) = lab.soundness();
    assert!(proofs > 0 && bad.is_empty());
}
