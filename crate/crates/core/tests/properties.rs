use proptest::prelude::*;
use qmsep::attack::{build_sim_verifier, formula_params, run_attack, sim_acceptance, AttackConfig, Variant};
use qmsep::harness::{wilson_interval, SummaryStats};
use qmsep::hilbert::{haar_unitary, max_abs, Projector, QState, RegisterLayout};
use qmsep::jordan::jordan_decompose;
use qmsep::money::{KeyPair, Scheme, SchemeKind, NOTE_REG};
use qmsep::oracle::{sample_oracle, ClassicalDB, World};
use qmsep::synth::{Backend, SynthesisParams};
use qmsep::RngStream;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn random_projector(d: usize, r: usize, rng: &mut RngStream) -> Projector {
    let u = haar_unitary(d, rng);
    let v = u.columns(0, r).into_owned();
    Projector::new(&v * v.adjoint()).unwrap()
}

fn scheme_kind() -> impl Strategy<Value = SchemeKind> {
    prop_oneof![Just(SchemeKind::HashTag), Just(SchemeKind::Conjugate), Just(SchemeKind::Counterexample)]
}

#[test]
fn default_parameters_match_frozen_values() {
    let p2 = SynthesisParams::new(0.5, 0.9, 2, Backend::Trial).unwrap();
    let p3 = SynthesisParams::new(0.5, 0.9, 3, Backend::Trial).unwrap();
    assert_eq!((p2.n_alternations, p2.t_trials), (90, 64));
    assert_eq!((p3.n_alternations, p3.t_trials), (95, 128));

    // b = 1 − √0.1, bound = 1.8b² − 1, N = 100·q′/b².
    let pp = formula_params(4, 4, Variant::ClassicalMint, 0.1, 1.0).unwrap();
    assert!((pp.b - 0.683_772_233_983_162).abs() < 1e-12);
    assert!((pp.success_bound - (-0.158_419_957_660_617)).abs() < 1e-9);
    assert_eq!(pp.t_max.ceil(), 40.0);
    assert_eq!(pp.n_updates.ceil(), 856.0);

    let pq = formula_params(5, 5, Variant::QuantumMint, 0.1, 1.0).unwrap();
    assert!((pq.t_max - 90_000.0).abs() < 1e-6);
}

#[test]
fn wilson_matches_normal_quantile() {
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
    assert!((z - 1.96).abs() < 1e-3);
    let (lo, hi) = wilson_interval(50, 100, z);
    assert!((lo - 0.403_831).abs() < 1e-4 && (hi - 0.596_169).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jordan_blocks_reconstruct_and_partition(seed in any::<u64>(), d in 2usize..10, r1 in 1usize..9, r2 in 1usize..9) {
        let mut rng = RngStream::from_seed(seed);
        let p1 = random_projector(d, r1.min(d - 1), &mut rng);
        let p2 = random_projector(d, r2.min(d - 1), &mut rng);
        let dec = jordan_decompose(&p1, &p2).unwrap();
        prop_assert!(max_abs(&(dec.pi1_reconstruction() - p1.matrix())) < 1e-8);
        prop_assert!(max_abs(&(dec.pi2_reconstruction() - p2.matrix())) < 1e-8);
        let total: usize = dec.blocks.iter().map(|b| b.dim).sum::<usize>() + dec.kernel_dim;
        prop_assert_eq!(total, d);
        for b in &dec.blocks {
            prop_assert!((0.0..=1.0).contains(&b.p));
        }
    }

    #[test]
    fn classical_db_stays_consistent(ops in prop::collection::vec((0u64..8, any::<bool>()), 0..24)) {
        let mut db = ClassicalDB::new();
        let mut prev = db.clone();
        for (x, z) in ops {
            let known = db.lookup(x);
            let inserted = db.insert(x, z);
            match known {
                Some(v) if v != z => prop_assert!(inserted.is_err()),
                _ => prop_assert!(inserted.is_ok()),
            }
            prop_assert!(db.is_consistent());
            prop_assert!(prev.is_subset_of(&db));
            prev = db.clone();
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1usize..500, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        let outcomes: Vec<bool> = (0..n).map(|i| i < k).collect();
        let s = SummaryStats::bernoulli(&outcomes);
        prop_assert!((s.mean - p).abs() < 1e-12);
    }

    #[test]
    fn genuine_notes_always_verify(kind in scheme_kind(), seed in any::<u64>()) {
        let scheme = Scheme::new(kind, 4, 3).unwrap();
        let mut rng = RngStream::from_seed(seed);
        let mut world = scheme.fresh_world(&mut rng).unwrap();
        let keys = scheme.key_gen(&world, &mut rng).unwrap();
        let note = scheme.mint(&keys, &mut world, &mut rng).unwrap();
        let v = scheme.verify(&keys, &note, &mut world, &mut rng).unwrap();
        prop_assert!(v.accept);
        prop_assert!((v.accept_prob - 1.0).abs() < 1e-9);
    }

    #[test]
    fn covered_sim_verifier_equals_true_verifier(kind in prop_oneof![Just(SchemeKind::HashTag), Just(SchemeKind::Conjugate)], seed in any::<u64>()) {
        let mut rng = RngStream::from_seed(seed);
        let scheme = Scheme::new(kind, 4, 2).unwrap();
        let table = sample_oracle(4, &mut rng).unwrap();
        let serial = rng.gen_range(0..1u64 << scheme.serial_bits());
        let mut db = ClassicalDB::new();
        for x in scheme.query_positions(serial) {
            db.insert(x, table.get(x).unwrap()).unwrap();
        }
        prop_assert!(build_sim_verifier(&scheme, &KeyPair::default(), serial, &db).is_ok());
        let layout = RegisterLayout::new(&[(NOTE_REG, scheme.note_qubits())]).unwrap();
        let rho = QState::random(layout, &mut rng).density();
        let sim = sim_acceptance(&scheme, &KeyPair::default(), serial, &db, &rho).unwrap();
        let truth = scheme.acceptance(serial, &rho, &|x| table.get(x).ok()).unwrap();
        prop_assert!((sim - truth).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn attack_databases_grow_monotonically(kind in scheme_kind(), seed in any::<u64>()) {
        let scheme = Scheme::new(kind, 4, 3).unwrap();
        let cfg = AttackConfig::from_formulas(&scheme, 0.1, 1.0, Backend::Eigen)
            .unwrap()
            .with_t_max(20)
            .with_updates(10);
        let t = run_attack(&scheme, &cfg, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert!(t.databases_monotone());
        prop_assert!(t.t_drawn < 20 && t.j_drawn <= 10);
        prop_assert!(t.issuer_discoveries() <= scheme.profile().q_prime);
        for db in &t.databases {
            prop_assert!(ClassicalDB::from_entries(db.clone()).is_ok());
        }
    }
}

#[test]
fn sampled_world_answers_are_fixed() {
    let mut rng = RngStream::from_seed(77);
    let table = sample_oracle(3, &mut rng).unwrap();
    let mut world = World::sampled(table.clone());
    for x in 0..8 {
        let z = world.classical_query(x, qmsep::oracle::Origin::Adversary, &mut rng).unwrap();
        assert_eq!(z, table.get(x).unwrap());
    }
}
