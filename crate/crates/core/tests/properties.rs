use msc::circuit::{run_mpc, Circuit, Mpc};
use msc::colevishkin::{cv_step, log_star};
use msc::compile::{cmsc_to_msc, combine_two_circuits};
use msc::eval::run;
use msc::harness::{
    check_equivalence, random_kripke, random_kripke_with, random_mpc, random_program, seeded, Artifact, CircuitShape,
    EquivalenceSpec, KripkeShape, ProgramShape,
};
use msc::model::{ModelFile, PropositionSet};
use msc::syntax::{parse_program, Variant};
use proptest::prelude::*;

const VARIANTS: [Variant; 4] = [Variant::Msc, Variant::Mmsc, Variant::Cmsc, Variant::Mpmsc];

fn props() -> Vec<String> {
    vec!["q1".into(), "p1".into(), "p2".into()]
}

fn names(shape: &KripkeShape) -> Vec<String> {
    shape.props().all().cloned().collect()
}

fn mpc_props() -> PropositionSet {
    PropositionSet::new(vec!["q1".into()], vec!["p1".into(), "p2".into()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_programs_parse_back(seed in any::<u64>(), v in 0usize..4) {
        let p = random_program(&ProgramShape::new(VARIANTS[v]), &props(), &mut seeded(seed));
        let text = p.to_text();
        prop_assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn netlists_round_trip(seed in any::<u64>(), k in 1usize..4, delta in 1usize..3) {
        let mut rng = seeded(seed);
        let shape = CircuitShape { k, delta, max_depth: 4, max_gates: 12 };
        let mpc = random_mpc(&shape, &mpc_props(), &mut rng);
        let back = Mpc::parse(&mpc.to_text()).unwrap();
        prop_assert_eq!(&back, &mpc);
        let (c, _) = Circuit::parse_netlist(&mpc.circuit.to_netlist()).unwrap();
        let n = c.inputs().len();
        for v in 0..32u64 {
            let x: Vec<bool> = (0..n).map(|i| (v.wrapping_mul(0x9e37_79b9) ^ seed) >> (i % 64) & 1 == 1).collect();
            prop_assert_eq!(c.eval(&x).unwrap(), mpc.circuit.eval(&x).unwrap());
        }
    }

    #[test]
    fn model_files_round_trip(seed in any::<u64>(), n in 1usize..8, delta in 0usize..3) {
        let m = random_kripke(n, 2, delta, seed).unwrap();
        let json = serde_json::to_string(&m.to_file()).unwrap();
        let back = serde_json::from_str::<ModelFile>(&json).unwrap().into_model().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn generation_and_runs_are_deterministic(seed in any::<u64>()) {
        let shape = KripkeShape::new(5, 1, 2);
        let a = random_kripke_with(&shape, &mut seeded(seed)).unwrap();
        let b = random_kripke_with(&shape, &mut seeded(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let p = random_program(&ProgramShape::new(Variant::Cmsc), &names(&shape), &mut seeded(seed));
        let q = random_program(&ProgramShape::new(Variant::Cmsc), &names(&shape), &mut seeded(seed));
        prop_assert_eq!(&p, &q);
        prop_assert_eq!(run(&p, &a, 6).unwrap().states, run(&q, &b, 6).unwrap().states);
    }

    #[test]
    fn artifacts_are_equivalent_to_themselves(seed in any::<u64>(), v in 0usize..4) {
        let shape = KripkeShape::new(4, 1, 2);
        let models: Vec<_> = (0..2).map(|i| random_kripke_with(&shape, &mut seeded(seed ^ i)).unwrap()).collect();
        let p = random_program(&ProgramShape::new(VARIANTS[v]), &names(&shape), &mut seeded(seed));
        let r = check_equivalence(Artifact::Program(&p), Artifact::Program(&p), &EquivalenceSpec::strong(), &models).unwrap();
        prop_assert!(r.passed());
        let c = random_mpc(&CircuitShape { k: 2, delta: 2, max_depth: 3, max_gates: 8 }, models[0].props(), &mut seeded(seed));
        let r = check_equivalence(Artifact::Circuit(&c), Artifact::Circuit(&c), &EquivalenceSpec::strong(), &models).unwrap();
        prop_assert!(r.passed());
    }

    #[test]
    fn flattening_preserves_runs(seed in any::<u64>()) {
        let shape = KripkeShape::new(5, 1, 2);
        let m = random_kripke_with(&shape, &mut seeded(seed)).unwrap();
        let p = random_program(&ProgramShape::new(Variant::Cmsc), &names(&shape), &mut seeded(seed));
        let (q, _) = cmsc_to_msc(&p);
        prop_assert_eq!(q.variant(), Variant::Msc);
        prop_assert_eq!(run(&p, &m, 5).unwrap().states, run(&q, &m, 5).unwrap().states);
    }

    #[test]
    fn multiplexer_selects(seed in any::<u64>(), input in any::<u32>()) {
        let mut rng = seeded(seed);
        let shape = CircuitShape { k: 2, delta: 1, max_depth: 3, max_gates: 6 };
        let a = random_mpc(&shape, &mpc_props(), &mut rng).circuit;
        let b = random_mpc(&CircuitShape { delta: 2, ..shape }, &mpc_props(), &mut rng).circuit;
        let c = combine_two_circuits(&a, &b).unwrap();
        let (na, nb) = (a.inputs().len(), b.inputs().len());
        let x: Vec<bool> = (0..na + 1 + nb).map(|i| input >> (i % 32) & 1 == 1).collect();
        let mut want = vec![true];
        want.extend(if x[na] { b.eval(&x[na + 1..]).unwrap() } else { a.eval(&x[..na]).unwrap() });
        prop_assert_eq!(c.eval(&x).unwrap(), want);
    }

    #[test]
    fn circuit_rounds_need_no_history(seed in any::<u64>()) {
        let m = random_kripke(4, 1, 2, seed).unwrap();
        let c = random_mpc(&CircuitShape { k: 2, delta: 2, max_depth: 3, max_gates: 8 }, m.props(), &mut seeded(seed));
        let long = run_mpc(&c, &m, 6).unwrap();
        let short = run_mpc(&c, &m, 3).unwrap();
        prop_assert_eq!(&long.states[..4], &short.states[..]);
    }

    #[test]
    fn reduction_step_separates_neighbours(a in 0usize..1 << 20, b in 0usize..1 << 20, c in 0usize..1 << 20) {
        prop_assume!(a != b && b != c);
        // a is the parent of b, b the parent of c
        prop_assert_ne!(cv_step(b, a), cv_step(c, b));
        let bits = usize::BITS - a.max(b).leading_zeros();
        prop_assert!(cv_step(b, a) < 2 * bits as usize + 2);
    }

    #[test]
    fn log_star_is_monotone(x in 1u64..1 << 40) {
        prop_assert!(log_star(x) <= log_star(x + 1));
        prop_assert!(log_star(x) <= 5);
    }
}
