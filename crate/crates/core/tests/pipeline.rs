use fairround::oracle::brute_force_opt;
use fairround::scalar::Scalar;
use fairround::sched::{independent_round, sample_objectives, Method};
use fairround::{
    build_lp, generate_random, parse_instance, prepare, round_once, serialize_instance, solve_lp, Exact, GenParams,
    Instance, RoundingOptions, StreamKey,
};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| {
        let p = proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.8, 1u64..=4), n), m);
        let w = proptest::collection::vec(1u32..=9, n);
        (p, w).prop_filter_map("every job needs a machine", move |(mut p, w)| {
            for j in 0..n {
                if p.iter().all(|row| row[j].is_none()) {
                    p[0][j] = Some(1);
                }
            }
            Instance::new(p, w.into_iter().map(f64::from).collect()).ok()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_is_a_lower_bound_and_rounding_is_feasible(inst in small_instance(), seed in any::<u64>()) {
        let prep = prepare(&inst, None).unwrap();
        prop_assert!(prep.rects.check().is_empty(), "{:?}", prep.rects.check());
        let opt = brute_force_opt(&inst).unwrap().objective;
        prop_assert!(prep.lp_objective <= opt * (1.0 + 1e-9));
        for trial in 0..8 {
            let run = round_once(&prep, StreamKey::new(seed, trial), &RoundingOptions::default()).unwrap();
            prop_assert!(run.schedule.check(&inst).is_empty(), "{:?}", run.schedule.check(&inst));
            prop_assert!(run.schedule.objective >= opt * (1.0 - 1e-9));
            prop_assert!(run.groups.grouping.validate(&prep.frac).is_ok());
        }
    }

    #[test]
    fn exact_and_float_lp_agree(inst in small_instance()) {
        let horizon = fairround::lp::default_horizon(&inst);
        let exact = solve_lp(&build_lp::<Exact>(&inst, horizon).unwrap()).unwrap();
        let float = solve_lp(&build_lp::<f64>(&inst, horizon).unwrap()).unwrap();
        let e = exact.objective.to_f64_lossy();
        prop_assert!((e - float.objective).abs() <= 1e-7 * e.max(1.0), "{} vs {}", e, float.objective);
    }

    #[test]
    fn instance_json_round_trips(seed in any::<u64>(), absent in 0.0f64..0.5) {
        let params = GenParams { absent_prob: absent, ..GenParams::default() };
        let inst = generate_random(&params, seed).unwrap();
        let text = serialize_instance(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }
}

#[test]
fn rounding_is_reproducible_per_key() {
    let inst = generate_random(&GenParams::default(), 17).unwrap();
    let prep = prepare(&inst, None).unwrap();
    let opts = RoundingOptions::default();
    let a = round_once(&prep, StreamKey::new(4, 9), &opts).unwrap();
    let b = round_once(&prep, StreamKey::new(4, 9), &opts).unwrap();
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.assignment, b.assignment);
}

#[test]
fn sampled_objectives_do_not_depend_on_thread_count() {
    let inst = generate_random(&GenParams { job_count: 8, ..GenParams::default() }, 3).unwrap();
    let prep = prepare(&inst, None).unwrap();
    let wide = sample_objectives(&prep, Method::Contention, 1, 3000).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let narrow = pool.install(|| sample_objectives(&prep, Method::Contention, 1, 3000).unwrap());
    assert_eq!(wide, narrow);
}

#[test]
fn independent_rounding_yields_valid_schedules() {
    let inst = generate_random(&GenParams { machine_count: 4, job_count: 9, ..GenParams::default() }, 8).unwrap();
    let prep = prepare(&inst, None).unwrap();
    let mut rng = StreamKey::new(0, 0).rng(fairround::Purpose::Baseline, 0);
    for _ in 0..200 {
        let s = independent_round(&inst, &prep.rects, &mut rng);
        assert!(s.check(&inst).is_empty());
        assert!(s.objective >= prep.lp_objective * (1.0 - 1e-9));
    }
}
