mod common;

use nestcv::learners::{LearnerId, LearnerSpec};
use nestcv::protocol::{
    analysis_per_repetition, analysis_primary, baseline_fixed, run_study, same_choice, ProtocolError, Reference,
    Scenario, StudyPlan, StudyRecord, Threshold,
};
use nestcv::report::{build_report, ReportOptions};
use nestcv::selection::{flat_cv, nested_cv};
use nestcv::table::{load_table, save_table};
use nestcv::{Dataset, Seed};

fn fast_plan(repetitions: usize, master_seed: u64) -> StudyPlan {
    StudyPlan {
        repetitions,
        master_seed,
        ..StudyPlan::default()
    }
}

fn fast_scenario() -> Scenario {
    Scenario::new(
        "fast",
        vec![LearnerId::Knn, LearnerId::Gnb, LearnerId::LinRidge, LearnerId::Proto],
    )
}

fn datasets(k: usize) -> Vec<Dataset> {
    (0..k)
        .map(|i| {
            common::gaussian_mixture(
                &format!("mix{i}"),
                80 + 20 * i,
                3,
                0.1 + 0.05 * i as f64,
                100 + i as u64,
            )
        })
        .collect()
}

fn assert_identities(study: &StudyRecord) {
    for r in study.records() {
        let f = r.outcome(r.flat_choice).unwrap();
        let n = r.outcome(r.nested_choice).unwrap();
        assert_eq!(r.accgain, n.future_accuracy - f.future_accuracy);
        assert_eq!(r.delta, f.nested_gap().min(n.nested_gap()));
        if r.same_choice() {
            assert_eq!(r.accgain, 0.0);
        }
        for o in &r.learners {
            for v in [o.flat_estimate, o.nested_estimate, o.future_accuracy] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn study_shape_and_identities() {
    let study = run_study(&datasets(2), &fast_scenario(), &fast_plan(3, 5)).unwrap();
    assert_eq!(study.datasets.len(), 2);
    assert_eq!(study.records().count(), 6);
    assert_identities(&study);
    for d in &study.datasets {
        let mean = d.repetitions.iter().map(|r| r.accgain).sum::<f64>() / 3.0;
        assert_eq!(d.accgain, mean);
    }
}

#[test]
fn reruns_and_dataset_order_do_not_matter() {
    let data = datasets(3);
    let plan = fast_plan(2, 17);
    let a = run_study(&data, &fast_scenario(), &plan).unwrap();
    let b = run_study(&data, &fast_scenario(), &plan).unwrap();
    assert_eq!(a, b);

    let reversed: Vec<Dataset> = data.iter().rev().cloned().collect();
    let c = run_study(&reversed, &fast_scenario(), &plan).unwrap();
    for d in &a.datasets {
        assert_eq!(Some(d), c.dataset(&d.dataset));
    }

    let other_seed = run_study(&data, &fast_scenario(), &fast_plan(2, 18)).unwrap();
    assert_ne!(a, other_seed);
}

#[test]
fn worker_count_does_not_matter() {
    let data = datasets(2);
    let plan = fast_plan(2, 3);
    let run = |workers| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| run_study(&data, &fast_scenario(), &plan).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn validation_happens_before_training() {
    let plan = StudyPlan {
        learners: vec![LearnerSpec::builtin(LearnerId::Knn)],
        ..fast_plan(1, 0)
    };
    let err = run_study(&datasets(1), &Scenario::new("s", vec![LearnerId::Rf]), &plan).unwrap_err();
    assert!(matches!(err, ProtocolError::UnknownLearner(_)));
    let twice = [datasets(1), datasets(1)].concat();
    assert!(matches!(
        run_study(&twice, &fast_scenario(), &fast_plan(1, 0)),
        Err(ProtocolError::InvalidStudy(_))
    ));
    assert!(matches!(
        run_study(&[], &fast_scenario(), &fast_plan(1, 0)),
        Err(ProtocolError::InvalidStudy(_))
    ));
}

#[test]
fn singleton_grids_make_flat_and_nested_equal() {
    let spec = LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[5.0]).unwrap();
    for i in 0..10u64 {
        let d = common::gaussian_mixture("g", 40 + 7 * i as usize, 2, 0.2, i);
        let rows = d.all_rows();
        let flat = flat_cv(&spec, d.view(&rows), 5, Seed(i)).unwrap();
        let nested = nested_cv(&spec, d.view(&rows), 5, 5, Seed(i)).unwrap();
        assert_eq!(flat.estimate, nested.estimate);
    }
}

#[test]
fn single_repetition_variants_agree() {
    let study = run_study(&datasets(3), &fast_scenario(), &fast_plan(1, 9)).unwrap();
    let primary = analysis_primary(&study, Threshold::NestedGap).unwrap();
    let per_rep = analysis_per_repetition(&study, Threshold::NestedGap).unwrap();
    assert_eq!(primary.rows.len(), per_rep.rows.len());
    for (p, q) in primary.rows.iter().zip(&per_rep.rows) {
        assert_eq!((p.gain, p.delta), (q.gain, q.delta));
    }
    assert_eq!(primary.choices, per_rep.choices);
}

#[test]
fn fixed_baseline_on_single_learner_is_zero() {
    let scenario = Scenario::new("solo", vec![LearnerId::Gnb]);
    let study = run_study(&datasets(2), &scenario, &fast_plan(2, 4)).unwrap();
    let base = baseline_fixed(&study, LearnerId::Gnb, Threshold::NestedGap).unwrap();
    assert!(base.rows.iter().all(|r| r.gain == 0.0));
    let sc = same_choice(&study, Reference::FixedVsNested(LearnerId::Gnb)).unwrap();
    assert_eq!((sc.rate, sc.random_baseline), (1.0, 1.0));
}

#[test]
fn table_round_trip_reproduces_report() {
    let studies = vec![
        run_study(&datasets(3), &fast_scenario(), &fast_plan(2, 21)).unwrap(),
        run_study(
            &datasets(3),
            &Scenario::new("pair", vec![LearnerId::Gnb, LearnerId::Knn]),
            &fast_plan(2, 21),
        )
        .unwrap(),
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    save_table(&studies, &path).unwrap();
    let loaded = load_table(&path).unwrap();
    assert_eq!(loaded, studies);

    let opts = ReportOptions {
        baseline: Some(LearnerId::Knn),
        ..ReportOptions::default()
    };
    assert_eq!(
        build_report(&loaded, &opts).unwrap(),
        build_report(&studies, &opts).unwrap()
    );
}

#[test]
fn size_filter_keeps_exactly_large_datasets() {
    let study = run_study(&datasets(3), &fast_scenario(), &fast_plan(2, 2)).unwrap();
    // Sizes are 80, 100 and 120.
    let big = study.filter_min_size(100);
    let names: Vec<&str> = big.datasets.iter().map(|d| d.dataset.as_str()).collect();
    assert_eq!(names, ["mix1", "mix2"]);
    let opts = ReportOptions {
        min_size: Some(100),
        ..ReportOptions::default()
    };
    let filtered = build_report(std::slice::from_ref(&study), &opts).unwrap();
    let direct = build_report(&[big], &ReportOptions::default()).unwrap();
    assert_eq!(filtered, direct);
    assert_eq!(filtered.summaries[0].n, 2);
}
