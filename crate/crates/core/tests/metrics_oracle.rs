mod common;

use normbank::eval::{accuracy_c2, accuracy_c3, evaluate};
use normbank::{ClassLabel, Mode};
use proptest::prelude::*;

fn check(seed: u64, n: usize) {
    let mut rng = common::rng(seed);
    let cases = common::random_cases(&mut rng, n);
    let golds: Vec<_> = cases.iter().map(|c| c.gold.clone()).collect();
    let preds: Vec<_> = cases.iter().map(|c| c.pred.clone()).collect();
    let report = evaluate(&golds, &preds, &common::small_map()).unwrap();
    assert_eq!(common::report_counts(&report), common::recount(&cases), "seed {seed}");
    assert_eq!(report.instances, n);
}

proptest! {
    #[test]
    fn evaluate_matches_recount(seed in any::<u64>(), n in 1usize..=200) {
        check(seed, n);
    }

    #[test]
    fn merging_classes_never_lowers_accuracy(seed in any::<u64>(), n in 1usize..300) {
        let mut rng = common::rng(seed);
        let preds: Vec<ClassLabel> = (0..n).map(|_| common::random_label(&mut rng, Mode::FreeForm)).collect();
        let golds: Vec<ClassLabel> = (0..n).map(|_| common::random_label(&mut rng, Mode::FreeForm)).collect();
        let c3 = accuracy_c3(&preds, &golds).unwrap();
        let c2 = accuracy_c2(&preds, &golds).unwrap();
        prop_assert!(c2.correct >= c3.correct);
        prop_assert_eq!(c2.total, c3.total);
    }
}

#[test]
fn hand_counted_mix() {
    // 2/3 c3, 3/3 c2 (discretionary vs positive merges), relative 1/2
    let mut rng = common::rng(0);
    let mut gold = |mode, class, n| {
        let mut i = common::random_instance(&mut rng, mode, n);
        i.class = class;
        i
    };
    let golds = vec![
        gold(Mode::FreeForm, ClassLabel::Positive, 0),
        gold(Mode::FreeForm, ClassLabel::Negative, 1),
        gold(Mode::FreeForm, ClassLabel::Discretionary, 2),
        gold(Mode::Relative, ClassLabel::First, 3),
        gold(Mode::Relative, ClassLabel::Second, 4),
    ];
    let one_hot = |l, t: &str| normbank::Verdict::one_hot(l, Some(t.to_string()));
    let preds = vec![
        one_hot(ClassLabel::Positive, "it's good"),
        one_hot(ClassLabel::Negative, "it's purple"),
        one_hot(ClassLabel::Positive, "it's okay"),
        normbank::Verdict::one_hot(ClassLabel::First, None),
        normbank::Verdict::one_hot(ClassLabel::First, None),
    ];
    let r = evaluate(&golds, &preds, &common::small_map()).unwrap();
    let c3 = r.c3_accuracy.unwrap();
    assert_eq!((c3.correct, c3.total), (2, 3));
    assert_eq!(r.c2_accuracy.unwrap().correct, 3);
    assert_eq!(r.text_polarity_accuracy.unwrap().correct, 2);
    assert_eq!(r.unknown_polarity_count, 1);
    assert_eq!(r.relative_accuracy.unwrap().correct, 1);
    assert!(r.yesno_class_accuracy.is_none());
}
