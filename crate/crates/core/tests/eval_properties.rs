use proptest::prelude::*;
use satira::corpus::Label;
use satira::eval::evaluate;

fn labels(n: usize) -> impl Strategy<Value = Vec<Label>> {
    prop::collection::vec(prop_oneof![Just(Label::Fake), Just(Label::Real)], n)
}

fn pairs() -> impl Strategy<Value = (Vec<Label>, Vec<Label>)> {
    (1usize..200).prop_flat_map(|n| (labels(n), labels(n)))
}

proptest! {
    #[test]
    fn report_matches_brute_force_recount((pred, gold) in pairs()) {
        let r = evaluate(&pred, &gold).unwrap();
        let n = gold.len();
        let correct = pred.iter().zip(&gold).filter(|(p, g)| p == g).count();
        prop_assert!((r.accuracy - correct as f64 / n as f64).abs() < 1e-12);
        for c in Label::ALL {
            let tp = pred.iter().zip(&gold).filter(|(p, g)| **p == c && **g == c).count();
            let pp = pred.iter().filter(|p| **p == c).count();
            let gp = gold.iter().filter(|g| **g == c).count();
            let m = &r.per_class[c.index()];
            prop_assert_eq!(m.support, gp);
            prop_assert_eq!(m.precision_undefined, pp == 0);
            prop_assert_eq!(m.recall_undefined, gp == 0);
            let precision = if pp == 0 { 0.0 } else { tp as f64 / pp as f64 };
            let recall = if gp == 0 { 0.0 } else { tp as f64 / gp as f64 };
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            prop_assert!((m.precision - precision).abs() < 1e-12);
            prop_assert!((m.recall - recall).abs() < 1e-12);
            prop_assert!((m.f1 - f1).abs() < 1e-12);
            for g in Label::ALL {
                let cell = pred.iter().zip(&gold).filter(|(p, gg)| **p == c && **gg == g).count();
                prop_assert_eq!(r.confusion[g.index()][c.index()], cell);
            }
        }
        prop_assert_eq!(r.confusion.iter().flatten().sum::<usize>(), n);
    }

    #[test]
    fn swapping_labels_transposes_roles((pred, gold) in pairs()) {
        let flip = |v: &[Label]| v.iter().map(|l| l.other()).collect::<Vec<_>>();
        let a = evaluate(&pred, &gold).unwrap();
        let b = evaluate(&flip(&pred), &flip(&gold)).unwrap();
        for g in 0..2 {
            for p in 0..2 {
                prop_assert_eq!(a.confusion[g][p], b.confusion[1 - g][1 - p]);
            }
        }
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn scores_are_bounded((pred, gold) in pairs()) {
        let r = evaluate(&pred, &gold).unwrap();
        for v in [r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
