//! Scores a few predictions the way the evaluation report does.
//!
//! cargo run --example metrics

use tabreason::eval::metrics::{cell_reduction_stats, exact_match, normalize_answer, rouge_all, Thresholds};
use tabreason::eval::Scores;
use tabreason::extract::CellCounts;
use tabreason::profile::TaskKind;

fn main() {
    for (pred, gold) in [("17", "17.0"), ("\"1,500\"", "1500"), ("17 years", "17"), ("b | a", "a|b")] {
        println!("{pred:>10} vs {gold:<6} normalized {:?} -> {}", normalize_answer(pred), exact_match(pred, gold));
    }

    let gold = "The Americans won the National Cup in 1936 and again 17 years later in 1953.";
    let pred = "They won the national cup in 1936 and in 1953.";
    let r = rouge_all(pred, gold);
    println!("\nROUGE-1 {:.4}  ROUGE-2 {:.4}  ROUGE-L {:.4}", r.rouge1.f1, r.rouge2.f1, r.rouge_l.f1);

    for (task, pred, gold) in [
        (TaskKind::FactVerification, "Yes", "entailed"),
        (TaskKind::ShortQa, "", "17"),
        (TaskKind::LongQa, pred, gold),
    ] {
        println!("{:<18} primary score {:.4}", task.as_str(), Scores::compute(task, pred, gold).primary());
    }

    let th = Thresholds::default();
    for tokens in [1999, 2000, 4000, 4001] {
        println!("{tokens:>5} tokens -> {}", th.bucket(tokens).as_str());
    }

    let runs = [CellCounts { t: 120, t_c: 40, t_cr: 4 }, CellCounts { t: 60, t_c: 30, t_cr: 12 }];
    let s = cell_reduction_stats(&runs).expect("non-empty");
    println!("average cells T {:.1}, T_C {:.1}, T_CR {:.1}", s.avg_t, s.avg_t_c, s.avg_t_cr);
}
