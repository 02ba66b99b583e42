//! Paired comparison of two configurations on per-log scores:
//! Wilcoxon signed-rank with Pratt zeros, Holm correction and A12.

use sbld::stats::{a12, holm, wilcoxon_pratt, Magnitude};

fn main() {
    // Effort reduction of two configurations on the same twelve failing logs.
    let baseline = [
        0.62, 0.70, 0.55, 0.81, 0.64, 0.77, 0.58, 0.69, 0.73, 0.60, 0.66, 0.71,
    ];
    let sbld = [
        0.91, 0.88, 0.55, 0.95, 0.79, 0.93, 0.84, 0.90, 0.73, 0.86, 0.89, 0.94,
    ];
    let pairs: Vec<(f64, f64)> = sbld.iter().copied().zip(baseline.iter().copied()).collect();

    let w = wilcoxon_pratt(&pairs).unwrap();
    let effect = a12(&sbld, &baseline).unwrap();
    println!(
        "W+ = {} over {} non-zero differences, p = {:.3e} ({})",
        w.statistic,
        w.n_effective,
        w.p_value,
        if w.exact {
            "exact"
        } else {
            "normal approximation"
        }
    );
    println!(
        "A12 = {effect:.3} ({:?}), A21 = {:.3}",
        Magnitude::of(effect),
        1.0 - effect
    );

    let family = [w.p_value, 0.04, 0.03, 0.2];
    println!("Holm over {family:?}: {:?}", holm(&family));
}
