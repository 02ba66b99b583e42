//! Print all ten interestingness measures for one event's spectrum.
//!
//! cargo run --example score_measures -- 3 1 1 9
//! (arguments: n_fi n_fe n_pi n_pe)

use sbld::spectrum::{score, Measure, SpectrumPrimitives};

fn main() {
    let args: Vec<u32> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("counts are non-negative integers"))
        .collect();
    let [n_fi, n_fe, n_pi, n_pe] = match args.as_slice() {
        [] => [3, 1, 1, 9],
        [a, b, c, d] => [*a, *b, *c, *d],
        _ => panic!("expected four counts: n_fi n_fe n_pi n_pe"),
    };
    let p = SpectrumPrimitives::new(n_fi, n_fe, n_pi, n_pe);
    println!("failing logs with/without event: {n_fi}/{n_fe}, passing: {n_pi}/{n_pe}");
    for m in Measure::ALL {
        println!("{:>12}  {:.6}", m.name(), score(p, m));
    }
}
