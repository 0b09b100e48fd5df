//! Blind threshold estimation: recover the detection threshold from the
//! received test statistics alone and watch it converge toward the
//! CSI-based closed form as the block length K grows.

use ambc::analytics::{iq_params, threshold_iq};
use ambc::estimator::estimate_threshold;
use ambc::model::{sample_channels, ImbalanceMode, IqImbalance, SystemConfig};
use ambc::montecarlo::simulate_t_values;
use ambc::waveform::ReceiverModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let channels = sample_channels(&mut ChaCha8Rng::seed_from_u64(1));
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap();
    let base = SystemConfig::default_experiment(5);
    let reference = threshold_iq(&iq_params(&channels, &iq, &base).unwrap()).unwrap();
    println!("theoretical threshold: {reference:.4}");
    println!("{:>6} {:>12} {:>12}", "k", "blind mean", "blind std");
    for k in [50, 100, 200, 500, 1000] {
        let mut system = base;
        system.k_symbols = k;
        let runs = 200;
        let mut estimates = Vec::with_capacity(runs);
        for run in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(system.seed);
            rng.set_stream(run as u64 + 1);
            let (_, t) =
                simulate_t_values(&system, &channels, &iq, ReceiverModel::IqImpaired, &mut rng)
                    .unwrap();
            estimates.push(estimate_threshold(&t).unwrap().gamma);
        }
        let mean = estimates.iter().sum::<f64>() / runs as f64;
        let var =
            estimates.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (runs - 1) as f64;
        println!("{k:>6} {mean:>12.4} {:>12.4}", var.sqrt());
    }
}
