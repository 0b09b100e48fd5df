//! Empirical BER as a function of the decision threshold: the curve starts
//! at 0.5, dips near the closed-form near-optimal threshold, and climbs
//! back as the threshold rejects everything.

use ambc::analytics::{iq_params, threshold_iq};
use ambc::model::{sample_channels, ImbalanceMode, IqImbalance, SystemConfig};
use ambc::montecarlo::threshold_sweep;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let channels = sample_channels(&mut ChaCha8Rng::seed_from_u64(1));
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap();
    let system = SystemConfig::default_experiment(3).with_snr(5.0);
    let p = iq_params(&channels, &iq, &system).unwrap();
    let near_optimal = threshold_iq(&p).unwrap();
    let step = p.delta_plus() / 4.0;
    let grid: Vec<f64> = (0..48).map(|i| i as f64 * step).collect();
    let sweep = threshold_sweep(&system, &channels, &iq, &grid, 500).unwrap();
    println!("near-optimal threshold {near_optimal:.3}, sweep argmin {:.3}", sweep.argmin_gamma);
    println!("{:>8} {:>9}", "gamma", "ber");
    for (g, b) in sweep.gammas.iter().zip(&sweep.bers) {
        let bar = "#".repeat((b * 80.0).round() as usize);
        println!("{g:>8.3} {b:>9.5} {bar}");
    }
}
