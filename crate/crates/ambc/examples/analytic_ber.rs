//! Closed-form detector figures for one channel realization: the Gaussian
//! parameters of the test statistic, both detection thresholds, and the
//! resulting BER across SNR, for an ideal and an impaired transceiver.

use ambc::analytics::{ber_iq, iq_params, threshold_iq};
use ambc::model::{sample_channels, ImbalanceMode, IqImbalance, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let channels = sample_channels(&mut ChaCha8Rng::seed_from_u64(1));
    let settings = [
        ("ideal", IqImbalance::ideal()),
        ("5% joint", IqImbalance::from_percent(5.0, ImbalanceMode::Joint).unwrap()),
        ("10% joint", IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap()),
    ];
    println!("{:<10} {:>7} {:>10} {:>10} {:>12} {:>12}", "iq", "snr_db", "|theta|", "delta+", "gamma_iq", "ber");
    for (label, iq) in settings {
        for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let system = SystemConfig::default_experiment(0).with_snr(snr_db);
            let p = iq_params(&channels, &iq, &system).unwrap();
            let gamma = threshold_iq(&p).unwrap();
            println!(
                "{label:<10} {snr_db:>7} {:>10.4} {:>10.4} {gamma:>12.4} {:>12.3e}",
                p.theta.abs(),
                p.delta_plus(),
                ber_iq(gamma, &p)
            );
        }
    }
}
