//! Monte Carlo BER against the closed-form prediction for one channel
//! realization: the simulated detector should track the analytic curve
//! across SNR.

use ambc::analytics::{ber_iq, iq_params, threshold_iq};
use ambc::model::{sample_channels, ImbalanceMode, IqImbalance, SystemConfig};
use ambc::montecarlo::{empirical_ber, ChannelPolicy, ThresholdPolicy, TrialConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let channels = sample_channels(&mut ChaCha8Rng::seed_from_u64(1));
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap();
    println!("{:>7} {:>12} {:>12} {:>10}", "snr_db", "simulated", "analytic", "ci95");
    for snr_db in [0.0, 5.0, 10.0, 15.0] {
        let system = SystemConfig::default_experiment(7).with_snr(snr_db);
        let p = iq_params(&channels, &iq, &system).unwrap();
        let analytic = ber_iq(threshold_iq(&p).unwrap(), &p);
        let cfg = TrialConfig {
            system,
            iq,
            threshold_policy: ThresholdPolicy::IqAware,
            channel_policy: ChannelPolicy::Fixed(channels),
            trials: 1000,
        };
        let est = empirical_ber(&cfg).unwrap();
        println!("{snr_db:>7} {:>12.5} {analytic:>12.5} {:>10.5}", est.ber, est.ci95);
    }
}
