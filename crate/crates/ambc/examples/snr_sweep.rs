//! Channel-ensemble BER versus SNR under joint IQ imbalance, comparing the
//! IQ-aware threshold with the one derived for an ideal transceiver. Both
//! flatten into an interference-induced floor at high SNR.

use ambc::model::{ImbalanceMode, IqImbalance, SystemConfig};
use ambc::montecarlo::{empirical_ber, ChannelPolicy, ThresholdPolicy, TrialConfig};

fn main() {
    let iq = IqImbalance::from_percent(10.0, ImbalanceMode::Joint).unwrap();
    println!("{:>7} {:>12} {:>12}", "snr_db", "iq-aware", "ideal-based");
    for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let system = SystemConfig::default_experiment(11).with_snr(snr_db);
        let mut row = Vec::new();
        for policy in [ThresholdPolicy::IqAware, ThresholdPolicy::Ideal] {
            let cfg = TrialConfig {
                system,
                iq,
                threshold_policy: policy,
                channel_policy: ChannelPolicy::Ensemble(2000),
                trials: 1,
            };
            row.push(empirical_ber(&cfg).unwrap().ber);
        }
        println!("{snr_db:>7} {:>12.5} {:>12.5}", row[0], row[1]);
    }
}
