//! Block-energy distribution under IQ imbalance: empirical histogram next
//! to the Gaussian predicted by the closed-form moments, for the ladder of
//! impairment settings. The distributions shift left as the imbalance
//! grows.

use ambc::analytics::conditional_moments;
use ambc::model::{sample_channels, ImbalanceMode, InterferenceState, IqImbalance, SystemConfig};
use ambc::montecarlo::empirical_pdf_gamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let channels = sample_channels(&mut ChaCha8Rng::seed_from_u64(1));
    let system = SystemConfig::default_experiment(9);
    for percent in [0.0, 5.0, 10.0] {
        let iq = IqImbalance::from_percent(percent, ImbalanceMode::Joint).unwrap();
        let hist = empirical_pdf_gamma(
            &system,
            &channels,
            &iq,
            InterferenceState::OFF,
            false,
            20_000,
            15,
        )
        .unwrap();
        let m = conditional_moments(&channels, &iq, false, false, &system).unwrap();
        println!(
            "-- {percent}% imbalance: empirical mean {:.3}, analytic mean {:.3}, analytic std {:.3}",
            hist.mean,
            m.mean_b0,
            m.var_b0.sqrt()
        );
        let peak = hist.density.iter().cloned().fold(0.0, f64::max);
        for i in 0..hist.density.len() {
            let center = (hist.edges[i] + hist.edges[i + 1]) / 2.0;
            let bar = "#".repeat((hist.density[i] / peak * 50.0).round() as usize);
            println!("{center:>8.2} {:>9.5} {bar}", hist.density[i]);
        }
    }
}
