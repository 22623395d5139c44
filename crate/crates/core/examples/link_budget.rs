//! Path loss, SNR and Shannon rate against distance, and what the rate
//! does to a client's participation cost and type.
//!
//!     cargo run --example link_budget

use famus::channel::{bandwidth_share, participation_cost, path_gain, shannon_rate, snr, ClientProfile, LinkParams};

fn main() -> famus::Result<()> {
    let link = LinkParams::default();
    let profile = ClientProfile {
        alpha: 1e-5,
        beta: 2e-5,
        data_size: 150.0,
    };

    for clients in [1, 20, 40] {
        let share = bandwidth_share(link.bandwidth_per_cluster, clients)?;
        println!("{clients} clients in the cluster, {:.0} kHz each", share / 1e3);
        println!("  dist(m)  gain(dB)  SNR(dB)  rate(Mbit/s)  cost      type");
        for d in [1.0, 5.0, 10.0, 25.0, 50.0, 100.0] {
            // no fading: the mean channel
            let g = path_gain(&link, d);
            let rate = shannon_rate(share, link.tx_power, g, link.noise_psd) / 1e6;
            let cost = participation_cost(&profile, rate)?;
            println!(
                "  {d:>7.0}  {:>8.1}  {:>7.1}  {rate:>12.2}  {cost:.6}  {:.1}",
                10.0 * g.log10(),
                10.0 * snr(share, link.tx_power, g, link.noise_psd).log10(),
                1.0 / cost
            );
        }
    }
    Ok(())
}
