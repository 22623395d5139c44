//! Clients wander a 2 x 5 grid of clusters under Gauss-Markov mobility.
//! Prints cluster occupancy every second and one client's path.
//!
//!     cargo run --example mobility_trace

use famus::mobility::{cluster_membership, init_ppp, step_gauss_markov, Area, MobilityParams};
use famus::rng::{stream, Stream};

fn main() -> famus::Result<()> {
    let area = Area::with_clusters(100.0, 200.0, 10)?;
    let params = MobilityParams {
        mean_speed: 3.0,
        ..MobilityParams::default()
    };
    let dt = 0.1;
    let mut clients = init_ppp(&area, 200, &params, 7)?;

    println!("t(s)  clients per cluster                 client 0 at");
    for t in 0..=300u64 {
        if t % 10 == 0 {
            let sizes: Vec<usize> = cluster_membership(&clients, &area).iter().map(Vec::len).collect();
            let p = clients[0].position;
            println!("{:>4.0}  {sizes:?}  ({:6.2}, {:6.2}) in cluster {}", t as f64 * dt, p.x, p.y, area.cluster_of(p));
        }
        for (m, c) in clients.iter_mut().enumerate() {
            let mut rng = stream(7, Stream::Mobility, m as u64, t + 1);
            *c = step_gauss_markov(c, &area, dt, &params, &mut rng);
        }
    }
    Ok(())
}
