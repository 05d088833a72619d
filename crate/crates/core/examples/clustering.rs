//! Clustering sites by tail dependence: the χ-based distance matrix and
//! partitioning around medoids on the two-block synthetic world.
//!
//! ```bash
//! cargo run --release --example clustering
//! ```

use mvpot::attribution::{World, WorldSample};
use mvpot::clustering::{chi_matrix, pam_cluster};
use mvpot::data::two_block_models;
use mvpot::mgpd::simulate_mgpd;

fn main() -> mvpot::Result<()> {
    let (sites, m0, _) = two_block_models()?;
    let z = simulate_mgpd(&m0, 2000, 5)?.values;
    let x0 = WorldSample::with_quantile_thresholds(z, World::Counterfactual, sites.clone(), 0.95)?;
    let chi = chi_matrix(&x0, 0.95)?;
    let dist = chi.distances();
    println!("distances:");
    for i in 0..dist.nrows() {
        let row: Vec<String> = dist.row(i).iter().map(|d| format!("{d:.2}")).collect();
        println!("  {:>3} {}", sites[i].id, row.join(" "));
    }
    for k in 1..=3 {
        let a = pam_cluster(&dist, k, 0)?;
        let medoids: Vec<&str> = a.medoid_ids.iter().map(|&m| sites[m].id.as_str()).collect();
        println!(
            "K = {k}: medoids {medoids:?}, labels {:?}, cost {:.3}",
            a.labels, a.total_cost
        );
    }
    Ok(())
}
