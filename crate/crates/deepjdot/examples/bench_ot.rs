use deepjdot::ot::{solve_exact_ot, transport_cost, CostMatrix, DiscreteMeasure};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &n in &[64usize, 128, 256] {
        let t0 = Instant::now();
        let reps = 20;
        let mut acc = 0.0;
        for _ in 0..reps {
            let entries = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
            let cost = CostMatrix::new(entries).unwrap();
            let mu = DiscreteMeasure::uniform(n).unwrap();
            let nu = DiscreteMeasure::uniform(n).unwrap();
            let g = solve_exact_ot(&cost, &mu, &nu).unwrap();
            acc += transport_cost(&g, &cost).unwrap();
        }
        println!("n={n}: {:.2} ms/solve (sum {acc:.4})", t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);
    }
}
