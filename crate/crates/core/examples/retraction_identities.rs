//! Checks the retraction identities on ℝ³, SO(3) and SE(3) for both the
//! Cayley map and the exponential, and prints the worst residual of each.
//!
//! `cargo run --example retraction_identities`

use discvar::lie::{adjoint, GroupKind, GroupSpec, Retraction};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:<26} {:>10} {:>10} {:>10} {:>10}", "group / retraction", "τ(ξ)τ(−ξ)", "dτ conj", "dτ⁻¹ conj", "dτ∘dτ⁻¹");
    for kind in [GroupKind::RealN(3), GroupKind::SO3, GroupKind::SE3] {
        for (name, retraction, scale) in [("cay", Retraction::Cayley, 1.0), ("exp", Retraction::exponential(), 0.5)] {
            let spec = GroupSpec::new(kind, retraction).unwrap();
            let n = spec.algebra_dim();
            let mut worst = [0.0f64; 4];
            for _ in 0..1000 {
                let xi = DVector::from_fn(n, |_, _| rng.random_range(-scale..scale));
                let eta = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let e = spec.tau(&xi).compose(&spec.tau(&-&xi));
                worst[0] = worst[0].max(e.distance(&spec.identity()));
                let rhs = adjoint(&spec.tau(&xi), &spec.dtau(&-&xi, &eta));
                worst[1] = worst[1].max((spec.dtau(&xi, &eta) - rhs).amax());
                let rhs = spec.dtau_inv(&-&xi, &adjoint(&spec.tau(&-&xi), &eta));
                worst[2] = worst[2].max((spec.dtau_inv(&xi, &eta) - rhs).amax());
                worst[3] = worst[3].max((spec.dtau(&xi, &spec.dtau_inv(&xi, &eta)) - &eta).amax());
            }
            let label = format!("{kind:?} / {name}");
            println!("{label:<26} {:>10.1e} {:>10.1e} {:>10.1e} {:>10.1e}", worst[0], worst[1], worst[2], worst[3]);
        }
    }
}
