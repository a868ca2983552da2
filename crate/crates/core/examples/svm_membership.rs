//! The SMO-trained polynomial SVM on a small two-class problem in the
//! probability simplex, the same kind of input the membership classifier sees.
//!
//! ```text
//! cargo run --example svm_membership
//! ```

use fedbackdoor::bsci::{train_svm_traced, SvmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fedbackdoor::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut points = Vec::new();
    let mut members = Vec::new();
    for i in 0..80 {
        // Members put most mass on class 1, non-members spread it out.
        let member = i % 2 == 0;
        let peak = if member { rng.random_range(0.6..0.95) } else { rng.random_range(0.2..0.65) };
        let rest = (1.0 - peak) / 2.0;
        points.push(vec![rest, peak, rest]);
        members.push(member);
    }
    let cfg = SvmConfig::default();
    let (clf, trace) = train_svm_traced(&points, &members, &cfg)?;
    let correct = points.iter().zip(&members).filter(|(p, &m)| clf.predict(p) == m).count();
    println!("{} support vectors, {} SMO iterations, bias {:.4}", clf.support.len(), trace.iterations, clf.bias);
    println!("training accuracy {}/{}", correct, points.len());
    for peak in [0.3, 0.5, 0.7, 0.9] {
        let rest = (1.0 - peak) / 2.0;
        println!("peak {peak:.1}: decision {:+.3}", clf.decision(&[rest, peak, rest]));
    }
    Ok(())
}
