//! Weiszfeld iterations for the geometric median with one distant outlier.
//!
//! ```text
//! cargo run --example geometric_median
//! ```

use fedbackdoor::aggregation::geometric_median;
use fedbackdoor::nn::ParamVector;

fn main() -> fedbackdoor::Result<()> {
    let v = ParamVector::new(vec![0.3, -1.2, 0.8]);
    let mut updates = vec![v.clone(); 9];
    updates.push(v.add(&ParamVector::new(vec![100.0, 0.0, 0.0])));
    let mean = updates.iter().fold(ParamVector::zeros(3), |acc, u| acc.add(&u.scale(0.1)));
    println!("mean is {:.3} away from the honest point", mean.dist(&v));

    let gm = geometric_median(&updates, 10, 1e-10, 1e-5)?;
    for (i, obj) in gm.objectives.iter().enumerate() {
        println!("iteration {i:>2}: objective {obj:.6}");
    }
    println!("geometric median is {:.2e} away after {} iterations", gm.point.dist(&v), gm.iterations);
    Ok(())
}
