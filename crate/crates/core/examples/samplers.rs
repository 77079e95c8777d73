//! Draw from each sampling primitive and print sample moments.

use povcast::rng::{sample_categorical, sample_invgamma, sample_poisson, sample_truncnorm, RngState};

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn main() -> povcast::Result<()> {
    let mut rng = RngState::new(42);
    let n = 100_000;

    let normal: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    println!("normal(0, 1):            mean {:.4} sd {:.4}", moments(&normal).0, moments(&normal).1);

    let tn = (0..n)
        .map(|_| sample_truncnorm(&mut rng, 2.0, 1.0, 0.0, 7.0))
        .collect::<povcast::Result<Vec<_>>>()?;
    println!("truncnorm(2, 1, [0, 7]): mean {:.4} sd {:.4}", moments(&tn).0, moments(&tn).1);

    let far = sample_truncnorm(&mut rng, -100.0, 1.0, 0.0, 7.0)?;
    println!("truncnorm(-100, 1, [0, 7]) one draw: {far:e}");

    let pois = (0..n)
        .map(|_| sample_poisson(&mut rng, 4.0).map(|x| x as f64))
        .collect::<povcast::Result<Vec<_>>>()?;
    println!("poisson(4):              mean {:.4} sd {:.4}", moments(&pois).0, moments(&pois).1);

    let recip = (0..n)
        .map(|_| sample_invgamma(&mut rng, 3.0, 2.0).map(|x| 1.0 / x))
        .collect::<povcast::Result<Vec<_>>>()?;
    println!("1 / invgamma(3, 2):      mean {:.4} (expect 1.5)", moments(&recip).0);

    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[sample_categorical(&mut rng, &[1.0, 2.0, 1.0])?] += 1;
    }
    println!("categorical(1, 2, 1):    {counts:?}");
    Ok(())
}
