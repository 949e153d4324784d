//! Analytic gradients of the full encoder-decoder against central finite
//! differences in f64.

use charnaming::neural::{Batch, Transformer, TransformerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;
const TOLERANCE: f64 = 1e-4;
const PER_TENSOR: usize = 8;

fn config(dropout: f64) -> TransformerConfig {
    TransformerConfig {
        encoder_layers: 2,
        decoder_layers: 2,
        heads: 2,
        width: 8,
        ff_width: 12,
        dropout,
        max_decode_len: 8,
    }
}

fn batch() -> Batch {
    // Ragged lengths so padding and masks are exercised.
    Batch::new(&[
        (vec![4, 5, 6, 7], vec![1, 4, 5, 2]),
        (vec![5, 8], vec![1, 6, 2]),
        (vec![9, 4, 4], vec![1, 7, 4, 6, 2]),
    ])
}

fn loss(model: &Transformer<f64>, batch: &Batch, dropout_seed: Option<u64>) -> f64 {
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    model.loss_and_gradients(batch, rng.as_mut()).0
}

/// Largest relative error over the probed coordinates.
fn check(dropout: f64, dropout_seed: Option<u64>) -> f64 {
    let model: Transformer<f64> = Transformer::new(config(dropout), 10, 8, 17);
    let batch = batch();
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let (_, grad) = model.loss_and_gradients(&batch, rng.as_mut());
    let analytic: Vec<(String, ndarray::Array2<f64>)> = grad
        .named_parameters()
        .into_iter()
        .map(|(n, p)| (n, p.clone()))
        .collect();

    let mut pick = ChaCha8Rng::seed_from_u64(5);
    let mut probe = model.clone();
    let mut checked = 0;
    let mut nonzero = 0;
    let mut worst: f64 = 0.0;
    for (t, (name, g)) in analytic.iter().enumerate() {
        let (rows, cols) = g.dim();
        let mut coords: Vec<(usize, usize)> = if rows * cols <= PER_TENSOR {
            (0..rows)
                .flat_map(|r| (0..cols).map(move |c| (r, c)))
                .collect()
        } else {
            (0..PER_TENSOR)
                .map(|_| (pick.gen_range(0..rows), pick.gen_range(0..cols)))
                .collect()
        };
        // Embedding rows of ids that occur in the batch carry signal.
        if name.ends_with("embed.table") {
            coords.push((4, 0));
            coords.push((6, cols - 1));
        }
        for (r, c) in coords {
            let orig = probe.parameters_mut()[t][[r, c]];
            probe.parameters_mut()[t][[r, c]] = orig + H;
            let up = loss(&probe, &batch, dropout_seed);
            probe.parameters_mut()[t][[r, c]] = orig - H;
            let down = loss(&probe, &batch, dropout_seed);
            probe.parameters_mut()[t][[r, c]] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = g[[r, c]];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
            assert!(
                err < TOLERANCE,
                "{name}[{r},{c}]: analytic {a:e} numeric {numeric:e} rel {err:e}"
            );
            worst = worst.max(err);
            checked += 1;
            if a.abs() > 1e-6 {
                nonzero += 1;
            }
        }
    }
    assert!(checked >= PER_TENSOR * analytic.len() / 2);
    assert!(
        nonzero * 4 > checked * 3,
        "{nonzero}/{checked} coordinates had signal"
    );
    worst
}

pub fn gradients_match_finite_differences() -> f64 {
    check(0.0, None)
}

pub fn gradients_match_with_fixed_dropout_masks() -> f64 {
    check(0.3, Some(99))
}
