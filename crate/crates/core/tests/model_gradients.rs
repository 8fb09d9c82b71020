//! Fusion network checked against a direct-loop f64 re-implementation.

use pansim::model::{backward, forward, init_params, l1_loss, upsample_ms, ModelParams, TuneMode, GROUP_NAMES};
use pansim::rng::RngStream;
use pansim::ImageTensor;

/// Cross-correlation with a 3×3 kernel and replicate border, all in f64.
fn conv_ref(input: &[f64], c_in: usize, h: usize, w: usize, weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let c_out = bias.len();
    let mut out = vec![0.0; c_out * h * w];
    for co in 0..c_out {
        for y in 0..h {
            for x in 0..w {
                let mut acc = bias[co];
                for ci in 0..c_in {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let sy = (y as isize + ky as isize - 1).clamp(0, h as isize - 1) as usize;
                            let sx = (x as isize + kx as isize - 1).clamp(0, w as isize - 1) as usize;
                            acc += weight[((co * c_in + ci) * 3 + ky) * 3 + kx] * input[(ci * h + sy) * w + sx];
                        }
                    }
                }
                out[(co * h + y) * w + x] = acc;
            }
        }
    }
    out
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

/// Reference prediction for parameter groups held as f64.
fn forward_ref(groups: &[Vec<f64>; 6], c_max: usize, hidden: usize, up: &ImageTensor, pan: &ImageTensor) -> Vec<f64> {
    let (h, w) = (pan.height(), pan.width());
    let input: Vec<f64> = up.data().iter().chain(pan.data()).map(|&v| v as f64).collect();
    let a1 = relu(conv_ref(&input, c_max + 1, h, w, &groups[0], &groups[1]));
    let a2 = relu(conv_ref(&a1, hidden, h, w, &groups[2], &groups[3]));
    let r = conv_ref(&a2, hidden, h, w, &groups[4], &groups[5]);
    up.data().iter().zip(r).map(|(&u, r)| u as f64 + r).collect()
}

fn l1_ref(pred: &[f64], gt: &ImageTensor) -> f64 {
    pred.iter().zip(gt.data()).map(|(p, &g)| (p - g as f64).abs()).sum::<f64>() / pred.len() as f64
}

fn random_params(c_max: usize, rng: &mut RngStream) -> ModelParams {
    let mut p = init_params(c_max, rng);
    for v in p.conv_out.weight.iter_mut() {
        *v = rng.normal(0.0, 0.05) as f32;
    }
    for b in [&mut p.conv1.bias, &mut p.conv2.bias, &mut p.conv_out.bias] {
        for v in b.iter_mut() {
            *v = rng.normal(0.0, 0.05) as f32;
        }
    }
    p
}

fn as_f64(p: &ModelParams) -> [Vec<f64>; 6] {
    let g = p.groups();
    std::array::from_fn(|i| g[i].iter().map(|&v| v as f64).collect())
}

struct Instance {
    params: ModelParams,
    lrms: ImageTensor,
    pan: ImageTensor,
    gt: ImageTensor,
}

fn instance(seed: u64) -> Instance {
    let mut rng = RngStream::new(seed);
    let c_max = 4;
    let params = random_params(c_max, &mut rng);
    let lrms = ImageTensor::from_fn(4, 4, 4, |_, _, _| rng.next_f64() as f32);
    let pan = ImageTensor::from_fn(1, 8, 8, |_, _, _| rng.next_f64() as f32);
    // Ground truth sits well away from the prediction so the L1 kink is never
    // crossed by a finite-difference step.
    let up = upsample_ms(&lrms, c_max, 8, 8).unwrap();
    let pred = forward_ref(&as_f64(&params), c_max, params.hidden, &up, &pan);
    let gt_data = pred
        .iter()
        .map(|&p| {
            let off = 0.2 + 0.3 * rng.next_f64();
            (if rng.bernoulli(0.5) { p + off } else { p - off }) as f32
        })
        .collect();
    let gt = ImageTensor::from_vec(c_max, 8, 8, gt_data).unwrap();
    Instance { params, lrms, pan, gt }
}

#[test]
fn forward_matches_direct_loops() {
    let mut rng = RngStream::new(21);
    let params = random_params(8, &mut rng);
    let lrms = ImageTensor::from_fn(5, 6, 6, |_, _, _| rng.next_f64() as f32);
    let pan = ImageTensor::from_fn(1, 24, 24, |_, _, _| rng.next_f64() as f32);
    let (pred, _) = forward(&params, &lrms, &pan).unwrap();
    let up = upsample_ms(&lrms, 8, 24, 24).unwrap();
    let oracle = forward_ref(&as_f64(&params), 8, params.hidden, &up, &pan);
    for (a, b) in pred.data().iter().zip(&oracle) {
        assert!((*a as f64 - b).abs() < 1e-5, "{a} vs {b}");
    }
}

fn gradient_check(seed: u64, mode: TuneMode) {
    let inst = instance(seed);
    let (pred, tape) = forward(&inst.params, &inst.lrms, &inst.pan).unwrap();
    let (_, dpred) = l1_loss(&pred, &inst.gt).unwrap();
    let grads = backward(&inst.params, &tape, &dpred).unwrap();
    assert!(grads.is_finite());

    let up = upsample_ms(&inst.lrms, 4, 8, 8).unwrap();
    let base = as_f64(&inst.params);
    let hidden = inst.params.hidden;
    let loss_at = |groups: &[Vec<f64>; 6]| l1_ref(&forward_ref(groups, 4, hidden, &up, &inst.pan), &inst.gt);
    let h = 1e-3;
    let mut rng = RngStream::new(seed ^ 0xFD);

    for g in 0..6 {
        if !mode.is_trainable(g) {
            continue;
        }
        let len = base[g].len();
        let idx: Vec<usize> = if len <= 64 {
            (0..len).collect()
        } else {
            (0..64).map(|_| rng.choice(len)).collect()
        };
        let (mut diff, mut na, mut nf) = (0.0f64, 0.0f64, 0.0f64);
        for &i in &idx {
            let mut plus = base.clone();
            plus[g][i] += h;
            let mut minus = base.clone();
            minus[g][i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let an = grads.groups[g][i] as f64;
            diff += (an - fd).powi(2);
            na += an * an;
            nf += fd * fd;
        }
        let rel = diff.sqrt() / na.sqrt().max(nf.sqrt()).max(1e-12);
        assert!(rel < 1e-3, "{} ({:?}): relative error {rel:e}", GROUP_NAMES[g], mode);
    }
}

#[test]
fn gradients_match_finite_differences_full() {
    gradient_check(31, TuneMode::Full);
}

#[test]
fn gradients_match_finite_differences_freeze() {
    gradient_check(32, TuneMode::Freeze);
}
