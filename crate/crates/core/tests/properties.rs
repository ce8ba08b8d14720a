use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use kbayes::embedding::{rkhs_distance, BetaWeights, Embedding};
use kbayes::experiments::{generate_toy, ToyDynamicsConfig};
use kbayes::filtering::{FilterMode, KernelFilterModel};
use kbayes::kernels::{median_heuristic, Kernel};
use kbayes::points::Points;
use kbayes::posterior::fit_kregbayes;

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Points {
    Points::from_flat(dim, (0..n * dim).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

/// The kRegBayes loss evaluated as a single matrix expression agrees with
/// the sum of its terms computed through the embedding API.
#[test]
fn kregbayes_loss_decomposes_term_by_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let m = rng.random_range(1..=6);
        let s = rng.random_range(1..=3);
        let x = random_points(&mut rng, m, 2);
        let y = random_points(&mut rng, m, 2);
        let sx = random_points(&mut rng, s, 2);
        let st = random_points(&mut rng, s, 2);
        let beta = BetaWeights::from_raw((0..m).map(|_| rng.random_range(0.1..1.0)).collect());
        let (lambda, delta) = (rng.random_range(0.01..1.0), rng.random_range(0.1..2.0));
        let kx = Kernel::gaussian(1.0).unwrap();
        let ky = Kernel::gaussian(0.8).unwrap();
        let reg = fit_kregbayes(&x, &y, &sx, &st, &beta, kx, ky, lambda, delta).unwrap();

        let inputs = reg.inputs().clone();
        let outputs = reg.outputs().clone();
        let n = inputs.len();
        assert_eq!(n, m + s);
        let k = Mat::from_fn(n, n, |i, j| kx.eval(inputs.row(i), inputs.row(j)).unwrap());
        let g = Mat::from_fn(n, n, |i, j| ky.eval(outputs.row(i), outputs.row(j)).unwrap());
        let c = reg.solve_system(Mat::<f64>::identity(n, n).as_ref()).unwrap();
        let mut d: Vec<f64> = beta.thresholded().to_vec();
        d.extend(std::iter::repeat_n(delta, s));

        let mut r = -(&k * &c);
        for i in 0..n {
            r[(i, i)] += 1.0;
        }
        let rg = &r * &g;
        let kcg = &k * &c * &g;
        let mut whole = 0.0;
        for i in 0..n {
            for j in 0..n {
                whole += d[i] * rg[(i, j)] * r[(i, j)] + lambda * kcg[(i, j)] * c[(i, j)];
            }
        }

        let residual = |i: usize| {
            let target = Embedding::point_mass(outputs.row(i), ky).unwrap();
            rkhs_distance(&target, &reg.predict(inputs.row(i)).unwrap()).unwrap().powi(2)
        };
        let fit: f64 = (0..m).map(|i| d[i] * residual(i)).sum();
        let supervision: f64 = (m..n).map(residual).sum();
        let mut norm_sq = 0.0;
        for i in 0..n {
            for j in 0..n {
                norm_sq += kcg[(i, j)] * c[(i, j)];
            }
        }
        let terms = fit + lambda * norm_sq + delta * supervision;
        assert!((whole - terms).abs() <= 1e-10 * whole.abs(), "{whole} vs {terms}");
    }
}

/// With no process noise and plenty of training data the pKBR filter
/// follows the true state well inside ten times the observation noise.
#[test]
fn noiseless_dynamics_are_tracked() {
    let toy = |length, stream| ToyDynamicsConfig {
        process_variance: 0.0,
        length,
        seed: 21,
        stream,
        ..Default::default()
    };
    let train = generate_toy(&toy(801, 0)).unwrap();
    let test = generate_toy(&toy(100, 1)).unwrap();
    let kx = Kernel::gaussian(median_heuristic(&train.observations).unwrap()).unwrap();
    let ky = Kernel::gaussian(median_heuristic(&train.states).unwrap()).unwrap();
    let model = KernelFilterModel::fit(train.states, train.observations, kx, ky, 1e-7, 5e-6).unwrap();
    let run = model.run_filter(&test.observations, &mut FilterMode::Pkbr).unwrap();
    let decoded = run.decoded();
    let mse: f64 = decoded
        .iter()
        .zip(test.states.iter())
        .map(|(d, s)| (d[0] - s[0]).powi(2) + (d[1] - s[1]).powi(2))
        .sum::<f64>()
        / decoded.len() as f64;
    assert!(mse < 10.0 * 0.04, "running mse {mse}");
}

#[test]
fn filter_outputs_are_bit_identical_across_runs() {
    let train = generate_toy(&ToyDynamicsConfig { length: 201, seed: 3, ..Default::default() }).unwrap();
    let test = generate_toy(&ToyDynamicsConfig { length: 30, seed: 3, stream: 1, ..Default::default() }).unwrap();
    let kx = Kernel::gaussian(median_heuristic(&train.observations).unwrap()).unwrap();
    let ky = Kernel::gaussian(median_heuristic(&train.states).unwrap()).unwrap();
    let decode = || {
        let model =
            KernelFilterModel::fit(train.states.clone(), train.observations.clone(), kx, ky, 1e-7, 5e-6).unwrap();
        let run = model.run_filter(&test.observations, &mut FilterMode::Kbr { threshold: false }).unwrap();
        run.decoded().concat().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(decode(), decode());
}
