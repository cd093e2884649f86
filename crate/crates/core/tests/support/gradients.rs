//! Randomized finite-difference battery over dense and spread networks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use uavdc::nn::{Activation, DenseNet};
use uavdc::seeds::SimRng;
use uavdc::td3::SpreadNet;

use super::{fd_compare, naive_dense_loss, naive_spread_loss, FdReport};

pub const ACTS: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Identity];

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Parameter and input gradients of a random dense net against central
/// differences.
pub fn check_dense(seed: u64, hidden: Activation, output: Activation) -> FdReport {
    let mut rng = SimRng::seed_from_u64(seed);
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=32)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=32));
    }
    sizes.push(rng.random_range(1..=8));
    let net = DenseNet::new(&sizes, hidden, output, &mut rng);
    let batch = rng.random_range(1..=6);
    let x = normal_matrix(batch, sizes[0], &mut rng);
    let g = normal_matrix(batch, *sizes.last().unwrap(), &mut rng);
    let (_, cache) = net.forward(x.view()).unwrap();
    let (grads, d_x) = net.backward(&cache, g.view()).unwrap();

    let xs = to_rows(&x);
    let gs = to_rows(&g);
    let params = fd_compare(
        &net,
        net.num_params(),
        |n, i| n.param_mut(i),
        |n| naive_dense_loss(n, &xs, &gs),
        &grads.flatten(),
    );
    let inputs = fd_compare(
        &xs,
        batch * sizes[0],
        |x, i| &mut x[i / sizes[0]][i % sizes[0]],
        |x| naive_dense_loss(&net, x, &gs),
        &d_x.iter().copied().collect::<Vec<_>>(),
    );
    params.merge(inputs)
}

/// Pre-spread plus body, with and without an action input.
pub fn check_spread(seed: u64, extra_dim: usize, output: Activation) -> FdReport {
    let mut rng = SimRng::seed_from_u64(seed);
    let k = rng.random_range(1..=6);
    let hidden: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=32)).collect();
    let out_dim = if extra_dim > 0 { 1 } else { 2 };
    let net = SpreadNet::new(k, extra_dim, &hidden, out_dim, output, &mut rng);
    let batch = rng.random_range(1..=5);
    let obs = Array2::from_shape_fn((batch, 2 * k + 3), |(_, j)| {
        if j < 2 * k {
            f64::from(rng.random_bool(0.5) as u8)
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    let extra = (extra_dim > 0).then(|| normal_matrix(batch, extra_dim, &mut rng));
    let g = normal_matrix(batch, out_dim, &mut rng);
    let (_, cache) = net.forward(obs.view(), extra.as_ref().map(|e| e.view())).unwrap();
    let (grads, d_extra) = net.backward(&cache, g.view()).unwrap();
    let mut flat = grads.spread.flatten();
    flat.extend(grads.body.flatten());

    let os = to_rows(&obs);
    let gs = to_rows(&g);
    let es = extra.as_ref().map(to_rows);
    let mut report = fd_compare(
        &net,
        net.num_params(),
        |n, i| n.param_mut(i),
        |n| naive_spread_loss(n, &os, es.as_deref(), &gs),
        &flat,
    );
    if let (Some(es), Some(d_extra)) = (&es, &d_extra) {
        let r = fd_compare(
            es,
            batch * extra_dim,
            |e, i| &mut e[i / extra_dim][i % extra_dim],
            |e| naive_spread_loss(&net, &os, Some(e), &gs),
            &d_extra.iter().copied().collect::<Vec<_>>(),
        );
        report = report.merge(r);
    }
    report
}

/// The fixed battery: 50 dense nets cycling through every activation pair,
/// plus actor and critic spread stacks.
pub fn gradient_battery() -> FdReport {
    let mut report = FdReport::default();
    for i in 0..50u64 {
        let h = ACTS[(i % 3) as usize];
        let o = ACTS[((i / 3) % 3) as usize];
        report = report.merge(check_dense(1000 + i, h, o));
    }
    for i in 0..10u64 {
        report = report.merge(check_spread(2000 + i, 0, Activation::Tanh));
        report = report.merge(check_spread(3000 + i, 2, Activation::Identity));
    }
    report
}
