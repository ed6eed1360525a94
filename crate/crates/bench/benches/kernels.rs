use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;
use shockzone::mesh::{transfer_cells, transfer_cells_conservative};
use shockzone::schemes::{Boundary, EulerLaw, Weno5};
use shockzone::GasModel;
use shockzone::Grid1D;
use shockzone_bench::{model, sod_state, uniform, N_CELLS};

fn stretched() -> Grid1D {
    let nodes = (0..=N_CELLS)
        .map(|i| {
            let s = i as f64 / N_CELLS as f64;
            s + 0.05 * (std::f64::consts::TAU * s).sin()
        })
        .collect();
    Grid1D::new(nodes).unwrap()
}

fn weno(c: &mut Criterion) {
    let law = EulerLaw {
        gas: GasModel::default(),
    };
    let mut g = c.benchmark_group("weno5_rhs");
    for (name, grid) in [("uniform", uniform()), ("stretched", stretched())] {
        let state = sod_state(&grid, 0.1);
        let bc = Boundary::Dirichlet {
            left: state[0],
            right: state[N_CELLS - 1],
        };
        let mut op = Weno5::new();
        g.bench_function(format!("{name}_cached"), |b| {
            b.iter(|| op.rhs(&state, &grid, &law, &bc).unwrap())
        });
        g.bench_function(format!("{name}_fresh"), |b| {
            b.iter_batched(
                Weno5::new,
                |mut w| w.rhs(&state, &grid, &law, &bc).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn transfer(c: &mut Criterion) {
    let (old, new) = (stretched(), uniform());
    let values: Vec<f64> = sod_state(&old, 0.1).iter().map(|u| u[0]).collect();
    let mut g = c.benchmark_group("transfer");
    g.bench_function("pointwise", |b| {
        b.iter(|| transfer_cells(&old, &values, &new).unwrap())
    });
    g.bench_function("conservative", |b| {
        b.iter(|| transfer_cells_conservative(&old, &values, &new).unwrap())
    });
    g.finish();
}

fn forward(c: &mut Criterion) {
    let net = model(2);
    let x: Vec<f64> = (0..=N_CELLS)
        .map(|i| 1.0 + (i as f64 * 0.1).sin().abs())
        .collect();
    let batch = Array2::from_shape_fn((100, N_CELLS + 1), |(r, i)| x[(i + r) % x.len()]);
    let mut g = c.benchmark_group("resmlp");
    g.bench_function("forward_single", |b| {
        b.iter(|| net.params.forward(&x).unwrap())
    });
    g.bench_function("forward_batch_100", |b| {
        b.iter(|| net.params.forward_trace(batch.view()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, weno, transfer, forward);
criterion_main!(benches);
