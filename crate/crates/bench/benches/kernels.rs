use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wrsn_bench::{env_config, field, random_tensor, warmed_env};
use wrsn_core::action::{optimize_location, region_bounds};
use wrsn_core::lifetime::{connection_times, estimate_remaining_lifetime, LifetimeGraph};
use wrsn_core::nn::{Actor, ActorKind, Critic};
use wrsn_core::observation::render;

fn lifetime(c: &mut Criterion) {
    let inst = field(400.0, 1e6);
    let env = warmed_env(&inst, env_config(2, 32), 6);
    let (g, _): (LifetimeGraph, _) = LifetimeGraph::from_state(env.state());
    c.bench_function("connection_times", |b| b.iter(|| connection_times(black_box(&g))));
    c.bench_function("remaining_lifetime", |b| b.iter(|| estimate_remaining_lifetime(black_box(env.state()))));
}

fn simulation(c: &mut Criterion) {
    let inst = field(400.0, 1e6);
    let env = warmed_env(&inst, env_config(2, 32), 6);
    c.bench_function("network_step", |b| {
        b.iter_batched(
            || env.state().clone(),
            |mut st| st.step().expect("alive"),
            criterion::BatchSize::SmallInput,
        )
    });
    let mut group = c.benchmark_group("render");
    for t in [32, 100] {
        let env = warmed_env(&inst, env_config(2, t), 6);
        let cfg = env.observation_config().clone();
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, _| b.iter(|| render(env.state(), 0, &cfg)));
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let inst = field(400.0, 1e6);
    let env = warmed_env(&inst, env_config(2, 32), 6);
    let grid = env.observation_config().grid;
    let (u, v) = grid.cell_of(&inst.base_station);
    let region = region_bounds(u, v, &grid);
    c.bench_function("optimize_location", |b| b.iter(|| optimize_location(env.state(), black_box(&region), 1.0)));
}

fn networks(c: &mut Criterion) {
    let t = 32;
    let obs = random_tensor(4 * t * t, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let critic = Critic::<f32>::new(&mut rng);
    c.bench_function("critic_forward_backward", |b| {
        let mut g = critic.params.zeros();
        b.iter(|| {
            let (_, cache) = critic.forward_cached(&obs, t).expect("shape");
            critic.backward(&obs, t, &cache, 1.0, &mut g);
        })
    });
    let mut group = c.benchmark_group("unet_forward_backward");
    for width in [8, 16, 64] {
        let actor = Actor::<f32>::new(ActorKind::Map, width, &mut rng);
        let gm = vec![0.1f32; t * t];
        group.bench_with_input(BenchmarkId::from_parameter(width), &width, |b, _| {
            let mut g = actor.params().zeros();
            b.iter(|| {
                let (_, cache) = actor.forward_cached(&obs, t).expect("shape");
                actor.backward(&obs, t, &cache, &gm, &[0.1], &mut g);
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = lifetime, simulation, selection, networks
}
criterion_main!(benches);
