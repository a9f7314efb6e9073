use lpgkit::encoder::{constant_column, encode_vertices, FeatureMatrix};
use lpgkit::gnn::{ConvKind, GnnModel, ModelConfig, NormalizedAdjacency, Parameterized};
use lpgkit::graph::AdjacencyView;
use lpgkit::io::{make_splits, SplitMasks, DEFAULT_RATIOS};
use lpgkit::schema::{infer_schema, SchemaOptions};
use lpgkit::synth::{generate, Fixture, PlantedSpec};
use lpgkit::tasks::{build_completion_task, encode_for_task, CompletionKind};
use lpgkit::train::{evaluate, train, train_on, Sampler, TaskKind, TrainConfig, TrainingData};
use lpgkit::EntityKind;

const FOUR: TaskKind = TaskKind::Classification { num_classes: 4 };

fn fixture(n: usize) -> (Fixture, FeatureMatrix, SplitMasks) {
    let f = generate(&PlantedSpec { n, p_intra: 0.03, p_inter: 0.005, seed: 11, ..PlantedSpec::default() }).unwrap();
    let schema = infer_schema(&f.graph, EntityKind::Vertex, &SchemaOptions::default()).unwrap();
    let features = encode_vertices(&schema, &f.graph).unwrap();
    let splits = make_splits(&f.graph.vertex_ids(), DEFAULT_RATIOS, 3, Some(&f.classes)).unwrap();
    (f, features, splits)
}

fn constant(f: &Fixture) -> FeatureMatrix {
    let ids = f.graph.vertex_ids();
    FeatureMatrix::new(ids.clone(), 1, constant_column(ids.len(), 1.0).concat()).unwrap()
}

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size: 4, ..TrainConfig::new(FOUR) }
}

#[test]
fn loss_halves_for_every_model() {
    let (f, features, splits) = fixture(400);
    for kind in ConvKind::ALL {
        let (_, report) = train::<f64>(
            &f.graph,
            &features,
            &f.targets(),
            &splits,
            &ModelConfig::new(kind, 0, 0),
            &TrainConfig::new(FOUR),
        )
        .unwrap();
        let first = report.epochs[0].train_loss;
        let last = report.epochs.last().unwrap().train_loss;
        assert_eq!(report.epochs.len(), 100);
        assert!(last < 0.5 * first, "{kind:?}: {first} -> {last}");
    }
}

#[test]
fn same_seed_same_report() {
    let (f, features, splits) = fixture(200);
    let run = || {
        train::<f64>(&f.graph, &features, &f.targets(), &splits, &ModelConfig::new(ConvKind::Gat, 0, 0), &quick(5))
            .unwrap()
    };
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(r1, r2);
    assert_eq!(r1.to_csv(), r2.to_csv());
    assert_eq!(m1.snapshot(), m2.snapshot());
}

#[test]
fn zero_learning_rate_keeps_initial_model() {
    let (f, features, splits) = fixture(200);
    let config = TrainConfig { lr0: 0.0, ..quick(3) };
    let targets = f.targets();
    let data = TrainingData::<f64>::new(&f.graph, &features, &targets, &splits).unwrap();
    let (model, report) = train_on(&data, &ModelConfig::new(ConvKind::Gin, 0, 0), &config).unwrap();
    let fresh: GnnModel<f64> =
        GnnModel::new(ModelConfig { in_dim: features.cols, out_dim: 4, seed: config.seed, ..ModelConfig::new(ConvKind::Gin, 0, 0) })
            .unwrap();
    assert_eq!(model.snapshot(), fresh.snapshot());
    let out = fresh.predict(&data.adjacency, &data.features).unwrap();
    assert_eq!(report.test_metric, evaluate(FOUR, &out, &targets, &data.test).unwrap());
    assert!(report.epochs.iter().all(|e| e.val_metric == report.epochs[0].val_metric));
}

#[test]
fn full_batch_equals_whole_graph_sampling() {
    let (f, features, splits) = fixture(150);
    let run = |sampler| {
        let config = TrainConfig { sampler, ..quick(4) };
        train::<f64>(&f.graph, &features, &f.targets(), &splits, &ModelConfig::new(ConvKind::Gcn, 0, 0), &config)
            .unwrap()
    };
    let (m1, r1) = run(Sampler::FullBatch);
    let (m2, r2) = run(Sampler::NodeSubgraph { nodes_per_batch: Some(150) });
    assert_eq!(r1, r2);
    assert_eq!(m1.snapshot(), m2.snapshot());
}

#[test]
fn structure_only_sits_at_class_prior() {
    let (f, _, splits) = fixture(1200);
    let (_, report) = train::<f64>(
        &f.graph,
        &constant(&f),
        &f.targets(),
        &splits,
        &ModelConfig::new(ConvKind::Gcn, 0, 0),
        &TrainConfig { epochs: 30, ..TrainConfig::new(FOUR) },
    )
    .unwrap();
    // 120 test vertices: three binomial standard deviations are about 0.12
    assert!((report.test_metric - f.certificate.class_prior).abs() <= 0.12, "{}", report.test_metric);
}

#[test]
fn regression_beats_constant_predictor() {
    let f = generate(&PlantedSpec { n: 300, p_intra: 0.03, p_inter: 0.005, sigma_sep: Some(2.0), ..PlantedSpec::default() })
        .unwrap();
    let task = build_completion_task(&f.graph, CompletionKind::property("planted_score")).unwrap();
    let (schema, features) = encode_for_task(&f.graph, &task, &SchemaOptions::default()).unwrap();
    assert!(!schema.contains_name("planted_score"));
    let splits = make_splits(&task.eligible, DEFAULT_RATIOS, 0, None).unwrap();
    let data = TrainingData::<f64>::new(&f.graph, &features, &task.targets, &splits).unwrap();
    let config = TrainConfig { epochs: 30, batch_size: 8, ..TrainConfig::new(TaskKind::Regression) };
    let (model, report) = train_on(&data, &ModelConfig::new(ConvKind::Gcn, 0, 0), &config).unwrap();
    assert_eq!(report.metric, "mae");
    let mean = data.train.iter().map(|&r| task.targets[r]).sum::<f64>() / data.train.len() as f64;
    let constant_mae = data.test.iter().map(|&r| (task.targets[r] - mean).abs()).sum::<f64>() / data.test.len() as f64;
    assert!(report.test_metric < 0.8 * constant_mae, "{} vs {constant_mae}", report.test_metric);
    // the returned model predicts raw values
    let out = model.predict(&data.adjacency, &data.features).unwrap();
    assert!((evaluate(TaskKind::Regression, &out, &task.targets, &data.test).unwrap() - report.test_metric).abs() < 1e-12);
}

#[test]
fn invalid_configs() {
    let (f, features, splits) = fixture(100);
    let model = ModelConfig::new(ConvKind::Gcn, 0, 0);
    let t = f.targets();
    assert!(train::<f64>(&f.graph, &features, &t, &splits, &model, &quick(0)).is_err());
    let short = &t[..10];
    assert!(train::<f64>(&f.graph, &features, short, &splits, &model, &quick(1)).is_err());
}

#[test]
fn f32_training_runs() {
    let (f, features, splits) = fixture(120);
    let (m, report) =
        train::<f32>(&f.graph, &features, &f.targets(), &splits, &ModelConfig::new(ConvKind::Gat, 0, 0), &quick(3)).unwrap();
    assert!(report.test_metric.is_finite());
    let adj: NormalizedAdjacency<f32> = NormalizedAdjacency::from_graph(&f.graph, AdjacencyView::Symmetric);
    assert!(m.predict(&adj, &lpgkit::MatrixF32::from_features(&features)).unwrap().is_finite());
    assert_eq!(m.param_count(), m.params().iter().map(|p| p.len()).sum::<usize>());
}
