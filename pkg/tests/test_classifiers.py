import numpy as np
import pytest

from fewshot_eval.classifiers import (
    ClassifierError,
    KnnConfig,
    SolverConfig,
    TreeConfig,
    build_knn,
    classify_knn,
    classify_prototype,
    classify_tree,
    compute_prototypes,
    euclidean_distance,
    fit_classifier,
    logistic_gradient,
    logistic_objective,
    predict_labels,
    predict_scores,
    svm_gradient,
    svm_objective,
    train_logistic,
    train_svm,
    train_tree,
)

rng = np.random.default_rng(12345)


class TestEuclidean:
    def test_three_four_five(self):
        assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_identity(self):
        v = rng.standard_normal(7)
        assert euclidean_distance(v, v) == 0.0

    def test_symmetry(self):
        for _ in range(20):
            p, q = rng.standard_normal(5), rng.standard_normal(5)
            assert euclidean_distance(p, q) == euclidean_distance(q, p)

    def test_length_mismatch(self):
        with pytest.raises(ClassifierError):
            euclidean_distance([1.0], [1.0, 2.0])


class TestPrototype:
    def test_single_shot_prototype_is_the_support_vector(self):
        X = rng.standard_normal((2, 4))
        model = compute_prototypes(X, [0, 1], 2)
        assert np.array_equal(model.prototypes, X)

    def test_mean(self):
        model = compute_prototypes([[0.0, 2.0], [2.0, 0.0]], [0, 0], 1)
        assert np.array_equal(model.prototypes[0], [1.0, 1.0])

    def test_permutation_invariance(self):
        X = rng.standard_normal((6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        perm = rng.permutation(6)
        a = compute_prototypes(X, y, 2)
        b = compute_prototypes(X[perm], y[perm], 2)
        assert np.allclose(a.prototypes, b.prototypes, atol=1e-12)

    def test_empty_class_rejected(self):
        with pytest.raises(ClassifierError):
            compute_prototypes([[1.0]], [0], 2)

    def test_query_on_prototype(self):
        model = compute_prototypes(rng.standard_normal((3, 4)), [0, 1, 2], 3)
        label, scores = classify_prototype(model, model.prototypes[2])
        assert label == 2
        assert scores[2] == 0.0

    def test_exact_tie_goes_to_class_zero(self):
        model = compute_prototypes([[1.0, 0.0], [-1.0, 0.0]], [0, 1], 2)
        label, _ = classify_prototype(model, [0.0, 5.0])
        assert label == 0

    def test_two_way_equals_perpendicular_bisector_rule(self):
        # ||q-V0||^2 < ||q-V1||^2 expands to w.q + b > 0 with
        # w = 2(V0 - V1), b = ||V1||^2 - ||V0||^2.
        for _ in range(1000):
            V = rng.standard_normal((2, 6))
            q = rng.standard_normal(6)
            model = compute_prototypes(V, [0, 1], 2)
            label, _ = classify_prototype(model, q)
            w = 2.0 * (V[0] - V[1])
            b = np.sum(V[1] ** 2) - np.sum(V[0] ** 2)
            linear_label = 0 if w @ q + b >= 0 else 1
            direct = 0 if euclidean_distance(q, V[0]) <= euclidean_distance(q, V[1]) else 1
            assert label == linear_label == direct

    def test_unit_norm_ranking_identity(self):
        # For unit-norm queries, -||q-Vc|| ranks like <q,Vc> - ||Vc||^2/2.
        for _ in range(200):
            V = rng.standard_normal((4, 5))
            q = rng.standard_normal(5)
            q /= np.linalg.norm(q)
            model = compute_prototypes(V, [0, 1, 2, 3], 4)
            label, _ = classify_prototype(model, q)
            alt = np.argmax(V @ q - 0.5 * np.sum(V * V, axis=1))
            assert label == alt


def fd_gradient(objective, W, b, X, y, l2, step=1e-6):
    gW = np.zeros_like(W)
    gb = np.zeros_like(b)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += step
        Wm[idx] -= step
        gW[idx] = (objective(Wp, b, X, y, l2) - objective(Wm, b, X, y, l2)) / (2 * step)
    for i in range(len(b)):
        bp, bm = b.copy(), b.copy()
        bp[i] += step
        bm[i] -= step
        gb[i] = (objective(W, bp, X, y, l2) - objective(W, bm, X, y, l2)) / (2 * step)
    return gW, gb


def max_rel_err(analytic, numeric):
    a = np.concatenate([x.ravel() for x in analytic])
    n = np.concatenate([x.ravel() for x in numeric])
    return np.max(np.abs(a - n) / np.maximum(np.abs(n), 1e-6))


@pytest.mark.parametrize(
    "objective,gradient",
    [(logistic_objective, logistic_gradient), (svm_objective, svm_gradient)],
)
def test_gradient_matches_central_differences(objective, gradient):
    local = np.random.default_rng(7)
    for _ in range(20):
        n_way = int(local.integers(2, 4))
        dim = int(local.integers(1, 9))
        n = int(local.integers(n_way, 12))
        X = local.standard_normal((n, dim))
        y = np.concatenate([np.arange(n_way), local.integers(0, n_way, n - n_way)])
        W = 0.5 * local.standard_normal((n_way, dim))
        b = 0.5 * local.standard_normal(n_way)
        l2 = float(local.uniform(0.0, 1.0))
        analytic = gradient(W, b, X, y, l2)
        numeric = fd_gradient(objective, W, b, X, y, l2)
        assert max_rel_err(analytic, numeric) < 1e-4


class TestLogistic:
    def test_huge_regularizer_kills_weights(self):
        X = rng.standard_normal((6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        model = train_logistic(X, y, 2, SolverConfig(l2_strength=1e9, max_iters=200))
        assert np.linalg.norm(model.weights) <= 1e-3
        assert np.linalg.norm(model.bias) <= 1e-3

    def test_separable_two_points_matches_grid_search(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([0, 1])
        l2 = 1e-4
        cfg = SolverConfig(l2_strength=l2, max_iters=3000, tolerance=1e-12)
        model = train_logistic(X, y, 2, cfg)
        assert np.array_equal(predict_labels(model, X), y)
        # Oracle: exhaustive grid over the antisymmetric weight space
        # W = (w, -w), b = (beta, -beta) on the identical objective.
        grid_min = np.inf
        for w in np.linspace(-10, 10, 401):
            for beta in np.linspace(-5, 5, 201):
                W = np.array([[w], [-w]])
                b = np.array([beta, -beta])
                grid_min = min(grid_min, logistic_objective(W, b, X, y, l2))
        fitted = logistic_objective(model.weights, model.bias, X, y, l2)
        assert fitted <= grid_min + 1e-3

    def test_objective_never_increases(self):
        X = rng.standard_normal((10, 4))
        y = np.array([0, 1] * 5)
        model = train_logistic(X, y, 2, SolverConfig(l2_strength=0.01, max_iters=100))
        zero_obj = logistic_objective(np.zeros((2, 4)), np.zeros(2), X, y, 0.01)
        assert model.diagnostic.final_objective <= zero_obj

    def test_deterministic(self):
        X = rng.standard_normal((8, 3))
        y = np.array([0, 1, 2, 0, 1, 2, 0, 1])
        a = train_logistic(X, y, 3)
        b = train_logistic(X, y, 3)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_missing_class_rejected(self):
        with pytest.raises(ClassifierError):
            train_logistic([[1.0]], [0], 2)


class TestSvm:
    def test_separable_agrees_with_logistic(self):
        local = np.random.default_rng(3)
        for _ in range(10):
            centers = np.array([[4.0, 0.0], [-4.0, 0.0]])
            X = np.concatenate(
                [centers[c] + 0.3 * local.standard_normal((5, 2)) for c in range(2)]
            )
            y = np.repeat([0, 1], 5)
            cfg = SolverConfig(l2_strength=1e-3, max_iters=1000)
            svm = train_svm(X, y, 2, cfg)
            lr = train_logistic(X, y, 2, cfg)
            assert np.array_equal(predict_labels(svm, X), y)
            assert np.array_equal(predict_labels(svm, X), predict_labels(lr, X))

    def test_huge_regularizer_kills_weights(self):
        X = rng.standard_normal((6, 3))
        y = np.array([0, 1] * 3)
        model = train_svm(X, y, 2, SolverConfig(l2_strength=1e9, max_iters=200))
        assert np.linalg.norm(model.weights) <= 1e-3

    def test_label_swap_flips_decision(self):
        X = rng.standard_normal((8, 4))
        y = np.array([0, 1] * 4)
        cfg = SolverConfig(l2_strength=0.01, max_iters=500)
        a = train_svm(X, y, 2, cfg)
        b = train_svm(X, 1 - y, 2, cfg)
        # One-vs-rest problems swap: class-0 scores become class-1 scores.
        assert np.allclose(a.weights[0], b.weights[1], atol=1e-9)
        assert np.allclose(a.weights[1], b.weights[0], atol=1e-9)

    def test_best_so_far_objective_not_above_start(self):
        X = rng.standard_normal((12, 5))
        y = np.array([0, 1, 2] * 4)
        cfg = SolverConfig(l2_strength=0.1, max_iters=300)
        model = train_svm(X, y, 3, cfg)
        start = svm_objective(np.zeros((3, 5)), np.zeros(3), X, y, 0.1)
        assert model.diagnostic.final_objective <= start


class TestTree:
    def test_pure_support_single_leaf(self):
        model = train_tree(rng.standard_normal((4, 3)), [1, 1, 1, 1], 2)
        assert model.root.is_leaf
        assert classify_tree(model, [0.0, 0.0, 0.0])[0] == 1

    def test_one_dim_forced_split(self):
        model = train_tree([[0.0], [1.0]], [0, 1], 2)
        assert not model.root.is_leaf
        assert 0.0 < model.root.threshold < 1.0
        assert classify_tree(model, [-0.2])[0] == 0
        assert classify_tree(model, [1.3])[0] == 1

    def test_perfect_training_accuracy_without_duplicates(self):
        X = rng.standard_normal((30, 4))
        y = rng.integers(0, 3, 30)
        y[:3] = [0, 1, 2]
        model = train_tree(X, y, 3)
        preds = [classify_tree(model, x)[0] for x in X]
        assert np.array_equal(preds, y)

    def test_max_depth_zero_is_majority_leaf(self):
        model = train_tree([[0.0], [1.0], [2.0]], [1, 1, 0], 2, TreeConfig(max_depth=0))
        assert model.root.is_leaf
        assert classify_tree(model, [2.0])[0] == 1

    def test_split_tie_breaks_to_lowest_feature(self):
        # Both features separate the classes equally well.
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        model = train_tree(X, [0, 1], 2)
        assert model.root.feature == 0


class TestKnn:
    def test_exact_match_wins_with_k1(self):
        X = rng.standard_normal((6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        model = build_knn(X, y, np.arange(6), 2, KnnConfig(k=1))
        assert classify_knn(model, X[3])[0] == 1

    def test_full_support_balanced_tie_goes_to_class_zero(self):
        X = rng.standard_normal((4, 2))
        model = build_knn(X, [1, 0, 1, 0], np.arange(4), 2, KnnConfig(k=4))
        label, scores = classify_knn(model, [0.0, 0.0])
        assert label == 0
        assert np.allclose(scores, [0.5, 0.5])

    def test_k1_equals_prototype_for_one_shot(self):
        X = rng.standard_normal((3, 5))
        y = np.array([0, 1, 2])
        knn = build_knn(X, y, np.arange(3), 3, KnnConfig(k=1))
        proto = compute_prototypes(X, y, 3)
        for _ in range(50):
            q = rng.standard_normal(5)
            assert classify_knn(knn, q)[0] == classify_prototype(proto, q)[0]

    def test_distance_tie_prefers_lower_record_id(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        model = build_knn(X, [1, 0], np.array([10, 2]), 2, KnnConfig(k=1))
        # Equidistant: record_id 2 (class 0) wins over record_id 10.
        assert classify_knn(model, [0.0, 0.0])[0] == 0

    def test_k_exceeding_memory_rejected(self):
        with pytest.raises(ClassifierError):
            build_knn([[1.0]], [0], [0], 1, KnnConfig(k=2))


class TestPredictScores:
    def test_linear_at_origin_returns_bias(self):
        model = train_logistic(rng.standard_normal((4, 3)), [0, 1, 0, 1], 2)
        scores = predict_scores(model, np.zeros((1, 3)))
        assert np.allclose(scores[0], model.bias)

    def test_prototype_row_peaks_at_own_column(self):
        model = compute_prototypes(rng.standard_normal((3, 4)), [0, 1, 2], 3)
        scores = predict_scores(model, model.prototypes)
        assert np.array_equal(np.argmax(scores, axis=1), [0, 1, 2])

    def test_argmax_matches_direct_classifiers_everywhere(self):
        local = np.random.default_rng(11)
        X = local.standard_normal((12, 4))
        y = np.array([0, 1, 2] * 4)
        rids = np.arange(12)
        models = {
            kind: fit_classifier(kind, X, y, rids, 3, knn=KnnConfig(k=3))
            for kind in ("prototype", "logistic", "svm", "tree", "knn")
        }
        direct = {
            "prototype": classify_prototype,
            "tree": classify_tree,
            "knn": classify_knn,
        }
        queries = local.standard_normal((1000, 4))
        for kind, model in models.items():
            scores = predict_scores(model, queries)
            labels = np.argmax(scores, axis=1)
            assert np.all(np.isfinite(scores))
            if kind in direct:
                for q, lab in zip(queries[:50], labels[:50]):
                    assert direct[kind](model, q)[0] == lab
