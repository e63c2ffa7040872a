/*
 *   Copyright 2026 The GAP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include <Eigen/Dense>

#include "gap/active.hpp"
#include "gap/error.hpp"
#include "test_util.hpp"

using namespace gap;
using Mat = Eigen::MatrixXd;

namespace {

SparseGraph graph_from_dense(const Mat& w) {
    SparseGraph g;
    g.n = w.rows();
    g.weights = CsrMatrix<double>::from_dense(w);
    g.weights.mark_symmetric();
    g.laplacian = graph_laplacian(g.weights, &g.degrees);
    return g;
}

Mat random_weights(Rng& rng, Index n, double density) {
    Mat w = Mat::Zero(n, n);
    for (Index i = 1; i < n; ++i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i)));
        w(i, j) = w(j, i) = 0.1 + rng.uniform();
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (rng.uniform() < density) w(i, j) = w(j, i) = rng.uniform();
    return w;
}

Mat random_scores(Rng& rng, Index n, Index classes) {
    Mat u(n, classes);
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < classes; ++c) u(i, c) = rng.uniform();
        u.row(i) /= u.row(i).sum();
    }
    return u;
}

// Two 3-class Gaussian clusters per class in 4 dimensions, with labels.
struct Blobs {
    SparseGraph graph;
    std::vector<std::uint8_t> truth;
};

Blobs make_blobs(Rng& rng, Index per_class) {
    const Index n = 3 * per_class;
    FeatureRows x(n, 4);
    Blobs b;
    b.truth.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const auto c = static_cast<std::uint8_t>(i % 3);
        b.truth[static_cast<std::size_t>(i)] = c;
        for (Index j = 0; j < 4; ++j) x(i, j) = static_cast<float>((j == c ? 1.0 : 0.2) + 0.35 * rng.normal());
    }
    FeatureMatrix f;
    f.data = x;
    f.provenance.resize(static_cast<std::size_t>(n));
    b.graph = build_graph(normalize_rows(f).features.data, {8, 4.0, 1e-12});
    return b;
}

RepSet small_repset() {
    RepSet r;
    r.dim = 3;
    r.records.push_back({{0.1f, 0.2f, 0.3f}, 0, {0, 1, 2}, Phase::init});
    r.records.push_back({{-1.0f, 0.0f, 2.5f}, 2, {0, 4, 4}, Phase::acquired});
    r.records.push_back({{7.0f, 8.0f, 9.0f}, 1, {1, 1, 2}, Phase::init});
    return r;
}

}  // namespace

TEST_CASE("acquisition names") {
    for (auto a : {Acquisition::model_change, Acquisition::uncertainty, Acquisition::random}) {
        CHECK(parse_acquisition(to_string(a)) == a);
    }
    CHECK(to_string(Acquisition::model_change) == "model-change");
    CHECK_THROWS_AS(parse_acquisition("vopt"), InvalidArgument);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate(ActiveConfig{}));
    ActiveConfig c;
    c.n0 = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.epsilon = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.k_max = -1;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.gamma = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.tau = -1;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = {};
    c.m = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("balanced initialisation") {
    std::vector<std::uint8_t> labels;
    for (int c = 0; c < 3; ++c) labels.insert(labels.end(), 100, static_cast<std::uint8_t>(c));
    Rng rng(1);
    const auto r = init_repset(labels, 10, rng);
    CHECK(r.size() == 30);
    std::array<int, 3> counts{};
    for (auto v : r) ++counts[labels[static_cast<std::size_t>(v)]];
    CHECK(counts == std::array<int, 3>{10, 10, 10});
    CHECK(std::set<Index>(r.begin(), r.end()).size() == 30);

    Rng again(1);
    CHECK(init_repset(labels, 10, again) == r);
}

TEST_CASE("initialisation caps at availability and skips ignore") {
    std::vector<std::uint8_t> labels(100, 0);
    labels.insert(labels.end(), 100, 1);
    labels.insert(labels.end(), 5, 2);
    labels.insert(labels.end(), 50, kIgnore);
    Rng rng(2);
    const auto r = init_repset(labels, 10, rng);
    std::array<int, 4> counts{};
    for (auto v : r) ++counts[std::min<int>(labels[static_cast<std::size_t>(v)], 3)];
    CHECK(counts == std::array<int, 4>{10, 10, 5, 0});

    const std::vector<std::uint8_t> none(10, kIgnore);
    CHECK_THROWS_AS(init_repset(none, 3, rng), InvalidArgument);
}

TEST_CASE("initialisation is uniform") {
    // Each of 20 nodes should be drawn about n0/20 of the time.
    const std::vector<std::uint8_t> labels(20, 1);
    Rng rng(3);
    std::array<int, 20> hits{};
    const int trials = 20000;
    for (int t = 0; t < trials; ++t)
        for (auto v : init_repset(labels, 5, rng)) ++hits[static_cast<std::size_t>(v)];
    for (int h : hits) CHECK(std::abs(h - trials / 4) < 400);
}

TEST_CASE("uncertainty scores") {
    const Mat u{{1, 0, 0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}};
    const std::vector<Index> cand{0, 1, 2, 3};
    const auto s = acquisition_uncertainty(u, cand);
    CHECK(s(0) == 0.0);
    CHECK(s(1) == doctest::Approx(1.0));
    CHECK(s(2) == doctest::Approx(0.7));
    CHECK(s(3) == doctest::Approx(0.7));
}

TEST_CASE("model change is zero on one-hot rows") {
    Rng rng(4);
    const Mat w = random_weights(rng, 12, 0.3);
    const auto g = graph_from_dense(w);
    const auto eig = lanczos_lowest(g.laplacian, 12);
    Mat u = random_scores(rng, 12, 3);
    u.row(5) << 0, 1, 0;
    const std::vector<Index> cand{5, 6};
    const auto s = acquisition_mc(u, eig, cand, 0.1, 0.1);
    CHECK(s(0) == 0.0);
    CHECK(s(1) > 0.0);
}

TEST_CASE("model change matches the dense covariance") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 6 + static_cast<Index>(rng.below(45));
        const Mat w = random_weights(rng, n, 0.2);
        const auto g = graph_from_dense(w);
        const auto eig = lanczos_lowest(g.laplacian, n);
        const double gamma = 0.05 + rng.uniform() * 0.3;
        const double tau = 0.05 + rng.uniform() * 0.3;
        const Mat u = random_scores(rng, n, 3);
        std::vector<Index> cand;
        for (Index i = 0; i < n; ++i)
            if (rng.uniform() < 0.7) cand.push_back(i);
        if (cand.empty()) cand.push_back(0);

        const Mat c = (g.laplacian.to_dense() + tau * tau * Mat::Identity(n, n)).inverse();
        const auto s = acquisition_mc(u, eig, cand, gamma, tau);
        for (std::size_t i = 0; i < cand.size(); ++i) {
            const Index k = cand[i];
            Index yhat = 0;
            u.row(k).maxCoeff(&yhat);
            Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(3);
            e(yhat) = 1;
            const double expected = (e - u.row(k)).norm() * c.col(k).norm() / (gamma * gamma + c(k, k));
            CHECK(std::abs(s(static_cast<Index>(i)) - expected) <= 1e-8);
            CHECK(s(static_cast<Index>(i)) >= 0.0);
        }
    }
}

TEST_CASE("model change is equal on symmetric nodes") {
    // Path 0-1-2-3-4 labeled at 2: nodes 0 and 4 mirror each other, as do 1 and 3.
    Mat w = Mat::Zero(5, 5);
    for (Index i = 0; i + 1 < 5; ++i) w(i, i + 1) = w(i + 1, i) = 1;
    const auto g = graph_from_dense(w);
    const auto eig = lanczos_lowest(g.laplacian, 5);
    Mat u(5, 2);
    u << 0.8, 0.2, 0.7, 0.3, 1, 0, 0.7, 0.3, 0.8, 0.2;
    const std::vector<Index> cand{0, 1, 3, 4};
    const auto s = acquisition_mc(u, eig, cand, 0.1, 0.1);
    CHECK(s(0) == doctest::Approx(s(3)).epsilon(1e-10));
    CHECK(s(1) == doctest::Approx(s(2)).epsilon(1e-10));
}

TEST_CASE("model change rejects mismatched eigenpairs") {
    const auto g = graph_from_dense(Mat{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    const auto eig = lanczos_lowest(g.laplacian, 2);
    const std::vector<Index> cand{0};
    CHECK_THROWS_AS(acquisition_mc(Mat::Zero(4, 2), eig, cand, 0.1, 0.1), InvalidArgument);
}

TEST_CASE("selection ties go to the lowest node") {
    const Eigen::VectorXd s{{0.5, 0.9, 0.9, 0.1}};
    const std::vector<Index> cand{8, 6, 3, 1};
    CHECK(select_candidate(s, cand) == 2);
    // The chosen node does not depend on evaluation order.
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::size_t> order{0, 1, 2, 3};
        for (std::size_t i = 3; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        Eigen::VectorXd ps(4);
        std::vector<Index> pc(4);
        for (std::size_t i = 0; i < 4; ++i) {
            ps(static_cast<Index>(i)) = s(static_cast<Index>(order[i]));
            pc[i] = cand[order[i]];
        }
        CHECK(pc[select_candidate(ps, pc)] == 3);
    }
    CHECK_THROWS_AS(select_candidate(Eigen::VectorXd(), std::vector<Index>{}), InvalidArgument);
}

TEST_CASE("random scores are uniform") {
    Rng rng(7);
    const auto s = acquisition_random(10000, rng);
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() < 1.0);
    CHECK(s.mean() == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("holdout accuracy") {
    const std::vector<std::uint8_t> pred{0, 1, 1, 2, 0};
    const std::vector<std::uint8_t> truth{0, 1, 0, kIgnore, 2};
    CHECK(holdout_accuracy(pred, truth, {false, false, false, false, false}) == doctest::Approx(0.5));
    CHECK(holdout_accuracy(pred, truth, {true, true, false, false, false}) == 0.0);
    CHECK(holdout_accuracy(pred, truth, {true, true, true, true, true}) == 1.0);
}

TEST_CASE("loop with K_max = 0") {
    Rng rng(8);
    const auto b = make_blobs(rng, 30);
    ActiveConfig cfg;
    cfg.k_max = 0;
    cfg.acquisition = Acquisition::uncertainty;
    const auto init = init_repset(b.truth, 3, rng);
    const auto res = active_learning_loop(b.graph, b.truth, init, cfg, rng);
    CHECK(res.selected == init);
    CHECK(res.trace.steps.empty());
    CHECK(res.trace.stop == StopReason::k_max);
}

TEST_CASE("loop with a huge epsilon stops after one acquisition") {
    Rng rng(9);
    const auto b = make_blobs(rng, 30);
    ActiveConfig cfg;
    cfg.epsilon = 2.0;
    for (auto acq : {Acquisition::model_change, Acquisition::uncertainty, Acquisition::random}) {
        cfg.acquisition = acq;
        const auto eig = lanczos_lowest(b.graph.laplacian, 20);
        const auto res = active_learning_loop(b.graph, b.truth, init_repset(b.truth, 3, rng), cfg, rng, {}, &eig);
        CHECK(res.trace.steps.size() == 1);
        CHECK(res.trace.stop == StopReason::epsilon);
        CHECK(res.selected.size() == 10);
    }
}

TEST_CASE("loop invariants") {
    Rng rng(10);
    for (int trial = 0; trial < 6; ++trial) {
        const auto b = make_blobs(rng, 25);
        ActiveConfig cfg;
        cfg.acquisition = static_cast<Acquisition>(trial % 3);
        cfg.epsilon = 1e-9;
        cfg.k_max = static_cast<Index>(rng.below(30));
        cfg.m = 20;
        const auto eig = lanczos_lowest(b.graph.laplacian, cfg.m);
        const auto init = init_repset(b.truth, 2, rng);
        const auto res = active_learning_loop(b.graph, b.truth, init, cfg, rng, {}, &eig);
        CHECK(res.selected.size() <= init.size() + static_cast<std::size_t>(cfg.k_max) + 1);
        CHECK(res.selected.size() == init.size() + res.trace.steps.size());
        CHECK(std::set<Index>(res.selected.begin(), res.selected.end()).size() == res.selected.size());
        CHECK(std::equal(init.begin(), init.end(), res.selected.begin()));
        for (std::size_t i = 0; i < res.trace.steps.size(); ++i) {
            const auto& st = res.trace.steps[i];
            CHECK(st.t == static_cast<Index>(i) + 1);
            CHECK(st.node == res.selected[init.size() + i]);
            CHECK(st.accuracy >= 0.0);
            CHECK(st.accuracy <= 1.0);
            CHECK(st.converged);
        }
    }
}

TEST_CASE("fixed acquisition budget") {
    Rng rng(11);
    const auto b = make_blobs(rng, 20);
    ActiveConfig cfg;
    cfg.acquisition = Acquisition::random;
    cfg.epsilon = 2.0;
    const auto res = active_learning_loop(b.graph, b.truth, init_repset(b.truth, 2, rng), cfg, rng, {}, nullptr, 7);
    CHECK(res.trace.steps.size() == 7);
    CHECK(res.trace.stop == StopReason::budget);
}

TEST_CASE("loop runs out of candidates") {
    Rng rng(12);
    const auto b = make_blobs(rng, 4);
    ActiveConfig cfg;
    cfg.acquisition = Acquisition::uncertainty;
    cfg.epsilon = 1e-12;
    const auto res = active_learning_loop(b.graph, b.truth, init_repset(b.truth, 1, rng), cfg, rng, {}, nullptr, 100);
    CHECK(res.selected.size() == 12);
    CHECK(res.trace.stop == StopReason::exhausted);
}

TEST_CASE("loop input checks") {
    Rng rng(13);
    const auto b = make_blobs(rng, 10);
    ActiveConfig cfg;
    CHECK_THROWS_AS(active_learning_loop(b.graph, b.truth, {0, 1, 2}, cfg, rng), InvalidArgument);
    cfg.acquisition = Acquisition::random;
    CHECK_THROWS_AS(active_learning_loop(b.graph, b.truth, {}, cfg, rng), InvalidArgument);
    CHECK_THROWS_AS(active_learning_loop(b.graph, b.truth, {0, 0}, cfg, rng), InvalidArgument);
    CHECK_THROWS_AS(active_learning_loop(b.graph, b.truth, {99}, cfg, rng), InvalidArgument);
}

TEST_CASE("loop is deterministic") {
    Rng data(14);
    const auto b = make_blobs(data, 30);
    for (auto acq : {Acquisition::model_change, Acquisition::random}) {
        ActiveConfig cfg;
        cfg.acquisition = acq;
        cfg.m = 20;
        const auto eig = lanczos_lowest(b.graph.laplacian, cfg.m);
        Rng r1(5), r2(5);
        const auto a = active_learning_loop(b.graph, b.truth, init_repset(b.truth, 3, r1), cfg, r1, {}, &eig);
        const auto c = active_learning_loop(b.graph, b.truth, init_repset(b.truth, 3, r2), cfg, r2, {}, &eig);
        CHECK(a.selected == c.selected);
    }
}

TEST_CASE("32x32 synthetic scene does not lose accuracy") {
    SynthConfig sc;
    sc.height = 32;
    sc.width = 32;
    sc.seed = 0;
    auto [patch, mask] = generate_synthetic(sc);
    const LabeledImage image{patch, mask, 0};
    const ActiveConfig cfg;
    const auto prepared = prepare_image(image, FeatureConfig{}, GraphConfig{}, cfg);
    const auto sel = select_representatives(prepared, cfg, {}, 0);
    REQUIRE_FALSE(sel.trace.steps.empty());
    CHECK(sel.trace.steps.back().accuracy >= sel.trace.initial_accuracy);
    for (const auto& rec : sel.records) {
        CHECK(rec.label == mask.labels[rec.provenance.row * 32 + rec.provenance.col]);
        CHECK(rec.features.size() == 294);
    }
}

TEST_CASE("RepSet file round trip") {
    test::TempDir dir("repset");
    const auto r = small_repset();
    save_repset(r, dir / "r.gaps");
    CHECK(load_repset(dir / "r.gaps") == r);
    const auto bytes = encode_repset(r);
    CHECK(bytes.size() == 4 + 1 + 4 + 4 + 3 * (1 + 1 + 12 + 12));
    CHECK(bytes[0] == 'G');
    CHECK(bytes[3] == 'S');
    CHECK(r.features().rows() == 3);
    CHECK(r.labels() == std::vector<std::uint8_t>{0, 2, 1});
}

TEST_CASE("RepSet validation") {
    auto r = small_repset();
    r.records[2].provenance = r.records[0].provenance;
    CHECK_THROWS_AS(validate(r), InvalidArgument);
    r = small_repset();
    r.records[1].label = 3;
    CHECK_THROWS_AS(validate(r), InvalidArgument);
    r = small_repset();
    r.records[1].features.pop_back();
    CHECK_THROWS_AS(validate(r), InvalidArgument);

    auto bytes = encode_repset(small_repset());
    bytes.pop_back();
    CHECK_THROWS_AS(decode_repset(bytes), FormatError);
    bytes = encode_repset(small_repset());
    bytes[9 + 1] = 7;  // phase byte of the first record
    CHECK_THROWS_AS(decode_repset(bytes), FormatError);
}

TEST_CASE("create_repset unions images in order") {
    std::vector<LabeledImage> images;
    for (std::uint32_t i = 0; i < 2; ++i) {
        SynthConfig sc;
        sc.height = 24;
        sc.width = 24;
        sc.channel_halfwidth = 3;
        sc.sediment_halfwidth = 2;
        sc.seed = i;
        auto [p, m] = generate_synthetic(sc);
        images.push_back({p, m, i});
    }
    ActiveConfig cfg;
    cfg.acquisition = Acquisition::uncertainty;
    cfg.n0 = 4;
    const auto one = create_repset(std::span(images).first(1), FeatureConfig{}, GraphConfig{}, cfg);
    const auto both = create_repset(images, FeatureConfig{}, GraphConfig{}, cfg);
    REQUIRE(both.traces.size() == 2);
    REQUIRE(both.repset.size() > one.repset.size());
    CHECK(std::equal(one.repset.records.begin(), one.repset.records.end(), both.repset.records.begin()));
    CHECK(both.repset.records.back().provenance.image_id == 1);
    CHECK(create_repset(images, FeatureConfig{}, GraphConfig{}, cfg).repset == both.repset);
    CHECK_NOTHROW(validate(both.repset));
}
