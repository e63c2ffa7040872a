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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gap/active.hpp"
#include "gap/cli.hpp"
#include "gap/error.hpp"
#include "gap/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gap;
using Mat = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

int failures = 0;

void run(const std::string& id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (limit_s > 0 && secs >= limit_s) {
        out.pass = false;
        out.detail += (out.detail.empty() ? "" : "; ") + std::string("over time limit");
    }
    if (!out.pass) ++failures;
    std::printf("%s  %-3s %-46s %8.2f s  %s\n", out.pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), secs,
                out.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Random connected KNN graph on clustered points in 5 dimensions.
SparseGraph random_knn_graph(Rng& rng, Index n) {
    while (true) {
        FeatureMatrix f;
        f.data.resize(n, 5);
        f.provenance.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            const auto cluster = static_cast<Index>(rng.below(3));
            for (Index j = 0; j < 5; ++j) f.data(i, j) = static_cast<float>((j == cluster ? 1.0 : 0.1) + 0.4 * rng.normal());
        }
        const Index k = std::min<Index>(n - 1, 3 + static_cast<Index>(rng.below(6)));
        auto g = build_graph(normalize_rows(f).features.data, {k, 4.0, 1e-12});
        if (oracle::connected(g)) return g;
    }
}

LabelAssignment random_labels(Rng& rng, Index n, Index count) {
    std::vector<Index> nodes(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < count; ++i) {
        std::swap(nodes[static_cast<std::size_t>(i)],
                  nodes[static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i))]);
    }
    nodes.resize(static_cast<std::size_t>(count));
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        codes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i < 3 ? i : static_cast<Index>(rng.below(3)));
    }
    return LabelAssignment::from_codes(nodes, codes, 3);
}

Mat random_scores(Rng& rng, Index n) {
    Mat u(n, 3);
    for (Index i = 0; i < n; ++i) {
        for (Index c = 0; c < 3; ++c) u(i, c) = rng.uniform();
        u.row(i) /= u.row(i).sum();
    }
    return u;
}

LabelMask random_mask(Rng& rng, std::uint32_t h, std::uint32_t w) {
    LabelMask m{h, w, std::vector<std::uint8_t>(std::size_t{h} * w)};
    const auto cell = static_cast<std::uint32_t>(1 + rng.below(5));
    const bool ignore = rng.uniform() < 0.5;
    for (std::uint32_t r = 0; r < h; ++r)
        for (std::uint32_t c = 0; c < w; ++c) {
            auto v = static_cast<std::uint8_t>(((r / cell) * 7 + (c / cell) * 3 + rng.below(2)) % 3);
            if (ignore && rng.uniform() < 0.05) v = kIgnore;
            m.labels[std::size_t{r} * w + c] = v;
        }
    return m;
}

Outcome structural_constants() {
    Outcome o;
    const RasterPatch patch{256, 256, 6, std::vector<float>(256 * 256 * 6, 0.25f)};
    const auto f = extract_features(patch, FeatureConfig{3, 1.5});
    o.require(FeatureConfig{}.dim(6) == 294, "dim law");
    o.require(f.dim() == 294, "feature width " + std::to_string(f.dim()));
    o.require(f.rows() == 65536, "row count " + std::to_string(f.rows()));
    o.detail = o.pass ? "dim 294, 65536 rows" : o.detail;
    return o;
}

Outcome harmonic_oracle() {
    Outcome o;
    Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 12 + static_cast<Index>(rng.below(49));
        const auto g = random_knn_graph(rng, n);
        const auto labels = random_labels(rng, n, 3 + static_cast<Index>(rng.below(6)));
        const auto s = laplace_learning(g, labels);
        o.require(s.converged, "CG did not converge");
        const Mat ref = oracle::dense_harmonic(g.weights.to_dense(), labels);
        worst = std::max(worst, (s.u - ref).cwiseAbs().maxCoeff());
        for (Index i = 0; i < n; ++i) {
            if (s.state[static_cast<std::size_t>(i)] != NodeState::solved) continue;
            o.require(s.u.row(i).minCoeff() >= -1e-9 && s.u.row(i).maxCoeff() <= 1 + 1e-9, "maximum principle");
            o.require(std::abs(s.u.row(i).sum() - 1.0) <= 1e-6, "row sum");
        }
    }
    o.require(worst <= 1e-8, fmt("max abs diff %.3g", worst));
    if (o.pass) o.detail = fmt("50 graphs, max abs diff %.3g", worst);
    return o;
}

Outcome mc_oracle() {
    Outcome o;
    Rng rng(77);
    double worst = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const Index n = 10 + static_cast<Index>(rng.below(41));
        const auto g = random_knn_graph(rng, n);
        const auto eig = lanczos_lowest(g.laplacian, n);
        Mat u = random_scores(rng, n);
        u.row(0) << 0, 0, 1;
        std::vector<Index> cand;
        for (Index i = 0; i < n; ++i) cand.push_back(i);
        const double gamma = 0.1, tau = 0.1;
        const auto s = acquisition_mc(u, eig, cand, gamma, tau);
        const auto ref = oracle::dense_mc(g.laplacian.to_dense(), u, cand, gamma, tau);
        worst = std::max(worst, (s - ref).cwiseAbs().maxCoeff());
        o.require(s(0) == 0.0, "one-hot candidate scored nonzero");
    }
    o.require(worst <= 1e-8, fmt("max abs diff %.3g", worst));
    if (o.pass) o.detail = fmt("25 graphs, max abs diff %.3g", worst);
    return o;
}

Outcome metric_oracle() {
    Outcome o;
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = random_mask(rng, static_cast<std::uint32_t>(1 + rng.below(32)),
                                   static_cast<std::uint32_t>(1 + rng.below(32)));
        o.require((boundary_distance_map(m) == oracle::brute_force_distance(m)).all(),
                  "distance map differs on trial " + std::to_string(trial));
    }
    const auto strip = boundary_distance_map(LabelMask{1, 4, {0, 0, 1, 1}});
    o.require(strip(0, 0) == 2 && strip(0, 1) == 1 && strip(0, 2) == 1 && strip(0, 3) == 2, "strip distances");

    LabelMask truth{10, 10, std::vector<std::uint8_t>(100, kLand)};
    for (std::size_t i = 0; i < 20; ++i) truth.labels[i] = i < 15 ? kWater : kSediment;
    const LabelMask land{10, 10, std::vector<std::uint8_t>(100, kLand)};
    o.require(overall_accuracy(land, truth) == 0.8, "all-land OA on 80% land");

    o.require(overall_accuracy(LabelMask{1, 4, {0, 1, 1, 2}}, LabelMask{1, 4, {0, 1, 2, 2}}) == 0.75, "1 of 4 wrong");

    LabelMask t2{10, 12, std::vector<std::uint8_t>(120, kLand)};
    for (std::uint32_t r = 0; r < 10; ++r) t2.labels[std::size_t{r} * 12] = kWater;
    LabelMask p2 = t2;
    p2.labels[5 * 12 + 9] = kWater;
    o.require(boundary_distance_map(t2)(5, 9) == 9.0, "far pixel distance");
    o.require(boundary_accuracy(p2, t2, 3.0) == 1.0, "BA(3) with a far error");
    o.require(overall_accuracy(p2, t2) == 119.0 / 120.0, "OA with a far error");
    const LabelMask uniform{2, 2, {1, 1, 1, 1}};
    o.require(!boundary_accuracy(uniform, uniform, 3.0).has_value(), "undefined BA");
    if (o.pass) o.detail = "100 masks exact, hand counts exact";
    return o;
}

Outcome feature_oracle() {
    Outcome o;
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto h = static_cast<std::uint32_t>(2 + rng.below(7));
        const auto w = static_cast<std::uint32_t>(2 + rng.below(7));
        const auto b = static_cast<std::uint16_t>(1 + rng.below(2));
        RasterPatch p{h, w, b, std::vector<float>(std::size_t{h} * w * b)};
        for (auto& s : p.samples) s = static_cast<float>(rng.normal());
        const int k = 1 + static_cast<int>(rng.below(std::min(h, w) - 1));
        const double sigma = FeatureConfig::with_half_width(k).sigma_g;
        const auto f = extract_features(p, {k, sigma});
        o.require((f.data.array() == oracle::naive_features(p, k, sigma).array()).all(),
                  "mismatch on trial " + std::to_string(trial));
    }
    if (o.pass) o.detail = "300 patches, 0 ULP";
    return o;
}

Outcome sparse_oracles() {
    Outcome o;
    Rng rng(6);
    double spmv_err = 0, cg_err = 0, eig_err = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Mat d = Mat::Zero(50, 50);
        for (Index r = 0; r < 50; ++r)
            for (Index c = 0; c < 50; ++c)
                if (rng.uniform() < 0.2) d(r, c) = rng.normal();
        Eigen::VectorXd x(50);
        for (Index i = 0; i < 50; ++i) x(i) = rng.normal();
        spmv_err = std::max(spmv_err, (spmv(CsrMatrix<double>::from_dense(d), x) - d * x).cwiseAbs().maxCoeff());
    }
    o.require(spmv_err <= 1e-12, fmt("spmv diff %.3g", spmv_err));

    const auto two = cg_solve(CsrMatrix<double>::from_dense(Mat{{2, 1}, {1, 2}}), Eigen::VectorXd{{3.0, 3.0}});
    o.require(two.converged && (two.x - Eigen::VectorXd::Ones(2)).norm() <= 1e-8, "2x2 CG");
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_knn_graph(rng, 100);
        const Mat a = g.laplacian.to_dense() + 0.1 * Mat::Identity(100, 100);
        Eigen::VectorXd b(100);
        for (Index i = 0; i < 100; ++i) b(i) = rng.normal();
        const auto res = cg_solve(CsrMatrix<double>::from_dense(a), b);
        o.require(res.converged, "CG did not converge");
        cg_err = std::max(cg_err, (res.x - a.partialPivLu().solve(b)).cwiseAbs().maxCoeff());
    }
    o.require(cg_err <= 1e-6, fmt("CG diff %.3g", cg_err));

    const auto diag = lanczos_lowest(CsrMatrix<double>::from_dense(Mat(Eigen::Vector3d(1, 2, 3).asDiagonal())), 2);
    o.require(std::abs(diag.eigenvalues(0) - 1) <= 1e-10 && std::abs(diag.eigenvalues(1) - 2) <= 1e-10, "diag(1,2,3)");
    const Mat path{{1, -1, 0, 0}, {-1, 2, -1, 0}, {0, -1, 2, -1}, {0, 0, -1, 1}};
    const auto pp = lanczos_lowest(CsrMatrix<double>::from_dense(path), 1);
    o.require(std::abs(pp.eigenvalues(0)) <= 1e-10 && (pp.eigenvectors.col(0).array() - 0.5).abs().maxCoeff() <= 1e-8,
              "path Laplacian null vector");
    for (int trial = 0; trial < 5; ++trial) {
        Mat s(60, 60);
        for (Index i = 0; i < 60; ++i)
            for (Index j = 0; j <= i; ++j) s(i, j) = s(j, i) = rng.normal();
        const auto a = CsrMatrix<double>::from_dense(s);
        const auto pairs = lanczos_lowest(a, 10);
        Eigen::SelfAdjointEigenSolver<Mat> dense(s, Eigen::EigenvaluesOnly);
        eig_err = std::max(eig_err, (pairs.eigenvalues - dense.eigenvalues().head(10)).cwiseAbs().maxCoeff());
        const Mat gram = pairs.eigenvectors.transpose() * pairs.eigenvectors;
        o.require((gram - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8, "orthonormality");
        for (Index i = 0; i < 10; ++i) {
            const Eigen::VectorXd v = pairs.eigenvectors.col(i);
            o.require((spmv(a, v) - pairs.eigenvalues(i) * v).norm() <= 1e-6 * std::max(1.0, pairs.eigenvalues(i)),
                      "eigen residual");
        }
    }
    o.require(eig_err <= 1e-8, fmt("eigenvalue diff %.3g", eig_err));
    if (o.pass) o.detail = fmt("spmv %.2g, CG %.2g, Lanczos %.2g", spmv_err, cg_err, eig_err);
    return o;
}

struct EndToEnd {
    std::filesystem::path data;
    std::filesystem::path manifest;
    std::string repset_bytes;
    std::string report_bytes;
    bool ran = false;
};

Outcome end_to_end(const test::TempDir& dir, EndToEnd& e2e, Outcome& budget, Outcome& accuracy) {
    Outcome o;
    PipelineConfig cfg;
    cfg.synth.train_images = 8;
    cfg.synth.test_images = 4;
    cfg.synth.base.seed = 0;
    {
        std::ofstream(dir / "config.json") << config_to_json(cfg);
    }
    const std::string c = (dir / "config.json").string();
    e2e.data = dir / "data";
    e2e.manifest = e2e.data / "manifest.json";
    o.require(run_cli({"synth", "--config", c, "--out", e2e.data.string()}) == 0, "synth failed");
    o.require(run_cli({"repset", "--manifest", e2e.manifest.string(), "--config", c, "--out",
                       (dir / "run1.gaps").string(), "--trace", (dir / "trace1.json").string()}) == 0,
              "repset failed");
    o.require(run_cli({"eval", "--manifest", e2e.manifest.string(), "--repset", (dir / "run1.gaps").string(),
                       "--config", c, "--out", (dir / "report1.json").string()}) == 0,
              "eval failed");
    if (!o.pass) return o;
    e2e.ran = true;
    e2e.repset_bytes = slurp(dir / "run1.gaps");
    e2e.report_bytes = slurp(dir / "report1.json");

    const auto repset = load_repset(dir / "run1.gaps");
    const std::size_t bound = 8 * static_cast<std::size_t>(3 * cfg.active.n0 + cfg.active.k_max + 1);
    budget.require(repset.size() <= bound, "RepSet too large");
    budget.detail = "RepSet " + std::to_string(repset.size()) + " <= " + std::to_string(bound);

    const auto report = nlohmann::json::parse(e2e.report_bytes);
    const auto& agg = report["aggregate"];
    const double oa = agg["oa"].get<double>();
    std::int64_t total = 0, majority = 0;
    for (const auto& row : agg["confusion"]) {
        std::int64_t s = 0;
        for (const auto& v : row) s += v.get<std::int64_t>();
        total += s;
        majority = std::max(majority, s);
    }
    const double rate = static_cast<double>(majority) / static_cast<double>(total);
    accuracy.require(oa >= rate + 0.10, "OA below majority + 10 pp");
    accuracy.detail = fmt("test OA %.4f, majority rate %.4f", oa, rate);
    o.detail = "synth + repset + eval";
    return o;
}

Outcome mc_versus_random(const EndToEnd& e2e) {
    Outcome o;
    if (!e2e.ran) {
        o.require(false, "end-to-end data unavailable");
        return o;
    }
    PipelineConfig cfg;
    const auto manifest = load_manifest(e2e.manifest);
    const auto train = load_split(manifest, Split::train);
    const auto test = load_split(manifest, Split::test);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < test.size(); ++i) names.push_back("test_" + std::to_string(i));

    std::vector<PreparedImage> prepared;
    for (const auto& img : train) prepared.push_back(prepare_image(img, cfg.feature, cfg.graph, cfg.active));

    double mc_sum = 0, random_sum = 0;
    int mc_wins = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        ActiveConfig mc = cfg.active;
        mc.seed = static_cast<std::uint64_t>(s);
        ActiveConfig rnd = mc;
        rnd.acquisition = Acquisition::random;
        RepSet mc_set, rnd_set;
        mc_set.dim = rnd_set.dim = cfg.feature.dim(train[0].patch.bands);
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            const auto a = select_representatives(prepared[i], mc, cfg.solver, i);
            const auto budget = static_cast<Index>(a.trace.steps.size());
            const auto b = select_representatives(prepared[i], rnd, cfg.solver, i, budget);
            mc_set.records.insert(mc_set.records.end(), a.records.begin(), a.records.end());
            rnd_set.records.insert(rnd_set.records.end(), b.records.begin(), b.records.end());
        }
        o.require(mc_set.size() == rnd_set.size(), "budgets differ");
        const double mc_oa = *evaluate_images(test, names, mc_set, cfg).aggregate.oa();
        const double rnd_oa = *evaluate_images(test, names, rnd_set, cfg).aggregate.oa();
        mc_sum += mc_oa;
        random_sum += rnd_oa;
        if (mc_oa >= rnd_oa) ++mc_wins;
    }
    const double mc_mean = mc_sum / seeds;
    const double rnd_mean = random_sum / seeds;
    o.require(mc_mean >= rnd_mean, "MC mean below random mean");
    o.detail = fmt("mean OA MC %.4f vs random %.4f", mc_mean, rnd_mean) + ", MC >= random on " +
               std::to_string(mc_wins) + "/10 seeds";
    return o;
}

Outcome determinism(const test::TempDir& dir, const EndToEnd& e2e) {
    Outcome o;
    if (!e2e.ran) {
        o.require(false, "end-to-end data unavailable");
        return o;
    }
    const std::string c = (dir / "config.json").string();
    o.require(run_cli({"repset", "--manifest", e2e.manifest.string(), "--config", c, "--out",
                       (dir / "run2.gaps").string()}) == 0,
              "repset failed");
    o.require(run_cli({"eval", "--manifest", e2e.manifest.string(), "--repset", (dir / "run2.gaps").string(),
                       "--config", c, "--out", (dir / "report2.json").string()}) == 0,
              "eval failed");
    o.require(slurp(dir / "run2.gaps") == e2e.repset_bytes, "RepSet files differ");
    o.require(slurp(dir / "report2.json") == e2e.report_bytes, "reports differ");
    if (o.pass) o.detail = "RepSet and report bitwise identical";
    return o;
}

Outcome termination() {
    Outcome o;
    SynthConfig sc;
    sc.height = 32;
    sc.width = 32;
    auto [patch, mask] = generate_synthetic(sc);
    ActiveConfig cfg;
    const auto prepared = prepare_image({patch, mask, 0}, FeatureConfig{}, GraphConfig{}, cfg);

    cfg.epsilon = 2.0;
    const auto one = select_representatives(prepared, cfg, {}, 0);
    o.require(one.trace.steps.size() == 1 && one.trace.stop == StopReason::epsilon,
              "epsilon = 2 made " + std::to_string(one.trace.steps.size()) + " acquisitions");

    cfg = ActiveConfig{};
    cfg.k_max = 0;
    const auto none = select_representatives(prepared, cfg, {}, 0);
    o.require(none.trace.steps.empty() && none.trace.stop == StopReason::k_max,
              "K_max = 0 made " + std::to_string(none.trace.steps.size()) + " acquisitions");
    o.require(none.records.size() == none.trace.initial_size, "K_max = 0 changed the set");
    if (o.pass) o.detail = "1 and 0 acquisitions";
    return o;
}

}  // namespace

int main() {
    run("1", "structural constants", 1.0, structural_constants);
    run("2", "harmonic oracle", 10.0, harmonic_oracle);
    run("3", "model-change oracle", 10.0, mc_oracle);
    run("4", "metric oracle", 10.0, metric_oracle);
    run("5", "feature oracle", 5.0, feature_oracle);
    run("6", "sparse kernel oracles", 10.0, sparse_oracles);

    test::TempDir dir("acceptance");
    EndToEnd e2e;
    Outcome budget, accuracy;
    run("7a", "end-to-end run under 2 min", 120.0, [&] { return end_to_end(dir, e2e, budget, accuracy); });
    if (!e2e.ran) {
        budget.require(false, "end-to-end run failed");
        accuracy.require(false, "end-to-end run failed");
    }
    run("7b", "RepSet budget bound", 0, [&] { return budget; });
    run("7c", "test OA beats majority by 10 pp", 0, [&] { return accuracy; });
    run("7d", "MC vs random at identical budgets", 0, [&] { return mc_versus_random(e2e); });
    run("8", "determinism of repset + eval", 180.0, [&] { return determinism(dir, e2e); });
    run("9", "termination rule", 5.0, termination);

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
