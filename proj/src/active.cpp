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

#include "gap/active.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>

#include "binary.hpp"
#include "gap/error.hpp"

namespace gap {

std::string to_string(Acquisition a) {
    switch (a) {
        case Acquisition::model_change: return "model-change";
        case Acquisition::uncertainty: return "uncertainty";
        case Acquisition::random: return "random";
    }
    return "?";
}

Acquisition parse_acquisition(const std::string& name) {
    if (name == "model-change") return Acquisition::model_change;
    if (name == "uncertainty") return Acquisition::uncertainty;
    if (name == "random") return Acquisition::random;
    throw InvalidArgument("unknown acquisition \"" + name + "\" (expected model-change, uncertainty or random)");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::epsilon: return "epsilon";
        case StopReason::k_max: return "k_max";
        case StopReason::exhausted: return "exhausted";
        case StopReason::budget: return "budget";
    }
    return "?";
}

void validate(const ActiveConfig& config) {
    if (config.n0 < 1) throw InvalidArgument("active n0 must be >= 1");
    if (!(config.epsilon > 0.0)) throw InvalidArgument("active epsilon must be > 0");
    if (config.k_max < 0) throw InvalidArgument("active k_max must be >= 0");
    if (!(config.gamma > 0.0) || !(config.tau > 0.0)) throw InvalidArgument("active gamma and tau must be > 0");
    if (config.m < 1) throw InvalidArgument("active eigenpair count m must be >= 1");
}

FeatureMatrix RepSet::features() const {
    FeatureMatrix out;
    out.data.resize(static_cast<Index>(records.size()), dim);
    out.provenance.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out.data.row(static_cast<Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(records[i].features.data(), dim);
        out.provenance.push_back(records[i].provenance);
    }
    return out;
}

std::vector<std::uint8_t> RepSet::labels() const {
    std::vector<std::uint8_t> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

void validate(const RepSet& repset) {
    if (repset.dim < 1) throw InvalidArgument("RepSet dimension must be positive");
    std::set<Provenance> seen;
    for (std::size_t i = 0; i < repset.records.size(); ++i) {
        const auto& r = repset.records[i];
        if (static_cast<Index>(r.features.size()) != repset.dim) {
            throw InvalidArgument("RepSet record " + std::to_string(i) + " has the wrong dimension");
        }
        if (r.label > kSediment) throw InvalidArgument("RepSet record " + std::to_string(i) + " has an invalid class");
        if (!seen.insert(r.provenance).second) {
            throw InvalidArgument("RepSet record " + std::to_string(i) + " repeats an (image, row, col) provenance");
        }
    }
}

std::vector<std::uint8_t> encode_repset(const RepSet& repset) {
    validate(repset);
    detail::ByteWriter w;
    w.reserve(13 + repset.records.size() * (14 + 4 * static_cast<std::size_t>(repset.dim)));
    w.magic("GAPS");
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(repset.records.size()));
    w.u32(static_cast<std::uint32_t>(repset.dim));
    for (const auto& r : repset.records) {
        w.u8(r.label);
        w.u8(static_cast<std::uint8_t>(r.phase));
        w.u32(r.provenance.image_id);
        w.u32(r.provenance.row);
        w.u32(r.provenance.col);
        for (float v : r.features) w.f32(v);
    }
    return std::move(w.bytes());
}

RepSet decode_repset(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes, "GAPS");
    r.magic("GAPS");
    r.version(1);
    const auto count = r.u32();
    RepSet out;
    out.dim = r.u32();
    if (out.dim < 1) throw FormatError(FormatError::Kind::bad_header, "GAPS: dimension must be positive", 9);
    r.need(std::size_t{count} * (14 + 4 * static_cast<std::size_t>(out.dim)));
    out.records.resize(count);
    for (auto& rec : out.records) {
        const auto at = static_cast<std::int64_t>(r.pos());
        rec.label = r.u8();
        const auto phase = r.u8();
        if (rec.label > kSediment) {
            throw FormatError(FormatError::Kind::invalid_class, "GAPS: invalid class " + std::to_string(rec.label), at);
        }
        if (phase > 1) throw FormatError(FormatError::Kind::bad_header, "GAPS: invalid phase", at + 1);
        rec.phase = static_cast<Phase>(phase);
        rec.provenance.image_id = r.u32();
        rec.provenance.row = r.u32();
        rec.provenance.col = r.u32();
        rec.features.resize(static_cast<std::size_t>(out.dim));
        for (auto& v : rec.features) {
            const auto vat = static_cast<std::int64_t>(r.pos());
            v = r.f32();
            if (!std::isfinite(v)) throw FormatError(FormatError::Kind::non_finite, "GAPS: non-finite feature", vat);
        }
    }
    r.expect_end();
    return out;
}

void save_repset(const RepSet& repset, const std::filesystem::path& path) {
    detail::write_file(path, encode_repset(repset));
}

RepSet load_repset(const std::filesystem::path& path) { return decode_repset(detail::read_file(path)); }

std::vector<Index> init_repset(std::span<const std::uint8_t> labels, Index n0, Rng& rng, int classes) {
    if (n0 < 1) throw InvalidArgument("n0 must be >= 1");
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < classes) by_class[labels[i]].push_back(static_cast<Index>(i));
    }
    std::vector<Index> out;
    for (auto& pool : by_class) {
        const std::size_t take = std::min(static_cast<std::size_t>(n0), pool.size());
        // Partial Fisher-Yates.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }
    if (out.empty()) throw InvalidArgument("no labelable nodes for initialisation");
    return out;
}

Eigen::VectorXd acquisition_mc(const Eigen::MatrixXd& scores, const EigenPairs<double>& eig,
                               std::span<const Index> candidates, double gamma, double tau) {
    if (eig.eigenvectors.rows() != scores.rows() || eig.eigenvectors.cols() != eig.eigenvalues.size()) {
        throw InvalidArgument("eigenpairs do not match the score matrix (" + std::to_string(eig.eigenvectors.rows()) +
                              " rows vs " + std::to_string(scores.rows()) + " nodes)");
    }
    const Eigen::VectorXd inv = (eig.eigenvalues.array() + tau * tau).inverse().matrix();
    const double g2 = gamma * gamma;
    Eigen::VectorXd out(static_cast<Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Index k = candidates[i];
        const auto row = scores.row(k);
        Index pseudo = 0;
        for (Index c = 1; c < row.size(); ++c) {
            if (row(c) > row(pseudo)) pseudo = c;
        }
        Eigen::RowVectorXd residual = -row;
        residual(pseudo) += 1.0;
        // C e_k = V diag(inv) V^T e_k, and V has orthonormal columns, so
        // ||C e_k|| = ||diag(inv) v_k|| with v_k the k-th row of V.
        const auto vk = eig.eigenvectors.row(k).transpose();
        const double column_norm = inv.cwiseProduct(vk).norm();
        const double ckk = vk.dot(inv.cwiseProduct(vk));
        out(static_cast<Index>(i)) = residual.norm() * column_norm / (g2 + ckk);
    }
    return out;
}

Eigen::VectorXd acquisition_uncertainty(const Eigen::MatrixXd& scores, std::span<const Index> candidates) {
    Eigen::VectorXd out(static_cast<Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto row = scores.row(candidates[i]);
        double first = -std::numeric_limits<double>::infinity();
        double second = -std::numeric_limits<double>::infinity();
        for (Index c = 0; c < row.size(); ++c) {
            if (row(c) > first) {
                second = first;
                first = row(c);
            } else if (row(c) > second) {
                second = row(c);
            }
        }
        out(static_cast<Index>(i)) = row.size() < 2 ? 0.0 : 1.0 - (first - second);
    }
    return out;
}

Eigen::VectorXd acquisition_random(std::size_t count, Rng& rng) {
    Eigen::VectorXd out(static_cast<Index>(count));
    for (Index i = 0; i < out.size(); ++i) out(i) = rng.uniform();
    return out;
}

std::size_t select_candidate(const Eigen::VectorXd& scores, std::span<const Index> candidates) {
    if (candidates.empty()) throw InvalidArgument("no candidates to select from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double s = scores(static_cast<Index>(i));
        const double b = scores(static_cast<Index>(best));
        if (s > b || (s == b && candidates[i] < candidates[best])) best = i;
    }
    return best;
}

double holdout_accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                        const std::vector<bool>& excluded) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (excluded[i] || truth[i] == kIgnore) continue;
        ++total;
        if (predicted[i] == truth[i]) ++correct;
    }
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

LoopResult active_learning_loop(const SparseGraph& graph, std::span<const std::uint8_t> truth,
                                std::vector<Index> initial, const ActiveConfig& config, Rng& rng,
                                const SolverConfig& solver, const EigenPairs<double>* eig,
                                std::optional<Index> fixed_acquisitions, int classes) {
    validate(config);
    const Index n = graph.n;
    if (static_cast<Index>(truth.size()) != n) throw InvalidArgument("ground truth length does not match the graph");
    if (initial.empty()) throw InvalidArgument("initial representative set is empty");
    if (config.acquisition == Acquisition::model_change && eig == nullptr) {
        throw InvalidArgument("model-change acquisition needs Laplacian eigenpairs");
    }

    LoopResult out;
    std::vector<bool> in_set(static_cast<std::size_t>(n), false);
    for (Index v : initial) {
        if (v < 0 || v >= n || truth[static_cast<std::size_t>(v)] >= classes) {
            throw InvalidArgument("initial node " + std::to_string(v) + " is out of range or unlabeled");
        }
        if (in_set[static_cast<std::size_t>(v)]) throw InvalidArgument("initial set repeats node " + std::to_string(v));
        in_set[static_cast<std::size_t>(v)] = true;
    }
    out.initial_count = initial.size();
    out.trace.initial_size = initial.size();
    out.selected = std::move(initial);

    auto solve = [&](const Eigen::MatrixXd* warm) {
        std::vector<std::uint8_t> codes;
        codes.reserve(out.selected.size());
        for (Index v : out.selected) codes.push_back(truth[static_cast<std::size_t>(v)]);
        return laplace_learning(graph, LabelAssignment::from_codes(out.selected, codes, classes), solver, warm);
    };

    ScoreMatrix scores = solve(nullptr);
    out.trace.initial_accuracy = holdout_accuracy(predict_labels(scores), truth, in_set);

    std::vector<Index> candidates;
    for (Index t = 0;; ++t) {
        if (fixed_acquisitions) {
            if (t >= *fixed_acquisitions) {
                out.trace.stop = StopReason::budget;
                break;
            }
        } else {
            if (t >= 1) {
                const double current = out.trace.steps.back().accuracy;
                const double before = out.trace.steps.size() >= 2 ? out.trace.steps[out.trace.steps.size() - 2].accuracy
                                                                   : out.trace.initial_accuracy;
                if (std::abs(current - before) < config.epsilon) {
                    out.trace.stop = StopReason::epsilon;
                    break;
                }
            }
            if (t + 1 > config.k_max) {
                out.trace.stop = StopReason::k_max;
                break;
            }
        }

        candidates.clear();
        for (Index v = 0; v < n; ++v) {
            if (!in_set[static_cast<std::size_t>(v)] && truth[static_cast<std::size_t>(v)] < classes) {
                candidates.push_back(v);
            }
        }
        if (candidates.empty()) {
            out.trace.stop = StopReason::exhausted;
            break;
        }

        Eigen::VectorXd acq;
        switch (config.acquisition) {
            case Acquisition::model_change:
                acq = acquisition_mc(scores.u, *eig, candidates, config.gamma, config.tau);
                break;
            case Acquisition::uncertainty:
                acq = acquisition_uncertainty(scores.u, candidates);
                break;
            case Acquisition::random:
                acq = acquisition_random(candidates.size(), rng);
                break;
        }
        const std::size_t pick = select_candidate(acq, candidates);
        const Index node = candidates[pick];
        in_set[static_cast<std::size_t>(node)] = true;
        out.selected.push_back(node);

        scores = solve(&scores.u);
        const double accuracy = holdout_accuracy(predict_labels(scores), truth, in_set);
        out.trace.steps.push_back({t + 1, node, acq(static_cast<Index>(pick)), accuracy, scores.converged});
    }
    return out;
}

PreparedImage prepare_image(const LabeledImage& image, const FeatureConfig& feature, const GraphConfig& graph,
                            const ActiveConfig& active) {
    validate(image.mask);
    if (image.mask.height != image.patch.height || image.mask.width != image.patch.width) {
        throw InvalidArgument("image " + std::to_string(image.image_id) + ": patch and mask dimensions differ");
    }
    PreparedImage out;
    out.features = extract_features(image.patch, feature, image.image_id);
    out.graph = build_graph(normalize_rows(out.features).features.data, graph);
    if (active.acquisition == Acquisition::model_change) {
        out.eig = lanczos_lowest(out.graph.laplacian, std::min(active.m, out.graph.n), 1e-10, active.seed);
    }
    out.truth = image.mask.labels;
    return out;
}

ImageSelection select_representatives(const PreparedImage& image, const ActiveConfig& active, const SolverConfig& solver,
                                      std::size_t position, std::optional<Index> fixed_acquisitions) {
    // Independent streams per image keep results unchanged under image-level parallelism.
    Rng rng(SplitMix64(active.seed + 0x9e3779b97f4a7c15ULL * (position + 1)).next());
    auto initial = init_repset(image.truth, active.n0, rng);

    std::set<std::uint8_t> present;
    for (Index v : initial) present.insert(image.truth[static_cast<std::size_t>(v)]);
    if (present.size() == 1) {
        std::cerr << "warning: training image " << position << " contains a single class\n";
    }

    const auto loop = active_learning_loop(image.graph, image.truth, std::move(initial), active, rng, solver,
                                           image.eig ? &*image.eig : nullptr, fixed_acquisitions);
    ImageSelection out;
    out.trace = loop.trace;
    const Index dim = image.features.dim();
    for (std::size_t i = 0; i < loop.selected.size(); ++i) {
        const Index v = loop.selected[i];
        RepRecord rec;
        const auto row = image.features.data.row(v);
        rec.features.assign(row.data(), row.data() + dim);
        rec.label = image.truth[static_cast<std::size_t>(v)];
        rec.provenance = image.features.provenance[static_cast<std::size_t>(v)];
        rec.phase = i < loop.initial_count ? Phase::init : Phase::acquired;
        out.records.push_back(std::move(rec));
    }
    return out;
}

RepSetBuild create_repset(std::span<const LabeledImage> images, const FeatureConfig& feature, const GraphConfig& graph,
                          const ActiveConfig& active, const SolverConfig& solver,
                          std::span<const Index> fixed_budgets) {
    validate(feature);
    validate(graph);
    validate(active);
    if (images.empty()) throw InvalidArgument("RepSet construction needs at least one training image");
    if (!fixed_budgets.empty() && fixed_budgets.size() != images.size()) {
        throw InvalidArgument("fixed budgets need one entry per image");
    }
    RepSetBuild out;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto prepared = prepare_image(images[i], feature, graph, active);
        if (out.repset.dim == 0) out.repset.dim = prepared.features.dim();
        if (prepared.features.dim() != out.repset.dim) {
            throw InvalidArgument("training image " + std::to_string(i) + " has a different band count");
        }
        const auto budget = fixed_budgets.empty() ? std::nullopt : std::optional<Index>(fixed_budgets[i]);
        auto selection = select_representatives(prepared, active, solver, i, budget);
        for (auto& r : selection.records) out.repset.records.push_back(std::move(r));
        out.traces.push_back(std::move(selection.trace));
    }
    return out;
}

std::vector<LabeledImage> load_split(const DatasetManifest& manifest, Split split) {
    std::vector<LabeledImage> out;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (e.split != split) continue;
        out.push_back({load_patch(e.patch), load_labels(e.labels), static_cast<std::uint32_t>(i)});
    }
    return out;
}

}  // namespace gap
