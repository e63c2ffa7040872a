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

#include "gap/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include <json.hpp>

#include "binary.hpp"
#include "gap/error.hpp"

namespace gap {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw FormatError(FormatError::Kind::bad_json, "config: " + what); }

// Visits the keys of `obj`, rejecting any key without a handler.
void read_object(const json& obj, const std::string& where,
                 const std::map<std::string, std::function<void(const json&)>>& handlers) {
    if (!obj.is_object()) config_error(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        const auto it = handlers.find(key);
        if (it == handlers.end()) config_error("unknown key \"" + (where.empty() ? key : where + "." + key) + "\"");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            config_error("bad value for \"" + (where.empty() ? key : where + "." + key) + "\": " + e.what());
        }
    }
}

template <typename T>
std::function<void(const json&)> into(T& field) {
    return [&field](const json& v) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw json::type_error::create(302, "expected a boolean", &v);
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw json::type_error::create(302, "expected an integer", &v);
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0 &&
                std::is_unsigned_v<T>) {
                throw json::type_error::create(302, "expected a nonnegative integer", &v);
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw json::type_error::create(302, "expected a number", &v);
        }
        field = v.get<T>();
    };
}

json doc_from_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw FormatError(FormatError::Kind::bad_json, std::string("config: ") + e.what(),
                          static_cast<std::int64_t>(e.byte));
    }
}

}  // namespace

void validate(const PipelineConfig& config) {
    validate(config.feature);
    validate(config.graph);
    validate(config.active);
    if (!(config.solver.tol > 0.0)) throw InvalidArgument("solver tol must be > 0");
    if (config.solver.max_iter < 0) throw InvalidArgument("solver max_iter must be >= 0");
    for (double d : config.d_list) {
        if (!(d >= 0.0)) throw InvalidArgument("metric distances must be >= 0");
    }
    validate(config.synth.base);
}

PipelineConfig parse_config(std::string_view json_text) {
    const json doc = doc_from_text(json_text);
    PipelineConfig cfg;
    bool sigma_given = false;
    read_object(doc, "",
                {{"feature",
                  [&](const json& v) {
                      read_object(v, "feature",
                                  {{"k", into(cfg.feature.k)},
                                   {"sigma_g", [&](const json& s) {
                                        into(cfg.feature.sigma_g)(s);
                                        sigma_given = true;
                                    }}});
                  }},
                 {"graph",
                  [&](const json& v) {
                      read_object(v, "graph",
                                  {{"k", into(cfg.graph.k)},
                                   {"alpha", into(cfg.graph.alpha)},
                                   {"min_scale", into(cfg.graph.min_scale)}});
                  }},
                 {"active",
                  [&](const json& v) {
                      read_object(v, "active",
                                  {{"n0", into(cfg.active.n0)},
                                   {"epsilon", into(cfg.active.epsilon)},
                                   {"k_max", into(cfg.active.k_max)},
                                   {"acquisition",
                                    [&](const json& a) {
                                        if (!a.is_string()) config_error("active.acquisition must be a string");
                                        cfg.active.acquisition = parse_acquisition(a.get<std::string>());
                                    }},
                                   {"gamma", into(cfg.active.gamma)},
                                   {"tau", into(cfg.active.tau)},
                                   {"m", into(cfg.active.m)},
                                   {"seed", into(cfg.active.seed)}});
                  }},
                 {"solver",
                  [&](const json& v) {
                      read_object(v, "solver",
                                  {{"tol", into(cfg.solver.tol)},
                                   {"max_iter", into(cfg.solver.max_iter)},
                                   {"jacobi", into(cfg.solver.jacobi)}});
                  }},
                 {"metrics",
                  [&](const json& v) {
                      read_object(v, "metrics", {{"d", [&](const json& d) {
                                                      if (!d.is_array()) config_error("metrics.d must be an array");
                                                      cfg.d_list.clear();
                                                      for (const auto& x : d) {
                                                          if (!x.is_number()) config_error("metrics.d entries must be numbers");
                                                          cfg.d_list.push_back(x.get<double>());
                                                      }
                                                  }}});
                  }},
                 {"collapse_sediment", into(cfg.collapse_sediment)},
                 {"output_dir",
                  [&](const json& v) {
                      if (!v.is_string()) config_error("output_dir must be a string");
                      cfg.output_dir = v.get<std::string>();
                  }},
                 {"synth", [&](const json& v) {
                      auto& s = cfg.synth.base;
                      read_object(v, "synth",
                                  {{"height", into(s.height)},
                                   {"width", into(s.width)},
                                   {"bands", into(s.bands)},
                                   {"class_means", into(s.class_means)},
                                   {"noise_sigma", into(s.noise_sigma)},
                                   {"channel_amplitude", into(s.channel_amplitude)},
                                   {"channel_period", into(s.channel_period)},
                                   {"channel_halfwidth", into(s.channel_halfwidth)},
                                   {"sediment_halfwidth", into(s.sediment_halfwidth)},
                                   {"seed", into(s.seed)},
                                   {"train_images", into(cfg.synth.train_images)},
                                   {"test_images", into(cfg.synth.test_images)}});
                  }}});
    if (!sigma_given) cfg.feature.sigma_g = 0.5 * cfg.feature.k;
    validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["feature"] = {{"k", c.feature.k}, {"sigma_g", c.feature.sigma_g}};
    j["graph"] = {{"k", c.graph.k}, {"alpha", c.graph.alpha}, {"min_scale", c.graph.min_scale}};
    j["active"] = {{"n0", c.active.n0},       {"epsilon", c.active.epsilon},
                   {"k_max", c.active.k_max}, {"acquisition", to_string(c.active.acquisition)},
                   {"gamma", c.active.gamma}, {"tau", c.active.tau},
                   {"m", c.active.m},         {"seed", c.active.seed}};
    j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"jacobi", c.solver.jacobi}};
    j["metrics"] = {{"d", c.d_list}};
    j["collapse_sediment"] = c.collapse_sediment;
    j["output_dir"] = c.output_dir.generic_string();
    const auto& s = c.synth.base;
    j["synth"] = {{"height", s.height},
                  {"width", s.width},
                  {"bands", s.bands},
                  {"class_means", s.class_means},
                  {"noise_sigma", s.noise_sigma},
                  {"channel_amplitude", s.channel_amplitude},
                  {"channel_period", s.channel_period},
                  {"channel_halfwidth", s.channel_halfwidth},
                  {"sediment_halfwidth", s.sediment_halfwidth},
                  {"seed", s.seed},
                  {"train_images", c.synth.train_images},
                  {"test_images", c.synth.test_images}};
    return j.dump(2) + "\n";
}

PredictionMap predict_image(const RepSet& repset, const RasterPatch& patch, const PipelineConfig& config,
                            std::uint32_t image_id) {
    validate(config.feature);
    validate(repset);
    const Index expected = config.feature.dim(patch.bands);
    if (repset.dim != expected) {
        throw InvalidArgument("RepSet dimension " + std::to_string(repset.dim) + " does not match (2k+1)^2 * bands = " +
                              std::to_string(expected));
    }
    if (repset.records.empty()) throw InvalidArgument("RepSet is empty");

    const auto pixels = extract_features(patch, config.feature, image_id);
    const Index r = static_cast<Index>(repset.size());
    FeatureMatrix joint;
    joint.data.resize(r + pixels.rows(), expected);
    joint.data.topRows(r) = repset.features().data;
    joint.data.bottomRows(pixels.rows()) = pixels.data;
    const auto graph = build_graph(normalize_rows(joint).features.data, config.graph);

    std::vector<Index> labeled(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) labeled[static_cast<std::size_t>(i)] = i;
    const auto codes = repset.labels();
    const auto scores =
        laplace_learning(graph, LabelAssignment::from_codes(std::move(labeled), codes, kDefaultClassCount), config.solver);
    if (!scores.converged) throw ConvergenceError("Laplace learning did not converge on the prediction graph");

    PredictionMap out;
    out.labels = {patch.height, patch.width, std::vector<std::uint8_t>(pixels.rows())};
    out.confidence.resize(static_cast<std::size_t>(pixels.rows()));
    const auto predicted = predict_labels(scores);
    for (Index p = 0; p < pixels.rows(); ++p) {
        out.labels.labels[static_cast<std::size_t>(p)] = predicted[static_cast<std::size_t>(r + p)];
        out.confidence[static_cast<std::size_t>(p)] =
            static_cast<float>(std::clamp(scores.u.row(r + p).maxCoeff(), 0.0, 1.0));
    }
    return out;
}

SplitEvaluation evaluate_images(std::span<const LabeledImage> images, std::span<const std::string> names,
                                const RepSet& repset, const PipelineConfig& config) {
    SplitEvaluation out;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto pred = predict_image(repset, images[i].patch, config, images[i].image_id);
        LabelMask p = pred.labels;
        LabelMask t = images[i].mask;
        if (config.collapse_sediment) {
            p = collapse_sediment(std::move(p));
            t = collapse_sediment(std::move(t));
        }
        auto rep = evaluate(p, t, config.d_list);
        rep.name = i < names.size() ? names[i] : std::to_string(images[i].image_id);
        out.images.push_back(std::move(rep));
        out.predictions.push_back(std::move(pred));
    }
    out.aggregate = aggregate(out.images);
    return out;
}

SplitEvaluation evaluate_split(const DatasetManifest& manifest, const RepSet& repset, const PipelineConfig& config) {
    const auto images = load_split(manifest, Split::test);
    std::vector<std::string> names;
    for (const auto& e : manifest.entries) {
        if (e.split == Split::test) names.push_back(e.patch.stem().string());
    }
    return evaluate_images(images, names, repset, config);
}

std::vector<std::uint8_t> render_colormap(const LabelMask& mask) {
    validate(mask);
    const std::string header = "P6\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + 3 * mask.pixels());
    for (auto code : mask.labels) {
        std::uint8_t rgb[3] = {0, 0, 0};
        switch (code) {
            case kLand: rgb[0] = 128; rgb[2] = 128; break;
            case kWater: rgb[2] = 255; break;
            case kSediment: rgb[0] = 255; rgb[1] = 255; break;
            default: break;
        }
        out.insert(out.end(), rgb, rgb + 3);
    }
    return out;
}

std::string traces_json(std::span<const LoopTrace> traces, std::span<const LabeledImage> images) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        nlohmann::ordered_json j;
        j["image_id"] = i < images.size() ? images[i].image_id : static_cast<std::uint32_t>(i);
        j["initial_size"] = t.initial_size;
        j["initial_accuracy"] = t.initial_accuracy;
        j["stop"] = to_string(t.stop);
        j["steps"] = nlohmann::ordered_json::array();
        for (const auto& s : t.steps) {
            j["steps"].push_back(
                {{"t", s.t}, {"node", s.node}, {"score", s.score}, {"accuracy", s.accuracy}, {"converged", s.converged}});
        }
        doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

}  // namespace gap
