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

#include "gap/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "binary.hpp"
#include "gap/active.hpp"
#include "gap/error.hpp"
#include "gap/features.hpp"
#include "gap/pipeline.hpp"

namespace gap {

namespace fs = std::filesystem;

namespace {

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? parse_config("{}") : load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
    detail::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void make_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void cmd_synth(const std::string& config_path, const fs::path& out) {
    const auto cfg = config_or_default(config_path);
    fs::create_directories(out);
    DatasetManifest manifest;
    const std::size_t total = cfg.synth.train_images + cfg.synth.test_images;
    for (std::size_t i = 0; i < total; ++i) {
        auto sc = cfg.synth.base;
        sc.seed = cfg.synth.base.seed + i;
        const auto [patch, mask] = generate_synthetic(sc);
        const bool train = i < cfg.synth.train_images;
        char stem[64];
        std::snprintf(stem, sizeof(stem), "%s_%03zu", train ? "train" : "test", train ? i : i - cfg.synth.train_images);
        const auto patch_path = out / (std::string(stem) + ".gapr");
        const auto label_path = out / (std::string(stem) + ".gapl");
        save_patch(patch, patch_path);
        save_labels(mask, label_path);
        manifest.entries.push_back({patch_path, label_path, train ? Split::train : Split::test});
    }
    save_manifest(manifest, out / "manifest.json");
    std::cout << "wrote " << total << " images and " << (out / "manifest.json").string() << "\n";
}

void cmd_featurize(const fs::path& manifest_path, const std::string& config_path, const fs::path& out) {
    const auto cfg = config_or_default(config_path);
    const auto manifest = load_manifest(manifest_path);
    fs::create_directories(out);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        const auto features = extract_features(load_patch(e.patch), cfg.feature, static_cast<std::uint32_t>(i));
        save_features(features, out / (e.patch.stem().string() + ".gapf"));
    }
    std::cout << "featurized " << manifest.entries.size() << " images into " << out.string() << "\n";
}

void cmd_repset(const fs::path& manifest_path, const std::string& config_path, const fs::path& out,
                const std::string& trace_path) {
    const auto cfg = config_or_default(config_path);
    const auto manifest = load_manifest(manifest_path);
    validate_manifest_files(manifest);
    const auto images = load_split(manifest, Split::train);
    const auto build = create_repset(images, cfg.feature, cfg.graph, cfg.active, cfg.solver);
    make_parent(out);
    save_repset(build.repset, out);
    if (!trace_path.empty()) {
        make_parent(trace_path);
        write_text(trace_path, traces_json(build.traces, images));
    }
    std::cout << "RepSet of " << build.repset.size() << " records from " << images.size() << " images written to "
              << out.string() << "\n";
}

void cmd_predict(const fs::path& repset_path, const fs::path& patch_path, const std::string& config_path,
                 const fs::path& out, const std::string& ppm_path) {
    const auto cfg = config_or_default(config_path);
    const auto pred = predict_image(load_repset(repset_path), load_patch(patch_path), cfg);
    make_parent(out);
    save_labels(pred.labels, out);
    if (!ppm_path.empty()) {
        make_parent(ppm_path);
        detail::write_file(ppm_path, render_colormap(pred));
    }
}

void cmd_eval(const fs::path& manifest_path, const fs::path& repset_path, const std::string& config_path,
              const fs::path& out, bool collapse) {
    auto cfg = config_or_default(config_path);
    if (collapse) cfg.collapse_sediment = true;
    const auto manifest = load_manifest(manifest_path);
    validate_manifest_files(manifest);
    const auto result = evaluate_split(manifest, load_repset(repset_path), cfg);
    make_parent(out);
    write_text(out, report_json(result.images, result.aggregate));
    const auto oa = result.aggregate.oa();
    std::cout << "aggregate OA " << (oa ? std::to_string(*oa) : std::string("undefined")) << " over "
              << result.images.size() << " images\n";
}

void cmd_viz(const fs::path& labels, const fs::path& out) {
    make_parent(out);
    detail::write_file(out, render_colormap(load_labels(labels)));
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Graph active-learning pipeline for water and sediment segmentation", "gap"};
    app.require_subcommand(1);

    std::string config, manifest, out, trace, repset, patch, ppm, labels;
    bool collapse = false;

    auto* synth = app.add_subcommand("synth", "Generate synthetic GAPR/GAPL scenes and a manifest");
    synth->add_option("--config", config, "Pipeline configuration (JSON)");
    synth->add_option("--out", out, "Output directory")->required();

    auto* featurize = app.add_subcommand("featurize", "Write GAPF feature caches for every manifest entry");
    featurize->add_option("--manifest", manifest)->required();
    featurize->add_option("--config", config);
    featurize->add_option("--out", out, "Output directory")->required();

    auto* rep = app.add_subcommand("repset", "Build the representative set from the train split");
    rep->add_option("--manifest", manifest)->required();
    rep->add_option("--config", config);
    rep->add_option("--out", out, "RepSet file (GAPS)")->required();
    rep->add_option("--trace", trace, "Loop trace output (JSON)");

    auto* predict = app.add_subcommand("predict", "Segment one patch");
    predict->add_option("--repset", repset)->required();
    predict->add_option("--patch", patch)->required();
    predict->add_option("--config", config);
    predict->add_option("--out", out, "Predicted labels (GAPL)")->required();
    predict->add_option("--ppm", ppm, "Colour rendering (PPM)");

    auto* eval = app.add_subcommand("eval", "Evaluate the test split");
    eval->add_option("--manifest", manifest)->required();
    eval->add_option("--repset", repset)->required();
    eval->add_option("--config", config);
    eval->add_option("--out", out, "Report (JSON)")->required();
    eval->add_flag("--collapse-sediment", collapse, "Score with sediment relabeled as land");

    auto* viz = app.add_subcommand("viz", "Render a label mask as PPM");
    viz->add_option("--labels", labels)->required();
    viz->add_option("--out", out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) cmd_synth(config, out);
        else if (featurize->parsed()) cmd_featurize(manifest, config, out);
        else if (rep->parsed()) cmd_repset(manifest, config, out, trace);
        else if (predict->parsed()) cmd_predict(repset, patch, config, out, ppm);
        else if (eval->parsed()) cmd_eval(manifest, repset, config, out, collapse);
        else if (viz->parsed()) cmd_viz(labels, out);
    } catch (const std::exception& e) {
        std::cerr << "gap: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace gap
