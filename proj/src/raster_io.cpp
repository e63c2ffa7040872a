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

#include "gap/raster_io.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary.hpp"
#include "gap/error.hpp"
#include "gap/rng.hpp"

namespace gap {

namespace {

constexpr std::uint8_t kFormatVersion = 1;

// magic(4) version(1) height(4) width(4) bands(2) dtype(1) reserved(1)
constexpr std::size_t kPatchHeaderBytes = 17;

}  // namespace

void validate(const RasterPatch& patch) {
    if (patch.height < 1 || patch.width < 1 || patch.bands < 1) {
        throw InvalidArgument("raster patch dimensions must be positive");
    }
    if (patch.samples.size() != patch.pixels() * patch.bands) {
        throw InvalidArgument("raster patch holds " + std::to_string(patch.samples.size()) + " samples, expected " +
                              std::to_string(patch.pixels() * patch.bands));
    }
    for (std::size_t i = 0; i < patch.samples.size(); ++i) {
        if (!std::isfinite(patch.samples[i])) {
            throw InvalidArgument("raster patch sample " + std::to_string(i) + " is not finite");
        }
    }
}

void validate(const LabelMask& mask) {
    if (mask.height < 1 || mask.width < 1) throw InvalidArgument("label mask dimensions must be positive");
    if (mask.labels.size() != mask.pixels()) {
        throw InvalidArgument("label mask holds " + std::to_string(mask.labels.size()) + " codes, expected " +
                              std::to_string(mask.pixels()));
    }
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        if (!is_valid_code(mask.labels[i])) {
            throw InvalidArgument("invalid class code " + std::to_string(mask.labels[i]) + " at row " +
                                  std::to_string(i / mask.width) + ", col " + std::to_string(i % mask.width));
        }
    }
}

std::vector<std::uint8_t> encode_patch(const RasterPatch& patch) {
    validate(patch);
    detail::ByteWriter w;
    w.reserve(kPatchHeaderBytes + 4 * patch.samples.size());
    w.magic("GAPR");
    w.u8(kFormatVersion);
    w.u32(patch.height);
    w.u32(patch.width);
    w.u16(patch.bands);
    w.u8(0);  // dtype float32
    w.u8(0);
    for (float v : patch.samples) w.f32(v);
    return std::move(w.bytes());
}

RasterPatch decode_patch(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes, "GAPR");
    r.magic("GAPR");
    r.version(kFormatVersion);
    RasterPatch patch;
    patch.height = r.u32();
    patch.width = r.u32();
    patch.bands = r.u16();
    const auto dtype_at = r.pos();
    if (const auto dtype = r.u8(); dtype != 0) {
        throw FormatError(FormatError::Kind::bad_header, "GAPR: unsupported dtype " + std::to_string(dtype),
                          static_cast<std::int64_t>(dtype_at));
    }
    r.u8();
    if (patch.height < 1 || patch.width < 1 || patch.bands < 1) {
        throw FormatError(FormatError::Kind::bad_header, "GAPR: dimensions must be positive", 5);
    }
    const std::size_t count = patch.pixels() * patch.bands;
    r.need(count * 4);
    patch.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto at = r.pos();
        const float v = r.f32();
        if (!std::isfinite(v)) {
            throw FormatError(FormatError::Kind::non_finite, "GAPR: non-finite sample " + std::to_string(i),
                              static_cast<std::int64_t>(at));
        }
        patch.samples[i] = v;
    }
    r.expect_end();
    return patch;
}

std::vector<std::uint8_t> encode_labels(const LabelMask& mask) {
    validate(mask);
    detail::ByteWriter w;
    w.reserve(13 + mask.labels.size());
    w.magic("GAPL");
    w.u8(kFormatVersion);
    w.u32(mask.height);
    w.u32(mask.width);
    w.bytes().insert(w.bytes().end(), mask.labels.begin(), mask.labels.end());
    return std::move(w.bytes());
}

LabelMask decode_labels(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes, "GAPL");
    r.magic("GAPL");
    r.version(kFormatVersion);
    LabelMask mask;
    mask.height = r.u32();
    mask.width = r.u32();
    if (mask.height < 1 || mask.width < 1) {
        throw FormatError(FormatError::Kind::bad_header, "GAPL: dimensions must be positive", 5);
    }
    const std::size_t count = mask.pixels();
    r.need(count);
    const auto payload = r.pos();
    mask.labels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payload),
                       bytes.begin() + static_cast<std::ptrdiff_t>(payload + count));
    for (std::size_t i = 0; i < count; ++i) {
        if (!is_valid_code(mask.labels[i])) {
            throw FormatError(FormatError::Kind::invalid_class,
                              "GAPL: invalid class code " + std::to_string(mask.labels[i]) + " at row " +
                                  std::to_string(i / mask.width) + ", col " + std::to_string(i % mask.width),
                              static_cast<std::int64_t>(payload + i));
        }
    }
    if (bytes.size() != payload + count) {
        throw FormatError(FormatError::Kind::bad_header, "GAPL: trailing bytes after payload",
                          static_cast<std::int64_t>(payload + count));
    }
    return mask;
}

RasterPatch load_patch(const std::filesystem::path& path) { return decode_patch(detail::read_file(path)); }

void save_patch(const RasterPatch& patch, const std::filesystem::path& path) {
    detail::write_file(path, encode_patch(patch));
}

LabelMask load_labels(const std::filesystem::path& path) { return decode_labels(detail::read_file(path)); }

void save_labels(const LabelMask& mask, const std::filesystem::path& path) {
    detail::write_file(path, encode_labels(mask));
}

std::vector<ManifestEntry> DatasetManifest::select(Split split) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.split == split) out.push_back(e);
    }
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(FormatError::Kind::bad_json, "manifest " + path.string() + ": " + e.what(),
                          static_cast<std::int64_t>(e.byte));
    }
    if (!doc.is_array()) throw FormatError(FormatError::Kind::bad_json, "manifest must be a JSON array");

    const auto base = path.parent_path();
    DatasetManifest manifest;
    std::set<std::filesystem::path> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const auto where = "manifest entry " + std::to_string(i);
        if (!item.is_object()) throw FormatError(FormatError::Kind::bad_json, where + " is not an object");
        for (const auto& [key, _] : item.items()) {
            if (key != "patch" && key != "labels" && key != "split") {
                throw FormatError(FormatError::Kind::bad_json, where + ": unknown key \"" + key + "\"");
            }
        }
        if (!item.contains("patch") || !item["patch"].is_string() || !item.contains("labels") ||
            !item["labels"].is_string() || !item.contains("split") || !item["split"].is_string()) {
            throw FormatError(FormatError::Kind::bad_json, where + " needs string fields patch, labels, split");
        }
        ManifestEntry entry;
        entry.patch = base / item["patch"].get<std::string>();
        entry.labels = base / item["labels"].get<std::string>();
        const auto split = item["split"].get<std::string>();
        if (split == "train") {
            entry.split = Split::train;
        } else if (split == "test") {
            entry.split = Split::test;
        } else {
            throw FormatError(FormatError::Kind::bad_json, where + ": split must be \"train\" or \"test\"");
        }
        for (const auto& p : {entry.patch.lexically_normal(), entry.labels.lexically_normal()}) {
            if (!seen.insert(p).second) {
                throw FormatError(FormatError::Kind::bad_json, where + ": duplicate path " + p.string());
            }
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    const auto base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
        auto r = base.empty() ? p : p.lexically_relative(base);
        return (r.empty() ? p : r).generic_string();
    };
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : manifest.entries) {
        doc.push_back({{"patch", rel(e.patch)},
                       {"labels", rel(e.labels)},
                       {"split", e.split == Split::train ? "train" : "test"}});
    }
    const auto text = doc.dump(2) + "\n";
    detail::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void validate_manifest_files(const DatasetManifest& manifest) {
    for (const auto& e : manifest.entries) {
        const auto patch = detail::read_file(e.patch);
        const auto labels = detail::read_file(e.labels);
        detail::ByteReader pr(patch, "GAPR");
        pr.magic("GAPR");
        pr.version(kFormatVersion);
        const auto ph = pr.u32();
        const auto pw = pr.u32();
        detail::ByteReader lr(labels, "GAPL");
        lr.magic("GAPL");
        lr.version(kFormatVersion);
        const auto lh = lr.u32();
        const auto lw = lr.u32();
        if (ph != lh || pw != lw) {
            throw InvalidArgument("manifest entry " + e.patch.string() + " is " + std::to_string(ph) + "x" +
                                  std::to_string(pw) + " but its labels are " + std::to_string(lh) + "x" +
                                  std::to_string(lw));
        }
    }
}

SynthConfig::SynthConfig()
    : class_means{{0.28f, 0.30f, 0.26f, 0.42f, 0.38f, 0.30f},
                  {0.06f, 0.08f, 0.07f, 0.04f, 0.02f, 0.01f},
                  {0.30f, 0.29f, 0.31f, 0.35f, 0.40f, 0.36f}} {}

void validate(const SynthConfig& config) {
    if (config.height < 1 || config.width < 1 || config.bands < 1) {
        throw InvalidArgument("synthetic image dimensions must be positive");
    }
    if (config.class_means.size() != 3) throw InvalidArgument("synthetic config needs 3 class means");
    for (const auto& m : config.class_means) {
        if (m.size() != config.bands) {
            throw InvalidArgument("every class mean needs " + std::to_string(config.bands) + " entries");
        }
        for (float v : m) {
            if (!std::isfinite(v)) throw InvalidArgument("class means must be finite");
        }
    }
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            if (config.class_means[a] == config.class_means[b]) {
                throw InvalidArgument("class means must be pairwise distinct");
            }
        }
    }
    if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma)) {
        throw InvalidArgument("noise sigma must be finite and >= 0");
    }
    if (!(config.channel_halfwidth > 0.0) || !(config.sediment_halfwidth > 0.0)) {
        throw InvalidArgument("channel and sediment halfwidths must be > 0");
    }
    if (!(config.channel_period > 0.0) || !std::isfinite(config.channel_amplitude)) {
        throw InvalidArgument("channel period must be > 0 and amplitude finite");
    }
    if (2.0 * (config.channel_halfwidth + config.sediment_halfwidth) >= config.height) {
        throw InvalidArgument("degenerate geometry: channel plus sediment strips are wider than the image");
    }
}

std::pair<RasterPatch, LabelMask> generate_synthetic(const SynthConfig& config) {
    validate(config);
    Rng rng(config.seed);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();

    RasterPatch patch{config.height, config.width, config.bands, {}};
    patch.samples.resize(patch.pixels() * patch.bands);
    LabelMask mask{config.height, config.width, std::vector<std::uint8_t>(patch.pixels())};

    const double center = 0.5 * (config.height - 1);
    for (std::uint32_t r = 0; r < config.height; ++r) {
        for (std::uint32_t c = 0; c < config.width; ++c) {
            const double y =
                center + config.channel_amplitude * std::sin(2.0 * std::numbers::pi * c / config.channel_period + phase);
            const double dist = std::abs(r - y);
            std::uint8_t code = kLand;
            if (dist <= config.channel_halfwidth) {
                code = kWater;
            } else if (dist <= config.channel_halfwidth + config.sediment_halfwidth) {
                code = kSediment;
            }
            mask.at(r, c) = code;
            const auto& mean = config.class_means[code];
            for (std::uint16_t b = 0; b < config.bands; ++b) {
                const double noise = config.noise_sigma > 0.0 ? config.noise_sigma * rng.normal() : 0.0;
                patch.at(r, c, b) = static_cast<float>(mean[b] + noise);
            }
        }
    }
    return {std::move(patch), std::move(mask)};
}

std::vector<std::size_t> class_histogram(const LabelMask& mask) {
    std::vector<std::size_t> hist(4, 0);
    for (auto code : mask.labels) {
        if (code == kIgnore) {
            ++hist[3];
        } else if (code <= kSediment) {
            ++hist[code];
        }
    }
    return hist;
}

}  // namespace gap
