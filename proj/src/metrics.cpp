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

#include "gap/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "gap/error.hpp"

namespace gap {

namespace {

constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

// Felzenszwalb-Huttenlocher lower envelope of parabolas (q - v)^2 + f(v) over
// the finite entries of f; integer inputs give exact integer outputs.
void distance_1d(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out, std::vector<Eigen::Index>& v,
                 std::vector<double>& z) {
    const auto n = static_cast<Eigen::Index>(f.size());
    Eigen::Index k = -1;
    for (Eigen::Index q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] >= kFar) continue;
        const double fq = static_cast<double>(f[static_cast<std::size_t>(q)]) + static_cast<double>(q * q);
        double s = -std::numeric_limits<double>::infinity();
        while (k >= 0) {
            const auto p = v[static_cast<std::size_t>(k)];
            const double fp = static_cast<double>(f[static_cast<std::size_t>(p)]) + static_cast<double>(p * p);
            s = (fq - fp) / (2.0 * static_cast<double>(q - p));
            if (s > z[static_cast<std::size_t>(k)]) break;
            --k;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
    }
    if (k < 0) {
        std::fill(out.begin(), out.end(), kFar);
        return;
    }
    Eigen::Index j = 0;
    for (Eigen::Index q = 0; q < n; ++q) {
        while (j < k && z[static_cast<std::size_t>(j) + 1] < static_cast<double>(q)) ++j;
        const auto p = v[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(q)] = (q - p) * (q - p) + f[static_cast<std::size_t>(p)];
    }
}

void check_shapes(const LabelMask& pred, const LabelMask& truth) {
    if (pred.height != truth.height || pred.width != truth.width) {
        throw InvalidArgument("prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                              " but ground truth is " + std::to_string(truth.height) + "x" +
                              std::to_string(truth.width));
    }
    if (pred.labels.size() != pred.pixels() || truth.labels.size() != truth.pixels()) {
        throw InvalidArgument("label mask payload does not match its dimensions");
    }
}

}  // namespace

DistanceMap boundary_distance_map(const LabelMask& truth) {
    validate(truth);
    const auto h = static_cast<Eigen::Index>(truth.height);
    const auto w = static_cast<Eigen::Index>(truth.width);
    DistanceMap out = DistanceMap::Constant(h, w, std::numeric_limits<double>::infinity());

    std::vector<std::int64_t> grid(static_cast<std::size_t>(h * w));
    const auto len = static_cast<std::size_t>(std::max(h, w));
    std::vector<std::int64_t> line(len), result(len);
    std::vector<Eigen::Index> v(len);
    std::vector<double> z(len + 1);

    for (std::uint8_t cls = kLand; cls <= kSediment; ++cls) {
        bool has_class = false;
        for (auto code : truth.labels) has_class = has_class || code == cls;
        if (!has_class) continue;

        // Sources: valid pixels of any other class.
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto code = truth.labels[i];
            grid[i] = (code != cls && code != kIgnore) ? 0 : kFar;
        }
        line.resize(static_cast<std::size_t>(h));
        result.resize(static_cast<std::size_t>(h));
        for (Eigen::Index c = 0; c < w; ++c) {
            for (Eigen::Index r = 0; r < h; ++r) line[static_cast<std::size_t>(r)] = grid[static_cast<std::size_t>(r * w + c)];
            distance_1d(line, result, v, z);
            for (Eigen::Index r = 0; r < h; ++r) grid[static_cast<std::size_t>(r * w + c)] = result[static_cast<std::size_t>(r)];
        }
        line.resize(static_cast<std::size_t>(w));
        result.resize(static_cast<std::size_t>(w));
        for (Eigen::Index r = 0; r < h; ++r) {
            for (Eigen::Index c = 0; c < w; ++c) line[static_cast<std::size_t>(c)] = grid[static_cast<std::size_t>(r * w + c)];
            distance_1d(line, result, v, z);
            for (Eigen::Index c = 0; c < w; ++c) {
                const auto idx = static_cast<std::size_t>(r * w + c);
                if (truth.labels[idx] == cls && result[static_cast<std::size_t>(c)] < kFar) {
                    out(r, c) = std::sqrt(static_cast<double>(result[static_cast<std::size_t>(c)]));
                }
            }
        }
    }
    return out;
}

std::optional<double> boundary_accuracy(const LabelMask& pred, const LabelMask& truth, double d) {
    check_shapes(pred, truth);
    const auto dist = boundary_distance_map(truth);
    std::int64_t total = 0;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] == kIgnore || !(dist.data()[i] <= d)) continue;
        ++total;
        correct += pred.labels[i] == truth.labels[i];
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> overall_accuracy(const LabelMask& pred, const LabelMask& truth) {
    check_shapes(pred, truth);
    std::int64_t total = 0;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] == kIgnore) continue;
        ++total;
        correct += pred.labels[i] == truth.labels[i];
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
}

LabelMask collapse_sediment(LabelMask mask) {
    for (auto& code : mask.labels) {
        if (code == kSediment) code = kLand;
    }
    return mask;
}

EvalReport evaluate(const LabelMask& pred, const LabelMask& truth, std::span<const double> d_list, int classes) {
    check_shapes(pred, truth);
    const auto dist = boundary_distance_map(truth);
    EvalReport rep;
    rep.confusion = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(classes, classes);
    for (double d : d_list) rep.ba.push_back({d, 0, 0});
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        const auto t = truth.labels[i];
        if (t == kIgnore) {
            ++rep.ignored;
            continue;
        }
        const auto p = pred.labels[i];
        if (p >= classes || t >= classes) {
            throw InvalidArgument("class code outside [0, " + std::to_string(classes) + ") at pixel " +
                                  std::to_string(i));
        }
        ++rep.pixels;
        const bool ok = p == t;
        rep.correct += ok;
        ++rep.confusion(t, p);
        for (auto& b : rep.ba) {
            if (dist.data()[i] <= b.d) {
                ++b.total;
                b.correct += ok;
            }
        }
    }
    return rep;
}

EvalReport aggregate(std::span<const EvalReport> reports, std::string name) {
    EvalReport total;
    total.name = std::move(name);
    if (reports.empty()) return total;
    total.confusion = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(reports[0].confusion.rows(),
                                                                                          reports[0].confusion.cols());
    for (const auto& b : reports[0].ba) total.ba.push_back({b.d, 0, 0});
    for (const auto& r : reports) {
        if (r.ba.size() != total.ba.size() || r.confusion.rows() != total.confusion.rows()) {
            throw InvalidArgument("cannot aggregate reports with different d lists or class counts");
        }
        total.correct += r.correct;
        total.pixels += r.pixels;
        total.ignored += r.ignored;
        total.confusion += r.confusion;
        for (std::size_t i = 0; i < r.ba.size(); ++i) {
            total.ba[i].correct += r.ba[i].correct;
            total.ba[i].total += r.ba[i].total;
        }
    }
    return total;
}

std::string format_distance_key(double d) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, res.ptr);
}

namespace {

nlohmann::ordered_json report_object(const EvalReport& r) {
    auto opt = [](std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json j;
    if (!r.name.empty()) j["name"] = r.name;
    j["oa"] = opt(r.oa());
    nlohmann::ordered_json ba = nlohmann::ordered_json::object();
    for (const auto& b : r.ba) ba[format_distance_key(b.d)] = opt(b.value());
    j["ba"] = ba;
    nlohmann::ordered_json conf = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
        conf.push_back(row);
    }
    j["confusion"] = conf;
    j["pixels"] = r.pixels;
    j["ignored"] = r.ignored;
    return j;
}

}  // namespace

std::string report_json(std::span<const EvalReport> images, const EvalReport& total) {
    nlohmann::ordered_json doc;
    doc["images"] = nlohmann::ordered_json::array();
    for (const auto& r : images) doc["images"].push_back(report_object(r));
    doc["aggregate"] = report_object(total);
    return doc.dump(2) + "\n";
}

}  // namespace gap
