#include "cnnaa/auth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cnnaa {

using nlohmann::json;

std::vector<double> average_features(const std::vector<std::vector<double>>& frames) {
    if (frames.empty()) throw std::invalid_argument("video descriptor: no usable frames");
    const std::size_t dim = frames[0].size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& f : frames) {
        if (f.size() != dim) throw ShapeError("video descriptor: inconsistent frame feature lengths");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += f[i];
    }
    for (double& v : mean) v /= static_cast<double>(frames.size());
    return mean;
}

ScoreMatrix similarity_matrix(const std::vector<VideoDescriptor>& gallery,
                              const std::vector<VideoDescriptor>& probe) {
    if (gallery.empty() || probe.empty()) {
        throw std::invalid_argument("similarity_matrix: empty gallery or probe");
    }
    const std::size_t dim = gallery[0].feature.size();
    for (const auto& v : gallery) {
        if (v.feature.size() != dim) throw ShapeError("similarity_matrix: gallery dimension mismatch");
    }
    for (const auto& v : probe) {
        if (v.feature.size() != dim) throw ShapeError("similarity_matrix: probe dimension mismatch");
    }
    ScoreMatrix m;
    m.scores.assign(gallery.size(), std::vector<double>(probe.size(), 0.0));
    m.genuine.assign(gallery.size(), std::vector<char>(probe.size(), 0));
    m.valid.assign(gallery.size(), std::vector<char>(probe.size(), 1));
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        for (std::size_t j = 0; j < probe.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += gallery[i].feature[k] * probe[j].feature[k];
            m.scores[i][j] = s;
            m.genuine[i][j] = gallery[i].identity == probe[j].identity ? 1 : 0;
            if (!gallery[i].video_id.empty() && gallery[i].video_id == probe[j].video_id) {
                m.valid[i][j] = 0;
            }
        }
    }
    return m;
}

std::pair<std::vector<double>, std::vector<double>> ScoreMatrix::split_scores() const {
    std::vector<double> gen, imp;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = 0; j < scores[i].size(); ++j) {
            if (!valid[i][j]) continue;
            (genuine[i][j] ? gen : imp).push_back(scores[i][j]);
        }
    }
    return {std::move(gen), std::move(imp)};
}

RocCurve roc_eer(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    if (genuine.empty() || impostor.empty()) {
        throw std::invalid_argument("roc_eer: need at least one genuine and one impostor score");
    }
    std::vector<double> gen = genuine, imp = impostor;
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());

    std::vector<double> pooled;
    pooled.reserve(gen.size() + imp.size());
    pooled.insert(pooled.end(), gen.begin(), gen.end());
    pooled.insert(pooled.end(), imp.begin(), imp.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    // thresholds descending: +inf, midpoints, -inf; score >= threshold accepts
    std::vector<double> thresholds;
    thresholds.push_back(std::numeric_limits<double>::infinity());
    for (std::size_t i = pooled.size(); i-- > 1;) {
        thresholds.push_back(0.5 * (pooled[i - 1] + pooled[i]));
    }
    thresholds.push_back(-std::numeric_limits<double>::infinity());

    auto frac_at_or_above = [](const std::vector<double>& sorted, double t) {
        if (t == -std::numeric_limits<double>::infinity()) return 1.0;
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
    };

    RocCurve curve;
    curve.points.reserve(thresholds.size());
    for (double t : thresholds) {
        curve.points.push_back({t, frac_at_or_above(imp, t), frac_at_or_above(gen, t)});
    }

    // EER where FAR crosses FRR = 1 - TAR, linear interpolation between the
    // bracketing thresholds
    curve.eer = 0.5;
    curve.eer_threshold = curve.points[0].threshold;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const RocPoint& p = curve.points[i];
        const double diff = p.far - (1.0 - p.tar);
        if (diff >= 0.0) {
            if (diff == 0.0 || i == 0) {
                curve.eer = p.far;
                curve.eer_threshold = p.threshold;
            } else {
                const RocPoint& q = curve.points[i - 1];
                const double f1 = q.far, r1 = 1.0 - q.tar;
                const double f2 = p.far, r2 = 1.0 - p.tar;
                const double denom = (f2 - f1) - (r2 - r1);
                const double s = denom != 0.0 ? (r1 - f1) / denom : 0.5;
                curve.eer = f1 + s * (f2 - f1);
                curve.eer_threshold = q.threshold;
            }
            break;
        }
    }
    return curve;
}

RocCurve roc_eer(const ScoreMatrix& scores) {
    const auto [gen, imp] = scores.split_scores();
    return roc_eer(gen, imp);
}

Pairing pairing_from_name(const std::string& name) {
    if (name == "same-session") return Pairing::kSameSession;
    if (name == "cross-session") return Pairing::kCrossSession;
    if (name == "altogether") return Pairing::kAltogether;
    if (name == "cross-sensor") return Pairing::kCrossSensor;
    throw std::invalid_argument("unknown pairing: " + name);
}

std::string pairing_name(Pairing p) {
    switch (p) {
        case Pairing::kSameSession: return "same-session";
        case Pairing::kCrossSession: return "cross-session";
        case Pairing::kAltogether: return "altogether";
        default: return "cross-sensor";
    }
}

namespace {

std::vector<std::string> sorted_unique_tags(const std::vector<VideoDescriptor>& videos,
                                            const std::string VideoDescriptor::*field) {
    std::set<std::string> tags;
    for (const auto& v : videos) tags.insert(v.*field);
    return {tags.begin(), tags.end()};
}

ProtocolRow make_row(const std::string& name, std::vector<VideoDescriptor> gallery,
                     std::vector<VideoDescriptor> probe) {
    if (gallery.empty() || probe.empty()) {
        throw std::invalid_argument("run_protocol: pairing \"" + name + "\" has an empty gallery or probe");
    }
    ProtocolRow row;
    row.name = name;
    row.gallery_count = gallery.size();
    row.probe_count = probe.size();
    row.curve = roc_eer(similarity_matrix(gallery, probe));
    return row;
}

std::pair<std::vector<VideoDescriptor>, std::vector<VideoDescriptor>> split_enrollment(
    const std::vector<VideoDescriptor>& videos) {
    const bool any_flag = std::any_of(videos.begin(), videos.end(),
                                      [](const VideoDescriptor& v) { return v.enrollment; });
    std::vector<VideoDescriptor> gallery, probe;
    for (const auto& v : videos) {
        if (!any_flag) {
            gallery.push_back(v);
            probe.push_back(v);
        } else if (v.enrollment) {
            gallery.push_back(v);
        } else {
            probe.push_back(v);
        }
    }
    return {std::move(gallery), std::move(probe)};
}

std::vector<VideoDescriptor> filter(const std::vector<VideoDescriptor>& vs,
                                    const std::function<bool(const VideoDescriptor&)>& pred) {
    std::vector<VideoDescriptor> out;
    std::copy_if(vs.begin(), vs.end(), std::back_inserter(out), pred);
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

}  // namespace

ProtocolReport run_protocol(const std::vector<VideoDescriptor>& videos, Pairing pairing,
                            const std::string& feature_mode) {
    if (videos.empty()) throw std::invalid_argument("run_protocol: no videos");
    const auto [gallery_all, probe_all] = split_enrollment(videos);

    ProtocolReport report;
    report.feature_mode = feature_mode;
    const auto sessions = sorted_unique_tags(videos, &VideoDescriptor::session);

    switch (pairing) {
        case Pairing::kSameSession: {
            for (const std::string& s : sessions) {
                auto g = filter(gallery_all, [&](const auto& v) { return v.session == s; });
                auto p = filter(probe_all, [&](const auto& v) { return v.session == s; });
                report.rows.push_back(make_row(s + " -> " + s, std::move(g), std::move(p)));
            }
            break;
        }
        case Pairing::kCrossSession: {
            for (const std::string& s : sessions) {
                std::vector<std::string> rest;
                for (const auto& o : sessions) {
                    if (o != s) rest.push_back(o);
                }
                if (rest.empty()) continue;
                auto g = filter(gallery_all, [&](const auto& v) { return v.session == s; });
                auto p = filter(probe_all, [&](const auto& v) { return v.session != s; });
                report.rows.push_back(make_row(s + " -> " + join(rest), std::move(g), std::move(p)));
            }
            break;
        }
        case Pairing::kAltogether: {
            report.rows.push_back(make_row("Altogether", gallery_all, probe_all));
            break;
        }
        case Pairing::kCrossSensor: {
            const auto sensors = sorted_unique_tags(videos, &VideoDescriptor::sensor);
            if (sensors.size() < 2) {
                throw std::invalid_argument("run_protocol: cross-sensor pairing needs at least two sensors");
            }
            for (const std::string& sa : sensors) {
                for (const std::string& sb : sensors) {
                    if (sa == sb) continue;
                    auto g = filter(gallery_all, [&](const auto& v) { return v.sensor == sa; });
                    auto p = filter(probe_all, [&](const auto& v) { return v.sensor == sb; });
                    // only the orderings the data actually supports
                    if (g.empty() || p.empty()) continue;
                    report.rows.push_back(make_row(sa + " -> " + sb, std::move(g), std::move(p)));
                }
            }
            if (report.rows.empty()) {
                throw std::invalid_argument("run_protocol: no sensor pair has both gallery and probe videos");
            }
            break;
        }
    }
    return report;
}

std::string protocol_report_json(const ProtocolReport& report) {
    json rows = json::array();
    for (const ProtocolRow& r : report.rows) {
        rows.push_back({{"experiment", r.name},
                        {"eer", r.curve.eer},
                        {"eer_threshold", r.curve.eer_threshold},
                        {"gallery_videos", r.gallery_count},
                        {"probe_videos", r.probe_count}});
    }
    return json{{"feature_mode", report.feature_mode}, {"rows", rows}}.dump(2);
}

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream os;
    os << "threshold,far,tar,frr\n";
    for (const RocPoint& p : curve.points) {
        os << p.threshold << "," << p.far << "," << p.tar << "," << (1.0 - p.tar) << "\n";
    }
    return os.str();
}

std::string roc_svg(const ProtocolReport& report) {
    // FAR on x, TAR on y in a unit box scaled to 400px with 40px margins
    const double size = 400.0, margin = 40.0;
    auto px = [&](double v) { return margin + v * size; };
    auto py = [&](double v) { return margin + (1.0 - v) * size; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + 160
       << "\" height=\"" << size + 2 * margin << "\">\n";
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\""
       << size << "\" fill=\"white\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
       << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4\"/>\n";
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        const auto& row = report.rows[r];
        os << "<polyline fill=\"none\" stroke=\"" << colors[r % 8] << "\" stroke-width=\"1.5\" points=\"";
        for (const RocPoint& p : row.curve.points) {
            os << px(p.far) << "," << py(p.tar) << " ";
        }
        os << "\"/>\n";
        os << "<text x=\"" << size + margin + 10 << "\" y=\"" << margin + 16 + 18 * r
           << "\" font-size=\"12\" fill=\"" << colors[r % 8] << "\">" << row.name << " (EER "
           << row.curve.eer << ")</text>\n";
    }
    os << "<text x=\"" << px(0.42) << "\" y=\"" << py(0) + 28 << "\" font-size=\"12\">FAR</text>\n";
    os << "<text x=\"" << margin - 32 << "\" y=\"" << py(0.5) << "\" font-size=\"12\">TAR</text>\n";
    os << "</svg>\n";
    return os.str();
}

void save_descriptors(const std::vector<VideoDescriptor>& descriptors, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open descriptor file for writing: " + path);
    for (const VideoDescriptor& d : descriptors) {
        json j = {{"video", d.video_id},      {"identity", d.identity}, {"session", d.session},
                  {"sensor", d.sensor},       {"enrollment", d.enrollment},
                  {"feature", d.feature}};
        f << j.dump() << "\n";
    }
}

std::vector<VideoEntry> load_video_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open video manifest: " + path);
    std::vector<VideoEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("video manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        VideoEntry v;
        v.video_id = j.at("video").get<std::string>();
        v.identity = j.at("identity").get<std::string>();
        v.session = j.value("session", "");
        v.sensor = j.value("sensor", "");
        v.enrollment = j.value("enrollment", false);
        for (const auto& fj : j.at("frames")) {
            FrameRef frame;
            frame.image = fj.at("image").get<std::string>();
            for (const auto& pt : fj.value("landmarks", json::array())) {
                frame.landmarks.emplace_back(pt.at(0).get<float>(), pt.at(1).get<float>());
            }
            v.frames.push_back(std::move(frame));
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<VideoDescriptor> load_descriptors(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open descriptor file: " + path);
    std::vector<VideoDescriptor> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("descriptor line " + std::to_string(lineno) + ": " + e.what());
        }
        VideoDescriptor d;
        d.video_id = j.at("video").get<std::string>();
        d.identity = j.at("identity").get<std::string>();
        d.session = j.value("session", "");
        d.sensor = j.value("sensor", "");
        d.enrollment = j.value("enrollment", false);
        d.feature = j.at("feature").get<std::vector<double>>();
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace cnnaa
