#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

struct VideoDescriptor {
    std::string video_id;
    std::string identity;
    std::string session;
    std::string sensor;
    bool enrollment = false;
    std::vector<double> feature;
};

/// Arithmetic mean of per-frame feature vectors; frames must agree in length.
std::vector<double> average_features(const std::vector<std::vector<double>>& frames);

struct ScoreMatrix {
    std::vector<std::vector<double>> scores;  // gallery x probe inner products
    std::vector<std::vector<char>> genuine;   // identity match
    std::vector<std::vector<char>> valid;     // false only for self-pairs

    std::pair<std::vector<double>, std::vector<double>> split_scores() const;
};

ScoreMatrix similarity_matrix(const std::vector<VideoDescriptor>& gallery,
                              const std::vector<VideoDescriptor>& probe);

struct RocPoint {
    double threshold;
    double far;
    double tar;
};

struct RocCurve {
    std::vector<RocPoint> points;  // FAR ascending; endpoints (0,0) and (1,1)
    double eer = 0.0;
    double eer_threshold = 0.0;
};

/// Threshold sweep over midpoints of the pooled distinct scores plus +/-inf
/// sentinels; score >= threshold accepts. EER by linear interpolation at the
/// FAR = FRR crossing.
RocCurve roc_eer(const std::vector<double>& genuine, const std::vector<double>& impostor);
RocCurve roc_eer(const ScoreMatrix& scores);

enum class Pairing { kSameSession, kCrossSession, kAltogether, kCrossSensor };

Pairing pairing_from_name(const std::string& name);
std::string pairing_name(Pairing p);

struct ProtocolRow {
    std::string name;  // e.g. "1 -> 2,3" or "Altogether"
    std::size_t gallery_count = 0;
    std::size_t probe_count = 0;
    RocCurve curve;
};

struct ProtocolReport {
    std::string feature_mode;
    std::vector<ProtocolRow> rows;
};

/// Builds gallery/probe per pairing rule and computes one EER row per
/// experiment. Gallery prefers enrollment-flagged videos; when none carry the
/// flag every video in the gallery set is used and self-pairs are skipped.
ProtocolReport run_protocol(const std::vector<VideoDescriptor>& videos, Pairing pairing,
                            const std::string& feature_mode = "attrs");

std::string protocol_report_json(const ProtocolReport& report);
std::string roc_csv(const RocCurve& curve);
/// Minimal standalone SVG of FAR vs TAR for each row.
std::string roc_svg(const ProtocolReport& report);

void save_descriptors(const std::vector<VideoDescriptor>& descriptors, const std::string& path);
std::vector<VideoDescriptor> load_descriptors(const std::string& path);

struct FrameRef {
    std::string image;
    std::vector<std::pair<float, float>> landmarks;
};

struct VideoEntry {
    std::string video_id;
    std::string identity;
    std::string session;
    std::string sensor;
    bool enrollment = false;
    std::vector<FrameRef> frames;
};

/// JSON-lines video manifest: one video per line with fields video, identity,
/// session, sensor, enrollment and frames ([{image, landmarks}, ...]).
std::vector<VideoEntry> load_video_manifest(const std::string& path);

}  // namespace cnnaa
