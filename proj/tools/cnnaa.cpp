// Command-line front end for the attribute-based active-authentication
// pipeline: network training, attribute heads, subspace-clustering discovery,
// verification protocol runs and the power/latency budget tables.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnnaa/attr_heads.hpp"
#include "cnnaa/auth.hpp"
#include "cnnaa/budget.hpp"
#include "cnnaa/datapipe.hpp"
#include "cnnaa/discovery.hpp"
#include "cnnaa/image.hpp"
#include "cnnaa/netdef.hpp"
#include "cnnaa/trainer.hpp"
#include "cnnaa/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cnnaa;

namespace {

/// Tracks files written during one command; unlinks them if the run fails.
class OutputGuard {
public:
    std::string track(const std::string& path) {
        paths_.push_back(path);
        return path;
    }
    void commit() { paths_.clear(); }
    ~OutputGuard() {
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
};

void write_text(OutputGuard& guard, const std::string& path, const std::string& text) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream f(guard.track(path));
    if (!f) throw FormatError("cannot open output file: " + path);
    f << text;
    if (!f) throw FormatError("failed writing output file: " + path);
}

/// Resolved-config snapshot of one subcommand, written alongside its outputs.
void write_snapshot(OutputGuard& guard, const CLI::App& cmd, const std::string& out_dir) {
    json snap = json::object();
    snap["command"] = cmd.get_name();
    for (const CLI::Option* opt : cmd.get_options()) {
        if (opt->get_name().empty() || opt->get_name() == "--help") continue;
        const auto& results = opt->results();
        if (results.empty()) continue;
        if (results.size() == 1) {
            snap[opt->get_name()] = results[0];
        } else {
            snap[opt->get_name()] = results;
        }
    }
    write_text(guard, (fs::path(out_dir) / "config_snapshot.json").string(), snap.dump(2) + "\n");
}

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string part_table_path;

    PartTable part_table() const {
        return part_table_path.empty() ? default_part_table() : load_part_table(part_table_path);
    }
};

std::pair<int, int> parse_size(const std::string& wxh) {
    const auto x = wxh.find('x');
    if (x == std::string::npos) throw std::invalid_argument("size must look like WxH, got " + wxh);
    const int w = std::stoi(wxh.substr(0, x));
    const int h = std::stoi(wxh.substr(x + 1));
    if (w <= 0 || h <= 0) throw std::invalid_argument("size must be positive, got " + wxh);
    return {w, h};
}

std::string checkpoint_path(const std::string& dir, Family family, const std::string& name,
                            bool binary = false) {
    return (fs::path(dir) /
            (family_name(family) + (binary ? "-binary-" : "-") + name + ".ckpt")).string();
}

NetworkSpec binary_face_spec(Family family) {
    NetworkSpec spec;
    spec.family = family;
    spec.mode = Mode::kBinary;
    spec.input_h = kAlignedSize;
    spec.input_w = kAlignedSize;
    spec.num_attrs = 1;
    return spec;
}

EvalSet build_eval_set(const Manifest& manifest, Split split, const CropFn& crop,
                       const std::vector<int>& attr_ids) {
    EvalSet set;
    for (std::size_t i : manifest.indices_of(split)) {
        set.crops.push_back(crop(i));
        std::vector<int> labels;
        labels.reserve(attr_ids.size());
        for (int a : attr_ids) labels.push_back(manifest.samples[i].labels[a]);
        set.labels.push_back(std::move(labels));
    }
    return set;
}

/// Per-part embeddings for a set of manifest rows.
std::vector<std::vector<float>> embed_rows(const Network& net, const CropFn& crop,
                                           const std::vector<std::size_t>& rows, std::size_t jobs) {
    std::vector<std::vector<float>> out(rows.size());
    parallel_chunks(rows.size(), jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Tensor e = embed(net, crop(rows[i]));
            out[i].assign(e.data.begin(), e.data.end());
        }
    });
    return out;
}

std::map<std::string, Network> load_part_checkpoints(const std::string& dir, Family family,
                                                     const PartTable& table) {
    std::map<std::string, Network> nets;
    for (const PartDefinition& part : table.parts) {
        const std::string path = checkpoint_path(dir, family, part.name);
        if (!fs::exists(path)) {
            throw FormatError("missing checkpoint for part " + part.name + ": " + path);
        }
        nets.emplace(part.name, load_checkpoint_file(path));
    }
    return nets;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string manifest_path;
    std::string out_dir;
    std::string part = "all";
    std::string attribute;
    std::string family = "deep";
    std::string resume;
    TrainConfig config;
};

void run_train_one_part(const Manifest& manifest, const PartDefinition& part, Family family,
                        const TrainArgs& args, OutputGuard& guard, std::mutex& io_mutex) {
    const CropFn crop = make_part_crop_provider(manifest, part);
    QueueSet queues = QueueSet::build(manifest, part, args.config.seed);
    BatchFn next = [&](std::size_t n, Rng& rng) { return sample_batch_multi(queues, n, rng, crop); };

    const EvalSet dev = build_eval_set(manifest, Split::kDev, crop, part.attribute_ids());
    const NetworkSpec spec = part_network_spec(part, family);
    auto [net, report] = args.resume.empty()
                             ? train(spec, next, dev, args.config)
                             : train(load_checkpoint_file(args.resume), next, dev, args.config);

    const std::string ckpt = checkpoint_path(args.out_dir, family, part.name);
    {
        std::lock_guard<std::mutex> lock(io_mutex);
        guard.track(ckpt);
        save_checkpoint_file(net, ckpt);
        const std::string report_path =
            (fs::path(args.out_dir) / (family_name(family) + "-" + part.name + ".report.json")).string();
        guard.track(report_path);
        save_report(report, report_path);
        std::printf("part %-14s best dev accuracy %.4f (%s)\n", part.name.c_str(),
                    report.best_dev_accuracy, report.stop_reason.c_str());
    }
}

int run_train(const GlobalOptions& global, const TrainArgs& args, const CLI::App& cmd) {
    OutputGuard guard;
    fs::create_directories(args.out_dir);
    write_snapshot(guard, cmd, args.out_dir);

    const Manifest manifest = load_manifest(args.manifest_path);
    const PartTable table = global.part_table();
    const Family family = family_from_name(args.family);

    if (!args.attribute.empty()) {
        // single-task network on aligned full faces
        const int attr_id = attribute_index(args.attribute);
        const CropFn faces = make_aligned_face_provider(manifest);
        BinaryBatchSampler sampler = BinaryBatchSampler::build(manifest, attr_id, args.config.seed);
        BatchFn next = [&](std::size_t n, Rng& rng) {
            return sample_batch_binary(sampler, n, rng, faces);
        };
        const EvalSet dev = build_eval_set(manifest, Split::kDev, faces, {attr_id});
        auto [net, report] = args.resume.empty()
                                 ? train(binary_face_spec(family), next, dev, args.config)
                                 : train(load_checkpoint_file(args.resume), next, dev, args.config);
        const std::string ckpt = checkpoint_path(args.out_dir, family, args.attribute, true);
        guard.track(ckpt);
        save_checkpoint_file(net, ckpt);
        const std::string report_path =
            (fs::path(args.out_dir) / (family_name(family) + "-binary-" + args.attribute + ".report.json"))
                .string();
        guard.track(report_path);
        save_report(report, report_path);
        std::printf("attribute %s best dev accuracy %.4f (%s)\n", args.attribute.c_str(),
                    report.best_dev_accuracy, report.stop_reason.c_str());
        guard.commit();
        return 0;
    }

    std::vector<const PartDefinition*> parts;
    if (args.part == "all") {
        for (const auto& p : table.parts) parts.push_back(&p);
    } else {
        parts.push_back(&table.part(args.part));
    }

    std::mutex io_mutex;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    parallel_chunks(parts.size(), global.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                TrainArgs part_args = args;
                part_args.config.seed = args.config.seed + i;  // distinct streams per part
                run_train_one_part(manifest, *parts[i], family, part_args, guard, io_mutex);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    });
    if (first_error) std::rethrow_exception(first_error);
    guard.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// eval-attrs

struct EvalAttrsArgs {
    std::string manifest_path;
    std::string checkpoints;
    std::string heads_path;
    bool fit_heads = false;
    std::string family = "deep";
    std::string out_dir;
};

int run_eval_attrs(const GlobalOptions& global, const EvalAttrsArgs& args, const CLI::App& cmd) {
    OutputGuard guard;
    fs::create_directories(args.out_dir);
    write_snapshot(guard, cmd, args.out_dir);

    const Manifest manifest = load_manifest(args.manifest_path);
    const PartTable table = global.part_table();
    const Family family = family_from_name(args.family);
    const auto nets = load_part_checkpoints(args.checkpoints, family, table);

    const auto train_rows = manifest.indices_of(Split::kTrain);
    const auto dev_rows = manifest.indices_of(Split::kDev);
    const auto test_rows = manifest.indices_of(Split::kTest);

    // per-part embeddings for every split, computed once
    std::map<std::string, std::vector<std::vector<float>>> train_emb, dev_emb, test_emb;
    for (const PartDefinition& part : table.parts) {
        const CropFn crop = make_part_crop_provider(manifest, part);
        const Network& net = nets.at(part.name);
        train_emb[part.name] = embed_rows(net, crop, train_rows, global.jobs);
        dev_emb[part.name] = embed_rows(net, crop, dev_rows, global.jobs);
        test_emb[part.name] = embed_rows(net, crop, test_rows, global.jobs);
    }

    auto concat_for = [&](const std::vector<std::string>& parts,
                          const std::map<std::string, std::vector<std::vector<float>>>& emb,
                          std::size_t row) {
        std::vector<float> f;
        for (const auto& p : parts) {
            const auto& block = emb.at(p)[row];
            f.insert(f.end(), block.begin(), block.end());
        }
        return f;
    };

    std::vector<AttributeHead> heads;
    if (args.fit_heads) {
        const auto& names = attribute_names();
        std::vector<std::optional<AttributeHead>> fitted(names.size());
        std::mutex warn_mutex;
        parallel_chunks(names.size(), global.jobs, [&](std::size_t begin, std::size_t end) {
            for (std::size_t a = begin; a < end; ++a) {
                const std::string& attr = names[a];
                // parts feeding this attribute, in table order
                std::vector<std::string> parts;
                for (const PartDefinition& p : table.parts) {
                    if (std::find(p.attributes.begin(), p.attributes.end(), attr) !=
                        p.attributes.end()) {
                        parts.push_back(p.name);
                    }
                }
                if (parts.empty()) continue;
                const int attr_id = attribute_index(attr);
                std::vector<std::vector<float>> xtr, xdev;
                std::vector<int> ytr, ydev;
                for (std::size_t r = 0; r < train_rows.size(); ++r) {
                    xtr.push_back(concat_for(parts, train_emb, r));
                    ytr.push_back(manifest.samples[train_rows[r]].labels[attr_id]);
                }
                for (std::size_t r = 0; r < dev_rows.size(); ++r) {
                    xdev.push_back(concat_for(parts, dev_emb, r));
                    ydev.push_back(manifest.samples[dev_rows[r]].labels[attr_id]);
                }
                try {
                    fitted[a] = train_head(attr, parts, xtr, ytr, xdev, ydev);
                } catch (const std::invalid_argument& e) {
                    std::lock_guard<std::mutex> lock(warn_mutex);
                    std::fprintf(stderr, "skipping head %s: %s\n", attr.c_str(), e.what());
                }
            }
        });
        for (auto& h : fitted) {
            if (h) heads.push_back(std::move(*h));
        }
        const std::string heads_out = (fs::path(args.out_dir) / "heads.json").string();
        guard.track(heads_out);
        save_heads(heads, heads_out);
    } else {
        heads = load_heads(args.heads_path);
    }

    std::vector<std::map<std::string, std::vector<float>>> test_features(test_rows.size());
    for (const auto& [part, emb] : test_emb) {
        for (std::size_t r = 0; r < test_rows.size(); ++r) test_features[r][part] = emb[r];
    }
    std::vector<std::vector<int>> test_labels;
    for (std::size_t r : test_rows) test_labels.push_back(manifest.samples[r].labels);

    const AccuracyTable acc = eval_accuracy(heads, test_features, test_labels);
    write_text(guard, (fs::path(args.out_dir) / "accuracy.csv").string(), accuracy_csv(acc));
    std::printf("evaluated %zu heads on %zu test samples, average accuracy %.4f\n", heads.size(),
                test_rows.size(), acc.average);
    guard.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// discover

struct DiscoverArgs {
    std::string manifest_path;
    std::string checkpoints;
    std::string family = "deep";
    std::string out_dir;
    int dict_size = 2000;
    int clusters = 10;
    int sparsity = 20;
    int montage = 16;
};

int run_discover(const GlobalOptions& global, const DiscoverArgs& args, const CLI::App& cmd) {
    OutputGuard guard;
    fs::create_directories(args.out_dir);
    write_snapshot(guard, cmd, args.out_dir);

    const Manifest manifest = load_manifest(args.manifest_path);
    const PartTable table = global.part_table();
    const Family family = family_from_name(args.family);
    const auto nets = load_part_checkpoints(args.checkpoints, family, table);
    const auto train_rows = manifest.indices_of(Split::kTrain);
    if (train_rows.size() < 2) throw std::invalid_argument("discover: need at least two training samples");

    for (const PartDefinition& part : table.parts) {
        const CropFn crop = make_part_crop_provider(manifest, part);
        const Network& net = nets.at(part.name);
        const auto rows = embed_rows(net, crop, train_rows, global.jobs);
        Eigen::MatrixXf pool(net.spec.embedding_dim(), static_cast<long>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t i = 0; i < rows[r].size(); ++i) {
                pool(static_cast<long>(i), static_cast<long>(r)) = rows[r][i];
            }
        }
        const Dictionary dict = build_dictionary(part.name, pool, args.dict_size, args.clusters,
                                                 args.sparsity, global.seed);
        const std::string dict_path =
            (fs::path(args.out_dir) / (family_name(family) + "-" + part.name + ".dict")).string();
        guard.track(dict_path);
        save_dictionary_file(dict, dict_path);

        // qualitative cluster membership export
        json clusters = json::array();
        for (int c = 0; c < dict.num_clusters; ++c) {
            json members = json::array();
            int kept = 0;
            for (std::size_t i = 0; i < dict.cluster_labels.size() && kept < args.montage; ++i) {
                if (dict.cluster_labels[i] != c) continue;
                members.push_back(manifest.samples[train_rows[dict.source_indices[i]]].image_ref);
                ++kept;
            }
            clusters.push_back({{"cluster", c}, {"samples", members}});
        }
        write_text(guard,
                   (fs::path(args.out_dir) / (family_name(family) + "-" + part.name + ".clusters.json"))
                       .string(),
                   json{{"part", part.name}, {"clusters", clusters}}.dump(2) + "\n");
        std::printf("part %-14s dictionary %ld atoms, %d clusters\n", part.name.c_str(),
                    static_cast<long>(dict.atoms.cols()), dict.num_clusters);
    }
    guard.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// extract-features

struct ExtractArgs {
    std::string videos_path;
    std::string checkpoints;
    std::string family = "deep";
    std::string mode = "attrs";  // attrs | discattrs
    std::string heads_path;
    std::string dicts_dir;
    std::string missing = "impute";  // impute | exclude
    int sparsity = 20;
    std::string out_path;
};

int run_extract(const GlobalOptions& global, const ExtractArgs& args, const CLI::App& cmd) {
    OutputGuard guard;
    if (const auto parent = fs::path(args.out_path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    write_snapshot(guard, cmd,
                   fs::path(args.out_path).parent_path().empty()
                       ? "."
                       : fs::path(args.out_path).parent_path().string());

    const PartTable table = global.part_table();
    const Family family = family_from_name(args.family);
    const auto nets = load_part_checkpoints(args.checkpoints, family, table);
    const auto videos = load_video_manifest(args.videos_path);

    std::vector<AttributeHead> heads;
    std::vector<Dictionary> dicts;
    if (args.mode == "attrs") {
        heads = load_heads(args.heads_path);
    } else if (args.mode == "discattrs") {
        for (const PartDefinition& part : table.parts) {
            const std::string path =
                (fs::path(args.dicts_dir) / (family_name(family) + "-" + part.name + ".dict")).string();
            if (!fs::exists(path)) throw FormatError("missing dictionary: " + path);
            dicts.push_back(load_dictionary_file(path));
        }
    } else {
        throw std::invalid_argument("mode must be attrs or discattrs");
    }

    auto process_video = [&](const VideoEntry& video) -> std::optional<VideoDescriptor> {
        // per-attribute (or per-feature) running means over usable frames
        std::vector<std::vector<double>> frame_features;
        std::vector<double> attr_sum(attribute_names().size(), 0.0);
        std::vector<std::size_t> attr_count(attribute_names().size(), 0);

        for (const FrameRef& frame : video.frames) {
            if (frame.landmarks.empty()) continue;
            Tensor image;
            try {
                image = load_ppm(frame.image);
            } catch (const FormatError& e) {
                std::fprintf(stderr, "skipping frame %s: %s\n", frame.image.c_str(), e.what());
                continue;
            }
            auto landmarks = frame.landmarks;
            clamp_landmarks(landmarks, image.dim(0), image.dim(1));

            std::map<std::string, std::vector<float>> part_embeddings;
            for (const PartDefinition& part : table.parts) {
                const bool croppable = std::all_of(
                    part.landmark_indices.begin(), part.landmark_indices.end(),
                    [&](int li) { return li >= 0 && static_cast<std::size_t>(li) < landmarks.size(); });
                if (!croppable) continue;
                const Tensor crop = crop_part(image, landmarks, part);
                const Tensor e = embed(nets.at(part.name), crop);
                part_embeddings[part.name].assign(e.data.begin(), e.data.end());
            }
            if (part_embeddings.empty()) continue;

            if (args.mode == "attrs") {
                const AttributePrediction pred = predict_attributes(heads, part_embeddings, 0.5);
                if (args.missing == "exclude") {
                    for (std::size_t a = 0; a < pred.probabilities.size(); ++a) {
                        if (!pred.available[a]) continue;
                        attr_sum[a] += pred.probabilities[a];
                        attr_count[a] += 1;
                    }
                    frame_features.push_back({});  // counted below
                } else {
                    frame_features.push_back(pred.probabilities);
                }
            } else {
                frame_features.push_back(discattr_features(dicts, part_embeddings, args.sparsity));
            }
        }

        if (frame_features.empty()) {
            std::fprintf(stderr, "video %s has no usable frames, skipping\n", video.video_id.c_str());
            return std::nullopt;
        }
        std::vector<double> feature;
        if (args.mode == "attrs" && args.missing == "exclude") {
            feature.resize(attr_sum.size());
            for (std::size_t a = 0; a < attr_sum.size(); ++a) {
                feature[a] = attr_count[a] ? attr_sum[a] / static_cast<double>(attr_count[a]) : 0.5;
            }
        } else {
            feature = average_features(frame_features);
        }

        VideoDescriptor d;
        d.video_id = video.video_id;
        d.identity = video.identity;
        d.session = video.session;
        d.sensor = video.sensor;
        d.enrollment = video.enrollment;
        d.feature = std::move(feature);
        return d;
    };

    std::vector<std::optional<VideoDescriptor>> slots(videos.size());
    parallel_chunks(videos.size(), global.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) slots[i] = process_video(videos[i]);
    });
    std::vector<VideoDescriptor> descriptors;
    for (auto& slot : slots) {
        if (slot) descriptors.push_back(std::move(*slot));
    }
    if (descriptors.empty()) throw std::invalid_argument("extract-features: no usable videos");

    guard.track(args.out_path);
    save_descriptors(descriptors, args.out_path);
    std::printf("wrote %zu descriptors (%s mode) to %s\n", descriptors.size(), args.mode.c_str(),
                args.out_path.c_str());
    guard.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// authenticate

struct AuthArgs {
    std::string descriptors_path;
    std::string pairing = "altogether";
    std::string mode = "attrs";
    std::string out_dir;
};

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

int run_authenticate(const AuthArgs& args, const CLI::App& cmd) {
    OutputGuard guard;
    fs::create_directories(args.out_dir);
    write_snapshot(guard, cmd, args.out_dir);

    const auto descriptors = load_descriptors(args.descriptors_path);

    std::vector<Pairing> pairings;
    if (args.pairing == "all") {
        pairings = {Pairing::kSameSession, Pairing::kCrossSession, Pairing::kAltogether};
        std::set<std::string> sensors;
        for (const auto& d : descriptors) sensors.insert(d.sensor);
        if (sensors.size() >= 2) pairings.push_back(Pairing::kCrossSensor);
    } else {
        pairings = {pairing_from_name(args.pairing)};
    }

    ProtocolReport combined;
    combined.feature_mode = args.mode;
    for (Pairing p : pairings) {
        const ProtocolReport r = run_protocol(descriptors, p, args.mode);
        combined.rows.insert(combined.rows.end(), r.rows.begin(), r.rows.end());
    }

    write_text(guard, (fs::path(args.out_dir) / "report.json").string(),
               protocol_report_json(combined) + "\n");
    for (const ProtocolRow& row : combined.rows) {
        write_text(guard, (fs::path(args.out_dir) / ("roc_" + sanitize(row.name) + ".csv")).string(),
                   roc_csv(row.curve));
    }
    write_text(guard, (fs::path(args.out_dir) / "roc.svg").string(), roc_svg(combined));

    std::printf("%-16s %8s %8s %8s\n", "experiment", "EER", "gallery", "probe");
    for (const ProtocolRow& row : combined.rows) {
        std::printf("%-16s %8.4f %8zu %8zu\n", row.name.c_str(), row.curve.eer, row.gallery_count,
                    row.probe_count);
    }
    guard.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// budget / bench / params / part-table

int run_budget(const BudgetParams& params, const std::string& out_path, const CLI::App& cmd) {
    OutputGuard guard;
    const double hours = battery_life_hours(params);
    const AuthInterval interval = auth_interval(params.prediction_time_s, params.alpha);

    std::printf("battery life: %.2f h\n", hours);
    if (interval.never) {
        std::printf("authentication interval: never (alpha = 0)\n");
    } else {
        std::printf("authentication interval: %.2f s\n", interval.seconds);
    }

    if (!out_path.empty()) {
        json j = {{"capacity_wh", params.capacity_wh},
                  {"normal_power_w", params.normal_power_w},
                  {"detector_power_w", params.detector_power_w},
                  {"alpha", params.alpha},
                  {"beta", params.beta},
                  {"prediction_time_s", params.prediction_time_s},
                  {"battery_life_hours", hours},
                  {"auth_interval_seconds", interval.never ? json(nullptr) : json(interval.seconds)}};
        write_text(guard, out_path, j.dump(2) + "\n");
        const auto parent = fs::path(out_path).parent_path();
        write_snapshot(guard, cmd, parent.empty() ? "." : parent.string());
    }
    guard.commit();
    return 0;
}

int run_params(const GlobalOptions& global, const std::string& family, const std::string& full_input,
               const std::string& out_path, const CLI::App& cmd) {
    OutputGuard guard;
    const PartTable table = global.part_table();
    const bool deep = family == "deep" || family == "both";
    const bool wide = family == "wide" || family == "both";

    std::ostringstream csv;
    csv << "input_size,network,parameters\n";
    std::size_t deep_total = 0, wide_total = 0;
    for (const PartDefinition& part : table.parts) {
        const std::string size = std::to_string(part.window_w) + "x" + std::to_string(part.window_h);
        if (deep) {
            const std::size_t n = count_params(part_network_spec(part, Family::kDeep));
            deep_total += n;
            csv << size << ",D-" << part.name << "," << n << "\n";
        }
        if (wide) {
            const std::size_t n = count_params(part_network_spec(part, Family::kWide));
            wide_total += n;
            csv << size << ",W-" << part.name << "," << n << "\n";
        }
    }
    if (deep) csv << "Overall,MultiDeep," << deep_total << "\n";
    if (wide) csv << "Overall,MultiWide," << wide_total << "\n";

    const auto [fw, fh] = parse_size(full_input);
    NetworkSpec full;
    full.mode = Mode::kBinary;
    full.input_w = fw;
    full.input_h = fh;
    full.num_attrs = 1;
    if (deep) {
        full.family = Family::kDeep;
        csv << full_input << ",BinaryDeep-Full," << count_params(full) << "\n";
    }
    if (wide) {
        full.family = Family::kWide;
        csv << full_input << ",BinaryWide-Full," << count_params(full) << "\n";
    }

    std::fputs(csv.str().c_str(), stdout);
    if (!out_path.empty()) {
        write_text(guard, out_path, csv.str());
        const auto parent = fs::path(out_path).parent_path();
        write_snapshot(guard, cmd, parent.empty() ? "." : parent.string());
    }
    guard.commit();
    return 0;
}

int run_bench(const GlobalOptions& global, const std::string& family, int reps,
              const std::string& full_input, const std::string& out_path, const CLI::App& cmd) {
    OutputGuard guard;
    const PartTable table = global.part_table();
    std::vector<Family> families;
    if (family == "deep" || family == "both") families.push_back(Family::kDeep);
    if (family == "wide" || family == "both") families.push_back(Family::kWide);

    std::ostringstream csv;
    csv << "input_size,network,parameters,prediction_time_s\n";
    for (Family f : families) {
        std::vector<Network> nets;
        std::vector<std::pair<std::string, const Network*>> refs;
        nets.reserve(table.parts.size());
        for (const PartDefinition& part : table.parts) {
            nets.push_back(build(part_network_spec(part, f), global.seed));
        }
        for (std::size_t i = 0; i < table.parts.size(); ++i) {
            refs.push_back({(f == Family::kDeep ? "D-" : "W-") + table.parts[i].name, &nets[i]});
        }
        const BenchReport report = bench_forward(refs, reps);
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            const auto& part = table.parts[i];
            csv << part.window_w << "x" << part.window_h << "," << report.rows[i].name << ","
                << report.rows[i].params << "," << report.rows[i].mean_seconds << "\n";
        }
        csv << "Overall," << (f == Family::kDeep ? "MultiDeep" : "MultiWide") << ",,"
            << report.total_seconds << "\n";

        // single-attribute full-face network; the full set costs 40x this
        const auto [fw, fh] = parse_size(full_input);
        NetworkSpec full;
        full.family = f;
        full.mode = Mode::kBinary;
        full.input_w = fw;
        full.input_h = fh;
        full.num_attrs = 1;
        const Network fnet = build(full, global.seed);
        const BenchReport fr = bench_forward(
            {{f == Family::kDeep ? "BinaryDeep-Full" : "BinaryWide-Full", &fnet}}, reps);
        csv << full_input << "," << fr.rows[0].name << "," << fr.rows[0].params << ","
            << fr.rows[0].mean_seconds << "\n";
        csv << full_input << "," << fr.rows[0].name << "-x40,," << 40.0 * fr.rows[0].mean_seconds
            << "\n";
    }
    std::fputs(csv.str().c_str(), stdout);
    if (!out_path.empty()) {
        write_text(guard, out_path, csv.str());
        const auto parent = fs::path(out_path).parent_path();
        write_snapshot(guard, cmd, parent.empty() ? "." : parent.string());
    }
    guard.commit();
    return 0;
}

int run_part_table_cmd(const GlobalOptions& global, bool fit, const std::string& manifest_path,
                       const std::string& out_path) {
    OutputGuard guard;
    PartTable table = global.part_table();
    if (fit) {
        if (manifest_path.empty()) {
            throw std::invalid_argument("--fit-windows needs --manifest");
        }
        const Manifest manifest = load_manifest(manifest_path);
        table = fit_windows(manifest, table,
                            [](const LabeledSample& s) { return load_ppm(s.image_ref); });
    }
    guard.track(out_path);
    save_part_table(table, out_path);
    std::printf("wrote part table with %zu parts to %s\n", table.parts.size(), out_path.c_str());
    guard.commit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attribute-based active-authentication pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags win");

    GlobalOptions global;
    app.add_option("--seed", global.seed, "global RNG seed")->capture_default_str();
    app.add_option("--jobs", global.jobs, "worker threads for parallel stages")->capture_default_str();
    app.add_option("--part-table", global.part_table_path, "part table JSON (default: built-in)");

    // train
    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train part or binary attribute networks");
    train_cmd->add_option("--manifest", train_args.manifest_path, "dataset manifest (JSON lines)")
        ->required();
    train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();
    train_cmd->add_option("--part", train_args.part, "part name or 'all'")->capture_default_str();
    train_cmd->add_option("--attribute", train_args.attribute,
                          "train a single-task full-face network for this attribute");
    train_cmd->add_option("--family", train_args.family, "deep or wide")->capture_default_str();
    train_cmd->add_option("--resume", train_args.resume, "checkpoint to resume from");
    train_cmd->add_option("--batch-size", train_args.config.batch_size)->capture_default_str();
    train_cmd->add_option("--eval-every", train_args.config.eval_every)->capture_default_str();
    train_cmd->add_option("--patience", train_args.config.patience)->capture_default_str();
    train_cmd->add_option("--max-steps", train_args.config.max_steps)->capture_default_str();
    train_cmd->add_option("--lr", train_args.config.lr)->capture_default_str();
    train_cmd->add_flag("--normalize-by-positives", train_args.config.normalize_by_positives,
                        "normalize each attribute term by its positive count");

    // eval-attrs
    EvalAttrsArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval-attrs", "attribute accuracy over SVM heads");
    eval_cmd->add_option("--manifest", eval_args.manifest_path)->required();
    eval_cmd->add_option("--checkpoints", eval_args.checkpoints, "directory of part checkpoints")
        ->required();
    eval_cmd->add_option("--out", eval_args.out_dir)->required();
    eval_cmd->add_option("--family", eval_args.family)->capture_default_str();
    eval_cmd->add_option("--heads", eval_args.heads_path, "existing heads JSON");
    eval_cmd->add_flag("--fit-heads", eval_args.fit_heads, "fit heads on train/dev before evaluating");

    // discover
    DiscoverArgs discover_args;
    CLI::App* discover_cmd = app.add_subcommand("discover", "subspace-cluster the part embeddings");
    discover_cmd->add_option("--manifest", discover_args.manifest_path)->required();
    discover_cmd->add_option("--checkpoints", discover_args.checkpoints)->required();
    discover_cmd->add_option("--out", discover_args.out_dir)->required();
    discover_cmd->add_option("--family", discover_args.family)->capture_default_str();
    discover_cmd->add_option("--dict-size", discover_args.dict_size)->capture_default_str();
    discover_cmd->add_option("--clusters", discover_args.clusters)->capture_default_str();
    discover_cmd->add_option("--sparsity", discover_args.sparsity)->capture_default_str();
    discover_cmd->add_option("--montage", discover_args.montage, "samples listed per cluster")
        ->capture_default_str();

    // extract-features
    ExtractArgs extract_args;
    CLI::App* extract_cmd = app.add_subcommand("extract-features", "per-video descriptors");
    extract_cmd->add_option("--videos", extract_args.videos_path, "video manifest (JSON lines)")
        ->required();
    extract_cmd->add_option("--checkpoints", extract_args.checkpoints)->required();
    extract_cmd->add_option("--out", extract_args.out_path, "descriptor JSONL output")->required();
    extract_cmd->add_option("--family", extract_args.family)->capture_default_str();
    extract_cmd->add_option("--mode", extract_args.mode, "attrs or discattrs")->capture_default_str();
    extract_cmd->add_option("--heads", extract_args.heads_path, "heads JSON (attrs mode)");
    extract_cmd->add_option("--dicts", extract_args.dicts_dir, "dictionary directory (discattrs mode)");
    extract_cmd->add_option("--missing", extract_args.missing, "impute or exclude missing attributes")
        ->capture_default_str();
    extract_cmd->add_option("--sparsity", extract_args.sparsity)->capture_default_str();

    // authenticate
    AuthArgs auth_args;
    CLI::App* auth_cmd = app.add_subcommand("authenticate", "similarity matrix, ROC and EER");
    auth_cmd->add_option("--descriptors", auth_args.descriptors_path)->required();
    auth_cmd->add_option("--out", auth_args.out_dir)->required();
    auth_cmd->add_option("--pairing", auth_args.pairing,
                         "same-session, cross-session, altogether, cross-sensor or all")
        ->capture_default_str();
    auth_cmd->add_option("--mode", auth_args.mode, "label recorded in the report")
        ->capture_default_str();

    // budget
    BudgetParams budget_params;
    std::string budget_out;
    CLI::App* budget_cmd = app.add_subcommand("budget", "battery-life model");
    budget_cmd->add_option("--capacity-wh", budget_params.capacity_wh)->required();
    budget_cmd->add_option("--pn", budget_params.normal_power_w, "normal-use draw, watts")->required();
    budget_cmd->add_option("--pd", budget_params.detector_power_w, "detector draw, watts")->required();
    budget_cmd->add_option("--alpha", budget_params.alpha, "authentication ratio")->required();
    budget_cmd->add_option("--beta", budget_params.beta, "device-usage fraction")->required();
    budget_cmd->add_option("--ta", budget_params.prediction_time_s, "prediction time, seconds")
        ->capture_default_str();
    budget_cmd->add_option("--out", budget_out, "JSON report path");

    // bench
    std::string bench_family = "deep", bench_out, bench_full_input = "128x128";
    int bench_reps = 20;
    CLI::App* bench_cmd = app.add_subcommand("bench", "forward-pass timing per network");
    bench_cmd->add_option("--family", bench_family, "deep, wide or both")->capture_default_str();
    bench_cmd->add_option("--reps", bench_reps, "timed repetitions per network")->capture_default_str();
    bench_cmd->add_option("--full-input", bench_full_input, "binary full-face input WxH")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "CSV output path");

    // params
    std::string params_family = "both", params_out, params_full_input = "128x128";
    CLI::App* params_cmd = app.add_subcommand("params", "parameter-count table");
    params_cmd->add_option("--family", params_family, "deep, wide or both")->capture_default_str();
    params_cmd->add_option("--full-input", params_full_input, "binary full-face input WxH")
        ->capture_default_str();
    params_cmd->add_option("--out", params_out, "CSV output path");

    // part-table
    bool fit_windows_flag = false;
    std::string pt_manifest, pt_out;
    CLI::App* pt_cmd = app.add_subcommand("part-table", "write the part table (optionally refitted)");
    pt_cmd->add_flag("--fit-windows", fit_windows_flag,
                     "recompute windows from the training split's landmark boxes");
    pt_cmd->add_option("--manifest", pt_manifest, "manifest for --fit-windows");
    pt_cmd->add_option("--out", pt_out, "output part table JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            train_args.config.seed = global.seed;
            return run_train(global, train_args, *train_cmd);
        }
        if (eval_cmd->parsed()) return run_eval_attrs(global, eval_args, *eval_cmd);
        if (discover_cmd->parsed()) return run_discover(global, discover_args, *discover_cmd);
        if (extract_cmd->parsed()) return run_extract(global, extract_args, *extract_cmd);
        if (auth_cmd->parsed()) return run_authenticate(auth_args, *auth_cmd);
        if (budget_cmd->parsed()) return run_budget(budget_params, budget_out, *budget_cmd);
        if (bench_cmd->parsed()) {
            return run_bench(global, bench_family, bench_reps, bench_full_input, bench_out, *bench_cmd);
        }
        if (params_cmd->parsed()) {
            return run_params(global, params_family, params_full_input, params_out, *params_cmd);
        }
        if (pt_cmd->parsed()) return run_part_table_cmd(global, fit_windows_flag, pt_manifest, pt_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
