#include "cnnaa/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "cnnaa/image.hpp"

namespace cnnaa {

using nlohmann::json;

const std::vector<std::string>& attribute_names() {
    static const std::vector<std::string> kNames = {
        "5_o_Clock_Shadow", "Arched_Eyebrows", "Attractive", "Bags_Under_Eyes", "Bald",
        "Bangs", "Big_Lips", "Big_Nose", "Black_Hair", "Blond_Hair",
        "Blurry", "Brown_Hair", "Bushy_Eyebrows", "Chubby", "Double_Chin",
        "Eyeglasses", "Goatee", "Gray_Hair", "Heavy_Makeup", "High_Cheekbones",
        "Male", "Mouth_Slightly_Open", "Mustache", "Narrow_Eyes", "No_Beard",
        "Oval_Face", "Pale_Skin", "Pointy_Nose", "Receding_Hairline", "Rosy_Cheeks",
        "Sideburns", "Smiling", "Straight_Hair", "Wavy_Hair", "Wearing_Earrings",
        "Wearing_Hat", "Wearing_Lipstick", "Wearing_Necklace", "Wearing_Necktie", "Young"};
    return kNames;
}

int attribute_index(const std::string& name) {
    const auto& names = attribute_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown attribute: " + name);
}

std::vector<std::size_t> Manifest::indices_of(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == split) out.push_back(i);
    }
    return out;
}

namespace {

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "dev") return Split::kDev;
    if (s == "test") return Split::kTest;
    throw FormatError("manifest: unknown split \"" + s + "\"");
}

std::string split_to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kDev: return "dev";
        default: return "test";
    }
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open manifest: " + path);
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        LabeledSample s;
        s.image_ref = j.at("image").get<std::string>();
        s.identity = j.value("identity", "");
        s.split = split_from_string(j.value("split", "train"));
        const auto& attrs = j.at("attrs");
        if (attrs.size() != attribute_names().size()) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": expected " +
                              std::to_string(attribute_names().size()) + " attribute labels, got " +
                              std::to_string(attrs.size()));
        }
        s.labels.assign(attribute_names().size(), 0);
        for (auto it = attrs.begin(); it != attrs.end(); ++it) {
            const int v = it.value().get<int>();
            if (v != 0 && v != 1) {
                throw FormatError("manifest line " + std::to_string(lineno) + ": label for " + it.key() +
                                  " must be 0 or 1");
            }
            s.labels[attribute_index(it.key())] = v;
        }
        for (const auto& pt : j.value("landmarks", json::array())) {
            s.landmarks.emplace_back(pt.at(0).get<float>(), pt.at(1).get<float>());
        }
        m.samples.push_back(std::move(s));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open manifest for writing: " + path);
    for (const LabeledSample& s : m.samples) {
        json attrs = json::object();
        for (std::size_t i = 0; i < s.labels.size(); ++i) attrs[attribute_names()[i]] = s.labels[i];
        json lms = json::array();
        for (const auto& [x, y] : s.landmarks) lms.push_back({x, y});
        json j = {{"image", s.image_ref},
                  {"attrs", attrs},
                  {"landmarks", lms},
                  {"identity", s.identity},
                  {"split", split_to_string(s.split)}};
        f << j.dump() << "\n";
    }
}

std::vector<int> PartDefinition::attribute_ids() const {
    std::vector<int> ids;
    ids.reserve(attributes.size());
    for (const std::string& a : attributes) ids.push_back(attribute_index(a));
    return ids;
}

const PartDefinition& PartTable::part(const std::string& name) const {
    for (const PartDefinition& p : parts) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("unknown part: " + name);
}

namespace {

std::vector<int> range_indices(int lo, int hi) {  // inclusive
    std::vector<int> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i);
    return v;
}

std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

PartTable default_part_table() {
    // Landmark index sets follow the 68-point annotation scheme; windows are
    // the stock region sizes (width x height).
    PartTable t;
    t.parts.push_back({"Eye", range_indices(36, 41), 53, 39,
                       {"Arched_Eyebrows", "Bags_Under_Eyes", "Bushy_Eyebrows", "Narrow_Eyes",
                        "Eyeglasses", "Blurry", "Heavy_Makeup", "Male", "Young", "Attractive"}});
    t.parts.push_back({"BothEyes", range_indices(36, 47), 115, 41,
                       {"Arched_Eyebrows", "Bags_Under_Eyes", "Bushy_Eyebrows", "Narrow_Eyes",
                        "Eyeglasses", "Blurry", "Heavy_Makeup", "Male", "Young", "Pale_Skin"}});
    t.parts.push_back({"Mouth", range_indices(48, 67), 65, 38,
                       {"Big_Lips", "Mouth_Slightly_Open", "Smiling", "Wearing_Lipstick", "Mustache",
                        "No_Beard", "Goatee", "5_o_Clock_Shadow", "Heavy_Makeup", "Male"}});
    t.parts.push_back({"Nose", range_indices(27, 35), 40, 56,
                       {"Big_Nose", "Pointy_Nose", "Blurry", "Male", "Young", "Attractive",
                        "Pale_Skin"}});
    t.parts.push_back({"EyesNose", range_indices(27, 47), 90, 62,
                       {"Arched_Eyebrows", "Bags_Under_Eyes", "Bushy_Eyebrows", "Narrow_Eyes",
                        "Eyeglasses", "Big_Nose", "Pointy_Nose", "High_Cheekbones", "Rosy_Cheeks",
                        "Blurry", "Heavy_Makeup", "Male", "Young", "Attractive", "Oval_Face",
                        "Pale_Skin"}});
    t.parts.push_back({"NoseMouth", concat(range_indices(27, 35), range_indices(48, 67)), 55, 82,
                       {"Big_Nose", "Pointy_Nose", "Big_Lips", "Mouth_Slightly_Open", "Smiling",
                        "Wearing_Lipstick", "Mustache", "No_Beard", "Goatee", "5_o_Clock_Shadow",
                        "High_Cheekbones", "Rosy_Cheeks", "Male", "Young", "Attractive"}});
    t.parts.push_back({"EyesNoseMouth", range_indices(27, 67), 115, 107,
                       {"Arched_Eyebrows", "Bags_Under_Eyes", "Bushy_Eyebrows", "Narrow_Eyes",
                        "Eyeglasses", "Big_Nose", "Pointy_Nose", "Big_Lips", "Mouth_Slightly_Open",
                        "Smiling", "Wearing_Lipstick", "No_Beard", "5_o_Clock_Shadow",
                        "High_Cheekbones", "Rosy_Cheeks", "Chubby", "Oval_Face", "Pale_Skin", "Male",
                        "Young", "Attractive"}});
    t.parts.push_back({"UpperHead", range_indices(17, 26), 128, 52,
                       {"Bald", "Bangs", "Black_Hair", "Blond_Hair", "Brown_Hair", "Gray_Hair",
                        "Receding_Hairline", "Straight_Hair", "Wavy_Hair", "Wearing_Hat", "Blurry",
                        "Male", "Young", "Attractive", "Pale_Skin"}});
    t.parts.push_back({"MouthChin", concat(range_indices(48, 67), range_indices(7, 9)), 128, 45,
                       {"Big_Lips", "Mouth_Slightly_Open", "Smiling", "Wearing_Lipstick", "Mustache",
                        "No_Beard", "Goatee", "5_o_Clock_Shadow", "Double_Chin", "Chubby", "Male",
                        "Young", "Attractive", "Oval_Face", "Rosy_Cheeks"}});
    t.parts.push_back({"Ear", concat(range_indices(0, 2), range_indices(14, 16)), 62, 100,
                       {"Sideburns", "Wearing_Earrings", "Wearing_Hat", "Black_Hair", "Blond_Hair",
                        "Brown_Hair", "Gray_Hair", "Straight_Hair", "Wavy_Hair", "Wearing_Necklace",
                        "Wearing_Necktie", "Male", "Young", "Blurry"}});
    return t;
}

NetworkSpec part_network_spec(const PartDefinition& part, Family family) {
    NetworkSpec spec;
    spec.family = family;
    spec.mode = Mode::kMulti;
    spec.input_h = part.window_h;
    spec.input_w = part.window_w;
    spec.num_attrs = static_cast<int>(part.attributes.size());
    return spec;
}

PartTable load_part_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open part table: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("part table: ") + e.what());
    }
    PartTable t;
    for (const auto& pj : j.at("parts")) {
        PartDefinition p;
        p.name = pj.at("name").get<std::string>();
        p.landmark_indices = pj.at("landmark_indices").get<std::vector<int>>();
        p.window_w = pj.at("window_w").get<int>();
        p.window_h = pj.at("window_h").get<int>();
        p.attributes = pj.at("attributes").get<std::vector<std::string>>();
        for (const std::string& a : p.attributes) attribute_index(a);  // validate
        t.parts.push_back(std::move(p));
    }
    return t;
}

void save_part_table(const PartTable& table, const std::string& path) {
    json parts = json::array();
    for (const PartDefinition& p : table.parts) {
        parts.push_back({{"name", p.name},
                         {"landmark_indices", p.landmark_indices},
                         {"window_w", p.window_w},
                         {"window_h", p.window_h},
                         {"attributes", p.attributes}});
    }
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open part table for writing: " + path);
    f << json{{"parts", parts}}.dump(2) << "\n";
}

PartTable fit_windows(const Manifest& m, const PartTable& base,
                      const std::function<Tensor(const LabeledSample&)>& image_loader) {
    PartTable fitted = base;
    std::vector<int> max_w(base.parts.size(), 1), max_h(base.parts.size(), 1);
    for (const LabeledSample& s : m.samples) {
        if (s.split != Split::kTrain) continue;
        auto landmarks = s.landmarks;
        if (image_loader) {
            const Tensor img = image_loader(s);
            clamp_landmarks(landmarks, img.dim(0), img.dim(1));
        }
        for (std::size_t pi = 0; pi < base.parts.size(); ++pi) {
            const PartDefinition& p = base.parts[pi];
            float xmin = 1e30f, xmax = -1e30f, ymin = 1e30f, ymax = -1e30f;
            bool ok = true;
            for (int li : p.landmark_indices) {
                if (li < 0 || static_cast<std::size_t>(li) >= landmarks.size()) {
                    ok = false;
                    break;
                }
                xmin = std::min(xmin, landmarks[li].first);
                xmax = std::max(xmax, landmarks[li].first);
                ymin = std::min(ymin, landmarks[li].second);
                ymax = std::max(ymax, landmarks[li].second);
            }
            if (!ok) continue;
            max_w[pi] = std::max(max_w[pi], static_cast<int>(std::ceil(xmax - xmin)) + 1);
            max_h[pi] = std::max(max_h[pi], static_cast<int>(std::ceil(ymax - ymin)) + 1);
        }
    }
    for (std::size_t pi = 0; pi < fitted.parts.size(); ++pi) {
        fitted.parts[pi].window_w = max_w[pi];
        fitted.parts[pi].window_h = max_h[pi];
    }
    return fitted;
}

int clamp_landmarks(std::vector<std::pair<float, float>>& landmarks, int image_h, int image_w) {
    int moved = 0;
    for (auto& [x, y] : landmarks) {
        const float cx = std::clamp(x, 0.0f, static_cast<float>(image_w - 1));
        const float cy = std::clamp(y, 0.0f, static_cast<float>(image_h - 1));
        if (cx != x || cy != y) ++moved;
        x = cx;
        y = cy;
    }
    return moved;
}

Tensor crop_part(const Tensor& image, const std::vector<std::pair<float, float>>& landmarks,
                 const PartDefinition& part) {
    if (image.rank() != 3 || image.dim(2) != 3) throw ShapeError("crop_part: image must be h x w x 3");
    double sx = 0.0, sy = 0.0;
    for (int li : part.landmark_indices) {
        if (li < 0 || static_cast<std::size_t>(li) >= landmarks.size()) {
            throw std::invalid_argument("crop_part: missing landmark " + std::to_string(li) +
                                        " for part " + part.name);
        }
        sx += landmarks[li].first;
        sy += landmarks[li].second;
    }
    if (part.landmark_indices.empty()) {
        throw std::invalid_argument("crop_part: part " + part.name + " has no landmark indices");
    }
    const int cx = static_cast<int>(std::lround(sx / part.landmark_indices.size()));
    const int cy = static_cast<int>(std::lround(sy / part.landmark_indices.size()));
    const int x0 = cx - part.window_w / 2;
    const int y0 = cy - part.window_h / 2;

    Tensor crop({part.window_h, part.window_w, 3});
    const int h = image.dim(0), w = image.dim(1);
    for (int y = 0; y < part.window_h; ++y) {
        const int iy = y0 + y;
        if (iy < 0 || iy >= h) continue;
        for (int x = 0; x < part.window_w; ++x) {
            const int ix = x0 + x;
            if (ix < 0 || ix >= w) continue;
            for (int c = 0; c < 3; ++c) crop.at3(y, x, c) = image.at3(iy, ix, c);
        }
    }
    return crop;
}

namespace {

float bilinear(const Tensor& img, float fy, float fx, int c) {
    const int h = img.dim(0), w = img.dim(1);
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const float ax = fx - x0, ay = fy - y0;
    float acc = 0.0f;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            const int xx = x0 + dx, yy = y0 + dy;
            if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
            const float wgt = (dx ? ax : 1.0f - ax) * (dy ? ay : 1.0f - ay);
            acc += wgt * img.at3(yy, xx, c);
        }
    }
    return acc;
}

}  // namespace

Tensor align_face(const Tensor& image, std::pair<float, float> left_eye,
                  std::pair<float, float> right_eye) {
    if (image.rank() != 3 || image.dim(2) != 3) throw ShapeError("align_face: image must be h x w x 3");
    const float dx = right_eye.first - left_eye.first;
    const float dy = right_eye.second - left_eye.second;
    const float len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-6f) throw std::invalid_argument("align_face: coincident eye points");

    // forward map: p_dst = s*R*p_src + t, taking left_eye -> (44,50), right_eye -> (84,50)
    const float target = kCanonicalRightEyeX - kCanonicalLeftEyeX;
    const float a = target * dx / (len * len);   // s*cos
    const float b = -target * dy / (len * len);  // s*sin
    const float tx = kCanonicalLeftEyeX - (a * left_eye.first - b * left_eye.second);
    const float ty = kCanonicalEyeY - (b * left_eye.first + a * left_eye.second);

    // inverse of [a -b; b a]
    const float det = a * a + b * b;
    const float ia = a / det, ib = b / det;

    Tensor out({kAlignedSize, kAlignedSize, 3});
    for (int y = 0; y < kAlignedSize; ++y) {
        for (int x = 0; x < kAlignedSize; ++x) {
            const float ux = static_cast<float>(x) - tx;
            const float uy = static_cast<float>(y) - ty;
            const float sx = ia * ux + ib * uy;
            const float sy = -ib * ux + ia * uy;
            for (int c = 0; c < 3; ++c) out.at3(y, x, c) = bilinear(image, sy, sx, c);
        }
    }
    return out;
}

std::pair<std::pair<float, float>, std::pair<float, float>> eye_centers(
    const std::vector<std::pair<float, float>>& landmarks) {
    if (landmarks.size() < 48) {
        throw std::invalid_argument("eye_centers: need a 68-point landmark set");
    }
    auto mean_of = [&](int lo, int hi) {
        float sx = 0.0f, sy = 0.0f;
        for (int i = lo; i <= hi; ++i) {
            sx += landmarks[i].first;
            sy += landmarks[i].second;
        }
        const float n = static_cast<float>(hi - lo + 1);
        return std::make_pair(sx / n, sy / n);
    };
    return {mean_of(36, 41), mean_of(42, 47)};
}

Tensor augment_with(const Tensor& crop, bool flip, float contrast, float gamma) {
    Tensor out = crop;
    const int h = out.dim(0), w = out.dim(1), c = out.dim(2);
    if (flip) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w / 2; ++x) {
                for (int ch = 0; ch < c; ++ch) {
                    std::swap(out.at3(y, x, ch), out.at3(y, w - 1 - x, ch));
                }
            }
        }
    }
    double mean = 0.0;
    for (float v : out.data) mean += v;
    mean /= static_cast<double>(out.numel());
    for (float& v : out.data) {
        float u = static_cast<float>(mean + contrast * (v - mean));
        u = std::clamp(u, 0.0f, 1.0f);
        v = std::clamp(std::pow(u, gamma), 0.0f, 1.0f);
    }
    return out;
}

Tensor augment(const Tensor& crop, Rng& rng) {
    const bool flip = rng.uniform() < 0.5;
    const float contrast = static_cast<float>(rng.uniform(0.7, 1.3));
    const float gamma = static_cast<float>(rng.uniform(0.7, 1.4));
    return augment_with(crop, flip, contrast, gamma);
}

CropFn make_part_crop_provider(const Manifest& m, const PartDefinition& part) {
    auto cache = std::make_shared<std::unordered_map<std::size_t, Tensor>>();
    const Manifest* mp = &m;
    PartDefinition p = part;
    return [cache, mp, p](std::size_t idx) -> Tensor {
        auto it = cache->find(idx);
        if (it != cache->end()) return it->second;
        const LabeledSample& s = mp->samples.at(idx);
        Tensor img = load_ppm(s.image_ref);
        auto landmarks = s.landmarks;
        if (const int moved = clamp_landmarks(landmarks, img.dim(0), img.dim(1)); moved > 0) {
            std::fprintf(stderr, "warning: clamped %d landmark(s) of %s into image bounds\n", moved,
                         s.image_ref.c_str());
        }
        Tensor crop = crop_part(img, landmarks, p);
        (*cache)[idx] = crop;
        return crop;
    };
}

CropFn make_aligned_face_provider(const Manifest& m) {
    auto cache = std::make_shared<std::unordered_map<std::size_t, Tensor>>();
    const Manifest* mp = &m;
    return [cache, mp](std::size_t idx) -> Tensor {
        auto it = cache->find(idx);
        if (it != cache->end()) return it->second;
        const LabeledSample& s = mp->samples.at(idx);
        Tensor img = load_ppm(s.image_ref);
        auto landmarks = s.landmarks;
        if (const int moved = clamp_landmarks(landmarks, img.dim(0), img.dim(1)); moved > 0) {
            std::fprintf(stderr, "warning: clamped %d landmark(s) of %s into image bounds\n", moved,
                         s.image_ref.c_str());
        }
        const auto [le, re] = eye_centers(landmarks);
        Tensor face = align_face(img, le, re);
        (*cache)[idx] = face;
        return face;
    };
}

QueueSet QueueSet::build(const Manifest& m, const PartDefinition& part, std::uint64_t seed) {
    QueueSet qs;
    const std::vector<int> attr_ids = part.attribute_ids();
    const std::size_t num_attrs = attr_ids.size();
    const std::vector<std::size_t> train = m.indices_of(Split::kTrain);
    if (train.empty()) throw std::invalid_argument("queue set: no training samples");

    qs.labels_.assign(m.samples.size(), {});
    for (std::size_t i : train) {
        std::vector<int> lab(num_attrs);
        for (std::size_t a = 0; a < num_attrs; ++a) lab[a] = m.samples[i].labels[attr_ids[a]];
        qs.labels_[i] = std::move(lab);
    }

    qs.minority_class_.assign(num_attrs, 1);
    for (std::size_t a = 0; a < num_attrs; ++a) {
        std::size_t pos = 0;
        for (std::size_t i : train) pos += static_cast<std::size_t>(qs.labels_[i][a]);
        qs.minority_class_[a] = (pos * 2 <= train.size()) ? 1 : 0;
    }

    qs.queues_.assign(1 + num_attrs, {});
    for (std::size_t i : train) {
        bool any_minority = false;
        for (std::size_t a = 0; a < num_attrs; ++a) {
            if (qs.labels_[i][a] == qs.minority_class_[a]) {
                qs.queues_[1 + a].push_back(i);
                any_minority = true;
            }
        }
        if (!any_minority) qs.queues_[0].push_back(i);
    }

    Rng rng(seed);
    for (auto& q : qs.queues_) rng.shuffle(q);
    qs.cursors_.assign(qs.queues_.size(), 0);
    return qs;
}

std::size_t QueueSet::pop(std::size_t q) {
    const auto& queue = queues_.at(q);
    if (queue.empty()) throw std::out_of_range("queue set: pop from empty queue");
    const std::size_t idx = queue[cursors_[q] % queue.size()];
    ++cursors_[q];
    return idx;
}

const std::vector<int>& QueueSet::part_labels(std::size_t sample_index) const {
    return labels_.at(sample_index);
}

std::vector<BatchItem> QueueSet::sample_batch(std::size_t batch_size, Rng& rng,
                                              const CropFn& crop) {
    bool any = false;
    for (const auto& q : queues_) any = any || !q.empty();
    if (!any) throw std::invalid_argument("queue set: all queues empty");

    std::vector<BatchItem> batch;
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
        const std::size_t q = rng.index(queues_.size());
        if (queues_[q].empty()) continue;  // skip and redraw
        const std::size_t idx = pop(q);
        BatchItem item;
        item.sample_index = idx;
        item.crop = augment(crop(idx), rng);
        item.labels = labels_.at(idx);
        batch.push_back(std::move(item));
    }
    return batch;
}

std::vector<BatchItem> sample_batch_multi(QueueSet& queues, std::size_t batch_size, Rng& rng,
                                          const CropFn& crop) {
    return queues.sample_batch(batch_size, rng, crop);
}

BinaryBatchSampler BinaryBatchSampler::build(const Manifest& m, int attribute_id,
                                             std::uint64_t seed) {
    BinaryBatchSampler s;
    s.labels_.assign(m.samples.size(), 0);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i : m.indices_of(Split::kTrain)) {
        s.labels_[i] = m.samples[i].labels.at(attribute_id);
        (s.labels_[i] ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw std::invalid_argument("binary sampler: attribute has a single class in the training split");
    }
    if (pos.size() >= neg.size()) {
        s.majority_ = std::move(pos);
        s.minority_ = std::move(neg);
    } else {
        s.majority_ = std::move(neg);
        s.minority_ = std::move(pos);
    }
    s.epoch_rng_ = Rng(seed);
    s.start_epoch();
    return s;
}

void BinaryBatchSampler::start_epoch() {
    pool_.clear();
    pool_.reserve(majority_.size() * 2);
    pool_.insert(pool_.end(), majority_.begin(), majority_.end());
    for (std::size_t i = 0; i < majority_.size(); ++i) {
        pool_.push_back(minority_[i % minority_.size()]);
    }
    epoch_rng_.shuffle(pool_);
    cursor_ = 0;
}

std::vector<BatchItem> BinaryBatchSampler::next_batch(std::size_t batch_size, Rng& rng,
                                                      const CropFn& crop) {
    std::vector<BatchItem> batch;
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
        if (cursor_ >= pool_.size()) start_epoch();
        const std::size_t idx = pool_[cursor_++];
        BatchItem item;
        item.sample_index = idx;
        item.crop = augment(crop(idx), rng);
        item.labels = {labels_[idx]};
        batch.push_back(std::move(item));
    }
    return batch;
}

std::vector<BatchItem> sample_batch_binary(BinaryBatchSampler& sampler, std::size_t batch_size,
                                           Rng& rng, const CropFn& crop) {
    return sampler.next_batch(batch_size, rng, crop);
}

}  // namespace cnnaa
