#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cnnaa/netdef.hpp"
#include "cnnaa/rng.hpp"
#include "cnnaa/tensor.hpp"

namespace cnnaa {

enum class Split { kTrain, kDev, kTest };

/// The 40 canonical attribute names, in table order.
const std::vector<std::string>& attribute_names();
int attribute_index(const std::string& name);

struct LabeledSample {
    std::string image_ref;
    std::vector<int> labels;  // 40 entries, canonical order, each 0/1
    std::vector<std::pair<float, float>> landmarks;  // (x, y) pixels
    std::string identity;
    Split split = Split::kTrain;
};

struct Manifest {
    std::vector<LabeledSample> samples;

    std::vector<std::size_t> indices_of(Split split) const;
};

/// JSON-lines manifest: one sample per line with fields image, attrs
/// (name -> 0/1, all 40), landmarks ([[x,y],...]), identity, split.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

struct PartDefinition {
    std::string name;
    std::vector<int> landmark_indices;
    int window_w = 0;
    int window_h = 0;
    std::vector<std::string> attributes;

    std::vector<int> attribute_ids() const;  // canonical indices
};

struct PartTable {
    std::vector<PartDefinition> parts;

    const PartDefinition& part(const std::string& name) const;
};

/// The ten stock face regions with their window sizes and attribute lists.
PartTable default_part_table();

/// Multi-task NetworkSpec for one part network of the given family.
NetworkSpec part_network_spec(const PartDefinition& part, Family family);
PartTable load_part_table(const std::string& path);
void save_part_table(const PartTable& table, const std::string& path);

/// Recomputes each part's window as the maximum landmark bounding box over
/// the training split.
PartTable fit_windows(const Manifest& m, const PartTable& base,
                      const std::function<Tensor(const LabeledSample&)>& image_loader);

/// Clamps landmarks into [0,w-1] x [0,h-1]; returns how many moved.
int clamp_landmarks(std::vector<std::pair<float, float>>& landmarks, int image_h, int image_w);

/// Axis-aligned window_w x window_h crop centered on the rounded centroid of
/// the indexed landmarks; out-of-image regions are zero, no scaling.
Tensor crop_part(const Tensor& image, const std::vector<std::pair<float, float>>& landmarks,
                 const PartDefinition& part);

// Canonical eye positions in the aligned 128 x 128 frame.
inline constexpr float kCanonicalLeftEyeX = 44.0f;
inline constexpr float kCanonicalRightEyeX = 84.0f;
inline constexpr float kCanonicalEyeY = 50.0f;
inline constexpr int kAlignedSize = 128;

/// Similarity transform taking the two eye centers onto the canonical
/// positions, bilinear resampling, zero fill. left_eye is the eye that lands
/// at x=44. Throws std::invalid_argument for coincident eye points.
Tensor align_face(const Tensor& image, std::pair<float, float> left_eye,
                  std::pair<float, float> right_eye);

/// Eye centers from a 68-point landmark set (mean of points 36-41 and 42-47).
std::pair<std::pair<float, float>, std::pair<float, float>> eye_centers(
    const std::vector<std::pair<float, float>>& landmarks);

/// Deterministic augmentation core: optional horizontal flip, contrast about
/// the image mean, gamma curve, clamped back into [0,1].
Tensor augment_with(const Tensor& crop, bool flip, float contrast, float gamma);

/// Random flip (p=0.5), contrast in [0.7,1.3], gamma in [0.7,1.4].
Tensor augment(const Tensor& crop, Rng& rng);

struct BatchItem {
    std::size_t sample_index = 0;
    Tensor crop;
    std::vector<int> labels;  // one entry per attribute of the consumer
};

using CropFn = std::function<Tensor(std::size_t sample_index)>;

/// Loads + caches one un-augmented part crop per manifest sample.
CropFn make_part_crop_provider(const Manifest& m, const PartDefinition& part);
/// Same but producing aligned full faces.
CropFn make_aligned_face_provider(const Manifest& m);

/// Class-balancing circular queues for one multi-task part network: one
/// minority queue per attribute plus the all-majority queue, shuffled once.
class QueueSet {
public:
    static QueueSet build(const Manifest& m, const PartDefinition& part, std::uint64_t seed);

    std::size_t queue_count() const { return queues_.size(); }
    std::size_t queue_size(std::size_t q) const { return queues_[q].size(); }
    int minority_class(std::size_t attr) const { return minority_class_[attr]; }

    /// Next element of queue q; cursor wraps around.
    std::size_t pop(std::size_t q);

    /// One training batch: each slot picks a queue uniformly at random (empty
    /// queues skipped), follows the circular cursor, and augments afresh.
    std::vector<BatchItem> sample_batch(std::size_t batch_size, Rng& rng, const CropFn& crop);

    const std::vector<int>& part_labels(std::size_t sample_index) const;

private:
    // queues_[0] is the majority queue, queues_[1 + a] attribute a's minority queue
    std::vector<std::vector<std::size_t>> queues_;
    std::vector<std::size_t> cursors_;
    std::vector<int> minority_class_;
    std::vector<std::vector<int>> labels_;  // per manifest sample: this part's labels
};

std::vector<BatchItem> sample_batch_multi(QueueSet& queues, std::size_t batch_size, Rng& rng,
                                          const CropFn& crop);

/// Epoch-based sampler for one binary attribute: minority oversampled to the
/// majority count, pool reshuffled every epoch, batches drawn sequentially.
class BinaryBatchSampler {
public:
    static BinaryBatchSampler build(const Manifest& m, int attribute_id, std::uint64_t seed);

    std::vector<BatchItem> next_batch(std::size_t batch_size, Rng& rng, const CropFn& crop);

    std::size_t epoch_pool_size() const { return majority_.size() * 2; }
    std::size_t majority_count() const { return majority_.size(); }
    std::size_t minority_count() const { return minority_.size(); }

private:
    void start_epoch();

    std::vector<std::size_t> majority_;
    std::vector<std::size_t> minority_;
    std::vector<std::size_t> pool_;
    std::size_t cursor_ = 0;
    std::vector<int> labels_;  // per manifest sample, the attribute's label
    Rng epoch_rng_{0};
};

std::vector<BatchItem> sample_batch_binary(BinaryBatchSampler& sampler, std::size_t batch_size,
                                           Rng& rng, const CropFn& crop);

}  // namespace cnnaa
