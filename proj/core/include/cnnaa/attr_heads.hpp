#pragma once

#include <map>
#include <string>
#include <vector>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

/// Per-attribute linear classifier over the concatenation of its parts'
/// embeddings, with a sigmoid mapping decision values to probabilities.
struct AttributeHead {
    std::string attribute;
    std::vector<std::string> parts;   // concatenation order
    std::vector<float> weights;       // length = sum of part embedding dims
    float bias = 0.0f;
    float platt_a = -1.0f;            // p = 1 / (1 + exp(a*s + b))
    float platt_b = 0.0f;
    double reg_c = 1.0;

    double decision(const std::vector<float>& x) const;
    double probability(double decision_value) const;
};

struct SvmModel {
    std::vector<double> w;
    double b = 0.0;
};

/// L2-regularized hinge-loss linear SVM (labels in {0,1}), deterministic
/// dual coordinate descent with the bias folded in as an augmented feature.
SvmModel train_linear_svm(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                          double reg_c, int max_sweeps = 1000);

/// Primal objective 0.5*|w|^2 + C * sum hinge; the random-hyperplane oracle
/// in the tests compares against this.
double hinge_objective(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                       const std::vector<double>& w, double b, double reg_c);

/// Sigmoid fit on decision values by regularized maximum likelihood
/// (Platt's targets, Newton iterations). Returns (a, b).
std::pair<double, double> fit_platt(const std::vector<double>& decisions,
                                    const std::vector<int>& labels);

inline const std::vector<double>& reg_c_grid() {
    static const std::vector<double> kGrid = {0.01, 0.1, 1.0, 10.0, 100.0};
    return kGrid;
}

/// Fits the SVM per grid C, keeps the dev-accuracy winner (ties prefer the
/// smaller C), then calibrates on dev decision values.
AttributeHead train_head(const std::string& attribute, const std::vector<std::string>& parts,
                         const std::vector<std::vector<float>>& x_train, const std::vector<int>& y_train,
                         const std::vector<std::vector<float>>& x_dev, const std::vector<int>& y_dev,
                         const std::vector<double>& grid = reg_c_grid());

struct AttributePrediction {
    std::vector<double> probabilities;  // canonical attribute order
    std::vector<bool> available;        // false when a needed part crop was missing
};

/// Applies every head to the available per-part embeddings. Heads whose parts
/// are not all present get `missing_value` (and available=false).
AttributePrediction predict_attributes(const std::vector<AttributeHead>& heads,
                                       const std::map<std::string, std::vector<float>>& part_embeddings,
                                       double missing_value = 0.5);

struct AccuracyTable {
    std::vector<std::string> attributes;
    std::vector<double> accuracy;
    double average = 0.0;
};

/// Thresholded (p > 0.5) accuracy per attribute plus the mean row.
AccuracyTable eval_accuracy(const std::vector<AttributeHead>& heads,
                            const std::vector<std::map<std::string, std::vector<float>>>& embeddings,
                            const std::vector<std::vector<int>>& labels);

std::string accuracy_csv(const AccuracyTable& table);

std::string heads_to_json(const std::vector<AttributeHead>& heads);
std::vector<AttributeHead> heads_from_json(const std::string& text);
void save_heads(const std::vector<AttributeHead>& heads, const std::string& path);
std::vector<AttributeHead> load_heads(const std::string& path);

}  // namespace cnnaa
