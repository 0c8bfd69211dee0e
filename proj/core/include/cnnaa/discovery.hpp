#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

struct SparseCode {
    std::vector<int> support;
    std::vector<double> coefficients;
    double residual_norm = 0.0;
    std::vector<double> residual_history;  // norm after each added atom
};

/// Orthogonal Matching Pursuit: greedy max-|correlation| atom selection with a
/// least-squares refit on the support each iteration. Stops after `sparsity`
/// atoms or once the residual norm drops below 1e-8. Columns of `atoms` are
/// expected unit-normalized. Indices flagged in `forbidden` are never picked.
SparseCode omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& signal, int sparsity,
               const std::vector<char>* forbidden = nullptr);

/// Sparse-subspace affinity: each column coded over all the others (the
/// diagonal is exactly zero), assembled column-wise.
Eigen::MatrixXd ssc_affinity(const Eigen::MatrixXd& data, int sparsity, std::size_t jobs = 1);

/// Spectral clustering of a coefficient matrix: W = |C| + |C|^T, symmetric
/// normalized Laplacian, bottom-k eigenvectors, row normalization, seeded
/// k-means++. Zero-degree rows get a self-loop.
std::vector<int> spectral_cluster(const Eigen::MatrixXd& coefficients, int k, std::uint64_t seed);

/// Seeded k-means++ over row vectors; returns labels in [0, k).
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                        int restarts = 100, int max_iters = 100, double rel_tol = 1e-6);

struct Dictionary {
    std::string part;
    int num_clusters = 0;
    Eigen::MatrixXf atoms;           // d x n, unit columns
    std::vector<int> cluster_labels; // n entries in [0, num_clusters)
    std::vector<std::size_t> source_indices;  // manifest rows the atoms came from
};

/// Samples up to `size` embedding columns (without replacement), normalizes
/// them and clusters via ssc_affinity + spectral_cluster.
Dictionary build_dictionary(const std::string& part, const Eigen::MatrixXf& embeddings,
                            int size, int num_clusters, int sparsity, std::uint64_t seed);

/// Eq-style per-part feature: sparse-code the unit-normalized embedding and
/// softmax the per-cluster partial reconstruction norms. A zero embedding
/// yields the uniform block.
std::vector<double> discattr_block(const Dictionary& dict, const std::vector<float>& embedding,
                                   int sparsity = 20);

/// Concatenation of the per-part blocks in dictionary order; parts whose
/// embedding is missing contribute the uniform block.
std::vector<double> discattr_features(
    const std::vector<Dictionary>& dictionaries,
    const std::map<std::string, std::vector<float>>& part_embeddings, int sparsity = 20);

// Binary container: magic "CNNAD1", version, part name, cluster count, then
// tensor entries for the atoms (d x n) and labels (n).
void save_dictionary_file(const Dictionary& dict, const std::string& path);
Dictionary load_dictionary_file(const std::string& path);

}  // namespace cnnaa
