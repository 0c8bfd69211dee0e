#include "cnnaa/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "cnnaa/rng.hpp"
#include "cnnaa/util.hpp"

namespace cnnaa {

SparseCode omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& signal, int sparsity,
               const std::vector<char>* forbidden) {
    const long d = atoms.rows();
    const long n = atoms.cols();
    if (signal.size() != d) throw ShapeError("omp: signal dimension does not match atoms");
    if (sparsity < 0 || sparsity > std::min(d, n)) {
        throw std::invalid_argument("omp: sparsity must lie in [0, min(d, n)]");
    }

    SparseCode code;
    Eigen::VectorXd residual = signal;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    if (forbidden != nullptr) {
        if (forbidden->size() != static_cast<std::size_t>(n)) {
            throw ShapeError("omp: forbidden mask length mismatch");
        }
        used = *forbidden;
    }

    Eigen::MatrixXd basis(d, sparsity);
    Eigen::VectorXd coeffs;
    for (int it = 0; it < sparsity; ++it) {
        if (residual.norm() < 1e-8) break;
        const Eigen::VectorXd corr = atoms.transpose() * residual;
        int best = -1;
        double best_abs = 0.0;
        for (long j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double a = std::abs(corr[j]);
            if (a > best_abs) {
                best_abs = a;
                best = static_cast<int>(j);
            }
        }
        if (best < 0 || best_abs == 0.0) break;
        used[static_cast<std::size_t>(best)] = 1;
        code.support.push_back(best);
        basis.col(it) = atoms.col(best);

        const auto sub = basis.leftCols(it + 1);
        coeffs = (sub.transpose() * sub).ldlt().solve(sub.transpose() * signal);
        residual = signal - sub * coeffs;
        code.residual_history.push_back(residual.norm());
    }
    if (!code.support.empty()) {
        code.coefficients.assign(coeffs.data(), coeffs.data() + code.support.size());
    }
    code.residual_norm = residual.norm();
    return code;
}

Eigen::MatrixXd ssc_affinity(const Eigen::MatrixXd& data, int sparsity, std::size_t jobs) {
    const long n = data.cols();
    if (n < 2) throw std::invalid_argument("ssc_affinity: need at least two points");
    const int s = std::min<long>(sparsity, std::min(data.rows(), n - 1));

    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(n, n);
    parallel_chunks(static_cast<std::size_t>(n), jobs, [&](std::size_t begin, std::size_t end) {
        std::vector<char> forbidden(static_cast<std::size_t>(n), 0);
        for (std::size_t i = begin; i < end; ++i) {
            forbidden[i] = 1;
            const SparseCode code = omp(data, data.col(static_cast<long>(i)), s, &forbidden);
            for (std::size_t k = 0; k < code.support.size(); ++k) {
                coeff(code.support[k], static_cast<long>(i)) = code.coefficients[k];
            }
            forbidden[i] = 0;
        }
    });
    return coeff;
}

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts,
                        int max_iters, double rel_tol) {
    const long n = points.rows();
    const long d = points.cols();
    if (k < 1 || n < k) throw std::invalid_argument("kmeans: need at least k points");

    Rng rng(seed);
    std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
    double best_inertia = std::numeric_limits<double>::infinity();

    std::vector<int> labels(static_cast<std::size_t>(n));
    Eigen::MatrixXd centers(k, d);
    Eigen::VectorXd dist2(n);

    for (int r = 0; r < restarts; ++r) {
        // k-means++ seeding
        centers.row(0) = points.row(static_cast<long>(rng.index(static_cast<std::size_t>(n))));
        for (long i = 0; i < n; ++i) dist2[i] = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double total = dist2.sum();
            long pick = 0;
            if (total > 0.0) {
                double target = rng.uniform() * total;
                for (long i = 0; i < n; ++i) {
                    target -= dist2[i];
                    if (target <= 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<long>(rng.index(static_cast<std::size_t>(n)));
            }
            centers.row(c) = points.row(pick);
            for (long i = 0; i < n; ++i) {
                dist2[i] = std::min(dist2[i], (points.row(i) - centers.row(c)).squaredNorm());
            }
        }

        double inertia = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < max_iters; ++iter) {
            double new_inertia = 0.0;
            for (long i = 0; i < n; ++i) {
                int best_c = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double dd = (points.row(i) - centers.row(c)).squaredNorm();
                    if (dd < best_d) {
                        best_d = dd;
                        best_c = c;
                    }
                }
                labels[static_cast<std::size_t>(i)] = best_c;
                new_inertia += best_d;
            }
            centers.setZero();
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
            for (long i = 0; i < n; ++i) {
                centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
                counts[labels[static_cast<std::size_t>(i)]] += 1.0;
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0.0) {
                    centers.row(c) /= counts[c];
                } else {
                    centers.row(c) = points.row(static_cast<long>(rng.index(static_cast<std::size_t>(n))));
                }
            }
            if (std::isfinite(inertia) && std::abs(inertia - new_inertia) <= rel_tol * std::max(inertia, 1e-30)) {
                inertia = new_inertia;
                break;
            }
            inertia = new_inertia;
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

std::vector<int> spectral_cluster(const Eigen::MatrixXd& coefficients, int k, std::uint64_t seed) {
    const long n = coefficients.rows();
    if (coefficients.cols() != n) throw ShapeError("spectral_cluster: coefficient matrix must be square");
    if (k < 2) throw std::invalid_argument("spectral_cluster: k must be >= 2");
    if (n < k) throw std::invalid_argument("spectral_cluster: fewer points than clusters");

    Eigen::MatrixXd w = coefficients.cwiseAbs();
    w += w.transpose().eval();

    Eigen::VectorXd degree = w.rowwise().sum();
    constexpr double kSelfLoop = 1e-12;
    for (long i = 0; i < n; ++i) {
        if (degree[i] <= 0.0) {
            w(i, i) = kSelfLoop;
            degree[i] = kSelfLoop;
        }
    }
    const Eigen::VectorXd dinv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd lap = -(dinv_sqrt.asDiagonal() * w * dinv_sqrt.asDiagonal());
    lap.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("spectral_cluster: eigendecomposition failed");
    }
    // eigenvalues ascending: the first k columns span the bottom of the spectrum
    Eigen::MatrixXd embed = solver.eigenvectors().leftCols(k);
    for (long i = 0; i < n; ++i) {
        const double norm = embed.row(i).norm();
        if (norm > 0.0) embed.row(i) /= norm;
    }
    return kmeans(embed, k, seed);
}

Dictionary build_dictionary(const std::string& part, const Eigen::MatrixXf& embeddings,
                            int size, int num_clusters, int sparsity, std::uint64_t seed) {
    const long d = embeddings.rows();
    const long m = embeddings.cols();
    if (m < 2) throw std::invalid_argument("build_dictionary: need at least two embeddings");

    // uniform sample without replacement, skipping zero embeddings
    std::vector<std::size_t> candidates;
    for (long j = 0; j < m; ++j) {
        if (embeddings.col(j).norm() > 0.0f) candidates.push_back(static_cast<std::size_t>(j));
    }
    if (candidates.size() < 2) throw std::invalid_argument("build_dictionary: not enough nonzero embeddings");
    Rng rng(seed);
    rng.shuffle(candidates);
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(size), candidates.size());
    candidates.resize(n);
    std::sort(candidates.begin(), candidates.end());

    Dictionary dict;
    dict.part = part;
    dict.num_clusters = num_clusters;
    dict.atoms.resize(d, static_cast<long>(n));
    dict.source_indices = candidates;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXf col = embeddings.col(static_cast<long>(candidates[i]));
        dict.atoms.col(static_cast<long>(i)) = col / col.norm();
    }

    const Eigen::MatrixXd data = dict.atoms.cast<double>();
    const Eigen::MatrixXd coeff = ssc_affinity(data, sparsity, std::thread::hardware_concurrency());
    dict.cluster_labels = spectral_cluster(coeff, num_clusters, seed);
    return dict;
}

std::vector<double> discattr_block(const Dictionary& dict, const std::vector<float>& embedding,
                                   int sparsity) {
    const int k = dict.num_clusters;
    std::vector<double> block(static_cast<std::size_t>(k), 1.0 / k);
    if (static_cast<long>(embedding.size()) != dict.atoms.rows()) {
        throw ShapeError("discattr_block: embedding dimension does not match dictionary");
    }
    Eigen::VectorXd signal(dict.atoms.rows());
    for (long i = 0; i < signal.size(); ++i) signal[i] = embedding[static_cast<std::size_t>(i)];
    const double norm = signal.norm();
    if (norm <= 0.0) return block;  // uniform
    signal /= norm;

    const Eigen::MatrixXd atoms = dict.atoms.cast<double>();
    const int s = std::min<long>(sparsity, std::min(atoms.rows(), atoms.cols()));
    const SparseCode code = omp(atoms, signal, s);

    // per-cluster partial reconstructions
    std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(k),
                                         Eigen::VectorXd::Zero(atoms.rows()));
    for (std::size_t i = 0; i < code.support.size(); ++i) {
        const int cluster = dict.cluster_labels.at(static_cast<std::size_t>(code.support[i]));
        partial[static_cast<std::size_t>(cluster)] += code.coefficients[i] * atoms.col(code.support[i]);
    }
    double denom = 0.0;
    std::vector<double> scores(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        scores[static_cast<std::size_t>(c)] = std::exp(partial[static_cast<std::size_t>(c)].norm());
        denom += scores[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) block[static_cast<std::size_t>(c)] = scores[static_cast<std::size_t>(c)] / denom;
    return block;
}

std::vector<double> discattr_features(
    const std::vector<Dictionary>& dictionaries,
    const std::map<std::string, std::vector<float>>& part_embeddings, int sparsity) {
    std::vector<double> out;
    for (const Dictionary& dict : dictionaries) {
        auto it = part_embeddings.find(dict.part);
        if (it == part_embeddings.end()) {
            out.insert(out.end(), static_cast<std::size_t>(dict.num_clusters),
                       1.0 / dict.num_clusters);
        } else {
            const auto block = discattr_block(dict, it->second, sparsity);
            out.insert(out.end(), block.begin(), block.end());
        }
    }
    return out;
}

namespace {

constexpr char kDictMagic[6] = {'C', 'N', 'N', 'A', 'D', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    if (pos + 4 > b.size()) throw FormatError("dictionary: truncated payload");
    const std::uint32_t v = b[pos] | (b[pos + 1] << 8) | (b[pos + 2] << 16) |
                            (static_cast<std::uint32_t>(b[pos + 3]) << 24);
    pos += 4;
    return v;
}

float get_f32(const std::vector<std::uint8_t>& b, std::size_t& pos) {
    const std::uint32_t v = get_u32(b, pos);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

}  // namespace

void save_dictionary_file(const Dictionary& dict, const std::string& path) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kDictMagic, kDictMagic + 6);
    out.push_back(1);  // version
    put_u32(out, static_cast<std::uint32_t>(dict.part.size()));
    out.insert(out.end(), dict.part.begin(), dict.part.end());
    put_u32(out, static_cast<std::uint32_t>(dict.num_clusters));
    put_u32(out, static_cast<std::uint32_t>(dict.atoms.rows()));
    put_u32(out, static_cast<std::uint32_t>(dict.atoms.cols()));
    for (long i = 0; i < dict.atoms.rows(); ++i) {
        for (long j = 0; j < dict.atoms.cols(); ++j) put_f32(out, dict.atoms(i, j));
    }
    for (int label : dict.cluster_labels) put_u32(out, static_cast<std::uint32_t>(label));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open dictionary file for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("failed writing dictionary file: " + path);
}

Dictionary load_dictionary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open dictionary file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 7 || std::memcmp(bytes.data(), kDictMagic, 6) != 0) {
        throw FormatError("dictionary: bad magic");
    }
    std::size_t pos = 6;
    if (bytes[pos++] != 1) throw FormatError("dictionary: unsupported version");
    Dictionary dict;
    const std::uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw FormatError("dictionary: truncated payload");
    dict.part.assign(reinterpret_cast<const char*>(bytes.data() + pos), name_len);
    pos += name_len;
    dict.num_clusters = static_cast<int>(get_u32(bytes, pos));
    const std::uint32_t d = get_u32(bytes, pos);
    const std::uint32_t n = get_u32(bytes, pos);
    dict.atoms.resize(d, n);
    for (std::uint32_t i = 0; i < d; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) dict.atoms(i, j) = get_f32(bytes, pos);
    }
    dict.cluster_labels.resize(n);
    for (std::uint32_t j = 0; j < n; ++j) {
        dict.cluster_labels[j] = static_cast<int>(get_u32(bytes, pos));
    }
    if (pos != bytes.size()) throw FormatError("dictionary: trailing bytes");
    return dict;
}

}  // namespace cnnaa
