#include "cnnaa/attr_heads.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cnnaa/datapipe.hpp"

namespace cnnaa {

using nlohmann::json;

double AttributeHead::decision(const std::vector<float>& x) const {
    if (x.size() != weights.size()) {
        throw ShapeError("attribute head " + attribute + ": feature length " + std::to_string(x.size()) +
                         " does not match weight length " + std::to_string(weights.size()));
    }
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(weights[i]) * x[i];
    return s;
}

double AttributeHead::probability(double decision_value) const {
    const double z = platt_a * decision_value + platt_b;
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

SvmModel train_linear_svm(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                          double reg_c, int max_sweeps) {
    if (x.empty() || x.size() != y.size()) {
        throw std::invalid_argument("svm: empty data or label length mismatch");
    }
    bool has_pos = false, has_neg = false;
    for (int v : y) (v ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw std::invalid_argument("svm: single-class training data");

    const std::size_t n = x.size();
    const std::size_t d = x[0].size();
    for (const auto& row : x) {
        if (row.size() != d) throw ShapeError("svm: ragged feature matrix");
    }

    // dual coordinate descent on the L1-loss SVM with the bias as an
    // augmented constant feature
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double q = 1.0;  // augmented bias feature
        for (float v : x[i]) q += static_cast<double>(v) * v;
        qii[i] = q;
    }

    const double tol = 1e-8;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i] ? 1.0 : -1.0;
            double margin = w[d];
            for (std::size_t k = 0; k < d; ++k) margin += w[k] * x[i][k];
            const double grad = yi * margin - 1.0;
            const double old = alpha[i];
            const double next = std::clamp(old - grad / qii[i], 0.0, reg_c);
            const double delta = next - old;
            if (delta == 0.0) continue;
            alpha[i] = next;
            for (std::size_t k = 0; k < d; ++k) w[k] += delta * yi * x[i][k];
            w[d] += delta * yi;
            max_delta = std::max(max_delta, std::abs(delta));
        }
        if (max_delta < tol) break;
    }

    SvmModel model;
    model.w.assign(w.begin(), w.begin() + static_cast<long>(d));
    model.b = w[d];
    return model;
}

double hinge_objective(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                       const std::vector<double>& w, double b, double reg_c) {
    double obj = 0.0;
    for (double v : w) obj += v * v;
    obj *= 0.5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = b;
        for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[i][k];
        const double yi = y[i] ? 1.0 : -1.0;
        obj += reg_c * std::max(0.0, 1.0 - yi * s);
    }
    return obj;
}

std::pair<double, double> fit_platt(const std::vector<double>& decisions,
                                    const std::vector<int>& labels) {
    if (decisions.size() != labels.size() || decisions.empty()) {
        throw std::invalid_argument("platt: empty or mismatched inputs");
    }
    double np = 0.0, nn = 0.0;
    for (int l : labels) (l ? np : nn) += 1.0;
    const double hi = (np + 1.0) / (np + 2.0);
    const double lo = 1.0 / (nn + 2.0);

    const std::size_t n = decisions.size();
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] ? hi : lo;

    double a = 0.0;
    double b = std::log((nn + 1.0) / (np + 1.0));

    auto nll = [&](double A, double B) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = A * decisions[i] + B;
            // log(1 + e^-|z|) + max(z,0) keeps this stable for large |z|
            const double m = std::max(z, 0.0);
            const double l1pe = std::log(1.0 + std::exp(-std::abs(z))) + m;
            f += t[i] * z + l1pe - z;  // t*z + log(1+e^-z)
        }
        return f;
    };

    const double sigma = 1e-12;
    double fval = nll(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * decisions[i] + b;
            double p, q;
            if (z >= 0.0) {
                const double e = std::exp(-z);
                p = e / (1.0 + e);
                q = 1.0 / (1.0 + e);
            } else {
                const double e = std::exp(z);
                p = 1.0 / (1.0 + e);
                q = e / (1.0 + e);
            }
            const double d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            const double d1 = t[i] - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-10 && std::abs(g2) < 1e-10) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= 1e-10) {
            const double na = a + step * da, nb = b + step * db;
            const double nf = nll(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step *= 0.5;
        }
        if (step < 1e-10) break;
    }
    return {a, b};
}

AttributeHead train_head(const std::string& attribute, const std::vector<std::string>& parts,
                         const std::vector<std::vector<float>>& x_train, const std::vector<int>& y_train,
                         const std::vector<std::vector<float>>& x_dev, const std::vector<int>& y_dev,
                         const std::vector<double>& grid) {
    if (x_dev.empty()) throw std::invalid_argument("train_head: empty dev split");

    SvmModel best_model;
    double best_acc = -1.0;
    double best_c = grid.front();
    for (double c : grid) {
        SvmModel m = train_linear_svm(x_train, y_train, c);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < x_dev.size(); ++i) {
            double s = m.b;
            for (std::size_t k = 0; k < m.w.size(); ++k) s += m.w[k] * x_dev[i][k];
            if ((s > 0.0 ? 1 : 0) == y_dev[i]) ++correct;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(x_dev.size());
        if (acc > best_acc) {  // strict: ties keep the earlier (smaller) C
            best_acc = acc;
            best_model = std::move(m);
            best_c = c;
        }
    }

    std::vector<double> dev_decisions(x_dev.size());
    for (std::size_t i = 0; i < x_dev.size(); ++i) {
        double s = best_model.b;
        for (std::size_t k = 0; k < best_model.w.size(); ++k) s += best_model.w[k] * x_dev[i][k];
        dev_decisions[i] = s;
    }
    const auto [pa, pb] = fit_platt(dev_decisions, y_dev);

    AttributeHead head;
    head.attribute = attribute;
    head.parts = parts;
    head.weights.assign(best_model.w.begin(), best_model.w.end());
    head.bias = static_cast<float>(best_model.b);
    head.platt_a = static_cast<float>(pa);
    head.platt_b = static_cast<float>(pb);
    head.reg_c = best_c;
    return head;
}

AttributePrediction predict_attributes(const std::vector<AttributeHead>& heads,
                                       const std::map<std::string, std::vector<float>>& part_embeddings,
                                       double missing_value) {
    const auto& names = attribute_names();
    AttributePrediction out;
    out.probabilities.assign(names.size(), missing_value);
    out.available.assign(names.size(), false);
    for (const AttributeHead& head : heads) {
        const int idx = attribute_index(head.attribute);
        std::vector<float> feat;
        bool ok = true;
        for (const std::string& part : head.parts) {
            auto it = part_embeddings.find(part);
            if (it == part_embeddings.end()) {
                ok = false;
                break;
            }
            feat.insert(feat.end(), it->second.begin(), it->second.end());
        }
        if (!ok) continue;
        out.probabilities[idx] = head.probability(head.decision(feat));
        out.available[idx] = true;
    }
    return out;
}

AccuracyTable eval_accuracy(const std::vector<AttributeHead>& heads,
                            const std::vector<std::map<std::string, std::vector<float>>>& embeddings,
                            const std::vector<std::vector<int>>& labels) {
    if (embeddings.size() != labels.size()) {
        throw std::invalid_argument("eval_accuracy: sample/label count mismatch");
    }
    AccuracyTable table;
    for (const AttributeHead& head : heads) {
        const int idx = attribute_index(head.attribute);
        std::size_t correct = 0, total = 0;
        for (std::size_t i = 0; i < embeddings.size(); ++i) {
            std::vector<float> feat;
            bool ok = true;
            for (const std::string& part : head.parts) {
                auto it = embeddings[i].find(part);
                if (it == embeddings[i].end()) {
                    ok = false;
                    break;
                }
                feat.insert(feat.end(), it->second.begin(), it->second.end());
            }
            if (!ok) continue;
            const double p = head.probability(head.decision(feat));
            if ((p > 0.5 ? 1 : 0) == labels[i][idx]) ++correct;
            ++total;
        }
        table.attributes.push_back(head.attribute);
        table.accuracy.push_back(total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0);
    }
    double sum = 0.0;
    for (double a : table.accuracy) sum += a;
    table.average = table.accuracy.empty() ? 0.0 : sum / static_cast<double>(table.accuracy.size());
    return table;
}

std::string accuracy_csv(const AccuracyTable& table) {
    std::string out = "attribute,accuracy\n";
    for (std::size_t i = 0; i < table.attributes.size(); ++i) {
        out += table.attributes[i] + "," + std::to_string(table.accuracy[i]) + "\n";
    }
    out += "Average," + std::to_string(table.average) + "\n";
    return out;
}

std::string heads_to_json(const std::vector<AttributeHead>& heads) {
    json arr = json::array();
    for (const AttributeHead& h : heads) {
        arr.push_back({{"attribute", h.attribute},
                       {"parts", h.parts},
                       {"weights", h.weights},
                       {"bias", h.bias},
                       {"platt_a", h.platt_a},
                       {"platt_b", h.platt_b},
                       {"reg_c", h.reg_c}});
    }
    return json{{"heads", arr}}.dump(2);
}

std::vector<AttributeHead> heads_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("heads json: ") + e.what());
    }
    std::vector<AttributeHead> heads;
    for (const auto& hj : j.at("heads")) {
        AttributeHead h;
        h.attribute = hj.at("attribute").get<std::string>();
        h.parts = hj.at("parts").get<std::vector<std::string>>();
        h.weights = hj.at("weights").get<std::vector<float>>();
        h.bias = hj.at("bias").get<float>();
        h.platt_a = hj.at("platt_a").get<float>();
        h.platt_b = hj.at("platt_b").get<float>();
        h.reg_c = hj.value("reg_c", 1.0);
        heads.push_back(std::move(h));
    }
    return heads;
}

void save_heads(const std::vector<AttributeHead>& heads, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open heads file for writing: " + path);
    f << heads_to_json(heads) << "\n";
}

std::vector<AttributeHead> load_heads(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open heads file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return heads_from_json(text);
}

}  // namespace cnnaa
