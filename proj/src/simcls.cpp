#include "sensemask/simcls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "sensemask/error.hpp"
#include "sensemask/numerics.hpp"
#include "sensemask/parallel.hpp"
#include "sensemask/random.hpp"

namespace sensemask {

Eigen::VectorXd layerwise_sim(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2) {
    if (t1.rows() != t2.rows() || t1.cols() != t2.cols()) {
        throw ShapeMismatch("layerwise_sim: tensor shapes differ");
    }
    Eigen::VectorXd sims(t1.cols());
    for (Eigen::Index j = 0; j < t1.cols(); ++j) {
        try {
            sims[j] = cosine(t1.col(j), t2.col(j));
        } catch (const ZeroNormError&) {
            throw ZeroNormError("layer " + std::to_string(j) + " has zero norm (over-masked?)",
                                std::nullopt, static_cast<int>(j));
        }
    }
    return sims;
}

Eigen::VectorXd baseline_repr(const Eigen::MatrixXd& t) {
    if (t.cols() < 4) {
        throw TooFewLayers("baseline needs at least 4 layers, got " + std::to_string(t.cols()));
    }
    return t.rightCols(4).rowwise().sum();
}

double baseline_sim(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2) {
    return cosine(baseline_repr(t1), baseline_repr(t2));
}

double classify(const Classifier& cls, const Eigen::VectorXd& sims) {
    if (cls.weights.size() != sims.size()) {
        throw LengthMismatch("classifier has " + std::to_string(cls.weights.size()) +
                             " weights, input has " + std::to_string(sims.size()));
    }
    const double z = cls.weights.dot(sims) + cls.bias;
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

Representation parse_representation(const std::string& name) {
    if (name == "baseline") return Representation::Baseline;
    if (name == "layerwise") return Representation::Layerwise;
    if (name == "masked") return Representation::Masked;
    throw ConfigError("unknown representation '" + name + "' (baseline|layerwise|masked)");
}

std::string to_string(Representation r) {
    switch (r) {
        case Representation::Baseline: return "baseline";
        case Representation::Layerwise: return "layerwise";
        case Representation::Masked: return "masked";
    }
    return "?";
}

PairFeatures pair_features(const Dataset& dataset, const std::vector<LabeledPair>& pairs,
                           Representation repr, const std::optional<Eigen::MatrixXd>& mask) {
    if (repr == Representation::Masked) {
        if (!mask) throw ConfigError("masked representation needs a mask");
        if (mask->rows() != dataset.h() || mask->cols() != dataset.l()) {
            throw ShapeMismatch("mask shape does not match the dataset");
        }
    }
    const Eigen::Index dim = repr == Representation::Baseline ? 1 : dataset.l();
    PairFeatures out{Eigen::MatrixXd(static_cast<Eigen::Index>(pairs.size()), dim),
                     Eigen::VectorXd(static_cast<Eigen::Index>(pairs.size()))};
    parallel_for(pairs.size(), [&](std::size_t i) {
        const auto& p = pairs[i];
        const auto& a = dataset.by_id(p.x1).tensor;
        const auto& b = dataset.by_id(p.x2).tensor;
        const auto row = static_cast<Eigen::Index>(i);
        switch (repr) {
            case Representation::Baseline:
                out.x(row, 0) = baseline_sim(a, b);
                break;
            case Representation::Layerwise:
                out.x.row(row) = layerwise_sim(a, b).transpose();
                break;
            case Representation::Masked:
                out.x.row(row) =
                    layerwise_sim(mask->cwiseProduct(a), mask->cwiseProduct(b)).transpose();
                break;
        }
        out.y[row] = p.label ? 1.0 : 0.0;
    });
    return out;
}

double accuracy(const Classifier& cls, const PairFeatures& data) {
    if (data.x.rows() == 0) throw EmptyData("accuracy of an empty split");
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        const bool predicted = decide(classify(cls, data.x.row(i).transpose()));
        correct += predicted == (data.y[i] > 0.5) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.x.rows());
}

ClassifierFit train_classifier(const PairFeatures& train, const PairFeatures& dev,
                               const ClassifierConfig& cfg) {
    if (train.x.rows() == 0) throw EmptyData("no training pairs");
    if (dev.x.rows() == 0) throw EmptyData("no dev pairs");
    if (train.x.cols() != dev.x.cols()) throw LengthMismatch("train and dev feature widths differ");
    if (cfg.batch_size < 1 || cfg.patience < 1 || cfg.max_epochs < 1) {
        throw ConfigError("batch_size, patience and max_epochs must be >= 1");
    }
    const Eigen::Index d = train.x.cols();
    // Parameters are [weights; bias].
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    AdamState<double> adam(d + 1, 1, {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps});

    auto unpack = [d](const Eigen::VectorXd& th) { return Classifier{th.head(d), th[d]}; };

    ClassifierFit fit;
    fit.classifier = unpack(theta);
    fit.best_dev_accuracy = -1.0;
    int since_best = 0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.x.rows()));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto rng = make_rng(cfg.seed, 0x4000ULL + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 1);
            const Classifier cls = unpack(theta);
            for (std::size_t b = start; b < end; ++b) {
                const auto i = order[b];
                const Eigen::VectorXd x = train.x.row(i).transpose();
                const double residual = classify(cls, x) - train.y[i];
                grad.head(d) += residual * x;
                grad[d] += residual;
            }
            grad /= static_cast<double>(end - start);
            adam_step(theta, grad, adam);
        }
        const Classifier current = unpack(theta);
        const double acc = accuracy(current, dev);
        fit.dev_accuracy.push_back(acc);
        if (acc > fit.best_dev_accuracy) {
            fit.best_dev_accuracy = acc;
            fit.best_epoch = epoch;
            fit.classifier = current;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return fit;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) throw EmptyData("mean_std of nothing");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string format_report(const std::vector<AccuracyRow>& rows,
                          const std::vector<std::vector<std::size_t>>& summary_groups,
                          const std::vector<std::string>& group_names) {
    std::string out = "split\tn\taccuracy\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s\t%zu\t%.6f\n", r.split.c_str(), r.n, r.accuracy);
        out += buf;
    }
    for (std::size_t g = 0; g < summary_groups.size(); ++g) {
        const auto& group = summary_groups[g];
        if (group.size() < 2) continue;
        std::vector<double> accs;
        for (auto i : group) accs.push_back(rows.at(i).accuracy);
        const auto [mean, sd] = mean_std(accs);
        const std::string name = g < group_names.size() ? group_names[g] : "test";
        std::snprintf(buf, sizeof buf, "# %s mean ± std over %zu test sets: %.6f ± %.6f\n",
                      name.c_str(), group.size(), mean, sd);
        out += buf;
    }
    return out;
}

std::string classifier_to_json(const Classifier& cls) {
    std::vector<double> w(cls.weights.data(), cls.weights.data() + cls.weights.size());
    nlohmann::json doc = {{"weights", w}, {"bias", cls.bias}};
    return doc.dump() + "\n";
}

Classifier classifier_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        const auto w = doc.at("weights").get<std::vector<double>>();
        Classifier cls;
        cls.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        cls.bias = doc.at("bias").get<double>();
        if (!cls.weights.allFinite() || !std::isfinite(cls.bias)) {
            throw FormatError("classifier JSON has a non-finite value");
        }
        return cls;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("classifier JSON: ") + e.what());
    }
}

}  // namespace sensemask
