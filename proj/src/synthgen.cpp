#include "sensemask/synthgen.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "sensemask/error.hpp"
#include "sensemask/parallel.hpp"
#include "sensemask/random.hpp"

namespace sensemask {

void PlantSpec::validate() const {
    auto fail = [](const std::string& msg) { throw BadSpec(msg); };
    if (h < 1 || l < 1) fail("h and l must be positive");
    if (k_true < 1 || k_true_b < 0 || k_true + k_true_b > h) {
        fail("planted sets need 1 <= k_true and k_true + k_true_b <= h");
    }
    if (n_words < 1 || n_occurrences < 1) fail("n_words and n_occurrences must be positive");
    if (senses_min < 1 || senses_max < senses_min) fail("need 1 <= senses_min <= senses_max");
    if (senses_max > k_true) fail("senses_max must not exceed k_true (means are orthogonal)");
    if (aux_classes < 0) fail("aux_classes must be non-negative");
    if (k_true_b > 0 && aux_classes < 2) fail("an aspect-b subspace needs aux_classes >= 2");
    if (k_true_b > 0 && aux_classes > k_true_b) fail("aux_classes must not exceed k_true_b");
    if (!(signal_strength >= 0.0) || !(noise_sigma >= 0.0)) {
        fail("signal_strength and noise_sigma must be non-negative");
    }
    if (signal_strength == 0.0 && noise_sigma == 0.0) fail("signal and noise cannot both be zero");
    if (source == Source::Attention && (head_size < 1 || h % head_size != 0)) {
        fail("attention source needs a head_size dividing h");
    }
}

namespace {

/// `count` mutually orthogonal vectors in R^dim, each of norm `norm`.
Eigen::MatrixXd orthogonal_means(int dim, int count, double norm, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(dim, count);
    for (int c = 0; c < count; ++c) {
        for (;;) {
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
            for (int p = 0; p < c; ++p) v -= m.col(p).dot(v) * m.col(p);
            const double n = v.norm();
            if (n > 1e-6) {
                m.col(c) = v / n;
                break;
            }
        }
    }
    return m * norm;
}

enum Stream : std::uint64_t { kPlanted = 1, kWordSenses = 2, kSenseMeans = 3, kAuxMeans = 4 };

}  // namespace

SyntheticData generate(const PlantSpec& spec) {
    spec.validate();

    GroundTruth truth;
    {
        auto rng = make_rng(spec.seed, kPlanted);
        for (int j = 0; j < spec.l; ++j) {
            std::vector<int> perm(static_cast<std::size_t>(spec.h));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<int> a(perm.begin(), perm.begin() + spec.k_true);
            std::vector<int> b(perm.begin() + spec.k_true, perm.begin() + spec.k_true + spec.k_true_b);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            truth.aspect_a_dims.push_back(std::move(a));
            truth.aspect_b_dims.push_back(std::move(b));
        }
    }

    std::vector<int> senses(static_cast<std::size_t>(spec.n_words));
    {
        auto rng = make_rng(spec.seed, kWordSenses);
        std::uniform_int_distribution<int> d(spec.senses_min, spec.senses_max);
        for (auto& s : senses) s = d(rng);
    }

    // sense_means[word][layer]: k_true × senses(word)
    std::vector<std::vector<Eigen::MatrixXd>> sense_means(static_cast<std::size_t>(spec.n_words));
    {
        auto rng = make_rng(spec.seed, kSenseMeans);
        for (int w = 0; w < spec.n_words; ++w) {
            for (int j = 0; j < spec.l; ++j) {
                sense_means[w].push_back(
                    orthogonal_means(spec.k_true, senses[w], spec.signal_strength, rng));
            }
        }
    }
    std::vector<Eigen::MatrixXd> aux_means;  // per layer: k_true_b × aux_classes
    if (spec.k_true_b > 0) {
        auto rng = make_rng(spec.seed, kAuxMeans);
        for (int j = 0; j < spec.l; ++j) {
            aux_means.push_back(
                orthogonal_means(spec.k_true_b, spec.aux_classes, spec.signal_strength, rng));
        }
    }

    std::vector<LayerwiseEmbedding> records(static_cast<std::size_t>(spec.n_occurrences));
    parallel_for(records.size(), [&](std::size_t i) {
        auto rng = make_rng(spec.seed, 0x1000000ULL + i);
        auto& rec = records[i];
        rec.occurrence_id = i;
        rec.word_id = std::uniform_int_distribution<std::uint32_t>(
            0, static_cast<std::uint32_t>(spec.n_words - 1))(rng);
        rec.sense_label = std::uniform_int_distribution<std::uint32_t>(
            0, static_cast<std::uint32_t>(senses[rec.word_id] - 1))(rng);
        if (spec.aux_classes > 0) {
            rec.aux_label = std::uniform_int_distribution<std::int32_t>(0, spec.aux_classes - 1)(rng);
        }
        std::normal_distribution<double> noise(0.0, 1.0);
        rec.tensor.resize(spec.h, spec.l);
        for (int j = 0; j < spec.l; ++j) {
            for (int d = 0; d < spec.h; ++d) rec.tensor(d, j) = spec.noise_sigma * noise(rng);
            const auto& mean = sense_means[rec.word_id][j].col(rec.sense_label);
            const auto& dims = truth.aspect_a_dims[j];
            for (int p = 0; p < spec.k_true; ++p) rec.tensor(dims[p], j) += mean[p];
            if (spec.k_true_b > 0) {
                const auto& aux_mean = aux_means[j].col(*rec.aux_label);
                const auto& bdims = truth.aspect_b_dims[j];
                for (int p = 0; p < spec.k_true_b; ++p) rec.tensor(bdims[p], j) += aux_mean[p];
            }
        }
        // Match what a dump round-trip would hold.
        rec.tensor = rec.tensor.cast<float>().cast<double>();
    });

    const auto head = spec.source == Source::Attention ? static_cast<std::uint32_t>(spec.head_size) : 0u;
    Dataset ds(spec.source, head, static_cast<std::uint32_t>(spec.h), static_cast<std::uint32_t>(spec.l));
    for (auto& r : records) ds.add(std::move(r));
    return {std::move(ds), std::move(truth)};
}

Eigen::MatrixXd truth_mask(const std::vector<std::vector<int>>& dims, int h) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(h, static_cast<Eigen::Index>(dims.size()));
    for (std::size_t j = 0; j < dims.size(); ++j) {
        for (int d : dims[j]) {
            if (d < 0 || d >= h) throw ShapeMismatch("planted index out of range");
            m(d, static_cast<Eigen::Index>(j)) = 1.0;
        }
    }
    return m;
}

RecoveryScore recovery_score(const Eigen::MatrixXd& mask,
                             const std::vector<std::vector<int>>& truth_dims) {
    if (static_cast<std::size_t>(mask.cols()) != truth_dims.size()) {
        throw ShapeMismatch("recovery_score: mask has " + std::to_string(mask.cols()) +
                            " layers, truth has " + std::to_string(truth_dims.size()));
    }
    const Eigen::MatrixXd truth = truth_mask(truth_dims, static_cast<int>(mask.rows()));
    const Eigen::Index l = mask.cols();
    RecoveryScore s;
    s.precision.resize(l);
    s.recall.resize(l);
    for (Eigen::Index j = 0; j < l; ++j) {
        const auto selected = (mask.col(j).array() != 0.0);
        const auto planted = (truth.col(j).array() != 0.0);
        const double hits = static_cast<double>((selected && planted).count());
        const double n_sel = static_cast<double>(selected.count());
        const double n_true = static_cast<double>(planted.count());
        s.precision[j] = n_sel > 0 ? hits / n_sel : 0.0;
        s.recall[j] = n_true > 0 ? hits / n_true : 1.0;
    }
    s.mean_precision = s.precision.mean();
    s.mean_recall = s.recall.mean();
    return s;
}

std::string truth_to_json(const GroundTruth& truth) {
    nlohmann::json doc = {{"aspect_a_dims", truth.aspect_a_dims},
                          {"aspect_b_dims", truth.aspect_b_dims}};
    return doc.dump() + "\n";
}

GroundTruth truth_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        GroundTruth t;
        t.aspect_a_dims = doc.at("aspect_a_dims").get<std::vector<std::vector<int>>>();
        t.aspect_b_dims = doc.at("aspect_b_dims").get<std::vector<std::vector<int>>>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("truth JSON: ") + e.what());
    }
}

}  // namespace sensemask
