// One PASS/FAIL line per acceptance criterion.
//   acceptance            run every criterion
//   acceptance NAME...    run the named ones
// Exit status is 0 only when every criterion run passed.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sensemask/embedstore.hpp"
#include "sensemask/error.hpp"
#include "sensemask/losses.hpp"
#include "sensemask/masker.hpp"
#include "sensemask/numerics.hpp"
#include "sensemask/random.hpp"
#include "sensemask/simcls.hpp"
#include "sensemask/synthgen.hpp"
#include "sensemask/trainer.hpp"

using namespace sensemask;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

// ---------------------------------------------------------------------------
// Full-scale accuracies need real BERT dumps; the suite below substitutes
// for them. This check runs the pipeline on BERT-shaped tensors (attention,
// h=768, l=12, a=64) so the substitution is exercised end to end.

Outcome accuracy_substitution() {
    std::mt19937_64 rng(1);
    Dataset ds(Source::Attention, 64, 768, 12);
    for (int i = 0; i < 24; ++i) {
        LayerwiseEmbedding e;
        e.occurrence_id = static_cast<std::uint64_t>(i);
        e.word_id = static_cast<std::uint32_t>(i % 3);
        e.sense_label = static_cast<std::uint32_t>(i % 2);
        e.tensor = gaussian(768, 12, rng);
        ds.add(std::move(e));
    }
    const Dataset back = parse_dump(serialize_dump(ds));
    const auto pairs = sample_pairs(back, 20, 1);
    MaskParams m = make_head_mask(768, 12, 4 * 64, 64);
    m.logits = init_logits(12, 12, 2);
    const auto b = pair_features(back, pairs, Representation::Baseline);
    const auto lw = pair_features(back, pairs, Representation::Layerwise);
    const auto mk = pair_features(back, pairs, Representation::Masked, binarize(m));
    const bool ok = b.x.cols() == 1 && lw.x.cols() == 12 && mk.x.cols() == 12 &&
                    b.x.allFinite() && lw.x.allFinite() && mk.x.allFinite();
    return {ok, "absolute accuracies need real BERT dumps (not reproducible here); "
                "baseline/layerwise/masked features built on 768x12 attention tensors, "
                "the substituted oracle suite covers the rest"};
}

// ---------------------------------------------------------------------------

Outcome exactly_k() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    struct Case {
        MaskMode mode;
        int k;
    };
    const std::vector<Case> grid = {{MaskMode::Dim, 128},      {MaskMode::Dim, 384},
                                    {MaskMode::Dim, 512},      {MaskMode::Head, 4 * 64},
                                    {MaskMode::Head, 6 * 64},  {MaskMode::Head, 8 * 64}};
    int matrices = 0, bad = 0;
    for (int n = 0; n < 1002; ++n) {
        const auto& c = grid[static_cast<std::size_t>(n) % grid.size()];
        MaskParams m = c.mode == MaskMode::Dim ? make_dim_mask(768, 12, c.k)
                                               : make_head_mask(768, 12, c.k, 64);
        m.logits = gaussian(m.logits.rows(), 12, rng);
        // Every third matrix is coarsely quantized to force ties.
        if (n % 3 == 0) m.logits = (m.logits * 2.0).array().round().matrix();
        const Eigen::MatrixXd b = binarize(m);
        const bool binary = ((b.array() == 0.0) || (b.array() == 1.0)).all();
        if (!binary || !(b.colwise().sum().array() == static_cast<double>(c.k)).all()) ++bad;
        ++matrices;
    }
    const double s = seconds_since(t0);
    return {bad == 0 && s < 5.0,
            fmt("%d matrices (dim k=128/384/512, heads 4/6/8 at a=64, h=768, l=12), %d wrong, %.2fs",
                matrices, bad, s)};
}

// ---------------------------------------------------------------------------
// Finite-difference oracles are written out against plain scalar formulas.

double plain_cos(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double d = 0, nx = 0, ny = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        d += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    return d / std::sqrt(nx * ny);
}

double plain_triplet(const Eigen::VectorXd& z0, const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
    return std::max(-plain_cos(z0, z1) + plain_cos(z0, z2), 0.0);
}

constexpr double kStep = 1e-6;
constexpr double kTol = 1e-5;

double fd_error(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
                const Eigen::VectorXd& analytic) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        Eigen::VectorXd p = at, m = at;
        p[i] += kStep;
        m[i] -= kStep;
        worst = std::max(worst, std::abs((f(p) - f(m)) / (2 * kStep) - analytic[i]));
    }
    return worst;
}

// Flattened-masked triplet loss with real-valued masks (the STE surrogate).
struct SteCase {
    std::vector<Eigen::MatrixXd> x;  // three h×l tensors
};

double surrogate_loss(const SteCase& c, const Eigen::MatrixXd& mask, double* min_inner = nullptr) {
    auto flat = [&](int i) -> Eigen::VectorXd { return mask.cwiseProduct(c.x[i]).reshaped(); };
    const Eigen::VectorXd z0 = flat(0), z1 = flat(1), z2 = flat(2);
    const double inner = -plain_cos(z0, z1) + plain_cos(z0, z2);
    if (min_inner) *min_inner = std::abs(inner);
    return std::max(inner, 0.0);
}

Outcome gradient_suite() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(11);
    double worst_cos = 0, worst_trip = 0, worst_ste = 0;

    for (int n = 0; n < 100; ++n) {
        const Eigen::VectorXd x = gaussian(8, 1, rng), y = gaussian(8, 1, rng);
        const auto g = cosine_grad(x, y);
        worst_cos = std::max(worst_cos, fd_error([&](const Eigen::VectorXd& v) { return plain_cos(v, y); }, x, g.dx));
        worst_cos = std::max(worst_cos, fd_error([&](const Eigen::VectorXd& v) { return plain_cos(x, v); }, y, g.dy));
    }

    for (int n = 0; n < 100;) {
        const Eigen::VectorXd z0 = gaussian(8, 1, rng), z1 = gaussian(8, 1, rng), z2 = gaussian(8, 1, rng);
        if (std::abs(-plain_cos(z0, z1) + plain_cos(z0, z2)) <= 1e-3) continue;
        ++n;
        for (int which = 0; which < 2; ++which) {
            const auto t = which == 0 ? triplet_loss_a(z0, z1, z2) : triplet_loss_b(z0, z1, z2);
            // triplet_loss_b is triplet_loss_a with the roles of z1 and z2 swapped.
            auto f = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
                return which == 0 ? plain_triplet(a, b, c) : plain_triplet(a, c, b);
            };
            worst_trip = std::max(worst_trip, fd_error([&](const Eigen::VectorXd& v) { return f(v, z1, z2); }, z0, t.g0));
            worst_trip = std::max(worst_trip, fd_error([&](const Eigen::VectorXd& v) { return f(z0, v, z2); }, z1, t.g1));
            worst_trip = std::max(worst_trip, fd_error([&](const Eigen::VectorXd& v) { return f(z0, z1, v); }, z2, t.g2));
        }
    }

    // STE: the logit gradient equals d(loss)/d(mask) of the surrogate
    // evaluated at the binary mask (summed over a head's block in head mode).
    for (int n = 0; n < 100;) {
        const bool head = n % 2 == 1;
        const int h = 12, l = 3, a = 3;
        Dataset ds(head ? Source::Attention : Source::Hidden, head ? a : 0, h, l);
        SteCase c;
        for (int i = 0; i < 3; ++i) {
            LayerwiseEmbedding e;
            e.occurrence_id = static_cast<std::uint64_t>(i);
            e.tensor = gaussian(h, l, rng);
            c.x.push_back(e.tensor);
            ds.add(std::move(e));
        }
        MaskParams m = head ? make_head_mask(h, l, 6, a) : make_dim_mask(h, l, 5);
        m.logits = gaussian(m.logits.rows(), l, rng);
        const Eigen::MatrixXd bin = binarize(m);
        double inner = 0;
        surrogate_loss(c, bin, &inner);
        if (inner <= 1e-3) continue;
        ++n;
        const std::vector<TripletIndex> batch = {{0, 1, 2}};
        const auto g = batch_gradients(ds, batch, m, nullptr, LossConfig{});
        const int block = head ? a : 1;
        for (Eigen::Index r = 0; r < m.logits.rows(); ++r) {
            for (Eigen::Index j = 0; j < l; ++j) {
                auto f = [&](double delta) {
                    Eigen::MatrixXd mm = bin;
                    mm.block(r * block, j, block, 1).array() += delta;
                    return surrogate_loss(c, mm);
                };
                const double numeric = (f(kStep) - f(-kStep)) / (2 * kStep);
                worst_ste = std::max(worst_ste, std::abs(numeric - g.logits_a(r, j)));
            }
        }
    }
    const double s = seconds_since(t0);
    return {worst_cos < kTol && worst_trip < kTol && worst_ste < kTol && s < 10.0,
            fmt("max |analytic - FD| cosine %.2e, triplet %.2e, STE %.2e (100 cases each, step 1e-6); %.2fs",
                worst_cos, worst_trip, worst_ste, s)};
}

// ---------------------------------------------------------------------------

Outcome loss_fixtures() {
    std::mt19937_64 rng(3);
    const Eigen::VectorXd z0 = gaussian(768, 1, rng);
    Eigen::VectorXd perp = gaussian(768, 1, rng);
    perp -= (perp.dot(z0) / z0.squaredNorm()) * z0;
    double worst = 0;
    worst = std::max(worst, std::abs(triplet_loss_a(z0, z0, perp).loss - 0.0));
    worst = std::max(worst, std::abs(triplet_loss_a(z0, perp, z0).loss - 1.0));
    worst = std::max(worst, std::abs(triplet_loss_b(z0, perp, z0).loss - 0.0));
    worst = std::max(worst, std::abs(triplet_loss_b(z0, z0, perp).loss - 1.0));

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(768, 12), b = Eigen::MatrixXd::Zero(768, 12);
    a.topRows(384).setOnes();
    b.bottomRows(384).setOnes();
    worst = std::max(worst, std::abs(overlap_loss(a, b) - 0.0));
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(768, 12);
    worst = std::max(worst, std::abs(overlap_loss(ones, ones) - 768.0));

    const double la = 0.37, lb = 0.81, ovl = 5.0;
    worst = std::max(worst, std::abs(final_loss(la, lb, ovl, LossConfig{2, 1.0}) - 0.5 * (la + lb)));
    worst = std::max(worst, std::abs(final_loss(la, lb, ovl, LossConfig{2, 0.0}) - ovl));
    worst = std::max(worst, std::abs(final_loss(la, 0.0, 0.0, LossConfig{1, 0.5}) - la));
    return {worst <= 1e-12, fmt("triplet 0/1 fixtures, L_ovl 0 and 768, final_loss endpoints; max error %.1e", worst)};
}

// ---------------------------------------------------------------------------
// Shared synthetic setup for the recovery, end-to-end and two-aspect runs.

TrainConfig recovery_config(std::uint64_t seed, int aspects) {
    TrainConfig c;
    c.k = 8;
    c.seed = seed;
    c.lr = 0.001;
    c.patience = 10;
    c.max_epochs = 100;
    c.loss.aspects = aspects;
    c.loss.lambda = 0.5;
    return c;
}

struct Trained {
    SyntheticData data;
    Split parts;
    TrainResult result;
};

Trained train_on(PlantSpec spec, std::uint64_t seed, int aspects, const std::vector<double>& ratios) {
    spec.seed = seed;
    Trained t{generate(spec), {}, {}};
    t.parts = split(t.data.dataset, ratios, seed);
    const bool b = aspects == 2;
    const auto tr = sample_triplets(t.parts.train, 20000, derive_seed(seed, 20), b);
    const auto dv = sample_triplets(t.parts.dev, 4000, derive_seed(seed, 21), b);
    t.result = train_mask(tr, dv, t.data.dataset, recovery_config(seed, aspects));
    return t;
}

Outcome separability_oracle(const SyntheticData& data, const std::vector<std::vector<int>>& truth,
                            bool by_aux) {
    // Ranks dims by mean same-minus-cross product over same-word pairs.
    const auto& recs = data.dataset.records();
    const Eigen::Index h = data.dataset.h(), l = data.dataset.l();
    Eigen::MatrixXd same = Eigen::MatrixXd::Zero(h, l), cross = Eigen::MatrixXd::Zero(h, l);
    double ns = 0, nc = 0;
    for (std::size_t i = 0; i < recs.size(); i += 2) {
        for (std::size_t j = i + 1; j < recs.size(); j += 3) {
            if (!by_aux && recs[i].word_id != recs[j].word_id) continue;
            const bool s = by_aux ? *recs[i].aux_label == *recs[j].aux_label
                                  : recs[i].sense_label == recs[j].sense_label;
            const Eigen::MatrixXd p = recs[i].tensor.cwiseProduct(recs[j].tensor);
            if (s) {
                same += p;
                ++ns;
            } else {
                cross += p;
                ++nc;
            }
        }
    }
    const Eigen::MatrixXd score = same / ns - cross / nc;
    MaskParams m = make_dim_mask(static_cast<int>(h), static_cast<int>(l), static_cast<int>(truth[0].size()));
    m.logits = score;
    const auto r = recovery_score(binarize(m), truth);
    return {r.mean_recall == 1.0, fmt("%.3f", r.mean_recall)};
}

Outcome synthetic_recovery() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto t = train_on(PlantSpec{}, seed, 1, {0.9, 0.1});
        const auto oracle = separability_oracle(t.data, t.data.truth.aspect_a_dims, false);
        const auto r = recovery_score(binarize(t.result.mask_a), t.data.truth.aspect_a_dims);
        ok = ok && oracle.pass && r.mean_recall >= 0.90 && r.mean_precision >= 0.90;
        detail += fmt("seed %d: P %.3f R %.3f (oracle recall %s); ", static_cast<int>(seed), r.mean_precision,
                      r.mean_recall, oracle.detail.c_str());
    }
    ok = ok && seconds_since(t0) < 120.0;
    return {ok, detail + fmt("need P,R >= 0.90; %.1fs", seconds_since(t0))};
}

// ---------------------------------------------------------------------------

struct Accuracies {
    double baseline, layerwise, masked;
};

double mean_test_accuracy(const Dataset& ds, const Split& parts, Representation repr,
                          const std::optional<Eigen::MatrixXd>& mask, std::uint64_t seed) {
    const auto tr = pair_features(parts.train, sample_pairs(parts.train, 2000, derive_seed(seed, 10)), repr, mask);
    const auto dv = pair_features(parts.dev, sample_pairs(parts.dev, 400, derive_seed(seed, 11)), repr, mask);
    const auto test_pairs = sample_pairs(*parts.test, 1200, derive_seed(seed, 12));
    ClassifierConfig cfg;
    cfg.seed = seed;
    const auto fit = train_classifier(tr, dv, cfg);
    std::vector<double> accs;
    const std::size_t chunk = test_pairs.size() / 3;
    for (std::size_t s = 0; s < 3; ++s) {
        const std::vector<LabeledPair> part(test_pairs.begin() + static_cast<std::ptrdiff_t>(s * chunk),
                                            test_pairs.begin() + static_cast<std::ptrdiff_t>((s + 1) * chunk));
        accs.push_back(accuracy(fit.classifier, pair_features(ds, part, repr, mask)));
    }
    return mean_std(accs).first;
}

Accuracies pipeline_accuracies(const PlantSpec& spec, std::uint64_t seed) {
    const auto t = train_on(spec, seed, 1, {0.8, 0.1, 0.1});
    const Eigen::MatrixXd mask = binarize(t.result.mask_a);
    return {mean_test_accuracy(t.data.dataset, t.parts, Representation::Baseline, std::nullopt, seed),
            mean_test_accuracy(t.data.dataset, t.parts, Representation::Layerwise, std::nullopt, seed),
            mean_test_accuracy(t.data.dataset, t.parts, Representation::Masked, mask, seed)};
}

Outcome end_to_end() {
    const auto acc = pipeline_accuracies(PlantSpec{}, 0);
    PlantSpec control;
    control.signal_strength = 0.0;
    const auto ctl = pipeline_accuracies(control, 0);
    const bool order = acc.masked >= acc.layerwise && acc.layerwise >= acc.baseline;
    const bool chance = std::abs(ctl.masked - 0.5) <= 0.05 && std::abs(ctl.layerwise - 0.5) <= 0.05 &&
                        std::abs(ctl.baseline - 0.5) <= 0.05;
    return {order && acc.masked >= 0.95 && chance,
            fmt("baseline %.3f, layerwise %.3f, masked %.3f (ordering %s, need masked >= 0.95); "
                "signal-0 control %.3f/%.3f/%.3f (need 0.50 +- 0.05)",
                acc.baseline, acc.layerwise, acc.masked, order ? "holds" : "violated", ctl.baseline,
                ctl.layerwise, ctl.masked)};
}

// ---------------------------------------------------------------------------

Outcome classifier_fixture() {
    const std::vector<double> w = {-2.914, -0.724, 1.403, 2.640, 3.660, 2.565,
                                   -3.712, -1.123, 0.081, 1.649, 0.518, 5.169};
    double direct = 0.0;
    for (double v : w) direct += v;
    Classifier cls{Eigen::Map<const Eigen::VectorXd>(w.data(), 12), 0.0};
    const double p = classify(cls, Eigen::VectorXd::Ones(12));
    const double dot = std::log(p / (1.0 - p));  // recover the logit from the sigmoid
    bool monotone = true;
    const Eigen::VectorXd base = Eigen::VectorXd::Zero(12);
    for (int j = 0; j < 12; ++j) {
        Eigen::VectorXd up = base;
        up[j] = 0.1;
        const double d = classify(cls, up) - classify(cls, base);
        monotone = monotone && (w[static_cast<std::size_t>(j)] > 0 ? d > 0 : d < 0);
    }
    const bool sum_ok = std::abs(dot - 9.312) <= 0.001 && std::abs(direct - 9.312) <= 0.001;
    return {sum_ok && monotone,
            fmt("direct sum %.3f, classifier logit %.3f (need 9.312 +- 0.001); monotonicity %s",
                direct, dot, monotone ? "matches weight signs" : "violated")};
}

// ---------------------------------------------------------------------------

Outcome two_aspect() {
    const auto t0 = Clock::now();
    PlantSpec spec;
    spec.k_true_b = 8;
    spec.aux_classes = 2;
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto t = train_on(spec, seed, 2, {0.9, 0.1});
        const Eigen::MatrixXd a = binarize(t.result.mask_a), b = binarize(*t.result.mask_b);
        const double ovl = overlap_loss(a, b);
        const auto ra = recovery_score(a, t.data.truth.aspect_a_dims);
        const auto rb = recovery_score(b, t.data.truth.aspect_b_dims);
        const auto oa = separability_oracle(t.data, t.data.truth.aspect_a_dims, false);
        const auto ob = separability_oracle(t.data, t.data.truth.aspect_b_dims, true);
        ok = ok && ovl <= 0.05 * 8 && ra.mean_recall >= 0.85 && rb.mean_recall >= 0.85;
        detail += fmt("seed %d: L_ovl %.2f, recall a %.3f b %.3f (oracle recall %s / %s); ", static_cast<int>(seed), ovl,
                      ra.mean_recall, rb.mean_recall, oa.detail.c_str(), ob.detail.c_str());
    }
    return {ok, detail + fmt("need L_ovl <= 0.4, recall >= 0.85; %.1fs", seconds_since(t0))};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::size_t> hash_dir(const fs::path& dir) {
    std::map<std::string, std::size_t> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        out[e.path().filename().string()] = std::hash<std::string>{}(slurp(e.path()));
    }
    return out;
}

Outcome cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "sensemask_acceptance_cli";
    const std::string cli = SENSEMASK_CLI;
    const std::string d = "\"" + dir.string() + "\"";
    const std::vector<std::string> commands = {
        "synth-gen --out " + d + " --seed 5 --set n_occurrences=600",
        "train-mask --out " + d + " --dump " + d + "/embeddings.lweb --k 8 --set max_epochs=5",
        "train-classifier --out " + d + " --dump " + d +
            "/embeddings.lweb --repr baseline,layerwise,masked --mask " + d + "/mask.json",
        "eval --out " + d + " --dump " + d + "/embeddings.lweb --repr layerwise --classifier " + d +
            "/classifier_layerwise.json --pairs " + d + "/pairs_test1.tsv",
        "mask-stats --out " + d + " --mask " + d + "/mask.json"};
    std::vector<std::map<std::string, std::size_t>> runs;
    for (int rep = 0; rep < 2; ++rep) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (const auto& c : commands) {
            const std::string cmd = (rep == 0 ? "SENSEMASK_THREADS=1 " : "SENSEMASK_THREADS=4 ") +
                                    std::string("\"") + cli + "\" " + c + " >/dev/null";
            const int st = std::system(cmd.c_str());
            if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) return {false, "command failed: " + c};
        }
        runs.push_back(hash_dir(dir));
    }
    fs::remove_all(dir);
    return {runs[0] == runs[1] && runs[0].size() >= 20,
            fmt("5 commands run twice (1 and 4 workers); %zu output files, hashes %s", runs[0].size(),
                runs[0] == runs[1] ? "identical" : "differ")};
}

// ---------------------------------------------------------------------------

Outcome format_roundtrip() {
    PlantSpec spec;
    spec.h = 8;
    spec.l = 3;
    spec.k_true = 3;
    spec.k_true_b = 2;
    spec.aux_classes = 2;
    spec.n_words = 2;
    spec.n_occurrences = 4;
    spec.source = Source::Attention;
    spec.head_size = 4;
    const auto ds = generate(spec).dataset;
    const std::string bytes = serialize_dump(ds);
    const fs::path p = fs::temp_directory_path() / "sensemask_acceptance.lweb";
    write_dump(ds, p);
    const bool identical = serialize_dump(load_dump(p)) == bytes && slurp(p) == bytes;
    fs::remove(p);
    int format_errors = 0, other = 0;
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        try {
            parse_dump(bytes.substr(0, cut));
            ++other;
        } catch (const FormatError&) {
            ++format_errors;
        } catch (...) {
            ++other;
        }
    }
    return {identical && other == 0,
            fmt("write/read/write %s (%zu bytes); %d truncations -> FormatError, %d otherwise",
                identical ? "byte-identical" : "differs", bytes.size(), format_errors, other)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"accuracy-substitution", accuracy_substitution},
        {"exactly-k", exactly_k},
        {"gradient-suite", gradient_suite},
        {"loss-fixtures", loss_fixtures},
        {"synthetic-recovery", synthetic_recovery},
        {"end-to-end", end_to_end},
        {"classifier-fixture", classifier_fixture},
        {"two-aspect", two_aspect},
        {"cli-determinism", cli_determinism},
        {"format-roundtrip", format_roundtrip},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.empty()) {
        for (const auto& c : criteria) wanted.push_back(c.first);
    }
    int failed = 0;
    for (const auto& name : wanted) {
        auto it = std::find_if(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; });
        if (it == criteria.end()) {
            std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
            return 2;
        }
        Outcome o;
        try {
            o = it->second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
