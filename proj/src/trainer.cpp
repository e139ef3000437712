#include "sensemask/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "sensemask/error.hpp"
#include "sensemask/parallel.hpp"
#include "sensemask/random.hpp"

namespace sensemask {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be > 0");
    if (k < 1) throw ConfigError("k must be >= 1");
    loss.validate();
}

Eigen::MatrixXd init_logits(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    auto rng = make_rng(seed, /*stream=*/0x1061);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
}

std::vector<TripletIndex> resolve(const Dataset& dataset, const std::vector<Triplet>& triplets) {
    std::vector<TripletIndex> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) {
        try {
            out.push_back({dataset.index_of(t.x0), dataset.index_of(t.x1), dataset.index_of(t.x2)});
        } catch (const std::out_of_range& e) {
            throw FormatError(std::string("triplet refers to a missing occurrence: ") + e.what());
        }
    }
    return out;
}

namespace {

Eigen::MatrixXd masked(const Dataset& ds, std::size_t index, const Eigen::MatrixXd& binary) {
    Eigen::MatrixXd z = binary.cwiseProduct(ds[index].tensor);
    if (z.squaredNorm() == 0.0) {
        throw ZeroNormError("occurrence " + std::to_string(ds[index].occurrence_id) +
                                " has zero norm under the mask",
                            ds[index].occurrence_id, std::nullopt);
    }
    return z;
}

struct TermOut {
    double loss = 0.0;
    Eigen::MatrixXd upstream;  // ∂loss/∂(binary mask), h×l; empty when not requested
};

/// One triplet's loss for one aspect, with the gradient on the binary mask
/// Σ_i (∂loss/∂z_i) ⊙ x_i when `with_grad`.
TermOut triplet_term(const Dataset& ds, const TripletIndex& t, const Eigen::MatrixXd& binary,
                     bool aspect_b, bool with_grad) {
    const Eigen::MatrixXd z0 = masked(ds, t.i0, binary);
    const Eigen::MatrixXd z1 = masked(ds, t.i1, binary);
    const Eigen::MatrixXd z2 = masked(ds, t.i2, binary);
    const auto term = aspect_b ? triplet_loss_b(z0, z1, z2) : triplet_loss_a(z0, z1, z2);
    TermOut out{term.loss, {}};
    if (with_grad) {
        const auto h = binary.rows();
        const auto l = binary.cols();
        using Map = Eigen::Map<const Eigen::MatrixXd>;
        out.upstream = Map(term.g0.data(), h, l).cwiseProduct(ds[t.i0].tensor) +
                       Map(term.g1.data(), h, l).cwiseProduct(ds[t.i1].tensor) +
                       Map(term.g2.data(), h, l).cwiseProduct(ds[t.i2].tensor);
    }
    return out;
}

void check_masks(const Dataset& ds, const MaskParams& mask_a, const MaskParams* mask_b,
                 const LossConfig& cfg) {
    cfg.validate();
    if (mask_a.h != static_cast<int>(ds.h()) || mask_a.l != static_cast<int>(ds.l())) {
        throw ShapeMismatch("mask is " + std::to_string(mask_a.h) + "x" + std::to_string(mask_a.l) +
                            ", dataset is " + std::to_string(ds.h()) + "x" + std::to_string(ds.l()));
    }
    if (cfg.aspects == 2) {
        if (mask_b == nullptr) throw ConfigError("two-aspect loss needs a second mask");
        if (mask_b->h != mask_a.h || mask_b->l != mask_a.l) {
            throw ShapeMismatch("aspect masks have different shapes");
        }
    }
}

}  // namespace

double evaluate_loss(const Dataset& dataset, const std::vector<TripletIndex>& triplets,
                     const MaskParams& mask_a, const MaskParams* mask_b, const LossConfig& cfg) {
    check_masks(dataset, mask_a, mask_b, cfg);
    if (triplets.empty()) throw EmptyData("no triplets to evaluate");
    const Eigen::MatrixXd bin_a = binarize(mask_a);
    const bool two = cfg.aspects == 2;
    const Eigen::MatrixXd bin_b = two ? binarize(*mask_b) : Eigen::MatrixXd();
    std::vector<double> la(triplets.size(), 0.0);
    std::vector<double> lb(triplets.size(), 0.0);
    parallel_for(triplets.size(), [&](std::size_t i) {
        la[i] = triplet_term(dataset, triplets[i], bin_a, false, false).loss;
        if (two) lb[i] = triplet_term(dataset, triplets[i], bin_b, true, false).loss;
    });
    const double mean_a = batch_mean<double>(la);
    const double mean_b = two ? batch_mean<double>(lb) : 0.0;
    const double ovl = two ? overlap_loss(bin_a, bin_b) : 0.0;
    return final_loss(mean_a, mean_b, ovl, cfg);
}

StepGrads batch_gradients(const Dataset& dataset, std::span<const TripletIndex> batch,
                          const MaskParams& mask_a, const MaskParams* mask_b,
                          const LossConfig& cfg) {
    check_masks(dataset, mask_a, mask_b, cfg);
    if (batch.empty()) throw EmptyData("empty batch");
    const bool two = cfg.aspects == 2;
    const Eigen::MatrixXd bin_a = binarize(mask_a);
    const Eigen::MatrixXd bin_b = two ? binarize(*mask_b) : Eigen::MatrixXd();
    const auto weights = final_loss_weights(cfg);

    std::vector<TermOut> terms_a(batch.size());
    std::vector<TermOut> terms_b(two ? batch.size() : 0);
    parallel_for(batch.size(), [&](std::size_t i) {
        terms_a[i] = triplet_term(dataset, batch[i], bin_a, false, true);
        if (two) terms_b[i] = triplet_term(dataset, batch[i], bin_b, true, true);
    });

    // Fixed index-order reduction.
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Eigen::MatrixXd up_a = Eigen::MatrixXd::Zero(mask_a.h, mask_a.l);
    double sum_a = 0.0;
    for (const auto& t : terms_a) {
        up_a += t.upstream;
        sum_a += t.loss;
    }
    up_a *= weights.a * inv_n;

    StepGrads out;
    if (!two) {
        out.loss = final_loss(sum_a * inv_n, 0.0, 0.0, cfg);
        out.logits_a = ste_backward(mask_a, up_a);
        return out;
    }
    Eigen::MatrixXd up_b = Eigen::MatrixXd::Zero(mask_a.h, mask_a.l);
    double sum_b = 0.0;
    for (const auto& t : terms_b) {
        up_b += t.upstream;
        sum_b += t.loss;
    }
    up_b *= weights.b * inv_n;
    const auto [ovl_a, ovl_b] = overlap_grad(bin_a, bin_b);
    up_a += weights.overlap * ovl_a;
    up_b += weights.overlap * ovl_b;
    out.loss = final_loss(sum_a * inv_n, sum_b * inv_n, overlap_loss(bin_a, bin_b), cfg);
    out.logits_a = ste_backward(mask_a, up_a);
    out.logits_b = ste_backward(*mask_b, up_b);
    return out;
}

TrainResult train_mask(const std::vector<Triplet>& train, const std::vector<Triplet>& dev,
                       const Dataset& dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw EmptyData("no training triplets");
    if (dev.empty()) throw EmptyData("no dev triplets");
    if (dataset.empty()) throw EmptyData("empty dataset");
    const int h = static_cast<int>(dataset.h());
    const int l = static_cast<int>(dataset.l());
    const bool two = cfg.loss.aspects == 2;

    auto make_mask = [&](std::uint64_t stream) {
        MaskParams m;
        if (cfg.mode == MaskMode::Head) {
            if (dataset.source() != Source::Attention) {
                throw ConfigError("head-wise masking needs an attention-output dump");
            }
            m = make_head_mask(h, l, cfg.k, static_cast<int>(dataset.head_size()));
        } else {
            m = make_dim_mask(h, l, cfg.k);
        }
        m.logits = init_logits(m.logits.rows(), m.logits.cols(), derive_seed(cfg.seed, stream));
        return m;
    };

    TrainResult result;
    result.mask_a = make_mask(1);
    result.adam_a = AdamState<double>(result.mask_a.logits.rows(), l, cfg.adam());
    if (two) {
        result.mask_b = make_mask(2);
        result.adam_b = AdamState<double>(result.mask_b->logits.rows(), l, cfg.adam());
    }
    MaskParams& mask_a = result.mask_a;
    MaskParams* mask_b = two ? &*result.mask_b : nullptr;

    const auto train_idx = resolve(dataset, train);
    const auto dev_idx = resolve(dataset, dev);

    result.initial_dev_loss = evaluate_loss(dataset, dev_idx, mask_a, mask_b, cfg.loss);
    MaskParams best_a = mask_a;
    MaskParams best_b = two ? *result.mask_b : MaskParams{};
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    Eigen::MatrixXd prev_a = binarize(mask_a);
    Eigen::MatrixXd prev_b = two ? binarize(*mask_b) : Eigen::MatrixXd();

    std::vector<TripletIndex> order = train_idx;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto rng = make_rng(cfg.seed, 0x3000ULL + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const TripletIndex> batch(order.data() + start, end - start);
            const auto grads = batch_gradients(dataset, batch, mask_a, mask_b, cfg.loss);
            adam_step(mask_a.logits, grads.logits_a, result.adam_a);
            if (two) adam_step(mask_b->logits, grads.logits_b, *result.adam_b);
            loss_sum += grads.loss;
            ++batches;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(batches);
        entry.dev_loss = evaluate_loss(dataset, dev_idx, mask_a, mask_b, cfg.loss);
        const Eigen::MatrixXd bin_a = binarize(mask_a);
        entry.selected_changed = static_cast<long>((bin_a.array() != prev_a.array()).count());
        prev_a = bin_a;
        if (two) {
            const Eigen::MatrixXd bin_b = binarize(*mask_b);
            entry.selected_changed += static_cast<long>((bin_b.array() != prev_b.array()).count());
            prev_b = bin_b;
        }
        result.log.push_back(entry);

        if (entry.dev_loss < best) {
            best = entry.dev_loss;
            result.best_epoch = epoch;
            best_a = mask_a;
            if (two) best_b = *mask_b;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    result.best_dev_loss = best;
    result.mask_a = std::move(best_a);
    if (two) result.mask_b = std::move(best_b);
    return result;
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch\ttrain_loss\tdev_loss\tselected_dims_changed_since_last_epoch\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%ld\n", e.epoch, e.train_loss,
                      e.dev_loss, e.selected_changed);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Optimizer checkpoint

namespace {

template <typename T>
void put_raw(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get_raw(const std::string& in, std::size_t& pos) {
    if (in.size() - pos < sizeof(T)) throw FormatError("truncated optimizer checkpoint");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

std::string serialize_adam(const AdamState<double>& state) {
    static_assert(std::endian::native == std::endian::little, "checkpoint assumes little-endian");
    std::string out = "ADAM";
    put_raw<std::uint32_t>(out, 1);
    put_raw<std::int64_t>(out, state.t);
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(state.m.rows()));
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(state.m.cols()));
    put_raw(out, state.config.lr);
    put_raw(out, state.config.beta1);
    put_raw(out, state.config.beta2);
    put_raw(out, state.config.eps);
    for (Eigen::Index i = 0; i < state.m.size(); ++i) put_raw(out, state.m.data()[i]);
    for (Eigen::Index i = 0; i < state.v.size(); ++i) put_raw(out, state.v.data()[i]);
    return out;
}

AdamState<double> parse_adam(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "ADAM") != 0) {
        throw FormatError("not an optimizer checkpoint");
    }
    std::size_t pos = 4;
    if (get_raw<std::uint32_t>(bytes, pos) != 1) throw VersionError("unknown checkpoint version");
    AdamState<double> s;
    s.t = get_raw<std::int64_t>(bytes, pos);
    const auto rows = get_raw<std::uint32_t>(bytes, pos);
    const auto cols = get_raw<std::uint32_t>(bytes, pos);
    s.config.lr = get_raw<double>(bytes, pos);
    s.config.beta1 = get_raw<double>(bytes, pos);
    s.config.beta2 = get_raw<double>(bytes, pos);
    s.config.eps = get_raw<double>(bytes, pos);
    const std::size_t cells = std::size_t{rows} * cols;
    if (bytes.size() - pos != 2 * cells * sizeof(double)) {
        throw FormatError("optimizer checkpoint size does not match its header");
    }
    s.m.resize(rows, cols);
    s.v.resize(rows, cols);
    for (std::size_t i = 0; i < cells; ++i) s.m.data()[i] = get_raw<double>(bytes, pos);
    for (std::size_t i = 0; i < cells; ++i) s.v.data()[i] = get_raw<double>(bytes, pos);
    return s;
}

}  // namespace sensemask
