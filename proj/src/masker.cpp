#include "sensemask/masker.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sensemask/error.hpp"

namespace sensemask {

void MaskParams::validate() const {
    if (h <= 0 || l <= 0) {
        throw ConfigError("mask dimensions must be positive");
    }
    if (mode == MaskMode::Dim) {
        if (k < 1 || k > h) {
            throw ConfigError("k=" + std::to_string(k) + " must lie in [1, h=" + std::to_string(h) +
                              "]");
        }
    } else {
        if (head_size <= 0 || h % head_size != 0) {
            throw ConfigError("head size " + std::to_string(head_size) + " must divide h=" +
                              std::to_string(h));
        }
        if (k % head_size != 0) {
            throw ConfigError("k=" + std::to_string(k) + " is not a multiple of head size " +
                              std::to_string(head_size));
        }
        if (k < head_size || k > h) {
            throw ConfigError("k/a=" + std::to_string(k / head_size) + " heads must lie in [1, " +
                              std::to_string(h / head_size) + "]");
        }
    }
    if (logits.rows() != rows() || logits.cols() != l) {
        throw ShapeMismatch("logits are " + std::to_string(logits.rows()) + "x" +
                            std::to_string(logits.cols()) + ", expected " +
                            std::to_string(rows()) + "x" + std::to_string(l));
    }
    if (!logits.allFinite()) {
        throw NonFiniteError("mask logits contain a non-finite value");
    }
}

MaskParams make_dim_mask(int h, int l, int k) {
    MaskParams m{MaskMode::Dim, h, l, k, 0, {}};
    if (h > 0 && l > 0) m.logits = Eigen::MatrixXd::Zero(h, l);
    m.validate();
    return m;
}

MaskParams make_head_mask(int h, int l, int k, int head_size) {
    MaskParams m{MaskMode::Head, h, l, k, head_size, {}};
    if (h > 0 && l > 0 && head_size > 0 && h % head_size == 0) {
        m.logits = Eigen::MatrixXd::Zero(h / head_size, l);
    }
    m.validate();
    return m;
}

std::vector<int> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& column, int count) {
    std::vector<int> idx(static_cast<std::size_t>(column.size()));
    std::iota(idx.begin(), idx.end(), 0);
    auto before = [&](int a, int b) {
        return column[a] > column[b] || (column[a] == column[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + count - 1, idx.end(), before);
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Eigen::MatrixXd binarize(const MaskParams& mask) {
    mask.validate();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mask.h, mask.l);
    const int per_layer = mask.selected_per_layer();
    const int block = mask.mode == MaskMode::Dim ? 1 : mask.head_size;
    for (int j = 0; j < mask.l; ++j) {
        for (int r : top_k_indices(mask.logits.col(j), per_layer)) {
            out.col(j).segment(r * block, block).setOnes();
        }
    }
    return out;
}

Eigen::MatrixXd apply(const MaskParams& mask, const Eigen::MatrixXd& x) {
    if (x.rows() != mask.h || x.cols() != mask.l) {
        throw ShapeMismatch("tensor is " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + ", mask is " + std::to_string(mask.h) +
                            "x" + std::to_string(mask.l));
    }
    return binarize(mask).cwiseProduct(x);
}

Eigen::MatrixXd compact(const Eigen::MatrixXd& binary, const Eigen::MatrixXd& x) {
    if (binary.rows() != x.rows() || binary.cols() != x.cols()) {
        throw ShapeMismatch("compact: mask and tensor shapes differ");
    }
    const Eigen::Index per_layer = binary.rows() > 0 ? static_cast<Eigen::Index>(binary.col(0).sum()) : 0;
    Eigen::MatrixXd out(per_layer, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (binary(i, j) != 0.0) {
                if (r == per_layer) {
                    throw ShapeMismatch("compact: layers select different counts");
                }
                out(r++, j) = x(i, j);
            }
        }
        if (r != per_layer) {
            throw ShapeMismatch("compact: layers select different counts");
        }
    }
    return out;
}

Eigen::MatrixXd ste_backward(const MaskParams& mask, const Eigen::MatrixXd& upstream) {
    if (upstream.rows() != mask.h || upstream.cols() != mask.l) {
        throw ShapeMismatch("ste_backward: upstream gradient is " +
                            std::to_string(upstream.rows()) + "x" +
                            std::to_string(upstream.cols()));
    }
    if (mask.mode == MaskMode::Dim) {
        return upstream;
    }
    const int a = mask.head_size;
    Eigen::MatrixXd out(mask.h / a, mask.l);
    for (int head = 0; head < mask.h / a; ++head) {
        out.row(head) = upstream.middleRows(head * a, a).colwise().sum();
    }
    return out;
}

namespace {

void require_binary(const Eigen::MatrixXd& m, const char* name) {
    if (!((m.array() == 0.0) || (m.array() == 1.0)).all()) {
        throw FormatError(std::string(name) + " is not a 0/1 matrix");
    }
}

}  // namespace

MaskStats mask_stats(const Eigen::MatrixXd& mask_a, const std::optional<Eigen::MatrixXd>& mask_b) {
    require_binary(mask_a, "mask A");
    const Eigen::Index l = mask_a.cols();
    MaskStats stats;
    stats.agreement.resize(l, l);
    for (Eigen::Index i = 0; i < l; ++i) {
        for (Eigen::Index j = i; j < l; ++j) {
            const auto same = static_cast<int>((mask_a.col(i).array() == mask_a.col(j).array()).count());
            stats.agreement(i, j) = same;
            stats.agreement(j, i) = same;
        }
    }
    if (mask_b) {
        require_binary(*mask_b, "mask B");
        if (mask_b->rows() != mask_a.rows() || mask_b->cols() != l) {
            throw ShapeMismatch("mask_stats: masks have different shapes");
        }
        const long total = static_cast<long>(((mask_a + *mask_b).array() > 1.0).count());
        stats.overlap_total = total;
        stats.overlap_mean = static_cast<double>(total) / static_cast<double>(l);
    }
    return stats;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

std::string mask_to_json(const MaskParams& mask) {
    const Eigen::MatrixXd binary = binarize(mask);
    json logits = json::array();
    for (Eigen::Index i = 0; i < mask.logits.rows(); ++i)
        for (Eigen::Index j = 0; j < mask.logits.cols(); ++j) logits.push_back(mask.logits(i, j));
    json bits = json::array();
    for (Eigen::Index i = 0; i < binary.rows(); ++i)
        for (Eigen::Index j = 0; j < binary.cols(); ++j) bits.push_back(static_cast<int>(binary(i, j)));
    json doc = {
        {"mode", mask.mode == MaskMode::Dim ? "dim" : "head"},
        {"k", mask.k},
        {"a", mask.mode == MaskMode::Dim ? 0 : mask.head_size},
        {"h", mask.h},
        {"l", mask.l},
        {"logits", std::move(logits)},
        {"binary", std::move(bits)},
    };
    return doc.dump(1) + "\n";
}

MaskParams mask_from_json(const std::string& text) {
    MaskParams m;
    Eigen::MatrixXd stored;
    try {
        const json doc = json::parse(text);
        const auto mode = doc.at("mode").get<std::string>();
        if (mode != "dim" && mode != "head") {
            throw FormatError("mask mode must be \"dim\" or \"head\", got \"" + mode + "\"");
        }
        m.mode = mode == "dim" ? MaskMode::Dim : MaskMode::Head;
        m.k = doc.at("k").get<int>();
        m.head_size = doc.at("a").get<int>();
        m.h = doc.at("h").get<int>();
        m.l = doc.at("l").get<int>();
        if (m.h <= 0 || m.l <= 0 || (m.mode == MaskMode::Head && (m.head_size <= 0 || m.h % m.head_size))) {
            throw FormatError("mask header has inconsistent dimensions");
        }
        const auto& logits = doc.at("logits");
        const auto& bits = doc.at("binary");
        const auto rows = m.rows();
        if (logits.size() != static_cast<std::size_t>(rows) * m.l ||
            bits.size() != static_cast<std::size_t>(m.h) * m.l) {
            throw FormatError("mask arrays have the wrong length");
        }
        m.logits.resize(rows, m.l);
        stored.resize(m.h, m.l);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < m.l; ++j) m.logits(i, j) = logits.at(i * m.l + j).get<double>();
        for (int i = 0; i < m.h; ++i)
            for (int j = 0; j < m.l; ++j) stored(i, j) = bits.at(i * m.l + j).get<int>();
        m.validate();
    } catch (const json::exception& e) {
        throw FormatError(std::string("mask JSON: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("mask JSON: ") + e.what());
    } catch (const ShapeMismatch& e) {
        throw FormatError(std::string("mask JSON: ") + e.what());
    }
    if (!m.logits.allFinite()) {
        throw FormatError("mask JSON: non-finite logit");
    }
    require_binary(stored, "mask JSON binary");
    const Eigen::VectorXd per_layer = stored.colwise().sum().transpose();
    if ((per_layer.array() != static_cast<double>(m.k)).any()) {
        throw FormatError("mask JSON: binary mask does not select exactly k=" + std::to_string(m.k) +
                          " dimensions in every layer");
    }
    if (stored != binarize(m)) {
        throw FormatError("mask JSON: binary mask disagrees with top-k of its logits");
    }
    return m;
}

void save_mask(const MaskParams& mask, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write mask " + path);
    }
    out << mask_to_json(mask);
}

MaskParams load_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open mask " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return mask_from_json(ss.str());
}

}  // namespace sensemask
