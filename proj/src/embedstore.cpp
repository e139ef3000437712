#include "sensemask/embedstore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "sensemask/error.hpp"
#include "sensemask/random.hpp"

namespace sensemask {

namespace {

void validate_header(Source source, std::uint32_t head_size, std::uint32_t h, std::uint32_t l) {
    if (h == 0 || l == 0) {
        throw FormatError("dump dimensions must be positive (h=" + std::to_string(h) +
                          ", l=" + std::to_string(l) + ")");
    }
    if (source == Source::Hidden && head_size != 0) {
        throw FormatError("hidden-state dump must have head_size 0");
    }
    if (source == Source::Attention && (head_size == 0 || h % head_size != 0)) {
        throw FormatError("attention dump needs a head_size dividing h (h=" + std::to_string(h) +
                          ", head_size=" + std::to_string(head_size) + ")");
    }
}

}  // namespace

Dataset::Dataset(Source source, std::uint32_t head_size, std::uint32_t h, std::uint32_t l)
    : source_(source), head_size_(head_size), h_(h), l_(l) {
    validate_header(source, head_size, h, l);
}

void Dataset::add(LayerwiseEmbedding record) {
    if (record.tensor.rows() != h_ || record.tensor.cols() != l_) {
        throw ShapeMismatch("record " + std::to_string(record.occurrence_id) + " is " +
                            std::to_string(record.tensor.rows()) + "x" +
                            std::to_string(record.tensor.cols()) + ", dataset expects " +
                            std::to_string(h_) + "x" + std::to_string(l_));
    }
    if (!record.tensor.allFinite()) {
        throw NonFiniteError("record " + std::to_string(record.occurrence_id) +
                             " has a non-finite entry");
    }
    auto [it, inserted] = index_.emplace(record.occurrence_id, records_.size());
    if (!inserted) {
        throw FormatError("duplicate occurrence_id " + std::to_string(record.occurrence_id));
    }
    records_.push_back(std::move(record));
}

std::size_t Dataset::index_of(std::uint64_t occurrence_id) const {
    auto it = index_.find(occurrence_id);
    if (it == index_.end()) {
        throw std::out_of_range("unknown occurrence_id " + std::to_string(occurrence_id));
    }
    return it->second;
}

bool Dataset::has_aux_labels() const {
    return std::any_of(records_.begin(), records_.end(),
                       [](const LayerwiseEmbedding& r) { return r.aux_label.has_value(); });
}

Dataset Dataset::subset(const std::vector<std::size_t>& positions) const {
    Dataset out(source_, head_size_, h_, l_);
    out.records_.reserve(positions.size());
    for (auto p : positions) {
        out.add(records_.at(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary format

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'W', 'E', 'B'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 2 + 4 + 4 + 8;
constexpr std::size_t kRecordPrefixBytes = 8 + 4 + 4 + 4;

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T read(const char* what) {
        static_assert(std::is_integral_v<T>);
        if (remaining() < sizeof(T)) {
            throw FormatError(std::string("truncated dump while reading ") + what + " at byte " +
                              std::to_string(pos_));
        }
        std::make_unsigned_t<T> v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::make_unsigned_t<T>>(
                     static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    float read_float() { return std::bit_cast<float>(read<std::uint32_t>("tensor value")); }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t pos() const { return pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::string& out, T value) {
    auto v = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

}  // namespace

Dataset parse_dump(const std::string& bytes) {
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw FormatError("bad magic: not a layer-wise embedding dump");
    }
    Reader in(bytes);
    for (std::size_t i = 0; i < kMagic.size(); ++i) {
        in.read<std::uint8_t>("magic");
    }
    const auto version = in.read<std::uint16_t>("version");
    const auto source_raw = in.read<std::uint8_t>("source");
    const auto head_size = in.read<std::uint16_t>("head_size");
    const auto h = in.read<std::uint32_t>("h");
    const auto l = in.read<std::uint32_t>("l");
    const auto count = in.read<std::uint64_t>("record_count");
    if (version != kDumpVersion) {
        throw VersionError("unsupported dump version " + std::to_string(version));
    }
    if (source_raw > 1) {
        throw FormatError("unknown source tag " + std::to_string(source_raw));
    }
    const auto source = static_cast<Source>(source_raw);
    validate_header(source, head_size, h, l);

    const std::uint64_t cells = std::uint64_t{h} * l;
    const std::uint64_t record_bytes = kRecordPrefixBytes + 4 * cells;
    if (count > in.remaining() / record_bytes || count * record_bytes != in.remaining()) {
        throw FormatError("dump body is " + std::to_string(in.remaining()) + " bytes; " +
                          std::to_string(count) + " records of " + std::to_string(record_bytes) +
                          " bytes expected (truncated or trailing bytes)");
    }

    Dataset out(source, head_size, h, l);
    for (std::uint64_t r = 0; r < count; ++r) {
        LayerwiseEmbedding rec;
        rec.occurrence_id = in.read<std::uint64_t>("occurrence_id");
        rec.word_id = in.read<std::uint32_t>("word_id");
        rec.sense_label = in.read<std::uint32_t>("sense_label");
        const auto aux = in.read<std::int32_t>("aux_label");
        if (aux < -1) {
            throw FormatError("aux_label " + std::to_string(aux) + " is neither -1 nor a class");
        }
        if (aux >= 0) {
            rec.aux_label = aux;
        }
        rec.tensor.resize(h, l);
        double* data = rec.tensor.data();  // column-major == layer-major
        for (std::uint64_t i = 0; i < cells; ++i) {
            const float f = in.read_float();
            if (!std::isfinite(f)) {
                throw FormatError("non-finite float in record " + std::to_string(r));
            }
            data[i] = f;
        }
        out.add(std::move(rec));
    }
    return out;
}

std::string serialize_dump(const Dataset& dataset) {
    std::string out;
    const std::size_t cells = std::size_t{dataset.h()} * dataset.l();
    out.reserve(kHeaderBytes + dataset.size() * (kRecordPrefixBytes + 4 * cells));
    out.append(kMagic.begin(), kMagic.end());
    put<std::uint16_t>(out, kDumpVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dataset.source()));
    put<std::uint16_t>(out, static_cast<std::uint16_t>(dataset.head_size()));
    put<std::uint32_t>(out, dataset.h());
    put<std::uint32_t>(out, dataset.l());
    put<std::uint64_t>(out, dataset.size());
    for (const auto& rec : dataset.records()) {
        put<std::uint64_t>(out, rec.occurrence_id);
        put<std::uint32_t>(out, rec.word_id);
        put<std::uint32_t>(out, rec.sense_label);
        put<std::int32_t>(out, rec.aux_label.value_or(-1));
        const double* data = rec.tensor.data();
        for (std::size_t i = 0; i < cells; ++i) {
            put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
        }
    }
    return out;
}

Dataset load_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dump " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_dump(bytes);
}

void write_dump(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write dump " + path.string());
    }
    const auto bytes = serialize_dump(dataset);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios) {
    if (ratios.size() != 2 && ratios.size() != 3) {
        throw BadRatio("expected 2 or 3 ratios, got " + std::to_string(ratios.size()));
    }
    double sum = 0.0;
    for (double r : ratios) {
        if (!std::isfinite(r) || r < 0.0) {
            throw BadRatio("ratios must be finite and non-negative");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw BadRatio("ratios sum to " + std::to_string(sum) + ", not 1");
    }
    std::vector<std::size_t> sizes(ratios.size());
    std::vector<double> frac(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double quota = static_cast<double>(n) * ratios[i];
        sizes[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
        frac[i] = quota - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
        sizes[order[i % order.size()]] += 1;
    }
    return sizes;
}

Split split(const Dataset& dataset, const std::vector<double>& ratios, std::uint64_t seed) {
    if (dataset.empty()) {
        throw EmptyData("cannot split an empty dataset");
    }
    const auto sizes = split_sizes(dataset.size(), ratios);
    std::vector<std::size_t> perm(dataset.size());
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(seed, /*stream=*/0x5011);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<Dataset> parts;
    std::size_t offset = 0;
    for (auto size : sizes) {
        std::vector<std::size_t> chosen(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                                        perm.begin() + static_cast<std::ptrdiff_t>(offset + size));
        std::sort(chosen.begin(), chosen.end());  // keep file order within a part
        parts.push_back(dataset.subset(chosen));
        offset += size;
    }
    Split out{std::move(parts[0]), std::move(parts[1]), std::nullopt};
    if (parts.size() == 3) {
        out.test = std::move(parts[2]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

using Key = std::array<std::size_t, 3>;

/// Draws distinct keys uniformly from one word's combinatorial space.
/// Small spaces are enumerated once; large ones use rejection until half is
/// consumed, then fall back to enumerating what is left.
class DistinctDrawer {
public:
    static constexpr std::uint64_t kEnumerateLimit = 1u << 15;

    DistinctDrawer(std::uint64_t total, std::function<Key(Rng&)> draw,
                   std::function<std::vector<Key>()> enumerate)
        : total_(total), draw_(std::move(draw)), enumerate_(std::move(enumerate)) {}

    bool exhausted() const { return taken_ >= total_; }

    Key next(Rng& rng) {
        if (!enumerated_ && (total_ <= kEnumerateLimit || 2 * taken_ >= total_)) {
            pool_ = enumerate_();
            std::erase_if(pool_, [&](const Key& k) { return seen_.count(k) != 0; });
            seen_.clear();
            enumerated_ = true;
        }
        ++taken_;
        if (enumerated_) {
            std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
            const auto i = pick(rng);
            Key k = pool_[i];
            pool_[i] = pool_.back();
            pool_.pop_back();
            return k;
        }
        for (;;) {
            Key k = draw_(rng);
            if (seen_.insert(k).second) {
                return k;
            }
        }
    }

private:
    std::uint64_t total_;
    std::uint64_t taken_ = 0;
    std::function<Key(Rng&)> draw_;
    std::function<std::vector<Key>()> enumerate_;
    bool enumerated_ = false;
    std::vector<Key> pool_;
    std::set<Key> seen_;
};

template <typename T>
const T& pick_uniform(const std::vector<T>& v, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
}

std::size_t pick_weighted(const std::vector<std::uint64_t>& cumulative, Rng& rng) {
    std::uniform_int_distribution<std::uint64_t> d(0, cumulative.back() - 1);
    const auto r = d(rng);
    return static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
}

/// Picks from `pool` uniformly, excluding `excluded` (which must be in pool).
std::size_t pick_other(const std::vector<std::size_t>& pool, std::size_t excluded, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 2);
    auto i = d(rng);
    if (pool[i] == excluded) {
        i = pool.size() - 1;
    }
    return pool[i];
}

/// Round-robin draw: a word uniformly among non-exhausted ones, then the
/// word's drawer.
std::vector<Key> draw_across_words(std::vector<DistinctDrawer>& drawers, std::size_t n, Rng& rng) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < drawers.size(); ++i) {
        if (!drawers[i].exhausted()) {
            active.push_back(i);
        }
    }
    std::vector<Key> out;
    out.reserve(n);
    while (out.size() < n && !active.empty()) {
        std::uniform_int_distribution<std::size_t> d(0, active.size() - 1);
        const auto slot = d(rng);
        auto& drawer = drawers[active[slot]];
        out.push_back(drawer.next(rng));
        if (drawer.exhausted()) {
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(slot));
        }
    }
    return out;
}

std::map<std::uint32_t, std::vector<std::size_t>> group_by_word(const Dataset& dataset,
                                                                 bool require_aux) {
    std::map<std::uint32_t, std::vector<std::size_t>> words;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (require_aux && !dataset[i].aux_label) {
            continue;
        }
        words[dataset[i].word_id].push_back(i);
    }
    return words;
}

/// Triplet space of one word under condition 1 only.
/// Sense s contributes c_s·(c_s−1)·(N−c_s) ordered triplets.
std::optional<DistinctDrawer> sense_triplet_space(const Dataset& ds,
                                                  const std::vector<std::size_t>& members) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_sense;
    for (auto i : members) {
        by_sense[ds[i].sense_label].push_back(i);
    }
    const std::uint64_t n = members.size();
    std::vector<std::uint32_t> senses;
    std::vector<std::uint64_t> cumulative;
    std::uint64_t total = 0;
    for (const auto& [s, idx] : by_sense) {
        const std::uint64_t c = idx.size();
        const std::uint64_t w = c * (c - 1) * (n - c);
        if (w == 0) {
            continue;
        }
        total += w;
        senses.push_back(s);
        cumulative.push_back(total);
    }
    if (total == 0) {
        return std::nullopt;
    }
    auto draw = [&ds, by_sense, senses, cumulative, members](Rng& rng) {
        const auto s = senses[pick_weighted(cumulative, rng)];
        const auto& same = by_sense.at(s);
        const auto x0 = pick_uniform(same, rng);
        const auto x1 = pick_other(same, x0, rng);
        std::size_t x2 = 0;
        do {
            x2 = pick_uniform(members, rng);
        } while (ds[x2].sense_label == s);
        return Key{x0, x1, x2};
    };
    auto enumerate = [&ds, members]() {
        std::vector<Key> all;
        for (auto a : members) {
            for (auto b : members) {
                if (a == b || ds[a].sense_label != ds[b].sense_label) continue;
                for (auto c : members) {
                    if (ds[c].sense_label != ds[a].sense_label) all.push_back({a, b, c});
                }
            }
        }
        return all;
    };
    return DistinctDrawer(total, draw, enumerate);
}

/// Triplet space of one word under both conditions. Cells (s, a0, b) with
/// a0 != b weigh c(s,a0)·c(s,b)·(C_b − c(s,b)).
std::optional<DistinctDrawer> two_aspect_triplet_space(const Dataset& ds,
                                                       const std::vector<std::size_t>& members) {
    using Cell = std::pair<std::uint32_t, std::int32_t>;
    std::map<Cell, std::vector<std::size_t>> cells;
    std::map<std::int32_t, std::vector<std::size_t>> by_aux;
    for (auto i : members) {
        cells[{ds[i].sense_label, *ds[i].aux_label}].push_back(i);
        by_aux[*ds[i].aux_label].push_back(i);
    }
    struct Choice {
        Cell anchor;
        Cell positive;
        std::int32_t aux;
    };
    std::vector<Choice> choices;
    std::vector<std::uint64_t> cumulative;
    std::uint64_t total = 0;
    for (const auto& [anchor, a_idx] : cells) {
        for (const auto& [positive, p_idx] : cells) {
            if (positive.first != anchor.first || positive.second == anchor.second) continue;
            const std::uint64_t negatives = by_aux.at(anchor.second).size() - a_idx.size();
            const std::uint64_t w = a_idx.size() * p_idx.size() * negatives;
            if (w == 0) continue;
            total += w;
            choices.push_back({anchor, positive, anchor.second});
            cumulative.push_back(total);
        }
    }
    if (total == 0) {
        return std::nullopt;
    }
    auto draw = [&ds, cells, by_aux, choices, cumulative](Rng& rng) {
        const auto& ch = choices[pick_weighted(cumulative, rng)];
        const auto x0 = pick_uniform(cells.at(ch.anchor), rng);
        const auto x1 = pick_uniform(cells.at(ch.positive), rng);
        const auto& same_aux = by_aux.at(ch.aux);
        std::size_t x2 = 0;
        do {
            x2 = pick_uniform(same_aux, rng);
        } while (ds[x2].sense_label == ch.anchor.first);
        return Key{x0, x1, x2};
    };
    auto enumerate = [&ds, members]() {
        std::vector<Key> all;
        for (auto a : members) {
            for (auto b : members) {
                if (ds[a].sense_label != ds[b].sense_label || ds[a].aux_label == ds[b].aux_label)
                    continue;
                for (auto c : members) {
                    if (ds[c].sense_label != ds[a].sense_label && ds[c].aux_label == ds[a].aux_label)
                        all.push_back({a, b, c});
                }
            }
        }
        return all;
    };
    return DistinctDrawer(total, draw, enumerate);
}

/// Unordered same-word pairs with equal (want_same) or differing senses.
std::optional<DistinctDrawer> pair_space(const Dataset& ds, const std::vector<std::size_t>& members,
                                         bool want_same, std::uint64_t& count_out) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_sense;
    for (auto i : members) {
        by_sense[ds[i].sense_label].push_back(i);
    }
    const std::uint64_t n = members.size();
    std::vector<std::uint32_t> senses;
    std::vector<std::uint64_t> cumulative;
    std::uint64_t weight_total = 0;
    std::uint64_t count = 0;
    for (const auto& [s, idx] : by_sense) {
        const std::uint64_t c = idx.size();
        const std::uint64_t w = want_same ? c * (c - 1) / 2 : c * (n - c);
        if (w == 0) continue;
        weight_total += w;
        count += want_same ? w : 0;
        senses.push_back(s);
        cumulative.push_back(weight_total);
    }
    if (!want_same) {
        count = weight_total / 2;  // each cross pair is reachable from both endpoints
    }
    count_out = count;
    if (count == 0) {
        return std::nullopt;
    }
    auto draw = [&ds, by_sense, senses, cumulative, members, want_same](Rng& rng) {
        const auto s = senses[pick_weighted(cumulative, rng)];
        const auto& same = by_sense.at(s);
        const auto a = pick_uniform(same, rng);
        std::size_t b = 0;
        if (want_same) {
            b = pick_other(same, a, rng);
        } else {
            do {
                b = pick_uniform(members, rng);
            } while (ds[b].sense_label == s);
        }
        return Key{std::min(a, b), std::max(a, b), 0};
    };
    auto enumerate = [&ds, members, want_same]() {
        std::vector<Key> all;
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const bool same = ds[members[i]].sense_label == ds[members[j]].sense_label;
                if (same == want_same) {
                    all.push_back({std::min(members[i], members[j]),
                                   std::max(members[i], members[j]), 0});
                }
            }
        }
        return all;
    };
    return DistinctDrawer(count, draw, enumerate);
}

}  // namespace

bool is_valid_triplet(const Dataset& dataset, const Triplet& t, bool use_aspect_b) {
    if (t.x0 == t.x1) return false;
    const auto& r0 = dataset.by_id(t.x0);
    const auto& r1 = dataset.by_id(t.x1);
    const auto& r2 = dataset.by_id(t.x2);
    if (r0.word_id != r1.word_id || r0.word_id != r2.word_id) return false;
    if (r0.sense_label != r1.sense_label || r0.sense_label == r2.sense_label) return false;
    if (use_aspect_b) {
        if (!r0.aux_label || !r1.aux_label || !r2.aux_label) return false;
        if (*r0.aux_label == *r1.aux_label || *r0.aux_label != *r2.aux_label) return false;
    }
    return true;
}

std::vector<Triplet> sample_triplets(const Dataset& dataset, std::size_t n, std::uint64_t seed,
                                     bool use_aspect_b) {
    std::vector<DistinctDrawer> drawers;
    for (const auto& [word, members] : group_by_word(dataset, use_aspect_b)) {
        auto space = use_aspect_b ? two_aspect_triplet_space(dataset, members)
                                  : sense_triplet_space(dataset, members);
        if (space) {
            drawers.push_back(std::move(*space));
        }
    }
    if (drawers.empty()) {
        throw NoValidTriplet(use_aspect_b
                                 ? "no word has a triplet satisfying both the sense and the "
                                   "auxiliary-label conditions (are aux labels present?)"
                                 : "no word has two occurrences of one sense and one of another");
    }
    auto rng = make_rng(seed, /*stream=*/0x7819);
    std::vector<Triplet> out;
    for (const auto& k : draw_across_words(drawers, n, rng)) {
        out.push_back({dataset[k[0]].occurrence_id, dataset[k[1]].occurrence_id,
                       dataset[k[2]].occurrence_id});
    }
    return out;
}

std::vector<LabeledPair> sample_pairs(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
    std::vector<DistinctDrawer> same_drawers;
    std::vector<DistinctDrawer> diff_drawers;
    std::uint64_t same_total = 0;
    std::uint64_t diff_total = 0;
    for (const auto& [word, members] : group_by_word(dataset, false)) {
        std::uint64_t count = 0;
        if (auto s = pair_space(dataset, members, true, count)) {
            same_drawers.push_back(std::move(*s));
            same_total += count;
        }
        if (auto d = pair_space(dataset, members, false, count)) {
            diff_drawers.push_back(std::move(*d));
            diff_total += count;
        }
    }
    if (same_total + diff_total == 0) {
        throw NoValidPair("no word has two occurrences");
    }
    std::uint64_t want_same = std::min<std::uint64_t>(same_total, (n + 1) / 2);
    std::uint64_t want_diff = std::min<std::uint64_t>(diff_total, n / 2);
    if (same_total == 0) {
        want_diff = std::min<std::uint64_t>(diff_total, n);
    } else if (diff_total == 0) {
        want_same = std::min<std::uint64_t>(same_total, n);
    } else {
        want_same = std::min(want_same, want_diff + 1);
        want_diff = std::min(want_diff, want_same + 1);
    }

    auto rng = make_rng(seed, /*stream=*/0x9A1F);
    std::vector<LabeledPair> out;
    auto emit = [&](const std::vector<Key>& keys, bool label) {
        for (const auto& k : keys) {
            auto a = dataset[k[0]].occurrence_id;
            auto b = dataset[k[1]].occurrence_id;
            if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
            out.push_back({a, b, label});
        }
    };
    emit(draw_across_words(same_drawers, want_same, rng), true);
    emit(draw_across_words(diff_drawers, want_diff, rng), false);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

// ---------------------------------------------------------------------------
// TSV lists

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    auto split_line = [](const std::string& line) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, '\t')) fields.push_back(f);
        if (!line.empty() && line.back() == '\t') fields.emplace_back();
        return fields;
    };
    std::string line;
    if (!std::getline(in, line) || split_line(line) != header) {
        throw FormatError(path.string() + ": missing or wrong header");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::uint64_t parse_id(const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') {
        throw FormatError("bad occurrence id '" + s + "'");
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

void write_triplets_tsv(const std::vector<Triplet>& triplets, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "x0\tx1\tx2\n";
    for (const auto& t : triplets) {
        out << t.x0 << '\t' << t.x1 << '\t' << t.x2 << '\n';
    }
}

std::vector<Triplet> read_triplets_tsv(const std::filesystem::path& path) {
    std::vector<Triplet> out;
    for (const auto& row : read_tsv(path, {"x0", "x1", "x2"})) {
        out.push_back({parse_id(row[0]), parse_id(row[1]), parse_id(row[2])});
    }
    return out;
}

void write_pairs_tsv(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "x1\tx2\tlabel\n";
    for (const auto& p : pairs) {
        out << p.x1 << '\t' << p.x2 << '\t' << (p.label ? "true" : "false") << '\n';
    }
}

std::vector<LabeledPair> read_pairs_tsv(const std::filesystem::path& path) {
    std::vector<LabeledPair> out;
    for (const auto& row : read_tsv(path, {"x1", "x2", "label"})) {
        if (row[2] != "true" && row[2] != "false") {
            throw FormatError("bad pair label '" + row[2] + "'");
        }
        out.push_back({parse_id(row[0]), parse_id(row[1]), row[2] == "true"});
    }
    return out;
}

}  // namespace sensemask
