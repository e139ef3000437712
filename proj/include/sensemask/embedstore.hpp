#ifndef SENSEMASK_EMBEDSTORE_HPP
#define SENSEMASK_EMBEDSTORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sensemask {

enum class Source : std::uint8_t { Hidden = 0, Attention = 1 };

/// One word occurrence: its h×l stack of middle outputs (column j = layer j+1)
/// plus the labels used to build triplets and pairs.
struct LayerwiseEmbedding {
    std::uint64_t occurrence_id = 0;
    std::uint32_t word_id = 0;
    std::uint32_t sense_label = 0;
    std::optional<std::int32_t> aux_label;
    Eigen::MatrixXd tensor;
};

/// A loaded dump. h, l and source are shared by every record.
class Dataset {
public:
    Dataset() = default;
    Dataset(Source source, std::uint32_t head_size, std::uint32_t h, std::uint32_t l);

    Source source() const { return source_; }
    std::uint32_t head_size() const { return head_size_; }
    std::uint32_t h() const { return h_; }
    std::uint32_t l() const { return l_; }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<LayerwiseEmbedding>& records() const { return records_; }
    const LayerwiseEmbedding& operator[](std::size_t i) const { return records_[i]; }

    /// Appends a record, validating shape, finiteness and id uniqueness.
    void add(LayerwiseEmbedding record);

    /// Position of an occurrence id, or throws std::out_of_range.
    std::size_t index_of(std::uint64_t occurrence_id) const;
    const LayerwiseEmbedding& by_id(std::uint64_t occurrence_id) const {
        return records_[index_of(occurrence_id)];
    }
    bool has_aux_labels() const;

    /// Dataset with the same metadata holding the given record positions.
    Dataset subset(const std::vector<std::size_t>& positions) const;

private:
    Source source_ = Source::Hidden;
    std::uint32_t head_size_ = 0;
    std::uint32_t h_ = 0;
    std::uint32_t l_ = 0;
    std::vector<LayerwiseEmbedding> records_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

// Binary dump I/O. Layout (little-endian):
//   "LWEB" | u16 version=1 | u8 source | u16 head_size | u32 h | u32 l | u64 count
//   per record: u64 occurrence_id | u32 word_id | u32 sense | i32 aux (-1 absent)
//               | h·l float32, layer-major
inline constexpr std::uint16_t kDumpVersion = 1;

Dataset parse_dump(const std::string& bytes);
std::string serialize_dump(const Dataset& dataset);
Dataset load_dump(const std::filesystem::path& path);
void write_dump(const Dataset& dataset, const std::filesystem::path& path);

struct Split {
    Dataset train;
    Dataset dev;
    std::optional<Dataset> test;
};

/// Seeded partition into train/dev[/test]. `ratios` has 2 or 3 entries
/// summing to 1. Sizes are floored; leftover records go to the part with the
/// largest fractional share (train on ties).
Split split(const Dataset& dataset, const std::vector<double>& ratios, std::uint64_t seed);

/// Part sizes used by split(); exposed for testing.
std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios);

struct Triplet {
    std::uint64_t x0 = 0;
    std::uint64_t x1 = 0;
    std::uint64_t x2 = 0;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct LabeledPair {
    std::uint64_t x1 = 0;
    std::uint64_t x2 = 0;
    bool label = false;
    friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// True when (x0, x1, x2) satisfies sense(x0) == sense(x1) != sense(x2), all
/// three are occurrences of the same word, and, with `use_aspect_b`,
/// aux(x0) == aux(x2) != aux(x1).
bool is_valid_triplet(const Dataset& dataset, const Triplet& t, bool use_aspect_b);

/// Distinct valid triplets, drawn by picking a word uniformly and then a valid
/// triplet of that word uniformly. Returns fewer than n only when every valid
/// triplet has been drawn.
std::vector<Triplet> sample_triplets(const Dataset& dataset, std::size_t n, std::uint64_t seed,
                                     bool use_aspect_b);

/// Distinct same-word pairs labeled by sense equality, balanced between the
/// two labels (±1) whenever both exist.
std::vector<LabeledPair> sample_pairs(const Dataset& dataset, std::size_t n, std::uint64_t seed);

void write_triplets_tsv(const std::vector<Triplet>& triplets, const std::filesystem::path& path);
std::vector<Triplet> read_triplets_tsv(const std::filesystem::path& path);
void write_pairs_tsv(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path);
std::vector<LabeledPair> read_pairs_tsv(const std::filesystem::path& path);

}  // namespace sensemask

#endif  // SENSEMASK_EMBEDSTORE_HPP
