#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "embedalign/matrix.hpp"
#include "embedalign/rng.hpp"

namespace embedalign {

// EmbeddingFile: `EMBD` magic, u32 version, u32 count, u32 dim, then
// count*dim little-endian float32 row-major. 16-byte header. NaN/Inf in the
// payload is rejected at load.
inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

Matrix load_embeddings(const std::string& path);
void save_embeddings(const Matrix& m, const std::string& path);

// Label file: `LBLS` magic, u32 version, u32 count, then count u32 entries.
std::vector<std::uint32_t> load_labels(const std::string& path);
void save_labels(const std::vector<std::uint32_t>& labels, const std::string& path);

// Row-paired source/target embeddings for aligner training.
struct ParallelEmbeddingSet {
    Matrix source;
    Matrix target;

    std::size_t size() const { return source.rows(); }
    std::size_t dim() const { return source.cols(); }
    void validate() const;
};

struct LabeledEmbeddingSet {
    Matrix embeddings;
    std::vector<std::uint32_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return embeddings.rows(); }
    std::size_t dim() const { return embeddings.cols(); }
    void validate() const;
};

// JSON manifest naming the embedding/label files by role. task_train_native
// is optional: the target-space twin of task_train, used for the native
// ceiling baseline.
struct DatasetManifest {
    std::string base_dir;
    std::string aligner_src;
    std::string aligner_tgt;
    std::string task_train_embeddings;
    std::string task_train_labels;
    std::string task_train_native_embeddings;  // optional
    std::string task_test_embeddings;
    std::string task_test_labels;
    std::size_t num_classes = 0;
    bool share_allowed = false;

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;
    nlohmann::json to_json() const;

    std::string resolve(const std::string& rel) const;
    ParallelEmbeddingSet load_parallel() const;
    LabeledEmbeddingSet load_task_train() const;
    LabeledEmbeddingSet load_task_train_native() const;
    LabeledEmbeddingSet load_task_test() const;
    bool has_native() const { return !task_train_native_embeddings.empty(); }
};

// Shuffled disjoint partition; val size = round(n * fraction), at least 1.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double val_fraction, RngStream& rng);

// Per-epoch reshuffled batch iteration over indices 0..n-1; the final
// partial batch is kept.
class BatchIterator {
public:
    BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed);

    // Permutes for the given epoch and returns batches of indices.
    std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t epoch);

private:
    std::size_t n_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

struct RowOverlap {
    std::size_t parallel_index;
    std::size_t task_index;
    bool in_target;  // matched the target side rather than the source side
};

// Exact-byte row comparison via 64-bit hashing with verification, so there
// are no false negatives and no hash-collision false positives.
std::vector<RowOverlap> check_disjoint(const ParallelEmbeddingSet& parallel,
                                       const LabeledEmbeddingSet& task);

}  // namespace embedalign
