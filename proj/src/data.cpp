#include "embedalign/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "embedalign/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "embedding file format assumes a little-endian host");

namespace embedalign {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw CorruptionError(std::string("truncated header: ") + what);
    return v;
}

void check_magic(std::istream& is, const char expect[4], const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, expect, 4) != 0) {
        throw FormatError("bad magic in " + path);
    }
}

// FNV-1a over the raw bytes of one row.
std::uint64_t row_hash(const float* row, std::size_t dim) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(row);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < dim * sizeof(float); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

bool rows_equal(const float* a, const float* b, std::size_t dim) {
    return std::memcmp(a, b, dim * sizeof(float)) == 0;
}

}  // namespace

Matrix load_embeddings(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    check_magic(is, "EMBD", path);
    std::uint32_t version = read_u32(is, "version");
    if (version != kEmbeddingFileVersion) {
        throw FormatError("unsupported embedding file version " + std::to_string(version));
    }
    std::uint32_t count = read_u32(is, "count");
    std::uint32_t dim = read_u32(is, "dim");
    if (dim == 0) throw FormatError("embedding file with dim 0: " + path);
    std::vector<float> data(static_cast<std::size_t>(count) * dim);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!is) throw CorruptionError("payload shorter than header implies: " + path);
    char extra;
    is.read(&extra, 1);
    if (!is.eof()) throw CorruptionError("payload longer than header implies: " + path);
    for (float v : data) {
        if (!std::isfinite(v)) throw DataError("non-finite value in " + path);
    }
    return Matrix(count, dim, std::move(data));
}

void save_embeddings(const Matrix& m, const std::string& path) {
    if (m.cols() == 0) throw ParameterError("refusing to write embeddings with dim 0");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os.write("EMBD", 4);
    write_u32(os, kEmbeddingFileVersion);
    write_u32(os, static_cast<std::uint32_t>(m.rows()));
    write_u32(os, static_cast<std::uint32_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!os) throw Error("write failed: " + path);
}

std::vector<std::uint32_t> load_labels(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    check_magic(is, "LBLS", path);
    std::uint32_t version = read_u32(is, "version");
    if (version != 1) throw FormatError("unsupported label file version");
    std::uint32_t count = read_u32(is, "count");
    std::vector<std::uint32_t> labels(count);
    is.read(reinterpret_cast<char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * sizeof(std::uint32_t)));
    if (!is) throw CorruptionError("label payload shorter than header implies: " + path);
    return labels;
}

void save_labels(const std::vector<std::uint32_t>& labels, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os.write("LBLS", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(labels.size()));
    os.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size() * sizeof(std::uint32_t)));
    if (!os) throw Error("write failed: " + path);
}

void ParallelEmbeddingSet::validate() const {
    if (source.rows() != target.rows() || source.cols() != target.cols()) {
        throw DimensionError("parallel set: source " + source.shape_str() +
                             " vs target " + target.shape_str());
    }
}

void LabeledEmbeddingSet::validate() const {
    if (labels.size() != embeddings.rows()) {
        throw DataError("labeled set: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(embeddings.rows()) + " rows");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw DataError("label " + std::to_string(labels[i]) + " out of range at row " +
                            std::to_string(i));
        }
    }
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    DatasetManifest m;
    m.base_dir = std::filesystem::path(path).parent_path().string();
    try {
        m.aligner_src = j.at("aligner_src").get<std::string>();
        m.aligner_tgt = j.at("aligner_tgt").get<std::string>();
        m.task_train_embeddings = j.at("task_train").at("embeddings").get<std::string>();
        m.task_train_labels = j.at("task_train").at("labels").get<std::string>();
        m.task_test_embeddings = j.at("task_test").at("embeddings").get<std::string>();
        m.task_test_labels = j.at("task_test").at("labels").get<std::string>();
        m.num_classes = j.at("num_classes").get<std::size_t>();
        m.share_allowed = j.value("share_allowed", false);
        if (j.contains("task_train_native")) {
            m.task_train_native_embeddings =
                j.at("task_train_native").at("embeddings").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest missing field: ") + e.what());
    }
    return m;
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j;
    j["aligner_src"] = aligner_src;
    j["aligner_tgt"] = aligner_tgt;
    j["task_train"] = {{"embeddings", task_train_embeddings}, {"labels", task_train_labels}};
    if (!task_train_native_embeddings.empty()) {
        j["task_train_native"] = {{"embeddings", task_train_native_embeddings}};
    }
    j["task_test"] = {{"embeddings", task_test_embeddings}, {"labels", task_test_labels}};
    j["num_classes"] = num_classes;
    j["share_allowed"] = share_allowed;
    return j;
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for writing: " + path);
    os << to_json().dump(2) << "\n";
}

std::string DatasetManifest::resolve(const std::string& rel) const {
    std::filesystem::path p(rel);
    if (p.is_absolute() || base_dir.empty()) return rel;
    return (std::filesystem::path(base_dir) / p).string();
}

ParallelEmbeddingSet DatasetManifest::load_parallel() const {
    ParallelEmbeddingSet s{load_embeddings(resolve(aligner_src)),
                           load_embeddings(resolve(aligner_tgt))};
    s.validate();
    return s;
}

LabeledEmbeddingSet DatasetManifest::load_task_train() const {
    LabeledEmbeddingSet s{load_embeddings(resolve(task_train_embeddings)),
                          load_labels(resolve(task_train_labels)), num_classes};
    s.validate();
    return s;
}

LabeledEmbeddingSet DatasetManifest::load_task_train_native() const {
    if (!has_native()) throw Error("manifest has no task_train_native role");
    LabeledEmbeddingSet s{load_embeddings(resolve(task_train_native_embeddings)),
                          load_labels(resolve(task_train_labels)), num_classes};
    s.validate();
    return s;
}

LabeledEmbeddingSet DatasetManifest::load_task_test() const {
    LabeledEmbeddingSet s{load_embeddings(resolve(task_test_embeddings)),
                          load_labels(resolve(task_test_labels)), num_classes};
    s.validate();
    return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double val_fraction, RngStream& rng) {
    if (n < 2) throw DataError("cannot split a set with fewer than 2 rows");
    if (val_fraction <= 0.0 || val_fraction >= 1.0) {
        throw ParameterError("val_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // Fisher-Yates with the seeded stream
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = rng.next_index(i + 1);
        std::swap(idx[i], idx[j]);
    }
    std::size_t val_n = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * val_fraction));
    val_n = std::max<std::size_t>(val_n, 1);
    val_n = std::min(val_n, n - 1);
    std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(val_n));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(val_n), idx.end());
    return {train, val};
}

BatchIterator::BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
    if (n_ == 0) throw DataError("cannot iterate an empty set");
    if (batch_size_ < 1) throw ParameterError("batch_size must be >= 1");
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch_batches(std::uint64_t epoch) {
    RngStream rng(seed_ ^ (epoch * 0x9E3779B97F4A7C15ull + 1), "shuffle");
    std::vector<std::size_t> idx(n_);
    for (std::size_t i = 0; i < n_; ++i) idx[i] = i;
    for (std::size_t i = n_ - 1; i > 0; --i) {
        std::size_t j = rng.next_index(i + 1);
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n_; start += batch_size_) {
        std::size_t end = std::min(start + batch_size_, n_);
        batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                             idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<RowOverlap> check_disjoint(const ParallelEmbeddingSet& parallel,
                                       const LabeledEmbeddingSet& task) {
    if (parallel.dim() != task.dim()) {
        throw DimensionError("disjointness check: dim " + std::to_string(parallel.dim()) +
                             " vs " + std::to_string(task.dim()));
    }
    const std::size_t dim = parallel.dim();
    std::unordered_multimap<std::uint64_t, std::pair<std::size_t, bool>> index;
    index.reserve(parallel.size() * 2);
    for (std::size_t i = 0; i < parallel.size(); ++i) {
        index.emplace(row_hash(parallel.source.row(i), dim), std::make_pair(i, false));
        index.emplace(row_hash(parallel.target.row(i), dim), std::make_pair(i, true));
    }
    std::vector<RowOverlap> overlaps;
    for (std::size_t t = 0; t < task.size(); ++t) {
        const float* row = task.embeddings.row(t);
        auto [lo, hi] = index.equal_range(row_hash(row, dim));
        for (auto it = lo; it != hi; ++it) {
            const float* prow = it->second.second ? parallel.target.row(it->second.first)
                                                  : parallel.source.row(it->second.first);
            if (rows_equal(row, prow, dim)) {
                overlaps.push_back({it->second.first, t, it->second.second});
            }
        }
    }
    return overlaps;
}

}  // namespace embedalign
