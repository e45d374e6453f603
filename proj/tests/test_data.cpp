#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "embedalign/data.hpp"
#include "embedalign/errors.hpp"

using namespace embedalign;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<float>(rng.next_gaussian());
    }
    return m;
}

}  // namespace

TEST_CASE("embedding file round trip is bitwise exact") {
    RngStream rng(51, "io");
    Matrix m = random_matrix(17, 9, rng);
    std::string path = temp_path("ea_test.embd");
    save_embeddings(m, path);
    CHECK(load_embeddings(path) == m);
    std::remove(path.c_str());
}

TEST_CASE("3x2 embedding file is 16 header bytes + 24 payload bytes") {
    Matrix m(3, 2, {1, 2, 3, 4, 5, 6});
    std::string path = temp_path("ea_small.embd");
    save_embeddings(m, path);
    CHECK(fs::file_size(path) == 16 + 24);
    std::remove(path.c_str());
}

TEST_CASE("embedding file error kinds are distinct") {
    std::string path = temp_path("ea_bad.embd");

    SUBCASE("bad magic") {
        std::ofstream(path, std::ios::binary) << "XXXX0000000000000000";
        CHECK_THROWS_AS(load_embeddings(path), FormatError);
    }
    SUBCASE("dim zero header") {
        std::ofstream os(path, std::ios::binary);
        os << "EMBD";
        std::uint32_t v = 1, count = 3, dim = 0;
        os.write(reinterpret_cast<char*>(&v), 4);
        os.write(reinterpret_cast<char*>(&count), 4);
        os.write(reinterpret_cast<char*>(&dim), 4);
        os.close();
        CHECK_THROWS_AS(load_embeddings(path), FormatError);
    }
    SUBCASE("short payload") {
        Matrix m(2, 2, {1, 2, 3, 4});
        save_embeddings(m, temp_path("ea_ok.embd"));
        std::ifstream is(temp_path("ea_ok.embd"), std::ios::binary);
        std::vector<char> bytes{std::istreambuf_iterator<char>(is),
                                std::istreambuf_iterator<char>()};
        std::ofstream os(path, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
        os.close();
        CHECK_THROWS_AS(load_embeddings(path), CorruptionError);
        std::remove(temp_path("ea_ok.embd").c_str());
    }
    SUBCASE("nan payload") {
        Matrix m(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()});
        save_embeddings(m, path);
        CHECK_THROWS_AS(load_embeddings(path), DataError);
    }
    std::remove(path.c_str());
}

TEST_CASE("label file round trip") {
    std::vector<std::uint32_t> labels{0, 2, 1, 1, 0};
    std::string path = temp_path("ea_test.lbls");
    save_labels(labels, path);
    CHECK(load_labels(path) == labels);
    std::remove(path.c_str());
}

TEST_CASE("split: sizes, disjoint partition, determinism") {
    RngStream a(7, "split"), b(7, "split"), c(8, "split");
    auto [train, val] = split_indices(10, 0.1, a);
    CHECK(train.size() == 9);
    CHECK(val.size() == 1);

    std::set<std::size_t> all(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    CHECK(all.size() == 10);

    auto [train2, val2] = split_indices(10, 0.1, b);
    CHECK(train == train2);
    CHECK(val == val2);

    auto [train3, val3] = split_indices(10, 0.1, c);
    CHECK((train != train3 || val != val3));

    RngStream d(9, "split");
    CHECK_THROWS_AS(split_indices(1, 0.1, d), DataError);
    RngStream e(9, "split");
    CHECK_THROWS_AS(split_indices(10, 1.5, e), ParameterError);
}

TEST_CASE("batch iteration: coverage, partial batch, determinism") {
    BatchIterator iter(33, 16, 123);
    auto batches = iter.epoch_batches(0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 16);
    CHECK(batches[1].size() == 16);
    CHECK(batches[2].size() == 1);

    std::set<std::size_t> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    CHECK(seen.size() == 33);

    BatchIterator iter2(33, 16, 123);
    CHECK(iter2.epoch_batches(0) == batches);
    CHECK(iter2.epoch_batches(1) != batches);

    CHECK_THROWS_AS(BatchIterator(0, 16, 1), DataError);
}

TEST_CASE("disjointness checker") {
    RngStream rng(52, "data");
    ParallelEmbeddingSet parallel{random_matrix(20, 6, rng), random_matrix(20, 6, rng)};
    LabeledEmbeddingSet task{random_matrix(10, 6, rng), std::vector<std::uint32_t>(10, 0), 2};

    CHECK(check_disjoint(parallel, task).empty());

    // copy one source row into the task set
    for (std::size_t j = 0; j < 6; ++j) task.embeddings(4, j) = parallel.source(7, j);
    auto overlaps = check_disjoint(parallel, task);
    REQUIRE(overlaps.size() == 1);
    CHECK(overlaps[0].parallel_index == 7);
    CHECK(overlaps[0].task_index == 4);
    CHECK(!overlaps[0].in_target);

    // a target-side copy is found too
    for (std::size_t j = 0; j < 6; ++j) task.embeddings(5, j) = parallel.target(3, j);
    overlaps = check_disjoint(parallel, task);
    CHECK(overlaps.size() == 2);

    // fully shared
    LabeledEmbeddingSet shared{parallel.source, std::vector<std::uint32_t>(20, 0), 2};
    CHECK(check_disjoint(parallel, shared).size() == 20);

    LabeledEmbeddingSet wrong_dim{random_matrix(4, 5, rng), std::vector<std::uint32_t>(4, 0), 2};
    CHECK_THROWS_AS(check_disjoint(parallel, wrong_dim), DimensionError);
}

TEST_CASE("manifest round trip and validation") {
    std::string dir = temp_path("ea_manifest_dir");
    fs::create_directories(dir);
    RngStream rng(53, "data");
    Matrix src = random_matrix(6, 4, rng), tgt = random_matrix(6, 4, rng);
    Matrix train = random_matrix(5, 4, rng), test = random_matrix(3, 4, rng);
    save_embeddings(src, dir + "/src.embd");
    save_embeddings(tgt, dir + "/tgt.embd");
    save_embeddings(train, dir + "/train.embd");
    save_embeddings(test, dir + "/test.embd");
    save_labels({0, 1, 0, 1, 0}, dir + "/train.lbls");
    save_labels({1, 0, 1}, dir + "/test.lbls");

    DatasetManifest m;
    m.aligner_src = "src.embd";
    m.aligner_tgt = "tgt.embd";
    m.task_train_embeddings = "train.embd";
    m.task_train_labels = "train.lbls";
    m.task_test_embeddings = "test.embd";
    m.task_test_labels = "test.lbls";
    m.num_classes = 2;
    m.save(dir + "/manifest.json");

    DatasetManifest loaded = DatasetManifest::load(dir + "/manifest.json");
    CHECK(loaded.num_classes == 2);
    CHECK(!loaded.share_allowed);
    CHECK(!loaded.has_native());
    CHECK(loaded.load_parallel().size() == 6);
    CHECK(loaded.load_task_train().size() == 5);
    CHECK(loaded.load_task_test().size() == 3);
    CHECK_THROWS_AS(loaded.load_task_train_native(), Error);

    fs::remove_all(dir);
}
