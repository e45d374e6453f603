#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "embedalign/checkpoint.hpp"
#include "embedalign/errors.hpp"
#include "embedalign/models.hpp"

using namespace embedalign;
namespace fs = std::filesystem;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<float>(rng.next_gaussian());
    }
    return m;
}

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

std::vector<char> read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("fc dims follow the listing at d=768 and the scaling rule elsewhere") {
    auto d768 = Model::layer_dims(Arch::Fc, 768, 0);
    CHECK(d768 == std::vector<std::size_t>{768, 1024, 512, 256, 512, 1024, 768});
    auto d96 = Model::layer_dims(Arch::Fc, 96, 0);
    CHECK(d96 == std::vector<std::size_t>{96, 128, 64, 32, 64, 128, 96});
}

TEST_CASE("ae dims: hidden 512, bottleneck 128 at d=768") {
    auto dims = Model::layer_dims(Arch::Ae, 768, 0);
    CHECK(dims == std::vector<std::size_t>{768, 512, 256, 128, 256, 512, 768});
}

TEST_CASE("architecture fidelity by parameter count at d=768") {
    RngStream rng(31, "init");
    Model fc = Model::make(Arch::Fc, 768, 0, rng);
    std::size_t expect_fc = (768 * 1024 + 1024) + (1024 * 512 + 512) + (512 * 256 + 256) +
                            (256 * 512 + 512) + (512 * 1024 + 1024) + (1024 * 768 + 768);
    CHECK(fc.total_param_count() == expect_fc);

    RngStream rng2(31, "init");
    Model ae = Model::make(Arch::Ae, 768, 0, rng2);
    std::size_t expect_ae = (768 * 512 + 512) + (512 * 256 + 256) + (256 * 128 + 128) +
                            (128 * 256 + 256) + (256 * 512 + 512) + (512 * 768 + 768);
    CHECK(ae.total_param_count() == expect_ae);
}

TEST_CASE("init determinism and parameter error for tiny dims") {
    RngStream a(42, "init"), b(42, "init");
    Model m1 = Model::make(Arch::Fc, 12, 0, a);
    Model m2 = Model::make(Arch::Fc, 12, 0, b);
    for (std::size_t i = 0; i < m1.layers().size(); ++i) {
        CHECK(m1.layers()[i].weight == m2.layers()[i].weight);
    }
    RngStream c(1, "init");
    CHECK_THROWS_AS(Model::make(Arch::Fc, 1, 0, c), ParameterError);
}

TEST_CASE("identity aligner is the bitwise identity in both modes") {
    Model id = make_model_uninitialized(Arch::Identity, 16, 0);
    RngStream rng(33, "x");
    Matrix x = random_matrix(5, 16, rng);
    CHECK(id.forward(x, Mode::Eval) == x);
    CHECK(id.forward(x, Mode::Train, nullptr) == x);
}

TEST_CASE("aligner forward shape preservation and eval determinism") {
    RngStream init(34, "init");
    for (Arch arch : {Arch::Fc, Arch::Ae}) {
        RngStream i2(34, "init");
        Model m = Model::make(arch, 24, 0, i2);
        RngStream rng(35, "x");
        Matrix x = random_matrix(16, 24, rng);
        Matrix y1 = m.forward(x, Mode::Eval);
        CHECK(y1.rows() == 16);
        CHECK(y1.cols() == 24);
        Matrix y2 = m.forward(x, Mode::Eval);
        CHECK(y1 == y2);
        CHECK_THROWS_AS(m.forward(Matrix(3, 7), Mode::Eval), DimensionError);
    }
}

TEST_CASE("head forward: zero weights give zero logits, shapes and determinism") {
    Model head = make_model_uninitialized(Arch::Head, 8, 3);
    RngStream rng(36, "x");
    Matrix x = random_matrix(1, 8, rng);
    Matrix logits = head.forward(x, Mode::Eval);
    CHECK(logits.rows() == 1);
    CHECK(logits.cols() == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(logits(0, j) == 0.0f);

    RngStream init(37, "init");
    Model h2 = Model::make(Arch::Head, 8, 3, init);
    Matrix a = h2.forward(x, Mode::Eval);
    Matrix b = h2.forward(x, Mode::Eval);
    CHECK(a == b);
}

TEST_CASE("train-mode dropout differs between calls but eval does not") {
    RngStream init(38, "init");
    Model fc = Model::make(Arch::Fc, 12, 0, init);
    RngStream rng(39, "x");
    Matrix x = random_matrix(8, 12, rng);
    RngStream drop(40, "dropout");
    Matrix t1 = fc.forward(x, Mode::Train, &drop);
    Matrix t2 = fc.forward(x, Mode::Train, &drop);
    CHECK(!(t1 == t2));
}

TEST_CASE("checkpoint round trip preserves forward bitwise") {
    RngStream init(41, "init");
    Model m = Model::make(Arch::Ae, 18, 0, init);
    std::string path = temp_path("ea_test_ae.lamd");
    save_checkpoint(m, path, {{"seed", 41}});
    LoadedCheckpoint lc = load_checkpoint(path);
    CHECK(lc.metadata["arch"] == "ae");
    CHECK(lc.metadata["seed"] == 41);
    RngStream rng(42, "x");
    Matrix x = random_matrix(4, 18, rng);
    CHECK(lc.model.forward(x, Mode::Eval) == m.forward(x, Mode::Eval));

    // save -> load -> save is byte-identical
    std::string path2 = temp_path("ea_test_ae2.lamd");
    save_checkpoint(lc.model, path2, lc.metadata);
    CHECK(read_file(path) == read_file(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint error paths") {
    std::string path = temp_path("ea_test_bad.lamd");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPEextra";
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);

    RngStream init(43, "init");
    Model m = Model::make(Arch::Head, 6, 2, init);
    save_checkpoint(m, path);
    auto bytes = read_file(path);

    // truncation
    {
        std::ofstream os(path, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 17));
    }
    CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);

    // trailing garbage
    {
        std::ofstream os(path, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os << "xx";
    }
    CHECK_THROWS_AS(load_checkpoint(path), CorruptionError);

    // unknown version
    {
        auto v = bytes;
        v[4] = 99;
        std::ofstream os(path, std::ios::binary);
        os.write(v.data(), static_cast<std::streamsize>(v.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("fc-768 checkpoint payload byte count pinned from the dim list") {
    // sum over layers of 4 * (in*out + out)
    std::size_t floats = (768 * 1024 + 1024) + (1024 * 512 + 512) + (512 * 256 + 256) +
                         (256 * 512 + 512) + (512 * 1024 + 1024) + (1024 * 768 + 768);
    CHECK(checkpoint_payload_bytes(Arch::Fc, 768, 0) == floats * 4);
    CHECK(checkpoint_payload_bytes(Arch::Fc, 768, 0) == 11550720);
}

TEST_CASE("backward without train forward is a state error") {
    RngStream init(44, "init");
    Model m = Model::make(Arch::Ae, 9, 0, init);
    RngStream rng(45, "x");
    Matrix x = random_matrix(2, 9, rng);
    m.forward(x, Mode::Eval);
    CHECK_THROWS_AS(m.backward(Matrix(2, 9)), StateError);
}
