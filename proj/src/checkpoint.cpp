#include "embedalign/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "embedalign/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace embedalign {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'M', 'D'};

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw CorruptionError("checkpoint truncated in header");
    return v;
}

}  // namespace

std::size_t checkpoint_payload_bytes(Arch arch, std::size_t dim, std::size_t classes) {
    auto dims = Model::layer_dims(arch, dim, classes);
    if (arch == Arch::Identity) return 0;
    std::size_t floats = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        floats += dims[i] * dims[i + 1] + dims[i + 1];
    }
    return floats * sizeof(float);
}

void save_checkpoint(const Model& model, const std::string& path,
                     const nlohmann::json& extra_meta) {
    nlohmann::json meta = extra_meta;
    meta["arch"] = arch_to_string(model.arch());
    meta["dim"] = model.dim();
    if (model.arch() == Arch::Head) meta["classes"] = model.classes();
    meta["hidden_dims"] = Model::layer_dims(model.arch(), model.dim(), model.classes());
    meta["dropout_p"] = model.dropout_p();
    std::string meta_str = meta.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kCheckpointVersion);
    write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& l : model.layers()) {
        os.write(reinterpret_cast<const char*>(l.weight.data()),
                 static_cast<std::streamsize>(l.weight.size() * sizeof(float)));
        os.write(reinterpret_cast<const char*>(l.bias.data()),
                 static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
    }
    if (!os) throw Error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file (bad magic): " + path);
    }
    std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    std::uint32_t meta_len = read_u32(is);
    std::string meta_str(meta_len, '\0');
    is.read(meta_str.data(), meta_len);
    if (!is) throw CorruptionError("checkpoint truncated in metadata");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
    }
    if (!meta.contains("arch") || !meta.contains("dim")) {
        throw FormatError("checkpoint metadata missing arch/dim");
    }
    Arch arch = arch_from_string(meta["arch"].get<std::string>());
    std::size_t dim = meta["dim"].get<std::size_t>();
    std::size_t classes = meta.value("classes", std::size_t{0});

    LoadedCheckpoint out{make_model_uninitialized(arch, dim, classes), std::move(meta)};
    for (auto& l : out.model.layers()) {
        is.read(reinterpret_cast<char*>(l.weight.data()),
                static_cast<std::streamsize>(l.weight.size() * sizeof(float)));
        is.read(reinterpret_cast<char*>(l.bias.data()),
                static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
        if (!is) throw CorruptionError("checkpoint payload shorter than metadata implies");
    }
    // no trailing bytes allowed
    char extra;
    is.read(&extra, 1);
    if (!is.eof()) throw CorruptionError("checkpoint payload longer than metadata implies");
    return out;
}

}  // namespace embedalign
