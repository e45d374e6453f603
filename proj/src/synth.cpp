#include "embedalign/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "embedalign/errors.hpp"

namespace embedalign {

TransformKind transform_kind_from_string(const std::string& s) {
    if (s == "linear") return TransformKind::Linear;
    if (s == "tanh") return TransformKind::Tanh;
    throw ParameterError("unknown transform kind: " + s);
}

const char* transform_kind_to_string(TransformKind k) {
    return k == TransformKind::Linear ? "linear" : "tanh";
}

void OracleSpec::validate() const {
    if (dim < 2) throw ParameterError("oracle dim must be >= 2");
    if (classes < 2) throw ParameterError("oracle classes must be >= 2");
    if (pairs < classes) throw ParameterError("oracle pairs must be >= classes");
    if (sigma < 0.0) throw ParameterError("oracle sigma must be >= 0");
    if (separation <= 0.0) throw ParameterError("oracle separation must be > 0");
}

Matrix gen_orthogonal(std::size_t d, RngStream& rng) {
    if (d < 1) throw ParameterError("gen_orthogonal: d must be >= 1");
    // Householder QR of a Gaussian draw, in double throughout.
    std::vector<double> a(d * d);
    for (double& v : a) v = rng.next_gaussian();
    std::vector<double> q(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) q[i * d + i] = 1.0;

    std::vector<double> v(d), w(d);
    for (std::size_t k = 0; k < d; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < d; ++i) norm += a[i * d + k] * a[i * d + k];
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        double alpha = a[k * d + k] >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < d; ++i) {
            v[i] = a[i * d + k] - (i == k ? alpha : 0.0);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // A <- H A with H = I - 2 v v^T / |v|^2
        for (std::size_t j = k; j < d; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < d; ++i) dot += v[i] * a[i * d + j];
            double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < d; ++i) a[i * d + j] -= f * v[i];
        }
        // Q <- Q H
        for (std::size_t i = 0; i < d; ++i) {
            double dot = 0.0;
            for (std::size_t j = k; j < d; ++j) dot += q[i * d + j] * v[j];
            double f = 2.0 * dot / vnorm2;
            for (std::size_t j = k; j < d; ++j) q[i * d + j] -= f * v[j];
        }
    }
    // sign-correct so diag(R) > 0
    for (std::size_t k = 0; k < d; ++k) {
        if (a[k * d + k] < 0.0) {
            for (std::size_t i = 0; i < d; ++i) q[i * d + k] = -q[i * d + k];
        }
    }
    Matrix out(d, d);
    for (std::size_t i = 0; i < d * d; ++i) out.data()[i] = static_cast<float>(q[i]);
    return out;
}

namespace {

struct Samples {
    Matrix source;
    Matrix target;
    std::vector<std::uint32_t> labels;
};

// Draw order per sample: label, then dim source Gaussians, then (if sigma
// > 0) dim noise Gaussians. Centers are drawn first, 'dim' Gaussians each.
Samples generate_samples(const OracleSpec& spec, const Matrix& q, const Matrix& centers,
                         std::size_t n, RngStream& rng) {
    const std::size_t d = spec.dim;
    Samples s{Matrix(n, d), Matrix(n, d), std::vector<std::uint32_t>(n)};
    std::vector<double> src(d), tgt(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t label = static_cast<std::uint32_t>(rng.next_index(spec.classes));
        s.labels[i] = label;
        for (std::size_t k = 0; k < d; ++k) {
            src[k] = static_cast<double>(centers(label, k)) + rng.next_gaussian();
            s.source(i, k) = static_cast<float>(src[k]);
        }
        // apply the ground-truth transform to the stored (float) source
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                acc += static_cast<double>(q(j, k)) * static_cast<double>(s.source(i, k));
            }
            tgt[j] = spec.kind == TransformKind::Tanh ? std::tanh(acc) : acc;
        }
        if (spec.sigma > 0.0) {
            for (std::size_t j = 0; j < d; ++j) tgt[j] += spec.sigma * rng.next_gaussian();
        }
        for (std::size_t j = 0; j < d; ++j) s.target(i, j) = static_cast<float>(tgt[j]);
    }
    return s;
}

Matrix draw_centers(const OracleSpec& spec, RngStream& rng) {
    Matrix centers(spec.classes, spec.dim);
    std::vector<double> c(spec.dim);
    for (std::size_t ci = 0; ci < spec.classes; ++ci) {
        double norm2 = 0.0;
        for (std::size_t k = 0; k < spec.dim; ++k) {
            c[k] = rng.next_gaussian();
            norm2 += c[k] * c[k];
        }
        double scale = spec.separation / std::sqrt(norm2);
        for (std::size_t k = 0; k < spec.dim; ++k) {
            centers(ci, k) = static_cast<float>(c[k] * scale);
        }
    }
    return centers;
}

}  // namespace

nlohmann::json GroundTruth::to_json() const {
    nlohmann::json j;
    j["kind"] = transform_kind_to_string(kind);
    j["sigma"] = sigma;
    j["separation"] = separation;
    j["dim"] = transform.rows();
    std::vector<float> qflat(transform.data(), transform.data() + transform.size());
    j["transform"] = qflat;
    std::vector<float> cflat(centers.data(), centers.data() + centers.size());
    j["centers"] = cflat;
    j["classes"] = centers.rows();
    return j;
}

World generate_world(const OracleSpec& spec) {
    spec.validate();
    RngStream rng(spec.seed, "world");
    Matrix q = gen_orthogonal(spec.dim, rng);
    Matrix centers = draw_centers(spec, rng);
    Samples s = generate_samples(spec, q, centers, spec.pairs, rng);
    return World{{std::move(s.source), std::move(s.target)},
                 std::move(s.labels),
                 GroundTruth{std::move(q), spec.kind, std::move(centers), spec.sigma,
                             spec.separation}};
}

SplitWorld generate_split_world(const OracleSpec& spec, std::size_t n_task_train,
                                std::size_t n_task_test) {
    spec.validate();
    if (n_task_train < 1 || n_task_test < 1) {
        throw ParameterError("task split sizes must be >= 1");
    }
    RngStream rng(spec.seed, "world");
    Matrix q = gen_orthogonal(spec.dim, rng);
    Matrix centers = draw_centers(spec, rng);
    std::size_t n_total = spec.pairs + n_task_train + n_task_test;
    Samples s = generate_samples(spec, q, centers, n_total, rng);

    auto slice = [&](const Matrix& m, std::size_t begin, std::size_t count) {
        Matrix out(count, m.cols());
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(begin + i, j);
        }
        return out;
    };
    auto slice_labels = [&](std::size_t begin, std::size_t count) {
        return std::vector<std::uint32_t>(s.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                          s.labels.begin() +
                                              static_cast<std::ptrdiff_t>(begin + count));
    };

    SplitWorld w{
        {slice(s.source, 0, spec.pairs), slice(s.target, 0, spec.pairs)},
        slice_labels(0, spec.pairs),
        {slice(s.source, spec.pairs, n_task_train), slice_labels(spec.pairs, n_task_train),
         spec.classes},
        slice(s.target, spec.pairs, n_task_train),
        {slice(s.target, spec.pairs + n_task_train, n_task_test),
         slice_labels(spec.pairs + n_task_train, n_task_test), spec.classes},
        GroundTruth{std::move(q), spec.kind, std::move(centers), spec.sigma,
                    spec.separation}};
    return w;
}

std::string write_world_files(const SplitWorld& world, const std::string& out_dir,
                              bool share_allowed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto p = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    save_embeddings(world.parallel.source, p("aligner_src.embd"));
    save_embeddings(world.parallel.target, p("aligner_tgt.embd"));
    save_embeddings(world.task_train.embeddings, p("task_train_src.embd"));
    save_embeddings(world.task_train_native, p("task_train_tgt.embd"));
    save_labels(world.task_train.labels, p("task_train.lbls"));
    save_embeddings(world.task_test.embeddings, p("task_test_tgt.embd"));
    save_labels(world.task_test.labels, p("task_test.lbls"));

    DatasetManifest m;
    m.aligner_src = "aligner_src.embd";
    m.aligner_tgt = "aligner_tgt.embd";
    m.task_train_embeddings = "task_train_src.embd";
    m.task_train_labels = "task_train.lbls";
    m.task_train_native_embeddings = "task_train_tgt.embd";
    m.task_test_embeddings = "task_test_tgt.embd";
    m.task_test_labels = "task_test.lbls";
    m.num_classes = world.task_train.num_classes;
    m.share_allowed = share_allowed;
    std::string manifest_path = p("manifest.json");
    m.save(manifest_path);

    std::ofstream gt(p("ground_truth.json"));
    gt << world.truth.to_json().dump(2) << "\n";
    return manifest_path;
}

}  // namespace embedalign
