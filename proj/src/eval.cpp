#include "embedalign/eval.hpp"

#include <cmath>
#include <iostream>

#include "embedalign/errors.hpp"
#include "embedalign/nn.hpp"
#include "embedalign/pipeline.hpp"

namespace embedalign {

double accuracy(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& gold) {
    if (pred.size() != gold.size()) {
        throw DimensionError("accuracy: " + std::to_string(pred.size()) + " vs " +
                             std::to_string(gold.size()) + " labels");
    }
    if (pred.empty()) throw DataError("accuracy of an empty label set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

double class_f1(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& gold, std::uint32_t cls,
                bool* warning) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        bool p = pred[i] == cls, g = gold[i] == cls;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    if (tp == 0 && fp == 0 && fn == 0) {
        if (warning) *warning = true;
        return 0.0;
    }
    if (tp == 0) return 0.0;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold,
          F1Scheme scheme, std::size_t num_classes, bool* warning) {
    if (pred.size() != gold.size()) {
        throw DimensionError("f1: " + std::to_string(pred.size()) + " vs " +
                             std::to_string(gold.size()) + " labels");
    }
    if (pred.empty()) throw DataError("f1 of an empty label set");
    if (scheme == F1Scheme::BinaryPositive) {
        if (num_classes != 2) {
            throw ParameterError("binary-positive F1 requires exactly 2 classes");
        }
        return class_f1(pred, gold, 1, warning);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        sum += class_f1(pred, gold, static_cast<std::uint32_t>(c), warning);
    }
    return sum / static_cast<double>(num_classes);
}

nlohmann::json CosineReport::to_json() const {
    return {{"n", n},
            {"tgt_vs_src", {{"mean", tgt_vs_src_mean}, {"std", tgt_vs_src_std}}},
            {"src_vs_aligned", {{"mean", src_vs_aligned_mean}, {"std", src_vs_aligned_std}}},
            {"tgt_vs_aligned", {{"mean", tgt_vs_aligned_mean}, {"std", tgt_vs_aligned_std}}}};
}

CosineReport cosine_report(const Matrix& src, const Matrix& tgt, const Matrix& aligned) {
    require_same_shape(src, tgt, "cosine_report");
    require_same_shape(src, aligned, "cosine_report");
    if (src.rows() == 0) throw DataError("cosine_report over an empty set");
    const std::size_t n = src.rows();
    const std::size_t d = src.cols();
    auto stats = [n, d](const Matrix& a, const Matrix& b, double& mean, double& sd) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = cosine_similarity(a.row(i), b.row(i), d);
            sum += c;
            sum2 += c * c;
        }
        mean = sum / static_cast<double>(n);
        double var = sum2 / static_cast<double>(n) - mean * mean;
        sd = var > 0.0 ? std::sqrt(var) : 0.0;
    };
    CosineReport r;
    r.n = n;
    stats(tgt, src, r.tgt_vs_src_mean, r.tgt_vs_src_std);
    stats(src, aligned, r.src_vs_aligned_mean, r.src_vs_aligned_std);
    stats(tgt, aligned, r.tgt_vs_aligned_mean, r.tgt_vs_aligned_std);
    return r;
}

nlohmann::json ablation_suite(const DatasetManifest& manifest, Arch arch,
                              const TrainConfig& aligner_cfg, const TrainConfig& task_cfg) {
    if (arch != Arch::Fc && arch != Arch::Ae) {
        throw ParameterError("ablation suite arch must be fc or ae");
    }
    if (!manifest.has_native()) {
        throw DataError("data-share ablation needs the task_train_native manifest role");
    }
    ParallelEmbeddingSet disjoint_pairs = manifest.load_parallel();
    LabeledEmbeddingSet task_train = manifest.load_task_train();
    LabeledEmbeddingSet native = manifest.load_task_train_native();
    LabeledEmbeddingSet task_test = manifest.load_task_test();
    ParallelEmbeddingSet shared_pairs{task_train.embeddings, native.embeddings};

    nlohmann::json rows = nlohmann::json::array();
    for (bool shared : {false, true}) {
        const ParallelEmbeddingSet& pairs = shared ? shared_pairs : disjoint_pairs;
        for (bool identity : {false, true}) {
            Model aligner;
            if (identity) {
                aligner = make_model_uninitialized(Arch::Identity, task_train.dim(), 0);
            } else {
                aligner = train_aligner(pairs, arch, aligner_cfg).first;
            }
            auto [head, rep] = train_task(task_train, &aligner, task_cfg);
            InferResult r = infer(task_test.embeddings, nullptr, head);
            double acc = accuracy(r.labels, task_test.labels);
            double f1s = f1(r.labels, task_test.labels,
                            task_test.num_classes == 2 ? F1Scheme::BinaryPositive
                                                       : F1Scheme::Macro,
                            task_test.num_classes);
            std::string fingerprint = std::string(identity ? "identity" : arch_to_string(arch)) +
                                      (shared ? "/shared" : "/disjoint") + "/seed" +
                                      std::to_string(aligner_cfg.seed);
            rows.push_back({{"aligner", identity ? "identity" : arch_to_string(arch)},
                            {"shared", shared},
                            {"seed", aligner_cfg.seed},
                            {"accuracy", acc},
                            {"f1", f1s},
                            {"best_epoch", rep.best_epoch},
                            {"fingerprint", fingerprint}});
        }
    }
    return {{"rows", rows}};
}

}  // namespace embedalign
