#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "embedalign/matrix.hpp"

namespace embedalign {

struct DatasetManifest;
struct TrainConfig;
enum class Arch;

double accuracy(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& gold);

enum class F1Scheme { BinaryPositive, Macro };

// Binary scheme scores the positive class (label 1) and requires C == 2;
// macro averages per-class F1 uniformly. A class absent from both pred and
// gold contributes 0 and sets *warning.
double f1(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold,
          F1Scheme scheme, std::size_t num_classes, bool* warning = nullptr);

// Row-wise mean/stddev cosine similarity for the three pairings of the
// alignment diagnostic.
struct CosineReport {
    double tgt_vs_src_mean = 0.0, tgt_vs_src_std = 0.0;
    double src_vs_aligned_mean = 0.0, src_vs_aligned_std = 0.0;
    double tgt_vs_aligned_mean = 0.0, tgt_vs_aligned_std = 0.0;
    std::size_t n = 0;

    nlohmann::json to_json() const;
};

CosineReport cosine_report(const Matrix& src, const Matrix& tgt, const Matrix& aligned);

// Runs {arch aligner, identity aligner} x {disjoint, shared} with matched
// seeds. Shared mode retrains the aligner on the task rows themselves and
// needs the manifest's task_train_native role for the target side.
nlohmann::json ablation_suite(const DatasetManifest& manifest, Arch arch,
                              const TrainConfig& aligner_cfg, const TrainConfig& task_cfg);

}  // namespace embedalign
