#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "embedalign/checkpoint.hpp"
#include "embedalign/data.hpp"
#include "embedalign/models.hpp"

namespace embedalign {

enum class Direction { Forward, Reverse };

Direction direction_from_string(const std::string& s);
const char* direction_to_string(Direction d);

struct TrainConfig {
    double lr = 1e-5;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    Direction direction = Direction::Forward;
    bool consistency_pairs = true;
    bool freeze_aligner = true;
    double weight_decay = 0.01;

    static TrainConfig aligner_defaults() { return TrainConfig{}; }  // lr 1e-5
    static TrainConfig task_defaults() {
        TrainConfig c;
        c.lr = 1e-4;
        return c;
    }

    nlohmann::json to_json() const;
    void apply_json(const nlohmann::json& j);  // known keys only
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::string stop_reason;  // "patience" | "max_epochs" | "identity"
    double wall_time_s = 0.0;
    nlohmann::json final_metrics;

    nlohmann::json to_json() const;
};

// Step 2: aligner regression on (source -> target) pairs plus, when enabled,
// (target -> target) consistency pairs shuffled into the same stream.
// direction == Reverse swaps the roles first. Early-stops on validation MSE
// and returns the best-epoch weights.
std::pair<Model, TrainReport> train_aligner(const ParallelEmbeddingSet& parallel,
                                            Arch arch, const TrainConfig& cfg);

// Step 3: fresh classification head on (optionally aligned) embeddings.
// With freeze_aligner the aligner runs in eval mode and gets no updates;
// otherwise it trains jointly with the head.
std::pair<Model, TrainReport> train_task(const LabeledEmbeddingSet& task,
                                         Model* aligner, const TrainConfig& cfg);

struct InferResult {
    std::vector<std::uint32_t> labels;
    Matrix logits;
};

// Eval-mode argmax classification, optionally through an aligner.
InferResult infer(const Matrix& embeddings, Model* aligner, Model& head);

struct PipelineResult {
    Model aligner;
    Model head;
    TrainReport step2;
    TrainReport step3;
    nlohmann::json eval;
};

// Step 2 then Step 3 then test-set evaluation. Refuses non-disjoint data
// unless the manifest sets share_allowed. When out_dir is non-empty, writes
// aligner.lamd, head.lamd, report_step2.json, report_step3.json, eval.json
// and config.json there.
PipelineResult run_pipeline(const DatasetManifest& manifest, Arch arch,
                            const TrainConfig& aligner_cfg, const TrainConfig& task_cfg,
                            const std::string& out_dir = "");

}  // namespace embedalign
