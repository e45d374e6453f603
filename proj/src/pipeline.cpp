#include "embedalign/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "embedalign/errors.hpp"
#include "embedalign/eval.hpp"
#include "embedalign/nn.hpp"

namespace embedalign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const float* src = m.row(idx[i]);
        std::copy(src, src + m.cols(), out.row(i));
    }
    return out;
}

struct Snapshot {
    std::vector<std::vector<float>> tensors;
};

Snapshot snapshot_params(Model& m) {
    Snapshot s;
    for (auto& l : m.layers()) {
        s.tensors.emplace_back(l.weight.data(), l.weight.data() + l.weight.size());
        s.tensors.emplace_back(l.bias);
    }
    return s;
}

void restore_params(Model& m, const Snapshot& s) {
    std::size_t t = 0;
    for (auto& l : m.layers()) {
        std::copy(s.tensors[t].begin(), s.tensors[t].end(), l.weight.data());
        ++t;
        l.bias = s.tensors[t];
        ++t;
    }
}

// Shared early-stopping bookkeeping.
struct EarlyStopper {
    std::size_t patience;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t bad_epochs = 0;
    Snapshot best_weights;

    // returns true when training should stop
    bool observe(double val, std::size_t epoch, Model& model) {
        if (val < best) {
            best = val;
            best_epoch = epoch;
            bad_epochs = 0;
            best_weights = snapshot_params(model);
            return false;
        }
        return ++bad_epochs >= patience;
    }
};

}  // namespace

Direction direction_from_string(const std::string& s) {
    if (s == "forward") return Direction::Forward;
    if (s == "reverse") return Direction::Reverse;
    throw ParameterError("unknown direction: " + s);
}

const char* direction_to_string(Direction d) {
    return d == Direction::Forward ? "forward" : "reverse";
}

nlohmann::json TrainConfig::to_json() const {
    return {{"lr", lr},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"val_fraction", val_fraction},
            {"seed", seed},
            {"direction", direction_to_string(direction)},
            {"consistency_pairs", consistency_pairs},
            {"freeze_aligner_in_step3", freeze_aligner},
            {"weight_decay", weight_decay}};
}

void TrainConfig::apply_json(const nlohmann::json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "lr") lr = it->get<double>();
        else if (k == "batch_size") batch_size = it->get<std::size_t>();
        else if (k == "max_epochs") max_epochs = it->get<std::size_t>();
        else if (k == "patience") patience = it->get<std::size_t>();
        else if (k == "val_fraction") val_fraction = it->get<double>();
        else if (k == "seed") seed = it->get<std::uint64_t>();
        else if (k == "direction") direction = direction_from_string(it->get<std::string>());
        else if (k == "consistency_pairs") consistency_pairs = it->get<bool>();
        else if (k == "freeze_aligner_in_step3") freeze_aligner = it->get<bool>();
        else if (k == "weight_decay") weight_decay = it->get<double>();
        else throw ParameterError("unknown config key: " + k);
    }
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json j;
    j["train_loss"] = train_loss;
    j["val_loss"] = val_loss;
    j["best_epoch"] = best_epoch;
    j["best_val_loss"] = best_val_loss;
    j["stop_reason"] = stop_reason;
    j["wall_time_s"] = wall_time_s;
    if (!final_metrics.is_null()) j["final_metrics"] = final_metrics;
    return j;
}

std::pair<Model, TrainReport> train_aligner(const ParallelEmbeddingSet& parallel,
                                            Arch arch, const TrainConfig& cfg) {
    parallel.validate();
    if (parallel.size() < 2) throw DataError("aligner training needs at least 2 pairs");
    if (arch != Arch::Fc && arch != Arch::Ae) {
        throw ParameterError("train_aligner expects arch fc or ae");
    }
    const auto t0 = Clock::now();

    // Reverse direction swaps source/target; the consistency pairs then
    // keep the aligner near-identity on what is now the output space.
    const Matrix& src = cfg.direction == Direction::Forward ? parallel.source : parallel.target;
    const Matrix& tgt = cfg.direction == Direction::Forward ? parallel.target : parallel.source;
    const std::size_t d = src.cols();

    RngStream split_rng(cfg.seed, "split");
    auto [train_idx, val_idx] = split_indices(src.rows(), cfg.val_fraction, split_rng);
    Matrix val_src = gather_rows(src, val_idx);
    Matrix val_tgt = gather_rows(tgt, val_idx);

    // example stream: (src->tgt) pairs, plus (tgt->tgt) consistency pairs
    struct Example {
        std::size_t row;
        bool consistency;
    };
    std::vector<Example> examples;
    examples.reserve(train_idx.size() * (cfg.consistency_pairs ? 2 : 1));
    for (std::size_t r : train_idx) examples.push_back({r, false});
    if (cfg.consistency_pairs) {
        for (std::size_t r : train_idx) examples.push_back({r, true});
    }

    RngStream init_rng(cfg.seed, "init");
    Model model = Model::make(arch, d, 0, init_rng);
    RngStream drop_rng(cfg.seed, "dropout");
    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}, model.param_sizes());
    BatchIterator iter(examples.size(), cfg.batch_size, cfg.seed);

    TrainReport report;
    EarlyStopper stopper{cfg.patience};
    std::size_t epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_examples = 0;
        for (const auto& batch : iter.epoch_batches(epoch)) {
            Matrix x(batch.size(), d), y(batch.size(), d);
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const Example& ex = examples[batch[b]];
                const float* in_row = ex.consistency ? tgt.row(ex.row) : src.row(ex.row);
                const float* out_row = tgt.row(ex.row);
                std::copy(in_row, in_row + d, x.row(b));
                std::copy(out_row, out_row + d, y.row(b));
            }
            model.zero_grad();
            Matrix pred = model.forward(x, Mode::Train, &drop_rng);
            LossResult loss = mse_loss(pred, y);
            if (!std::isfinite(loss.loss)) {
                throw TrainingError("non-finite aligner loss at epoch " +
                                    std::to_string(epoch));
            }
            model.backward(loss.grad);
            try {
                opt.step(model.param_refs());
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " (aligner, epoch " +
                                    std::to_string(epoch) + ")");
            }
            epoch_loss += loss.loss * static_cast<double>(batch.size());
            epoch_examples += batch.size();
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(epoch_examples));

        Matrix val_pred = model.forward(val_src, Mode::Eval);
        double val = mse_loss(val_pred, val_tgt).loss;
        report.val_loss.push_back(val);
        if (stopper.observe(val, epoch, model)) {
            report.stop_reason = "patience";
            ++epoch;
            break;
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
    restore_params(model, stopper.best_weights);
    report.best_epoch = stopper.best_epoch;
    report.best_val_loss = stopper.best;
    report.wall_time_s = seconds_since(t0);
    return {std::move(model), std::move(report)};
}

std::pair<Model, TrainReport> train_task(const LabeledEmbeddingSet& task,
                                         Model* aligner, const TrainConfig& cfg) {
    task.validate();
    if (task.size() < 2) throw DataError("task training needs at least 2 examples");
    const auto t0 = Clock::now();
    const std::size_t d = task.dim();
    const bool joint = aligner != nullptr && !cfg.freeze_aligner &&
                       aligner->arch() != Arch::Identity;

    RngStream split_rng(cfg.seed, "split");
    auto [train_idx, val_idx] = split_indices(task.size(), cfg.val_fraction, split_rng);

    // Frozen aligner in eval mode is a fixed feature map; apply it once.
    Matrix features = task.embeddings;
    if (aligner != nullptr && !joint) {
        features = aligner->forward(task.embeddings, Mode::Eval);
    }

    Matrix val_x = gather_rows(joint ? task.embeddings : features, val_idx);
    std::vector<std::uint32_t> val_y;
    for (std::size_t r : val_idx) val_y.push_back(task.labels[r]);

    RngStream init_rng(cfg.seed, "init_head");
    Model head = Model::make(Arch::Head, d, task.num_classes, init_rng);
    RngStream drop_rng(cfg.seed, "dropout_head");
    RngStream aligner_drop_rng(cfg.seed, "dropout_aligner_step3");

    std::vector<std::size_t> sizes = head.param_sizes();
    if (joint) {
        for (std::size_t s : aligner->param_sizes()) sizes.push_back(s);
    }
    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}, sizes);
    BatchIterator iter(train_idx.size(), cfg.batch_size, cfg.seed);

    TrainReport report;
    EarlyStopper stopper{cfg.patience};
    Snapshot best_aligner;
    std::size_t epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_examples = 0;
        for (const auto& batch : iter.epoch_batches(epoch)) {
            Matrix x(batch.size(), d);
            std::vector<std::uint32_t> y(batch.size());
            const Matrix& source_mat = joint ? task.embeddings : features;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                std::size_t r = train_idx[batch[b]];
                const float* row = source_mat.row(r);
                std::copy(row, row + d, x.row(b));
                y[b] = task.labels[r];
            }
            head.zero_grad();
            if (joint) aligner->zero_grad();
            Matrix h = joint ? aligner->forward(x, Mode::Train, &aligner_drop_rng) : x;
            Matrix logits = head.forward(h, Mode::Train, &drop_rng);
            LossResult loss = softmax_cross_entropy(logits, y);
            if (!std::isfinite(loss.loss)) {
                throw TrainingError("non-finite task loss at epoch " + std::to_string(epoch));
            }
            Matrix g = head.backward(loss.grad);
            if (joint) aligner->backward(g);
            std::vector<ParamRef> params = head.param_refs();
            if (joint) {
                for (auto& p : aligner->param_refs()) params.push_back(p);
            }
            try {
                opt.step(params);
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " (task head, epoch " +
                                    std::to_string(epoch) + ")");
            }
            epoch_loss += loss.loss * static_cast<double>(batch.size());
            epoch_examples += batch.size();
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(epoch_examples));

        Matrix vh = joint ? aligner->forward(val_x, Mode::Eval) : val_x;
        Matrix val_logits = head.forward(vh, Mode::Eval);
        double val = softmax_cross_entropy(val_logits, val_y).loss;
        report.val_loss.push_back(val);
        bool stop = stopper.observe(val, epoch, head);
        if (joint && stopper.best_epoch == epoch && stopper.bad_epochs == 0) {
            best_aligner = snapshot_params(*aligner);
        }
        if (stop) {
            report.stop_reason = "patience";
            ++epoch;
            break;
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
    restore_params(head, stopper.best_weights);
    if (joint && !best_aligner.tensors.empty()) restore_params(*aligner, best_aligner);
    report.best_epoch = stopper.best_epoch;
    report.best_val_loss = stopper.best;
    report.wall_time_s = seconds_since(t0);
    return {std::move(head), std::move(report)};
}

InferResult infer(const Matrix& embeddings, Model* aligner, Model& head) {
    Matrix h = aligner != nullptr ? aligner->forward(embeddings, Mode::Eval) : embeddings;
    Matrix logits = head.forward(h, Mode::Eval);
    InferResult r{std::vector<std::uint32_t>(logits.rows()), std::move(logits)};
    for (std::size_t i = 0; i < r.logits.rows(); ++i) {
        const float* row = r.logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.logits.cols(); ++j) {
            if (row[j] > row[best]) best = j;
        }
        r.labels[i] = static_cast<std::uint32_t>(best);
    }
    return r;
}

PipelineResult run_pipeline(const DatasetManifest& manifest, Arch arch,
                            const TrainConfig& aligner_cfg, const TrainConfig& task_cfg,
                            const std::string& out_dir) {
    if (arch == Arch::Head) throw ParameterError("pipeline arch must be fc, ae or identity");
    ParallelEmbeddingSet parallel = manifest.load_parallel();
    LabeledEmbeddingSet task_train = manifest.load_task_train();
    LabeledEmbeddingSet task_test = manifest.load_task_test();

    auto overlaps = check_disjoint(parallel, task_train);
    if (!overlaps.empty()) {
        if (!manifest.share_allowed) {
            throw DataError("aligner data and task data share " +
                            std::to_string(overlaps.size()) +
                            " rows; task data must be unseen during alignment "
                            "(set share_allowed to run the data-share ablation)");
        }
        std::cerr << "warning: " << overlaps.size()
                  << " rows shared between aligner and task data (share_allowed set)\n";
    }

    PipelineResult result;
    if (arch == Arch::Identity) {
        result.aligner = make_model_uninitialized(Arch::Identity, parallel.dim(), 0);
        result.step2.stop_reason = "identity";
    } else {
        auto [model, rep] = train_aligner(parallel, arch, aligner_cfg);
        result.aligner = std::move(model);
        result.step2 = std::move(rep);
    }

    const bool reverse = aligner_cfg.direction == Direction::Reverse;
    if (reverse) {
        // head trains on raw source-side data; the aligner maps target-space
        // inputs into that space at inference time
        auto [head, rep] = train_task(task_train, nullptr, task_cfg);
        result.head = std::move(head);
        result.step3 = std::move(rep);
    } else {
        auto [head, rep] = train_task(task_train, &result.aligner, task_cfg);
        result.head = std::move(head);
        result.step3 = std::move(rep);
    }

    Model* infer_aligner = reverse ? &result.aligner : nullptr;
    InferResult test = infer(task_test.embeddings, infer_aligner, result.head);
    double acc = accuracy(test.labels, task_test.labels);
    double f1_score = f1(test.labels, task_test.labels,
                         task_test.num_classes == 2 ? F1Scheme::BinaryPositive
                                                    : F1Scheme::Macro,
                         task_test.num_classes);
    result.eval = {{"accuracy", acc},
                   {"f1", f1_score},
                   {"n_test", task_test.size()},
                   {"arch", arch_to_string(arch)},
                   {"direction", direction_to_string(aligner_cfg.direction)},
                   {"seed", aligner_cfg.seed},
                   {"share_allowed", manifest.share_allowed},
                   {"overlapping_rows", overlaps.size()}};
    result.step3.final_metrics = result.eval;

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        auto p = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
        nlohmann::json aligner_meta = {{"seed", aligner_cfg.seed},
                                       {"training", aligner_cfg.to_json()},
                                       {"epoch", result.step2.best_epoch},
                                       {"val_loss", result.step2.best_val_loss}};
        save_checkpoint(result.aligner, p("aligner.lamd"), aligner_meta);
        nlohmann::json head_meta = {{"seed", task_cfg.seed},
                                    {"training", task_cfg.to_json()},
                                    {"epoch", result.step3.best_epoch},
                                    {"val_loss", result.step3.best_val_loss}};
        save_checkpoint(result.head, p("head.lamd"), head_meta);
        std::ofstream(p("report_step2.json")) << result.step2.to_json().dump(2) << "\n";
        std::ofstream(p("report_step3.json")) << result.step3.to_json().dump(2) << "\n";
        std::ofstream(p("eval.json")) << result.eval.dump(2) << "\n";
        nlohmann::json cfg_log = {{"arch", arch_to_string(arch)},
                                  {"aligner", aligner_cfg.to_json()},
                                  {"task", task_cfg.to_json()}};
        std::ofstream(p("config.json")) << cfg_log.dump(2) << "\n";
    }
    return result;
}

}  // namespace embedalign
