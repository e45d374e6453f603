#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "embedalign/checkpoint.hpp"
#include "embedalign/errors.hpp"
#include "embedalign/eval.hpp"
#include "embedalign/kernels.hpp"
#include "embedalign/pipeline.hpp"
#include "embedalign/synth.hpp"

namespace ea = embedalign;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("EMBEDALIGN_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

void write_json(const std::string& path, const json& j) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream os(path);
    if (!os) throw ea::Error("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

// Flags mirror TrainConfig field names; a JSON config file may set any of
// them, explicitly given flags win.
struct TrainFlags {
    ea::TrainConfig cfg;
    std::string config_path;
    CLI::Option *lr_opt, *batch_opt, *epochs_opt, *patience_opt, *valfrac_opt, *seed_opt,
        *dir_opt, *cons_opt, *freeze_opt, *wd_opt;
    std::string direction_str = "forward";
    bool no_consistency = false;
    bool unfreeze = false;

    void attach(CLI::App* app, const std::string& prefix, double default_lr) {
        cfg.lr = default_lr;
        cfg.seed = default_seed();
        auto opt = [&](const char* name) { return "--" + prefix + name; };
        lr_opt = app->add_option(opt("lr"), cfg.lr, "learning rate");
        batch_opt = app->add_option(opt("batch-size"), cfg.batch_size, "batch size");
        epochs_opt = app->add_option(opt("max-epochs"), cfg.max_epochs, "epoch cap");
        patience_opt = app->add_option(opt("patience"), cfg.patience,
                                       "early-stopping patience (epochs)");
        valfrac_opt = app->add_option(opt("val-fraction"), cfg.val_fraction,
                                      "validation split fraction");
        wd_opt = app->add_option(opt("weight-decay"), cfg.weight_decay, "AdamW weight decay");
        seed_opt = app->add_option("--seed", cfg.seed, "run seed (env EMBEDALIGN_SEED)");
        dir_opt = app->add_option("--direction", direction_str, "forward|reverse")
                      ->check(CLI::IsMember({"forward", "reverse"}));
        cons_opt = app->add_flag(opt("no-consistency-pairs"), no_consistency,
                                 "drop the target->target consistency pairs");
        freeze_opt = app->add_flag("--unfreeze-aligner", unfreeze,
                                   "let the aligner train during the task step");
        app->add_option("--config", config_path, "JSON config file (flags win)");
    }

    ea::TrainConfig resolve() const {
        ea::TrainConfig out = cfg;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ea::Error("cannot open config: " + config_path);
            json j;
            is >> j;
            ea::TrainConfig from_file = cfg;
            from_file.apply_json(j);
            // flags that were not explicitly given take the file's values
            out = from_file;
            if (lr_opt->count()) out.lr = cfg.lr;
            if (batch_opt->count()) out.batch_size = cfg.batch_size;
            if (epochs_opt->count()) out.max_epochs = cfg.max_epochs;
            if (patience_opt->count()) out.patience = cfg.patience;
            if (valfrac_opt->count()) out.val_fraction = cfg.val_fraction;
            if (wd_opt->count()) out.weight_decay = cfg.weight_decay;
            if (seed_opt->count()) out.seed = cfg.seed;
        }
        if (dir_opt->count() || config_path.empty()) {
            out.direction = ea::direction_from_string(direction_str);
        }
        if (cons_opt->count()) out.consistency_pairs = !no_consistency;
        if (freeze_opt->count()) out.freeze_aligner = !unfreeze;
        return out;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"embedding-space aligner toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string backend_str = "auto";
    app.add_option("--backend", backend_str, "kernel backend: auto|scalar|avx2|neon")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic bilingual world");
    ea::OracleSpec spec;
    std::size_t n_task_train = 2000, n_task_test = 1000;
    std::string gen_out = "synth_world";
    std::string kind_str = "tanh";
    bool gen_allow_shared = false;
    spec.seed = 7;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--dim", spec.dim, "embedding dim");
    gen->add_option("--pairs", spec.pairs, "aligner pair count");
    gen->add_option("--task-train", n_task_train, "task training rows");
    gen->add_option("--task-test", n_task_test, "task test rows");
    gen->add_option("--classes", spec.classes, "class count");
    gen->add_option("--kind", kind_str, "transform kind: linear|tanh")
        ->check(CLI::IsMember({"linear", "tanh"}));
    gen->add_option("--sigma", spec.sigma, "target-side noise stddev");
    gen->add_option("--sep", spec.separation, "cluster separation radius");
    auto* gen_seed = gen->add_option("--seed", spec.seed, "world seed");
    gen->add_flag("--allow-shared", gen_allow_shared, "mark manifest share_allowed");

    // train-aligner
    auto* ta = app.add_subcommand("train-aligner", "Step 2: train the aligner");
    std::string ta_manifest, ta_out = "run_aligner", ta_arch = "fc";
    TrainFlags ta_flags;
    ta->add_option("--manifest", ta_manifest, "dataset manifest")->required();
    ta->add_option("--arch", ta_arch, "fc|ae")->check(CLI::IsMember({"fc", "ae"}));
    ta->add_option("--out", ta_out, "output directory");
    ta_flags.attach(ta, "", 1e-5);

    // train-task
    auto* tt = app.add_subcommand("train-task", "Step 3: train the task head");
    std::string tt_manifest, tt_out = "run_task", tt_aligner;
    bool tt_native = false;
    TrainFlags tt_flags;
    tt->add_option("--manifest", tt_manifest, "dataset manifest")->required();
    tt->add_option("--aligner", tt_aligner, "aligner checkpoint (omit for the raw baseline)");
    tt->add_flag("--native", tt_native, "train on the task_train_native role");
    tt->add_option("--out", tt_out, "output directory");
    tt_flags.attach(tt, "", 1e-4);

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "Step 2 + Step 3 + evaluation");
    std::string pl_manifest, pl_out = "run_pipeline", pl_arch = "fc";
    bool pl_allow_shared = false;
    TrainFlags pl_flags;
    double pl_task_lr = 1e-4;
    std::size_t pl_task_epochs = 0;
    pl->add_option("--manifest", pl_manifest, "dataset manifest")->required();
    pl->add_option("--arch", pl_arch, "fc|ae|identity")
        ->check(CLI::IsMember({"fc", "ae", "identity"}));
    pl->add_option("--out", pl_out, "output directory");
    pl->add_flag("--allow-shared", pl_allow_shared,
                 "run even when aligner and task data overlap");
    pl->add_option("--task-lr", pl_task_lr, "task-step learning rate");
    pl->add_option("--task-max-epochs", pl_task_epochs, "task-step epoch cap");
    pl_flags.attach(pl, "", 1e-5);

    // reverse-infer
    auto* ri = app.add_subcommand("reverse-infer",
                                  "classify target-space embeddings through a "
                                  "reverse-trained aligner");
    std::string ri_aligner, ri_head, ri_embeddings, ri_out = "run_infer";
    ri->add_option("--aligner", ri_aligner, "reverse aligner checkpoint")->required();
    ri->add_option("--head", ri_head, "task head checkpoint")->required();
    ri->add_option("--embeddings", ri_embeddings, "embedding file to classify")->required();
    ri->add_option("--out", ri_out, "output directory");

    // cosine
    auto* co = app.add_subcommand("cosine", "alignment cosine-similarity diagnostic");
    std::string co_manifest, co_aligner, co_out = "run_cosine";
    co->add_option("--manifest", co_manifest, "dataset manifest")->required();
    co->add_option("--aligner", co_aligner, "aligner checkpoint")->required();
    co->add_option("--out", co_out, "output directory");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a head on the task test set");
    std::string ev_manifest, ev_head, ev_aligner, ev_out = "run_eval";
    ev->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    ev->add_option("--head", ev_head, "head checkpoint")->required();
    ev->add_option("--aligner", ev_aligner,
                   "apply this aligner to the test embeddings first (reverse mode)");
    ev->add_option("--out", ev_out, "output directory");

    // ablation
    auto* ab = app.add_subcommand("ablation", "omission and data-share ablation suite");
    std::string ab_manifest, ab_out = "run_ablation", ab_arch = "fc";
    TrainFlags ab_flags;
    double ab_task_lr = 1e-4;
    std::size_t ab_task_epochs = 0;
    ab->add_option("--manifest", ab_manifest, "dataset manifest")->required();
    ab->add_option("--arch", ab_arch, "fc|ae")->check(CLI::IsMember({"fc", "ae"}));
    ab->add_option("--out", ab_out, "output directory");
    ab->add_option("--task-lr", ab_task_lr, "task-step learning rate");
    ab->add_option("--task-max-epochs", ab_task_epochs, "task-step epoch cap");
    ab_flags.attach(ab, "", 1e-5);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (backend_str != "auto") {
        ea::set_backend(backend_str == "scalar" ? ea::Backend::Scalar
                        : backend_str == "avx2" ? ea::Backend::Avx2
                                                : ea::Backend::Neon);
    }

    if (gen->parsed()) {
        if (!gen_seed->count()) {
            if (const char* env = std::getenv("EMBEDALIGN_SEED")) {
                spec.seed = std::strtoull(env, nullptr, 10);
            }
        }
        spec.kind = ea::transform_kind_from_string(kind_str);
        spec.validate();
        ea::SplitWorld world = ea::generate_split_world(spec, n_task_train, n_task_test);
        std::string manifest = ea::write_world_files(world, gen_out, gen_allow_shared);
        json cfg = {{"dim", spec.dim},       {"pairs", spec.pairs},
                    {"task_train", n_task_train}, {"task_test", n_task_test},
                    {"classes", spec.classes},    {"kind", kind_str},
                    {"sigma", spec.sigma},        {"sep", spec.separation},
                    {"seed", spec.seed},          {"allow_shared", gen_allow_shared}};
        write_json((fs::path(gen_out) / "resolved_config.json").string(), cfg);
        std::cout << "wrote " << manifest << " (" << spec.pairs << " pairs, "
                  << n_task_train << "+" << n_task_test << " task rows, dim " << spec.dim
                  << ")\n";
        return 0;
    }

    if (ta->parsed()) {
        ea::TrainConfig cfg = ta_flags.resolve();
        ea::DatasetManifest manifest = ea::DatasetManifest::load(ta_manifest);
        auto [model, report] = ea::train_aligner(manifest.load_parallel(),
                                                 ea::arch_from_string(ta_arch), cfg);
        fs::create_directories(ta_out);
        json meta = {{"seed", cfg.seed},
                     {"training", cfg.to_json()},
                     {"epoch", report.best_epoch},
                     {"val_loss", report.best_val_loss}};
        ea::save_checkpoint(model, (fs::path(ta_out) / "aligner.lamd").string(), meta);
        write_json((fs::path(ta_out) / "report_step2.json").string(), report.to_json());
        write_json((fs::path(ta_out) / "resolved_config.json").string(),
                   json{{"arch", ta_arch}, {"training", cfg.to_json()}});
        std::cout << "aligner trained: best val MSE " << report.best_val_loss << " at epoch "
                  << report.best_epoch << " (" << report.stop_reason << ")\n";
        return 0;
    }

    if (tt->parsed()) {
        ea::TrainConfig cfg = tt_flags.resolve();
        ea::DatasetManifest manifest = ea::DatasetManifest::load(tt_manifest);
        ea::LabeledEmbeddingSet train =
            tt_native ? manifest.load_task_train_native() : manifest.load_task_train();
        ea::Model aligner;
        ea::Model* aligner_ptr = nullptr;
        if (!tt_aligner.empty()) {
            aligner = ea::load_checkpoint(tt_aligner).model;
            aligner_ptr = &aligner;
        }
        auto [head, report] = ea::train_task(train, aligner_ptr, cfg);
        fs::create_directories(tt_out);
        json meta = {{"seed", cfg.seed},
                     {"training", cfg.to_json()},
                     {"epoch", report.best_epoch},
                     {"val_loss", report.best_val_loss}};
        ea::save_checkpoint(head, (fs::path(tt_out) / "head.lamd").string(), meta);
        write_json((fs::path(tt_out) / "report_step3.json").string(), report.to_json());
        write_json((fs::path(tt_out) / "resolved_config.json").string(),
                   json{{"aligner", tt_aligner}, {"training", cfg.to_json()}});
        std::cout << "head trained: best val loss " << report.best_val_loss << " at epoch "
                  << report.best_epoch << " (" << report.stop_reason << ")\n";
        return 0;
    }

    if (pl->parsed()) {
        ea::TrainConfig aligner_cfg = pl_flags.resolve();
        ea::TrainConfig task_cfg = ea::TrainConfig::task_defaults();
        task_cfg.seed = aligner_cfg.seed;
        task_cfg.lr = pl_task_lr;
        task_cfg.freeze_aligner = aligner_cfg.freeze_aligner;
        if (pl_task_epochs > 0) task_cfg.max_epochs = pl_task_epochs;
        ea::DatasetManifest manifest = ea::DatasetManifest::load(pl_manifest);
        if (pl_allow_shared) manifest.share_allowed = true;
        ea::PipelineResult result = ea::run_pipeline(
            manifest, ea::arch_from_string(pl_arch), aligner_cfg, task_cfg, pl_out);
        std::cout << "pipeline done: accuracy " << result.eval["accuracy"].get<double>()
                  << ", f1 " << result.eval["f1"].get<double>() << " on "
                  << result.eval["n_test"].get<std::size_t>() << " test rows\n";
        return 0;
    }

    if (ri->parsed()) {
        ea::Model aligner = ea::load_checkpoint(ri_aligner).model;
        ea::Model head = ea::load_checkpoint(ri_head).model;
        ea::Matrix emb = ea::load_embeddings(ri_embeddings);
        ea::InferResult r = ea::infer(emb, &aligner, head);
        fs::create_directories(ri_out);
        json out = {{"labels", r.labels}, {"n", r.labels.size()}};
        write_json((fs::path(ri_out) / "predictions.json").string(), out);
        write_json((fs::path(ri_out) / "resolved_config.json").string(),
                   json{{"aligner", ri_aligner},
                        {"head", ri_head},
                        {"embeddings", ri_embeddings}});
        std::cout << "classified " << r.labels.size() << " embeddings\n";
        return 0;
    }

    if (co->parsed()) {
        ea::DatasetManifest manifest = ea::DatasetManifest::load(co_manifest);
        ea::ParallelEmbeddingSet pairs = manifest.load_parallel();
        ea::Model aligner = ea::load_checkpoint(co_aligner).model;
        ea::Matrix aligned = aligner.forward(pairs.source, ea::Mode::Eval);
        ea::CosineReport rep = ea::cosine_report(pairs.source, pairs.target, aligned);
        fs::create_directories(co_out);
        write_json((fs::path(co_out) / "cosine.json").string(), rep.to_json());
        write_json((fs::path(co_out) / "resolved_config.json").string(),
                   json{{"manifest", co_manifest}, {"aligner", co_aligner}});
        std::cout << "cosine over " << rep.n << " pairs: tgt~src " << rep.tgt_vs_src_mean
                  << ", tgt~aligned " << rep.tgt_vs_aligned_mean << ", src~aligned "
                  << rep.src_vs_aligned_mean << "\n";
        return 0;
    }

    if (ev->parsed()) {
        ea::DatasetManifest manifest = ea::DatasetManifest::load(ev_manifest);
        ea::LabeledEmbeddingSet test = manifest.load_task_test();
        ea::Model head = ea::load_checkpoint(ev_head).model;
        ea::Model aligner;
        ea::Model* aligner_ptr = nullptr;
        if (!ev_aligner.empty()) {
            aligner = ea::load_checkpoint(ev_aligner).model;
            aligner_ptr = &aligner;
        }
        ea::InferResult r = ea::infer(test.embeddings, aligner_ptr, head);
        double acc = ea::accuracy(r.labels, test.labels);
        double f1s = ea::f1(r.labels, test.labels,
                            test.num_classes == 2 ? ea::F1Scheme::BinaryPositive
                                                  : ea::F1Scheme::Macro,
                            test.num_classes);
        fs::create_directories(ev_out);
        json out = {{"accuracy", acc}, {"f1", f1s}, {"n_test", test.size()}};
        write_json((fs::path(ev_out) / "eval.json").string(), out);
        write_json((fs::path(ev_out) / "resolved_config.json").string(),
                   json{{"manifest", ev_manifest},
                        {"head", ev_head},
                        {"aligner", ev_aligner}});
        std::cout << "accuracy " << acc << ", f1 " << f1s << " on " << test.size()
                  << " rows\n";
        return 0;
    }

    if (ab->parsed()) {
        ea::TrainConfig aligner_cfg = ab_flags.resolve();
        ea::TrainConfig task_cfg = ea::TrainConfig::task_defaults();
        task_cfg.seed = aligner_cfg.seed;
        task_cfg.lr = ab_task_lr;
        if (ab_task_epochs > 0) task_cfg.max_epochs = ab_task_epochs;
        ea::DatasetManifest manifest = ea::DatasetManifest::load(ab_manifest);
        json result = ea::ablation_suite(manifest, ea::arch_from_string(ab_arch),
                                         aligner_cfg, task_cfg);
        fs::create_directories(ab_out);
        write_json((fs::path(ab_out) / "ablation.json").string(), result);
        write_json((fs::path(ab_out) / "resolved_config.json").string(),
                   json{{"arch", ab_arch},
                        {"aligner", aligner_cfg.to_json()},
                        {"task", task_cfg.to_json()}});
        for (const auto& row : result["rows"]) {
            std::cout << row["fingerprint"].get<std::string>() << ": accuracy "
                      << row["accuracy"].get<double>() << "\n";
        }
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ea::ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
