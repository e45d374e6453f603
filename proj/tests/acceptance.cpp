// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "embedalign/checkpoint.hpp"
#include "embedalign/data.hpp"
#include "embedalign/eval.hpp"
#include "embedalign/models.hpp"
#include "embedalign/nn.hpp"
#include "embedalign/pipeline.hpp"
#include "embedalign/synth.hpp"
#include "gradcheck_util.hpp"

using namespace embedalign;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
    std::cout << id << (ok ? " PASS " : " FAIL ") << detail << "\n";
    if (!ok) ++g_failures;
}

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<float>(scale * rng.next_gaussian());
    }
    return m;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// ---- A1: gradient correctness over >= 100 random shapes, < 10 s ----
void run_a1() {
    const auto t0 = Clock::now();
    RngStream rng(101, "accept");
    std::size_t shapes = 0, bad = 0;

    auto check_entry = [&](double analytic, double fd) {
        if (!ea_test::grad_close(analytic, fd)) ++bad;
    };

    for (int trial = 0; trial < 40; ++trial) {
        // linear + mse (checks weight, bias and input grads)
        {
            std::size_t in = 2 + rng.next_index(5), out = 2 + rng.next_index(5),
                        batch = 1 + rng.next_index(4);
            LinearLayer layer(out, in);
            layer.weight = random_matrix(out, in, rng);
            for (auto& b : layer.bias) b = static_cast<float>(rng.next_gaussian());
            Matrix x = random_matrix(batch, in, rng);
            Matrix target = random_matrix(batch, out, rng);
            auto loss_fn = [&]() {
                ForwardCache c;
                return mse_loss(layer.forward(x, c), target).loss;
            };
            ForwardCache cache;
            LossResult l = mse_loss(layer.forward(x, cache), target);
            layer.zero_grad();
            Matrix gx = layer.backward(l.grad, cache);
            check_entry(layer.grad_weight.data()[0], ea_test::fd_grad(&layer.weight.data()[0], loss_fn));
            check_entry(layer.grad_bias[0], ea_test::fd_grad(&layer.bias[0], loss_fn));
            check_entry(gx.data()[0], ea_test::fd_grad(&x.data()[0], loss_fn));
            ++shapes;
        }
        // relu chain
        {
            std::size_t n = 1 + rng.next_index(3), d = 2 + rng.next_index(6);
            Matrix x = random_matrix(n, d, rng);
            Matrix target = random_matrix(n, d, rng);
            auto loss_fn = [&]() { return mse_loss(relu(x), target).loss; };
            LossResult l = mse_loss(relu(x), target);
            Matrix gx = relu_backward(x, l.grad);
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (std::abs(x.data()[i]) < 2e-3) continue;  // FD breaks at the kink
                check_entry(gx.data()[i], ea_test::fd_grad(&x.data()[i], loss_fn));
            }
            ++shapes;
        }
        // softmax cross entropy
        {
            std::size_t n = 1 + rng.next_index(4), c = 2 + rng.next_index(4);
            Matrix logits = random_matrix(n, c, rng, 2.0);
            std::vector<std::uint32_t> labels(n);
            for (auto& l : labels) l = static_cast<std::uint32_t>(rng.next_index(c));
            auto loss_fn = [&]() { return softmax_cross_entropy(logits, labels).loss; };
            LossResult l = softmax_cross_entropy(logits, labels);
            for (std::size_t i = 0; i < logits.size(); ++i) {
                check_entry(l.grad.data()[i], ea_test::fd_grad(&logits.data()[i], loss_fn));
            }
            ++shapes;
        }
        // dropout in eval mode is the identity map (gradient 1 per element)
        {
            std::size_t n = 1 + rng.next_index(3), d = 2 + rng.next_index(6);
            Matrix x = random_matrix(n, d, rng);
            Matrix target = random_matrix(n, d, rng);
            RngStream drop(1, "drop");
            auto loss_fn = [&]() {
                RngStream r2(1, "drop");
                Matrix y = dropout_forward(x, 0.5f, Mode::Eval, r2, nullptr);
                return mse_loss(y, target).loss;
            };
            Matrix y = dropout_forward(x, 0.5f, Mode::Eval, drop, nullptr);
            LossResult l = mse_loss(y, target);
            for (std::size_t i = 0; i < x.size(); ++i) {
                check_entry(l.grad.data()[i], ea_test::fd_grad(&x.data()[i], loss_fn));
            }
            ++shapes;
        }
    }
    double secs = elapsed(t0);
    bool ok = bad == 0 && shapes >= 100 && secs < 10.0;
    report("A1", ok,
           "gradient check: " + std::to_string(shapes) + " shapes, " + std::to_string(bad) +
               " mismatches, " + std::to_string(secs) + " s");
}

// ---- A2: AdamW single-step oracle ----
void run_a2() {
    // theta=1, g=0.5, lr=1e-3, betas 0.9/0.999, eps=1e-8, wd=0.01:
    // m=0.05, mhat=0.5; v=2.5e-4, vhat=0.25
    // theta' = 1 - 1e-3*0.01*1 - 1e-3*0.5/(sqrt(0.25)+1e-8)
    const double expect = 1.0 - 1e-5 - 1e-3 * 0.5 / (0.5 + 1e-8);
    float theta = 1.0f, grad = 0.5f;
    AdamW opt({1e-3, 0.9, 0.999, 1e-8, 0.01}, {1});
    opt.step({{&theta, &grad, 1}});
    bool step_ok = std::abs(theta - expect) <= 1e-6;

    float theta2 = 0.73f, zero = 0.0f;
    AdamW opt2({1e-3, 0.9, 0.999, 1e-8, 0.0}, {1});
    opt2.step({{&theta2, &zero, 1}});
    bool ident_ok = theta2 == 0.73f;

    report("A2", step_ok && ident_ok,
           "adamw step " + std::to_string(theta) + " vs " + std::to_string(expect) +
               (ident_ok ? ", zero-grad/zero-wd identity holds" : ", identity violated"));
}

struct AcceptWorld {
    SplitWorld world;
    TrainConfig aligner_cfg;
    TrainConfig task_cfg;
};

AcceptWorld make_accept_world() {
    OracleSpec spec;  // d=64, 4000 pairs, 3 classes, tanh, sigma 0.05, seed 7
    AcceptWorld a{generate_split_world(spec, 2000, 1000), TrainConfig::aligner_defaults(),
                  TrainConfig::task_defaults()};
    a.aligner_cfg.lr = 1e-3;
    a.aligner_cfg.batch_size = 16;
    a.aligner_cfg.patience = 10;
    a.aligner_cfg.max_epochs = 150;
    a.aligner_cfg.seed = 7;
    a.task_cfg.lr = 1e-3;
    a.task_cfg.patience = 10;
    a.task_cfg.max_epochs = 60;
    a.task_cfg.seed = 7;
    return a;
}

}  // namespace

int main() {
    std::cout.setf(std::ios::fixed);
    std::cout.precision(6);

    run_a1();
    run_a2();

    AcceptWorld acc = make_accept_world();
    SplitWorld& w = acc.world;

    // ---- A3: alignment gain on held-out pairs, < 3 min ----
    const auto t3 = Clock::now();
    auto [aligner, step2] = train_aligner(w.parallel, Arch::Fc, acc.aligner_cfg);
    {
        // held-out pairs: the task-train rows and their target-space twins,
        // never seen during Step 2
        Matrix aligned = aligner.forward(w.task_train.embeddings, Mode::Eval);
        CosineReport rep =
            cosine_report(w.task_train.embeddings, w.task_train_native, aligned);
        double secs = elapsed(t3);
        bool ok = rep.tgt_vs_aligned_mean >= rep.tgt_vs_src_mean + 0.15 && secs < 180.0;
        report("A3", ok,
               "cos(tgt,aligned) " + std::to_string(rep.tgt_vs_aligned_mean) +
                   " vs cos(tgt,src) " + std::to_string(rep.tgt_vs_src_mean) + " (+0.15 required), " +
                   std::to_string(secs) + " s");
    }

    // ---- A4: transfer ordering no-aligner + 0.05 <= aligner <= native + 0.02 ----
    double acc_plain = 0.0, acc_aligned = 0.0, acc_native = 0.0;
    {
        auto [head_plain, r1] = train_task(w.task_train, nullptr, acc.task_cfg);
        acc_plain = accuracy(infer(w.task_test.embeddings, nullptr, head_plain).labels,
                             w.task_test.labels);

        auto [head_aligned, r2] = train_task(w.task_train, &aligner, acc.task_cfg);
        acc_aligned = accuracy(infer(w.task_test.embeddings, nullptr, head_aligned).labels,
                               w.task_test.labels);

        LabeledEmbeddingSet native{w.task_train_native, w.task_train.labels,
                                   w.task_train.num_classes};
        auto [head_native, r3] = train_task(native, nullptr, acc.task_cfg);
        acc_native = accuracy(infer(w.task_test.embeddings, nullptr, head_native).labels,
                              w.task_test.labels);

        bool ok = acc_plain + 0.05 <= acc_aligned && acc_aligned <= acc_native + 0.02;
        report("A4", ok,
               "transfer ordering: no-aligner " + std::to_string(acc_plain) + " + 0.05 <= aligned " +
                   std::to_string(acc_aligned) + " <= native " + std::to_string(acc_native) +
                   " + 0.02");

        // ---- A5: reverse aligner + source-side head beats the baseline ----
        TrainConfig rev_cfg = acc.aligner_cfg;
        rev_cfg.direction = Direction::Reverse;
        auto [rev_aligner, rrep] = train_aligner(w.parallel, Arch::Fc, rev_cfg);
        double acc_rev =
            accuracy(infer(w.task_test.embeddings, &rev_aligner, head_plain).labels,
                     w.task_test.labels);
        bool ok5 = acc_rev >= acc_plain + 0.05;
        report("A5", ok5,
               "reverse transfer " + std::to_string(acc_rev) + " vs baseline " +
                   std::to_string(acc_plain) + " (+0.05 required)");
    }

    // ---- A6: omission ablation, identity trails the trained aligner ----
    {
        bool ok = acc_aligned - acc_plain >= 0.03;
        report("A6", ok,
               "identity-aligner " + std::to_string(acc_plain) + " vs fc " +
                   std::to_string(acc_aligned) + " (gap >= 0.03 required)");
    }

    // ---- A7: data-share ablation, shared vs disjoint nearly identical ----
    {
        ParallelEmbeddingSet shared_pairs{w.task_train.embeddings, w.task_train_native};
        auto [shared_aligner, srep] = train_aligner(shared_pairs, Arch::Fc, acc.aligner_cfg);
        auto [head_shared, hrep] = train_task(w.task_train, &shared_aligner, acc.task_cfg);
        double acc_shared =
            accuracy(infer(w.task_test.embeddings, nullptr, head_shared).labels,
                     w.task_test.labels);
        bool ok = std::abs(acc_shared - acc_aligned) <= 0.03;
        report("A7", ok,
               "shared " + std::to_string(acc_shared) + " vs disjoint " +
                   std::to_string(acc_aligned) + " (|gap| <= 0.03 required)");
    }

    // ---- A8: determinism & persistence ----
    {
        OracleSpec spec;
        spec.dim = 12;
        spec.pairs = 200;
        spec.classes = 2;
        spec.kind = TransformKind::Linear;
        spec.sigma = 0.01;
        spec.seed = 11;
        SplitWorld small = generate_split_world(spec, 80, 40);
        std::string dir = (fs::temp_directory_path() / "ea_accept_a8").string();
        fs::remove_all(dir);
        std::string mp = write_world_files(small, dir + "/data", false);
        DatasetManifest manifest = DatasetManifest::load(mp);

        TrainConfig acfg = TrainConfig::aligner_defaults();
        acfg.lr = 1e-3;
        acfg.max_epochs = 8;
        acfg.seed = 11;
        TrainConfig tcfg = TrainConfig::task_defaults();
        tcfg.lr = 1e-3;
        tcfg.max_epochs = 8;
        tcfg.seed = 11;
        run_pipeline(manifest, Arch::Fc, acfg, tcfg, dir + "/run1");
        run_pipeline(manifest, Arch::Fc, acfg, tcfg, dir + "/run2");
        bool runs_ok = slurp(dir + "/run1/aligner.lamd") == slurp(dir + "/run2/aligner.lamd") &&
                       slurp(dir + "/run1/head.lamd") == slurp(dir + "/run2/head.lamd") &&
                       slurp(dir + "/run1/eval.json") == slurp(dir + "/run2/eval.json");

        LoadedCheckpoint lc = load_checkpoint(dir + "/run1/aligner.lamd");
        save_checkpoint(lc.model, dir + "/resaved.lamd", lc.metadata);
        bool ckpt_ok = slurp(dir + "/run1/aligner.lamd") == slurp(dir + "/resaved.lamd");

        save_embeddings(small.parallel.source, dir + "/rt.embd");
        bool embd_ok = load_embeddings(dir + "/rt.embd") == small.parallel.source;
        fs::remove_all(dir);

        report("A8", runs_ok && ckpt_ok && embd_ok,
               std::string("two runs byte-identical: ") + (runs_ok ? "yes" : "no") +
                   ", checkpoint round trip: " + (ckpt_ok ? "yes" : "no") +
                   ", embedding round trip: " + (embd_ok ? "yes" : "no"));
    }

    // ---- A9: architecture fidelity at d = 768 ----
    {
        auto fc = Model::layer_dims(Arch::Fc, 768, 0);
        auto ae = Model::layer_dims(Arch::Ae, 768, 0);
        bool dims_ok = fc == std::vector<std::size_t>{768, 1024, 512, 256, 512, 1024, 768} &&
                       ae == std::vector<std::size_t>{768, 512, 256, 128, 256, 512, 768};
        auto count = [](const std::vector<std::size_t>& dims) {
            std::size_t total = 0;
            for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
                total += dims[i] * dims[i + 1] + dims[i + 1];
            }
            return total;
        };
        RngStream r1(1, "init"), r2(1, "init");
        bool counts_ok = Model::make(Arch::Fc, 768, 0, r1).total_param_count() == count(fc) &&
                         Model::make(Arch::Ae, 768, 0, r2).total_param_count() == count(ae);
        report("A9", dims_ok && counts_ok,
               "fc 768/1024/512/256 and ae 768/512/256/128 dimension sequences with matching "
               "parameter counts");
    }

    std::cout << (g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << " ("
              << (9 - g_failures) << "/9)\n";
    return g_failures == 0 ? 0 : 1;
}
