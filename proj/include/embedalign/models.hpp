#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embedalign/nn.hpp"

namespace embedalign {

enum class Arch { Fc, Ae, Identity, Head };

Arch arch_from_string(const std::string& s);
const char* arch_to_string(Arch a);

// One model covers both aligner variants, the identity ablation, and the
// classification head. Layer widths scale with the input dim:
//   fc:   d -> 4d/3 -> 2d/3 -> d/3 -> 2d/3 -> 4d/3 -> d, dropout 0.5 after
//         the ReLUs of layers 1, 2 and 4
//   ae:   d -> h -> h/2 -> h/4 -> h/2 -> h -> d with h = 2d/3, ReLU after
//         every layer except the last
//   head: d -> d -> C with tanh + dropout 0.1 between
// At d = 768 the fc widths are 768/1024/512/256 and the ae bottleneck 128.
class Model {
public:
    static Model make(Arch arch, std::size_t dim, std::size_t classes, RngStream& rng);

    // Computes the dim sequence (input, hidden..., output) for an arch.
    static std::vector<std::size_t> layer_dims(Arch arch, std::size_t dim,
                                               std::size_t classes);

    Matrix forward(const Matrix& x, Mode mode, RngStream* dropout_rng = nullptr);
    // Requires a preceding train-mode forward; accumulates parameter grads
    // and returns the gradient wrt the input.
    Matrix backward(const Matrix& grad_out);

    void zero_grad();
    std::vector<ParamRef> param_refs();
    std::vector<std::size_t> param_sizes() const;
    std::size_t total_param_count() const;

    Arch arch() const { return arch_; }
    std::size_t dim() const { return dim_; }
    std::size_t classes() const { return classes_; }
    float dropout_p() const { return dropout_p_; }
    std::vector<LinearLayer>& layers() { return layers_; }
    const std::vector<LinearLayer>& layers() const { return layers_; }

private:
    Arch arch_ = Arch::Identity;
    std::size_t dim_ = 0;
    std::size_t classes_ = 0;
    float dropout_p_ = 0.0f;
    std::vector<LinearLayer> layers_;

    // forward tape
    std::vector<ForwardCache> lin_cache_;
    std::vector<Matrix> act_in_;  // relu inputs, or tanh outputs for the head
    std::vector<std::vector<std::uint8_t>> drop_mask_;
    Mode tape_mode_ = Mode::Eval;
    bool tape_valid_ = false;

    friend Model make_model_uninitialized(Arch, std::size_t, std::size_t);
};

// Shell with zero weights, used by checkpoint loading.
Model make_model_uninitialized(Arch arch, std::size_t dim, std::size_t classes);

}  // namespace embedalign
