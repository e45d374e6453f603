#pragma once

#include <cstdint>
#include <vector>

#include "embedalign/kernels.hpp"
#include "embedalign/matrix.hpp"
#include "embedalign/rng.hpp"

namespace embedalign {

enum class Mode { Train, Eval };

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Input cached by forward, consumed by backward.
struct ForwardCache {
    Matrix input;
    bool valid = false;
};

// Fully connected layer, y = x*W^T + b. Weight is out x in.
struct LinearLayer {
    Matrix weight;
    std::vector<float> bias;
    Matrix grad_weight;
    std::vector<float> grad_bias;

    LinearLayer() = default;
    LinearLayer(std::size_t out_dim, std::size_t in_dim)
        : weight(out_dim, in_dim),
          bias(out_dim, 0.0f),
          grad_weight(out_dim, in_dim),
          grad_bias(out_dim, 0.0f) {}

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    std::size_t param_count() const { return weight.size() + bias.size(); }

    Matrix forward(const Matrix& x, ForwardCache& cache) const;
    // Accumulates grad_weight/grad_bias, returns grad wrt the input.
    Matrix backward(const Matrix& grad_out, ForwardCache& cache);
    void zero_grad();
};

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& grad_out);

Matrix tanh_forward(const Matrix& x);
// y is the forward output: grad * (1 - y^2)
Matrix tanh_backward(const Matrix& y, const Matrix& grad_out);

// Inverted dropout: eval mode is the identity, train mode zeroes with
// probability p and scales survivors by 1/(1-p). Mask is drawn row-major,
// one uniform per element.
Matrix dropout_forward(const Matrix& x, float p, Mode mode, RngStream& rng,
                       std::vector<std::uint8_t>* mask_out);
Matrix dropout_backward(const Matrix& grad_out, float p,
                        const std::vector<std::uint8_t>& mask);

struct LossResult {
    double loss = 0.0;
    Matrix grad;
};

// Mean over all elements of (pred-target)^2.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

// Row-wise log-sum-exp stabilized cross entropy; grad = (softmax - onehot)/rows.
LossResult softmax_cross_entropy(const Matrix& logits,
                                 const std::vector<std::uint32_t>& labels);

// a.b / (|a||b|); a zero vector yields 0 and sets *zero_flag when given.
double cosine_similarity(const float* a, const float* b, std::size_t n,
                         bool* zero_flag = nullptr);

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct ParamRef {
    float* param;
    const float* grad;
    std::size_t size;
};

// Decoupled weight decay Adam over a fixed list of parameter tensors.
class AdamW {
public:
    AdamW(AdamWConfig cfg, const std::vector<std::size_t>& sizes);

    // Throws TrainingError on non-finite gradients (message names the tensor).
    void step(const std::vector<ParamRef>& params);

    std::uint64_t step_count() const { return t_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
};

}  // namespace embedalign
