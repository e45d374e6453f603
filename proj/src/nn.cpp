#include "embedalign/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "embedalign/errors.hpp"

namespace embedalign {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_str() + " x " + b.shape_str());
    }
    Matrix c(a.rows(), b.cols());
    kern::matmul_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix LinearLayer::forward(const Matrix& x, ForwardCache& cache) const {
    if (x.cols() != in_dim()) {
        throw DimensionError("linear_forward: input " + x.shape_str() +
                             " vs weight " + weight.shape_str());
    }
    cache.input = x;
    cache.valid = true;
    Matrix wt = transpose(weight);
    Matrix y(x.rows(), out_dim());
    kern::matmul_nn(x.data(), wt.data(), y.data(), x.rows(), in_dim(), out_dim());
    kern::add_bias(y.data(), bias.data(), y.rows(), y.cols());
    return y;
}

Matrix LinearLayer::backward(const Matrix& grad_out, ForwardCache& cache) {
    if (!cache.valid) {
        throw StateError("linear_backward: no matching forward cache");
    }
    const Matrix& x = cache.input;
    if (grad_out.rows() != x.rows() || grad_out.cols() != out_dim()) {
        throw DimensionError("linear_backward: grad " + grad_out.shape_str() +
                             " vs expected " + std::to_string(x.rows()) + "x" +
                             std::to_string(out_dim()));
    }
    // grad_weight += grad_out^T * x
    Matrix gt = transpose(grad_out);
    Matrix gw(out_dim(), in_dim());
    kern::matmul_nn(gt.data(), x.data(), gw.data(), out_dim(), x.rows(), in_dim());
    for (std::size_t i = 0; i < gw.size(); ++i) grad_weight.data()[i] += gw.data()[i];
    // grad_bias += column sums of grad_out
    std::vector<float> gb(out_dim());
    kern::colsum(grad_out.data(), gb.data(), grad_out.rows(), grad_out.cols());
    for (std::size_t i = 0; i < gb.size(); ++i) grad_bias[i] += gb[i];
    // grad_in = grad_out * W
    Matrix gi(x.rows(), in_dim());
    kern::matmul_nn(grad_out.data(), weight.data(), gi.data(), grad_out.rows(),
                    out_dim(), in_dim());
    cache.valid = false;
    return gi;
}

void LinearLayer::zero_grad() {
    std::fill(grad_weight.data(), grad_weight.data() + grad_weight.size(), 0.0f);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0f);
}

Matrix relu(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    kern::relu_fwd(x.data(), y.data(), x.size());
    return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& grad_out) {
    require_same_shape(x, grad_out, "relu_backward");
    Matrix gx(x.rows(), x.cols());
    kern::relu_bwd(x.data(), grad_out.data(), gx.data(), x.size());
    return gx;
}

Matrix tanh_forward(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y.data()[i] = static_cast<float>(std::tanh(static_cast<double>(x.data()[i])));
    }
    return y;
}

Matrix tanh_backward(const Matrix& y, const Matrix& grad_out) {
    require_same_shape(y, grad_out, "tanh_backward");
    Matrix gx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double yi = y.data()[i];
        gx.data()[i] = static_cast<float>(grad_out.data()[i] * (1.0 - yi * yi));
    }
    return gx;
}

Matrix dropout_forward(const Matrix& x, float p, Mode mode, RngStream& rng,
                       std::vector<std::uint8_t>* mask_out) {
    if (p < 0.0f || p >= 1.0f) {
        throw ParameterError("dropout probability must be in [0, 1), got " +
                             std::to_string(p));
    }
    if (mode == Mode::Eval) {
        if (mask_out) mask_out->assign(x.size(), 1);
        return x;
    }
    const float scale = 1.0f / (1.0f - p);
    Matrix y(x.rows(), x.cols());
    if (mask_out) mask_out->assign(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool keep = rng.next_double() >= p;
        y.data()[i] = keep ? x.data()[i] * scale : 0.0f;
        if (mask_out && keep) (*mask_out)[i] = 1;
    }
    return y;
}

Matrix dropout_backward(const Matrix& grad_out, float p,
                        const std::vector<std::uint8_t>& mask) {
    if (mask.size() != grad_out.size()) {
        throw StateError("dropout_backward: mask size does not match gradient");
    }
    const float scale = 1.0f / (1.0f - p);
    Matrix gx(grad_out.rows(), grad_out.cols());
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        gx.data()[i] = mask[i] ? grad_out.data()[i] * scale : 0.0f;
    }
    return gx;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "mse_loss");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double acc = 0.0;
    LossResult r;
    r.grad = Matrix(pred.rows(), pred.cols());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data()[i]) -
                         static_cast<double>(target.data()[i]);
        acc += d * d;
        r.grad.data()[i] = static_cast<float>(2.0 * d * inv_n);
    }
    r.loss = acc * inv_n;
    return r;
}

LossResult softmax_cross_entropy(const Matrix& logits,
                                 const std::vector<std::uint32_t>& labels) {
    if (labels.size() != logits.rows()) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(logits.rows()) + " rows");
    }
    const std::size_t rows = logits.rows();
    const std::size_t cols = logits.cols();
    const double inv_rows = 1.0 / static_cast<double>(rows);
    LossResult r;
    r.grad = Matrix(rows, cols);
    double loss_acc = 0.0;
    std::vector<double> exps(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (labels[i] >= cols) {
            throw DataError("label " + std::to_string(labels[i]) + " out of range at row " +
                            std::to_string(i) + " (num classes " + std::to_string(cols) + ")");
        }
        const float* row = logits.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            exps[j] = std::exp(static_cast<double>(row[j]) - mx);
            sum += exps[j];
        }
        loss_acc += std::log(sum) - (static_cast<double>(row[labels[i]]) - mx);
        float* grow = r.grad.row(i);
        for (std::size_t j = 0; j < cols; ++j) {
            double sm = exps[j] / sum;
            double oh = (j == labels[i]) ? 1.0 : 0.0;
            grow[j] = static_cast<float>((sm - oh) * inv_rows);
        }
    }
    r.loss = loss_acc * inv_rows;
    return r;
}

double cosine_similarity(const float* a, const float* b, std::size_t n, bool* zero_flag) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) {
        if (zero_flag) *zero_flag = true;
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

AdamW::AdamW(AdamWConfig cfg, const std::vector<std::size_t>& sizes) : cfg_(cfg) {
    m_.reserve(sizes.size());
    v_.reserve(sizes.size());
    for (std::size_t s : sizes) {
        m_.emplace_back(s, 0.0f);
        v_.emplace_back(s, 0.0f);
    }
}

void AdamW::step(const std::vector<ParamRef>& params) {
    if (params.size() != m_.size()) {
        throw DimensionError("adamw_step: " + std::to_string(params.size()) +
                             " tensors, optimizer registered " + std::to_string(m_.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size != m_[i].size()) {
            throw DimensionError("adamw_step: tensor #" + std::to_string(i) +
                                 " size mismatch");
        }
        for (std::size_t j = 0; j < params[i].size; ++j) {
            if (!std::isfinite(params[i].grad[j])) {
                throw TrainingError("non-finite gradient in parameter tensor #" +
                                    std::to_string(i));
            }
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        kern::adamw_update(params[i].param, params[i].grad, m_[i].data(), v_[i].data(),
                           params[i].size, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps,
                           cfg_.weight_decay, bc1, bc2);
    }
}

}  // namespace embedalign
