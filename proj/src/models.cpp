#include "embedalign/models.hpp"

#include <cmath>

#include "embedalign/errors.hpp"

namespace embedalign {

Arch arch_from_string(const std::string& s) {
    if (s == "fc") return Arch::Fc;
    if (s == "ae") return Arch::Ae;
    if (s == "identity") return Arch::Identity;
    if (s == "head") return Arch::Head;
    throw ParameterError("unknown architecture: " + s);
}

const char* arch_to_string(Arch a) {
    switch (a) {
        case Arch::Fc: return "fc";
        case Arch::Ae: return "ae";
        case Arch::Identity: return "identity";
        case Arch::Head: return "head";
    }
    return "?";
}

namespace {

std::size_t scaled(std::size_t d, double num, double den) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(d) * num / den));
}

void check_dims(const std::vector<std::size_t>& dims) {
    for (std::size_t w : dims) {
        if (w < 1) throw ParameterError("dim too small: a layer width rounds to 0");
    }
}

}  // namespace

std::vector<std::size_t> Model::layer_dims(Arch arch, std::size_t dim,
                                           std::size_t classes) {
    if (dim < 2) throw ParameterError("dim must be >= 2");
    switch (arch) {
        case Arch::Fc: {
            std::size_t h1 = scaled(dim, 4, 3);
            std::size_t h2 = scaled(dim, 2, 3);
            std::size_t h3 = scaled(dim, 1, 3);
            std::vector<std::size_t> dims{dim, h1, h2, h3, h2, h1, dim};
            check_dims(dims);
            return dims;
        }
        case Arch::Ae: {
            std::size_t h = scaled(dim, 2, 3);
            std::size_t h2 = h / 2;
            std::size_t h4 = h / 4;
            std::vector<std::size_t> dims{dim, h, h2, h4, h2, h, dim};
            check_dims(dims);
            return dims;
        }
        case Arch::Identity:
            return {dim, dim};
        case Arch::Head: {
            if (classes < 2) throw ParameterError("head requires classes >= 2");
            return {dim, dim, classes};
        }
    }
    throw ParameterError("bad arch");
}

Model make_model_uninitialized(Arch arch, std::size_t dim, std::size_t classes) {
    Model m;
    m.arch_ = arch;
    m.dim_ = dim;
    m.classes_ = (arch == Arch::Head) ? classes : 0;
    m.dropout_p_ = (arch == Arch::Fc) ? 0.5f : (arch == Arch::Head ? 0.1f : 0.0f);
    auto dims = Model::layer_dims(arch, dim, classes);
    if (arch != Arch::Identity) {
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            m.layers_.emplace_back(dims[i + 1], dims[i]);
        }
    }
    m.lin_cache_.resize(m.layers_.size());
    return m;
}

Model Model::make(Arch arch, std::size_t dim, std::size_t classes, RngStream& rng) {
    Model m = make_model_uninitialized(arch, dim, classes);
    // He-uniform for layers feeding a ReLU, Xavier-uniform for the last layer
    // of each model and for the tanh layer of the head. Biases start at zero.
    const std::size_t n_layers = m.layers_.size();
    for (std::size_t li = 0; li < n_layers; ++li) {
        LinearLayer& l = m.layers_[li];
        bool feeds_relu = (arch == Arch::Fc || arch == Arch::Ae) && li + 1 < n_layers;
        double bound = feeds_relu
                           ? std::sqrt(6.0 / static_cast<double>(l.in_dim()))
                           : std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
        for (std::size_t i = 0; i < l.weight.size(); ++i) {
            l.weight.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
        }
    }
    return m;
}

Matrix Model::forward(const Matrix& x, Mode mode, RngStream* dropout_rng) {
    if (x.cols() != dim_) {
        throw DimensionError("model forward: input " + x.shape_str() + ", expected cols " +
                             std::to_string(dim_));
    }
    if (arch_ == Arch::Identity) {
        tape_valid_ = true;
        tape_mode_ = mode;
        return x;
    }
    if (mode == Mode::Train && dropout_p_ > 0.0f && dropout_rng == nullptr) {
        throw StateError("train-mode forward needs a dropout rng");
    }
    tape_mode_ = mode;
    tape_valid_ = true;

    if (arch_ == Arch::Head) {
        act_in_.assign(1, Matrix());
        drop_mask_.assign(1, {});
        Matrix a1 = layers_[0].forward(x, lin_cache_[0]);
        Matrix t1 = tanh_forward(a1);
        act_in_[0] = t1;  // tanh backward wants the output
        Matrix d1 = (mode == Mode::Train)
                        ? dropout_forward(t1, dropout_p_, mode, *dropout_rng, &drop_mask_[0])
                        : t1;
        return layers_[1].forward(d1, lin_cache_[1]);
    }

    // fc / ae: six linear layers. ReLU after all but the last; fc additionally
    // drops after the ReLUs of layers 1, 2 and 4 (mask slots 0..2).
    const bool is_fc = arch_ == Arch::Fc;
    act_in_.assign(5, Matrix());
    drop_mask_.assign(3, {});
    Matrix h = x;
    std::size_t mask_slot = 0;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        h = layers_[li].forward(h, lin_cache_[li]);
        if (li + 1 == layers_.size()) break;
        act_in_[li] = h;
        h = relu(h);
        bool drops_here = is_fc && (li == 0 || li == 1 || li == 3);
        if (drops_here) {
            if (mode == Mode::Train) {
                h = dropout_forward(h, dropout_p_, mode, *dropout_rng, &drop_mask_[mask_slot]);
            }
            ++mask_slot;
        }
    }
    return h;
}

Matrix Model::backward(const Matrix& grad_out) {
    if (!tape_valid_ || tape_mode_ != Mode::Train) {
        throw StateError("backward without a preceding train-mode forward");
    }
    tape_valid_ = false;
    if (arch_ == Arch::Identity) return grad_out;

    if (arch_ == Arch::Head) {
        Matrix g = layers_[1].backward(grad_out, lin_cache_[1]);
        if (!drop_mask_[0].empty()) g = dropout_backward(g, dropout_p_, drop_mask_[0]);
        g = tanh_backward(act_in_[0], g);
        return layers_[0].backward(g, lin_cache_[0]);
    }

    const bool is_fc = arch_ == Arch::Fc;
    Matrix g = grad_out;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        g = layers_[li].backward(g, lin_cache_[li]);
        if (li == 0) break;
        bool dropped = is_fc && (li - 1 == 0 || li - 1 == 1 || li - 1 == 3);
        if (dropped) {
            std::size_t slot = (li - 1 == 0) ? 0 : (li - 1 == 1 ? 1 : 2);
            if (!drop_mask_[slot].empty()) g = dropout_backward(g, dropout_p_, drop_mask_[slot]);
        }
        g = relu_backward(act_in_[li - 1], g);
    }
    return g;
}

void Model::zero_grad() {
    for (auto& l : layers_) l.zero_grad();
}

std::vector<ParamRef> Model::param_refs() {
    std::vector<ParamRef> out;
    for (auto& l : layers_) {
        out.push_back({l.weight.data(), l.grad_weight.data(), l.weight.size()});
        out.push_back({l.bias.data(), l.grad_bias.data(), l.bias.size()});
    }
    return out;
}

std::vector<std::size_t> Model::param_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& l : layers_) {
        out.push_back(l.weight.size());
        out.push_back(l.bias.size());
    }
    return out;
}

std::size_t Model::total_param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.param_count();
    return n;
}

}  // namespace embedalign
