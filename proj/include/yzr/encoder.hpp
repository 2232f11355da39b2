#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "yzr/chardomain.hpp"

namespace yzr {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EncoderConfig {
    int alphabet_size = kAlphabetSize;
    int embed_dim = 32;
    int hidden_dim = 128;
    int num_layers = 3;
    int proj_dim = 64;
    float dropout_rate = 0.2f;
    int seq_len = kSeqLen;
    float bn_momentum = 0.1f;
    float bn_eps = 1e-5f;

    /// Fixed architecture: 3 recurrent layers, 64-d output, 31 symbols, 24 steps.
    void validate() const;
    /// Trainable scalars only (running batch-norm statistics excluded).
    std::size_t parameter_count() const;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Gate blocks are laid out [input | forget | candidate | output] along the
// 4*hidden_dim axis.
template <typename T>
struct LstmLayer {
    Matrix<T> w_input;   // [in x 4H]
    Matrix<T> w_hidden;  // [H x 4H]
    Matrix<T> bias;      // [1 x 4H]
};

template <typename T>
struct EncoderParams {
    EncoderConfig config;
    Matrix<T> embedding;  // [alphabet x E]
    std::vector<LstmLayer<T>> layers;
    Matrix<T> bn_gamma, bn_beta;                 // [1 x H]
    Matrix<T> bn_running_mean, bn_running_var;   // [1 x H], not trained
    Matrix<T> proj_weight;                       // [H x P]
    Matrix<T> proj_bias;                         // [1 x P]

    static EncoderParams zeros(const EncoderConfig& cfg);
    static EncoderParams initialize(const EncoderConfig& cfg, std::uint64_t seed);

    /// f(name, tensor, trainable) over every tensor in a fixed order.
    template <typename F>
    void visit(F&& f) {
        f(std::string("embedding"), embedding, true);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "lstm" + std::to_string(l) + ".";
            f(p + "w_input", layers[l].w_input, true);
            f(p + "w_hidden", layers[l].w_hidden, true);
            f(p + "bias", layers[l].bias, true);
        }
        f(std::string("bn.gamma"), bn_gamma, true);
        f(std::string("bn.beta"), bn_beta, true);
        f(std::string("bn.running_mean"), bn_running_mean, false);
        f(std::string("bn.running_var"), bn_running_var, false);
        f(std::string("proj.weight"), proj_weight, true);
        f(std::string("proj.bias"), proj_bias, true);
    }
    template <typename F>
    void visit(F&& f) const {
        const_cast<EncoderParams*>(this)->visit(
            [&](const std::string& name, Matrix<T>& t, bool trainable) { f(name, static_cast<const Matrix<T>&>(t), trainable); });
    }

    template <typename U>
    EncoderParams<U> cast() const;

    bool all_finite() const;
};

template <typename T>
template <typename U>
EncoderParams<U> EncoderParams<T>::cast() const {
    EncoderParams<U> out;
    out.config = config;
    out.embedding = embedding.template cast<U>();
    for (const auto& l : layers) {
        out.layers.push_back({l.w_input.template cast<U>(), l.w_hidden.template cast<U>(), l.bias.template cast<U>()});
    }
    out.bn_gamma = bn_gamma.template cast<U>();
    out.bn_beta = bn_beta.template cast<U>();
    out.bn_running_mean = bn_running_mean.template cast<U>();
    out.bn_running_var = bn_running_var.template cast<U>();
    out.proj_weight = proj_weight.template cast<U>();
    out.proj_bias = proj_bias.template cast<U>();
    return out;
}

enum class EncoderMode { Train, Infer };

struct ForwardOptions {
    bool batch_statistics = false;  // batch-norm from the batch instead of running stats
    bool dropout = false;
    std::uint64_t dropout_seed = 0;

    static ForwardOptions train(std::uint64_t seed) { return {true, true, seed}; }
    static ForwardOptions infer() { return {false, false, 0}; }
    /// Train-style normalization without dropout (validation loss).
    static ForwardOptions evaluation() { return {true, false, 0}; }
    static ForwardOptions for_mode(EncoderMode mode, std::uint64_t seed = 0) {
        return mode == EncoderMode::Train ? train(seed) : infer();
    }
};

/// Embedding -> stacked LSTM over all 24 steps -> batch-norm -> dropout ->
/// ReLU(dense) to proj_dim. Holds the activations of the last forward pass so
/// backward() can run BPTT over them; one instance per training loop.
template <typename T>
class Encoder {
public:
    Matrix<T> forward(const EncoderParams<T>& params, std::span<const CharSeq> batch, const ForwardOptions& opts);
    Matrix<T> forward(const EncoderParams<T>& params, std::span<const CharSeq> batch, EncoderMode mode,
                      std::uint64_t dropout_seed = 0) {
        return forward(params, batch, ForwardOptions::for_mode(mode, dropout_seed));
    }

    /// Gradients of sum(upstream .* output) for every tensor; running
    /// statistics come back zero. Throws StaleCache unless the last forward
    /// saw exactly this batch.
    EncoderParams<T> backward(const EncoderParams<T>& params, std::span<const CharSeq> batch,
                              const Matrix<T>& upstream) const;

    /// Folds the last forward's batch statistics into the running averages.
    void commit_running_stats(EncoderParams<T>& params) const;

    bool has_cache() const { return cached_; }

private:
    struct LayerCache {
        Matrix<T> input;      // [steps*B x in]
        Matrix<T> gates;      // activated gates [steps*B x 4H]
        Matrix<T> cell;       // [steps*B x H]
        Matrix<T> cell_tanh;  // [steps*B x H]
        Matrix<T> hidden;     // [steps*B x H]
    };

    bool cached_ = false;
    ForwardOptions opts_;
    std::vector<CharSeq> batch_;
    std::vector<LayerCache> layers_;
    Matrix<T> last_hidden_;   // y [B x H]
    Matrix<T> batch_mean_, batch_var_, inv_std_;
    Matrix<T> xhat_;          // [B x H]
    Matrix<T> mask_;          // dropout multipliers [B x H]
    Matrix<T> dropped_;       // [B x H]
    Matrix<T> pre_relu_;      // [B x P]
};

/// Inference-mode embeddings (running statistics, no dropout). Reentrant.
template <typename T>
Matrix<T> embed(const EncoderParams<T>& params, std::span<const CharSeq> batch);

extern template struct EncoderParams<float>;
extern template struct EncoderParams<double>;
extern template class Encoder<float>;
extern template class Encoder<double>;
extern template Matrix<float> embed(const EncoderParams<float>&, std::span<const CharSeq>);
extern template Matrix<double> embed(const EncoderParams<double>&, std::span<const CharSeq>);

}  // namespace yzr
