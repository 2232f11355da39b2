#include "yzr/encoder.hpp"

#include <cmath>
#include <random>

#include "yzr/error.hpp"

namespace yzr {

void EncoderConfig::validate() const {
    if (alphabet_size != kAlphabetSize) throw Error(ErrorCode::InvalidArgument, "alphabet_size must be 31");
    if (seq_len != kSeqLen) throw Error(ErrorCode::InvalidArgument, "seq_len must be 24");
    if (num_layers != 3) throw Error(ErrorCode::InvalidArgument, "num_layers must be 3");
    if (proj_dim != 64) throw Error(ErrorCode::InvalidArgument, "proj_dim must be 64");
    if (embed_dim < 1 || hidden_dim < 1) throw Error(ErrorCode::InvalidArgument, "dimensions must be >= 1");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
        throw Error(ErrorCode::InvalidArgument, "dropout_rate must be in [0, 1)");
    }
    if (!(bn_momentum > 0.0f && bn_momentum <= 1.0f) || !(bn_eps > 0.0f)) {
        throw Error(ErrorCode::InvalidArgument, "invalid batch-norm settings");
    }
}

std::size_t EncoderConfig::parameter_count() const {
    const std::size_t a = static_cast<std::size_t>(alphabet_size);
    const std::size_t e = static_cast<std::size_t>(embed_dim);
    const std::size_t h = static_cast<std::size_t>(hidden_dim);
    const std::size_t p = static_cast<std::size_t>(proj_dim);
    std::size_t n = a * e;
    for (int l = 0; l < num_layers; ++l) {
        const std::size_t in = l == 0 ? e : h;
        n += in * 4 * h + h * 4 * h + 4 * h;
    }
    return n + 2 * h + h * p + p;
}

template <typename T>
EncoderParams<T> EncoderParams<T>::zeros(const EncoderConfig& cfg) {
    EncoderParams p;
    p.config = cfg;
    const int h = cfg.hidden_dim;
    p.embedding = Matrix<T>::Zero(cfg.alphabet_size, cfg.embed_dim);
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int in = l == 0 ? cfg.embed_dim : h;
        p.layers.push_back({Matrix<T>::Zero(in, 4 * h), Matrix<T>::Zero(h, 4 * h), Matrix<T>::Zero(1, 4 * h)});
    }
    p.bn_gamma = Matrix<T>::Zero(1, h);
    p.bn_beta = Matrix<T>::Zero(1, h);
    p.bn_running_mean = Matrix<T>::Zero(1, h);
    p.bn_running_var = Matrix<T>::Zero(1, h);
    p.proj_weight = Matrix<T>::Zero(h, cfg.proj_dim);
    p.proj_bias = Matrix<T>::Zero(1, cfg.proj_dim);
    return p;
}

template <typename T>
EncoderParams<T> EncoderParams<T>::initialize(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    EncoderParams p = zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](Matrix<T>& m, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
    };
    const int h = cfg.hidden_dim;
    fill(p.embedding, std::sqrt(6.0 / (cfg.alphabet_size + cfg.embed_dim)));
    const double recurrent = 1.0 / std::sqrt(static_cast<double>(h));
    for (auto& layer : p.layers) {
        fill(layer.w_input, recurrent);
        fill(layer.w_hidden, recurrent);
        layer.bias.middleCols(h, h).setConstant(T(1));  // forget gate
    }
    p.bn_gamma.setOnes();
    p.bn_running_var.setOnes();
    fill(p.proj_weight, std::sqrt(6.0 / (h + cfg.proj_dim)));
    return p;
}

template <typename T>
bool EncoderParams<T>::all_finite() const {
    bool ok = true;
    visit([&](const std::string&, const Matrix<T>& t, bool) { ok = ok && t.allFinite(); });
    return ok;
}

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    using S = typename Derived::Scalar;
    return (S(1) + (-x).exp()).inverse();
}

void check_batch(std::span<const CharSeq> batch) {
    if (batch.empty()) throw Error(ErrorCode::Shape, "empty batch");
    for (const auto& s : batch) {
        if (s.true_len < 1 || s.true_len > kSeqLen) throw Error(ErrorCode::Shape, "sequence length must be 1..24");
        for (int id : s.ids) {
            if (id < 0 || id >= kAlphabetSize) throw Error(ErrorCode::Shape, "character id out of range");
        }
    }
}

}  // namespace

template <typename T>
Matrix<T> Encoder<T>::forward(const EncoderParams<T>& params, std::span<const CharSeq> batch,
                              const ForwardOptions& opts) {
    check_batch(batch);
    const EncoderConfig& cfg = params.config;
    const int b = static_cast<int>(batch.size());
    const int steps = cfg.seq_len;
    const int h = cfg.hidden_dim;
    const int rows = steps * b;

    cached_ = false;
    opts_ = opts;
    batch_.assign(batch.begin(), batch.end());
    layers_.resize(static_cast<std::size_t>(cfg.num_layers));

    // Row t*B + i holds sample i at step t.
    Matrix<T> input(rows, cfg.embed_dim);
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < b; ++i) input.row(t * b + i) = params.embedding.row(batch[static_cast<std::size_t>(i)].ids[static_cast<std::size_t>(t)]);
    }

    for (int l = 0; l < cfg.num_layers; ++l) {
        const auto& w = params.layers[static_cast<std::size_t>(l)];
        LayerCache& c = layers_[static_cast<std::size_t>(l)];
        c.input = std::move(input);
        c.gates.resize(rows, 4 * h);
        c.cell.resize(rows, h);
        c.cell_tanh.resize(rows, h);
        c.hidden.resize(rows, h);

        Matrix<T> projected = c.input * w.w_input;
        projected.rowwise() += w.bias.row(0);
        Matrix<T> pre(b, 4 * h);
        for (int t = 0; t < steps; ++t) {
            pre = projected.middleRows(t * b, b);
            if (t > 0) pre.noalias() += c.hidden.middleRows((t - 1) * b, b) * w.w_hidden;
            auto gates = c.gates.middleRows(t * b, b);
            gates.leftCols(h) = sigmoid(pre.leftCols(h).array()).matrix();
            gates.middleCols(h, h) = sigmoid(pre.middleCols(h, h).array()).matrix();
            gates.middleCols(2 * h, h) = pre.middleCols(2 * h, h).array().tanh().matrix();
            gates.rightCols(h) = sigmoid(pre.rightCols(h).array()).matrix();

            auto cell = c.cell.middleRows(t * b, b);
            cell = (gates.leftCols(h).array() * gates.middleCols(2 * h, h).array()).matrix();
            if (t > 0) cell.array() += gates.middleCols(h, h).array() * c.cell.middleRows((t - 1) * b, b).array();
            c.cell_tanh.middleRows(t * b, b) = cell.array().tanh().matrix();
            c.hidden.middleRows(t * b, b) =
                (gates.rightCols(h).array() * c.cell_tanh.middleRows(t * b, b).array()).matrix();
        }
        input = c.hidden;
    }

    last_hidden_ = layers_.back().hidden.bottomRows(b);

    const T eps = static_cast<T>(cfg.bn_eps);
    if (opts.batch_statistics) {
        batch_mean_ = last_hidden_.colwise().mean();
        Matrix<T> centered = last_hidden_.rowwise() - batch_mean_.row(0);
        batch_var_ = centered.array().square().colwise().mean().matrix();
        inv_std_ = (batch_var_.array() + eps).rsqrt().matrix();
        xhat_ = (centered.array().rowwise() * inv_std_.row(0).array()).matrix();
    } else {
        inv_std_ = (params.bn_running_var.array() + eps).rsqrt().matrix();
        xhat_ = ((last_hidden_.rowwise() - params.bn_running_mean.row(0)).array().rowwise() *
                 inv_std_.row(0).array())
                    .matrix();
    }
    Matrix<T> normed = (xhat_.array().rowwise() * params.bn_gamma.row(0).array()).matrix();
    normed.rowwise() += params.bn_beta.row(0);

    if (opts.dropout && cfg.dropout_rate > 0.0f) {
        std::mt19937_64 rng(opts.dropout_seed);
        std::bernoulli_distribution keep(1.0 - static_cast<double>(cfg.dropout_rate));
        const T scale = T(1) / (T(1) - static_cast<T>(cfg.dropout_rate));
        mask_.resize(b, h);
        for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = keep(rng) ? scale : T(0);
    } else {
        mask_ = Matrix<T>::Ones(b, h);
    }
    dropped_ = normed.cwiseProduct(mask_);

    pre_relu_ = dropped_ * params.proj_weight;
    pre_relu_.rowwise() += params.proj_bias.row(0);
    Matrix<T> out = pre_relu_.cwiseMax(T(0));
    if (!out.allFinite() || !last_hidden_.allFinite()) {
        throw Error(ErrorCode::NonFinite, "encoder activations overflowed");
    }
    cached_ = true;
    return out;
}

template <typename T>
EncoderParams<T> Encoder<T>::backward(const EncoderParams<T>& params, std::span<const CharSeq> batch,
                                      const Matrix<T>& upstream) const {
    if (!cached_ || batch.size() != batch_.size() || !std::equal(batch.begin(), batch.end(), batch_.begin())) {
        throw Error(ErrorCode::StaleCache, "backward() batch does not match the cached forward pass");
    }
    const EncoderConfig& cfg = params.config;
    const int b = static_cast<int>(batch.size());
    const int steps = cfg.seq_len;
    const int h = cfg.hidden_dim;
    const int rows = steps * b;
    if (upstream.rows() != b || upstream.cols() != cfg.proj_dim) {
        throw Error(ErrorCode::Shape, "upstream gradient must be [batch x proj_dim]");
    }

    EncoderParams<T> grad = EncoderParams<T>::zeros(cfg);

    // projection + ReLU
    const Matrix<T> d_pre = (pre_relu_.array() > T(0)).select(upstream, T(0));
    grad.proj_weight.noalias() = dropped_.transpose() * d_pre;
    grad.proj_bias = d_pre.colwise().sum();
    const Matrix<T> d_dropped = d_pre * params.proj_weight.transpose();

    // dropout + batch-norm
    const Matrix<T> d_normed = d_dropped.cwiseProduct(mask_);
    grad.bn_gamma = d_normed.cwiseProduct(xhat_).colwise().sum();
    grad.bn_beta = d_normed.colwise().sum();
    const Matrix<T> d_xhat = (d_normed.array().rowwise() * params.bn_gamma.row(0).array()).matrix();
    Matrix<T> d_y;
    if (opts_.batch_statistics) {
        const Matrix<T> sum_d = d_xhat.colwise().sum();
        const Matrix<T> sum_dx = d_xhat.cwiseProduct(xhat_).colwise().sum();
        const T inv_b = T(1) / static_cast<T>(b);
        d_y = ((d_xhat.array() * static_cast<T>(b)).rowwise() - sum_d.row(0).array() -
               xhat_.array().rowwise() * sum_dx.row(0).array())
                  .matrix();
        d_y = (d_y.array().rowwise() * (inv_std_.row(0).array() * inv_b)).matrix();
    } else {
        d_y = (d_xhat.array().rowwise() * inv_std_.row(0).array()).matrix();
    }

    // BPTT, top layer first. d_hidden holds the gradient arriving at each
    // layer's hidden outputs from the layer above (or from the head).
    Matrix<T> d_hidden = Matrix<T>::Zero(rows, h);
    d_hidden.bottomRows(b) = d_y;
    Matrix<T> d_gates(rows, 4 * h);
    Matrix<T> dh_next = Matrix<T>::Zero(b, h);
    Matrix<T> dc_next = Matrix<T>::Zero(b, h);
    Matrix<T> dh(b, h), dc(b, h);
    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const auto& w = params.layers[static_cast<std::size_t>(l)];
        const LayerCache& c = layers_[static_cast<std::size_t>(l)];
        dh_next.setZero();
        dc_next.setZero();
        for (int t = steps - 1; t >= 0; --t) {
            const auto gates = c.gates.middleRows(t * b, b);
            const auto gi = gates.leftCols(h).array();
            const auto gf = gates.middleCols(h, h).array();
            const auto gg = gates.middleCols(2 * h, h).array();
            const auto go = gates.rightCols(h).array();
            const auto tc = c.cell_tanh.middleRows(t * b, b).array();

            dh = d_hidden.middleRows(t * b, b) + dh_next;
            dc = (dh.array() * go * (T(1) - tc.square()) + dc_next.array()).matrix();

            auto dg = d_gates.middleRows(t * b, b);
            dg.rightCols(h) = (dh.array() * tc * go * (T(1) - go)).matrix();
            dg.leftCols(h) = (dc.array() * gg * gi * (T(1) - gi)).matrix();
            dg.middleCols(2 * h, h) = (dc.array() * gi * (T(1) - gg.square())).matrix();
            if (t > 0) {
                dg.middleCols(h, h) =
                    (dc.array() * c.cell.middleRows((t - 1) * b, b).array() * gf * (T(1) - gf)).matrix();
            } else {
                dg.middleCols(h, h).setZero();
            }
            dc_next = (dc.array() * gf).matrix();
            dh_next.noalias() = dg * w.w_hidden.transpose();
        }
        auto& gw = grad.layers[static_cast<std::size_t>(l)];
        gw.w_input.noalias() = c.input.transpose() * d_gates;
        gw.w_hidden.noalias() = c.hidden.topRows(rows - b).transpose() * d_gates.bottomRows(rows - b);
        gw.bias = d_gates.colwise().sum();
        Matrix<T> d_input = d_gates * w.w_input.transpose();
        if (l > 0) {
            d_hidden = std::move(d_input);
        } else {
            for (int t = 0; t < steps; ++t) {
                for (int i = 0; i < b; ++i) {
                    grad.embedding.row(batch[static_cast<std::size_t>(i)].ids[static_cast<std::size_t>(t)]) +=
                        d_input.row(t * b + i);
                }
            }
        }
    }
    return grad;
}

template <typename T>
void Encoder<T>::commit_running_stats(EncoderParams<T>& params) const {
    if (!cached_ || !opts_.batch_statistics) return;
    const T m = static_cast<T>(params.config.bn_momentum);
    const auto n = static_cast<T>(batch_.size());
    const T unbias = n > T(1) ? n / (n - T(1)) : T(1);
    params.bn_running_mean = (T(1) - m) * params.bn_running_mean + m * batch_mean_;
    params.bn_running_var = (T(1) - m) * params.bn_running_var + (m * unbias) * batch_var_;
}

template <typename T>
Matrix<T> embed(const EncoderParams<T>& params, std::span<const CharSeq> batch) {
    Encoder<T> enc;
    return enc.forward(params, batch, ForwardOptions::infer());
}

template struct EncoderParams<float>;
template struct EncoderParams<double>;
template class Encoder<float>;
template class Encoder<double>;
template Matrix<float> embed(const EncoderParams<float>&, std::span<const CharSeq>);
template Matrix<double> embed(const EncoderParams<double>&, std::span<const CharSeq>);

}  // namespace yzr
