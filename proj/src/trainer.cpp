#include "yzr/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <spdlog/spdlog.h>

#include "yzr/error.hpp"
#include "yzr/kvconfig.hpp"

namespace yzr {

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::Shape, "cosine_sim needs equal, non-empty dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine_sim of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// splitmix64: derives independent stream seeds from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kSplit = 1, kInit, kShuffle, kAugment, kDropout, kValid };

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// Tokens shorter than 2 have no interior to edit; they pair with themselves.
std::pair<std::string, std::string> positive_pair(const std::string& token, const AugmentPolicy& policy, Rng& rng) {
    if (token.size() < 2) return {token, token};
    AugmentedPair p = make_pair(token, policy, rng);
    return {std::move(p.t), std::move(p.t_prime)};
}

std::vector<std::vector<std::string>> chunk(const std::vector<std::string>& tokens, int batch_size) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < tokens.size(); i += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(tokens.size(), i + static_cast<std::size_t>(batch_size));
        out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(end));
    }
    // NT-Xent needs two pairs per batch; a lone trailing token joins the previous batch.
    if (out.size() > 1 && out.back().size() < 2) {
        out[out.size() - 2].push_back(out.back().front());
        out.pop_back();
    }
    return out;
}

PairBatch encode_pairs(const std::vector<std::string>& tokens, const AugmentPolicy& policy, Rng& rng) {
    PairBatch batch;
    batch.reserve(tokens.size() * 2);
    for (const auto& tok : tokens) {
        auto [t, t_prime] = positive_pair(tok, policy, rng);
        batch.push_back(encode_token(t));
        batch.push_back(encode_token(t_prime));
    }
    return batch;
}

}  // namespace

double cosine_sim(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine_sim(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

template <typename T>
NtXentResult<T> ntxent_loss(const Matrix<T>& embeddings, double temperature) {
    const Eigen::Index n2 = embeddings.rows();
    if (n2 < 4 || n2 % 2 != 0) throw Error(ErrorCode::Shape, "NT-Xent needs an even number (>= 4) of rows");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    if (!embeddings.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite embeddings");

    using Md = Matrix<double>;
    const Md e = embeddings.template cast<double>();
    Eigen::VectorXd norms = e.rowwise().norm();
    norms = norms.cwiseMax(1e-12);
    const Md u = norms.cwiseInverse().asDiagonal() * e;
    const Md logits = (u * u.transpose()) / temperature;

    Md d_logits = Md::Zero(n2, n2);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n2; ++i) {
        const Eigen::Index partner = i ^ 1;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n2; ++k) {
            if (k != i) mx = std::max(mx, logits(i, k));
        }
        double sum = 0.0;
        for (Eigen::Index k = 0; k < n2; ++k) {
            if (k != i) sum += std::exp(logits(i, k) - mx);
        }
        const double lse = mx + std::log(sum);
        total += lse - logits(i, partner);
        for (Eigen::Index k = 0; k < n2; ++k) {
            if (k != i) d_logits(i, k) = std::exp(logits(i, k) - lse);
        }
        d_logits(i, partner) -= 1.0;
    }
    const double inv = 1.0 / static_cast<double>(n2);
    const double loss = total * inv;
    if (!std::isfinite(loss)) throw Error(ErrorCode::NonFinite, "NT-Xent loss is not finite");

    const Md d_sim = d_logits * (inv / temperature);
    const Md d_u = (d_sim + d_sim.transpose()) * u;
    // d e_i = (d u_i - u_i <u_i, d u_i>) / |e_i|
    const Eigen::VectorXd radial = (u.cwiseProduct(d_u)).rowwise().sum();
    const Md d_e = norms.cwiseInverse().asDiagonal() * (d_u - radial.asDiagonal() * u);
    return {loss, d_e.template cast<T>()};
}

template NtXentResult<float> ntxent_loss(const Matrix<float>&, double);
template NtXentResult<double> ntxent_loss(const Matrix<double>&, double);

double cosine_lr(double lr0, long step, long total_steps) {
    if (total_steps <= 0) return lr0;
    const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

Adam::Adam(const EncoderParams<float>& shape, AdamConfig cfg)
    : cfg_(cfg), m_(EncoderParams<float>::zeros(shape.config)), v_(EncoderParams<float>::zeros(shape.config)) {}

void Adam::step(EncoderParams<float>& params, const EncoderParams<float>& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const float b1 = static_cast<float>(cfg_.beta1);
    const float b2 = static_cast<float>(cfg_.beta2);
    const float step_size = static_cast<float>(lr / c1);
    const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
    const float eps = static_cast<float>(cfg_.eps);

    std::vector<Matrix<float>*> p, g, m, v;
    params.visit([&](const std::string&, Matrix<float>& t, bool trainable) { if (trainable) p.push_back(&t); });
    grad.visit([&](const std::string&, const Matrix<float>& t, bool trainable) {
        if (trainable) g.push_back(const_cast<Matrix<float>*>(&t));
    });
    m_.visit([&](const std::string&, Matrix<float>& t, bool trainable) { if (trainable) m.push_back(&t); });
    v_.visit([&](const std::string&, Matrix<float>& t, bool trainable) { if (trainable) v.push_back(&t); });
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i]->array() = b1 * m[i]->array() + (1.0f - b1) * g[i]->array();
        v[i]->array() = b2 * v[i]->array() + (1.0f - b2) * g[i]->array().square();
        p[i]->array() -= step_size * m[i]->array() / (v[i]->array().sqrt() * inv_sqrt_c2 + eps);
    }
}

void TrainConfig::validate() const {
    if (batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 2");
    if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "split_fraction must be in (0, 1)");
    }
    if (!(lr0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be positive");
    policy_train.validate();
    policy_valid.validate();
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
    TrainConfig c;
    c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
    c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
    c.lr0 = kv.get_double("lr", c.lr0);
    c.temperature = kv.get_double("temperature", c.temperature);
    c.split_fraction = kv.get_double("split_fraction", c.split_fraction);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    const double p_delete = kv.get_double("p_delete", c.policy_train.p_delete);
    c.policy_train.p_delete = p_delete;
    c.policy_valid.p_delete = p_delete;
    c.policy_train.ops_divisor = static_cast<int>(kv.get_int("train_ops_divisor", c.policy_train.ops_divisor));
    c.policy_train.ops_min = static_cast<int>(kv.get_int("train_ops_min", c.policy_train.ops_min));
    c.policy_valid.ops_max = static_cast<int>(kv.get_int("valid_ops_max", c.policy_valid.ops_max));
    c.validate();
    return c;
}

EncoderConfig encoder_config_from(const KeyValueConfig& kv) {
    EncoderConfig c;
    c.embed_dim = static_cast<int>(kv.get_int("embed_dim", c.embed_dim));
    c.hidden_dim = static_cast<int>(kv.get_int("hidden_dim", c.hidden_dim));
    c.dropout_rate = static_cast<float>(kv.get_double("dropout", c.dropout_rate));
    c.validate();
    return c;
}

std::string TrainHistory::to_csv() const {
    std::string out = "epoch,train_loss,val_loss,lr\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_loss) + "," +
               format_double(e.lr) + "\n";
    }
    return out;
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << to_csv();
    if (!out) throw Error(ErrorCode::Io, "write failed on " + path.string());
}

DatasetSplit split_dataset(std::vector<std::string> tokens, double fraction, std::uint64_t seed) {
    if (tokens.size() < 2) throw Error(ErrorCode::TooFewTokens, "need at least 2 tokens to split");
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "split fraction must be in (0, 1)");
    Rng rng(seed);
    std::shuffle(tokens.begin(), tokens.end(), rng);
    const auto n = static_cast<long>(tokens.size());
    const long n_train = std::clamp(std::lround(fraction * static_cast<double>(n)), 1L, n - 1);
    DatasetSplit s;
    s.train.assign(tokens.begin(), tokens.begin() + n_train);
    s.valid.assign(tokens.begin() + n_train, tokens.end());
    return s;
}

std::vector<PairBatch> make_validation_batches(const std::vector<std::string>& valid, const TrainConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, kValid));
    std::vector<PairBatch> out;
    for (const auto& chunk_tokens : chunk(valid, cfg.batch_size)) out.push_back(encode_pairs(chunk_tokens, cfg.policy_valid, rng));
    return out;
}

double validation_loss(const EncoderParams<float>& params, const std::vector<PairBatch>& batches, double temperature) {
    Encoder<float> enc;
    double total = 0.0;
    std::size_t rows = 0;
    for (const auto& batch : batches) {
        const Matrix<float> z = enc.forward(params, batch, ForwardOptions::evaluation());
        total += ntxent_loss(z, temperature).loss * static_cast<double>(batch.size());
        rows += batch.size();
    }
    return rows ? total / static_cast<double>(rows) : 0.0;
}

DatasetSplit training_split(const std::vector<std::string>& tokens, const TrainConfig& cfg) {
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& t : tokens) {
        if (t.empty()) continue;
        encode_token(t);  // rejects tokens the alphabet cannot hold
        if (seen.insert(t).second) unique.push_back(t);
    }
    DatasetSplit split = split_dataset(std::move(unique), cfg.split_fraction, derive_seed(cfg.seed, kSplit));
    if (split.train.size() < 2 || split.valid.size() < 2) {
        throw Error(ErrorCode::TooFewTokens, "train and validation splits each need at least 2 tokens");
    }
    return split;
}

TrainResult fit(const std::vector<std::string>& tokens, const EncoderConfig& enc_cfg, const TrainConfig& cfg,
                const TrainProgress& progress) {
    enc_cfg.validate();
    cfg.validate();

    DatasetSplit split = training_split(tokens, cfg);
    const std::vector<PairBatch> valid_batches = make_validation_batches(split.valid, cfg);

    EncoderParams<float> params = EncoderParams<float>::initialize(enc_cfg, derive_seed(cfg.seed, kInit));
    Adam adam(params);
    Encoder<float> encoder;
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffle));
    Rng augment_rng(derive_seed(cfg.seed, kAugment));
    std::uint64_t dropout_counter = derive_seed(cfg.seed, kDropout);

    const long batches_per_epoch = static_cast<long>(chunk(split.train, cfg.batch_size).size());
    const long total_steps = batches_per_epoch * cfg.epochs;
    long step = 0;

    TrainResult result{params, {}};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(split.train.begin(), split.train.end(), shuffle_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = cosine_lr(cfg.lr0, step, total_steps);
        double loss_sum = 0.0;
        std::size_t rows = 0;
        for (const auto& chunk_tokens : chunk(split.train, cfg.batch_size)) {
            const PairBatch batch = encode_pairs(chunk_tokens, cfg.policy_train, augment_rng);
            const Matrix<float> z = encoder.forward(params, batch, ForwardOptions::train(dropout_counter++));
            const NtXentResult<float> loss = ntxent_loss(z, cfg.temperature);
            const EncoderParams<float> grad = encoder.backward(params, batch, loss.grad);
            adam.step(params, grad, cosine_lr(cfg.lr0, step, total_steps));
            encoder.commit_running_stats(params);
            ++step;
            loss_sum += loss.loss * static_cast<double>(batch.size());
            rows += batch.size();
        }
        rec.train_loss = loss_sum / static_cast<double>(rows);
        if (!std::isfinite(rec.train_loss) || !params.all_finite()) {
            throw Error(ErrorCode::NonFinite, "training diverged at epoch " + std::to_string(epoch) +
                                                  " (train loss " + format_double(rec.train_loss) + ")");
        }
        rec.val_loss = validation_loss(params, valid_batches, cfg.temperature);
        if (rec.val_loss < result.history.best_val_loss) {
            result.history.best_val_loss = rec.val_loss;
            result.history.best_epoch = epoch;
            result.params = params;
        }
        result.history.epochs.push_back(rec);
        if (progress) progress(rec);
    }
    return result;
}

}  // namespace yzr
