#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "yzr/augmentor.hpp"
#include "yzr/encoder.hpp"

namespace yzr {

class KeyValueConfig;

/// dot(a, b) / (|a| |b|). Throws ZeroVector / Shape.
double cosine_sim(std::span<const float> a, std::span<const float> b);
double cosine_sim(std::span<const double> a, std::span<const double> b);

template <typename T>
struct NtXentResult {
    double loss = 0.0;
    Matrix<T> grad;  // d loss / d embeddings, same shape as the input
};

/// Rows 2m and 2m+1 are a positive pair; every other row is a negative. The
/// denominator for anchor i runs over all k != i (positive included). Loss is
/// the mean over all 2N anchors.
template <typename T>
NtXentResult<T> ntxent_loss(const Matrix<T>& embeddings, double temperature);

/// lr0 * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(double lr0, long step, long total_steps);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const EncoderParams<float>& shape, AdamConfig cfg = {});
    /// One bias-corrected update of every trainable tensor.
    void step(EncoderParams<float>& params, const EncoderParams<float>& grad, double lr);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    EncoderParams<float> m_, v_;
    long t_ = 0;
};

struct TrainConfig {
    int batch_size = 256;
    int epochs = 200;
    double lr0 = 1e-4;
    double temperature = 0.07;
    double split_fraction = 0.7;
    std::uint64_t seed = 0;
    AugmentPolicy policy_train = AugmentPolicy::training();
    AugmentPolicy policy_valid = AugmentPolicy::validation();

    void validate() const;
    /// Keys: batch_size, epochs, lr, temperature, split_fraction, seed,
    /// p_delete, train_ops_divisor, train_ops_min, valid_ops_max.
    static TrainConfig from_config(const KeyValueConfig& kv);
};

/// Encoder hyper-parameters from the same file: embed_dim, hidden_dim, dropout.
EncoderConfig encoder_config_from(const KeyValueConfig& kv);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();

    /// epoch,train_loss,val_loss,lr with round-trip precision.
    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> valid;
};

/// Seeded shuffle, then the first round(fraction * n) tokens train. Throws
/// TooFewTokens below 2 tokens.
DatasetSplit split_dataset(std::vector<std::string> tokens, double fraction, std::uint64_t seed);

/// Deduplicates (first occurrence wins) and splits exactly as fit() does.
DatasetSplit training_split(const std::vector<std::string>& tokens, const TrainConfig& cfg);

/// Each batch is 2N sequences laid out as N consecutive positive pairs.
using PairBatch = std::vector<CharSeq>;

/// The fixed validation pairs fit() scores every epoch.
std::vector<PairBatch> make_validation_batches(const std::vector<std::string>& valid, const TrainConfig& cfg);

/// Mean NT-Xent over the batches, batch-norm on batch statistics, no dropout.
double validation_loss(const EncoderParams<float>& params, const std::vector<PairBatch>& batches, double temperature);

struct TrainResult {
    EncoderParams<float> params;  // snapshot at the best validation epoch
    TrainHistory history;
};

using TrainProgress = std::function<void(const EpochRecord&)>;

/// Contrastive training over unique tokens; see TrainConfig for the knobs.
TrainResult fit(const std::vector<std::string>& tokens, const EncoderConfig& enc_cfg, const TrainConfig& cfg,
                const TrainProgress& progress = {});

extern template NtXentResult<float> ntxent_loss(const Matrix<float>&, double);
extern template NtXentResult<double> ntxent_loss(const Matrix<double>&, double);

}  // namespace yzr
