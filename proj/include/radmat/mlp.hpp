#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radmat {

struct MlpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable, truncated, or inconsistent model file.
struct CorruptModel : MlpError {
    using MlpError::MlpError;
};

// Minimal row-major matrix; all batches are rows x features.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    const double* row(int r) const { return &a[static_cast<std::size_t>(r) * cols]; }
    double* row(int r) { return &a[static_cast<std::size_t>(r) * cols]; }
};

inline constexpr int kInputDim = 12;
inline constexpr int kNumClasses = 5;

struct DenseLayer {
    Mat weight;                  // out x in
    std::vector<double> bias;    // out
};

struct BatchNormLayer {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;       // running = (1-m)*running + m*batch
};

enum class Mode { Train, Eval };

// dense -> BN -> ReLU twice, then a dense output head; softmax lives in the
// loss and in predict. Batch statistics use the biased variance, both for
// normalization and for the running estimates.
struct MlpParams {
    std::array<int, 4> dims{kInputDim, 32, 32, kNumClasses};
    DenseLayer dense1, dense2, dense3;
    BatchNormLayer bn1, bn2;
    Mode mode = Mode::Train;

    void validate() const;
};

// Gradients (or Adam moments) for every trainable tensor, shaped like the
// parameters they belong to.
struct GradSet {
    Mat w1, w2, w3;
    std::vector<double> b1, b2, b3;
    std::vector<double> gamma1, beta1, gamma2, beta2;

    static GradSet zeros_like(const MlpParams& p);
};

struct AdamState {
    GradSet m, v;
    long t = 0;

    static AdamState init(const MlpParams& p);
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const;
};

struct BnCache {
    std::vector<double> mean, inv_std;
    Mat xhat;
};

struct ForwardCache {
    Mat input;
    BnCache bn1, bn2;
    Mat act1, act2;   // post-ReLU activations
    Mat logits;
    bool valid = false;
};

// He-scaled weights (N(0, 2/fan_in)), zero biases, gamma 1, beta 0, running
// stats (0, 1). Deterministic per seed; tensors are drawn layer by layer in
// row-major order.
MlpParams init_params(const std::array<int, 4>& dims, std::uint64_t seed);

// Train-mode forward: batch statistics normalize, running stats get an EMA
// update. Requires batch size >= 2.
Mat forward_train(MlpParams& params, const Mat& batch, ForwardCache& cache);

// Eval-mode forward using running statistics; pure function of its inputs.
Mat forward_eval(const MlpParams& params, const Mat& batch);

struct LossGrad {
    double loss = 0.0;
    Mat dlogits;   // gradient of the mean loss
};

// Row-stabilized softmax + cross-entropy, averaged over the batch.
LossGrad softmax_cross_entropy(const Mat& logits, std::span<const int> labels);

// Exact gradients of the mean loss via the batch-statistics chain rule.
GradSet backward(const MlpParams& params, const ForwardCache& cache, const Mat& dlogits);

// Bias-corrected Adam update, applied tensor by tensor in a fixed order.
void adam_step(MlpParams& params, const GradSet& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;  // computed from the train-mode forward passes
};

struct TrainResult {
    MlpParams params;       // left in eval mode
    std::vector<EpochStats> history;
    long steps = 0;         // total Adam steps taken
};

// Seeded per-epoch shuffling, consecutive mini-batches, final mode switch to
// eval. A trailing batch of one sample is skipped (BN needs batch
// statistics). Bit-deterministic for a fixed (dataset, config).
TrainResult train(const Mat& features, std::span<const int> labels,
                  const TrainConfig& cfg, int hidden1 = 32, int hidden2 = 32);

struct Prediction {
    std::array<double, kNumClasses> probabilities{};
    int predicted_class = 0;   // argmax; ties toward the smaller class id
    double confidence = 0.0;   // max probability
};

// Single-sample eval-mode inference; throws if params are in train mode.
Prediction predict(const MlpParams& params, std::span<const double> features);

// Serialized model: format_version, dims, ordered layer array, training
// metadata. Doubles round-trip bit-exactly.
struct TrainedOn {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string dataset_hash;
    std::string config_fingerprint;
};

void save_params(const MlpParams& params, const TrainedOn& meta,
                 const std::filesystem::path& path);
MlpParams load_params(const std::filesystem::path& path, TrainedOn* meta = nullptr);

// Eval-mode network with each BN folded into its preceding dense layer; the
// hot path is two affine+ReLU blocks and an affine+softmax. Immutable after
// construction, safe for concurrent inference with per-caller scratch.
struct FusedMlp {
    int h1 = 0, h2 = 0;
    std::vector<double> w1, b1;  // h1 x 12
    std::vector<double> w2, b2;  // h2 x h1
    std::vector<double> w3, b3;  // 5 x h2

    struct Scratch {
        std::vector<double> a1, a2;
    };
    Scratch make_scratch() const { return {std::vector<double>(static_cast<std::size_t>(h1)), std::vector<double>(static_cast<std::size_t>(h2))}; }

    // No allocation; writes 5 probabilities.
    void infer(const double* features12, double* probs5, Scratch& scratch) const;
};

FusedMlp fuse(const MlpParams& params);
std::array<double, kNumClasses> fused_inference(const FusedMlp& net,
                                                std::span<const double> features);

}  // namespace radmat
