#include "radmat/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "radmat/common.hpp"
#include "json.hpp"

namespace radmat {

namespace {

constexpr std::uint64_t kInitSalt = 0x1417001;
constexpr std::uint64_t kShuffleSalt = 0x1417002;

void require(bool ok, const std::string& msg) {
    if (!ok) throw MlpError(msg);
}

void check_vec(const std::vector<double>& v, int n, const std::string& what) {
    require(static_cast<int>(v.size()) == n, what + ": size mismatch");
}

// y = x * W^T + b
Mat affine(const Mat& x, const DenseLayer& layer) {
    const int out = layer.weight.rows;
    require(x.cols == layer.weight.cols, "affine: input width mismatch");
    Mat y(x.rows, out);
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* yi = y.row(i);
        for (int o = 0; o < out; ++o) {
            const double* wo = layer.weight.row(o);
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int j = 0; j < x.cols; ++j) acc += xi[j] * wo[j];
            yi[o] = acc;
        }
    }
    return y;
}

Mat bn_train(BatchNormLayer& bn, const Mat& z, BnCache& cache) {
    const int b = z.rows;
    const int f = z.cols;
    require(b >= 2, "batchnorm: train mode needs batch size >= 2");
    cache.mean.assign(static_cast<std::size_t>(f), 0.0);
    cache.inv_std.assign(static_cast<std::size_t>(f), 0.0);
    cache.xhat = Mat(b, f);
    Mat y(b, f);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (int j = 0; j < f; ++j) {
        double mean = 0.0;
        for (int i = 0; i < b; ++i) mean += z(i, j);
        mean *= inv_b;
        double var = 0.0;
        for (int i = 0; i < b; ++i) {
            const double d = z(i, j) - mean;
            var += d * d;
        }
        var *= inv_b;  // biased
        const double inv_std = 1.0 / std::sqrt(var + bn.epsilon);
        cache.mean[static_cast<std::size_t>(j)] = mean;
        cache.inv_std[static_cast<std::size_t>(j)] = inv_std;
        for (int i = 0; i < b; ++i) {
            const double xh = (z(i, j) - mean) * inv_std;
            cache.xhat(i, j) = xh;
            y(i, j) = bn.gamma[static_cast<std::size_t>(j)] * xh + bn.beta[static_cast<std::size_t>(j)];
        }
        bn.running_mean[static_cast<std::size_t>(j)] =
            (1.0 - bn.momentum) * bn.running_mean[static_cast<std::size_t>(j)] + bn.momentum * mean;
        bn.running_var[static_cast<std::size_t>(j)] =
            (1.0 - bn.momentum) * bn.running_var[static_cast<std::size_t>(j)] + bn.momentum * var;
    }
    return y;
}

Mat bn_eval(const BatchNormLayer& bn, const Mat& z) {
    Mat y(z.rows, z.cols);
    for (int j = 0; j < z.cols; ++j) {
        const double inv_std = 1.0 / std::sqrt(bn.running_var[static_cast<std::size_t>(j)] + bn.epsilon);
        const double g = bn.gamma[static_cast<std::size_t>(j)];
        const double mean = bn.running_mean[static_cast<std::size_t>(j)];
        const double beta = bn.beta[static_cast<std::size_t>(j)];
        for (int i = 0; i < z.rows; ++i) y(i, j) = g * (z(i, j) - mean) * inv_std + beta;
    }
    return y;
}

Mat relu(const Mat& x) {
    Mat y = x;
    for (auto& v : y.a) v = v > 0.0 ? v : 0.0;
    return y;
}

// dz from dy through BN, given the cached batch statistics.
Mat bn_backward(const BatchNormLayer& bn, const BnCache& cache, const Mat& dy,
                std::vector<double>& dgamma, std::vector<double>& dbeta) {
    const int b = dy.rows;
    const int f = dy.cols;
    dgamma.assign(static_cast<std::size_t>(f), 0.0);
    dbeta.assign(static_cast<std::size_t>(f), 0.0);
    Mat dz(b, f);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (int j = 0; j < f; ++j) {
        const double g = bn.gamma[static_cast<std::size_t>(j)];
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int i = 0; i < b; ++i) {
            const double dxh = dy(i, j) * g;
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * cache.xhat(i, j);
            dgamma[static_cast<std::size_t>(j)] += dy(i, j) * cache.xhat(i, j);
            dbeta[static_cast<std::size_t>(j)] += dy(i, j);
        }
        const double inv_std = cache.inv_std[static_cast<std::size_t>(j)];
        for (int i = 0; i < b; ++i) {
            const double dxh = dy(i, j) * g;
            dz(i, j) = inv_std * (dxh - inv_b * sum_dxhat - inv_b * cache.xhat(i, j) * sum_dxhat_xhat);
        }
    }
    return dz;
}

// dW = dy^T * x, db = colsum(dy), dx = dy * W
void dense_backward(const DenseLayer& layer, const Mat& x, const Mat& dy, Mat& dw,
                    std::vector<double>& db, Mat* dx) {
    const int out = layer.weight.rows;
    const int in = layer.weight.cols;
    dw = Mat(out, in);
    db.assign(static_cast<std::size_t>(out), 0.0);
    for (int i = 0; i < dy.rows; ++i) {
        const double* dyi = dy.row(i);
        const double* xi = x.row(i);
        for (int o = 0; o < out; ++o) {
            db[static_cast<std::size_t>(o)] += dyi[o];
            double* dwo = dw.row(o);
            for (int j = 0; j < in; ++j) dwo[j] += dyi[o] * xi[j];
        }
    }
    if (dx != nullptr) {
        *dx = Mat(dy.rows, in);
        for (int i = 0; i < dy.rows; ++i) {
            const double* dyi = dy.row(i);
            double* dxi = dx->row(i);
            for (int o = 0; o < out; ++o) {
                const double* wo = layer.weight.row(o);
                for (int j = 0; j < in; ++j) dxi[j] += dyi[o] * wo[j];
            }
        }
    }
}

Mat relu_backward(const Mat& act, const Mat& dy) {
    Mat dz = dy;
    for (std::size_t i = 0; i < dz.a.size(); ++i) {
        if (act.a[i] <= 0.0) dz.a[i] = 0.0;
    }
    return dz;
}

void adam_update(std::vector<double>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, const TrainConfig& cfg,
                 double bias1, double bias2) {
    require(param.size() == grad.size() && grad.size() == m.size() && m.size() == v.size(),
            "adam_step: shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
}

}  // namespace

void MlpParams::validate() const {
    require(dims[0] == kInputDim, "mlp: input width must be 12");
    require(dims[3] == kNumClasses, "mlp: output width must be 5");
    require(dims[1] >= 1 && dims[2] >= 1, "mlp: hidden widths must be positive");
    require(dense1.weight.rows == dims[1] && dense1.weight.cols == dims[0], "mlp: dense1 shape");
    require(dense2.weight.rows == dims[2] && dense2.weight.cols == dims[1], "mlp: dense2 shape");
    require(dense3.weight.rows == dims[3] && dense3.weight.cols == dims[2], "mlp: dense3 shape");
    check_vec(dense1.bias, dims[1], "dense1 bias");
    check_vec(dense2.bias, dims[2], "dense2 bias");
    check_vec(dense3.bias, dims[3], "dense3 bias");
    check_vec(bn1.gamma, dims[1], "bn1 gamma");
    check_vec(bn1.beta, dims[1], "bn1 beta");
    check_vec(bn1.running_mean, dims[1], "bn1 running_mean");
    check_vec(bn1.running_var, dims[1], "bn1 running_var");
    check_vec(bn2.gamma, dims[2], "bn2 gamma");
    check_vec(bn2.beta, dims[2], "bn2 beta");
    check_vec(bn2.running_mean, dims[2], "bn2 running_mean");
    check_vec(bn2.running_var, dims[2], "bn2 running_var");
    for (const double v : bn1.running_var) require(v >= 0.0, "mlp: bn1 running_var negative");
    for (const double v : bn2.running_var) require(v >= 0.0, "mlp: bn2 running_var negative");
}

void TrainConfig::validate() const {
    require(learning_rate > 0.0, "train: learning_rate must be > 0");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
            "train: betas must be in (0,1)");
    require(adam_epsilon > 0.0, "train: adam_epsilon must be > 0");
    require(epochs >= 1, "train: epochs must be >= 1");
    require(batch_size >= 2, "train: batch_size must be >= 2 (batch statistics)");
}

GradSet GradSet::zeros_like(const MlpParams& p) {
    GradSet g;
    g.w1 = Mat(p.dims[1], p.dims[0]);
    g.w2 = Mat(p.dims[2], p.dims[1]);
    g.w3 = Mat(p.dims[3], p.dims[2]);
    g.b1.assign(static_cast<std::size_t>(p.dims[1]), 0.0);
    g.b2.assign(static_cast<std::size_t>(p.dims[2]), 0.0);
    g.b3.assign(static_cast<std::size_t>(p.dims[3]), 0.0);
    g.gamma1.assign(static_cast<std::size_t>(p.dims[1]), 0.0);
    g.beta1.assign(static_cast<std::size_t>(p.dims[1]), 0.0);
    g.gamma2.assign(static_cast<std::size_t>(p.dims[2]), 0.0);
    g.beta2.assign(static_cast<std::size_t>(p.dims[2]), 0.0);
    return g;
}

AdamState AdamState::init(const MlpParams& p) {
    AdamState s;
    s.m = GradSet::zeros_like(p);
    s.v = GradSet::zeros_like(p);
    s.t = 0;
    return s;
}

MlpParams init_params(const std::array<int, 4>& dims, std::uint64_t seed) {
    require(dims[0] == kInputDim && dims[3] == kNumClasses && dims[1] >= 1 && dims[2] >= 1,
            "init_params: dims must be [12, h1, h2, 5] with positive hidden widths");
    MlpParams p;
    p.dims = dims;
    std::mt19937_64 rng(seed_mix(seed, kInitSalt));
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto init_dense = [&](int out, int in) {
        DenseLayer layer;
        layer.weight = Mat(out, in);
        const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        for (auto& w : layer.weight.a) w = gauss(rng) * std_dev;
        layer.bias.assign(static_cast<std::size_t>(out), 0.0);
        return layer;
    };
    auto init_bn = [](int width) {
        BatchNormLayer bn;
        bn.gamma.assign(static_cast<std::size_t>(width), 1.0);
        bn.beta.assign(static_cast<std::size_t>(width), 0.0);
        bn.running_mean.assign(static_cast<std::size_t>(width), 0.0);
        bn.running_var.assign(static_cast<std::size_t>(width), 1.0);
        return bn;
    };

    p.dense1 = init_dense(dims[1], dims[0]);
    p.bn1 = init_bn(dims[1]);
    p.dense2 = init_dense(dims[2], dims[1]);
    p.bn2 = init_bn(dims[2]);
    p.dense3 = init_dense(dims[3], dims[2]);
    p.mode = Mode::Train;
    p.validate();
    return p;
}

Mat forward_train(MlpParams& params, const Mat& batch, ForwardCache& cache) {
    params.validate();
    require(batch.cols == params.dims[0], "forward: batch width mismatch");
    require(batch.rows >= 2, "forward: train mode needs batch size >= 2");
    cache.input = batch;
    const Mat z1 = affine(batch, params.dense1);
    const Mat y1 = bn_train(params.bn1, z1, cache.bn1);
    cache.act1 = relu(y1);
    const Mat z2 = affine(cache.act1, params.dense2);
    const Mat y2 = bn_train(params.bn2, z2, cache.bn2);
    cache.act2 = relu(y2);
    cache.logits = affine(cache.act2, params.dense3);
    cache.valid = true;
    return cache.logits;
}

Mat forward_eval(const MlpParams& params, const Mat& batch) {
    params.validate();
    require(batch.cols == params.dims[0], "forward: batch width mismatch");
    const Mat z1 = affine(batch, params.dense1);
    const Mat a1 = relu(bn_eval(params.bn1, z1));
    const Mat z2 = affine(a1, params.dense2);
    const Mat a2 = relu(bn_eval(params.bn2, z2));
    return affine(a2, params.dense3);
}

LossGrad softmax_cross_entropy(const Mat& logits, std::span<const int> labels) {
    require(logits.cols == kNumClasses, "softmax_cross_entropy: expected 5 logits per row");
    require(static_cast<std::size_t>(logits.rows) == labels.size(),
            "softmax_cross_entropy: label count mismatch");
    LossGrad out;
    out.dlogits = Mat(logits.rows, logits.cols);
    const double inv_b = 1.0 / static_cast<double>(logits.rows);
    double total = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        require(label >= 0 && label < kNumClasses, "softmax_cross_entropy: label out of range");
        const double* row = logits.row(i);
        double mx = row[0];
        for (int j = 1; j < kNumClasses; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        double e[kNumClasses];
        for (int j = 0; j < kNumClasses; ++j) {
            e[j] = std::exp(row[j] - mx);
            z += e[j];
        }
        total += std::log(z) - (row[label] - mx);
        for (int j = 0; j < kNumClasses; ++j) {
            const double p = e[j] / z;
            out.dlogits(i, j) = (p - (j == label ? 1.0 : 0.0)) * inv_b;
        }
    }
    out.loss = total * inv_b;
    return out;
}

GradSet backward(const MlpParams& params, const ForwardCache& cache, const Mat& dlogits) {
    require(cache.valid, "backward: stale or missing forward cache");
    require(dlogits.rows == cache.logits.rows && dlogits.cols == cache.logits.cols,
            "backward: dlogits shape mismatch");
    GradSet g = GradSet::zeros_like(params);

    Mat dact2;
    dense_backward(params.dense3, cache.act2, dlogits, g.w3, g.b3, &dact2);
    const Mat dy2 = relu_backward(cache.act2, dact2);
    const Mat dz2 = bn_backward(params.bn2, cache.bn2, dy2, g.gamma2, g.beta2);

    Mat dact1;
    dense_backward(params.dense2, cache.act1, dz2, g.w2, g.b2, &dact1);
    const Mat dy1 = relu_backward(cache.act1, dact1);
    const Mat dz1 = bn_backward(params.bn1, cache.bn1, dy1, g.gamma1, g.beta1);

    dense_backward(params.dense1, cache.input, dz1, g.w1, g.b1, nullptr);
    return g;
}

void adam_step(MlpParams& params, const GradSet& grads, AdamState& state,
               const TrainConfig& cfg) {
    cfg.validate();
    state.t += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    adam_update(params.dense1.weight.a, grads.w1.a, state.m.w1.a, state.v.w1.a, cfg, bias1, bias2);
    adam_update(params.dense1.bias, grads.b1, state.m.b1, state.v.b1, cfg, bias1, bias2);
    adam_update(params.bn1.gamma, grads.gamma1, state.m.gamma1, state.v.gamma1, cfg, bias1, bias2);
    adam_update(params.bn1.beta, grads.beta1, state.m.beta1, state.v.beta1, cfg, bias1, bias2);
    adam_update(params.dense2.weight.a, grads.w2.a, state.m.w2.a, state.v.w2.a, cfg, bias1, bias2);
    adam_update(params.dense2.bias, grads.b2, state.m.b2, state.v.b2, cfg, bias1, bias2);
    adam_update(params.bn2.gamma, grads.gamma2, state.m.gamma2, state.v.gamma2, cfg, bias1, bias2);
    adam_update(params.bn2.beta, grads.beta2, state.m.beta2, state.v.beta2, cfg, bias1, bias2);
    adam_update(params.dense3.weight.a, grads.w3.a, state.m.w3.a, state.v.w3.a, cfg, bias1, bias2);
    adam_update(params.dense3.bias, grads.b3, state.m.b3, state.v.b3, cfg, bias1, bias2);
}

TrainResult train(const Mat& features, std::span<const int> labels, const TrainConfig& cfg,
                  int hidden1, int hidden2) {
    cfg.validate();
    require(features.rows >= 2, "train: need at least 2 samples");
    require(features.cols == kInputDim, "train: features must be 12 wide");
    require(static_cast<std::size_t>(features.rows) == labels.size(),
            "train: label count mismatch");
    for (const int y : labels) require(y >= 0 && y < kNumClasses, "train: label out of range");

    TrainResult result;
    result.params = init_params({kInputDim, hidden1, hidden2, kNumClasses}, cfg.seed);
    AdamState state = AdamState::init(result.params);

    const int n = features.rows;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    ForwardCache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with explicit draws keeps the permutation pinned down.
        std::mt19937_64 rng(seed_mix(cfg.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        long correct = 0;
        long seen = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsize = std::min(cfg.batch_size, n - start);
            if (bsize < 2) continue;  // BN cannot normalize a single sample
            Mat xb(bsize, kInputDim);
            std::vector<int> yb(static_cast<std::size_t>(bsize));
            for (int r = 0; r < bsize; ++r) {
                const int src = order[static_cast<std::size_t>(start + r)];
                std::copy(features.row(src), features.row(src) + kInputDim, xb.row(r));
                yb[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(src)];
            }
            const Mat logits = forward_train(result.params, xb, cache);
            const LossGrad lg = softmax_cross_entropy(logits, yb);
            for (int r = 0; r < bsize; ++r) {
                int arg = 0;
                for (int j = 1; j < kNumClasses; ++j) {
                    if (logits(r, j) > logits(r, arg)) arg = j;
                }
                if (arg == yb[static_cast<std::size_t>(r)]) ++correct;
            }
            const GradSet grads = backward(result.params, cache, lg.dlogits);
            adam_step(result.params, grads, state, cfg);
            epoch_loss += lg.loss * bsize;
            seen += bsize;
            result.steps += 1;
        }
        require(seen > 0, "train: no usable batches (dataset too small?)");
        result.history.push_back({epoch_loss / static_cast<double>(seen),
                                  static_cast<double>(correct) / static_cast<double>(seen)});
    }
    result.params.mode = Mode::Eval;
    return result;
}

Prediction predict(const MlpParams& params, std::span<const double> features) {
    if (params.mode != Mode::Eval) {
        throw MlpError("predict: params are in train mode; switch to eval first");
    }
    require(features.size() == static_cast<std::size_t>(kInputDim),
            "predict: expected 12 features");
    Mat x(1, kInputDim);
    std::copy(features.begin(), features.end(), x.a.begin());
    const Mat logits = forward_eval(params, x);

    Prediction out;
    double mx = logits(0, 0);
    for (int j = 1; j < kNumClasses; ++j) mx = std::max(mx, logits(0, j));
    double z = 0.0;
    for (int j = 0; j < kNumClasses; ++j) {
        out.probabilities[static_cast<std::size_t>(j)] = std::exp(logits(0, j) - mx);
        z += out.probabilities[static_cast<std::size_t>(j)];
    }
    for (auto& p : out.probabilities) p /= z;
    out.predicted_class = 0;
    for (int j = 1; j < kNumClasses; ++j) {
        if (out.probabilities[static_cast<std::size_t>(j)] >
            out.probabilities[static_cast<std::size_t>(out.predicted_class)]) {
            out.predicted_class = j;
        }
    }
    out.confidence = out.probabilities[static_cast<std::size_t>(out.predicted_class)];
    return out;
}

namespace {

constexpr int kFormatVersion = 1;

nlohmann::ordered_json dense_to_json(const DenseLayer& layer) {
    nlohmann::ordered_json j;
    j["kind"] = "dense";
    j["rows"] = layer.weight.rows;
    j["cols"] = layer.weight.cols;
    j["weight"] = layer.weight.a;
    j["bias"] = layer.bias;
    return j;
}

nlohmann::ordered_json bn_to_json(const BatchNormLayer& bn) {
    nlohmann::ordered_json j;
    j["kind"] = "batchnorm";
    j["gamma"] = bn.gamma;
    j["beta"] = bn.beta;
    j["running_mean"] = bn.running_mean;
    j["running_var"] = bn.running_var;
    j["epsilon"] = bn.epsilon;
    j["momentum"] = bn.momentum;
    return j;
}

std::vector<double> json_vec(const nlohmann::json& j, const char* key, int expected) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw CorruptModel(std::string("model: missing array '") + key + "'");
    }
    std::vector<double> v = j[key].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != expected) {
        throw CorruptModel(std::string("model: '") + key + "' has wrong length");
    }
    return v;
}

DenseLayer dense_from_json(const nlohmann::json& j, int out, int in) {
    if (j.value("kind", "") != "dense") throw CorruptModel("model: expected dense layer");
    DenseLayer layer;
    layer.weight = Mat(out, in);
    layer.weight.a = json_vec(j, "weight", out * in);
    layer.bias = json_vec(j, "bias", out);
    return layer;
}

BatchNormLayer bn_from_json(const nlohmann::json& j, int width) {
    if (j.value("kind", "") != "batchnorm") throw CorruptModel("model: expected batchnorm layer");
    BatchNormLayer bn;
    bn.gamma = json_vec(j, "gamma", width);
    bn.beta = json_vec(j, "beta", width);
    bn.running_mean = json_vec(j, "running_mean", width);
    bn.running_var = json_vec(j, "running_var", width);
    bn.epsilon = j.value("epsilon", 1e-5);
    bn.momentum = j.value("momentum", 0.1);
    return bn;
}

}  // namespace

void save_params(const MlpParams& params, const TrainedOn& meta,
                 const std::filesystem::path& path) {
    params.validate();
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["dims"] = params.dims;
    j["layers"] = nlohmann::ordered_json::array({
        dense_to_json(params.dense1),
        bn_to_json(params.bn1),
        dense_to_json(params.dense2),
        bn_to_json(params.bn2),
        dense_to_json(params.dense3),
    });
    j["trained_on"] = {
        {"scenario", meta.scenario},
        {"seed", meta.seed},
        {"dataset_hash", meta.dataset_hash},
        {"config_fingerprint", meta.config_fingerprint},
    };
    std::ofstream os(path);
    if (!os) throw CorruptModel("cannot open model file for writing: " + path.string());
    os << j.dump(1) << '\n';
    if (!os) throw CorruptModel("failed writing model file: " + path.string());
}

MlpParams load_params(const std::filesystem::path& path, TrainedOn* meta) {
    std::ifstream is(path);
    if (!is) throw CorruptModel("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel("model file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer()) {
        throw CorruptModel("model: missing format_version");
    }
    if (j["format_version"].get<int>() != kFormatVersion) {
        throw CorruptModel("model: unsupported format_version " +
                           std::to_string(j["format_version"].get<int>()));
    }
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].size() != 4) {
        throw CorruptModel("model: dims header must have 4 entries");
    }
    std::array<int, 4> dims{};
    for (std::size_t i = 0; i < 4; ++i) dims[i] = j["dims"][i].get<int>();
    if (dims[0] != kInputDim || dims[3] != kNumClasses || dims[1] < 1 || dims[2] < 1) {
        throw CorruptModel("model: dims must be [12, h1, h2, 5]");
    }
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].size() != 5) {
        throw CorruptModel("model: expected 5 layers (dense, bn, dense, bn, dense)");
    }

    MlpParams p;
    p.dims = dims;
    try {
        p.dense1 = dense_from_json(j["layers"][0], dims[1], dims[0]);
        p.bn1 = bn_from_json(j["layers"][1], dims[1]);
        p.dense2 = dense_from_json(j["layers"][2], dims[2], dims[1]);
        p.bn2 = bn_from_json(j["layers"][3], dims[2]);
        p.dense3 = dense_from_json(j["layers"][4], dims[3], dims[2]);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel("model: malformed layer data: " + std::string(e.what()));
    }
    p.mode = Mode::Eval;
    try {
        p.validate();
    } catch (const MlpError& e) {
        throw CorruptModel(std::string("model: ") + e.what());
    }
    if (meta != nullptr && j.contains("trained_on") && j["trained_on"].is_object()) {
        const auto& t = j["trained_on"];
        meta->scenario = t.value("scenario", "");
        meta->seed = t.value("seed", std::uint64_t{0});
        meta->dataset_hash = t.value("dataset_hash", "");
        meta->config_fingerprint = t.value("config_fingerprint", "");
    }
    return p;
}

FusedMlp fuse(const MlpParams& params) {
    params.validate();
    if (params.mode != Mode::Eval) throw MlpError("fuse: params must be in eval mode");
    FusedMlp f;
    f.h1 = params.dims[1];
    f.h2 = params.dims[2];

    auto fold = [](const DenseLayer& dense, const BatchNormLayer& bn, std::vector<double>& w,
                   std::vector<double>& b) {
        const int out = dense.weight.rows;
        const int in = dense.weight.cols;
        w.assign(static_cast<std::size_t>(out) * static_cast<std::size_t>(in), 0.0);
        b.assign(static_cast<std::size_t>(out), 0.0);
        for (int o = 0; o < out; ++o) {
            const double scale =
                bn.gamma[static_cast<std::size_t>(o)] /
                std::sqrt(bn.running_var[static_cast<std::size_t>(o)] + bn.epsilon);
            for (int j = 0; j < in; ++j) {
                w[static_cast<std::size_t>(o) * in + j] = scale * dense.weight(o, j);
            }
            b[static_cast<std::size_t>(o)] =
                scale * (dense.bias[static_cast<std::size_t>(o)] -
                         bn.running_mean[static_cast<std::size_t>(o)]) +
                bn.beta[static_cast<std::size_t>(o)];
        }
    };
    fold(params.dense1, params.bn1, f.w1, f.b1);
    fold(params.dense2, params.bn2, f.w2, f.b2);
    f.w3 = params.dense3.weight.a;
    f.b3 = params.dense3.bias;
    return f;
}

void FusedMlp::infer(const double* features12, double* probs5, Scratch& scratch) const {
    double* a1 = scratch.a1.data();
    double* a2 = scratch.a2.data();
    for (int o = 0; o < h1; ++o) {
        const double* wo = &w1[static_cast<std::size_t>(o) * kInputDim];
        double acc = b1[static_cast<std::size_t>(o)];
        for (int j = 0; j < kInputDim; ++j) acc += wo[j] * features12[j];
        a1[o] = acc > 0.0 ? acc : 0.0;
    }
    for (int o = 0; o < h2; ++o) {
        const double* wo = &w2[static_cast<std::size_t>(o) * h1];
        double acc = b2[static_cast<std::size_t>(o)];
        for (int j = 0; j < h1; ++j) acc += wo[j] * a1[j];
        a2[o] = acc > 0.0 ? acc : 0.0;
    }
    double logits[kNumClasses];
    double mx = 0.0;
    for (int o = 0; o < kNumClasses; ++o) {
        const double* wo = &w3[static_cast<std::size_t>(o) * h2];
        double acc = b3[static_cast<std::size_t>(o)];
        for (int j = 0; j < h2; ++j) acc += wo[j] * a2[j];
        logits[o] = acc;
        if (o == 0 || acc > mx) mx = acc;
    }
    double z = 0.0;
    for (int o = 0; o < kNumClasses; ++o) {
        probs5[o] = std::exp(logits[o] - mx);
        z += probs5[o];
    }
    const double inv = 1.0 / z;
    for (int o = 0; o < kNumClasses; ++o) probs5[o] *= inv;
}

std::array<double, kNumClasses> fused_inference(const FusedMlp& net,
                                                std::span<const double> features) {
    if (features.size() != static_cast<std::size_t>(kInputDim)) {
        throw MlpError("fused_inference: expected 12 features");
    }
    auto scratch = net.make_scratch();
    std::array<double, kNumClasses> probs{};
    net.infer(features.data(), probs.data(), scratch);
    return probs;
}

}  // namespace radmat
