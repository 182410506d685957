#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpbf/dataset.hpp"

namespace lpbf {

using Matrix = Eigen::MatrixXd;

/// One LSTM layer. Every gate matrix is (q + q_in) x q and multiplies the
/// row-wise concatenation [h | x]; rows 0..q-1 act on h, rows q.. on x.
/// Biases are 1 x q and broadcast over the batch.
struct LstmLayerParams {
    int q_in = 1;
    int q = 0;
    Matrix Wc, Wu, Wf, Wo;
    Matrix bc, bu, bf, bo;

    static LstmLayerParams zeros(int q_in, int q);
};

/// Fully connected output: y = h W + b with W q x 1, b 1 x 1.
struct DenseHead {
    Matrix W;
    Matrix b;
};

/// Parameter set of the stack; also used for gradients and Adam moments.
struct LstmParams {
    std::vector<LstmLayerParams> layers;
    DenseHead head;

    static LstmParams zeros(int input_width, int hidden, int num_layers = 3);

    /// All tensors in a fixed order: per layer Wc, Wu, Wf, Wo, bc, bu, bf, bo,
    /// then head W, head b.
    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;
    std::vector<std::string> tensor_names() const;
    void set_zero();
    std::size_t parameter_count() const;
};

struct TrainConfig {
    int batch = 6;
    int epochs = 350;
    double learning_rate = 0.008;
    double lr_drop_factor = 0.99;
    int lr_drop_period = 12;
    double dropout = 0.25;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int hidden = 128;
    int layers = 3;
    /// Global L2 gradient norm limit; non-positive disables clipping.
    double gradient_threshold = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
    double learning_rate_at(int epoch) const;
};

class LstmModel {
public:
    LstmModel() = default;
    LstmModel(LstmParams params, NormStats norm);

    /// Uniform weights in +-1/sqrt(fan_in), zero biases.
    static LstmModel initialized(int hidden, int num_layers, std::uint64_t seed,
                                 NormStats norm = {});

    const LstmParams& params() const { return params_; }
    /// Mutable access bumps the version, invalidating outstanding forward caches.
    LstmParams& mutable_params() {
        ++version_;
        return params_;
    }
    const NormStats& norm() const { return norm_; }
    void set_norm(const NormStats& n) { norm_ = n; }
    int hidden() const { return params_.layers.empty() ? 0 : params_.layers.front().q; }
    int num_layers() const { return static_cast<int>(params_.layers.size()); }
    std::uint64_t version() const { return version_; }

private:
    LstmParams params_;
    NormStats norm_;
    std::uint64_t version_ = 0;
};

/// The four gate matrices side by side, (q + q_in) x 4q, column blocks in
/// the order c~, u, f, o. Lets a cell evaluate all gates with one product.
struct FusedLayer {
    int q_in = 1;
    int q = 0;
    Matrix W;
    Matrix b;  // 1 x 4q

    static FusedLayer from(const LstmLayerParams& p);
    /// Adds the column blocks of `fused` onto the matching tensors of `p`.
    static void accumulate_into(const FusedLayer& fused, LstmLayerParams& p);
};

struct CellCache {
    Matrix z;       // [h_prev | x]
    Matrix gates;   // activated [c~ | gate_u | gate_f | gate_o]
    Matrix c_prev;
    Matrix c, tanh_c, h;

    auto c_tilde() const { return gates.middleCols(0, c.cols()); }
    auto gate_u() const { return gates.middleCols(c.cols(), c.cols()); }
    auto gate_f() const { return gates.middleCols(2 * c.cols(), c.cols()); }
    auto gate_o() const { return gates.middleCols(3 * c.cols(), c.cols()); }
};

struct CellOutput {
    Matrix h;
    Matrix c;
    CellCache cache;
};

/// c~ = tanh([h|x] W_c + b_c), gates u, f, o = sigmoid([h|x] W + b),
/// c = u * c~ + f * c_prev, h = o * tanh(c).
CellOutput cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                        const LstmLayerParams& p);
CellOutput cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                        const FusedLayer& p);

struct CellGrads {
    Matrix dx;
    Matrix dh_prev;
    Matrix dc_prev;
};

/// Backpropagates dL/dh and dL/dc (the latter from the next time step)
/// through one cell, accumulating parameter gradients into `grads`.
CellGrads cell_backward(const CellCache& cache, const LstmLayerParams& p, const Matrix& dh,
                        const Matrix& dc, LstmLayerParams& grads);
CellGrads cell_backward(const CellCache& cache, const FusedLayer& p, const Matrix& dh,
                        const Matrix& dc, FusedLayer& grads);

enum class Mode { Train, Eval };

struct ForwardPass {
    Mode mode = Mode::Eval;
    std::uint64_t model_version = 0;
    bool consumed = false;
    double dropout = 0.0;
    std::vector<std::vector<CellCache>> caches;  // [layer][t]
    std::vector<std::vector<Matrix>> masks;      // [layer][t], train mode only
    std::vector<Matrix> head_inputs;             // dropped top-layer outputs per t
    std::vector<Matrix> outputs;                 // T entries of b x 1
};

/// Runs the stack over a time-major sequence (T entries of b x n) from zero
/// states. In train mode every layer's output passed upward is multiplied by
/// an inverted-dropout mask drawn from `seed`.
ForwardPass stack_forward(const std::vector<Matrix>& sequence, const LstmModel& model, Mode mode,
                          double dropout = 0.0, std::uint64_t seed = 0);

/// (1 / (2 eta b)) sum (p - y)^2.
double loss_hmse(const Matrix& p, const Matrix& y);

/// Mean of loss_hmse over the time steps of a sequence.
double sequence_loss(const std::vector<Matrix>& p, const std::vector<Matrix>& y);

/// d sequence_loss / d p for each time step.
std::vector<Matrix> sequence_loss_grad(const std::vector<Matrix>& p, const std::vector<Matrix>& y);

/// Full backpropagation through time. Consumes the pass; throws
/// std::logic_error on reuse, on an eval-mode pass, or when the model changed
/// since the forward pass.
LstmParams backward(ForwardPass& pass, const LstmModel& model,
                    const std::vector<Matrix>& output_grads);

struct AdamState {
    LstmParams m;
    LstmParams v;
    long step = 0;

    static AdamState for_params(const LstmParams& p);
};

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

/// Normalized series and the windows the trainer draws batches from.
struct TrainingData {
    std::vector<double> normalized;
    std::vector<TrainWindow> windows;
    NormStats norm;
};

struct TrainResult {
    LstmModel model;
    std::vector<double> loss_history;  // mean batch loss per epoch
};

/// Epoch loop: windows are shuffled every epoch from the config seed, grouped
/// into batches of config.batch (the last batch may be smaller), trained with
/// teacher forcing on next-value targets and Adam. Throws NumericError when a
/// loss becomes non-finite.
TrainResult train(const TrainingData& data, const TrainConfig& config);

/// Stateful eval-mode stepping, used for closed-loop forecasting.
class LstmRunner {
public:
    LstmRunner(const LstmModel& model, int rows);
    /// Feeds one b x 1 input, returns the b x 1 head output.
    Matrix step(const Matrix& x);

private:
    const LstmModel& model_;
    std::vector<FusedLayer> fused_;
    std::vector<Matrix> h_, c_;
};

/// Conditions on the last history_length values of each history (physical
/// units), then emits `steps` values closed-loop, de-normalized.
std::vector<std::vector<double>> forecast_batch(const LstmModel& model,
                                                const std::vector<std::span<const double>>& histories,
                                                int history_length, int steps = kSubdomains);

std::vector<double> forecast(const LstmModel& model, std::span<const double> history,
                             int history_length, int steps = kSubdomains);

}  // namespace lpbf
