#include "lpbf/lstm.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lpbf/errors.hpp"
#include "lpbf/rng.hpp"

namespace lpbf {

namespace {

Matrix sigmoid(const Matrix& a) {
    return (1.0 + (-a.array()).exp()).inverse().matrix();
}

Matrix affine(const Matrix& z, const Matrix& w, const Matrix& b) {
    Matrix out = z * w;
    out.rowwise() += b.row(0);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

}  // namespace

LstmLayerParams LstmLayerParams::zeros(int q_in, int q) {
    LstmLayerParams p;
    p.q_in = q_in;
    p.q = q;
    for (Matrix* w : {&p.Wc, &p.Wu, &p.Wf, &p.Wo}) {
        *w = Matrix::Zero(q + q_in, q);
    }
    for (Matrix* b : {&p.bc, &p.bu, &p.bf, &p.bo}) {
        *b = Matrix::Zero(1, q);
    }
    return p;
}

LstmParams LstmParams::zeros(int input_width, int hidden, int num_layers) {
    require(input_width > 0 && hidden > 0 && num_layers > 0, "LstmParams: non-positive shape");
    LstmParams p;
    for (int k = 0; k < num_layers; ++k) {
        p.layers.push_back(LstmLayerParams::zeros(k == 0 ? input_width : hidden, hidden));
    }
    p.head.W = Matrix::Zero(hidden, 1);
    p.head.b = Matrix::Zero(1, 1);
    return p;
}

std::vector<Matrix*> LstmParams::tensors() {
    std::vector<Matrix*> out;
    for (auto& l : layers) {
        out.insert(out.end(), {&l.Wc, &l.Wu, &l.Wf, &l.Wo, &l.bc, &l.bu, &l.bf, &l.bo});
    }
    out.push_back(&head.W);
    out.push_back(&head.b);
    return out;
}

std::vector<const Matrix*> LstmParams::tensors() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers) {
        out.insert(out.end(), {&l.Wc, &l.Wu, &l.Wf, &l.Wo, &l.bc, &l.bu, &l.bf, &l.bo});
    }
    out.push_back(&head.W);
    out.push_back(&head.b);
    return out;
}

std::vector<std::string> LstmParams::tensor_names() const {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const std::string p = "layer" + std::to_string(k + 1) + "_";
        for (const char* n : {"W_c", "W_u", "W_f", "W_o", "b_c", "b_u", "b_f", "b_o"}) {
            names.push_back(p + n);
        }
    }
    names.push_back("head_W");
    names.push_back("head_b");
    return names;
}

void LstmParams::set_zero() {
    for (Matrix* t : tensors()) {
        t->setZero();
    }
}

std::size_t LstmParams::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors()) {
        n += static_cast<std::size_t>(t->size());
    }
    return n;
}

void TrainConfig::validate() const {
    require(batch >= 1, "train config: batch must be >= 1");
    require(epochs >= 1, "train config: epochs must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate),
            "train config: learning rate must be positive");
    require(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0,
            "train config: learning rate drop factor must lie in (0, 1]");
    require(lr_drop_period >= 1, "train config: learning rate drop period must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "train config: dropout must lie in [0, 1)");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
            "train config: Adam moment factors must lie in [0, 1)");
    require(epsilon > 0.0, "train config: Adam epsilon must be positive");
    require(hidden >= 1 && layers >= 1, "train config: hidden width and layers must be >= 1");
}

double TrainConfig::learning_rate_at(int epoch) const {
    return learning_rate * std::pow(lr_drop_factor, epoch / lr_drop_period);
}

LstmModel::LstmModel(LstmParams params, NormStats norm)
    : params_(std::move(params)), norm_(norm) {}

LstmModel LstmModel::initialized(int hidden, int num_layers, std::uint64_t seed, NormStats norm) {
    LstmParams p = LstmParams::zeros(1, hidden, num_layers);
    Rng rng(seed);
    auto fill = [&](Matrix& m) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.rows()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                m(r, c) = rng.uniform(-bound, bound);
            }
        }
    };
    for (auto& l : p.layers) {
        fill(l.Wc);
        fill(l.Wu);
        fill(l.Wf);
        fill(l.Wo);
    }
    fill(p.head.W);
    return LstmModel(std::move(p), norm);
}

FusedLayer FusedLayer::from(const LstmLayerParams& p) {
    FusedLayer f;
    f.q_in = p.q_in;
    f.q = p.q;
    f.W.resize(p.q + p.q_in, 4 * p.q);
    f.W << p.Wc, p.Wu, p.Wf, p.Wo;
    f.b.resize(1, 4 * p.q);
    f.b << p.bc, p.bu, p.bf, p.bo;
    return f;
}

void FusedLayer::accumulate_into(const FusedLayer& fused, LstmLayerParams& p) {
    const int q = p.q;
    p.Wc += fused.W.middleCols(0, q);
    p.Wu += fused.W.middleCols(q, q);
    p.Wf += fused.W.middleCols(2 * q, q);
    p.Wo += fused.W.middleCols(3 * q, q);
    p.bc += fused.b.middleCols(0, q);
    p.bu += fused.b.middleCols(q, q);
    p.bf += fused.b.middleCols(2 * q, q);
    p.bo += fused.b.middleCols(3 * q, q);
}

namespace {

// Completes a cell given pre = x W_x + b; the recurrent part h W_h is added
// here so every caller sums the terms in the same order.
void finish_cell(const Matrix& pre, const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                 const FusedLayer& p, CellCache& k) {
    const int q = p.q;
    k.z.resize(x.rows(), q + p.q_in);
    k.z << h_prev, x;
    k.c_prev = c_prev;
    k.gates = pre;
    k.gates.noalias() += h_prev * p.W.topRows(q);
    k.gates.middleCols(0, q) = k.gates.middleCols(0, q).array().tanh();
    k.gates.middleCols(q, 3 * q) = sigmoid(k.gates.middleCols(q, 3 * q));
    k.c = (k.gates.middleCols(q, q).array() * k.gates.middleCols(0, q).array() +
           k.gates.middleCols(2 * q, q).array() * c_prev.array())
              .matrix();
    k.tanh_c = k.c.array().tanh().matrix();
    k.h = (k.gates.middleCols(3 * q, q).array() * k.tanh_c.array()).matrix();
}

// Pre-activation gradients of one cell into `da`; replaces `dc` with the
// gradient flowing to c_prev.
void gate_grads(const CellCache& k, const Matrix& dh, Matrix& dc, Eigen::Ref<Matrix> da) {
    const Eigen::Index q = k.c.cols();
    const auto ct = k.c_tilde().array();
    const auto gu = k.gate_u().array();
    const auto gf = k.gate_f().array();
    const auto go = k.gate_o().array();
    const Eigen::ArrayXXd dct = dc.array() + dh.array() * go * (1.0 - k.tanh_c.array().square());
    da.middleCols(0, q) = (dct * gu * (1.0 - ct.square())).matrix();
    da.middleCols(q, q) = (dct * ct * gu * (1.0 - gu)).matrix();
    da.middleCols(2 * q, q) = (dct * k.c_prev.array() * gf * (1.0 - gf)).matrix();
    da.middleCols(3 * q, q) = (dh.array() * k.tanh_c.array() * go * (1.0 - go)).matrix();
    dc = (dct * gf).matrix();
}

}  // namespace

CellOutput cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                        const FusedLayer& p) {
    require(x.cols() == p.q_in, "cell_forward: input width mismatch");
    require(h_prev.cols() == p.q && c_prev.cols() == p.q, "cell_forward: state width mismatch");
    require(x.rows() == h_prev.rows() && x.rows() == c_prev.rows(),
            "cell_forward: batch size mismatch");
    CellOutput out;
    finish_cell(affine(x, p.W.bottomRows(p.q_in), p.b), x, h_prev, c_prev, p, out.cache);
    out.h = out.cache.h;
    out.c = out.cache.c;
    return out;
}

CellOutput cell_forward(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                        const LstmLayerParams& p) {
    return cell_forward(x, h_prev, c_prev, FusedLayer::from(p));
}

CellGrads cell_backward(const CellCache& k, const FusedLayer& p, const Matrix& dh,
                        const Matrix& dc_in, FusedLayer& grads) {
    CellGrads g;
    Matrix da(dh.rows(), 4 * p.q);
    g.dc_prev = dc_in;
    gate_grads(k, dh, g.dc_prev, da);
    grads.W.noalias() += k.z.transpose() * da;
    grads.b += da.colwise().sum();
    const Matrix dz = da * p.W.transpose();
    g.dh_prev = dz.leftCols(p.q);
    g.dx = dz.rightCols(p.q_in);
    return g;
}

CellGrads cell_backward(const CellCache& cache, const LstmLayerParams& p, const Matrix& dh,
                        const Matrix& dc, LstmLayerParams& grads) {
    const FusedLayer fused = FusedLayer::from(p);
    FusedLayer g = fused;
    g.W.setZero();
    g.b.setZero();
    CellGrads out = cell_backward(cache, fused, dh, dc, g);
    FusedLayer::accumulate_into(g, grads);
    return out;
}

ForwardPass stack_forward(const std::vector<Matrix>& sequence, const LstmModel& model, Mode mode,
                          double dropout, std::uint64_t seed) {
    const LstmParams& params = model.params();
    require(!params.layers.empty(), "stack_forward: model has no layers");
    require(dropout >= 0.0 && dropout < 1.0, "stack_forward: dropout must lie in [0, 1)");
    require(!sequence.empty(), "stack_forward: empty sequence");

    const Eigen::Index rows = sequence.front().rows();
    const std::size_t steps = sequence.size();
    const std::size_t depth = params.layers.size();
    const bool drop = mode == Mode::Train && dropout > 0.0;

    ForwardPass pass;
    pass.mode = mode;
    pass.model_version = model.version();
    pass.dropout = drop ? dropout : 0.0;
    pass.caches.assign(depth, {});
    pass.masks.assign(depth, {});
    pass.head_inputs.reserve(steps);
    pass.outputs.reserve(steps);

    Rng rng(seed);
    const double keep_scale = drop ? 1.0 / (1.0 - dropout) : 1.0;
    std::vector<Matrix> layer_input = sequence;
    for (std::size_t k = 0; k < depth; ++k) {
        const FusedLayer p = FusedLayer::from(params.layers[k]);
        // input contributions of all time steps in one product
        Matrix stacked(rows * static_cast<Eigen::Index>(steps), p.q_in);
        for (std::size_t t = 0; t < steps; ++t) {
            require(layer_input[t].rows() == rows && layer_input[t].cols() == p.q_in,
                    "stack_forward: ragged batch");
            stacked.middleRows(rows * t, rows) = layer_input[t];
        }
        const Matrix pre = affine(stacked, p.W.bottomRows(p.q_in), p.b);
        Matrix h = Matrix::Zero(rows, p.q);
        Matrix c = Matrix::Zero(rows, p.q);
        pass.caches[k].resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            CellCache& cache = pass.caches[k][t];
            finish_cell(pre.middleRows(rows * t, rows), layer_input[t], h, c, p, cache);
            h = cache.h;
            c = cache.c;
            if (drop) {
                Matrix mask(rows, p.q);
                for (Eigen::Index col = 0; col < mask.cols(); ++col) {
                    for (Eigen::Index r = 0; r < rows; ++r) {
                        mask(r, col) = rng.uniform() < dropout ? 0.0 : keep_scale;
                    }
                }
                layer_input[t] = (h.array() * mask.array()).matrix();
                pass.masks[k].push_back(std::move(mask));
            } else {
                layer_input[t] = h;
            }
        }
    }
    for (std::size_t t = 0; t < steps; ++t) {
        pass.outputs.push_back(affine(layer_input[t], params.head.W, params.head.b));
        pass.head_inputs.push_back(std::move(layer_input[t]));
    }
    return pass;
}

double loss_hmse(const Matrix& p, const Matrix& y) {
    require(p.rows() == y.rows() && p.cols() == y.cols(), "loss_hmse: shape mismatch");
    require(p.size() > 0, "loss_hmse: empty input");
    return (p - y).squaredNorm() / (2.0 * static_cast<double>(p.rows() * p.cols()));
}

double sequence_loss(const std::vector<Matrix>& p, const std::vector<Matrix>& y) {
    require(p.size() == y.size() && !p.empty(), "sequence_loss: length mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        sum += loss_hmse(p[t], y[t]);
    }
    return sum / static_cast<double>(p.size());
}

std::vector<Matrix> sequence_loss_grad(const std::vector<Matrix>& p, const std::vector<Matrix>& y) {
    require(p.size() == y.size() && !p.empty(), "sequence_loss_grad: length mismatch");
    std::vector<Matrix> g;
    g.reserve(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        require(p[t].rows() == y[t].rows() && p[t].cols() == y[t].cols(),
                "sequence_loss_grad: shape mismatch");
        const double denom = static_cast<double>(p[t].size()) * static_cast<double>(p.size());
        g.push_back((p[t] - y[t]) / denom);
    }
    return g;
}

LstmParams backward(ForwardPass& pass, const LstmModel& model,
                    const std::vector<Matrix>& output_grads) {
    if (pass.consumed) {
        throw std::logic_error("backward: forward cache already consumed");
    }
    if (pass.mode != Mode::Train) {
        throw std::logic_error("backward: forward pass was not run in train mode");
    }
    if (pass.model_version != model.version()) {
        throw std::logic_error("backward: model parameters changed since the forward pass");
    }
    require(output_grads.size() == pass.outputs.size(), "backward: gradient length mismatch");
    pass.consumed = true;

    const LstmParams& params = model.params();
    const std::size_t steps = pass.outputs.size();
    const std::size_t depth = params.layers.size();
    LstmParams grads = LstmParams::zeros(params.layers.front().q_in, params.layers.front().q,
                                         static_cast<int>(depth));

    // gradient w.r.t. the (dropped) output of the layer currently processed
    std::vector<Matrix> d_out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const Matrix& dy = output_grads[t];
        grads.head.W.noalias() += pass.head_inputs[t].transpose() * dy;
        grads.head.b += dy.colwise().sum();
        d_out[t] = dy * params.head.W.transpose();
    }

    for (std::size_t kk = depth; kk-- > 0;) {
        const FusedLayer p = FusedLayer::from(params.layers[kk]);
        const Eigen::Index rows = d_out.front().rows();
        const Eigen::Index total = rows * static_cast<Eigen::Index>(steps);
        // only the recurrent path is sequential; weight and input gradients
        // are taken over all time steps at once afterwards
        Matrix da(total, 4 * p.q);
        Matrix z(total, p.q + p.q_in);
        Matrix dh_next = Matrix::Zero(rows, p.q);
        Matrix dc_next = Matrix::Zero(rows, p.q);
        for (std::size_t t = steps; t-- > 0;) {
            Matrix dh = pass.dropout > 0.0
                            ? Matrix((d_out[t].array() * pass.masks[kk][t].array()).matrix())
                            : d_out[t];
            dh += dh_next;
            const CellCache& cache = pass.caches[kk][t];
            auto da_t = da.middleRows(rows * t, rows);
            gate_grads(cache, dh, dc_next, da_t);
            dh_next.noalias() = da_t * p.W.topRows(p.q).transpose();
            z.middleRows(rows * t, rows) = cache.z;
        }
        FusedLayer g = p;
        g.W.noalias() = z.transpose() * da;
        g.b = da.colwise().sum();
        FusedLayer::accumulate_into(g, grads.layers[kk]);
        const Matrix dx = da * p.W.bottomRows(p.q_in).transpose();
        for (std::size_t t = 0; t < steps; ++t) {
            d_out[t] = dx.middleRows(rows * t, rows);
        }
    }
    return grads;
}

AdamState AdamState::for_params(const LstmParams& p) {
    AdamState s{p, p, 0};
    s.m.set_zero();
    s.v.set_zero();
    return s;
}

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double epsilon) {
    auto pt = params.tensors();
    auto gt = grads.tensors();
    auto mt = state.m.tensors();
    auto vt = state.v.tensors();
    require(pt.size() == gt.size() && pt.size() == mt.size() && pt.size() == vt.size(),
            "adam_step: parameter structure mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < pt.size(); ++k) {
        require(pt[k]->rows() == gt[k]->rows() && pt[k]->cols() == gt[k]->cols(),
                "adam_step: tensor shape mismatch");
        auto g = gt[k]->array();
        auto m = mt[k]->array();
        auto v = vt[k]->array();
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.square();
        pt[k]->array() -= lr * (m / c1) / ((v / c2).sqrt() + epsilon);
    }
}

namespace {

double global_norm(const LstmParams& g) {
    double sq = 0.0;
    for (const Matrix* t : g.tensors()) {
        sq += t->squaredNorm();
    }
    return std::sqrt(sq);
}

}  // namespace

TrainResult train(const TrainingData& data, const TrainConfig& config) {
    config.validate();
    if (data.windows.empty()) {
        throw std::invalid_argument("train: no training windows");
    }

    TrainResult result;
    result.model = LstmModel::initialized(config.hidden, config.layers,
                                          derive_seed(config.seed, "init"), data.norm);
    AdamState adam = AdamState::for_params(result.model.params());
    Rng order_rng(derive_seed(config.seed, "shuffle"));
    Rng mask_rng(derive_seed(config.seed, "dropout"));

    std::vector<TrainWindow> order = data.windows;
    result.loss_history.reserve(config.epochs);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(order.begin(), order.end());
        const double lr = config.learning_rate_at(epoch);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t first = 0; first < order.size(); first += config.batch) {
            const std::size_t count = std::min<std::size_t>(config.batch, order.size() - first);
            const SampleBatch batch =
                make_batch(data.normalized, std::span<const TrainWindow>(&order[first], count));

            std::vector<Matrix> inputs(batch.steps());
            std::vector<Matrix> targets(batch.steps());
            for (int t = 0; t < batch.steps(); ++t) {
                inputs[t] = Eigen::Map<const Matrix>(batch.inputs[t].data(), batch.rows(), 1);
                targets[t] = Eigen::Map<const Matrix>(batch.targets[t].data(), batch.rows(), 1);
            }

            ForwardPass pass = stack_forward(inputs, result.model, Mode::Train, config.dropout,
                                             mask_rng.next());
            const double loss = sequence_loss(pass.outputs, targets);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "training diverged: non-finite loss at epoch " << epoch + 1 << ", batch "
                   << batches + 1 << " (learning rate " << lr << ")";
                throw NumericError(os.str());
            }
            LstmParams grads =
                backward(pass, result.model, sequence_loss_grad(pass.outputs, targets));
            if (config.gradient_threshold > 0.0) {
                const double norm = global_norm(grads);
                if (norm > config.gradient_threshold) {
                    const double s = config.gradient_threshold / norm;
                    for (Matrix* t : grads.tensors()) {
                        *t *= s;
                    }
                }
            }
            adam_step(result.model.mutable_params(), grads, adam, lr, config.beta1, config.beta2,
                      config.epsilon);
            epoch_loss += loss;
            ++batches;
        }
        result.loss_history.push_back(epoch_loss / batches);
    }
    return result;
}

LstmRunner::LstmRunner(const LstmModel& model, int rows) : model_(model) {
    for (const auto& l : model.params().layers) {
        fused_.push_back(FusedLayer::from(l));
        h_.push_back(Matrix::Zero(rows, l.q));
        c_.push_back(Matrix::Zero(rows, l.q));
    }
}

Matrix LstmRunner::step(const Matrix& x) {
    const LstmParams& p = model_.params();
    Matrix in = x;
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        CellOutput o = cell_forward(in, h_[k], c_[k], fused_[k]);
        h_[k] = std::move(o.h);
        c_[k] = std::move(o.c);
        in = h_[k];
    }
    return affine(in, p.head.W, p.head.b);
}

std::vector<std::vector<double>> forecast_batch(const LstmModel& model,
                                                const std::vector<std::span<const double>>& histories,
                                                int history_length, int steps) {
    require(history_length >= 1, "forecast: history length must be positive");
    require(steps >= 1, "forecast: steps must be positive");
    const int rows = static_cast<int>(histories.size());
    if (rows == 0) {
        return {};
    }
    for (const auto& h : histories) {
        if (static_cast<int>(h.size()) < history_length) {
            throw std::invalid_argument("forecast: history holds " + std::to_string(h.size()) +
                                        " values, " + std::to_string(history_length) +
                                        " are required");
        }
    }
    const NormStats& norm = model.norm();
    LstmRunner runner(model, rows);
    Matrix x(rows, 1);
    Matrix y;
    for (int t = 0; t < history_length; ++t) {
        for (int r = 0; r < rows; ++r) {
            const auto& h = histories[r];
            x(r, 0) = norm.apply(h[h.size() - history_length + t]);
        }
        y = runner.step(x);
    }
    std::vector<std::vector<double>> out(rows, std::vector<double>(steps));
    for (int s = 0; s < steps; ++s) {
        for (int r = 0; r < rows; ++r) {
            out[r][s] = norm.invert(y(r, 0));
        }
        if (s + 1 < steps) {
            y = runner.step(y);
        }
    }
    return out;
}

std::vector<double> forecast(const LstmModel& model, std::span<const double> history,
                             int history_length, int steps) {
    return forecast_batch(model, {history}, history_length, steps).front();
}

}  // namespace lpbf
