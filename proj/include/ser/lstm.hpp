#ifndef SER_LSTM_HPP
#define SER_LSTM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ser/matrix.hpp"

namespace ser {

// One LSTM layer. Each gate weight acts on the concatenation [h_{t-1}, x_t]
// (hidden part first), so W_* has shape (H, H+D) and b_* is a 1xH row.
struct LstmLayerParams {
    Matrix W_f, W_i, W_c, W_o;
    Matrix b_f, b_i, b_c, b_o;
    int input_dim = 0;
    int hidden_dim = 0;

    static LstmLayerParams zeros(int input_dim, int hidden_dim);
};

// Per-timestep activations cached for backpropagation through time.
// f, i, o lie in (0,1); c_tilde in (-1,1); c = f*c_prev + i*c_tilde and
// h = o*tanh(c) elementwise.
struct LstmStepState {
    std::vector<double> f, i, c_tilde, o, c, h;
};

struct ModelConfig {
    int num_lstm_layers = 2; // 1 or 2; the comparison harness needs both
    int hidden_dim = 128;
    int input_dim = 40;
    int seq_len = 20;
    int num_classes = 8;
    double dropout_rate = 0.001;
    bool flatten_all = true; // false: feed only the last hidden state to the head

    int dense_input_dim() const {
        return flatten_all ? seq_len * hidden_dim : hidden_dim;
    }
    std::int64_t param_count() const;
    void validate() const;
};

struct DenseParams {
    Matrix W; // (num_classes, dense_input_dim)
    Matrix b; // (1, num_classes)
};

struct ModelParams {
    ModelConfig cfg;
    std::vector<LstmLayerParams> layers;
    DenseParams dense;

    static ModelParams zeros(const ModelConfig& cfg);
    // Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in the
    // weight's column count; biases zero except the forget-gate bias, which
    // starts at 1. Draw order is the param_refs order, row-major per matrix.
    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
};

// Named view over every parameter block, in the canonical order
// lstm0.W_f, lstm0.W_i, lstm0.W_c, lstm0.W_o, lstm0.b_f..b_o, lstm1...,
// dense.W, dense.b. The optimizer, checkpoints and the gradient checker all
// iterate blocks in this order.
struct ParamRef {
    std::string name;
    Matrix* value;
};
std::vector<ParamRef> param_refs(ModelParams& p);
std::vector<std::pair<std::string, const Matrix*>> param_refs_const(const ModelParams& p);

// y += a * x over every block.
void params_axpy(ModelParams& y, const ModelParams& x, double a);
void params_scale(ModelParams& p, double a);

// One LSTM step:
//   f = sigmoid(W_f [h,x] + b_f)      i = sigmoid(W_i [h,x] + b_i)
//   c_tilde = tanh(W_c [h,x] + b_c)   c = f*c_prev + i*c_tilde
//   o = sigmoid(W_o [h,x] + b_o)      h = o*tanh(c)
LstmStepState lstm_cell_forward(const LstmLayerParams& p, std::span<const double> x_t,
                                std::span<const double> h_prev,
                                std::span<const double> c_prev);

// Applies the cell left to right over inputs (T, D), threading h and c from
// initial states h0/c0 (pass empty spans for zeros). Returns all T states.
std::vector<LstmStepState> lstm_sequence_forward(const LstmLayerParams& p,
                                                 const Matrix& inputs,
                                                 std::span<const double> h0 = {},
                                                 std::span<const double> c0 = {});

// Inverted-dropout mask of shape (t, h): entries are 0 with probability
// `rate`, else 1/(1-rate); drawn row-major from XorShift64(seed).
Matrix make_dropout_mask(int t, int h, double rate, std::uint64_t seed);

// Everything the backward pass needs from one forward pass.
struct ForwardCache {
    struct LayerCache {
        Matrix inputs; // (T, D_layer), post-dropout for the second layer
        std::vector<LstmStepState> steps;
    };
    std::vector<LayerCache> layers;
    Matrix dropout_mask; // (T, H) when dropout was applied, else 0x0
    Matrix flat;         // (1, dense_input_dim)
    Matrix logits;       // (1, C)
    Matrix probs;        // (1, C)
};

// Full model: stacked LSTM -> (dropout between layers while training) ->
// flatten -> dense -> softmax. Identical inputs, parameters, training flag
// and dropout_seed give bitwise identical outputs.
ForwardCache model_forward(const ModelParams& params, const Matrix& features, bool training,
                           std::uint64_t dropout_seed = 0);

// -ln(probs[true class]), probabilities clamped below at 1e-12.
double cross_entropy(const Matrix& probs, const Matrix& onehot);

// Analytic gradients of cross_entropy(model_forward(...)) with respect to
// every parameter, via the fused softmax shortcut dlogits = probs - onehot
// and backpropagation through time over both layers. Returns gradients in a
// ModelParams of matching shapes.
ModelParams model_backward(const ModelParams& params, const ForwardCache& cache,
                           const Matrix& onehot);

struct BatchStats {
    double mean_loss = 0.0;
    int correct = 0;
};

// Mean gradient over a batch. jobs == 1 accumulates in sample order and is
// bit-deterministic; jobs > 1 fans samples out to OpenMP threads and merges
// per-thread partials in thread order (per-sample losses are still summed in
// sample order, so the returned loss matches the serial path exactly).
BatchStats batch_forward_backward(const ModelParams& params,
                                  std::span<const Matrix* const> features,
                                  std::span<const int> label_indices,
                                  std::span<const std::uint64_t> dropout_seeds,
                                  bool training, int jobs, ModelParams& grads_out);

// Central finite-difference verification of model_backward. For every scalar
// parameter: n = (L(p+h) - L(p-h)) / 2h, compared against the analytic value
// as |a-n| / max(|a|, |n|, 1e-8), reported per block.
struct GradCheckReport {
    struct Block {
        std::string name;
        double max_rel_err = 0.0;
    };
    std::vector<Block> blocks;
    double max_rel_err = 0.0;
};

// Builds a random instance from `seed` and runs the comparison above. The
// loss is summed over a handful of samples with distinct labels and the
// weights are drawn wide, keeping every coordinate's gradient well above
// the cancellation noise floor of (L(p+h) - L(p-h)) at double precision.
// Refuses configurations too large for finite differences to finish quickly.
GradCheckReport gradient_check(const ModelConfig& cfg, std::uint64_t seed,
                               double step = 1e-5);

// Same comparison against caller-supplied analytic gradients of the summed
// loss over the given samples; the harness sensitivity tests corrupt one
// block and expect it to be flagged.
GradCheckReport compare_gradients_fd(ModelParams& params, std::span<const Matrix> features,
                                     std::span<const Matrix> onehots, bool training,
                                     std::span<const std::uint64_t> dropout_seeds,
                                     const ModelParams& analytic, double step = 1e-5);

} // namespace ser

#endif
