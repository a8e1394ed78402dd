#include "ser/adam.hpp"

#include <cmath>

namespace ser {

AdamState AdamState::create(const ModelConfig& cfg, double beta1, double beta2,
                            double epsilon) {
    AdamState s;
    s.m = ModelParams::zeros(cfg);
    s.v = ModelParams::zeros(cfg);
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr_t,
               double grad_clip) {
    if (lr_t <= 0.0) throw ConfigError("adam_step: lr_t must be positive");

    auto prefs = param_refs(params);
    auto grefs = param_refs_const(grads);
    auto mrefs = param_refs(state.m);
    auto vrefs = param_refs(state.v);
    if (prefs.size() != grefs.size())
        throw ShapeError("adam_step: parameter/gradient block count mismatch");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t b = 0; b < prefs.size(); ++b) {
        Matrix& theta = *prefs[b].value;
        const Matrix& g = *grefs[b].second;
        Matrix& m = *mrefs[b].value;
        Matrix& v = *vrefs[b].value;
        if (!theta.same_shape(g))
            throw ShapeError("adam_step: block " + prefs[b].name + " shapes differ, " +
                             shape_str(theta) + " vs " + shape_str(g));
        if (!all_finite(g))
            throw NumericError("adam_step: non-finite gradient in block " + prefs[b].name);

        double clip_scale = 1.0;
        if (grad_clip > 0.0) {
            double norm_sq = 0.0;
            for (double x : g.data) norm_sq += x * x;
            const double norm = std::sqrt(norm_sq);
            if (norm > grad_clip) clip_scale = grad_clip / norm;
        }

        for (std::size_t k = 0; k < theta.data.size(); ++k) {
            const double gk = g.data[k] * clip_scale;
            m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * gk;
            v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * gk * gk;
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            theta.data[k] -= lr_t * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

double lr_schedule(int epoch, double lr0, double decay, LrSchedule schedule, int step_every) {
    if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
    switch (schedule) {
    case LrSchedule::Step:
        return lr0 * std::pow(decay, static_cast<double>(epoch / step_every));
    case LrSchedule::Exponential:
    default:
        return lr0 * std::pow(decay, static_cast<double>(epoch));
    }
}

} // namespace ser
