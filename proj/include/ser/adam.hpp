#ifndef SER_ADAM_HPP
#define SER_ADAM_HPP

#include <cstdint>

#include "ser/lstm.hpp"

namespace ser {

// Adam optimizer state: first and second moment accumulators mirroring the
// parameter shapes, plus the shared step counter.
struct AdamState {
    ModelParams m;
    ModelParams v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState create(const ModelConfig& cfg, double beta1 = 0.9, double beta2 = 0.999,
                            double epsilon = 1e-8);
};

// One Adam update over every parameter block:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
//   theta <- theta - lr_t * mhat / (sqrt(vhat) + eps)
// with the usual 1/(1-b^t) bias corrections. Throws NumericError, naming the
// offending block, if any gradient entry is non-finite; grad_clip > 0 caps
// the per-block L2 norm first (off by default).
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr_t,
               double grad_clip = 0.0);

enum class LrSchedule { Exponential, Step };

// Exponential: lr0 * decay^epoch. Step: lr0 * decay^floor(epoch/step_every).
double lr_schedule(int epoch, double lr0, double decay,
                   LrSchedule schedule = LrSchedule::Exponential, int step_every = 20);

} // namespace ser

#endif
