// Benchmark of the parallel kernels against their serial reference paths:
// matmul (OpenMP rows vs plain triple loop, results must match bitwise) and
// the per-sample batch gradient fan-out (jobs = N vs jobs = 1, losses must
// match exactly, gradients to roundoff).

#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <thread>
#include <vector>

#include "ser/lstm.hpp"
#include "ser/matrix.hpp"
#include "ser/rng.hpp"

using namespace ser;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Matrix random_matrix(int r, int c, XorShift64& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void bench_matmul() {
    std::cout << "matmul: serial reference vs OpenMP rows\n";
    std::cout << std::left << std::setw(14) << "size" << std::setw(14) << "serial_s"
              << std::setw(14) << "parallel_s" << std::setw(10) << "speedup"
              << "bitwise\n";
    XorShift64 rng(42);
    for (int n : {64, 128, 256, 384, 512}) {
        Matrix a = random_matrix(n, n, rng);
        Matrix b = random_matrix(n, n, rng);
        Matrix serial_out, parallel_out;
        const double ts = time_best_of(3, [&] { serial_out = matmul_serial(a, b); });
        const double tp = time_best_of(3, [&] { parallel_out = matmul(a, b); });
        const bool same = serial_out.data.size() == parallel_out.data.size() &&
                          std::memcmp(serial_out.data.data(), parallel_out.data.data(),
                                      serial_out.data.size() * sizeof(double)) == 0;
        std::cout << std::setw(14) << (std::to_string(n) + "x" + std::to_string(n))
                  << std::setw(14) << ts << std::setw(14) << tp << std::setw(10)
                  << (tp > 0 ? ts / tp : 0.0) << (same ? "yes" : "NO") << "\n";
    }
}

void bench_batch_gradients() {
    ModelConfig cfg; // the full-size model: 2 layers, 128 hidden, 20x40 input
    const int batch = 32;
    const int jobs = static_cast<int>(std::thread::hardware_concurrency());

    ModelParams params = ModelParams::init(cfg, 7);
    XorShift64 rng(99);
    std::vector<Matrix> features;
    std::vector<const Matrix*> feature_ptrs;
    std::vector<int> labels;
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < batch; ++s) {
        features.push_back(random_matrix(cfg.seq_len, cfg.input_dim, rng));
        labels.push_back(static_cast<int>(rng.uniform_int(cfg.num_classes)));
        seeds.push_back(derive_seed(7, static_cast<std::uint64_t>(s)));
    }
    for (const Matrix& f : features) feature_ptrs.push_back(&f);

    ModelParams grads_serial = ModelParams::zeros(cfg);
    ModelParams grads_parallel = ModelParams::zeros(cfg);
    BatchStats serial_stats{}, parallel_stats{};

    const double ts = time_best_of(3, [&] {
        serial_stats = batch_forward_backward(params, feature_ptrs, labels, seeds, true, 1,
                                              grads_serial);
    });
    const double tp = time_best_of(3, [&] {
        parallel_stats = batch_forward_backward(params, feature_ptrs, labels, seeds, true,
                                                jobs, grads_parallel);
    });

    double max_grad_diff = 0.0;
    auto sref = param_refs_const(grads_serial);
    auto pref = param_refs_const(grads_parallel);
    for (std::size_t i = 0; i < sref.size(); ++i)
        for (std::size_t k = 0; k < sref[i].second->data.size(); ++k)
            max_grad_diff = std::max(max_grad_diff, std::abs(sref[i].second->data[k] -
                                                             pref[i].second->data[k]));

    std::cout << "\nbatch gradient (" << batch << " samples, "
              << cfg.param_count() << " params): jobs=1 vs jobs=" << jobs << "\n";
    std::cout << std::left << std::setw(14) << "serial_s" << std::setw(14) << "parallel_s"
              << std::setw(10) << "speedup" << std::setw(16) << "loss_diff"
              << "max_grad_diff\n";
    std::cout << std::setw(14) << ts << std::setw(14) << tp << std::setw(10)
              << (tp > 0 ? ts / tp : 0.0) << std::setw(16)
              << std::abs(serial_stats.mean_loss - parallel_stats.mean_loss)
              << max_grad_diff << "\n";
}

} // namespace

int main() {
    std::cout.precision(4);
#ifdef _OPENMP
    std::cout << "OpenMP enabled, " << std::thread::hardware_concurrency() << " CPUs\n\n";
#else
    std::cout << "built without OpenMP; parallel paths run serially\n\n";
#endif
    bench_matmul();
    bench_batch_gradients();
    return 0;
}
