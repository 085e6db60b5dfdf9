#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gcnh/matrix.hpp"
#include "gcnh/rng.hpp"
#include "gcnh/tensor.hpp"

namespace gcnh {

struct AdamConfig {
    double learning_rate = 5e-3;
    /// Coupled L2 decay: weight_decay * param is added to the gradient.
    double weight_decay = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::size_t step = 0;
};

/// One Adam update with bias correction on each parameter, using the
/// gradients currently stored in the tensors. Moments are created on the
/// first call.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& config);

struct GradCheckOptions {
    double step = 1e-5;
    /// Coordinates sampled per tensor; 0 checks every coordinate.
    std::size_t max_coords_per_tensor = 0;
    std::uint64_t seed = 0;
    /// Lower bound on |analytic| + |numeric| in the relative error. Central
    /// differences carry roundoff near eps * |loss| / step (about 1e-11 at
    /// step 1e-5), so gradients below this floor are compared absolutely.
    double denominator_floor = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t coords_checked = 0;
};

/// Compares the analytic gradient of `loss_fn` against central differences.
///
/// `loss_fn` must build a deterministic 1x1 loss on the given tape. The
/// relative error per coordinate is |a - n| / max(1e-8, |a| + |n|).
/// Throws NonFiniteError if any evaluated loss is not finite.
GradCheckResult finite_diff_check(const std::function<Tensor(Tape&)>& loss_fn,
                                  std::span<Tensor> params, const GradCheckOptions& options = {});

} // namespace gcnh
