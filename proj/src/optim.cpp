#include "gcnh/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcnh/error.hpp"

namespace gcnh {

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& config) {
    if (state.first_moment.empty()) {
        for (const Tensor& p : params) {
            state.first_moment.emplace_back(p.rows(), p.cols());
            state.second_moment.emplace_back(p.rows(), p.cols());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter count changed between steps");
    }
    ++state.step;
    const auto t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& value = params[i].value();
        const Matrix& grad = params[i].grad();
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        if (!m.same_shape(value)) {
            throw ShapeError("adam_step: moment shape mismatch");
        }
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j] + config.weight_decay * value[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            value[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

namespace {

double eval_loss(const std::function<Tensor(Tape&)>& loss_fn) {
    Tape tape;
    const double loss = loss_fn(tape).item();
    if (!std::isfinite(loss)) {
        throw NonFiniteError("finite_diff_check: loss is not finite");
    }
    return loss;
}

} // namespace

GradCheckResult finite_diff_check(const std::function<Tensor(Tape&)>& loss_fn,
                                  std::span<Tensor> params, const GradCheckOptions& options) {
    for (Tensor& p : params) {
        p.zero_grad();
    }
    {
        Tape tape;
        Tensor loss = loss_fn(tape);
        if (!std::isfinite(loss.item())) {
            throw NonFiniteError("finite_diff_check: loss is not finite");
        }
        tape.backward(loss);
    }

    GradCheckResult result;
    Rng rng(options.seed);
    for (Tensor& p : params) {
        const Matrix analytic = p.grad();
        if (!analytic.all_finite()) {
            throw NonFiniteError("finite_diff_check: analytic gradient is not finite");
        }
        std::vector<std::size_t> coords(p.value().size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.max_coords_per_tensor > 0 && coords.size() > options.max_coords_per_tensor) {
            rng.shuffle(std::span<std::size_t>(coords));
            coords.resize(options.max_coords_per_tensor);
        }
        for (std::size_t idx : coords) {
            double& slot = p.value()[idx];
            const double saved = slot;
            slot = saved + options.step;
            const double plus = eval_loss(loss_fn);
            slot = saved - options.step;
            const double minus = eval_loss(loss_fn);
            slot = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[idx];
            const double diff = std::abs(a - numeric);
            const double err = diff / std::max(options.denominator_floor, std::abs(a) + std::abs(numeric));
            result.max_relative_error = std::max(result.max_relative_error, err);
            result.max_abs_error = std::max(result.max_abs_error, diff);
            ++result.coords_checked;
        }
    }
    return result;
}

} // namespace gcnh
