#include "dbevo/optim.hpp"

#include "dbevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dbevo {

namespace {

void flatten_into(const NetParams& p, std::vector<double>& out) {
    out.clear();
    for (const auto& r : param_refs(p)) {
        out.insert(out.end(), r.values.begin(), r.values.end());
    }
}

} // namespace

std::string_view optimizer_name(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::asgd: return "asgd";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::adadelta: return "adadelta";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamw: return "adamw";
    case OptimizerKind::adamax: return "adamax";
    case OptimizerKind::nadam: return "nadam";
    case OptimizerKind::radam: return "radam";
    case OptimizerKind::rmsprop: return "rmsprop";
    }
    return "unknown";
}

OptimizerKind parse_optimizer(std::string_view name) {
    for (auto k : kAllOptimizers) {
        if (optimizer_name(k) == name) {
            return k;
        }
    }
    fail(Errc::InvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

OptimizerHyper default_hyper(OptimizerKind kind) {
    OptimizerHyper h;
    switch (kind) {
    case OptimizerKind::adagrad:
        h.eps = 1e-10;
        break;
    case OptimizerKind::adadelta:
        h.eps = 1e-6;
        break;
    default:
        break;
    }
    return h;
}

double default_lr(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::sgd: return 0.1;
    case OptimizerKind::asgd: return 0.01;
    case OptimizerKind::adagrad: return 0.01;
    case OptimizerKind::adadelta: return 1.0;
    case OptimizerKind::adam: return 1e-3;
    case OptimizerKind::adamw: return 1e-3;
    case OptimizerKind::adamax: return 2e-3;
    case OptimizerKind::nadam: return 2e-3;
    case OptimizerKind::radam: return 1e-3;
    case OptimizerKind::rmsprop: return 1e-2;
    }
    return 1e-3;
}

Optimizer::Optimizer(OptimizerKind kind, OptimizerHyper hyper, std::size_t num_params)
    : kind_(kind), hyper_(hyper), buf1_(num_params, 0.0), buf2_(num_params, 0.0) {
    if (kind_ == OptimizerKind::asgd) {
        ax_.assign(num_params, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != buf1_.size() || grads.size() != buf1_.size()) {
        fail(Errc::ShapeMismatch, "optimizer holds " + std::to_string(buf1_.size()) + " parameters, got " +
                                      std::to_string(params.size()) + " params / " + std::to_string(grads.size()) +
                                      " grads");
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        fail(Errc::InvalidArgument, "learning rate must be finite and nonnegative");
    }
    if (!std::all_of(grads.begin(), grads.end(), [](double g) { return std::isfinite(g); })) {
        fail(Errc::NonFiniteGradient, "gradient contains NaN or Inf at step " + std::to_string(t_ + 1));
    }

    ++t_;
    const auto t = static_cast<double>(t_);
    const auto& h = hyper_;
    const std::size_t n = params.size();
    const double wd = h.weight_decay;

    switch (kind_) {
    case OptimizerKind::sgd:
        // v <- mu v + (g + wd theta); theta <- theta - lr v
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.momentum * buf1_[i] + g;
            params[i] -= lr * buf1_[i];
        }
        break;

    case OptimizerKind::asgd: {
        // Averaged SGD with the annealed step eta_t = lr / (1 + lambda lr (t-1))^power.
        // Iterates are averaged from step t0 + 1 onwards: ax <- ax + (theta - ax) / max(1, t - t0).
        const double eta = lr / std::pow(1.0 + h.asgd_lambda * lr * (t - 1.0), h.asgd_power);
        const double mu = 1.0 / std::max(1.0, t - h.asgd_t0);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            params[i] -= eta * g;
            ax_[i] += mu * (params[i] - ax_[i]);
        }
        break;
    }

    case OptimizerKind::adagrad: {
        const double clr = lr / (1.0 + (t - 1.0) * h.lr_decay);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] += g * g;
            params[i] -= clr * g / (std::sqrt(buf1_[i]) + h.eps);
        }
        break;
    }

    case OptimizerKind::adadelta:
        // buf1 = E[g^2], buf2 = E[dx^2]
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.rho * buf1_[i] + (1.0 - h.rho) * g * g;
            const double delta = std::sqrt(buf2_[i] + h.eps) / std::sqrt(buf1_[i] + h.eps) * g;
            buf2_[i] = h.rho * buf2_[i] + (1.0 - h.rho) * delta * delta;
            params[i] -= lr * delta;
        }
        break;

    case OptimizerKind::adam:
    case OptimizerKind::adamw: {
        const bool decoupled = kind_ == OptimizerKind::adamw;
        const double bc1 = 1.0 - std::pow(h.beta1, t);
        const double bc2 = 1.0 - std::pow(h.beta2, t);
        for (std::size_t i = 0; i < n; ++i) {
            double g = grads[i];
            if (decoupled) {
                params[i] -= lr * wd * params[i];
            } else {
                g += wd * params[i];
            }
            buf1_[i] = h.beta1 * buf1_[i] + (1.0 - h.beta1) * g;
            buf2_[i] = h.beta2 * buf2_[i] + (1.0 - h.beta2) * g * g;
            const double m_hat = buf1_[i] / bc1;
            const double v_hat = buf2_[i] / bc2;
            params[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
        }
        break;
    }

    case OptimizerKind::adamax: {
        // u <- max(beta2 u, |g| + eps); eps inside the max keeps u positive.
        const double clr = lr / (1.0 - std::pow(h.beta1, t));
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.beta1 * buf1_[i] + (1.0 - h.beta1) * g;
            buf2_[i] = std::max(h.beta2 * buf2_[i], std::abs(g) + h.eps);
            params[i] -= clr * buf1_[i] / buf2_[i];
        }
        break;
    }

    case OptimizerKind::nadam: {
        // Momentum schedule mu_t = beta1 (1 - 0.5 * 0.96^(t * psi)), psi = momentum_decay.
        const double mu = h.beta1 * (1.0 - 0.5 * std::pow(0.96, t * h.momentum_decay));
        const double mu_next = h.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * h.momentum_decay));
        mu_product_ *= mu;
        const double bc2 = 1.0 - std::pow(h.beta2, t);
        const double grad_coef = lr * (1.0 - mu) / (1.0 - mu_product_);
        const double mom_coef = lr * mu_next / (1.0 - mu_product_ * mu_next);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.beta1 * buf1_[i] + (1.0 - h.beta1) * g;
            buf2_[i] = h.beta2 * buf2_[i] + (1.0 - h.beta2) * g * g;
            const double denom = std::sqrt(buf2_[i] / bc2) + h.eps;
            params[i] -= grad_coef * g / denom;
            params[i] -= mom_coef * buf1_[i] / denom;
        }
        break;
    }

    case OptimizerKind::radam: {
        // rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t); the adaptive step is used
        // once rho_t > 4, scaled by the variance rectification term r_t.
        const double b2t = std::pow(h.beta2, t);
        const double bc1 = 1.0 - std::pow(h.beta1, t);
        const double bc2 = 1.0 - b2t;
        const double rho_inf = 2.0 / (1.0 - h.beta2) - 1.0;
        const double rho_t = rho_inf - 2.0 * t * b2t / bc2;
        const bool rectified = rho_t > 4.0;
        const double r = rectified ? std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf /
                                               ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                                   : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.beta1 * buf1_[i] + (1.0 - h.beta1) * g;
            buf2_[i] = h.beta2 * buf2_[i] + (1.0 - h.beta2) * g * g;
            const double m_hat = buf1_[i] / bc1;
            if (rectified) {
                params[i] -= lr * r * m_hat / (std::sqrt(buf2_[i] / bc2) + h.eps);
            } else {
                params[i] -= lr * m_hat;
            }
        }
        break;
    }

    case OptimizerKind::rmsprop:
        // buf1 = square average, buf2 = momentum buffer
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + wd * params[i];
            buf1_[i] = h.alpha * buf1_[i] + (1.0 - h.alpha) * g * g;
            const double update = g / (std::sqrt(buf1_[i]) + h.eps);
            if (h.momentum > 0.0) {
                buf2_[i] = h.momentum * buf2_[i] + update;
                params[i] -= lr * buf2_[i];
            } else {
                params[i] -= lr * update;
            }
        }
        break;
    }
}

void Optimizer::step(NetParams& params, const NetParams& grads, double lr) {
    flatten_into(params, flat_params_);
    flatten_into(grads, flat_grads_);
    step(std::span<double>(flat_params_), std::span<const double>(flat_grads_), lr);
    std::size_t offset = 0;
    for (auto& r : param_refs(params)) {
        std::copy_n(flat_params_.begin() + static_cast<std::ptrdiff_t>(offset), r.values.size(), r.values.begin());
        offset += r.values.size();
    }
}

NetParams Optimizer::averaged_params(const NetParams& like) const {
    NetParams out = like;
    if (ax_.empty()) {
        return out;
    }
    if (param_count(like) != ax_.size()) {
        fail(Errc::ShapeMismatch, "averaged parameters do not match the given network");
    }
    std::size_t offset = 0;
    for (auto& r : param_refs(out)) {
        std::copy_n(ax_.begin() + static_cast<std::ptrdiff_t>(offset), r.values.size(), r.values.begin());
        offset += r.values.size();
    }
    return out;
}

double schedule_lr(const LrSchedule& schedule, std::uint64_t t) {
    if (schedule.total_steps == 0) {
        fail(Errc::InvalidArgument, "schedule needs at least one step");
    }
    if (t > schedule.total_steps) {
        fail(Errc::StepOutOfRange, "step " + std::to_string(t) + " beyond schedule length " +
                                       std::to_string(schedule.total_steps));
    }
    if (schedule.kind == ScheduleKind::constant) {
        return schedule.lr_max;
    }
    if (t == schedule.total_steps) {
        return schedule.lr_min;
    }
    const double frac = static_cast<double>(t) / static_cast<double>(schedule.total_steps);
    return schedule.lr_min + 0.5 * (schedule.lr_max - schedule.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

std::string_view schedule_name(ScheduleKind kind) {
    return kind == ScheduleKind::cosine ? "cosine" : "constant";
}

ScheduleKind parse_schedule(std::string_view name) {
    if (name == "cosine") {
        return ScheduleKind::cosine;
    }
    if (name == "constant") {
        return ScheduleKind::constant;
    }
    fail(Errc::InvalidArgument, "unknown schedule '" + std::string(name) + "'");
}

} // namespace dbevo
