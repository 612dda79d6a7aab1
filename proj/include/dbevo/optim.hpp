#pragma once

// Ten first-order optimizers behind one stepping interface, plus the
// learning-rate schedules used to drive them.

#include "dbevo/mlp.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dbevo {

enum class OptimizerKind { sgd, asgd, adagrad, adadelta, adam, adamw, adamax, nadam, radam, rmsprop };

inline constexpr std::array<OptimizerKind, 10> kAllOptimizers{
    OptimizerKind::sgd,   OptimizerKind::asgd,  OptimizerKind::adagrad, OptimizerKind::adadelta,
    OptimizerKind::adam,  OptimizerKind::adamw, OptimizerKind::adamax,  OptimizerKind::nadam,
    OptimizerKind::radam, OptimizerKind::rmsprop,
};

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

/// Every knob any variant reads. Fields a variant does not use are ignored.
struct OptimizerHyper {
    double momentum = 0.0;        // sgd, rmsprop
    double weight_decay = 0.0;    // coupled L2 for all variants except adamw (decoupled)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double rho = 0.9;             // adadelta
    double alpha = 0.99;          // rmsprop smoothing
    double lr_decay = 0.0;        // adagrad
    double momentum_decay = 4e-3; // nadam
    double asgd_lambda = 1e-4;    // asgd step-size annealing
    double asgd_power = 0.75;     // asgd step-size exponent
    double asgd_t0 = 1e6;         // asgd averaging start

    friend bool operator==(const OptimizerHyper&, const OptimizerHyper&) = default;
};

/// The variant's published defaults with weight decay 0.
OptimizerHyper default_hyper(OptimizerKind kind);
double default_lr(OptimizerKind kind);

class Optimizer {
public:
    Optimizer(OptimizerKind kind, OptimizerHyper hyper, std::size_t num_params);

    /// Updates `params` in place. Throws ShapeMismatch on size disagreement and
    /// NonFiniteGradient (before touching any state) on NaN/Inf gradients.
    void step(std::span<double> params, std::span<const double> grads, double lr);
    void step(NetParams& params, const NetParams& grads, double lr);

    OptimizerKind kind() const noexcept { return kind_; }
    const OptimizerHyper& hyper() const noexcept { return hyper_; }
    std::uint64_t steps() const noexcept { return t_; }

    /// ASGD's running average of iterates (empty for the other variants). Before
    /// step asgd_t0 + 1 it tracks the latest iterate.
    std::span<const double> averaged() const noexcept { return ax_; }
    /// `like` with its values replaced by averaged(); a copy of `like` when there
    /// is no average.
    NetParams averaged_params(const NetParams& like) const;

private:
    OptimizerKind kind_;
    OptimizerHyper hyper_;
    std::uint64_t t_ = 0;
    std::vector<double> buf1_;  // momentum / first moment / square average / accumulator
    std::vector<double> buf2_;  // second moment / infinity norm / delta accumulator
    std::vector<double> ax_;    // asgd average
    double mu_product_ = 1.0;   // nadam
    std::vector<double> flat_params_;
    std::vector<double> flat_grads_;
};

enum class ScheduleKind { constant, cosine };

struct LrSchedule {
    ScheduleKind kind = ScheduleKind::cosine;
    double lr_max = 0.1;
    double lr_min = 0.0;
    std::uint64_t total_steps = 1;
};

/// cosine: lr_min + (lr_max - lr_min)(1 + cos(pi t / T)) / 2; constant: lr_max.
/// Throws StepOutOfRange unless 0 <= t <= T.
double schedule_lr(const LrSchedule& schedule, std::uint64_t t);

std::string_view schedule_name(ScheduleKind kind);
ScheduleKind parse_schedule(std::string_view name);

} // namespace dbevo
