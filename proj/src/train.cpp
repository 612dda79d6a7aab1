#include "dbevo/train.hpp"

#include "dbevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dbevo {

namespace {

constexpr double kMilestoneStep = 0.05;
constexpr double kFineTuneThreshold = 0.99;

// Index of the highest multiple of 0.05 not above `acc`. The slack absorbs
// rounding in ratios such as 12/20.
long threshold_index(double acc) {
    return static_cast<long>(std::floor(acc / kMilestoneStep + 1e-9));
}

std::string fmt(double x) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << x;
    return os.str();
}

Matrix batch_rows(const Matrix& features, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = features.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

} // namespace

Metrics evaluate(const NetParams& params, const LabeledDataset& data) {
    if (data.size() == 0) {
        fail(Errc::EmptyDataset, "cannot evaluate on an empty dataset");
    }
    const ForwardResult fr = forward(params, data.features);
    const std::size_t c = params.config.num_classes;
    std::vector<std::size_t> hits(c, 0);
    std::vector<std::size_t> totals(c, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = fr.logits.row(i);
        const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        const auto y = data.labels[i];
        if (y >= c) {
            fail(Errc::BadClass, "label " + std::to_string(y) + " out of range");
        }
        ++totals[y];
        if (pred == y) {
            ++hits[y];
            ++correct;
        }
    }
    Metrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    m.recall.resize(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
        if (totals[k] > 0) {
            m.recall[k] = static_cast<double>(hits[k]) / static_cast<double>(totals[k]);
        }
    }
    m.loss = loss(params, data.features, data.labels);
    return m;
}

OptimizerSetup optimizer_preset(std::string_view recipe) {
    OptimizerSetup s;
    auto sgd = [&](double lr, ScheduleKind kind) {
        s.kind = OptimizerKind::sgd;
        s.hyper = default_hyper(OptimizerKind::sgd);
        s.hyper.momentum = kDefaultMomentum;
        s.schedule = {kind, lr, 0.0, 1};
    };
    if (recipe == "sgd-anneal") {
        sgd(0.1, ScheduleKind::cosine);
    } else if (recipe == "sgd-big") {
        sgd(0.01, ScheduleKind::constant);
    } else if (recipe == "sgd-small") {
        sgd(1e-4, ScheduleKind::constant);
    } else {
        s.kind = parse_optimizer(recipe);
        s.hyper = default_hyper(s.kind);
        if (s.kind == OptimizerKind::sgd) {
            s.hyper.momentum = kDefaultMomentum;
        }
        s.schedule = {ScheduleKind::cosine, default_lr(s.kind), 0.0, 1};
    }
    s.hyper.weight_decay = kDefaultWeightDecay;
    return s;
}

std::map<std::string, std::string> config_snapshot(const TrainConfig& config) {
    std::map<std::string, std::string> kv;
    const auto& net = config.net;
    kv["run_id"] = config.run_id;
    kv["epochs"] = std::to_string(config.epochs);
    kv["batch_size"] = std::to_string(config.batch_size);
    kv["seed"] = std::to_string(config.seed);
    kv["net.input_dim"] = std::to_string(net.input_dim);
    std::string widths;
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        widths += (i ? "," : "") + std::to_string(net.hidden[i]);
    }
    kv["net.hidden"] = widths;
    kv["net.num_classes"] = std::to_string(net.num_classes);
    kv["net.variant"] = std::string(variant_name(net.variant));
    kv["net.seed"] = std::to_string(net.seed);
    const auto& o = config.optimizer;
    kv["optimizer"] = std::string(optimizer_name(o.kind));
    kv["optimizer.momentum"] = fmt(o.hyper.momentum);
    kv["optimizer.weight_decay"] = fmt(o.hyper.weight_decay);
    kv["optimizer.beta1"] = fmt(o.hyper.beta1);
    kv["optimizer.beta2"] = fmt(o.hyper.beta2);
    kv["optimizer.eps"] = fmt(o.hyper.eps);
    kv["optimizer.rho"] = fmt(o.hyper.rho);
    kv["optimizer.alpha"] = fmt(o.hyper.alpha);
    kv["optimizer.lr_decay"] = fmt(o.hyper.lr_decay);
    kv["optimizer.momentum_decay"] = fmt(o.hyper.momentum_decay);
    kv["optimizer.asgd_lambda"] = fmt(o.hyper.asgd_lambda);
    kv["optimizer.asgd_power"] = fmt(o.hyper.asgd_power);
    kv["optimizer.asgd_t0"] = fmt(o.hyper.asgd_t0);
    kv["schedule"] = std::string(schedule_name(o.schedule.kind));
    kv["schedule.lr_max"] = fmt(o.schedule.lr_max);
    kv["schedule.lr_min"] = fmt(o.schedule.lr_min);
    return kv;
}

bool milestone_policy(double best_so_far, double current) {
    if (threshold_index(current) > threshold_index(best_so_far)) {
        return true;
    }
    return current > kFineTuneThreshold && current > best_so_far;
}

RunArchive train(const TrainConfig& config, const LabeledDataset& train_set) {
    if (train_set.size() == 0) {
        fail(Errc::EmptyDataset, "training set is empty");
    }
    if (config.batch_size == 0) {
        fail(Errc::InvalidArgument, "batch size must be positive");
    }
    if (train_set.features.cols() != config.net.input_dim) {
        fail(Errc::ShapeMismatch, "dataset dimension does not match the network input");
    }

    RunArchive archive;
    archive.run_id = config.run_id;
    archive.config = config_snapshot(config);

    NetParams params = init_params(config.net);
    Optimizer opt(config.optimizer.kind, config.optimizer.hyper, param_count(params));
    LrSchedule schedule = config.optimizer.schedule;
    schedule.total_steps = std::max<std::uint64_t>(config.epochs, 1);

    const Metrics initial = evaluate(params, train_set);
    archive.milestones.push_back({0, initial.accuracy, params});
    double best_saved = initial.accuracy;
    double last_accuracy = initial.accuracy;

    const std::size_t n = train_set.size();
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = schedule_lr(schedule, epoch - 1);
        const NetParams epoch_start = params;
        const auto order = epoch_order(n, config.seed, epoch);
        try {
            for (std::size_t start = 0; start < n; start += config.batch_size) {
                const std::size_t stop = std::min(n, start + config.batch_size);
                const std::span<const std::size_t> rows(order.data() + start, stop - start);
                const Matrix batch = batch_rows(train_set.features, rows);
                std::vector<std::uint32_t> labels;
                labels.reserve(rows.size());
                for (auto r : rows) {
                    labels.push_back(train_set.labels[r]);
                }
                const auto lg = loss_and_grads(params, batch, labels);
                if (!std::isfinite(lg.loss)) {
                    fail(Errc::Diverged, "non-finite loss in epoch " + std::to_string(epoch));
                }
                opt.step(params, lg.grads, lr);
            }
        } catch (const Error& e) {
            if (e.code() != Errc::Diverged && e.code() != Errc::NonFiniteGradient) {
                throw;
            }
            archive.diverged = true;
            archive.divergence = e.what();
            if (archive.milestones.back().epoch != epoch - 1) {
                archive.milestones.push_back({epoch - 1, last_accuracy, epoch_start});
            }
            return archive;
        }

        const Metrics m = evaluate(params, train_set);
        if (!std::isfinite(m.loss)) {
            archive.diverged = true;
            archive.divergence = "Diverged: non-finite training loss after epoch " + std::to_string(epoch);
            if (archive.milestones.back().epoch != epoch - 1) {
                archive.milestones.push_back({epoch - 1, last_accuracy, epoch_start});
            }
            return archive;
        }
        archive.log.push_back({epoch, lr, m.loss, m.accuracy, m.recall});
        last_accuracy = m.accuracy;
        if (epoch == config.epochs || milestone_policy(best_saved, m.accuracy)) {
            archive.milestones.push_back({epoch, m.accuracy, params});
            best_saved = std::max(best_saved, m.accuracy);
        }
    }
    return archive;
}

} // namespace dbevo
