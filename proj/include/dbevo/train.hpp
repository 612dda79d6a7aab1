#pragma once

// Seeded training loop that archives "predecessor" checkpoints at train
// accuracy milestones, plus evaluation metrics.

#include "dbevo/mlp.hpp"
#include "dbevo/optim.hpp"
#include "dbevo/synthdata.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dbevo {

struct Metrics {
    double accuracy = 0.0;
    std::vector<double> recall;  // per class; 0 for classes absent from the data
    double loss = 0.0;
};

/// Throws EmptyDataset on an empty set.
Metrics evaluate(const NetParams& params, const LabeledDataset& data);

/// Optimizer, hyperparameters and schedule shape for a named training recipe.
/// The schedule's total_steps is filled in from the epoch count at train time.
struct OptimizerSetup {
    OptimizerKind kind = OptimizerKind::sgd;
    OptimizerHyper hyper;
    LrSchedule schedule;
};

/// Recipes: "sgd-anneal" (lr 0.1, cosine), "sgd-big" (0.01 constant),
/// "sgd-small" (1e-4 constant), all with momentum 0.9; or any optimizer name,
/// giving its default lr cosine-annealed to 0. Every recipe uses weight decay 5e-4.
OptimizerSetup optimizer_preset(std::string_view recipe);

/// The ten recipes of the optimizer profile.
inline constexpr std::array<std::string_view, 10> kProfileRecipes{
    "sgd-anneal", "asgd", "adagrad", "adadelta", "adam", "adamw", "adamax", "nadam", "radam", "rmsprop",
};

inline constexpr double kDefaultWeightDecay = 5e-4;
inline constexpr double kDefaultMomentum = 0.9;

struct TrainConfig {
    std::string run_id = "run";
    NetConfig net;
    OptimizerSetup optimizer = optimizer_preset("sgd-anneal");
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    std::uint64_t seed = 7;  // data order; the net has its own seed in `net`
};

/// Flat key=value view of a TrainConfig, used for run snapshots.
std::map<std::string, std::string> config_snapshot(const TrainConfig& config);

struct EpochLog {
    std::uint64_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    std::vector<double> recall;
};

struct Milestone {
    std::uint64_t epoch = 0;
    double train_accuracy = 0.0;
    NetParams params;
};

struct RunArchive {
    std::string run_id;
    std::map<std::string, std::string> config;
    std::vector<Milestone> milestones;  // ordered; milestone 0 is the untrained model
    std::vector<EpochLog> log;
    bool diverged = false;
    std::string divergence;

    /// The last milestone is always the final model.
    const Milestone& final_milestone() const { return milestones.back(); }
};

/// Stateless save rule. `best_so_far` is the best accuracy among saved
/// milestones. Saves when `current` reaches a multiple of 0.05 that
/// `best_so_far` had not, or when current > 0.99 and improves strictly.
bool milestone_policy(double best_so_far, double current);

/// Trains on `train_set`, evaluating on it after every epoch. A non-finite loss
/// or gradient stops the run: the archive is returned flagged as diverged, with
/// the last finite parameters as its final milestone.
RunArchive train(const TrainConfig& config, const LabeledDataset& train_set);

} // namespace dbevo
