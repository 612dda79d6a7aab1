#include "cli.hpp"

#include "dbevo/boundary.hpp"
#include "dbevo/checkpoint.hpp"
#include "dbevo/error.hpp"
#include "dbevo/fmx.hpp"
#include "dbevo/run_store.hpp"
#include "dbevo/spectra.hpp"
#include "dbevo/store.hpp"
#include "dbevo/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

namespace dbevo::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void usage(const std::string& msg) { fail(Errc::UsageError, msg); }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(s.substr(start, comma - start));
        if (comma == std::string::npos) {
            return out;
        }
        start = comma + 1;
    }
}

std::size_t class_index(const std::string& token, const std::vector<std::string>& names) {
    const auto it = std::find(names.begin(), names.end(), token);
    if (it != names.end()) {
        return static_cast<std::size_t>(it - names.begin());
    }
    std::size_t value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        usage("unknown class '" + token + "'");
    }
    if (!names.empty() && value >= names.size()) {
        usage("class index " + token + " out of range for " + std::to_string(names.size()) + " classes");
    }
    return value;
}

std::vector<std::size_t> parse_classes(const std::string& spec, std::size_t expected,
                                       const std::vector<std::string>& names) {
    const auto parts = split_list(spec);
    if (parts.size() != expected) {
        usage("expected " + std::to_string(expected) + " comma-separated classes, got '" + spec + "'");
    }
    std::vector<std::size_t> out;
    for (const auto& p : parts) {
        out.push_back(class_index(p, names));
    }
    return out;
}

// Text sink: a file when a path is given, otherwise `out`.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        write_text(path, text);
    }
}

void require_fresh_dir(const fs::path& dir) {
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
        fail(Errc::IoFailure, "refusing to write into non-empty directory " + dir.string());
    }
}

std::string milestone_tag(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", index);
    return buf;
}

struct DataOptions {
    double hard_distance = kDefaultHardDistance;
    std::size_t per_class = 500;
    std::uint64_t data_seed = 7;
    double test_fraction = 0.2;
    std::string train_fmx;
    std::string test_fmx;

    void add(CLI::App* app) {
        app->add_option("--hard-distance", hard_distance, "Mean distance of the hard (overlapping) class pair")
            ->capture_default_str();
        app->add_option("--per-class", per_class, "Samples per class in the generated task")->capture_default_str();
        app->add_option("--data-seed", data_seed, "Seed for the generated task and its split")->capture_default_str();
        app->add_option("--test-fraction", test_fraction, "Held-out fraction per class")->capture_default_str();
        app->add_option("--train-data", train_fmx, "Labeled FMX training set instead of the generated task");
        app->add_option("--test-data", test_fmx, "Labeled FMX test set (with --train-data)");
    }

    std::pair<LabeledDataset, LabeledDataset> load() const {
        if (!train_fmx.empty()) {
            LabeledDataset tr = from_fmx(read_fmx(train_fmx));
            LabeledDataset te{Matrix(0, tr.features.cols()), {}, tr.class_names, 0};
            if (!test_fmx.empty()) {
                te = from_fmx(read_fmx(test_fmx));
            }
            return {std::move(tr), std::move(te)};
        }
        if (!test_fmx.empty()) {
            usage("--test-data needs --train-data");
        }
        const LabeledDataset all = gaussian_mixture(reference_mixture(hard_distance, per_class), data_seed);
        auto split = split_train_test(all, test_fraction, data_seed);
        return {std::move(split.train), std::move(split.test)};
    }
};

struct TrainOptions {
    std::string run_id;
    std::string recipe = "sgd-anneal";
    std::optional<double> lr;
    std::string schedule;
    std::optional<double> momentum;
    std::optional<double> weight_decay;
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    std::uint64_t seed = 7;
    std::string hidden = "32,32";
    std::string variant = "plain";

    void add(CLI::App* app, bool with_recipe) {
        if (with_recipe) {
            app->add_option("--run-id", run_id, "Run identifier (defaults to the recipe name)");
            app->add_option("--recipe", recipe,
                            "sgd-anneal | sgd-big | sgd-small | sgd | asgd | adagrad | adadelta | adam | adamw | "
                            "adamax | nadam | radam | rmsprop")
                ->capture_default_str();
            app->add_option("--lr", lr, "Peak learning rate (overrides the recipe)");
            app->add_option("--schedule", schedule, "constant | cosine (overrides the recipe)");
            app->add_option("--momentum", momentum, "Momentum (overrides the recipe)");
        }
        app->add_option("--weight-decay", weight_decay, "Weight decay (default 5e-4)");
        app->add_option("--epochs", epochs)->capture_default_str();
        app->add_option("--batch-size", batch_size)->capture_default_str();
        app->add_option("--seed", seed, "Seed for initialization and data order")->capture_default_str();
        app->add_option("--hidden", hidden, "Hidden widths, comma-separated; the last is the embedding dim")
            ->capture_default_str();
        app->add_option("--variant", variant, "plain | residual")->capture_default_str();
    }

    TrainConfig config(const std::string& use_recipe, const LabeledDataset& data) const {
        TrainConfig c;
        c.run_id = run_id.empty() ? use_recipe : run_id;
        c.optimizer = optimizer_preset(use_recipe);
        if (lr) {
            c.optimizer.schedule.lr_max = *lr;
        }
        if (!schedule.empty()) {
            c.optimizer.schedule.kind = parse_schedule(schedule);
        }
        if (momentum) {
            c.optimizer.hyper.momentum = *momentum;
        }
        if (weight_decay) {
            c.optimizer.hyper.weight_decay = *weight_decay;
        }
        c.epochs = epochs;
        c.batch_size = batch_size;
        c.seed = seed;
        c.net.seed = seed;
        c.net.input_dim = data.features.cols();
        c.net.num_classes = data.num_classes();
        c.net.class_names = data.class_names;
        c.net.variant = parse_variant(variant);
        c.net.hidden.clear();
        for (const auto& w : split_list(hidden)) {
            const double x = parse_number(w);
            if (!(x >= 1.0) || x != std::floor(x)) {
                usage("hidden widths must be positive integers, got '" + hidden + "'");
            }
            c.net.hidden.push_back(static_cast<std::size_t>(x));
        }
        c.net.validate();
        return c;
    }
};

struct AnalysisOptions {
    std::string run;
    std::string split = "train";
    std::string milestone;  // empty: the command's default

    void add(CLI::App* app, const char* milestone_default) {
        app->add_option("--run", run, "Run directory written by `train`")->required();
        app->add_option("--split", split, "Dataset to analyze: train | test")->capture_default_str();
        app->add_option("--milestone", milestone, "Milestone index, 'final' or 'all'")->default_str(milestone_default);
    }

    const LabeledDataset& dataset(const StoredRun& r) const {
        if (split == "train") {
            return r.train_set;
        }
        if (split == "test") {
            return r.test_set;
        }
        usage("--split must be train or test");
    }

    std::vector<std::size_t> milestones(const RunArchive& a, bool allow_all) const {
        const std::size_t n = a.milestones.size();
        const std::string milestone = this->milestone.empty() ? (allow_all ? "all" : "final") : this->milestone;
        if (milestone == "final") {
            return {n - 1};
        }
        if (milestone == "all") {
            if (!allow_all) {
                usage("this command analyzes a single milestone");
            }
            std::vector<std::size_t> v(n);
            std::iota(v.begin(), v.end(), std::size_t{0});
            return v;
        }
        const double x = parse_number(milestone);
        if (!(x >= 0.0) || x >= static_cast<double>(n) || x != std::floor(x)) {
            usage("milestone '" + milestone + "' out of range (run has " + std::to_string(n) + ")");
        }
        return {static_cast<std::size_t>(x)};
    }
};

std::size_t worker_count() {
    const char* env = std::getenv("DBEVO_WORKERS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    const double x = parse_number(env);
    if (!(x >= 1.0) || x != std::floor(x)) {
        usage("DBEVO_WORKERS must be a positive integer");
    }
    return static_cast<std::size_t>(x);
}

// Moves key=value pairs from `--config FILE` in front of the flags, so flags given
// on the command line override the file. Unknown keys are usage errors.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& root) {
    if (args.empty()) {
        return args;
    }
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 >= args.size()) {
                usage("--config needs a file");
            }
            config_path = args[++k];
        } else if (args[k].rfind("--config=", 0) == 0) {
            config_path = args[k].substr(9);
        } else {
            rest.push_back(args[k]);
        }
    }
    std::vector<std::string> out{args[0]};
    if (!config_path.empty()) {
        const CLI::App* sub = nullptr;
        try {
            sub = root.get_subcommand(args[0]);
        } catch (const CLI::OptionNotFound&) {
            usage("unknown command '" + args[0] + "'");
        }
        std::set<std::string> known;
        for (const auto* opt : sub->get_options()) {
            for (const auto& name : opt->get_lnames()) {
                known.insert(name);
            }
        }
        known.erase("help");
        known.erase("config");
        std::map<std::string, std::string> kv;
        try {
            kv = parse_key_values(read_text(config_path));
        } catch (const Error& e) {
            usage("config file " + config_path + ": " + e.what());
        }
        for (const auto& [key, value] : kv) {
            if (!known.count(key)) {
                usage("unknown config key '" + key + "' for command " + args[0]);
            }
            out.push_back("--" + key + "=" + value);
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

void print_run_summary(const RunArchive& run, const LabeledDataset& test, std::ostream& out) {
    const Milestone& last = run.final_milestone();
    out << "run " << run.run_id << ": " << run.milestones.size() << " milestones, final epoch " << last.epoch
        << ", train_acc " << format_number(last.train_accuracy);
    if (test.size() > 0) {
        out << ", test_acc " << format_number(evaluate(last.params, test).accuracy);
    }
    if (run.diverged) {
        out << " (diverged: " << run.divergence << ")";
    }
    out << "\n";
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decision-boundary evolution analysis for class pairs in embedding space", "dbevo"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.footer("Every command accepts --config FILE with key=value lines named after its long flags.\n"
               "Flags on the command line override the file. DBEVO_WORKERS sets sweep parallelism.");

    std::function<void()> action;
    std::string config_dummy;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_dummy, "key=value file of flag defaults");
    };

    DataOptions data;
    TrainOptions topt;
    AnalysisOptions aopt;
    std::string out_path;
    std::string pair_spec;
    std::size_t neighbors = kDefaultNeighbors;
    GridSpec grid;
    bool svg = true;
    std::size_t num_var = 3;
    double fraction = kDefaultResistorFraction;
    std::string overlap_run;
    std::string recipes;
    std::string features_path;
    std::string head_path;
    std::string triple_spec;
    std::string checkpoint_path;
    std::string data_path;
    std::string features_out;
    std::string head_out;

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one run and write its archive directory");
    add_config(train_cmd);
    data.add(train_cmd);
    topt.add(train_cmd, true);
    train_cmd->add_option("--out", out_path, "Run directory to create")->required();
    train_cmd->callback([&] {
        action = [&] {
            require_fresh_dir(out_path);
            auto [tr, te] = data.load();
            const TrainConfig cfg = topt.config(topt.recipe, tr);
            const RunArchive run = dbevo::train(cfg, tr);
            save_run(out_path, run, tr, te);
            print_run_summary(run, te, out);
        };
    });

    // sweep-optimizers
    auto* sweep_cmd = app.add_subcommand("sweep-optimizers", "Train one run per optimizer and profile them");
    add_config(sweep_cmd);
    data.add(sweep_cmd);
    topt.add(sweep_cmd, false);
    sweep_cmd->add_option("--out", out_path, "Directory for the runs and the profile")->required();
    sweep_cmd->add_option("--recipes", recipes, "Comma-separated recipes (default: the ten profile recipes)");
    sweep_cmd->add_option("--pair", pair_spec, "Class pair for the spectra")->default_str("0,1");
    sweep_cmd->callback([&] {
        action = [&] {
            require_fresh_dir(out_path);
            auto [tr, te] = data.load();
            std::vector<std::string> names;
            if (recipes.empty()) {
                names.assign(kProfileRecipes.begin(), kProfileRecipes.end());
            } else {
                names = split_list(recipes);
            }
            std::vector<TrainConfig> configs;
            for (const auto& r : names) {
                TrainOptions o = topt;
                o.run_id = r;
                configs.push_back(o.config(r, tr));
            }
            const auto pair = parse_classes(pair_spec.empty() ? "0,1" : pair_spec, 2, tr.class_names);
            std::vector<RunArchive> runs(configs.size());
            std::vector<std::exception_ptr> failures(configs.size());
            std::size_t next = 0;
            std::mutex mu;
            auto worker = [&] {
                while (true) {
                    std::size_t k = 0;
                    {
                        std::lock_guard lock(mu);
                        if (next == configs.size()) {
                            return;
                        }
                        k = next++;
                    }
                    try {
                        runs[k] = dbevo::train(configs[k], tr);
                        save_run(fs::path(out_path) / names[k], runs[k], tr, te);
                    } catch (...) {
                        failures[k] = std::current_exception();
                    }
                }
            };
            std::vector<std::thread> pool;
            const std::size_t workers = std::min(worker_count(), configs.size());
            for (std::size_t w = 1; w < workers; ++w) {
                pool.emplace_back(worker);
            }
            worker();
            for (auto& t : pool) {
                t.join();
            }
            for (const auto& f : failures) {
                if (f) {
                    std::rethrow_exception(f);
                }
            }
            const auto rows = optimizer_profile(runs, pair[0], pair[1], tr, te);
            std::vector<std::string> files;
            for (const auto& row : rows) {
                files.push_back("spectrum_" + row.name + ".csv");
                write_text(fs::path(out_path) / files.back(), spectrum_csv(row.spectrum));
            }
            write_text(fs::path(out_path) / "profile.csv", profile_csv(rows, files));
            for (const auto& row : rows) {
                out << row.name << ": test_acc " << format_number(row.test_accuracy) << ", rank "
                    << row.spectrum.rank << ", sigma1 " << format_number(row.spectrum.sigma1())
                    << (row.diverged ? " (diverged)" : "") << "\n";
            }
        };
    });

    // boundary
    auto* boundary_cmd = app.add_subcommand("boundary", "Probability heat maps of a class pair per milestone");
    add_config(boundary_cmd);
    aopt.add(boundary_cmd, "all");
    boundary_cmd->add_option("--pair", pair_spec, "Class pair i,j (indices or names)")->required();
    boundary_cmd->add_option("--out", out_path, "Directory for heat-map files")->required();
    boundary_cmd->add_option("--resolution", grid.resolution)->capture_default_str();
    boundary_cmd->add_option("--margin", grid.margin, "Bounding-box margin per side")->capture_default_str();
    boundary_cmd->add_option("--neighbors", neighbors, "Nearest neighbors in the inverse map")
        ->capture_default_str();
    boundary_cmd->add_flag("--svg,!--no-svg", svg, "Also render SVG heat maps")->capture_default_str();
    boundary_cmd->callback([&] {
        action = [&] {
            require_fresh_dir(out_path);
            const StoredRun r = load_run(aopt.run);
            const LabeledDataset& ds = aopt.dataset(r);
            const auto pair = parse_classes(pair_spec, 2, ds.class_names);
            const auto which = aopt.milestones(r.archive, true);
            fs::create_directories(out_path);
            for (auto m : which) {
                const NetParams& params = r.archive.milestones[m].params;
                const PairAnalysis pa = analyze_pair(params, ds, pair[0], pair[1], 2);
                const HeatmapGrid g = heatmap(pa, params.head, grid, neighbors);
                const fs::path base = fs::path(out_path) / ("heatmap_" + milestone_tag(m));
                write_text(base.string() + ".csv", heatmap_csv(g));
                write_text(base.string() + ".bounds.csv", heatmap_bounds_csv(g));
                if (svg) {
                    emit_svg_heatmap(base.string() + ".svg", g, pa.coords);
                }
            }
            out << "wrote " << which.size() << " heat map(s) to " << out_path << "\n";
        };
    });

    // centers
    auto* centers_cmd = app.add_subcommand("centers", "Class-center trajectory CSV over the milestones");
    add_config(centers_cmd);
    aopt.add(centers_cmd, "all");
    centers_cmd->add_option("--pair", pair_spec, "Class pair i,j")->required();
    centers_cmd->add_option("--out", out_path, "CSV path (default stdout)");
    centers_cmd->callback([&] {
        action = [&] {
            const StoredRun r = load_run(aopt.run);
            const LabeledDataset& ds = aopt.dataset(r);
            const auto pair = parse_classes(pair_spec, 2, ds.class_names);
            emit(out_path, trajectory_csv(center_trajectory(r.archive, pair[0], pair[1], ds)), out);
        };
    });

    // spectra
    auto* spectra_cmd = app.add_subcommand("spectra", "Auto-correlation spectrum and rank of a feature file");
    add_config(spectra_cmd);
    spectra_cmd->add_option("--features", features_path, "FMX feature file")->required();
    spectra_cmd->add_option("--head", head_path, "Head file; reports its accuracy on labeled features");
    spectra_cmd->add_option("--pair", pair_spec, "Restrict to a class pair i,j");
    spectra_cmd->add_option("--out", out_path, "Spectrum CSV path");
    spectra_cmd->callback([&] {
        action = [&] {
            const FmxData f = read_fmx(features_path);
            Matrix phi = f.features;
            std::vector<std::uint32_t> labels = f.labels;
            if (!pair_spec.empty()) {
                if (!f.labeled()) {
                    usage("--pair needs a labeled feature file");
                }
                const auto pair = parse_classes(pair_spec, 2, f.class_names);
                const PairSelection sel = pair_matrix(f.features, f.labels, pair[0], pair[1]);
                phi = sel.features;
                labels.clear();
                for (auto r : sel.source_rows) {
                    labels.push_back(f.labels[r]);
                }
            }
            const SpectrumReport s = acm_spectrum(phi);
            out << "n " << s.n << ", d " << s.d << ", rank " << s.rank << ", sigma1 " << format_number(s.sigma1())
                << ", sigma2 " << format_number(s.sigma2()) << "\n";
            if (!head_path.empty()) {
                const ClassifierHead head = read_head(head_path);
                if (head.dim() != phi.cols()) {
                    fail(Errc::ShapeMismatch, "head dimension does not match the features");
                }
                if (f.labeled() && phi.rows() > 0) {
                    std::size_t hits = 0;
                    for (std::size_t r = 0; r < phi.rows(); ++r) {
                        const auto e = phi.row(r);
                        std::size_t best = 0;
                        double best_logit = -HUGE_VAL;
                        for (std::size_t c = 0; c < head.num_classes(); ++c) {
                            const double z = dot(head.weight.row(c), e) + head.bias[c];
                            if (z > best_logit) {
                                best_logit = z;
                                best = c;
                            }
                        }
                        hits += best == labels[r] ? 1 : 0;
                    }
                    out << "head accuracy " << format_number(static_cast<double>(hits) / static_cast<double>(phi.rows()))
                        << "\n";
                }
            }
            if (!out_path.empty()) {
                write_text(out_path, spectrum_csv(s));
            }
        };
    });

    // variance-evolution
    auto* var_cmd = app.add_subcommand("variance-evolution", "Largest explained variances per milestone");
    add_config(var_cmd);
    aopt.add(var_cmd, "all");
    var_cmd->add_option("--pair", pair_spec, "Class pair i,j")->required();
    var_cmd->add_option("-m,--components", num_var, "Number of variances")->capture_default_str();
    var_cmd->add_option("--out", out_path, "CSV path (default stdout)");
    var_cmd->callback([&] {
        action = [&] {
            const StoredRun r = load_run(aopt.run);
            const LabeledDataset& ds = aopt.dataset(r);
            const auto pair = parse_classes(pair_spec, 2, ds.class_names);
            emit(out_path, variance_csv(variance_evolution(r.archive, pair[0], pair[1], ds, num_var)), out);
        };
    });

    // resistors
    auto* res_cmd = app.add_subcommand("resistors", "Samples closest to the other class center");
    add_config(res_cmd);
    aopt.add(res_cmd, "final");
    res_cmd->add_option("--pair", pair_spec, "Class pair i,j")->required();
    res_cmd->add_option("--fraction", fraction)->capture_default_str();
    res_cmd->add_option("--overlap", overlap_run, "Second run directory; prints Jaccard overlap per class");
    res_cmd->add_option("--out", out_path, "CSV path (default stdout)");
    res_cmd->callback([&] {
        action = [&] {
            const StoredRun r = load_run(aopt.run);
            const LabeledDataset& ds = aopt.dataset(r);
            const auto pair = parse_classes(pair_spec, 2, ds.class_names);
            const std::size_t m = aopt.milestones(r.archive, false).front();
            const PairAnalysis pa = analyze_pair(r.archive.milestones[m].params, ds, pair[0], pair[1], 2);
            const auto [a_first, a_second] = resistors(pa.coords, fraction);
            if (overlap_run.empty()) {
                emit(out_path, resistor_csv(a_first, a_second, pa.selection), out);
                return;
            }
            const StoredRun r2 = load_run(overlap_run);
            const LabeledDataset& ds2 = aopt.dataset(r2);
            const std::size_t m2 = aopt.milestones(r2.archive, false).front();
            const PairAnalysis pb = analyze_pair(r2.archive.milestones[m2].params, ds2, pair[0], pair[1], 2);
            if (pb.selection.source_rows != pa.selection.source_rows) {
                fail(Errc::MismatchedUniverse, "the two runs were analyzed on different samples");
            }
            const auto [b_first, b_second] = resistors(pb.coords, fraction);
            if (!out_path.empty()) {
                write_text(out_path, resistor_csv(a_first, a_second, pa.selection));
            }
            out << "overlap " << pa.coords.names[0] << " " << format_number(resistor_overlap(a_first, b_first))
                << "\noverlap " << pa.coords.names[1] << " " << format_number(resistor_overlap(a_second, b_second))
                << "\n";
        };
    });

    // decision-space
    auto* dec_cmd = app.add_subcommand("decision-space", "Per-sample softmax probabilities of a class pair");
    add_config(dec_cmd);
    aopt.add(dec_cmd, "final");
    dec_cmd->add_option("--pair", pair_spec, "Class pair i,j")->required();
    dec_cmd->add_option("--out", out_path, "CSV path (default stdout)");
    dec_cmd->callback([&] {
        action = [&] {
            const StoredRun r = load_run(aopt.run);
            const LabeledDataset& ds = aopt.dataset(r);
            const auto pair = parse_classes(pair_spec, 2, ds.class_names);
            const std::size_t m = aopt.milestones(r.archive, false).front();
            emit(out_path, decision_space_csv(decision_space(r.archive.milestones[m].params, ds, pair[0], pair[1])),
                 out);
        };
    });

    // triple
    auto* triple_cmd = app.add_subcommand("triple", "PCA(3) coordinates of three classes");
    add_config(triple_cmd);
    triple_cmd->add_option("--run", aopt.run, "Run directory (embeddings of a milestone)");
    triple_cmd->add_option("--features", features_path, "Labeled FMX feature file instead of a run");
    triple_cmd->add_option("--split", aopt.split, "train | test")->capture_default_str();
    triple_cmd->add_option("--milestone", aopt.milestone, "Milestone index or 'final'")->default_str("final");
    triple_cmd->add_option("--triple", triple_spec, "Three classes i,j,k")->required();
    triple_cmd->add_option("--out", out_path, "CSV path (default stdout)");
    triple_cmd->callback([&] {
        action = [&] {
            Matrix phi;
            std::vector<std::uint32_t> labels;
            std::vector<std::string> names;
            if (aopt.run.empty() == features_path.empty()) {
                usage("give exactly one of --run and --features");
            }
            if (!aopt.run.empty()) {
                const StoredRun r = load_run(aopt.run);
                const LabeledDataset& ds = aopt.dataset(r);
                const std::size_t m = aopt.milestones(r.archive, false).front();
                phi = forward(r.archive.milestones[m].params, ds.features).embeddings;
                labels = ds.labels;
                names = ds.class_names;
            } else {
                const FmxData f = read_fmx(features_path);
                if (!f.labeled()) {
                    usage("--features must be labeled");
                }
                phi = f.features;
                labels = f.labels;
                names = f.class_names;
            }
            const auto t = parse_classes(triple_spec, 3, names);
            const TripleExport ex = pca3_export(phi, labels, {t[0], t[1], t[2]});
            emit(out_path, triple_csv(ex), out);
        };
    });

    // export-features
    auto* export_cmd = app.add_subcommand("export-features", "Write embeddings as FMX plus the head file");
    add_config(export_cmd);
    export_cmd->add_option("--run", aopt.run, "Run directory");
    export_cmd->add_option("--split", aopt.split, "train | test")->capture_default_str();
    export_cmd->add_option("--milestone", aopt.milestone, "Milestone index or 'final'")->default_str("final");
    export_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file instead of a run");
    export_cmd->add_option("--data", data_path, "Labeled FMX inputs (with --checkpoint)");
    export_cmd->add_option("--features-out", features_out, "FMX file for the embeddings")->required();
    export_cmd->add_option("--head-out", head_out, "Head file");
    export_cmd->callback([&] {
        action = [&] {
            NetParams params;
            LabeledDataset ds;
            if (!aopt.run.empty() && checkpoint_path.empty()) {
                const StoredRun r = load_run(aopt.run);
                ds = aopt.dataset(r);
                params = r.archive.milestones[aopt.milestones(r.archive, false).front()].params;
            } else if (aopt.run.empty() && !checkpoint_path.empty() && !data_path.empty()) {
                params = read_checkpoint(checkpoint_path).params;
                ds = from_fmx(read_fmx(data_path));
            } else {
                usage("give --run, or --checkpoint with --data");
            }
            FmxData f = to_fmx(ds);
            f.features = forward(params, ds.features).embeddings;
            write_fmx(features_out, f);
            if (!head_out.empty()) {
                write_head(head_out, params.head);
            }
            out << "exported " << f.features.rows() << "x" << f.features.cols() << " embeddings\n";
        };
    });

    try {
        const std::vector<std::string> expanded = expand_config(args, app);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        try {
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? 0 : 2;
        }
        action();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == Errc::UsageError ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace dbevo::cli
