// Batch CLI for training, extraction, evaluation, prediction, explanation,
// and fairness sweeps over the rule-learning library.
//
// Exit codes: 0 success, 2 bad arguments, 3 bad data, 4 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rulegen/rulegen.hpp"

namespace {

using namespace rulegen;

struct SchemaFlags {
    std::string schema_path;
    std::string target;
    std::vector<std::string> categorical;
    std::string group;
    std::string positive;

    void attach(CLI::App* cmd) {
        cmd->add_option("--schema", schema_path,
                        "JSON file with keys target, categorical, group, positive_class");
        cmd->add_option("--target", target, "target column name");
        cmd->add_option("--categorical", categorical, "categorical columns")
            ->delimiter(',');
        cmd->add_option("--group", group, "group column for fairness");
        cmd->add_option("--positive-class", positive, "positive class label for F1");
    }

    Schema resolve() const {
        Schema s;
        if (!schema_path.empty()) {
            std::ifstream in(schema_path);
            if (!in) throw DataError("schema: cannot open '" + schema_path + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw DataError("schema: invalid JSON in '" + schema_path + "': " +
                                e.what());
            }
            s = schema_from_json(j);
        }
        if (!target.empty()) s.target_column = target;
        if (!categorical.empty()) s.categorical_columns = categorical;
        if (!group.empty()) s.group_column = group;
        if (!positive.empty()) s.positive_class = positive;
        if (s.target_column.empty()) {
            throw ArgumentError("schema: target column not set (--target or --schema)");
        }
        return s;
    }
};

struct FairnessFlags {
    std::string metric;
    double epsilon = 0.05;

    void attach(CLI::App* cmd) {
        cmd->add_option("--fairness", metric, "fairness metric: dmc or odm");
        cmd->add_option("--epsilon", epsilon, "fairness tolerance")
            ->capture_default_str();
    }

    std::optional<FairnessSpec> resolve() const {
        if (metric.empty()) return std::nullopt;
        FairnessSpec spec;
        if (metric == "dmc") spec.metric = FairnessMetric::DMC;
        else if (metric == "odm") spec.metric = FairnessMetric::ODM;
        else throw ArgumentError("--fairness must be dmc or odm");
        spec.epsilon = epsilon;
        return spec;
    }
};

RuleCostPolicy parse_cost_policy(const std::string& name) {
    if (name == "unit") return RuleCostPolicy::Unit;
    if (name == "length") return RuleCostPolicy::Length;
    if (name == "one-plus-length") return RuleCostPolicy::OnePlusLength;
    throw ArgumentError("--cost must be unit, length, or one-plus-length");
}

void write_fit_log(const std::string& path, const RuleModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("fit log: cannot write '" + path + "'");
    for (const auto& e : model.fit_log) {
        nlohmann::ordered_json j;
        j["iteration"] = e.iteration;
        j["objective"] = e.objective;
        j["columns_added"] = e.columns_added;
        j["pool_size"] = e.pool_size;
        j["min_reduced_cost"] = e.min_reduced_cost;
        out << j.dump() << "\n";
    }
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw DataError("output: cannot write '" + path + "'");
    return file;
}

// ===== train =====

struct TrainArgs {
    std::string data_path;
    std::string out_path;
    std::string log_path;
    SchemaFlags schema;
    FairnessFlags fairness;
    double lambda = 1.0;
    int depth = 3;
    int iterations = 15;
    std::string cost = "unit";
    double threshold = 1e-6;
    std::uint64_t seed = 13;
    bool tune = false;
};

int cmd_train(const TrainArgs& args) {
    // Flag validation precedes any filesystem access.
    const Schema schema = args.schema.resolve();
    CgConfig cfg;
    cfg.lambda = args.lambda;
    cfg.max_depth = args.depth;
    cfg.max_iterations = args.iterations;
    cfg.cost_policy = parse_cost_policy(args.cost);
    cfg.improving_threshold = args.threshold;
    cfg.fairness = args.fairness.resolve();
    cfg.seed = args.seed;

    const Dataset ds = load_csv(args.data_path, schema);

    if (args.tune) {
        const int folds = std::min(5, ds.n_rows);
        double best_acc = -1.0;
        CgConfig best_cfg = cfg;
        for (const double lam : kLambdaGrid) {
            for (const int depth : kDepthGrid) {
                for (const int iters : kIterationGrid) {
                    CgConfig trial = cfg;
                    trial.lambda = lam;
                    trial.max_depth = depth;
                    trial.max_iterations = iters;
                    const CvSummary cv = cross_validate(
                        ds, folds, cfg.seed,
                        [&](const Dataset& train) { return fit_rug(train, trial); });
                    if (cv.mean_accuracy_pct > best_acc) {
                        best_acc = cv.mean_accuracy_pct;
                        best_cfg = trial;
                    }
                }
            }
        }
        cfg = best_cfg;
        std::printf("tuned: lambda=%g depth=%d iterations=%d (cv accuracy %.2f%%)\n",
                    cfg.lambda, cfg.max_depth, cfg.max_iterations, best_acc);
    }

    const RuleModel model = fit_rug(ds, cfg);

    SavedModel sm;
    sm.model = model;
    sm.schema = schema;
    sm.feature_meta = ds.feature_meta;
    sm.group_order = ds.group_order;
    sm.mode = cfg.fairness ? "FAIR_RUG" : "RUG";
    sm.config_echo["lambda"] = cfg.lambda;
    sm.config_echo["max_depth"] = cfg.max_depth;
    sm.config_echo["max_iterations"] = cfg.max_iterations;
    sm.config_echo["cost"] = args.cost;
    sm.config_echo["improving_threshold"] = cfg.improving_threshold;
    sm.config_echo["seed"] = cfg.seed;
    if (cfg.fairness) {
        sm.config_echo["fairness"] = fairness_metric_name(cfg.fairness->metric);
        sm.config_echo["epsilon"] = cfg.fairness->epsilon;
    }
    save_model(args.out_path, sm);
    if (!args.log_path.empty()) write_fit_log(args.log_path, model);

    const Metrics m = evaluate(model, ds);
    std::printf("trained %s model: objective %.6f, pool %d, active rules %d\n",
                sm.mode.c_str(), model.objective, model.pool_size, m.nor);
    std::printf("train accuracy %.2f%%, fallback rate %.2f%%\n", m.accuracy_pct,
                100.0 * m.fallback_rate);
    std::printf("saved to %s\n", args.out_path.c_str());
    return 0;
}

// ===== extract =====

struct ExtractArgs {
    std::string data_path;
    std::string out_path;
    std::string pool_path;
    SchemaFlags schema;
    FairnessFlags fairness;
    double lambda = 1.0;
    int trees = 100;
    int depth = 3;
    int features_per_split = 0;
    bool no_bootstrap = false;
    std::string cost = "length";
    std::uint64_t seed = 13;
};

std::vector<Rule> load_pool_file(const std::string& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw DataError("pool: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("pool: invalid JSON in '" + path + "': " + e.what());
    }
    const nlohmann::json* arr = nullptr;
    if (j.is_array()) arr = &j;
    else if (j.is_object() && j.contains("rules")) arr = &j.at("rules");
    else throw DataError("pool: expected a rule array or an object with key 'rules'");
    std::vector<Rule> rules;
    for (const auto& rj : *arr) {
        Rule r;
        try {
            from_json(rj, r);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("pool: malformed rule: ") + e.what());
        }
        if (r.label < 0 || r.label >= class_count) {
            throw DataError("pool: rule label " + std::to_string(r.label) +
                            " out of range for " + std::to_string(class_count) +
                            " classes");
        }
        if (r.cost < 0.0) throw DataError("pool: negative rule cost");
        try {
            rules.push_back(canonicalize(r));
        } catch (const InfeasibleRuleError& e) {
            throw DataError(std::string("pool: ") + e.what());
        }
    }
    if (rules.empty()) throw DataError("pool: no rules in '" + path + "'");
    return rules;
}

int cmd_extract(const ExtractArgs& args) {
    // Flag validation precedes any filesystem access.
    const Schema schema = args.schema.resolve();
    const auto fairness = args.fairness.resolve();
    const RuleCostPolicy cost_policy = parse_cost_policy(args.cost);
    const Dataset ds = load_csv(args.data_path, schema);

    RuleModel model;
    int pool_size = 0;
    if (!args.pool_path.empty()) {
        const auto pool = load_pool_file(args.pool_path, ds.class_count);
        pool_size = static_cast<int>(pool.size());
        model = fit_rux_on_pool(ds, pool, args.lambda, fairness);
    } else {
        RuxConfig cfg;
        cfg.lambda = args.lambda;
        cfg.cost_policy = cost_policy;
        cfg.n_trees = args.trees;
        cfg.max_depth = args.depth;
        cfg.features_per_split = args.features_per_split;
        cfg.bootstrap = !args.no_bootstrap;
        cfg.seed = args.seed;
        cfg.fairness = fairness;
        model = fit_rux(ds, cfg);
        pool_size = model.pool_size;
    }

    SavedModel sm;
    sm.model = model;
    sm.schema = schema;
    sm.feature_meta = ds.feature_meta;
    sm.group_order = ds.group_order;
    sm.mode = fairness ? "FAIR_RUX" : "RUX";
    sm.config_echo["lambda"] = args.lambda;
    sm.config_echo["cost"] = args.cost;
    sm.config_echo["seed"] = args.seed;
    if (!args.pool_path.empty()) {
        sm.config_echo["pool_file"] = args.pool_path;
    } else {
        sm.config_echo["trees"] = args.trees;
        sm.config_echo["max_depth"] = args.depth;
        sm.config_echo["features_per_split"] = args.features_per_split;
        sm.config_echo["bootstrap"] = !args.no_bootstrap;
    }
    if (fairness) {
        sm.config_echo["fairness"] = fairness_metric_name(fairness->metric);
        sm.config_echo["epsilon"] = fairness->epsilon;
    }
    save_model(args.out_path, sm);

    const int active = static_cast<int>(model.rules.size());
    const double compression =
        pool_size > 0 ? static_cast<double>(active) / pool_size : 0.0;
    std::printf("extracted %s model: pool %d, active rules %d, compression %.4f\n",
                sm.mode.c_str(), pool_size, active, compression);
    std::printf("objective %.6f\n", model.objective);
    std::printf("saved to %s\n", args.out_path.c_str());
    return 0;
}

// ===== evaluate / predict / explain =====

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 bool as_json) {
    const SavedModel sm = load_model(model_path);
    const Dataset ds = encode_for_model(read_csv(data_path), sm);
    const Metrics m = evaluate(sm.model, ds);
    if (as_json) std::cout << metrics_to_json(m).dump(2) << "\n";
    else std::cout << format_metrics(m);
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const SavedModel sm = load_model(model_path);
    const Dataset ds = encode_for_model(read_csv(data_path), sm);
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << "row,prediction\n";
    for (int i = 0; i < ds.n_rows; ++i) {
        const Prediction p = predict(sm.model, ds.row(i));
        out << i << "," << sm.model.class_order[p.label] << "\n";
    }
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const SavedModel sm = load_model(model_path);
    const Dataset ds = encode_for_model(read_csv(data_path), sm);
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << "row,prediction,used_fallback,rule_ids,rule_weights\n";
    for (int i = 0; i < ds.n_rows; ++i) {
        const Prediction p = predict(sm.model, ds.row(i));
        out << i << "," << sm.model.class_order[p.label] << ","
            << (p.used_fallback ? 1 : 0) << ",";
        for (std::size_t k = 0; k < p.covering_rules.size(); ++k) {
            if (k > 0) out << ";";
            out << p.covering_rules[k];
        }
        out << ",";
        char buf[32];
        for (std::size_t k = 0; k < p.covering_rules.size(); ++k) {
            if (k > 0) out << ";";
            std::snprintf(buf, sizeof(buf), "%.6g",
                          sm.model.rules[p.covering_rules[k]].weight);
            out << buf;
        }
        out << "\n";
    }
    return 0;
}

// ===== sweep =====

struct SweepArgs {
    std::string data_path;
    SchemaFlags schema;
    std::string metric = "dmc";
    std::vector<double> epsilon_grid = {0.0, 0.01, 0.025, 0.05, 0.08, 1.0};
    double lambda = 1.0;
    int depth = 3;
    int iterations = 15;
    std::string cost = "unit";
    std::uint64_t seed = 13;
    std::string out_path;
};

int cmd_sweep(const SweepArgs& args) {
    // Flag validation precedes any filesystem access.
    const Schema schema = args.schema.resolve();
    if (!schema.group_column) {
        throw ArgumentError("sweep: a group column is required (--group or schema)");
    }
    FairnessSpec spec;
    if (args.metric == "dmc") spec.metric = FairnessMetric::DMC;
    else if (args.metric == "odm") spec.metric = FairnessMetric::ODM;
    else throw ArgumentError("--fairness must be dmc or odm");
    const RuleCostPolicy cost_policy = parse_cost_policy(args.cost);
    const Dataset ds = load_csv(args.data_path, schema);

    std::ofstream file;
    std::ostream& out = open_output(file, args.out_path);
    out << "epsilon,accuracy_pct,fairness_pct\n";
    for (const double eps : args.epsilon_grid) {
        CgConfig cfg;
        cfg.lambda = args.lambda;
        cfg.max_depth = args.depth;
        cfg.max_iterations = args.iterations;
        cfg.cost_policy = cost_policy;
        cfg.seed = args.seed;
        spec.epsilon = eps;
        cfg.fairness = spec;
        const RuleModel model = fit_rug(ds, cfg);
        const Metrics m = evaluate(model, ds);
        const double fairness_pct = spec.metric == FairnessMetric::DMC
                                        ? m.fairness_dmc_pct.value_or(0.0)
                                        : m.fairness_odm_pct.value_or(0.0);
        char line[96];
        std::snprintf(line, sizeof(line), "%g,%.4f,%.4f\n", eps, m.accuracy_pct,
                      fairness_pct);
        out << line;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rule-list classifier: LP-weighted rule training, ensemble "
                 "extraction, and fairness-constrained variants"};
    app.require_subcommand(1);

    TrainArgs train;
    CLI::App* t = app.add_subcommand("train", "fit rules by column generation");
    t->add_option("--data", train.data_path, "training CSV")->required();
    t->add_option("--out", train.out_path, "model JSON output path")->required();
    t->add_option("--log", train.log_path, "JSONL per-iteration fit log");
    train.schema.attach(t);
    train.fairness.attach(t);
    t->add_option("--lambda", train.lambda, "rule cost multiplier")
        ->capture_default_str();
    t->add_option("--depth", train.depth, "tree depth for pricing")
        ->capture_default_str();
    t->add_option("--iterations", train.iterations, "column generation rounds")
        ->capture_default_str();
    t->add_option("--cost", train.cost, "rule cost: unit, length, one-plus-length")
        ->capture_default_str();
    t->add_option("--threshold", train.threshold, "improving reduced-cost threshold")
        ->capture_default_str();
    t->add_option("--seed", train.seed, "random seed")->capture_default_str();
    t->add_flag("--tune", train.tune, "grid-search lambda/depth/iterations by CV");

    ExtractArgs extract;
    CLI::App* x = app.add_subcommand("extract", "distill rules from a tree ensemble");
    x->add_option("--data", extract.data_path, "training CSV")->required();
    x->add_option("--out", extract.out_path, "model JSON output path")->required();
    x->add_option("--pool", extract.pool_path, "rule pool JSON instead of a forest");
    extract.schema.attach(x);
    extract.fairness.attach(x);
    x->add_option("--lambda", extract.lambda, "rule cost multiplier")
        ->capture_default_str();
    x->add_option("--trees", extract.trees, "forest size")->capture_default_str();
    x->add_option("--depth", extract.depth, "tree depth")->capture_default_str();
    x->add_option("--features-per-split", extract.features_per_split,
                  "features sampled per split (0 = sqrt)")
        ->capture_default_str();
    x->add_flag("--no-bootstrap", extract.no_bootstrap, "disable bootstrap sampling");
    x->add_option("--cost", extract.cost, "rule cost: unit, length, one-plus-length")
        ->capture_default_str();
    x->add_option("--seed", extract.seed, "random seed")->capture_default_str();

    std::string eval_model, eval_data;
    bool eval_json = false;
    CLI::App* e = app.add_subcommand("evaluate", "score a saved model on labeled data");
    e->add_option("--model", eval_model, "model JSON")->required();
    e->add_option("--data", eval_data, "labeled CSV")->required();
    e->add_flag("--json", eval_json, "emit metrics as JSON");

    std::string pred_model, pred_data, pred_out;
    CLI::App* p = app.add_subcommand("predict", "write per-row predictions");
    p->add_option("--model", pred_model, "model JSON")->required();
    p->add_option("--data", pred_data, "CSV to score")->required();
    p->add_option("--out", pred_out, "output CSV (default stdout)");

    std::string expl_model, expl_data, expl_out;
    CLI::App* ex = app.add_subcommand("explain", "per-row firing rules and weights");
    ex->add_option("--model", expl_model, "model JSON")->required();
    ex->add_option("--data", expl_data, "CSV to explain")->required();
    ex->add_option("--out", expl_out, "output CSV (default stdout)");

    SweepArgs sweep;
    CLI::App* s = app.add_subcommand("sweep", "fairness tolerance sweep");
    s->add_option("--data", sweep.data_path, "training CSV")->required();
    sweep.schema.attach(s);
    s->add_option("--fairness", sweep.metric, "fairness metric: dmc or odm")
        ->capture_default_str();
    s->add_option("--epsilon-grid", sweep.epsilon_grid, "tolerances to sweep")
        ->delimiter(',');
    s->add_option("--lambda", sweep.lambda, "rule cost multiplier")
        ->capture_default_str();
    s->add_option("--depth", sweep.depth, "tree depth for pricing")
        ->capture_default_str();
    s->add_option("--iterations", sweep.iterations, "column generation rounds")
        ->capture_default_str();
    s->add_option("--cost", sweep.cost, "rule cost policy")->capture_default_str();
    s->add_option("--seed", sweep.seed, "random seed")->capture_default_str();
    s->add_option("--out", sweep.out_path, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::CallForAllHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    }

    try {
        if (t->parsed()) return cmd_train(train);
        if (x->parsed()) return cmd_extract(extract);
        if (e->parsed()) return cmd_evaluate(eval_model, eval_data, eval_json);
        if (p->parsed()) return cmd_predict(pred_model, pred_data, pred_out);
        if (ex->parsed()) return cmd_explain(expl_model, expl_data, expl_out);
        if (s->parsed()) return cmd_sweep(sweep);
    } catch (const ArgumentError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    } catch (const IndexError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    } catch (const DataError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 3;
    } catch (const SizeError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 3;
    } catch (const InfeasibleRuleError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 3;
    } catch (const SolverError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 4;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "unexpected error: %s\n", err.what());
        return 1;
    }
    return 0;
}
