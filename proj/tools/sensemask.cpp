// sensemask: generate synthetic embeddings, train masks and classifiers,
// evaluate, and summarize masks. See README.md for usage.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sensemask/config.hpp"
#include "sensemask/embedstore.hpp"
#include "sensemask/error.hpp"
#include "sensemask/masker.hpp"
#include "sensemask/random.hpp"
#include "sensemask/simcls.hpp"
#include "sensemask/synthgen.hpp"
#include "sensemask/trainer.hpp"

namespace fs = std::filesystem;
using namespace sensemask;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kInfeasible = 4 };

/// Flags shared by every subcommand, plus free-form key=value overrides.
struct Common {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
    cmd->add_option("--config", c.config, "flat key=value config file");
    cmd->add_option("--out", c.out, "output directory (must exist)");
    if (with_seed) c.seed_opt = cmd->add_option("--seed", c.seed, "seed");
    cmd->add_option("--set", c.sets, "override one config key (key=value); repeatable");
}

/// defaults ← file ← --set ← explicit flags.
RunConfig resolve(const RunConfig& defaults, const Common& c,
                  const std::vector<std::pair<std::string, std::string>>& flags,
                  const std::set<std::string>& extra_keys = {}) {
    RunConfig cfg = defaults;
    if (!c.config.empty()) cfg.merge(RunConfig::load(c.config));
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.seed_opt != nullptr && c.seed_opt->count() > 0) cfg.set("seed", std::to_string(c.seed));
    for (const auto& [k, v] : flags) cfg.set(k, v);
    std::set<std::string> known;
    for (const auto& [k, v] : defaults.entries()) known.insert(k);
    known.insert(extra_keys.begin(), extra_keys.end());
    cfg.require_known(known);
    return cfg;
}

fs::path out_dir(const Common& c) {
    const fs::path dir(c.out);
    if (!fs::is_directory(dir)) {
        throw IoError("output directory does not exist: " + dir.string());
    }
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> ratios(const RunConfig& cfg, const std::string& key) {
    std::vector<double> r;
    for (const auto& part : split_list(cfg.get(key))) {
        RunConfig tmp{{key, part}};
        r.push_back(tmp.get_double(key));
    }
    return r;
}

// ---------------------------------------------------------------------------

int cmd_synth_gen(const Common& c) {
    const RunConfig cfg = resolve(plant_spec_defaults(), c, {});
    const PlantSpec spec = to_plant_spec(cfg);
    const fs::path dir = out_dir(c);
    const auto data = generate(spec);
    write_dump(data.dataset, dir / "embeddings.lweb");
    write_text(dir / "truth.json", truth_to_json(data.truth));
    cfg.write(dir / "synth-gen.config");
    std::printf("wrote %zu occurrences to %s\n", data.dataset.size(),
                (dir / "embeddings.lweb").string().c_str());
    return kOk;
}

struct TrainMaskFlags {
    std::string dump, mode;
    int aspects = 0, k = 0, heads = 0;
    CLI::Option *dump_opt, *mode_opt, *aspects_opt, *k_opt, *heads_opt;
};

RunConfig train_mask_defaults() {
    RunConfig d = train_config_defaults();
    d.set("dump", "");
    d.set("split", "0.9,0.1");
    d.set("n_train_triplets", "2000");
    d.set("n_dev_triplets", "400");
    return d;
}

int cmd_train_mask(const Common& c, const TrainMaskFlags& f) {
    std::vector<std::pair<std::string, std::string>> flags;
    if (f.dump_opt->count()) flags.emplace_back("dump", f.dump);
    if (f.mode_opt->count()) flags.emplace_back("mode", f.mode);
    if (f.aspects_opt->count()) flags.emplace_back("aspects", std::to_string(f.aspects));
    if (f.k_opt->count()) flags.emplace_back("k", std::to_string(f.k));
    if (f.heads_opt->count()) flags.emplace_back("heads", std::to_string(f.heads));
    const RunConfig cfg = resolve(train_mask_defaults(), c, flags);
    if (cfg.get("dump").empty()) throw ConfigError("train-mask needs --dump");
    const fs::path dir = out_dir(c);

    const Dataset ds = load_dump(cfg.get("dump"));
    const TrainConfig tc = to_train_config(cfg, static_cast<int>(ds.head_size()));
    const int n_train = cfg.get_int("n_train_triplets");
    const int n_dev = cfg.get_int("n_dev_triplets");
    if (n_train < 1 || n_dev < 1) throw ConfigError("triplet counts must be >= 1");
    const auto parts = split(ds, ratios(cfg, "split"), tc.seed);
    const bool two = tc.loss.aspects == 2;
    const auto train = sample_triplets(parts.train, static_cast<std::size_t>(n_train),
                                       derive_seed(tc.seed, 20), two);
    const auto dev = sample_triplets(parts.dev, static_cast<std::size_t>(n_dev),
                                     derive_seed(tc.seed, 21), two);
    const auto result = train_mask(train, dev, ds, tc);

    write_triplets_tsv(train, dir / "triplets_train.tsv");
    write_triplets_tsv(dev, dir / "triplets_dev.tsv");
    save_mask(result.mask_a, (dir / "mask.json").string());
    write_text(dir / "adam.bin", serialize_adam(result.adam_a));
    if (two) {
        save_mask(*result.mask_b, (dir / "mask_b.json").string());
        write_text(dir / "adam_b.bin", serialize_adam(*result.adam_b));
    }
    write_training_log(result.log, dir / "training_log.tsv");
    cfg.write(dir / "train-mask.config");
    std::printf("best epoch %d, dev loss %.6g (initial %.6g)\n", result.best_epoch,
                result.best_dev_loss, result.initial_dev_loss);
    return kOk;
}

struct ClassifierFlags {
    std::string dump, repr, mask, classifier;
    std::vector<std::string> pairs;
    CLI::Option *dump_opt, *repr_opt, *mask_opt, *classifier_opt = nullptr, *pairs_opt = nullptr;
};

std::optional<Eigen::MatrixXd> mask_for(const RunConfig& cfg, const Dataset& ds,
                                        const std::vector<Representation>& reprs) {
    bool needed = false;
    for (auto r : reprs) needed = needed || r == Representation::Masked;
    if (!needed) return std::nullopt;
    if (cfg.get("mask").empty()) throw ConfigError("--repr masked needs --mask");
    const Eigen::MatrixXd m = binarize(load_mask(cfg.get("mask")));
    if (m.rows() != ds.h() || m.cols() != ds.l()) {
        throw ShapeMismatch("mask is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                            ", dump is " + std::to_string(ds.h()) + "x" + std::to_string(ds.l()));
    }
    return m;
}

std::vector<Representation> parse_reprs(const std::string& list) {
    std::vector<Representation> out;
    for (const auto& name : split_list(list)) out.push_back(parse_representation(name));
    if (out.empty()) throw ConfigError("no representation given");
    return out;
}

RunConfig train_classifier_defaults() {
    RunConfig d = classifier_config_defaults();
    d.set("dump", "");
    d.set("repr", "layerwise");
    d.set("mask", "");
    d.set("split", "0.8,0.1,0.1");
    d.set("n_train_pairs", "2000");
    d.set("n_dev_pairs", "400");
    d.set("n_test_pairs", "400");
    d.set("test_sets", "3");
    return d;
}

int cmd_train_classifier(const Common& c, const ClassifierFlags& f) {
    std::vector<std::pair<std::string, std::string>> flags;
    if (f.dump_opt->count()) flags.emplace_back("dump", f.dump);
    if (f.repr_opt->count()) flags.emplace_back("repr", f.repr);
    if (f.mask_opt->count()) flags.emplace_back("mask", f.mask);
    const RunConfig cfg = resolve(train_classifier_defaults(), c, flags);
    if (cfg.get("dump").empty()) throw ConfigError("train-classifier needs --dump");
    const auto reprs = parse_reprs(cfg.get("repr"));
    const ClassifierConfig cc = to_classifier_config(cfg);
    const int test_sets = cfg.get_int("test_sets");
    const int n_train = cfg.get_int("n_train_pairs");
    const int n_dev = cfg.get_int("n_dev_pairs");
    const int n_test = cfg.get_int("n_test_pairs");
    if (test_sets < 1 || n_train < 1 || n_dev < 1 || n_test < 1) {
        throw ConfigError("pair counts and test_sets must be >= 1");
    }
    const auto r = ratios(cfg, "split");
    if (r.size() != 3) throw BadRatio("train-classifier needs a train,dev,test split");
    const fs::path dir = out_dir(c);

    const Dataset ds = load_dump(cfg.get("dump"));
    const auto mask = mask_for(cfg, ds, reprs);
    const auto parts = split(ds, r, cc.seed);
    const auto train = sample_pairs(parts.train, static_cast<std::size_t>(n_train), derive_seed(cc.seed, 10));
    const auto dev = sample_pairs(parts.dev, static_cast<std::size_t>(n_dev), derive_seed(cc.seed, 11));
    const auto test_all = sample_pairs(*parts.test, static_cast<std::size_t>(n_test) * test_sets,
                                       derive_seed(cc.seed, 12));
    // Disjoint, consecutive chunks of the shuffled test pairs.
    std::vector<std::vector<LabeledPair>> tests(static_cast<std::size_t>(test_sets));
    for (std::size_t i = 0; i < test_all.size(); ++i) tests[i * tests.size() / test_all.size()].push_back(test_all[i]);
    for (const auto& t : tests) {
        if (t.empty()) throw EmptyData("not enough test pairs for " + std::to_string(test_sets) + " test sets");
    }

    write_pairs_tsv(train, dir / "pairs_train.tsv");
    write_pairs_tsv(dev, dir / "pairs_dev.tsv");
    for (std::size_t t = 0; t < tests.size(); ++t) {
        write_pairs_tsv(tests[t], dir / ("pairs_test" + std::to_string(t + 1) + ".tsv"));
    }

    std::vector<AccuracyRow> rows;
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::string> names;
    for (const auto repr : reprs) {
        const std::string name = to_string(repr);
        const auto ftrain = pair_features(ds, train, repr, mask);
        const auto fdev = pair_features(ds, dev, repr, mask);
        const auto fit = train_classifier(ftrain, fdev, cc);
        write_text(dir / ("classifier_" + name + ".json"), classifier_to_json(fit.classifier));
        rows.push_back({name + "/train", train.size(), accuracy(fit.classifier, ftrain)});
        rows.push_back({name + "/dev", dev.size(), accuracy(fit.classifier, fdev)});
        std::vector<std::size_t> group;
        for (std::size_t t = 0; t < tests.size(); ++t) {
            const auto ftest = pair_features(ds, tests[t], repr, mask);
            group.push_back(rows.size());
            rows.push_back({name + "/test" + std::to_string(t + 1), tests[t].size(),
                            accuracy(fit.classifier, ftest)});
        }
        groups.push_back(group);
        names.push_back(name);
    }
    const std::string report = format_report(rows, groups, names);
    write_text(dir / "accuracy.tsv", report);
    cfg.write(dir / "train-classifier.config");
    std::fputs(report.c_str(), stdout);
    return kOk;
}

RunConfig eval_defaults() {
    return {{"dump", ""}, {"repr", "layerwise"}, {"mask", ""}, {"classifier", ""}, {"pairs", ""}};
}

int cmd_eval(const Common& c, const ClassifierFlags& f) {
    std::vector<std::pair<std::string, std::string>> flags;
    if (f.dump_opt->count()) flags.emplace_back("dump", f.dump);
    if (f.repr_opt->count()) flags.emplace_back("repr", f.repr);
    if (f.mask_opt->count()) flags.emplace_back("mask", f.mask);
    if (f.classifier_opt->count()) flags.emplace_back("classifier", f.classifier);
    if (f.pairs_opt->count()) {
        std::string joined;
        for (const auto& p : f.pairs) joined += (joined.empty() ? "" : ",") + p;
        flags.emplace_back("pairs", joined);
    }
    const RunConfig cfg = resolve(eval_defaults(), c, flags);
    for (const char* key : {"dump", "classifier", "pairs"}) {
        if (cfg.get(key).empty()) throw ConfigError(std::string("eval needs --") + key);
    }
    const auto reprs = parse_reprs(cfg.get("repr"));
    if (reprs.size() != 1) throw ConfigError("eval takes exactly one representation");
    const fs::path dir = out_dir(c);

    const Dataset ds = load_dump(cfg.get("dump"));
    const auto mask = mask_for(cfg, ds, reprs);
    std::ifstream in(cfg.get("classifier"));
    if (!in) throw IoError("cannot open classifier " + cfg.get("classifier"));
    std::stringstream ss;
    ss << in.rdbuf();
    const Classifier cls = classifier_from_json(ss.str());

    std::vector<AccuracyRow> rows;
    std::vector<std::size_t> group;
    for (const auto& path : split_list(cfg.get("pairs"))) {
        const auto pairs = read_pairs_tsv(path);
        const auto feats = pair_features(ds, pairs, reprs[0], mask);
        group.push_back(rows.size());
        rows.push_back({fs::path(path).stem().string(), pairs.size(), accuracy(cls, feats)});
    }
    const std::string report = format_report(rows, {group}, {to_string(reprs[0])});
    write_text(dir / "accuracy.tsv", report);
    cfg.write(dir / "eval.config");
    std::fputs(report.c_str(), stdout);
    return kOk;
}

struct StatsFlags {
    std::string mask, mask_b;
    CLI::Option *mask_opt, *mask_b_opt;
};

int cmd_mask_stats(const Common& c, const StatsFlags& f) {
    std::vector<std::pair<std::string, std::string>> flags;
    if (f.mask_opt->count()) flags.emplace_back("mask", f.mask);
    if (f.mask_b_opt->count()) flags.emplace_back("mask_b", f.mask_b);
    const RunConfig cfg = resolve(RunConfig{{"mask", ""}, {"mask_b", ""}}, c, flags);
    if (cfg.get("mask").empty()) throw ConfigError("mask-stats needs --mask");
    const fs::path dir = out_dir(c);

    const Eigen::MatrixXd a = binarize(load_mask(cfg.get("mask")));
    std::optional<Eigen::MatrixXd> b;
    if (!cfg.get("mask_b").empty()) b = binarize(load_mask(cfg.get("mask_b")));
    const auto stats = mask_stats(a, b);

    std::string tsv = "layer";
    for (Eigen::Index j = 0; j < stats.agreement.cols(); ++j) tsv += "\t" + std::to_string(j + 1);
    tsv += "\n";
    for (Eigen::Index i = 0; i < stats.agreement.rows(); ++i) {
        tsv += std::to_string(i + 1);
        for (Eigen::Index j = 0; j < stats.agreement.cols(); ++j) {
            tsv += "\t" + std::to_string(stats.agreement(i, j));
        }
        tsv += "\n";
    }
    write_text(dir / "agreement.tsv", tsv);
    std::fputs(tsv.c_str(), stdout);
    if (stats.overlap_total) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "overlap_total\toverlap_mean\n%ld\t%.17g\n",
                      *stats.overlap_total, *stats.overlap_mean);
        write_text(dir / "overlap.tsv", buf);
        std::fputs(buf, stdout);
    }
    cfg.write(dir / "mask-stats.config");
    return kOk;
}

int report(const char* kind, const std::string& what, int code) {
    std::string msg = what;
    for (auto& ch : msg) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    std::fprintf(stderr, "error: %s: %s\n", kind, msg.c_str());
    return code;
}

int exit_code_for(const Error& e) {
    const std::string kind = e.kind();
    if (kind == "IoError" || kind == "FormatError" || kind == "VersionError") return kIo;
    if (kind == "NoValidTriplet" || kind == "NoValidPair" || kind == "EmptyData" ||
        kind == "TooFewLayers" || kind == "ZeroNormError" || kind == "NonFiniteError") {
        return kInfeasible;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary-mask disentanglement of layer-wise embeddings"};
    app.require_subcommand(1);

    Common gen_c, mask_c, cls_c, eval_c, stats_c;

    auto* gen = app.add_subcommand("synth-gen", "generate a synthetic dump and its ground truth");
    add_common(gen, gen_c);

    TrainMaskFlags tm;
    auto* train = app.add_subcommand("train-mask", "train an aspect mask (two with --aspects 2)");
    add_common(train, mask_c);
    tm.dump_opt = train->add_option("--dump", tm.dump, "embedding dump");
    tm.aspects_opt = train->add_option("--aspects", tm.aspects, "1 or 2");
    tm.mode_opt = train->add_option("--mode", tm.mode, "dim or head");
    tm.k_opt = train->add_option("--k", tm.k, "selected dimensions per layer");
    tm.heads_opt = train->add_option("--heads", tm.heads, "selected heads per layer (head mode)");

    ClassifierFlags tc;
    auto* cls = app.add_subcommand("train-classifier", "train same-sense classifiers and report accuracy");
    add_common(cls, cls_c);
    tc.dump_opt = cls->add_option("--dump", tc.dump, "embedding dump");
    tc.repr_opt = cls->add_option("--repr", tc.repr, "baseline|layerwise|masked, comma-separated");
    tc.mask_opt = cls->add_option("--mask", tc.mask, "mask JSON for the masked representation");

    ClassifierFlags ev;
    auto* eval = app.add_subcommand("eval", "evaluate a trained classifier on pair lists");
    add_common(eval, eval_c, false);
    ev.dump_opt = eval->add_option("--dump", ev.dump, "embedding dump");
    ev.repr_opt = eval->add_option("--repr", ev.repr, "baseline|layerwise|masked");
    ev.mask_opt = eval->add_option("--mask", ev.mask, "mask JSON for the masked representation");
    ev.classifier_opt = eval->add_option("--classifier", ev.classifier, "classifier JSON");
    ev.pairs_opt = eval->add_option("--pairs", ev.pairs, "pair TSV; repeatable");

    StatsFlags sf;
    auto* stats = app.add_subcommand("mask-stats", "layer agreement and overlap of masks");
    add_common(stats, stats_c, false);
    sf.mask_opt = stats->add_option("--mask", sf.mask, "mask JSON");
    sf.mask_b_opt = stats->add_option("--mask-b", sf.mask_b, "second mask JSON (overlap)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report("UsageError", e.what(), kUsage);
    }

    try {
        if (*gen) return cmd_synth_gen(gen_c);
        if (*train) return cmd_train_mask(mask_c, tm);
        if (*cls) return cmd_train_classifier(cls_c, tc);
        if (*eval) return cmd_eval(eval_c, ev);
        if (*stats) return cmd_mask_stats(stats_c, sf);
    } catch (const Error& e) {
        return report(e.kind(), e.what(), exit_code_for(e));
    } catch (const fs::filesystem_error& e) {
        return report("IoError", e.what(), kIo);
    } catch (const std::exception& e) {
        return report("InternalError", e.what(), kInternal);
    }
    return kInternal;
}
