// mcdl: command-line front end for dataset generation, training, evaluation,
// ablations and plot export.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcdl/config.hpp"
#include "mcdl/data.hpp"
#include "mcdl/error.hpp"
#include "mcdl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> variants;
};

mcdl::RunConfig resolve_config(const CommonOptions& o) {
    mcdl::RunConfig cfg = o.config_path.empty() ? mcdl::parse_config("") : mcdl::load_config(o.config_path);
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.has_seed = true;
    }
    for (const auto& v : o.variants) {
        std::stringstream ss(v);
        std::string part;
        while (std::getline(ss, part, '+')) mcdl::apply_variant(cfg, part);
    }
    return cfg;
}

void print_report(const mcdl::AccReport& r, const char* label) {
    std::printf("%s: all %.4f  old %.4f  new %.4f  (n=%zu)\n", label, r.acc_all, r.acc_old, r.acc_new, r.n_all);
}

int cmd_generate(const CommonOptions& o) {
    mcdl::RunConfig cfg = resolve_config(o);
    if (o.seed) {
        cfg.data.seed = *o.seed;
        cfg.split.seed = *o.seed;
    }
    cfg.dataset_path.clear();
    const std::string path = o.out.empty() ? "dataset.txt" : o.out;
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    const mcdl::GcdDataset ds = mcdl::prepare_dataset(cfg);
    mcdl::save_dataset(path, ds);
    std::printf("wrote %s: %zu samples, %zu labeled, %zu unlabeled, %zu validation\n", path.c_str(), ds.size(),
                ds.count(mcdl::SplitTag::Labeled), ds.count(mcdl::SplitTag::Unlabeled),
                ds.count(mcdl::SplitTag::Validation));
    return 0;
}

int cmd_train(const CommonOptions& o) {
    mcdl::RunConfig cfg = resolve_config(o);
    if (!o.out.empty()) cfg.output_dir = o.out;
    const mcdl::TrainResult res = mcdl::train_to_directory(cfg);
    std::printf("run written to %s (%zu epochs, best epoch %zu)\n", cfg.output_dir.c_str(), res.history.size(),
                res.best_epoch);
    print_report(res.best_report, "final");
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& out) {
    const mcdl::Checkpoint ckpt = mcdl::load_checkpoint(checkpoint_path);
    const mcdl::GcdDataset ds = mcdl::load_dataset(dataset_path);
    if (ds.dims != ckpt.params.shape.input_dim || ds.num_classes != ckpt.params.shape.num_classes) {
        throw mcdl::InvalidInput("dataset shape does not match the checkpoint model");
    }
    const json report = mcdl::report_json(mcdl::evaluate_model(ckpt.params, ds));
    const std::string text = report.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream os(out);
        if (!os) throw mcdl::Error("io-error", "cannot write " + out);
        os << text;
    }
    return 0;
}

int cmd_ablate(const CommonOptions& o) {
    mcdl::RunConfig cfg = mcdl::RunConfig{};
    {
        CommonOptions base = o;
        base.variants.clear();
        cfg = resolve_config(base);
    }
    std::vector<std::string> variants = o.variants;
    if (variants.empty()) variants = {"baseline", "sup", "sup-semi", "full"};
    const auto rows = mcdl::ablate(cfg, variants);
    const std::string table = mcdl::format_ablation_table(rows);
    if (o.out.empty()) {
        std::cout << table;
    } else {
        std::ofstream os(o.out);
        if (!os) throw mcdl::Error("io-error", "cannot write " + o.out);
        os << table;
        std::printf("wrote %s (%zu variants)\n", o.out.c_str(), rows.size());
    }
    return 0;
}

// metrics.csv as named columns; empty cells stay empty strings
struct MetricsTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw mcdl::FormatError("metrics file lacks column '" + name + "'");
    }
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

MetricsTable read_metrics(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw mcdl::Error("run-not-found", "cannot open " + path.string());
    MetricsTable t;
    std::string line;
    if (!std::getline(is, line)) throw mcdl::FormatError("empty metrics file " + path.string());
    t.header = split_csv(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != t.header.size()) throw mcdl::FormatError("ragged metrics row in " + path.string());
        t.rows.push_back(std::move(cells));
    }
    return t;
}

const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& plot_groups() {
    static const std::map<std::string, std::vector<std::pair<std::string, std::string>>> groups = {
        {"loss",
         {{"total", "loss_total"},
          {"labeled_sup", "loss_labeled_sup"},
          {"sup", "loss_sup"},
          {"semi", "loss_semi"},
          {"self", "loss_self"}}},
        {"acc", {{"all", "acc_all"}, {"old", "acc_old"}, {"new", "acc_new"}, {"val", "val_acc"}}},
        {"selection",
         {{"high_acc", "high_acc"},
          {"mid_acc", "mid_acc"},
          {"cross_view_acc", "cross_view_acc"},
          {"n_high", "n_high"},
          {"n_mid", "n_mid"},
          {"n_low", "n_low"}}},
    };
    return groups;
}

int cmd_export_plots(const std::string& run_dir, const std::string& out, const std::string& format) {
    const MetricsTable t = read_metrics(fs::path(run_dir) / "metrics.csv");
    const fs::path dir = out.empty() ? fs::path(run_dir) / "plots" : fs::path(out);
    fs::create_directories(dir);
    const std::size_t epoch_col = t.column("epoch");

    if (format == "json") {
        json doc;
        doc["epochs"] = t.rows.size();
        json x = json::array();
        for (const auto& r : t.rows) x.push_back(std::stoll(r[epoch_col]));
        doc["x"] = x;
        for (const auto& [group, series] : plot_groups()) {
            json g;
            for (const auto& [name, col] : series) {
                const std::size_t c = t.column(col);
                json y = json::array();
                for (const auto& r : t.rows) {
                    if (r[c].empty()) {
                        y.push_back(nullptr);
                    } else {
                        y.push_back(std::stod(r[c]));
                    }
                }
                g[name] = y;
            }
            doc[group] = g;
        }
        std::ofstream os(dir / "plots.json");
        os << doc.dump(2) << '\n';
        std::printf("wrote %s\n", (dir / "plots.json").string().c_str());
    } else if (format == "csv") {
        for (const auto& [group, series] : plot_groups()) {
            std::ofstream os(dir / (group + ".csv"));
            os << "epoch";
            for (const auto& s : series) os << ',' << s.first;
            os << '\n';
            for (const auto& r : t.rows) {
                os << r[epoch_col];
                for (const auto& s : series) os << ',' << r[t.column(s.second)];
                os << '\n';
            }
        }
        std::printf("wrote loss.csv, acc.csv, selection.csv to %s\n", dir.string().c_str());
    } else {
        throw mcdl::InvalidInput("unknown plot format '" + format + "'");
    }
    return 0;
}

int fail(const std::string& reason, const std::string& message) {
    std::string flat = message;
    for (char& c : flat) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error reason=" << reason << " message=\"" << flat << "\"" << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MCDL generalized category discovery laboratory"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub, bool with_variant) {
        sub->add_option("--config", common.config_path, "INI config file");
        sub->add_option("--seed", common.seed, "override the run seed");
        if (with_variant) {
            sub->add_option("--variant", common.variants, "variant preset(s); combine with '+'");
        }
    };

    auto* gen = app.add_subcommand("generate", "generate and split a synthetic dataset");
    add_common(gen, false);
    gen->add_option("--out", common.out, "dataset file (default dataset.txt)");

    auto* train = app.add_subcommand("train", "train a model and write a run directory");
    add_common(train, true);
    train->add_option("--out", common.out, "run directory (overrides output.dir)");

    std::string checkpoint, dataset, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    evaluate->add_option("--dataset", dataset, "dataset file")->required();
    evaluate->add_option("--out", eval_out, "write the report here instead of stdout");

    auto* abl = app.add_subcommand("ablate", "run variants on a shared dataset and seed");
    add_common(abl, true);
    abl->add_option("--out", common.out, "table file (default stdout)");

    std::string run_dir, plot_out, format = "json";
    auto* plots = app.add_subcommand("export-plots", "emit plot series from a finished run");
    plots->add_option("--run", run_dir, "run directory")->required();
    plots->add_option("--out", plot_out, "output directory (default <run>/plots)");
    plots->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*gen) return cmd_generate(common);
        if (*train) return cmd_train(common);
        if (*evaluate) return cmd_evaluate(checkpoint, dataset, eval_out);
        if (*abl) return cmd_ablate(common);
        if (*plots) return cmd_export_plots(run_dir, plot_out, format);
    } catch (const mcdl::Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 1;
}
