#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcdl/config.hpp"
#include "mcdl/data.hpp"
#include "mcdl/dcm.hpp"
#include "mcdl/eval.hpp"
#include "mcdl/model.hpp"
#include "mcdl/objective.hpp"
#include "mcdl/optimizer.hpp"

namespace mcdl {

struct MetricsRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    LossBreakdown losses;  // means over the epoch's batches
    AccReport acc;         // unlabeled set, clean inputs
    double val_acc = 0.0;  // validation set of the old classes
    SelectionStats selection;
    double wall_seconds = 0.0;  // kept out of the metrics file
};

// Full resumable state at an epoch boundary.
struct Checkpoint {
    std::string config_ini;
    std::uint64_t config_hash = 0;
    std::size_t epoch = 0;  // epochs completed
    ModelParams params;
    OptimizerState optimizer;
    std::string rng_state;
    std::vector<MemoryBankPair> banks;

    bool operator==(const Checkpoint&) const = default;
};

inline constexpr char kCheckpointMagic[8] = {'M', 'C', 'D', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Generates and splits the dataset named by the config, or loads it from
// config.dataset_path.
GcdDataset prepare_dataset(const RunConfig& cfg);

// Clean (unaugmented) argmax predictions for the given rows.
std::vector<std::size_t> predict_labels(const ModelParams& params, const GcdDataset& dataset,
                                        std::span<const std::size_t> rows);

// Clustering accuracy of the model on the unlabeled set.
AccReport evaluate_model(const ModelParams& params, const GcdDataset& dataset);

// Clustering accuracy on the validation rows (old classes only); 0 when there
// is no validation set.
double validation_accuracy(const ModelParams& params, const GcdDataset& dataset);

class Trainer {
public:
    Trainer(RunConfig cfg, GcdDataset dataset);

    // One pass over the data: per batch, weak/strong forward passes, bank
    // update, credibility split, loss construction and an SGD step. Appends
    // one MetricsRecord.
    const MetricsRecord& run_epoch();

    std::size_t epochs_completed() const noexcept { return epoch_; }
    const RunConfig& config() const noexcept { return cfg_; }
    const GcdDataset& dataset() const noexcept { return data_; }
    const ModelParams& params() const noexcept { return params_; }
    const OptimizerState& optimizer() const noexcept { return opt_; }
    const std::vector<MemoryBankPair>& banks() const noexcept { return banks_; }
    const std::vector<MetricsRecord>& history() const noexcept { return history_; }

    // Credibility of every unlabeled sample under the current banks.
    std::vector<CredibilityAssignment> current_assignments() const;

    Checkpoint checkpoint() const;
    void restore(const Checkpoint& ckpt);

    // Per-batch hook for tests: called with the batch objective before the
    // parameter update.
    std::function<void(const ObjectiveBatch&, const LossBreakdown&)> on_batch;

private:
    BranchSwitches branches() const;
    CredibilityAssignment gate(const MemoryBankPair& bank) const;

    RunConfig cfg_;
    GcdDataset data_;
    ModelParams params_;
    OptimizerState opt_;
    std::mt19937_64 rng_;
    std::size_t epoch_ = 0;
    std::vector<std::size_t> unlabeled_rows_;
    std::vector<std::size_t> bank_of_row_;  // dataset row -> bank index (unlabeled rows only)
    std::vector<MemoryBankPair> banks_;
    std::vector<MetricsRecord> history_;
};

struct TrainResult {
    Checkpoint best;  // highest validation accuracy (latest on ties)
    Checkpoint last;
    AccReport best_report;
    std::size_t best_epoch = 0;
    std::vector<MetricsRecord> history;
    GcdDataset dataset;
    double wall_seconds = 0.0;
};

// Runs config.epochs epochs. Writes nothing to disk.
TrainResult train(const RunConfig& cfg);
TrainResult train(const RunConfig& cfg, const GcdDataset& dataset);

// Writes metrics.csv, summary.json, best.ckpt, last.ckpt and dataset.txt
// into cfg.output_dir. On a numeric failure a diagnostic.ckpt snapshot of the
// last good epoch is written before rethrowing.
TrainResult train_to_directory(const RunConfig& cfg);

// Report fields as written to summary.json (and printed by `mcdl evaluate`).
nlohmann::json report_json(const AccReport& report);

std::string metrics_header();
std::string metrics_row(const MetricsRecord& r);
void write_metrics(std::ostream& os, const std::vector<MetricsRecord>& history);

struct AblationRow {
    std::string name;
    std::string bank_mode;
    std::string loss_variant;
    AccReport final_report;  // report of the selected (best-validation) model
    AccReport last_report;
    std::optional<double> high_accuracy_tail;  // mean over the last 20 epochs with High samples
};

// Runs one training per variant list (each entry may combine presets with
// '+', e.g. "weak-only+full") on a shared seed.
std::vector<AblationRow> ablate(const RunConfig& base, const std::vector<std::string>& variants);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace mcdl
