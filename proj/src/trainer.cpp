#include "mcdl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <limits>
#include <sstream>
#include <unordered_map>


#include "mcdl/binio.hpp"
#include "mcdl/error.hpp"

namespace mcdl {

// ---------------------------------------------------------------------------
// checkpoints

namespace {

void put_matrix(std::ostream& os, const Matrix& m) {
    binio::put<std::uint64_t>(os, m.rows());
    binio::put<std::uint64_t>(os, m.cols());
    binio::put_doubles(os, std::vector<double>(m.values().begin(), m.values().end()));
}

Matrix get_matrix(std::istream& is) {
    const auto rows = binio::get<std::uint64_t>(is);
    const auto cols = binio::get<std::uint64_t>(is);
    const auto data = binio::get_doubles(is);
    if (data.size() != rows * cols) throw FormatError("matrix payload does not match its shape");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.values().begin());
    return m;
}

void put_params(std::ostream& os, const ModelParams& p) {
    binio::put<std::uint64_t>(os, p.shape.input_dim);
    binio::put<std::uint64_t>(os, p.shape.hidden_dim);
    binio::put<std::uint64_t>(os, p.shape.feature_dim);
    binio::put<std::uint64_t>(os, p.shape.num_classes);
    for (const Matrix* t : p.tensors()) put_matrix(os, *t);
}

ModelParams get_params(std::istream& is) {
    ModelShape s;
    s.input_dim = binio::get<std::uint64_t>(is);
    s.hidden_dim = binio::get<std::uint64_t>(is);
    s.feature_dim = binio::get<std::uint64_t>(is);
    s.num_classes = binio::get<std::uint64_t>(is);
    ModelParams p = ModelParams::zeros(s);
    for (Matrix* t : p.tensors()) {
        Matrix m = get_matrix(is);
        if (m.rows() != t->rows() || m.cols() != t->cols()) throw FormatError("parameter tensor has the wrong shape");
        *t = std::move(m);
    }
    return p;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    binio::put<std::uint32_t>(os, kCheckpointVersion);
    binio::put<std::uint64_t>(os, c.config_hash);
    binio::put_string(os, c.config_ini);
    binio::put<std::uint64_t>(os, c.epoch);
    put_params(os, c.params);
    binio::put<double>(os, c.optimizer.base_lr);
    binio::put<double>(os, c.optimizer.momentum);
    binio::put<double>(os, c.optimizer.weight_decay);
    binio::put<std::uint64_t>(os, c.optimizer.current_epoch);
    binio::put<std::uint64_t>(os, c.optimizer.total_epochs);
    put_params(os, c.optimizer.velocity);
    binio::put_string(os, c.rng_state);
    binio::put<std::uint64_t>(os, c.banks.size());
    for (const auto& b : c.banks) b.write(os);
}

Checkpoint read_checkpoint(std::istream& is) {
    char magic[sizeof(kCheckpointMagic)] = {};
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) throw FormatError("not a checkpoint file");
    const auto version = binio::get<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.config_hash = binio::get<std::uint64_t>(is);
    c.config_ini = binio::get_string(is);
    c.epoch = binio::get<std::uint64_t>(is);
    c.params = get_params(is);
    c.optimizer.base_lr = binio::get<double>(is);
    c.optimizer.momentum = binio::get<double>(is);
    c.optimizer.weight_decay = binio::get<double>(is);
    c.optimizer.current_epoch = binio::get<std::uint64_t>(is);
    c.optimizer.total_epochs = binio::get<std::uint64_t>(is);
    c.optimizer.velocity = get_params(is);
    c.rng_state = binio::get_string(is);
    const auto n = binio::get<std::uint64_t>(is);
    c.banks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) c.banks.push_back(MemoryBankPair::read(is));
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("io-error", "cannot write checkpoint " + path);
    write_checkpoint(os, c);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("checkpoint-not-found", "cannot open checkpoint " + path);
    return read_checkpoint(is);
}

// ---------------------------------------------------------------------------
// evaluation helpers

GcdDataset prepare_dataset(const RunConfig& cfg) {
    if (!cfg.dataset_path.empty()) {
        GcdDataset ds = load_dataset(cfg.dataset_path);
        ds.validate_split();
        return ds;
    }
    return gcd_split(generate_gaussian_gcd(cfg.data), cfg.split);
}

std::vector<std::size_t> predict_labels(const ModelParams& params, const GcdDataset& ds,
                                        std::span<const std::size_t> rows) {
    std::vector<std::size_t> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(argmax(classify(params, encode(params, ds.features.row(r)))));
    return out;
}

AccReport evaluate_model(const ModelParams& params, const GcdDataset& ds) {
    const auto rows = ds.indices(SplitTag::Unlabeled);
    const auto pred = predict_labels(params, ds, rows);
    std::vector<std::size_t> truth;
    truth.reserve(rows.size());
    for (std::size_t r : rows) truth.push_back(ds.labels[r]);
    return clustering_acc(pred, truth, ds.num_classes, ds.is_old_class);
}

double validation_accuracy(const ModelParams& params, const GcdDataset& ds) {
    const auto rows = ds.indices(SplitTag::Validation);
    if (rows.empty()) return 0.0;
    const auto pred = predict_labels(params, ds, rows);
    std::vector<std::size_t> truth;
    for (std::size_t r : rows) truth.push_back(ds.labels[r]);
    return clustering_acc(pred, truth, ds.num_classes, ds.is_old_class).acc_all;
}

// ---------------------------------------------------------------------------
// Trainer

// ---------------------------------------------------------------------------
// classifier initialization

namespace {

// Semi-supervised k-means on the initial (clean) features: old-class centers
// start at the labeled means and labeled rows stay assigned to their class;
// the remaining class slots are seeded k-means++ style from the unlabeled
// features. The best of several restarts (by total cosine similarity) sets
// the class weights to its normalized centers.
using Centers = std::vector<std::vector<double>>;

constexpr std::size_t kPrototypeRestarts = 10;

void normalize_in_place(std::vector<double>& v) {
    const double n = l2_norm(v);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
}

std::size_t nearest_center(std::span<const double> z, const Centers& centers) {
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double sim = dot(z, centers[c]);
        if (sim > best_sim) {
            best_sim = sim;
            best = c;
        }
    }
    return best;
}

double kmeans_once(const Matrix& z_lab, std::span<const std::size_t> lab_class, const Matrix& z_unl,
                   Centers& centers, std::vector<bool> live, std::mt19937_64& rng) {
    const std::size_t C = centers.size();
    const std::size_t F = z_unl.cols();
    const std::size_t n = z_unl.rows();

    for (std::size_t c = 0; c < C; ++c) {
        if (live[c]) continue;
        std::vector<double> weight(n, 1.0);
        if (std::find(live.begin(), live.end(), true) != live.end()) {
            for (std::size_t i = 0; i < n; ++i) {
                double best = -2.0;
                for (std::size_t k = 0; k < C; ++k) {
                    if (live[k]) best = std::max(best, dot(z_unl.row(i), centers[k]));
                }
                weight[i] = std::max(0.0, 1.0 - best) * std::max(0.0, 1.0 - best);
            }
        }
        std::size_t pick = 0;
        if (std::accumulate(weight.begin(), weight.end(), 0.0) > 0.0) {
            std::discrete_distribution<std::size_t> dist(weight.begin(), weight.end());
            pick = dist(rng);
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        auto row = z_unl.row(pick);
        centers[c].assign(row.begin(), row.end());
        live[c] = true;
    }

    double score = 0.0;
    for (int iter = 0; iter < 50; ++iter) {
        Centers sums(C, std::vector<double>(F, 0.0));
        std::vector<std::size_t> counts(C, 0);
        score = 0.0;
        for (std::size_t i = 0; i < z_lab.rows(); ++i) {
            const std::size_t c = lab_class[i];
            for (std::size_t f = 0; f < F; ++f) sums[c][f] += z_lab(i, f);
            ++counts[c];
            score += dot(z_lab.row(i), centers[c]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_center(z_unl.row(i), centers);
            for (std::size_t f = 0; f < F; ++f) sums[c][f] += z_unl(i, f);
            ++counts[c];
            score += dot(z_unl.row(i), centers[c]);
        }
        bool moved = false;
        for (std::size_t c = 0; c < C; ++c) {
            if (counts[c] == 0) continue;
            normalize_in_place(sums[c]);
            if (sums[c] != centers[c]) moved = true;
            centers[c] = std::move(sums[c]);
        }
        if (!moved) break;
    }
    return score;
}

void init_classifier_from_prototypes(ModelParams& params, const GcdDataset& ds, double scale, std::size_t restarts,
                                     std::uint64_t seed) {
    const std::size_t C = ds.num_classes;
    const std::size_t F = params.shape.feature_dim;
    const auto labeled = ds.indices(SplitTag::Labeled);
    const auto unlabeled = ds.indices(SplitTag::Unlabeled);

    Matrix z_lab(0, F);
    std::vector<std::size_t> lab_class;
    for (std::size_t r : labeled) {
        z_lab.append_row(encode(params, ds.features.row(r)));
        lab_class.push_back(ds.labels[r]);
    }
    Matrix z_unl(0, F);
    for (std::size_t r : unlabeled) z_unl.append_row(encode(params, ds.features.row(r)));

    Centers anchors(C, std::vector<double>(F, 0.0));
    std::vector<bool> anchored(C, false);
    for (std::size_t i = 0; i < z_lab.rows(); ++i) {
        anchored[lab_class[i]] = true;
        for (std::size_t f = 0; f < F; ++f) anchors[lab_class[i]][f] += z_lab(i, f);
    }
    for (auto& a : anchors) normalize_in_place(a);

    std::mt19937_64 rng(seed);
    Centers best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < std::max<std::size_t>(restarts, 1); ++run) {
        Centers centers = anchors;
        const double score = kmeans_once(z_lab, lab_class, z_unl, centers, anchored, rng);
        if (score > best_score) {
            best_score = score;
            best = std::move(centers);
        }
    }

    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t c = 0; c < C; ++c) params.wc(f, c) = scale * best[c][f];
    }
    params.bc.fill(0.0);
}

}  // namespace

Trainer::Trainer(RunConfig cfg, GcdDataset dataset) : cfg_(std::move(cfg)), data_(std::move(dataset)) {
    cfg_.validate();
    if (data_.dims == 0 || data_.features.cols() != data_.dims) throw InvalidInput("dataset has no feature columns");
    if (data_.count(SplitTag::Unlabeled) == 0) throw InvalidSplit("unlabeled set is empty");

    ModelShape shape;
    shape.input_dim = data_.dims;
    shape.hidden_dim = cfg_.hidden_dim;
    shape.feature_dim = cfg_.feature_dim;
    shape.num_classes = data_.num_classes;
    params_ = ModelParams::init(shape, mix_seed(cfg_.seed, 0x1D1));
    opt_ = OptimizerState::create(shape, cfg_.base_lr, cfg_.momentum, std::max<std::size_t>(cfg_.epochs, 1),
                                  cfg_.weight_decay);
    if (cfg_.classifier_init == ClassifierInit::Prototypes) {
        init_classifier_from_prototypes(params_, data_, cfg_.prototype_scale, kPrototypeRestarts,
                                        mix_seed(cfg_.seed, 0x9C7));
    }
    rng_.seed(mix_seed(cfg_.seed, 0xA06));

    unlabeled_rows_ = data_.indices(SplitTag::Unlabeled);
    bank_of_row_.assign(data_.size(), static_cast<std::size_t>(-1));
    banks_.reserve(unlabeled_rows_.size());
    for (std::size_t k = 0; k < unlabeled_rows_.size(); ++k) {
        bank_of_row_[unlabeled_rows_[k]] = k;
        banks_.emplace_back(unlabeled_rows_[k], cfg_.mu, data_.num_classes);
    }
}

BranchSwitches Trainer::branches() const {
    BranchSwitches b;
    switch (cfg_.loss_variant) {
        case LossVariant::Baseline: b.sup = false; b.semi = false; break;
        case LossVariant::Sup: b.semi = false; b.self = false; break;
        case LossVariant::SupSemi: b.self = false; break;
        case LossVariant::Full: break;
    }
    return b;
}

CredibilityAssignment Trainer::gate(const MemoryBankPair& bank) const {
    if (cfg_.loss_variant == LossVariant::Baseline || epoch_ < cfg_.gating_start_epoch) {
        CredibilityAssignment a;
        a.sample_id = bank.sample_id();
        return a;
    }
    return assess_bank(bank, cfg_.credibility);
}

std::vector<CredibilityAssignment> Trainer::current_assignments() const {
    std::vector<CredibilityAssignment> out;
    out.reserve(banks_.size());
    for (const auto& b : banks_) out.push_back(gate(b));
    return out;
}

const MetricsRecord& Trainer::run_epoch() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t C = data_.num_classes;
    const std::size_t D = data_.dims;
    const BranchSwitches sw = branches();

    opt_.current_epoch = std::min(epoch_, opt_.total_epochs);
    MetricsRecord rec;
    rec.epoch = epoch_;
    rec.lr = cosine_lr(opt_);

    const auto batches = batch_iter(data_, cfg_.batch_size, cfg_.seed, epoch_);
    std::size_t n_steps = 0;
    for (const auto& mb : batches) {
        if (mb.unlabeled.empty() && mb.labeled.empty()) continue;

        // Views. Labeled items only need the weak view.
        Matrix xl_w(mb.labeled.size(), D);
        for (std::size_t i = 0; i < mb.labeled.size(); ++i) {
            const auto v = augment(data_.features.row(mb.labeled[i]), ViewMode::Weak, cfg_.augment, rng_);
            std::copy(v.begin(), v.end(), xl_w.row(i).begin());
        }
        Matrix xu_w(mb.unlabeled.size(), D), xu_s(mb.unlabeled.size(), D);
        for (std::size_t i = 0; i < mb.unlabeled.size(); ++i) {
            const auto row = data_.features.row(mb.unlabeled[i]);
            const auto w = augment(row, ViewMode::Weak, cfg_.augment, rng_);
            const auto s = augment(row, ViewMode::Strong, cfg_.augment, rng_);
            std::copy(w.begin(), w.end(), xu_w.row(i).begin());
            std::copy(s.begin(), s.end(), xu_s.row(i).begin());
        }

        const Matrix pw = predict_proba(params_, xu_w);
        const Matrix ps = predict_proba(params_, xu_s);

        std::vector<CredibilityAssignment> assignments;
        assignments.reserve(mb.unlabeled.size());
        for (std::size_t i = 0; i < mb.unlabeled.size(); ++i) {
            MemoryBankPair& bank = banks_[bank_of_row_[mb.unlabeled[i]]];
            bank.record_epoch(pw.row(i), ps.row(i));
            assignments.push_back(gate(bank));
        }
        const BatchPartition part = partition_batch(mb.unlabeled, assignments);

        // Batch position of each unlabeled row id.
        std::unordered_map<std::size_t, std::size_t> pos;
        for (std::size_t i = 0; i < mb.unlabeled.size(); ++i) pos[mb.unlabeled[i]] = i;

        ObjectiveBatch ob;
        ob.contrastive_x = Matrix(0, D);
        for (std::size_t i = 0; i < mb.labeled.size(); ++i) {
            ob.contrastive_x.append_row(xl_w.row(i));
            ob.contrastive_labels.push_back(data_.labels[mb.labeled[i]]);
            ob.labeled_anchors.push_back(i);
        }
        std::unordered_map<std::size_t, std::size_t> hard_label;
        for (std::size_t k = 0; k < assignments.size(); ++k) {
            if (assignments[k].level == Credibility::High) hard_label[assignments[k].sample_id] = *assignments[k].pseudo_label;
        }
        for (std::size_t id : part.high) {
            ob.high_anchors.push_back(ob.contrastive_x.rows());
            ob.contrastive_x.append_row(xu_w.row(pos[id]));
            ob.contrastive_labels.push_back(hard_label[id]);
        }

        // Mixing pool: high then mid, each with its bank-derived target.
        std::vector<std::size_t> pool(part.high);
        pool.insert(pool.end(), part.mid.begin(), part.mid.end());
        std::vector<std::vector<double>> targets;
        targets.reserve(pool.size());
        for (std::size_t id : part.high) {
            std::vector<double> y(C, 0.0);
            y[hard_label[id]] = 1.0;
            targets.push_back(std::move(y));
        }
        for (std::size_t id : part.mid) {
            targets.push_back(soft_pseudo_label(banks_[bank_of_row_[id]], cfg_.loss.tau_u,
                                                cfg_.loss.renormalize_soft_targets));
        }
        ob.mixed_high_x = Matrix(0, D);
        ob.mixed_high_y = Matrix(0, C);
        ob.mixed_mid_x = Matrix(0, D);
        ob.mixed_mid_y = Matrix(0, C);
        if (sw.semi && !pool.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (std::size_t k = 0; k < pool.size(); ++k) {
                const std::size_t j = pick(rng_);
                const double delta = sample_beta(cfg_.loss.alpha, rng_);
                const auto m = mixmatch_mix(xu_w.row(pos[pool[k]]), targets[k], xu_w.row(pos[pool[j]]), targets[j],
                                            delta);
                if (k < part.high.size()) {
                    ob.mixed_high_x.append_row(m.x);
                    ob.mixed_high_y.append_row(m.y);
                } else {
                    ob.mixed_mid_x.append_row(m.x);
                    ob.mixed_mid_y.append_row(m.y);
                }
            }
        }

        ob.self_x = xu_s;
        ob.self_targets = pw;

        const ObjectiveResult res = evaluate_objective(params_, ob, cfg_.loss, sw, true);
        if (on_batch) on_batch(ob, res.losses);
        sgd_step(params_, res.grads, opt_);

        rec.losses.labeled_sup += res.losses.labeled_sup;
        rec.losses.sup += res.losses.sup;
        rec.losses.semi += res.losses.semi;
        rec.losses.semi_ce += res.losses.semi_ce;
        rec.losses.semi_mse += res.losses.semi_mse;
        rec.losses.self += res.losses.self;
        rec.losses.total += res.losses.total;
        ++n_steps;
    }
    if (n_steps > 0) {
        const double inv = 1.0 / static_cast<double>(n_steps);
        for (double* v : {&rec.losses.labeled_sup, &rec.losses.sup, &rec.losses.semi, &rec.losses.semi_ce,
                          &rec.losses.semi_mse, &rec.losses.self, &rec.losses.total}) {
            *v *= inv;
        }
    }

    ++epoch_;
    opt_.current_epoch = std::min(epoch_, opt_.total_epochs);

    rec.acc = evaluate_model(params_, data_);
    rec.val_acc = validation_accuracy(params_, data_);
    SelectionOptions sel;
    sel.tau_u = cfg_.loss.tau_u;
    sel.renormalize = cfg_.loss.renormalize_soft_targets;
    sel.cluster_to_class = rec.acc.matching;
    rec.selection = selection_stats(current_assignments(), banks_, data_.labels, rec.epoch, sel);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history_.push_back(std::move(rec));
    return history_.back();
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint c;
    c.config_ini = cfg_.to_ini();
    c.config_hash = cfg_.hash();
    c.epoch = epoch_;
    c.params = params_;
    c.optimizer = opt_;
    std::ostringstream os;
    os << rng_;
    c.rng_state = os.str();
    c.banks = banks_;
    return c;
}

void Trainer::restore(const Checkpoint& c) {
    if (c.config_hash != cfg_.hash()) throw ConfigError("checkpoint was written by a different config");
    if (!(c.params.shape == params_.shape)) throw FormatError("checkpoint model shape differs from the config");
    if (c.banks.size() != banks_.size()) throw FormatError("checkpoint bank count differs from the dataset");
    params_ = c.params;
    opt_ = c.optimizer;
    std::istringstream is(c.rng_state);
    is >> rng_;
    if (!is) throw FormatError("bad rng state in checkpoint");
    banks_ = c.banks;
    epoch_ = c.epoch;
}

// ---------------------------------------------------------------------------
// runs

TrainResult train(const RunConfig& cfg) {
    cfg.validate();
    return train(cfg, prepare_dataset(cfg));
}

namespace {

TrainResult run_training(const RunConfig& cfg, const GcdDataset& dataset, std::optional<Checkpoint>* diagnostic) {
    const auto t0 = std::chrono::steady_clock::now();
    Trainer trainer(cfg, dataset);
    TrainResult out;
    out.best = trainer.checkpoint();
    out.best_report = evaluate_model(trainer.params(), trainer.dataset());
    double best_val = -1.0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        try {
            trainer.run_epoch();
        } catch (const NumericOverflow&) {
            // parameters are those of the last successful step
            if (diagnostic) *diagnostic = trainer.checkpoint();
            throw;
        }
        const MetricsRecord& rec = trainer.history().back();
        if (rec.val_acc >= best_val) {
            best_val = rec.val_acc;
            out.best = trainer.checkpoint();
            out.best_report = rec.acc;
            out.best_epoch = rec.epoch;
        }
    }
    out.last = trainer.checkpoint();
    out.history = trainer.history();
    out.dataset = trainer.dataset();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const GcdDataset& dataset) {
    return run_training(cfg, dataset, nullptr);
}

std::string metrics_header() {
    return "epoch,lr,loss_total,loss_labeled_sup,loss_sup,loss_semi,loss_semi_ce,loss_semi_mse,loss_self,"
           "acc_all,acc_old,acc_new,balanced_all,balanced_old,balanced_new,val_acc,"
           "n_high,n_mid,n_low,high_acc,mid_acc,n_cross_view,cross_view_acc";
}

std::string metrics_row(const MetricsRecord& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    const auto opt = [&](const std::optional<double>& v) {
        os << ',';
        if (v) os << *v;
    };
    os << r.epoch << ',' << r.lr << ',' << r.losses.total << ',' << r.losses.labeled_sup << ',' << r.losses.sup << ','
       << r.losses.semi << ',' << r.losses.semi_ce << ',' << r.losses.semi_mse << ',' << r.losses.self << ','
       << r.acc.acc_all << ',' << r.acc.acc_old << ',' << r.acc.acc_new << ',' << r.acc.balanced_all << ','
       << r.acc.balanced_old << ',' << r.acc.balanced_new << ',' << r.val_acc << ',' << r.selection.n_high << ','
       << r.selection.n_mid << ',' << r.selection.n_low;
    opt(r.selection.high_accuracy);
    opt(r.selection.mid_accuracy);
    os << ',' << r.selection.n_cross_view;
    opt(r.selection.cross_view_accuracy);
    return os.str();
}

void write_metrics(std::ostream& os, const std::vector<MetricsRecord>& history) {
    os << metrics_header() << '\n';
    for (const auto& r : history) os << metrics_row(r) << '\n';
}

nlohmann::json report_json(const AccReport& r) {
    return {{"acc_all", r.acc_all},           {"acc_old", r.acc_old},           {"acc_new", r.acc_new},
            {"balanced_all", r.balanced_all}, {"balanced_old", r.balanced_old}, {"balanced_new", r.balanced_new},
            {"n_all", r.n_all},               {"n_old", r.n_old},               {"n_new", r.n_new},
            {"matching", r.matching}};
}

TrainResult train_to_directory(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    const GcdDataset dataset = prepare_dataset(cfg);
    save_dataset((dir / "dataset.txt").string(), dataset);

    std::optional<Checkpoint> diagnostic;
    TrainResult out;
    try {
        out = run_training(cfg, dataset, &diagnostic);
    } catch (const NumericOverflow&) {
        if (diagnostic) save_checkpoint((dir / "diagnostic.ckpt").string(), *diagnostic);
        throw;
    }

    {
        std::ofstream os(dir / "metrics.csv");
        write_metrics(os, out.history);
    }
    save_checkpoint((dir / "best.ckpt").string(), out.best);
    save_checkpoint((dir / "last.ckpt").string(), out.last);

    nlohmann::json summary;
    summary["format"] = "mcdl-run-summary";
    summary["version"] = 1;
    summary["config_hash"] = cfg.hash();
    summary["epochs"] = out.history.size();
    summary["best_epoch"] = out.best_epoch;
    summary["final_report"] = report_json(out.best_report);
    if (!out.history.empty()) summary["last_report"] = report_json(out.history.back().acc);
    summary["wall_seconds"] = out.wall_seconds;
    summary["files"] = {{"metrics", "metrics.csv"},
                        {"best_checkpoint", "best.ckpt"},
                        {"last_checkpoint", "last.ckpt"},
                        {"dataset", "dataset.txt"}};
    {
        std::ofstream os(dir / "summary.json");
        os << summary.dump(2) << '\n';
    }
    {
        std::ofstream os(dir / "config.ini");
        os << cfg.to_ini();
    }
    return out;
}

// ---------------------------------------------------------------------------
// ablation

std::vector<AblationRow> ablate(const RunConfig& base, const std::vector<std::string>& variants) {
    std::vector<AblationRow> rows;
    const GcdDataset dataset = [&] {
        base.validate();
        return prepare_dataset(base);
    }();
    for (const auto& name : variants) {
        RunConfig cfg = base;
        std::stringstream ss(name);
        std::string part;
        while (std::getline(ss, part, '+')) apply_variant(cfg, part);
        const TrainResult res = train(cfg, dataset);

        AblationRow row;
        row.name = name;
        row.bank_mode = to_string(cfg.credibility.bank_mode);
        row.loss_variant = to_string(cfg.loss_variant);
        row.final_report = res.best_report;
        row.last_report = res.history.empty() ? res.best_report : res.history.back().acc;
        double sum = 0.0;
        std::size_t n = 0;
        const std::size_t from = res.history.size() > 20 ? res.history.size() - 20 : 0;
        for (std::size_t e = from; e < res.history.size(); ++e) {
            if (const auto& a = res.history[e].selection.high_accuracy) {
                sum += *a;
                ++n;
            }
        }
        if (n) row.high_accuracy_tail = sum / double(n);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "variant,bank_mode,losses,acc_all,acc_old,acc_new,last_acc_all,high_acc_tail\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.name << ',' << r.bank_mode << ',' << r.loss_variant << ',' << r.final_report.acc_all << ','
           << r.final_report.acc_old << ',' << r.final_report.acc_new << ',' << r.last_report.acc_all << ',';
        if (r.high_accuracy_tail) os << *r.high_accuracy_tail;
        os << '\n';
    }
    return os.str();
}

}  // namespace mcdl
