#include "mcdl/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mcdl/error.hpp"

namespace mcdl {

namespace pt = boost::property_tree;

const char* to_string(LossVariant v) {
    switch (v) {
        case LossVariant::Baseline: return "baseline";
        case LossVariant::Sup: return "sup";
        case LossVariant::SupSemi: return "sup-semi";
        case LossVariant::Full: return "full";
    }
    return "?";
}

LossVariant loss_variant_from_string(const std::string& name) {
    if (name == "baseline") return LossVariant::Baseline;
    if (name == "sup") return LossVariant::Sup;
    if (name == "sup-semi") return LossVariant::SupSemi;
    if (name == "full") return LossVariant::Full;
    throw ConfigError("unknown loss variant '" + name + "'");
}

const char* to_string(ClassifierInit v) {
    switch (v) {
        case ClassifierInit::Random: return "random";
        case ClassifierInit::Prototypes: return "prototypes";
    }
    return "?";
}

ClassifierInit classifier_init_from_string(const std::string& name) {
    if (name == "random") return ClassifierInit::Random;
    if (name == "prototypes") return ClassifierInit::Prototypes;
    throw ConfigError("unknown classifier init '" + name + "'");
}

void RunConfig::validate() const {
    if (!has_seed) throw ConfigError("a seed is required");
    if (data.num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
    if (data.per_class < 4) throw ConfigError("data.per_class must be >= 4");
    if (data.dims == 0) throw ConfigError("data.dims must be positive");
    augment.validate();
    loss.validate();
    if (mu == 0) throw ConfigError("dcm.mu must be positive");
    if (hidden_dim == 0 || feature_dim == 0) throw ConfigError("model dimensions must be positive");
    if (!(prototype_scale > 0.0) || !std::isfinite(prototype_scale)) {
        throw ConfigError("model.prototype_scale must be positive");
    }
    if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
    if (!(base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train.momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string RunConfig::to_ini() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "[data]\n"
       << "num_classes = " << data.num_classes << "\n"
       << "dims = " << data.dims << "\n"
       << "per_class = " << data.per_class << "\n"
       << "separation = " << data.separation << "\n"
       << "imbalance = " << data.imbalance << "\n"
       << "seed = " << data.seed << "\n"
       << "path = " << dataset_path << "\n\n";
    os << "[split]\n"
       << "old_fraction = " << split.old_fraction << "\n"
       << "labeled_fraction = " << split.labeled_fraction << "\n"
       << "validation_fraction = " << split.validation_fraction << "\n"
       << "seed = " << split.seed << "\n\n";
    os << "[augment]\n"
       << "sigma_weak = " << augment.sigma_weak << "\n"
       << "sigma_strong = " << augment.sigma_strong << "\n"
       << "mask_fraction = " << augment.mask_fraction << "\n\n";
    os << "[loss]\n"
       << "tau_s = " << loss.tau_s << "\n"
       << "tau_u = " << loss.tau_u << "\n"
       << "alpha = " << loss.alpha << "\n"
       << "lambda = " << loss.lambda << "\n"
       << "renormalize_soft_targets = " << (loss.renormalize_soft_targets ? "true" : "false") << "\n"
       << "variant = " << to_string(loss_variant) << "\n\n";
    os << "[dcm]\n"
       << "mu = " << mu << "\n"
       << "bank_mode = " << to_string(credibility.bank_mode) << "\n"
       << "floor_uses_weak_bank = " << (credibility.floor_uses_weak_bank ? "true" : "false") << "\n"
       << "gating_start_epoch = " << gating_start_epoch << "\n\n";
    os << "[model]\n"
       << "hidden_dim = " << hidden_dim << "\n"
       << "feature_dim = " << feature_dim << "\n"
       << "classifier_init = " << to_string(classifier_init) << "\n"
       << "prototype_scale = " << prototype_scale << "\n\n";
    os << "[train]\n"
       << "batch_size = " << batch_size << "\n"
       << "epochs = " << epochs << "\n"
       << "base_lr = " << base_lr << "\n"
       << "momentum = " << momentum << "\n"
       << "weight_decay = " << weight_decay << "\n"
       << "seed = " << seed << "\n\n";
    os << "[output]\n"
       << "dir = " << output_dir << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    // FNV-1a over the canonical text form
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_ini()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>>& known_keys() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> keys = {
        {"data", {"num_classes", "dims", "per_class", "separation", "imbalance", "seed", "path"}},
        {"split", {"old_fraction", "labeled_fraction", "validation_fraction", "seed"}},
        {"augment", {"sigma_weak", "sigma_strong", "mask_fraction"}},
        {"loss", {"tau_s", "tau_u", "alpha", "lambda", "renormalize_soft_targets", "variant"}},
        {"dcm", {"mu", "bank_mode", "floor_uses_weak_bank", "gating_start_epoch"}},
        {"model", {"hidden_dim", "feature_dim", "classifier_init", "prototype_scale"}},
        {"train", {"batch_size", "epochs", "base_lr", "momentum", "weight_decay", "seed"}},
        {"output", {"dir"}},
    };
    return keys;
}

template <typename T>
void read_into(const pt::ptree& tree, const std::string& key, T& dst) {
    if (auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'))) {
        try {
            dst = node->get_value<T>();
        } catch (const pt::ptree_bad_data&) {
            throw ConfigError("bad value for " + key + ": '" + node->data() + "'");
        }
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message());
    }

    for (const auto& [section, node] : tree) {
        const auto& keys = known_keys();
        auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == section; });
        if (it == keys.end() || node.empty()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, _] : node) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
                throw ConfigError("unknown config key " + section + "." + key);
            }
        }
    }

    RunConfig c;
    c.has_seed = tree.get_optional<std::string>("train.seed").has_value();
    read_into(tree, "data.num_classes", c.data.num_classes);
    read_into(tree, "data.dims", c.data.dims);
    read_into(tree, "data.per_class", c.data.per_class);
    read_into(tree, "data.separation", c.data.separation);
    read_into(tree, "data.imbalance", c.data.imbalance);
    read_into(tree, "data.seed", c.data.seed);
    read_into(tree, "data.path", c.dataset_path);
    read_into(tree, "split.old_fraction", c.split.old_fraction);
    read_into(tree, "split.labeled_fraction", c.split.labeled_fraction);
    read_into(tree, "split.validation_fraction", c.split.validation_fraction);
    read_into(tree, "split.seed", c.split.seed);
    read_into(tree, "augment.sigma_weak", c.augment.sigma_weak);
    read_into(tree, "augment.sigma_strong", c.augment.sigma_strong);
    read_into(tree, "augment.mask_fraction", c.augment.mask_fraction);
    read_into(tree, "loss.tau_s", c.loss.tau_s);
    read_into(tree, "loss.tau_u", c.loss.tau_u);
    read_into(tree, "loss.alpha", c.loss.alpha);
    read_into(tree, "loss.lambda", c.loss.lambda);
    if (auto v = tree.get_optional<std::string>("loss.renormalize_soft_targets")) {
        c.loss.renormalize_soft_targets = parse_bool("loss.renormalize_soft_targets", *v);
    }
    if (auto v = tree.get_optional<std::string>("loss.variant")) c.loss_variant = loss_variant_from_string(*v);
    read_into(tree, "dcm.mu", c.mu);
    if (auto v = tree.get_optional<std::string>("dcm.bank_mode")) c.credibility.bank_mode = bank_mode_from_string(*v);
    if (auto v = tree.get_optional<std::string>("dcm.floor_uses_weak_bank")) {
        c.credibility.floor_uses_weak_bank = parse_bool("dcm.floor_uses_weak_bank", *v);
    }
    read_into(tree, "dcm.gating_start_epoch", c.gating_start_epoch);
    read_into(tree, "model.hidden_dim", c.hidden_dim);
    read_into(tree, "model.feature_dim", c.feature_dim);
    if (auto v = tree.get_optional<std::string>("model.classifier_init")) {
        c.classifier_init = classifier_init_from_string(*v);
    }
    read_into(tree, "model.prototype_scale", c.prototype_scale);
    read_into(tree, "train.batch_size", c.batch_size);
    read_into(tree, "train.epochs", c.epochs);
    read_into(tree, "train.base_lr", c.base_lr);
    read_into(tree, "train.momentum", c.momentum);
    read_into(tree, "train.weight_decay", c.weight_decay);
    read_into(tree, "train.seed", c.seed);
    read_into(tree, "output.dir", c.output_dir);
    return c;
}

RunConfig load_config(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config-not-found", "config file not found: " + path);
    std::ifstream is(path);
    if (!is) throw ConfigError("config-not-found", "cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

const std::vector<std::string>& known_variants() {
    static const std::vector<std::string> names = {"both",     "weak-only", "strong-only",  "baseline",
                                                   "sup",      "sup-semi",  "full",         "weak-floor",
                                                   "unnormalized-soft"};
    return names;
}

void apply_variant(RunConfig& cfg, const std::string& variant) {
    if (variant == "both" || variant == "weak-only" || variant == "strong-only") {
        cfg.credibility.bank_mode = bank_mode_from_string(variant);
    } else if (variant == "baseline" || variant == "sup" || variant == "sup-semi" || variant == "full") {
        cfg.loss_variant = loss_variant_from_string(variant);
    } else if (variant == "weak-floor") {
        cfg.credibility.floor_uses_weak_bank = true;
    } else if (variant == "unnormalized-soft") {
        cfg.loss.renormalize_soft_targets = false;
    } else {
        throw ConfigError("unknown variant '" + variant + "'");
    }
}

}  // namespace mcdl
