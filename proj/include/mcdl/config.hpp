#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcdl/data.hpp"
#include "mcdl/dcm.hpp"
#include "mcdl/losses.hpp"

namespace mcdl {

// Which loss terms a run trains with. `Baseline` is labeled contrastive plus
// self-distillation on all unlabeled samples, with no credibility gating.
enum class LossVariant { Baseline, Sup, SupSemi, Full };

const char* to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& name);

// Classifier weights at step 0: Xavier-random, or the normalized centers of a
// semi-supervised k-means over the initial features (labeled class means fixed,
// remaining classes found in the unlabeled set).
enum class ClassifierInit { Random, Prototypes };

const char* to_string(ClassifierInit v);
ClassifierInit classifier_init_from_string(const std::string& name);

struct RunConfig {
    GaussianSpec data{};
    SplitSpec split{};
    AugmentConfig augment{};
    LossConfig loss{};

    std::size_t mu = 16;
    CredibilityRules credibility{};
    // Epoch index from which credibility gating may mark samples High/Medium.
    std::size_t gating_start_epoch = 0;
    LossVariant loss_variant = LossVariant::Full;

    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 32;
    ClassifierInit classifier_init = ClassifierInit::Prototypes;
    double prototype_scale = 10.0;  // norm of each initial class weight column

    std::size_t batch_size = 128;
    std::size_t epochs = 60;
    double base_lr = 0.003;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::uint64_t seed = 1;
    bool has_seed = true;

    std::string output_dir = "run";
    // Optional dataset file; when empty the dataset is generated from `data`
    // and split with `split`.
    std::string dataset_path;

    void validate() const;

    // key = value lines grouped in [sections]; same layout load_config reads.
    std::string to_ini() const;
    std::uint64_t hash() const;
};

RunConfig parse_config(const std::string& ini_text);
RunConfig load_config(const std::string& path);

// Named presets layered over a config:
//   both | weak-only | strong-only                   credibility banks
//   baseline | sup | sup-semi | full                 loss terms
//   weak-floor | unnormalized-soft                 formula variants
void apply_variant(RunConfig& cfg, const std::string& variant);
const std::vector<std::string>& known_variants();

}  // namespace mcdl
