#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcdl/matrix.hpp"

namespace mcdl {

enum class SplitTag : std::uint8_t { Unassigned = 0, Labeled, Unlabeled, Validation };

char split_code(SplitTag tag);

// Feature vectors with hidden ground truth. After gcd_split every sample
// carries exactly one of Labeled / Unlabeled / Validation.
struct GcdDataset {
    std::size_t dims = 0;
    std::size_t num_classes = 0;
    Matrix features;                  // one row per sample
    std::vector<std::size_t> labels;  // ground truth; visible to training only for Labeled rows
    std::vector<SplitTag> split;
    std::vector<bool> is_old_class;   // per class

    std::size_t size() const noexcept { return labels.size(); }
    std::vector<std::size_t> indices(SplitTag tag) const;
    std::size_t count(SplitTag tag) const;
    std::size_t num_old_classes() const;

    // Throws InvalidSplit when the partition invariants do not hold.
    void validate_split() const;

    bool operator==(const GcdDataset&) const = default;
};

struct GaussianSpec {
    std::size_t num_classes = 10;
    std::size_t dims = 16;
    std::size_t per_class = 200;
    double separation = 8.0;
    // Class k has round(per_class * imbalance^(-k/(C-1))) samples (at least
    // four); 1 gives balanced classes.
    double imbalance = 1.0;
    std::uint64_t seed = 0;
};

// Class means on a sphere of radius `separation`, unit covariance.
GcdDataset generate_gaussian_gcd(const GaussianSpec& spec);

struct SplitSpec {
    double old_fraction = 0.5;
    double labeled_fraction = 0.5;
    double validation_fraction = 0.1;  // of each old class, held out before labeling
    std::uint64_t seed = 0;
};

// The first ceil(old_fraction * C) classes of a seeded class shuffle are old.
// Within each old class: validation_fraction is held out, then
// labeled_fraction of the class goes to the labeled set. Everything else is
// unlabeled.
GcdDataset gcd_split(GcdDataset dataset, const SplitSpec& spec);

struct AugmentConfig {
    double sigma_weak = 0.05;
    double sigma_strong = 0.25;
    double mask_fraction = 0.25;

    void validate() const;
};

enum class ViewMode { Weak, Strong };

// weak: x + N(0, sigma_weak^2)
// strong: x + N(0, sigma_strong^2), then round(mask_fraction * d) coordinates zeroed
std::vector<double> augment(std::span<const double> x, ViewMode mode, const AugmentConfig& cfg, std::mt19937_64& rng);

struct MixedBatch {
    std::vector<std::size_t> labeled;    // dataset row ids
    std::vector<std::size_t> unlabeled;  // dataset row ids
};

// Epoch-seeded shuffles of the labeled and unlabeled sets dealt evenly into
// ceil((|L|+|U|)/batch_size) batches. Each labeled and each unlabeled sample
// appears exactly once per epoch.
std::vector<MixedBatch> batch_iter(const GcdDataset& dataset, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t epoch);

// Columnar text format:
//   mcdl-dataset 1
//   dims <d> classes <C>
//   old <0/1 per class>
//   <split code L/U/V/-> <label> <x_1> ... <x_d>      (one line per sample)
void write_dataset(std::ostream& os, const GcdDataset& dataset);
GcdDataset read_dataset(std::istream& is);
void save_dataset(const std::string& path, const GcdDataset& dataset);
GcdDataset load_dataset(const std::string& path);

// Stable 64-bit seed derivation for independent rng streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace mcdl
