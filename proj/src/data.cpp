#include "mcdl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "mcdl/error.hpp"

namespace mcdl {

char split_code(SplitTag tag) {
    switch (tag) {
        case SplitTag::Labeled: return 'L';
        case SplitTag::Unlabeled: return 'U';
        case SplitTag::Validation: return 'V';
        case SplitTag::Unassigned: return '-';
    }
    return '?';
}

namespace {

SplitTag tag_from_code(const std::string& code) {
    if (code == "L") return SplitTag::Labeled;
    if (code == "U") return SplitTag::Unlabeled;
    if (code == "V") return SplitTag::Validation;
    if (code == "-") return SplitTag::Unassigned;
    throw FormatError("unknown split code '" + code + "'");
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over a combined word
    std::uint64_t x = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<std::size_t> GcdDataset::indices(SplitTag tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == tag) out.push_back(i);
    }
    return out;
}

std::size_t GcdDataset::count(SplitTag tag) const {
    return static_cast<std::size_t>(std::count(split.begin(), split.end(), tag));
}

std::size_t GcdDataset::num_old_classes() const {
    return static_cast<std::size_t>(std::count(is_old_class.begin(), is_old_class.end(), true));
}

void GcdDataset::validate_split() const {
    if (features.rows() != labels.size() || split.size() != labels.size()) {
        throw InvalidSplit("dataset arrays disagree on sample count");
    }
    if (is_old_class.size() != num_classes) throw InvalidSplit("old-class mask has the wrong length");
    std::vector<bool> unlabeled_has(num_classes, false);
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels[i] >= num_classes) throw InvalidSplit("label out of range at row " + std::to_string(i));
        switch (split[i]) {
            case SplitTag::Unassigned: throw InvalidSplit("row " + std::to_string(i) + " has no split");
            case SplitTag::Labeled:
            case SplitTag::Validation:
                if (!is_old_class[labels[i]]) {
                    throw InvalidSplit("new-class sample " + std::to_string(i) + " outside the unlabeled set");
                }
                break;
            case SplitTag::Unlabeled: unlabeled_has[labels[i]] = true; break;
        }
    }
    if (count(SplitTag::Labeled) == 0) throw InvalidSplit("labeled set is empty");
    if (count(SplitTag::Unlabeled) == 0) throw InvalidSplit("unlabeled set is empty");
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (!unlabeled_has[c]) throw InvalidSplit("class " + std::to_string(c) + " missing from the unlabeled set");
    }
}

GcdDataset generate_gaussian_gcd(const GaussianSpec& spec) {
    if (spec.num_classes < 2) throw InvalidInput("need at least two classes");
    if (spec.per_class < 4) throw InvalidInput("need at least four samples per class");
    if (spec.dims == 0) throw InvalidInput("feature dimension must be positive");
    if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) throw InvalidInput("separation must be >= 0");
    if (!(spec.imbalance >= 1.0)) throw InvalidInput("imbalance ratio must be >= 1");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix means(spec.num_classes, spec.dims);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        auto m = means.row(c);
        double norm = 0.0;
        while (norm < 1e-8) {
            for (double& v : m) v = normal(rng);
            norm = l2_norm(m);
        }
        for (double& v : m) v *= spec.separation / norm;
    }

    GcdDataset ds;
    ds.dims = spec.dims;
    ds.num_classes = spec.num_classes;
    ds.is_old_class.assign(spec.num_classes, false);
    std::vector<double> x(spec.dims);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        std::size_t n = spec.per_class;
        if (spec.imbalance > 1.0) {
            const double t = static_cast<double>(c) / static_cast<double>(spec.num_classes - 1);
            n = std::max<std::size_t>(4, static_cast<std::size_t>(
                                             std::llround(static_cast<double>(spec.per_class) *
                                                          std::pow(spec.imbalance, -t))));
        }
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t d = 0; d < spec.dims; ++d) x[d] = means(c, d) + normal(rng);
            ds.features.append_row(x);
            ds.labels.push_back(c);
        }
    }
    ds.split.assign(ds.labels.size(), SplitTag::Unassigned);
    return ds;
}

GcdDataset gcd_split(GcdDataset ds, const SplitSpec& spec) {
    if (!(spec.old_fraction > 0.0 && spec.old_fraction <= 1.0)) throw InvalidInput("old_fraction must lie in (0, 1]");
    if (!(spec.labeled_fraction > 0.0 && spec.labeled_fraction < 1.0)) {
        throw InvalidInput("labeled_fraction must lie in (0, 1)");
    }
    if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0)) {
        throw InvalidInput("validation_fraction must lie in [0, 1)");
    }
    if (spec.validation_fraction + spec.labeled_fraction >= 1.0) {
        throw InvalidInput("labeled and validation fractions leave no unlabeled old-class samples");
    }

    std::mt19937_64 rng(mix_seed(spec.seed, 0x5151));
    std::vector<std::size_t> classes(ds.num_classes);
    std::iota(classes.begin(), classes.end(), std::size_t{0});
    std::shuffle(classes.begin(), classes.end(), rng);
    const auto n_old = static_cast<std::size_t>(std::ceil(spec.old_fraction * static_cast<double>(ds.num_classes)));
    ds.is_old_class.assign(ds.num_classes, false);
    for (std::size_t k = 0; k < n_old; ++k) ds.is_old_class[classes[k]] = true;

    std::vector<std::vector<std::size_t>> members(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) members[ds.labels[i]].push_back(i);

    ds.split.assign(ds.size(), SplitTag::Unlabeled);
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        if (!ds.is_old_class[c]) continue;
        auto& idx = members[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        const double n = static_cast<double>(idx.size());
        const auto n_val = static_cast<std::size_t>(std::llround(spec.validation_fraction * n));
        const auto n_lab = static_cast<std::size_t>(std::llround(spec.labeled_fraction * n));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k < n_val) {
                ds.split[idx[k]] = SplitTag::Validation;
            } else if (k < n_val + n_lab) {
                ds.split[idx[k]] = SplitTag::Labeled;
            }
        }
    }
    ds.validate_split();
    return ds;
}

void AugmentConfig::validate() const {
    if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) throw ConfigError("mask_fraction must lie in [0, 1)");
    if (!(sigma_weak >= 0.0)) throw ConfigError("sigma_weak must be >= 0");
    if (!(sigma_strong >= sigma_weak)) throw ConfigError("sigma_strong must be >= sigma_weak");
}

std::vector<double> augment(std::span<const double> x, ViewMode mode, const AugmentConfig& cfg, std::mt19937_64& rng) {
    std::vector<double> out(x.begin(), x.end());
    const double sigma = mode == ViewMode::Weak ? cfg.sigma_weak : cfg.sigma_strong;
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (double& v : out) v += noise(rng);
    }
    if (mode == ViewMode::Strong) {
        const auto n_mask = static_cast<std::size_t>(std::llround(cfg.mask_fraction * static_cast<double>(out.size())));
        if (n_mask > 0) {
            // partial Fisher-Yates: the first n_mask slots are a uniform subset
            std::vector<std::size_t> order(out.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t k = 0; k < n_mask; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
                std::swap(order[k], order[pick(rng)]);
                out[order[k]] = 0.0;
            }
        }
    }
    return out;
}

std::vector<MixedBatch> batch_iter(const GcdDataset& ds, std::size_t batch_size, std::uint64_t seed,
                                   std::size_t epoch) {
    if (batch_size < 2) throw InvalidInput("batch_size must be at least 2");
    auto labeled = ds.indices(SplitTag::Labeled);
    auto unlabeled = ds.indices(SplitTag::Unlabeled);
    std::mt19937_64 rng(mix_seed(seed, 0xBA7C00000000ULL + epoch));
    std::shuffle(labeled.begin(), labeled.end(), rng);
    std::shuffle(unlabeled.begin(), unlabeled.end(), rng);

    const std::size_t total = labeled.size() + unlabeled.size();
    const std::size_t n_batches = std::max<std::size_t>(1, (total + batch_size - 1) / batch_size);
    std::vector<MixedBatch> out(n_batches);
    const auto deal = [n_batches](const std::vector<std::size_t>& src, auto member, std::vector<MixedBatch>& dst) {
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * src.size() / n_batches;
            const std::size_t hi = (b + 1) * src.size() / n_batches;
            (dst[b].*member).assign(src.begin() + static_cast<std::ptrdiff_t>(lo),
                                    src.begin() + static_cast<std::ptrdiff_t>(hi));
        }
    };
    deal(labeled, &MixedBatch::labeled, out);
    deal(unlabeled, &MixedBatch::unlabeled, out);
    return out;
}

void write_dataset(std::ostream& os, const GcdDataset& ds) {
    os << "mcdl-dataset 1\n";
    os << "dims " << ds.dims << " classes " << ds.num_classes << "\n";
    os << "old";
    for (bool b : ds.is_old_class) os << ' ' << (b ? 1 : 0);
    os << "\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << split_code(ds.split[i]) << ' ' << ds.labels[i];
        for (double v : ds.features.row(i)) os << ' ' << v;
        os << '\n';
    }
}

GcdDataset read_dataset(std::istream& is) {
    std::string word;
    int version = 0;
    if (!(is >> word >> version) || word != "mcdl-dataset") throw FormatError("missing dataset header");
    if (version != 1) throw FormatError("unsupported dataset version " + std::to_string(version));
    GcdDataset ds;
    std::string k1, k2;
    if (!(is >> k1 >> ds.dims >> k2 >> ds.num_classes) || k1 != "dims" || k2 != "classes") {
        throw FormatError("malformed dims/classes line");
    }
    if (!(is >> word) || word != "old") throw FormatError("missing old-class line");
    ds.is_old_class.resize(ds.num_classes);
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        int b = 0;
        if (!(is >> b)) throw FormatError("truncated old-class line");
        ds.is_old_class[c] = b != 0;
    }
    std::string line;
    std::getline(is, line);
    std::vector<double> x(ds.dims);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string code;
        std::size_t label = 0;
        if (!(ls >> code >> label)) throw FormatError("malformed sample line");
        for (double& v : x) {
            if (!(ls >> v)) throw FormatError("sample line has too few coordinates");
        }
        if (label >= ds.num_classes) throw FormatError("sample label out of range");
        ds.split.push_back(tag_from_code(code));
        ds.labels.push_back(label);
        ds.features.append_row(x);
    }
    return ds;
}

void save_dataset(const std::string& path, const GcdDataset& ds) {
    std::ofstream os(path);
    if (!os) throw Error("io-error", "cannot write dataset to " + path);
    write_dataset(os, ds);
}

GcdDataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("dataset-not-found", "cannot open dataset " + path);
    return read_dataset(is);
}

}  // namespace mcdl
