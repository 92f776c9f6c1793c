#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sempca {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Label : uint8_t { Normal = 0, Anomalous = 1, Unlabeled = 2 };

inline const char* to_string(Label l) {
    switch (l) {
        case Label::Normal: return "normal";
        case Label::Anomalous: return "anomalous";
        default: return "unlabeled";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "anomalous" || s == "anomaly") return Label::Anomalous;
    if (s == "unlabeled") return Label::Unlabeled;
    throw std::invalid_argument("unknown label: " + s);
}

// Error taxonomy. DataError maps to CLI exit code 2, UsageError to 1,
// anything else to 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic cross-platform RNG helpers. std::shuffle and
// uniform_int_distribution are implementation-defined, so seeded
// experiments roll their own draws on top of mt19937.
template <class Rng>
uint64_t draw_below(Rng& rng, uint64_t n) {
    // rejection sampling, unbiased
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = (static_cast<uint64_t>(rng()) << 32) | rng();
    } while (x >= limit);
    return x % n;
}

template <class Rng>
std::vector<size_t> sample_without_replacement(Rng& rng, size_t population, size_t k) {
    if (k > population) throw std::invalid_argument("sample larger than population");
    std::vector<size_t> idx(population);
    for (size_t i = 0; i < population; ++i) idx[i] = i;
    // partial Fisher-Yates
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(draw_below(rng, population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace sempca
