#pragma once

#include "raln/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace raln {

struct ImageGeometry {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;

    std::uint64_t size() const noexcept { return std::uint64_t{height} * width * channels; }
    bool operator==(const ImageGeometry&) const = default;
};

struct DatasetMeta {
    std::string name;
    std::optional<ImageGeometry> geometry;  // samples flattened as (row · width + col) · channels + channel
    bool centered = false;
};

struct Dataset {
    DataMatrix x;                       // D×N
    std::vector<std::uint32_t> labels;  // length N, each < num_classes
    std::uint32_t num_classes = 1;
    DatasetMeta meta;

    /// Throws GeometryMismatch, ShapeMismatch or IndexOutOfRange.
    void validate() const;
};

// Eigenvalue profiles, indexed i = 0..D-1.
struct ExponentialSpectrum {
    double decay_rate = 0.1;  // λ_i = exp(−decay_rate · i)
};
struct PowerLawSpectrum {
    double exponent = 1.0;  // λ_i = (i + 1)^(−exponent)
};
struct ExplicitSpectrum {
    std::vector<double> values;  // length D, positive, descending
};
using Spectrum = std::variant<ExponentialSpectrum, PowerLawSpectrum, ExplicitSpectrum>;

struct NoSignal {};
/// Class means along the k lowest-variance (bottom) or highest-variance (top)
/// directions; along direction j the offsets have scale snr · √λ_j.
struct BottomSignal {
    Index k = 1;
    double snr = 1.0;
};
struct TopSignal {
    Index k = 1;
    double snr = 1.0;
};
using SignalPlacement = std::variant<NoSignal, BottomSignal, TopSignal>;

/// Dense Haar-random orthonormal basis.
struct RandomBasis {};
/// The m highest-variance directions are the first m coordinate axes; the
/// remaining directions form a random orthonormal basis of the other
/// coordinates. Pixel-local structure like this is what masking noise reacts to.
struct AxisTopBasis {
    Index m = 1;
};
using SyntheticBasis = std::variant<RandomBasis, AxisTopBasis>;

struct SyntheticSpec {
    Index d = 0;
    Index n = 0;
    Index c = 2;
    Spectrum spectrum = ExponentialSpectrum{};
    SignalPlacement signal = NoSignal{};
    SyntheticBasis basis = RandomBasis{};
    std::uint64_t seed = 0;
    std::optional<ImageGeometry> geometry;
    std::string name = "synthetic";
};

/// Throws InvalidSpec describing the first violated constraint.
void validate_spec(const SyntheticSpec& spec);

/// The spectrum as a length-D vector.
Vector spectrum_values(const SyntheticSpec& spec);

/// The D×D orthonormal basis P used by generate_synthetic for this spec.
Matrix synthetic_basis(const SyntheticSpec& spec);

/// X = P · (diag(√λ) · W + class offsets) with W standard normal. Labels are
/// balanced and shuffled. Values are rounded to float32 so the container round
/// trip is exact.
Dataset generate_synthetic(const SyntheticSpec& spec);

void save_container(const Dataset& ds, const std::filesystem::path& path);
Dataset load_container(const std::filesystem::path& path);

/// Container bytes, as written by save_container.
std::string encode_container(const Dataset& ds);
Dataset decode_container(const std::string& bytes, std::string name = {});

/// One sample per CSV row. `label_column` (negative counts from the end) holds
/// labels, factorized in first-appearance order; without it all labels are 0.
Dataset load_csv(const std::filesystem::path& path, std::optional<int> label_column, bool has_header);

Matrix one_hot(const std::vector<std::uint32_t>& labels, std::uint32_t num_classes);

/// Rounds every entry to the nearest float32.
Matrix round_to_float(const Matrix& m);

}  // namespace raln
