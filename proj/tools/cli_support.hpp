#pragma once

#include "raln/data.hpp"
#include "raln/noise.hpp"
#include "raln/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace raln::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Writes through a sibling temporary file and renames it into place, so
/// readers never observe a partial file. Throws Io.
void atomic_write(const fs::path& path, const std::string& bytes);

std::string read_file(const fs::path& path);
std::string sha256_hex(const std::string& bytes);

/// "<path minus extension><ext>", e.g. sweep.csv -> sweep.svg.
fs::path sibling(const fs::path& path, const std::string& ext);

/// Text table with the versioned schema comment as its first line.
class CsvTable {
public:
    CsvTable(std::string subcommand, std::vector<std::string> columns);

    void add_row(std::vector<std::string> cells);
    std::string str() const;

private:
    std::string subcommand_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Shortest text that reads back to the same double; "inf", "-inf", "nan".
std::string fmt(double value);
std::string fmt(long long value);

/// Records what a run consumed and produced; written to <out>.manifest.json.
class Manifest {
public:
    explicit Manifest(std::string subcommand);

    Json& config() { return config_; }
    void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
    void add_input(const fs::path& path);
    /// Writes `bytes` atomically and records its digest.
    void write_output(const fs::path& path, const std::string& bytes);
    /// Writes the manifest next to `primary`.
    void finish(const fs::path& primary);

private:
    std::string subcommand_;
    std::string started_;
    Json config_ = Json::object();
    std::vector<std::uint64_t> seeds_;
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
};

/// Containers by default; files ending in .csv go through load_csv.
struct DataSource {
    fs::path path;
    std::optional<int> label_column;
    bool has_header = false;
};
Dataset load_dataset(const DataSource& source);

std::vector<double> parse_doubles(const std::string& list);
std::vector<Index> parse_indices(const std::string& list);

/// gaussian:σ | dropout:p | mask:p:ph:pw (mask takes its geometry from the data).
NoiseModel parse_noise(const std::string& text, const std::optional<ImageGeometry>& geometry);

/// linear:K | mlp:W1,W2,...[:tanh|relu]
Architecture parse_architecture(const std::string& text);
std::string describe(const Architecture& arch);

OptimizerKind parse_optimizer(const std::string& name);
std::string describe(OptimizerKind kind);

/// JSON description of a synthetic dataset, see the README for the schema.
SyntheticSpec parse_synthetic_spec(const Json& spec);
Json synthetic_spec_json(const SyntheticSpec& spec);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    bool bars = false;  // one bar per series, height y.front()
};

/// Static SVG line chart (or bar chart) of the series.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace raln::cli
