#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pvdiag/curve_io.hpp"
#include "pvdiag/optimizer.hpp"
#include "pvdiag/projection.hpp"
#include "pvdiag/string_model.hpp"

namespace pvdiag {

/// Bounds and correction settings from which a FeasibleRegion is built.
struct RegionSettings {
    double r_max = 0.999;
    double R_c_max = 50.0;
    double lambda = 0.9;
    double n_s_min = 0.1;
    double n_c_min = 0.1;
};

/// Every tunable of a run. Text form is flat `key = value` lines; see
/// config_keys() for the names.
struct RunConfig {
    ModelContext model;
    double G = 1000.0;         ///< operating irradiance for simulate (W/m^2)
    double T = 298.15;         ///< operating cell temperature for simulate (K)
    int points = 200;          ///< current-grid size for simulate
    OptimizerConfig optimizer;
    RegionSettings region;
    CorrectionThresholds thresholds;
    PreprocessConfig preprocess;
    double noise_sigma = 0.0;  ///< benchmark suite voltage noise (V)
    std::uint64_t suite_seed = 7;
    int threads = 0;           ///< benchmark workers, 0 = hardware concurrency
    std::vector<OptimizerKind> benchmark_optimizers;

    /// Throws ConfigError on the first violated invariant.
    void validate() const;
    [[nodiscard]] FeasibleRegion make_region() const;
};

/// Defaults: Table-II-style string (13 modules x 3 substrings x 20 cells, two
/// shadows) with single-diode parameters fitted to a 240 W, 60-cell module.
[[nodiscard]] RunConfig default_run_config();

/// Known keys in echo order.
[[nodiscard]] const std::vector<std::string>& config_keys();

/// Applies `key = value` lines onto `base`. Lines outside any section and
/// inside `[config]` are read; other sections are skipped, so a run report
/// can be fed back in. Unknown keys raise ConfigError with the line number.
void apply_config_text(RunConfig& base, const std::string& text, const std::string& origin = "<text>");
void apply_config_file(RunConfig& base, const std::filesystem::path& path);

/// Overrides from PVDIAG_<KEY> environment variables (key upper-cased).
/// Returns the keys that were overridden.
std::vector<std::string> apply_env_overrides(RunConfig& base, const std::string& prefix = "PVDIAG_");

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
[[nodiscard]] std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Fully resolved config as ordered (key, value) pairs; doubles use shortest
/// round-trip text so replaying the echo reproduces the run bit for bit.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);
[[nodiscard]] std::string format_config(const RunConfig& cfg);

}  // namespace pvdiag
