#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pvdiag/string_model.hpp"

namespace pvdiag {

enum class CurveSource { Measured, Synthetic };

/// One I-V sweep of a string at a single environmental condition.
struct IVCurve {
    Eigen::VectorXd voltage;  ///< V
    Eigen::VectorXd current;  ///< A
    double G = 1000.0;        ///< in-plane irradiance (W/m^2)
    double T = 298.15;        ///< cell temperature (K)
    std::optional<FaultVector> label;  ///< true faults, synthetic curves only
    CurveSource source = CurveSource::Measured;
    bool preprocessed = false;

    [[nodiscard]] Eigen::Index size() const noexcept { return voltage.size(); }
    bool operator==(const IVCurve& other) const;
};

/// Minimum number of points identification and preprocessing accept.
inline constexpr Eigen::Index kMinCurvePoints = 10;

/// Throws DomainError unless lengths match, N >= min_points, G > 0, T > 0 and currents >= 0.
void validate_curve(const IVCurve& curve, Eigen::Index min_points = kMinCurvePoints);

struct LoadDiagnostics {
    std::size_t dropped_rows = 0;          ///< rows with a non-finite value
    bool non_monotone_voltage = false;
    std::vector<std::string> warnings;
};

/// CSV layout:
///   # G=<W/m^2> T=<K> source=<measured|synthetic> preprocessed=<0|1>
///   voltage_V,current_A
///   <v>,<i>
/// Values are written in shortest round-trip form, so load(save(c)) == c.
/// A label, when present, goes to the sidecar `<path>.label.json`.
void save_curve(const IVCurve& curve, const std::filesystem::path& path);

/// Rows containing NaN or inf are dropped and counted. Throws ParseError with
/// the offending line, or ParseError("empty curve") when no data row survives.
[[nodiscard]] IVCurve load_curve(const std::filesystem::path& path,
                                 LoadDiagnostics* diagnostics = nullptr);

[[nodiscard]] std::filesystem::path label_path(const std::filesystem::path& curve_path);
void save_label(const FaultVector& x, const std::filesystem::path& path);
[[nodiscard]] FaultVector load_label(const std::filesystem::path& path);

struct PreprocessConfig {
    double outlier_mad_k = 5.0;           ///< robust deviations from the rolling median
    double flat_slope_threshold = 0.01;   ///< |dI/dV| below this is flat (A/V)
    double downsample_keep_ratio = 1.0;   ///< fraction of flat-region points kept
    std::optional<Eigen::Index> target_N; ///< uniform resample of the result

    void validate() const;
};

/// Sorts by voltage, removes current outliers against a 5-point rolling
/// median, and thins the flat stretch between short circuit and the maximum
/// power point. A curve already marked preprocessed is returned unchanged.
/// Throws PreprocessError when fewer than 10 points remain.
[[nodiscard]] IVCurve preprocess(const IVCurve& curve, const PreprocessConfig& config);

/// Indices (into a voltage-sorted curve) of the flat region that preprocess thins.
[[nodiscard]] std::vector<Eigen::Index> flat_region_indices(const IVCurve& sorted,
                                                            double slope_threshold);

/// Two-column (iteration, value) CSV used for loss and gradient-norm trajectories.
void save_trajectory(const std::vector<double>& values, const std::string& value_name,
                     const std::filesystem::path& path);
[[nodiscard]] std::vector<double> load_trajectory(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);
/// Strict parse of a whole token; throws DomainError on junk.
[[nodiscard]] double parse_double(std::string_view text);

}  // namespace pvdiag
