#include "pvdiag/curve_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr const char* kHeader = "voltage_V,current_A";
constexpr int kMedianWindow = 5;
constexpr double kMadToSigma = 1.4826;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double median(std::vector<double> values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

IVCurve select_points(const IVCurve& curve, const std::vector<Eigen::Index>& keep) {
    IVCurve out = curve;
    out.voltage.resize(static_cast<Eigen::Index>(keep.size()));
    out.current.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.voltage(static_cast<Eigen::Index>(k)) = curve.voltage(keep[k]);
        out.current(static_cast<Eigen::Index>(k)) = curve.current(keep[k]);
    }
    return out;
}

/// Keeps round(count * ratio) of `count` items, evenly spread.
std::vector<bool> uniform_keep_mask(std::size_t count, double ratio) {
    std::vector<bool> keep(count, false);
    for (std::size_t k = 0; k < count; ++k) {
        keep[k] = std::floor((static_cast<double>(k) + 1.0) * ratio) > std::floor(static_cast<double>(k) * ratio);
    }
    return keep;
}
}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    const std::string t = trim(text);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (!t.empty() && *begin == '+') ++begin;
    const auto res = std::from_chars(begin, end, value);
    if (t.empty() || res.ec != std::errc() || res.ptr != end) {
        throw DomainError("not a number: '" + t + "'");
    }
    return value;
}

bool IVCurve::operator==(const IVCurve& other) const {
    return voltage.size() == other.voltage.size() && current.size() == other.current.size() &&
           voltage == other.voltage && current == other.current && G == other.G && T == other.T &&
           label == other.label && source == other.source && preprocessed == other.preprocessed;
}

void validate_curve(const IVCurve& curve, Eigen::Index min_points) {
    if (curve.voltage.size() != curve.current.size()) throw DomainError("curve: voltage and current lengths differ");
    if (curve.size() < min_points) {
        throw DomainError("curve: " + std::to_string(curve.size()) + " points, at least " +
                          std::to_string(min_points) + " required");
    }
    if (!(curve.G > 0.0) || !(curve.T > 0.0)) throw DomainError("curve: G and T must be positive");
    if (!curve.voltage.allFinite() || !curve.current.allFinite()) throw DomainError("curve: non-finite value");
    if ((curve.current.array() < 0.0).any()) throw DomainError("curve: negative current");
}

void save_curve(const IVCurve& curve, const std::filesystem::path& path) {
    if (curve.voltage.size() != curve.current.size()) throw DomainError("save_curve: length mismatch");
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "# G=" << format_double(curve.G) << " T=" << format_double(curve.T)
        << " source=" << (curve.source == CurveSource::Synthetic ? "synthetic" : "measured")
        << " preprocessed=" << (curve.preprocessed ? 1 : 0) << '\n';
    out << kHeader << '\n';
    for (Eigen::Index i = 0; i < curve.size(); ++i) {
        out << format_double(curve.voltage(i)) << ',' << format_double(curve.current(i)) << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
    const auto sidecar = label_path(path);
    if (curve.label) {
        save_label(*curve.label, sidecar);
    } else if (std::filesystem::exists(sidecar)) {
        std::filesystem::remove(sidecar);
    }
}

IVCurve load_curve(const std::filesystem::path& path, LoadDiagnostics* diagnostics) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);

    IVCurve curve;
    LoadDiagnostics diag;
    bool have_g = false, have_t = false, have_header = false;
    std::vector<double> v, c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            std::istringstream tokens(t.substr(1));
            std::string tok;
            while (tokens >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                try {
                    if (key == "G") { curve.G = parse_double(val); have_g = true; }
                    else if (key == "T") { curve.T = parse_double(val); have_t = true; }
                    else if (key == "source") {
                        if (val == "synthetic") curve.source = CurveSource::Synthetic;
                        else if (val == "measured") curve.source = CurveSource::Measured;
                        else throw DomainError("unknown source '" + val + "'");
                    } else if (key == "preprocessed") {
                        curve.preprocessed = val == "1" || val == "true";
                    }
                } catch (const DomainError& e) {
                    throw ParseError(std::string("bad metadata: ") + e.what(), lineno);
                }
            }
            continue;
        }
        if (!have_header) {
            if (t != kHeader) throw ParseError("expected header '" + std::string(kHeader) + "'", lineno);
            have_header = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw ParseError("expected two comma-separated values", lineno);
        }
        double vi = 0.0, ci = 0.0;
        try {
            vi = parse_double(std::string_view(t).substr(0, comma));
            ci = parse_double(std::string_view(t).substr(comma + 1));
        } catch (const DomainError& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!std::isfinite(vi) || !std::isfinite(ci)) {
            ++diag.dropped_rows;
            continue;
        }
        if (ci < 0.0) throw ParseError("negative current", lineno);
        v.push_back(vi);
        c.push_back(ci);
    }
    if (!have_header) throw ParseError("missing header '" + std::string(kHeader) + "'", lineno);
    if (!have_g || !have_t) throw ParseError("missing '# G=... T=...' metadata line", 1);
    if (v.empty()) throw ParseError("empty curve", lineno);
    if (!(curve.G > 0.0) || !(curve.T > 0.0)) throw ParseError("G and T must be positive", 1);

    curve.voltage = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    curve.current = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));

    const bool rising = std::is_sorted(v.begin(), v.end());
    const bool falling = std::is_sorted(v.rbegin(), v.rend());
    if (!rising && !falling) {
        diag.non_monotone_voltage = true;
        diag.warnings.push_back(path.string() + ": voltage is not monotone");
    }
    if (diag.dropped_rows > 0) {
        diag.warnings.push_back(path.string() + ": dropped " + std::to_string(diag.dropped_rows) +
                                " row(s) with non-finite values");
    }

    const auto sidecar = label_path(path);
    if (std::filesystem::exists(sidecar)) curve.label = load_label(sidecar);
    if (diagnostics) *diagnostics = std::move(diag);
    return curve;
}

std::filesystem::path label_path(const std::filesystem::path& curve_path) {
    return std::filesystem::path(curve_path.string() + ".label.json");
}

void save_label(const FaultVector& x, const std::filesystem::path& path) {
    const nlohmann::json j = {{"n_s", x.n_s}, {"n_c", x.n_c}, {"r", x.r}, {"N_sc", x.N_sc}, {"R_c", x.R_c}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

FaultVector load_label(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        FaultVector x;
        x.n_s = j.at("n_s").get<std::vector<double>>();
        x.n_c = j.at("n_c").get<std::vector<double>>();
        x.r = j.at("r").get<std::vector<double>>();
        x.N_sc = j.at("N_sc").get<double>();
        x.R_c = j.at("R_c").get<double>();
        if (x.n_c.size() != x.n_s.size() || x.r.size() != x.n_s.size()) {
            throw ParseError("label vectors differ in length: " + path.string(), 0);
        }
        return x;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad label file " + path.string() + ": " + e.what(), 0);
    }
}

void PreprocessConfig::validate() const {
    if (!(outlier_mad_k > 0.0)) throw ConfigError("preprocess: outlier_mad_k must be positive");
    if (!(flat_slope_threshold >= 0.0)) throw ConfigError("preprocess: flat_slope_threshold must be >= 0");
    if (!(downsample_keep_ratio > 0.0 && downsample_keep_ratio <= 1.0)) {
        throw ConfigError("preprocess: downsample_keep_ratio must lie in (0, 1]");
    }
    if (target_N && *target_N < kMinCurvePoints) throw ConfigError("preprocess: target_N must be >= 10");
}

std::vector<Eigen::Index> flat_region_indices(const IVCurve& sorted, double slope_threshold) {
    const Eigen::Index n = sorted.size();
    std::vector<Eigen::Index> flat;
    if (n < 3) return flat;
    Eigen::Index mpp = 0;
    double p_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = sorted.voltage(i) * sorted.current(i);
        if (p > p_max) { p_max = p; mpp = i; }
    }
    for (Eigen::Index i = 0; i < mpp; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0);
        const Eigen::Index hi = std::min(i + 1, n - 1);
        const double dv = sorted.voltage(hi) - sorted.voltage(lo);
        if (dv <= 0.0) continue;
        const double slope = std::abs(sorted.current(hi) - sorted.current(lo)) / dv;
        if (slope < slope_threshold) flat.push_back(i);
    }
    return flat;
}

IVCurve preprocess(const IVCurve& curve, const PreprocessConfig& config) {
    config.validate();
    if (curve.preprocessed) return curve;
    if (curve.voltage.size() != curve.current.size()) throw DomainError("preprocess: length mismatch");

    // sort by voltage, ties by descending current
    std::vector<Eigen::Index> order(static_cast<std::size_t>(curve.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (curve.voltage(a) != curve.voltage(b)) return curve.voltage(a) < curve.voltage(b);
        return curve.current(a) > curve.current(b);
    });
    IVCurve sorted = select_points(curve, order);
    const Eigen::Index n = sorted.size();

    // outliers against a rolling median; windows at the ends stay 5 wide
    std::vector<Eigen::Index> keep;
    if (n >= kMedianWindow) {
        std::vector<double> residual(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index start = std::clamp<Eigen::Index>(i - kMedianWindow / 2, 0, n - kMedianWindow);
            std::vector<double> window(sorted.current.data() + start, sorted.current.data() + start + kMedianWindow);
            residual[static_cast<std::size_t>(i)] = sorted.current(i) - median(window);
        }
        const double center = median(residual);
        std::vector<double> dev(residual.size());
        for (std::size_t i = 0; i < residual.size(); ++i) dev[i] = std::abs(residual[i] - center);
        std::vector<double> steps(static_cast<std::size_t>(n - 1));
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            steps[static_cast<std::size_t>(i)] = std::abs(sorted.current(i + 1) - sorted.current(i));
        }
        // A clean monotone sweep has zero residuals, so the typical step sets the floor.
        const double scale = std::max({kMadToSigma * median(dev), median(steps), 1e-12});
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(residual[static_cast<std::size_t>(i)] - center) <= config.outlier_mad_k * scale) {
                keep.push_back(i);
            }
        }
    } else {
        keep.resize(static_cast<std::size_t>(n));
        std::iota(keep.begin(), keep.end(), Eigen::Index{0});
    }
    IVCurve cleaned = select_points(sorted, keep);

    // thin the flat region
    if (config.downsample_keep_ratio < 1.0) {
        const auto flat = flat_region_indices(cleaned, config.flat_slope_threshold);
        const auto mask = uniform_keep_mask(flat.size(), config.downsample_keep_ratio);
        std::vector<bool> drop(static_cast<std::size_t>(cleaned.size()), false);
        for (std::size_t k = 0; k < flat.size(); ++k) drop[static_cast<std::size_t>(flat[k])] = !mask[k];
        std::vector<Eigen::Index> kept;
        for (Eigen::Index i = 0; i < cleaned.size(); ++i) {
            if (!drop[static_cast<std::size_t>(i)]) kept.push_back(i);
        }
        cleaned = select_points(cleaned, kept);
    }

    if (config.target_N && cleaned.size() > *config.target_N) {
        const Eigen::Index m = *config.target_N;
        std::vector<Eigen::Index> picks;
        for (Eigen::Index k = 0; k < m; ++k) {
            picks.push_back(static_cast<Eigen::Index>(
                std::llround(static_cast<double>(k) * static_cast<double>(cleaned.size() - 1) / static_cast<double>(m - 1))));
        }
        cleaned = select_points(cleaned, picks);
    }

    if (cleaned.size() < kMinCurvePoints) {
        throw PreprocessError("preprocess: only " + std::to_string(cleaned.size()) +
                              " points remain, at least 10 required");
    }
    cleaned.preprocessed = true;
    return cleaned;
}

void save_trajectory(const std::vector<double>& values, const std::string& value_name,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "iteration," << value_name << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << format_double(values[i]) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<double> load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || lineno == 1) continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos) throw ParseError("expected 'iteration,value'", lineno);
        try {
            values.push_back(parse_double(std::string_view(t).substr(comma + 1)));
        } catch (const DomainError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return values;
}

}  // namespace pvdiag
