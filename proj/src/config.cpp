#include "pvdiag/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "pvdiag/errors.hpp"
#include "pvdiag/identify.hpp"

namespace pvdiag {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const DomainError&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

std::vector<OptimizerKind> to_kind_list(const std::string& v) {
    std::vector<OptimizerKind> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(parse_optimizer_kind(t));
    }
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define PVD_REAL(name, member)                                                      \
    Field {                                                                         \
        name, [](const RunConfig& c) { return format_double(c.member); },          \
            [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); } \
    }
#define PVD_INT(name, member)                                                              \
    Field {                                                                                \
        name, [](const RunConfig& c) { return std::to_string(c.member); },                \
            [](RunConfig& c, const std::string& v) { c.member = to_int<decltype(c.member)>(name, v); } \
    }
#define PVD_SCALE(name, offset)                                                            \
    Field {                                                                                \
        name, [](const RunConfig& c) { return format_double(lr_scale_of(c, offset)); },   \
            [](RunConfig& c, const std::string& v) { set_lr_scale(c, offset, to_double(name, v)); } \
    }

// lr_scale is stored per flat component; the config holds one value per block.
enum ScaleBlock { kScaleNs, kScaleNc, kScaleR, kScaleNsc, kScaleRc };

std::pair<int, int> block_range(const RunConfig& c, int block) {
    const int p = c.model.topology.N_ps;
    switch (block) {
        case kScaleNs: return {0, p};
        case kScaleNc: return {p, p};
        case kScaleR: return {2 * p, p};
        case kScaleNsc: return {3 * p, 1};
        default: return {3 * p + 1, 1};
    }
}

void ensure_scale(RunConfig& c) {
    const int dim = c.model.topology.fault_dim();
    if (c.optimizer.lr_scale.size() != dim) {
        Eigen::VectorXd old = c.optimizer.lr_scale;
        c.optimizer.lr_scale = Eigen::VectorXd::Ones(dim);
        // keep per-block values when N_ps changes
        if (old.size() >= 5 && (old.size() - 2) % 3 == 0) {
            const int op = static_cast<int>((old.size() - 2) / 3);
            const int p = c.model.topology.N_ps;
            c.optimizer.lr_scale.segment(0, p).setConstant(old(0));
            c.optimizer.lr_scale.segment(p, p).setConstant(old(op));
            c.optimizer.lr_scale.segment(2 * p, p).setConstant(old(2 * op));
            c.optimizer.lr_scale(3 * p) = old(3 * op);
            c.optimizer.lr_scale(3 * p + 1) = old(3 * op + 1);
        }
    }
}

double lr_scale_of(const RunConfig& c, int block) {
    if (c.optimizer.lr_scale.size() != c.model.topology.fault_dim()) return 1.0;
    return c.optimizer.lr_scale(block_range(c, block).first);
}

void set_lr_scale(RunConfig& c, int block, double value) {
    ensure_scale(c);
    const auto [start, len] = block_range(c, block);
    c.optimizer.lr_scale.segment(start, len).setConstant(value);
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        PVD_INT("modules_per_string", model.topology.modules_per_string),
        PVD_INT("diodes_per_module", model.topology.diodes_per_module),
        PVD_INT("cells_per_substring", model.topology.N_cs),
        Field{"max_shadows", [](const RunConfig& c) { return std::to_string(c.model.topology.N_ps); },
              [](RunConfig& c, const std::string& v) {
                  c.model.topology.N_ps = to_int<int>("max_shadows", v);
                  if (c.model.topology.N_ps >= 1) ensure_scale(c);
              }},
        PVD_REAL("I_ph_stc", model.stc.I_ph_stc),
        PVD_REAL("I_0_stc", model.stc.I_0_stc),
        PVD_REAL("n_stc", model.stc.n_stc),
        PVD_REAL("R_s_stc", model.stc.R_s_stc),
        PVD_REAL("R_sh_stc", model.stc.R_sh_stc),
        PVD_REAL("alpha_isc", model.stc.alpha),
        PVD_REAL("k_boltzmann", model.consts.k),
        PVD_REAL("q_electron", model.consts.q),
        PVD_REAL("breakdown_a", model.consts.a),
        PVD_REAL("breakdown_V_br", model.consts.V_br),
        PVD_REAL("breakdown_m", model.consts.m),
        PVD_REAL("G_stc", model.consts.G_stc),
        PVD_REAL("T_stc", model.consts.T_stc),
        PVD_REAL("G_min", model.consts.G_min),
        PVD_INT("newton_iterations", model.newton_iterations),
        PVD_REAL("G", G),
        PVD_REAL("T", T),
        PVD_INT("points", points),
        Field{"optimizer", [](const RunConfig& c) { return std::string(to_string(c.optimizer.kind)); },
              [](RunConfig& c, const std::string& v) { c.optimizer.kind = parse_optimizer_kind(v); }},
        PVD_REAL("eta", optimizer.lr.eta),
        PVD_REAL("lr_decay_factor", optimizer.lr.decay_factor),
        PVD_INT("lr_decay_every", optimizer.lr.decay_every),
        PVD_REAL("beta1", optimizer.beta1),
        PVD_REAL("beta2", optimizer.beta2),
        PVD_INT("iterations", optimizer.iterations),
        PVD_INT("hutchinson_samples", optimizer.hutchinson_samples),
        PVD_REAL("epsilon", optimizer.epsilon),
        PVD_INT("seed", optimizer.seed),
        PVD_REAL("hvp_step", optimizer.hvp_step),
        PVD_REAL("weight_decay", optimizer.weight_decay),
        PVD_REAL("rmsprop_alpha", optimizer.rmsprop_alpha),
        PVD_SCALE("lr_scale_n_s", kScaleNs),
        PVD_SCALE("lr_scale_n_c", kScaleNc),
        PVD_SCALE("lr_scale_r", kScaleR),
        PVD_SCALE("lr_scale_N_sc", kScaleNsc),
        PVD_SCALE("lr_scale_R_c", kScaleRc),
        PVD_REAL("r_max", region.r_max),
        PVD_REAL("R_c_max", region.R_c_max),
        PVD_REAL("lambda", region.lambda),
        PVD_REAL("n_s_min", region.n_s_min),
        PVD_REAL("n_c_min", region.n_c_min),
        PVD_REAL("r_negligible", thresholds.r_negligible),
        PVD_REAL("outlier_mad_k", preprocess.outlier_mad_k),
        PVD_REAL("flat_slope_threshold", preprocess.flat_slope_threshold),
        PVD_REAL("downsample_keep_ratio", preprocess.downsample_keep_ratio),
        Field{"target_points",
              [](const RunConfig& c) { return std::to_string(c.preprocess.target_N.value_or(0)); },
              [](RunConfig& c, const std::string& v) {
                  const auto n = to_int<Eigen::Index>("target_points", v);
                  c.preprocess.target_N = n > 0 ? std::optional<Eigen::Index>(n) : std::nullopt;
              }},
        PVD_REAL("noise_sigma", noise_sigma),
        PVD_INT("suite_seed", suite_seed),
        PVD_INT("threads", threads),
        Field{"benchmark_optimizers",
              [](const RunConfig& c) {
                  std::string out;
                  for (OptimizerKind k : c.benchmark_optimizers) {
                      if (!out.empty()) out += ',';
                      out += to_string(k);
                  }
                  return out;
              },
              [](RunConfig& c, const std::string& v) { c.benchmark_optimizers = to_kind_list(v); }},
    };
    return table;
}

#undef PVD_REAL
#undef PVD_INT
#undef PVD_SCALE

const Field& find_field(const std::string& key) {
    for (const Field& f : fields()) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    optimizer.validate();
    preprocess.validate();
    if (optimizer.lr_scale.size() != 0 && optimizer.lr_scale.size() != model.topology.fault_dim()) {
        throw ConfigError("lr_scale length does not match the topology");
    }
    if (optimizer.lr_scale.size() != 0 && !(optimizer.lr_scale.array() > 0.0).all()) {
        throw ConfigError("lr_scale values must be positive");
    }
    if (!(G > 0.0) || !(T > 0.0)) throw ConfigError("G and T must be positive");
    if (points < 10) throw ConfigError("points must be >= 10");
    if (!(region.r_max > 0.0 && region.r_max <= 1.0)) throw ConfigError("r_max must lie in (0, 1]");
    if (!(region.R_c_max > 0.0)) throw ConfigError("R_c_max must be positive");
    if (!(region.n_s_min >= 0.0) || !(region.n_c_min >= 0.0)) throw ConfigError("n_s_min and n_c_min must be >= 0");
    if (!(thresholds.r_negligible >= 0.0 && thresholds.r_negligible < 1.0)) {
        throw ConfigError("r_negligible must lie in [0, 1)");
    }
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (benchmark_optimizers.empty()) throw ConfigError("benchmark_optimizers is empty");
    (void)make_region();
}

FeasibleRegion RunConfig::make_region() const {
    try {
        return make_default_region(model.topology, region.r_max, region.R_c_max, region.lambda, region.n_s_min,
                                   region.n_c_min);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.model.stc.I_ph_stc = 8.629082005348174;
    cfg.model.stc.I_0_stc = 6.658729054456166e-11;
    cfg.model.stc.n_stc = 0.946384040848259;
    cfg.model.stc.R_s_stc = 0.0067645629056437675;
    cfg.model.stc.R_sh_stc = 6.433183240832354;
    cfg.model.stc.alpha = 0.0040514;
    cfg.optimizer.lr_scale = default_lr_scale(cfg.model.topology);
    cfg.benchmark_optimizers.assign(all_optimizer_kinds().begin(), all_optimizer_kinds().end());
    return cfg;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const Field& f : fields()) out.push_back(f.key);
        return out;
    }();
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    find_field(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

void apply_config_text(RunConfig& base, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool reading = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (const auto hash = t.find('#'); hash != std::string::npos) t = trim(t.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
            reading = trim(t.substr(1, t.size() - 2)) == "config";
            continue;
        }
        if (!reading) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            set_config_value(base, trim(t.substr(0, eq)), t.substr(eq + 1));
        } catch (const Error& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& base, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(base, buf.str(), path.string());
}

std::vector<std::string> apply_env_overrides(RunConfig& base, const std::string& prefix) {
    std::vector<std::string> applied;
    for (const Field& f : fields()) {
        const std::string name = prefix + upper(f.key);
        if (const char* value = std::getenv(name.c_str())) {
            try {
                f.set(base, trim(value));
            } catch (const Error& e) {
                throw ConfigError(name + ": " + e.what());
            }
            applied.push_back(f.key);
        }
    }
    return applied;
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
    return out;
}

std::string format_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : config_echo(cfg)) out += k + " = " + v + "\n";
    return out;
}

}  // namespace pvdiag
