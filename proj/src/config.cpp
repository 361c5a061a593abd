#include "hydroldp/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "hydroldp/errors.hpp"
#include "hydroldp/io.hpp"

namespace hydroldp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_double(const std::string& key, const std::string& v, bool allow_inf = false) {
    const std::string l = lower(v);
    if (allow_inf && (l == "inf" || l == "infinity")) return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError(key, fmt::format("expected a finite number, got '{}'", v));
    return x;
}

long long parse_integer(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError(key, fmt::format("expected an integer, got '{}'", v));
    return x;
}

int parse_int(const std::string& key, const std::string& v) {
    const long long x = parse_integer(key, v);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(key, "integer out of range");
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError(key, fmt::format("expected an unsigned 64-bit integer, got '{}'", v));
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    const std::string l = lower(v);
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw ConfigError(key, fmt::format("expected true or false, got '{}'", v));
}

std::string parse_choice(const std::string& key, const std::string& v, std::initializer_list<const char*> options) {
    const std::string l = lower(v);
    for (const char* o : options)
        if (l == o) return l;
    std::string list;
    for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
    throw ConfigError(key, fmt::format("expected one of {}, got '{}'", list, v));
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
    return out;
}

std::string num(double v) { return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : fmt_double(v); }

struct KeySpec {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define HL_NUM(field) \
    KeySpec { [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_double(k, v); }, \
              [](const RunConfig& c) { return num(c.field); } }
#define HL_INT(field) \
    KeySpec { [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_int(k, v); }, \
              [](const RunConfig& c) { return std::to_string(c.field); } }
#define HL_STR(field) \
    KeySpec { [](RunConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
              [](const RunConfig& c) { return c.field; } }
#define HL_CHOICE(field, ...) \
    KeySpec { [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_choice(k, v, {__VA_ARGS__}); }, \
              [](const RunConfig& c) { return c.field; } }
#define HL_BOOL(field) \
    KeySpec { [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); }, \
              [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } }

const std::map<std::string, KeySpec>& schema() {
    static const std::map<std::string, KeySpec> s = {
        {"grid.nx", HL_INT(grid.nx)},
        {"grid.ny", HL_INT(grid.ny)},
        {"grid.nz", HL_INT(grid.nz)},
        {"grid.h", HL_NUM(grid.h)},
        {"grid.lx", HL_NUM(grid.lx)},
        {"grid.ly", HL_NUM(grid.ly)},
        {"time.T", HL_NUM(T)},
        {"time.dt", HL_NUM(dt)},
        {"time.save_every", HL_INT(save_every)},
        {"noise.eps", HL_NUM(eps)},
        {"noise.mode",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.mode = parse_choice(k, v, {"ito", "stratonovich"}) == "ito" ? NoiseMode::Ito : NoiseMode::Stratonovich;
          },
          [](const RunConfig& c) { return std::string(c.mode == NoiseMode::Ito ? "ito" : "stratonovich"); }}},
        {"noise.family", HL_CHOICE(noise_family, "kraichnan", "zero", "file")},
        {"noise.file", HL_STR(noise_file)},
        {"noise.modes", HL_INT(kraichnan.modes)},
        {"noise.s", HL_NUM(kraichnan.s)},
        {"noise.nu", HL_NUM(nu)},
        {"noise.sigma",
         {[](RunConfig& c, const std::string& k, const std::string& v) { c.sigma = parse_double(k, v); },
          [](const RunConfig& c) { return c.sigma ? num(*c.sigma) : std::string("auto"); }}},
        {"noise.vertical_ratio", HL_NUM(kraichnan.vertical_ratio)},
        {"noise.psi_vertical_ratio", HL_NUM(kraichnan.psi_vertical_ratio)},
        {"noise.gamma", HL_NUM(kraichnan.gamma_amplitude)},
        {"noise.delta", HL_NUM(kraichnan.delta)},
        {"physics.alpha", HL_NUM(alpha)},
        {"physics.kappa", HL_NUM(kappa)},
        {"physics.dealias", HL_BOOL(dealias)},
        {"forcing.v.amplitude", HL_NUM(fv_amplitude)},
        {"forcing.v.kx", HL_INT(fv_kx)},
        {"forcing.v.ky", HL_INT(fv_ky)},
        {"forcing.v.damping", HL_NUM(fv_damping)},
        {"forcing.theta.amplitude", HL_NUM(ft_amplitude)},
        {"forcing.theta.kx", HL_INT(ft_kx)},
        {"forcing.theta.ky", HL_INT(ft_ky)},
        {"forcing.theta.damping", HL_NUM(ft_damping)},
        {"forcing.noise.amplitude", HL_NUM(noise_offset)},
        {"forcing.noise.kx", HL_INT(noise_offset_kx)},
        {"forcing.noise.ky", HL_INT(noise_offset_ky)},
        {"forcing.bound", HL_NUM(forcing_bound)},
        {"initial.kind", HL_CHOICE(initial, "rest", "harmonic", "file")},
        {"initial.kx", HL_INT(initial_kx)},
        {"initial.ky", HL_INT(initial_ky)},
        {"initial.v_amplitude", HL_NUM(initial_v)},
        {"initial.theta_amplitude", HL_NUM(initial_theta)},
        {"initial.v_file", HL_STR(initial_v_file)},
        {"initial.theta_file", HL_STR(initial_theta_file)},
        {"event.kind",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.event_kind = parse_choice(k, v, {"exceed", "terminal"}) == "exceed" ? EventKind::ExceedDistance
                                                                                  : EventKind::TerminalSetDistance;
          },
          [](const RunConfig& c) {
              return std::string(c.event_kind == EventKind::ExceedDistance ? "exceed" : "terminal");
          }}},
        {"event.norm",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.event_norm = parse_choice(k, v, {"h", "mr"}) == "h" ? EventNorm::H : EventNorm::MR;
          },
          [](const RunConfig& c) { return std::string(c.event_norm == EventNorm::H ? "h" : "mr"); }}},
        {"event.delta", HL_NUM(event_delta)},
        {"event.target", HL_CHOICE(event_target, "deterministic", "harmonic", "cosine")},
        {"event.target_kx", HL_INT(target_kx)},
        {"event.target_ky", HL_INT(target_ky)},
        {"event.target_v_amplitude", HL_NUM(target_v)},
        {"event.target_theta_amplitude", HL_NUM(target_theta)},
        {"optimizer.mu0", HL_NUM(rate.mu0)},
        {"optimizer.mu_factor", HL_NUM(rate.mu_factor)},
        {"optimizer.max_outer", HL_INT(rate.max_outer)},
        {"optimizer.residual_tol", HL_NUM(rate.residual_tol)},
        {"optimizer.max_iterations", HL_INT(rate.inner.max_iterations)},
        {"optimizer.gtol", HL_NUM(rate.inner.gtol)},
        {"optimizer.budget",
         {[](RunConfig& c, const std::string& k, const std::string& v) { c.control_budget = parse_double(k, v, true); },
          [](const RunConfig& c) { return num(c.control_budget); }}},
        {"mc.eps",
         {[](RunConfig& c, const std::string& k, const std::string& v) { c.mc_eps = parse_list(k, v); },
          [](const RunConfig& c) {
              std::string s;
              for (double e : c.mc_eps) s += (s.empty() ? "" : ",") + num(e);
              return s;
          }}},
        {"mc.samples", HL_INT(mc_samples)},
        {"mc.tilt", HL_CHOICE(mc_tilt, "none", "optimize", "file")},
        {"mc.tilt_file", HL_STR(mc_tilt_file)},
        {"skeleton.control", HL_STR(skeleton_control)},
        {"verify.coercivity_samples", HL_INT(verify_coercivity_samples)},
        {"verify.projection_samples", HL_INT(verify_projection_samples)},
        {"verify.strong_paths", HL_INT(verify_strong_paths)},
        {"verify.strong_T", HL_NUM(verify_strong_T)},
        {"output.snapshots", HL_BOOL(snapshots)},
        {"output.dir", HL_STR(out_dir)},
        {"run.seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }}},
    };
    return s;
}

#undef HL_NUM
#undef HL_INT
#undef HL_STR
#undef HL_CHOICE
#undef HL_BOOL

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

void validate(const RunConfig& c) {
    try {
        c.grid.validate();
    } catch (const Error& e) {
        throw ConfigError("grid", e.what());
    }
    require(c.T >= 0.0, "time.T", "must be >= 0");
    require(c.dt > 0.0, "time.dt", "must be > 0");
    require(std::abs(c.T / c.dt - std::round(c.T / c.dt)) <= 1e-9 * std::max(1.0, c.T / c.dt), "time.T",
            "must be a multiple of time.dt");
    require(c.save_every >= 1, "time.save_every", "must be >= 1");
    require(c.eps >= 0.0, "noise.eps", "must be >= 0");
    require(c.kraichnan.modes >= 1, "noise.modes", "must be >= 1");
    require(c.kraichnan.s > 0.0, "noise.s", "must be > 0");
    require(c.nu > 0.0, "noise.nu", "must be > 0");
    require(!c.sigma || *c.sigma >= 0.0, "noise.sigma", "must be >= 0");
    require(c.kraichnan.vertical_ratio >= 0.0, "noise.vertical_ratio", "must be >= 0");
    require(c.kraichnan.psi_vertical_ratio >= 0.0, "noise.psi_vertical_ratio", "must be >= 0");
    require(c.kraichnan.gamma_amplitude >= 0.0, "noise.gamma", "must be >= 0");
    require(c.kraichnan.delta > 0.0 && c.kraichnan.delta <= 1.0, "noise.delta", "must lie in (0, 1]");
    require(c.noise_family != "file" || !c.noise_file.empty(), "noise.file", "required when noise.family = file");
    require(1.0 + 0.5 * c.alpha * c.grid.dz() > 0.0, "physics.alpha", "Robin coefficient too negative for this dz");
    require(c.kappa >= 0.0, "physics.kappa", "must be >= 0");
    require(c.forcing_bound > 0.0, "forcing.bound", "must be > 0");
    require(c.initial != "file" || !c.initial_v_file.empty(), "initial.v_file", "required when initial.kind = file");
    require(c.initial != "file" || !c.initial_theta_file.empty(), "initial.theta_file",
            "required when initial.kind = file");
    require(c.event_delta > 0.0, "event.delta", "must be > 0");
    require(c.rate.mu0 > 0.0, "optimizer.mu0", "must be > 0");
    require(c.rate.mu_factor > 1.0, "optimizer.mu_factor", "must be > 1");
    require(c.rate.max_outer >= 1, "optimizer.max_outer", "must be >= 1");
    require(c.rate.residual_tol > 0.0, "optimizer.residual_tol", "must be > 0");
    require(c.rate.inner.max_iterations >= 1, "optimizer.max_iterations", "must be >= 1");
    require(c.rate.inner.gtol > 0.0, "optimizer.gtol", "must be > 0");
    require(c.control_budget > 0.0, "optimizer.budget", "must be > 0");
    for (double e : c.mc_eps) require(e > 0.0, "mc.eps", "every entry must be > 0");
    require(c.mc_samples >= 1, "mc.samples", "must be >= 1");
    require(c.mc_tilt != "file" || !c.mc_tilt_file.empty(), "mc.tilt_file", "required when mc.tilt = file");
    require(c.verify_coercivity_samples >= 2, "verify.coercivity_samples", "must be >= 2");
    require(c.verify_projection_samples >= 1, "verify.projection_samples", "must be >= 1");
    require(c.verify_strong_paths >= 1, "verify.strong_paths", "must be >= 1");
    require(c.verify_strong_T > 0.0, "verify.strong_T", "must be > 0");
}

Field cosine_field(const GridSpec& g, int comps, int comp, BoundaryCondition bc, double a, int kx, int ky) {
    const double ax = 2.0 * std::numbers::pi * kx / g.lx, ay = 2.0 * std::numbers::pi * ky / g.ly;
    return Field::sample(g, comps, bc, [&](int c, double x, double y, double) {
        return c == comp ? a * std::cos(ax * x + ay * y) : 0.0;
    });
}

}  // namespace

std::map<std::string, std::string> RunConfig::canonical() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, spec] : schema())
        if (k != "output.dir") out[k] = spec.get(*this);
    return out;
}

std::string RunConfig::hash() const {
    std::string text;
    for (const auto& [k, v] : canonical()) text += k + "=" + v + "\n";
    return fnv1a_hex(text);
}

std::map<std::string, std::string> default_config_keys() {
    std::map<std::string, std::string> out;
    const RunConfig c;
    for (const auto& [k, spec] : schema()) out[k] = spec.get(c);
    return out;
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("", fmt::format("line {}: malformed section header", lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", fmt::format("line {}: expected key = value", lineno));
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        const auto it = schema().find(key);
        if (it == schema().end()) throw ConfigError(key, "unknown key");
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
        it->second.set(c, key, value);
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Model build_model(const RunConfig& c, bool parabolicity_gate) {
    Model m;
    m.grid = c.grid;
    m.alpha = c.alpha;
    m.dealias = c.dealias;
    if (c.kappa > 0.0) m.kappa = KappaProfile::constant(c.grid, c.kappa);

    if (c.noise_family == "kraichnan") {
        KraichnanParams p = c.kraichnan;
        p.mode = c.mode;
        p.sigma = c.sigma ? *c.sigma : sigma_for_nu(c.nu, p, c.grid);
        m.noise = parabolicity_gate ? build_kraichnan(p, c.grid) : build_kraichnan_unchecked(p, c.grid);
    } else if (c.noise_family == "zero") {
        m.noise = NoiseFamily::zero(c.grid, c.kraichnan.modes, c.mode);
    } else {
        m.noise = read_noise_family(c.noise_file);
        if (m.noise.grid != c.grid) throw ConfigError("noise.file", "noise family grid differs from the config grid");
        if (m.noise.mode != c.mode) throw ConfigError("noise.file", "noise family mode differs from noise.mode");
        if (parabolicity_gate && m.noise.nu >= 2.0)
            throw ParabolicityViolation(fmt::format("noise family has nu = {} >= 2", m.noise.nu), m.noise.nu);
    }

    const GridSpec& g = c.grid;
    if (c.fv_amplitude != 0.0)
        m.forcing.v.xi = cosine_field(g, 2, 1, m.velocity_bc(), c.fv_amplitude, c.fv_kx, c.fv_ky);
    m.forcing.v.A = {{{-c.fv_damping, 0.0}, {0.0, -c.fv_damping}}};
    if (c.ft_amplitude != 0.0)
        m.forcing.theta.xi = cosine_field(g, 1, 0, m.temperature_bc(), c.ft_amplitude, c.ft_kx, c.ft_ky);
    m.forcing.theta.b = -c.ft_damping;
    if (c.noise_offset != 0.0) {
        m.forcing.noise.resize(m.noise.size());
        for (auto& nf : m.forcing.noise)
            nf.offset_v = cosine_field(g, 2, 1, m.velocity_bc(), c.noise_offset, c.noise_offset_kx, c.noise_offset_ky);
    }
    if (!m.forcing.bounds_ok(c.forcing_bound))
        throw ConfigError("forcing.bound", fmt::format("forcing growth constant {} exceeds the declared bound {}",
                                                       m.forcing.growth_constant(), c.forcing_bound));
    m.validate();
    return m;
}

State build_initial(const RunConfig& c, const Model& m) {
    if (c.initial == "rest") return m.zero_state();
    if (c.initial == "harmonic") return harmonic_state(m, c.initial_kx, c.initial_ky, c.initial_v, c.initial_theta);
    State s{read_snapshot(c.initial_v_file), read_snapshot(c.initial_theta_file)};
    if (s.v.grid() != c.grid || s.v.components() != 2)
        throw ConfigError("initial.v_file", "snapshot must hold 2 components on the config grid");
    if (s.theta.grid() != c.grid || s.theta.components() != 1)
        throw ConfigError("initial.theta_file", "snapshot must hold 1 component on the config grid");
    return m.admissible(std::move(s));
}

RareEvent build_event(const RunConfig& c, const Model& m) {
    RareEvent e;
    e.kind = c.event_kind;
    e.norm = c.event_norm;
    e.delta = c.event_delta;
    if (c.event_target == "harmonic") e.target = harmonic_state(m, c.target_kx, c.target_ky, c.target_v, c.target_theta);
    if (c.event_target == "cosine") {
        State t = m.zero_state();
        t.v = cosine_field(c.grid, 2, 1, m.velocity_bc(), c.target_v, c.target_kx, c.target_ky);
        t.theta = cosine_field(c.grid, 1, 0, m.temperature_bc(), c.target_theta, c.target_kx, c.target_ky);
        e.target = m.admissible(std::move(t));
    }
    return e;
}

IntegratorConfig integrator_config(const RunConfig& c) {
    IntegratorConfig ic;
    ic.dt = c.dt;
    ic.eps = c.eps;
    ic.mode = c.mode;
    ic.save_every = c.save_every;
    ic.control_budget = c.control_budget;
    return ic;
}

}  // namespace hydroldp
