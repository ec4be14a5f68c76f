#include "swarmguide/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace swarmguide {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string scalar_text(const YAML::Node& node) {
    if (node.IsScalar()) return node.Scalar();
    if (node.IsNull()) return "";
    return "<non-scalar>";
}

[[noreturn]] void bad_value(const std::string& key, const std::string& domain, const YAML::Node& node) {
    throw std::invalid_argument(key + " must be " + domain + " (got '" + scalar_text(node) + "')");
}

double as_double(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) bad_value(key, "a number", node);
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        bad_value(key, "a number", node);
    }
}

long long as_integer(const YAML::Node& node, const std::string& key, long long lo, long long hi) {
    const std::string domain = "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    if (!node.IsScalar()) bad_value(key, domain, node);
    long long v = 0;
    try {
        v = node.as<long long>();
    } catch (const YAML::Exception&) {
        bad_value(key, domain, node);
    }
    if (v < lo || v > hi) bad_value(key, domain, node);
    return v;
}

std::uint64_t as_u64(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) bad_value(key, "a non-negative integer", node);
    try {
        return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
        bad_value(key, "a non-negative integer", node);
    }
}

bool as_bool(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) bad_value(key, "true or false", node);
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        bad_value(key, "true or false", node);
    }
}

std::string as_string(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar() || node.Scalar().empty()) bad_value(key, "a non-empty string", node);
    return node.Scalar();
}

bool is_none(const YAML::Node& node) { return node.IsNull() || (node.IsScalar() && node.Scalar() == "none"); }

constexpr long long kIntMax = std::numeric_limits<int>::max();

struct Field {
    std::string key;
    std::function<void(ScenarioSpec&, const YAML::Node&)> set;
    std::function<void(YAML::Emitter&, const ScenarioSpec&)> emit;
};

void emit_number(YAML::Emitter& out, double v) { out << shortest(v); }

Field double_field(const std::string& key, double GuidanceConfig::*member) {
    return {key, [key, member](ScenarioSpec& s, const YAML::Node& n) { s.scenario.guidance.*member = as_double(n, key); },
            [member](YAML::Emitter& out, const ScenarioSpec& s) { emit_number(out, s.scenario.guidance.*member); }};
}

Field int_field(const std::string& key, int Scenario::*member, long long lo) {
    return {key,
            [key, member, lo](ScenarioSpec& s, const YAML::Node& n) {
                s.scenario.*member = static_cast<int>(as_integer(n, key, lo, kIntMax));
            },
            [member](YAML::Emitter& out, const ScenarioSpec& s) { out << s.scenario.*member; }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"name", [](ScenarioSpec& s, const YAML::Node& n) { s.name = as_string(n, "name"); },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << YAML::DoubleQuoted << s.name; }});
        f.push_back(int_field("grid_rows", &Scenario::grid_rows, 1));
        f.push_back(int_field("grid_cols", &Scenario::grid_cols, 1));
        f.push_back(int_field("max_hops", &Scenario::max_hops, 1));
        f.push_back(int_field("n_agents", &Scenario::n_agents, 1));
        f.push_back(int_field("start_bin", &Scenario::start_bin, 0));
        f.push_back({"theta",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         if (n.IsScalar() && n.Scalar() == "random") {
                             s.scenario.theta.clear();
                             return;
                         }
                         if (!n.IsSequence()) bad_value("theta", "'random' or a list of positive numbers", n);
                         std::vector<double> theta;
                         for (const auto& v : n) theta.push_back(as_double(v, "theta"));
                         s.scenario.theta = std::move(theta);
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) {
                         if (s.scenario.theta.empty()) {
                             out << "random";
                             return;
                         }
                         out << YAML::Flow << YAML::BeginSeq;
                         for (double v : s.scenario.theta) out << shortest(v);
                         out << YAML::EndSeq;
                     }});
        f.push_back({"theta_seed",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         if (is_none(n)) s.scenario.theta_seed.reset();
                         else s.scenario.theta_seed = as_u64(n, "theta_seed");
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) {
                         if (s.scenario.theta_seed) out << *s.scenario.theta_seed;
                         else out << "none";
                     }});
        f.push_back({"policy",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         if (!n.IsScalar()) bad_value("policy", "one of p1, p1-boosted, p2, p2+quorum, gica-baseline", n);
                         s.scenario.policy = parse_policy(n.Scalar());
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << std::string(policy_name(s.scenario.policy)); }});
        f.push_back({"blocking_fraction",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         s.scenario.blocking_fraction = as_double(n, "blocking_fraction");
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { emit_number(out, s.scenario.blocking_fraction); }});
        f.push_back(int_field("connectivity_window", &Scenario::connectivity_window, 1));
        f.push_back({"stop_hellinger",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         if (is_none(n)) s.scenario.stop_hellinger.reset();
                         else s.scenario.stop_hellinger = as_double(n, "stop_hellinger");
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) {
                         if (s.scenario.stop_hellinger) emit_number(out, *s.scenario.stop_hellinger);
                         else out << "none";
                     }});
        f.push_back(double_field("alpha", &GuidanceConfig::alpha));
        f.push_back(double_field("eps_xi", &GuidanceConfig::eps_xi));
        f.push_back(double_field("eps_m", &GuidanceConfig::eps_m));
        f.push_back(double_field("beta", &GuidanceConfig::beta));
        f.push_back(double_field("tau", &GuidanceConfig::tau));
        f.push_back(double_field("gamma", &GuidanceConfig::gamma));
        f.push_back(double_field("quorum", &GuidanceConfig::quorum));
        f.push_back(double_field("flux_cap", &GuidanceConfig::flux_cap));
        f.push_back(double_field("expense_slope", &GuidanceConfig::expense_slope));
        f.push_back(double_field("expense_offset", &GuidanceConfig::expense_offset));
        f.push_back(double_field("eps_e", &GuidanceConfig::eps_e));
        f.push_back({"use_theta_boost",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         s.scenario.guidance.use_theta_boost = as_bool(n, "use_theta_boost");
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << s.scenario.guidance.use_theta_boost; }});
        f.push_back({"n_steps",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         s.n_steps = as_integer(n, "n_steps", 0, std::numeric_limits<std::int64_t>::max());
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << s.n_steps; }});
        f.push_back({"n_runs",
                     [](ScenarioSpec& s, const YAML::Node& n) {
                         s.n_runs = static_cast<int>(as_integer(n, "n_runs", 1, kIntMax));
                     },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << s.n_runs; }});
        f.push_back({"seed", [](ScenarioSpec& s, const YAML::Node& n) { s.seed = as_u64(n, "seed"); },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << s.seed; }});
        f.push_back({"output_dir", [](ScenarioSpec& s, const YAML::Node& n) { s.output_dir = as_string(n, "output_dir"); },
                     [](YAML::Emitter& out, const ScenarioSpec& s) { out << YAML::DoubleQuoted << s.output_dir; }});
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

std::string known_keys() {
    std::string list = "base";
    for (const auto& f : fields()) list += ", " + f.key;
    return list;
}

ScenarioSpec p1_base(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    s.scenario.grid_rows = 10;
    s.scenario.grid_cols = 10;
    s.scenario.max_hops = 3;
    s.scenario.n_agents = 2000;
    s.scenario.policy = PolicyKind::p1_boosted;
    s.scenario.guidance = GuidanceConfig{};
    s.scenario.guidance.alpha = 0.6;
    s.n_steps = 5000;
    s.output_dir = "out/" + name;
    return s;
}

ScenarioSpec p2_base(const std::string& name) {
    ScenarioSpec s = p1_base(name);
    s.scenario.max_hops = 1;
    s.scenario.n_agents = 10000;
    s.scenario.policy = PolicyKind::p2;
    s.scenario.guidance.alpha = 1.0;
    s.scenario.guidance.flux_cap = 20.0;
    s.n_steps = 3000;
    return s;
}

std::vector<ScenarioSpec> build_presets() {
    std::vector<ScenarioSpec> all;
    all.push_back(p1_base("p1-fig4"));

    auto lica = p1_base("p1-fig5");
    lica.scenario.stop_hellinger = 0.10;
    lica.n_steps = 10000;
    all.push_back(lica);

    auto gica = lica;
    gica.name = "gica-fig5";
    gica.output_dir = "out/gica-fig5";
    gica.scenario.policy = PolicyKind::gica_baseline;
    gica.scenario.guidance.use_theta_boost = true;
    all.push_back(gica);

    auto async = p1_base("p1-fig8");
    async.scenario.blocking_fraction = 0.3;
    async.n_steps = 8000;
    all.push_back(async);

    auto gica_async = async;
    gica_async.name = "gica-fig8";
    gica_async.output_dir = "out/gica-fig8";
    gica_async.scenario.policy = PolicyKind::gica_baseline;
    gica_async.scenario.guidance.use_theta_boost = true;
    all.push_back(gica_async);

    all.push_back(p2_base("p2-fig7"));

    auto large = p2_base("p2-fig7-large");
    large.scenario.n_agents = 100000;
    large.scenario.guidance.flux_cap = 200.0;
    all.push_back(large);

    auto quorum = p2_base("quorum-fig7");
    quorum.scenario.policy = PolicyKind::p2_quorum;
    quorum.scenario.guidance.quorum = 1.3;
    quorum.scenario.guidance.gamma = 30.0;
    all.push_back(quorum);
    return all;
}

const std::vector<ScenarioSpec>& presets() {
    static const std::vector<ScenarioSpec> all = build_presets();
    return all;
}

}  // namespace

void ScenarioSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("name must be a non-empty string");
    if (output_dir.empty()) throw std::invalid_argument("output_dir must be a non-empty string");
    if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    scenario.validate();
}

const std::vector<std::string>& scenario_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : presets()) names.push_back(p.name);
    return names;
}

std::optional<ScenarioSpec> preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

ScenarioSpec parse_scenario(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
    }
    if (root.IsNull()) throw std::invalid_argument("missing required key 'policy' (or 'base')");
    if (!root.IsMap()) throw std::invalid_argument("scenario must be a flat key: value document");

    ScenarioSpec spec;
    bool has_base = false;
    bool has_policy = false;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key == "base") {
            has_base = true;
            if (!kv.second.IsScalar() || !preset(kv.second.Scalar())) {
                std::string names;
                for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
                bad_value("base", "one of " + names, kv.second);
            }
            spec = *preset(kv.second.Scalar());
        } else if (!find_field(key)) {
            throw std::invalid_argument("unknown key '" + key + "' (known keys: " + known_keys() + ")");
        } else if (kv.second.IsMap()) {
            throw std::invalid_argument(key + " must be a scalar or a list; nested maps are not supported");
        }
        if (key == "policy") has_policy = true;
    }
    if (!has_base && !has_policy) throw std::invalid_argument("missing required key 'policy' (or 'base')");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key != "base") find_field(key)->set(spec, kv.second);
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::string& preset_or_path) {
    if (auto p = preset(preset_or_path)) return *p;
    std::ifstream in(preset_or_path);
    if (!in) {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw std::invalid_argument("'" + preset_or_path + "' is neither a preset (" + names + ") nor a readable file");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string write_scenario(const ScenarioSpec& spec) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    for (const auto& f : fields()) {
        out << YAML::Key << f.key << YAML::Value;
        f.emit(out, spec);
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string build_identifier() {
#ifdef __VERSION__
    return std::string("swarmguide ") + SWARMGUIDE_VERSION + " (" + __VERSION__ + ")";
#else
    return std::string("swarmguide ") + SWARMGUIDE_VERSION;
#endif
}

void apply_override(ScenarioSpec& spec, const std::string& key, const std::string& value) {
    const Field* f = find_field(key);
    if (!f) throw std::invalid_argument("unknown key '" + key + "' (known keys: " + known_keys() + ")");
    YAML::Node node;
    try {
        node = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument("cannot parse value for " + key + ": " + e.what());
    }
    f->set(spec, node);
}

}  // namespace swarmguide
