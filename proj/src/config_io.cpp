#include "simarr/config_io.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "simarr/error.hpp"

namespace simarr {

namespace {

using nlohmann::json;

class Collector {
public:
    void add(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }
    bool empty() const { return errors_.empty(); }
    std::string joined() const {
        std::string out;
        for (const auto& e : errors_) out += "\n  " + e;
        return out;
    }

private:
    std::vector<std::string> errors_;
};

bool check_fields(const json& j, const std::string& path, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, Collector& errs) {
    if (!j.is_object()) {
        errs.add(path, "expected an object");
        return false;
    }
    bool ok = true;
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            errs.add(path + "." + key, "unknown field");
            ok = false;
        }
    }
    for (const auto& key : required) {
        if (!j.contains(key)) {
            errs.add(path + "." + key, "missing required field");
            ok = false;
        }
    }
    return ok;
}

std::optional<double> number(const json& j, const std::string& key, const std::string& path,
                             Collector& errs) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (!v.is_number()) {
        errs.add(path + "." + key, "expected a number");
        return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        errs.add(path + "." + key, "must be finite");
        return std::nullopt;
    }
    return x;
}

std::optional<std::vector<double>> numbers(const json& j, const std::string& key,
                                           const std::string& path, Collector& errs) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) {
        errs.add(path + "." + key, "expected a nonempty array of numbers");
        return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
            errs.add(path + "." + key + "[" + std::to_string(i) + "]", "expected a finite number");
            ok = false;
        } else {
            out.push_back(v[i].get<double>());
        }
    }
    return ok ? std::optional(out) : std::nullopt;
}

std::optional<std::string> type_tag(const json& j, const std::string& path, Collector& errs) {
    if (!j.is_object()) {
        errs.add(path, "expected an object");
        return std::nullopt;
    }
    if (!j.contains("type") || !j.at("type").is_string()) {
        errs.add(path + ".type", "missing or non-string type tag");
        return std::nullopt;
    }
    return j.at("type").get<std::string>();
}

// Runs a factory and records its validation error under path.
template <class F>
auto guarded(const std::string& path, Collector& errs, F&& make) -> std::optional<decltype(make())> {
    try {
        return make();
    } catch (const Error& e) {
        std::string msg = e.what();
        const auto prefix = std::string(to_string(e.code())) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        errs.add(path, msg);
        return std::nullopt;
    }
}

std::optional<ScalarDistribution> parse_distribution(const json& j, const std::string& path,
                                                     Collector& errs) {
    const auto tag = type_tag(j, path, errs);
    if (!tag) return std::nullopt;
    if (*tag == "exponential") {
        if (!check_fields(j, path, {"type", "rate"}, {"rate"}, errs)) return std::nullopt;
        const auto rate = number(j, "rate", path, errs);
        if (!rate) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::exponential(*rate); });
    }
    if (*tag == "erlang") {
        if (!check_fields(j, path, {"type", "shape", "rate"}, {"shape", "rate"}, errs))
            return std::nullopt;
        const auto& shape = j.at("shape");
        std::optional<int> k;
        if (!shape.is_number_integer() || shape.get<long long>() < 1 || shape.get<long long>() > 100000)
            errs.add(path + ".shape", "expected a positive integer");
        else
            k = static_cast<int>(shape.get<long long>());
        const auto rate = number(j, "rate", path, errs);
        if (!k || !rate) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::erlang(*k, *rate); });
    }
    if (*tag == "deterministic") {
        if (!check_fields(j, path, {"type", "value"}, {"value"}, errs)) return std::nullopt;
        const auto value = number(j, "value", path, errs);
        if (!value) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::deterministic(*value); });
    }
    if (*tag == "hyperexponential") {
        if (!check_fields(j, path, {"type", "weights", "rates"}, {"weights", "rates"}, errs))
            return std::nullopt;
        const auto w = numbers(j, "weights", path, errs);
        const auto r = numbers(j, "rates", path, errs);
        if (!w || !r) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::hyperexponential(*w, *r); });
    }
    if (*tag == "zero_inflated") {
        if (!check_fields(j, path, {"type", "p0", "inner"}, {"p0", "inner"}, errs))
            return std::nullopt;
        const auto p0 = number(j, "p0", path, errs);
        const auto inner = parse_distribution(j.at("inner"), path + ".inner", errs);
        if (!p0 || !inner) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::zero_inflated(*p0, *inner); });
    }
    if (*tag == "convolution") {
        if (!check_fields(j, path, {"type", "parts"}, {"parts"}, errs)) return std::nullopt;
        const auto& parts = j.at("parts");
        if (!parts.is_array() || parts.empty()) {
            errs.add(path + ".parts", "expected a nonempty array");
            return std::nullopt;
        }
        std::vector<ScalarDistribution> out;
        bool ok = true;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            auto d = parse_distribution(parts[i], path + ".parts[" + std::to_string(i) + "]", errs);
            if (d) out.push_back(*d); else ok = false;
        }
        if (!ok) return std::nullopt;
        return guarded(path, errs, [&] { return ScalarDistribution::convolution(out); });
    }
    errs.add(path + ".type", "unknown distribution type '" + *tag + "'");
    return std::nullopt;
}

// Model-level rejections (ordering) are rethrown rather than collected.
std::optional<ServiceModel> parse_service(const json& j, const std::string& path, Collector& errs) {
    const auto tag = type_tag(j, path, errs);
    if (!tag) return std::nullopt;
    if (*tag == "ordered_increments") {
        if (!check_fields(j, path, {"type", "increments"}, {"increments"}, errs)) return std::nullopt;
        const auto& inc = j.at("increments");
        if (!inc.is_array() || inc.empty()) {
            errs.add(path + ".increments", "expected a nonempty array");
            return std::nullopt;
        }
        std::vector<ScalarDistribution> parts;
        bool ok = true;
        for (std::size_t i = 0; i < inc.size(); ++i) {
            auto d = parse_distribution(inc[i], path + ".increments[" + std::to_string(i) + "]", errs);
            if (d) parts.push_back(*d); else ok = false;
        }
        if (!ok) return std::nullopt;
        return guarded(path, errs, [&] { return ServiceModel::ordered_increments(parts); });
    }
    if (*tag == "proportional") {
        if (!check_fields(j, path, {"type", "base", "coefficients"}, {"base", "coefficients"}, errs))
            return std::nullopt;
        const auto base = parse_distribution(j.at("base"), path + ".base", errs);
        const auto coef = numbers(j, "coefficients", path, errs);
        if (!base || !coef) return std::nullopt;
        for (std::size_t i = 0; i < coef->size(); ++i) {
            if ((*coef)[i] < 0.0) {
                errs.add(path + ".coefficients[" + std::to_string(i) + "]", "must be nonnegative");
                return std::nullopt;
            }
        }
        try {
            return ServiceModel::proportional(*base, *coef);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::OrderingViolated)
                throw Error(ErrorCode::OrderingViolated, path + ".coefficients: must be nonincreasing");
            errs.add(path, e.what());
            return std::nullopt;
        }
    }
    if (*tag == "mixture") {
        if (!check_fields(j, path, {"type", "components"}, {"components"}, errs)) return std::nullopt;
        const auto& comps = j.at("components");
        if (!comps.is_array() || comps.empty()) {
            errs.add(path + ".components", "expected a nonempty array");
            return std::nullopt;
        }
        std::vector<double> weights;
        std::vector<ServiceModel> models;
        bool ok = true;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const std::string cp = path + ".components[" + std::to_string(i) + "]";
            if (!check_fields(comps[i], cp, {"weight", "model"}, {"weight", "model"}, errs)) {
                ok = false;
                continue;
            }
            const auto w = number(comps[i], "weight", cp, errs);
            const auto m = parse_service(comps[i].at("model"), cp + ".model", errs);
            if (w && m) {
                weights.push_back(*w);
                models.push_back(*m);
            } else {
                ok = false;
            }
        }
        if (!ok) return std::nullopt;
        return guarded(path, errs, [&] { return ServiceModel::mixture(weights, models); });
    }
    errs.add(path + ".type", "unknown service model type '" + *tag + "'");
    return std::nullopt;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

LoadedConfig load_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    Collector errs;
    double lambda = 0.0;
    std::optional<std::vector<double>> speeds;
    std::optional<ServiceModel> service;
    check_fields(doc, "$", {"lambda", "speeds", "service"}, {"lambda", "service"}, errs);
    if (doc.is_object()) {
        if (doc.contains("lambda")) {
            if (const auto v = number(doc, "lambda", "$", errs)) {
                lambda = *v;
                if (!(lambda > 0.0)) errs.add("$.lambda", "must be positive");
            }
        }
        if (doc.contains("speeds")) {
            speeds = numbers(doc, "speeds", "$", errs);
            if (speeds) {
                for (std::size_t i = 0; i < speeds->size(); ++i)
                    if (!((*speeds)[i] > 0.0))
                        errs.add("$.speeds[" + std::to_string(i) + "]", "must be positive");
            }
        }
        if (doc.contains("service")) service = parse_service(doc.at("service"), "$.service", errs);
        if (service && speeds && speeds->size() != service->dimension())
            errs.add("$.speeds", "has " + std::to_string(speeds->size()) +
                                     " entries but the service model has dimension " +
                                     std::to_string(service->dimension()));
    }
    if (!errs.empty()) throw Error(ErrorCode::ValidationError, "invalid config:" + errs.joined());

    const std::vector<double> c = speeds ? *speeds : std::vector<double>(service->dimension(), 1.0);
    SystemConfig raw(lambda, c, service.value());
    SystemConfig norm = [&] {
        try {
            return normalize(raw);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::UnstableSystem) {
                std::ostringstream os;
                os << "$.lambda: load rho_1 = " << raw.load(0) << " must be below 1";
                throw Error(ErrorCode::UnstableSystem, os.str());
            }
            throw Error(e.code(), std::string("$.service: ") + e.what());
        }
    }();
    const auto degenerate = norm.degenerate_levels();
    if (!degenerate.empty()) {
        std::ostringstream os;
        os << "$.service: queues " << degenerate.front() - 1 << " and " << degenerate.front()
           << " are a.s. identical after normalization";
        throw Error(ErrorCode::Degenerate, os.str());
    }
    LoadedConfig out{std::move(norm), doc.dump(), 0};
    out.hash = fnv1a(out.canonical_json);
    return out;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str());
}

SystemConfig parse_config(const std::string& path) { return load_config(path).config; }

const char* config_schema_help() {
    return R"(Config file (JSON):
  {
    "lambda": <arrival rate > 0>,
    "speeds": [<c_1>, ..., <c_K>],            (optional, default all 1)
    "service": <model>
  }
  model:
    {"type": "ordered_increments", "increments": [<dist>, ...]}   B_i = D_i + ... + D_K
    {"type": "proportional", "base": <dist>, "coefficients": [a_1 >= ... >= a_K >= 0]}
    {"type": "mixture", "components": [{"weight": w, "model": <model>}, ...]}
  dist:
    {"type": "exponential", "rate": r}
    {"type": "erlang", "shape": k, "rate": r}
    {"type": "deterministic", "value": x}
    {"type": "hyperexponential", "weights": [...], "rates": [...]}
    {"type": "zero_inflated", "p0": p, "inner": <dist>}
    {"type": "convolution", "parts": [<dist>, ...]}
  Unknown fields are rejected.
)";
}

}  // namespace simarr
