#include "simarr/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "simarr/config_io.hpp"
#include "simarr/error.hpp"
#include "simarr/inversion.hpp"
#include "simarr/sim.hpp"
#include "simarr/transforms.hpp"

#ifndef SIMARR_VERSION
#define SIMARR_VERSION "0.0.0"
#endif

namespace simarr {

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct RunContext {
    std::string command;
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::uint64_t> seeds_used;
    std::uint64_t config_hash = 0;
    bool has_config = false;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;

    std::uint64_t resolve_seed() {
        if (!seed) seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
        seeds_used.push_back(*seed);
        return *seed;
    }
};

LoadedConfig load(RunContext& ctx) {
    auto loaded = load_config(ctx.config_path);
    ctx.config_hash = loaded.hash;
    ctx.has_config = true;
    return loaded;
}

// Single writer for the tabular output: a file when --out is set, else stdout.
class CsvSink {
public:
    explicit CsvSink(const RunContext& ctx) {
        if (!ctx.out_path.empty()) {
            file_ = std::make_unique<std::ofstream>(ctx.out_path, std::ios::binary);
            if (!*file_) throw Error(ErrorCode::InvalidArgument, "cannot write '" + ctx.out_path + "'");
            os_ = file_.get();
        } else {
            os_ = ctx.out;
        }
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) *os_ << (i ? "," : "") << cells[i];
        *os_ << '\n';
    }
    void flush() { os_->flush(); }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void write_manifest(const RunContext& ctx, double seconds) {
    nlohmann::json m;
    m["command"] = ctx.command;
    m["config_hash"] = ctx.has_config ? nlohmann::json(hex(ctx.config_hash)) : nlohmann::json(nullptr);
    m["seeds"] = ctx.seeds_used;
    m["tool_version"] = SIMARR_VERSION;
    m["wall_clock_seconds"] = seconds;
    m["outputs"] = ctx.out_path.empty() ? nlohmann::json::array() : nlohmann::json::array({ctx.out_path});
    if (ctx.out_path.empty()) {
        *ctx.err << m.dump() << '\n';
        return;
    }
    std::ofstream f(ctx.out_path + ".manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
}

cplx parse_complex(const std::string& text) {
    std::stringstream ss(text);
    std::string re, im;
    std::getline(ss, re, ',');
    std::getline(ss, im);
    try {
        std::size_t used = 0;
        const double r = std::stod(re, &used);
        if (used != re.size()) throw std::invalid_argument(re);
        double i = 0.0;
        if (!im.empty()) {
            i = std::stod(im, &used);
            if (used != im.size()) throw std::invalid_argument(im);
        }
        return {r, i};
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "expected RE[,IM], got '" + text + "'");
    }
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t width,
                                                  std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (rows.empty() && header && header->empty()) {
                *header = cells;
                continue;
            }
            throw Error(ErrorCode::InvalidArgument,
                        path + ":" + std::to_string(lineno) + ": non-numeric value");
        }
        if (row.size() != width)
            throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected " +
                                                        std::to_string(width) + " columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

int cmd_eval_lst(RunContext& ctx, const std::string& points_path) {
    const auto loaded = load(ctx);
    const auto& config = loaded.config;
    const std::size_t k = config.dimension();
    const auto c = config.original_speeds();
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(points_path, 2 * k, &header);
    CsvSink sink(ctx);
    std::vector<std::string> head;
    for (std::size_t i = 1; i <= k; ++i) {
        head.push_back("re_s" + std::to_string(i));
        head.push_back("im_s" + std::to_string(i));
    }
    head.insert(head.end(), {"re_val", "im_val", "branch"});
    sink.row(head);
    for (const auto& r : rows) {
        std::vector<cplx> s(k);
        for (std::size_t i = 0; i < k; ++i) s[i] = c[i] * cplx(r[2 * i], r[2 * i + 1]);
        const TransformPoint p = k == 2 ? psi2(config, s[0], s[1]) : psiK(config, s);
        std::vector<std::string> cells;
        for (double x : r) cells.push_back(num(x));
        cells.insert(cells.end(), {num(p.value.real()), num(p.value.imag()), to_string(p.branch)});
        sink.row(cells);
    }
    sink.flush();
    return kExitOk;
}

int cmd_rouche_root(RunContext& ctx, const std::vector<std::string>& s_text, std::size_t level) {
    const auto loaded = load(ctx);
    const auto& config = loaded.config;
    const auto c = config.original_speeds();
    if (level == 0) level = s_text.size() + 1;
    if (level < 2 || level > config.dimension())
        throw Error(ErrorCode::InvalidArgument, "--level must lie in 2.." + std::to_string(config.dimension()));
    if (s_text.size() > level - 1)
        throw Error(ErrorCode::InvalidArgument, "level " + std::to_string(level) + " takes at most " +
                                                    std::to_string(level - 1) + " values of --s");
    // Missing trailing coordinates are zero.
    std::vector<cplx> s(level - 1, 0.0);
    for (std::size_t i = 0; i < s_text.size(); ++i) s[i] = c[i] * parse_complex(s_text[i]);
    const RootResult r = fixed_point_U(config, s);
    const cplx root = r.root / c[level - 1];
    static const char* methods[] = {"exact", "fixed_point", "secant"};
    CsvSink sink(ctx);
    sink.row({"level", "re_root", "im_root", "re_ustar", "im_ustar", "residual", "iterations", "method"});
    sink.row({std::to_string(level), num(root.real()), num(root.imag()), num(r.ustar.real()),
              num(r.ustar.imag()), num(r.residual), std::to_string(r.iterations),
              methods[static_cast<int>(r.method)]});
    sink.flush();
    return kExitOk;
}

int cmd_survival(RunContext& ctx, const std::string& u1_axis, const std::string& u2_axis,
                 const std::string& method) {
    const auto loaded = load(ctx);
    const auto& config = loaded.config;
    if (config.dimension() < 2) throw Error(ErrorCode::InvalidArgument, "survival needs K >= 2");
    const auto c = config.original_speeds();
    InversionParams params = method == "gs" ? InversionParams::gaver_stehfest() : InversionParams::euler();
    const auto u1 = parse_axis(u1_axis), u2 = parse_axis(u2_axis);
    std::vector<double> n1, n2;
    for (double u : u1) n1.push_back(u / c[0]);
    for (double u : u2) n2.push_back(u / c[1]);
    const auto rows = survival_curve(config, n1, n2, params);
    CsvSink sink(ctx);
    sink.row({"u1", "u2", "xi", "error_estimate", "clamped"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        sink.row({num(u1[i / u2.size()]), num(u2[i % u2.size()]), num(r.result.value),
                  num(r.result.error_estimate), r.result.clamped ? "1" : "0"});
    }
    sink.flush();
    return kExitOk;
}

int cmd_simulate(RunContext& ctx, std::uint64_t arrivals, std::size_t pivot) {
    const auto loaded = load(ctx);
    const auto& config = loaded.config;
    const auto c = config.original_speeds();
    const std::uint64_t seed = ctx.resolve_seed();
    LindleyOptions options;
    options.pivot = pivot;
    require_normalized_stable(config);
    if (arrivals < 1000) throw Error(ErrorCode::InvalidArgument, "--arrivals must be at least 1000");
    LindleyPath path(config, seed, 0, options);
    CsvSink sink(ctx);
    std::vector<std::string> head{"n"};
    for (std::size_t i = 1; i <= config.dimension(); ++i) head.push_back("V" + std::to_string(i));
    head.push_back("regen");
    sink.row(head);
    std::vector<std::string> cells(config.dimension() + 2);
    for (std::uint64_t n = 0; n < arrivals; ++n) {
        const auto v = path.current();
        cells[0] = std::to_string(n);
        for (std::size_t i = 0; i < v.size(); ++i) cells[i + 1] = num(c[i] * v[i]);
        cells.back() = path.regeneration() ? "1" : "0";
        sink.row(cells);
        path.advance();
    }
    sink.flush();
    return kExitOk;
}

// --- verification suites ----------------------------------------------------

struct CheckTally {
    std::size_t passed = 0, failed = 0;
};

class Reporter {
public:
    explicit Reporter(CsvSink& sink) : sink_(sink) { sink_.row({"check", "trial", "passed", "detail"}); }
    void record(const std::string& check, std::size_t trial, bool ok, const std::string& detail) {
        auto& t = tallies_[check];
        (ok ? t.passed : t.failed)++;
        sink_.row({check, std::to_string(trial), ok ? "1" : "0", detail});
    }
    bool summarize() {
        bool all = true;
        for (const auto& [check, t] : tallies_) {
            sink_.row({check, "total", t.failed == 0 ? "1" : "0",
                       "passed=" + std::to_string(t.passed) + " failed=" + std::to_string(t.failed)});
            all = all && t.failed == 0;
        }
        return all;
    }

private:
    CsvSink& sink_;
    std::map<std::string, CheckTally> tallies_;
};

void check_duality(Reporter& rep, std::uint64_t seed, std::size_t trials, bool inject,
                   const std::optional<SystemConfig>& config) {
    for (std::size_t t = 0; t < trials; ++t) {
        auto dc = random_duality_case(seed, t);
        if (config && config->dimension() == dc.config.dimension()) dc.config = *config;
        else if (config) {
            dc.config = *config;
            dc.u.resize(config->dimension(), dc.u.front());
        }
        std::optional<DualityFault> fault;
        if (inject) fault = DualityFault{0};
        const auto r = verify_duality(dc.config, dc.u, dc.n_claims, dc.seed, fault);
        std::ostringstream os;
        os << "K=" << r.dimension << " N=" << r.n_claims << " ruined=";
        for (bool b : r.ruined) os << b;
        os << " exceeded=";
        for (bool b : r.exceeded) os << b;
        rep.record("duality", t, r.all_hold(), os.str());
    }
}

void check_kernel(Reporter& rep, const SystemConfig& config, std::uint64_t seed, std::size_t trials) {
    Rng rng(seed, 11);
    for (std::size_t t = 0; t < trials; ++t) {
        const cplx s(0.05 + 5.0 * rng.uniform(), 4.0 * (rng.uniform() - 0.5));
        const cplx tt(-s.real() * rng.uniform() + 5.0 * rng.uniform(), 4.0 * (rng.uniform() - 0.5));
        const double res = kernel_residual(config, s, tt);
        rep.record("kernel", t, res < 1e-9, "s=" + num(s.real()) + "," + num(s.imag()) + " t=" +
                                                num(tt.real()) + "," + num(tt.imag()) + " residual=" + num(res));
    }
}

TandemSystem random_tandem(Rng& rng) {
    for (;;) {
        const double l1 = 0.1 + rng.uniform(), l2 = 0.1 + rng.uniform();
        const double r1 = 0.5 + 4.0 * rng.uniform(), r2 = 0.5 + 4.0 * rng.uniform();
        if (l1 / r1 + l2 / r2 < 0.9)
            return {l1, l2, ScalarDistribution::exponential(r1), ScalarDistribution::exponential(r2)};
    }
}

void check_tandem(Reporter& rep, std::uint64_t seed, std::size_t trials, bool priority) {
    Rng rng(seed, priority ? 13 : 12);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto sys = random_tandem(rng);
        const cplx a(3.0 * rng.uniform(), 2.0 * (rng.uniform() - 0.5));
        const cplx b(3.0 * rng.uniform(), 2.0 * (rng.uniform() - 0.5));
        const auto [x, y] = priority ? priority_crosscheck(sys, a, b) : tandem_crosscheck(sys, a, b);
        const double diff = std::abs(x - y);
        rep.record(priority ? "priority" : "tandem", t, diff < 1e-9, "diff=" + num(diff));
    }
}

void check_decomposition(Reporter& rep, const SystemConfig& full, std::uint64_t seed,
                         std::size_t trials, std::uint64_t arrivals) {
    const SystemConfig config = full.leading(2);
    const std::vector<std::vector<double>> grid = {{0.2, 0.1}, {0.5, 0.0}, {0.5, 0.5}, {1.0, 0.2},
                                                   {1.0, 1.0}, {1.5, 0.3}, {2.0, 0.0}, {2.0, 2.0},
                                                   {3.0, 1.0}, {0.3, 2.0}};
    std::vector<std::vector<double>> first(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) first[g] = {grid[g][0]};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t base = seed + 1000 * t;
        const auto v = estimate_lst(run_lindley(config, arrivals, base), grid);
        const auto mod = estimate_lst(simulate_modified(config, arrivals, base + 1, 2), grid);
        const auto virt = estimate_lst(simulate_virtual(config, 2, arrivals, base + 2), first);
        double worst = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double prod = mod[g].estimate * virt[g].estimate;
            const double se = std::sqrt(v[g].std_error * v[g].std_error +
                                        std::pow(virt[g].estimate * mod[g].std_error, 2) +
                                        std::pow(mod[g].estimate * virt[g].std_error, 2));
            worst = std::max(worst, se > 0 ? std::abs(v[g].estimate - prod) / se : 0.0);
        }
        rep.record("decomposition", t, worst <= 4.0, "max_z=" + num(worst));
        const auto u = iid_mean(sample_U(config, 2, 100000, base + 3))[0];
        const double expected = (1.0 - (1.0 - config.load(0)) / (1.0 - config.load(1))) / config.lambda();
        const double z = std::abs(u.estimate - expected) / u.std_error;
        rep.record("extra_work_mean", t, z <= 4.0,
                   "mean=" + num(u.estimate) + " expected=" + num(expected) + " z=" + num(z));
    }
}

int cmd_verify(RunContext& ctx, const std::string& check, std::size_t trials, bool inject,
               std::uint64_t arrivals) {
    static const std::set<std::string> known = {"duality", "decomposition", "kernel", "tandem", "priority", "all"};
    if (!known.count(check)) throw Error(ErrorCode::InvalidArgument, "unknown check '" + check + "'");
    std::optional<SystemConfig> config;
    if (!ctx.config_path.empty()) config = load(ctx).config;
    const bool all = check == "all";
    if ((all || check == "kernel" || check == "decomposition") && !config)
        throw Error(ErrorCode::InvalidArgument, "--check " + check + " needs --config");
    const std::uint64_t seed = ctx.resolve_seed();
    CsvSink sink(ctx);
    Reporter rep(sink);
    if (all || check == "duality") check_duality(rep, seed, trials, inject, config);
    if (all || check == "kernel") check_kernel(rep, config->leading(2), seed, trials);
    if (all || check == "tandem") check_tandem(rep, seed, trials, false);
    if (all || check == "priority") check_tandem(rep, seed, trials, true);
    if (all || check == "decomposition") check_decomposition(rep, *config, seed, std::min<std::size_t>(trials, 3), arrivals);
    const bool ok = rep.summarize();
    sink.flush();
    return ok ? kExitOk : kExitVerificationFailed;
}

int cmd_report(RunContext& ctx) {
    const auto loaded = load(ctx);
    const auto& config = loaded.config;
    CsvSink sink(ctx);
    sink.row({"key", "value"});
    sink.row({"lambda", num(config.lambda())});
    sink.row({"dimension", std::to_string(config.dimension())});
    sink.row({"service", "\"" + config.service().describe() + "\""});
    const auto c = config.original_speeds();
    for (std::size_t i = 0; i < config.dimension(); ++i) {
        const std::string q = std::to_string(i + 1);
        sink.row({"speed_" + q, num(c[i])});
        sink.row({"rho_" + q, num(config.load(i))});
        const double m2 = config.service().second_moment(i);
        // P-K mean workload, reported in the original units.
        sink.row({"mean_workload_" + q, num(c[i] * config.lambda() * m2 / (2.0 * (1.0 - config.load(i))))});
    }
    sink.row({"p_queue1_empty", num(1.0 - config.load(0))});
    // Extra work is measured in queue-1 time units; scale back to work.
    for (std::size_t m = 2; m <= config.dimension(); ++m) {
        const double eu = (1.0 - (1.0 - config.load(m - 2)) / (1.0 - config.load(m - 1))) / config.lambda();
        sink.row({"mean_extra_work_level_" + std::to_string(m), num(c[0] * eu)});
    }
    if (config.dimension() >= 2) {
        sink.row({"root_t_at_1", num(root_t(config, c[0]).root.real() / c[1])});
        sink.row({"psi_1_1", num(psi2(config, c[0], c[1]).value.real())});
    }
    sink.flush();
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coupled parallel queues with simultaneous arrivals: transforms, inversion, simulation",
                 "simarr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SIMARR_VERSION);
    RunContext ctx;
    ctx.out = &out;
    ctx.err = &err;
    std::uint64_t seed_value = 0;

    auto common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", ctx.config_path, "JSON config file");
        if (config_required) opt->required();
        sub->add_option("--out", ctx.out_path, "output CSV (default: stdout)");
    };
    auto seeded = [&](CLI::App* sub) {
        sub->add_option("--seed", seed_value, "random seed (default: drawn and recorded)");
    };

    auto* eval = app.add_subcommand("eval-lst", "evaluate the joint workload LST at points");
    common(eval, true);
    std::string points;
    eval->add_option("--points", points, "CSV with columns re_s1,im_s1,...,re_sK,im_sK")->required();

    auto* rouche = app.add_subcommand("rouche-root", "kernel root and busy-period transform");
    common(rouche, true);
    std::vector<std::string> s_values;
    std::size_t level = 0;
    rouche->add_option("--s", s_values, "argument RE[,IM]; repeat for s_1..s_{m-1}")->required();
    rouche->add_option("--level", level, "level m (default: number of --s values + 1)");

    auto* surv = app.add_subcommand("survival", "joint survival probabilities by transform inversion");
    common(surv, true);
    std::string u1_axis, u2_axis, method = "euler";
    surv->add_option("--u1", u1_axis, "a[:b:step]")->required();
    surv->add_option("--u2", u2_axis, "a[:b:step]")->required();
    surv->add_option("--method", method, "euler|gs")->check(CLI::IsMember({"euler", "gs"}));

    auto* simulate = app.add_subcommand("simulate", "workloads at arrival epochs");
    common(simulate, true);
    seeded(simulate);
    std::uint64_t arrivals = 0;
    std::size_t pivot = 0;
    simulate->add_option("--arrivals", arrivals, "number of arrivals")->required();
    simulate->add_option("--pivot", pivot, "clear queues 1..p-1 whenever queue p empties");

    auto* verify = app.add_subcommand("verify", "property checks; exit 1 on any failure");
    common(verify, false);
    seeded(verify);
    std::string check;
    std::size_t trials = 100;
    bool inject = false;
    std::uint64_t verify_arrivals = 200000;
    verify->add_option("--check", check, "duality|decomposition|kernel|tandem|priority|all")->required();
    verify->add_option("--trials", trials, "number of trials");
    verify->add_option("--arrivals", verify_arrivals, "arrivals per simulation (decomposition)");
    verify->add_flag("--inject-fault", inject, "perturb one queue-side service sample (test hook)");

    auto* report = app.add_subcommand("report", "loads and closed-form summaries of a config");
    common(report, true);

    std::vector<std::string> argv_storage{"simarr"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << SIMARR_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run 'simarr --help' for usage\n";
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    ctx.command = sub->get_name();
    for (auto* s : {simulate, verify})
        if (sub == s && s->count("--seed")) ctx.seed = seed_value;

    const auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
        if (sub == eval) code = cmd_eval_lst(ctx, points);
        else if (sub == rouche) code = cmd_rouche_root(ctx, s_values, level);
        else if (sub == surv) code = cmd_survival(ctx, u1_axis, u2_axis, method);
        else if (sub == simulate) code = cmd_simulate(ctx, arrivals, pivot);
        else if (sub == verify) code = cmd_verify(ctx, check, trials, inject, verify_arrivals);
        else if (sub == report) code = cmd_report(ctx);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        switch (e.code()) {
            case ErrorCode::ParseError:
            case ErrorCode::ValidationError:
            case ErrorCode::UnstableSystem:
            case ErrorCode::OrderingViolated:
            case ErrorCode::Degenerate:
                err << config_schema_help();
                return kExitUsage;
            case ErrorCode::InvalidArgument:
            case ErrorCode::DomainError:
                return kExitUsage;
            default:
                return kExitVerificationFailed;
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, seconds);
    return code;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace simarr
