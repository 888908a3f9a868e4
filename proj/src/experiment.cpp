#include "strainwars/experiment.hpp"

#include "strainwars/estimators.hpp"
#include "strainwars/exact_oracle.hpp"
#include "strainwars/meanfield.hpp"
#include "strainwars/output.hpp"
#include "strainwars/replicates.hpp"
#include "strainwars/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace strainwars {

using nlohmann::ordered_json;

namespace {

const std::map<std::string, ExperimentKind>& kind_names()
{
    static const std::map<std::string, ExperimentKind> names = {
        {"ode", ExperimentKind::ode},           {"simulate", ExperimentKind::simulate},
        {"survival", ExperimentKind::survival}, {"critical", ExperimentKind::critical},
        {"coexist", ExperimentKind::coexist},   {"regime", ExperimentKind::regime},
        {"crowd-out", ExperimentKind::crowd_out}, {"oracle-check", ExperimentKind::oracle_check},
    };
    return names;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    if (trim(s).empty())
        return out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ','))
        out.push_back(trim(item));
    return out;
}

bool parse_double(const std::string& text, double& out)
{
    if (text.empty())
        return false;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
        return false;
    out = v;
    return true;
}

template <class Int>
bool parse_int(const std::string& text, Int& out)
{
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string join_doubles(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? ", " : "") + format_double(values[i]);
    return out;
}

std::string join_strings(const std::vector<std::string>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? ", " : "") + values[i];
    return out;
}

bool uses_topology(ExperimentKind k) { return k != ExperimentKind::ode; }
bool uses_init(ExperimentKind k) { return k != ExperimentKind::ode && k != ExperimentKind::regime; }
bool allows_sweep(ExperimentKind k)
{
    return k == ExperimentKind::simulate || k == ExperimentKind::survival || k == ExperimentKind::coexist ||
           k == ExperimentKind::oracle_check;
}

/// Binds a dotted key to a field of the config, with its parser and printer.
struct Field
{
    std::function<bool(ExperimentConfig&, const std::string&, std::string&)> read;
    std::function<std::string(const ExperimentConfig&)> write;
    std::function<bool(const ExperimentConfig&)> relevant;
};

template <class T>
Field number_field(T ExperimentConfig::*member, std::function<bool(const ExperimentConfig&)> relevant)
{
    Field f;
    f.read = [member](ExperimentConfig& c, const std::string& v, std::string& why) {
        if constexpr (std::is_floating_point_v<T>)
        {
            if (!parse_double(v, c.*member))
            {
                why = "expected a finite number, got '" + v + "'";
                return false;
            }
        }
        else
        {
            if (!parse_int(v, c.*member))
            {
                why = std::string("expected ") + (std::is_signed_v<T> ? "an integer" : "a nonnegative integer") +
                      ", got '" + v + "'";
                return false;
            }
        }
        return true;
    };
    f.write = [member](const ExperimentConfig& c) {
        if constexpr (std::is_floating_point_v<T>)
            return format_double(c.*member);
        else
            return std::to_string(c.*member);
    };
    f.relevant = std::move(relevant);
    return f;
}

Field string_field(std::string ExperimentConfig::*member, std::function<bool(const ExperimentConfig&)> relevant)
{
    Field f;
    f.read = [member](ExperimentConfig& c, const std::string& v, std::string&) {
        c.*member = v;
        return true;
    };
    f.write = [member](const ExperimentConfig& c) { return c.*member; };
    f.relevant = std::move(relevant);
    return f;
}

Field double_list_field(std::vector<double> ExperimentConfig::*member,
                        std::function<bool(const ExperimentConfig&)> relevant)
{
    Field f;
    f.read = [member](ExperimentConfig& c, const std::string& v, std::string& why) {
        std::vector<double> values;
        for (const auto& item : split_list(v))
        {
            double x = 0.0;
            if (!parse_double(item, x))
            {
                why = "expected a comma-separated list of numbers, got '" + item + "'";
                return false;
            }
            values.push_back(x);
        }
        c.*member = std::move(values);
        return true;
    };
    f.write = [member](const ExperimentConfig& c) { return join_doubles(c.*member); };
    f.relevant = std::move(relevant);
    return f;
}

const std::vector<std::pair<std::string, Field>>& schema()
{
    using C = ExperimentConfig;
    const auto always = [](const C&) { return true; };
    const auto never = [](const C&) { return false; };
    const auto topo = [](const C& c) { return uses_topology(c.experiment); };
    const auto init = [](const C& c) { return uses_init(c.experiment); };
    const auto init_is = [](const char* kind) {
        return [kind](const C& c) { return uses_init(c.experiment) && c.init_kind == kind; };
    };
    const auto is = [](ExperimentKind k) { return [k](const C& c) { return c.experiment == k; }; };

    static const std::vector<std::pair<std::string, Field>> fields = [&] {
        std::vector<std::pair<std::string, Field>> v;
        Field kind;
        kind.read = [](C& c, const std::string& text, std::string& why) {
            const auto k = parse_experiment_kind(text);
            if (!k)
            {
                why = "unknown experiment '" + text +
                      "' (expected ode, simulate, survival, critical, coexist, regime, crowd-out or oracle-check)";
                return false;
            }
            c.experiment = *k;
            return true;
        };
        kind.write = [](const C& c) { return to_string(c.experiment); };
        kind.relevant = always;
        v.emplace_back("experiment", kind);

        v.emplace_back("topology.kind", string_field(&C::topology_kind, topo));
        v.emplace_back("topology.d", number_field(&C::topology_d, topo));
        v.emplace_back("topology.extent", number_field(&C::topology_extent, topo));

        v.emplace_back("params.lambda1", number_field(&C::lambda1, always));
        v.emplace_back("params.lambda2", number_field(&C::lambda2, always));
        v.emplace_back("params.delta1", number_field(&C::delta1, always));
        v.emplace_back("params.delta2", number_field(&C::delta2, always));
        v.emplace_back("params.t_max", number_field(&C::t_max, always));
        v.emplace_back("params.sample_times", double_list_field(&C::sample_times, never));
        v.emplace_back("params.max_infected", number_field(&C::max_infected, never));

        v.emplace_back("init.kind", string_field(&C::init_kind, init));
        v.emplace_back("init.strain", number_field(&C::init_strain, init_is("single")));
        v.emplace_back("init.site", string_field(&C::init_site, never));
        v.emplace_back("init.p1", number_field(&C::init_p1, init_is("product")));
        v.emplace_back("init.p2", number_field(&C::init_p2, init_is("product")));
        v.emplace_back("init.site1", string_field(&C::init_site1, never));
        v.emplace_back("init.site2", string_field(&C::init_site2, never));

        Field observe;
        observe.read = [](C& c, const std::string& text, std::string&) {
            c.observe = split_list(text);
            return true;
        };
        observe.write = [](const C& c) { return join_strings(c.observe); };
        observe.relevant = never;
        v.emplace_back("observe.sites", observe);

        v.emplace_back("run.replicates", number_field(&C::replicates, [](const C& c) {
                           return c.experiment != ExperimentKind::ode;
                       }));
        Field seed;
        seed.read = [](C& c, const std::string& text, std::string& why) {
            std::uint64_t s = 0;
            if (!parse_int(text, s))
            {
                why = "expected a nonnegative 64-bit integer, got '" + text + "'";
                return false;
            }
            c.seed = s;
            return true;
        };
        seed.write = [](const C& c) { return c.seed ? std::to_string(*c.seed) : std::string(); };
        seed.relevant = never;
        v.emplace_back("run.seed", seed);
        v.emplace_back("run.parallel", number_field(&C::parallel, never));
        v.emplace_back("output.prefix", string_field(&C::output_prefix, always));

        v.emplace_back("ode.u1", number_field(&C::ode_u1, is(ExperimentKind::ode)));
        v.emplace_back("ode.u2", number_field(&C::ode_u2, is(ExperimentKind::ode)));
        v.emplace_back("ode.dt", number_field(&C::ode_dt, is(ExperimentKind::ode)));

        v.emplace_back("critical.kind", string_field(&C::critical_kind, is(ExperimentKind::critical)));
        v.emplace_back("critical.lo", number_field(&C::critical_lo, is(ExperimentKind::critical)));
        v.emplace_back("critical.hi", number_field(&C::critical_hi, is(ExperimentKind::critical)));
        v.emplace_back("critical.tolerance", number_field(&C::critical_tolerance, is(ExperimentKind::critical)));
        v.emplace_back("critical.window_fraction",
                       number_field(&C::critical_window_fraction, [](const C& c) {
                           return c.experiment == ExperimentKind::critical && c.critical_kind == "lambda_cc";
                       }));

        v.emplace_back("regime.lambdas", double_list_field(&C::regime_lambdas, is(ExperimentKind::regime)));
        v.emplace_back("regime.recurrence_depth",
                       number_field(&C::regime_recurrence_depth, is(ExperimentKind::regime)));

        v.emplace_back("crowd_out.partner", string_field(&C::crowd_out_partner, never));
        v.emplace_back("sweep.lambda1", double_list_field(&C::sweep_lambda1, never));
        return v;
    }();
    return fields;
}

const Field* find_field(const std::string& key)
{
    for (const auto& [name, field] : schema())
        if (name == key)
            return &field;
    return nullptr;
}

void check_site(const Topology& topo, const std::string& key, const std::string& name,
                std::vector<std::string>& problems)
{
    if (name.empty())
        return;
    try
    {
        (void)topo.parse_site(name);
    }
    catch (const std::exception& e)
    {
        problems.push_back(key + ": " + e.what());
    }
}

/// Every constraint violation, skipping keys that already failed to parse.
std::vector<std::string> constraint_problems(const ExperimentConfig& c, const std::set<std::string>& bad)
{
    std::vector<std::string> p;
    const auto ok = [&](const char* key) { return bad.count(key) == 0; };
    const auto need = [&](const char* key, bool cond, const std::string& why) {
        if (ok(key) && !cond)
            p.push_back(std::string(key) + ": " + why);
    };

    need("params.lambda1", c.lambda1 >= 0.0, "must be nonnegative (infection rates are >= 0)");
    need("params.lambda2", c.lambda2 >= 0.0, "must be nonnegative (infection rates are >= 0)");
    need("params.delta1", c.delta1 > 0.0, "must be positive (recovery rates are > 0)");
    need("params.delta2", c.delta2 > 0.0, "must be positive (recovery rates are > 0)");
    need("params.t_max", c.t_max > 0.0, "must be positive");
    if (ok("params.sample_times"))
    {
        need("params.sample_times", std::is_sorted(c.sample_times.begin(), c.sample_times.end()),
             "must be sorted in increasing order");
        need("params.sample_times",
             std::all_of(c.sample_times.begin(), c.sample_times.end(),
                         [&](double t) { return t >= 0.0 && t <= c.t_max; }),
             "every sample time must lie in [0, params.t_max]");
    }
    need("run.replicates", c.replicates >= 1, "must be at least 1");
    need("output.prefix", !c.output_prefix.empty(), "must not be empty");
    if (ok("sweep.lambda1"))
    {
        need("sweep.lambda1",
             std::all_of(c.sweep_lambda1.begin(), c.sweep_lambda1.end(), [](double l) { return l >= 0.0; }),
             "every value must be nonnegative (infection rates are >= 0)");
        need("sweep.lambda1", c.sweep_lambda1.empty() || allows_sweep(c.experiment),
             "sweeps are supported for simulate, survival, coexist and oracle-check experiments");
    }

    if (c.experiment == ExperimentKind::ode)
    {
        need("ode.u1", c.ode_u1 >= 0.0, "must be nonnegative");
        need("ode.u2", c.ode_u2 >= 0.0, "must be nonnegative");
        if (ok("ode.u1") && ok("ode.u2") && c.ode_u1 + c.ode_u2 > 1.0)
            p.push_back("ode.u1 + ode.u2: must not exceed 1 (densities lie in the simplex u0 + u1 + u2 = 1)");
        need("ode.dt", c.ode_dt > 0.0, "must be positive");
        if (ok("ode.dt") && ok("params.t_max") && c.ode_dt > 0.0 && c.t_max / c.ode_dt > 1e8)
            p.push_back("ode.dt: more than 1e8 steps up to params.t_max, use a larger step");
        return p;
    }

    // Topology-dependent checks.
    std::optional<Topology> topo;
    if (ok("topology.kind") && ok("topology.d") && ok("topology.extent"))
    {
        try
        {
            topo = c.topology();
        }
        catch (const std::exception& e)
        {
            p.push_back(std::string("topology: ") + e.what());
        }
    }

    if (uses_init(c.experiment))
    {
        static const std::set<std::string> init_kinds = {"single", "product", "split", "pair"};
        need("init.kind", init_kinds.count(c.init_kind) == 1,
             "unknown init kind '" + c.init_kind + "' (expected single, product, split or pair)");
        if (c.init_kind == "single")
            need("init.strain", c.init_strain == 1 || c.init_strain == 2, "must be 1 or 2");
        if (c.init_kind == "product")
        {
            need("init.p1", c.init_p1 >= 0.0 && c.init_p1 <= 1.0, "must lie in [0, 1]");
            need("init.p2", c.init_p2 >= 0.0 && c.init_p2 <= 1.0, "must lie in [0, 1]");
            if (ok("init.p1") && ok("init.p2") && c.init_p1 + c.init_p2 > 1.0)
                p.push_back("init.p1 + init.p2: must not exceed 1 (site densities lie in the simplex)");
        }
        if (topo)
        {
            if (c.init_kind == "split" && !topo->is_tree())
                p.push_back("init.kind: split needs topology.kind = tree");
            check_site(*topo, "init.site", c.init_site, p);
            check_site(*topo, "init.site1", c.init_site1, p);
            check_site(*topo, "init.site2", c.init_site2, p);
            if (c.init_kind == "pair" && ok("init.site1") && ok("init.site2"))
            {
                try
                {
                    (void)c.init_spec(*topo).realize(*topo, 0);
                }
                catch (const std::exception& e)
                {
                    p.push_back(std::string("init.site1/init.site2: ") + e.what());
                }
            }
        }
    }
    if (topo && ok("observe.sites"))
        for (const auto& s : c.observe)
            check_site(*topo, "observe.sites", s, p);

    switch (c.experiment)
    {
    case ExperimentKind::critical:
        need("critical.kind", c.critical_kind == "lambda_c" || c.critical_kind == "lambda_cc",
             "must be lambda_c or lambda_cc");
        need("critical.lo", c.critical_lo >= 0.0, "must be nonnegative");
        if (ok("critical.lo") && ok("critical.hi") && !(c.critical_lo < c.critical_hi))
            p.push_back("critical.hi: must exceed critical.lo");
        need("critical.tolerance", c.critical_tolerance > 0.0, "must be positive");
        need("critical.window_fraction", c.critical_window_fraction > 0.0 && c.critical_window_fraction <= 1.0,
             "must lie in (0, 1]");
        break;
    case ExperimentKind::regime:
        if (topo && !topo->is_tree())
            p.push_back("topology.kind: regime classification needs a tree");
        need("regime.lambdas", !c.regime_lambdas.empty(), "must list at least one value");
        need("regime.lambdas",
             std::all_of(c.regime_lambdas.begin(), c.regime_lambdas.end(), [](double l) { return l >= 0.0; }),
             "every value must be nonnegative (infection rates are >= 0)");
        need("regime.recurrence_depth", c.regime_recurrence_depth >= 1, "must be at least 1");
        break;
    case ExperimentKind::coexist:
        if (ok("init.kind") && !c.init_spec_may_have_both())
            p.push_back("init.kind: coexistence needs an initial configuration with both strains");
        break;
    case ExperimentKind::crowd_out:
        if (topo && topo->is_tree())
            p.push_back("topology.kind: crowd-out experiments run on a torus or a path");
        need("params.sample_times", !c.sample_times.empty(), "crowd-out needs at least one sample time");
        if (topo)
            check_site(*topo, "crowd_out.partner", c.crowd_out_partner, p);
        break;
    case ExperimentKind::oracle_check:
        if (topo && topo->site_count() > kOracleMaxSites)
            p.push_back("topology: the exact oracle handles at most " + std::to_string(kOracleMaxSites) +
                        " sites, " + topo->describe() + " has " + to_string(topo->site_count()));
        break;
    default:
        break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Running

/// Tracks written files so that a failed run can clean up after itself.
class OutputSet
{
public:
    explicit OutputSet(std::string prefix) : prefix_(std::move(prefix)) {}

    void write(const std::string& suffix, const std::string& text)
    {
        const std::string path = prefix_ + "." + suffix;
        written_.push_back(path);
        write_text_file(path, text);
        files_.push_back({path, sha256_hex(text), text.size()});
    }

    void remove_all() noexcept
    {
        for (const auto& path : written_)
        {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        }
    }

    const std::vector<OutputFile>& files() const { return files_; }
    const std::string& prefix() const { return prefix_; }

private:
    std::string prefix_;
    std::vector<std::string> written_;
    std::vector<OutputFile> files_;
};

struct RunContext
{
    const ExperimentConfig& config;
    OutputSet& out;
    EstimatorOptions options;
    std::uint64_t boundary_contacts = 0;
    std::uint64_t boundary_replicates = 0;

    void count_boundary(const EstimateCI& ci)
    {
        boundary_contacts += ci.boundary_contacts;
        boundary_replicates += ci.replicates;
    }
};

std::vector<double> lambda_grid(const ExperimentConfig& c)
{
    return c.sweep_lambda1.empty() ? std::vector<double>{c.lambda1} : c.sweep_lambda1;
}

/// Seed of sweep entry k: the master seed itself without a sweep.
std::uint64_t sub_seed(const ExperimentConfig& c, std::size_t k)
{
    return c.sweep_lambda1.empty() ? c.master_seed() : derive_seed(c.master_seed(), k + 1);
}

ordered_json estimate_record(const std::string& quantity, const ExperimentConfig& c, const Topology& topo,
                             const SimParams& p, const EstimateCI& ci, std::uint64_t seed, const std::string& proxy)
{
    ordered_json j;
    j["quantity"] = quantity;
    j["topology"] = to_json(topo);
    j["params"] = to_json(p, topo);
    j["init"] = c.init_spec(topo).describe();
    j["point"] = ci.point;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["successes"] = ci.successes;
    j["replicates"] = ci.replicates;
    j["seed"] = seed;
    j["proxy"] = proxy;
    j["conditioning"] = ci.conditioning;
    j["boundary_contacts"] = ci.boundary_contacts;
    j["capped"] = ci.capped;
    return j;
}

void run_ode(RunContext& ctx)
{
    const auto& c = ctx.config;
    const meanfield::StrainParams s1{c.lambda1, c.delta1};
    const meanfield::StrainParams s2{c.lambda2, c.delta2};
    const meanfield::MeanFieldState init{c.ode_u1, c.ode_u2, 0.0};
    const auto traj = meanfield::integrate(s1, s2, init, c.t_max, c.ode_dt);

    ordered_json header;
    header["strain1"] = to_json(s1);
    header["strain2"] = to_json(s2);
    header["init"] = {{"u1", c.ode_u1}, {"u2", c.ode_u2}};
    header["dt"] = c.ode_dt;
    header["method"] = traj.method;
    ctx.out.write("trajectory.csv", trajectory_csv(traj, header));

    ordered_json summary = header;
    summary["t_end"] = c.t_max;
    summary["verdict"] = meanfield::to_string(meanfield::predict_winner(s1, s2));
    summary["endemic_equilibrium1"] = meanfield::endemic_equilibrium(s1);
    summary["endemic_equilibrium2"] = meanfield::endemic_equilibrium(s2);
    if (s1.lambda > s1.delta)
        summary["invasion_rate_of_2_into_1"] = meanfield::invasion_growth_rate(s1, s2);
    if (s2.lambda > s2.delta)
        summary["invasion_rate_of_1_into_2"] = meanfield::invasion_growth_rate(s2, s1);
    const auto& last = traj.samples.back();
    summary["final"] = {{"t", last.time}, {"u0", last.u0()}, {"u1", last.u1}, {"u2", last.u2}};
    ctx.out.write("summary.json", summary.dump(2) + "\n");
}

void run_simulate(RunContext& ctx)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const InitSpec init = c.init_spec(topo);
    const auto lambdas = lambda_grid(c);

    std::ostringstream samples;
    samples << "lambda1,replicate,time,count1,count2,boundary_contact";
    const SimParams base = c.sim_params(topo);
    for (const auto& site : base.observe)
        samples << ",obs:" << topo.site_name(site);
    samples << '\n';
    std::ostringstream finals;
    finals << "lambda1,replicate,site,state\n";
    ordered_json runs = ordered_json::array();

    for (std::size_t k = 0; k < lambdas.size(); ++k)
    {
        SimParams p = base;
        p.lambda1 = lambdas[k];
        const std::uint64_t master = sub_seed(c, k);
        const auto results = parallel_map<SimResult>(0, c.replicates, ctx.options.parallelism, [&](std::uint64_t i) {
            const auto seed = replicate_seed(master, i);
            return run(topo, init.realize(topo, seed), p, seed);
        });
        for (std::size_t i = 0; i < results.size(); ++i)
        {
            const auto& r = results[i];
            const std::string lead = format_double(p.lambda1) + "," + std::to_string(i) + ",";
            for (const auto& s : r.samples)
            {
                samples << lead << format_double(s.time) << ',' << s.count1 << ',' << s.count2 << ','
                        << (s.boundary_contact ? 1 : 0);
                for (const auto st : s.observed)
                    samples << ',' << as_int(st);
                samples << '\n';
            }
            for (const auto& [site, st] : r.final_config)
                finals << lead << topo.site_name(site) << ',' << as_int(st) << '\n';
            ordered_json j;
            j["lambda1"] = p.lambda1;
            j["replicate"] = i;
            j.update(to_json(r, topo));
            runs.push_back(std::move(j));
            ctx.boundary_contacts += r.boundary_contact ? 1 : 0;
            ctx.boundary_replicates += 1;
        }
    }
    ctx.out.write("samples.csv", samples.str());
    ctx.out.write("final.csv", finals.str());
    ordered_json doc;
    doc["params"] = to_json(base, topo);
    doc["init"] = init.describe();
    doc["runs"] = std::move(runs);
    ctx.out.write("runs.json", doc.dump(2) + "\n");
}

void run_probability_sweep(RunContext& ctx, const std::string& quantity, const std::string& proxy,
                           const std::function<EstimateCI(const Topology&, const InitSpec&, const SimParams&,
                                                          std::uint64_t)>& estimate)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const InitSpec init = c.init_spec(topo);
    const auto lambdas = lambda_grid(c);
    std::ostringstream csv;
    csv << "lambda1,point,lower,upper,successes,replicates,boundary_fraction,capped\n";
    ordered_json records = ordered_json::array();
    for (std::size_t k = 0; k < lambdas.size(); ++k)
    {
        SimParams p = c.sim_params(topo);
        p.lambda1 = lambdas[k];
        const auto seed = sub_seed(c, k);
        const EstimateCI ci = estimate(topo, init, p, seed);
        ctx.count_boundary(ci);
        csv << format_double(p.lambda1) << ',' << format_double(ci.point) << ',' << format_double(ci.lower) << ','
            << format_double(ci.upper) << ',' << ci.successes << ',' << ci.replicates << ','
            << format_double(ci.boundary_fraction()) << ',' << ci.capped << '\n';
        records.push_back(estimate_record(quantity, c, topo, p, ci, seed, proxy));
    }
    ctx.out.write(quantity + ".csv", csv.str());
    ctx.out.write("estimates.json", records.dump(2) + "\n");
}

void run_critical(RunContext& ctx)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const InitSpec init = c.init_spec(topo);
    const SimParams base = c.sim_params(topo);
    CriticalSearch search;
    search.lo = c.critical_lo;
    search.hi = c.critical_hi;
    search.tolerance = c.critical_tolerance;
    search.replicates = c.replicates;
    search.master_seed = c.master_seed();
    search.window_fraction = c.critical_window_fraction;

    const CriticalEstimate est = c.critical_kind == "lambda_cc"
                                     ? estimate_lambda_cc(topo, init, base, search, ctx.options)
                                     : estimate_lambda_c(topo, init, base, search, ctx.options);
    std::ostringstream csv;
    csv << "step,lambda,alive,low_confidence,point,lower,upper,replicates\n";
    for (std::size_t i = 0; i < est.trace.size(); ++i)
    {
        const auto& pr = est.trace[i];
        ctx.count_boundary(pr.estimate);
        csv << i << ',' << format_double(pr.lambda) << ',' << (pr.alive ? 1 : 0) << ',' << (pr.low_confidence ? 1 : 0)
            << ',' << format_double(pr.estimate.point) << ',' << format_double(pr.estimate.lower) << ','
            << format_double(pr.estimate.upper) << ',' << pr.estimate.replicates << '\n';
    }
    ctx.out.write("trace.csv", csv.str());
    ordered_json j = to_json(est);
    j["topology"] = to_json(topo);
    j["params"] = to_json(base, topo);
    j["init"] = init.describe();
    j["seed"] = c.master_seed();
    j["proxy"] = c.critical_kind == "lambda_cc"
                     ? "origin infected during the late window of [0, t_max]"
                     : "infected set nonempty at t_max";
    ctx.out.write("critical.json", j.dump(2) + "\n");
}

void run_regime(RunContext& ctx)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const SimParams base = c.sim_params(topo);
    RegimeOptions ro;
    ro.recurrence_depth = c.regime_recurrence_depth;
    std::ostringstream csv;
    csv << "lambda,classification,survival,survival_lower,survival_upper,recurrence,recurrence_lower,"
           "recurrence_upper,boundary_fraction\n";
    ordered_json arr = ordered_json::array();
    for (std::size_t k = 0; k < c.regime_lambdas.size(); ++k)
    {
        const auto seed = derive_seed(c.master_seed(), k + 1);
        const RegimeVerdict v = classify_regime(topo, c.regime_lambdas[k], base, c.replicates, seed, ro, ctx.options);
        ctx.count_boundary(v.survival);
        csv << format_double(v.lambda) << ',' << to_string(v.classification) << ','
            << format_double(v.survival.point) << ',' << format_double(v.survival.lower) << ','
            << format_double(v.survival.upper) << ',' << format_double(v.recurrence.point) << ','
            << format_double(v.recurrence.lower) << ',' << format_double(v.recurrence.upper) << ','
            << format_double(v.survival.boundary_fraction()) << '\n';
        ordered_json j = to_json(v);
        j["seed"] = seed;
        arr.push_back(std::move(j));
    }
    ctx.out.write("regimes.csv", csv.str());
    ordered_json doc;
    doc["topology"] = to_json(topo);
    doc["params"] = to_json(base, topo);
    doc["verdicts"] = std::move(arr);
    ctx.out.write("regimes.json", doc.dump(2) + "\n");
}

SiteId crowd_out_partner(const ExperimentConfig& c, const Topology& topo)
{
    if (!c.crowd_out_partner.empty())
        return topo.parse_site(c.crowd_out_partner);
    if (topo.kind() == TopologyKind::path)
        return topo.parse_site(std::to_string(topo.extent() - 1));
    std::vector<int> coords(static_cast<std::size_t>(topo.d()), 0);
    coords[0] = topo.extent() / 2;
    return topo.site_at(coords);
}

void run_crowd_out(RunContext& ctx)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const InitSpec init = c.init_spec(topo);
    SimParams p = c.sim_params(topo);
    const SiteId x = c.init_site.empty() ? topo.origin() : topo.parse_site(c.init_site);
    const SiteId y = crowd_out_partner(c, topo);
    p.observe = {x, y};
    p.max_infected = 0;
    const auto records = run_ensemble(topo, init, p, c.replicates, c.master_seed(), ctx.options);
    for (const auto& r : records)
        ctx.boundary_contacts += r.boundary_contact ? 1 : 0;
    ctx.boundary_replicates += records.size();

    const auto curve = crowd_out_from(records, 0);
    const auto pair = pair_coexistence_from(records, 0, 1);
    ctx.out.write("crowd_out.csv", crowd_out_csv(curve));

    std::ostringstream csv;
    csv << "time,point,lower,upper,replicates\n";
    for (std::size_t k = 0; k < pair.size(); ++k)
        csv << format_double(p.sample_times[k]) << ',' << format_double(pair[k].point) << ','
            << format_double(pair[k].lower) << ',' << format_double(pair[k].upper) << ',' << pair[k].replicates
            << '\n';
    ctx.out.write("pair.csv", csv.str());

    ordered_json j;
    j["topology"] = to_json(topo);
    j["params"] = to_json(p, topo);
    j["init"] = init.describe();
    j["seed"] = c.master_seed();
    j["site_x"] = topo.site_name(x);
    j["site_y"] = topo.site_name(y);
    j["conditioned_replicates"] = curve.front().strain1.replicates;
    j["final_crowd_out"] = {{"strain1", to_json(curve.back().strain1)}, {"strain2", to_json(curve.back().strain2)}};
    j["final_pair_coexistence"] = to_json(pair.back());
    ctx.out.write("summary.json", j.dump(2) + "\n");
}

void run_oracle_check(RunContext& ctx)
{
    const auto& c = ctx.config;
    const Topology topo = c.topology();
    const InitSpec init = c.init_spec(topo);
    const auto lambdas = lambda_grid(c);
    std::ostringstream csv;
    csv << "lambda1,state,exact,empirical\n";
    ordered_json arr = ordered_json::array();
    for (std::size_t k = 0; k < lambdas.size(); ++k)
    {
        SimParams p = c.sim_params(topo);
        p.lambda1 = lambdas[k];
        const auto seed = sub_seed(c, k);
        const Configuration start = init.realize(topo, seed);
        const auto exact = exact_small_graph_distribution(topo, start, p, c.t_max);
        const auto emp = empirical_distribution(topo, start, p, c.t_max, c.replicates, seed, ctx.options);
        for (std::size_t s = 0; s < emp.size(); ++s)
        {
            std::string digits;
            auto idx = s;
            for (std::size_t site = 0; site < exact.sites.size(); ++site, idx /= 3)
                digits += static_cast<char>('0' + idx % 3);
            csv << format_double(p.lambda1) << ',' << digits << ',' << format_double(exact.probabilities[s]) << ','
                << format_double(emp[s]) << '\n';
        }
        ordered_json j;
        j["lambda1"] = p.lambda1;
        j["total_variation"] = total_variation(exact.probabilities, emp);
        j["truncation_error"] = exact.truncation_error;
        j["uniformization_terms"] = exact.terms;
        j["replicates"] = c.replicates;
        j["seed"] = seed;
        arr.push_back(std::move(j));
    }
    ctx.out.write("oracle.csv", csv.str());
    ordered_json doc;
    doc["topology"] = to_json(topo);
    doc["params"] = to_json(c.sim_params(topo), topo);
    doc["init"] = init.describe();
    doc["state_encoding"] = "one digit per site in canonical order: 0 susceptible, 1 strain 1, 2 strain 2";
    doc["checks"] = std::move(arr);
    ctx.out.write("summary.json", doc.dump(2) + "\n");
}

ordered_json config_as_json(const ExperimentConfig& c)
{
    ordered_json j;
    std::istringstream is(serialize_config(c));
    std::string line;
    while (std::getline(is, line))
    {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            j[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentKind kind)
{
    for (const auto& [name, k] : kind_names())
        if (k == kind)
            return name;
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& text)
{
    const auto it = kind_names().find(text);
    if (it == kind_names().end())
        return std::nullopt;
    return it->second;
}

namespace {

std::string join_problems(const std::vector<std::string>& problems)
{
    std::string msg = "invalid experiment configuration:";
    for (const auto& p : problems)
        msg += "\n  " + p;
    return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join_problems(problems)), problems_(std::move(problems))
{
}

bool ExperimentConfig::init_spec_may_have_both() const
{
    if (init_kind == "split" || init_kind == "pair")
        return true;
    if (init_kind == "product")
        return init_p1 > 0.0 && init_p2 > 0.0;
    return false;
}

Topology ExperimentConfig::topology() const
{
    if (topology_kind == "torus")
        return Topology::torus(topology_d, topology_extent);
    if (topology_kind == "tree")
        return Topology::tree(topology_d, topology_extent);
    if (topology_kind == "path")
    {
        if (topology_d != 1)
            throw TopologyError("path topology needs d = 1");
        return Topology::path_graph(topology_extent);
    }
    throw TopologyError("unknown topology kind '" + topology_kind + "' (expected torus, tree or path)");
}

SimParams ExperimentConfig::sim_params(const Topology& topo) const
{
    SimParams p;
    p.lambda1 = lambda1;
    p.lambda2 = lambda2;
    p.delta1 = delta1;
    p.delta2 = delta2;
    p.t_max = t_max;
    p.sample_times = sample_times;
    for (const auto& s : observe)
        p.observe.push_back(topo.parse_site(s));
    p.max_infected = max_infected;
    return p;
}

InitSpec ExperimentConfig::init_spec(const Topology& topo) const
{
    const auto site_or = [&](const std::string& name) -> std::optional<SiteId> {
        if (name.empty())
            return std::nullopt;
        return topo.parse_site(name);
    };
    if (init_kind == "single")
        return InitSpec::single(init_strain == 2 ? Strain::two : Strain::one, site_or(init_site));
    if (init_kind == "product")
        return InitSpec::product(init_p1, init_p2);
    if (init_kind == "split")
        return InitSpec::split();
    if (init_kind == "pair")
        return InitSpec::pair(site_or(init_site1), site_or(init_site2));
    throw std::invalid_argument("unknown init kind '" + init_kind + "'");
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    std::vector<std::string> problems;
    std::set<std::string> bad;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw))
    {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
        {
            problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Field* field = find_field(key);
        if (!field)
        {
            problems.push_back(key + ": unknown key (line " + std::to_string(line_no) + ")");
            continue;
        }
        if (!seen.insert(key).second)
        {
            problems.push_back(key + ": given more than once (line " + std::to_string(line_no) + ")");
            bad.insert(key);
            continue;
        }
        std::string why;
        if (!field->read(c, value, why))
        {
            problems.push_back(key + ": " + why);
            bad.insert(key);
        }
    }
    if (seen.count("experiment") == 0)
    {
        problems.push_back("experiment: required key is missing");
        bad.insert("experiment");
    }
    if (bad.count("experiment") == 0)
        for (auto& p : constraint_problems(c, bad))
            problems.push_back(std::move(p));
    if (!problems.empty())
        throw ConfigError(std::move(problems));
    return c;
}

void validate_config(const ExperimentConfig& config)
{
    auto problems = constraint_problems(config, {});
    if (!problems.empty())
        throw ConfigError(std::move(problems));
}

std::string serialize_config(const ExperimentConfig& config)
{
    const ExperimentConfig defaults;
    std::ostringstream os;
    for (const auto& [key, field] : schema())
    {
        const std::string value = field.write(config);
        if (field.relevant(config) || value != field.write(defaults) || (key == "run.seed" && config.seed))
            os << key << " = " << value << '\n';
    }
    return os.str();
}

std::vector<std::string> preset_names()
{
    return {"ode-crowd-out", "lattice-crowd-out", "tree-coexistence", "tree-regimes", "oracle-check"};
}

ExperimentConfig preset(const std::string& name)
{
    ExperimentConfig c;
    c.seed = 20240601;
    c.output_prefix = "out/" + name;
    if (name == "ode-crowd-out")
    {
        c.experiment = ExperimentKind::ode;
        c.lambda1 = 2.0;
        c.lambda2 = 3.0;
        c.t_max = 50.0;
        c.ode_u1 = 0.01;
        c.ode_u2 = 0.6667;
        c.ode_dt = 1e-3;
    }
    else if (name == "lattice-crowd-out")
    {
        c.experiment = ExperimentKind::crowd_out;
        c.topology_kind = "torus";
        c.topology_d = 1;
        c.topology_extent = 200;
        c.lambda1 = 2.0;
        c.lambda2 = 3.0;
        c.t_max = 200.0;
        c.sample_times = {1, 2, 5, 10, 20, 50, 100, 150, 200};
        c.init_kind = "product";
        c.init_p1 = 0.25;
        c.init_p2 = 0.25;
        c.replicates = 2000;
    }
    else if (name == "tree-coexistence")
    {
        c.experiment = ExperimentKind::coexist;
        c.topology_kind = "tree";
        c.topology_d = 8;
        c.topology_extent = 40;
        c.lambda1 = 0.155;
        c.lambda2 = 0.165;
        c.t_max = 100.0;
        c.max_infected = 100;
        c.init_kind = "split";
        c.replicates = 2000;
    }
    else if (name == "tree-regimes")
    {
        c.experiment = ExperimentKind::regime;
        c.topology_kind = "tree";
        c.topology_d = 8;
        c.topology_extent = 40;
        c.t_max = 200.0;
        c.max_infected = 100;
        c.regime_lambdas = {0.05, 0.16, 0.5};
        c.regime_recurrence_depth = 4;
        c.replicates = 400;
    }
    else if (name == "oracle-check")
    {
        c.experiment = ExperimentKind::oracle_check;
        c.topology_kind = "path";
        c.topology_d = 1;
        c.topology_extent = 3;
        c.lambda1 = 1.0;
        c.lambda2 = 0.0;
        c.t_max = 2.0;
        c.init_kind = "single";
        c.init_site = "1";
        c.replicates = 100000;
    }
    else
    {
        std::string known;
        for (const auto& n : preset_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ConfigError({"preset: unknown name '" + name + "' (known: " + known + ")"});
    }
    return c;
}

RunManifest run_experiment(const ExperimentConfig& config)
{
    validate_config(config);
    const auto started = std::chrono::steady_clock::now();
    OutputSet out(config.output_prefix);
    RunContext ctx{config, out, EstimatorOptions{config.parallel}};
    RunManifest m;
    m.config_text = serialize_config(config);
    m.tool_version = kToolVersion;
    m.parallelism = resolve_parallelism(config.parallel);
    m.seed = config.master_seed();
    m.manifest_path = config.output_prefix + ".manifest.json";
    try
    {
        switch (config.experiment)
        {
        case ExperimentKind::ode:
            run_ode(ctx);
            break;
        case ExperimentKind::simulate:
            run_simulate(ctx);
            break;
        case ExperimentKind::survival:
            run_probability_sweep(ctx, "survival", "infected set nonempty at t_max (or past the explosion cap)",
                                  [&](const Topology& t, const InitSpec& i, const SimParams& p, std::uint64_t s) {
                                      return survival_probability(t, i, p, config.replicates, s, ctx.options);
                                  });
            break;
        case ExperimentKind::coexist:
            run_probability_sweep(ctx, "coexistence", "both strains present at t_max (or both past the cap)",
                                  [&](const Topology& t, const InitSpec& i, const SimParams& p, std::uint64_t s) {
                                      return coexistence_probability(t, i, p, p.t_max, config.replicates, s,
                                                                     ctx.options);
                                  });
            break;
        case ExperimentKind::critical:
            run_critical(ctx);
            break;
        case ExperimentKind::regime:
            run_regime(ctx);
            break;
        case ExperimentKind::crowd_out:
            run_crowd_out(ctx);
            break;
        case ExperimentKind::oracle_check:
            run_oracle_check(ctx);
            break;
        }

        m.outputs = out.files();
        m.boundary_contacts = ctx.boundary_contacts;
        m.boundary_replicates = ctx.boundary_replicates;
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        ordered_json j;
        j["tool"] = "strainwars";
        j["tool_version"] = m.tool_version;
        j["experiment"] = to_string(config.experiment);
        j["config"] = config_as_json(config);
        j["config_text"] = m.config_text;
        j["seed"] = m.seed;
        j["parallelism"] = m.parallelism;
        j["wall_seconds"] = m.wall_seconds;
        j["boundary_contact"] = {
            {"replicates", m.boundary_replicates},
            {"contacts", m.boundary_contacts},
            {"fraction", m.boundary_replicates ? static_cast<double>(m.boundary_contacts) /
                                                     static_cast<double>(m.boundary_replicates)
                                               : 0.0}};
        ordered_json files = ordered_json::array();
        for (const auto& f : m.outputs)
            files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        j["outputs"] = std::move(files);
        write_text_file(m.manifest_path, j.dump(2) + "\n");
    }
    catch (...)
    {
        out.remove_all();
        std::error_code ec;
        std::filesystem::remove(m.manifest_path, ec);
        throw;
    }
    return m;
}

}  // namespace strainwars
