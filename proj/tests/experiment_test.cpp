#include "strainwars/experiment.hpp"
#include "strainwars/output.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace strainwars;
namespace fs = std::filesystem;

namespace {

const char* kMinimalOde = R"(# mean-field run
experiment = ode
params.lambda1 = 2
params.lambda2 = 3
params.t_max = 10
ode.u1 = 0.01
ode.u2 = 0.5
)";

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("strainwars_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> problems_of(const std::string& text)
{
    try
    {
        parse_config(text);
    }
    catch (const ConfigError& e)
    {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& a, const std::string& b)
{
    for (const auto& p : problems)
        if (p.find(a) != std::string::npos && p.find(b) != std::string::npos)
            return true;
    return false;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(STRAINWARS_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalOdeRoundTrips)
{
    const auto c = parse_config(kMinimalOde);
    EXPECT_EQ(c.experiment, ExperimentKind::ode);
    EXPECT_EQ(c.lambda2, 3.0);
    const std::string text = serialize_config(c);
    const auto again = parse_config(text);
    EXPECT_EQ(again, c);
    EXPECT_EQ(serialize_config(again), text);
}

TEST(Config, PresetsRoundTrip)
{
    for (const auto& name : preset_names())
    {
        const auto c = preset(name);
        EXPECT_NO_THROW(validate_config(c)) << name;
        EXPECT_EQ(parse_config(serialize_config(c)), c) << name;
    }
    EXPECT_THROW(preset("no-such-scenario"), ConfigError);
}

TEST(Config, PinnedPresetValues)
{
    const auto ode = preset("ode-crowd-out");
    EXPECT_EQ(ode.lambda1, 2.0);
    EXPECT_EQ(ode.lambda2, 3.0);
    EXPECT_EQ(ode.delta1, 1.0);
    EXPECT_EQ(ode.ode_u1, 0.01);
    EXPECT_EQ(ode.ode_u2, 0.6667);
    const auto oracle = preset("oracle-check");
    EXPECT_EQ(oracle.topology().describe(), "path n=3");
    EXPECT_EQ(oracle.lambda1, 1.0);
    EXPECT_EQ(oracle.replicates, 100000u);
    const auto tree = preset("tree-coexistence");
    EXPECT_EQ(tree.topology().describe(), "tree d=8 R=40");
    EXPECT_EQ(tree.lambda1, 0.155);
    EXPECT_EQ(tree.lambda2, 0.165);
    EXPECT_EQ(tree.init_kind, "split");
}

TEST(Config, NegativeRateNamed)
{
    const auto p = problems_of("experiment = simulate\nparams.lambda1 = -1\n");
    EXPECT_TRUE(mentions(p, "params.lambda1", "nonnegative"));
}

TEST(Config, ProductSimplexViolation)
{
    const auto p = problems_of("experiment = simulate\ninit.kind = product\ninit.p1 = 0.6\ninit.p2 = 0.6\n");
    EXPECT_TRUE(mentions(p, "init.p1 + init.p2", "simplex"));
}

TEST(Config, ReportsEveryProblem)
{
    const auto p = problems_of(
        "experiment = simulate\nbogus.key = 1\nparams.t_max = soon\nparams.delta2 = 0\nrun.replicates = -3\n"
        "topology.kind = sphere\nno equals sign here\n");
    EXPECT_TRUE(mentions(p, "bogus.key", "unknown key"));
    EXPECT_TRUE(mentions(p, "params.t_max", "number"));
    EXPECT_TRUE(mentions(p, "params.delta2", "positive"));
    EXPECT_TRUE(mentions(p, "run.replicates", "integer"));
    EXPECT_TRUE(mentions(p, "topology", "sphere"));
    EXPECT_TRUE(mentions(p, "line 7", "key = value"));
    EXPECT_GE(p.size(), 6u);
}

TEST(Config, StructuralChecks)
{
    EXPECT_TRUE(mentions(problems_of("params.lambda1 = 1\n"), "experiment", "missing"));
    EXPECT_TRUE(mentions(problems_of("experiment = ode\nexperiment = ode\n"), "experiment", "more than once"));
    EXPECT_TRUE(mentions(problems_of("experiment = regime\nregime.lambdas = 0.1\n"), "topology.kind", "tree"));
    EXPECT_TRUE(mentions(problems_of("experiment = simulate\ninit.kind = split\n"), "init.kind", "tree"));
    EXPECT_TRUE(mentions(problems_of("experiment = oracle-check\ntopology.extent = 20\n"), "topology", "oracle"));
    EXPECT_TRUE(mentions(problems_of("experiment = critical\ncritical.lo = 2\ncritical.hi = 1\n"), "critical.hi",
                         "exceed"));
    EXPECT_TRUE(mentions(problems_of("experiment = critical\nsweep.lambda1 = 1, 2\n"), "sweep.lambda1",
                         "supported"));
    EXPECT_TRUE(mentions(problems_of("experiment = simulate\nobserve.sites = 0, 500\n"), "observe.sites",
                         "500"));
    EXPECT_TRUE(problems_of("experiment = simulate\nobserve.sites = 0, 50\nsweep.lambda1 = 1, 2.5\n").empty());
}

TEST(Output, FormatDoubleRoundTrips)
{
    for (double x : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.6667})
        EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(0.155), "0.155");
}

TEST(Output, Sha256)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, OdeWritesTrajectoryAndManifest)
{
    const auto dir = scratch_dir("ode");
    auto c = preset("ode-crowd-out");
    c.output_prefix = (dir / "ode").string();
    const auto m = run_experiment(c);
    ASSERT_EQ(m.outputs.size(), 2u);
    const auto traj = slurp(dir / "ode.trajectory.csv");
    EXPECT_EQ(traj.rfind("# {", 0), 0u);
    EXPECT_NE(traj.find("\nt,u0,u1,u2\n"), std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(m.manifest_path));
    EXPECT_EQ(manifest["outputs"].size(), 2u);
    for (const auto& f : manifest["outputs"])
        EXPECT_EQ(f["sha256"].get<std::string>(), sha256_hex(slurp(f["path"].get<std::string>())));
    EXPECT_EQ(manifest["tool_version"], kToolVersion);
    EXPECT_TRUE(manifest.contains("wall_seconds"));
    EXPECT_EQ(parse_config(manifest["config_text"].get<std::string>()), c);
}

TEST(Run, SimulateIsReproducibleAcrossParallelism)
{
    const auto dir = scratch_dir("sim");
    auto c = parse_config("experiment = simulate\ntopology.extent = 60\nparams.lambda1 = 2\nparams.lambda2 = 3\n"
                          "params.t_max = 20\nparams.sample_times = 1, 10, 20\ninit.kind = product\n"
                          "init.p1 = 0.2\ninit.p2 = 0.2\nrun.replicates = 12\nrun.seed = 5\n"
                          "observe.sites = 0, 30\nsweep.lambda1 = 1.5, 2\n");
    c.output_prefix = (dir / "a").string();
    c.parallel = 1;
    const auto a = run_experiment(c);
    c.output_prefix = (dir / "b").string();
    c.parallel = 3;
    const auto b = run_experiment(c);
    ASSERT_EQ(a.outputs.size(), b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i)
        EXPECT_EQ(a.outputs[i].sha256, b.outputs[i].sha256) << a.outputs[i].path;

    c.seed = 6;
    c.output_prefix = (dir / "c").string();
    const auto other = run_experiment(c);
    EXPECT_NE(other.outputs[0].sha256, a.outputs[0].sha256);
}

TEST(Run, FailedRunLeavesNoOutputs)
{
    const auto dir = scratch_dir("fail");
    // Strain 2 never survives without infections, so the crowd-out
    // conditioning event cannot occur and the run fails after setup.
    auto c = parse_config("experiment = crowd-out\ntopology.extent = 20\nparams.lambda2 = 0\n"
                          "params.t_max = 20\nparams.sample_times = 20\ninit.kind = product\n"
                          "init.p1 = 0.1\ninit.p2 = 0.1\nrun.replicates = 20\n");
    c.output_prefix = (dir / "x").string();
    EXPECT_THROW(run_experiment(c), EstimationError);
    EXPECT_TRUE(fs::is_empty(dir));
}

TEST(Cli, ExitCodes)
{
    const auto dir = scratch_dir("cli");
    const auto cfg = dir / "ode.cfg";
    std::ofstream(cfg) << kMinimalOde;
    EXPECT_EQ(run_cli("ode --config " + cfg.string() + " --out " + (dir / "o").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "o.trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir / "o.manifest.json"));

    // Subcommand does not match the config.
    EXPECT_EQ(run_cli("simulate --config " + cfg.string()), 2);

    const auto bad = dir / "bad.cfg";
    std::ofstream(bad) << "experiment = ode\nparams.lambda1 = -1\n";
    EXPECT_EQ(run_cli("ode --config " + bad.string()), 2);
    EXPECT_EQ(run_cli("ode --preset nope"), 2);

    const auto crit = dir / "crit.cfg";
    std::ofstream(crit) << "experiment = critical\ntopology.extent = 50\nparams.t_max = 30\n"
                           "critical.lo = 3\ncritical.hi = 4\nrun.replicates = 30\n";
    EXPECT_EQ(run_cli("critical --config " + crit.string() + " --out " + (dir / "c").string()), 3);
    EXPECT_FALSE(fs::exists(dir / "c.manifest.json"));
}

TEST(Cli, SeedPriority)
{
    const auto dir = scratch_dir("seed");
    const auto cfg = dir / "sim.cfg";
    std::ofstream(cfg) << "experiment = simulate\ntopology.extent = 30\nparams.lambda1 = 2\nparams.t_max = 5\n"
                          "run.replicates = 3\n";
    const auto seed_of = [&](const std::string& prefix) {
        const auto m = nlohmann::json::parse(slurp(dir / (prefix + ".manifest.json")));
        return m["seed"].get<std::uint64_t>();
    };
    ASSERT_EQ(run_cli("simulate --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
    EXPECT_EQ(seed_of("a"), 1u);
    ASSERT_EQ(std::system(("STRAINWARS_SEED=77 " + std::string(STRAINWARS_CLI) + " simulate --config " +
                           cfg.string() + " --out " + (dir / "b").string() + " > /dev/null")
                              .c_str()),
              0);
    EXPECT_EQ(seed_of("b"), 77u);
    ASSERT_EQ(std::system(("STRAINWARS_SEED=77 " + std::string(STRAINWARS_CLI) + " simulate --config " +
                           cfg.string() + " --seed 9 --out " + (dir / "c").string() + " > /dev/null")
                              .c_str()),
              0);
    EXPECT_EQ(seed_of("c"), 9u);
}
