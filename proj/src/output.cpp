#include "strainwars/output.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace strainwars {

using nlohmann::ordered_json;

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

ordered_json to_json(const Topology& topology)
{
    ordered_json j;
    switch (topology.kind())
    {
    case TopologyKind::torus:
        j["kind"] = "torus";
        break;
    case TopologyKind::tree:
        j["kind"] = "tree";
        break;
    case TopologyKind::path:
        j["kind"] = "path";
        break;
    }
    j["d"] = topology.d();
    j["extent"] = topology.extent();
    if (topology.neighbors_collapsed())
        j["neighbors_collapsed"] = true;
    return j;
}

ordered_json to_json(const SimParams& params, const Topology& topology)
{
    ordered_json j;
    j["lambda1"] = params.lambda1;
    j["lambda2"] = params.lambda2;
    j["delta1"] = params.delta1;
    j["delta2"] = params.delta2;
    j["t_max"] = params.t_max;
    j["sample_times"] = params.sample_times;
    ordered_json obs = ordered_json::array();
    for (const auto& s : params.observe)
        obs.push_back(topology.site_name(s));
    j["observe"] = obs;
    if (params.watch_from)
        j["watch_from"] = *params.watch_from;
    j["max_infected"] = params.max_infected;
    return j;
}

ordered_json to_json(const EstimateCI& ci)
{
    ordered_json j;
    j["point"] = ci.point;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["successes"] = ci.successes;
    j["replicates"] = ci.replicates;
    j["conditioning"] = ci.conditioning;
    j["boundary_contacts"] = ci.boundary_contacts;
    j["capped"] = ci.capped;
    return j;
}

ordered_json to_json(const CriticalEstimate& est)
{
    ordered_json j;
    j["kind"] = to_string(est.kind);
    j["lo"] = est.lo;
    j["hi"] = est.hi;
    j["initial_bracket"] = {est.initial_lo, est.initial_hi};
    ordered_json trace = ordered_json::array();
    for (const auto& p : est.trace)
    {
        ordered_json t;
        t["lambda"] = p.lambda;
        t["alive"] = p.alive;
        t["low_confidence"] = p.low_confidence;
        t["estimate"] = to_json(p.estimate);
        trace.push_back(std::move(t));
    }
    j["trace"] = std::move(trace);
    return j;
}

ordered_json to_json(const RegimeVerdict& verdict)
{
    ordered_json j;
    j["lambda"] = verdict.lambda;
    j["classification"] = to_string(verdict.classification);
    j["survival"] = to_json(verdict.survival);
    j["root_recurrence"] = to_json(verdict.recurrence);
    j["recurrence_depth"] = verdict.recurrence_depth;
    return j;
}

ordered_json to_json(const meanfield::StrainParams& s)
{
    return ordered_json{{"lambda", s.lambda}, {"delta", s.delta}};
}

ordered_json to_json(const SimResult& result, const Topology& topology)
{
    ordered_json j;
    j["seed"] = result.seed;
    j["stop"] = to_string(result.stop);
    j["elapsed"] = result.elapsed;
    j["events"] = result.events;
    j["final_count1"] = result.final_count1;
    j["final_count2"] = result.final_count2;
    j["peak_infected"] = result.peak_infected;
    j["boundary_contact"] = result.boundary_contact;
    j["samples_recorded"] = result.samples.size();
    if (!result.watch_hits.empty())
        j["watch_hits"] = result.watch_hits;
    j["topology"] = to_json(topology);
    return j;
}

std::string trajectory_csv(const meanfield::Trajectory& traj, const ordered_json& header)
{
    std::ostringstream os;
    os << "# " << header.dump() << "\n";
    os << "t,u0,u1,u2\n";
    for (const auto& s : traj.samples)
        os << format_double(s.time) << ',' << format_double(s.u0()) << ',' << format_double(s.u1) << ','
           << format_double(s.u2) << '\n';
    return os.str();
}

std::string samples_csv(const SimResult& result, const Topology& topology, const SimParams& params)
{
    std::ostringstream os;
    os << "time,count1,count2,boundary_contact";
    for (const auto& site : params.observe)
        os << ",obs:" << topology.site_name(site);
    os << '\n';
    for (const auto& s : result.samples)
    {
        os << format_double(s.time) << ',' << s.count1 << ',' << s.count2 << ',' << (s.boundary_contact ? 1 : 0);
        for (const auto st : s.observed)
            os << ',' << as_int(st);
        os << '\n';
    }
    return os.str();
}

std::string final_config_csv(const Configuration& config, const Topology& topology)
{
    std::ostringstream os;
    os << "site,state\n";
    for (const auto& [site, s] : config)
        os << topology.site_name(site) << ',' << as_int(s) << '\n';
    return os.str();
}

std::string crowd_out_csv(const std::vector<CrowdOutPoint>& curve)
{
    std::ostringstream os;
    os << "time,point1,lower1,upper1,point2,lower2,upper2,conditioned\n";
    for (const auto& p : curve)
        os << format_double(p.time) << ',' << format_double(p.strain1.point) << ','
           << format_double(p.strain1.lower) << ',' << format_double(p.strain1.upper) << ','
           << format_double(p.strain2.point) << ',' << format_double(p.strain2.lower) << ','
           << format_double(p.strain2.upper) << ',' << p.strain1.replicates << '\n';
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out)
        throw std::runtime_error("failed writing " + path);
}

std::string sha256_hex(const std::string& bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i)
    {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace strainwars
