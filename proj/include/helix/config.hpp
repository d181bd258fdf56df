#ifndef HELIX_CONFIG_HPP
#define HELIX_CONFIG_HPP

// Experiment configuration: INI-style text with [sim], [schedule],
// [experiment] and [gl] sections. Every key is optional (defaults below) but
// unknown sections or keys are rejected.

#include <helix/errors.hpp>
#include <helix/gl_field.hpp>
#include <helix/quench.hpp>
#include <helix/units.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace helix
{

enum class trajectory_mode
{
    physics,
    synthetic, // W drawn from a rounded Gaussian with sigma ~ tau_q^(-1/8)
};

struct gl_settings
{
    gl_params params;
    double dt = 0.05;
    std::size_t snapshots = 100;
};

struct experiment_config
{
    sim_params sim;              // sim.seed is the global seed
    quench_schedule schedule;    // tau_q is replaced per rate
    std::vector<double> tau_q;   // sorted ascending
    std::size_t runs_per_rate = 1;
    std::uint64_t snapshot_stride = 0; // steps between snapshots; 0 means 200 per trajectory
    std::size_t traces_per_rate = 1;   // runs per rate whose sampled trace is written
    double slip_threshold = 0.0;       // 0: 10% of the relaxed mean |A|
    double window_min = -std::numeric_limits<double>::infinity();
    double window_max = -4.0;
    trajectory_mode mode = trajectory_mode::physics;
    double synthetic_sigma0 = 20.0;    // sigma = sigma0 * tau_q^(-1/8)
    std::string output_dir = "helix_out";
    int workers = 1;
    gl_settings gl;

    void validate() const
    {
        schedule.validate(false);
        sim.validate(std::max(schedule.nu_start, schedule.nu_end));
        if(tau_q.empty()) throw config_error("experiment: tau_q list is empty");
        for(std::size_t i = 0; i < tau_q.size(); ++i)
        {
            if(!(tau_q[i] > 0.0)) throw config_error("experiment: tau_q values must be > 0");
            if(i > 0 && !(tau_q[i] > tau_q[i - 1])) throw config_error("experiment: tau_q values must be strictly increasing");
        }
        if(runs_per_rate < 1) throw config_error("experiment: runs_per_rate must be >= 1");
        if(workers < 1) throw config_error("experiment: workers must be >= 1");
        if(slip_threshold < 0.0) throw config_error("experiment: slip_threshold must be >= 0");
        if(!(window_max > window_min)) throw config_error("experiment: window_max must exceed window_min");
    }
};

namespace detail
{

inline std::string format_double(double v)
{
    if(std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline double parse_double(const std::string& key, const std::string& text)
{
    std::string t = text;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    if(t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if(t == "-inf") return -std::numeric_limits<double>::infinity();
    try
    {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if(pos != t.size()) throw std::invalid_argument(t);
        return v;
    }
    catch(const std::exception&)
    {
        throw config_error("config: '" + key + "' expects a number, got '" + text + "'");
    }
}

inline std::int64_t parse_int(const std::string& key, const std::string& text)
{
    const double v = parse_double(key, text);
    if(v != std::floor(v) || std::abs(v) > 9.0e15) throw config_error("config: '" + key + "' expects an integer");
    return static_cast<std::int64_t>(v);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text)
{
    try
    {
        std::size_t pos = 0;
        const auto v = std::stoull(text, &pos);
        if(pos != text.size()) throw std::invalid_argument(text);
        return v;
    }
    catch(const std::exception&)
    {
        throw config_error("config: '" + key + "' expects an unsigned integer, got '" + text + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    if(text == "true" || text == "1" || text == "yes") return true;
    if(text == "false" || text == "0" || text == "no") return false;
    throw config_error("config: '" + key + "' expects true/false");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while(std::getline(ss, item, ','))
    {
        if(item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

} // namespace detail

inline experiment_config parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try
    {
        pt::read_ini(in, tree);
    }
    catch(const pt::ini_parser_error& e)
    {
        throw config_error(std::string("config: ") + e.what());
    }

    const std::map<std::string, std::set<std::string>> allowed = {
        {"sim", {"n_ions", "eta", "kT", "dt", "seed"}},
        {"schedule", {"nu_start", "nu_end", "t_thermalize", "t_relax"}},
        {"experiment",
         {"tau_q", "ln_inv_rates", "runs_per_rate", "snapshot_stride", "traces_per_rate", "slip_threshold",
          "window_min", "window_max", "mode", "synthetic_sigma0", "output_dir", "workers"}},
        {"gl", {"h", "g", "eta", "noise_kT", "grid_points", "domain_length", "overdamped", "dt", "snapshots"}},
    };

    experiment_config c;
    bool have_tau = false;
    bool have_ln = false;
    for(const auto& [section, body] : tree)
    {
        const auto it = allowed.find(section);
        if(it == allowed.end())
        {
            throw config_error("config: unknown section [" + section + "]" + (body.empty() ? " (top-level keys are not allowed)" : ""));
        }
        for(const auto& [key, node] : body)
        {
            if(!it->second.contains(key)) throw config_error("config: unknown key '" + key + "' in [" + section + "]");
            const std::string v = node.get_value<std::string>();
            const std::string name = section + "." + key;
            using namespace detail;
            if(section == "sim")
            {
                if(key == "n_ions") c.sim.n_ions = static_cast<int>(parse_int(name, v));
                else if(key == "eta") c.sim.eta = parse_double(name, v);
                else if(key == "kT") c.sim.kT = parse_double(name, v);
                else if(key == "dt") c.sim.dt = parse_double(name, v);
                else if(key == "seed") c.sim.seed = parse_u64(name, v);
            }
            else if(section == "schedule")
            {
                if(key == "nu_start") c.schedule.nu_start = parse_double(name, v);
                else if(key == "nu_end") c.schedule.nu_end = parse_double(name, v);
                else if(key == "t_thermalize") c.schedule.t_thermalize = parse_double(name, v);
                else if(key == "t_relax") c.schedule.t_relax = parse_double(name, v);
            }
            else if(section == "experiment")
            {
                if(key == "tau_q")
                {
                    c.tau_q = parse_list(name, v);
                    have_tau = true;
                }
                else if(key == "ln_inv_rates")
                {
                    c.tau_q.clear();
                    for(double x : parse_list(name, v)) c.tau_q.push_back(std::exp(-x));
                    std::sort(c.tau_q.begin(), c.tau_q.end());
                    have_ln = true;
                }
                else if(key == "runs_per_rate") c.runs_per_rate = static_cast<std::size_t>(parse_int(name, v));
                else if(key == "snapshot_stride") c.snapshot_stride = static_cast<std::uint64_t>(parse_int(name, v));
                else if(key == "traces_per_rate") c.traces_per_rate = static_cast<std::size_t>(parse_int(name, v));
                else if(key == "slip_threshold") c.slip_threshold = parse_double(name, v);
                else if(key == "window_min") c.window_min = parse_double(name, v);
                else if(key == "window_max") c.window_max = parse_double(name, v);
                else if(key == "mode")
                {
                    if(v == "physics") c.mode = trajectory_mode::physics;
                    else if(v == "synthetic") c.mode = trajectory_mode::synthetic;
                    else throw config_error("config: experiment.mode must be physics or synthetic");
                }
                else if(key == "synthetic_sigma0") c.synthetic_sigma0 = parse_double(name, v);
                else if(key == "output_dir") c.output_dir = v;
                else if(key == "workers") c.workers = static_cast<int>(parse_int(name, v));
            }
            else if(section == "gl")
            {
                if(key == "h") c.gl.params.h = parse_double(name, v);
                else if(key == "g") c.gl.params.g = parse_double(name, v);
                else if(key == "eta") c.gl.params.eta = parse_double(name, v);
                else if(key == "noise_kT") c.gl.params.noise_kT = parse_double(name, v);
                else if(key == "grid_points") c.gl.params.grid_points = static_cast<int>(parse_int(name, v));
                else if(key == "domain_length") c.gl.params.domain_length = parse_double(name, v);
                else if(key == "overdamped") c.gl.params.overdamped = parse_bool(name, v);
                else if(key == "dt") c.gl.dt = parse_double(name, v);
                else if(key == "snapshots") c.gl.snapshots = static_cast<std::size_t>(parse_int(name, v));
            }
        }
    }
    if(have_tau && have_ln) throw config_error("config: give either experiment.tau_q or experiment.ln_inv_rates, not both");
    c.schedule.tau_q = c.tau_q.empty() ? c.schedule.tau_q : c.tau_q.front();
    try
    {
        c.validate();
    }
    catch(const domain_error& e)
    {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

inline experiment_config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if(!in) throw config_error("config: cannot open " + path.string());
    return parse_config(in);
}

namespace detail
{

inline std::string config_text(const experiment_config& c, bool include_runtime)
{
    using detail::format_double;
    std::ostringstream os;
    os << "[sim]\n"
       << "n_ions = " << c.sim.n_ions << "\n"
       << "eta = " << format_double(c.sim.eta) << "\n"
       << "kT = " << format_double(c.sim.kT) << "\n"
       << "dt = " << format_double(c.sim.dt) << "\n"
       << "seed = " << c.sim.seed << "\n\n"
       << "[schedule]\n"
       << "nu_start = " << format_double(c.schedule.nu_start) << "\n"
       << "nu_end = " << format_double(c.schedule.nu_end) << "\n"
       << "t_thermalize = " << format_double(c.schedule.t_thermalize) << "\n"
       << "t_relax = " << format_double(c.schedule.t_relax) << "\n\n"
       << "[experiment]\n"
       << "tau_q = ";
    for(std::size_t i = 0; i < c.tau_q.size(); ++i) os << (i ? ", " : "") << format_double(c.tau_q[i]);
    os << "\n"
       << "runs_per_rate = " << c.runs_per_rate << "\n"
       << "snapshot_stride = " << c.snapshot_stride << "\n"
       << "traces_per_rate = " << c.traces_per_rate << "\n"
       << "slip_threshold = " << format_double(c.slip_threshold) << "\n"
       << "window_min = " << format_double(c.window_min) << "\n"
       << "window_max = " << format_double(c.window_max) << "\n"
       << "mode = " << (c.mode == trajectory_mode::physics ? "physics" : "synthetic") << "\n"
       << "synthetic_sigma0 = " << format_double(c.synthetic_sigma0) << "\n";
    if(include_runtime) os << "output_dir = " << c.output_dir << "\n" << "workers = " << c.workers << "\n";
    os << "\n"
       << "[gl]\n"
       << "h = " << format_double(c.gl.params.h) << "\n"
       << "g = " << format_double(c.gl.params.g) << "\n"
       << "eta = " << format_double(c.gl.params.eta) << "\n"
       << "noise_kT = " << format_double(c.gl.params.noise_kT) << "\n"
       << "grid_points = " << c.gl.params.grid_points << "\n"
       << "domain_length = " << format_double(c.gl.params.domain_length) << "\n"
       << "overdamped = " << (c.gl.params.overdamped ? "true" : "false") << "\n"
       << "dt = " << format_double(c.gl.dt) << "\n"
       << "snapshots = " << c.gl.snapshots << "\n";
    return os.str();
}

} // namespace detail

// Canonical text of every field that influences results. Output location and
// worker count are excluded, so they never change the config hash.
inline std::string canonical_config(const experiment_config& c)
{
    return detail::config_text(c, false);
}

// Full config file text, loadable with parse_config.
inline std::string serialize_config(const experiment_config& c)
{
    return detail::config_text(c, true);
}

// FNV-1a over the canonical text.
inline std::uint64_t config_hash(const experiment_config& c)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for(unsigned char ch : canonical_config(c))
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h)
{
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

} // namespace helix

#endif // HELIX_CONFIG_HPP
