#ifndef HELIX_EXPERIMENT_HPP
#define HELIX_EXPERIMENT_HPP

// Ensemble orchestration: seeded quench trajectories over a grid of tau_q
// values, per-trajectory result files, aggregation into the results table,
// histograms and power-law fit, and resumption of interrupted runs.
//
// Output directory layout
//   config.ini          effective configuration (loadable)
//   run_record.json     metadata: config hash, code version, dt, delta0, fit
//   cells/rRRR_kKKKKK.csv  one file per finished trajectory (atomic rename)
//   trajectories.csv    merged per-trajectory table, sorted by (rate, run)
//   timing.csv          wall time per trajectory
//   results.csv         one row per rate
//   histograms.csv      tau_Q, W, count
//   traces/rRRR_kKKKKK.csv  sampled order-parameter traces

#include <helix/analysis.hpp>
#include <helix/config.hpp>
#include <helix/errors.hpp>
#include <helix/gl_field.hpp>
#include <helix/langevin.hpp>
#include <helix/quench.hpp>
#include <helix/random.hpp>
#include <helix/version.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace helix
{

namespace fs = std::filesystem;

// Raised when more than 1% of trajectories fail; maps to exit code 3.
struct experiment_aborted : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct trajectory_result
{
    std::size_t rate_index = 0;
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    double tau_q = 0.0;
    int final_winding = 0;
    std::size_t phase_slips = 0;
    bool winding_stable = true; // W constant over the last 10% of the relaxation window
    bool failed = false;
    std::string message;
    double wall_seconds = 0.0;
    winding_trace trace;
};

inline quench_schedule schedule_for_rate(const experiment_config& c, std::size_t rate_index)
{
    quench_schedule q = c.schedule;
    q.tau_q = c.tau_q.at(rate_index);
    return q;
}

namespace detail
{

inline std::uint64_t steps_for(double duration, double dt)
{
    return static_cast<std::uint64_t>(std::llround(duration / dt));
}

inline void record_snapshot(winding_trace& trace, const chain_state& s)
{
    check_ring_order(s);
    trace.snapshots.push_back(measure(s));
    for(const auto& p : s.positions) trace.ion_x.push_back(p.x);
}

inline trajectory_result synthetic_trajectory(const experiment_config& c, std::size_t rate_index, std::size_t run_index)
{
    trajectory_result r;
    r.rate_index = rate_index;
    r.run_index = run_index;
    r.seed = trajectory_seed(c.sim.seed, static_cast<std::uint32_t>(rate_index), static_cast<std::uint32_t>(run_index));
    r.tau_q = c.tau_q.at(rate_index);
    const double sigma = c.synthetic_sigma0 * std::pow(r.tau_q, -0.125);
    const auto [g, unused] = noise_stream(r.seed).normal_pair(0, 0);
    (void)unused;
    r.final_winding = static_cast<int>(std::lround(sigma * g));
    r.trace.seed = r.seed;
    r.trace.schedule = schedule_for_rate(c, rate_index);
    r.trace.final_winding = r.final_winding;
    return r;
}

} // namespace detail

// One quench: equally spaced ions at rest on the axis, thermalization at
// nu_start, linear ramp over tau_q, relaxation at nu_end. Snapshots of the
// order parameter are taken every stride steps and at the end.
inline trajectory_result run_trajectory(const experiment_config& c, std::size_t rate_index, std::size_t run_index)
{
    if(c.mode == trajectory_mode::synthetic) return detail::synthetic_trajectory(c, rate_index, run_index);

    trajectory_result r;
    r.rate_index = rate_index;
    r.run_index = run_index;
    r.seed = trajectory_seed(c.sim.seed, static_cast<std::uint32_t>(rate_index), static_cast<std::uint32_t>(run_index));
    r.tau_q = c.tau_q.at(rate_index);

    const quench_schedule q = schedule_for_rate(c, rate_index);
    const double dt = c.sim.dt;
    const std::uint64_t n_therm = detail::steps_for(q.t_thermalize, dt);
    const std::uint64_t n_ramp = detail::steps_for(q.tau_q, dt);
    const std::uint64_t n_relax = detail::steps_for(q.t_relax, dt);
    const std::uint64_t total = n_therm + n_ramp + n_relax;
    const std::uint64_t stride = c.snapshot_stride > 0 ? c.snapshot_stride : std::max<std::uint64_t>(1, total / 200);
    // W must not change after this step
    const std::uint64_t stable_from = total - n_relax / 10;

    chain_state s = linear_chain(static_cast<std::size_t>(c.sim.n_ions), c.sim.box_length());
    langevin_integrator integ({c.sim.eta, c.sim.kT, r.seed}, dt);
    force_field field{q.nu_start, s.box_length};

    r.trace.seed = r.seed;
    r.trace.schedule = q;
    std::optional<int> reference_w;
    for(std::uint64_t k = 0; k < total; ++k)
    {
        field.nu_t = nu_t(q, static_cast<double>(k) * dt);
        integ.step(s, field);
        const std::uint64_t done = k + 1;
        if(done == stable_from) reference_w = measure(s).winding;
        if(done % stride == 0 || done == total)
        {
            detail::record_snapshot(r.trace, s);
            if(reference_w && done >= stable_from && r.trace.snapshots.back().winding != *reference_w)
            {
                r.winding_stable = false;
            }
        }
    }
    r.final_winding = r.trace.snapshots.back().winding;
    r.trace.final_winding = r.final_winding;

    double threshold = c.slip_threshold;
    if(threshold == 0.0) threshold = 0.1 * r.trace.snapshots.back().mean_abs_amplitude();
    r.phase_slips = threshold > 0.0 ? phase_slip_events(r.trace, threshold).size() : 0;
    return r;
}

// ---------------------------------------------------------------------------
// files

inline void write_atomic(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if(!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if(!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string cell_name(std::size_t rate_index, std::size_t run_index)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "r%03zu_k%05zu.csv", rate_index, run_index);
    return buf;
}

inline std::string format_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline const char* cell_header = "config_hash,rate_index,run_index,seed,tau_q,final_w,phase_slips,w_stable,status,wall_seconds,message\n";

inline std::string sanitize(std::string s)
{
    for(char& ch : s)
    {
        if(ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

inline std::string cell_line(const trajectory_result& r, std::uint64_t hash)
{
    std::ostringstream os;
    os << hash_hex(hash) << ',' << r.rate_index << ',' << r.run_index << ',' << r.seed << ',' << format_number(r.tau_q)
       << ',' << r.final_winding << ',' << r.phase_slips << ',' << (r.winding_stable ? 1 : 0) << ','
       << (r.failed ? "failed" : "ok") << ',' << format_number(r.wall_seconds) << ',' << sanitize(r.message) << '\n';
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while(std::getline(ss, item, ',')) out.push_back(item);
    if(!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct cell_record
{
    std::uint64_t config_hash = 0;
    trajectory_result result;
};

inline cell_record parse_cell(const fs::path& path)
{
    std::istringstream in(read_file(path));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    const auto f = split_csv(line);
    if(f.size() < 10) throw std::runtime_error("malformed cell file " + path.string());
    cell_record c;
    c.config_hash = std::stoull(f[0], nullptr, 16);
    auto& r = c.result;
    r.rate_index = std::stoul(f[1]);
    r.run_index = std::stoul(f[2]);
    r.seed = std::stoull(f[3]);
    r.tau_q = std::stod(f[4]);
    r.final_winding = std::stoi(f[5]);
    r.phase_slips = std::stoul(f[6]);
    r.winding_stable = f[7] == "1";
    r.failed = f[8] == "failed";
    r.wall_seconds = std::stod(f[9]);
    r.message = f.size() > 10 ? f[10] : "";
    return c;
}

// time, ion_index, x, absA, theta, W; theta is empty where undefined.
inline std::string trace_csv(const winding_trace& trace, const char* index_name = "ion_index", double spacing = 1.0)
{
    std::ostringstream os;
    os << "time," << index_name << ",x,absA,theta,W\n";
    os << std::setprecision(10);
    for(std::size_t s = 0; s < trace.snapshots.size(); ++s)
    {
        const auto& snap = trace.snapshots[s];
        const std::size_t n = snap.size();
        for(std::size_t j = 0; j < n; ++j)
        {
            const double x = trace.ion_x.size() >= (s + 1) * n ? trace.ion_x[s * n + j] : spacing * static_cast<double>(j);
            os << snap.time << ',' << j << ',' << x << ',' << std::abs(snap.amplitude[j]) << ',';
            if(!std::isnan(snap.phase[j])) os << snap.phase[j];
            os << ',' << snap.winding << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// aggregation

struct scaling_result
{
    std::vector<rate_record> records;
    std::optional<power_law_fit> fit;
    std::string fit_error;
};

inline scaling_result aggregate(const experiment_config& c, const std::vector<trajectory_result>& results)
{
    scaling_result out;
    for(std::size_t i = 0; i < c.tau_q.size(); ++i)
    {
        std::vector<int> ws;
        for(const auto& r : results)
        {
            if(r.rate_index == i && !r.failed) ws.push_back(r.final_winding);
        }
        if(ws.empty()) continue;
        const auto st = ensemble_stats(ws);
        rate_record rec;
        rec.tau_q = c.tau_q[i];
        rec.n_runs = st.n;
        rec.mean_abs_w = st.mean_abs;
        rec.sigma_w = st.sigma;
        rec.skewness = st.skewness;
        rec.stderr_abs = st.stderr_abs;
        rec.min_w = st.min_w;
        rec.histogram = st.histogram;
        out.records.push_back(std::move(rec));
    }
    try
    {
        out.fit = fit_power_law(out.records, rate_window{c.window_min, c.window_max});
    }
    catch(const domain_error& e)
    {
        out.fit_error = e.what();
    }
    return out;
}

inline double kzm_prediction_for(const experiment_config& c, double tau_q)
{
    return kzm_predicted_mean_abs_w(c.sim.n_ions, c.sim.eta, delta0(c.schedule), tau_q);
}

inline std::string results_csv(const experiment_config& c, const scaling_result& s)
{
    std::ostringstream os;
    os << "tau_Q,ln_inv_rate,n_runs,mean_abs_W,sigma_W,skewness,kzm_prediction,ratio_kzm_to_observed\n";
    for(const auto& r : s.records)
    {
        const double kzm = kzm_prediction_for(c, r.tau_q);
        os << format_number(r.tau_q) << ',' << format_number(r.ln_inv_rate()) << ',' << r.n_runs << ','
           << format_number(r.mean_abs_w) << ',' << format_number(r.sigma_w) << ',' << format_number(r.skewness) << ','
           << format_number(kzm) << ',';
        if(r.mean_abs_w > 0.0) os << format_number(kzm / r.mean_abs_w);
        else os << "inf";
        os << '\n';
    }
    return os.str();
}

inline std::string histograms_csv(const scaling_result& s)
{
    std::ostringstream os;
    os << "tau_Q,W,count\n";
    for(const auto& r : s.records)
    {
        for(std::size_t k = 0; k < r.histogram.size(); ++k)
        {
            os << format_number(r.tau_q) << ',' << (r.min_w + static_cast<int>(k)) << ',' << r.histogram[k] << '\n';
        }
    }
    return os.str();
}

inline std::string trajectories_csv(const std::vector<trajectory_result>& results)
{
    std::ostringstream os;
    os << "rate_index,run_index,seed,tau_q,final_w,phase_slips,w_stable,status\n";
    for(const auto& r : results)
    {
        os << r.rate_index << ',' << r.run_index << ',' << r.seed << ',' << format_number(r.tau_q) << ','
           << r.final_winding << ',' << r.phase_slips << ',' << (r.winding_stable ? 1 : 0) << ','
           << (r.failed ? "failed" : "ok") << '\n';
    }
    return os.str();
}

inline nlohmann::json run_record_json(const experiment_config& c, const scaling_result& s, std::size_t n_failed,
                                      std::size_t n_unstable)
{
    nlohmann::json j;
    j["config_hash"] = hash_hex(config_hash(c));
    j["code_version"] = version_string;
    j["integrator"] = "langevin-impulse (half kick / exact OU flight / half kick)";
    j["integrator_dt"] = c.sim.dt;
    j["coulomb_periodicity"] = "minimal-image in x, direct O(N^2) sum";
    j["reproducibility"] = "bitwise per seed (single-threaded trajectories)";
    j["delta0_at_nu_start"] = delta0(c.schedule);
    j["delta0_at_nu_c"] = delta0_at_critical(c.schedule);
    j["critical_frequency"] = critical_frequency();
    j["n_trajectories"] = c.tau_q.size() * c.runs_per_rate;
    j["n_failed"] = n_failed;
    j["n_winding_unstable"] = n_unstable;
    j["mode"] = c.mode == trajectory_mode::physics ? "physics" : "synthetic";
    if(s.fit)
    {
        j["fit"] = {{"exponent", s.fit->exponent},
                    {"intercept", s.fit->intercept},
                    {"prefactor", s.fit->prefactor},
                    {"correlation", s.fit->correlation},
                    {"r_squared", s.fit->r_squared},
                    {"n_points", s.fit->n_points},
                    {"window_min", detail::format_double(s.fit->window.min_ln_inv_rate)},
                    {"window_max", detail::format_double(s.fit->window.max_ln_inv_rate)}};
    }
    else
    {
        j["fit"] = nullptr;
        j["fit_error"] = s.fit_error;
    }
    return j;
}

// ---------------------------------------------------------------------------
// orchestration

struct experiment_outcome
{
    scaling_result scaling;
    std::vector<trajectory_result> trajectories; // sorted by (rate, run)
    std::size_t n_failed = 0;
    std::size_t n_unstable = 0;
    std::size_t n_computed = 0; // trajectories run in this invocation
};

inline int worker_count(const experiment_config& c)
{
    if(const char* env = std::getenv("HELIX_WORKERS"))
    {
        try
        {
            const int w = std::stoi(env);
            if(w >= 1) return w;
        }
        catch(const std::exception&)
        {
        }
        throw config_error(std::string("HELIX_WORKERS must be a positive integer, got '") + env + "'");
    }
    return c.workers;
}

namespace detail
{

inline std::map<std::pair<std::size_t, std::size_t>, trajectory_result> load_cells(const fs::path& dir, std::uint64_t hash)
{
    std::map<std::pair<std::size_t, std::size_t>, trajectory_result> cells;
    const fs::path cdir = dir / "cells";
    if(!fs::exists(cdir)) return cells;
    for(const auto& e : fs::directory_iterator(cdir))
    {
        if(e.path().extension() != ".csv") continue;
        const auto rec = parse_cell(e.path());
        if(rec.config_hash != hash)
        {
            throw config_error("cell " + e.path().filename().string() + " was produced by config " + hash_hex(rec.config_hash)
                               + ", expected " + hash_hex(hash));
        }
        cells[{rec.result.rate_index, rec.result.run_index}] = rec.result;
    }
    return cells;
}

inline void prepare_directory(const experiment_config& c, const fs::path& dir)
{
    const std::uint64_t hash = config_hash(c);
    const fs::path record = dir / "run_record.json";
    const fs::path cfg = dir / "config.ini";
    if(fs::exists(cfg))
    {
        const auto existing = load_config(cfg);
        if(config_hash(existing) != hash)
        {
            throw config_error("output directory " + dir.string() + " holds results of a different configuration (hash "
                               + hash_hex(config_hash(existing)) + " vs " + hash_hex(hash) + ")");
        }
    }
    fs::create_directories(dir / "cells");
    if(!fs::exists(cfg)) write_atomic(cfg, serialize_config(c));
    if(!fs::exists(record))
    {
        nlohmann::json j;
        j["config_hash"] = hash_hex(hash);
        j["code_version"] = version_string;
        j["status"] = "running";
        write_atomic(record, j.dump(2) + "\n");
    }
}

} // namespace detail

// Writes trajectories.csv, timing.csv, results.csv, histograms.csv and
// run_record.json from the cells already present in dir.
inline experiment_outcome finalize_experiment(const experiment_config& c, const fs::path& dir)
{
    const std::uint64_t hash = config_hash(c);
    auto cells = detail::load_cells(dir, hash);
    experiment_outcome out;
    std::ostringstream timing;
    timing << "rate_index,run_index,wall_seconds\n";
    for(auto& [key, r] : cells)
    {
        if(r.failed) ++out.n_failed;
        else if(!r.winding_stable) ++out.n_unstable;
        timing << r.rate_index << ',' << r.run_index << ',' << format_number(r.wall_seconds) << '\n';
        out.trajectories.push_back(r);
    }
    out.scaling = aggregate(c, out.trajectories);
    write_atomic(dir / "trajectories.csv", trajectories_csv(out.trajectories));
    write_atomic(dir / "timing.csv", timing.str());
    write_atomic(dir / "results.csv", results_csv(c, out.scaling));
    write_atomic(dir / "histograms.csv", histograms_csv(out.scaling));
    auto record = run_record_json(c, out.scaling, out.n_failed, out.n_unstable);
    const std::size_t expected = c.tau_q.size() * c.runs_per_rate;
    record["status"] = cells.size() == expected ? "complete" : "partial";
    write_atomic(dir / "run_record.json", record.dump(2) + "\n");
    return out;
}

// Runs every (rate, run) cell that has no result file yet, then aggregates.
// Trajectories are independent and distributed over worker threads; results
// do not depend on the worker count. At most 1% of all trajectories may fail.
inline experiment_outcome run_experiment(const experiment_config& c, std::ostream* log = nullptr)
{
    c.validate();
    const fs::path dir = c.output_dir;
    detail::prepare_directory(c, dir);
    const std::uint64_t hash = config_hash(c);
    const auto done = detail::load_cells(dir, hash);

    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for(std::size_t run = 0; run < c.runs_per_rate; ++run)
    {
        for(std::size_t rate = 0; rate < c.tau_q.size(); ++rate)
        {
            if(!done.contains({rate, run})) todo.emplace_back(rate, run);
        }
    }

    const std::size_t total = c.tau_q.size() * c.runs_per_rate;
    const std::size_t max_failures = total / 100; // strictly more than 1% aborts
    std::size_t prior_failures = 0;
    for(const auto& [key, r] : done) prior_failures += r.failed ? 1 : 0;

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failures{prior_failures};
    std::atomic<bool> abort{prior_failures > max_failures};
    std::mutex log_mutex;

    auto work = [&]
    {
        while(!abort.load())
        {
            const std::size_t i = next.fetch_add(1);
            if(i >= todo.size()) return;
            const auto [rate, run] = todo[i];
            const auto t0 = std::chrono::steady_clock::now();
            trajectory_result r;
            try
            {
                r = run_trajectory(c, rate, run);
            }
            catch(const std::exception& e)
            {
                r = trajectory_result{};
                r.rate_index = rate;
                r.run_index = run;
                r.seed = trajectory_seed(c.sim.seed, static_cast<std::uint32_t>(rate), static_cast<std::uint32_t>(run));
                r.tau_q = c.tau_q[rate];
                r.failed = true;
                r.message = e.what();
            }
            r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_atomic(dir / "cells" / cell_name(rate, run), std::string(cell_header) + cell_line(r, hash));
            if(!r.failed && run < c.traces_per_rate && !r.trace.snapshots.empty())
            {
                write_atomic(dir / "traces" / cell_name(rate, run), trace_csv(r.trace));
            }
            if(r.failed)
            {
                if(failures.fetch_add(1) + 1 > max_failures) abort.store(true);
            }
            if(log)
            {
                std::lock_guard lock(log_mutex);
                *log << "rate " << rate << " run " << run << " seed " << r.seed << ": "
                     << (r.failed ? "FAILED (" + r.message + ")" : "W = " + std::to_string(r.final_winding)) << '\n';
            }
        }
    };

    const int workers = std::max(1, std::min<int>(worker_count(c), static_cast<int>(std::max<std::size_t>(1, todo.size()))));
    if(workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        for(int w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    auto out = finalize_experiment(c, dir);
    out.n_computed = std::min(next.load(), todo.size());
    if(abort.load())
    {
        throw experiment_aborted("experiment aborted: " + std::to_string(failures.load()) + " of " + std::to_string(total)
                                 + " trajectories failed (limit " + std::to_string(max_failures) + ")");
    }
    return out;
}

// Completes an interrupted experiment from the configuration stored in dir.
inline experiment_outcome resume_experiment(const fs::path& dir, std::ostream* log = nullptr)
{
    const fs::path cfg = dir / "config.ini";
    if(!fs::exists(cfg)) throw config_error("resume: " + cfg.string() + " not found");
    auto c = load_config(cfg);
    const fs::path record = dir / "run_record.json";
    if(fs::exists(record))
    {
        const auto j = nlohmann::json::parse(read_file(record));
        if(j.contains("config_hash") && j["config_hash"].get<std::string>() != hash_hex(config_hash(c)))
        {
            throw config_error("resume: config hash in run_record.json does not match config.ini");
        }
    }
    c.output_dir = dir.string();
    return run_experiment(c, log);
}

// Re-aggregates an existing directory, optionally with a different fit window.
inline experiment_outcome analyze_experiment(const fs::path& dir, std::optional<double> window_max = std::nullopt)
{
    auto c = load_config(dir / "config.ini");
    c.output_dir = dir.string();
    if(window_max) c.window_max = *window_max;
    auto cells = detail::load_cells(dir, config_hash(load_config(dir / "config.ini")));
    experiment_outcome out;
    for(auto& [key, r] : cells)
    {
        if(r.failed) ++out.n_failed;
        else if(!r.winding_stable) ++out.n_unstable;
        out.trajectories.push_back(r);
    }
    out.scaling = aggregate(c, out.trajectories);
    write_atomic(dir / "results.csv", results_csv(c, out.scaling));
    write_atomic(dir / "histograms.csv", histograms_csv(out.scaling));
    return out;
}

// ---------------------------------------------------------------------------
// Ginzburg-Landau ensembles

struct gl_experiment_outcome
{
    scaling_result scaling;
    std::vector<trajectory_result> trajectories;
};

inline gl_experiment_outcome run_gl_experiment(const experiment_config& c, std::ostream* log = nullptr)
{
    c.validate();
    c.gl.params.validate();
    const fs::path dir = c.output_dir;
    fs::create_directories(dir);
    gl_experiment_outcome out;
    const std::size_t total = c.tau_q.size() * c.runs_per_rate;
    out.trajectories.resize(total);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    // slot i is (rate = i % rates, run = i / rates); each slot is written once
    auto work = [&]
    {
        for(std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1))
        {
            const std::size_t rate = i % c.tau_q.size();
            const std::size_t run = i / c.tau_q.size();
            const quench_schedule q = schedule_for_rate(c, rate);
            trajectory_result r;
            r.rate_index = rate;
            r.run_index = run;
            r.tau_q = q.tau_q;
            r.seed = trajectory_seed(c.sim.seed, static_cast<std::uint32_t>(rate), static_cast<std::uint32_t>(run));
            const auto t0 = std::chrono::steady_clock::now();
            try
            {
                auto g = gl_quench_run(c.gl.params, q, c.gl.dt, r.seed, c.gl.snapshots);
                r.final_winding = g.final_winding;
                r.trace.snapshots = std::move(g.trace);
                r.trace.final_winding = g.final_winding;
            }
            catch(const std::exception& e)
            {
                r.failed = true;
                r.message = e.what();
            }
            r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if(!r.failed && run < c.traces_per_rate)
            {
                write_atomic(dir / "traces" / ("gl_" + cell_name(rate, run)),
                             trace_csv(r.trace, "grid_index", c.gl.params.spacing()));
            }
            if(log)
            {
                std::lock_guard lock(log_mutex);
                *log << "gl rate " << rate << " run " << run << ": "
                     << (r.failed ? "FAILED (" + r.message + ")" : "W = " + std::to_string(r.final_winding)) << '\n';
            }
            r.trace.snapshots.clear();
            out.trajectories[rate * c.runs_per_rate + run] = std::move(r);
        }
    };
    const int workers = std::max(1, std::min<int>(worker_count(c), static_cast<int>(total)));
    if(workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        for(int w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    out.scaling = aggregate(c, out.trajectories);
    write_atomic(dir / "gl_trajectories.csv", trajectories_csv(out.trajectories));
    write_atomic(dir / "gl_histograms.csv", histograms_csv(out.scaling));
    std::ostringstream os;
    os << "tau_Q,ln_inv_rate,n_runs,mean_abs_W,sigma_W,skewness\n";
    for(const auto& r : out.scaling.records)
    {
        os << format_number(r.tau_q) << ',' << format_number(r.ln_inv_rate()) << ',' << r.n_runs << ','
           << format_number(r.mean_abs_w) << ',' << format_number(r.sigma_w) << ',' << format_number(r.skewness) << '\n';
    }
    write_atomic(dir / "gl_results.csv", os.str());
    return out;
}

} // namespace helix

#endif // HELIX_EXPERIMENT_HPP
