#include <helix/experiment.hpp>
#include <helix/langevin.hpp>

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace helix;
namespace fs = std::filesystem;

namespace
{

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("helix_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

// Small cold chain: ordered throughout, a few seconds per experiment.
experiment_config cold_config(const fs::path& dir, int n = 16)
{
    experiment_config c;
    c.sim.n_ions = n;
    c.sim.kT = 0.005;
    c.sim.seed = 77;
    c.schedule.t_thermalize = 20.0;
    c.schedule.t_relax = 40.0;
    c.tau_q = {20.0, 40.0};
    c.schedule.tau_q = c.tau_q.front();
    c.runs_per_rate = 4;
    c.output_dir = dir.string();
    return c;
}

experiment_config synthetic_config(const fs::path& dir, std::vector<double> ln_rates, std::size_t runs)
{
    experiment_config c;
    c.mode = trajectory_mode::synthetic;
    c.sim.seed = 4242;
    for(double l : ln_rates) c.tau_q.push_back(std::exp(-l));
    std::sort(c.tau_q.begin(), c.tau_q.end());
    c.schedule.tau_q = c.tau_q.front();
    c.runs_per_rate = runs;
    c.output_dir = dir.string();
    return c;
}

void write_failed_cell(const experiment_config& c, std::size_t rate, std::size_t run)
{
    trajectory_result r;
    r.rate_index = rate;
    r.run_index = run;
    r.seed = trajectory_seed(c.sim.seed, static_cast<std::uint32_t>(rate), static_cast<std::uint32_t>(run));
    r.tau_q = c.tau_q[rate];
    r.failed = true;
    r.message = "injected";
    write_atomic(fs::path(c.output_dir) / "cells" / cell_name(rate, run), std::string(cell_header) + cell_line(r, config_hash(c)));
}

double rms_phase_step(const order_snapshot& s)
{
    const std::size_t n = s.size();
    double sum = 0.0;
    for(std::size_t j = 0; j < n; ++j)
    {
        const double d = wrap_phase(s.phase[(j + 1) % n] - s.phase[j]);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

int run_cli(const std::string& args, std::string* out = nullptr)
{
    const fs::path capture = fs::temp_directory_path() / "helix_test_cli_output.txt";
    const std::string cmd = std::string(HELIX_CLI_PATH) + " -q " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if(out) *out = slurp(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(RunTrajectory, WithoutQuenchOrNoiseTheChainStaysLinear)
{
    experiment_config c = cold_config(fresh_dir("linear"), 32);
    c.sim.kT = 0.0;
    c.schedule.nu_start = c.schedule.nu_end = 2.6;
    c.tau_q = {10.0};
    const auto r = run_trajectory(c, 0, 0);
    ASSERT_FALSE(r.trace.snapshots.empty());
    for(const auto& s : r.trace.snapshots) EXPECT_LT(s.max_abs_amplitude(), 1e-8);
    EXPECT_EQ(r.final_winding, 0);
    EXPECT_EQ(r.phase_slips, 0u);
}

TEST(RunTrajectory, SameSeedGivesBitwiseIdenticalTrace)
{
    const experiment_config c = cold_config(fresh_dir("determinism"), 32);
    const auto a = run_trajectory(c, 1, 3);
    const auto b = run_trajectory(c, 1, 3);
    EXPECT_EQ(a.final_winding, b.final_winding);
    ASSERT_EQ(a.trace.snapshots.size(), b.trace.snapshots.size());
    for(std::size_t k = 0; k < a.trace.snapshots.size(); ++k)
    {
        EXPECT_EQ(a.trace.snapshots[k].time, b.trace.snapshots[k].time);
        EXPECT_EQ(a.trace.snapshots[k].amplitude, b.trace.snapshots[k].amplitude);
        EXPECT_EQ(a.trace.snapshots[k].winding, b.trace.snapshots[k].winding);
    }
    EXPECT_EQ(a.trace.ion_x, b.trace.ion_x);

    const auto other = run_trajectory(c, 1, 4);
    EXPECT_NE(other.trace.snapshots.back().amplitude, a.trace.snapshots.back().amplitude);
}

TEST(RunTrajectory, DomainsFormAfterTheCrossingAndRelax)
{
    // cold N = 128 ring, ln(1 / tau_Q) = -5.14
    experiment_config c = cold_config(fresh_dir("domains"), 128);
    c.schedule.t_thermalize = 100.0;
    c.schedule.t_relax = 400.0;
    c.tau_q = {std::exp(5.14)};
    c.snapshot_stride = 500;
    const auto r = run_trajectory(c, 0, 0);
    const double tc = critical_crossing_time(r.trace.schedule);
    const auto& snaps = r.trace.snapshots;
    const double final_amp = snaps.back().mean_abs_amplitude();
    EXPECT_GT(final_amp, 0.2);

    double before = 0.0;
    for(const auto& s : snaps)
    {
        if(s.time < tc - 30.0) before = std::max(before, s.mean_abs_amplitude());
    }
    EXPECT_LT(before, 0.25 * final_amp);

    // first snapshot with a developed zigzag: still a patchwork of domains
    const auto formed = std::find_if(snaps.begin(), snaps.end(), [&](const order_snapshot& s)
                                     { return s.time > tc && s.mean_abs_amplitude() > 0.5 * final_amp; });
    ASSERT_NE(formed, snaps.end());
    EXPECT_GT(rms_phase_step(*formed), 1.3 * rms_phase_step(snaps.back()));
}

TEST(RunExperiment, SingleCellWritesEveryOutput)
{
    const fs::path dir = fresh_dir("single");
    experiment_config c = cold_config(dir);
    c.tau_q = {30.0};
    c.runs_per_rate = 1;
    const auto out = run_experiment(c);
    for(const char* name : {"config.ini", "run_record.json", "trajectories.csv", "timing.csv", "results.csv", "histograms.csv"})
    {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }
    EXPECT_TRUE(fs::exists(dir / "cells" / cell_name(0, 0)));
    EXPECT_TRUE(fs::exists(dir / "traces" / cell_name(0, 0)));

    ASSERT_EQ(out.scaling.records.size(), 1u);
    const auto& rec = out.scaling.records[0];
    EXPECT_EQ(rec.n_runs, 1u);
    const double total = std::accumulate(rec.histogram.begin(), rec.histogram.end(), 0.0);
    EXPECT_DOUBLE_EQ(total / static_cast<double>(rec.n_runs), 1.0);

    EXPECT_EQ(first_line(dir / "results.csv"),
              "tau_Q,ln_inv_rate,n_runs,mean_abs_W,sigma_W,skewness,kzm_prediction,ratio_kzm_to_observed");
    EXPECT_EQ(first_line(dir / "traces" / cell_name(0, 0)), "time,ion_index,x,absA,theta,W");
    EXPECT_EQ(first_line(dir / "histograms.csv"), "tau_Q,W,count");

    const auto rec_json = nlohmann::json::parse(slurp(dir / "run_record.json"));
    EXPECT_EQ(rec_json["config_hash"], hash_hex(config_hash(c)));
    EXPECT_EQ(rec_json["status"], "complete");
    EXPECT_DOUBLE_EQ(rec_json["integrator_dt"].get<double>(), 0.01);
    EXPECT_DOUBLE_EQ(rec_json["delta0_at_nu_start"].get<double>(), 4.3688);
    EXPECT_NEAR(rec_json["delta0_at_nu_c"].get<double>(), 2.0 * 2.05114581662508 * 0.86, 1e-12);
    EXPECT_EQ(load_config(dir / "config.ini").tau_q, c.tau_q);
}

TEST(RunExperiment, SyntheticEnsembleRecoversTheExponent)
{
    std::vector<double> ln_rates;
    for(int i = 0; i < 10; ++i) ln_rates.push_back(-12.0 + 7.5 * i / 9.0);
    const auto c = synthetic_config(fresh_dir("synthetic"), ln_rates, 500);
    const auto out = run_experiment(c);
    ASSERT_TRUE(out.scaling.fit.has_value()) << out.scaling.fit_error;
    EXPECT_EQ(out.scaling.fit->n_points, 10u);
    EXPECT_NEAR(out.scaling.fit->exponent, 0.125, 0.01);
    EXPECT_GT(out.scaling.fit->correlation, 0.9);
}

TEST(RunExperiment, ResumeMatchesAnUninterruptedRun)
{
    const fs::path a = fresh_dir("resume_a");
    const fs::path b = fresh_dir("resume_b");
    const auto ca = cold_config(a);
    run_experiment(ca);

    auto cb = ca;
    cb.output_dir = b.string();
    run_experiment(cb);
    // interrupt: drop some finished cells and the merged tables
    for(auto [rate, run] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{1, 3}}) fs::remove(b / "cells" / cell_name(rate, run));
    fs::remove(b / "trajectories.csv");
    fs::remove(b / "results.csv");

    const auto out = resume_experiment(b);
    EXPECT_EQ(out.n_computed, 3u);
    for(const char* name : {"trajectories.csv", "results.csv", "histograms.csv"})
    {
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }

    // a second resume has nothing left to do
    EXPECT_EQ(resume_experiment(b).n_computed, 0u);
    EXPECT_EQ(slurp(a / "trajectories.csv"), slurp(b / "trajectories.csv"));
}

TEST(RunExperiment, WorkerCountDoesNotChangeResults)
{
    std::string reference;
    for(int workers : {1, 4, 8})
    {
        const fs::path dir = fresh_dir("workers_" + std::to_string(workers));
        auto c = cold_config(dir);
        c.workers = workers;
        run_experiment(c);
        const std::string table = slurp(dir / "trajectories.csv");
        if(reference.empty()) reference = table;
        EXPECT_EQ(table, reference) << workers << " workers";
    }
}

TEST(RunExperiment, RefusesToMixConfigurations)
{
    const fs::path dir = fresh_dir("mismatch");
    auto c = synthetic_config(dir, {-8.0, -6.0}, 5);
    run_experiment(c);
    c.sim.seed += 1;
    EXPECT_THROW(run_experiment(c), config_error);

    // the output location and worker count are not part of the identity
    auto same = synthetic_config(dir, {-8.0, -6.0}, 5);
    same.workers = 3;
    EXPECT_NO_THROW(run_experiment(same));

    // a cell written under another config is rejected on resume
    auto other = same;
    other.synthetic_sigma0 = 5.0;
    trajectory_result r;
    write_atomic(dir / "cells" / cell_name(0, 9), std::string(cell_header) + cell_line(r, config_hash(other)));
    EXPECT_THROW(resume_experiment(dir), config_error);
}

TEST(RunExperiment, FailurePolicyAllowsOnePercent)
{
    // 200 trajectories: two failures are tolerated and excluded, three abort
    const fs::path dir = fresh_dir("failures");
    const auto c = synthetic_config(dir, {-8.0, -6.0}, 100);
    detail::prepare_directory(c, dir);
    write_failed_cell(c, 0, 5);
    write_failed_cell(c, 1, 7);
    const auto out = run_experiment(c);
    EXPECT_EQ(out.n_failed, 2u);
    EXPECT_EQ(out.scaling.records[0].n_runs, 99u);
    EXPECT_EQ(out.scaling.records[1].n_runs, 99u);

    const fs::path dir3 = fresh_dir("failures3");
    auto c3 = c;
    c3.output_dir = dir3.string();
    detail::prepare_directory(c3, dir3);
    for(std::size_t run : {1u, 2u, 3u}) write_failed_cell(c3, 0, run);
    EXPECT_THROW(run_experiment(c3), experiment_aborted);
}

TEST(RunExperiment, HotChainFailuresAbort)
{
    // at kT = 3.5 a short ring loses its longitudinal ordering
    const fs::path dir = fresh_dir("hot");
    auto c = cold_config(dir, 16);
    c.sim.kT = 3.5;
    c.schedule.t_thermalize = 200.0;
    c.tau_q = {20.0};
    c.runs_per_rate = 3;
    try
    {
        run_experiment(c);
        FAIL() << "expected the experiment to abort";
    }
    catch(const experiment_aborted&)
    {
    }
    const auto table = slurp(dir / "trajectories.csv");
    EXPECT_NE(table.find("failed"), std::string::npos);
    const auto cell = parse_cell(dir / "cells" / cell_name(0, 0));
    EXPECT_TRUE(cell.result.failed);
    EXPECT_NE(cell.result.message.find("order"), std::string::npos) << cell.result.message;
}

TEST(Throughput, StepCostScalesAsNSquared)
{
    const std::vector<int> sizes = {64, 128, 256};
    std::vector<double> cost;
    for(int n : sizes)
    {
        chain_state s = linear_chain(static_cast<std::size_t>(n), n);
        langevin_integrator integ({4.38, 0.005, 1}, 0.01);
        const force_field field{2.54, static_cast<double>(n)};
        for(int k = 0; k < 100; ++k) integ.step(s, field);
        const int steps = 2'000'000 / n / 4;
        double best = 1e300;
        for(int rep = 0; rep < 7; ++rep)
        {
            const auto t0 = std::chrono::steady_clock::now();
            for(int k = 0; k < steps; ++k) integ.step(s, field);
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / steps);
        }
        cost.push_back(best);
    }
    // cost / N^2 must agree within 20% across the sizes
    double lo = 1e300, hi = 0.0;
    for(std::size_t i = 0; i < sizes.size(); ++i)
    {
        const double per = cost[i] / sizes[i] / sizes[i];
        lo = std::min(lo, per);
        hi = std::max(hi, per);
        std::printf("N = %d: %.2f us/step, %.3g us per N^2\n", sizes[i], cost[i] * 1e6, per * 1e6);
    }
    std::printf("log-log slope 64 -> 256: %.3f\n", std::log(cost.back() / cost.front()) / std::log(4.0));
    EXPECT_LE(hi / lo, 1.2);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    std::string out;

    EXPECT_EQ(run_cli("predict-kzm --n 400 --eta 4.38 --delta0 4.3688 --tauq 1826.21", &out), 0);
    EXPECT_NEAR(std::stod(out), 2.6056, 1e-3);
    EXPECT_EQ(run_cli("predict-kzm --n 400 --eta 4.38 --delta0 4.3688 --tauq " + std::to_string(std::exp(7.51)), &out), 0);
    EXPECT_NEAR(std::stod(out), 2.60564366518237, 1e-8);

    {
        std::ofstream ini(dir / "good.ini");
        ini << "[sim]\nn_ions = 16\nkT = 0.005\nseed = 3\n[schedule]\nt_thermalize = 10\nt_relax = 20\n"
            << "[experiment]\nln_inv_rates = -3.0, -2.5\nruns_per_rate = 2\noutput_dir = " << (dir / "good").string() << "\n";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "good.ini").string(), &out), 0) << out;
    EXPECT_TRUE(fs::exists(dir / "good" / "results.csv"));
    EXPECT_EQ(run_cli("resume --dir " + (dir / "good").string(), &out), 0) << out;
    EXPECT_EQ(run_cli("analyze --dir " + (dir / "good").string() + " --window-max -2", &out), 0) << out;

    {
        std::ofstream ini(dir / "typo.ini");
        ini << "[sim]\nn_ion = 16\n";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "typo.ini").string(), &out), 2) << out;
    EXPECT_NE(out.find("n_ion"), std::string::npos);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.ini").string()), 2);
    EXPECT_EQ(run_cli("predict-kzm --n 400"), 2);

    {
        std::ofstream ini(dir / "hot.ini");
        ini << "[sim]\nn_ions = 16\nkT = 3.5\n[schedule]\nt_thermalize = 200\nt_relax = 20\n"
            << "[experiment]\ntau_q = 20\nruns_per_rate = 2\noutput_dir = " << (dir / "hot").string() << "\n";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "hot.ini").string(), &out), 3) << out;
}
