// helixsim: quench ensembles of an ion ring across the linear-zigzag
// transition and Kibble-Zurek analysis of the resulting winding numbers.

#include <helix/analysis.hpp>
#include <helix/config.hpp>
#include <helix/experiment.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace
{

enum exit_code : int
{
    ok = 0,
    failure = 1,
    bad_config = 2,
    physics_failure = 3,
};

void print_summary(const helix::scaling_result& s)
{
    std::printf("%12s %10s %8s %12s %10s %10s\n", "tau_Q", "ln(1/tQ)", "runs", "<|W|>", "sigma_W", "skew");
    for(const auto& r : s.records)
    {
        std::printf("%12.4g %10.3f %8zu %12.4f %10.4f %10.4f\n", r.tau_q, r.ln_inv_rate(), r.n_runs, r.mean_abs_w, r.sigma_w,
                    r.skewness);
    }
    if(s.fit)
    {
        std::printf("fit: exponent %.4f, prefactor %.4g, r %.4f (%zu rates)\n", s.fit->exponent, s.fit->prefactor,
                    s.fit->correlation, s.fit->n_points);
    }
    else
    {
        std::printf("fit: unavailable (%s)\n", s.fit_error.c_str());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"helixsim: Kibble-Zurek quenches of a trapped-ion ring"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Do not log individual trajectories");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run (or continue) the experiment described by a config file");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    std::string dir;
    auto* resume = app.add_subcommand("resume", "Complete an interrupted experiment");
    resume->add_option("--dir", dir, "Experiment output directory")->required()->check(CLI::ExistingDirectory);

    std::optional<double> window_max;
    auto* analyze = app.add_subcommand("analyze", "Re-aggregate results and refit the power law");
    analyze->add_option("--dir", dir, "Experiment output directory")->required()->check(CLI::ExistingDirectory);
    analyze->add_option("--window-max", window_max, "Upper end of the fit window in ln(1/tau_Q)");

    auto* gl = app.add_subcommand("gl-run", "Quench ensemble of the stochastic Ginzburg-Landau field");
    gl->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    double n = 0, eta = 0, d0 = 0, tq = 0;
    auto* predict = app.add_subcommand("predict-kzm", "Kibble-Zurek estimate of <|W|>");
    predict->add_option("--n", n, "Number of ions")->required()->check(CLI::PositiveNumber);
    predict->add_option("--eta", eta, "Friction rate")->required()->check(CLI::PositiveNumber);
    predict->add_option("--delta0", d0, "Quench amplitude delta0")->required()->check(CLI::PositiveNumber);
    predict->add_option("--tauq", tq, "Quench time tau_Q")->required()->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch(const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_config;
    }

    std::ostream* log = quiet ? nullptr : &std::cerr;
    try
    {
        if(*run)
        {
            const auto c = helix::load_config(config_path);
            const auto out = helix::run_experiment(c, log);
            print_summary(out.scaling);
            std::printf("results written to %s\n", c.output_dir.c_str());
        }
        else if(*resume)
        {
            const auto out = helix::resume_experiment(dir, log);
            print_summary(out.scaling);
        }
        else if(*analyze)
        {
            const auto out = helix::analyze_experiment(dir, window_max);
            print_summary(out.scaling);
        }
        else if(*gl)
        {
            const auto c = helix::load_config(config_path);
            const auto out = helix::run_gl_experiment(c, log);
            print_summary(out.scaling);
        }
        else if(*predict)
        {
            std::printf("%.10g\n", helix::kzm_predicted_mean_abs_w(n, eta, d0, tq));
        }
    }
    catch(const helix::config_error& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return bad_config;
    }
    catch(const helix::experiment_aborted& e)
    {
        std::cerr << e.what() << '\n';
        return physics_failure;
    }
    catch(const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return ok;
}
