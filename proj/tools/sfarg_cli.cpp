#include <CLI11.hpp>

#include <sfarg/app.hpp>

using namespace sfarg;

namespace {

// Every RunConfig field becomes a flag; flags given on the command line override the config file.
struct Overrides {
    std::vector<std::function<void(RunConfig&)>> apply;

    template <class T>
    void add(CLI::App& app, const std::string& flag, T RunConfig::*field, const std::string& help)
    {
        auto value = std::make_shared<T>();
        auto* opt = app.add_option(flag, *value, help);
        apply.push_back([=](RunConfig& c) {
            if (opt->count()) c.*field = *value;
        });
    }
    void add_flag(CLI::App& app, const std::string& flag, bool RunConfig::*field, const std::string& help)
    {
        auto* opt = app.add_flag(flag, help);
        apply.push_back([=](RunConfig& c) {
            if (opt->count()) c.*field = true;
        });
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"S(t,f) for weight-2 newforms of prime level: bases, L-values, moments, distributions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON config document")->check(CLI::ExistingFile);

    Overrides ov;
    ov.add(app, "--q-list,--q", &RunConfig::q_list, "prime levels");
    ov.add(app, "--t-grid,--t", &RunConfig::t_grid, "heights t > 0");
    ov.add(app, "--delta", &RunConfig::delta, "x = q^(delta/3); need 0 < delta < 1/n_max");
    ov.add(app, "--n-max", &RunConfig::n_max, "largest moment");
    ov.add(app, "--P-max", &RunConfig::P_max, "eigenvalues tabulated for primes up to this bound");
    ov.add(app, "--P-sym", &RunConfig::P_sym, "also report the Euler product of L(1,sym^2 f) to this bound");
    ov.add(app, "--c-max", &RunConfig::c_max, "Kloosterman moduli cutoff (0: 1e5*q)");
    ov.add(app, "--petersson-mn-max", &RunConfig::petersson_mn_max, "Petersson pairs with mn up to this");
    ov.add(app, "--t-max", &RunConfig::t_max, "largest height the L-functions are prepared for");
    ov.add(app, "--zeros-T", &RunConfig::zeros_T, "height for zero counting");
    ov.add(app, "--afe-error", &RunConfig::afe_error, "target absolute error of L-values");
    ov.add(app, "--threads", &RunConfig::threads, "worker threads");
    ov.add(app, "--cache-dir", &RunConfig::cache_dir, "cache directory");
    ov.add(app, "--out-dir", &RunConfig::out_dir, "output directory");
    ov.add_flag(app, "--offline", &RunConfig::offline, "never touch the network");
    ov.add(app, "--lmfdb-url", &RunConfig::lmfdb_url, "LMFDB query template, {q} is substituted");
    ov.add(app, "--P-check", &RunConfig::P_check, "crosscheck primes up to this");
    ov.add(app, "--selberg-x", &RunConfig::selberg_x, "x for the S approximation (0: max(4, q^(delta/3)))");
    ov.add(app, "--density-sigmas", &RunConfig::density_sigmas, "sigma values for zero-density counts");
    ov.add(app, "--diag-c", &RunConfig::diag_c, "zero-density diagnostic exponent c");
    ov.add(app, "--diag-A", &RunConfig::diag_A, "zero-density diagnostic exponent A");
    ov.add(app, "--hist-bins", &RunConfig::hist_bins, "histogram bins for plot data");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"basis", "build or load bases and run the invariant suite"},
        {"petersson", "Petersson formula: spectral side vs Kloosterman side"},
        {"svalue", "S, M and R on the t grid"},
        {"moments", "harmonic moments against oracle and main term"},
        {"distribution", "weighted distribution of S/sqrt(log log q)"},
        {"zeros", "critical-line zeros, box counts, zero density"},
        {"crosscheck", "compare bases with LMFDB"},
        {"plotdata", "plot files from earlier results"},
        {"print-config", "print the effective configuration"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (auto& f : ov.apply) f(cfg);
        validate(cfg);

        std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "print-config") return cmd_print_config(cfg, std::cout);

        CommandContext ctx{cfg};
        std::cout << run_dir(cfg).string() << "\n";
        int rc = 0;
        if (cmd == "basis") rc = cmd_basis(ctx);
        else if (cmd == "petersson") rc = cmd_petersson(ctx);
        else if (cmd == "svalue") rc = cmd_svalue(ctx);
        else if (cmd == "moments") rc = cmd_moments(ctx);
        else if (cmd == "distribution") rc = cmd_distribution(ctx);
        else if (cmd == "zeros") rc = cmd_zeros(ctx);
        else if (cmd == "crosscheck") rc = cmd_crosscheck(ctx);
        else if (cmd == "plotdata") rc = cmd_plotdata(ctx);
        return rc;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return 1;
    }
}
