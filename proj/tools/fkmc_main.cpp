// Command-line front end: one subcommand per experiment family plus the
// acceptance gate.  Exit codes: 0 success, 1 failed acceptance checks,
// 2 usage or configuration errors.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fkmc/acceptance.hpp"
#include "fkmc/harness.hpp"
#include "fkmc/parallel.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_prefix;
    uint64_t seed = 12345;
    int workers = 1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "key=value configuration file");
    sub->add_option("--set", args.overrides,
                    "override a config entry, e.g. --set n_paths=5000 (repeatable)");
    sub->add_option("--out", args.out_prefix,
                    "output prefix; writes <prefix>.csv and <prefix>.json");
    sub->add_option("--seed", args.seed, "random seed");
    sub->add_option("--workers", args.workers, "worker threads (results identical)");
}

fkmc::ExperimentConfig load_config(const CommonArgs& args) {
    fkmc::ExperimentConfig cfg;
    if (!args.config_path.empty())
        cfg = fkmc::ExperimentConfig::from_file(args.config_path);
    for (const std::string& kv : args.overrides) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for Feynman-Kac semigroups over "
                 "prefractal boundaries"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> families = {
        {"geometry", "box-count dimension fits and neighbourhood-volume probes"},
        {"occupation", "shell sojourn statistics from boundary starting points"},
        {"pz", "small-deviation fractions P(Z_n >= theta E Z_n)"},
        {"divergence", "growth of the truncated functional as truncation is released"},
        {"kernel", "bridge-reweighted kernel estimates"},
        {"crossing", "truncated crossing masses toward a target ball"},
        {"decay", "decay-rate fit over a crossing masses CSV"},
        {"harmonic", "hitting exponents via walk-on-spheres"},
        {"positivity", "convolution finiteness verdict for the distance potential"},
    };
    std::vector<CommonArgs> fam_args(families.size());
    std::vector<CLI::App*> fam_subs;
    for (size_t i = 0; i < families.size(); ++i) {
        CLI::App* sub = app.add_subcommand(families[i].first, families[i].second);
        add_common(sub, fam_args[i]);
        fam_subs.push_back(sub);
    }

    CLI::App* accept = app.add_subcommand("accept", "run the acceptance checks");
    std::string tier = "fast";
    std::string accept_out;
    uint64_t accept_seed = 20260801;
    int accept_workers = 1;
    accept->add_option("--tier", tier, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));
    accept->add_option("--out", accept_out, "directory for per-check CSV artifacts");
    accept->add_option("--seed", accept_seed, "random seed");
    accept->add_option("--workers", accept_workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(accept)) {
            fkmc::set_worker_count(accept_workers);
            fkmc::AcceptanceOptions opts;
            opts.tier = tier;
            opts.seed = accept_seed;
            opts.out_dir = accept_out;
            int failures = fkmc::acceptance_suite(opts, std::cout);
            return failures == 0 ? 0 : 1;
        }
        for (size_t i = 0; i < families.size(); ++i) {
            if (!app.got_subcommand(fam_subs[i])) continue;
            CommonArgs& args = fam_args[i];
            fkmc::set_worker_count(args.workers);
            fkmc::ExperimentConfig cfg = load_config(args);
            fkmc::RunRecord rec =
                fkmc::run_experiment(families[i].first, cfg, args.seed);
            std::string prefix = args.out_prefix.empty()
                                     ? "out/" + families[i].first
                                     : args.out_prefix;
            fkmc::write_run_record(rec, prefix);
            std::cout << rec.csv;
            std::cerr << "wrote " << prefix << ".csv and " << prefix << ".json\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 2;
}
