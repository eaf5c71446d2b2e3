// Command-line driver: identities | hum | observability | carleman | sweep.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration,
// 3 numerical or I/O failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "stocnull/errors.hpp"
#include "stocnull/harness.hpp"
#include "stocnull/parallel.hpp"

namespace {

enum Exit : int { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kNumerical = 3 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int finish(const stocnull::RunReport& report, const std::string& out) {
    const std::string text = report.text();
    std::cout << text;
    if (!out.empty()) {
        std::ofstream file(out, std::ios::binary | std::ios::trunc);
        file << text;
        file.close();
        if (!file) throw stocnull::IoError("cannot write report to '" + out + "'");
    }
    return report.passed() ? kOk : kCheckFailed;
}

int run(const std::string& command, const Options& opt) {
    stocnull::ExperimentConfig cfg = opt.config.empty() ? stocnull::ExperimentConfig{} : stocnull::load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.config.empty()) {
        const auto violations = stocnull::validate_config(cfg);
        if (!violations.empty()) throw stocnull::ConfigError(violations);
    }
    stocnull::set_thread_count(opt.threads);

    if (command == "identities") return finish(stocnull::run_identity_suite(cfg), opt.out);
    if (command == "hum") return finish(stocnull::run_hum_report(cfg), opt.out);
    if (command == "observability") return finish(stocnull::run_observability(cfg), opt.out);
    if (command == "carleman") return finish(stocnull::run_carleman(cfg), opt.out);

    const stocnull::SweepReport sweep = stocnull::run_sweep(cfg);
    const std::string path = opt.out.empty() ? cfg.output : opt.out;
    if (!path.empty()) stocnull::emit_csv(sweep.rows, path);
    std::cout << sweep.report.text();
    for (const auto& row : sweep.rows) {
        if (row.numerical_failure) {
            std::cerr << "numerical failure at h = " << row.h << ": " << row.reason << '\n';
            return kNumerical;
        }
    }
    if (path.empty()) std::cout << stocnull::format_csv(sweep.rows);
    return sweep.report.passed() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Null controllability experiments for stochastic semi-discrete heat equations"};
    app.require_subcommand(1);

    Options opt;
    std::uint64_t seed = 0;
    for (const char* name : {"identities", "hum", "observability", "carleman", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "JSON experiment configuration");
        sub->add_option("--out", opt.out, "output path (CSV for sweep, report text otherwise)");
        sub->add_option("--seed", seed, "root seed, overrides the configuration");
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1u, 256u));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kBadConfig;
    }
    const CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--seed") > 0) opt.seed = seed;

    try {
        return run(chosen->get_name(), opt);
    } catch (const stocnull::ConfigError& e) {
        for (const auto& v : e.violations()) std::cerr << "config error: " << v << '\n';
        return kBadConfig;
    } catch (const stocnull::ConvergenceFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        const auto& h = e.history();
        if (!h.empty()) std::cerr << "  iterations: " << h.size() << ", last relative residual: " << h.back() << '\n';
        return kNumerical;
    } catch (const stocnull::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    }
}
