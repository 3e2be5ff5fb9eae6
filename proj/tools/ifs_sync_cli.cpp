#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ifs_sync/config.hpp"
#include "ifs_sync/experiment.hpp"
#include "ifs_sync/parallel.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_compute = 3;

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ifs_sync::ConfigError("", "cannot read " + path);
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void apply_thread_env()
{
    const char* env = std::getenv("IFS_SYNC_THREADS");
    if (env == nullptr || *env == '\0') {
        return;
    }
    std::size_t n = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec != std::errc{} || ptr != end || n == 0) {
        std::cerr << "ifs-sync: ignoring IFS_SYNC_THREADS=" << env << "\n";
        return;
    }
    ifs_sync::set_worker_count(n);
}

int cmd_run(const std::string& path)
{
    const auto cfg = ifs_sync::parse_config(std::string_view(read_text(path)));
    apply_thread_env();
    const ifs_sync::RunManifest m = ifs_sync::run_experiment(cfg);
    if (!m.ok()) {
        std::cerr << "ifs-sync: " << m.error->stage << ": " << m.error->message
                  << "\n";
        return exit_compute;
    }
    for (const auto& f : m.files) {
        std::cout << f << "\n";
    }
    return exit_ok;
}

int cmd_validate(const std::string& path)
{
    const auto cfg = ifs_sync::parse_config(std::string_view(read_text(path)));
    std::cout << ifs_sync::dump_json(ifs_sync::to_json(cfg));
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random circle and sphere diffeomorphism experiments", "ifs-sync"};
    app.set_version_flag("--version", std::string(ifs_sync::version()));
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment and write its files");
    run->add_option("config", config_path, "Config JSON")->required();
    auto* validate = app.add_subcommand("validate",
                                        "Check a config and print it with defaults");
    validate->add_option("config", config_path, "Config JSON")->required();
    auto* schema = app.add_subcommand("schema", "Print the config JSON schema");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config_path);
        }
        if (*validate) {
            return cmd_validate(config_path);
        }
        if (*schema) {
            std::cout << ifs_sync::dump_json(ifs_sync::config_schema());
            return exit_ok;
        }
    } catch (const ifs_sync::ConfigError& e) {
        std::cerr << "ifs-sync: config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "ifs-sync: " << e.what() << "\n";
        return exit_compute;
    }
    return exit_ok;
}
