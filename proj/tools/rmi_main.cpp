#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "rmi/error.hpp"
#include "rmi/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rmi: radiograph-to-density reconstruction pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = -1;
    std::vector<std::string> overrides;

    app.add_option("-c,--config", config_path, "pipeline config (JSON)");
    app.add_option("-o,--out", out_dir, "output directory (overrides config out_dir)");
    app.add_option("-t,--threads", threads, "thread count (0 = library default)");
    app.add_option("-s,--set", overrides, "config override key.path=value (repeatable)");

    const char* commands[] = {"generate", "project", "degrade", "extract", "fit-noise",
                              "train",    "evaluate", "sweep",  "growth",  "plot"};
    for (const char* cmd : commands) app.add_subcommand(cmd)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<std::string> ov = overrides;
        if (!out_dir.empty()) ov.push_back("out_dir=" + out_dir);
        if (threads >= 0) ov.push_back("threads=" + std::to_string(threads));
        if (const char* env_out = std::getenv("RMI_OUT_DIR"); env_out && out_dir.empty())
            ov.push_back(std::string("out_dir=") + env_out);
        const rmi::pipeline::PipelineConfig cfg = rmi::pipeline::load_config(config_path, ov);
        return rmi::pipeline::run_command(app.get_subcommands().front()->get_name(), cfg);
    } catch (const rmi::Error& e) {
        std::fprintf(stderr, "%s\n", e.line().c_str());
        return int(e.code);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rmi-error code=4 stage=internal path=- msg=\"%s\"\n", e.what());
        return 4;
    }
}
