// csifp: scene -> dataset -> train -> eval pipeline driven by one config file.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csifp/csifp.hpp"

namespace pl = csifp::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"CSI fingerprint positioning pipeline"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    bool resume = false;
    bool sweep = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("-s,--set", overrides, "override a key, e.g. --set train.epochs=5 (repeatable)");
        sub->add_option("-o,--out", out_dir, "output directory, overrides run.output_dir");
    };
    auto* scene = app.add_subcommand("scene", "write the scene artifact and LOS/NLOS summary");
    auto* dataset = app.add_subcommand("dataset", "generate, split and save the fingerprint dataset");
    auto* train = app.add_subcommand("train", "train the classifier and write checkpoints and metrics");
    auto* eval = app.add_subcommand("eval", "evaluate positioning error on the test points");
    auto* verify = app.add_subcommand("verify", "recompute and check the artifact hash chain");
    auto* run = app.add_subcommand("run", "scene, dataset, train and eval in sequence");
    for (auto* sub : {scene, dataset, train, eval, verify, run}) common(sub);
    train->add_flag("--resume", resume, "continue from last.ckpt");
    eval->add_flag("--sweep", sweep, "also tabulate mean error for R = 1..eval.sweep_max_r");
    run->add_flag("--sweep", sweep, "also run the R sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(pl::ExitCode::config);
    }

    try {
        const auto rc = pl::load_run_config_file(config_path, overrides, out_dir);
        auto& log = std::cout;
        log << std::unitbuf;  // progress must show up when stdout is a file
        if (scene->parsed()) pl::cmd_scene(rc, log);
        if (dataset->parsed()) pl::cmd_dataset(rc, log);
        if (train->parsed()) pl::cmd_train(rc, resume, log);
        if (eval->parsed()) pl::cmd_eval(rc, sweep, log);
        if (verify->parsed()) pl::cmd_verify(rc, log);
        if (run->parsed()) pl::run_all(rc, sweep, log);
    } catch (const std::exception& e) {
        std::cout.flush();
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(pl::exit_code_for(e));
    }
    return 0;
}
