// resfno: synthetic data, training, evaluation, ablation and reports for the Res-FNO hysteresis model.

#include "resfno/commands.hpp"
#include "resfno/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

std::string flag_name(std::string key)
{
    for (auto& c : key)
        if (c == '_') c = '-';
    return "--" + key;
}

} // namespace

int main(int argc, char** argv)
{
    using namespace resfno;
    CLI::App app{"Res-FNO magnetic hysteresis modeling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "resfno 1.0");
    bool list_keys = false;
    app.add_flag("--list-keys", list_keys, "print every config key with its default and exit");

    struct Command {
        std::string name, help;
        int (*run)(const cli::RunConfig&);
    };
    const std::vector<Command> commands{
        {"synth", "generate a synthetic hysteresis dataset", cli::cmd_synth},
        {"train", "train a model and write checkpoint + history", cli::cmd_train},
        {"eval", "evaluate a checkpoint on a dataset", cli::cmd_eval},
        {"ablate", "train and compare the three model variants", cli::cmd_ablate},
        {"report", "rebuild histogram and loop figures from an eval directory", cli::cmd_report},
    };

    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        subs.push_back(sub);
        sub->add_option("--config", config_paths[c.name], "flat key = value config file");
        for (const auto& k : cli::key_registry())
            sub->add_option(flag_name(k.key), flag_values[c.name][k.key], k.doc);
    }
    // --list-keys works without a subcommand.
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (list_keys) {
        std::cout << cli::describe_keys();
        return 0;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        const auto& name = commands[i].name;
        try {
            cli::RunConfig rc;
            if (!config_paths[name].empty()) cli::apply_config_file(rc, config_paths[name]);
            for (const auto& k : cli::key_registry())
                if (subs[i]->count(flag_name(k.key)) > 0) cli::apply_setting(rc, k.key, flag_values[name][k.key]);
            rc.finalize();
            return commands[i].run(rc);
        } catch (const Error& e) {
            std::cerr << "resfno: error: " << e.category() << ": " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "resfno: error: internal: " << e.what() << '\n';
            return 3;
        }
    }
    std::cerr << "resfno: error: usage: a subcommand is required (synth, train, eval, ablate, report)\n";
    return 1;
}
