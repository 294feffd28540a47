// Command-line entry point: ingest | plan | generate | review-serve | export | verify | split

#include <CLI11.hpp>

#include <iostream>

#include "stylebalance/config.hpp"
#include "stylebalance/error.hpp"
#include "stylebalance/pipeline.hpp"

namespace sb = stylebalance;

int main(int argc, char** argv) {
    CLI::App app{"Class-wise style augmentation: rebalance a box-annotated detection dataset"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Run configuration file (key = value lines)");
    app.add_option("--seed", seed, "Override the configured seed");
    app.add_option("--set", overrides, "Override a config key, e.g. --set tolerance=1.1")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    auto* ingest = app.add_subcommand("ingest", "Parse and validate the dataset, print its class distribution");
    auto* plan = app.add_subcommand("plan", "Select minority-rich images and write the augmentation plan");
    auto* generate = app.add_subcommand("generate", "Execute the plan and fill the review queue");
    auto* serve = app.add_subcommand("review-serve", "Serve the review HTTP API");
    auto* exp = app.add_subcommand("export", "Write the balanced dataset and verify it");
    auto* verify = app.add_subcommand("verify", "Recount an exported dataset and check its balance");
    auto* split = app.add_subcommand("split", "Randomly split the dataset manifest into train and test manifests");
    std::string test_fraction = "898/2897";
    std::string train_out = "train.txt";
    std::string test_out = "test.txt";
    split->add_option("--test-fraction", test_fraction, "Fraction of records in the test part, e.g. 0.31 or 898/2897");
    split->add_option("--train", train_out, "Train manifest name, written under dataset_root");
    split->add_option("--test", test_out, "Test manifest name, written under dataset_root");

    for (auto* sub : {ingest, plan, generate, serve, exp, verify, split}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        sb::RunConfig config = config_path.empty() ? sb::RunConfig{} : sb::load_run_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw sb::ConfigError("--set expects key=value, got '" + kv + "'");
            sb::apply_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) config.seed = *seed;
        config.qc.validate();

        if (*ingest) {
            sb::run_ingest(config, std::cout);
            return sb::kExitOk;
        }
        if (*plan) return sb::run_plan(config, std::cout).exit_code;
        if (*generate) return sb::run_generate(config, std::cout).exit_code;
        if (*serve) return sb::run_review_serve(config, std::cout);
        if (*exp) return sb::run_export(config, std::cout).exit_code;
        if (*verify) {
            int code = sb::kExitOk;
            sb::run_verify(config, std::cout, code);
            return code;
        }
        if (*split) {
            const auto dataset = sb::load_dataset(config.dataset_root, config.manifest_path(), sb::Vocabulary(config.vocabulary));
            const auto manifest = sb::read_manifest(config.manifest_path());
            std::map<std::string, std::string> lines;
            for (const auto& e : manifest) {
                lines[e.annotation.stem().string()] = e.image.generic_string() + "\t" + e.annotation.generic_string() + "\n";
            }
            const auto [train, test] = sb::split_dataset(dataset, config.seed, sb::parse_ratio(test_fraction));
            for (const auto& [part, name] : {std::pair{&train, train_out}, std::pair{&test, test_out}}) {
                std::vector<std::string> ids;
                for (const auto& r : part->records) ids.push_back(r.id);
                std::sort(ids.begin(), ids.end());
                std::string text;
                for (const auto& id : ids) text += lines.at(id);
                sb::write_file(config.dataset_root / name, text);
            }
            std::cout << "train: " << train.records.size() << "  test: " << test.records.size() << '\n';
            return sb::kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sb::kExitError;
    }
    return sb::kExitOk;
}
