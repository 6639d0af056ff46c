#include "cdcl/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cdcl/config.hpp"
#include "cdcl/dataset.hpp"
#include "cdcl/png_io.hpp"

namespace cdcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string seed_path(const std::string& command) {
    if (command == "gen-data") return "scene.seed";
    if (command == "train") return "seed";
    if (command == "sweep") return "train.seed";
    if (command == "ablate") return "shared.seed";
    throw UsageError("--seed does not apply to " + command);
}

json skeletons_json(const std::vector<PersonSkeleton>& people) {
    json arr = json::array();
    for (const PersonSkeleton& p : people) {
        json joints = json::array();
        for (const PersonSkeleton::Joint& jt : p.joints)
            joints.push_back(
                {{"present", jt.present}, {"x", jt.x}, {"y", jt.y}, {"score", jt.score}});
        json limbs = json::array();
        for (auto [idx, score] : p.limbs_used)
            limbs.push_back({{"limb", idx}, {"score", score}});
        arr.push_back({{"joints", joints}, {"limbs", limbs}, {"total_score", p.total_score}});
    }
    return arr;
}

int run_command(const std::string& command, const json& cfg, const std::string& out_dir) {
    if (command == "gen-data") {
        SceneConfig sc = scene_from_json(cfg.at("scene"));
        int count = cfg.at("count").get<int>();
        Domain domain = domain_from_string(cfg.at("domain").get<std::string>());
        std::string manifest = generate_dataset(sc, count, domain, out_dir);
        std::cout << "wrote " << manifest << "\n";
        return kExitOk;
    }
    if (command == "train") {
        TrainConfig c = train_from_json(cfg);
        c.out_dir = out_dir;
        TrainResult r = train(c);
        double last = r.history.empty() ? 0.0 : r.history.back().total;
        std::cout << "steps=" << r.steps_completed << " last_total=" << last
                  << " checkpoint=" << r.final_checkpoint << "\n";
        if (r.aborted) {
            std::cerr << "runtime-error: non-finite loss; last good checkpoint kept\n";
            return kExitRuntime;
        }
        return kExitOk;
    }
    if (command == "eval") {
        net::Model model = net::load_checkpoint(cfg.at("checkpoint").get<std::string>());
        std::vector<AnnotatedSample> samples =
            load_dataset(cfg.at("manifest").get<std::string>());
        DecodeOptions opts = decode_from_json(cfg.at("decode"));
        bool incl = cfg.at("include_background").get<bool>();
        std::string protocol = cfg.at("protocol").get<std::string>();
        EvalRow row;
        if (protocol == "pascal6") {
            row = evaluate(model, samples, projection_body14_to_pascal6(),
                           pascal_part_taxonomy(), opts, incl);
        } else if (protocol == "identity") {
            row = evaluate(model, samples, identity_projection(model.config.taxonomy),
                           model.config.taxonomy, opts, incl);
        } else {
            throw std::invalid_argument("unknown eval protocol: " + protocol);
        }
        std::ofstream f(fs::path(out_dir) / "eval.csv");
        if (!f) throw std::runtime_error("cannot write eval.csv in " + out_dir);
        f << eval_csv_header(row.class_names) << '\n' << eval_csv_row(protocol, 0, row) << '\n';
        std::cout << "miou=" << row.report.mean << " rows=" << out_dir << "/eval.csv\n";
        return kExitOk;
    }
    if (command == "infer") {
        net::Model model = net::load_checkpoint(cfg.at("checkpoint").get<std::string>());
        ImageU8 image = read_png_rgb(cfg.at("image").get<std::string>());
        DecodeOptions opts = decode_from_json(cfg.at("decode"));
        InferResult r = infer(model, image, opts);
        write_png_indexed((fs::path(out_dir) / "parts.png").string(), r.labels);
        json sk{{"skeletons", skeletons_json(r.skeletons)},
                {"novel_skeletons", skeletons_json(r.novel_skeletons)}};
        std::ofstream f(fs::path(out_dir) / "skeletons.json");
        if (!f) throw std::runtime_error("cannot write skeletons.json in " + out_dir);
        f << sk.dump(1) << "\n";
        std::cout << "persons=" << r.skeletons.size() << " parts=" << out_dir << "/parts.png\n";
        return kExitOk;
    }
    if (command == "sweep") {
        TrainConfig shared = train_from_json(cfg.at("train"));
        shared.out_dir = out_dir;
        std::vector<SweepCell> cells = sweep(cfg.at("beta_values").get<std::vector<double>>(),
                                             cfg.at("gamma_values").get<std::vector<double>>(),
                                             shared);
        std::cout << "cells=" << cells.size() << " table=" << out_dir << "/sweep.csv\n";
        return kExitOk;
    }
    if (command == "ablate") {
        AblationConfig a = ablation_from_json(cfg);
        a.out_dir = out_dir;
        std::vector<AblationCell> cells = ablation_suite(a);
        std::cout << "cells=" << cells.size() << " summary=" << out_dir << "/summary.csv\n";
        return kExitOk;
    }
    throw UsageError("unknown command: " + command);
}

}  // namespace

int dispatch(const Invocation& inv) {
    try {
        if (inv.command.empty()) throw UsageError("no command given");
        if (inv.out_dir.empty()) throw UsageError("--out is required");
        std::string text = inv.config_path.empty() ? "" : read_file(inv.config_path);
        json cfg;
        try {
            cfg = resolve_config(inv.command, text, inv.overrides);
            if (inv.seed)
                apply_override(cfg, seed_path(inv.command) + "=" + std::to_string(*inv.seed));
        } catch (const UsageError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }

        fs::create_directories(inv.out_dir);
        {
            std::ofstream echo(fs::path(inv.out_dir) / "config.json");
            if (!echo) throw std::runtime_error("cannot write config echo in " + inv.out_dir);
            echo << json{{"command", inv.command}, {"out_dir", inv.out_dir}, {"config", cfg}}
                        .dump(1)
                 << "\n";
        }
        return run_command(inv.command, cfg, inv.out_dir);
    } catch (const UsageError& e) {
        std::cerr << "usage-error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "runtime-error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"pose-supervised multi-person part segmentation toolkit"};
    app.require_subcommand(1);
    Invocation inv;
    uint64_t seed = 0;
    const std::pair<const char*, const char*> commands[] = {
        {"gen-data", "write a labeled scene dataset"},
        {"train", "optimize a model per a training config"},
        {"eval", "score a checkpoint on a part-labeled dataset"},
        {"infer", "run one image through a checkpoint"},
        {"sweep", "train over a beta/gamma grid"},
        {"ablate", "run the ablation axes"},
    };
    for (auto [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", inv.config_path, "JSON config file");
        sub->add_option("--set", inv.overrides, "dotted.path=value override (repeatable)")
            ->allow_extra_args(false);
        sub->add_option("--out", inv.out_dir, "artifact directory");
        sub->add_option("--seed", seed, "override the run seed");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    inv.command = sub->get_name();
    if (sub->count("--seed")) inv.seed = seed;
    return dispatch(inv);
}

}  // namespace cdcl
