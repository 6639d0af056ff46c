#include "cdcl/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cdcl/plot.hpp"

namespace cdcl {

namespace fs = std::filesystem;

namespace {

bool known_axis(const std::string& a) {
    return a == "configuration" || a == "appearance" || a == "model_pool" ||
           a == "background_pool";
}

}  // namespace

void validate(const AblationConfig& c) {
    net::validate(c.shared.model);
    validate(c.shared.weights);
    validate(c.scene);
    if (c.syn_count < 1 || c.real_count < 1 || c.eval_count < 1)
        throw std::invalid_argument("ablation: dataset counts must be positive");
    if (c.seeds.empty()) throw std::invalid_argument("ablation: seed list is empty");
    if (c.axes.empty()) throw std::invalid_argument("ablation: no axes requested");
    for (const std::string& a : c.axes)
        if (!known_axis(a)) throw std::invalid_argument("ablation: unknown axis: " + a);
    for (const std::string& a : c.axes) {
        bool empty = (a == "configuration" && c.configurations.empty()) ||
                     (a == "appearance" && c.appearances.empty()) ||
                     (a == "model_pool" && c.model_pools.empty()) ||
                     (a == "background_pool" && c.background_pools.empty());
        if (empty) throw std::invalid_argument("ablation: axis has no values: " + a);
    }
    if (c.out_dir.empty()) throw std::invalid_argument("ablation: out_dir required");
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: no values");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationCell> ablation_suite(const AblationConfig& abl) {
    validate(abl);
    fs::create_directories(abl.out_dir);
    std::ofstream cells_csv(abl.out_dir + "/cells.csv");
    if (!cells_csv)
        throw std::runtime_error("ablation: cannot write " + abl.out_dir + "/cells.csv");
    cells_csv << "axis,value,seed,miou\n" << std::flush;

    std::vector<AblationCell> cells;

    for (uint64_t s : abl.seeds) {
        std::string rep_dir = abl.out_dir + "/data/seed-" + std::to_string(s);
        SceneConfig rc = abl.scene;
        rc.background = BackgroundKind::composite;
        rc.appearance = Appearance::original;
        rc.seed = splitmix64(s ^ 0x9d39247e33776d41ULL);
        std::string real_manifest =
            generate_dataset(rc, abl.real_count, Domain::real, rep_dir + "/real");
        SceneConfig ec = rc;
        ec.seed = splitmix64(s ^ 0x8a5cd789635d2dffULL);
        std::string eval_manifest =
            generate_dataset(ec, abl.eval_count, Domain::real, rep_dir + "/eval");

        auto run_cell = [&](const std::string& axis, const std::string& value, TrainMode mode,
                            const SceneConfig& sc) {
            std::string cell_dir =
                abl.out_dir + "/" + axis + "-" + value + "/seed-" + std::to_string(s);
            std::string syn_manifest =
                generate_dataset(sc, abl.syn_count, Domain::synthetic, cell_dir + "/syn");
            TrainConfig c = abl.shared;
            c.seed = splitmix64(s ^ 0x2545f4914f6cdd1dULL);
            c.syn_manifest = syn_manifest;
            c.real_manifest = real_manifest;
            c.eval_manifest = eval_manifest;
            c.out_dir = cell_dir;
            RunResult rr = run_configuration(mode, c);
            cells.push_back({axis, value, s, rr.eval.report.mean});
            char num[32];
            std::snprintf(num, sizeof num, "%.9g", rr.eval.report.mean);
            cells_csv << axis << ',' << value << ',' << s << ',' << num << '\n' << std::flush;
        };

        for (const std::string& axis : abl.axes) {
            SceneConfig sc = abl.scene;
            sc.seed = splitmix64(s ^ 0xda3e39cb94b95bdbULL);
            if (axis == "configuration") {
                sc.background = BackgroundKind::blank_room;
                for (TrainMode mode : abl.configurations)
                    run_cell(axis, to_string(mode), mode, sc);
            } else if (axis == "appearance") {
                sc.background = BackgroundKind::composite;
                for (Appearance a : abl.appearances) {
                    SceneConfig v = sc;
                    v.appearance = a;
                    run_cell(axis, to_string(a), TrainMode::CDCL, v);
                }
            } else if (axis == "model_pool") {
                sc.background = BackgroundKind::composite;
                for (int m : abl.model_pools) {
                    SceneConfig v = sc;
                    v.model_pool_size = m;
                    run_cell(axis, std::to_string(m), TrainMode::CDCL, v);
                }
            } else {
                sc.background = BackgroundKind::composite;
                for (int bp : abl.background_pools) {
                    SceneConfig v = sc;
                    v.background_pool = bp;
                    run_cell(axis, std::to_string(bp), TrainMode::CDCL, v);
                }
            }
        }
    }

    std::ofstream summary(abl.out_dir + "/summary.csv");
    if (!summary)
        throw std::runtime_error("ablation: cannot write " + abl.out_dir + "/summary.csv");
    summary << "axis,value,median_miou,seeds\n";
    for (const std::string& axis : abl.axes) {
        std::vector<std::string> labels;
        std::vector<double> medians;
        for (const AblationCell& c : cells) {
            if (c.axis != axis || std::find(labels.begin(), labels.end(), c.value) != labels.end())
                continue;
            std::vector<double> vals;
            for (const AblationCell& o : cells)
                if (o.axis == axis && o.value == c.value) vals.push_back(o.miou);
            labels.push_back(c.value);
            medians.push_back(median(vals));
            char num[32];
            std::snprintf(num, sizeof num, "%.9g", medians.back());
            summary << axis << ',' << c.value << ',' << num << ',' << vals.size() << '\n';
        }
        bar_plot_png(abl.out_dir + "/" + axis + ".png", "miou by " + axis, labels, medians);
    }
    return cells;
}

}  // namespace cdcl
