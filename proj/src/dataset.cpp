#include "cdcl/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "cdcl/png_io.hpp"

namespace cdcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

AnnotatedSample load_annotated(const fs::path& base, const json& entry) {
    AnnotatedSample s;
    s.image = read_png_rgb((base / entry.at("image").get<std::string>()).string());
    s.parts = read_png_indexed((base / entry.at("parts").get<std::string>()).string());
    json ann = parse_file((base / entry.at("ann").get<std::string>()).string());
    s.domain = domain_from_string(ann.at("domain").get<std::string>());
    s.skeleton = ann.at("skeleton").get<std::string>();
    for (const json& p : ann.at("persons")) {
        PersonAnnotation pa;
        for (const json& k : p.at("keypoints"))
            pa.keypoints.push_back({static_cast<float>(k.at(0).get<double>()),
                                    static_cast<float>(k.at(1).get<double>()),
                                    k.at(2).get<bool>()});
        s.persons.push_back(std::move(pa));
    }
    for (const json& r : ann.at("ignore_regions"))
        s.ignore_regions.push_back({static_cast<float>(r.at(0).get<double>()),
                                    static_cast<float>(r.at(1).get<double>()),
                                    static_cast<float>(r.at(2).get<double>()),
                                    static_cast<float>(r.at(3).get<double>())});
    return s;
}

}  // namespace

std::vector<AnnotatedSample> load_dataset(const std::string& manifest_path) {
    json manifest = parse_file(manifest_path);
    if (manifest.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported manifest version in " + manifest_path);
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<AnnotatedSample> out;
    out.reserve(manifest.at("samples").size());
    for (const json& entry : manifest.at("samples")) out.push_back(load_annotated(base, entry));
    return out;
}

std::vector<AnnotatedSample> ingest_coco_keypoints(const std::string& json_path,
                                                   const std::string& image_dir) {
    json root = parse_file(json_path);
    struct ImageRec {
        std::string file;
        int h = 0, w = 0;
    };
    std::map<int64_t, ImageRec> images;
    if (!root.contains("images") || !root.contains("annotations"))
        throw std::runtime_error(json_path + ": not a COCO keypoint file (missing sections)");
    for (const json& im : root.at("images"))
        images[im.at("id").get<int64_t>()] = {im.at("file_name").get<std::string>(),
                                              im.at("height").get<int>(),
                                              im.at("width").get<int>()};

    std::map<int64_t, AnnotatedSample> samples;
    for (const json& im : root.at("images")) {
        int64_t id = im.at("id").get<int64_t>();
        AnnotatedSample s;
        fs::path p = fs::path(image_dir) / images[id].file;
        if (!fs::exists(p))
            throw std::runtime_error(json_path + ": image file missing: " + p.string());
        s.image = read_png_rgb(p.string());
        if (s.image.h != images[id].h || s.image.w != images[id].w)
            throw std::runtime_error(json_path + ": image " + images[id].file +
                                     " size differs from its record");
        s.domain = Domain::real;
        s.skeleton = "coco17";
        samples[id] = std::move(s);
    }

    for (const json& an : root.at("annotations")) {
        int64_t rec_id = an.value("id", int64_t(-1));
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(json_path + ": annotation " + std::to_string(rec_id) + ": " +
                                     why);
        };
        int64_t image_id = an.at("image_id").get<int64_t>();
        auto it = samples.find(image_id);
        if (it == samples.end()) fail("references unknown image " + std::to_string(image_id));
        AnnotatedSample& s = it->second;
        if (an.value("iscrowd", 0) != 0) {
            const json& bbox = an.at("bbox");
            if (bbox.size() != 4) fail("crowd record without a 4-element bbox");
            s.ignore_regions.push_back({static_cast<float>(bbox.at(0).get<double>()),
                                        static_cast<float>(bbox.at(1).get<double>()),
                                        static_cast<float>(bbox.at(2).get<double>()),
                                        static_cast<float>(bbox.at(3).get<double>())});
            continue;
        }
        const json& kps = an.at("keypoints");
        if (kps.size() != 17 * 3)
            fail("keypoint array has " + std::to_string(kps.size()) + " values, expected 51");
        PersonAnnotation pa;
        pa.keypoints.resize(17);
        for (int j = 0; j < 17; ++j) {
            double x = kps.at(3 * j).get<double>();
            double y = kps.at(3 * j + 1).get<double>();
            int v = kps.at(3 * j + 2).get<int>();
            if (v < 0 || v > 2) fail("visibility flag outside {0,1,2}");
            Keypoint& k = pa.keypoints[j];
            k.labeled = v != 0;
            // Clamp occasional out-of-frame annotations into the image.
            k.x = std::clamp(static_cast<float>(x), 0.f, static_cast<float>(s.image.w - 1));
            k.y = std::clamp(static_cast<float>(y), 0.f, static_cast<float>(s.image.h - 1));
        }
        s.persons.push_back(std::move(pa));
    }

    std::vector<AnnotatedSample> out;
    out.reserve(samples.size());
    for (auto& [id, s] : samples) out.push_back(std::move(s));
    return out;
}

}  // namespace cdcl
