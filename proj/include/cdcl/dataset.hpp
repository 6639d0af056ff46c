#pragma once

#include <string>
#include <vector>

#include "cdcl/sample.hpp"

namespace cdcl {

// Loads every sample listed in a dataset manifest written by
// generate_dataset. Paths inside the manifest are relative to its directory.
std::vector<AnnotatedSample> load_dataset(const std::string& manifest_path);

// Reads a COCO-style keypoint annotation file. Visibility 0 maps to absent,
// 1 and 2 to labeled; iscrowd records become ignore rectangles. Images must
// be PNGs inside image_dir. Malformed records are rejected with the file
// and record id in the diagnostic.
std::vector<AnnotatedSample> ingest_coco_keypoints(const std::string& json_path,
                                                   const std::string& image_dir);

}  // namespace cdcl
