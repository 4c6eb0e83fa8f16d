#pragma once

#include <string>
#include <vector>

#include "tinyssd/augment.hpp"
#include "tinyssd/inference.hpp"

namespace tinyssd {

// Annotation sidecar: one line per object, `label xmin ymin xmax ymax`,
// coordinates normalized.
void save_annotations(const std::string& path,
                      const std::vector<GroundTruth>& gts);
std::vector<GroundTruth> load_annotations(const std::string& path);

// Dataset manifest: one line per sample, `<image path> <annotation path>`,
// both relative to the manifest's directory.
struct ManifestEntry {
  std::string image_path;
  std::string annotation_path;
};
std::vector<ManifestEntry> load_manifest(const std::string& path);

// Writes images/ and labels/ subdirectories plus manifest.txt under `dir`.
// Returns the manifest path.
std::string write_dataset(const std::string& dir,
                          const std::vector<ImageSample>& samples);

std::vector<ImageSample> load_dataset(const std::string& manifest_path);

// Detection result file: one line per detection,
// `label score xmin ymin xmax ymax`.
void save_detections(const std::string& path,
                     const std::vector<Detection>& dets);
std::vector<Detection> load_detections(const std::string& path);

}  // namespace tinyssd
