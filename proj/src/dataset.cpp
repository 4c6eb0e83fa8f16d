#include "tinyssd/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace tinyssd {

void save_annotations(const std::string& path,
                      const std::vector<GroundTruth>& gts) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_annotations: cannot open " + path);
  f << std::setprecision(17);
  for (const GroundTruth& gt : gts)
    f << gt.label << " " << gt.box.xmin << " " << gt.box.ymin << " "
      << gt.box.xmax << " " << gt.box.ymax << "\n";
}

std::vector<GroundTruth> load_annotations(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_annotations: cannot open " + path);
  std::vector<GroundTruth> gts;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    GroundTruth gt;
    if (!(ss >> gt.label >> gt.box.xmin >> gt.box.ymin >> gt.box.xmax >>
          gt.box.ymax))
      throw std::runtime_error("load_annotations: malformed line in " + path);
    gts.push_back(gt);
  }
  return gts;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_manifest: cannot open " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string image, annotation;
    if (!(ss >> image >> annotation))
      throw std::runtime_error("load_manifest: malformed line in " + path);
    entries.push_back(
        {(base / image).string(), (base / annotation).string()});
  }
  return entries;
}

std::string write_dataset(const std::string& dir,
                          const std::vector<ImageSample>& samples) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "labels");
  const std::string manifest_path = (fs::path(dir) / "manifest.txt").string();
  std::ofstream manifest(manifest_path);
  if (!manifest)
    throw std::runtime_error("write_dataset: cannot open " + manifest_path);
  for (size_t i = 0; i < samples.size(); ++i) {
    std::ostringstream stem;
    stem << "img_" << std::setw(5) << std::setfill('0') << i;
    const std::string ext = samples[i].image.channels == 3 ? ".ppm" : ".pgm";
    const std::string image_rel = "images/" + stem.str() + ext;
    const std::string label_rel = "labels/" + stem.str() + ".txt";
    write_image(samples[i].image, (fs::path(dir) / image_rel).string());
    save_annotations((fs::path(dir) / label_rel).string(), samples[i].gts);
    manifest << image_rel << " " << label_rel << "\n";
  }
  return manifest_path;
}

std::vector<ImageSample> load_dataset(const std::string& manifest_path) {
  std::vector<ImageSample> samples;
  for (const ManifestEntry& entry : load_manifest(manifest_path)) {
    ImageSample s;
    s.image = read_image(entry.image_path);
    s.gts = load_annotations(entry.annotation_path);
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_detections(const std::string& path,
                     const std::vector<Detection>& dets) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_detections: cannot open " + path);
  f << std::setprecision(17);
  for (const Detection& d : dets)
    f << d.label << " " << d.score << " " << d.box.xmin << " " << d.box.ymin
      << " " << d.box.xmax << " " << d.box.ymax << "\n";
}

std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_detections: cannot open " + path);
  std::vector<Detection> dets;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Detection d;
    if (!(ss >> d.label >> d.score >> d.box.xmin >> d.box.ymin >> d.box.xmax >>
          d.box.ymax))
      throw std::runtime_error("load_detections: malformed line in " + path);
    dets.push_back(d);
  }
  return dets;
}

}  // namespace tinyssd
