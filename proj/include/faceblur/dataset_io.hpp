#pragma once

// Corpus discovery on disk and materialization of training pairs as PNG
// files plus a manifest.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "faceblur/dataset.hpp"
#include "faceblur/raster_io.hpp"

namespace faceblur {

namespace fs = std::filesystem;

struct corpus_frames {
  std::vector<annotated_frame> frames;
  fs::path image_root;                    // FDDB
  fs::path train_root;                    // WIDER
  fs::path val_root;                      // WIDER
};

inline std::vector<annotated_frame> load_fddb_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot open " + file.string());
  return parse_fddb(in, file.string());
}

inline std::vector<annotated_frame> load_wider_file(const fs::path& file, std::optional<split> official = std::nullopt) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot open " + file.string());
  return parse_wider(in, file.string(), official);
}

inline std::vector<annotated_frame> load_annotations(const fs::path& file, corpus format) {
  return format == corpus::fddb ? load_fddb_file(file) : load_wider_file(file);
}

/// FDDB layout: one or more "*ellipseList.txt" fold files anywhere under the
/// directory; images under "originalPics/" when present, else the directory.
inline corpus_frames discover_fddb(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw io_error("FDDB directory not found: " + dir.string());
  std::vector<fs::path> folds;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename().string().ends_with("ellipseList.txt")) folds.push_back(e.path());
  if (folds.empty()) throw io_error("no *ellipseList.txt files under " + dir.string());
  std::sort(folds.begin(), folds.end());
  corpus_frames c;
  for (const auto& f : folds) {
    auto frames = load_fddb_file(f);
    c.frames.insert(c.frames.end(), frames.begin(), frames.end());
  }
  c.image_root = fs::is_directory(dir / "originalPics") ? dir / "originalPics" : dir;
  return c;
}

/// WIDER layout: wider_face_train_bbx_gt.txt and/or wider_face_val_bbx_gt.txt
/// anywhere under the directory; images under WIDER_train/images and
/// WIDER_val/images when present, else the directory.
inline corpus_frames discover_wider(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw io_error("WIDER directory not found: " + dir.string());
  std::optional<fs::path> train, val;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "wider_face_train_bbx_gt.txt") train = e.path();
    if (name == "wider_face_val_bbx_gt.txt") val = e.path();
  }
  if (!train && !val) throw io_error("no wider_face_{train,val}_bbx_gt.txt under " + dir.string());
  corpus_frames c;
  if (train) c.frames = load_wider_file(*train, split::train);
  if (val) {
    auto frames = load_wider_file(*val, split::val);
    c.frames.insert(c.frames.end(), frames.begin(), frames.end());
  }
  c.train_root = fs::is_directory(dir / "WIDER_train" / "images") ? dir / "WIDER_train" / "images" : dir;
  c.val_root = fs::is_directory(dir / "WIDER_val" / "images") ? dir / "WIDER_val" / "images" : dir;
  return c;
}

/// Image file for an annotation path; FDDB paths carry no extension.
inline fs::path locate_image(const fs::path& root, const std::string& annotation_path) {
  const fs::path base = root / annotation_path;
  if (base.has_extension() && fs::is_regular_file(base)) return base;
  for (const char* ext : {".jpg", ".png", ".jpeg", ".JPG", ".PNG"}) {
    fs::path p = base;
    p += ext;
    if (fs::is_regular_file(p)) return p;
  }
  return base;
}

struct dataset_job {
  std::optional<fs::path> fddb_dir;
  std::optional<fs::path> wider_dir;
  fs::path out_dir;
  std::uint64_t seed = default_split_seed;
  sigma_rule sigma;
  std::size_t workers = 1;
};

struct dataset_result {
  pair_manifest manifest;
  std::size_t written = 0;
  std::vector<std::string> failures;  // "path: message"
};

/// Parses the corpora, assigns splits, and writes input/target PNG pairs and
/// manifest.tsv under `out_dir`. Frames whose image cannot be read are
/// reported and left out of the written manifest.
inline dataset_result materialize_dataset(const dataset_job& job,
                                          const std::function<void(const std::string&)>& log = {}) {
  corpus_frames fddb, wider;
  if (job.fddb_dir) fddb = discover_fddb(*job.fddb_dir);
  if (job.wider_dir) wider = discover_wider(*job.wider_dir);
  job.sigma.validate();

  dataset_result result;
  result.manifest = build_split(fddb.frames, wider.frames, job.seed);
  for (const char* s : {"train", "val"})
    for (const char* k : {"input", "target"}) fs::create_directories(job.out_dir / s / k);

  const auto& entries = result.manifest.entries;
  std::vector<char> ok(entries.size(), 0);
  std::vector<std::string> errors(entries.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const auto& e = entries[i];
      const bool is_fddb = e.source == corpus::fddb;
      const annotated_frame& frame = is_fddb ? fddb.frames[e.frame_index] : wider.frames[e.frame_index];
      const fs::path root = is_fddb ? fddb.image_root
                                    : (frame.official_split == split::val ? wider.val_root : wider.train_root);
      try {
        const image img = read_image(locate_image(root, frame.path));
        const auto pair = build_pair(img, frame, job.sigma);
        write_png(job.out_dir / e.input, pair.input);
        write_png(job.out_dir / e.target, pair.target);
        ok[i] = 1;
      } catch (const std::exception& ex) {
        errors[i] = frame.path + ": " + ex.what();
      }
    }
  };
  if (job.workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < job.workers; ++t) pool.emplace_back(work);
  }

  pair_manifest written;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (ok[i]) {
      written.entries.push_back(entries[i]);
      (entries[i].assigned == split::train ? written.train_count : written.val_count)++;
    } else {
      if (log) log("skipped " + errors[i]);
      result.failures.push_back(errors[i]);
    }
  }
  result.written = written.entries.size();
  std::ofstream(job.out_dir / "manifest.tsv", std::ios::binary) << write_manifest(written);
  return result;
}

}  // namespace faceblur
