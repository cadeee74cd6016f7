#pragma once

// Run-directory comparison used by the determinism checks: JSON documents
// are compared with their "timing" members removed, the CKM radar table
// without its wall-clock columns, and every other file byte for byte.

#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uavckm/io.hpp"

namespace uavckm::oracle {

inline void strip_timing(nlohmann::json& doc) {
  if (doc.is_object()) {
    doc.erase("timing");
    for (auto& [k, v] : doc.items()) strip_timing(v);
  } else if (doc.is_array()) {
    for (auto& v : doc) strip_timing(v);
  }
}

inline std::string drop_csv_columns(const std::string& text, const std::set<std::string>& drop) {
  std::istringstream in(text);
  std::string line;
  std::vector<bool> keep;
  std::ostringstream out;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      for (const auto& c : cells) keep.push_back(!drop.count(c));
      header = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i < keep.size() && keep[i]) out << cells[i] << ',';
    }
    out << '\n';
  }
  return out.str();
}

inline std::string comparable_content(const std::filesystem::path& p) {
  const std::string text = read_text_file(p.string());
  if (p.extension() == ".json") {
    nlohmann::json doc = nlohmann::json::parse(text);
    strip_timing(doc);
    return doc.dump();
  }
  if (p.filename() == "ckm_radar.csv") {
    return drop_csv_columns(text, {"train_seconds", "infer_seconds_per_1k", "scaled_train", "scaled_infer"});
  }
  if (p.extension() == ".svg" && p.filename() == "ckm_radar.svg") return "";
  return text;
}

/// Relative paths whose comparable content differs, plus files present in
/// only one of the two trees. `ignore` lists file names skipped entirely.
inline std::vector<std::string> tree_differences(const std::filesystem::path& a, const std::filesystem::path& b,
                                                 const std::set<std::string>& ignore = {"config.json"}) {
  namespace fs = std::filesystem;
  auto listing = [&](const fs::path& root) {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && !ignore.count(e.path().filename().string())) {
        files.insert(fs::relative(e.path(), root).string());
      }
    }
    return files;
  };
  const auto fa = listing(a), fb = listing(b);
  std::vector<std::string> diff;
  for (const auto& f : fa) {
    if (!fb.count(f)) {
      diff.push_back(f + " (only in first)");
    } else if (comparable_content(a / f) != comparable_content(b / f)) {
      diff.push_back(f);
    }
  }
  for (const auto& f : fb) {
    if (!fa.count(f)) diff.push_back(f + " (only in second)");
  }
  return diff;
}

}  // namespace uavckm::oracle
