#include "scn/manifest.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace scn {

using nlohmann::json;

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kBBox: return "bbox";
    case Provenance::kRandom: return "random";
    case Provenance::kProposal: return "proposal";
  }
  return "bbox";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "'");
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "bbox") return Provenance::kBBox;
  if (s == "random") return Provenance::kRandom;
  if (s == "proposal") return Provenance::kProposal;
  throw DataError("unknown pairing provenance '" + s + "'");
}

size_t DatasetManifest::count(Split split) const {
  size_t n = 0;
  for (const auto& r : records) {
    if (r.split == split) ++n;
  }
  return n;
}

void DatasetManifest::validate(bool check_images) const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.image_id.empty()) throw DataError("manifest: empty image_id");
    if (!seen.insert(r.image_id).second) {
      throw DataError("manifest: duplicate image_id '" + r.image_id + "'");
    }
    if (r.width <= 0 || r.height <= 0) {
      throw DataError("manifest: bad dimensions for '" + r.image_id + "'");
    }
    for (const auto& b : r.boxes) b.box.validate();
    if (r.pair) {
      const int n = static_cast<int>(r.boxes.size());
      if (r.pair->input < 0 || r.pair->input >= n || r.pair->target < 0 ||
          r.pair->target >= n || r.pair->input == r.pair->target) {
        throw DataError("manifest: invalid designated pair for '" +
                        r.image_id + "'");
      }
    }
    if (check_images && !std::filesystem::exists(image_path(r))) {
      throw DataError("manifest: missing image file " +
                      image_path(r).string());
    }
  }
}

namespace {

json box_to_json(const ManifestBox& b) {
  json j;
  j["x"] = b.box.x0();
  j["y"] = b.box.y0();
  j["w"] = b.box.width();
  j["h"] = b.box.height();
  if (b.label >= 0) j["label"] = b.label;
  if (b.clamped) j["clamped"] = true;
  return j;
}

ManifestBox box_from_json(const json& j) {
  ManifestBox b;
  b.box = BoundingBox::from_xywh(j.at("x").get<float>(), j.at("y").get<float>(),
                                 j.at("w").get<float>(), j.at("h").get<float>());
  b.label = j.value("label", -1);
  b.clamped = j.value("clamped", false);
  return b;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      ManifestRecord r;
      r.image_id = j.at("image_id").get<std::string>();
      r.image_path = j.at("path").get<std::string>();
      r.width = j.at("width").get<int>();
      r.height = j.at("height").get<int>();
      r.split = split_from_string(j.at("split").get<std::string>());
      r.provenance = provenance_from_string(j.at("provenance").get<std::string>());
      for (const auto& bj : j.at("boxes")) r.boxes.push_back(box_from_json(bj));
      if (j.contains("pair")) {
        DesignatedPair p;
        p.input = j["pair"].at("input").get<int>();
        p.target = j["pair"].at("target").get<int>();
        r.pair = p;
      }
      manifest.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError("manifest " + path.string() + " line " +
                      std::to_string(line_no) + ": " + e.what());
    }
  }
  manifest.validate();
  return manifest;
}

void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : manifest.records) {
    json j;
    j["image_id"] = r.image_id;
    j["path"] = r.image_path;
    j["width"] = r.width;
    j["height"] = r.height;
    j["split"] = to_string(r.split);
    j["provenance"] = to_string(r.provenance);
    json boxes = json::array();
    for (const auto& b : r.boxes) boxes.push_back(box_to_json(b));
    j["boxes"] = std::move(boxes);
    if (r.pair) {
      j["pair"] = {{"input", r.pair->input}, {"target", r.pair->target}};
    }
    out << j.dump() << "\n";
  }
}

std::vector<Proposal> parse_proposals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open proposal file " + path.string());
  std::vector<Proposal> proposals;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Proposal p;
      p.image_id = j.at("image_id").get<std::string>();
      p.x = j.at("x").get<float>();
      p.y = j.at("y").get<float>();
      p.w = j.at("w").get<float>();
      p.h = j.at("h").get<float>();
      p.confidence = j.at("confidence").get<float>();
      if (p.w <= 0 || p.h <= 0) {
        throw DataError("nonpositive box extent");
      }
      proposals.push_back(std::move(p));
    } catch (const DataError&) {
      throw DataError("proposal file " + path.string() + " line " +
                      std::to_string(line_no) + ": nonpositive box extent");
    } catch (const json::exception& e) {
      throw DataError("proposal file " + path.string() + " line " +
                      std::to_string(line_no) + ": " + e.what());
    }
  }
  return proposals;
}

std::vector<Proposal> filter_proposals(const std::vector<Proposal>& proposals,
                                       const ProposalFilter& filter) {
  std::vector<Proposal> kept;
  for (const auto& p : proposals) {
    if (p.confidence < filter.min_confidence) continue;
    const float aspect = p.w / p.h;
    if (aspect < filter.aspect_lo || aspect > filter.aspect_hi) continue;
    kept.push_back(p);
  }
  return kept;
}

DatasetManifest ingest_proposals(const std::filesystem::path& path,
                                 const DatasetManifest& dataset,
                                 const ProposalFilter& filter) {
  const auto kept = filter_proposals(parse_proposals(path), filter);

  std::map<std::string, size_t> index;
  DatasetManifest out;
  out.base_dir = dataset.base_dir;
  for (const auto& r : dataset.records) {
    ManifestRecord copy = r;
    copy.boxes.clear();
    copy.pair.reset();
    copy.provenance = Provenance::kProposal;
    index[r.image_id] = out.records.size();
    out.records.push_back(std::move(copy));
  }

  for (const auto& p : kept) {
    auto it = index.find(p.image_id);
    if (it == index.end()) {
      throw DataError("proposal references unknown image '" + p.image_id + "'");
    }
    ManifestRecord& record = out.records[it->second];
    const float iw = static_cast<float>(record.width);
    const float ih = static_cast<float>(record.height);
    float x0 = p.x, y0 = p.y, x1 = p.x + p.w, y1 = p.y + p.h;
    const bool out_of_image = x0 < 0 || y0 < 0 || x1 > iw || y1 > ih;
    x0 = std::max(0.0f, x0);
    y0 = std::max(0.0f, y0);
    x1 = std::min(iw, x1);
    y1 = std::min(ih, y1);
    if (x1 <= x0 || y1 <= y0) {
      throw DataError("proposal for '" + p.image_id +
                      "' lies fully outside the image");
    }
    ManifestBox box;
    box.box = BoundingBox::from_xywh(x0, y0, x1 - x0, y1 - y0);
    box.clamped = out_of_image;
    record.boxes.push_back(box);
  }
  return out;
}

}  // namespace scn
