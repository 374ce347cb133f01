#include "das/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "das/error.hpp"
#include "json.hpp"

namespace das {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed_manifest(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::MalformedManifest, path.string() + ": " + what);
}

std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingFile, path.string() + " does not exist");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::vector<double> number_array(const json& node, const char* field) {
  if (!node.is_array()) throw Error(ErrorCode::MalformedRecord, std::string(field) + " is not an array");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) throw Error(ErrorCode::MalformedRecord, std::string(field) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

BoundingBox parse_box(const json& node) {
  auto coords = number_array(node, "bbox");
  if (coords.size() != 4) throw Error(ErrorCode::MalformedRecord, "bbox needs 4 coordinates");
  return make_box(coords[0], coords[1], coords[2], coords[3]);
}

ProbabilityVector parse_probs(const json& node, std::size_t expected, const char* context) {
  auto values = number_array(node, "probs");
  if (values.size() != expected) {
    throw Error(ErrorCode::InconsistentDims, std::string(context) + " probs has " +
                                                 std::to_string(values.size()) + " entries, expected " +
                                                 std::to_string(expected));
  }
  return ProbabilityVector::from_values(std::move(values));
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::MalformedRecord, std::string("missing field '") + key + "'");
  return *it;
}

ImageInference parse_image_line(const json& rec, std::span<const float> sidecar, const RunDims& dims) {
  if (!rec.is_object()) throw Error(ErrorCode::MalformedRecord, "record is not an object");
  ImageInference image;
  const auto& id = require(rec, "image_id");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw Error(ErrorCode::MalformedRecord, "image_id must be a non-empty string");
  }
  image.image_id = id.get<std::string>();

  if (auto it = rec.find("detections"); it != rec.end()) {
    if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, "detections is not an array");
    image.detections.reserve(it->size());
    for (const auto& det : *it) {
      if (!det.is_object()) throw Error(ErrorCode::MalformedRecord, "detection is not an object");
      Detection d;
      d.bbox = parse_box(require(det, "bbox"));
      d.probs = parse_probs(require(det, "probs"), dims.num_classes, "detection");
      image.detections.push_back(std::move(d));
    }
  }

  if (auto it = rec.find("proposals"); it != rec.end()) {
    if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, "proposals is not an array");
    image.proposals.reserve(it->size());
    for (const auto& prop : *it) {
      if (!prop.is_object()) throw Error(ErrorCode::MalformedRecord, "proposal is not an object");
      ProposalRecord p;
      if (auto f = prop.find("feature"); f != prop.end()) {
        p.feature = number_array(*f, "feature");
      } else if (auto r = prop.find("feature_ref"); r != prop.end()) {
        const auto& offset = require(*r, "offset");
        const auto& count = require(*r, "count");
        if (!offset.is_number_unsigned() || !count.is_number_unsigned()) {
          throw Error(ErrorCode::MalformedRecord, "feature_ref offset/count must be unsigned integers");
        }
        const auto off = offset.get<std::size_t>();
        const auto cnt = count.get<std::size_t>();
        if (off > sidecar.size() || cnt > sidecar.size() - off) {
          throw Error(ErrorCode::MalformedRecord, "feature_ref [" + std::to_string(off) + ", +" +
                                                      std::to_string(cnt) + ") exceeds sidecar of " +
                                                      std::to_string(sidecar.size()) + " values");
        }
        p.feature.assign(sidecar.begin() + static_cast<std::ptrdiff_t>(off),
                         sidecar.begin() + static_cast<std::ptrdiff_t>(off + cnt));
      } else {
        throw Error(ErrorCode::MalformedRecord, "proposal needs 'feature' or 'feature_ref'");
      }
      if (p.feature.size() != dims.feature_dim) {
        throw Error(ErrorCode::InconsistentDims, "proposal feature has " + std::to_string(p.feature.size()) +
                                                     " values, manifest declares d=" +
                                                     std::to_string(dims.feature_dim));
      }
      for (double v : p.feature) {
        if (!std::isfinite(v)) throw Error(ErrorCode::MalformedRecord, "non-finite feature value");
      }
      p.probs = parse_probs(require(prop, "probs"), dims.num_classes + 1, "proposal");
      image.proposals.push_back(std::move(p));
    }
  }
  return image;
}

json box_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

json probs_json(const ProbabilityVector& p) {
  return json(std::vector<double>(p.values().begin(), p.values().end()));
}

std::string_view domain_dir_tag(Domain domain) { return domain == Domain::source ? "source" : "target"; }

// Relative path of `p` against `base` when `p` lives inside it.
std::string relative_string(const fs::path& p, const fs::path& base) {
  auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

ordered_json pass_file_json(const PassFile& file, const fs::path& base) {
  if (!file.features) return relative_string(file.dump, base);
  ordered_json node;
  node["dump"] = relative_string(file.dump, base);
  node["features"] = relative_string(*file.features, base);
  return node;
}

PassFile parse_pass_file(const json& node, const fs::path& manifest_path) {
  if (node.is_string()) return PassFile{node.get<std::string>(), std::nullopt};
  if (node.is_object() && node.contains("dump") && node["dump"].is_string()) {
    PassFile file{node["dump"].get<std::string>(), std::nullopt};
    if (auto it = node.find("features"); it != node.end()) {
      if (!it->is_string()) malformed_manifest(manifest_path, "pass 'features' must be a path string");
      file.features = it->get<std::string>();
    }
    return file;
  }
  malformed_manifest(manifest_path, "pass entry must be a path or {dump, features}");
}

void require_exists(const RunManifest& m, const PassFile& file) {
  if (!fs::exists(m.resolve(file.dump))) {
    throw Error(ErrorCode::MissingFile, m.resolve(file.dump).string() + " does not exist");
  }
  if (file.features && !fs::exists(m.resolve(*file.features))) {
    throw Error(ErrorCode::MissingFile, m.resolve(*file.features).string() + " does not exist");
  }
}

PassFile resolved(const RunManifest& m, const PassFile& file) {
  PassFile out{m.resolve(file.dump), std::nullopt};
  if (file.features) out.features = m.resolve(*file.features);
  return out;
}

}  // namespace

RunManifest parse_manifest(const fs::path& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    malformed_manifest(path, e.what());
  }
  if (!doc.is_object()) malformed_manifest(path, "top level must be an object");

  RunManifest m;
  m.base_dir = path.parent_path();
  try {
    if (auto it = doc.find("schema"); it != doc.end() && *it != kManifestSchema) {
      malformed_manifest(path, "unsupported schema " + it->dump());
    }
    m.run_id = doc.at("run_id").get<std::string>();
    const auto k = doc.at("K").get<std::int64_t>();
    const auto d = doc.at("d").get<std::int64_t>();
    if (k < 1) malformed_manifest(path, "K must be >= 1");
    if (d < 1) malformed_manifest(path, "d must be >= 1");
    m.dims = RunDims{static_cast<std::size_t>(k), static_cast<std::size_t>(d)};
    m.gamma = doc.value("gamma", 1.0);
    if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) malformed_manifest(path, "gamma must be > 0");
    m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (m.class_names.size() != m.dims.num_classes) {
      malformed_manifest(path, "K=" + std::to_string(k) + " but " + std::to_string(m.class_names.size()) +
                                   " class names");
    }
    if (auto it = doc.find("ground_truth"); it != doc.end() && !it->is_null()) {
      m.ground_truth = it->get<std::string>();
    }
    const auto& ckpts = doc.at("checkpoints");
    if (!ckpts.is_array()) malformed_manifest(path, "checkpoints must be an array");
    for (const auto& c : ckpts) {
      CheckpointEntry e;
      e.checkpoint_id = c.at("id").get<std::string>();
      if (e.checkpoint_id.empty()) malformed_manifest(path, "checkpoint id must be non-empty");
      e.index = c.at("index").get<std::int64_t>();
      if (auto it = c.find("target_original"); it != c.end() && !it->is_null()) {
        e.target_original = parse_pass_file(*it, path);
      }
      if (auto it = c.find("target_perturbed"); it != c.end() && !it->is_null()) {
        if (!it->is_array()) malformed_manifest(path, "target_perturbed must be an array");
        for (const auto& p : *it) e.target_perturbed.push_back(parse_pass_file(p, path));
      }
      if (auto it = c.find("source_proposals"); it != c.end() && !it->is_null()) {
        e.source_proposals = parse_pass_file(*it, path);
      }
      m.checkpoints.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    malformed_manifest(path, e.what());
  }

  for (const auto& c : m.checkpoints) {
    if (c.target_original) require_exists(m, *c.target_original);
    for (const auto& p : c.target_perturbed) require_exists(m, p);
    if (c.source_proposals) require_exists(m, *c.source_proposals);
  }
  if (m.ground_truth && !fs::exists(m.resolve(*m.ground_truth))) {
    throw Error(ErrorCode::MissingFile, m.resolve(*m.ground_truth).string() + " does not exist");
  }
  return m;
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  const auto base = path.parent_path();
  ordered_json doc;
  doc["schema"] = kManifestSchema;
  doc["run_id"] = m.run_id;
  doc["K"] = m.dims.num_classes;
  doc["d"] = m.dims.feature_dim;
  doc["gamma"] = m.gamma;
  doc["class_names"] = m.class_names;
  if (m.ground_truth) doc["ground_truth"] = relative_string(*m.ground_truth, base);
  auto ckpts = ordered_json::array();
  for (const auto& c : m.checkpoints) {
    ordered_json node;
    node["id"] = c.checkpoint_id;
    node["index"] = c.index;
    if (c.target_original) node["target_original"] = pass_file_json(*c.target_original, base);
    auto perturbed = ordered_json::array();
    for (const auto& p : c.target_perturbed) perturbed.push_back(pass_file_json(p, base));
    node["target_perturbed"] = std::move(perturbed);
    if (c.source_proposals) node["source_proposals"] = pass_file_json(*c.source_proposals, base);
    ckpts.push_back(std::move(node));
  }
  doc["checkpoints"] = std::move(ckpts);
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

PassDump parse_pass_dump(std::istream& in, std::span<const float> sidecar, const RunDims& dims,
                         Domain domain, PassKind kind, const std::string& source_name) {
  if (domain == Domain::source && kind.is_perturbed()) {
    throw Error(ErrorCode::MalformedManifest, "perturbed passes exist only for the target domain");
  }
  PassDump pass;
  pass.domain = domain;
  pass.kind = kind;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = source_name + ":" + std::to_string(line_no) + ": ";
    try {
      auto rec = json::parse(line);
      auto image = parse_image_line(rec, sidecar, dims);
      if (!seen.insert(image.image_id).second) {
        throw Error(ErrorCode::MalformedRecord, "duplicate image_id '" + image.image_id + "'");
      }
      pass.images.push_back(std::move(image));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.message());
    }
  }
  return pass;
}

std::vector<float> read_feature_sidecar(const fs::path& path) {
  auto in = open_input(path);
  const auto bytes = fs::file_size(path);
  if (bytes % sizeof(float) != 0) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": size is not a multiple of 4 bytes");
  }
  std::vector<float> values(bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw Error(ErrorCode::Io, "short read on " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) {
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&v, &u, 4);
    }
  }
  return values;
}

PassDump parse_pass_dump(const PassFile& file, const RunDims& dims, Domain domain, PassKind kind) {
  std::vector<float> sidecar;
  if (file.features) sidecar = read_feature_sidecar(*file.features);
  auto in = open_input(file.dump);
  return parse_pass_dump(in, sidecar, dims, domain, kind, file.dump.string());
}

namespace {

void write_pass_lines(const PassDump& pass, std::ostream& out, std::vector<float>* sidecar) {
  for (const auto& image : pass.images) {
    ordered_json rec;
    rec["image_id"] = image.image_id;
    auto dets = ordered_json::array();
    for (const auto& d : image.detections) {
      ordered_json node;
      node["bbox"] = box_json(d.bbox);
      node["probs"] = probs_json(d.probs);
      dets.push_back(std::move(node));
    }
    rec["detections"] = std::move(dets);
    auto props = ordered_json::array();
    for (const auto& p : image.proposals) {
      ordered_json node;
      if (sidecar != nullptr) {
        ordered_json ref;
        ref["offset"] = sidecar->size();
        ref["count"] = p.feature.size();
        node["feature_ref"] = std::move(ref);
        for (double v : p.feature) sidecar->push_back(static_cast<float>(v));
      } else {
        node["feature"] = p.feature;
      }
      node["probs"] = probs_json(p.probs);
      props.push_back(std::move(node));
    }
    rec["proposals"] = std::move(props);
    out << rec.dump() << '\n';
  }
}

}  // namespace

void write_pass_dump(const PassDump& pass, std::ostream& out) { write_pass_lines(pass, out, nullptr); }

void write_pass_dump(const PassDump& pass, const PassFile& file) {
  auto out = open_output(file.dump);
  if (!file.features) {
    write_pass_lines(pass, out, nullptr);
  } else {
    std::vector<float> sidecar;
    write_pass_lines(pass, out, &sidecar);
    auto bin = open_output(*file.features);
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : sidecar) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&v, &u, 4);
      }
    }
    bin.write(reinterpret_cast<const char*>(sidecar.data()),
              static_cast<std::streamsize>(sidecar.size() * sizeof(float)));
    if (!bin) throw Error(ErrorCode::Io, "failed writing " + file.features->string());
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + file.dump.string());
}

GroundTruthSet parse_ground_truth(std::istream& in, const RunDims& dims, const std::string& source_name) {
  GroundTruthSet gt;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = source_name + ":" + std::to_string(line_no) + ": ";
    try {
      auto rec = json::parse(line);
      const auto& id = require(rec, "image_id");
      if (!id.is_string() || id.get<std::string>().empty()) {
        throw Error(ErrorCode::MalformedRecord, "image_id must be a non-empty string");
      }
      std::vector<GroundTruthObject> objects;
      if (auto it = rec.find("objects"); it != rec.end()) {
        if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, "objects is not an array");
        for (const auto& o : *it) {
          GroundTruthObject obj;
          obj.bbox = parse_box(require(o, "bbox"));
          const auto& cls = require(o, "class_id");
          if (!cls.is_number_integer()) throw Error(ErrorCode::MalformedRecord, "class_id must be an integer");
          const auto c = cls.get<std::int64_t>();
          if (c < 1 || c > static_cast<std::int64_t>(dims.num_classes)) {
            throw Error(ErrorCode::InconsistentDims,
                        "class_id " + std::to_string(c) + " outside 1.." + std::to_string(dims.num_classes));
          }
          obj.class_id = static_cast<int>(c);
          objects.push_back(obj);
        }
      }
      if (!gt.images.emplace(id.get<std::string>(), std::move(objects)).second) {
        throw Error(ErrorCode::MalformedRecord, "duplicate image_id '" + id.get<std::string>() + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.message());
    }
  }
  return gt;
}

GroundTruthSet parse_ground_truth(const fs::path& path, const RunDims& dims) {
  auto in = open_input(path);
  return parse_ground_truth(in, dims, path.string());
}

void write_ground_truth(const GroundTruthSet& gt, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& [id, objects] : gt.images) {
    ordered_json rec;
    rec["image_id"] = id;
    auto objs = ordered_json::array();
    for (const auto& o : objects) {
      ordered_json node;
      node["bbox"] = box_json(o.bbox);
      node["class_id"] = o.class_id;
      objs.push_back(std::move(node));
    }
    rec["objects"] = std::move(objs);
    out << rec.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

CheckpointRecord load_checkpoint(const RunManifest& m, std::size_t i) {
  const auto& entry = m.checkpoints.at(i);
  CheckpointRecord rec;
  rec.checkpoint_id = entry.checkpoint_id;
  rec.index = entry.index;
  if (!entry.target_original) {
    throw Error(ErrorCode::MissingPass, "checkpoint '" + entry.checkpoint_id + "' has no target original pass");
  }
  rec.target_original = parse_pass_dump(resolved(m, *entry.target_original), m.dims, Domain::target,
                                        PassKind::original());
  for (std::size_t p = 0; p < entry.target_perturbed.size(); ++p) {
    rec.target_perturbed.push_back(parse_pass_dump(resolved(m, entry.target_perturbed[p]), m.dims,
                                                   Domain::target, PassKind::perturbed(p)));
  }
  if (entry.source_proposals) {
    rec.source_proposals = parse_pass_dump(resolved(m, *entry.source_proposals), m.dims, Domain::source,
                                           PassKind::original());
  }
  return rec;
}

Run load_run(const RunManifest& manifest) {
  Run run;
  run.manifest = manifest;
  for (std::size_t i = 0; i < manifest.checkpoints.size(); ++i) {
    run.checkpoints.push_back(load_checkpoint(manifest, i));
  }
  if (manifest.ground_truth) {
    run.ground_truth = parse_ground_truth(manifest.resolve(*manifest.ground_truth), manifest.dims);
  }
  return run;
}

Run load_run(const fs::path& manifest_path) { return load_run(parse_manifest(manifest_path)); }

RunManifest write_run(const Run& run, const fs::path& dir, const RunWriteOptions& options) {
  RunManifest m = run.manifest;
  m.base_dir = dir;
  m.checkpoints.clear();

  auto pass_file = [&](const fs::path& stem) {
    PassFile f{dir / (stem.string() + ".jsonl"), std::nullopt};
    if (options.binary_features) f.features = dir / (stem.string() + ".f32");
    return f;
  };

  for (const auto& ckpt : run.checkpoints) {
    CheckpointEntry e;
    e.checkpoint_id = ckpt.checkpoint_id;
    e.index = ckpt.index;
    const fs::path sub = ckpt.checkpoint_id;

    auto original = pass_file(sub / "target_original");
    write_pass_dump(ckpt.target_original, original);
    e.target_original = original;

    for (std::size_t p = 0; p < ckpt.target_perturbed.size(); ++p) {
      PassFile f{dir / sub / ("target_perturbed_" + std::to_string(p) + ".jsonl"), std::nullopt};
      write_pass_dump(ckpt.target_perturbed[p], f);
      e.target_perturbed.push_back(f);
    }
    if (ckpt.source_proposals) {
      auto src = pass_file(sub / (std::string(domain_dir_tag(Domain::source)) + "_proposals"));
      write_pass_dump(*ckpt.source_proposals, src);
      e.source_proposals = src;
    }
    m.checkpoints.push_back(std::move(e));
  }

  m.ground_truth.reset();
  if (run.ground_truth) {
    m.ground_truth = dir / "ground_truth.jsonl";
    write_ground_truth(*run.ground_truth, *m.ground_truth);
  }
  write_manifest(m, dir / "manifest.json");
  return parse_manifest(dir / "manifest.json");
}

}  // namespace das
