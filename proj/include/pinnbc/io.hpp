#pragma once

// File formats: dataset manifests, raw float64 grids, network weights,
// training logs and content hashes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "pinnbc/bc.hpp"
#include "pinnbc/datagen.hpp"
#include "pinnbc/diffnet.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/grid.hpp"
#include "pinnbc/train.hpp"

namespace pinnbc::io {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] inline void io_fail(const fs::path& path, const std::string& what) {
  throw Error(ErrorKind::io_failure, what + ": " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_bytes(const fs::path& path, const void* data, std::size_t size) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) io_fail(path.parent_path(), "cannot create directory");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) io_fail(path, "write failed");
}

inline void write_text(const fs::path& path, const std::string& text) { write_bytes(path, text.data(), text.size()); }

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    io_fail(path, std::string("malformed JSON (") + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Little-endian float64 blocks

inline std::vector<unsigned char> encode_f64le(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto bits = std::bit_cast<std::uint64_t>(values[k]);
    for (int b = 0; b < 8; ++b) bytes[k * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

inline std::vector<double> decode_f64le(std::span<const unsigned char> bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[k * 8 + b]) << (8 * b);
    values[k] = std::bit_cast<double>(bits);
  }
  return values;
}

inline void write_raw_grid(const fs::path& path, const GridField& g) {
  const auto bytes = encode_f64le(g.values);
  write_bytes(path, bytes.data(), bytes.size());
}

inline GridField read_raw_grid(const fs::path& path, int n) {
  const std::string text = read_text(path);
  const auto expected = static_cast<std::size_t>(n) * n * 8;
  if (text.size() != expected)
    io_fail(path, "raw grid has " + std::to_string(text.size()) + " bytes, expected " + std::to_string(expected));
  GridField g(n);
  g.values = decode_f64le({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
  return g;
}

inline json grid_descriptor(const std::string& file, int n) {
  return {{"file", file}, {"shape", {n, n}}, {"dtype", "float64"}, {"byte_order", "little"}, {"order", "row-major"}};
}

// ---------------------------------------------------------------------------
// Dataset manifest

inline json range_json(const ValueRange& r) { return json::array({r.min, r.max}); }

inline ValueRange range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json knots_json(const KnotSet2D& k) {
  json coords = json::array();
  for (const auto& p : k.coords) coords.push_back({p.x, p.y});
  return {{"n", k.n}, {"coords", coords}, {"values", k.values}};
}

inline KnotSet2D knots_from(const json& j) {
  KnotSet2D k;
  k.n = j.at("n").get<int>();
  for (const auto& c : j.at("coords")) k.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
  k.values = j.at("values").get<std::vector<double>>();
  return k;
}

inline json manifest_json(const DatasetInstance& inst) {
  return {
      {"id", inst.id},
      {"seed", inst.seed},
      {"ranges", {{"a", range_json(inst.ranges.a)}, {"f", range_json(inst.ranges.f)}, {"g", range_json(inst.ranges.g)}}},
      {"n_knots", inst.a.knots().n},
      {"n_boundary_knots", inst.g.positions().size()},
      {"resolution", inst.resolution},
      {"lengthscales", {{"a", inst.a.lengthscale()}, {"f", inst.f.lengthscale()}, {"g", inst.g.lengthscale()}}},
      {"knots",
       {{"a", knots_json(inst.a.knots())},
        {"f", knots_json(inst.f.knots())},
        {"g", {{"positions", inst.g.positions()}, {"values", inst.g.values()}}}}},
      {"fit",
       {{"a", {{"jitter", inst.a.report().jitter_applied}, {"condition", inst.a.report().condition_estimate}}},
        {"f", {{"jitter", inst.f.report().jitter_applied}, {"condition", inst.f.report().condition_estimate}}},
        {"g", {{"jitter", inst.g.report().jitter_applied}, {"condition", inst.g.report().condition_estimate}}}}},
  };
}

/// Rebuilds an instance from its manifest by refitting the stored knots.
inline DatasetInstance instance_from_manifest(const json& j) {
  DatasetInstance inst;
  inst.id = j.at("id").get<int>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.ranges = {range_from(j.at("ranges").at("a")), range_from(j.at("ranges").at("f")),
                 range_from(j.at("ranges").at("g"))};
  inst.resolution = j.at("resolution").get<int>();
  const auto& ls = j.at("lengthscales");
  inst.a = fit_field(knots_from(j.at("knots").at("a")), ls.at("a").get<double>());
  inst.f = fit_field(knots_from(j.at("knots").at("f")), ls.at("f").get<double>());
  const auto& g = j.at("knots").at("g");
  inst.g = fit_boundary(g.at("positions").get<std::vector<double>>(), g.at("values").get<std::vector<double>>(),
                        ls.at("g").get<double>());
  return inst;
}

// ---------------------------------------------------------------------------
// Network weights: JSON header plus one little-endian float64 file holding,
// per layer, the row-major weight matrix followed by the bias vector.

inline json network_header(const MlpParams& p, const std::string& blob_file) {
  json layers = json::array();
  std::size_t offset = 0;
  for (const auto& l : p.layers) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"activation", to_string(l.activation)},
                      {"weight_offset", offset},
                      {"bias_offset", offset + w}});
    offset += w + static_cast<std::size_t>(l.bias.size());
  }
  return {{"format", "pinnbc-mlp-v1"}, {"widths", p.widths}, {"seed", p.seed}, {"dtype", "float64"},
          {"byte_order", "little"}, {"order", "row-major"}, {"blob", blob_file}, {"count", offset},
          {"layers", layers}};
}

inline std::vector<double> flatten(const MlpParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  for (const auto& l : p.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

inline MlpParams unflatten(const json& header, std::span<const double> flat) {
  MlpParams p;
  p.widths = header.at("widths").get<std::vector<int>>();
  p.seed = header.at("seed").get<std::uint64_t>();
  for (const auto& lj : header.at("layers")) {
    DenseLayer l;
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto wo = lj.at("weight_offset").get<std::size_t>();
    const auto bo = lj.at("bias_offset").get<std::size_t>();
    require(bo + static_cast<std::size_t>(rows) <= flat.size(), "weights blob is shorter than its header");
    l.activation = parse_activation(lj.at("activation").get<std::string>());
    l.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = flat[wo + static_cast<std::size_t>(r * cols + c)];
    l.bias.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) l.bias(r) = flat[bo + static_cast<std::size_t>(r)];
    p.layers.push_back(std::move(l));
  }
  return p;
}

inline json points_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

inline std::vector<Point2> points_from(const json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

inline json anchors_json(const BcAnchorSet& a) {
  return {{"epsilon", a.epsilon}, {"points", points_json(a.points)}, {"values", a.values}};
}

inline BcAnchorSet anchors_from(const json& j) {
  return {points_from(j.at("points")), j.at("values").get<std::vector<double>>(), j.at("epsilon").get<double>()};
}

inline json point_set_json(const PointSet& s) {
  return {{"role", s.role == PointRole::boundary ? "boundary" : "collocation"},
          {"points", points_json(s.points)},
          {"labels", s.labels}};
}

/// Writes `<stem>.json` and `<stem>.bin`. `extra` is merged into the header.
inline void save_predictor(const fs::path& stem, const Predictor& pred, const json& extra = json::object()) {
  const fs::path blob = fs::path(stem).replace_extension(".bin");
  json header = network_header(network_of(pred), blob.filename().string());
  if (const auto* e = std::get_if<ExactPredictor>(&pred)) {
    header["kind"] = "exact";
    header["anchors"] = anchors_json(e->anchors);
  } else {
    header["kind"] = "soft";
  }
  for (const auto& [k, v] : extra.items()) header[k] = v;
  const auto bytes = encode_f64le(flatten(network_of(pred)));
  write_bytes(blob, bytes.data(), bytes.size());
  write_json(fs::path(stem).replace_extension(".json"), header);
}

inline Predictor load_predictor(const fs::path& stem) {
  const fs::path header_path = fs::path(stem).replace_extension(".json");
  const json header = read_json(header_path);
  const std::string blob_text = read_text(header_path.parent_path() / header.at("blob").get<std::string>());
  const auto flat = decode_f64le({reinterpret_cast<const unsigned char*>(blob_text.data()), blob_text.size()});
  if (flat.size() != header.at("count").get<std::size_t>()) io_fail(header_path, "weights blob size mismatch");
  MlpParams net = unflatten(header, flat);
  if (header.value("kind", "soft") == "exact") return ExactPredictor{std::move(net), anchors_from(header.at("anchors"))};
  return SoftPredictor{std::move(net)};
}

// ---------------------------------------------------------------------------
// Training log

inline std::string train_log_csv(const TrainLog& log) {
  std::ostringstream os;
  os << "epoch,l_data,l_pde,l_total,lr,seconds\n" << std::setprecision(17);
  for (const auto& e : log.epochs)
    os << e.epoch << ',' << e.l_data << ',' << e.l_pde << ',' << e.l_total << ',' << e.lr << ',' << e.seconds << '\n';
  return os.str();
}

inline TrainLog parse_train_log_csv(const std::string& text) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    EpochRecord e;
    char comma;
    ls >> e.epoch >> comma >> e.l_data >> comma >> e.l_pde >> comma >> e.l_total >> comma >> e.lr >> comma >> e.seconds;
    if (!ls) throw Error(ErrorKind::io_failure, "malformed training log line: " + line);
    log.epochs.push_back(e);
  }
  return log;
}

// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::io_failure, "sha256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

}  // namespace pinnbc::io
