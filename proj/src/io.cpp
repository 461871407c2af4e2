#include "anomalykit/io.hpp"

#include "anomalykit/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace anomalykit {
namespace {

std::string field_name(int f, int chemicals) {
  return f < chemicals ? "u" + std::to_string(f + 1) : "v" + std::to_string(f - chemicals + 1);
}

template <class T>
T read(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("measurement file lacks '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("measurement file entry '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json measurements_to_json(const MeasurementSet& m, const std::string& hash) {
  Json meta;
  meta["kind"] = m.kind == MeasurementSet::Kind::kParabolic ? "parabolic" : "stationary";
  meta["grid"] = {{"nx", m.nx}, {"ny", m.ny}, {"bounds", {m.bounds.x0, m.bounds.x1, m.bounds.y0, m.bounds.y1}}};
  meta["chemicals"] = m.chemicals;
  meta["prey"] = m.prey;
  Json names = Json::array();
  for (int f = 0; f < m.field_count(); ++f) names.push_back(field_name(f, m.chemicals));
  meta["fields"] = names;
  meta["node_order"] = "boundary nodes counterclockwise from the lower-left corner";
  meta["config_hash"] = hash;
  Json j;
  j["format_version"] = kFormatVersion;
  j["config_hash"] = hash;
  j["meta"] = meta;
  j["times"] = m.times;
  j["traces"] = m.traces;
  j["snapshot"] = m.snapshot;
  j["neumann"] = m.neumann;
  return j;
}

MeasurementSet measurements_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("measurement file must hold a JSON object");
  if (read<int>(j, "format_version") != kFormatVersion) throw ConfigError("unsupported measurement format version");
  const Json& meta = j.at("meta");
  MeasurementSet m;
  const std::string kind = read<std::string>(meta, "kind");
  if (kind == "parabolic") {
    m.kind = MeasurementSet::Kind::kParabolic;
  } else if (kind == "stationary") {
    m.kind = MeasurementSet::Kind::kStationary;
  } else {
    throw ConfigError("unknown measurement kind '" + kind + "'");
  }
  const Json& grid = meta.at("grid");
  m.nx = read<int>(grid, "nx");
  m.ny = read<int>(grid, "ny");
  const auto b = read<std::vector<double>>(grid, "bounds");
  if (b.size() != 4) throw ConfigError("measurement grid bounds must have 4 entries");
  m.bounds = Rect{b[0], b[1], b[2], b[3]};
  m.chemicals = read<int>(meta, "chemicals");
  m.prey = read<int>(meta, "prey");
  m.times = read<std::vector<double>>(j, "times");
  m.traces = read<std::vector<std::vector<Field>>>(j, "traces");
  m.snapshot = read<std::vector<Field>>(j, "snapshot");
  m.neumann = read<std::vector<Field>>(j, "neumann");
  if (m.traces.size() != m.times.size()) throw ConfigError("measurement traces and times disagree in length");
  return m;
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measurement file " + path.string());
  try {
    return measurements_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("measurement file " + path.string() + ": " + e.what());
  }
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ArtifactWriter::write(const std::string& name, const std::string& text) {
  const std::filesystem::path path = dir_ / name;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw ConfigError("failed writing " + path.string());
  files_.push_back({name, static_cast<std::uintmax_t>(text.size())});
}

void ArtifactWriter::json(const std::string& name, Json body) {
  body["format_version"] = kFormatVersion;
  body["config_hash"] = hash_;
  write(name, body.dump(2) + "\n");
}

void ArtifactWriter::csv(const std::string& name, const std::string& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  os << "# format_version=" << kFormatVersion << " config_hash=" << hash_ << "\n" << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
  write(name, os.str());
}

void ArtifactWriter::field_csv(const std::string& name, const Grid& g, const State& s) {
  std::vector<std::vector<std::string>> rows;
  const int nc = static_cast<int>(s.u.size());
  const int total = nc + static_cast<int>(s.v.size());
  rows.reserve(g.size() * static_cast<std::size_t>(total));
  for (int f = 0; f < total; ++f) {
    const Field& w = f < nc ? s.u[static_cast<std::size_t>(f)] : s.v[static_cast<std::size_t>(f - nc)];
    const std::string fname = field_name(f, nc);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 p = g.node(k);
      rows.push_back({format_double(p.x()), format_double(p.y()), fname, format_double(w[k])});
    }
  }
  csv(name, "x,y,field,value", rows);
}

}  // namespace anomalykit
