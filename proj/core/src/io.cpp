#include "vlp/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "vlp/error.hpp"

namespace vlp {

namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& section) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ParseError("unknown key '" + section + key + "'");
  }
}

double get_number(const json& j, const char* key, double fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ParseError("key '" + section + key + "' must be a number");
  return j[key].get<double>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t fallback,
                      const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
    throw ParseError("key '" + section + key + "' must be an integer");
  return j[key].get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, bool fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ParseError("key '" + section + key + "' must be a boolean");
  return j[key].get<bool>();
}

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string method_name(EstimationMethod m) {
  return m == EstimationMethod::Linear ? "linear" : "nonlinear";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<Luminaire> luminaire_grid(const RoomScenario& scenario, int per_axis, double spacing,
                                      double z, double lambertian_order, double power) {
  if (per_axis < 1 || !(spacing > 0)) throw InvalidArgument("bad luminaire grid parameters");
  const double span = spacing * (per_axis - 1);
  const double x0 = (scenario.length - span) / 2;
  const double y0 = (scenario.width - span) / 2;
  std::vector<Luminaire> lums;
  int id = 1;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      lums.push_back({id++, {x0 + spacing * i, y0 + spacing * j, z},
                      {0, 0, -1}, lambertian_order, power});
  return lums;
}

ScenarioBundle default_bundle() {
  ScenarioBundle b;
  b.scenario.length = 8.0;
  b.scenario.width = 8.0;
  b.scenario.height = 3.5;
  b.scenario.rho_wall = 0.66;
  b.scenario.rho_ceiling = 0.35;
  b.scenario.rho_floor = 0.60;
  b.scenario.luminaires = luminaire_grid(b.scenario, 4, 2.0, 3.3, 1.0, 4.0);
  b.scenario.receiver.area = 1e-4;
  b.scenario.receiver.fov_half_angle = 70.0 * kDeg;
  b.scenario.receiver.filter_gain = 1.0;
  b.scenario.receiver.concentrator_gain = 2.5481;
  b.scenario.receiver_plane_height = 1.2;
  return b;
}

ScenarioBundle dense_bundle() {
  ScenarioBundle b = default_bundle();
  b.scenario.luminaires = luminaire_grid(b.scenario, 5, 1.5, 3.3, 1.0, 4.0);
  return b;
}

ScenarioBundle parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j, {"room", "luminaires", "receiver", "channel", "noise"}, "");

  ScenarioBundle b = default_bundle();
  RoomScenario& s = b.scenario;

  if (j.contains("room")) {
    const json& r = j["room"];
    reject_unknown_keys(r, {"length", "width", "height", "rho_wall", "rho_ceiling", "rho_floor"},
                        "room.");
    s.length = get_number(r, "length", s.length, "room.");
    s.width = get_number(r, "width", s.width, "room.");
    s.height = get_number(r, "height", s.height, "room.");
    s.rho_wall = get_number(r, "rho_wall", s.rho_wall, "room.");
    s.rho_ceiling = get_number(r, "rho_ceiling", s.rho_ceiling, "room.");
    s.rho_floor = get_number(r, "rho_floor", s.rho_floor, "room.");
  }
  if (j.contains("luminaires")) {
    const json& arr = j["luminaires"];
    if (!arr.is_array()) throw ParseError("key 'luminaires' must be an array");
    s.luminaires.clear();
    int index = 0;
    for (const json& l : arr) {
      ++index;
      const std::string section = "luminaires[" + std::to_string(index - 1) + "].";
      reject_unknown_keys(l, {"id", "x", "y", "z", "m", "power"}, section);
      if (!l.contains("x") || !l.contains("y"))
        throw ParseError("key '" + section + "x/y' is required");
      Luminaire lum;
      lum.id = static_cast<int>(get_u64(l, "id", static_cast<std::uint64_t>(index), section));
      lum.position = {get_number(l, "x", 0, section), get_number(l, "y", 0, section),
                      get_number(l, "z", 3.3, section)};
      lum.lambertian_order = get_number(l, "m", 1.0, section);
      lum.transmit_power = get_number(l, "power", 4.0, section);
      s.luminaires.push_back(lum);
    }
  }
  if (j.contains("receiver")) {
    const json& r = j["receiver"];
    reject_unknown_keys(r, {"area", "fov_deg", "ts", "g", "height"}, "receiver.");
    s.receiver.area = get_number(r, "area", s.receiver.area, "receiver.");
    s.receiver.fov_half_angle =
        get_number(r, "fov_deg", s.receiver.fov_half_angle / kDeg, "receiver.") * kDeg;
    s.receiver.filter_gain = get_number(r, "ts", s.receiver.filter_gain, "receiver.");
    s.receiver.concentrator_gain = get_number(r, "g", s.receiver.concentrator_gain, "receiver.");
    s.receiver_plane_height = get_number(r, "height", s.receiver_plane_height, "receiver.");
  }
  if (j.contains("channel")) {
    const json& c = j["channel"];
    reject_unknown_keys(
        c, {"patch_area", "rays_per_patch", "max_order", "time_bin_ns", "max_delay_ns", "seed"},
        "channel.");
    b.channel.patch_area = get_number(c, "patch_area", b.channel.patch_area, "channel.");
    b.channel.rays_per_patch = static_cast<int>(get_u64(
        c, "rays_per_patch", static_cast<std::uint64_t>(b.channel.rays_per_patch), "channel."));
    b.channel.max_order = static_cast<int>(
        get_u64(c, "max_order", static_cast<std::uint64_t>(b.channel.max_order), "channel."));
    b.channel.time_bin = get_number(c, "time_bin_ns", b.channel.time_bin * 1e9, "channel.") * 1e-9;
    b.channel.max_delay =
        get_number(c, "max_delay_ns", b.channel.max_delay * 1e9, "channel.") * 1e-9;
    b.seed = get_u64(c, "seed", b.seed, "channel.");
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    reject_unknown_keys(n, {"enabled", "sigma", "relative"}, "noise.");
    b.noise.enabled = get_bool(n, "enabled", b.noise.enabled, "noise.");
    b.noise.sigma = get_number(n, "sigma", b.noise.sigma, "noise.");
    b.noise.relative = get_bool(n, "relative", b.noise.relative, "noise.");
    if (b.noise.sigma < 0) throw ParseError("key 'noise.sigma' must be >= 0");
  }

  try {
    s.validate();
    b.channel.validate(s);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return b;
}

ScenarioBundle parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::string serialize_scenario(const ScenarioBundle& b) {
  const RoomScenario& s = b.scenario;
  json j;
  j["room"] = {{"length", s.length},      {"width", s.width},
               {"height", s.height},      {"rho_wall", s.rho_wall},
               {"rho_ceiling", s.rho_ceiling}, {"rho_floor", s.rho_floor}};
  json lums = json::array();
  for (const auto& l : s.luminaires) {
    lums.push_back({{"id", l.id},
                    {"x", l.position.x},
                    {"y", l.position.y},
                    {"z", l.position.z},
                    {"m", l.lambertian_order},
                    {"power", l.transmit_power}});
  }
  j["luminaires"] = std::move(lums);
  j["receiver"] = {{"area", s.receiver.area},
                   {"fov_deg", s.receiver.fov_half_angle / kDeg},
                   {"ts", s.receiver.filter_gain},
                   {"g", s.receiver.concentrator_gain},
                   {"height", s.receiver_plane_height}};
  j["channel"] = {{"patch_area", b.channel.patch_area},
                  {"rays_per_patch", b.channel.rays_per_patch},
                  {"max_order", b.channel.max_order},
                  {"time_bin_ns", b.channel.time_bin * 1e9},
                  {"max_delay_ns", b.channel.max_delay * 1e9},
                  {"seed", b.seed}};
  j["noise"] = {{"enabled", b.noise.enabled},
                {"sigma", b.noise.sigma},
                {"relative", b.noise.relative}};
  return j.dump(2);
}

void write_error_map(const ErrorMap& map, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,y,x_hat,y_hat,error_m,method,anchors_used,fallback,failed\n";
  for (const auto& e : map.entries) {
    out << g17(e.true_position.x) << ',' << g17(e.true_position.y) << ','
        << g17(e.estimate.x) << ',' << g17(e.estimate.y) << ',' << g17(e.error) << ','
        << method_name(e.estimate.method) << ',' << e.estimate.anchors_used << ','
        << (e.estimate.used_centroid_fallback ? 1 : 0) << ',' << (e.failed ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ErrorMap read_error_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  ErrorMap map;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty error map file '" + path.string() + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw ParseError("malformed error map row: " + line);
    ErrorMapEntry e;
    e.true_position = {std::strtod(fields[0].c_str(), nullptr),
                       std::strtod(fields[1].c_str(), nullptr), 0};
    e.estimate.x = std::strtod(fields[2].c_str(), nullptr);
    e.estimate.y = std::strtod(fields[3].c_str(), nullptr);
    e.error = std::strtod(fields[4].c_str(), nullptr);
    e.estimate.method =
        fields[5] == "nonlinear" ? EstimationMethod::Nonlinear : EstimationMethod::Linear;
    e.estimate.anchors_used = std::atoi(fields[6].c_str());
    e.estimate.used_centroid_fallback = fields[7] == "1";
    e.failed = fields[8] == "1";
    map.entries.push_back(e);
  }
  return map;
}

void write_stats(const ErrorStats& stats, const std::filesystem::path& path) {
  json j;
  j["inner_rms"] = stats.rms_inner ? json(*stats.rms_inner) : json(nullptr);
  j["outer_rms"] = stats.rms_outer ? json(*stats.rms_outer) : json(nullptr);
  j["entire_rms"] = stats.rms_entire ? json(*stats.rms_entire) : json(nullptr);
  j["n_inner"] = stats.n_inner;
  j["n_outer"] = stats.n_outer;
  j["failures"] = stats.failures;
  j["histogram"] = {{"bin_width", stats.histogram_bin_width}, {"counts", stats.histogram}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_suite_rows(const std::vector<SuiteRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "label,outer_rms,inner_rms,entire_rms,failures\n";
  const auto cell = [](const std::optional<double>& v) {
    return v ? g17(*v) : std::string("NA");
  };
  for (const auto& r : rows) {
    out << r.label << ',' << cell(r.rms_outer) << ',' << cell(r.rms_inner) << ','
        << cell(r.rms_entire) << ',' << r.failures << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_impulse_response(const ImpulseResponse& ir, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "time_ns";
  for (std::size_t k = 0; k < ir.orders.size(); ++k) out << ",order" << k;
  out << '\n';
  const std::size_t nbins = ir.orders.empty() ? 0 : ir.orders[0].size();
  for (std::size_t bin = 0; bin < nbins; ++bin) {
    out << g17((static_cast<double>(bin) + 0.5) * ir.time_bin * 1e9);
    for (const auto& order : ir.orders) out << ',' << g17(order[bin]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_power_report(const PowerReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::size_t orders = 0;
  for (const auto& row : report.rows) orders = std::max(orders, row.per_order.size());
  out << "luminaire_id";
  for (std::size_t k = 0; k < orders; ++k) out << ",order" << k;
  out << ",total\n";
  for (const auto& row : report.rows) {
    out << row.luminaire_id;
    for (std::size_t k = 0; k < orders; ++k)
      out << ',' << g17(k < row.per_order.size() ? row.per_order[k] : 0.0);
    out << ',' << g17(row.total) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PowerCache::PowerCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::filesystem::path PowerCache::resolve_dir() {
  if (const char* env = std::getenv("VLP_CACHE_DIR")) return env;
  return {};
}

std::string PowerCache::key_for(const ScenarioBundle& bundle, int luminaire_id,
                                const Vec3& receiver_position, std::uint64_t seed) {
  std::string canon = serialize_scenario(bundle);
  canon += "|lum=" + std::to_string(luminaire_id);
  canon += "|rx=" + g17(receiver_position.x) + "," + g17(receiver_position.y) + "," +
           g17(receiver_position.z);
  canon += "|seed=" + std::to_string(seed);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(canon));
  return buf;
}

std::vector<double> PowerCache::get_or_compute(
    const std::string& key, const std::function<std::vector<double>()>& compute) {
  if (!enabled()) {
    ++computes_;
    return compute();
  }
  const std::filesystem::path file = dir_ / (key + ".json");
  if (std::filesystem::exists(file)) {
    try {
      std::ifstream in(file);
      json j = json::parse(in);
      return j.at("per_order").get<std::vector<double>>();
    } catch (const std::exception& e) {
      std::cerr << "vlp: corrupt cache entry " << file << " (" << e.what()
                << "), recomputing\n";
    }
  }
  ++computes_;
  std::vector<double> value = compute();
  json j;
  j["per_order"] = value;
  static int counter = 0;
  const std::filesystem::path tmp =
      dir_ / (key + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
  {
    std::ofstream out(tmp);
    out << j.dump();
    if (!out) throw IoError("cannot write cache entry '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, file);  // atomic replace, last writer wins
  return value;
}

PowerReport cached_power_report(const ScenarioBundle& bundle, const Vec3& receiver_position,
                                std::uint64_t seed, PowerCache& cache) {
  const RoomScenario& s = bundle.scenario;
  std::vector<SurfacePatch> patches;
  bool have_patches = false;

  PowerReport report;
  for (const auto& lum : s.luminaires) {
    const std::string key = PowerCache::key_for(bundle, lum.id, receiver_position, seed);
    PowerReportRow row;
    row.luminaire_id = lum.id;
    row.per_order = cache.get_or_compute(key, [&] {
      if (bundle.channel.max_order >= 1 && !have_patches) {
        patches = partition_surfaces(s, bundle.channel.patch_area);
        have_patches = true;
      }
      return luminaire_order_totals(s, lum, patches, receiver_position, bundle.channel, seed);
    });
    for (double v : row.per_order) row.total += v;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace vlp
