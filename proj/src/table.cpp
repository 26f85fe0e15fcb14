#include "advtrade/table.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include "advtrade/errors.hpp"

namespace advtrade {
namespace {

using nlohmann::json;

constexpr const char* kTheoryColumns[] = {"axis_value", "sr_theory", "ar_theory"};
constexpr const char* kEmpiricalColumns[] = {"sr_empirical", "ar_empirical", "n_seeds",
                                             "stderr_sr", "stderr_ar"};

std::string column_line(bool empirical) {
  std::string out;
  for (const char* c : kTheoryColumns) {
    if (!out.empty()) out += ',';
    out += c;
  }
  if (empirical) {
    for (const char* c : kEmpiricalColumns) {
      out += ',';
      out += c;
    }
  }
  return out;
}

double parse_double(const std::string& field) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return INFINITY;
  if (field == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw InvalidArgument("bad number in table: '" + field + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

json header_json(const SweepTable& t) {
  json h;
  h["schema_version"] = t.schema_version;
  h["command"] = t.command;
  h["axis_name"] = t.axis_name;
  h["config"] = config_to_json(t.config);
  json prov;
  prov["master_seed"] = t.provenance.master_seed;
  prov["timestamp"] = t.provenance.timestamp ? json(*t.provenance.timestamp) : json(nullptr);
  prov["tool_version"] = t.provenance.tool_version;
  h["provenance"] = prov;
  h["empirical"] = t.empirical();
  h["extra"] = t.extra;
  return h;
}

SweepTable table_from_header(const json& h) {
  SweepTable t;
  t.schema_version = h.at("schema_version").get<std::string>();
  if (t.schema_version != kSchemaVersion) {
    throw InvalidArgument("unsupported schema_version " + t.schema_version);
  }
  t.command = h.at("command").get<std::string>();
  t.axis_name = h.at("axis_name").get<std::string>();
  t.config = config_from_json(h.at("config"));
  const json& prov = h.at("provenance");
  t.provenance.master_seed = prov.at("master_seed").get<std::uint64_t>();
  if (!prov.at("timestamp").is_null()) t.provenance.timestamp = prov.at("timestamp").get<std::string>();
  t.provenance.tool_version = prov.at("tool_version").get<std::string>();
  t.extra = h.value("extra", json::object());
  return t;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool SweepTable::empirical() const { return !rows.empty() && rows.front().sr_empirical.has_value(); }

void SweepTable::check() const {
  const bool emp = empirical();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    const bool all = r.sr_empirical && r.ar_empirical && r.n_seeds && r.stderr_sr && r.stderr_ar;
    const bool none =
        !r.sr_empirical && !r.ar_empirical && !r.n_seeds && !r.stderr_sr && !r.stderr_ar;
    if (emp ? !all : !none) throw InvalidArgument("empirical columns must be all or nothing");
    if (i > 0 && !(rows[i - 1].axis_value < r.axis_value)) {
      throw InvalidArgument("table rows must be strictly increasing in " + axis_name);
    }
  }
}

std::optional<std::string> reproducible_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (env == nullptr || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const long long secs = std::strtoll(env, &end, 10);
  if (*end != '\0' || secs < 0) return std::nullopt;
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

nlohmann::json config_to_json(const AsymptoticConfig& cfg) {
  return json{{"delta", cfg.delta},
              {"sigma", cfg.sigma},
              {"v_norm", cfg.v_norm},
              {"eps_train", cfg.eps_train},
              {"eps_test", cfg.eps_test}};
}

AsymptoticConfig config_from_json(const nlohmann::json& j) {
  AsymptoticConfig cfg;
  cfg.delta = j.at("delta").get<double>();
  cfg.sigma = j.at("sigma").get<double>();
  cfg.v_norm = j.at("v_norm").get<double>();
  cfg.eps_train = j.at("eps_train").get<double>();
  cfg.eps_test = j.at("eps_test").get<double>();
  return cfg;
}

std::string to_csv(const SweepTable& table) {
  table.check();
  const bool emp = table.empirical();
  std::string out = "# " + header_json(table).dump() + "\n";
  out += column_line(emp) + "\n";
  for (const SweepRow& r : table.rows) {
    out += format_double(r.axis_value) + ',' + format_double(r.sr_theory) + ',' +
           format_double(r.ar_theory);
    if (emp) {
      out += ',' + format_double(*r.sr_empirical) + ',' + format_double(*r.ar_empirical) + ',' +
             std::to_string(*r.n_seeds) + ',' + format_double(*r.stderr_sr) + ',' +
             format_double(*r.stderr_ar);
    }
    out += '\n';
  }
  return out;
}

std::string to_csv(const std::vector<SweepTable>& tables) {
  std::string out;
  for (const auto& t : tables) out += to_csv(t);
  return out;
}

std::vector<SweepTable> parse_csv(std::string_view text) {
  std::vector<SweepTable> tables;
  std::istringstream in{std::string(text)};
  std::string line;
  bool expect_columns = false;
  bool emp = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      json h;
      try {
        h = json::parse(line.substr(2));
      } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad table header: ") + e.what());
      }
      tables.push_back(table_from_header(h));
      emp = h.value("empirical", false);
      expect_columns = true;
      continue;
    }
    if (tables.empty()) throw InvalidArgument("table data before any header");
    if (expect_columns) {
      if (line != column_line(emp)) throw InvalidArgument("unexpected column line: " + line);
      expect_columns = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != (emp ? 8u : 3u)) throw InvalidArgument("wrong field count: " + line);
    SweepRow r;
    r.axis_value = parse_double(f[0]);
    r.sr_theory = parse_double(f[1]);
    r.ar_theory = parse_double(f[2]);
    if (emp) {
      r.sr_empirical = parse_double(f[3]);
      r.ar_empirical = parse_double(f[4]);
      r.n_seeds = std::stoi(f[5]);
      r.stderr_sr = parse_double(f[6]);
      r.stderr_ar = parse_double(f[7]);
    }
    tables.back().rows.push_back(r);
  }
  for (const auto& t : tables) t.check();
  return tables;
}

nlohmann::json to_json(const SweepTable& table) {
  table.check();
  json j = header_json(table);
  json rows = json::array();
  for (const SweepRow& r : table.rows) {
    json row;
    row["axis_value"] = r.axis_value;
    row["sr_theory"] = r.sr_theory;
    row["ar_theory"] = r.ar_theory;
    if (r.sr_empirical) {
      row["sr_empirical"] = *r.sr_empirical;
      row["ar_empirical"] = *r.ar_empirical;
      row["n_seeds"] = *r.n_seeds;
      row["stderr_sr"] = *r.stderr_sr;
      row["stderr_ar"] = *r.stderr_ar;
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

SweepTable table_from_json(const nlohmann::json& doc) {
  SweepTable t = table_from_header(doc);
  for (const json& row : doc.at("rows")) {
    SweepRow r;
    r.axis_value = row.at("axis_value").get<double>();
    r.sr_theory = row.at("sr_theory").get<double>();
    r.ar_theory = row.at("ar_theory").get<double>();
    if (row.contains("sr_empirical")) {
      r.sr_empirical = row.at("sr_empirical").get<double>();
      r.ar_empirical = row.at("ar_empirical").get<double>();
      r.n_seeds = row.at("n_seeds").get<int>();
      r.stderr_sr = row.at("stderr_sr").get<double>();
      r.stderr_ar = row.at("stderr_ar").get<double>();
    }
    t.rows.push_back(r);
  }
  t.check();
  return t;
}

std::string to_json_document(const std::vector<SweepTable>& tables) {
  json doc;
  doc["tables"] = json::array();
  for (const auto& t : tables) doc["tables"].push_back(to_json(t));
  return doc.dump(2) + "\n";
}

std::vector<SweepTable> parse_json_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad JSON document: ") + e.what());
  }
  std::vector<SweepTable> out;
  for (const json& t : doc.at("tables")) out.push_back(table_from_json(t));
  return out;
}

}  // namespace advtrade
